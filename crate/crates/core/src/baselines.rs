//! Multi-output linear baselines: ordinary least squares, ridge, lasso and
//! elastic net. Each output is fitted independently.
//!
//! Lasso and elastic net minimize, per output,
//! `(1/2n)·||y - b0 - X·b||² + λ·(α·||b||₁ + (1-α)/2·||b||²)` by cyclic
//! coordinate descent on standardized inputs; coefficients are mapped back
//! to the caller's input scale.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{self, MetricReport};
use crate::normalize::NormalizationSpec;
use crate::schema::{N_INPUTS, N_OUTPUTS};

/// Ridge penalty used when the least-squares system is rank deficient.
pub const FALLBACK_RIDGE: f64 = 1e-8;
pub const CD_TOLERANCE: f64 = 1e-7;
pub const CD_MAX_SWEEPS: usize = 10_000;
pub const CV_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    Ols,
    Ridge,
    Lasso,
    ElasticNet,
}

impl LinearKind {
    pub fn label(self) -> &'static str {
        match self {
            LinearKind::Ols => "LinearReg",
            LinearKind::Ridge => "Ridge",
            LinearKind::Lasso => "Lasso",
            LinearKind::ElasticNet => "ElasticNet",
        }
    }
}

impl std::str::FromStr for LinearKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "linear" | "ols" | "linearreg" => Ok(LinearKind::Ols),
            "ridge" => Ok(LinearKind::Ridge),
            "lasso" => Ok(LinearKind::Lasso),
            "elasticnet" | "enet" => Ok(LinearKind::ElasticNet),
            _ => Err(Error::InvalidArgument(format!(
                "unknown baseline `{s}` (expected linear, ridge, lasso or elastic-net)"
            ))),
        }
    }
}

/// How a [`LinearModel`] was regularized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub kind: LinearKind,
    pub lambda: f64,
    /// L1 share of the penalty; 1 for lasso, unused for OLS and ridge.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Per output, nonzero `(input, coefficient)` pairs by input index.
    coefficients: [Vec<(usize, f64)>; N_OUTPUTS],
    intercept: [f64; N_OUTPUTS],
    regularization: Regularization,
    converged: bool,
}

impl LinearModel {
    fn from_dense(
        dense: &[[f64; N_INPUTS]; N_OUTPUTS],
        intercept: [f64; N_OUTPUTS],
        regularization: Regularization,
        converged: bool,
    ) -> Self {
        let coefficients = std::array::from_fn(|k| {
            dense[k]
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, c)| (i, *c))
                .collect()
        });
        LinearModel {
            coefficients,
            intercept,
            regularization,
            converged,
        }
    }

    pub fn coefficient(&self, output: usize, input: usize) -> f64 {
        self.coefficients[output]
            .iter()
            .find(|(i, _)| *i == input)
            .map_or(0.0, |(_, c)| *c)
    }

    pub fn coefficients(&self, output: usize) -> &[(usize, f64)] {
        &self.coefficients[output]
    }

    pub fn intercept(&self) -> &[f64; N_OUTPUTS] {
        &self.intercept
    }

    pub fn regularization(&self) -> Regularization {
        self.regularization
    }

    /// False when coordinate descent hit the sweep limit.
    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn n_nonzero(&self) -> usize {
        self.coefficients.iter().map(Vec::len).sum()
    }

    /// Nonzero coefficients plus the four intercepts.
    pub fn links(&self) -> usize {
        self.n_nonzero() + N_OUTPUTS
    }

    pub fn predict(&self, x: &[f64; N_INPUTS]) -> [f64; N_OUTPUTS] {
        std::array::from_fn(|k| {
            self.intercept[k] + self.coefficients[k].iter().map(|&(i, c)| c * x[i]).sum::<f64>()
        })
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Vec<[f64; N_OUTPUTS]> {
        data.iter().map(|p| self.predict(&p.inputs)).collect()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "regularization strength must be finite and >= 0, got {lambda}"
        )));
    }
    Ok(())
}

/// Column means, centered design and centered targets.
struct Centered {
    x_mean: [f64; N_INPUTS],
    y_mean: [f64; N_OUTPUTS],
    xc: DMatrix<f64>,
    yc: DMatrix<f64>,
}

fn center(train: &Dataset) -> Result<Centered> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("cannot fit on an empty dataset".into()));
    }
    let n = train.len();
    let x_mean = train.input_means();
    let y_mean = train.output_means();
    let xc = DMatrix::from_fn(n, N_INPUTS, |r, i| train.patterns()[r].inputs[i] - x_mean[i]);
    let yc = DMatrix::from_fn(n, N_OUTPUTS, |r, k| train.patterns()[r].outputs[k] - y_mean[k]);
    Ok(Centered {
        x_mean,
        y_mean,
        xc,
        yc,
    })
}

fn assemble(
    c: &Centered,
    beta: &DMatrix<f64>,
    regularization: Regularization,
    converged: bool,
) -> LinearModel {
    let dense: [[f64; N_INPUTS]; N_OUTPUTS] =
        std::array::from_fn(|k| std::array::from_fn(|i| beta[(i, k)]));
    let intercept = std::array::from_fn(|k| {
        c.y_mean[k] - (0..N_INPUTS).map(|i| dense[k][i] * c.x_mean[i]).sum::<f64>()
    });
    LinearModel::from_dense(&dense, intercept, regularization, converged)
}

fn solve_ridge(c: &Centered, lambda: f64) -> Option<DMatrix<f64>> {
    let mut gram = c.xc.transpose() * &c.xc;
    for i in 0..N_INPUTS {
        gram[(i, i)] += lambda;
    }
    let rhs = c.xc.transpose() * &c.yc;
    let beta = gram.cholesky()?.solve(&rhs);
    beta.iter().all(|v| v.is_finite()).then_some(beta)
}

fn rank_deficient(c: &Centered) -> bool {
    let gram = c.xc.transpose() * &c.xc;
    let eig = gram.symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(0.0, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    !(max > 0.0) || min <= 1e-12 * max
}

/// Ordinary least squares via the normal equations on centered data,
/// falling back to a tiny ridge penalty if the design is rank deficient.
pub fn fit_linear(train: &Dataset) -> Result<LinearModel> {
    fit_linear_with(train, true)
}

/// Ordinary least squares; with `allow_fallback = false` a rank-deficient
/// design is an error.
pub fn fit_linear_with(train: &Dataset, allow_fallback: bool) -> Result<LinearModel> {
    let c = center(train)?;
    let reg = Regularization {
        kind: LinearKind::Ols,
        lambda: 0.0,
        ratio: 0.0,
    };
    let lambda = if rank_deficient(&c) {
        if !allow_fallback {
            return Err(Error::RankDeficient(format!(
                "design matrix of {} patterns x {N_INPUTS} inputs is rank deficient",
                train.len()
            )));
        }
        log::warn!("rank-deficient design; falling back to ridge with lambda {FALLBACK_RIDGE}");
        FALLBACK_RIDGE
    } else {
        0.0
    };
    let beta = solve_ridge(&c, lambda)
        .ok_or_else(|| Error::RankDeficient("normal equations could not be solved".into()))?;
    Ok(assemble(&c, &beta, Regularization { lambda, ..reg }, true))
}

/// Ridge regression: `(XcᵀXc + λI)·b = Xcᵀyc` per output.
pub fn fit_ridge(train: &Dataset, lambda: f64) -> Result<LinearModel> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        let ols = fit_linear(train)?;
        return Ok(LinearModel {
            regularization: Regularization {
                kind: LinearKind::Ridge,
                lambda: 0.0,
                ratio: 0.0,
            },
            ..ols
        });
    }
    let c = center(train)?;
    let beta = solve_ridge(&c, lambda)
        .ok_or_else(|| Error::Numeric {
            node: 0,
            message: "ridge system could not be solved".into(),
        })?;
    Ok(assemble(
        &c,
        &beta,
        Regularization {
            kind: LinearKind::Ridge,
            lambda,
            ratio: 0.0,
        },
        true,
    ))
}

pub fn fit_lasso(train: &Dataset, lambda: f64) -> Result<LinearModel> {
    let mut m = fit_elastic_net(train, lambda, 1.0)?;
    m.regularization.kind = LinearKind::Lasso;
    Ok(m)
}

/// Standardized design: centered columns scaled to unit (population)
/// variance. Constant columns keep scale 0 and are never selected.
struct Standardized {
    c: Centered,
    scale: [f64; N_INPUTS],
    /// Column-major standardized inputs.
    cols: Vec<Vec<f64>>,
}

fn standardize(train: &Dataset) -> Result<Standardized> {
    let c = center(train)?;
    let n = train.len() as f64;
    let mut scale = [0.0; N_INPUTS];
    let mut cols = Vec::with_capacity(N_INPUTS);
    for (i, s) in scale.iter_mut().enumerate() {
        let col = c.xc.column(i);
        let sd = (col.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        *s = sd;
        cols.push(if sd > 0.0 {
            col.iter().map(|v| v / sd).collect()
        } else {
            vec![0.0; col.len()]
        });
    }
    Ok(Standardized { c, scale, cols })
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Coordinate descent for one output on standardized inputs. Returns the
/// standardized coefficients and whether the tolerance was met.
fn coordinate_descent(s: &Standardized, y: &[f64], lambda: f64, ratio: f64) -> (Vec<f64>, bool) {
    let n = y.len() as f64;
    let mut b = vec![0.0; N_INPUTS];
    let mut r = y.to_vec();
    let l1 = lambda * ratio;
    let denom = 1.0 + lambda * (1.0 - ratio);
    for _ in 0..CD_MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..N_INPUTS {
            if s.scale[j] == 0.0 {
                continue;
            }
            let col = &s.cols[j];
            let rho = col.iter().zip(&r).map(|(x, r)| x * r).sum::<f64>() / n + b[j];
            let new = soft_threshold(rho, l1) / denom;
            let delta = new - b[j];
            if delta != 0.0 {
                for (ri, x) in r.iter_mut().zip(col) {
                    *ri -= delta * x;
                }
                b[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < CD_TOLERANCE {
            break;
        }
    }
    match polish(s, y, &b, l1, lambda * (1.0 - ratio)) {
        Some(exact) => (exact, true),
        None => (b, false),
    }
}

/// Solves the problem exactly on the current active set with the current
/// signs, and keeps the result only if it satisfies the optimality
/// conditions. Slow coordinate descent on correlated columns stalls well
/// short of the optimum; this removes the remaining error.
fn polish(s: &Standardized, y: &[f64], b: &[f64], l1: f64, l2: f64) -> Option<Vec<f64>> {
    let n = y.len() as f64;
    let active: Vec<usize> = (0..N_INPUTS).filter(|&j| b[j] != 0.0).collect();
    let m = active.len();
    let mut exact = vec![0.0; N_INPUTS];
    if m > 0 {
        let gram = DMatrix::from_fn(m, m, |a, c| {
            let dot: f64 = s.cols[active[a]].iter().zip(&s.cols[active[c]]).map(|(u, v)| u * v).sum();
            dot / n + if a == c { l2 } else { 0.0 }
        });
        let rhs = DMatrix::from_fn(m, 1, |a, _| {
            let j = active[a];
            s.cols[j].iter().zip(y).map(|(u, v)| u * v).sum::<f64>() / n - l1 * b[j].signum()
        });
        let sol = gram.cholesky()?.solve(&rhs);
        for (a, &j) in active.iter().enumerate() {
            let v = sol[(a, 0)];
            if !v.is_finite() || (l1 > 0.0 && v.signum() != b[j].signum()) {
                return None;
            }
            exact[j] = v;
        }
    }
    let mut r = y.to_vec();
    for &j in &active {
        for (ri, x) in r.iter_mut().zip(&s.cols[j]) {
            *ri -= exact[j] * x;
        }
    }
    let slack = 1e-9 * l1.max(1e-6);
    for j in 0..N_INPUTS {
        if s.scale[j] == 0.0 || exact[j] != 0.0 {
            continue;
        }
        let g = s.cols[j].iter().zip(&r).map(|(x, r)| x * r).sum::<f64>() / n;
        if g.abs() > l1 + slack {
            return None;
        }
    }
    Some(exact)
}

/// Elastic net with L1 share `ratio` (1 = lasso, 0 = ridge on standardized
/// inputs).
pub fn fit_elastic_net(train: &Dataset, lambda: f64, ratio: f64) -> Result<LinearModel> {
    check_lambda(lambda)?;
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::InvalidArgument(format!(
            "elastic-net ratio must lie in [0, 1], got {ratio}"
        )));
    }
    let s = standardize(train)?;
    let mut beta = DMatrix::zeros(N_INPUTS, N_OUTPUTS);
    let mut converged = true;
    for k in 0..N_OUTPUTS {
        let y: Vec<f64> = s.c.yc.column(k).iter().copied().collect();
        let (b, ok) = coordinate_descent(&s, &y, lambda, ratio);
        if !ok {
            log::warn!("coordinate descent for output {k} stopped after {CD_MAX_SWEEPS} sweeps");
        }
        converged &= ok;
        for i in 0..N_INPUTS {
            if s.scale[i] > 0.0 {
                beta[(i, k)] = b[i] / s.scale[i];
            }
        }
    }
    Ok(assemble(
        &s.c,
        &beta,
        Regularization {
            kind: LinearKind::ElasticNet,
            lambda,
            ratio,
        },
        converged,
    ))
}

/// Smallest λ at which every coefficient of every output is zero for the
/// given L1 share: `max_j |x_jᵀ y| / (n·ratio)` on standardized data.
pub fn critical_lambda(train: &Dataset, ratio: f64) -> Result<f64> {
    let s = standardize(train)?;
    let n = train.len() as f64;
    let mut max: f64 = 0.0;
    for k in 0..N_OUTPUTS {
        let y = s.c.yc.column(k);
        for col in &s.cols {
            let dot: f64 = col.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            max = max.max(dot.abs());
        }
    }
    Ok(max / (n * ratio))
}

/// Fits a baseline of the given kind. `ratio` is used by elastic net only.
pub fn fit_baseline(kind: LinearKind, train: &Dataset, lambda: f64, ratio: f64) -> Result<LinearModel> {
    match kind {
        LinearKind::Ols => fit_linear(train),
        LinearKind::Ridge => fit_ridge(train, lambda),
        LinearKind::Lasso => fit_lasso(train, lambda),
        LinearKind::ElasticNet => fit_elastic_net(train, lambda, ratio),
    }
}

/// Log-spaced grid from 1e-6 to 1, three points per decade.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=18).map(|e| 10f64.powf(-6.0 + e as f64 / 3.0)).collect()
}

/// Picks λ from `grid` by 5-fold cross-validated global MSE. Folds are a
/// seeded shuffle; ties go to the larger λ.
pub fn select_lambda(
    train: &Dataset,
    kind: LinearKind,
    grid: &[f64],
    ratio: f64,
    seed: u64,
) -> Result<f64> {
    let mut grid: Vec<f64> = grid.to_vec();
    if grid.is_empty() {
        return Err(Error::InvalidArgument("lambda grid is empty".into()));
    }
    for &l in &grid {
        check_lambda(l)?;
    }
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    if train.len() < CV_FOLDS {
        return Err(Error::InvalidArgument(format!(
            "cross-validation needs at least {CV_FOLDS} patterns, got {}",
            train.len()
        )));
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let folds: Vec<(Dataset, Dataset)> = (0..CV_FOLDS)
        .map(|f| {
            let (held, kept): (Vec<_>, Vec<_>) =
                order.iter().copied().enumerate().partition(|(pos, _)| pos % CV_FOLDS == f);
            let pick = |v: Vec<(usize, usize)>| {
                let mut idx: Vec<usize> = v.into_iter().map(|(_, i)| i).collect();
                idx.sort_unstable();
                train.select(&idx)
            };
            (pick(kept), pick(held))
        })
        .collect();

    let mut best = (f64::INFINITY, grid[0]);
    for &lambda in &grid {
        let mut preds = Vec::with_capacity(train.len());
        let mut targets = Vec::with_capacity(train.len());
        for (fit_part, held) in &folds {
            let model = fit_baseline(kind, fit_part, lambda, ratio)?;
            preds.extend(model.predict_dataset(held));
            targets.extend(held.outputs());
        }
        let (_, global) = metrics::mse(&preds, &targets)?;
        log::debug!("lambda {lambda:e}: cv global mse {global:e}");
        if global < best.0 {
            best = (global, lambda);
        }
    }
    Ok(best.1)
}

/// Native-unit test metrics of a baseline fitted on normalized data.
pub fn evaluate_linear(
    model: &LinearModel,
    test: &Dataset,
    normalization: &NormalizationSpec,
) -> Result<MetricReport> {
    let preds: Vec<[f64; N_OUTPUTS]> = test
        .iter()
        .map(|p| normalization.denormalize_outputs(&model.predict(&normalization.normalize_inputs(&p.inputs))))
        .collect();
    metrics::report(&preds, &test.outputs(), &test.output_means())
}

/// Residuals of every output, for diagnostics.
pub fn residuals(model: &LinearModel, data: &Dataset) -> Vec<[f64; N_OUTPUTS]> {
    data.iter()
        .map(|p| {
            let y = model.predict(&p.inputs);
            std::array::from_fn(|k| p.outputs[k] - y[k])
        })
        .collect()
}

/// Euclidean norm of all coefficients.
pub fn coefficient_norm(model: &LinearModel) -> f64 {
    DVector::from_iterator(
        model.n_nonzero(),
        model.coefficients.iter().flatten().map(|&(_, c)| c),
    )
    .norm()
}
