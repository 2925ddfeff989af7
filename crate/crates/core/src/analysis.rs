//! Model interpretation: input influence slopes, two-variable response
//! surfaces and their extremes.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::netmodel::{BasisKind, NetworkModel};
use crate::schema::{FeatureSchema, N_INPUTS, N_OUTPUTS};

/// Default number of grid points per surface axis.
pub const DEFAULT_GRID_POINTS: usize = 50;

/// Index of the pole-count input.
const POLE_INPUT: usize = 2;
const PHYSICAL_POLES: [f64; 4] = [2.0, 4.0, 6.0, 12.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
    Zero,
}

impl Sign {
    pub fn of(v: f64) -> Self {
        if v > 0.0 {
            Sign::Positive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
            Sign::Zero => '0',
        }
    }
}

/// Slopes of every normalized output with respect to every normalized
/// input at one nominal point.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceReport {
    /// `slopes[k][i]` = d(output k) / d(input i), both normalized.
    pub slopes: [[f64; N_INPUTS]; N_OUTPUTS],
    pub nominal: [f64; N_INPUTS],
}

impl InfluenceReport {
    pub fn sign(&self, output: usize, input: usize) -> Sign {
        Sign::of(self.slopes[output][input])
    }

    /// Inputs ordered by decreasing absolute slope on `output`, zero
    /// slopes omitted.
    pub fn ranking(&self, output: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..N_INPUTS)
            .filter(|&i| self.slopes[output][i] != 0.0)
            .collect();
        idx.sort_by(|&a, &b| {
            self.slopes[output][b]
                .abs()
                .total_cmp(&self.slopes[output][a].abs())
                .then(a.cmp(&b))
        });
        idx
    }

    /// One row per input: name, alias, then slope and sign for each output.
    pub fn to_csv(&self, schema: &FeatureSchema) -> String {
        let mut out = String::from("input,alias");
        for k in 0..N_OUTPUTS {
            let name = schema.output_name(k);
            let _ = write!(out, ",{name},{name}_sign");
        }
        out.push('\n');
        for i in 0..N_INPUTS {
            let _ = write!(out, "{},{}", schema.canonical(i), schema.alias(i));
            for k in 0..N_OUTPUTS {
                let _ = write!(out, ",{},{}", self.slopes[k][i], self.sign(k, i).symbol());
            }
            out.push('\n');
        }
        out
    }
}

/// Analytic partial derivatives of the normalized outputs at `nominal`
/// (a normalized input vector).
pub fn influence(model: &NetworkModel, nominal: &[f64; N_INPUTS]) -> Result<InfluenceReport> {
    let hidden = model.hidden_values(nominal)?;
    let mut slopes = [[0.0; N_INPUTS]; N_OUTPUTS];
    for (node, b) in model.hidden().iter().zip(hidden) {
        for &(i, w) in node.weights() {
            let d = match model.basis() {
                BasisKind::ProductUnit => b * w / nominal[i],
                BasisKind::SigmoidUnit => b * (1.0 - b) * w,
            };
            for k in 0..N_OUTPUTS {
                slopes[k][i] += node.output_coeffs()[k] * d;
            }
        }
    }
    Ok(InfluenceReport {
        slopes,
        nominal: *nominal,
    })
}

/// Where the variables that are not swept are held.
#[derive(Debug, Clone, PartialEq)]
pub enum FixedPointPolicy {
    Mean,
    Median,
    /// Native-unit values for all 40 inputs.
    Explicit(Box<[f64; N_INPUTS]>),
}

impl FixedPointPolicy {
    /// Native-unit fixed point. `Mean` and `Median` need a dataset.
    pub fn resolve(&self, data: Option<&Dataset>) -> Result<[f64; N_INPUTS]> {
        let need = || {
            data.filter(|d| !d.is_empty()).ok_or_else(|| {
                Error::InvalidArgument("fixed-point policy needs a non-empty dataset".into())
            })
        };
        match self {
            FixedPointPolicy::Mean => Ok(need()?.input_means()),
            FixedPointPolicy::Median => Ok(need()?.input_medians()),
            FixedPointPolicy::Explicit(v) => Ok(**v),
        }
    }
}

impl std::str::FromStr for FixedPointPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" | "means" => Ok(FixedPointPolicy::Mean),
            "median" | "medians" => Ok(FixedPointPolicy::Median),
            _ => Err(Error::InvalidArgument(format!(
                "unknown fixed-point policy `{s}` (expected mean or median)"
            ))),
        }
    }
}

/// Grid sizes and native ranges of the two swept axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceGrid {
    pub counts: (usize, usize),
    pub range_a: (f64, f64),
    pub range_b: (f64, f64),
}

impl SurfaceGrid {
    /// 50 x 50 points over both variables' working ranges.
    pub fn over_working_ranges(schema: &FeatureSchema, var_a: usize, var_b: usize) -> Self {
        SurfaceGrid {
            counts: (DEFAULT_GRID_POINTS, DEFAULT_GRID_POINTS),
            range_a: schema.ranges().get(var_a),
            range_b: schema.ranges().get(var_b),
        }
    }
}

fn axis(n: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Model outputs over a two-variable grid, native units.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub var_a: usize,
    pub var_b: usize,
    pub axis_a: Vec<f64>,
    pub axis_b: Vec<f64>,
    /// Per output, row-major with `var_a` as the slow index:
    /// cell `(ia, ib)` is at `ia * axis_b.len() + ib`.
    pub values: [Vec<f64>; N_OUTPUTS],
    pub fixed: [f64; N_INPUTS],
    /// Axes (0 = a, 1 = b) holding pole counts that are not physical motors.
    pub non_physical_axes: Vec<usize>,
}

impl Surface {
    pub fn at(&self, output: usize, ia: usize, ib: usize) -> f64 {
        self.values[output][ia * self.axis_b.len() + ib]
    }

    /// One row per cell: `var_a, var_b, LAEQ, L, R, SA`.
    pub fn to_csv(&self, schema: &FeatureSchema) -> String {
        let mut out = format!("{},{}", schema.canonical(self.var_a), schema.canonical(self.var_b));
        for name in schema.output_names() {
            let _ = write!(out, ",{name}");
        }
        out.push('\n');
        for (ia, a) in self.axis_a.iter().enumerate() {
            for (ib, b) in self.axis_b.iter().enumerate() {
                let _ = write!(out, "{a},{b}");
                for k in 0..N_OUTPUTS {
                    let _ = write!(out, ",{}", self.at(k, ia, ib));
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Evaluates the model on the grid with all other inputs held at `fixed`.
pub fn surface(
    model: &NetworkModel,
    var_a: usize,
    var_b: usize,
    grid: &SurfaceGrid,
    fixed: &[f64; N_INPUTS],
) -> Result<Surface> {
    let schema = FeatureSchema::standard();
    if var_a >= N_INPUTS || var_b >= N_INPUTS {
        return Err(Error::InvalidArgument("swept variable out of range".into()));
    }
    if var_a == var_b {
        return Err(Error::InvalidArgument(format!(
            "cannot sweep {} against itself",
            schema.canonical(var_a)
        )));
    }
    if grid.counts.0 == 0 || grid.counts.1 == 0 {
        return Err(Error::InvalidArgument("grid needs at least one point per axis".into()));
    }
    for (var, (lo, hi)) in [(var_a, grid.range_a), (var_b, grid.range_b)] {
        let (min, max) = schema.ranges().get(var);
        let slack = 1e-9 * max.abs().max(min.abs());
        if !(lo <= hi) || lo < min - slack || hi > max + slack {
            return Err(Error::InvalidArgument(format!(
                "range [{lo}, {hi}] for {} ({}) is outside its working range [{min}, {max}]",
                schema.canonical(var),
                schema.alias(var)
            )));
        }
    }
    let axis_a = axis(grid.counts.0, grid.range_a);
    let axis_b = axis(grid.counts.1, grid.range_b);
    let nb = axis_b.len();
    let cells: Vec<[f64; N_OUTPUTS]> = (0..axis_a.len() * nb)
        .into_par_iter()
        .map(|c| {
            let mut x = *fixed;
            x[var_a] = axis_a[c / nb];
            x[var_b] = axis_b[c % nb];
            model.predict(&x)
        })
        .collect::<Result<_>>()?;
    let values = std::array::from_fn(|k| cells.iter().map(|y| y[k]).collect());
    let non_physical_axes = [(0, var_a, &axis_a), (1, var_b, &axis_b)]
        .into_iter()
        .filter(|(_, var, ax)| {
            *var == POLE_INPUT && ax.iter().any(|v| !PHYSICAL_POLES.contains(v))
        })
        .map(|(a, _, _)| a)
        .collect();
    Ok(Surface {
        var_a,
        var_b,
        axis_a,
        axis_b,
        values,
        fixed: *fixed,
        non_physical_axes,
    })
}

/// Minimum, span and maximum of each output over a surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceExtremes {
    /// `(min, max - min, max)` per output.
    pub per_output: [(f64, f64, f64); N_OUTPUTS],
}

pub fn extremes(s: &Surface) -> SurfaceExtremes {
    SurfaceExtremes {
        per_output: std::array::from_fn(|k| {
            let (min, max) = s.values[k]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            (min, max - min, max)
        }),
    }
}

impl SurfaceExtremes {
    /// `min/difference/max` per output.
    pub fn render(&self, schema: &FeatureSchema) -> String {
        let mut out = format!("{:<8} {:>12} {:>12} {:>12}\n", "output", "min", "difference", "max");
        for (k, (min, span, max)) in self.per_output.iter().enumerate() {
            let _ = writeln!(out, "{:<8} {min:>12.4} {span:>12.4} {max:>12.4}", schema.output_name(k));
        }
        out
    }
}
