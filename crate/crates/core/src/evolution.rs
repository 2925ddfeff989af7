//! Evolutionary-programming trainer for product-unit and sigmoid-unit
//! networks.
//!
//! Mutation only, no crossover. Each generation keeps the elite unchanged,
//! lets the elite produce parametrically mutated offspring (Gaussian noise
//! scaled by two self-adapting temperatures) and fills the remaining slots
//! with structurally mutated copies of rank-selected parents from the top
//! half. Fitness is `1 / (1 + global MSE)` in normalized output space.
//!
//! All random draws happen on one stream owned by the generation loop, so
//! results are identical for any number of worker threads.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{render_table, TableRow};
use crate::netmodel::{count_links, evaluate, BasisKind, EvalReport, HiddenNode, NetworkModel};
use crate::normalize::{
    fit_normalizer, NormalizationSpec, DEFAULT_INPUT_INTERVAL, DEFAULT_OUTPUT_INTERVAL,
};
use crate::schema::{N_INPUTS, N_OUTPUTS};

/// Generations used by the complex training mode.
pub const COMPLEX_GENERATIONS: usize = 6000;

/// Share of the ranked population eligible as structural-mutation parents.
const PARENT_POOL_FRACTION: f64 = 0.5;

/// Simple (200 generations) or complex (long-run) training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrainingMode {
    #[default]
    Simple,
    Complex,
}

impl std::str::FromStr for TrainingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(TrainingMode::Simple),
            "complex" => Ok(TrainingMode::Complex),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mode `{s}` (expected simple or complex)"
            ))),
        }
    }
}

/// Weight initialization ranges of one basis kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightRanges {
    pub input_hidden: (f64, f64),
    pub hidden_output: (f64, f64),
}

impl WeightRanges {
    pub fn for_basis(basis: BasisKind) -> Self {
        match basis {
            BasisKind::ProductUnit => WeightRanges {
                input_hidden: (-1.0, 1.0),
                hidden_output: (-5.0, 5.0),
            },
            BasisKind::SigmoidUnit => WeightRanges {
                input_hidden: (-5.0, 5.0),
                hidden_output: (-5.0, 5.0),
            },
        }
    }
}

/// Two mutation temperatures: input-to-hidden and hidden-to-output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperatures {
    pub input_hidden: f64,
    pub hidden_output: f64,
}

impl Temperatures {
    fn decayed(self, factor: f64, floor: f64) -> Self {
        Temperatures {
            input_hidden: (self.input_hidden * factor).max(floor),
            hidden_output: (self.hidden_output * factor).max(floor),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EAConfig {
    pub runs: usize,
    pub generations: usize,
    pub population_size: usize,
    /// Inclusive range of nodes added or deleted by one structural step.
    pub nodes_add_delete: (usize, usize),
    pub min_init_nodes: usize,
    pub max_init_nodes: usize,
    pub max_nodes: usize,
    /// Upper bound on the number of inputs a freshly created node connects.
    pub max_init_connections: usize,
    /// `None` uses the basis-kind default of [`WeightRanges::for_basis`].
    pub input_hidden_range: Option<(f64, f64)>,
    pub hidden_output_range: Option<(f64, f64)>,
    pub seed: u64,
    /// Share of each new generation produced by parametric mutation.
    pub parametric_fraction: f64,
    /// Share of each new generation produced by structural mutation. The
    /// rest are elite copies.
    pub structural_fraction: f64,
    pub initial_temperatures: Temperatures,
    pub temperature_decay: f64,
    pub min_temperature: f64,
    pub input_interval: (f64, f64),
    pub output_interval: (f64, f64),
    /// Stop a run early once this much wall time has elapsed.
    pub time_budget: Option<Duration>,
    /// Refit the output layer by least squares on the hidden activations
    /// before each fitness evaluation.
    pub refit_output_layer: bool,
}

impl Default for EAConfig {
    fn default() -> Self {
        EAConfig {
            runs: 30,
            generations: 200,
            population_size: 1000,
            nodes_add_delete: (1, 2),
            min_init_nodes: 1,
            max_init_nodes: 1,
            max_nodes: 3,
            max_init_connections: 10,
            input_hidden_range: None,
            hidden_output_range: None,
            seed: 0,
            parametric_fraction: 0.1,
            structural_fraction: 0.8,
            initial_temperatures: Temperatures {
                input_hidden: 1.0,
                hidden_output: 0.1,
            },
            temperature_decay: 0.9,
            min_temperature: 1e-4,
            input_interval: DEFAULT_INPUT_INTERVAL,
            output_interval: DEFAULT_OUTPUT_INTERVAL,
            time_budget: None,
            refit_output_layer: true,
        }
    }
}

impl EAConfig {
    pub fn for_mode(mode: TrainingMode) -> Self {
        let mut c = EAConfig::default();
        if mode == TrainingMode::Complex {
            c.generations = COMPLEX_GENERATIONS;
        }
        c
    }

    pub fn weight_ranges(&self, basis: BasisKind) -> WeightRanges {
        let d = WeightRanges::for_basis(basis);
        WeightRanges {
            input_hidden: self.input_hidden_range.unwrap_or(d.input_hidden),
            hidden_output: self.hidden_output_range.unwrap_or(d.hidden_output),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.runs == 0 || self.population_size == 0 {
            return bad("runs and population size must be at least 1".into());
        }
        let (a, d) = self.nodes_add_delete;
        if a == 0 || a > d {
            return bad(format!("add/delete range [{a}, {d}] must satisfy 1 <= lo <= hi"));
        }
        if self.min_init_nodes == 0
            || self.min_init_nodes > self.max_init_nodes
            || self.max_init_nodes > self.max_nodes
        {
            return bad(format!(
                "need 1 <= min init nodes ({}) <= max init nodes ({}) <= max nodes ({})",
                self.min_init_nodes, self.max_init_nodes, self.max_nodes
            ));
        }
        if self.max_init_connections == 0 {
            return bad("max init connections must be at least 1".into());
        }
        for (name, f) in [
            ("parametric", self.parametric_fraction),
            ("structural", self.structural_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("{name} fraction must lie in (0, 1), got {f}"));
            }
        }
        if self.parametric_fraction + self.structural_fraction >= 1.0 {
            return bad("parametric + structural fractions must leave room for the elite".into());
        }
        for (name, r) in [
            ("input-hidden", self.input_hidden_range),
            ("hidden-output", self.hidden_output_range),
        ] {
            if let Some((lo, hi)) = r {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return bad(format!("{name} range [{lo}, {hi}] is invalid"));
                }
            }
        }
        let t = self.initial_temperatures;
        if !(t.input_hidden >= 0.0 && t.hidden_output >= 0.0) {
            return bad("temperatures must be non-negative".into());
        }
        if !(self.temperature_decay > 0.0 && self.temperature_decay <= 1.0) {
            return bad("temperature decay must lie in (0, 1]".into());
        }
        Ok(())
    }

    /// Elite, parametric and structural slot counts for one generation.
    fn slots(&self) -> (usize, usize, usize) {
        let n = self.population_size;
        let elite_share = 1.0 - self.parametric_fraction - self.structural_fraction;
        let elite = ((elite_share * n as f64).round() as usize).clamp(1, n);
        let parametric = ((self.parametric_fraction * n as f64).round() as usize)
            .max(1)
            .min(n - elite);
        (elite, parametric, n - elite - parametric)
    }
}

fn uniform_nonzero(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    loop {
        let w = rng.random_range(lo..=hi);
        if w != 0.0 {
            return w;
        }
    }
}

fn random_node(basis: BasisKind, config: &EAConfig, rng: &mut impl Rng) -> HiddenNode {
    let ranges = config.weight_ranges(basis);
    let k = rng.random_range(1..=config.max_init_connections.min(N_INPUTS));
    let mut inputs = rand::seq::index::sample(rng, N_INPUTS, k).into_vec();
    inputs.sort_unstable();
    let weights: Vec<(usize, f64)> = inputs
        .into_iter()
        .map(|i| (i, uniform_nonzero(rng, ranges.input_hidden)))
        .collect();
    let bias = match basis {
        BasisKind::ProductUnit => None,
        BasisKind::SigmoidUnit => Some(rng.random_range(ranges.input_hidden.0..=ranges.input_hidden.1)),
    };
    let outputs = std::array::from_fn(|_| uniform_nonzero(rng, ranges.hidden_output));
    HiddenNode::new(weights, bias, outputs)
}

/// Random initial models, each with between `min_init_nodes` and
/// `max_init_nodes` hidden nodes.
pub fn init_population(
    config: &EAConfig,
    basis: BasisKind,
    normalization: &NormalizationSpec,
    rng: &mut impl Rng,
) -> Vec<NetworkModel> {
    let ranges = config.weight_ranges(basis);
    (0..config.population_size)
        .map(|_| {
            let m = rng.random_range(config.min_init_nodes..=config.max_init_nodes);
            let hidden = (0..m).map(|_| random_node(basis, config, rng)).collect();
            let bias = std::array::from_fn(|_| {
                rng.random_range(ranges.hidden_output.0..=ranges.hidden_output.1)
            });
            NetworkModel::new(basis, hidden, bias, normalization.clone())
                .expect("random model satisfies invariants")
        })
        .collect()
}

/// Training patterns pre-mapped into the network's working space.
struct EvalSet {
    basis: BasisKind,
    z: Vec<[f64; N_INPUTS]>,
    ln_z: Vec<[f64; N_INPUTS]>,
    targets: Vec<[f64; N_OUTPUTS]>,
}

impl EvalSet {
    fn new(data: &Dataset, basis: BasisKind, spec: &NormalizationSpec) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("training set is empty".into()));
        }
        let mut z = Vec::with_capacity(data.len());
        for p in data.iter() {
            z.push(match basis {
                BasisKind::ProductUnit => spec.normalize_inputs_checked(&p.inputs)?,
                BasisKind::SigmoidUnit => spec.normalize_inputs(&p.inputs),
            });
        }
        let ln_z = match basis {
            BasisKind::ProductUnit => z.iter().map(|x| x.map(f64::ln)).collect(),
            BasisKind::SigmoidUnit => Vec::new(),
        };
        let targets = data.iter().map(|p| spec.normalize_outputs(&p.outputs)).collect();
        Ok(EvalSet {
            basis,
            z,
            ln_z,
            targets,
        })
    }

    /// Global normalized MSE, or `None` when the model cannot be evaluated.
    /// Mirrors the model's own forward pass operation for operation.
    fn global_mse(&self, model: &NetworkModel) -> Option<f64> {
        let mut sse = [0.0; N_OUTPUTS];
        for (p, t) in self.targets.iter().enumerate() {
            let mut out = *model.output_bias();
            for node in model.hidden() {
                let b = self.basis_value(node, p);
                if !b.is_finite() {
                    return None;
                }
                for (o, beta) in out.iter_mut().zip(node.output_coeffs()) {
                    *o += beta * b;
                }
            }
            for q in 0..N_OUTPUTS {
                let e = t[q] - out[q];
                sse[q] += e * e;
            }
        }
        let n = self.targets.len() as f64;
        let global: f64 = sse.map(|s| s / n).iter().sum();
        global.is_finite().then_some(global)
    }

    fn basis_value(&self, node: &HiddenNode, p: usize) -> f64 {
        match self.basis {
            BasisKind::ProductUnit => {
                let ln = &self.ln_z[p];
                let mut log_sum = 0.0;
                for &(i, w) in node.weights() {
                    log_sum += w * ln[i];
                }
                log_sum.exp()
            }
            BasisKind::SigmoidUnit => {
                let z = &self.z[p];
                let s = node.bias().unwrap_or(0.0)
                    + node.weights().iter().map(|&(i, w)| w * z[i]).sum::<f64>();
                crate::netmodel::logistic(s)
            }
        }
    }

    /// Replaces the output coefficients and biases by their least-squares
    /// values given the current hidden layer. Leaves the model untouched if
    /// the activations are not finite or the system cannot be solved.
    fn refit_output_layer(&self, model: &mut NetworkModel) {
        let n = self.targets.len();
        let m = model.n_hidden();
        let mut h = DMatrix::<f64>::zeros(n, m);
        for (j, node) in model.hidden().iter().enumerate() {
            for p in 0..n {
                let b = self.basis_value(node, p);
                if !b.is_finite() || b.abs() > 1e150 {
                    return;
                }
                h[(p, j)] = b;
            }
        }
        let t = DMatrix::from_fn(n, N_OUTPUTS, |p, k| self.targets[p][k]);
        let h_mean = h.row_mean();
        let t_mean = t.row_mean();
        let mut hc = h;
        for p in 0..n {
            for j in 0..m {
                hc[(p, j)] -= h_mean[j];
            }
        }
        let mut gram = hc.transpose() * &hc;
        let ridge = 1e-12 * gram.trace().max(f64::MIN_POSITIVE);
        for j in 0..m {
            gram[(j, j)] += ridge;
        }
        let rhs = hc.transpose() * t;
        let Some(beta) = gram.cholesky().map(|c| c.solve(&rhs)) else {
            return;
        };
        if !beta.iter().all(|v| v.is_finite()) {
            return;
        }
        for (j, node) in model.hidden_mut().iter_mut().enumerate() {
            *node.output_coeffs_mut() = std::array::from_fn(|k| beta[(j, k)]);
        }
        let bias = model.output_bias_mut();
        for k in 0..N_OUTPUTS {
            bias[k] = t_mean[k] - (0..m).map(|j| h_mean[j] * beta[(j, k)]).sum::<f64>();
        }
    }
}

fn fitness_of(mse: Option<f64>) -> f64 {
    mse.map_or(0.0, |m| 1.0 / (1.0 + m))
}

/// `1 / (1 + global MSE)` on `train` in the model's normalized output
/// space; 0 when the model cannot be evaluated on some pattern.
pub fn fitness(model: &NetworkModel, train: &Dataset) -> f64 {
    match EvalSet::new(train, model.basis(), model.normalization()) {
        Ok(set) => fitness_of(set.global_mse(model)),
        Err(_) => 0.0,
    }
}

fn perturb(w: &mut f64, sd: f64, rng: &mut impl Rng) {
    if sd <= 0.0 {
        return;
    }
    let noise = Normal::new(0.0, sd).expect("finite positive sd");
    for _ in 0..2 {
        let v = *w + noise.sample(rng);
        if v.is_finite() && v != 0.0 {
            *w = v;
            return;
        }
    }
}

/// Adds zero-mean Gaussian noise to every existing weight, with standard
/// deviation `temperature * range width` per layer. Output biases use the
/// hidden-to-output temperature; sigmoid biases the input-to-hidden one.
pub fn parametric_mutation(
    model: &NetworkModel,
    temps: Temperatures,
    ranges: WeightRanges,
    rng: &mut impl Rng,
) -> NetworkModel {
    let sd_in = temps.input_hidden * (ranges.input_hidden.1 - ranges.input_hidden.0);
    let sd_out = temps.hidden_output * (ranges.hidden_output.1 - ranges.hidden_output.0);
    let mut child = model.clone();
    for node in child.hidden_mut() {
        for w in node.weights_mut() {
            perturb(w, sd_in, rng);
        }
        if let Some(b) = node.bias_mut() {
            perturb(b, sd_in, rng);
        }
        for beta in node.output_coeffs_mut() {
            if *beta != 0.0 {
                perturb(beta, sd_out, rng);
            }
        }
    }
    for b in child.output_bias_mut() {
        perturb(b, sd_out, rng);
    }
    child
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuralOp {
    AddNodes,
    DeleteNodes,
    AddConnection,
    DeleteConnection,
}

const STRUCTURAL_OPS: [StructuralOp; 4] = [
    StructuralOp::AddNodes,
    StructuralOp::DeleteNodes,
    StructuralOp::AddConnection,
    StructuralOp::DeleteConnection,
];

/// Which operator ran and whether it changed the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuralOutcome {
    pub op: StructuralOp,
    pub applied: bool,
}

/// Applies one structural operator chosen uniformly at random.
pub fn structural_mutation(
    model: &NetworkModel,
    config: &EAConfig,
    rng: &mut impl Rng,
) -> (NetworkModel, StructuralOutcome) {
    let op = STRUCTURAL_OPS[rng.random_range(0..STRUCTURAL_OPS.len())];
    let (child, applied) = apply_structural(model, op, config, rng);
    (child, StructuralOutcome { op, applied })
}

/// Applies a specific structural operator.
pub fn apply_structural(
    model: &NetworkModel,
    op: StructuralOp,
    config: &EAConfig,
    rng: &mut impl Rng,
) -> (NetworkModel, bool) {
    let basis = model.basis();
    let mut child = model.clone();
    let m = child.n_hidden();
    let (lo, hi) = config.nodes_add_delete;
    let applied = match op {
        StructuralOp::AddNodes => {
            let count = rng.random_range(lo..=hi).min(config.max_nodes.saturating_sub(m));
            for _ in 0..count {
                let node = random_node(basis, config, rng);
                child.hidden_mut().push(node);
            }
            count > 0
        }
        StructuralOp::DeleteNodes => {
            let count = rng.random_range(lo..=hi).min(m - 1);
            for _ in 0..count {
                let j = rng.random_range(0..child.n_hidden());
                child.hidden_mut().remove(j);
            }
            count > 0
        }
        StructuralOp::AddConnection => {
            let free: Vec<(usize, usize)> = child
                .hidden()
                .iter()
                .enumerate()
                .flat_map(|(j, n)| {
                    (0..N_INPUTS).filter(|&i| !n.is_connected(i)).map(move |i| (j, i))
                })
                .collect();
            if free.is_empty() {
                false
            } else {
                let (j, i) = free[rng.random_range(0..free.len())];
                let w = uniform_nonzero(rng, config.weight_ranges(basis).input_hidden);
                child.hidden_mut()[j].set_weight(i, w);
                true
            }
        }
        StructuralOp::DeleteConnection => {
            let j = rng.random_range(0..m);
            let node = &child.hidden()[j];
            if node.n_connections() > 1 {
                let (i, _) = node.weights()[rng.random_range(0..node.n_connections())];
                child.hidden_mut()[j].set_weight(i, 0.0);
                true
            } else if m > 1 {
                child.hidden_mut().remove(j);
                true
            } else {
                false
            }
        }
    };
    (child, applied)
}

/// Per-generation record of one evolutionary run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    /// Entry 0 is the initial population.
    pub best_fitness: Vec<f64>,
    /// Global MSE of the best model, normalized output space.
    pub best_mse: Vec<f64>,
    pub structural_skips: usize,
    /// Set when the time budget ended the run before the last generation.
    pub stopped_early: bool,
    pub wall_time: Duration,
}

impl RunHistory {
    pub fn generations(&self) -> usize {
        self.best_fitness.len().saturating_sub(1)
    }

    pub fn final_mse(&self) -> f64 {
        *self.best_mse.last().expect("history has the initial generation")
    }

    /// `generation,best_fitness,best_mse` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,best_fitness,best_mse\n");
        for (g, (f, m)) in self.best_fitness.iter().zip(&self.best_mse).enumerate() {
            let _ = writeln!(out, "{g},{f},{m}");
        }
        out
    }
}

#[derive(Clone)]
struct Individual {
    model: NetworkModel,
    temps: Temperatures,
    mse: Option<f64>,
    fitness: Option<f64>,
    /// Elite slot of the parent, for parametric offspring.
    parent: Option<usize>,
}

impl Individual {
    fn new(model: NetworkModel, temps: Temperatures, parent: Option<usize>) -> Self {
        Individual {
            model,
            temps,
            mse: None,
            fitness: None,
            parent,
        }
    }

    fn fitness(&self) -> f64 {
        self.fitness.expect("individual evaluated")
    }
}

fn evaluate_all(pop: &mut [Individual], set: &EvalSet, refit: bool) {
    pop.par_iter_mut()
        .filter(|ind| ind.fitness.is_none())
        .for_each(|ind| {
            if refit {
                set.refit_output_layer(&mut ind.model);
            }
            let mse = set.global_mse(&ind.model);
            ind.mse = mse;
            ind.fitness = Some(fitness_of(mse));
        });
}

/// Stable sort by decreasing fitness; earlier individuals win ties.
fn rank(pop: &mut [Individual]) {
    pop.sort_by(|a, b| b.fitness().total_cmp(&a.fitness()));
}

/// Evolves a model on `train`, fitting the normalization on `train`.
pub fn evolve(train: &Dataset, config: &EAConfig, basis: BasisKind) -> Result<(NetworkModel, RunHistory)> {
    let spec = fit_normalizer(train, config.input_interval, config.output_interval)?;
    evolve_with(train, config, basis, spec)
}

/// Evolves a model on `train` using an explicit normalization.
pub fn evolve_with(
    train: &Dataset,
    config: &EAConfig,
    basis: BasisKind,
    normalization: NormalizationSpec,
) -> Result<(NetworkModel, RunHistory)> {
    config.validate()?;
    let set = EvalSet::new(train, basis, &normalization)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ranges = config.weight_ranges(basis);

    let mut pop: Vec<Individual> = init_population(config, basis, &normalization, &mut rng)
        .into_iter()
        .map(|m| Individual::new(m, config.initial_temperatures, None))
        .collect();
    evaluate_all(&mut pop, &set, config.refit_output_layer);
    rank(&mut pop);

    let mut history = RunHistory {
        best_fitness: vec![pop[0].fitness()],
        best_mse: vec![pop[0].mse.unwrap_or(f64::INFINITY)],
        structural_skips: 0,
        stopped_early: false,
        wall_time: Duration::ZERO,
    };

    let (n_elite, n_param, n_struct) = config.slots();
    let pool = ((config.population_size as f64 * PARENT_POOL_FRACTION).ceil() as usize)
        .clamp(1, config.population_size);
    let pool_weights = WeightedIndex::new((0..pool).map(|r| (pool - r) as f64))
        .expect("positive rank weights");

    for generation in 1..=config.generations {
        if config.time_budget.is_some_and(|b| start.elapsed() >= b) {
            history.stopped_early = true;
            log::info!("time budget reached after {} generations", generation - 1);
            break;
        }
        let mut next: Vec<Individual> = pop[..n_elite]
            .iter()
            .cloned()
            .map(|mut e| {
                e.parent = None;
                e
            })
            .collect();
        for c in 0..n_param {
            let slot = c % n_elite;
            let parent = &pop[slot];
            let child = parametric_mutation(&parent.model, parent.temps, ranges, &mut rng);
            next.push(Individual::new(child, parent.temps, Some(slot)));
        }
        for _ in 0..n_struct {
            let parent = &pop[pool_weights.sample(&mut rng)];
            let (child, outcome) = structural_mutation(&parent.model, config, &mut rng);
            if !outcome.applied {
                history.structural_skips += 1;
            }
            next.push(Individual::new(child, parent.temps, None));
        }

        evaluate_all(&mut next, &set, config.refit_output_layer);
        for c in n_elite..n_elite + n_param {
            let slot = next[c].parent.expect("parametric child has a parent");
            if next[c].fitness() <= next[slot].fitness() {
                next[slot].temps = next[slot]
                    .temps
                    .decayed(config.temperature_decay, config.min_temperature);
            }
        }
        rank(&mut next);
        pop = next;

        history.best_fitness.push(pop[0].fitness());
        history.best_mse.push(pop[0].mse.unwrap_or(f64::INFINITY));
        log::debug!(
            "generation {generation}: best mse {:.6e}, links {}",
            history.final_mse(),
            count_links(&pop[0].model)
        );
    }
    history.wall_time = start.elapsed();
    let best = pop.swap_remove(0).model;
    Ok((best, history))
}

/// One run of an experiment.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub model: NetworkModel,
    pub history: RunHistory,
    /// Native-unit metrics on the test set.
    pub test: EvalReport,
}

impl RunResult {
    pub fn train_mse(&self) -> f64 {
        self.history.final_mse()
    }
}

/// Global-then-per-output MSE and SEP plus a link count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mse: [f64; N_OUTPUTS + 1],
    pub sep: [f64; N_OUTPUTS + 1],
    pub links: f64,
}

impl Summary {
    fn of(r: &EvalReport) -> Self {
        let row = TableRow::from_report("", &r.metrics, None);
        Summary {
            mse: row.mse,
            sep: row.sep,
            links: r.links as f64,
        }
    }

    fn flat(&self) -> Vec<f64> {
        self.mse.iter().chain(&self.sep).copied().chain([self.links]).collect()
    }

    fn from_flat(v: &[f64]) -> Self {
        Summary {
            mse: std::array::from_fn(|i| v[i]),
            sep: std::array::from_fn(|i| v[N_OUTPUTS + 1 + i]),
            links: v[2 * (N_OUTPUTS + 1)],
        }
    }

    fn row(&self, label: &str) -> TableRow {
        TableRow {
            label: label.to_string(),
            mse: self.mse,
            sep: self.sep,
            links: Some(self.links),
        }
    }
}

/// Mean, SD and best-by-train results over all runs.
#[derive(Debug, Clone)]
pub struct AggregateResult {
    pub basis: BasisKind,
    pub runs: Vec<RunResult>,
    pub mean: Summary,
    /// Sample standard deviation (n - 1); zero for a single run.
    pub sd: Summary,
    /// Index into `runs` of the run with the lowest train MSE.
    pub best: usize,
}

impl AggregateResult {
    pub fn best_run(&self) -> &RunResult {
        &self.runs[self.best]
    }

    pub fn best_summary(&self) -> Summary {
        Summary::of(&self.best_run().test)
    }

    pub fn rows(&self) -> Vec<TableRow> {
        vec![
            self.mean.row("Mean"),
            self.sd.row("SD"),
            self.best_summary().row("Best"),
        ]
    }

    pub fn render(&self) -> String {
        render_table(
            &format!("{} ({} runs, test set)", self.basis.short_name(), self.runs.len()),
            &self.rows(),
        )
    }
}

/// Mean and sample SD of each column.
fn mean_sd(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let width = rows[0].len();
    let mean: Vec<f64> = (0..width)
        .map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n)
        .collect();
    let sd = (0..width)
        .map(|c| {
            if rows.len() < 2 {
                0.0
            } else {
                let ss: f64 = rows.iter().map(|r| (r[c] - mean[c]).powi(2)).sum();
                (ss / (n - 1.0)).sqrt()
            }
        })
        .collect();
    (mean, sd)
}

/// Runs `config.runs` independent evolutions with seeds `seed + run` and
/// summarizes their native-unit test metrics.
pub fn run_experiment(
    train: &Dataset,
    test: &Dataset,
    config: &EAConfig,
    basis: BasisKind,
) -> Result<AggregateResult> {
    config.validate()?;
    let spec = fit_normalizer(train, config.input_interval, config.output_interval)?;
    let mut runs = Vec::with_capacity(config.runs);
    for r in 0..config.runs {
        let seed = config.seed.wrapping_add(r as u64);
        let run_config = EAConfig {
            seed,
            ..config.clone()
        };
        let (model, history) = evolve_with(train, &run_config, basis, spec.clone())?;
        let test_report = evaluate(&model, test)?;
        log::info!(
            "run {} (seed {seed}): train mse {:.6e}, test global mse {:.6e}, links {}",
            r + 1,
            history.final_mse(),
            test_report.metrics.global_mse,
            test_report.links
        );
        runs.push(RunResult {
            seed,
            model,
            history,
            test: test_report,
        });
    }
    let flats: Vec<Vec<f64>> = runs.iter().map(|r| Summary::of(&r.test).flat()).collect();
    let (mean, sd) = mean_sd(&flats);
    let best = (0..runs.len())
        .min_by(|&a, &b| runs[a].train_mse().total_cmp(&runs[b].train_mse()))
        .expect("at least one run");
    Ok(AggregateResult {
        basis,
        runs,
        mean: Summary::from_flat(&mean),
        sd: Summary::from_flat(&sd),
        best,
    })
}
