//! Multitask feed-forward networks with one hidden layer of product units
//! or sigmoid units and four linear outputs.
//!
//! A network computes, for every output `k`,
//!
//! ```text
//! f_k(x) = beta_k0 + sum_j beta_kj * B_j(x)
//! ```
//!
//! in normalized space, where `B_j` is either a product unit
//! `prod_i x_i^w_ji` or a logistic sigmoid of `w_j0 + sum_i w_ji x_i`.
//! Native-unit inputs and outputs go through the attached
//! [`NormalizationSpec`].

mod format;
mod reference;

pub use format::{deserialize, serialize, FORMAT_TAG};
pub use reference::{
    reference_normalization, reference_punn, reference_punn_with, REFERENCE_EXPONENTS,
    REFERENCE_OUTPUT_BIAS, REFERENCE_OUTPUT_COEFFS, REFERENCE_OUTPUT_RANGES,
};

use std::fmt;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{self, MetricReport};
use crate::normalize::NormalizationSpec;
use crate::schema::{N_INPUTS, N_OUTPUTS};

/// Kind of hidden-layer basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisKind {
    ProductUnit,
    SigmoidUnit,
}

impl BasisKind {
    pub fn short_name(self) -> &'static str {
        match self {
            BasisKind::ProductUnit => "punn",
            BasisKind::SigmoidUnit => "sunn",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisKind::ProductUnit => "product-unit",
            BasisKind::SigmoidUnit => "sigmoid-unit",
        })
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "punn" | "pu" | "product" | "product-unit" => Ok(BasisKind::ProductUnit),
            "sunn" | "su" | "sigmoid" | "sigmoid-unit" => Ok(BasisKind::SigmoidUnit),
            other => Err(Error::InvalidArgument(format!("unknown basis kind `{other}`"))),
        }
    }
}

/// One hidden neuron: sparse input weights, optional bias (sigmoid units
/// only) and its coefficients into the four outputs.
///
/// Absent input weights are exactly zero. Output coefficients equal to zero
/// are treated as absent links.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenNode {
    weights: Vec<(usize, f64)>,
    bias: Option<f64>,
    outputs: [f64; N_OUTPUTS],
}

impl HiddenNode {
    pub fn new(
        weights: impl IntoIterator<Item = (usize, f64)>,
        bias: Option<f64>,
        outputs: [f64; N_OUTPUTS],
    ) -> Self {
        let mut node = HiddenNode {
            weights: Vec::new(),
            bias,
            outputs,
        };
        for (i, w) in weights {
            node.set_weight(i, w);
        }
        node
    }

    /// Nonzero input weights sorted by input index.
    pub fn weights(&self) -> &[(usize, f64)] {
        &self.weights
    }

    pub fn weight(&self, input: usize) -> f64 {
        match self.weights.binary_search_by_key(&input, |&(i, _)| i) {
            Ok(pos) => self.weights[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Sets a weight; storing exactly zero removes the connection.
    pub fn set_weight(&mut self, input: usize, w: f64) {
        assert!(input < N_INPUTS, "input index {input} out of range");
        match self.weights.binary_search_by_key(&input, |&(i, _)| i) {
            Ok(pos) if w == 0.0 => {
                self.weights.remove(pos);
            }
            Ok(pos) => self.weights[pos].1 = w,
            Err(_) if w == 0.0 => {}
            Err(pos) => self.weights.insert(pos, (input, w)),
        }
    }

    pub fn weights_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().map(|(_, w)| w)
    }

    /// Drops connections whose weight has become exactly zero.
    pub fn prune_zero_weights(&mut self) {
        self.weights.retain(|&(_, w)| w != 0.0);
    }

    pub fn is_connected(&self, input: usize) -> bool {
        self.weights.binary_search_by_key(&input, |&(i, _)| i).is_ok()
    }

    pub fn n_connections(&self) -> usize {
        self.weights.len()
    }

    pub fn bias(&self) -> Option<f64> {
        self.bias
    }

    pub fn bias_mut(&mut self) -> Option<&mut f64> {
        self.bias.as_mut()
    }

    pub fn output_coeffs(&self) -> &[f64; N_OUTPUTS] {
        &self.outputs
    }

    pub fn output_coeffs_mut(&mut self) -> &mut [f64; N_OUTPUTS] {
        &mut self.outputs
    }

    fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .map(|&(_, w)| w)
            .chain(self.bias)
            .chain(self.outputs.iter().copied())
    }
}

/// Evaluates one hidden node on a normalized input vector.
pub fn eval_basis(node: &HiddenNode, basis: BasisKind, x: &[f64; N_INPUTS]) -> Result<f64> {
    eval_node(node, basis, x, 0)
}

fn eval_node(node: &HiddenNode, basis: BasisKind, x: &[f64; N_INPUTS], index: usize) -> Result<f64> {
    let value = match basis {
        BasisKind::ProductUnit => {
            let mut log_sum = 0.0;
            for &(i, w) in &node.weights {
                let xi = x[i];
                if !(xi > 0.0) {
                    return Err(Error::Domain(format!(
                        "product unit {index} needs X{} > 0, got {xi}",
                        i + 1
                    )));
                }
                log_sum += w * xi.ln();
            }
            log_sum.exp()
        }
        BasisKind::SigmoidUnit => {
            let z = node.bias.unwrap_or(0.0)
                + node.weights.iter().map(|&(i, w)| w * x[i]).sum::<f64>();
            logistic(z)
        }
    };
    if !value.is_finite() {
        return Err(Error::Numeric {
            node: index,
            message: format!("basis value is {value}"),
        });
    }
    Ok(value)
}

pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Multitask network with its normalization attached.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    basis: BasisKind,
    hidden: Vec<HiddenNode>,
    output_bias: [f64; N_OUTPUTS],
    normalization: NormalizationSpec,
}

impl NetworkModel {
    pub fn new(
        basis: BasisKind,
        hidden: Vec<HiddenNode>,
        output_bias: [f64; N_OUTPUTS],
        normalization: NormalizationSpec,
    ) -> Result<Self> {
        let model = NetworkModel {
            basis,
            hidden,
            output_bias,
            normalization,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() {
            return Err(Error::Validation("model has no hidden nodes".into()));
        }
        for (j, node) in self.hidden.iter().enumerate() {
            if node.weights.is_empty() {
                return Err(Error::Validation(format!("hidden node {j} has no inputs")));
            }
            match (self.basis, node.bias) {
                (BasisKind::ProductUnit, Some(_)) => {
                    return Err(Error::Validation(format!(
                        "product unit {j} must not carry a bias"
                    )))
                }
                (BasisKind::SigmoidUnit, None) => {
                    return Err(Error::Validation(format!("sigmoid unit {j} has no bias")))
                }
                _ => {}
            }
            if node.weights.iter().any(|&(i, _)| i >= N_INPUTS) {
                return Err(Error::Validation(format!("hidden node {j} input out of range")));
            }
            if !node.params().all(f64::is_finite) {
                return Err(Error::Validation(format!(
                    "hidden node {j} has a non-finite parameter"
                )));
            }
        }
        if !self.output_bias.iter().all(|b| b.is_finite()) {
            return Err(Error::Validation("non-finite output bias".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn hidden(&self) -> &[HiddenNode] {
        &self.hidden
    }

    pub(crate) fn hidden_mut(&mut self) -> &mut Vec<HiddenNode> {
        &mut self.hidden
    }

    pub fn n_hidden(&self) -> usize {
        self.hidden.len()
    }

    pub fn output_bias(&self) -> &[f64; N_OUTPUTS] {
        &self.output_bias
    }

    pub(crate) fn output_bias_mut(&mut self) -> &mut [f64; N_OUTPUTS] {
        &mut self.output_bias
    }

    /// `beta_kj`: coefficient from hidden node `j` into output `k`.
    pub fn output_coeff(&self, k: usize, j: usize) -> f64 {
        self.hidden[j].outputs[k]
    }

    pub fn normalization(&self) -> &NormalizationSpec {
        &self.normalization
    }

    pub fn with_normalization(mut self, normalization: NormalizationSpec) -> Self {
        self.normalization = normalization;
        self
    }

    /// Distinct inputs used by at least one hidden node, ascending.
    pub fn connected_inputs(&self) -> Vec<usize> {
        let mut used = [false; N_INPUTS];
        for node in &self.hidden {
            for &(i, _) in &node.weights {
                used[i] = true;
            }
        }
        (0..N_INPUTS).filter(|&i| used[i]).collect()
    }

    /// Hidden-layer activations for a normalized input.
    pub fn hidden_values(&self, z: &[f64; N_INPUTS]) -> Result<Vec<f64>> {
        self.hidden
            .iter()
            .enumerate()
            .map(|(j, node)| eval_node(node, self.basis, z, j))
            .collect()
    }

    /// Network outputs in normalized space.
    pub fn predict_normalized(&self, z: &[f64; N_INPUTS]) -> Result<[f64; N_OUTPUTS]> {
        let mut out = self.output_bias;
        for (j, node) in self.hidden.iter().enumerate() {
            let b = eval_node(node, self.basis, z, j)?;
            for (o, beta) in out.iter_mut().zip(node.outputs.iter()) {
                *o += beta * b;
            }
        }
        Ok(out)
    }

    /// Network outputs in native units for a native input vector.
    pub fn predict(&self, x: &[f64; N_INPUTS]) -> Result<[f64; N_OUTPUTS]> {
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("input X{} is not finite", i + 1)));
        }
        let z = self.normalization.normalize_inputs(x);
        let y = self.predict_normalized(&z)?;
        Ok(self.normalization.denormalize_outputs(&y))
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<[f64; N_OUTPUTS]>> {
        data.iter().map(|p| self.predict(&p.inputs)).collect()
    }
}

/// Nonzero input-to-hidden weights, hidden biases, nonzero hidden-to-output
/// coefficients, plus the four output biases.
pub fn count_links(model: &NetworkModel) -> usize {
    model
        .hidden
        .iter()
        .map(|n| {
            n.weights.len()
                + usize::from(n.bias.is_some())
                + n.outputs.iter().filter(|&&b| b != 0.0).count()
        })
        .sum::<usize>()
        + N_OUTPUTS
}

/// Native-unit MSE/SEP of a model on a dataset plus its link count.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub metrics: MetricReport,
    pub links: usize,
}

/// Scores a model on a dataset in native units; SEP is relative to the
/// dataset's own output means.
pub fn evaluate(model: &NetworkModel, data: &Dataset) -> Result<EvalReport> {
    let preds = model.predict_dataset(data)?;
    let targets = data.outputs();
    let means = data.output_means();
    let metrics = metrics::report(&preds, &targets, &means)?;
    Ok(EvalReport {
        metrics,
        links: count_links(model),
    })
}
