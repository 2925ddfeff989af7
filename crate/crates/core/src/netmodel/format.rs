//! Versioned text format for trained models.
//!
//! The format is pretty-printed JSON tagged `"format": "punn-model/1"`.
//! Floating-point values are written with shortest round-trip formatting,
//! so a serialized model predicts bit-for-bit like the original. Leading
//! lines starting with `#` are treated as a provenance header and skipped.

use serde::{Deserialize, Serialize};

use super::{BasisKind, HiddenNode, NetworkModel};
use crate::error::{Error, Result};
use crate::normalize::{MinMaxMap, NormalizationSpec};
use crate::schema::{FeatureSchema, N_INPUTS, N_OUTPUTS};

pub const FORMAT_TAG: &str = "punn-model/1";
const FORMAT_FAMILY: &str = "punn-model/";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    basis: String,
    hidden: Vec<NodeDoc>,
    output_bias: Vec<f64>,
    normalization: NormalizationDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    weights: Vec<WeightDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<f64>,
    outputs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightDoc {
    input: String,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalizationDoc {
    inputs: Vec<MapDoc>,
    outputs: Vec<MapDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    name: String,
    native_min: f64,
    native_max: f64,
    lo: f64,
    hi: f64,
}

impl MapDoc {
    fn from_map(name: &str, m: &MinMaxMap) -> Self {
        MapDoc {
            name: name.to_string(),
            native_min: m.native_min,
            native_max: m.native_max,
            lo: m.lo,
            hi: m.hi,
        }
    }

    fn to_map(&self) -> Result<MinMaxMap> {
        MinMaxMap::new(self.native_min, self.native_max, self.lo, self.hi)
            .map_err(|e| Error::ModelFormat(format!("normalization `{}`: {e}", self.name)))
    }
}

/// Renders a model in the versioned text format.
pub fn serialize(model: &NetworkModel) -> String {
    let schema = FeatureSchema::standard();
    let doc = ModelDoc {
        format: FORMAT_TAG.to_string(),
        basis: model.basis().to_string(),
        hidden: model
            .hidden()
            .iter()
            .map(|n| NodeDoc {
                weights: n
                    .weights()
                    .iter()
                    .map(|&(i, w)| WeightDoc {
                        input: schema.canonical(i).to_string(),
                        weight: w,
                    })
                    .collect(),
                bias: n.bias(),
                outputs: n.output_coeffs().to_vec(),
            })
            .collect(),
        output_bias: model.output_bias().to_vec(),
        normalization: NormalizationDoc {
            inputs: model
                .normalization()
                .input_maps()
                .iter()
                .enumerate()
                .map(|(i, m)| MapDoc::from_map(schema.canonical(i), m))
                .collect(),
            outputs: model
                .normalization()
                .output_maps()
                .iter()
                .enumerate()
                .map(|(k, m)| MapDoc::from_map(schema.output_name(k), m))
                .collect(),
        },
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("model document serializes");
    text.push('\n');
    text
}

fn strip_header(text: &str) -> &str {
    let mut rest = text;
    while rest.starts_with('#') {
        rest = rest.find('\n').map_or("", |e| &rest[e + 1..]);
    }
    rest
}

fn fixed<const N: usize>(values: &[f64], what: &str) -> Result<[f64; N]> {
    values.try_into().map_err(|_| {
        Error::ModelFormat(format!("{what}: expected {N} values, found {}", values.len()))
    })
}

/// Parses a model written by [`serialize`].
pub fn deserialize(text: &str) -> Result<NetworkModel> {
    let body = strip_header(text);
    let raw: serde_json::Value =
        serde_json::from_str(body).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let tag = raw
        .get("format")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::ModelFormat("missing `format` tag".into()))?;
    if tag != FORMAT_TAG {
        return Err(if tag.starts_with(FORMAT_FAMILY) {
            Error::UnknownVersion(tag.to_string())
        } else {
            Error::ModelFormat(format!("not a model file (format `{tag}`)"))
        });
    }
    let doc: ModelDoc =
        serde_json::from_value(raw).map_err(|e| Error::ModelFormat(e.to_string()))?;

    let basis: BasisKind = doc
        .basis
        .parse()
        .map_err(|_| Error::ModelFormat(format!("unknown basis `{}`", doc.basis)))?;

    let schema = FeatureSchema::standard();
    let mut hidden = Vec::with_capacity(doc.hidden.len());
    for (j, node) in doc.hidden.iter().enumerate() {
        let mut weights = Vec::with_capacity(node.weights.len());
        for w in &node.weights {
            let i = schema.input_index(&w.input).ok_or_else(|| {
                Error::ModelFormat(format!("hidden node {j}: unknown input `{}`", w.input))
            })?;
            if !w.weight.is_finite() || w.weight == 0.0 {
                return Err(Error::ModelFormat(format!(
                    "hidden node {j}: weight of {} must be finite and nonzero",
                    w.input
                )));
            }
            if weights.iter().any(|&(k, _)| k == i) {
                return Err(Error::ModelFormat(format!(
                    "hidden node {j}: duplicate input {}",
                    w.input
                )));
            }
            weights.push((i, w.weight));
        }
        let outputs = fixed::<N_OUTPUTS>(&node.outputs, &format!("hidden node {j} outputs"))?;
        hidden.push(HiddenNode::new(weights, node.bias, outputs));
    }

    let output_bias = fixed::<N_OUTPUTS>(&doc.output_bias, "output_bias")?;

    if doc.normalization.inputs.len() != N_INPUTS || doc.normalization.outputs.len() != N_OUTPUTS {
        return Err(Error::ModelFormat(format!(
            "normalization must list {N_INPUTS} inputs and {N_OUTPUTS} outputs"
        )));
    }
    let mut in_maps = Vec::with_capacity(N_INPUTS);
    for (i, m) in doc.normalization.inputs.iter().enumerate() {
        if schema.input_index(&m.name) != Some(i) {
            return Err(Error::ModelFormat(format!(
                "normalization input {} is named `{}`",
                i + 1,
                m.name
            )));
        }
        in_maps.push(m.to_map()?);
    }
    let out_maps: Vec<MinMaxMap> = doc
        .normalization
        .outputs
        .iter()
        .map(MapDoc::to_map)
        .collect::<Result<_>>()?;
    let spec = NormalizationSpec::from_maps(
        in_maps.try_into().expect("length checked"),
        out_maps.try_into().expect("length checked"),
    )
    .map_err(|e| Error::ModelFormat(e.to_string()))?;

    NetworkModel::new(basis, hidden, output_bias, spec).map_err(|e| Error::ModelFormat(e.to_string()))
}
