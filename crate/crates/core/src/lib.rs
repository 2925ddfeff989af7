//! Product-unit neural network regression for predicting motor acoustic
//! noise and vibration from supply harmonic content.
//!
//! The crate covers the whole workflow: a 40-input / 4-output feature
//! schema and CSV loader, min-max normalization, product-unit and sigmoid
//! network models, an evolutionary trainer, linear baselines, sensitivity
//! analysis and a synthetic design-of-experiments generator.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod schema;
pub mod dataset;
pub mod normalize;
pub mod netmodel;
pub mod metrics;
pub mod synth;
pub mod evolution;
pub mod baselines;
pub mod analysis;

pub use error::{Error, ErrorKind, Result};
pub use schema::{FeatureSchema, N_INPUTS, N_OUTPUTS};
pub use dataset::{Dataset, Pattern, RangeCheck};
pub use netmodel::{BasisKind, HiddenNode, NetworkModel};
pub use normalize::{MinMaxMap, NormalizationSpec};
