#![allow(dead_code)]

use punn_core::normalize::{fit_normalizer, MinMaxMap, NormalizationSpec};
use punn_core::synth::design_features;
use punn_core::{BasisKind, Dataset, HiddenNode, NetworkModel, Pattern, N_INPUTS};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `n` design feature vectors picked by a seeded sample.
pub fn sampled_features(n: usize, seed: u64) -> Vec<[f64; N_INPUTS]> {
    let feats = design_features(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, feats.len(), n).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| feats[i]).collect()
}

/// A hidden one-node product-unit network over three inputs, with input
/// normalization fitted on `features` and identity output scaling.
pub fn hidden_punn(features: &[[f64; N_INPUTS]]) -> NetworkModel {
    let dummy: Dataset = features
        .iter()
        .map(|x| Pattern::new(*x, [0.0, 1.0, 0.0, 1.0]))
        .collect();
    let base = fit_normalizer(&dummy, (0.1, 1.1), (0.1, 0.9)).unwrap();
    let id = MinMaxMap::new(0.0, 1.0, 0.0, 1.0).unwrap();
    let spec = NormalizationSpec::from_maps(*base.input_maps(), [id; 4]).unwrap();
    let node = HiddenNode::new([(2, -0.8), (4, 0.5), (20, 0.3)], None, [0.6, -0.4, 0.3, 0.5]);
    NetworkModel::new(BasisKind::ProductUnit, vec![node], [0.2, 0.7, 0.1, 0.3], spec).unwrap()
}

/// 500 zero-noise patterns labeled by [`hidden_punn`].
pub fn oracle_dataset() -> Dataset {
    let x = sampled_features(500, 77);
    let target = hidden_punn(&x);
    x.iter()
        .map(|x| Pattern::new(*x, target.predict(x).unwrap()))
        .collect()
}
