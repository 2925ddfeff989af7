//! Experimental design grid of the motor tests and a synthetic data
//! generator built on it.
//!
//! The design reproduces the three PWM techniques with their control
//! parameter grids, crossed with the modulation indices and pole counts.
//! Feature vectors are synthetic: each sub-harmonic is its typical share of
//! the fundamental times a per-point jitter. Labels come from a network
//! (by default the reference product-unit model) plus optional noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Dataset, Pattern};
use crate::error::{Error, Result};
use crate::netmodel::{reference_punn, NetworkModel};
use crate::schema::{
    WorkingRanges, CURRENT_HARMONIC_PERCENT, N_INPUTS, N_OUTPUTS, VOLTAGE_HARMONIC_PERCENT,
};

pub const GENERATOR_VERSION: &str = "punn-synth/1";

/// Feature seed used when none is given, and by the reference model's
/// default normalization.
pub const DEFAULT_FEATURE_SEED: u64 = 0;

/// Noise standard deviation as a fraction of each output's label range.
pub const DEFAULT_NOISE_FRACTION: f64 = 0.02;

pub const MODULATION_INDICES: [u32; 9] = [5, 7, 9, 11, 13, 15, 17, 19, 21];
pub const POLE_COUNTS: [u32; 4] = [2, 4, 6, 12];

/// SLPWM slope parameter `k`, 11 values per modulation index.
#[allow(clippy::approx_constant)]
const SLPWM_K: [(u32, [f64; 11]); 9] = [
    (5, [-0.74, -0.84, -0.94, -1.04, -1.14, -1.24, -1.34, -1.44, -1.54, -1.64, -1.74]),
    (7, [1.24, 1.34, 1.44, 1.54, 1.64, 1.74, 1.84, 1.94, 2.04, 2.14, 2.24]),
    (9, [-2.74, -2.64, -2.54, -2.44, -2.34, -2.24, -2.14, -2.04, -1.94, -1.84, -1.75]),
    (11, [2.25, 2.35, 2.45, 2.55, 2.65, 2.75, 2.85, 2.95, 3.05, 3.15, 3.24]),
    (13, [-3.74, -3.64, -3.54, -3.44, -3.34, -3.24, -3.14, -3.04, -2.94, -2.84, -2.75]),
    (15, [3.25, 3.35, 3.45, 3.55, 3.65, 3.75, 3.85, 3.95, 4.05, 4.15, 4.24]),
    (17, [-4.74, -4.64, -4.54, -4.44, -4.34, -4.24, -4.14, -4.04, -3.94, -3.84, -3.75]),
    (19, [4.25, 4.35, 4.45, 4.55, 4.65, 4.75, 4.85, 4.95, 5.05, 5.15, 5.24]),
    (21, [-5.74, -5.64, -5.54, -5.44, -5.34, -5.24, -5.14, -5.04, -4.94, -4.84, -4.75]),
];

/// HIPWM-FMTC carrier grid per modulation index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierGrid {
    pub m: u32,
    pub kc: (f64, f64),
    pub fc: (f64, f64),
    pub kc_step: f64,
    pub fc_step: f64,
    /// Number of tests for this modulation index in the design.
    pub tests: usize,
}

pub const CARRIER_GRIDS: [CarrierGrid; 9] = [
    CarrierGrid { m: 5, kc: (0.0, 10.0), fc: (5.0, 10.0), kc_step: 0.25, fc_step: 0.125, tests: 41 },
    CarrierGrid { m: 7, kc: (0.0, 14.0), fc: (7.0, 14.0), kc_step: 0.25, fc_step: 0.125, tests: 57 },
    CarrierGrid { m: 9, kc: (0.0, 18.0), fc: (9.0, 18.0), kc_step: 0.30, fc_step: 0.15, tests: 61 },
    CarrierGrid { m: 11, kc: (0.0, 22.0), fc: (11.0, 22.0), kc_step: 0.35, fc_step: 0.175, tests: 64 },
    CarrierGrid { m: 13, kc: (0.0, 26.0), fc: (13.0, 26.0), kc_step: 0.50, fc_step: 0.25, tests: 53 },
    CarrierGrid { m: 15, kc: (0.0, 30.0), fc: (15.0, 30.0), kc_step: 0.50, fc_step: 0.25, tests: 61 },
    CarrierGrid { m: 17, kc: (0.0, 34.0), fc: (17.0, 34.0), kc_step: 0.50, fc_step: 0.25, tests: 69 },
    CarrierGrid { m: 19, kc: (0.0, 38.0), fc: (19.0, 38.0), kc_step: 0.50, fc_step: 0.25, tests: 77 },
    CarrierGrid { m: 21, kc: (0.0, 42.0), fc: (21.0, 42.0), kc_step: 0.50, fc_step: 0.25, tests: 85 },
];

/// HIPWM-FMTC2 angle range in degrees, inclusive, 1 degree apart.
pub const ANGLE_RANGE_DEG: (u32, u32) = (17, 45);

const V50_BAND: (f64, f64) = (10.0, 240.0);
const I50_BAND: (f64, f64) = (0.04, 0.38);
const JITTER: (f64, f64) = (0.5, 1.5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Technique {
    Slpwm,
    HipwmFmtc,
    HipwmFmtc2,
}

impl Technique {
    pub fn name(self) -> &'static str {
        match self {
            Technique::Slpwm => "SLPWM",
            Technique::HipwmFmtc => "HIPWM-FMTC",
            Technique::HipwmFmtc2 => "HIPWM-FMTC2",
        }
    }

    fn id(self) -> u64 {
        match self {
            Technique::Slpwm => 1,
            Technique::HipwmFmtc => 2,
            Technique::HipwmFmtc2 => 3,
        }
    }
}

/// Technique-specific control parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Control {
    Slope { k: f64 },
    Carrier { kc: f64, fc: f64 },
    Angle { alpha_deg: f64 },
}

/// One motor test of the design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    pub technique: Technique,
    pub m: u32,
    pub p: u32,
    pub control: Control,
    /// Position of `control` within its per-M grid and the grid size.
    pub slot: (usize, usize),
}

impl DesignPoint {
    /// Relative position of the control setting within its grid, in [0, 1].
    pub fn control_position(&self) -> f64 {
        let (i, n) = self.slot;
        if n <= 1 {
            0.5
        } else {
            i as f64 / (n - 1) as f64
        }
    }

    fn key(&self) -> u64 {
        let mut h = mix(self.technique.id(), u64::from(self.m));
        h = mix(h, u64::from(self.p));
        mix(h, self.slot.0 as u64)
    }
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over a combined word
    let mut z = a
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .rotate_left(31)
        ^ b.wrapping_add(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn snap(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// Values from `lo` stepping by `step` strictly below `hi`, then `hi`.
fn inclusive_steps(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut values = Vec::new();
    let mut i = 0u32;
    loop {
        let v = snap(lo + f64::from(i) * step);
        if v >= hi - 1e-9 {
            break;
        }
        values.push(v);
        i += 1;
    }
    values.push(hi);
    values
}

/// `(k_c, f_c)` pairs for one modulation index: both axes enumerated with
/// inclusive endpoints, paired in order, capped at the design count.
pub fn carrier_pairs(grid: &CarrierGrid) -> Vec<(f64, f64)> {
    let kc = inclusive_steps(grid.kc.0, grid.kc.1, grid.kc_step);
    let fc = inclusive_steps(grid.fc.0, grid.fc.1, grid.fc_step);
    kc.into_iter().zip(fc).take(grid.tests).collect()
}

/// Full ordered design: SLPWM, then HIPWM-FMTC, then HIPWM-FMTC2; within a
/// technique by modulation index, control setting, then pole count.
pub fn enumerate_design() -> Vec<DesignPoint> {
    let mut points = Vec::with_capacity(3712);
    for (m, ks) in SLPWM_K.iter() {
        for (i, &k) in ks.iter().enumerate() {
            for &p in &POLE_COUNTS {
                points.push(DesignPoint {
                    technique: Technique::Slpwm,
                    m: *m,
                    p,
                    control: Control::Slope { k },
                    slot: (i, ks.len()),
                });
            }
        }
    }
    for grid in &CARRIER_GRIDS {
        let pairs = carrier_pairs(grid);
        for (i, &(kc, fc)) in pairs.iter().enumerate() {
            for &p in &POLE_COUNTS {
                points.push(DesignPoint {
                    technique: Technique::HipwmFmtc,
                    m: grid.m,
                    p,
                    control: Control::Carrier { kc, fc },
                    slot: (i, pairs.len()),
                });
            }
        }
    }
    let n_angles = (ANGLE_RANGE_DEG.1 - ANGLE_RANGE_DEG.0 + 1) as usize;
    for &m in &MODULATION_INDICES {
        for (i, alpha) in (ANGLE_RANGE_DEG.0..=ANGLE_RANGE_DEG.1).enumerate() {
            for &p in &POLE_COUNTS {
                points.push(DesignPoint {
                    technique: Technique::HipwmFmtc2,
                    m,
                    p,
                    control: Control::Angle {
                        alpha_deg: f64::from(alpha),
                    },
                    slot: (i, n_angles),
                });
            }
        }
    }
    points
}

/// Amplitude of a harmonic given the fundamental, its typical percentage of
/// the fundamental and a jitter factor.
pub fn harmonic_amplitude(fundamental: f64, percent: f64, jitter: f64) -> f64 {
    fundamental * percent / 100.0 * jitter
}

/// Fundamental voltage for a design point: one band per modulation index,
/// increasing with M, positioned inside the band by the control setting.
pub fn fundamental_voltage(point: &DesignPoint) -> f64 {
    let band = (point.m.saturating_sub(5) / 2) as f64;
    let pos = (band + 0.1 + 0.8 * point.control_position()) / MODULATION_INDICES.len() as f64;
    V50_BAND.0 + (V50_BAND.1 - V50_BAND.0) * pos
}

fn fundamental_current(v50: f64, p: u32) -> f64 {
    let t = (v50 - V50_BAND.0) / (V50_BAND.1 - V50_BAND.0);
    let pole_factor = 1.0 - 0.2 * (f64::from(p) - 2.0) / 10.0;
    I50_BAND.0 + (I50_BAND.1 - I50_BAND.0) * t * pole_factor
}

/// Synthetic 40-input feature vector in native units.
pub fn synth_features(point: &DesignPoint, seed: u64) -> [f64; N_INPUTS] {
    let ranges = WorkingRanges::measured();
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, point.key()));
    let mut jitter = || rng.random_range(JITTER.0..=JITTER.1);

    let mut x = [0.0; N_INPUTS];
    x[2] = f64::from(point.p);
    x[3] = f64::from(point.m);

    let v50 = fundamental_voltage(point);
    x[4] = v50;
    let mut v_sq = 0.0;
    for (k, &pct) in VOLTAGE_HARMONIC_PERCENT.iter().enumerate().skip(1) {
        let v = harmonic_amplitude(v50, pct, jitter());
        v_sq += v * v;
        x[4 + k] = v;
    }

    let i50 = fundamental_current(v50, point.p);
    x[21] = i50;
    let mut i_sq = 0.0;
    for (k, &pct) in CURRENT_HARMONIC_PERCENT.iter().enumerate().skip(1) {
        let i = harmonic_amplitude(i50, pct, jitter());
        i_sq += i * i;
        x[21 + k] = i;
    }

    x[0] = 100.0 * v_sq.sqrt() / v50;
    x[1] = 100.0 * i_sq.sqrt() / i50;

    for (i, v) in x.iter_mut().enumerate() {
        *v = ranges.clamp(i, *v);
    }
    x
}

/// Feature vectors for the whole design in enumeration order.
pub fn design_features(seed: u64) -> Vec<[f64; N_INPUTS]> {
    enumerate_design()
        .iter()
        .map(|p| synth_features(p, seed))
        .collect()
}

/// Where labels come from.
#[derive(Debug, Clone, Default)]
pub enum LabelSource {
    #[default]
    Reference,
    Model(Box<NetworkModel>),
}

/// Label noise specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    /// Standard deviation as a fraction of each output's clean label range.
    RangeFraction(f64),
    /// Absolute standard deviation per output, native units.
    Absolute([f64; N_OUTPUTS]),
}

impl Default for Noise {
    fn default() -> Self {
        Noise::RangeFraction(DEFAULT_NOISE_FRACTION)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SynthConfig {
    pub seed: u64,
    pub noise: Noise,
    pub labels: LabelSource,
    /// Keep only this many patterns, picked by a seeded shuffle of the design
    /// and kept in design order.
    pub sample: Option<usize>,
}

/// Result of [`generate`]: the dataset and the noise actually applied.
#[derive(Debug, Clone)]
pub struct Generated {
    pub dataset: Dataset,
    pub noise_sd: [f64; N_OUTPUTS],
}

/// Generates a labeled dataset over the experimental design.
pub fn generate(config: &SynthConfig) -> Result<Generated> {
    let reference;
    let model: &NetworkModel = match &config.labels {
        LabelSource::Reference => {
            reference = reference_punn();
            &reference
        }
        LabelSource::Model(m) => m,
    };

    let mut points = enumerate_design();
    if let Some(n) = config.sample {
        if n > points.len() {
            return Err(Error::InvalidArgument(format!(
                "sample size {n} exceeds the {} design points",
                points.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, 0x005A_3B1E));
        let mut order: Vec<usize> = (0..points.len()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        order.truncate(n);
        order.sort_unstable();
        points = order.into_iter().map(|i| points[i]).collect();
    }

    let mut patterns = Vec::with_capacity(points.len());
    for point in &points {
        let x = synth_features(point, config.seed);
        let y = model.predict(&x)?;
        patterns.push(Pattern::new(x, y));
    }

    let noise_sd = match config.noise {
        Noise::RangeFraction(f) => {
            if !(f >= 0.0 && f.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "noise fraction must be >= 0, got {f}"
                )));
            }
            let mut sd = [0.0; N_OUTPUTS];
            for (k, s) in sd.iter_mut().enumerate() {
                let (lo, hi) = patterns.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, p| {
                    (acc.0.min(p.outputs[k]), acc.1.max(p.outputs[k]))
                });
                *s = if patterns.is_empty() { 0.0 } else { f * (hi - lo) };
            }
            sd
        }
        Noise::Absolute(sd) => {
            if sd.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                return Err(Error::InvalidArgument("noise SDs must be >= 0".into()));
            }
            sd
        }
    };

    if noise_sd.iter().any(|&s| s > 0.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, 0x0A15E));
        let normals: Vec<Option<Normal<f64>>> = noise_sd
            .iter()
            .map(|&s| (s > 0.0).then(|| Normal::new(0.0, s).expect("finite sd")))
            .collect();
        for p in &mut patterns {
            for (y, dist) in p.outputs.iter_mut().zip(&normals) {
                if let Some(d) = dist {
                    *y += d.sample(&mut rng);
                }
            }
        }
    }

    let source = match config.labels {
        LabelSource::Reference => "reference-punn",
        LabelSource::Model(_) => "user-model",
    };
    let provenance = vec![
        format!(
            "generator={GENERATOR_VERSION} seed={} patterns={} labels={source}",
            config.seed,
            patterns.len()
        ),
        format!(
            "noise_sd={}",
            noise_sd
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
        "synthetic features: harmonic shares of the fundamental x per-point jitter, not measured data"
            .into(),
    ];

    Ok(Generated {
        dataset: Dataset::new(patterns).with_provenance(provenance),
        noise_sd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_counts() {
        let d = enumerate_design();
        assert_eq!(d.len(), 3712);
        let count = |t| d.iter().filter(|p| p.technique == t).count();
        assert_eq!(count(Technique::Slpwm), 396);
        assert_eq!(count(Technique::HipwmFmtc), 2272);
        assert_eq!(count(Technique::HipwmFmtc2), 1044);
        assert_eq!(9 * 11 * 4, 396);
        assert_eq!(29 * 9 * 4, 1044);
    }

    #[test]
    fn carrier_counts_match_design_tests() {
        let design = [41, 57, 61, 64, 53, 61, 69, 77, 85];
        for (grid, &tests) in CARRIER_GRIDS.iter().zip(&design) {
            let kc = inclusive_steps(grid.kc.0, grid.kc.1, grid.kc_step);
            let fc = inclusive_steps(grid.fc.0, grid.fc.1, grid.fc_step);
            // Inclusive stepping yields the design count on both axes, so
            // the cap never truncates.
            assert_eq!(kc.len(), tests, "k_c, M={}", grid.m);
            assert_eq!(fc.len(), tests, "f_c, M={}", grid.m);
            let pairs = carrier_pairs(grid);
            assert_eq!(pairs.len(), tests);
            assert_eq!(pairs[0], (grid.kc.0, grid.fc.0));
            assert_eq!(*pairs.last().unwrap(), (grid.kc.1, grid.fc.1));
        }
        assert_eq!(design.iter().sum::<usize>(), 568);
    }

    #[test]
    fn m11_grid_gets_endpoint_appended() {
        // 22 / 0.35 is not an integer: 63 stepped values plus the endpoint.
        let kc = inclusive_steps(0.0, 22.0, 0.35);
        assert_eq!(kc.len(), 64);
        assert!((kc[62] - 21.7).abs() < 1e-12);
        assert_eq!(kc[63], 22.0);
    }

    #[test]
    fn enumeration_is_stable() {
        assert_eq!(enumerate_design(), enumerate_design());
    }

    #[test]
    fn v250_share_of_fundamental() {
        let v = harmonic_amplitude(200.0, VOLTAGE_HARMONIC_PERCENT[1], 1.0);
        assert!((v - 16.38).abs() < 1e-12);
    }

    #[test]
    fn features_are_deterministic_and_in_range() {
        let ranges = WorkingRanges::measured();
        let design = enumerate_design();
        for point in design.iter().step_by(7) {
            let a = synth_features(point, 3);
            assert_eq!(a, synth_features(point, 3));
            assert_eq!(a[2], f64::from(point.p));
            assert_eq!(a[3], f64::from(point.m));
            for i in 0..N_INPUTS {
                assert!(ranges.contains(i, a[i]), "X{} = {}", i + 1, a[i]);
            }
        }
    }

    #[test]
    fn fundamental_increases_with_m() {
        let design = enumerate_design();
        for t in [Technique::Slpwm, Technique::HipwmFmtc, Technique::HipwmFmtc2] {
            let mut by_m: Vec<(u32, f64, f64)> = Vec::new();
            for &m in &MODULATION_INDICES {
                let v: Vec<f64> = design
                    .iter()
                    .filter(|p| p.technique == t && p.m == m)
                    .map(fundamental_voltage)
                    .collect();
                let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                by_m.push((m, lo, hi));
            }
            for w in by_m.windows(2) {
                assert!(w[0].2 < w[1].1, "{t:?}: M={} overlaps M={}", w[0].0, w[1].0);
            }
        }
    }

    #[test]
    fn jitter_stays_in_band() {
        let point = enumerate_design()[100];
        let x = synth_features(&point, 9);
        let v50 = x[4];
        for (k, &pct) in VOLTAGE_HARMONIC_PERCENT.iter().enumerate().skip(1) {
            let ratio = x[4 + k] / harmonic_amplitude(v50, pct, 1.0);
            assert!((0.5..=1.5).contains(&ratio));
        }
    }

    #[test]
    fn different_seeds_differ() {
        let point = enumerate_design()[0];
        assert_ne!(synth_features(&point, 1), synth_features(&point, 2));
    }

    #[test]
    fn noiseless_reference_labels_are_exact() {
        let g = generate(&SynthConfig {
            seed: 5,
            noise: Noise::RangeFraction(0.0),
            sample: Some(300),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(g.dataset.len(), 300);
        let reference = reference_punn();
        for p in &g.dataset {
            assert_eq!(reference.predict(&p.inputs).unwrap(), p.outputs);
        }
    }

    #[test]
    fn default_noise_is_two_percent_of_range() {
        let clean = generate(&SynthConfig {
            seed: 1,
            noise: Noise::RangeFraction(0.0),
            sample: Some(500),
            ..Default::default()
        })
        .unwrap();
        let noisy = generate(&SynthConfig {
            seed: 1,
            sample: Some(500),
            ..Default::default()
        })
        .unwrap();
        for k in 0..N_OUTPUTS {
            let ys: Vec<f64> = clean.dataset.iter().map(|p| p.outputs[k]).collect();
            let range = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - ys.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!((noisy.noise_sd[k] - 0.02 * range).abs() <= 1e-12 * range);
        }
        assert_ne!(clean.dataset, noisy.dataset);
        assert!(noisy.dataset.provenance()[0].contains("punn-synth/1"));
    }
}
