//! Min-max scaling between native units and the network's working space.

use crate::dataset::{Dataset, Pattern};
use crate::error::{Error, Result};
use crate::schema::{FeatureSchema, N_INPUTS, N_OUTPUTS};

/// Default target interval for inputs; strictly positive so product units
/// can raise inputs to arbitrary real powers.
pub const DEFAULT_INPUT_INTERVAL: (f64, f64) = (0.1, 1.1);
/// Default target interval for outputs.
pub const DEFAULT_OUTPUT_INTERVAL: (f64, f64) = (0.1, 0.9);

/// Affine map sending `[native_min, native_max]` onto `[lo, hi]`.
///
/// A degenerate column (`native_min == native_max`) maps every value to the
/// interval midpoint and inverts to the constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMaxMap {
    pub native_min: f64,
    pub native_max: f64,
    pub lo: f64,
    pub hi: f64,
}

impl MinMaxMap {
    pub fn new(native_min: f64, native_max: f64, lo: f64, hi: f64) -> Result<Self> {
        let all_finite = [native_min, native_max, lo, hi].iter().all(|v| v.is_finite());
        if !all_finite || native_min > native_max || lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "bad min-max map [{native_min}, {native_max}] -> [{lo}, {hi}]"
            )));
        }
        Ok(MinMaxMap {
            native_min,
            native_max,
            lo,
            hi,
        })
    }

    pub fn is_constant(&self) -> bool {
        self.native_max == self.native_min
    }

    /// d(normalized)/d(native); zero for a constant column.
    pub fn scale(&self) -> f64 {
        if self.is_constant() {
            0.0
        } else {
            (self.hi - self.lo) / (self.native_max - self.native_min)
        }
    }

    pub fn forward(&self, v: f64) -> f64 {
        if self.is_constant() {
            0.5 * (self.lo + self.hi)
        } else {
            self.lo + (v - self.native_min) * (self.hi - self.lo) / (self.native_max - self.native_min)
        }
    }

    pub fn inverse(&self, u: f64) -> f64 {
        if self.is_constant() {
            self.native_min
        } else {
            self.native_min + (u - self.lo) * (self.native_max - self.native_min) / (self.hi - self.lo)
        }
    }
}

/// Per-variable scaling of all inputs and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationSpec {
    inputs: [MinMaxMap; N_INPUTS],
    outputs: [MinMaxMap; N_OUTPUTS],
}

impl NormalizationSpec {
    pub fn from_maps(inputs: [MinMaxMap; N_INPUTS], outputs: [MinMaxMap; N_OUTPUTS]) -> Result<Self> {
        if let Some(i) = inputs.iter().position(|m| m.lo <= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "input X{} target interval must be strictly positive, got lo = {}",
                i + 1,
                inputs[i].lo
            )));
        }
        Ok(NormalizationSpec { inputs, outputs })
    }

    /// Maps native working ranges onto the given intervals, bypassing data.
    pub fn from_working_ranges(
        schema: &FeatureSchema,
        output_ranges: [(f64, f64); N_OUTPUTS],
        input_interval: (f64, f64),
        output_interval: (f64, f64),
    ) -> Result<Self> {
        let mut inputs = [MinMaxMap::new(0.0, 1.0, input_interval.0, input_interval.1)?; N_INPUTS];
        for (i, m) in inputs.iter_mut().enumerate() {
            let (lo, hi) = schema.ranges().get(i);
            *m = MinMaxMap::new(lo, hi, input_interval.0, input_interval.1)?;
        }
        let mut outputs = [inputs[0]; N_OUTPUTS];
        for (k, m) in outputs.iter_mut().enumerate() {
            let (lo, hi) = output_ranges[k];
            *m = MinMaxMap::new(lo, hi, output_interval.0, output_interval.1)?;
        }
        Self::from_maps(inputs, outputs)
    }

    pub fn input_map(&self, i: usize) -> &MinMaxMap {
        &self.inputs[i]
    }

    pub fn output_map(&self, k: usize) -> &MinMaxMap {
        &self.outputs[k]
    }

    pub fn input_maps(&self) -> &[MinMaxMap; N_INPUTS] {
        &self.inputs
    }

    pub fn output_maps(&self) -> &[MinMaxMap; N_OUTPUTS] {
        &self.outputs
    }

    pub fn normalize_inputs(&self, x: &[f64; N_INPUTS]) -> [f64; N_INPUTS] {
        std::array::from_fn(|i| self.inputs[i].forward(x[i]))
    }

    /// Like [`normalize_inputs`](Self::normalize_inputs) but rejects any
    /// normalized value that is not strictly positive.
    pub fn normalize_inputs_checked(&self, x: &[f64; N_INPUTS]) -> Result<[f64; N_INPUTS]> {
        let z = self.normalize_inputs(x);
        if let Some(i) = z.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Domain(format!(
                "normalized input X{} = {} is not strictly positive (native {})",
                i + 1,
                z[i],
                x[i]
            )));
        }
        Ok(z)
    }

    pub fn denormalize_inputs(&self, z: &[f64; N_INPUTS]) -> [f64; N_INPUTS] {
        std::array::from_fn(|i| self.inputs[i].inverse(z[i]))
    }

    pub fn normalize_outputs(&self, y: &[f64; N_OUTPUTS]) -> [f64; N_OUTPUTS] {
        std::array::from_fn(|k| self.outputs[k].forward(y[k]))
    }

    pub fn denormalize_outputs(&self, z: &[f64; N_OUTPUTS]) -> [f64; N_OUTPUTS] {
        std::array::from_fn(|k| self.outputs[k].inverse(z[k]))
    }

    /// Maps every pattern of `data` into normalized space.
    pub fn normalize_dataset(&self, data: &Dataset) -> Dataset {
        data.iter()
            .map(|p| Pattern::new(self.normalize_inputs(&p.inputs), self.normalize_outputs(&p.outputs)))
            .collect()
    }
}

fn column_bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Fits per-variable min-max maps on the training set only.
pub fn fit_normalizer(
    train: &Dataset,
    input_interval: (f64, f64),
    output_interval: (f64, f64),
) -> Result<NormalizationSpec> {
    if train.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot fit a normalizer on an empty dataset".into(),
        ));
    }
    if !(input_interval.0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "input interval lower bound must be > 0 for product units, got {}",
            input_interval.0
        )));
    }
    for (what, (lo, hi)) in [("input", input_interval), ("output", output_interval)] {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{what} interval must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
    }

    let patterns = train.patterns();
    let mut inputs = [MinMaxMap::new(0.0, 0.0, input_interval.0, input_interval.1)?; N_INPUTS];
    for (i, m) in inputs.iter_mut().enumerate() {
        let (lo, hi) = column_bounds(patterns.iter().map(|p| p.inputs[i]));
        *m = MinMaxMap::new(lo, hi, input_interval.0, input_interval.1)?;
    }
    let mut outputs = [MinMaxMap::new(0.0, 0.0, output_interval.0, output_interval.1)?; N_OUTPUTS];
    for (k, m) in outputs.iter_mut().enumerate() {
        let (lo, hi) = column_bounds(patterns.iter().map(|p| p.outputs[k]));
        *m = MinMaxMap::new(lo, hi, output_interval.0, output_interval.1)?;
    }
    NormalizationSpec::from_maps(inputs, outputs)
}
