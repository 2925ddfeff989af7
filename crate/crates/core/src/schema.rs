//! Input/output nomenclature, physical units and working ranges of the
//! motor test patterns.

/// Number of network inputs per pattern.
pub const N_INPUTS: usize = 40;
/// Number of predicted acoustic outputs per pattern.
pub const N_OUTPUTS: usize = 4;

/// Physical unit of a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Percent,
    PoleCount,
    ModulationIndex,
    Volts,
    Amperes,
    Decibels,
    Sone,
    Asper,
    Acum,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Percent => "%",
            Unit::PoleCount => "p",
            Unit::ModulationIndex => "M",
            Unit::Volts => "V",
            Unit::Amperes => "A",
            Unit::Decibels => "dB",
            Unit::Sone => "sone",
            Unit::Asper => "asper",
            Unit::Acum => "acum",
        }
    }
}

/// Harmonic frequencies (Hz) of the voltage spectrum used as inputs X5..X21.
pub const VOLTAGE_HARMONICS: [u32; 17] = [
    50, 250, 350, 550, 650, 850, 950, 1150, 1250, 1450, 1550, 1750, 1850, 2050, 2150, 2350, 2450,
];

/// Harmonic frequencies (Hz) of the current spectrum used as inputs X22..X40.
pub const CURRENT_HARMONICS: [u32; 19] = [
    50, 100, 200, 250, 350, 550, 650, 850, 950, 1150, 1250, 1450, 1550, 1750, 1850, 2050, 2150,
    2350, 2450,
];

/// Voltage sub-harmonic level as a percentage of the 50 Hz fundamental,
/// aligned with `VOLTAGE_HARMONICS` (the fundamental itself is 100).
pub const VOLTAGE_HARMONIC_PERCENT: [f64; 17] = [
    100.00, 8.19, 8.05, 8.72, 11.43, 11.50, 9.83, 9.34, 11.05, 10.14, 8.59, 8.02, 8.36, 7.73, 7.40,
    6.77, 7.00,
];

/// Current sub-harmonic level as a percentage of the 50 Hz fundamental,
/// aligned with `CURRENT_HARMONICS`.
pub const CURRENT_HARMONIC_PERCENT: [f64; 19] = [
    100.00, 2.87, 2.25, 19.35, 14.19, 10.55, 11.48, 9.04, 6.88, 5.49, 5.90, 4.70, 3.68, 3.05, 2.93,
    2.47, 2.17, 1.86, 1.74,
];

const ALIASES: [&str; N_INPUTS] = [
    "Vthd", "Ithd", "p", "M", "V50", "V250", "V350", "V550", "V650", "V850", "V950", "V1150",
    "V1250", "V1450", "V1550", "V1750", "V1850", "V2050", "V2150", "V2350", "V2450", "I50", "I100",
    "I200", "I250", "I350", "I550", "I650", "I850", "I950", "I1150", "I1250", "I1450", "I1550",
    "I1750", "I1850", "I2050", "I2150", "I2350", "I2450",
];

const CANONICAL: [&str; N_INPUTS] = [
    "X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "X9", "X10", "X11", "X12", "X13", "X14", "X15",
    "X16", "X17", "X18", "X19", "X20", "X21", "X22", "X23", "X24", "X25", "X26", "X27", "X28",
    "X29", "X30", "X31", "X32", "X33", "X34", "X35", "X36", "X37", "X38", "X39", "X40",
];

const OUTPUT_NAMES: [&str; N_OUTPUTS] = ["LAEQ", "L", "R", "SA"];

/// Measured working range (min, max) of every input in native units.
const WORKING_RANGES: [(f64, f64); N_INPUTS] = [
    (6.70, 229.60),
    (1.80, 411.10),
    (2.00, 12.00),
    (5.00, 21.00),
    (0.32, 244.60),
    (0.02, 121.40),
    (0.02, 95.20),
    (0.03, 87.60),
    (0.01, 99.10),
    (0.02, 96.50),
    (0.02, 92.70),
    (0.02, 82.90),
    (0.06, 80.30),
    (0.03, 86.30),
    (0.03, 69.40),
    (2.0e-3, 72.70),
    (1.0e-3, 78.90),
    (3.0e-3, 67.00),
    (0.01, 65.10),
    (0.01, 68.20),
    (8.0e-3, 68.30),
    (0.04, 0.38),
    (4.4e-5, 0.05),
    (4.4e-5, 0.02),
    (7.0e-5, 0.50),
    (1.2e-4, 0.30),
    (1.6e-4, 0.17),
    (5.1e-5, 0.17),
    (5.3e-5, 0.12),
    (4.3e-5, 0.11),
    (4.6e-5, 0.07),
    (2.1e-5, 0.07),
    (4.0e-5, 0.07),
    (3.6e-5, 0.05),
    (2.6e-5, 0.05),
    (2.7e-5, 0.05),
    (2.3e-5, 0.04),
    (2.7e-5, 0.03),
    (3.7e-5, 0.03),
    (1.7e-5, 0.03),
];

/// Per-variable (min, max) bounds in native units.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingRanges {
    bounds: [(f64, f64); N_INPUTS],
}

impl WorkingRanges {
    pub fn measured() -> Self {
        WorkingRanges {
            bounds: WORKING_RANGES,
        }
    }

    pub fn get(&self, input: usize) -> (f64, f64) {
        self.bounds[input]
    }

    pub fn min(&self, input: usize) -> f64 {
        self.bounds[input].0
    }

    pub fn max(&self, input: usize) -> f64 {
        self.bounds[input].1
    }

    pub fn midpoint(&self, input: usize) -> f64 {
        let (lo, hi) = self.bounds[input];
        0.5 * (lo + hi)
    }

    pub fn contains(&self, input: usize, value: f64) -> bool {
        let (lo, hi) = self.bounds[input];
        value >= lo && value <= hi
    }

    pub fn clamp(&self, input: usize, value: f64) -> f64 {
        let (lo, hi) = self.bounds[input];
        value.clamp(lo, hi)
    }

    /// First input (if any) whose value falls outside its range.
    pub fn first_violation(&self, inputs: &[f64; N_INPUTS]) -> Option<usize> {
        (0..N_INPUTS).find(|&i| !self.contains(i, inputs[i]))
    }
}

impl Default for WorkingRanges {
    fn default() -> Self {
        Self::measured()
    }
}

/// Names and units of the 40 inputs and 4 outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    ranges: WorkingRanges,
}

impl FeatureSchema {
    pub fn standard() -> Self {
        FeatureSchema {
            ranges: WorkingRanges::measured(),
        }
    }

    pub fn n_inputs(&self) -> usize {
        N_INPUTS
    }

    pub fn n_outputs(&self) -> usize {
        N_OUTPUTS
    }

    /// Canonical identifier `X1..X40`.
    pub fn canonical(&self, input: usize) -> &'static str {
        CANONICAL[input]
    }

    /// Semantic alias (`Vthd`, `p`, `V50`, ...).
    pub fn alias(&self, input: usize) -> &'static str {
        ALIASES[input]
    }

    pub fn output_name(&self, output: usize) -> &'static str {
        OUTPUT_NAMES[output]
    }

    pub fn output_names(&self) -> &'static [&'static str; N_OUTPUTS] {
        &OUTPUT_NAMES
    }

    pub fn input_unit(&self, input: usize) -> Unit {
        match input {
            0 | 1 => Unit::Percent,
            2 => Unit::PoleCount,
            3 => Unit::ModulationIndex,
            4..=20 => Unit::Volts,
            _ => Unit::Amperes,
        }
    }

    pub fn output_unit(&self, output: usize) -> Unit {
        [Unit::Decibels, Unit::Sone, Unit::Asper, Unit::Acum][output]
    }

    pub fn ranges(&self) -> &WorkingRanges {
        &self.ranges
    }

    /// Resolves a column or variable name (canonical or alias) to an input index.
    pub fn input_index(&self, name: &str) -> Option<usize> {
        let name = name.trim();
        CANONICAL
            .iter()
            .position(|c| c.eq_ignore_ascii_case(name))
            .or_else(|| ALIASES.iter().position(|a| *a == name))
    }

    pub fn output_index(&self, name: &str) -> Option<usize> {
        let name = name.trim();
        OUTPUT_NAMES
            .iter()
            .position(|o| o.eq_ignore_ascii_case(name))
    }
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::standard()
    }
}
