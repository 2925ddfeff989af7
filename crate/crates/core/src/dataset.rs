//! Pattern storage, CSV ingestion and train/test partitioning.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schema::{FeatureSchema, N_INPUTS, N_OUTPUTS};

/// One motor test: 40 inputs and the 4 acoustic outputs, native units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pattern {
    pub inputs: [f64; N_INPUTS],
    pub outputs: [f64; N_OUTPUTS],
}

impl Pattern {
    pub fn new(inputs: [f64; N_INPUTS], outputs: [f64; N_OUTPUTS]) -> Self {
        Pattern { inputs, outputs }
    }

    pub fn is_finite(&self) -> bool {
        self.inputs.iter().chain(self.outputs.iter()).all(|v| v.is_finite())
    }
}

/// How loaded inputs are checked against the measured working ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RangeCheck {
    Off,
    #[default]
    Warn,
    Fail,
}

/// Ordered collection of patterns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    patterns: Vec<Pattern>,
    provenance: Vec<String>,
}

impl Dataset {
    pub fn new(patterns: Vec<Pattern>) -> Self {
        Dataset {
            patterns,
            provenance: Vec::new(),
        }
    }

    pub fn with_provenance(mut self, lines: Vec<String>) -> Self {
        self.provenance = lines;
        self
    }

    /// Comment lines (without the leading `#`) carried alongside the data.
    pub fn provenance(&self) -> &[String] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Pattern> {
        self.patterns.iter()
    }

    pub fn inputs(&self) -> Vec<[f64; N_INPUTS]> {
        self.patterns.iter().map(|p| p.inputs).collect()
    }

    pub fn outputs(&self) -> Vec<[f64; N_OUTPUTS]> {
        self.patterns.iter().map(|p| p.outputs).collect()
    }

    /// Subset in the order given by `indices`.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            patterns: indices.iter().map(|&i| self.patterns[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn input_means(&self) -> [f64; N_INPUTS] {
        let mut means = [0.0; N_INPUTS];
        if self.is_empty() {
            return means;
        }
        for p in &self.patterns {
            for (m, v) in means.iter_mut().zip(p.inputs.iter()) {
                *m += v;
            }
        }
        let n = self.len() as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    pub fn input_medians(&self) -> [f64; N_INPUTS] {
        let mut medians = [0.0; N_INPUTS];
        if self.is_empty() {
            return medians;
        }
        let mut column = Vec::with_capacity(self.len());
        for (i, med) in medians.iter_mut().enumerate() {
            column.clear();
            column.extend(self.patterns.iter().map(|p| p.inputs[i]));
            column.sort_by(f64::total_cmp);
            let n = column.len();
            *med = if n % 2 == 1 {
                column[n / 2]
            } else {
                0.5 * (column[n / 2 - 1] + column[n / 2])
            };
        }
        medians
    }

    pub fn output_means(&self) -> [f64; N_OUTPUTS] {
        let mut means = [0.0; N_OUTPUTS];
        if self.is_empty() {
            return means;
        }
        for p in &self.patterns {
            for (m, v) in means.iter_mut().zip(p.outputs.iter()) {
                *m += v;
            }
        }
        let n = self.len() as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Checks every input against the measured working ranges.
    pub fn check_ranges(&self, schema: &FeatureSchema, mode: RangeCheck) -> Result<usize> {
        if mode == RangeCheck::Off {
            return Ok(0);
        }
        let mut violations = 0;
        for (row, p) in self.patterns.iter().enumerate() {
            if let Some(i) = schema.ranges().first_violation(&p.inputs) {
                violations += 1;
                let (lo, hi) = schema.ranges().get(i);
                let msg = format!(
                    "row {}: {} = {} outside working range [{lo}, {hi}]",
                    row + 1,
                    schema.alias(i),
                    p.inputs[i]
                );
                match mode {
                    RangeCheck::Fail => return Err(Error::Validation(msg)),
                    _ => log::warn!("{msg}"),
                }
            }
        }
        Ok(violations)
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Pattern;
    type IntoIter = std::slice::Iter<'a, Pattern>;

    fn into_iter(self) -> Self::IntoIter {
        self.patterns.iter()
    }
}

impl FromIterator<Pattern> for Dataset {
    fn from_iter<T: IntoIterator<Item = Pattern>>(iter: T) -> Self {
        Dataset::new(iter.into_iter().collect())
    }
}

/// Column layout resolved from a CSV header.
struct ColumnMap {
    inputs: [usize; N_INPUTS],
    outputs: Option<[usize; N_OUTPUTS]>,
    names: Vec<String>,
}

fn resolve_header(
    header: &csv::StringRecord,
    schema: &FeatureSchema,
    require_outputs: bool,
) -> Result<ColumnMap> {
    let mut inputs = [usize::MAX; N_INPUTS];
    let mut outputs = [usize::MAX; N_OUTPUTS];
    let names: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();

    for (col, name) in names.iter().enumerate() {
        if let Some(i) = schema.input_index(name) {
            if inputs[i] != usize::MAX {
                return Err(Error::Schema {
                    column: name.clone(),
                    message: "duplicate column".into(),
                });
            }
            inputs[i] = col;
        } else if let Some(k) = schema.output_index(name) {
            if outputs[k] != usize::MAX {
                return Err(Error::Schema {
                    column: name.clone(),
                    message: "duplicate column".into(),
                });
            }
            outputs[k] = col;
        } else {
            return Err(Error::Schema {
                column: name.clone(),
                message: "unexpected column".into(),
            });
        }
    }

    if let Some(i) = inputs.iter().position(|&c| c == usize::MAX) {
        return Err(Error::Schema {
            column: schema.alias(i).to_string(),
            message: format!("missing input column ({})", schema.canonical(i)),
        });
    }

    let n_present = outputs.iter().filter(|&&c| c != usize::MAX).count();
    let outputs = if n_present == N_OUTPUTS {
        Some(outputs)
    } else if n_present == 0 && !require_outputs {
        None
    } else {
        let k = outputs.iter().position(|&c| c == usize::MAX).unwrap();
        return Err(Error::Schema {
            column: schema.output_name(k).to_string(),
            message: "missing output column".into(),
        });
    };

    Ok(ColumnMap {
        inputs,
        outputs,
        names,
    })
}

fn parse_cell(record: &csv::StringRecord, col: usize, row: usize, names: &[String]) -> Result<f64> {
    let raw = record.get(col).unwrap_or("").trim();
    let value: f64 = raw.parse().map_err(|_| Error::Parse {
        row,
        column: names[col].clone(),
        value: raw.to_string(),
    })?;
    if !value.is_finite() {
        return Err(Error::Validation(format!(
            "row {row}, column `{}`: non-finite value `{raw}`",
            names[col]
        )));
    }
    Ok(value)
}

fn split_provenance(text: &str) -> (Vec<String>, &str) {
    let mut provenance = Vec::new();
    let mut rest = text;
    while let Some(line) = rest.strip_prefix('#') {
        let end = line.find('\n').map_or(line.len(), |e| e + 1);
        provenance.push(line[..end].trim().to_string());
        rest = &line[end..];
    }
    (provenance, rest)
}

struct Parsed {
    rows: Vec<([f64; N_INPUTS], Option<[f64; N_OUTPUTS]>)>,
    provenance: Vec<String>,
}

fn parse_csv(text: &str, schema: &FeatureSchema, require_outputs: bool) -> Result<Parsed> {
    let (provenance, body) = split_provenance(text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());

    let header = reader.headers()?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::Schema {
            column: String::new(),
            message: "missing header row".into(),
        });
    }
    let map = resolve_header(&header, schema, require_outputs)?;

    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        // Data rows are numbered from 1, excluding the header.
        let row = r + 1;
        let mut inputs = [0.0; N_INPUTS];
        for (i, &col) in map.inputs.iter().enumerate() {
            inputs[i] = parse_cell(&record, col, row, &map.names)?;
        }
        let outputs = match map.outputs {
            Some(cols) => {
                let mut out = [0.0; N_OUTPUTS];
                for (k, &col) in cols.iter().enumerate() {
                    out[k] = parse_cell(&record, col, row, &map.names)?;
                }
                Some(out)
            }
            None => None,
        };
        rows.push((inputs, outputs));
    }
    Ok(Parsed { rows, provenance })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Loads a labeled dataset from CSV.
///
/// Columns may appear in any order and may use either `X1..X40` or the
/// semantic aliases; all four outputs (`LAEQ,L,R,SA`) must be present.
/// Leading `#` lines are kept as provenance.
pub fn load_dataset(path: impl AsRef<Path>, schema: &FeatureSchema, check: RangeCheck) -> Result<Dataset> {
    let text = read_text(path.as_ref())?;
    let ds = parse_dataset(&text, schema)?;
    ds.check_ranges(schema, check)?;
    log::info!("loaded {} patterns from {}", ds.len(), path.as_ref().display());
    Ok(ds)
}

/// Same as [`load_dataset`] but from in-memory text, without range checks.
pub fn parse_dataset(text: &str, schema: &FeatureSchema) -> Result<Dataset> {
    let parsed = parse_csv(text, schema, true)?;
    let patterns = parsed
        .rows
        .into_iter()
        .map(|(inputs, outputs)| Pattern::new(inputs, outputs.expect("outputs required")))
        .collect();
    Ok(Dataset::new(patterns).with_provenance(parsed.provenance))
}

/// Loads input vectors only; output columns are ignored when present.
pub fn load_inputs(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Vec<[f64; N_INPUTS]>> {
    let text = read_text(path.as_ref())?;
    let parsed = parse_csv(&text, schema, false)?;
    Ok(parsed.rows.into_iter().map(|(x, _)| x).collect())
}

/// Header row using the semantic aliases followed by the output names.
pub fn csv_header(schema: &FeatureSchema) -> Vec<String> {
    (0..N_INPUTS)
        .map(|i| schema.alias(i).to_string())
        .chain(schema.output_names().iter().map(|s| s.to_string()))
        .collect()
}

/// Writes the dataset as CSV, provenance lines first (prefixed with `# `).
pub fn write_csv<W: Write>(dataset: &Dataset, schema: &FeatureSchema, mut out: W) -> Result<()> {
    let wrap = |e: std::io::Error| Error::io("<output>", e);
    for line in dataset.provenance() {
        writeln!(out, "# {line}").map_err(wrap)?;
    }
    writeln!(out, "{}", csv_header(schema).join(",")).map_err(wrap)?;
    let mut line = String::with_capacity(1024);
    for p in dataset {
        line.clear();
        for (i, v) in p.inputs.iter().chain(p.outputs.iter()).enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}").map_err(wrap)?;
    }
    Ok(())
}

/// Deterministic shuffled partition into train and test sets.
///
/// The training part holds `round(n * train_fraction)` patterns. Both parts
/// keep the original relative order of their patterns.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = data.len();
    let n_train = (n as f64 * train_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let (train, test) = order.split_at_mut(n_train);
    train.sort_unstable();
    test.sort_unstable();
    Ok((data.select(train), data.select(test)))
}
