//! Mean squared error and standard error of prediction, per output and as
//! a global figure.
//!
//! The global value of both metrics is the sum over the four outputs, which
//! is how the report tables aggregate them. The output-averaged value
//! is `global / 4`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::schema::N_OUTPUTS;

/// Per-output and global error figures for one model on one pattern set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub per_output_mse: [f64; N_OUTPUTS],
    pub global_mse: f64,
    /// Percent.
    pub per_output_sep: [f64; N_OUTPUTS],
    /// Percent.
    pub global_sep: f64,
    pub n: usize,
}

impl MetricReport {
    /// Output-averaged MSE.
    pub fn mean_mse(&self) -> f64 {
        self.global_mse / N_OUTPUTS as f64
    }

    pub fn mean_sep(&self) -> f64 {
        self.global_sep / N_OUTPUTS as f64
    }
}

fn check_shapes(preds: &[[f64; N_OUTPUTS]], targets: &[[f64; N_OUTPUTS]]) -> Result<()> {
    if preds.len() != targets.len() {
        return Err(Error::InvalidArgument(format!(
            "shape mismatch: {} predictions vs {} targets",
            preds.len(),
            targets.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::InvalidArgument("metrics need at least one pattern".into()));
    }
    for (row, (p, t)) in preds.iter().zip(targets).enumerate() {
        if !p.iter().chain(t.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite prediction or target at pattern {row}"
            )));
        }
    }
    Ok(())
}

/// Sum of squared errors per output, in pattern order.
fn squared_errors(preds: &[[f64; N_OUTPUTS]], targets: &[[f64; N_OUTPUTS]]) -> [f64; N_OUTPUTS] {
    let mut sse = [0.0; N_OUTPUTS];
    for (p, t) in preds.iter().zip(targets) {
        for q in 0..N_OUTPUTS {
            let e = t[q] - p[q];
            sse[q] += e * e;
        }
    }
    sse
}

/// Per-output MSE and their sum.
pub fn mse(preds: &[[f64; N_OUTPUTS]], targets: &[[f64; N_OUTPUTS]]) -> Result<([f64; N_OUTPUTS], f64)> {
    check_shapes(preds, targets)?;
    let n = preds.len() as f64;
    let per = squared_errors(preds, targets).map(|s| s / n);
    Ok((per, per.iter().sum()))
}

/// Per-output SEP (RMSE as a percentage of `|ref_mean|`) and their sum.
pub fn sep(
    preds: &[[f64; N_OUTPUTS]],
    targets: &[[f64; N_OUTPUTS]],
    ref_means: &[f64; N_OUTPUTS],
) -> Result<([f64; N_OUTPUTS], f64)> {
    if let Some(q) = ref_means.iter().position(|m| !(m.abs() > 0.0) || !m.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "reference mean of output {q} is {}; SEP needs a nonzero mean",
            ref_means[q]
        )));
    }
    let (per_mse, _) = mse(preds, targets)?;
    let per: [f64; N_OUTPUTS] =
        std::array::from_fn(|q| 100.0 / ref_means[q].abs() * per_mse[q].sqrt());
    Ok((per, per.iter().sum()))
}

/// Both metrics at once.
pub fn report(
    preds: &[[f64; N_OUTPUTS]],
    targets: &[[f64; N_OUTPUTS]],
    ref_means: &[f64; N_OUTPUTS],
) -> Result<MetricReport> {
    let (per_output_mse, global_mse) = mse(preds, targets)?;
    let (per_output_sep, global_sep) = sep(preds, targets, ref_means)?;
    Ok(MetricReport {
        per_output_mse,
        global_mse,
        per_output_sep,
        global_sep,
        n: preds.len(),
    })
}

/// Column means of a target matrix.
pub fn column_means(values: &[[f64; N_OUTPUTS]]) -> [f64; N_OUTPUTS] {
    let mut m = [0.0; N_OUTPUTS];
    for v in values {
        for q in 0..N_OUTPUTS {
            m[q] += v[q];
        }
    }
    let n = values.len().max(1) as f64;
    m.map(|s| s / n)
}

/// One row of a results table: global + per-output MSE, global +
/// per-output SEP, and optionally a link count.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub mse: [f64; N_OUTPUTS + 1],
    pub sep: [f64; N_OUTPUTS + 1],
    pub links: Option<f64>,
}

impl TableRow {
    pub fn from_report(label: impl Into<String>, r: &MetricReport, links: Option<f64>) -> Self {
        let mut mse = [r.global_mse; N_OUTPUTS + 1];
        mse[1..].copy_from_slice(&r.per_output_mse);
        let mut sep = [r.global_sep; N_OUTPUTS + 1];
        sep[1..].copy_from_slice(&r.per_output_sep);
        TableRow {
            label: label.into(),
            mse,
            sep,
            links,
        }
    }
}

/// Compact numeric formatting: fixed for ordinary magnitudes, scientific
/// for small ones such as roughness MSE.
pub fn fmt_value(v: f64) -> String {
    if v != 0.0 && v.abs() < 0.01 {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

/// Renders rows in the layout `label | MSE: Global Laeq L R SA | SEP: ... | #Links`.
pub fn render_table(title: &str, rows: &[TableRow]) -> String {
    let heads = ["Global", "Laeq", "L", "R", "SA"];
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let mut header = format!("{:<12}", "");
    for h in heads {
        let _ = write!(header, " {:>11}", format!("MSE:{h}"));
    }
    for h in heads {
        let _ = write!(header, " {:>11}", format!("SEP:{h}"));
    }
    let _ = write!(header, " {:>9}", "#Links");
    let _ = writeln!(out, "{}", header.trim_end());
    for row in rows {
        let mut line = format!("{:<12}", row.label);
        for v in row.mse.iter().chain(row.sep.iter()) {
            let _ = write!(line, " {:>11}", fmt_value(*v));
        }
        match row.links {
            Some(l) => {
                let _ = write!(line, " {:>9.2}", l);
            }
            None => {
                let _ = write!(line, " {:>9}", "-");
            }
        }
        let _ = writeln!(out, "{line}");
    }
    out
}
