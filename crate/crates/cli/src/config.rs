//! Plain-text `key = value` training configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Ranges are written
//! `lo:hi`. Unknown keys are rejected so typos do not pass silently.

use std::path::Path;
use std::time::Duration;

use punn_core::evolution::EAConfig;
use punn_core::{Error, Result};

pub fn load(path: &Path, config: &mut EAConfig) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    apply(&text, config).map_err(|e| match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn apply(text: &str, config: &mut EAConfig) -> Result<()> {
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("line {}: expected key = value", n + 1))
        })?;
        set(config, key.trim(), value.trim())
            .map_err(|m| Error::InvalidArgument(format!("line {}: {m}", n + 1)))?;
    }
    Ok(())
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("bad value `{v}` for `{key}`"))
}

fn pair<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<(T, T), String> {
    let (a, b) = v
        .split_once(':')
        .ok_or_else(|| format!("`{key}` expects lo:hi, got `{v}`"))?;
    Ok((num(key, a.trim())?, num(key, b.trim())?))
}

fn set(c: &mut EAConfig, key: &str, v: &str) -> std::result::Result<(), String> {
    match key {
        "runs" => c.runs = num(key, v)?,
        "generations" | "gens" => c.generations = num(key, v)?,
        "population" | "population_size" | "pop" => c.population_size = num(key, v)?,
        "seed" => c.seed = num(key, v)?,
        "nodes_add_delete" => c.nodes_add_delete = pair(key, v)?,
        "min_init_nodes" => c.min_init_nodes = num(key, v)?,
        "max_init_nodes" => c.max_init_nodes = num(key, v)?,
        "max_nodes" => c.max_nodes = num(key, v)?,
        "max_init_connections" => c.max_init_connections = num(key, v)?,
        "input_hidden_range" => c.input_hidden_range = Some(pair(key, v)?),
        "hidden_output_range" => c.hidden_output_range = Some(pair(key, v)?),
        "parametric_fraction" => c.parametric_fraction = num(key, v)?,
        "structural_fraction" => c.structural_fraction = num(key, v)?,
        "temperature_input_hidden" => c.initial_temperatures.input_hidden = num(key, v)?,
        "temperature_hidden_output" => c.initial_temperatures.hidden_output = num(key, v)?,
        "temperature_decay" => c.temperature_decay = num(key, v)?,
        "min_temperature" => c.min_temperature = num(key, v)?,
        "input_interval" => c.input_interval = pair(key, v)?,
        "output_interval" => c.output_interval = pair(key, v)?,
        "time_budget" => c.time_budget = Some(seconds(key, v)?),
        "refit_output_layer" => c.refit_output_layer = num(key, v)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

pub fn seconds(key: &str, v: &str) -> std::result::Result<Duration, String> {
    let s: f64 = num(key, v)?;
    Duration::try_from_secs_f64(s).map_err(|_| format!("`{key}` must be a non-negative number of seconds"))
}

/// The resolved configuration as `key = value` lines, in the same syntax
/// [`apply`] reads.
pub fn describe(c: &EAConfig) -> Vec<String> {
    let range = |r: Option<(f64, f64)>| match r {
        Some((a, b)) => format!("{a}:{b}"),
        None => "default".into(),
    };
    let mut out = vec![
        format!("runs = {}", c.runs),
        format!("generations = {}", c.generations),
        format!("population = {}", c.population_size),
        format!("seed = {}", c.seed),
        format!("nodes_add_delete = {}:{}", c.nodes_add_delete.0, c.nodes_add_delete.1),
        format!("min_init_nodes = {}", c.min_init_nodes),
        format!("max_init_nodes = {}", c.max_init_nodes),
        format!("max_nodes = {}", c.max_nodes),
        format!("max_init_connections = {}", c.max_init_connections),
        format!("input_hidden_range = {}", range(c.input_hidden_range)),
        format!("hidden_output_range = {}", range(c.hidden_output_range)),
        format!("parametric_fraction = {}", c.parametric_fraction),
        format!("structural_fraction = {}", c.structural_fraction),
        format!("temperature_input_hidden = {}", c.initial_temperatures.input_hidden),
        format!("temperature_hidden_output = {}", c.initial_temperatures.hidden_output),
        format!("temperature_decay = {}", c.temperature_decay),
        format!("min_temperature = {}", c.min_temperature),
        format!("input_interval = {}:{}", c.input_interval.0, c.input_interval.1),
        format!("output_interval = {}:{}", c.output_interval.0, c.output_interval.1),
        format!("refit_output_layer = {}", c.refit_output_layer),
    ];
    if let Some(t) = c.time_budget {
        out.push(format!("time_budget = {}", t.as_secs_f64()));
    }
    out
}
