use std::io::Write;
use std::path::Path;

use punn_core::{Error, Result};
use tempfile::NamedTempFile;

/// Header lines shared by every artifact: tool version, command line, seed.
#[derive(Debug, Clone)]
pub struct Provenance {
    lines: Vec<String>,
}

impl Provenance {
    pub fn new(seed: Option<u64>) -> Self {
        let command: Vec<String> = std::env::args().skip(1).collect();
        let mut lines = vec![
            format!("punn {}", env!("CARGO_PKG_VERSION")),
            format!("command: punn {}", command.join(" ")),
        ];
        if let Some(s) = seed {
            lines.push(format!("seed: {s}"));
        }
        Provenance { lines }
    }

    pub fn with(mut self, line: impl Into<String>) -> Self {
        self.lines.push(line.into());
        self
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    /// The lines as `# ` comments, one per line.
    pub fn header(&self) -> String {
        self.lines.iter().map(|l| format!("# {l}\n")).collect()
    }
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Writes a provenance header followed by `body`.
pub fn write_artifact(path: &Path, prov: &Provenance, body: &str) -> Result<()> {
    let mut text = prov.header();
    text.push_str(body);
    write_atomic(path, text.as_bytes())
}
