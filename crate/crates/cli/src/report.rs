//! Plain-text tables and stamped artifact files.
//!
//! Every file the tool writes starts with a `#`-comment provenance header:
//! tool version, the subcommand that produced it, the scenario name, and
//! the seed (or a note that the command is deterministic). Given the same
//! inputs the bytes are identical run to run, so artifacts can be diffed:
//! nothing here prints wall-clock times or absolute paths.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use screenlab_core::rational::{Rat, format_decimal_exact, format_fraction};

/// Provenance recorded at the top of every artifact.
pub struct Stamp {
    /// Subcommand with its effective arguments, e.g. `rationalize --weights 2`.
    pub command: String,
    /// Scenario name, when the command works on one.
    pub scenario: Option<String>,
    /// Seed, when the command draws random cases; `None` marks the command
    /// itself as deterministic.
    pub seed: Option<u64>,
}

impl Stamp {
    pub fn new(command: impl Into<String>) -> Self {
        Stamp {
            command: command.into(),
            scenario: None,
            seed: None,
        }
    }

    pub fn scenario(mut self, name: impl Into<String>) -> Self {
        self.scenario = Some(name.into());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    fn header(&self) -> String {
        let mut lines = vec![
            format!("# screenlab {}", env!("CARGO_PKG_VERSION")),
            format!("# command: {}", self.command),
        ];
        if let Some(name) = &self.scenario {
            lines.push(format!("# scenario: {name}"));
        }
        match self.seed {
            Some(seed) => lines.push(format!("# seed: {seed}")),
            None => lines.push("# seed: none (deterministic command)".into()),
        }
        lines.push(String::new());
        lines.join("\n")
    }
}

/// Render rows under left-aligned headers with two-space gutters.
pub fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let render = |cells: Vec<&str>| -> String {
        let mut line = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if i + 1 < cells.len() {
                for _ in cell.len()..*w {
                    line.push(' ');
                }
            }
        }
        line
    };
    let mut out = render(headers.to_vec());
    out.push('\n');
    for row in rows {
        out.push_str(&render(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

/// A rational as its two CSV cells: exact fraction, and exact decimal when
/// the decimal terminates (empty otherwise).
pub fn rat_cells(r: &Rat) -> (String, String) {
    (
        format_fraction(r),
        format_decimal_exact(r).unwrap_or_default(),
    )
}

/// Write a stamped plain-text artifact and return its path.
pub fn write_text(dir: &Path, name: &str, stamp: &Stamp, body: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let content = format!("{}{}", stamp.header(), body);
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Write a stamped CSV artifact. The `#` header lines precede the CSV
/// content; readers should treat `#` as a comment prefix.
pub fn write_csv(
    dir: &Path,
    name: &str,
    stamp: &Stamp,
    headers: &[&str],
    rows: &[Vec<String>],
) -> Result<PathBuf> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(headers)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let body = String::from_utf8(writer.into_inner()?).expect("csv output is utf-8");
    write_text(dir, name, stamp, &body)
}
