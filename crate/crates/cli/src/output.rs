//! CSV tables and output-file plumbing.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), missing values as
//! empty fields. The first line of every file is a `#` comment carrying the
//! command, a hash of the resolved parameters, the time step and the version.

use std::fmt::Debug;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Missing,
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Missing => String::new(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Provenance written as the first line of every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub command: String,
    pub config_hash: String,
    pub dt: Option<f64>,
}

impl Meta {
    /// Hashes the `Debug` rendering of the resolved parameters.
    pub fn new(command: &str, params: &impl Debug, dt: Option<f64>) -> Self {
        let digest = Sha256::digest(format!("{command}\n{params:?}").as_bytes());
        let config_hash = digest[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        Meta {
            command: command.to_string(),
            config_hash,
            dt,
        }
    }

    pub fn comment(&self) -> String {
        let dt = self.dt.map(format_float).unwrap_or_else(|| "-".into());
        format!(
            "# varanneal {} command={} config_hash={} dt={}",
            crate::VERSION,
            self.command,
            self.config_hash,
            dt
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn to_csv(&self, meta: &Meta) -> String {
        let mut out = meta.comment();
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Values of a numeric column, `None` for missing cells.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[k] {
                    Cell::Float(x) => Some(*x),
                    Cell::Int(i) => Some(*i as f64),
                    _ => None,
                })
                .collect(),
        )
    }
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Parses a file written by [`Table::to_csv`]; the comment line is returned separately.
pub fn read_csv(text: &str) -> anyhow::Result<(String, Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines();
    let comment = lines.next().context("empty file")?.to_string();
    anyhow::ensure!(comment.starts_with('#'), "missing comment line");
    let header: Vec<String> = lines
        .next()
        .context("missing header")?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect::<Vec<_>>())
        .collect::<Vec<_>>();
    for (k, r) in rows.iter().enumerate() {
        anyhow::ensure!(r.len() == header.len(), "row {} has {} cells", k + 1, r.len());
    }
    Ok((comment, header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_seventeen_digits() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn table_renders_header_comment_and_missing_cells() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![1usize.into(), None.into(), 0.5.into()]);
        let meta = Meta::new("demo", &(1, 2), Some(0.01));
        let csv = t.to_csv(&meta);
        let (comment, header, rows) = read_csv(&csv).unwrap();
        assert!(comment.contains("config_hash="));
        assert!(comment.contains("dt=1.0000000000000000e-2"));
        assert_eq!(header, vec!["a", "b", "c"]);
        assert_eq!(rows[0], vec!["1", "", "5.0000000000000000e-1"]);
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn hash_depends_on_parameters() {
        assert_eq!(
            Meta::new("x", &1, None).config_hash,
            Meta::new("x", &1, None).config_hash
        );
        assert_ne!(
            Meta::new("x", &1, None).config_hash,
            Meta::new("x", &2, None).config_hash
        );
    }
}
