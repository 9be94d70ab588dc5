//! One module per command.

use std::path::{Path, PathBuf};

use crate::output::{write_file, Meta, Table};
use crate::plot::Chart;

pub mod bipartite;
pub mod histogram;
pub mod kappa;
pub mod lmg;
pub mod spinglass;
pub mod twoqubit;

/// Where and how results are written.
#[derive(Debug, Clone)]
pub struct Output {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Output {
    pub fn new(dir: impl Into<PathBuf>, plots: bool) -> Self {
        Output {
            dir: dir.into(),
            plots,
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn csv(&self, name: &str, table: &Table, meta: &Meta) -> anyhow::Result<PathBuf> {
        write_file(&self.dir, name, &table.to_csv(meta))
    }

    /// Writes the chart only when plots were requested.
    pub fn svg(&self, name: &str, chart: impl FnOnce() -> Chart) -> anyhow::Result<Option<PathBuf>> {
        if !self.plots {
            return Ok(None);
        }
        write_file(&self.dir, name, &chart().to_svg()).map(Some)
    }
}

/// Writes the files of a finished run and returns their paths.
pub trait Report {
    fn write(&self, out: &Output) -> anyhow::Result<Vec<PathBuf>>;
}
