//! Disorder ensemble: final distances per bond dimension, failure fractions
//! and warm-started DMRG recovery of the failed instances.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use varanneal_core::models::{sample_spin_glass, SpinGlassInstance};
use varanneal_core::mps::{
    anneal_mps, classical_ground_manifold, refine_final, AnnealOptions, DmrgOptions, Integrator,
};
use varanneal_core::exact::{manifold_distance, manifold_overlap};

use super::spinglass::{parse_integrator, FAILURE_THRESHOLD};
use super::{Output, Report};
use crate::checkpoint::Checkpoint;
use crate::config::{require, require_positive, ConfigError, Section};
use crate::output::{format_float, Meta, Table};
use crate::plot::{histogram, Chart, Series, Style};
use crate::pool::run_sorted;

pub const COMMAND: &str = "spinglass-histogram";

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub n: usize,
    pub instances: usize,
    /// Instance `k` uses seed `seed + k`.
    pub seed: u64,
    pub t: f64,
    pub d: Vec<usize>,
    pub dt: f64,
    pub integrator: Integrator,
    pub threshold: f64,
    /// The recovery DMRG runs at `max(D, recovery_min_bond_dim)`.
    pub recovery_min_bond_dim: usize,
    /// Record the minimum effective gap along each run (one DMRG per sample).
    pub scatter: bool,
    pub scatter_intervals: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n: 8,
            instances: 100,
            seed: 0,
            t: 1600.0,
            d: vec![1, 2, 4, 8],
            dt: 0.2,
            integrator: Integrator::Second,
            threshold: FAILURE_THRESHOLD,
            recovery_min_bond_dim: 2,
            scatter: false,
            scatter_intervals: 100,
        }
    }
}

impl Params {
    pub fn from_section(sec: &Section, seed: Option<u64>) -> Result<Self, ConfigError> {
        sec.check_keys(&[
            "n",
            "instances",
            "seed",
            "t",
            "d",
            "dt",
            "integrator",
            "threshold",
            "recovery_min_bond_dim",
            "scatter",
            "scatter_intervals",
        ])?;
        let d = Params::default();
        let integrator = match sec.get_opt::<String>("integrator")? {
            None => d.integrator,
            Some(name) => parse_integrator(&name).map_err(|message| ConfigError::Invalid {
                key: "integrator".into(),
                message,
            })?,
        };
        let p = Params {
            n: sec.get("n", d.n)?,
            instances: sec.get("instances", d.instances)?,
            seed: match seed {
                Some(s) => s,
                None => sec.get("seed", d.seed)?,
            },
            t: sec.get("t", d.t)?,
            d: sec.get_list("d", &d.d)?,
            dt: sec.get("dt", d.dt)?,
            integrator,
            threshold: sec.get("threshold", d.threshold)?,
            recovery_min_bond_dim: sec.get("recovery_min_bond_dim", d.recovery_min_bond_dim)?,
            scatter: sec.get("scatter", d.scatter)?,
            scatter_intervals: sec.get("scatter_intervals", d.scatter_intervals)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        require(self.n >= 2, "n", "must be >= 2")?;
        require(self.instances >= 1, "instances", "must be >= 1")?;
        require(!self.d.is_empty(), "d", "list must not be empty")?;
        require(self.d.iter().all(|d| *d >= 1), "d", "bond dimensions must be >= 1")?;
        require_positive(&[self.t], "t")?;
        require_positive(&[self.dt], "dt")?;
        require_positive(&[self.threshold], "threshold")?;
        require(
            self.recovery_min_bond_dim >= 1,
            "recovery_min_bond_dim",
            "must be >= 1",
        )?;
        require(self.scatter_intervals >= 1, "scatter_intervals", "must be >= 1")
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.instances as u64).map(move |k| self.seed.wrapping_add(k))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub seed: u64,
    pub d: usize,
    pub final_distance: f64,
    pub final_overlap: f64,
    pub failed: bool,
    /// Ground-manifold weight after warm-started DMRG (failed runs only).
    pub recovery_overlap: Option<f64>,
    pub recovery_energy: Option<f64>,
    pub min_effective_gap: Option<f64>,
    pub transitions: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub params: Params,
    /// Sorted by `(seed, D)`.
    pub entries: Vec<Entry>,
}

impl Outcome {
    /// `(D, failures, instances)`
    pub fn failure_counts(&self) -> Vec<(usize, usize, usize)> {
        let mut map: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for e in &self.entries {
            let c = map.entry(e.d).or_default();
            c.0 += e.failed as usize;
            c.1 += 1;
        }
        map.into_iter().map(|(d, (f, n))| (d, f, n)).collect()
    }

    pub fn failure_fraction(&self, d: usize) -> Option<f64> {
        self.failure_counts()
            .into_iter()
            .find(|c| c.0 == d)
            .map(|(_, f, n)| f as f64 / n as f64)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| e.failed)
    }
}

fn checkpoint_path(dir: &Path, seed: u64, d: usize) -> PathBuf {
    dir.join(format!("seed{seed}_D{d}.mps"))
}

fn meta_f64(cp: &Checkpoint, key: &str) -> Option<f64> {
    cp.meta.get(key).and_then(|v| v.parse().ok())
}

fn run_entry(
    p: &Params,
    inst: &SpinGlassInstance,
    d: usize,
    checkpoints: Option<&Path>,
) -> anyhow::Result<Entry> {
    let path = checkpoints.map(|dir| checkpoint_path(dir, inst.seed, d));
    let cached = match &path {
        Some(path) if path.exists() => Some(Checkpoint::load(path)?),
        _ => None,
    };
    let (state, min_gap, transitions) = match cached {
        Some(cp) => {
            log::debug!("resuming seed {} D={d} from checkpoint", inst.seed);
            let gap = meta_f64(&cp, "min_effective_gap");
            let tr = meta_f64(&cp, "transitions").map(|v| v as usize);
            (cp.state, gap, tr)
        }
        None => {
            let opts = AnnealOptions {
                intervals: if p.scatter { p.scatter_intervals } else { 1 },
                integrator: p.integrator,
                variational: p.scatter,
                exact: false,
                ..AnnealOptions::default()
            };
            let rec = anneal_mps(inst, d, p.t, p.dt, &opts)
                .with_context(|| format!("seed {} D = {d}", inst.seed))?;
            let gap = rec.min_effective_gap();
            let tr = p.scatter.then(|| rec.transitions().len());
            if let Some(path) = &path {
                let mut meta = BTreeMap::new();
                meta.insert("seed".into(), inst.seed.to_string());
                meta.insert("D".into(), d.to_string());
                meta.insert("T".into(), format_float(p.t));
                meta.insert("dt".into(), format_float(rec.dt));
                if let Some(g) = gap {
                    meta.insert("min_effective_gap".into(), format_float(g));
                }
                if let Some(t) = tr {
                    meta.insert("transitions".into(), t.to_string());
                }
                Checkpoint {
                    meta,
                    state: rec.final_state.clone(),
                }
                .save(path)?;
            }
            (rec.final_state, gap, tr)
        }
    };
    let target = classical_ground_manifold(inst);
    let dense = state.to_dense()?;
    let final_distance = manifold_distance(&dense, &target);
    let failed = final_distance > p.threshold;
    let (recovery_energy, recovery_overlap) = if failed {
        let opts = DmrgOptions {
            bond_dim: d.max(p.recovery_min_bond_dim),
            ..DmrgOptions::default()
        };
        let (e, ov) = refine_final(inst, &state, &opts)?;
        (Some(e), Some(ov))
    } else {
        (None, None)
    };
    Ok(Entry {
        seed: inst.seed,
        d,
        final_distance,
        final_overlap: manifold_overlap(&dense, &target),
        failed,
        recovery_overlap,
        recovery_energy,
        min_effective_gap: min_gap,
        transitions,
    })
}

/// Runs the ensemble; with `checkpoints` set, finished runs are stored there
/// and reused on the next invocation with the same parameters.
pub fn run(p: &Params, workers: usize, checkpoints: Option<&Path>) -> anyhow::Result<Outcome> {
    p.validate()?;
    let dir = checkpoints.map(|c| c.join(Meta::new(COMMAND, p, Some(p.dt)).config_hash));
    let keys: Vec<(u64, usize)> = p
        .seeds()
        .flat_map(|s| p.d.iter().map(move |d| (s, *d)))
        .collect();
    let entries = run_sorted(workers, keys, |(seed, d)| {
        log::info!("histogram seed {seed} D={d}");
        let inst = sample_spin_glass(p.n, *seed);
        run_entry(p, &inst, *d, dir.as_deref())
    })?
    .into_iter()
    .map(|(_, e)| e)
    .collect();
    Ok(Outcome {
        params: p.clone(),
        entries,
    })
}

impl Report for Outcome {
    fn write(&self, out: &Output) -> anyhow::Result<Vec<PathBuf>> {
        let meta = Meta::new(COMMAND, &self.params, Some(self.params.dt));
        let mut t = Table::new(&[
            "seed",
            "D",
            "final_distance",
            "final_overlap",
            "failed",
            "recovery_overlap",
            "recovery_energy",
            "min_effective_gap",
            "transitions",
        ]);
        for e in &self.entries {
            t.push(vec![
                e.seed.into(),
                e.d.into(),
                e.final_distance.into(),
                e.final_overlap.into(),
                e.failed.into(),
                e.recovery_overlap.into(),
                e.recovery_energy.into(),
                e.min_effective_gap.into(),
                e.transitions.map(|x| x as f64).into(),
            ]);
        }
        let mut files = vec![out.csv("histogram_instances.csv", &t, &meta)?];
        let mut f = Table::new(&[
            "D",
            "instances",
            "failures",
            "failure_fraction",
            "recovered",
        ]);
        for (d, fails, n) in self.failure_counts() {
            let recovered = self
                .failures()
                .filter(|e| e.d == d && e.recovery_overlap.is_some_and(|o| o > 0.999))
                .count();
            f.push(vec![
                d.into(),
                n.into(),
                fails.into(),
                (fails as f64 / n as f64).into(),
                recovered.into(),
            ]);
        }
        files.push(out.csv("histogram_summary.csv", &f, &meta)?);
        let groups: Vec<(String, Vec<f64>)> = self
            .failure_counts()
            .iter()
            .map(|(d, _, _)| {
                (
                    format!("D={d}"),
                    self.entries
                        .iter()
                        .filter(|e| e.d == *d)
                        .map(|e| e.final_distance)
                        .collect(),
                )
            })
            .collect();
        files.extend(out.svg("histogram.svg", || {
            histogram("final distance, T per config", "||delta psi(1)||", &groups, 20)
        })?);
        if self.params.scatter {
            files.extend(out.svg("gap_scatter.svg", || Chart {
                title: "final distance against minimum effective gap".into(),
                x_label: "min effective gap".into(),
                y_label: "||delta psi(1)||".into(),
                log_x: true,
                log_y: true,
                style: Style::Markers,
                series: self
                    .failure_counts()
                    .iter()
                    .map(|(d, _, _)| Series {
                        name: format!("D={d}"),
                        points: self
                            .entries
                            .iter()
                            .filter(|e| e.d == *d)
                            .filter_map(|e| e.min_effective_gap.map(|g| (g, e.final_distance)))
                            .collect(),
                    })
                    .collect(),
            })?);
        }
        Ok(files)
    }
}
