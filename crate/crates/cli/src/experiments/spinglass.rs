//! Single spin-glass instance: annealing traces for every `(D, T)` pair,
//! effective versus exact gaps, entropies and the final-distance scaling.

use std::path::PathBuf;

use anyhow::Context;
use varanneal_core::exact::{evolve_exact_with, phase_aligned_distance, ExactSampling, StateVector};
use varanneal_core::models::{
    build_protocol, sample_spin_glass, ModelKind, ModelParams, SpinGlassInstance,
};
use varanneal_core::mps::{anneal_mps, max_bond, AnnealOptions, AnnealRecord, Integrator};

use super::{Output, Report};
use crate::coeffs::{parse_instance, write_instance};
use crate::config::{require, require_positive, ConfigError, Section};
use crate::fit::loglog_slope;
use crate::output::{write_file, Cell, Meta, Table};
use crate::plot::{Chart, Series, Style};
use crate::pool::run_sorted;

pub const COMMAND: &str = "spinglass-run";

/// Final distance below which a run counts as converged.
pub const FAILURE_THRESHOLD: f64 = 0.1;

pub fn parse_integrator(name: &str) -> Result<Integrator, String> {
    match name {
        "tdvp2" => Ok(Integrator::Second),
        "tdvp4" => Ok(Integrator::Fourth),
        other => Err(format!("unknown integrator `{other}` (expected tdvp2 or tdvp4)")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub n: usize,
    pub seed: u64,
    /// Coefficient file overriding `n` and `seed`.
    pub instance: Option<PathBuf>,
    pub d: Vec<usize>,
    pub t: Vec<f64>,
    pub dt: f64,
    pub intervals: usize,
    pub integrator: Integrator,
    pub gap_site: Option<usize>,
    /// Exact ground states and gaps at every sample.
    pub exact: bool,
    /// Exact state-vector evolution compared against every full-rank run.
    pub oracle: bool,
    pub oracle_dt: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n: 8,
            seed: 0,
            instance: None,
            d: vec![1, 2, 4, 8, 16],
            t: vec![100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0],
            dt: 0.05,
            intervals: 100,
            integrator: Integrator::Second,
            gap_site: None,
            exact: true,
            oracle: true,
            oracle_dt: 0.01,
        }
    }
}

impl Params {
    pub fn from_section(sec: &Section, seed: Option<u64>) -> Result<Self, ConfigError> {
        sec.check_keys(&[
            "n",
            "seed",
            "instance",
            "d",
            "t",
            "dt",
            "intervals",
            "integrator",
            "gap_site",
            "exact",
            "oracle",
            "oracle_dt",
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
            seed: match seed {
                Some(s) => s,
                None => sec.get("seed", d.seed)?,
            },
            instance: sec.get_opt("instance")?,
            d: sec.get_list("d", &d.d)?,
            t: sec.get_list("t", &d.t)?,
            dt: sec.get("dt", d.dt)?,
            intervals: sec.get("intervals", d.intervals)?,
            integrator,
            gap_site: sec.get_opt("gap_site")?,
            exact: sec.get("exact", d.exact)?,
            oracle: sec.get("oracle", d.oracle)?,
            oracle_dt: sec.get("oracle_dt", d.oracle_dt)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        require(self.n >= 2, "n", "must be >= 2")?;
        require(!self.d.is_empty(), "d", "list must not be empty")?;
        require(self.d.iter().all(|d| *d >= 1), "d", "bond dimensions must be >= 1")?;
        require_positive(&self.t, "t")?;
        require_positive(&[self.dt, self.oracle_dt], "dt")?;
        require(self.intervals >= 1, "intervals", "must be >= 1")?;
        if let Some(site) = self.gap_site {
            require(site < self.n, "gap_site", "must be a site index")?;
        }
        Ok(())
    }

    pub fn instance(&self) -> anyhow::Result<SpinGlassInstance> {
        match &self.instance {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
            }
            None => Ok(sample_spin_glass(self.n, self.seed)),
        }
    }
}

/// Whether `d` saturates every bond of an `n`-site qubit chain.
pub fn is_full_rank(n: usize, d: usize) -> bool {
    (1..n).all(|k| max_bond(2, k, n, d) == max_bond(2, k, n, usize::MAX))
}

#[derive(Debug, Clone)]
pub struct Run {
    pub record: AnnealRecord,
    /// Distance to the exactly evolved state at every sample (full-rank `D` only).
    pub oracle_distance: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub params: Params,
    pub instance: SpinGlassInstance,
    /// Sorted by `(D, T)`.
    pub runs: Vec<Run>,
    /// `(D, slope, converged at every T)`
    pub slopes: Vec<(usize, Option<f64>, bool)>,
}

impl Outcome {
    pub fn run(&self, d: usize, t: f64) -> Option<&Run> {
        self.runs
            .iter()
            .find(|r| r.record.bond_dim == d && r.record.horizon == t)
    }

    pub fn slope(&self, d: usize) -> Option<(Option<f64>, bool)> {
        self.slopes
            .iter()
            .find(|s| s.0 == d)
            .map(|s| (s.1, s.2))
    }
}

fn exact_states(
    inst: &SpinGlassInstance,
    t: f64,
    p: &Params,
) -> anyhow::Result<Vec<StateVector>> {
    let spec = build_protocol(ModelKind::SpinGlass, inst.n, ModelParams::Disorder(inst.clone()))?;
    let traj = evolve_exact_with(
        &spec,
        t,
        p.oracle_dt,
        &StateVector::plus_state(inst.n),
        ExactSampling {
            intervals: p.intervals,
            keep_states: true,
        },
    )?;
    traj.states.context("exact evolution kept no states")
}

pub fn run_pair(
    inst: &SpinGlassInstance,
    p: &Params,
    d: usize,
    t: f64,
) -> anyhow::Result<Run> {
    let oracle = p.oracle && is_full_rank(inst.n, d);
    let opts = AnnealOptions {
        intervals: p.intervals,
        integrator: p.integrator,
        exact: p.exact,
        gap_site: p.gap_site,
        keep_states: oracle,
        ..AnnealOptions::default()
    };
    let record = anneal_mps(inst, d, t, p.dt, &opts).with_context(|| format!("D = {d}, T = {t}"))?;
    let oracle_distance = if oracle {
        let exact = exact_states(inst, t, p)?;
        let mut out = Vec::with_capacity(exact.len());
        for (m, e) in record.states.iter().zip(&exact) {
            out.push(phase_aligned_distance(&m.to_dense()?, e)?);
        }
        Some(out)
    } else {
        None
    };
    // the states were only needed for the oracle
    let record = AnnealRecord {
        states: Vec::new(),
        ..record
    };
    Ok(Run {
        record,
        oracle_distance,
    })
}

pub fn run(p: &Params, workers: usize) -> anyhow::Result<Outcome> {
    p.validate()?;
    let instance = p.instance()?;
    let keys: Vec<(usize, u64)> = p
        .d
        .iter()
        .flat_map(|d| p.t.iter().map(move |t| (*d, t.to_bits())))
        .collect();
    let runs: Vec<Run> = run_sorted(workers, keys, |(d, t)| {
        let t = f64::from_bits(*t);
        log::info!("spin glass seed {} D={d} T={t}", instance.seed);
        run_pair(&instance, p, *d, t)
    })?
    .into_iter()
    .map(|(_, r)| r)
    .collect();
    let mut runs = runs;
    runs.sort_by(|a, b| {
        a.record
            .bond_dim
            .cmp(&b.record.bond_dim)
            .then(a.record.horizon.total_cmp(&b.record.horizon))
    });
    let mut ds = p.d.clone();
    ds.sort();
    ds.dedup();
    let slopes = ds
        .iter()
        .map(|&d| {
            let rs: Vec<&Run> = runs.iter().filter(|r| r.record.bond_dim == d).collect();
            let ts: Vec<f64> = rs.iter().map(|r| r.record.horizon).collect();
            let ys: Vec<f64> = rs.iter().map(|r| r.record.final_distance).collect();
            let converged = ys.iter().all(|y| *y < FAILURE_THRESHOLD);
            (d, loglog_slope(&ts, &ys), converged)
        })
        .collect();
    Ok(Outcome {
        params: p.clone(),
        instance,
        runs,
        slopes,
    })
}

impl Report for Outcome {
    fn write(&self, out: &Output) -> anyhow::Result<Vec<PathBuf>> {
        let meta = Meta::new(COMMAND, &self.params, Some(self.params.dt));
        let mut files = vec![write_file(
            out.dir(),
            "instance.txt",
            &write_instance(&self.instance),
        )?];
        let mut full = Table::new(&[
            "D",
            "T",
            "s",
            "vgs_distance",
            "exact_distance",
            "oracle_distance",
            "effective_gap",
            "exact_gap",
            "entropy",
            "energy",
            "vgs_energy",
            "exact_energy",
            "norm",
            "transition",
        ]);
        let mut a = Table::new(&["D", "T", "s", "vgs_distance", "exact_distance"]);
        let mut c = Table::new(&["D", "T", "s", "effective_gap", "exact_gap"]);
        let mut dd = Table::new(&["D", "T", "s", "entropy"]);
        let mut b = Table::new(&["D", "T", "final_distance", "final_overlap", "steps", "dt"]);
        for run in &self.runs {
            let r = &run.record;
            let (d, t): (Cell, Cell) = (r.bond_dim.into(), r.horizon.into());
            for (k, x) in r.samples.iter().enumerate() {
                let oracle = run.oracle_distance.as_ref().map(|o| o[k]);
                full.push(vec![
                    d.clone(),
                    t.clone(),
                    x.s.into(),
                    x.vgs_distance.into(),
                    x.exact_distance.into(),
                    oracle.into(),
                    x.effective_gap.into(),
                    x.exact_gap.into(),
                    x.entropy.into(),
                    x.energy.into(),
                    x.vgs_energy.into(),
                    x.exact_energy.into(),
                    x.norm.into(),
                    x.transition.into(),
                ]);
                a.push(vec![
                    d.clone(),
                    t.clone(),
                    x.s.into(),
                    x.vgs_distance.into(),
                    x.exact_distance.into(),
                ]);
                c.push(vec![
                    d.clone(),
                    t.clone(),
                    x.s.into(),
                    x.effective_gap.into(),
                    x.exact_gap.into(),
                ]);
                dd.push(vec![d.clone(), t.clone(), x.s.into(), x.entropy.into()]);
            }
            b.push(vec![
                d,
                t,
                r.final_distance.into(),
                r.final_overlap.into(),
                r.steps.into(),
                r.dt.into(),
            ]);
        }
        files.push(out.csv("spinglass_run.csv", &full, &meta)?);
        files.push(out.csv("fig4a_distance.csv", &a, &meta)?);
        files.push(out.csv("fig4b_final.csv", &b, &meta)?);
        files.push(out.csv("fig4c_gap.csv", &c, &meta)?);
        files.push(out.csv("fig4d_entropy.csv", &dd, &meta)?);
        let mut s = Table::new(&["D", "slope", "converged"]);
        for (d, slope, conv) in &self.slopes {
            s.push(vec![(*d).into(), (*slope).into(), (*conv).into()]);
        }
        files.push(out.csv("spinglass_slopes.csv", &s, &meta)?);
        files.extend(out.svg("fig4b_final.svg", || Chart {
            title: format!("spin glass seed {}", self.instance.seed),
            x_label: "T".into(),
            y_label: "||delta psi(1)||".into(),
            log_x: true,
            log_y: true,
            style: Style::Line,
            series: self
                .slopes
                .iter()
                .map(|(d, _, _)| Series {
                    name: format!("D={d}"),
                    points: self
                        .runs
                        .iter()
                        .filter(|r| r.record.bond_dim == *d)
                        .map(|r| (r.record.horizon, r.record.final_distance))
                        .collect(),
                })
                .collect(),
        })?);
        let t_max = self.params.t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        files.extend(out.svg("fig4c_gap.svg", || Chart {
            title: format!("effective gap, T={t_max}"),
            x_label: "s".into(),
            y_label: "gap".into(),
            log_x: false,
            log_y: false,
            style: Style::Line,
            series: self
                .runs
                .iter()
                .filter(|r| r.record.horizon == t_max)
                .map(|r| Series {
                    name: format!("D={}", r.record.bond_dim),
                    points: r
                        .record
                        .samples
                        .iter()
                        .filter_map(|x| x.effective_gap.map(|g| (x.s, g)))
                        .collect(),
                })
                .chain(self.runs.first().map(|r| Series {
                    name: "exact".into(),
                    points: r
                        .record
                        .samples
                        .iter()
                        .filter_map(|x| x.exact_gap.map(|g| (x.s, g)))
                        .collect(),
                }))
                .collect(),
        })?);
        Ok(files)
    }
}
