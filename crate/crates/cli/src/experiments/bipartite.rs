//! Bipartite model: variational dynamics are independent of the number of
//! extra levels, while the exact mid-protocol entanglement grows with `A`.

use std::path::PathBuf;

use anyhow::Context;
use varanneal_core::exact::{
    entanglement_entropy, ground_state, phase_aligned_distance, Bipartition,
};
use varanneal_core::models::{build_protocol, ModelKind, ModelParams, ProtocolSpec};
use varanneal_core::product::{integrate_sampled, variational_ground_state, ProductState};

use super::{Output, Report};
use crate::config::{require, require_positive, ConfigError, Section};
use crate::output::{Meta, Table};
use crate::plot::{Chart, Series, Style};
use crate::pool::run_sorted;

pub const COMMAND: &str = "bipartite-scan";

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Numbers of extra levels per side.
    pub n: Vec<usize>,
    pub a: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    pub mid_s: f64,
    pub intervals: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n: vec![0, 14],
            a: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            t: 10.0,
            dt: 0.01,
            mid_s: 0.5,
            intervals: 100,
        }
    }
}

impl Params {
    pub fn from_section(sec: &Section) -> Result<Self, ConfigError> {
        sec.check_keys(&["n", "a", "t", "dt", "mid_s", "intervals"])?;
        let d = Params::default();
        let p = Params {
            n: sec.get_list("n", &d.n)?,
            a: sec.get_list("a", &d.a)?,
            t: sec.get("t", d.t)?,
            dt: sec.get("dt", d.dt)?,
            mid_s: sec.get("mid_s", d.mid_s)?,
            intervals: sec.get("intervals", d.intervals)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        require(!self.n.is_empty(), "n", "list must not be empty")?;
        require(self.n.iter().all(|n| *n <= 14), "n", "exact columns need N <= 14")?;
        require(!self.a.is_empty(), "a", "grid must not be empty")?;
        require(self.a.iter().all(|a| *a >= 0.0), "a", "catalyst must be >= 0")?;
        require_positive(&[self.t], "t")?;
        require_positive(&[self.dt], "dt")?;
        require((0.0..=1.0).contains(&self.mid_s), "mid_s", "must lie in [0, 1]")?;
        require(self.intervals >= 1, "intervals", "must be >= 1")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub n: usize,
    pub a: f64,
    pub grid: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub distances: Vec<f64>,
    pub final_distance: f64,
    pub mid_vgs_distance: f64,
    pub mid_entropy: f64,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub params: Params,
    pub runs: Vec<Run>,
}

impl Outcome {
    pub fn run(&self, n: usize, a: f64) -> Option<&Run> {
        self.runs.iter().find(|r| r.n == n && r.a == a)
    }
}

pub fn spec(n: usize, a: f64) -> anyhow::Result<ProtocolSpec> {
    Ok(build_protocol(ModelKind::Bipartite, n, ModelParams::Catalyst(a))?)
}

fn run_one(p: &Params, n: usize, a: f64) -> anyhow::Result<Run> {
    let spec = spec(n, a)?;
    let traj = integrate_sampled(&spec, p.t, p.dt, &ProductState::plus(&spec), p.intervals)
        .with_context(|| format!("N = {n}, A = {a}"))?;
    let gs = ground_state(&spec.hamiltonian_at(p.mid_s)?)?;
    let cut = Bipartition::new(spec.local_dims().to_vec(), 1);
    let x0 = variational_ground_state(&spec, p.mid_s, &ProductState::plus(&spec))?;
    Ok(Run {
        n,
        a,
        grid: traj.grid.clone(),
        theta: traj.states.iter().map(|x| x.theta).collect(),
        phi: traj.states.iter().map(|x| x.phi).collect(),
        final_distance: *traj.distances.last().context("empty trajectory")?,
        distances: traj.distances,
        mid_vgs_distance: phase_aligned_distance(&x0.embed(), &gs.state)?,
        mid_entropy: entanglement_entropy(&gs.state, &cut)?,
    })
}

pub fn run(p: &Params, workers: usize) -> anyhow::Result<Outcome> {
    p.validate()?;
    let keys: Vec<(usize, u64)> = p
        .n
        .iter()
        .flat_map(|n| p.a.iter().map(move |a| (*n, a.to_bits())))
        .collect();
    let mut runs: Vec<Run> = run_sorted(workers, keys, |(n, a)| run_one(p, *n, f64::from_bits(*a)))?
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    runs.sort_by(|x, y| x.n.cmp(&y.n).then(x.a.total_cmp(&y.a)));
    Ok(Outcome {
        params: p.clone(),
        runs,
    })
}

impl Report for Outcome {
    fn write(&self, out: &Output) -> anyhow::Result<Vec<PathBuf>> {
        let meta = Meta::new(COMMAND, &self.params, Some(self.params.dt));
        let mut t = Table::new(&[
            "N",
            "A",
            "T",
            "final_distance",
            "vgs_exact_distance_mid",
            "entropy_exact_mid",
        ]);
        let mut tr = Table::new(&["N", "A", "s", "theta", "phi", "distance"]);
        for r in &self.runs {
            t.push(vec![
                r.n.into(),
                r.a.into(),
                self.params.t.into(),
                r.final_distance.into(),
                r.mid_vgs_distance.into(),
                r.mid_entropy.into(),
            ]);
            for k in 0..r.grid.len() {
                tr.push(vec![
                    r.n.into(),
                    r.a.into(),
                    r.grid[k].into(),
                    r.theta[k].into(),
                    r.phi[k].into(),
                    r.distances[k].into(),
                ]);
            }
        }
        let mut files = vec![
            out.csv("bipartite_scan.csv", &t, &meta)?,
            out.csv("bipartite_traces.csv", &tr, &meta)?,
        ];
        files.extend(out.svg("bipartite_entropy.svg", || Chart {
            title: "exact mid-protocol entropy".into(),
            x_label: "A".into(),
            y_label: "S".into(),
            log_x: false,
            log_y: false,
            style: Style::Line,
            series: self
                .params
                .n
                .iter()
                .map(|n| Series {
                    name: format!("N={n}"),
                    points: self
                        .runs
                        .iter()
                        .filter(|r| r.n == *n)
                        .map(|r| (r.a, r.mid_entropy))
                        .collect(),
                })
                .collect(),
        })?);
        Ok(files)
    }
}
