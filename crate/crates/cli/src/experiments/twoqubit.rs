//! Two-qubit model: final-distance scaling in `T` and its relation to the
//! entanglement of the exact mid-protocol ground state.

use std::path::PathBuf;

use anyhow::Context;
use varanneal_core::exact::{
    entanglement_entropy, evolve_exact_with, ground_state, phase_aligned_distance, Bipartition,
    ExactSampling, StateVector,
};
use varanneal_core::models::{build_protocol, ModelKind, ModelParams, ProtocolSpec};
use varanneal_core::product::{integrate_sampled, variational_ground_state, ProductState};

use super::{Output, Report};
use crate::config::{require, require_positive, ConfigError, Section};
use crate::fit::loglog_slope;
use crate::output::{Meta, Table};
use crate::plot::{Chart, Series, Style};
use crate::pool::run_sorted;

pub const COMMAND: &str = "twoqubit-scan";

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub a: Vec<f64>,
    pub t: Vec<f64>,
    pub dt: f64,
    /// Only `T >= fit_t_min` enters the slope fit.
    pub fit_t_min: f64,
    pub mid_s: f64,
    pub intervals: usize,
    /// Also run the exact evolution for the oracle column.
    pub exact: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            a: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            t: vec![0.5, 1.5, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0],
            dt: 0.01,
            fit_t_min: 2.0,
            mid_s: 0.5,
            intervals: 100,
            exact: true,
        }
    }
}

impl Params {
    pub fn from_section(sec: &Section) -> Result<Self, ConfigError> {
        sec.check_keys(&["a", "t", "dt", "fit_t_min", "mid_s", "intervals", "exact"])?;
        let d = Params::default();
        let p = Params {
            a: sec.get_list("a", &d.a)?,
            t: sec.get_list("t", &d.t)?,
            dt: sec.get("dt", d.dt)?,
            fit_t_min: sec.get("fit_t_min", d.fit_t_min)?,
            mid_s: sec.get("mid_s", d.mid_s)?,
            intervals: sec.get("intervals", d.intervals)?,
            exact: sec.get("exact", d.exact)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        require(!self.a.is_empty(), "a", "grid must not be empty")?;
        require(self.a.iter().all(|a| *a >= 0.0), "a", "catalyst must be >= 0")?;
        require_positive(&self.t, "t")?;
        require_positive(&[self.dt], "dt")?;
        require((0.0..=1.0).contains(&self.mid_s), "mid_s", "must lie in [0, 1]")?;
        require(self.intervals >= 1, "intervals", "must be >= 1")
    }
}

/// Quantities that depend on `A` only.
#[derive(Debug, Clone, PartialEq)]
pub struct MidProtocol {
    pub a: f64,
    /// Entropy of the exact ground state at `mid_s`.
    pub entropy: f64,
    /// Distance between the exact and the variational ground state at `mid_s`.
    pub vgs_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub a: f64,
    pub t: f64,
    /// `||delta psi(1)||` to the variational ground state.
    pub final_distance: f64,
    /// Distance of the exactly evolved final state to the exact ground state.
    pub exact_final_distance: Option<f64>,
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub params: Params,
    pub mid: Vec<MidProtocol>,
    pub rows: Vec<Row>,
    /// `(A, slope)` of `log ||delta psi(1)||` against `log T`.
    pub slopes: Vec<(f64, Option<f64>)>,
}

impl Outcome {
    pub fn row(&self, a: f64, t: f64) -> Option<&Row> {
        self.rows.iter().find(|r| r.a == a && r.t == t)
    }

    pub fn slope(&self, a: f64) -> Option<f64> {
        self.slopes.iter().find(|s| s.0 == a).and_then(|s| s.1)
    }

    pub fn mid(&self, a: f64) -> Option<&MidProtocol> {
        self.mid.iter().find(|m| m.a == a)
    }
}

pub fn spec(a: f64) -> anyhow::Result<ProtocolSpec> {
    Ok(build_protocol(ModelKind::TwoQubit, 2, ModelParams::Catalyst(a))?)
}

pub fn mid_protocol(spec: &ProtocolSpec, s: f64) -> anyhow::Result<(f64, f64)> {
    let gs = ground_state(&spec.hamiltonian_at(s)?)?;
    let cut = Bipartition::new(spec.local_dims().to_vec(), 1);
    let entropy = entanglement_entropy(&gs.state, &cut)?;
    let x0 = variational_ground_state(spec, s, &ProductState::plus(spec))?;
    let distance = phase_aligned_distance(&x0.embed(), &gs.state)?;
    Ok((entropy, distance))
}

fn run_one(p: &Params, a: f64, t: f64) -> anyhow::Result<Row> {
    let spec = spec(a)?;
    let x0 = ProductState::plus(&spec);
    let traj = integrate_sampled(&spec, t, p.dt, &x0, p.intervals)
        .with_context(|| format!("A = {a}, T = {t}"))?;
    let exact_final_distance = if p.exact {
        let sampling = ExactSampling {
            intervals: 1,
            keep_states: true,
        };
        // the propagator needs dt < T; short horizons fall back to a proportionally smaller step
        let dt = p.dt.min(t / 4.0);
        let tr = evolve_exact_with(&spec, t, dt, &StateVector::plus_state(2), sampling)?;
        let target = ground_state(&spec.hamiltonian_at(1.0)?)?;
        let last = tr.final_state().context("exact evolution kept no state")?;
        Some(phase_aligned_distance(last, &target.state)?)
    } else {
        None
    };
    let last = traj.final_state();
    Ok(Row {
        a,
        t,
        final_distance: *traj.distances.last().context("empty trajectory")?,
        exact_final_distance,
        theta: last.theta,
        phi: last.phi,
    })
}

pub fn run(p: &Params, workers: usize) -> anyhow::Result<Outcome> {
    p.validate()?;
    let keys: Vec<(u64, u64)> = p
        .a
        .iter()
        .flat_map(|a| p.t.iter().map(move |t| (a.to_bits(), t.to_bits())))
        .collect();
    let rows: Vec<Row> = run_sorted(workers, keys, |(a, t)| {
        run_one(p, f64::from_bits(*a), f64::from_bits(*t))
    })?
    .into_iter()
    .map(|(_, r)| r)
    .collect();
    let mut rows = rows;
    rows.sort_by(|x, y| x.a.total_cmp(&y.a).then(x.t.total_cmp(&y.t)));

    let mut a_values = p.a.clone();
    a_values.sort_by(f64::total_cmp);
    a_values.dedup();
    let mut mid = Vec::new();
    let mut slopes = Vec::new();
    for &a in &a_values {
        let (entropy, vgs_distance) = mid_protocol(&spec(a)?, p.mid_s)?;
        mid.push(MidProtocol {
            a,
            entropy,
            vgs_distance,
        });
        let (ts, ds): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| r.a == a && r.t >= p.fit_t_min)
            .map(|r| (r.t, r.final_distance))
            .unzip();
        slopes.push((a, loglog_slope(&ts, &ds)));
    }
    Ok(Outcome {
        params: p.clone(),
        mid,
        rows,
        slopes,
    })
}

impl Report for Outcome {
    fn write(&self, out: &Output) -> anyhow::Result<Vec<PathBuf>> {
        let meta = Meta::new(COMMAND, &self.params, Some(self.params.dt));
        let mut t = Table::new(&[
            "A",
            "T",
            "final_distance",
            "exact_final_distance",
            "entropy_exact_mid",
            "vgs_exact_distance_mid",
            "theta_final",
            "phi_final",
        ]);
        for r in &self.rows {
            let m = self.mid(r.a).context("missing mid-protocol data")?;
            t.push(vec![
                r.a.into(),
                r.t.into(),
                r.final_distance.into(),
                r.exact_final_distance.into(),
                m.entropy.into(),
                m.vgs_distance.into(),
                r.theta.into(),
                r.phi.into(),
            ]);
        }
        let mut files = vec![out.csv("twoqubit_scan.csv", &t, &meta)?];
        let mut s = Table::new(&["A", "slope", "fit_t_min", "points"]);
        for (a, slope) in &self.slopes {
            let points = self
                .rows
                .iter()
                .filter(|r| r.a == *a && r.t >= self.params.fit_t_min)
                .count();
            s.push(vec![
                (*a).into(),
                (*slope).into(),
                self.params.fit_t_min.into(),
                points.into(),
            ]);
        }
        files.push(out.csv("twoqubit_slopes.csv", &s, &meta)?);
        files.extend(out.svg("twoqubit_scan.svg", || Chart {
            title: "two-qubit final distance".into(),
            x_label: "T".into(),
            y_label: "||delta psi(1)||".into(),
            log_x: true,
            log_y: true,
            style: Style::Line,
            series: self
                .mid
                .iter()
                .map(|m| Series {
                    name: format!("A={}", m.a),
                    points: self
                        .rows
                        .iter()
                        .filter(|r| r.a == m.a)
                        .map(|r| (r.t, r.final_distance))
                        .collect(),
                })
                .collect(),
        })?);
        Ok(files)
    }
}
