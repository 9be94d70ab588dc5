//! Assembled `kappa` bound on a product manifold together with the measured
//! `max_s ||delta x(s)||_eta * T` of the actual variational dynamics.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Context;
use varanneal_core::linearization::{eta_deviation, kappa_bound, uniform_grid, KappaReport};
use varanneal_core::models::{build_protocol, ModelKind, ModelParams, ProtocolSpec};
use varanneal_core::product::{integrate_window, lmg_critical_point};

use super::{Output, Report};
use crate::config::{require, require_positive, ConfigError, Section};
use crate::output::{format_float, write_file, Meta, Table};
use crate::pool::run_sorted;

pub const COMMAND: &str = "kappa-report";

/// Grid points closer than this to the LMG transition make the bound diverge.
pub const CRITICAL_MARGIN: f64 = 0.025;

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub model: ModelKind,
    pub n: usize,
    pub a: f64,
    pub t: Vec<f64>,
    pub dt: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub grid_points: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            model: ModelKind::TwoQubit,
            n: 2,
            a: 0.0,
            t: vec![8.0, 16.0, 32.0, 64.0, 128.0],
            dt: 0.01,
            s_min: 0.0,
            s_max: 1.0,
            grid_points: 201,
        }
    }
}

impl Params {
    pub fn from_section(sec: &Section) -> Result<Self, ConfigError> {
        sec.check_keys(&["model", "n", "a", "t", "dt", "s_min", "s_max", "grid_points"])?;
        let d = Params::default();
        let model: ModelKind = sec.get("model", d.model)?;
        let n_default = match model {
            ModelKind::TwoQubit => 2,
            ModelKind::Lmg => 4,
            _ => 0,
        };
        let p = Params {
            model,
            n: sec.get("n", n_default)?,
            a: sec.get("a", d.a)?,
            t: sec.get_list("t", &d.t)?,
            dt: sec.get("dt", d.dt)?,
            s_min: sec.get("s_min", d.s_min)?,
            s_max: sec.get("s_max", d.s_max)?,
            grid_points: sec.get("grid_points", d.grid_points)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        require(
            self.model != ModelKind::SpinGlass,
            "model",
            "kappa reports need a product manifold (two-qubit, bipartite or lmg)",
        )?;
        require(self.a >= 0.0, "a", "catalyst must be >= 0")?;
        require_positive(&self.t, "t")?;
        require_positive(&[self.dt], "dt")?;
        require(
            0.0 <= self.s_min && self.s_min < self.s_max && self.s_max <= 1.0,
            "s_min",
            "need 0 <= s_min < s_max <= 1",
        )?;
        require(self.grid_points >= 2, "grid_points", "must be >= 2")
    }

    pub fn spec(&self) -> anyhow::Result<ProtocolSpec> {
        let params = match self.model {
            ModelKind::TwoQubit | ModelKind::Bipartite => ModelParams::Catalyst(self.a),
            _ => ModelParams::None,
        };
        Ok(build_protocol(self.model, self.n, params)?)
    }

    /// Whether the LMG transition lies inside (or next to) the window.
    pub fn crosses_transition(&self) -> bool {
        if self.model != ModelKind::Lmg {
            return false;
        }
        let sc = lmg_critical_point(self.n);
        self.s_min - CRITICAL_MARGIN < sc && sc < self.s_max + CRITICAL_MARGIN
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub t: f64,
    /// `max_s ||delta x(s)||_eta`
    pub max_deviation: f64,
    /// `max_deviation * T / kappa`, absent when `kappa` is zero or undefined.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub params: Params,
    /// `None` when the window crosses the LMG transition or the gap closes.
    pub report: Option<KappaReport>,
    pub warning: Option<String>,
    pub measurements: Vec<Measurement>,
}

impl Outcome {
    pub fn kappa(&self) -> Option<f64> {
        self.report.as_ref().and_then(|r| r.kappa)
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.measurements
            .iter()
            .filter_map(|m| m.ratio)
            .reduce(f64::max)
    }
}

pub fn run(p: &Params, workers: usize) -> anyhow::Result<Outcome> {
    p.validate()?;
    let spec = p.spec()?;
    if p.crosses_transition() {
        let sc = lmg_critical_point(p.n);
        return Ok(Outcome {
            params: p.clone(),
            report: None,
            warning: Some(format!(
                "divergence: the window [{}, {}] contains the mean-field transition s* = {sc}, where x0_dot has a square-root divergence; kappa is unbounded",
                p.s_min, p.s_max
            )),
            measurements: Vec::new(),
        });
    }
    let grid = uniform_grid(p.s_min, p.s_max, p.grid_points);
    let report = kappa_bound(&spec, &grid)?;
    let mut warning = report.note.clone();
    let Some(kappa) = report.kappa else {
        warning.get_or_insert_with(|| "gapless: kappa undefined".into());
        return Ok(Outcome {
            params: p.clone(),
            report: Some(report),
            warning,
            measurements: Vec::new(),
        });
    };
    let start = report.points[0].x0;
    let keys: Vec<u64> = p.t.iter().map(|t| t.to_bits()).collect();
    let measurements = run_sorted(workers, keys, |bits| {
        let t = f64::from_bits(*bits);
        let traj = integrate_window(
            &spec,
            t,
            p.dt,
            &start,
            (p.s_min, p.s_max),
            p.grid_points - 1,
        )
        .with_context(|| format!("T = {t}"))?;
        let mut max_deviation: f64 = 0.0;
        for (point, x) in report.points.iter().zip(&traj.states) {
            max_deviation = max_deviation.max(eta_deviation(point, x)?);
        }
        Ok(Measurement {
            t,
            max_deviation,
            ratio: (kappa > 0.0).then(|| max_deviation * t / kappa),
        })
    })?
    .into_iter()
    .map(|(_, m)| m)
    .collect();
    Ok(Outcome {
        params: p.clone(),
        report: Some(report),
        warning,
        measurements,
    })
}

impl Outcome {
    pub fn to_text(&self, meta: &Meta) -> String {
        let mut out = format!("{}\n", meta.comment());
        match &self.report {
            Some(r) => out.push_str(&r.to_text()),
            None => {
                let _ = writeln!(out, "model = {}", self.params.model.name());
                let _ = writeln!(out, "n = {}", self.params.n);
                let _ = writeln!(out, "kappa = divergent");
            }
        }
        if let Some(r) = &self.report {
            if r.max_xdot_eta == 0.0 {
                let _ = writeln!(out, "x0_dot = identically zero on the window");
            }
        }
        if let Some(w) = &self.warning {
            let _ = writeln!(out, "warning = {w}");
        }
        for m in &self.measurements {
            let _ = writeln!(
                out,
                "T = {} max_deviation_eta = {} max_deviation_eta_times_T = {} ratio_to_kappa = {}",
                format_float(m.t),
                format_float(m.max_deviation),
                format_float(m.max_deviation * m.t),
                m.ratio.map(format_float).unwrap_or_default()
            );
        }
        out
    }
}

impl Report for Outcome {
    fn write(&self, out: &Output) -> anyhow::Result<Vec<PathBuf>> {
        let meta = Meta::new(COMMAND, &self.params, Some(self.params.dt));
        let mut files = vec![write_file(out.dir(), "kappa_report.txt", &self.to_text(&meta))?];
        let mut t = Table::new(&["T", "max_deviation_eta", "deviation_times_T", "kappa", "ratio"]);
        for m in &self.measurements {
            t.push(vec![
                m.t.into(),
                m.max_deviation.into(),
                (m.max_deviation * m.t).into(),
                self.kappa().into(),
                m.ratio.into(),
            ]);
        }
        files.push(out.csv("kappa_measured.csv", &t, &meta)?);
        Ok(files)
    }
}
