//! LMG model: the mean-field transition at `s*` and the `1/sqrt(T)` scaling
//! of the Bloch-vector deviation after it.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Context;
use varanneal_core::models::{build_protocol, ModelKind, ModelParams, ProtocolSpec};
use varanneal_core::product::{integrate_sampled, lmg_critical_point, BlochVector, ProductState};

use super::{Output, Report};
use crate::config::{require, require_positive, ConfigError, Section};
use crate::fit::loglog_slope;
use crate::output::{format_float, write_file, Meta, Table};
use crate::plot::{Chart, Series, Style};
use crate::pool::run_sorted;

pub const COMMAND: &str = "lmg-scan";

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub n: usize,
    pub t: Vec<f64>,
    pub dt: f64,
    /// Offset of both initial angles from the fixed point `(pi/2, 0)`.
    pub x0_shift: f64,
    pub intervals: usize,
    /// Window `[collapse_s_min, 1]` for the rescaled-trace comparison.
    pub collapse_s_min: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n: 4,
            t: vec![100.0, 1000.0, 10000.0],
            dt: 0.01,
            x0_shift: 1e-4,
            intervals: 200,
            collapse_s_min: 0.45,
        }
    }
}

impl Params {
    pub fn from_section(sec: &Section) -> Result<Self, ConfigError> {
        sec.check_keys(&["n", "t", "dt", "x0_shift", "intervals", "collapse_s_min"])?;
        let d = Params::default();
        let p = Params {
            n: sec.get("n", d.n)?,
            t: sec.get_list("t", &d.t)?,
            dt: sec.get("dt", d.dt)?,
            x0_shift: sec.get("x0_shift", d.x0_shift)?,
            intervals: sec.get("intervals", d.intervals)?,
            collapse_s_min: sec.get("collapse_s_min", d.collapse_s_min)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        require(self.n >= 2, "n", "must be >= 2")?;
        require_positive(&self.t, "t")?;
        require_positive(&[self.dt], "dt")?;
        require(self.x0_shift.is_finite(), "x0_shift", "must be finite")?;
        require(self.intervals >= 1, "intervals", "must be >= 1")?;
        require(
            (0.0..1.0).contains(&self.collapse_s_min),
            "collapse_s_min",
            "must lie in [0, 1)",
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub t: f64,
    pub grid: Vec<f64>,
    pub bloch: Vec<BlochVector>,
    pub ground: Vec<BlochVector>,
    /// `||delta S(s)||`
    pub deviation: Vec<f64>,
}

impl Trace {
    pub fn final_deviation(&self) -> f64 {
        *self.deviation.last().expect("non-empty trace")
    }

    pub fn rescaled(&self) -> Vec<f64> {
        self.deviation.iter().map(|d| d * self.t.sqrt()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub params: Params,
    pub s_star: f64,
    pub traces: Vec<Trace>,
    pub slope: Option<f64>,
    /// Largest ratio between the rescaled traces at a common grid point with
    /// `s >= collapse_s_min`.
    pub collapse_ratio: f64,
}

pub fn spec(n: usize) -> anyhow::Result<ProtocolSpec> {
    Ok(build_protocol(ModelKind::Lmg, n, ModelParams::None)?)
}

fn run_one(p: &Params, t: f64) -> anyhow::Result<Trace> {
    let spec = spec(p.n)?;
    let x0 = ProductState::for_spec(&spec, FRAC_PI_2 + p.x0_shift, p.x0_shift);
    let traj = integrate_sampled(&spec, t, p.dt, &x0, p.intervals)
        .with_context(|| format!("T = {t}"))?;
    let deviation = traj.bloch_distances().context("LMG run without Bloch data")?;
    Ok(Trace {
        t,
        grid: traj.grid.clone(),
        bloch: traj.bloch.clone().unwrap_or_default(),
        ground: traj.ground.iter().map(|g| g.bloch()).collect(),
        deviation,
    })
}

pub fn run(p: &Params, workers: usize) -> anyhow::Result<Outcome> {
    p.validate()?;
    let keys: Vec<u64> = p.t.iter().map(|t| t.to_bits()).collect();
    let mut traces: Vec<Trace> = run_sorted(workers, keys, |t| run_one(p, f64::from_bits(*t)))?
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    traces.sort_by(|a, b| a.t.total_cmp(&b.t));
    let ts: Vec<f64> = traces.iter().map(|t| t.t).collect();
    let ds: Vec<f64> = traces.iter().map(Trace::final_deviation).collect();
    let rescaled: Vec<Vec<f64>> = traces.iter().map(Trace::rescaled).collect();
    let mut collapse_ratio: f64 = 1.0;
    for (k, s) in traces[0].grid.iter().enumerate() {
        if *s < p.collapse_s_min {
            continue;
        }
        let vals = rescaled.iter().map(|r| r[k]);
        let hi = vals.clone().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.fold(f64::INFINITY, f64::min);
        collapse_ratio = collapse_ratio.max(if lo > 0.0 { hi / lo } else { f64::INFINITY });
    }
    Ok(Outcome {
        params: p.clone(),
        s_star: lmg_critical_point(p.n),
        slope: loglog_slope(&ts, &ds),
        traces,
        collapse_ratio,
    })
}

impl Report for Outcome {
    fn write(&self, out: &Output) -> anyhow::Result<Vec<PathBuf>> {
        let meta = Meta::new(COMMAND, &self.params, Some(self.params.dt));
        let mut summary = format!("{}\n", meta.comment());
        let _ = writeln!(summary, "s_star = {}", self.s_star);
        let _ = writeln!(summary, "n = {}", self.params.n);
        let _ = writeln!(
            summary,
            "slope = {}",
            self.slope.map(format_float).unwrap_or_default()
        );
        let _ = writeln!(summary, "collapse_ratio = {}", format_float(self.collapse_ratio));
        let mut files = vec![write_file(out.dir(), "lmg_summary.txt", &summary)?];

        let mut f = Table::new(&["T", "final_deviation", "s_star"]);
        let mut tr = Table::new(&[
            "T", "s", "Sx", "Sy", "Sz", "S0x", "S0y", "S0z", "deviation", "rescaled",
        ]);
        for t in &self.traces {
            f.push(vec![t.t.into(), t.final_deviation().into(), self.s_star.into()]);
            let rescaled = t.rescaled();
            for k in 0..t.grid.len() {
                let (b, g) = (t.bloch[k], t.ground[k]);
                tr.push(vec![
                    t.t.into(),
                    t.grid[k].into(),
                    b.x.into(),
                    b.y.into(),
                    b.z.into(),
                    g.x.into(),
                    g.y.into(),
                    g.z.into(),
                    t.deviation[k].into(),
                    rescaled[k].into(),
                ]);
            }
        }
        files.push(out.csv("lmg_scan.csv", &f, &meta)?);
        files.push(out.csv("lmg_traces.csv", &tr, &meta)?);
        files.extend(out.svg("lmg_rescaled.svg", || Chart {
            title: format!("LMG N={}, s*={}", self.params.n, self.s_star),
            x_label: "s".into(),
            y_label: "sqrt(T) ||delta S||".into(),
            log_x: false,
            log_y: false,
            style: Style::Line,
            series: self
                .traces
                .iter()
                .map(|t| Series {
                    name: format!("T={}", t.t),
                    points: t.grid.iter().copied().zip(t.rescaled()).collect(),
                })
                .collect(),
        })?);
        Ok(files)
    }
}
