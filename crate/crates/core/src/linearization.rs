//! Linearized variational flow around the instantaneous variational ground
//! state: the generator `K`, its bi-orthogonal spectrum, the pseudo-metric
//! `eta`, and the `kappa` prefactor of the `1/T` bound.
//!
//! Two charts are available. [`jacobian_k`] differentiates the closed-form
//! equations in `(theta, phi)`. [`jacobian_k_centered`] uses a stereographic
//! chart centred on the expansion point, which stays regular at the poles
//! where the target states of the two-qubit and LMG models sit. Right
//! eigenvectors are normalized in the manifold metric, so `omega`, `eta`-norms
//! and `kappa` do not depend on the chart.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64 as C64;
use num_traits::Float;

use crate::models::{check_s, ModelKind, ProtocolSpec};
use crate::product::{
    eom_rhs, lmg_critical_point, site, tangent_flow, variational_ground_state, ProductState,
};
use crate::{Error, Result};

/// Finite-difference step of the Jacobian.
pub const FD_STEP: f64 = 1e-5;
/// Largest `|X(x0)|` accepted as stationary.
pub const STATIONARY_TOL: f64 = 1e-8;
/// `min |omega|` below which the bound is not assembled.
pub const GAPLESS_TOL: f64 = 1e-6;
const CONDITION_LIMIT: f64 = 1e8;

const I: C64 = C64::new(0.0, 1.0);

/// Coordinates in which a [`LinearizedMap`] is expressed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Chart {
    Angles,
    Centered(LocalChart),
}

/// Site state `(u0 + eps u1) / sqrt(1 + |eps|^2)` with `eps = e1 + i e2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalChart {
    pub u0: [C64; 2],
    pub u1: [C64; 2],
}

impl LocalChart {
    /// Chart centred on `x`, with `e1` along increasing `theta`.
    pub fn centered(x: &ProductState) -> Self {
        let (sh, ch) = (x.theta / 2.0).sin_cos();
        LocalChart {
            u0: site(x.theta, x.phi),
            u1: [C64::new(-sh, 0.0), C64::from_polar(ch, -x.phi)],
        }
    }

    pub fn site(&self, eps: Vector2<f64>) -> [C64; 2] {
        let e = C64::new(eps[0], eps[1]);
        let n = (1.0 + e.norm_sqr()).sqrt();
        [
            (self.u0[0] + e * self.u1[0]) / n,
            (self.u0[1] + e * self.u1[1]) / n,
        ]
    }

    pub fn site_derivatives(&self, eps: Vector2<f64>) -> [[C64; 2]; 2] {
        let e = C64::new(eps[0], eps[1]);
        let n = (1.0 + e.norm_sqr()).sqrt();
        let n3 = n * n * n;
        let f = [self.u0[0] + e * self.u1[0], self.u0[1] + e * self.u1[1]];
        let d = |dir: C64, comp: f64| {
            [
                dir * self.u1[0] / n - f[0] * (comp / n3),
                dir * self.u1[1] / n - f[1] * (comp / n3),
            ]
        };
        [d(C64::new(1.0, 0.0), eps[0]), d(I, eps[1])]
    }

    /// Chart coordinates of `x`; `None` at the antipode of the centre.
    pub fn coordinates(&self, x: &ProductState) -> Option<Vector2<f64>> {
        let v = x.site_vector();
        let a = self.u0[0].conj() * v[0] + self.u0[1].conj() * v[1];
        let b = self.u1[0].conj() * v[0] + self.u1[1].conj() * v[1];
        if a.norm() < 1e-12 {
            return None;
        }
        let e = b / a;
        Some(Vector2::new(e.re, e.im))
    }
}

/// Jacobian of the physical-time variational flow at a stationary point.
#[derive(Debug, Clone, Copy)]
pub struct LinearizedMap {
    pub k: Matrix2<f64>,
    pub s: f64,
    pub x0: ProductState,
    pub chart: Chart,
    /// Manifold metric at `x0` in the same chart.
    pub metric: Matrix2<f64>,
    /// `|X(x0)|`
    pub stationarity: f64,
    /// Max-entry difference between step `h` and `2h` Jacobians.
    pub error_estimate: f64,
}

fn central_jacobian<F>(mut rates: F, h: f64) -> Result<Matrix2<f64>>
where
    F: FnMut(Vector2<f64>) -> Result<Vector2<f64>>,
{
    let mut k = Matrix2::zeros();
    for col in 0..2 {
        let mut d = Vector2::zeros();
        d[col] = h;
        let c = (rates(d)? - rates(-d)?) / (2.0 * h);
        k.set_column(col, &c);
    }
    Ok(k)
}

fn finish(
    k: Matrix2<f64>,
    k2: Matrix2<f64>,
    x: Vector2<f64>,
    s: f64,
    x0: &ProductState,
    chart: Chart,
    metric: Matrix2<f64>,
) -> Result<LinearizedMap> {
    let stationarity = x.norm();
    if !(stationarity < STATIONARY_TOL) {
        return Err(Error::NotStationary {
            residual: stationarity,
        });
    }
    Ok(LinearizedMap {
        k,
        s,
        x0: *x0,
        chart,
        metric,
        stationarity,
        error_estimate: (k - k2).abs().max(),
    })
}

/// `K = dX/dx` by central differences of the closed-form rates in `(theta, phi)`.
pub fn jacobian_k(spec: &ProtocolSpec, s: f64, x0: &ProductState) -> Result<LinearizedMap> {
    let rates = |d: Vector2<f64>| -> Result<Vector2<f64>> {
        let y = ProductState {
            theta: x0.theta + d[0],
            phi: x0.phi + d[1],
            ..*x0
        };
        let (a, b) = eom_rhs(spec, s, &y)?;
        Ok(Vector2::new(a, b))
    };
    let x = rates(Vector2::zeros())?;
    let k = central_jacobian(rates, FD_STEP)?;
    let k2 = central_jacobian(rates, 2.0 * FD_STEP)?;
    let metric = crate::product::geometry(spec, x0)?.g;
    finish(k, k2, x, s, x0, Chart::Angles, metric)
}

/// `K = dX/dx` in a stereographic chart centred on `x0`, from the tangent-space projection.
pub fn jacobian_k_centered(
    spec: &ProtocolSpec,
    s: f64,
    x0: &ProductState,
) -> Result<LinearizedMap> {
    if spec.kind() == ModelKind::SpinGlass {
        return Err(Error::Unsupported {
            model: spec.kind().name(),
            operation: "product-manifold linearization",
        });
    }
    check_s(s)?;
    let chart = LocalChart::centered(x0);
    let (sites, local_dim) = (x0.sites(), x0.local_dim());
    let flow = |d: Vector2<f64>| {
        tangent_flow(
            spec,
            s,
            sites,
            local_dim,
            chart.site(d),
            chart.site_derivatives(d),
        )
    };
    let rates = |d: Vector2<f64>| -> Result<Vector2<f64>> { Ok(flow(d).rates) };
    let center = flow(Vector2::zeros());
    let k = central_jacobian(rates, FD_STEP)?;
    let k2 = central_jacobian(rates, 2.0 * FD_STEP)?;
    finish(k, k2, center.rates, s, x0, Chart::Centered(chart), center.g)
}

/// Eigen-decomposition of `iK` with bi-orthonormal left vectors.
#[derive(Debug, Clone, Copy)]
pub struct BiorthogonalSpectrum {
    /// Real parts of the eigenvalues of `iK`, ascending.
    pub omegas: [f64; 2],
    /// Largest `|Im|` among the eigenvalues of `iK`.
    pub imag_residual: f64,
    /// Columns are right eigenvectors, normalized in the manifold metric.
    pub right: Matrix2<C64>,
    /// Columns are left eigenvectors, `left = right^{-dagger}`.
    pub left: Matrix2<C64>,
    pub generator: Matrix2<C64>,
    /// Max-entry residual of `left^dagger right - 1`.
    pub biorthogonality: f64,
    pub condition: f64,
}

impl BiorthogonalSpectrum {
    /// Largest `|omega + omega'|` over the pairing, zero for a perfectly paired spectrum.
    pub fn pairing_residual(&self) -> f64 {
        (self.omegas[0] + self.omegas[1]).abs()
    }

    pub fn min_abs_omega(&self) -> f64 {
        self.omegas[0].abs().min(self.omegas[1].abs())
    }

    /// Coefficients of `v` in the right eigenbasis.
    pub fn coefficients(&self, v: &Vector2<f64>) -> Vector2<C64> {
        self.left.adjoint() * v.map(|x| C64::new(x, 0.0))
    }

    fn rephase(&mut self, j: usize, phase: C64) {
        for r in 0..2 {
            self.right[(r, j)] *= phase;
            self.left[(r, j)] *= phase;
        }
    }
}

fn max_entry(m: &Matrix2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn spectrum(map: &LinearizedMap) -> Result<BiorthogonalSpectrum> {
    let m: Matrix2<C64> = map.k.map(c) * I;
    let tr = m[(0, 0)] + m[(1, 1)];
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (tr * tr / 4.0 - det).sqrt();
    let mut lambdas = [tr / 2.0 - disc, tr / 2.0 + disc];
    lambdas.sort_by(|a, b| a.re.total_cmp(&b.re));
    let imag_residual = lambdas[0].im.abs().max(lambdas[1].im.abs());
    let g = map.metric.map(c);
    let mut right = Matrix2::<C64>::zeros();
    for (j, lambda) in lambdas.iter().enumerate() {
        let a = Vector2::new(m[(0, 1)], lambda - m[(0, 0)]);
        let b = Vector2::new(lambda - m[(1, 1)], m[(1, 0)]);
        let mut v = if a.norm() >= b.norm() { a } else { b };
        if v.norm() < 1e-300 {
            v = if j == 0 {
                Vector2::new(c(1.0), c(0.0))
            } else {
                Vector2::new(c(0.0), c(1.0))
            };
        }
        let gn = (v.adjoint() * g * v)[(0, 0)].re.sqrt();
        right.set_column(j, &(v / c(gn)));
    }
    let sv = right.singular_values();
    let condition = sv.max() / sv.min();
    if !(condition < CONDITION_LIMIT) {
        return Err(Error::NonDiagonalizable { condition });
    }
    let left = right
        .try_inverse()
        .ok_or(Error::NonDiagonalizable { condition })?
        .adjoint();
    let biorthogonality = max_entry(&(left.adjoint() * right - Matrix2::identity()));
    Ok(BiorthogonalSpectrum {
        omegas: [lambdas[0].re, lambdas[1].re],
        imag_residual,
        right,
        left,
        generator: m,
        biorthogonality,
        condition,
    })
}

/// `eta = sum_i |w~_i><w~_i|` with its defining-relation residual.
#[derive(Debug, Clone, Copy)]
pub struct PseudoMetric {
    pub eta: Matrix2<C64>,
    /// Max-entry residual of `(iK)^dagger eta - eta iK`.
    pub residual: f64,
    pub min_eigenvalue: f64,
}

impl PseudoMetric {
    pub fn norm(&self, v: &Vector2<f64>) -> f64 {
        let w = v.map(c);
        (w.adjoint() * self.eta * w)[(0, 0)].re.max(0.0).sqrt()
    }
}

pub const PSEUDO_METRIC_TOL: f64 = 1e-8;

pub fn pseudo_metric(spec: &BiorthogonalSpectrum) -> Result<PseudoMetric> {
    let eta = spec.left * spec.left.adjoint();
    let m = spec.generator;
    let residual = max_entry(&(m.adjoint() * eta - eta * m));
    let min_eigenvalue =
        crate::linalg::eigh(&nalgebra::DMatrix::from_fn(2, 2, |i, j| eta[(i, j)])).0[0];
    if !(residual < PSEUDO_METRIC_TOL) || !(min_eigenvalue > 0.0) {
        return Err(Error::PseudoMetric {
            residual,
            min_eigenvalue,
        });
    }
    Ok(PseudoMetric {
        eta,
        residual,
        min_eigenvalue,
    })
}

/// Linearization at the variational ground state nearest to `guess`.
#[derive(Debug, Clone, Copy)]
pub struct GridPoint {
    pub s: f64,
    pub x0: ProductState,
    pub map: LinearizedMap,
    pub spectrum: BiorthogonalSpectrum,
    pub eta: PseudoMetric,
    /// `d x0 / ds` in the chart of `map`.
    pub x0_dot: Vector2<f64>,
}

/// Derivative step of the ground-state curve.
const CURVE_STEP: f64 = 1e-5;

/// Linearizes at `x0(s)` (continued from `guess`) and differentiates the curve.
pub fn linearize_along_curve(
    spec: &ProtocolSpec,
    s: f64,
    guess: &ProductState,
) -> Result<GridPoint> {
    let x0 = variational_ground_state(spec, s, guess)?;
    let map = jacobian_k_centered(spec, s, &x0)?;
    let spectrum = spectrum(&map)?;
    let eta = pseudo_metric(&spectrum)?;
    let Chart::Centered(chart) = map.chart else {
        unreachable!()
    };
    let (lo, hi) = ((s - CURVE_STEP).max(0.0), (s + CURVE_STEP).min(1.0));
    let coords = |t: f64| -> Result<Vector2<f64>> {
        if t == s {
            return Ok(Vector2::zeros());
        }
        let x = variational_ground_state(spec, t, &x0)?;
        chart.coordinates(&x).ok_or(Error::Pole {
            s: Some(t),
            sin_theta: 0.0,
        })
    };
    let x0_dot = (coords(hi)? - coords(lo)?) / (hi - lo);
    Ok(GridPoint {
        s,
        x0,
        map,
        spectrum,
        eta,
        x0_dot,
    })
}

/// `||x - x0(s)||_eta` measured in the chart centred on `x0`.
pub fn eta_deviation(point: &GridPoint, x: &ProductState) -> Result<f64> {
    let Chart::Centered(chart) = point.map.chart else {
        unreachable!()
    };
    let d = chart.coordinates(x).ok_or(Error::Pole {
        s: Some(point.s),
        sin_theta: 0.0,
    })?;
    Ok(point.eta.norm(&d))
}

/// Assembled `kappa` bound and its ingredients.
#[derive(Debug, Clone)]
pub struct KappaReport {
    pub model: ModelKind,
    pub n: usize,
    pub catalyst: f64,
    pub grid: Vec<f64>,
    /// `min |omega_i(s)|` over the grid.
    pub min_omega: f64,
    /// `max_s ||x0_dot(s)||_eta(s)`
    pub max_xdot_eta: f64,
    /// `max |exp(-i (Gamma_j(s) - Gamma_j(s')))|`
    pub phase_factor: f64,
    /// `None` when the gap closes on the grid.
    pub kappa: Option<f64>,
    /// `max |<w~_i| d(iK)/ds |w_j>| / |omega_i - omega_j|^2`, reported only.
    pub adiabatic_quantity: f64,
    pub max_imag_residual: f64,
    pub max_pseudo_metric_residual: f64,
    pub points: Vec<GridPoint>,
    pub note: Option<String>,
}

impl KappaReport {
    pub fn gapless(&self) -> bool {
        self.kappa.is_none()
    }

    /// Flat `key = value` text block.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model = {}", self.model.name());
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "catalyst = {:.16e}", self.catalyst);
        let _ = writeln!(out, "grid_points = {}", self.grid.len());
        if let (Some(a), Some(b)) = (self.grid.first(), self.grid.last()) {
            let _ = writeln!(out, "s_min = {:.16e}", a);
            let _ = writeln!(out, "s_max = {:.16e}", b);
        }
        let _ = writeln!(out, "min_omega = {:.16e}", self.min_omega);
        let _ = writeln!(out, "max_xdot_eta = {:.16e}", self.max_xdot_eta);
        let _ = writeln!(out, "phase_factor = {:.16e}", self.phase_factor);
        match self.kappa {
            Some(k) => {
                let _ = writeln!(out, "kappa = {:.16e}", k);
            }
            None => {
                let _ = writeln!(out, "kappa = gapless - theorem hypotheses violated");
            }
        }
        let _ = writeln!(out, "adiabatic_quantity = {:.16e}", self.adiabatic_quantity);
        let _ = writeln!(out, "max_imag_residual = {:.16e}", self.max_imag_residual);
        let _ = writeln!(
            out,
            "max_pseudo_metric_residual = {:.16e}",
            self.max_pseudo_metric_residual
        );
        if let Some(note) = &self.note {
            let _ = writeln!(out, "note = {note}");
        }
        out
    }
}

/// `n` uniform points on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return alloc::vec![a];
    }
    (0..n)
        .map(|k| {
            if k + 1 == n {
                b
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// 201 uniform points on `[0, 1]`; for LMG the points within `0.025` of `s*` are dropped.
pub fn default_grid(spec: &ProtocolSpec) -> Vec<f64> {
    let grid = uniform_grid(0.0, 1.0, 201);
    if spec.kind() == ModelKind::Lmg {
        let sc = lmg_critical_point(spec.n());
        return grid
            .into_iter()
            .filter(|s| (s - sc).abs() >= 0.025)
            .collect();
    }
    grid
}

/// Assembles `kappa = 2 phase max_s ||x0_dot||_eta / min |omega|` over `grid`.
pub fn kappa_bound(spec: &ProtocolSpec, grid: &[f64]) -> Result<KappaReport> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid length",
            value: 0.0,
        });
    }
    let mut points: Vec<GridPoint> = Vec::with_capacity(grid.len());
    let mut guess = ProductState::plus(spec);
    for &s in grid {
        let mut p = linearize_along_curve(spec, s, &guess)?;
        guess = p.x0;
        if let Some(prev) = points.last() {
            // maximal-overlap gauge continuation
            for j in 0..2 {
                let ov =
                    (prev.spectrum.right.column(j).adjoint() * p.spectrum.right.column(j))[(0, 0)];
                if ov.norm() > 0.0 {
                    p.spectrum.rephase(j, ov.conj() / ov.norm());
                }
            }
        }
        points.push(p);
    }

    let min_omega = points
        .iter()
        .map(|p| p.spectrum.min_abs_omega())
        .fold(f64::INFINITY, f64::min);
    let max_xdot_eta = points
        .iter()
        .map(|p| p.eta.norm(&p.x0_dot))
        .fold(0.0, f64::max);
    let max_imag_residual = points
        .iter()
        .map(|p| p.spectrum.imag_residual)
        .fold(0.0, f64::max);
    let max_pseudo_metric_residual = points.iter().map(|p| p.eta.residual).fold(0.0, f64::max);

    // Gamma_j = sum (<dw~_j|w_j> - <w_j|dw~_j>) / 2 along the grid
    let mut phase_factor: f64 = 1.0;
    for j in 0..2 {
        let mut gamma = C64::new(0.0, 0.0);
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for w in points.windows(2) {
            let dl = w[1].spectrum.left.column(j) - w[0].spectrum.left.column(j);
            let r = (w[1].spectrum.right.column(j) + w[0].spectrum.right.column(j)) / c(2.0);
            let a = (dl.adjoint() * r)[(0, 0)];
            let b = (r.adjoint() * dl)[(0, 0)];
            gamma += (a - b) / 2.0;
            // |exp(-i Gamma)| = exp(Im Gamma)
            lo = lo.min(gamma.im);
            hi = hi.max(gamma.im);
        }
        phase_factor = phase_factor.max((hi - lo).exp());
    }

    let mut adiabatic_quantity: f64 = 0.0;
    for w in points.windows(2) {
        let ds = w[1].s - w[0].s;
        if ds <= 0.0 {
            continue;
        }
        let dk = (w[1].spectrum.generator - w[0].spectrum.generator) / c(ds);
        let sp = &w[0].spectrum;
        let gap = sp.omegas[1] - sp.omegas[0];
        if gap.abs() > 0.0 {
            for (i, j) in [(0, 1), (1, 0)] {
                let q = (sp.left.column(i).adjoint() * dk * sp.right.column(j))[(0, 0)].norm()
                    / (gap * gap);
                adiabatic_quantity = adiabatic_quantity.max(q);
            }
        }
    }

    let mut note = None;
    let kappa = if min_omega < GAPLESS_TOL {
        note = Some(String::from("gapless - theorem hypotheses violated"));
        None
    } else {
        Some(2.0 * phase_factor * max_xdot_eta / min_omega)
    };
    if spec.kind() == ModelKind::Lmg {
        let sc = lmg_critical_point(spec.n());
        if grid.iter().any(|s| (s - sc).abs() < 0.025) {
            let msg = format!(
                "grid includes the mean-field transition at s* = {sc}; x0_dot diverges there"
            );
            note = Some(match note {
                Some(n) => format!("{n}; {msg}"),
                None => msg,
            });
        }
    }
    Ok(KappaReport {
        model: spec.kind(),
        n: spec.n(),
        catalyst: spec.catalyst_strength(),
        grid: grid.to_vec(),
        min_omega,
        max_xdot_eta,
        phase_factor,
        kappa,
        adiabatic_quantity,
        max_imag_residual,
        max_pseudo_metric_residual,
        points,
        note,
    })
}
