//! Variational dynamics on the two-parameter product manifolds.
//!
//! Every site carries the same single-qubit state
//! `cos(theta/2)|0> + sin(theta/2) e^{-i phi}|1>`: two sites for the
//! two-qubit and bipartite models (embedded in the lowest two levels of a
//! `(N+2)`-level system for the latter), `N` sites for LMG.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64 as C64;
use num_traits::{Euclid, Float};

use crate::exact::StateVector;
use crate::linalg::dot;
use crate::models::{check_s, ModelKind, ProtocolSpec};
use crate::{Error, Result};

/// `sin(theta)` below which the `(theta, phi)` chart is considered singular.
pub const POLE_GUARD: f64 = 1e-8;
/// Gradient-norm stop of the variational descent.
pub const DESCENT_TOL: f64 = 1e-10;
const DESCENT_BUDGET: usize = 200;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Point `(theta, phi)` of a product manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductState {
    pub theta: f64,
    pub phi: f64,
    pub kind: ModelKind,
    pub n: usize,
}

impl ProductState {
    /// Brings `theta` into `[0, pi]` and `phi` into `[-pi, pi)`.
    pub fn new(kind: ModelKind, n: usize, theta: f64, phi: f64) -> Self {
        let mut t = Euclid::rem_euclid(&theta, &(2.0 * PI));
        let mut p = phi;
        if t > PI {
            t = 2.0 * PI - t;
            p += PI;
        }
        ProductState {
            theta: t,
            phi: wrap_angle(p),
            kind,
            n,
        }
    }

    pub fn for_spec(spec: &ProtocolSpec, theta: f64, phi: f64) -> Self {
        Self::new(spec.kind(), spec.n(), theta, phi)
    }

    /// `|+>` on every site.
    pub fn plus(spec: &ProtocolSpec) -> Self {
        Self::for_spec(spec, FRAC_PI_2, 0.0)
    }

    pub fn site_vector(&self) -> [C64; 2] {
        site(self.theta, self.phi)
    }

    /// Number of tensor factors in the embedding.
    pub fn sites(&self) -> usize {
        match self.kind {
            ModelKind::Lmg | ModelKind::SpinGlass => self.n,
            ModelKind::TwoQubit | ModelKind::Bipartite => 2,
        }
    }

    /// Dimension of each tensor factor.
    pub fn local_dim(&self) -> usize {
        match self.kind {
            ModelKind::Bipartite => self.n + 2,
            _ => 2,
        }
    }

    pub fn embed(&self) -> StateVector {
        let mut local = vec![ZERO; self.local_dim()];
        let u = self.site_vector();
        local[0] = u[0];
        local[1] = u[1];
        StateVector::product(&vec![local; self.sites()])
    }

    pub fn bloch(&self) -> BlochVector {
        BlochVector {
            x: self.theta.sin() * self.phi.cos(),
            y: -self.theta.sin() * self.phi.sin(),
            z: self.theta.cos(),
        }
    }

    fn pole_check(&self, s: Option<f64>) -> Result<()> {
        let sin_theta = self.theta.sin();
        if sin_theta.abs() <= POLE_GUARD {
            return Err(Error::Pole { s, sin_theta });
        }
        Ok(())
    }
}

pub fn wrap_angle(phi: f64) -> f64 {
    Euclid::rem_euclid(&(phi + PI), &(2.0 * PI)) - PI
}

pub fn site(theta: f64, phi: f64) -> [C64; 2] {
    [
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), -phi),
    ]
}

/// Partial derivatives of [`site`] with respect to `theta` and `phi`.
pub fn site_derivatives(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (sh, ch) = (theta / 2.0).sin_cos();
    let e = C64::from_polar(1.0, -phi);
    [
        [C64::new(-sh / 2.0, 0.0), e * (ch / 2.0)],
        [ZERO, -I * e * sh],
    ]
}

/// Phase-aligned distance between the embeddings of two points of the same
/// manifold, `sqrt(2 - 2 |<a|b>|^sites)`, evaluated without cancellation.
pub fn embedded_distance(a: &ProductState, b: &ProductState) -> f64 {
    let (u, v) = (a.site_vector(), b.site_vector());
    // 1 - |<u|v>|^2 = |u0 v1 - u1 v0|^2 for unit 2-vectors
    let w = (u[0] * v[1] - u[1] * v[0]).norm_sqr().min(1.0);
    let sites = a.sites() as f64;
    (-2.0 * ((sites / 2.0) * (-w).ln_1p()).exp_m1())
        .max(0.0)
        .sqrt()
}

/// Embedded-state distance implied by a Bloch-vector distance `ds` for a
/// product of `sites` identical qubits.
pub fn distance_from_bloch(ds: f64, sites: usize) -> f64 {
    let w = (ds * ds / 4.0).min(1.0);
    (-2.0 * ((sites as f64 / 2.0) * (-w).ln_1p()).exp_m1())
        .max(0.0)
        .sqrt()
}

/// Normalized total-spin expectation of a product state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &BlochVector) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Metric, symplectic form and complex structure at a point of the manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldGeometry {
    pub g: Matrix2<f64>,
    pub omega: Matrix2<f64>,
    pub j: Matrix2<f64>,
}

impl ManifoldGeometry {
    fn from_parts(g: Matrix2<f64>, omega: Matrix2<f64>) -> Self {
        let ginv = g
            .try_inverse()
            .unwrap_or_else(|| Matrix2::from_element(f64::NAN));
        ManifoldGeometry {
            g,
            omega,
            j: -(ginv * omega),
        }
    }

    /// Max-entry residual of `J^2 + 1`.
    pub fn kahler_residual(&self) -> f64 {
        (self.j * self.j + Matrix2::identity()).abs().max()
    }
}

fn supported(spec: &ProtocolSpec, operation: &'static str) -> Result<()> {
    if spec.kind() == ModelKind::SpinGlass {
        return Err(Error::Unsupported {
            model: spec.kind().name(),
            operation,
        });
    }
    Ok(())
}

fn check_state(spec: &ProtocolSpec, x: &ProductState) -> Result<()> {
    if x.kind != spec.kind() {
        return Err(Error::UnknownModel(alloc::format!(
            "{} state for a {} protocol",
            x.kind.name(),
            spec.kind().name()
        )));
    }
    if x.n != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            found: x.n,
        });
    }
    Ok(())
}

/// `g_ij = 2 Re<V_i|V_j>`, `omega_ij = 2 Im<V_i|V_j>` with horizontal tangent vectors.
pub fn geometry(spec: &ProtocolSpec, x: &ProductState) -> Result<ManifoldGeometry> {
    supported(spec, "product-manifold geometry")?;
    check_state(spec, x)?;
    x.pole_check(None)?;
    let st = x.theta.sin();
    let scale = match spec.kind() {
        ModelKind::Lmg => spec.n() as f64 / 2.0,
        _ => 1.0,
    };
    let g = Matrix2::new(1.0, 0.0, 0.0, st * st) * scale;
    let omega = Matrix2::new(0.0, -st, st, 0.0) * scale;
    Ok(ManifoldGeometry::from_parts(g, omega))
}

/// Physical-time rates `(dtheta/dt, dphi/dt)`; multiply by `T` for `d/ds`.
pub fn eom_rhs(spec: &ProtocolSpec, s: f64, x: &ProductState) -> Result<(f64, f64)> {
    supported(spec, "product-manifold equations of motion")?;
    check_s(s)?;
    check_state(spec, x)?;
    x.pole_check(Some(s))?;
    let (st, ct) = x.theta.sin_cos();
    let (sp, cp) = x.phi.sin_cos();
    Ok(match spec.kind() {
        ModelKind::Lmg => {
            let n = spec.n() as f64;
            (
                2.0 * (s - 1.0) * sp,
                2.0 * ct * (2.0 * (n - 1.0) * s / n + (s - 1.0) * cp / st),
            )
        }
        _ => {
            let a = spec.catalyst_strength();
            (
                2.0 * (s - 1.0) * sp * (1.0 + a * s * st * cp),
                -2.0 * (1.0 - s) * ct / st * cp - 2.0 * s * ct
                    + 4.0 * s
                    + 2.0 * a * s * (1.0 - s) * ct * sp * sp,
            )
        }
    })
}

/// `<psi(theta, phi)|H(s)|psi(theta, phi)>`.
pub fn variational_energy(spec: &ProtocolSpec, s: f64, x: &ProductState) -> Result<f64> {
    supported(spec, "variational energy")?;
    check_s(s)?;
    check_state(spec, x)?;
    let (st, ct) = x.theta.sin_cos();
    let (sp, cp) = x.phi.sin_cos();
    Ok(match spec.kind() {
        ModelKind::Lmg => {
            let n = spec.n() as f64;
            -n * (1.0 - s) * st * cp + (1.0 - n) * s * ct * ct - s
        }
        _ => {
            let c = spec.catalyst_strength() * s * (1.0 - s);
            -2.0 * (1.0 - s) * st * cp + s * (ct * ct - 4.0 * ct) - c * (1.0 - st * st * sp * sp)
        }
    })
}

/// Gradient of [`variational_energy`] in `(theta, phi)`.
pub fn energy_gradient(spec: &ProtocolSpec, s: f64, theta: f64, phi: f64) -> Vector2<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    match spec.kind() {
        ModelKind::Lmg => {
            let n = spec.n() as f64;
            Vector2::new(
                -n * (1.0 - s) * ct * cp - 2.0 * (1.0 - n) * s * ct * st,
                n * (1.0 - s) * st * sp,
            )
        }
        _ => {
            let c = spec.catalyst_strength() * s * (1.0 - s);
            Vector2::new(
                -2.0 * (1.0 - s) * ct * cp - 2.0 * s * ct * st
                    + 4.0 * s * st
                    + 2.0 * c * st * ct * sp * sp,
                2.0 * (1.0 - s) * st * sp + 2.0 * c * st * st * sp * cp,
            )
        }
    }
}

/// Output of the tangent-space projection at one point.
#[derive(Debug, Clone, Copy)]
pub struct TangentFlow {
    /// `dx/dt = -2 g^{-1} Re<V|iH|psi>`
    pub rates: Vector2<f64>,
    pub g: Matrix2<f64>,
    pub omega: Matrix2<f64>,
}

/// Projects `-iH(s)|psi>` onto the span of the horizontal tangent vectors of a
/// symmetric product state whose per-site vector is `u` with partials `du`.
pub(crate) fn tangent_flow(
    spec: &ProtocolSpec,
    s: f64,
    sites: usize,
    local_dim: usize,
    u: [C64; 2],
    du: [[C64; 2]; 2],
) -> TangentFlow {
    let pad = |v: [C64; 2]| {
        let mut out = vec![ZERO; local_dim];
        out[0] = v[0];
        out[1] = v[1];
        out
    };
    let base = pad(u);
    let psi = StateVector::product(&vec![base.clone(); sites]).amplitudes;
    let psi = psi.as_slice();
    let dim = psi.len();
    let mut tangents: Vec<Vec<C64>> = Vec::with_capacity(2);
    for d in du {
        let dl = pad(d);
        let mut v = vec![ZERO; dim];
        for k in 0..sites {
            let factors: Vec<Vec<C64>> = (0..sites)
                .map(|j| if j == k { dl.clone() } else { base.clone() })
                .collect();
            let term = product_unnormalized(&factors);
            for (a, b) in v.iter_mut().zip(term.iter()) {
                *a += b;
            }
        }
        let c = dot(psi, &v);
        for (a, p) in v.iter_mut().zip(psi.iter()) {
            *a -= c * p;
        }
        tangents.push(v);
    }
    let mut hpsi = vec![ZERO; dim];
    spec.apply(s, psi, &mut hpsi);
    let mut g = Matrix2::zeros();
    let mut omega = Matrix2::zeros();
    let mut f = Vector2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let z = dot(&tangents[i], &tangents[j]);
            g[(i, j)] = 2.0 * z.re;
            omega[(i, j)] = 2.0 * z.im;
        }
        f[i] = (I * dot(&tangents[i], &hpsi)).re;
    }
    let ginv = g
        .try_inverse()
        .unwrap_or_else(|| Matrix2::from_element(f64::NAN));
    TangentFlow {
        rates: -2.0 * ginv * f,
        g,
        omega,
    }
}

fn product_unnormalized(factors: &[Vec<C64>]) -> Vec<C64> {
    let mut amps = vec![C64::new(1.0, 0.0)];
    for local in factors {
        let mut next = Vec::with_capacity(amps.len() * local.len());
        for a in &amps {
            for l in local {
                next.push(a * l);
            }
        }
        amps = next;
    }
    amps
}

/// The general variational equation of motion in `(theta, phi)`, evaluated
/// with explicitly constructed tangent vectors of the embedded state.
pub fn generic_rates(spec: &ProtocolSpec, s: f64, x: &ProductState) -> Result<TangentFlow> {
    supported(spec, "product-manifold equations of motion")?;
    check_s(s)?;
    check_state(spec, x)?;
    x.pole_check(Some(s))?;
    Ok(tangent_flow(
        spec,
        s,
        x.sites(),
        x.local_dim(),
        x.site_vector(),
        site_derivatives(x.theta, x.phi),
    ))
}

/// `N / (3N - 2)`, the mean-field transition of the LMG model.
pub fn lmg_critical_point(n: usize) -> f64 {
    let n = n as f64;
    n / (3.0 * n - 2.0)
}

/// `theta_0(s)` of the LMG variational ground state (the branch above `pi/2`).
pub fn lmg_theta0(n: usize, s: f64) -> f64 {
    if s <= lmg_critical_point(n) {
        return FRAC_PI_2;
    }
    let nf = n as f64;
    let arg = ((nf - nf * s) / (2.0 * s - 2.0 * nf * s)).clamp(-1.0, 1.0);
    arg.asin() + PI
}

/// Bloch vector and variational energy of an LMG product state.
pub fn lmg_observables(
    spec: &ProtocolSpec,
    s: f64,
    x: &ProductState,
) -> Result<(BlochVector, f64)> {
    if spec.kind() != ModelKind::Lmg {
        return Err(Error::Unsupported {
            model: spec.kind().name(),
            operation: "LMG observables",
        });
    }
    Ok((x.bloch(), variational_energy(spec, s, x)?))
}

/// All minimizers of the variational energy that are related by the model's
/// symmetry: for LMG the `Z2` pair `{theta_0, pi - theta_0}`.
pub fn variational_ground_manifold(
    spec: &ProtocolSpec,
    s: f64,
    guess: &ProductState,
) -> Result<Vec<ProductState>> {
    let x0 = variational_ground_state(spec, s, guess)?;
    if spec.kind() == ModelKind::Lmg && s > lmg_critical_point(spec.n()) {
        return Ok(vec![
            x0,
            ProductState::for_spec(spec, PI - x0.theta, x0.phi),
        ]);
    }
    Ok(vec![x0])
}

/// Minimizer of the variational energy at fixed `s`.
pub fn variational_ground_state(
    spec: &ProtocolSpec,
    s: f64,
    guess: &ProductState,
) -> Result<ProductState> {
    supported(spec, "variational ground state")?;
    check_s(s)?;
    check_state(spec, guess)?;
    if spec.kind() == ModelKind::Lmg {
        return Ok(ProductState::for_spec(spec, lmg_theta0(spec.n(), s), 0.0));
    }
    // a guess sitting on a pole is nudged off it so that phi is defined
    let mut guess = *guess;
    if guess.theta.sin() <= POLE_GUARD {
        guess.theta = if guess.theta < FRAC_PI_2 {
            1e-4
        } else {
            PI - 1e-4
        };
    }
    let energy = |t: f64, p: f64| {
        variational_energy(spec, s, &ProductState::new(spec.kind(), spec.n(), t, p)).unwrap()
    };
    let (mut t, mut p) = (guess.theta, guess.phi);
    let mut e = energy(t, p);
    let mut grad = energy_gradient(spec, s, t, p);
    for _ in 0..DESCENT_BUDGET {
        if grad.norm() < DESCENT_TOL {
            return Ok(ProductState::new(spec.kind(), spec.n(), t, p));
        }
        let hstep = 1e-6;
        let mut hess = Matrix2::zeros();
        for k in 0..2 {
            let (dt_, dp_) = if k == 0 { (hstep, 0.0) } else { (0.0, hstep) };
            let col = (energy_gradient(spec, s, t + dt_, p + dp_)
                - energy_gradient(spec, s, t - dt_, p - dp_))
                / (2.0 * hstep);
            hess.set_column(k, &col);
        }
        hess = (hess + hess.transpose()) / 2.0;
        let lmin = hess.symmetric_eigenvalues().min();
        let shift = if lmin > 1e-8 {
            0.0
        } else {
            1e-8 - lmin + 1e-3 * grad.norm()
        };
        let step = (hess + Matrix2::identity() * shift)
            .try_inverse()
            .map(|inv| -(inv * grad))
            .unwrap_or(-grad);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let (nt, np) = (t + alpha * step[0], p + alpha * step[1]);
            let ne = energy(nt, np);
            let ng = energy_gradient(spec, s, nt, np);
            if ne <= e + 1e-4 * alpha * grad.dot(&step)
                || (ne <= e + 1e-14 && ng.norm() < grad.norm())
            {
                t = nt;
                p = np;
                e = ne;
                grad = ng;
                accepted = true;
                break;
            }
            alpha /= 2.0;
        }
        if !accepted {
            break;
        }
    }
    if grad.norm() < DESCENT_TOL {
        return Ok(ProductState::new(spec.kind(), spec.n(), t, p));
    }
    Err(Error::NotConverged {
        what: "variational descent",
        residual: grad.norm(),
    })
}

/// Sampled solution of the product-manifold equations of motion.
#[derive(Debug, Clone)]
pub struct ProductTrajectory {
    pub grid: Vec<f64>,
    pub states: Vec<ProductState>,
    /// Instantaneous variational ground state nearest to the trajectory.
    pub ground: Vec<ProductState>,
    /// Embedded-state distance to `ground`.
    pub distances: Vec<f64>,
    pub energies: Vec<f64>,
    /// Bloch vectors (LMG only).
    pub bloch: Option<Vec<BlochVector>>,
    pub steps: usize,
}

impl ProductTrajectory {
    pub fn final_state(&self) -> &ProductState {
        self.states.last().expect("trajectory has samples")
    }

    /// Bloch-vector distance to the nearest instantaneous variational ground state (LMG).
    pub fn bloch_distances(&self) -> Option<Vec<f64>> {
        let b = self.bloch.as_ref()?;
        Some(
            b.iter()
                .zip(&self.ground)
                .map(|(x, g)| x.distance(&g.bloch()))
                .collect(),
        )
    }
}

/// Integrates the closed-form equations of motion in `s` with classical RK4,
/// physical step at most `dt`, recording `intervals + 1` equally spaced samples.
pub fn integrate(
    spec: &ProtocolSpec,
    t_total: f64,
    dt: f64,
    x0: &ProductState,
) -> Result<ProductTrajectory> {
    integrate_sampled(spec, t_total, dt, x0, 100)
}

pub fn integrate_sampled(
    spec: &ProtocolSpec,
    t_total: f64,
    dt: f64,
    x0: &ProductState,
    intervals: usize,
) -> Result<ProductTrajectory> {
    integrate_window(spec, t_total, dt, x0, (0.0, 1.0), intervals)
}

/// Like [`integrate_sampled`] but over `s` in `window` only, still at
/// `ds/dt = 1/T`; `x0` is the state at `window.0`.
pub fn integrate_window(
    spec: &ProtocolSpec,
    t_total: f64,
    dt: f64,
    x0: &ProductState,
    window: (f64, f64),
    intervals: usize,
) -> Result<ProductTrajectory> {
    supported(spec, "product-manifold integration")?;
    if !(t_total > 0.0) {
        return Err(Error::InvalidParameter {
            name: "T",
            value: t_total,
        });
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            value: dt,
        });
    }
    let (s0, s1) = window;
    check_s(s0)?;
    check_s(s1)?;
    if !(s1 > s0) {
        return Err(Error::InvalidParameter {
            name: "window end",
            value: s1,
        });
    }
    check_state(spec, x0)?;
    x0.pole_check(Some(s0))?;
    let intervals = intervals.max(1);
    let span = s1 - s0;
    let per_interval = (t_total * span / (dt * intervals as f64) - 1e-9)
        .ceil()
        .max(1.0) as usize;
    let steps = per_interval * intervals;
    let h = span / steps as f64;

    let mut traj = ProductTrajectory {
        grid: Vec::with_capacity(intervals + 1),
        states: Vec::with_capacity(intervals + 1),
        ground: Vec::with_capacity(intervals + 1),
        distances: Vec::with_capacity(intervals + 1),
        energies: Vec::with_capacity(intervals + 1),
        bloch: (spec.kind() == ModelKind::Lmg).then(Vec::new),
        steps,
    };
    let mut guess = if s0 == 0.0 {
        ProductState::plus(spec)
    } else {
        *x0
    };
    let mut record = |s: f64, x: &ProductState, traj: &mut ProductTrajectory| -> Result<()> {
        let candidates = variational_ground_manifold(spec, s, &guess)?;
        guess = candidates[0];
        let (g, d) = candidates
            .iter()
            .map(|c| (*c, embedded_distance(x, c)))
            .fold((candidates[0], f64::INFINITY), |best, cur| {
                if cur.1 < best.1 {
                    cur
                } else {
                    best
                }
            });
        traj.grid.push(s);
        traj.states.push(*x);
        traj.ground.push(g);
        traj.distances.push(d);
        traj.energies.push(variational_energy(spec, s, x)?);
        if let Some(b) = traj.bloch.as_mut() {
            b.push(x.bloch());
        }
        Ok(())
    };

    let mut x = *x0;
    record(s0, &x, &mut traj)?;
    for step in 0..steps {
        let s = s0 + step as f64 * h;
        x = rk4_step(spec, s, h, t_total, &x)?;
        if (step + 1) % per_interval == 0 {
            let s_rec = if step + 1 == steps {
                s1
            } else {
                s0 + (step + 1) as f64 * h
            };
            record(s_rec, &x, &mut traj)?;
        }
    }
    Ok(traj)
}

fn rk4_step(
    spec: &ProtocolSpec,
    s: f64,
    h: f64,
    t_total: f64,
    x: &ProductState,
) -> Result<ProductState> {
    let f = |s: f64, t: f64, p: f64| -> Result<Vector2<f64>> {
        let y = ProductState {
            theta: t,
            phi: p,
            ..*x
        };
        let (a, b) = eom_rhs(spec, s.min(1.0), &y)?;
        Ok(Vector2::new(a, b) * t_total)
    };
    let y = Vector2::new(x.theta, x.phi);
    let k1 = f(s, y[0], y[1])?;
    let y2 = y + k1 * (h / 2.0);
    let k2 = f(s + h / 2.0, y2[0], y2[1])?;
    let y3 = y + k2 * (h / 2.0);
    let k3 = f(s + h / 2.0, y3[0], y3[1])?;
    let y4 = y + k3 * h;
    let k4 = f(s + h, y4[0], y4[1])?;
    let y = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    Ok(ProductState::new(x.kind, x.n, y[0], y[1]))
}

/// Evolves for physical time `duration` under the frozen Hamiltonian `H(s)`.
pub fn evolve_frozen(
    spec: &ProtocolSpec,
    s: f64,
    duration: f64,
    dt: f64,
    x0: &ProductState,
) -> Result<ProductState> {
    supported(spec, "product-manifold integration")?;
    let steps = (duration / dt).ceil().max(1.0) as usize;
    let h = duration / steps as f64;
    let mut x = *x0;
    for _ in 0..steps {
        // with T = 1 the rescaled step equals the physical step; s stays fixed
        let f = |t: f64, p: f64| -> Result<Vector2<f64>> {
            let (a, b) = eom_rhs(
                spec,
                s,
                &ProductState {
                    theta: t,
                    phi: p,
                    ..x
                },
            )?;
            Ok(Vector2::new(a, b))
        };
        let y = Vector2::new(x.theta, x.phi);
        let k1 = f(y[0], y[1])?;
        let k2 = f(y[0] + k1[0] * h / 2.0, y[1] + k1[1] * h / 2.0)?;
        let k3 = f(y[0] + k2[0] * h / 2.0, y[1] + k2[1] * h / 2.0)?;
        let k4 = f(y[0] + k3[0] * h, y[1] + k3[1] * h)?;
        let y = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        x = ProductState::new(x.kind, x.n, y[0], y[1]);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{phase_aligned_distance, DenseOperator, HermitianOperator, ProtocolAt};
    use crate::models::{build_protocol, ModelParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lmg(n: usize) -> ProtocolSpec {
        build_protocol(ModelKind::Lmg, n, ModelParams::None).unwrap()
    }

    fn two_qubit(a: f64) -> ProtocolSpec {
        build_protocol(ModelKind::TwoQubit, 2, ModelParams::Catalyst(a)).unwrap()
    }

    fn bipartite(n: usize, a: f64) -> ProtocolSpec {
        build_protocol(ModelKind::Bipartite, n, ModelParams::Catalyst(a)).unwrap()
    }

    #[test]
    fn geometry_examples() {
        let spec = lmg(4);
        let g = geometry(&spec, &ProductState::plus(&spec)).unwrap();
        assert_eq!(g.g, Matrix2::new(2.0, 0.0, 0.0, 2.0));
        assert_eq!(g.omega, Matrix2::new(0.0, -2.0, 2.0, 0.0));
        let spec = bipartite(3, 1.0);
        let g = geometry(&spec, &ProductState::plus(&spec)).unwrap();
        assert_eq!(g.j * g.j, -Matrix2::identity());
        let pole = ProductState::for_spec(&spec, 0.0, 0.0);
        assert!(matches!(geometry(&spec, &pole), Err(Error::Pole { .. })));
    }

    #[test]
    fn printed_geometry_matches_tangent_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for spec in [two_qubit(1.0), bipartite(2, 0.5), lmg(5)] {
            for _ in 0..20 {
                let x = ProductState::for_spec(
                    &spec,
                    rng.gen_range(0.1..3.0),
                    rng.gen_range(-3.0..3.0),
                );
                let geo = geometry(&spec, &x).unwrap();
                let flow = generic_rates(&spec, 0.3, &x).unwrap();
                assert!((geo.g - flow.g).abs().max() < 1e-12);
                assert!((geo.omega - flow.omega).abs().max() < 1e-12);
                assert!(geo.kahler_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_rates_match_generic_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 0..100 {
            let spec = match k % 3 {
                0 => two_qubit(rng.gen_range(0.0..5.0)),
                1 => bipartite(rng.gen_range(0..4), rng.gen_range(0.0..5.0)),
                _ => lmg(rng.gen_range(2..7)),
            };
            let s = rng.gen_range(0.0..1.0);
            let x =
                ProductState::for_spec(&spec, rng.gen_range(0.1..3.0), rng.gen_range(-3.0..3.0));
            let (a, b) = eom_rhs(&spec, s, &x).unwrap();
            let r = generic_rates(&spec, s, &x).unwrap().rates;
            assert!(
                (a - r[0]).abs() < 1e-8 && (b - r[1]).abs() < 1e-8,
                "{:?} {s} {x:?}",
                spec.kind()
            );
        }
    }

    #[test]
    fn energy_matches_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for spec in [two_qubit(2.5), bipartite(3, 1.5), lmg(4)] {
            for _ in 0..10 {
                let s = rng.gen_range(0.0..1.0);
                let x = ProductState::for_spec(
                    &spec,
                    rng.gen_range(0.0..3.1),
                    rng.gen_range(-3.0..3.0),
                );
                let h = spec.hamiltonian_at(s).unwrap();
                let e = h.expectation(&x.embed());
                assert!((e - variational_energy(&spec, s, &x).unwrap()).abs() < 1e-12);
                let grad = energy_gradient(&spec, s, x.theta, x.phi);
                let eps = 1e-6;
                let num_t = (variational_energy(
                    &spec,
                    s,
                    &ProductState {
                        theta: x.theta + eps,
                        ..x
                    },
                )
                .unwrap()
                    - variational_energy(
                        &spec,
                        s,
                        &ProductState {
                            theta: x.theta - eps,
                            ..x
                        },
                    )
                    .unwrap())
                    / (2.0 * eps);
                let num_p = (variational_energy(
                    &spec,
                    s,
                    &ProductState {
                        phi: x.phi + eps,
                        ..x
                    },
                )
                .unwrap()
                    - variational_energy(
                        &spec,
                        s,
                        &ProductState {
                            phi: x.phi - eps,
                            ..x
                        },
                    )
                    .unwrap())
                    / (2.0 * eps);
                assert!((grad[0] - num_t).abs() < 1e-8 && (grad[1] - num_p).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn eom_examples() {
        let spec = lmg(4);
        let x = ProductState::for_spec(&spec, 1.1, 0.0);
        assert_eq!(eom_rhs(&spec, 0.7, &x).unwrap().0, 0.0);
        let spec = bipartite(2, 3.0);
        let x = ProductState::for_spec(&spec, 1.1, 0.4);
        assert_eq!(eom_rhs(&spec, 1.0, &x).unwrap().0, 0.0);
        assert!(eom_rhs(&spec, 1.5, &x).is_err());
        let spec = build_protocol(
            ModelKind::SpinGlass,
            3,
            ModelParams::Disorder(crate::models::sample_spin_glass(3, 1)),
        )
        .unwrap();
        assert!(matches!(
            eom_rhs(&spec, 0.5, &ProductState::plus(&spec)),
            Err(Error::Unsupported { .. })
        ));
    }

    #[test]
    fn lmg_closed_forms() {
        assert_eq!(lmg_critical_point(4), 0.4);
        assert_eq!(lmg_theta0(4, 1.0), PI);
        assert_eq!(lmg_theta0(4, 0.3), FRAC_PI_2);
        let spec = lmg(4);
        let target = ProductState::for_spec(&spec, PI, 0.3);
        let (b, e) = lmg_observables(&spec, 1.0, &target).unwrap();
        assert!((b.z + 1.0).abs() < 1e-15 && b.x.abs() < 1e-15);
        assert!((e + 4.0).abs() < 1e-12);
        let (b, _) = lmg_observables(&spec, 0.0, &ProductState::plus(&spec)).unwrap();
        assert_eq!((b.x, b.y, b.z), (1.0, -0.0, FRAC_PI_2.cos()));
        // the closed-form branch is a stationary point of the energy
        for s in [0.45, 0.6, 0.9] {
            let t = lmg_theta0(4, s);
            assert!(energy_gradient(&spec, s, t, 0.0).norm() < 1e-12);
        }
    }

    #[test]
    fn descent_finds_s0_and_target() {
        for spec in [two_qubit(0.0), two_qubit(5.0), bipartite(4, 2.0)] {
            let guess = ProductState::for_spec(&spec, 1.0, 0.2);
            let x = variational_ground_state(&spec, 0.0, &guess).unwrap();
            assert!(embedded_distance(&x, &ProductState::plus(&spec)) < 1e-9);
            let x = variational_ground_state(&spec, 1.0, &guess).unwrap();
            assert!(x.theta < 1e-9);
        }
    }

    #[test]
    fn descent_agrees_with_exact_ground_state_when_product() {
        // at s = 1 the exact ground state |00> is a product state
        let spec = two_qubit(0.0);
        let x = variational_ground_state(&spec, 1.0, &ProductState::plus(&spec)).unwrap();
        let gs = crate::exact::ground_state(&ProtocolAt {
            spec: &spec,
            s: 1.0,
        })
        .unwrap();
        assert!(phase_aligned_distance(&x.embed(), &gs.state).unwrap() < 1e-9);
    }

    #[test]
    fn distances_are_consistent() {
        let spec = lmg(6);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let a = ProductState::for_spec(&spec, rng.gen_range(0.0..PI), rng.gen_range(-3.0..3.0));
            let b = ProductState::for_spec(
                &spec,
                a.theta + rng.gen_range(-0.2..0.2),
                a.phi + rng.gen_range(-0.2..0.2),
            );
            let direct = phase_aligned_distance(&a.embed(), &b.embed()).unwrap();
            assert!((direct - embedded_distance(&a, &b)).abs() < 1e-8);
            let via_bloch = distance_from_bloch(a.bloch().distance(&b.bloch()), 6);
            assert!((direct - via_bloch).abs() < 1e-8);
            assert!((a.bloch().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lmg_fixed_point_does_not_drift() {
        let spec = lmg(4);
        let traj = integrate(&spec, 500.0, 0.01, &ProductState::plus(&spec)).unwrap();
        for x in &traj.states {
            assert!((x.theta - FRAC_PI_2).abs() < 1e-9 && x.phi.abs() < 1e-9);
        }
    }

    #[test]
    fn frozen_flow_conserves_energy() {
        let spec = two_qubit(3.0);
        let x0 = ProductState::for_spec(&spec, 1.2, 0.4);
        let e0 = variational_energy(&spec, 0.6, &x0).unwrap();
        let x1 = evolve_frozen(&spec, 0.6, 20.0, 1e-3, &x0).unwrap();
        assert!((variational_energy(&spec, 0.6, &x1).unwrap() - e0).abs() < 1e-8);
    }

    #[test]
    fn slow_two_qubit_anneal_converges_in_t() {
        let spec = two_qubit(0.0);
        let x0 = ProductState::plus(&spec);
        let target = ProductState::for_spec(&spec, 0.0, 0.0);
        let d64 = embedded_distance(
            integrate(&spec, 64.0, 0.01, &x0).unwrap().final_state(),
            &target,
        );
        let d128 = embedded_distance(
            integrate(&spec, 128.0, 0.01, &x0).unwrap().final_state(),
            &target,
        );
        assert!(d128 < d64);
    }

    #[test]
    fn embedding_is_normalized() {
        for spec in [two_qubit(0.0), bipartite(5, 1.0), lmg(3)] {
            let x = ProductState::for_spec(&spec, 0.7, 2.0);
            assert!((x.embed().norm() - 1.0).abs() < 1e-12);
            let h = DenseOperator::new(spec.hamiltonian_at(0.2).unwrap().matrix().clone(), vec![])
                .unwrap();
            assert_eq!(h.dim(), x.embed().dim());
        }
    }
}
