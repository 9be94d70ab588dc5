//! Single-site TDVP by symmetric projector splitting.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Float;

use super::env::{
    apply_bond, apply_site, check_compatible, extend_left, extend_right, right_envs, site_ops, Env,
    SiteOp, Workspace,
};
use super::{absorb_left, absorb_right, split_left, split_right, MpsState, Tensor3};
use crate::linalg::expm_action;
use crate::models::Mpo;
use crate::Result;

/// Krylov tolerance of the local exponentials.
pub const KRYLOV_TOL: f64 = 1e-12;

/// Composition of symmetric half sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// One forward and one backward half sweep.
    #[default]
    Second,
    /// Triple-jump composition of three second-order steps.
    Fourth,
}

impl Integrator {
    /// Fractions of `dt` taken by the second-order substeps.
    pub fn substeps(self) -> Vec<f64> {
        match self {
            Integrator::Second => vec![1.0],
            Integrator::Fourth => {
                let c = 2f64.powf(1.0 / 3.0);
                let w1 = 1.0 / (2.0 - c);
                let w0 = -c / (2.0 - c);
                vec![w1, w0, w1]
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Integrator::Second => "tdvp2",
            Integrator::Fourth => "tdvp4",
        }
    }
}

fn evolve_site(l: &Env, r: &Env, op: &SiteOp, t: &mut Tensor3, dt: f64) -> Result<()> {
    let (dl, dr) = (t.dl, t.dr);
    let dim = t.data.len();
    let mut ws = Workspace::default();
    let mut mv = |x: &[C64], y: &mut [C64]| apply_site(l, r, op, x, dl, dr, y, &mut ws);
    t.data = expm_action(dim, &mut mv, &t.data, dt, KRYLOV_TOL)?;
    Ok(())
}

fn evolve_bond(l: &Env, r: &Env, c: &mut nalgebra::DMatrix<C64>, dt: f64) -> Result<()> {
    let (dl, dr) = (c.nrows(), c.ncols());
    let flat: Vec<C64> = (0..dl)
        .flat_map(|i| (0..dr).map(move |j| (i, j)))
        .map(|(i, j)| c[(i, j)])
        .collect();
    let mut ws = Workspace::default();
    let mut mv = |x: &[C64], y: &mut [C64]| apply_bond(l, r, x, dl, dr, y, &mut ws);
    let out = expm_action(dl * dr, &mut mv, &flat, dt, KRYLOV_TOL)?;
    for i in 0..dl {
        for j in 0..dr {
            c[(i, j)] = out[i * dr + j];
        }
    }
    Ok(())
}

/// One second-order step `exp(-i dt H)` with a fixed MPO. The centre is
/// moved to site 0 first and ends there.
pub fn tdvp_step(mps: &mut MpsState, mpo: &Mpo, dt: f64) -> Result<()> {
    check_compatible(mps, mpo)?;
    let ops = site_ops(mpo);
    sweep_pair(mps, &ops, dt)
}

/// One step of the chosen order with a fixed MPO.
pub fn tdvp_step_with(
    mps: &mut MpsState,
    mpo: &Mpo,
    dt: f64,
    integrator: Integrator,
) -> Result<()> {
    check_compatible(mps, mpo)?;
    let ops = site_ops(mpo);
    for w in integrator.substeps() {
        sweep_pair(mps, &ops, w * dt)?;
    }
    Ok(())
}

pub(crate) fn sweep_pair(mps: &mut MpsState, ops: &[SiteOp], dt: f64) -> Result<()> {
    let n = mps.n_sites();
    mps.move_center(0);
    let half = 0.5 * dt;
    if n == 1 {
        let b = Env::boundary();
        return evolve_site(&b, &b, &ops[0], &mut mps.tensors[0], dt);
    }
    let mut rights = right_envs(mps, ops, 0);
    let mut lefts: Vec<Option<Env>> = vec![None; n];
    lefts[0] = Some(Env::boundary());

    for j in 0..n - 1 {
        let l = lefts[j].take().expect("left env");
        let r = rights[j].take().expect("right env");
        evolve_site(&l, &r, &ops[j], &mut mps.tensors[j], half)?;
        let (q, mut c) = split_left(&mps.tensors[j]);
        mps.tensors[j] = q;
        let next = extend_left(&l, &mps.tensors[j], &ops[j]);
        evolve_bond(&next, &r, &mut c, -half)?;
        absorb_left(&c, &mut mps.tensors[j + 1]);
        mps.center = j + 1;
        lefts[j] = Some(l);
        lefts[j + 1] = Some(next);
    }
    {
        let l = lefts[n - 1].as_ref().expect("left env");
        let r = rights[n - 1].get_or_insert_with(Env::boundary);
        evolve_site(l, r, &ops[n - 1], &mut mps.tensors[n - 1], dt)?;
    }
    for j in (1..n).rev() {
        let r = rights[j].take().unwrap_or_else(Env::boundary);
        let (mut c, q) = split_right(&mps.tensors[j]);
        mps.tensors[j] = q;
        let next = extend_right(&r, &mps.tensors[j], &ops[j]);
        let l = lefts[j].take().expect("left env");
        evolve_bond(&l, &next, &mut c, -half)?;
        absorb_right(&mut mps.tensors[j - 1], &c);
        mps.center = j - 1;
        let lprev = lefts[j - 1].as_ref().expect("left env");
        evolve_site(lprev, &next, &ops[j - 1], &mut mps.tensors[j - 1], half)?;
        rights[j - 1] = Some(next);
    }
    Ok(())
}
