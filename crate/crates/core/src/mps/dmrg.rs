//! Single-site DMRG at fixed bond dimension.
//!
//! Bonds are padded to their maximal size up front. When the centre moves,
//! directions of the bond that carry no weight are refilled from `H psi`, so
//! the state itself is never truncated and the energy cannot increase.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::env::{
    apply_site, check_compatible, extend_left, extend_right, right_envs, site_ops, Env, SiteOp,
    Workspace,
};
use super::{absorb_left, absorb_right, energy, plus_mps, MpsState, Tensor3};
use crate::linalg::{self, eigh, lanczos_lowest};
use crate::models::Mpo;
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Local problems up to this size are diagonalized densely.
const DENSE_LOCAL: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmrgOptions {
    pub bond_dim: usize,
    pub max_sweeps: usize,
    /// Stop when a full sweep changes the energy by less than this.
    pub energy_tol: f64,
    pub lanczos_tol: f64,
}

impl Default for DmrgOptions {
    fn default() -> Self {
        DmrgOptions {
            bond_dim: 16,
            max_sweeps: 200,
            energy_tol: 1e-12,
            lanczos_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DmrgResult {
    pub energy: f64,
    pub mps: MpsState,
    pub sweeps: usize,
    pub converged: bool,
    pub last_delta: f64,
    /// Energy after each full sweep.
    pub energies: Vec<f64>,
}

/// Ground state search from `|+...+>` (or `start`, if given).
pub fn dmrg(mpo: &Mpo, start: Option<&MpsState>, opts: &DmrgOptions) -> Result<DmrgResult> {
    if opts.bond_dim == 0 {
        return Err(Error::InvalidParameter {
            name: "D",
            value: 0.0,
        });
    }
    let n = mpo.n_sites();
    let mut mps = match start {
        Some(m) => m.clone(),
        None => plus_mps(n, opts.bond_dim)?,
    };
    check_compatible(&mps, mpo)?;
    mps.pad_bonds(opts.bond_dim);
    mps.normalize();
    let ops = site_ops(mpo);
    let mut energies = Vec::new();
    let mut prev = energy(&mps, mpo)?;
    let mut last_delta = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let e = sweep(&mut mps, &ops, opts)?;
        energies.push(e);
        last_delta = (e - prev).abs();
        prev = e;
        if last_delta < opts.energy_tol {
            break;
        }
    }
    Ok(DmrgResult {
        energy: prev,
        mps,
        sweeps,
        converged: last_delta < opts.energy_tol,
        last_delta,
        energies,
    })
}

fn local_ground(
    l: &Env,
    r: &Env,
    op: &SiteOp,
    t: &mut Tensor3,
    site: usize,
    opts: &DmrgOptions,
) -> Result<f64> {
    let (dl, dr) = (t.dl, t.dr);
    let dim = t.data.len();
    let mut ws = Workspace::default();
    let mut mv = |x: &[C64], y: &mut [C64]| apply_site(l, r, op, x, dl, dr, y, &mut ws);
    if dim <= DENSE_LOCAL {
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        let mut e = vec![ZERO; dim];
        let mut col = vec![ZERO; dim];
        for k in 0..dim {
            e.iter_mut().for_each(|z| *z = ZERO);
            e[k] = C64::new(1.0, 0.0);
            mv(&e, &mut col);
            for (i, v) in col.iter().enumerate() {
                h[(i, k)] = *v;
            }
        }
        let (vals, vecs) = eigh(&h);
        t.data = vecs.column(0).iter().copied().collect();
        return Ok(vals[0]);
    }
    let pair = lanczos_lowest(dim, mv, &t.data, &[], opts.lanczos_tol, 40, 100).map_err(|_| {
        Error::LocalSolver {
            site,
            reason: "Lanczos did not converge",
        }
    })?;
    if !pair.value.is_finite() {
        return Err(Error::LocalSolver {
            site,
            reason: "non-finite eigenvalue",
        });
    }
    t.data = pair.vector;
    Ok(pair.value)
}

/// Orthonormal basis of `keep`, completed to `target` vectors from
/// `candidates` and then standard basis vectors.
fn complete_basis(
    mut keep: Vec<Vec<C64>>,
    target: usize,
    candidates: &[Vec<C64>],
) -> Vec<Vec<C64>> {
    let len = keep
        .first()
        .map(|v| v.len())
        .or(candidates.first().map(|v| v.len()))
        .unwrap_or(0);
    let basis = (0..len).map(|r| {
        let mut e = vec![ZERO; len];
        e[r] = C64::new(1.0, 0.0);
        e
    });
    for mut v in candidates.iter().cloned().chain(basis) {
        if keep.len() >= target {
            break;
        }
        let before = linalg::norm(&v);
        if before == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for c in &keep {
                let ov = linalg::dot(c, &v);
                linalg::axpy(-ov, c, &mut v);
            }
        }
        if linalg::norm(&v) > 1e-6 * before {
            linalg::normalize(&mut v);
            keep.push(v);
        }
    }
    keep
}

/// Columns of `u` whose singular value is non-negligible.
fn weighted_columns(m: &DMatrix<C64>) -> Vec<Vec<C64>> {
    let d = linalg::svd(m);
    let smax = d.s.first().copied().unwrap_or(0.0);
    let u = d.u;
    d.s.iter()
        .enumerate()
        .filter(|(_, s)| **s > 1e-10 * smax.max(1e-300))
        .map(|(k, _)| u.column(k).iter().copied().collect())
        .collect()
}

/// Moves the centre from `j` to `j + 1`, refilling unused bond directions.
fn expand_right(mps: &mut MpsState, j: usize, hpsi: &[C64]) {
    let t = &mps.tensors[j];
    let (dl, d, dr) = (t.dl, t.d, t.dr);
    let m = t.left_matrix();
    let keep = weighted_columns(&m);
    let candidates: Vec<Vec<C64>> = (0..dr)
        .map(|b| (0..dl * d).map(|r| hpsi[r * dr + b]).collect())
        .collect();
    let cols = complete_basis(keep, dr, &candidates);
    let mut q = DMatrix::<C64>::zeros(dl * d, dr);
    for (b, c) in cols.iter().enumerate() {
        for r in 0..dl * d {
            q[(r, b)] = c[r];
        }
    }
    let c = q.adjoint() * &m;
    mps.tensors[j] = Tensor3::from_matrix(dl, d, dr, &q);
    absorb_left(&c, &mut mps.tensors[j + 1]);
    mps.center = j + 1;
}

/// Moves the centre from `j` to `j - 1`, refilling unused bond directions.
fn expand_left(mps: &mut MpsState, j: usize, hpsi: &[C64]) {
    let t = &mps.tensors[j];
    let (dl, d, dr) = (t.dl, t.d, t.dr);
    // work with the conjugate transpose so that row spaces become column spaces
    let mh = t.right_matrix().adjoint();
    let keep = weighted_columns(&mh);
    let candidates: Vec<Vec<C64>> = (0..dl)
        .map(|a| (0..d * dr).map(|c| hpsi[a * d * dr + c].conj()).collect())
        .collect();
    let cols = complete_basis(keep, dl, &candidates);
    let mut qh = DMatrix::<C64>::zeros(d * dr, dl);
    for (a, c) in cols.iter().enumerate() {
        for r in 0..d * dr {
            qh[(r, a)] = c[r];
        }
    }
    let q = qh.adjoint();
    let c = mh.adjoint() * &qh;
    mps.tensors[j] = Tensor3::from_matrix(dl, d, dr, &q);
    absorb_right(&mut mps.tensors[j - 1], &c);
    mps.center = j - 1;
}

fn sweep(mps: &mut MpsState, ops: &[SiteOp], opts: &DmrgOptions) -> Result<f64> {
    let n = mps.n_sites();
    mps.move_center(0);
    if n == 1 {
        let b = Env::boundary();
        return local_ground(&b, &b, &ops[0], &mut mps.tensors[0], 0, opts);
    }
    let mut rights = right_envs(mps, ops, 0);
    let mut lefts: Vec<Option<Env>> = vec![None; n];
    lefts[0] = Some(Env::boundary());
    let mut e = 0.0;
    let mut hpsi = Vec::new();
    let mut ws = Workspace::default();
    for j in 0..n - 1 {
        let l = lefts[j].as_ref().expect("left env");
        let r = rights[j].as_ref().expect("right env");
        e = local_ground(l, r, &ops[j], &mut mps.tensors[j], j, opts)?;
        let t = &mps.tensors[j];
        hpsi.resize(t.data.len(), ZERO);
        apply_site(l, r, &ops[j], &t.data, t.dl, t.dr, &mut hpsi, &mut ws);
        expand_right(mps, j, &hpsi);
        lefts[j + 1] = Some(extend_left(l, &mps.tensors[j], &ops[j]));
    }
    for j in (1..n).rev() {
        let l = lefts[j].as_ref().expect("left env");
        let r = rights[j].get_or_insert_with(Env::boundary).clone();
        e = local_ground(l, &r, &ops[j], &mut mps.tensors[j], j, opts)?;
        let t = &mps.tensors[j];
        hpsi.resize(t.data.len(), ZERO);
        apply_site(l, &r, &ops[j], &t.data, t.dl, t.dr, &mut hpsi, &mut ws);
        expand_left(mps, j, &hpsi);
        rights[j - 1] = Some(extend_right(&r, &mps.tensors[j], &ops[j]));
    }
    let l = lefts[0].as_ref().expect("left env");
    let r = rights[0].as_ref().expect("right env");
    e = e.min(local_ground(l, r, &ops[0], &mut mps.tensors[0], 0, opts)?);
    mps.normalize();
    Ok(e)
}
