//! MPO environments and effective Hamiltonians.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use num_traits::Float;

use super::{MpsState, Tensor3};
use crate::exact::gap_from_sorted;
use crate::linalg::{eigh, hermitian_residual};
use crate::models::Mpo;
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Nonzero entries `(out, in, value)` of the operator block `(a, b)`.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub a: usize,
    pub b: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

/// Sparse view of one MPO tensor.
#[derive(Debug, Clone)]
pub(crate) struct SiteOp {
    pub wl: usize,
    pub wr: usize,
    pub d: usize,
    pub blocks: Vec<Block>,
}

pub(crate) fn site_ops(mpo: &Mpo) -> Vec<SiteOp> {
    mpo.tensors
        .iter()
        .map(|t| {
            let blocks = t
                .nonzero_blocks()
                .into_iter()
                .map(|(a, b)| {
                    let mut entries = Vec::new();
                    for o in 0..t.phys {
                        for i in 0..t.phys {
                            let v = t.get(a, o, i, b);
                            if v != ZERO {
                                entries.push((o, i, v));
                            }
                        }
                    }
                    Block { a, b, entries }
                })
                .collect();
            SiteOp {
                wl: t.left,
                wr: t.right,
                d: t.phys,
                blocks,
            }
        })
        .collect()
}

/// Site operators of an MPO family whose entries are affine in `s`,
/// evaluated by interpolation instead of rebuilding the MPO.
#[derive(Debug, Clone)]
pub(crate) struct AffineOps {
    s0: f64,
    base: Vec<SiteOp>,
    slope: Vec<SiteOp>,
}

impl AffineOps {
    /// Samples the family at two points; `None` if their sparsity differs.
    pub fn new(build: impl Fn(f64) -> Result<Mpo>) -> Result<Option<Self>> {
        let (s0, s1) = (0.25, 0.75);
        let base = site_ops(&build(s0)?);
        let top = site_ops(&build(s1)?);
        let mut slope = base.clone();
        for (sl, (b, t)) in slope.iter_mut().zip(base.iter().zip(&top)) {
            if b.blocks.len() != t.blocks.len() || (b.wl, b.wr, b.d) != (t.wl, t.wr, t.d) {
                return Ok(None);
            }
            for (blk, (bb, tb)) in sl.blocks.iter_mut().zip(b.blocks.iter().zip(&t.blocks)) {
                if (bb.a, bb.b) != (tb.a, tb.b) || bb.entries.len() != tb.entries.len() {
                    return Ok(None);
                }
                for (e, (be, te)) in blk
                    .entries
                    .iter_mut()
                    .zip(bb.entries.iter().zip(&tb.entries))
                {
                    if (be.0, be.1) != (te.0, te.1) {
                        return Ok(None);
                    }
                    e.2 = (te.2 - be.2) / (s1 - s0);
                }
            }
        }
        Ok(Some(AffineOps { s0, base, slope }))
    }

    pub fn at(&self, s: f64) -> Vec<SiteOp> {
        let ds = s - self.s0;
        let mut out = self.base.clone();
        for (o, sl) in out.iter_mut().zip(&self.slope) {
            for (blk, sb) in o.blocks.iter_mut().zip(&sl.blocks) {
                for (e, se) in blk.entries.iter_mut().zip(&sb.entries) {
                    e.2 += se.2 * ds;
                }
            }
        }
        out
    }
}

pub(crate) fn check_compatible(mps: &MpsState, mpo: &Mpo) -> Result<()> {
    if mps.n_sites() != mpo.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: mpo.n_sites(),
            found: mps.n_sites(),
        });
    }
    for (t, w) in mps.tensors.iter().zip(&mpo.tensors) {
        if t.d != w.phys {
            return Err(Error::DimensionMismatch {
                expected: w.phys,
                found: t.d,
            });
        }
    }
    Ok(())
}

/// `w` square matrices (bra, ket) of the bond dimension `D`, index `(a * D + bra) * D + ket`.
/// `tr` holds the same blocks transposed.
#[derive(Debug, Clone)]
pub(crate) struct Env {
    pub w: usize,
    pub data: Vec<C64>,
    pub tr: Vec<C64>,
}

impl Env {
    pub fn boundary() -> Self {
        Env {
            w: 1,
            data: vec![C64::new(1.0, 0.0)],
            tr: vec![C64::new(1.0, 0.0)],
        }
    }

    fn new(w: usize, dim: usize, data: Vec<C64>) -> Self {
        let mut tr = vec![ZERO; data.len()];
        for a in 0..w {
            for i in 0..dim {
                for j in 0..dim {
                    tr[(a * dim + j) * dim + i] = data[(a * dim + i) * dim + j];
                }
            }
        }
        Env { w, data, tr }
    }
}

/// Scratch buffers for repeated `H_eff` applications.
#[derive(Debug, Default)]
pub(crate) struct Workspace {
    x: Vec<C64>,
    y: Vec<C64>,
}

fn reset(buf: &mut Vec<C64>, len: usize) {
    buf.clear();
    buf.resize(len, ZERO);
}

/// `ws.y[b][a'][s'][beta] = sum W_ab[s', s] (L[a] v)[a'][s][beta]`, shared by
/// the site action and the left-environment update.
fn left_half(l: &Env, op: &SiteOp, v: &[C64], dl: usize, dr: usize, ws: &mut Workspace) {
    let d = op.d;
    let row = d * dr;
    let slab = dl * row;
    reset(&mut ws.x, l.w * slab);
    for a in 0..l.w {
        for ap in 0..dl {
            let dst = &mut ws.x[a * slab + ap * row..a * slab + (ap + 1) * row];
            for al in 0..dl {
                let c = l.data[(a * dl + ap) * dl + al];
                if c == ZERO {
                    continue;
                }
                for (o, i) in dst.iter_mut().zip(&v[al * row..(al + 1) * row]) {
                    *o += c * i;
                }
            }
        }
    }
    reset(&mut ws.y, op.wr * slab);
    for blk in &op.blocks {
        for &(o, i, w) in &blk.entries {
            for ap in 0..dl {
                let src =
                    &ws.x[blk.a * slab + ap * row + i * dr..blk.a * slab + ap * row + (i + 1) * dr];
                let dst = &mut ws.y
                    [blk.b * slab + ap * row + o * dr..blk.b * slab + ap * row + (o + 1) * dr];
                for (t, s) in dst.iter_mut().zip(src) {
                    *t += w * s;
                }
            }
        }
    }
}

/// `H_eff v` for a site tensor `v` of shape `(dl, d, dr)`.
pub(crate) fn apply_site(
    l: &Env,
    r: &Env,
    op: &SiteOp,
    v: &[C64],
    dl: usize,
    dr: usize,
    out: &mut [C64],
    ws: &mut Workspace,
) {
    let d = op.d;
    left_half(l, op, v, dl, dr, ws);
    out.iter_mut().for_each(|z| *z = ZERO);
    let slab = dl * d * dr;
    for b in 0..op.wr {
        for (k, dst) in out.chunks_exact_mut(dr).enumerate() {
            let yrow = &ws.y[b * slab + k * dr..b * slab + (k + 1) * dr];
            for (beta, c) in yrow.iter().enumerate() {
                if *c == ZERO {
                    continue;
                }
                let rrow = &r.tr[(b * dr + beta) * dr..(b * dr + beta + 1) * dr];
                for (o, q) in dst.iter_mut().zip(rrow) {
                    *o += c * q;
                }
            }
        }
    }
}

/// `H_bond c` for a bond matrix `c` of shape `(dl, dr)` between environments
/// that share the MPO bond index.
pub(crate) fn apply_bond(
    l: &Env,
    r: &Env,
    c: &[C64],
    dl: usize,
    dr: usize,
    out: &mut [C64],
    ws: &mut Workspace,
) {
    let w = l.w;
    reset(&mut ws.x, w * dl * dr);
    for a in 0..w {
        for ap in 0..dl {
            let dst = &mut ws.x[(a * dl + ap) * dr..(a * dl + ap + 1) * dr];
            for al in 0..dl {
                let lv = l.data[(a * dl + ap) * dl + al];
                if lv == ZERO {
                    continue;
                }
                for (o, i) in dst.iter_mut().zip(&c[al * dr..(al + 1) * dr]) {
                    *o += lv * i;
                }
            }
        }
    }
    out.iter_mut().for_each(|z| *z = ZERO);
    for a in 0..w {
        for (ap, dst) in out.chunks_exact_mut(dr).enumerate() {
            let xrow = &ws.x[(a * dl + ap) * dr..(a * dl + ap + 1) * dr];
            for (beta, x) in xrow.iter().enumerate() {
                if *x == ZERO {
                    continue;
                }
                let rrow = &r.tr[(a * dr + beta) * dr..(a * dr + beta + 1) * dr];
                for (o, q) in dst.iter_mut().zip(rrow) {
                    *o += x * q;
                }
            }
        }
    }
}

/// Left environment including site tensor `t`.
pub(crate) fn extend_left(l: &Env, t: &Tensor3, op: &SiteOp) -> Env {
    let (dl, d, dr) = (t.dl, t.d, t.dr);
    let mut ws = Workspace::default();
    left_half(l, op, &t.data, dl, dr, &mut ws);
    let slab = dl * d * dr;
    let mut out = vec![ZERO; op.wr * dr * dr];
    for b in 0..op.wr {
        for k in 0..dl * d {
            let yrow = &ws.y[b * slab + k * dr..b * slab + (k + 1) * dr];
            for bp in 0..dr {
                let c = t.data[k * dr + bp].conj();
                if c == ZERO {
                    continue;
                }
                let dst = &mut out[(b * dr + bp) * dr..(b * dr + bp + 1) * dr];
                for (o, i) in dst.iter_mut().zip(yrow) {
                    *o += c * i;
                }
            }
        }
    }
    Env::new(op.wr, dr, out)
}

/// Right environment including site tensor `t`.
pub(crate) fn extend_right(r: &Env, t: &Tensor3, op: &SiteOp) -> Env {
    let (dl, d, dr) = (t.dl, t.d, t.dr);
    let slab = dl * dr;
    // x[b][s][alpha][beta'] = sum_beta B[alpha, s, beta] R[b][beta'][beta]
    let mut x = vec![ZERO; op.wr * d * slab];
    for b in 0..op.wr {
        for al in 0..dl {
            for s in 0..d {
                let brow = &t.data[(al * d + s) * dr..(al * d + s + 1) * dr];
                for bp in 0..dr {
                    let rrow = &r.data[(b * dr + bp) * dr..(b * dr + bp + 1) * dr];
                    let mut acc = ZERO;
                    for (p, q) in brow.iter().zip(rrow) {
                        acc += p * q;
                    }
                    x[((b * d + s) * dl + al) * dr + bp] = acc;
                }
            }
        }
    }
    let mut y = vec![ZERO; op.wl * d * slab];
    for blk in &op.blocks {
        for &(o, i, w) in &blk.entries {
            let src = &x[(blk.b * d + i) * slab..(blk.b * d + i + 1) * slab];
            let dst = &mut y[(blk.a * d + o) * slab..(blk.a * d + o + 1) * slab];
            for (t, s) in dst.iter_mut().zip(src) {
                *t += w * s;
            }
        }
    }
    let mut out = vec![ZERO; op.wl * dl * dl];
    for a in 0..op.wl {
        for ap in 0..dl {
            for al in 0..dl {
                let mut acc = ZERO;
                for s in 0..d {
                    let brow = &t.data[(ap * d + s) * dr..(ap * d + s + 1) * dr];
                    let yrow = &y[((a * d + s) * dl + al) * dr..((a * d + s) * dl + al + 1) * dr];
                    for (p, q) in brow.iter().zip(yrow) {
                        acc += p.conj() * q;
                    }
                }
                out[(a * dl + ap) * dl + al] = acc;
            }
        }
    }
    Env::new(op.wl, dl, out)
}

/// Left environments `L[0..=j]` (sites before `j`).
pub(crate) fn left_envs(mps: &MpsState, ops: &[SiteOp], upto: usize) -> Vec<Env> {
    let mut envs = Vec::with_capacity(upto + 1);
    envs.push(Env::boundary());
    for j in 0..upto {
        let next = extend_left(&envs[j], &mps.tensors[j], &ops[j]);
        envs.push(next);
    }
    envs
}

/// Right environments, `out[j]` covering sites after `j`, for `j >= from`.
pub(crate) fn right_envs(mps: &MpsState, ops: &[SiteOp], from: usize) -> Vec<Option<Env>> {
    let n = mps.n_sites();
    let mut envs: Vec<Option<Env>> = vec![None; n];
    envs[n - 1] = Some(Env::boundary());
    for j in (from + 1..n).rev() {
        let next = extend_right(envs[j].as_ref().expect("built"), &mps.tensors[j], &ops[j]);
        envs[j - 1] = Some(next);
    }
    envs
}

/// `<psi|H|psi> / <psi|psi>`.
pub fn energy(mps: &MpsState, mpo: &Mpo) -> Result<f64> {
    check_compatible(mps, mpo)?;
    let ops = site_ops(mpo);
    let envs = left_envs(mps, &ops, mps.n_sites());
    let norm2 = crate::linalg::norm(&mps.tensors[mps.center].data).powi(2);
    Ok(envs[mps.n_sites()].data[0].re / norm2)
}

/// Dense `H_eff` at one site.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub site: usize,
    pub shape: (usize, usize, usize),
    pub matrix: DMatrix<C64>,
}

/// Builds `H_eff` at `site` with the canonical centre moved there.
pub fn effective_hamiltonian(
    mps: &MpsState,
    mpo: &Mpo,
    site: usize,
) -> Result<EffectiveHamiltonian> {
    check_compatible(mps, mpo)?;
    if site >= mps.n_sites() {
        return Err(Error::InvalidParameter {
            name: "site",
            value: site as f64,
        });
    }
    let mut m = mps.clone();
    m.move_center(site);
    let ops = site_ops(mpo);
    let lefts = left_envs(&m, &ops, site);
    let rights = right_envs(&m, &ops, site);
    let t = &m.tensors[site];
    let dim = t.dl * t.d * t.dr;
    let mut matrix = DMatrix::<C64>::zeros(dim, dim);
    let mut e = vec![ZERO; dim];
    let mut out = vec![ZERO; dim];
    let mut ws = Workspace::default();
    for k in 0..dim {
        e.iter_mut().for_each(|z| *z = ZERO);
        e[k] = C64::new(1.0, 0.0);
        apply_site(
            &lefts[site],
            rights[site].as_ref().expect("built"),
            &ops[site],
            &e,
            t.dl,
            t.dr,
            &mut out,
            &mut ws,
        );
        for (i, v) in out.iter().enumerate() {
            matrix[(i, k)] = *v;
        }
    }
    Ok(EffectiveHamiltonian {
        site,
        shape: (t.dl, t.d, t.dr),
        matrix,
    })
}

/// Gap of `H_eff` at the centre site `floor(N/2)`.
pub fn effective_gap(mps: &MpsState, mpo: &Mpo) -> Result<f64> {
    effective_gap_at(mps, mpo, mps.n_sites() / 2)
}

/// Second-lowest minus lowest distinct eigenvalue of `H_eff` at `site`.
pub fn effective_gap_at(mps: &MpsState, mpo: &Mpo, site: usize) -> Result<f64> {
    let h = effective_hamiltonian(mps, mpo, site)?;
    let dim = h.matrix.nrows();
    if dim < 2 {
        return Err(Error::InsufficientEffectiveSpace { site, dim });
    }
    let residual = hermitian_residual(&h.matrix);
    if residual >= 1e-10 {
        return Err(Error::NonHermitian { residual });
    }
    let (vals, _) = eigh(&h.matrix);
    gap_from_sorted(&vals).ok_or(Error::FlatSpectrum)
}
