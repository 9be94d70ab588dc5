//! Matrix product states for qubit chains: canonical forms, single-site TDVP,
//! DMRG, effective-Hamiltonian gaps, entropies and annealing runs.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use num_traits::Float;

use crate::exact::{StateVector, MAX_DIM};
use crate::linalg;
use crate::{Error, Result};

mod anneal;
mod dmrg;
mod env;
mod tdvp;

pub use anneal::{
    anneal_mps, classical_ground_manifold, refine_final, AnnealOptions, AnnealRecord, AnnealSample,
    Annealer, EXACT_DIM_LIMIT, KINK_SLOPE,
};
pub use dmrg::{dmrg, DmrgOptions, DmrgResult};
pub use env::{
    effective_gap, effective_gap_at, effective_hamiltonian, energy, EffectiveHamiltonian,
};
pub use tdvp::{tdvp_step, tdvp_step_with, Integrator, KRYLOV_TOL};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Residual below which a tensor counts as isometric.
pub const CANONICAL_TOL: f64 = 1e-10;

/// Three-index tensor `(left bond, physical, right bond)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub dl: usize,
    pub d: usize,
    pub dr: usize,
    pub data: Vec<C64>,
}

impl Tensor3 {
    pub fn zeros(dl: usize, d: usize, dr: usize) -> Self {
        Tensor3 {
            dl,
            d,
            dr,
            data: vec![ZERO; dl * d * dr],
        }
    }

    #[inline]
    pub fn idx(&self, a: usize, s: usize, b: usize) -> usize {
        (a * self.d + s) * self.dr + b
    }

    #[inline]
    pub fn get(&self, a: usize, s: usize, b: usize) -> C64 {
        self.data[self.idx(a, s, b)]
    }

    /// `(dl * d) x dr` matrix.
    fn left_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dl * self.d, self.dr, &self.data)
    }

    /// `dl x (d * dr)` matrix.
    fn right_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dl, self.d * self.dr, &self.data)
    }

    fn from_matrix(dl: usize, d: usize, dr: usize, m: &DMatrix<C64>) -> Self {
        let mut t = Tensor3::zeros(dl, d, dr);
        let cols = m.ncols();
        for r in 0..m.nrows() {
            for c in 0..cols {
                t.data[r * cols + c] = m[(r, c)];
            }
        }
        t
    }

    /// `max |A^dagger A - 1|` over the left-grouped matrix.
    pub fn left_isometry_residual(&self) -> f64 {
        let m = self.left_matrix();
        max_dev_from_identity(&(m.adjoint() * m))
    }

    /// `max |A A^dagger - 1|` over the right-grouped matrix.
    pub fn right_isometry_residual(&self) -> f64 {
        let m = self.right_matrix();
        max_dev_from_identity(&(&m * m.adjoint()))
    }

    fn norm(&self) -> f64 {
        linalg::norm(&self.data)
    }
}

fn max_dev_from_identity(m: &DMatrix<C64>) -> f64 {
    let mut r: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            r = r.max((m[(i, j)] - target).norm());
        }
    }
    r
}

/// Mixed-canonical MPS: sites left of `center` left-isometric, right of it right-isometric.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsState {
    pub tensors: Vec<Tensor3>,
    pub center: usize,
    pub d_max: usize,
}

/// Bond-dimension-1 MPS of the given per-site states, centre at site 0.
pub fn product_mps(sites: &[Vec<C64>], d_max: usize) -> Result<MpsState> {
    if sites.is_empty() {
        return Err(Error::InvalidParameter {
            name: "sites",
            value: 0.0,
        });
    }
    if d_max == 0 {
        return Err(Error::InvalidParameter {
            name: "D",
            value: 0.0,
        });
    }
    let tensors = sites
        .iter()
        .map(|v| {
            let n = linalg::norm(v);
            Tensor3 {
                dl: 1,
                d: v.len(),
                dr: 1,
                data: v.iter().map(|x| x / n).collect(),
            }
        })
        .collect();
    Ok(MpsState {
        tensors,
        center: 0,
        d_max,
    })
}

/// `|+>^{(x) n}` as an MPS.
pub fn plus_mps(n: usize, d_max: usize) -> Result<MpsState> {
    let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
    product_mps(&vec![vec![h, h]; n], d_max)
}

/// Largest useful dimension of the bond after the first `k` of `n` sites.
pub fn max_bond(d: usize, k: usize, n: usize, d_max: usize) -> usize {
    let cap = |m: usize| -> usize {
        let mut v: usize = 1;
        for _ in 0..m {
            v = v.saturating_mul(d);
            if v >= d_max {
                return d_max;
            }
        }
        v
    };
    cap(k).min(cap(n - k)).min(d_max)
}

impl MpsState {
    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    /// Dimensions of the `N - 1` internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1]
            .iter()
            .map(|t| t.dr)
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.tensors[self.center].norm()
    }

    /// Largest isometry residual over all non-centre sites.
    pub fn canonical_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for (j, t) in self.tensors.iter().enumerate() {
            if j < self.center {
                r = r.max(t.left_isometry_residual());
            } else if j > self.center {
                r = r.max(t.right_isometry_residual());
            }
        }
        r
    }

    /// QR-splits the centre tensor and moves the centre one site right.
    /// Returns the bond matrix `R` that was absorbed into the next site.
    pub(crate) fn shift_right(&mut self) -> DMatrix<C64> {
        let j = self.center;
        let (q, r) = split_left(&self.tensors[j]);
        self.tensors[j] = q;
        absorb_left(&r, &mut self.tensors[j + 1]);
        self.center = j + 1;
        r
    }

    /// Mirror of [`shift_right`](Self::shift_right); returns the absorbed `L`.
    pub(crate) fn shift_left(&mut self) -> DMatrix<C64> {
        let j = self.center;
        let (l, q) = split_right(&self.tensors[j]);
        self.tensors[j] = q;
        absorb_right(&mut self.tensors[j - 1], &l);
        self.center = j - 1;
        l
    }

    /// Moves the orthogonality centre to `site`.
    pub fn move_center(&mut self, site: usize) {
        while self.center < site {
            self.shift_right();
        }
        while self.center > site {
            self.shift_left();
        }
    }

    /// Re-establishes the canonical form from scratch with the centre at `site`.
    pub fn canonicalize(&mut self, site: usize) {
        let n = self.n_sites();
        self.center = 0;
        for _ in 0..n - 1 {
            self.shift_right();
        }
        while self.center > site {
            self.shift_left();
        }
    }

    pub fn normalize(&mut self) -> f64 {
        let c = self.center;
        linalg::normalize(&mut self.tensors[c].data)
    }

    /// Grows every bond to `max_bond(d, k, N, D)` with zero-weight directions,
    /// leaving the state unchanged. The centre ends at site 0.
    pub fn pad_bonds(&mut self, d_max: usize) {
        self.d_max = self.d_max.max(d_max);
        let n = self.n_sites();
        self.move_center(0);
        for j in 0..n - 1 {
            let d = self.tensors[j].d;
            let target = max_bond(d, j + 1, n, d_max).max(self.tensors[j].dr);
            let (q, r) = split_left(&self.tensors[j]);
            let q = extend_isometry(&q, target);
            let mut r_pad = DMatrix::<C64>::zeros(target, r.ncols());
            r_pad.view_mut((0, 0), (r.nrows(), r.ncols())).copy_from(&r);
            self.tensors[j] = q;
            absorb_left(&r_pad, &mut self.tensors[j + 1]);
            self.center = j + 1;
        }
        while self.center > 0 {
            self.shift_left();
        }
    }

    /// Dense amplitudes, site 0 most significant.
    pub fn to_dense(&self) -> Result<StateVector> {
        let dim = self.tensors.iter().try_fold(1usize, |acc, t| {
            acc.checked_mul(t.d).filter(|v| *v <= MAX_DIM)
        });
        if dim.is_none() {
            return Err(Error::DimensionOverflow {
                sites: self.n_sites(),
            });
        }
        // rows: prefix configurations, columns: current bond
        let mut cur = vec![C64::new(1.0, 0.0)];
        let mut rows = 1usize;
        let mut bond = 1usize;
        for t in &self.tensors {
            let mut next = vec![ZERO; rows * t.d * t.dr];
            for p in 0..rows {
                for a in 0..bond {
                    let c = cur[p * bond + a];
                    if c == ZERO {
                        continue;
                    }
                    for s in 0..t.d {
                        let out = (p * t.d + s) * t.dr;
                        let base = t.idx(a, s, 0);
                        for b in 0..t.dr {
                            next[out + b] += c * t.data[base + b];
                        }
                    }
                }
            }
            rows *= t.d;
            bond = t.dr;
            cur = next;
        }
        Ok(StateVector {
            amplitudes: nalgebra::DVector::from_vec(cur),
        })
    }

    /// Raw byte layout: `u64` site count, then per site the `u64` triple
    /// `(dl, d, dr)` followed by `dl*d*dr` pairs of little-endian `f64`
    /// (real, imaginary) in row-major order; a trailing `u64` centre and `u64` D cap.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.n_sites() as u64).to_le_bytes());
        for t in &self.tensors {
            for v in [t.dl, t.d, t.dr] {
                out.extend_from_slice(&(v as u64).to_le_bytes());
            }
            for z in &t.data {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.center as u64).to_le_bytes());
        out.extend_from_slice(&(self.d_max as u64).to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut take8 = || -> Result<[u8; 8]> {
            let chunk = bytes.get(pos..pos + 8).ok_or(Error::DimensionMismatch {
                expected: pos + 8,
                found: bytes.len(),
            })?;
            pos += 8;
            Ok(chunk.try_into().expect("8 bytes"))
        };
        let n = u64::from_le_bytes(take8()?) as usize;
        let mut tensors = Vec::with_capacity(n.min(1 << 16));
        let mut prev_dr = 1usize;
        for _ in 0..n {
            let dl = u64::from_le_bytes(take8()?) as usize;
            let d = u64::from_le_bytes(take8()?) as usize;
            let dr = u64::from_le_bytes(take8()?) as usize;
            if dl != prev_dr {
                return Err(Error::DimensionMismatch {
                    expected: prev_dr,
                    found: dl,
                });
            }
            let len = dl
                .checked_mul(d)
                .and_then(|x| x.checked_mul(dr))
                .ok_or(Error::DimensionOverflow { sites: n })?;
            let mut data = Vec::with_capacity(len.min(1 << 24));
            for _ in 0..len {
                let re = f64::from_le_bytes(take8()?);
                let im = f64::from_le_bytes(take8()?);
                data.push(C64::new(re, im));
            }
            tensors.push(Tensor3 { dl, d, dr, data });
            prev_dr = dr;
        }
        if prev_dr != 1 || n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: prev_dr,
            });
        }
        let center = u64::from_le_bytes(take8()?) as usize;
        let d_max = u64::from_le_bytes(take8()?) as usize;
        if center >= n {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                found: center,
            });
        }
        Ok(MpsState {
            tensors,
            center,
            d_max,
        })
    }
}

/// `A = Q R` over the left grouping; `Q` keeps the tensor shape when `dl*d >= dr`.
pub(crate) fn split_left(t: &Tensor3) -> (Tensor3, DMatrix<C64>) {
    let qr = t.left_matrix().qr();
    let (q, r) = (qr.q(), qr.r());
    let k = q.ncols();
    (Tensor3::from_matrix(t.dl, t.d, k, &q), r)
}

/// `A = L Q` over the right grouping, `Q` right-isometric.
pub(crate) fn split_right(t: &Tensor3) -> (DMatrix<C64>, Tensor3) {
    let qr = t.right_matrix().adjoint().qr();
    let (q, r) = (qr.q(), qr.r());
    let k = q.ncols();
    (
        r.adjoint(),
        Tensor3::from_matrix(k, t.d, t.dr, &q.adjoint()),
    )
}

/// `t <- m . t` on the left bond.
pub(crate) fn absorb_left(m: &DMatrix<C64>, t: &mut Tensor3) {
    let prod = m * t.right_matrix();
    *t = Tensor3::from_matrix(m.nrows(), t.d, t.dr, &prod);
}

/// `t <- t . m` on the right bond.
pub(crate) fn absorb_right(t: &mut Tensor3, m: &DMatrix<C64>) {
    let prod = t.left_matrix() * m;
    *t = Tensor3::from_matrix(t.dl, t.d, m.ncols(), &prod);
}

/// Adds orthonormal columns to a left-isometric tensor until it has `target`
/// right-bond directions. Candidates are standard basis vectors, so the
/// result is deterministic.
pub(crate) fn extend_isometry(q: &Tensor3, target: usize) -> Tensor3 {
    extend_isometry_with(q, target, &[])
}

/// Like [`extend_isometry`], trying the columns of `candidates`
/// (each of length `dl*d`) before standard basis vectors.
pub(crate) fn extend_isometry_with(q: &Tensor3, target: usize, candidates: &[Vec<C64>]) -> Tensor3 {
    let rows = q.dl * q.d;
    let target = target.min(rows);
    if q.dr >= target {
        return q.clone();
    }
    let mut cols: Vec<Vec<C64>> = (0..q.dr)
        .map(|b| (0..rows).map(|r| q.data[r * q.dr + b]).collect())
        .collect();
    let basis = (0..rows).map(|r| {
        let mut e = vec![ZERO; rows];
        e[r] = C64::new(1.0, 0.0);
        e
    });
    for mut v in candidates.iter().cloned().chain(basis) {
        if cols.len() >= target {
            break;
        }
        let before = linalg::norm(&v);
        if before == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for c in &cols {
                let ov = linalg::dot(c, &v);
                linalg::axpy(-ov, c, &mut v);
            }
        }
        if linalg::norm(&v) > 1e-6 * before {
            linalg::normalize(&mut v);
            cols.push(v);
        }
    }
    let k = cols.len();
    let mut out = Tensor3::zeros(q.dl, q.d, k);
    for (b, c) in cols.iter().enumerate() {
        for r in 0..rows {
            out.data[r * k + b] = c[r];
        }
    }
    out
}

/// `<a|b>` by left-to-right transfer-matrix contraction.
pub fn overlap(a: &MpsState, b: &MpsState) -> Result<C64> {
    if a.n_sites() != b.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: a.n_sites(),
            found: b.n_sites(),
        });
    }
    // e[alpha_a][alpha_b]
    let mut e = vec![C64::new(1.0, 0.0)];
    let (mut da, mut db) = (1usize, 1usize);
    for (ta, tb) in a.tensors.iter().zip(&b.tensors) {
        if ta.d != tb.d {
            return Err(Error::DimensionMismatch {
                expected: ta.d,
                found: tb.d,
            });
        }
        // tmp[alpha_a][s][beta_b] = sum_alpha_b e[alpha_a][alpha_b] B[alpha_b, s, beta_b]
        let mut tmp = vec![ZERO; da * tb.d * tb.dr];
        for x in 0..da {
            for y in 0..db {
                let c = e[x * db + y];
                if c == ZERO {
                    continue;
                }
                for s in 0..tb.d {
                    let base = tb.idx(y, s, 0);
                    let out = (x * tb.d + s) * tb.dr;
                    for bb in 0..tb.dr {
                        tmp[out + bb] += c * tb.data[base + bb];
                    }
                }
            }
        }
        let mut next = vec![ZERO; ta.dr * tb.dr];
        for x in 0..da {
            for s in 0..ta.d {
                for ba in 0..ta.dr {
                    let ca = ta.get(x, s, ba).conj();
                    if ca == ZERO {
                        continue;
                    }
                    let src = (x * tb.d + s) * tb.dr;
                    for bb in 0..tb.dr {
                        next[ba * tb.dr + bb] += ca * tmp[src + bb];
                    }
                }
            }
        }
        e = next;
        da = ta.dr;
        db = tb.dr;
    }
    Ok(e[0])
}

/// Phase-aligned distance between two MPS, through dense vectors when they fit.
pub fn mps_distance(a: &MpsState, b: &MpsState) -> Result<f64> {
    if let (Ok(x), Ok(y)) = (a.to_dense(), b.to_dense()) {
        return crate::exact::phase_aligned_distance(&x, &y);
    }
    let ov = overlap(a, b)?.norm();
    let na = overlap(a, a)?.re;
    let nb = overlap(b, b)?.re;
    Ok((na + nb - 2.0 * ov).max(0.0).sqrt())
}

/// Von Neumann entropy across the bond after the first `cut` sites.
pub fn mps_entropy(mps: &MpsState, cut: usize) -> Result<f64> {
    let n = mps.n_sites();
    if cut == 0 || cut >= n {
        return Err(Error::InvalidCut(alloc::format!("cut {cut} for {n} sites")));
    }
    let mut m = mps.clone();
    m.move_center(cut);
    let t = &m.tensors[cut];
    let sv = linalg::singular_values(t.dl, t.d * t.dr, &t.data);
    let norm2: f64 = sv.iter().map(|x| x * x).sum();
    let sv: Vec<f64> = sv.iter().map(|x| x / norm2.sqrt()).collect();
    Ok(linalg::entropy_from_singular_values(&sv))
}

/// Dense-vector MPS by successive SVDs (no truncation beyond `d_max`).
pub fn mps_from_dense(state: &StateVector, n: usize, d_max: usize) -> Result<MpsState> {
    let dim = state.dim();
    if dim != 1usize << n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            found: dim,
        });
    }
    let mut tensors = Vec::with_capacity(n);
    let mut rest = DMatrix::from_row_slice(1, dim, state.as_slice());
    let mut bond = 1usize;
    for _ in 0..n - 1 {
        let cols = rest.ncols() / 2;
        // regroup (bond, 2 * cols) -> (bond * 2, cols)
        let mut m = DMatrix::<C64>::zeros(bond * 2, cols);
        for a in 0..bond {
            for s in 0..2 {
                for c in 0..cols {
                    m[(a * 2 + s, c)] = rest[(a, s * cols + c)];
                }
            }
        }
        let d = linalg::svd(&m);
        let k =
            d.s.iter()
                .filter(|x| **x > 1e-14)
                .count()
                .clamp(1, d_max.max(1));
        let u = d.u.columns(0, k).into_owned();
        let vt = d.vh.rows(0, k).into_owned();
        let sv = DMatrix::from_fn(
            k,
            k,
            |i, j| if i == j { C64::new(d.s[i], 0.0) } else { ZERO },
        );
        tensors.push(Tensor3::from_matrix(bond, 2, k, &u));
        rest = sv * vt;
        bond = k;
    }
    let mut last = Tensor3::zeros(bond, 2, 1);
    for a in 0..bond {
        for s in 0..2 {
            last.data[a * 2 + s] = rest[(a, s)];
        }
    }
    tensors.push(last);
    let mut mps = MpsState {
        tensors,
        center: n - 1,
        d_max,
    };
    mps.normalize();
    mps.move_center(0);
    Ok(mps)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::exact::{entanglement_entropy, Bipartition};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_mps(n: usize, bond: usize, seed: u64) -> MpsState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = Vec::new();
        for j in 0..n {
            let dl = max_bond(2, j, n, bond);
            let dr = max_bond(2, j + 1, n, bond);
            let mut t = Tensor3::zeros(dl, 2, dr);
            for z in t.data.iter_mut() {
                *z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            tensors.push(t);
        }
        let mut m = MpsState {
            tensors,
            center: 0,
            d_max: bond,
        };
        m.canonicalize(0);
        m.normalize();
        m
    }

    #[test]
    fn plus_state_round_trip() {
        let m = plus_mps(8, 4).unwrap();
        let v = m.to_dense().unwrap();
        for a in v.amplitudes.iter() {
            assert!((a - C64::new(1.0 / 16.0, 0.0)).norm() < 1e-15);
        }
        assert_eq!(mps_entropy(&m, 4).unwrap(), 0.0);
    }

    #[test]
    fn padding_keeps_state_and_canonical_form() {
        let mut m = plus_mps(8, 16).unwrap();
        let before = m.to_dense().unwrap();
        m.pad_bonds(16);
        assert_eq!(m.bond_dims(), vec![2, 4, 8, 16, 8, 4, 2]);
        assert!(m.canonical_residual() < 1e-12);
        let after = m.to_dense().unwrap();
        assert!(crate::exact::phase_aligned_distance(&before, &after).unwrap() < 1e-14);
        let mut m = plus_mps(6, 3).unwrap();
        m.pad_bonds(3);
        assert_eq!(m.bond_dims(), vec![2, 3, 3, 3, 2]);
    }

    #[test]
    fn random_mps_is_normalized_and_canonical() {
        let m = random_mps(7, 4, 1);
        assert!(m.canonical_residual() < 1e-12);
        let v = m.to_dense().unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        let mut moved = m.clone();
        moved.move_center(5);
        assert!(moved.canonical_residual() < 1e-12);
        assert!(
            crate::exact::phase_aligned_distance(&v, &moved.to_dense().unwrap()).unwrap() < 1e-12
        );
    }

    #[test]
    fn overlap_matches_dense_contraction() {
        let a = random_mps(6, 4, 2);
        let b = random_mps(6, 3, 3);
        let o = overlap(&a, &b).unwrap();
        let d = a.to_dense().unwrap().overlap(&b.to_dense().unwrap());
        assert!((o - d).norm() < 1e-12);
    }

    #[test]
    fn entropy_matches_dense() {
        let m = random_mps(6, 4, 4);
        let v = m.to_dense().unwrap();
        for cut in 1..6 {
            let e = mps_entropy(&m, cut).unwrap();
            let d = entanglement_entropy(&v, &Bipartition::new(vec![2; 6], cut)).unwrap();
            assert!((e - d).abs() < 1e-10);
        }
        assert!(mps_entropy(&m, 0).is_err());
    }

    #[test]
    fn bell_pair_entropy() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::new(vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]);
        let m = mps_from_dense(&bell, 2, 4).unwrap();
        assert!((mps_entropy(&m, 1).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dense_round_trip() {
        let m = random_mps(8, 16, 5);
        let v = m.to_dense().unwrap();
        let back = mps_from_dense(&v, 8, 16).unwrap();
        assert!(
            crate::exact::phase_aligned_distance(&v, &back.to_dense().unwrap()).unwrap() < 1e-12
        );
    }

    #[test]
    fn bytes_round_trip() {
        let m = random_mps(5, 3, 6);
        let bytes = m.to_bytes();
        assert_eq!(MpsState::from_bytes(&bytes).unwrap(), m);
        assert!(MpsState::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let m = plus_mps(15, 1).unwrap();
        assert!(matches!(m.to_dense(), Err(Error::DimensionOverflow { .. })));
    }
}
