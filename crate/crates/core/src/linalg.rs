//! Small dense helpers, plus Krylov routines for Hermitian operators that are
//! only available as a matrix-vector product.
//!
//! Dense eigen- and singular-value decompositions go through `faer`; the
//! rest of the crate stores matrices as `nalgebra` types.

use alloc::vec;
use alloc::vec::Vec;

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use num_traits::Float;

use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// `<a|b>` with the first argument conjugated.
#[inline]
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

#[inline]
pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[inline]
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: C64, x: &mut [C64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Normalizes in place and returns the original norm.
pub fn normalize(x: &mut [C64]) -> f64 {
    let n = norm(x);
    if n > 0.0 {
        scale(C64::new(1.0 / n, 0.0), x);
    }
    n
}

/// Largest `|M_ij - conj(M_ji)|`.
pub fn hermitian_residual(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn to_faer(m: &DMatrix<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = to_faer(m)
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigensolver failed");
    let (s, u) = (eig.S(), eig.U());
    let values = (0..n).map(|k| s[k].re).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    (values, vectors)
}

/// Eigendecomposition of a real symmetric tridiagonal matrix, ascending.
///
/// Implicit QL with Wilkinson shifts. Krylov projections are small and
/// already tridiagonal, so this avoids a dense reduction per iteration.
fn tridiagonal_eigh(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let n = alpha.len();
    let mut d = alpha.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&beta[..n.saturating_sub(1)]);
    let mut z = DMatrix::<f64>::identity(n, n);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk1 = z[(k, i + 1)];
                    let zk = z[(k, i)];
                    z[(k, i + 1)] = s * zk + c * zk1;
                    z[(k, i)] = c * zk - s * zk1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| z[(i, order[j])]);
    (values, vectors)
}

/// Thin singular value decomposition `m = u diag(s) vh`, `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<C64>,
    pub s: Vec<f64>,
    pub vh: DMatrix<C64>,
}

pub fn svd(m: &DMatrix<C64>) -> Svd {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Svd {
            u: DMatrix::zeros(r, 0),
            s: Vec::new(),
            vh: DMatrix::zeros(0, c),
        };
    }
    let d = to_faer(m).thin_svd().expect("SVD failed");
    let (u, s, v) = (d.U(), d.S(), d.V());
    Svd {
        u: DMatrix::from_fn(r, k, |i, j| u[(i, j)]),
        s: (0..k).map(|j| s[j].re).collect(),
        vh: DMatrix::from_fn(k, c, |i, j| v[(j, i)].conj()),
    }
}

fn orthogonalize_against(w: &mut [C64], basis: &[Vec<C64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, w);
            axpy(-c, b, w);
        }
    }
}

/// A deterministic start vector with support on every component.
pub fn default_start(dim: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|k| {
            let x = (k as f64 + 1.0) * 0.618_033_988_749_895;
            C64::new(1.0 + 0.5 * (x - x.floor()), 0.25 * (x * 7.0).sin())
        })
        .collect();
    normalize(&mut v);
    v
}

/// Outcome of an extremal eigensolve.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
}

/// Lowest eigenpair of a Hermitian operator restricted to the orthogonal
/// complement of `locked`, by restarted Lanczos with full reorthogonalization.
pub fn lanczos_lowest<F>(
    dim: usize,
    mut matvec: F,
    start: &[C64],
    locked: &[Vec<C64>],
    tol: f64,
    max_krylov: usize,
    max_restarts: usize,
) -> Result<EigenPair>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let max_krylov = max_krylov.clamp(1, dim.saturating_sub(locked.len()).max(1));
    let mut v0 = start.to_vec();
    orthogonalize_against(&mut v0, locked);
    if normalize(&mut v0) < 1e-12 {
        v0 = default_start(dim);
        orthogonalize_against(&mut v0, locked);
        normalize(&mut v0);
    }

    let mut w = vec![ZERO; dim];
    let mut best = EigenPair {
        value: f64::INFINITY,
        vector: v0.clone(),
        residual: f64::INFINITY,
    };
    for _ in 0..=max_restarts {
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_krylov);
        let mut alpha: Vec<f64> = Vec::with_capacity(max_krylov);
        let mut beta: Vec<f64> = Vec::with_capacity(max_krylov);
        basis.push(v0.clone());
        let mut ritz: (f64, Vec<f64>, f64);
        loop {
            let k = basis.len() - 1;
            matvec(&basis[k], &mut w);
            let a = dot(&basis[k], &w).re;
            alpha.push(a);
            orthogonalize_against(&mut w, locked);
            orthogonalize_against(&mut w, &basis);
            let b = norm(&w);
            let (vals, vecs) = tridiagonal_eigh(&alpha, &beta);
            let y: Vec<f64> = (0..alpha.len()).map(|i| vecs[(i, 0)]).collect();
            let res = (b * y[alpha.len() - 1]).abs();
            ritz = (vals[0], y, res);
            let exhausted = basis.len() >= max_krylov || b < 1e-13 * (1.0 + a.abs());
            if res < tol || exhausted {
                break;
            }
            beta.push(b);
            let mut next = w.clone();
            scale(C64::new(1.0 / b, 0.0), &mut next);
            basis.push(next);
        }
        let (value, y, _) = ritz;
        let mut x = vec![ZERO; dim];
        for (bk, yk) in basis.iter().zip(&y) {
            axpy(C64::new(*yk, 0.0), bk, &mut x);
        }
        orthogonalize_against(&mut x, locked);
        normalize(&mut x);
        // true residual, not the Lanczos estimate
        matvec(&x, &mut w);
        let rq = dot(&x, &w).re;
        axpy(C64::new(-rq, 0.0), &x, &mut w);
        orthogonalize_against(&mut w, locked);
        let residual = norm(&w);
        best = EigenPair {
            value: rq,
            vector: x.clone(),
            residual,
        };
        if residual < tol.max(1e-14 * (1.0 + value.abs())) * 10.0 {
            return Ok(best);
        }
        v0 = x;
    }
    if best.residual < 1e-6 {
        // usable but not at the requested tolerance; caller decides
        return Ok(best);
    }
    Err(Error::NotConverged {
        what: "Lanczos eigensolver",
        residual: best.residual,
    })
}

/// `exp(-i t H) v` for Hermitian `H` given as a matrix-vector product.
///
/// Lanczos with an a-posteriori error estimate; the step is split when the
/// Krylov space budget is exhausted before reaching `tol`.
pub fn expm_action<F>(dim: usize, matvec: &mut F, v: &[C64], t: f64, tol: f64) -> Result<Vec<C64>>
where
    F: FnMut(&[C64], &mut [C64]),
{
    const MAX_KRYLOV: usize = 40;
    let mut out = v.to_vec();
    let mut remaining = t;
    let mut substep = t;
    let mut guard = 0;
    while remaining.abs() > 0.0 {
        guard += 1;
        if guard > 4096 {
            return Err(Error::NotConverged {
                what: "Krylov exponential",
                residual: f64::NAN,
            });
        }
        let h = if substep.abs() > remaining.abs() {
            remaining
        } else {
            substep
        };
        match krylov_step(dim, matvec, &out, h, tol, MAX_KRYLOV) {
            Some(next) => {
                out = next;
                remaining -= h;
            }
            None => substep = h * 0.5,
        }
    }
    Ok(out)
}

fn krylov_step<F>(
    dim: usize,
    matvec: &mut F,
    v: &[C64],
    t: f64,
    tol: f64,
    max_krylov: usize,
) -> Option<Vec<C64>>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let v_norm = norm(v);
    if v_norm == 0.0 {
        return Some(v.to_vec());
    }
    let max_krylov = max_krylov.min(dim).max(1);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_krylov);
    let mut first = v.to_vec();
    scale(C64::new(1.0 / v_norm, 0.0), &mut first);
    basis.push(first);
    let mut alpha = Vec::with_capacity(max_krylov);
    let mut beta = Vec::with_capacity(max_krylov);
    let mut w = vec![ZERO; dim];
    loop {
        let k = basis.len() - 1;
        matvec(&basis[k], &mut w);
        let a = dot(&basis[k], &w).re;
        alpha.push(a);
        orthogonalize_against(&mut w, &basis);
        let b = norm(&w);
        let m = alpha.len();
        let breakdown = b < 1e-13 * (1.0 + a.abs());
        // no error estimate for the first two vectors
        if m < 3 && !breakdown && m < dim && m < max_krylov {
            beta.push(b);
            let mut next = w.clone();
            scale(C64::new(1.0 / b, 0.0), &mut next);
            basis.push(next);
            continue;
        }
        let (vals, vecs) = tridiagonal_eigh(&alpha, &beta);
        // coefficients of exp(-i t T) e_1 in the Krylov basis
        let phases: Vec<C64> = (0..m)
            .map(|j| C64::from_polar(vecs[(0, j)], -t * vals[j]))
            .collect();
        let coeff = |i: usize| (0..m).fold(ZERO, |acc, j| acc + phases[j] * vecs[(i, j)]);
        let err = v_norm * b * coeff(m - 1).norm();
        if err < tol || breakdown || m == dim {
            let mut out = vec![ZERO; dim];
            for (i, bk) in basis.iter().enumerate() {
                axpy(coeff(i) * v_norm, bk, &mut out);
            }
            return Some(out);
        }
        if m >= max_krylov {
            return None;
        }
        beta.push(b);
        let mut next = w.clone();
        scale(C64::new(1.0 / b, 0.0), &mut next);
        basis.push(next);
    }
}

/// Von Neumann entropy (natural log) of squared singular values, skipping
/// weights below `1e-14`.
pub fn entropy_from_singular_values(sv: &[f64]) -> f64 {
    let total: f64 = sv.iter().map(|x| x * x).sum();
    if total <= 0.0 {
        return 0.0;
    }
    sv.iter()
        .map(|x| x * x / total)
        .filter(|p| *p > 1e-14)
        .map(|p| -p * p.ln())
        .sum()
}

/// Singular values of a complex matrix stored row-major.
pub fn singular_values(rows: usize, cols: usize, data: &[C64]) -> Vec<f64> {
    let m = DMatrix::from_row_slice(rows, cols, data);
    let mut sv = svd(&m).s;
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn dvector(v: &[C64]) -> DVector<C64> {
    DVector::from_column_slice(v)
}
