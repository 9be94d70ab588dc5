//! Annealing protocols `H(s) = (1-s) H0 + s H1 + s(1-s) H2`.
//!
//! Qubit convention throughout the crate: `Z|0> = +|0>`, `X|0> = |1>`, and
//! site 0 is the most significant bit of a computational-basis index.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::distributions::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exact::DenseOperator;
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    TwoQubit,
    Bipartite,
    Lmg,
    SpinGlass,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TwoQubit => "two-qubit",
            ModelKind::Bipartite => "bipartite",
            ModelKind::Lmg => "lmg",
            ModelKind::SpinGlass => "spin-glass",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "two-qubit" | "twoqubit" => Ok(ModelKind::TwoQubit),
            "bipartite" => Ok(ModelKind::Bipartite),
            "lmg" => Ok(ModelKind::Lmg),
            "spin-glass" | "spinglass" => Ok(ModelKind::SpinGlass),
            _ => Err(Error::UnknownModel(s.to_string())),
        }
    }
}

/// Model parameters accepted by [`build_protocol`].
#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    None,
    /// Catalyst strength `A` (two-qubit and bipartite models).
    Catalyst(f64),
    Disorder(SpinGlassInstance),
}

/// Compressed sparse row operator, used for propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    pub fn zero(dim: usize) -> Self {
        SparseOperator {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let triplets = diag
            .iter()
            .enumerate()
            .map(|(k, &d)| (k, k, C64::new(d, 0.0)))
            .collect();
        Self::from_triplets(diag.len(), triplets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `y += coef * A x`
    pub fn matvec_add(&self, coef: C64, x: &[C64], y: &mut [C64]) {
        if coef == ZERO {
            return;
        }
        for r in 0..self.dim {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] += coef * acc;
        }
    }

    pub fn add_to_dense(&self, coef: f64, m: &mut DMatrix<C64>) {
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k] * coef;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        self.add_to_dense(1.0, &mut m);
        m
    }
}

/// A fully specified annealing protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    kind: ModelKind,
    n: usize,
    params: ModelParams,
    local_dims: Vec<usize>,
    h0: SparseOperator,
    h1: SparseOperator,
    h2: Option<SparseOperator>,
}

impl ProtocolSpec {
    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// System-size parameter `N` (for the bipartite model, the number of extra
    /// levels per subsystem).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn catalyst_strength(&self) -> f64 {
        match self.params {
            ModelParams::Catalyst(a) => a,
            _ => 0.0,
        }
    }

    pub fn spin_glass(&self) -> Option<&SpinGlassInstance> {
        match &self.params {
            ModelParams::Disorder(inst) => Some(inst),
            _ => None,
        }
    }

    pub fn h0(&self) -> &SparseOperator {
        &self.h0
    }

    pub fn h1(&self) -> &SparseOperator {
        &self.h1
    }

    pub fn h2(&self) -> Option<&SparseOperator> {
        self.h2.as_ref()
    }

    fn coefficients(s: f64) -> (f64, f64, f64) {
        (1.0 - s, s, s * (1.0 - s))
    }

    /// Dense `H(s)`.
    pub fn hamiltonian_at(&self, s: f64) -> Result<DenseOperator> {
        check_s(s)?;
        let (c0, c1, c2) = Self::coefficients(s);
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        self.h0.add_to_dense(c0, &mut m);
        self.h1.add_to_dense(c1, &mut m);
        if let Some(h2) = &self.h2 {
            h2.add_to_dense(c2, &mut m);
        }
        DenseOperator::new(m, self.local_dims.clone())
    }

    /// `y = H(s) x` without forming the dense matrix. `s` is not range checked.
    pub fn apply(&self, s: f64, x: &[C64], y: &mut [C64]) {
        let (c0, c1, c2) = Self::coefficients(s);
        y.iter_mut().for_each(|v| *v = ZERO);
        self.h0.matvec_add(C64::new(c0, 0.0), x, y);
        self.h1.matvec_add(C64::new(c1, 0.0), x, y);
        if let Some(h2) = &self.h2 {
            h2.matvec_add(C64::new(c2, 0.0), x, y);
        }
    }
}

pub(crate) fn check_s(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) || s.is_nan() {
        return Err(Error::InvalidParameter {
            name: "s",
            value: s,
        });
    }
    Ok(())
}

/// `Z` eigenvalue of site `site` in basis state `index` of an `n`-qubit register.
#[inline]
pub fn spin_z(index: usize, site: usize, n: usize) -> f64 {
    if (index >> (n - 1 - site)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `-sum_j X_j` on `n` qubits.
pub fn transverse_field(n: usize) -> SparseOperator {
    let dim = 1usize << n;
    let mut triplets = Vec::with_capacity(dim * n);
    for idx in 0..dim {
        for site in 0..n {
            triplets.push((idx, idx ^ (1 << (n - 1 - site)), -ONE));
        }
    }
    SparseOperator::from_triplets(dim, triplets)
}

/// Two-level embedding of `-(X (x) 1 + 1 (x) X)` for two subsystems of local dimension `q`.
fn embedded_transverse_field(q: usize) -> SparseOperator {
    let mut triplets = Vec::new();
    for a in 0..q {
        for b in 0..q {
            let idx = a * q + b;
            if a < 2 {
                triplets.push((idx, (1 - a) * q + b, -ONE));
            }
            if b < 2 {
                triplets.push((idx, a * q + (1 - b), -ONE));
            }
        }
    }
    SparseOperator::from_triplets(q * q, triplets)
}

/// `Z (x) Z - 2 (Z (x) 1 + 1 (x) Z)` with `Z` acting on the first two levels.
fn embedded_target(q: usize) -> SparseOperator {
    let z = |a: usize| match a {
        0 => 1.0,
        1 => -1.0,
        _ => 0.0,
    };
    let diag: Vec<f64> = (0..q * q)
        .map(|idx| {
            let (a, b) = (idx / q, idx % q);
            z(a) * z(b) - 2.0 * (z(a) + z(b))
        })
        .collect();
    SparseOperator::from_diagonal(&diag)
}

/// `-A q |Psi+><Psi+|` with `|Psi+> = sum_i |ii> / sqrt(q)`.
fn entangling_catalyst(q: usize, a: f64) -> SparseOperator {
    let mut triplets = Vec::with_capacity(q * q);
    for i in 0..q {
        for j in 0..q {
            triplets.push((i * q + i, j * q + j, C64::new(-a, 0.0)));
        }
    }
    SparseOperator::from_triplets(q * q, triplets)
}

fn lmg_target(n: usize) -> SparseOperator {
    let diag: Vec<f64> = (0..1usize << n)
        .map(|idx| {
            let m: f64 = (0..n).map(|site| spin_z(idx, site, n)).sum();
            -m * m / n as f64
        })
        .collect();
    SparseOperator::from_diagonal(&diag)
}

/// Builds a protocol for the given model.
///
/// * `TwoQubit`: `N` must be 2; `params` is `Catalyst(A)` (or `None` for `A = 0`).
/// * `Bipartite`: `N >= 0` extra levels per subsystem; `params` is `Catalyst(A)`.
/// * `Lmg`: `N >= 1`; no catalyst.
/// * `SpinGlass`: `params` is `Disorder(instance)` with `instance.n == N`.
pub fn build_protocol(kind: ModelKind, n: usize, params: ModelParams) -> Result<ProtocolSpec> {
    let catalyst = match &params {
        ModelParams::Catalyst(a) if *a < 0.0 || a.is_nan() => {
            return Err(Error::InvalidParameter {
                name: "A",
                value: *a,
            })
        }
        ModelParams::Catalyst(a) => *a,
        _ => 0.0,
    };
    match kind {
        ModelKind::TwoQubit | ModelKind::Bipartite => {
            if matches!(params, ModelParams::Disorder(_)) {
                return Err(Error::Unsupported {
                    model: kind.name(),
                    operation: "disorder parameters",
                });
            }
            if kind == ModelKind::TwoQubit && n != 2 {
                return Err(Error::InvalidParameter {
                    name: "N",
                    value: n as f64,
                });
            }
            let q = if kind == ModelKind::TwoQubit {
                2
            } else {
                n + 2
            };
            let h2 = entangling_catalyst(q, catalyst);
            Ok(ProtocolSpec {
                kind,
                n,
                params: ModelParams::Catalyst(catalyst),
                local_dims: vec![q, q],
                h0: embedded_transverse_field(q),
                h1: embedded_target(q),
                h2: Some(h2),
            })
        }
        ModelKind::Lmg => {
            if n < 1 {
                return Err(Error::InvalidParameter {
                    name: "N",
                    value: n as f64,
                });
            }
            if catalyst != 0.0 {
                return Err(Error::Unsupported {
                    model: kind.name(),
                    operation: "a catalyst term",
                });
            }
            Ok(ProtocolSpec {
                kind,
                n,
                params: ModelParams::None,
                local_dims: vec![2; n],
                h0: transverse_field(n),
                h1: lmg_target(n),
                h2: None,
            })
        }
        ModelKind::SpinGlass => {
            let inst = match &params {
                ModelParams::Disorder(inst) => inst.clone(),
                _ => {
                    return Err(Error::Unsupported {
                        model: kind.name(),
                        operation: "missing disorder instance",
                    })
                }
            };
            if inst.n != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: inst.n,
                });
            }
            let diag: Vec<f64> = (0..1usize << n)
                .map(|idx| inst.energy_of_index(idx))
                .collect();
            Ok(ProtocolSpec {
                kind,
                n,
                params: ModelParams::Disorder(inst),
                local_dims: vec![2; n],
                h0: transverse_field(n),
                h1: SparseOperator::from_diagonal(&diag),
                h2: None,
            })
        }
    }
}

/// Fully connected Ising instance
/// `H1 = -sum_{i != j} J_ij Z_i Z_j + sum_i h_i Z_i` (ordered pairs, so each
/// unordered pair carries weight `2 J_ij`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinGlassInstance {
    pub n: usize,
    /// Row-major `n x n`, symmetric, zero diagonal.
    pub couplings: Vec<f64>,
    pub fields: Vec<f64>,
    pub seed: u64,
}

impl SpinGlassInstance {
    /// Assembles and validates an instance from upper-triangle couplings
    /// (row-major, `i < j`) and fields.
    pub fn from_parts(n: usize, seed: u64, upper: &[f64], fields: &[f64]) -> Result<Self> {
        if upper.len() != n * (n - 1) / 2 {
            return Err(Error::DimensionMismatch {
                expected: n * (n - 1) / 2,
                found: upper.len(),
            });
        }
        if fields.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: fields.len(),
            });
        }
        let mut couplings = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                couplings[i * n + j] = upper[k];
                couplings[j * n + i] = upper[k];
                k += 1;
            }
        }
        Ok(SpinGlassInstance {
            n,
            couplings,
            fields: fields.to_vec(),
            seed,
        })
    }

    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    /// Classical energy of a configuration of `Z` eigenvalues.
    pub fn energy(&self, spins: &[f64]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                e -= 2.0 * self.coupling(i, j) * spins[i] * spins[j];
            }
            e += self.fields[i] * spins[i];
        }
        e
    }

    pub fn energy_of_index(&self, index: usize) -> f64 {
        let spins: Vec<f64> = (0..self.n)
            .map(|site| spin_z(index, site, self.n))
            .collect();
        self.energy(&spins)
    }

    /// Sorted classical spectrum `(energy, basis index)`.
    pub fn classical_spectrum(&self) -> Vec<(f64, usize)> {
        let mut levels: Vec<(f64, usize)> = (0..1usize << self.n)
            .map(|k| (self.energy_of_index(k), k))
            .collect();
        levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        levels
    }
}

/// Draws a seeded instance: `J_ij ~ U(0,1)` over the upper triangle in
/// row-major order, then `h_i ~ U(-1/2, 1/2)`. The generator is ChaCha8
/// seeded through `seed_from_u64`, so a seed fixes the instance bit for bit.
pub fn sample_spin_glass(n: usize, seed: u64) -> SpinGlassInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let upper: Vec<f64> = (0..n * (n.saturating_sub(1)) / 2)
        .map(|_| Open01.sample(&mut rng))
        .collect();
    let fields: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = Open01.sample(&mut rng);
            u - 0.5
        })
        .collect();
    SpinGlassInstance::from_parts(n, seed, &upper, &fields)
        .expect("sizes are consistent by construction")
}

/// One MPO site tensor with index order (left bond, physical out, physical in, right bond).
#[derive(Debug, Clone, PartialEq)]
pub struct MpoTensor {
    pub left: usize,
    pub phys: usize,
    pub right: usize,
    pub data: Vec<C64>,
}

impl MpoTensor {
    pub fn zeros(left: usize, phys: usize, right: usize) -> Self {
        MpoTensor {
            left,
            phys,
            right,
            data: vec![ZERO; left * phys * phys * right],
        }
    }

    #[inline]
    pub fn index(&self, a: usize, out: usize, inp: usize, b: usize) -> usize {
        ((a * self.phys + out) * self.phys + inp) * self.right + b
    }

    #[inline]
    pub fn get(&self, a: usize, out: usize, inp: usize, b: usize) -> C64 {
        self.data[self.index(a, out, inp, b)]
    }

    fn add_block(&mut self, a: usize, b: usize, op: [[C64; 2]; 2]) {
        for (out, row) in op.iter().enumerate() {
            for (inp, v) in row.iter().enumerate() {
                let k = self.index(a, out, inp, b);
                self.data[k] += *v;
            }
        }
    }

    /// Nonzero operator blocks `(a, b)`.
    pub fn nonzero_blocks(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.left {
            for b in 0..self.right {
                let nz =
                    (0..self.phys).any(|o| (0..self.phys).any(|i| self.get(a, o, i, b) != ZERO));
                if nz {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Matrix product operator with open boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Mpo {
    pub tensors: Vec<MpoTensor>,
}

impl Mpo {
    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    /// Bond dimension at each internal cut `1..N`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1]
            .iter()
            .map(|t| t.right)
            .collect()
    }

    /// `<bra|W|ket>` for computational basis states given as digit strings.
    pub fn matrix_element(&self, bra: &[usize], ket: &[usize]) -> C64 {
        let mut row = vec![ONE];
        for (site, t) in self.tensors.iter().enumerate() {
            let mut next = vec![ZERO; t.right];
            for (a, ra) in row.iter().enumerate() {
                if *ra == ZERO {
                    continue;
                }
                for (b, nb) in next.iter_mut().enumerate() {
                    *nb += *ra * t.get(a, bra[site], ket[site], b);
                }
            }
            row = next;
        }
        row[0]
    }

    /// Dense reconstruction (qubit MPOs with at most 12 sites).
    pub fn to_dense(&self) -> Result<DMatrix<C64>> {
        let n = self.n_sites();
        let d = self.tensors[0].phys;
        if n > 12 {
            return Err(Error::DimensionOverflow { sites: n });
        }
        let dim = d.pow(n as u32);
        let digits = |mut k: usize| {
            let mut out = vec![0; n];
            for site in (0..n).rev() {
                out[site] = k % d;
                k /= d;
            }
            out
        };
        let mut m = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            let bra = digits(r);
            for c in 0..dim {
                m[(r, c)] = self.matrix_element(&bra, &digits(c));
            }
        }
        Ok(m)
    }
}

#[derive(Clone, Copy)]
enum CutLayout {
    /// Open channels carry `Z_i` of each site `i < k`.
    Left(usize),
    /// Open channels carry `sum_{i<k} c_ij Z_i` for each site `j >= k`.
    Right(usize),
}

impl CutLayout {
    fn new(k: usize, n: usize) -> Self {
        if k <= n - k {
            CutLayout::Left(k)
        } else {
            CutLayout::Right(k)
        }
    }

    fn width(self, n: usize) -> usize {
        match self {
            CutLayout::Left(k) => 2 + k,
            CutLayout::Right(k) => 2 + n - k,
        }
    }
}

const CH_IDENTITY: usize = 0;
const CH_DONE: usize = 1;

/// Exact MPO of `(1-s) H0 + s H1` for a spin-glass instance.
///
/// Bond dimension at cut `k` is `min(k, N-k) + 2`: an identity channel, a
/// completed-terms channel, and one open `Z` channel per still-coupled site on
/// the smaller side of the cut.
pub fn spin_glass_mpo(inst: &SpinGlassInstance, s: f64) -> Result<Mpo> {
    check_s(s)?;
    let n = inst.n;
    let c = |i: usize, j: usize| -2.0 * s * inst.coupling(i, j);
    let x = [[ZERO, ONE], [ONE, ZERO]];
    let z = [[ONE, ZERO], [ZERO, -ONE]];
    let id = [[ONE, ZERO], [ZERO, ONE]];
    let scaled = |op: [[C64; 2]; 2], f: f64| op.map(|row| row.map(|v| v * f));

    let mut tensors = Vec::with_capacity(n);
    for m in 0..n {
        let lcut = CutLayout::new(m, n);
        let rcut = CutLayout::new(m + 1, n);
        let mut t = MpoTensor::zeros(lcut.width(n), 2, rcut.width(n));
        t.add_block(CH_IDENTITY, CH_IDENTITY, id);
        t.add_block(CH_DONE, CH_DONE, id);
        let mut local = scaled(x, -(1.0 - s));
        for (o, row) in local.iter_mut().enumerate() {
            row[o] += z[o][o] * (s * inst.fields[m]);
        }
        t.add_block(CH_IDENTITY, CH_DONE, local);
        match (lcut, rcut) {
            (CutLayout::Left(_), CutLayout::Left(_)) => {
                for i in 0..m {
                    t.add_block(2 + i, CH_DONE, scaled(z, c(i, m)));
                    t.add_block(2 + i, 2 + i, id);
                }
                t.add_block(CH_IDENTITY, 2 + m, z);
            }
            (CutLayout::Left(_), CutLayout::Right(k)) => {
                for i in 0..m {
                    t.add_block(2 + i, CH_DONE, scaled(z, c(i, m)));
                    for j in k..n {
                        t.add_block(2 + i, 2 + (j - k), scaled(id, c(i, j)));
                    }
                }
                for j in k..n {
                    t.add_block(CH_IDENTITY, 2 + (j - k), scaled(z, c(m, j)));
                }
            }
            (CutLayout::Right(kl), CutLayout::Right(kr)) => {
                t.add_block(2 + (m - kl), CH_DONE, z);
                for j in kr..n {
                    t.add_block(2 + (j - kl), 2 + (j - kr), id);
                    t.add_block(CH_IDENTITY, 2 + (j - kr), scaled(z, c(m, j)));
                }
            }
            (CutLayout::Right(_), CutLayout::Left(_)) => unreachable!("cut layouts are monotone"),
        }
        tensors.push(t);
    }
    // open boundaries: start in the identity channel, end in the done channel
    let first = &tensors[0];
    let mut head = MpoTensor::zeros(1, 2, first.right);
    for o in 0..2 {
        for i in 0..2 {
            for b in 0..first.right {
                let k = head.index(0, o, i, b);
                head.data[k] = first.get(CH_IDENTITY, o, i, b);
            }
        }
    }
    tensors[0] = head;
    let last = &tensors[n - 1];
    let mut tail = MpoTensor::zeros(last.left, 2, 1);
    for a in 0..last.left {
        for o in 0..2 {
            for i in 0..2 {
                let k = tail.index(a, o, i, 0);
                tail.data[k] = last.get(a, o, i, CH_DONE);
            }
        }
    }
    tensors[n - 1] = tail;
    Ok(Mpo { tensors })
}

/// Human-readable description used in error messages and reports.
pub fn describe(spec: &ProtocolSpec) -> alloc::string::String {
    match spec.params() {
        ModelParams::Catalyst(a) => format!("{} N={} A={}", spec.kind().name(), spec.n(), a),
        ModelParams::Disorder(inst) => {
            format!("{} N={} seed={}", spec.kind().name(), spec.n(), inst.seed)
        }
        ModelParams::None => format!("{} N={}", spec.kind().name(), spec.n()),
    }
}
