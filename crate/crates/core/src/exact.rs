//! Exact state-vector reference: dense operators, eigensolving, Schrödinger
//! propagation in rescaled time, entanglement entropy and distances.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use num_traits::Float;

use crate::linalg::{self, default_start, dot, eigh, hermitian_residual, lanczos_lowest};
use crate::models::ProtocolSpec;
use crate::{Error, Result, DEGENERACY_TOL};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Full diagonalization is used up to this dimension; iterative above.
pub const DENSE_EIGEN_LIMIT: usize = 4096;
/// Largest Hilbert space handled by this module.
pub const MAX_DIM: usize = 1 << 14;
/// Krylov tolerance of each exponential in [`evolve_exact`].
const EXPM_TOL: f64 = 1e-13;

/// Something that can act as a Hermitian operator on a state vector.
pub trait HermitianOperator {
    fn dim(&self) -> usize;
    /// `y = H x`
    fn apply(&self, x: &[C64], y: &mut [C64]);
    /// Dense matrix if it is cheap to produce.
    fn dense(&self) -> Option<DMatrix<C64>>;
}

/// Hermitian matrix on a tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<C64>,
    local_dims: Vec<usize>,
}

impl DenseOperator {
    /// Checks Hermiticity (`< 1e-12`) and, when `local_dims` is non-empty,
    /// that the dimension factorizes accordingly.
    pub fn new(matrix: DMatrix<C64>, local_dims: Vec<usize>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if !local_dims.is_empty() {
            let product: usize = local_dims.iter().product();
            if product != matrix.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: product,
                    found: matrix.nrows(),
                });
            }
        }
        let residual = hermitian_residual(&matrix);
        if residual >= 1e-12 {
            return Err(Error::NonHermitian { residual });
        }
        Ok(DenseOperator { matrix, local_dims })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn expectation(&self, psi: &StateVector) -> f64 {
        let hv = &self.matrix * &psi.amplitudes;
        psi.amplitudes.dotc(&hv).re
    }
}

impl HermitianOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let r = &self.matrix * DVector::from_column_slice(x);
        y.copy_from_slice(r.as_slice());
    }

    fn dense(&self) -> Option<DMatrix<C64>> {
        Some(self.matrix.clone())
    }
}

/// `H(s)` of a protocol, applied through its sparse terms.
#[derive(Debug, Clone, Copy)]
pub struct ProtocolAt<'a> {
    pub spec: &'a ProtocolSpec,
    pub s: f64,
}

impl HermitianOperator for ProtocolAt<'_> {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.spec.apply(self.s, x, y);
    }

    fn dense(&self) -> Option<DMatrix<C64>> {
        if self.dim() > DENSE_EIGEN_LIMIT {
            return None;
        }
        self.spec.hamiltonian_at(self.s).ok().map(|h| h.matrix)
    }
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: DVector<C64>,
}

impl StateVector {
    /// Normalizes the given amplitudes.
    pub fn new(amplitudes: Vec<C64>) -> Self {
        let mut v = DVector::from_vec(amplitudes);
        let n = v.norm();
        if n > 0.0 {
            v /= C64::new(n, 0.0);
        }
        StateVector { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        self.amplitudes.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`
    pub fn overlap(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Tensor product of per-site states, site 0 most significant.
    pub fn product(sites: &[Vec<C64>]) -> Self {
        let mut amps = vec![C64::new(1.0, 0.0)];
        for local in sites {
            let mut next = Vec::with_capacity(amps.len() * local.len());
            for a in &amps {
                for l in local {
                    next.push(a * l);
                }
            }
            amps = next;
        }
        StateVector::new(amps)
    }

    /// `|+>^{(x) n}`
    pub fn plus_state(n: usize) -> Self {
        let h = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::product(&vec![vec![h, h]; n])
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![ZERO; dim];
        v[index] = C64::new(1.0, 0.0);
        StateVector::new(v)
    }
}

/// `min_alpha || a - e^{i alpha} b ||_2`, i.e. `sqrt(2 - 2 |<a|b>|)` for unit vectors.
pub fn phase_aligned_distance(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let ov = b.overlap(a);
    let phase = if ov.norm() > 0.0 {
        ov / ov.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    // evaluated directly rather than via 2 - 2|<a|b>| to keep small distances accurate
    Ok(a.amplitudes
        .iter()
        .zip(b.amplitudes.iter())
        .map(|(x, y)| (x - phase * y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Total weight of `psi` inside the span of the orthonormal `basis`.
pub fn manifold_overlap(psi: &StateVector, basis: &[StateVector]) -> f64 {
    basis.iter().map(|g| g.overlap(psi).norm_sqr()).sum()
}

/// Phase-aligned distance from `psi` to the closest unit vector in the span of `basis`.
pub fn manifold_distance(psi: &StateVector, basis: &[StateVector]) -> f64 {
    let mut proj = DVector::<C64>::zeros(psi.dim());
    for g in basis {
        proj += &g.amplitudes * g.overlap(psi);
    }
    let pn = proj.norm();
    if pn == 0.0 {
        return core::f64::consts::SQRT_2;
    }
    (&psi.amplitudes - proj / C64::new(pn, 0.0)).norm()
}

/// Lowest eigenvalue, one eigenvector, and the ground-level multiplicity.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    pub degeneracy: usize,
    /// Orthonormal basis of the ground level (`degeneracy` vectors).
    pub manifold: Vec<StateVector>,
}

/// Adds `value` to the ascending level list; false once a new level beyond
/// `levels` would be needed.
fn push_level(out: &mut Vec<(f64, usize)>, value: f64, levels: usize) -> bool {
    if let Some((e, mult)) = out.last_mut() {
        if (value - *e).abs() < DEGENERACY_TOL {
            *mult += 1;
            return true;
        }
    }
    if out.len() == levels {
        return false;
    }
    out.push((value, 1));
    true
}

/// Lowest distinct levels of a Hermitian operator: `(value, multiplicity)`
/// plus orthonormal eigenvectors for the first level.
fn low_spectrum<O: HermitianOperator + ?Sized>(
    op: &O,
    levels: usize,
) -> Result<(Vec<(f64, usize)>, Vec<StateVector>)> {
    let dim = op.dim();
    if dim > MAX_DIM {
        return Err(Error::DimensionMismatch {
            expected: MAX_DIM,
            found: dim,
        });
    }
    if let Some(m) = op.dense().filter(|_| dim <= DENSE_EIGEN_LIMIT) {
        let residual = hermitian_residual(&m);
        if residual >= 1e-12 {
            return Err(Error::NonHermitian { residual });
        }
        let (vals, vecs) = eigh(&m);
        let mut out: Vec<(f64, usize)> = Vec::new();
        for v in &vals {
            if !push_level(&mut out, *v, levels) {
                break;
            }
        }
        let ground: Vec<StateVector> = (0..out[0].1)
            .map(|k| StateVector::new(vecs.column(k).iter().copied().collect()))
            .collect();
        return Ok((out, ground));
    }
    // iterative path: deflated Lanczos, one eigenpair at a time
    let mut found: Vec<Vec<C64>> = Vec::new();
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut ground = Vec::new();
    loop {
        let pair = lanczos_lowest(
            dim,
            |x, y| op.apply(x, y),
            &default_start(dim),
            &found,
            1e-10,
            120,
            60,
        )?;
        if !push_level(&mut out, pair.value, levels) {
            break;
        }
        if out.len() == 1 {
            ground.push(StateVector::new(pair.vector.clone()));
        }
        found.push(pair.vector);
        if found.len() == dim {
            break;
        }
    }
    Ok((out, ground))
}

/// Ground energy, a unit ground vector, and the number of eigenvalues within
/// `1e-9` of the ground energy.
pub fn ground_state<O: HermitianOperator + ?Sized>(h: &O) -> Result<GroundState> {
    let (levels, manifold) = low_spectrum(h, 1)?;
    Ok(GroundState {
        energy: levels[0].0,
        state: manifold[0].clone(),
        degeneracy: levels[0].1,
        manifold,
    })
}

/// Gap between the ground level and the first distinct level above it.
pub fn spectral_gap<O: HermitianOperator + ?Sized>(h: &O) -> Result<f64> {
    let (levels, _) = low_spectrum(h, 2)?;
    match levels.as_slice() {
        [(e0, _), (e1, _), ..] => Ok(e1 - e0),
        _ => Err(Error::FlatSpectrum),
    }
}

/// Gap computed from an ascending list of eigenvalues, skipping levels
/// within `1e-9` of the lowest one.
pub fn gap_from_sorted(values: &[f64]) -> Option<f64> {
    let e0 = *values.first()?;
    values
        .iter()
        .find(|v| **v - e0 >= DEGENERACY_TOL)
        .map(|v| v - e0)
}

/// Split of a tensor-product space after the first `left` factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    pub local_dims: Vec<usize>,
    pub left: usize,
}

impl Bipartition {
    pub fn new(local_dims: Vec<usize>, left: usize) -> Self {
        Bipartition { local_dims, left }
    }

    /// Half cut of `n` qubits.
    pub fn half_qubits(n: usize) -> Self {
        Bipartition {
            local_dims: vec![2; n],
            left: n / 2,
        }
    }

    fn split(&self, dim: usize) -> Result<(usize, usize)> {
        let total: usize = self.local_dims.iter().product();
        if total != dim {
            return Err(Error::InvalidCut(alloc::format!(
                "local dimensions multiply to {total}, state has dimension {dim}"
            )));
        }
        if self.left > self.local_dims.len() {
            return Err(Error::InvalidCut(alloc::format!(
                "cut after {} of {} factors",
                self.left,
                self.local_dims.len()
            )));
        }
        let dl: usize = self.local_dims[..self.left].iter().product();
        Ok((dl, dim / dl))
    }
}

/// Von Neumann entropy (natural log) of the reduced state on either side of `cut`.
pub fn entanglement_entropy(state: &StateVector, cut: &Bipartition) -> Result<f64> {
    let (dl, dr) = cut.split(state.dim())?;
    let sv = linalg::singular_values(dl, dr, state.as_slice());
    Ok(linalg::entropy_from_singular_values(&sv))
}

/// Time-ordered solution sampled on a grid in rescaled time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    /// Kept only when requested.
    pub states: Option<Vec<StateVector>>,
    pub energies: Vec<f64>,
    pub norms: Vec<f64>,
    /// Number of integration steps in `s`.
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> Option<&StateVector> {
        self.states.as_ref().and_then(|s| s.last())
    }
}

/// Sampling options for [`evolve_exact_with`].
#[derive(Debug, Clone, Copy)]
pub struct ExactSampling {
    /// Number of equal intervals in `s` at whose end points the state is recorded.
    pub intervals: usize,
    pub keep_states: bool,
}

impl Default for ExactSampling {
    fn default() -> Self {
        ExactSampling {
            intervals: 100,
            keep_states: true,
        }
    }
}

/// Integrates `d/ds |psi> = -i T H(s) |psi>` from `s = 0` to `1` with a
/// fourth-order commutator-free Magnus scheme, physical step at most `dt`.
pub fn evolve_exact(
    spec: &ProtocolSpec,
    t_total: f64,
    dt: f64,
    psi0: &StateVector,
) -> Result<Trajectory> {
    evolve_exact_with(spec, t_total, dt, psi0, ExactSampling::default())
}

pub fn evolve_exact_with(
    spec: &ProtocolSpec,
    t_total: f64,
    dt: f64,
    psi0: &StateVector,
    sampling: ExactSampling,
) -> Result<Trajectory> {
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
    if dt >= t_total {
        return Err(Error::StepExceedsHorizon {
            dt,
            horizon: t_total,
        });
    }
    let dim = spec.dim();
    if psi0.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: psi0.dim(),
        });
    }
    let intervals = sampling.intervals.max(1);
    let per_interval = (t_total / (dt * intervals as f64) - 1e-9).ceil().max(1.0) as usize;
    let steps = per_interval * intervals;
    let h = 1.0 / steps as f64;

    let mut psi: Vec<C64> = psi0.as_slice().to_vec();
    let mut tmp = vec![ZERO; dim];
    let mut hv = vec![ZERO; dim];

    let mut traj = Trajectory {
        grid: Vec::with_capacity(intervals + 1),
        states: sampling.keep_states.then(Vec::new),
        energies: Vec::with_capacity(intervals + 1),
        norms: Vec::with_capacity(intervals + 1),
        steps,
    };
    let mut record = |s: f64, psi: &[C64], traj: &mut Trajectory| {
        spec.apply(s, psi, &mut hv);
        traj.grid.push(s);
        traj.energies.push(dot(psi, &hv).re);
        traj.norms.push(linalg::norm(psi));
        if let Some(states) = traj.states.as_mut() {
            states.push(StateVector {
                amplitudes: DVector::from_column_slice(psi),
            });
        }
    };
    record(0.0, &psi, &mut traj);

    // fourth-order commutator-free Magnus: two exponentials of Gauss-node
    // combinations per step
    let r3 = 3.0.sqrt();
    let (n1, n2) = (0.5 - r3 / 6.0, 0.5 + r3 / 6.0);
    let (a1, a2) = ((3.0 - 2.0 * r3) / 12.0, (3.0 + 2.0 * r3) / 12.0);
    let tau = t_total * h;
    for step in 0..steps {
        let s = step as f64 * h;
        let (s1, s2) = (s + n1 * h, s + n2 * h);
        for (w1, w2) in [(a2, a1), (a1, a2)] {
            let mut matvec = |x: &[C64], y: &mut [C64]| {
                spec.apply(s1, x, y);
                spec.apply(s2, x, &mut tmp);
                for (yi, ti) in y.iter_mut().zip(&tmp) {
                    *yi = *yi * w1 + *ti * w2;
                }
            };
            psi = linalg::expm_action(dim, &mut matvec, &psi, tau, EXPM_TOL)?;
        }
        linalg::normalize(&mut psi);
        if (step + 1) % per_interval == 0 {
            let s_rec = if step + 1 == steps {
                1.0
            } else {
                (step + 1) as f64 * h
            };
            record(s_rec, &psi, &mut traj);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_protocol, transverse_field, ModelKind, ModelParams};

    fn two_qubit(a: f64) -> ProtocolSpec {
        build_protocol(ModelKind::TwoQubit, 2, ModelParams::Catalyst(a)).unwrap()
    }

    #[test]
    fn transverse_field_ground_state() {
        let h0 = DenseOperator::new(transverse_field(3).to_dense(), vec![2; 3]).unwrap();
        let gs = ground_state(&h0).unwrap();
        assert!((gs.energy + 3.0).abs() < 1e-12);
        assert_eq!(gs.degeneracy, 1);
        assert!(phase_aligned_distance(&gs.state, &StateVector::plus_state(3)).unwrap() < 1e-10);
        for n in 1..6 {
            let h0 = DenseOperator::new(transverse_field(n).to_dense(), vec![2; n]).unwrap();
            assert!((spectral_gap(&h0).unwrap() - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn two_qubit_target_ground_state() {
        let h1 = two_qubit(0.0).hamiltonian_at(1.0).unwrap();
        // enumerate the four diagonal configurations: -3 (|00>), -1, -1, 5
        let gs = ground_state(&h1).unwrap();
        assert!((gs.energy + 3.0).abs() < 1e-12);
        assert_eq!(gs.degeneracy, 1);
        assert!(phase_aligned_distance(&gs.state, &StateVector::basis(4, 0)).unwrap() < 1e-12);
        assert!((spectral_gap(&h1).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lmg_target_is_doubly_degenerate() {
        let spec = build_protocol(ModelKind::Lmg, 4, ModelParams::None).unwrap();
        let h1 = spec.hamiltonian_at(1.0).unwrap();
        let gs = ground_state(&h1).unwrap();
        assert!((gs.energy + 4.0).abs() < 1e-12);
        assert_eq!(gs.degeneracy, 2);
        let w = manifold_overlap(&StateVector::basis(16, 0), &gs.manifold);
        assert!((w - 1.0).abs() < 1e-12);
        // levels -4 and -1 (magnetization 4 and 2)
        assert!((spectral_gap(&h1).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            DenseOperator::new(m, vec![]),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn flat_spectrum_has_no_gap() {
        let m = DMatrix::<C64>::identity(3, 3);
        let op = DenseOperator::new(m, vec![]).unwrap();
        assert_eq!(spectral_gap(&op), Err(Error::FlatSpectrum));
    }

    #[test]
    fn iterative_path_agrees_with_dense() {
        let inst = crate::models::sample_spin_glass(13, 5);
        let spec = build_protocol(
            ModelKind::SpinGlass,
            13,
            ModelParams::Disorder(inst.clone()),
        )
        .unwrap();
        let op = ProtocolAt {
            spec: &spec,
            s: 1.0,
        };
        assert!(op.dense().is_none());
        let gs = ground_state(&op).unwrap();
        let levels = inst.classical_spectrum();
        assert!((gs.energy - levels[0].0).abs() < 1e-9);
        let gap = spectral_gap(&op).unwrap();
        assert!((gap - (levels[1].0 - levels[0].0)).abs() < 1e-8);
    }

    #[test]
    fn entropies_of_reference_states() {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::new(vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]);
        let e = entanglement_entropy(&bell, &Bipartition::half_qubits(2)).unwrap();
        assert!((e - 2f64.ln()).abs() < 1e-12);
        let mut ghz = vec![ZERO; 16];
        ghz[0] = C64::new(s, 0.0);
        ghz[15] = C64::new(s, 0.0);
        let e = entanglement_entropy(&StateVector::new(ghz), &Bipartition::half_qubits(4)).unwrap();
        assert!((e - 2f64.ln()).abs() < 1e-12);
        let e = entanglement_entropy(&StateVector::plus_state(5), &Bipartition::half_qubits(5))
            .unwrap();
        assert!(e.abs() < 1e-12);
        assert!(entanglement_entropy(&bell, &Bipartition::new(vec![3, 2], 1)).is_err());
    }

    #[test]
    fn distances() {
        let a = StateVector::plus_state(2);
        let rotated = StateVector {
            amplitudes: &a.amplitudes * C64::from_polar(1.0, core::f64::consts::PI / 3.0),
        };
        assert!(phase_aligned_distance(&a, &a).unwrap() < 1e-15);
        assert!(phase_aligned_distance(&a, &rotated).unwrap() < 1e-15);
        let b = StateVector::basis(2, 0);
        let c = StateVector::basis(2, 1);
        assert!((phase_aligned_distance(&b, &c).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(phase_aligned_distance(&a, &b).is_err());
    }

    #[test]
    fn stationary_state_is_preserved() {
        let spec = build_protocol(ModelKind::Lmg, 3, ModelParams::None).unwrap();
        // H(s) = H0 for all s when H1 = H0: emulate with the s = 0 slice by a tiny horizon
        let psi0 = StateVector::plus_state(3);
        let traj = evolve_exact_with(
            &spec,
            1e-3,
            1e-5,
            &psi0,
            ExactSampling {
                intervals: 4,
                keep_states: true,
            },
        )
        .unwrap();
        let d = phase_aligned_distance(traj.final_state().unwrap(), &psi0).unwrap();
        assert!(d < 1e-3);
        assert!(traj.norms.iter().all(|n| (n - 1.0).abs() < 1e-10));
    }

    #[test]
    fn step_exceeding_horizon_is_rejected() {
        let spec = two_qubit(0.0);
        let psi0 = StateVector::plus_state(2);
        assert!(matches!(
            evolve_exact(&spec, 1.0, 1.0, &psi0),
            Err(Error::StepExceedsHorizon { .. })
        ));
    }

    #[test]
    fn slow_two_qubit_anneal_reaches_target() {
        let spec = two_qubit(0.0);
        let psi0 = StateVector::plus_state(2);
        let traj = evolve_exact(&spec, 100.0, 0.01, &psi0).unwrap();
        let target = StateVector::basis(4, 0);
        assert!(phase_aligned_distance(traj.final_state().unwrap(), &target).unwrap() < 0.05);
        let half = evolve_exact(&spec, 100.0, 0.005, &psi0).unwrap();
        let d = phase_aligned_distance(traj.final_state().unwrap(), half.final_state().unwrap())
            .unwrap();
        assert!(d < 1e-6, "dt halving changed the state by {d}");
    }

    #[test]
    fn self_convergence_at_t10() {
        let spec = two_qubit(2.0);
        let psi0 = StateVector::plus_state(2);
        let a = evolve_exact(&spec, 10.0, 0.01, &psi0).unwrap();
        let b = evolve_exact(&spec, 10.0, 0.005, &psi0).unwrap();
        let d = phase_aligned_distance(a.final_state().unwrap(), b.final_state().unwrap()).unwrap();
        assert!(d < 1e-6);
    }

    #[test]
    fn fourth_order_convergence() {
        let spec = two_qubit(3.0);
        let psi0 = StateVector::plus_state(2);
        let sampling = ExactSampling {
            intervals: 1,
            keep_states: true,
        };
        let run = |dt: f64| evolve_exact_with(&spec, 5.0, dt, &psi0, sampling).unwrap();
        let reference = run(0.0025);
        let err = |dt: f64| {
            phase_aligned_distance(run(dt).final_state().unwrap(), reference.final_state().unwrap())
                .unwrap()
        };
        let ratio = err(0.2) / err(0.1);
        assert!(ratio > 12.0 && ratio < 20.0, "error ratio {ratio}");
    }
}
