//! Annealing runs of the spin-glass protocol on the MPS manifold.

use alloc::vec::Vec;

use num_traits::Float;

use super::dmrg::{dmrg, DmrgOptions};
use super::env::{effective_gap_at, energy, site_ops, AffineOps};
use super::tdvp::{sweep_pair, Integrator};
use super::{mps_distance, mps_entropy, plus_mps, MpsState};
use crate::exact::{ground_state, manifold_distance, manifold_overlap, spectral_gap, StateVector};
use crate::models::{build_protocol, spin_glass_mpo, ModelKind, ModelParams, SpinGlassInstance};
use crate::{Error, Result};

/// Largest Hilbert space for which exact columns are filled in.
pub const EXACT_DIM_LIMIT: usize = 4096;

/// Slope change of the variational ground-state energy between neighbouring
/// samples above which a sample is flagged as a first-order transition.
pub const KINK_SLOPE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealOptions {
    /// Samples are taken at `s = k / intervals`.
    pub intervals: usize,
    pub integrator: Integrator,
    /// Warm-started DMRG ground states and their effective gaps.
    pub variational: bool,
    /// Exact ground states and gaps, when `2^N <= EXACT_DIM_LIMIT`.
    pub exact: bool,
    /// Site for the effective gap; `None` means `floor(N/2)`.
    pub gap_site: Option<usize>,
    /// Keep the evolved state at every sample.
    pub keep_states: bool,
    pub dmrg: DmrgOptions,
}

impl Default for AnnealOptions {
    fn default() -> Self {
        AnnealOptions {
            intervals: 100,
            integrator: Integrator::Second,
            variational: true,
            exact: true,
            gap_site: None,
            keep_states: false,
            dmrg: DmrgOptions::default(),
        }
    }
}

impl AnnealOptions {
    /// Only the final state and its distance to the classical ground state.
    pub fn final_only() -> Self {
        AnnealOptions {
            variational: false,
            exact: false,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSample {
    pub s: f64,
    /// Distance to the instantaneous variational ground state at the same D.
    pub vgs_distance: Option<f64>,
    /// Distance to the exact ground manifold.
    pub exact_distance: Option<f64>,
    pub effective_gap: Option<f64>,
    pub exact_gap: Option<f64>,
    /// Half-cut entropy of the evolved state.
    pub entropy: f64,
    /// `<psi|H(s)|psi>` of the evolved state.
    pub energy: f64,
    pub vgs_energy: Option<f64>,
    pub exact_energy: Option<f64>,
    pub norm: f64,
    pub transition: bool,
}

#[derive(Debug, Clone)]
pub struct AnnealRecord {
    pub bond_dim: usize,
    pub horizon: f64,
    /// Step actually taken, `T / (intervals * steps_per_interval)`.
    pub dt: f64,
    pub steps: usize,
    pub samples: Vec<AnnealSample>,
    pub states: Vec<MpsState>,
    pub final_state: MpsState,
    /// Distance of the final state to the classical ground manifold.
    pub final_distance: f64,
    /// Weight of the final state inside the classical ground manifold.
    pub final_overlap: f64,
    /// Variational ground state at the last sample, if computed.
    pub final_vgs: Option<MpsState>,
}

impl AnnealRecord {
    /// Smallest effective gap over the recorded samples.
    pub fn min_effective_gap(&self) -> Option<f64> {
        self.samples
            .iter()
            .filter_map(|s| s.effective_gap)
            .reduce(f64::min)
    }

    pub fn transitions(&self) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| s.transition)
            .map(|s| s.s)
            .collect()
    }
}

/// Basis states of the lowest classical level.
pub fn classical_ground_manifold(inst: &SpinGlassInstance) -> Vec<StateVector> {
    let spectrum = inst.classical_spectrum();
    let e0 = spectrum[0].0;
    let tol = crate::DEGENERACY_TOL * (1.0 + e0.abs());
    let dim = 1usize << inst.n;
    spectrum
        .iter()
        .take_while(|(e, _)| (e - e0).abs() <= tol)
        .map(|(_, k)| StateVector::basis(dim, *k))
        .collect()
}

/// Step-by-step driver of one annealing run; usable for checkpointing.
#[derive(Debug, Clone)]
pub struct Annealer {
    inst: SpinGlassInstance,
    pub horizon: f64,
    pub intervals: usize,
    pub steps_per_interval: usize,
    pub integrator: Integrator,
    pub state: MpsState,
    /// Completed intervals.
    pub interval: usize,
    ops: Option<AffineOps>,
}

impl Annealer {
    pub fn new(
        inst: &SpinGlassInstance,
        bond_dim: usize,
        horizon: f64,
        dt: f64,
        intervals: usize,
    ) -> Result<Self> {
        if bond_dim == 0 {
            return Err(Error::InvalidParameter {
                name: "D",
                value: 0.0,
            });
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter {
                name: "T",
                value: horizon,
            });
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: dt,
            });
        }
        if dt >= horizon {
            return Err(Error::StepExceedsHorizon { dt, horizon });
        }
        if intervals == 0 {
            return Err(Error::InvalidParameter {
                name: "intervals",
                value: 0.0,
            });
        }
        let mut state = plus_mps(inst.n, bond_dim)?;
        state.pad_bonds(bond_dim);
        let steps_per_interval = (horizon / (dt * intervals as f64)).ceil().max(1.0) as usize;
        let ops = AffineOps::new(|s| spin_glass_mpo(inst, s))?;
        Ok(Annealer {
            ops,
            inst: inst.clone(),
            horizon,
            intervals,
            steps_per_interval,
            integrator: Integrator::Second,
            state,
            interval: 0,
        })
    }

    /// Resumes from a checkpointed state after `interval` completed intervals.
    pub fn resume(mut self, state: MpsState, interval: usize) -> Result<Self> {
        if state.n_sites() != self.inst.n {
            return Err(Error::DimensionMismatch {
                expected: self.inst.n,
                found: state.n_sites(),
            });
        }
        if interval > self.intervals {
            return Err(Error::InvalidParameter {
                name: "interval",
                value: interval as f64,
            });
        }
        self.state = state;
        self.interval = interval;
        Ok(self)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / (self.intervals * self.steps_per_interval) as f64
    }

    pub fn s(&self) -> f64 {
        self.interval as f64 / self.intervals as f64
    }

    pub fn finished(&self) -> bool {
        self.interval >= self.intervals
    }

    /// Evolves through the next sampling interval. Each substep uses the
    /// Hamiltonian at its own midpoint.
    pub fn advance(&mut self) -> Result<()> {
        if self.finished() {
            return Ok(());
        }
        let dt = self.dt();
        let weights = self.integrator.substeps();
        let first = self.interval * self.steps_per_interval;
        for k in 0..self.steps_per_interval {
            let mut t = (first + k) as f64 * dt;
            for w in &weights {
                let h = w * dt;
                let s = ((t + 0.5 * h) / self.horizon).clamp(0.0, 1.0);
                let ops = match &self.ops {
                    Some(affine) => affine.at(s),
                    None => site_ops(&spin_glass_mpo(&self.inst, s)?),
                };
                sweep_pair(&mut self.state, &ops, h)?;
                t += h;
            }
        }
        self.interval += 1;
        Ok(())
    }
}

/// Runs the protocol from `|+...+>` at bond dimension `D` and records
/// samples at `s = k / intervals`.
pub fn anneal_mps(
    inst: &SpinGlassInstance,
    bond_dim: usize,
    horizon: f64,
    dt: f64,
    opts: &AnnealOptions,
) -> Result<AnnealRecord> {
    let mut run = Annealer::new(inst, bond_dim, horizon, dt, opts.intervals)?;
    run.integrator = opts.integrator;
    let n = inst.n;
    let exact_ok = opts.exact && (1usize << n) <= EXACT_DIM_LIMIT;
    let spec = if exact_ok {
        Some(build_protocol(
            ModelKind::SpinGlass,
            n,
            ModelParams::Disorder(inst.clone()),
        )?)
    } else {
        None
    };
    let dmrg_opts = DmrgOptions {
        bond_dim,
        ..opts.dmrg
    };
    let gap_site = opts.gap_site.unwrap_or(n / 2);
    let cut = (n / 2).max(1);

    let mut samples = Vec::with_capacity(opts.intervals + 1);
    let mut states = Vec::new();
    let mut vgs: Option<MpsState> = None;
    loop {
        let s = run.s();
        let mpo = spin_glass_mpo(inst, s)?;
        let psi = &run.state;
        let mut sample = AnnealSample {
            s,
            vgs_distance: None,
            exact_distance: None,
            effective_gap: None,
            exact_gap: None,
            entropy: if n > 1 { mps_entropy(psi, cut)? } else { 0.0 },
            energy: energy(psi, &mpo)?,
            vgs_energy: None,
            exact_energy: None,
            norm: psi.norm(),
            transition: false,
        };
        if opts.variational {
            let start = vgs.clone().unwrap_or_else(|| run.state.clone());
            let res = dmrg(&mpo, Some(&start), &dmrg_opts)?;
            sample.vgs_distance = Some(mps_distance(psi, &res.mps)?);
            sample.vgs_energy = Some(res.energy);
            sample.effective_gap = match effective_gap_at(&res.mps, &mpo, gap_site) {
                Ok(g) => Some(g),
                Err(Error::InsufficientEffectiveSpace { .. }) | Err(Error::FlatSpectrum) => None,
                Err(e) => return Err(e),
            };
            vgs = Some(res.mps);
        }
        if let Some(spec) = &spec {
            let h = spec.hamiltonian_at(s)?;
            let gs = ground_state(&h)?;
            let dense = psi.to_dense()?;
            sample.exact_distance = Some(manifold_distance(&dense, &gs.manifold));
            sample.exact_energy = Some(gs.energy);
            sample.exact_gap = Some(spectral_gap(&h)?);
        }
        samples.push(sample);
        if opts.keep_states {
            states.push(run.state.clone());
        }
        if run.finished() {
            break;
        }
        run.advance()?;
    }
    flag_kinks(&mut samples);

    let target = classical_ground_manifold(inst);
    let (final_distance, final_overlap) = match run.state.to_dense() {
        Ok(dense) => (
            manifold_distance(&dense, &target),
            manifold_overlap(&dense, &target),
        ),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Ok(AnnealRecord {
        bond_dim,
        horizon,
        dt: run.dt(),
        steps: run.intervals * run.steps_per_interval,
        samples,
        states,
        final_state: run.state,
        final_distance,
        final_overlap,
        final_vgs: vgs,
    })
}

fn flag_kinks(samples: &mut [AnnealSample]) {
    let pts: Vec<(usize, f64, f64)> = samples
        .iter()
        .enumerate()
        .filter_map(|(k, x)| x.vgs_energy.map(|e| (k, x.s, e)))
        .collect();
    for w in pts.windows(3) {
        let (_, s0, e0) = w[0];
        let (k, s1, e1) = w[1];
        let (_, s2, e2) = w[2];
        let left = (e1 - e0) / (s1 - s0);
        let right = (e2 - e1) / (s2 - s1);
        if (right - left).abs() > KINK_SLOPE {
            samples[k].transition = true;
        }
    }
}

/// Warm-started DMRG on the final Hamiltonian from `state`.
pub fn refine_final(
    inst: &SpinGlassInstance,
    state: &MpsState,
    opts: &DmrgOptions,
) -> Result<(f64, f64)> {
    let mpo = spin_glass_mpo(inst, 1.0)?;
    let res = dmrg(&mpo, Some(state), opts)?;
    let dense = res.mps.to_dense()?;
    let target = classical_ground_manifold(inst);
    Ok((res.energy, manifold_overlap(&dense, &target)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::sample_spin_glass;

    #[test]
    fn initial_sample_matches_variational_ground_state() {
        let inst = sample_spin_glass(6, 1);
        let opts = AnnealOptions {
            intervals: 4,
            ..Default::default()
        };
        let rec = anneal_mps(&inst, 2, 10.0, 0.1, &opts).unwrap();
        let s0 = &rec.samples[0];
        assert!(s0.vgs_distance.unwrap() < 1e-8);
        assert!((s0.effective_gap.unwrap() - 2.0).abs() < 1e-8);
        assert!((s0.exact_gap.unwrap() - 2.0).abs() < 1e-8);
        assert_eq!(rec.samples.len(), 5);
        for s in &rec.samples {
            assert!(s.entropy >= 0.0);
            assert!((s.norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolated_operators_match_rebuilt_mpo() {
        use alloc::collections::BTreeMap;
        let dense = |ops: &[super::super::env::SiteOp]| {
            let mut m = BTreeMap::new();
            for (j, op) in ops.iter().enumerate() {
                for blk in &op.blocks {
                    for &(o, i, v) in &blk.entries {
                        if v.norm() > 0.0 {
                            m.insert((j, blk.a, blk.b, o, i), v);
                        }
                    }
                }
            }
            m
        };
        let inst = sample_spin_glass(6, 9);
        let affine = AffineOps::new(|s| spin_glass_mpo(&inst, s))
            .unwrap()
            .expect("affine family");
        for s in [0.0, 0.13, 0.5, 1.0] {
            let a = dense(&affine.at(s));
            let b = dense(&site_ops(&spin_glass_mpo(&inst, s).unwrap()));
            for (k, v) in &a {
                let w = b.get(k).copied().unwrap_or_default();
                assert!((v - w).norm() < 1e-14);
            }
            for (k, w) in &b {
                let v = a.get(k).copied().unwrap_or_default();
                assert!((v - w).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn resumed_run_matches_uninterrupted_run() {
        let inst = sample_spin_glass(5, 2);
        let mut a = Annealer::new(&inst, 2, 4.0, 0.1, 4).unwrap();
        while !a.finished() {
            a.advance().unwrap();
        }
        let mut b = Annealer::new(&inst, 2, 4.0, 0.1, 4).unwrap();
        b.advance().unwrap();
        b.advance().unwrap();
        let bytes = b.state.to_bytes();
        let mut c = Annealer::new(&inst, 2, 4.0, 0.1, 4)
            .unwrap()
            .resume(MpsState::from_bytes(&bytes).unwrap(), 2)
            .unwrap();
        while !c.finished() {
            c.advance().unwrap();
        }
        assert_eq!(a.state, c.state);
    }
}
