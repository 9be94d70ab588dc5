//! Cross-checks of the variational engines against the exact state-vector
//! reference.

use varanneal_core::exact::{
    evolve_exact, evolve_exact_with, ground_state, phase_aligned_distance, spectral_gap,
    ExactSampling, StateVector,
};
use varanneal_core::models::{
    build_protocol, sample_spin_glass, spin_glass_mpo, ModelKind, ModelParams,
};
use varanneal_core::mps::{
    anneal_mps, dmrg, effective_gap, plus_mps, AnnealOptions, DmrgOptions, Integrator,
};
use varanneal_core::product::{integrate, lmg_critical_point, ProductState};

#[test]
fn full_rank_anneal_follows_exact_evolution() {
    let n = 6;
    let inst = sample_spin_glass(n, 4);
    let opts = AnnealOptions {
        intervals: 20,
        integrator: Integrator::Fourth,
        variational: false,
        exact: false,
        keep_states: true,
        ..AnnealOptions::default()
    };
    let rec = anneal_mps(&inst, 8, 20.0, 0.05, &opts).unwrap();
    let spec = build_protocol(ModelKind::SpinGlass, n, ModelParams::Disorder(inst)).unwrap();
    let exact = evolve_exact_with(
        &spec,
        20.0,
        0.01,
        &StateVector::plus_state(n),
        ExactSampling {
            intervals: 20,
            keep_states: true,
        },
    )
    .unwrap();
    let states = exact.states.unwrap();
    assert_eq!(states.len(), rec.states.len());
    for (k, (mps, psi)) in rec.states.iter().zip(&states).enumerate() {
        let d = phase_aligned_distance(&mps.to_dense().unwrap(), psi).unwrap();
        assert!(d < 1e-6, "sample {k}: distance {d}");
    }
}

#[test]
fn dmrg_reaches_the_classical_minimum() {
    let inst = sample_spin_glass(8, 11);
    let mpo = spin_glass_mpo(&inst, 1.0).unwrap();
    let res = dmrg(&mpo, None, &DmrgOptions { bond_dim: 1, ..DmrgOptions::default() }).unwrap();
    let e_min = inst.classical_spectrum()[0].0;
    // a D=1 search can stop in a local minimum; the bound must still hold
    assert!(res.energy >= e_min - 1e-10);
    let res = dmrg(&mpo, None, &DmrgOptions { bond_dim: 4, ..DmrgOptions::default() }).unwrap();
    assert!((res.energy - e_min).abs() < 1e-9, "{} vs {e_min}", res.energy);
}

#[test]
fn effective_gap_of_the_initial_state_is_two() {
    let inst = sample_spin_glass(8, 2);
    let mpo = spin_glass_mpo(&inst, 0.0).unwrap();
    for d in [1, 2, 4, 8, 16] {
        let gap = effective_gap(&plus_mps(8, d).unwrap(), &mpo).unwrap();
        assert!((gap - 2.0).abs() < 1e-8, "D={d}: {gap}");
    }
}

#[test]
fn full_rank_effective_gap_is_the_spectral_gap() {
    let inst = sample_spin_glass(8, 5);
    let spec = build_protocol(ModelKind::SpinGlass, 8, ModelParams::Disorder(inst.clone())).unwrap();
    for s in [0.25, 0.5, 0.75] {
        let mpo = spin_glass_mpo(&inst, s).unwrap();
        let res = dmrg(&mpo, None, &DmrgOptions::default()).unwrap();
        let exact = spectral_gap(&spec.hamiltonian_at(s).unwrap()).unwrap();
        let gap = effective_gap(&res.mps, &mpo).unwrap();
        assert!((gap - exact).abs() < 1e-6, "s={s}: {gap} vs {exact}");
    }
}

#[test]
fn single_site_gap_at_the_end_is_a_local_flip() {
    // at s = 1 with D = 1 the effective Hamiltonian is diagonal in the centre spin
    let n = 8;
    let inst = sample_spin_glass(n, 3);
    let mpo = spin_glass_mpo(&inst, 1.0).unwrap();
    let res = dmrg(&mpo, None, &DmrgOptions { bond_dim: 1, ..DmrgOptions::default() }).unwrap();
    let dense = res.mps.to_dense().unwrap();
    let index = (0..dense.dim())
        .max_by(|a, b| {
            dense.as_slice()[*a]
                .norm()
                .total_cmp(&dense.as_slice()[*b].norm())
        })
        .unwrap();
    let flipped = index ^ (1 << (n - 1 - n / 2));
    let flip = inst.energy_of_index(flipped) - inst.energy_of_index(index);
    let gap = effective_gap(&res.mps, &mpo).unwrap();
    assert!((gap - flip.abs()).abs() < 1e-9, "{gap} vs {flip}");
}

#[test]
fn lmg_transition_for_four_spins() {
    assert_eq!(lmg_critical_point(4), 0.4);
}

#[test]
fn product_and_exact_two_qubit_anneals_agree_in_the_adiabatic_limit() {
    let spec = build_protocol(ModelKind::TwoQubit, 2, ModelParams::Catalyst(0.0)).unwrap();
    let target = ground_state(&spec.hamiltonian_at(1.0).unwrap()).unwrap().state;
    let exact = evolve_exact(&spec, 128.0, 0.01, &StateVector::plus_state(2)).unwrap();
    let exact_d = phase_aligned_distance(exact.final_state().unwrap(), &target).unwrap();
    let var = integrate(&spec, 128.0, 0.01, &ProductState::plus(&spec)).unwrap();
    let var_d = phase_aligned_distance(&var.final_state().embed(), &target).unwrap();
    let ratio = var_d / exact_d;
    assert!((0.5..=2.0).contains(&ratio), "{var_d} vs {exact_d}");
}
