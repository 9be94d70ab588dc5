use std::f64::consts::PI;

use proptest::prelude::*;
use varanneal_core::exact::{
    entanglement_entropy, phase_aligned_distance, Bipartition, StateVector,
};
use varanneal_core::models::{build_protocol, sample_spin_glass, spin_glass_mpo, ModelKind, ModelParams};
use varanneal_core::mps::{dmrg, energy, mps_from_dense, overlap, tdvp_step, DmrgOptions};
use varanneal_core::product::{eom_rhs, generic_rates, geometry, ProductState};
use varanneal_core::C64;

fn random_state(re: &[f64], im: &[f64]) -> StateVector {
    let amps: Vec<C64> = re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::new(amps.into_iter().map(|a| a / norm).collect())
}

fn amplitudes(dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-1.0..1.0f64, dim),
        prop::collection::vec(-1.0..1.0f64, dim),
    )
        .prop_filter("nonzero", |(a, b)| a.iter().chain(b).any(|x| x.abs() > 1e-3))
}

fn product_model() -> impl Strategy<Value = (ModelKind, usize, f64)> {
    prop_oneof![
        (0.0..5.0f64).prop_map(|a| (ModelKind::TwoQubit, 2, a)),
        (0usize..6, 0.0..5.0f64).prop_map(|(n, a)| (ModelKind::Bipartite, n, a)),
        (2usize..9).prop_map(|n| (ModelKind::Lmg, n, 0.0)),
    ]
}

fn protocol(kind: ModelKind, n: usize, a: f64) -> varanneal_core::models::ProtocolSpec {
    let params = match kind {
        ModelKind::Lmg => ModelParams::None,
        _ => ModelParams::Catalyst(a),
    };
    build_protocol(kind, n, params).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn kahler_structure_squares_to_minus_one(
        (kind, n, a) in product_model(),
        theta in 0.05..(PI - 0.05),
        phi in -PI..PI,
    ) {
        let spec = protocol(kind, n, a);
        let g = geometry(&spec, &ProductState::for_spec(&spec, theta, phi)).unwrap();
        prop_assert!(g.kahler_residual() < 1e-10, "residual {}", g.kahler_residual());
    }

    #[test]
    fn closed_form_equations_match_tangent_projection(
        (kind, n, a) in product_model(),
        s in 0.0..=1.0f64,
        theta in 0.1..(PI - 0.1),
        phi in -PI..PI,
    ) {
        let spec = protocol(kind, n, a);
        let x = ProductState::for_spec(&spec, theta, phi);
        let (dtheta, dphi) = eom_rhs(&spec, s, &x).unwrap();
        let generic = generic_rates(&spec, s, &x).unwrap().rates;
        prop_assert!((dtheta - generic[0]).abs() < 1e-8, "{dtheta} vs {}", generic[0]);
        prop_assert!((dphi - generic[1]).abs() < 1e-8, "{dphi} vs {}", generic[1]);
    }

    #[test]
    fn entropy_is_symmetric_under_swapping_sides(
        left in 1usize..4,
        right in 1usize..4,
        (re, im) in amplitudes(64),
    ) {
        let (da, db) = (1usize << left, 1usize << right);
        let psi = random_state(&re[..da * db], &im[..da * db]);
        let swapped: Vec<C64> = (0..da * db)
            .map(|k| {
                let (j, i) = (k / da, k % da);
                psi.as_slice()[i * db + j]
            })
            .collect();
        let swapped = StateVector::new(swapped);
        let s1 = entanglement_entropy(&psi, &Bipartition::new(vec![2; left + right], left)).unwrap();
        let s2 = entanglement_entropy(&swapped, &Bipartition::new(vec![2; left + right], right)).unwrap();
        prop_assert!((s1 - s2).abs() < 1e-10);
    }

    #[test]
    fn distance_ignores_global_phase((re, im) in amplitudes(16), phase in -PI..PI) {
        let psi = random_state(&re, &im);
        let rotated = StateVector::new(
            psi.as_slice().iter().map(|a| a * C64::from_polar(1.0, phase)).collect(),
        );
        prop_assert!(phase_aligned_distance(&psi, &rotated).unwrap() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mpo_reconstructs_dense_hamiltonian(n in 2usize..=10, seed in any::<u64>(), s in 0.0..=1.0f64) {
        let inst = sample_spin_glass(n, seed);
        let spec = build_protocol(ModelKind::SpinGlass, n, ModelParams::Disorder(inst.clone())).unwrap();
        let dense = spec.hamiltonian_at(s).unwrap();
        let mpo = spin_glass_mpo(&inst, s).unwrap().to_dense().unwrap();
        let err = (mpo - dense.matrix()).map(|z| z.norm()).max();
        prop_assert!(err < 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn tdvp_preserves_norm_and_energy(
        n in 3usize..=6,
        bond in prop::sample::select(vec![1usize, 2, 4]),
        seed in any::<u64>(),
        s in 0.0..=1.0f64,
        (re, im) in amplitudes(64),
    ) {
        let inst = sample_spin_glass(n, seed);
        let mpo = spin_glass_mpo(&inst, s).unwrap();
        let dim = 1 << n;
        let psi = random_state(&re[..dim], &im[..dim]);
        let mut mps = mps_from_dense(&psi, n, bond).unwrap();
        let e0 = energy(&mps, &mpo).unwrap();
        for _ in 0..40 {
            tdvp_step(&mut mps, &mpo, 0.05).unwrap();
        }
        prop_assert!((mps.norm() - 1.0).abs() < 1e-10, "norm drift {}", mps.norm() - 1.0);
        let e1 = energy(&mps, &mpo).unwrap();
        prop_assert!((e1 - e0).abs() < 1e-8, "energy drift {}", e1 - e0);
        prop_assert!(mps.canonical_residual() < 1e-10);
    }

    #[test]
    fn mps_overlap_matches_dense_overlap(
        n in 2usize..=6,
        bond in 1usize..=8,
        (ra, ia) in amplitudes(64),
        (rb, ib) in amplitudes(64),
    ) {
        let dim = 1 << n;
        let a = mps_from_dense(&random_state(&ra[..dim], &ia[..dim]), n, bond).unwrap();
        let b = mps_from_dense(&random_state(&rb[..dim], &ib[..dim]), n, bond).unwrap();
        let dense = a.to_dense().unwrap().overlap(&b.to_dense().unwrap());
        let tm = overlap(&a, &b).unwrap();
        prop_assert!((dense - tm).norm() < 1e-10);
        prop_assert!((a.to_dense().unwrap().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dmrg_energy_never_increases(n in 3usize..=7, bond in 1usize..=4, seed in any::<u64>(), s in 0.0..=1.0f64) {
        let inst = sample_spin_glass(n, seed);
        let mpo = spin_glass_mpo(&inst, s).unwrap();
        let res = dmrg(&mpo, None, &DmrgOptions { bond_dim: bond, ..DmrgOptions::default() }).unwrap();
        for w in res.energies.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10, "{} -> {}", w[0], w[1]);
        }
        prop_assert!(res.mps.canonical_residual() < 1e-10);
    }
}
