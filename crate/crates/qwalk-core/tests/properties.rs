use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qwalk_core::analysis::{kl_divergence, tvd, Distribution, DEFAULT_KL_FLOOR};
use qwalk_core::blockdiag::{lower_to_elementary, mc_rotation_expand, mc_rotation_matrix, MCRotation};
use qwalk_core::circuit::{apply_state, circuit_unitary, inverse, Circuit, Control, Gate};
use qwalk_core::kernel::{
    det, frobenius_distance, is_unitary, pow3, rotation_matrix, Axis, Pair, RotationAxis, XKind, C64, ONE,
};
use qwalk_core::noise::{amplitude_damping_channel, depolarizing_channel, phase_damping_channel, DensityMatrix};
use qwalk_core::su3::{decompose_diagonal, decompose_su3, diag_phases, random_su3, random_unitary, reconstruct_su3};
use qwalk_core::walk::{
    basis_permutation, build_layer, build_modular_step, initial_state, CoinClass, CoinSpec, Direction, WalkGraph,
};

fn axis() -> impl Strategy<Value = RotationAxis> {
    (0..3usize, 0..3usize).prop_map(|(a, p)| RotationAxis::new([Axis::X, Axis::Y, Axis::Z][a], Pair::ALL[p]))
}

fn angle() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

/// A gate on `width` wires with up to two controls.
fn gate(width: usize) -> impl Strategy<Value = Gate> {
    let kind = prop_oneof![
        (axis(), angle()).prop_map(|(ax, t)| (Some((ax, t)), None, None)),
        (0..5usize).prop_map(|k| (None, Some(XKind::ALL[k]), None)),
        angle().prop_map(|t| (None, None, Some(t))),
    ];
    (kind, 1..=width, proptest::collection::vec((1..=width, 0..3usize), 0..3)).prop_map(
        move |((rot, x, ph), target, ctrls)| {
            let mut g = match (rot, x, ph) {
                (Some((ax, t)), _, _) => Gate::rot(ax.axis, ax.pair, t, target),
                (_, Some(k), _) => Gate::x(k, target),
                (_, _, Some(t)) => Gate::phase(t, target),
                _ => unreachable!(),
            };
            for (w, v) in ctrls {
                if w != target && !g.controls.iter().any(|c| c.wire == w) {
                    g.controls.push(Control::new(w, v));
                }
            }
            g
        },
    )
}

fn circuit(width: usize, max_len: usize) -> impl Strategy<Value = Circuit> {
    proptest::collection::vec(gate(width), 0..max_len)
        .prop_map(move |gs| Circuit::from_gates(width, gs).expect("generated gates are valid"))
}

fn distribution(len: usize) -> impl Strategy<Value = Distribution> {
    proptest::collection::vec(0.0..1.0f64, len).prop_filter_map("needs mass", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-6).then(|| Distribution::new(v.iter().map(|x| x / s).collect(), 0.0))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotations_are_special_unitary(ax in axis(), t in angle()) {
        let m = rotation_matrix(ax, t);
        prop_assert!(is_unitary(&m, 1e-12));
        prop_assert!((det(&m) - ONE).norm() < 1e-12);
    }

    #[test]
    fn text_format_roundtrips(c in circuit(3, 12)) {
        let back: Circuit = c.to_string().parse().unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn state_application_matches_dense_unitary(c in circuit(3, 10), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi: Vec<C64> = random_unitary(&mut rng, 27).column(0).iter().copied().collect();
        let got = apply_state(&c, &psi).unwrap();
        let want = circuit_unitary(&c) * nalgebra::DVector::from_vec(psi);
        prop_assert!(got.iter().zip(want.iter()).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn circuit_times_inverse_is_identity(c in circuit(2, 10)) {
        let mut both = c.clone();
        both.append(&inverse(&c));
        prop_assert!(frobenius_distance(&circuit_unitary(&both), &nalgebra::DMatrix::identity(9, 9)) < 1e-10);
    }

    #[test]
    fn lowering_preserves_the_unitary(c in circuit(3, 6)) {
        let low = lower_to_elementary(&c);
        prop_assert!(low.gates().iter().all(|g| g.controls.len() <= 1));
        prop_assert!(frobenius_distance(&circuit_unitary(&c), &circuit_unitary(&low)) < 1e-9);
    }

    #[test]
    fn su3_roundtrip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_su3(&mut rng);
        let p = decompose_su3(&u).unwrap();
        prop_assert!(frobenius_distance(&reconstruct_su3(&p), &u) < 1e-9);
    }

    #[test]
    fn diagonal_decomposition_roundtrip(a in angle(), b in angle(), z in angle()) {
        let d = decompose_diagonal(a, b, z);
        prop_assert!(frobenius_distance(&d.matrix(), &diag_phases(a, b, z)) < 1e-12);
    }

    #[test]
    fn mc_rotation_expansion_matches(ax in axis(), width in 1..=3usize, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let angles = (0..pow3(width - 1)).map(|_| rng.random_range(-4.0..4.0)).collect();
        let m = MCRotation::new(width, ax, angles).unwrap();
        let c = mc_rotation_expand(&m);
        prop_assert!(frobenius_distance(&circuit_unitary(&c), &mc_rotation_matrix(&m)) < 1e-9);
        prop_assert_eq!(c.len(), pow3(width - 1) + 2 * (pow3(width - 1) - 1));
    }

    #[test]
    fn modular_steps_are_inverse(count in 2..=27usize) {
        let n = qwalk_core::walk::trits_for(count);
        let inc = basis_permutation(&build_modular_step(count, n, Direction::Inc).unwrap()).unwrap();
        let dec = basis_permutation(&build_modular_step(count, n, Direction::Dec).unwrap()).unwrap();
        for r in 0..pow3(n) {
            prop_assert_eq!(dec[inc[r]], r);
            prop_assert_eq!(inc[r], if r < count { (r + 1) % count } else { r });
        }
    }

    #[test]
    fn layers_conserve_norm_and_leak_nothing(
        count in 2..=12usize,
        dihedral in any::<bool>(),
        class in 0..4usize,
        theta in angle(),
        start in any::<prop::sample::Index>(),
    ) {
        let g = if dihedral { WalkGraph::dihedral(count) } else { WalkGraph::cycle(count, count / 3) }.unwrap();
        let coin = CoinSpec::class([CoinClass::X, CoinClass::Y, CoinClass::Z, CoinClass::W][class], theta);
        let layer = build_layer(&g, &coin).unwrap();
        let mut psi = initial_state(&g, &qwalk_core::walk::uniform_coin(), start.index(g.vertex_count())).unwrap();
        for _ in 0..20 {
            psi = apply_state(&layer, &psi).unwrap();
            let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
            prop_assert!((norm - 1.0).abs() < 1e-10);
            let leaked: f64 = psi.iter().enumerate().filter(|(i, _)| g.vertex_of(*i).is_none()).map(|(_, a)| a.norm_sqr()).sum();
            prop_assert!(leaked < 1e-12);
        }
    }

    #[test]
    fn channels_are_complete_and_trace_preserving(
        r1 in 0.0..3.0f64, r2 in 0.0..3.0f64, t in 0.0..5.0f64, p in 0.0..1.0f64, seed in any::<u64>()
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi: Vec<C64> = random_unitary(&mut rng, 9).column(0).iter().copied().collect();
        let channels = [
            amplitude_damping_channel(r1, r2, t).unwrap(),
            phase_damping_channel(r1, t).unwrap(),
            depolarizing_channel(1, p / 9.0).unwrap(),
            depolarizing_channel(2, p / 81.0).unwrap(),
        ];
        for ch in &channels {
            prop_assert!(ch.completeness_defect() < 1e-10);
            let mut rho = DensityMatrix::from_pure(&psi, 2).unwrap();
            let wires: Vec<usize> = (1..=ch.arity()).collect();
            rho.apply_channel(ch, &wires).unwrap();
            prop_assert!((rho.trace() - ONE).norm() < 1e-12);
            prop_assert!(rho.hermiticity_defect() < 1e-12);
            prop_assert!(rho.min_eigenvalue() > -1e-10);
        }
    }

    #[test]
    fn divergences(p in distribution(6), q in distribution(6), r in distribution(6)) {
        prop_assert_eq!(kl_divergence(&p, &p, DEFAULT_KL_FLOOR).unwrap(), 0.0);
        prop_assert!(kl_divergence(&p, &q, DEFAULT_KL_FLOOR).unwrap() >= -1e-12);
        let pq = tvd(&p, &q).unwrap();
        prop_assert!((pq - tvd(&q, &p).unwrap()).abs() < 1e-15);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
        prop_assert!(pq <= tvd(&p, &r).unwrap() + tvd(&r, &q).unwrap() + 1e-12);
    }
}

#[test]
fn dihedral_reflection_two_is_invariant_for_all_sizes() {
    for count in 2..=9 {
        let g = WalkGraph::dihedral(count).unwrap();
        let p = basis_permutation(&build_layer(&g, &CoinSpec::class(CoinClass::X, 0.0)).unwrap());
        // identity coin: the layer is a permutation
        let p = p.unwrap();
        let big = pow3(g.trits());
        for l in 0..3 {
            for r in 0..big {
                let x = l * 3 * big + 2 * big + r;
                assert_eq!(p[x], x);
            }
        }
    }
}
