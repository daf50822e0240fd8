use num_complex::Complex64;
use proptest::prelude::*;

use strocchi::controllability::{lie_closure, DEFAULT_CLOSURE_TOL};
use strocchi::dynamics::BilinearPlant;
use strocchi::kahler::{
    complex_structure, from_phase, g_form, omega_form, symplectic_matrix, to_phase, CanonicalGenerator, Observable,
    StateVector,
};
use strocchi::linalg::{c, random_hermitian, CMatrix};
use strocchi::measurement::{born_probabilities, born_probability_via_metric, measure_nonselective};
use strocchi::rng::stream;
use strocchi::three_level;
use strocchi::torus::{translation_plan, CatMap, KickOp, KickPlanner};

fn state(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_filter_map("non-zero", |v| {
        let norm: f64 = v.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
        (norm > 1e-3).then(|| StateVector::new(v.iter().map(|(a, b)| c(a / norm, b / norm)).collect()).unwrap())
    })
}

fn sized_pair() -> impl Strategy<Value = (StateVector, StateVector)> {
    (1usize..=8).prop_flat_map(|n| (state(n), state(n)))
}

/// `I(ψ) = 2ψ₁ψ₃ − ψ₂²`, constant on orbits of `h₁`, `h₂`, `h₃`.
fn invariant(psi: &StateVector) -> Complex64 {
    let a = psi.amplitudes();
    c(2.0, 0.0) * a[0] * a[2] - a[1] * a[1]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_product_is_metric_plus_form((x, y) in sized_pair()) {
        let z = x.inner(&y).unwrap();
        let (px, py) = (to_phase(&x), to_phase(&y));
        prop_assert!((z.re - g_form(&px, &py).unwrap()).abs() < 1e-12);
        prop_assert!((z.im - omega_form(&px, &py).unwrap()).abs() < 1e-12);
        let jy = complex_structure(&py);
        prop_assert!((g_form(&px, &py).unwrap() - omega_form(&px, &jy).unwrap()).abs() < 1e-12);
        prop_assert!((from_phase(&px).amplitudes() - x.amplitudes()).norm() < 1e-15);
    }

    #[test]
    fn propagators_are_symplectic_and_orthogonal(n in 1usize..=5, seed in any::<u64>(), u in -2.0f64..2.0, dt in 0.01f64..3.0) {
        let mut rng = stream(seed, 0);
        let plant = BilinearPlant::new(random_hermitian(n, &mut rng), vec![random_hermitian(n, &mut rng)]).unwrap();
        let m = plant.step_propagator(&[u], dt).unwrap();
        let j = symplectic_matrix(n);
        prop_assert!((m.transpose() * &j * &m - &j).amax() < 1e-10);
        prop_assert!((m.transpose() * &m - nalgebra::DMatrix::identity(2 * n, 2 * n)).amax() < 1e-10);
    }

    #[test]
    fn canonical_rotations_preserve_both_forms((x, y) in (2usize..=6).prop_flat_map(|n| (state(n), state(n))), angle in -7.0f64..7.0, kind in 0usize..3) {
        let gen = match kind {
            0 => CanonicalGenerator::CoordinateRotation { i: 0, j: 1, angle },
            1 => CanonicalGenerator::MixedRotation { i: 1, j: 0, angle },
            _ => CanonicalGenerator::PhaseRotation { i: 0, angle },
        };
        let (px, py) = (to_phase(&x), to_phase(&y));
        let (gx, gy) = (gen.apply(&px).unwrap(), gen.apply(&py).unwrap());
        prop_assert!((g_form(&gx, &gy).unwrap() - g_form(&px, &py).unwrap()).abs() < 1e-12);
        prop_assert!((omega_form(&gx, &gy).unwrap() - omega_form(&px, &py).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn born_weights_sum_to_one_and_match_the_metric(psi in (1usize..=6).prop_flat_map(state), seed in any::<u64>()) {
        let n = psi.dim();
        let obs = Observable::new(random_hermitian(n, &mut stream(seed, 1))).unwrap();
        let x = to_phase(&psi);
        let probs = born_probabilities(&x, &obs).unwrap();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (b, p) in obs.spectrum().iter().zip(&probs) {
            if *p > 1e-12 {
                let via = born_probability_via_metric(&x, &obs, b.eigenvalue).unwrap();
                prop_assert!((via - p).abs() < 1e-12);
            }
        }
        let ens = measure_nonselective(&x, &obs).unwrap();
        let total: f64 = ens.members().iter().map(|m| m.0).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_level_orbits_keep_the_invariant(psi in state(3), a in -4.0f64..4.0, b in -4.0f64..4.0, t in -4.0f64..4.0) {
        let x = to_phase(&psi);
        let y = x.transform(&(three_level::h1(a) * three_level::h2(b))).unwrap();
        let before = invariant(&psi);
        let after = invariant(&from_phase(&y));
        prop_assert!((before - after).norm() < 1e-12);
        let z = from_phase(&y.transform(&three_level::h3(t)).unwrap());
        prop_assert!((invariant(&z) - before).norm() < 1e-12);
    }

    #[test]
    fn closure_is_idempotent_and_bounded(n in 2usize..=4, seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = stream(seed, 2);
        let gens: Vec<Observable> = (0..k).map(|_| Observable::new(random_hermitian(n, &mut rng)).unwrap()).collect();
        let report = lie_closure(&gens, DEFAULT_CLOSURE_TOL).unwrap();
        prop_assert!(report.dimension() <= n * n);
        prop_assert!(report.closure_defect() < 1e-8);
        let again: Vec<Observable> = report
            .basis()
            .iter()
            .map(|k: &CMatrix| Observable::new(k * c(0.0, 1.0)).unwrap())
            .collect();
        prop_assert_eq!(lie_closure(&again, DEFAULT_CLOSURE_TOL).unwrap().dimension(), report.dimension());
    }

    #[test]
    fn kick_plans_replay_exactly(s1 in -32i64..=32, s2 in -32i64..=32, t1 in -32i64..=32, t2 in -32i64..=32) {
        let map = CatMap::default();
        let planner = KickPlanner::new(map, 32);
        let plan = planner.plan((s1, s2), (t1, t2), true);
        prop_assert_eq!(plan.replay((s1, s2), &map), (t1, t2));
        prop_assert!(plan.len() <= translation_plan((s1, s2), (t1, t2)).len());
        prop_assert_eq!(KickOp::U1.apply(KickOp::U1Inv.apply((s1, s2), &map), &map), (s1, s2));
    }
}
