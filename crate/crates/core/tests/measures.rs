mod common;

use common::random_system;
use occlp::dp::Policy;
use occlp::lpform::discounted_residual;
use occlp::measures::{
    default_basis, discounted_occupational_measure, integrate, rho, Controller, OccupationalMeasure, Provenance,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_policy(rng: &mut ChaCha8Rng, sys: &occlp::FiniteControlSystem) -> Policy {
    Policy::new((0..sys.num_states()).map(|y| rng.gen_range(0..sys.actions(y).len())).collect())
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> OccupationalMeasure {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    OccupationalMeasure::new(raw.into_iter().map(|w| w / total).collect(), Provenance::Abstract)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// ∫ q dγ equals (1−α) Σ α^t q(y(t),u(t)) with the tail summed along the cycle.
    #[test]
    fn integral_identity_along_trajectory(seed in any::<u64>(), alpha in 0.05f64..0.99) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, 6, 4, 9);
        let policy = random_policy(&mut rng, &sys);
        let y0 = rng.gen_range(0..sys.num_states());
        let gamma = discounted_occupational_measure(&sys, &Controller::Feedback(policy.clone()), y0, alpha).unwrap();
        prop_assert!((gamma.total_mass() - 1.0).abs() <= 1e-12);
        prop_assert!(discounted_residual(&sys, &gamma, y0, alpha) <= 1e-10);

        let basis = default_basis(&sys, 8).unwrap();
        let traj = occlp::measures::Trajectory::from_policy(&sys, &policy, y0);
        // independent route: long truncated sum plus the exact remainder bound
        let horizon = ((1e-14f64).ln() / alpha.ln()).ceil() as usize + 1;
        let mut qs: Vec<&[f64]> = basis.functions().iter().map(|q| q.as_slice()).collect();
        let costs = sys.cost_vector();
        qs.push(&costs);
        for q in qs {
            let mut direct = 0.0;
            let mut d = 1.0 - alpha;
            for t in 0..horizon {
                direct += d * q[traj.pair_at(t)];
                d *= alpha;
            }
            let scale = q.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            prop_assert!((integrate(&gamma, q) - direct).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn rho_is_a_pseudometric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, 6, 4, 9);
        let basis = default_basis(&sys, 8).unwrap();
        let n = sys.num_pairs();
        let (a, b, c) = (random_measure(&mut rng, n), random_measure(&mut rng, n), random_measure(&mut rng, n));
        let ab = rho(&a, &b, &basis).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, rho(&b, &a, &basis).unwrap());
        prop_assert_eq!(rho(&a, &a, &basis).unwrap(), 0.0);
        prop_assert!(rho(&a, &c, &basis).unwrap() <= ab + rho(&b, &c, &basis).unwrap() + 1e-12);
    }

    /// With at least as many functions as pairs the tabular basis contains every
    /// pair indicator, so distinct weight vectors are at positive distance.
    #[test]
    fn separating_basis_detects_differences(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, 6, 4, 9);
        let basis = default_basis(&sys, sys.num_pairs()).unwrap();
        let a = random_measure(&mut rng, sys.num_pairs());
        let b = random_measure(&mut rng, sys.num_pairs());
        if a.weights != b.weights {
            prop_assert!(rho(&a, &b, &basis).unwrap() > 0.0);
        }
    }
}

#[test]
fn basis_functions_bounded_by_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let sys = random_system(&mut rng, 6, 4, 9);
        for j in [1, 3, 8, 40] {
            let b = default_basis(&sys, j).unwrap();
            assert_eq!(b.len(), j);
            assert!(b.functions().iter().flatten().all(|v| v.abs() <= 1.0));
        }
    }
    let lq = occlp::model::catalog::lq1d();
    let b = default_basis(&lq, 12).unwrap();
    assert!(b.functions().iter().flatten().all(|v| v.abs() <= 1.0 + 1e-15));
}
