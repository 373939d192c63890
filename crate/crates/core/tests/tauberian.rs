mod common;

use common::random_system;
use occlp::measures::default_basis;
use occlp::model::catalog;
use occlp::tauberian::{
    abel_mean, alpha_sweep, cesaro_lower_bound, extract_horizon, find_cesaro_horizon, find_good_start,
    horizon_sweep, set_convergence_experiment, BoundedSequence, SampleSpec, SweepGrid,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_sequence(rng: &mut ChaCha8Rng) -> BoundedSequence {
    let pre: Vec<f64> = (0..rng.gen_range(0..6)).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let cyc: Vec<f64> = (0..rng.gen_range(1..6)).map(|_| rng.gen_range(-3.0..3.0)).collect();
    BoundedSequence::eventually_periodic(pre, cyc).unwrap()
}

fn truncated_abel(seq: &BoundedSequence, alpha: f64) -> f64 {
    let n = ((1e-15f64).ln() / alpha.ln()).ceil() as usize + 10;
    let mut d = 1.0 - alpha;
    let mut s = 0.0;
    for t in 0..n {
        s += d * seq.value(t);
        d *= alpha;
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn abel_mean_matches_truncated_series(seed in any::<u64>(), alpha in 0.05f64..0.99) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_sequence(&mut rng);
        let sigma = abel_mean(&seq, alpha).unwrap();
        prop_assert!((sigma - truncated_abel(&seq, alpha)).abs() <= 1e-10);
        prop_assert!(sigma.abs() <= seq.bound() + 1e-12);
    }

    #[test]
    fn partial_sums_match_direct_sum(seed in any::<u64>(), n in 0usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_sequence(&mut rng);
        let direct: f64 = (0..n).map(|t| seq.value(t)).sum();
        prop_assert!((seq.partial_sum(n) - direct).abs() <= 1e-9);
    }

    #[test]
    fn cesaro_horizon_is_minimal(seed in any::<u64>(), alpha in 0.5f64..0.999, eps in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = random_sequence(&mut rng);
        let h = find_cesaro_horizon(&seq, alpha, eps).unwrap();
        let m = seq.bound();
        let sigma = abel_mean(&seq, alpha).unwrap();
        let lb = cesaro_lower_bound(m, sigma, alpha, eps).max(1);
        prop_assert!(h.horizon >= lb);
        let avg = |t: usize| (0..t).map(|s| seq.value(s)).sum::<f64>() / t as f64;
        prop_assert!(avg(h.horizon) < sigma + eps + 2.0 * m / h.horizon as f64 + 1e-12);
        for t in lb..h.horizon {
            prop_assert!(avg(t) >= sigma + eps + 2.0 * m / t as f64 - 1e-12);
        }
    }

    #[test]
    fn good_start_keeps_running_averages_low(seed in any::<u64>(), len in 1usize..50, eps in 0.01f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q: Vec<f64> = (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let sigma = q.iter().sum::<f64>() / len as f64;
        let g = find_good_start(&q, sigma, eps).unwrap();
        prop_assert_eq!(g.t_star + g.l, len);
        for s in 1..=g.l {
            let avg = q[g.t_star..g.t_star + s].iter().sum::<f64>() / s as f64;
            prop_assert!(avg <= sigma + eps + 1e-12);
        }
        // no later start index violates the prefix condition
        for s in g.t_star + 1..=len {
            prop_assert!(q[..s].iter().sum::<f64>() / s as f64 <= sigma + eps);
        }
        prop_assert!(g.l as f64 >= g.growth_bound);
    }
}

#[test]
fn sigma_mismatch_rejected() {
    assert!(find_good_start(&[1.0, 2.0], 1.0, 0.1).is_err());
}

#[test]
fn sweeps_approach_average_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..30 {
        let sys = random_system(&mut rng, 6, 3, 9);
        let m = sys.cost_bound();
        let s: Vec<usize> = (1..=60).collect();
        let hs = horizon_sweep(&sys, &s).unwrap();
        for p in &hs.points {
            assert!(p.abs_error <= 2.0 * m / p.parameter + 1e-9, "{p:?}");
        }
        let a = alpha_sweep(&sys, &[0.5, 0.9, 0.99, 0.999]).unwrap();
        assert!(a.points.last().unwrap().abs_error <= a.points[0].abs_error + 1e-9);
    }
}

#[test]
fn extraction_horizon_bounds_average() {
    let sys = catalog::cycle3();
    for alpha in [0.9, 0.99, 0.999] {
        let e = extract_horizon(&sys, alpha).unwrap();
        assert!(e.horizon.average < e.horizon.rhs);
        assert!(e.horizon.horizon >= e.horizon.lower_bound.max(1));
    }
}

#[test]
fn set_convergence_sample_modes_agree_on_small_system() {
    let sys = catalog::two_state();
    let basis = default_basis(&sys, 8).unwrap();
    let grid = SweepGrid::Alpha(vec![0.5, 0.99]);
    let ex = set_convergence_experiment(&sys, &grid, SampleSpec::Exhaustive, &basis).unwrap();
    let rnd = set_convergence_experiment(&sys, &grid, SampleSpec::Random { count: 400, seed: 1 }, &basis).unwrap();
    for (a, b) in ex.points.iter().zip(&rnd.points) {
        assert!((a.value - b.value).abs() < 1e-9);
    }
    assert!(ex.points[1].value < ex.points[0].value);
}
