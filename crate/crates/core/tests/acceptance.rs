//! Acceptance suite. Runs without the libtest harness so that each
//! criterion prints exactly one PASS/FAIL line; exits nonzero on any failure.

mod common;

use std::time::{Duration, Instant};

use common::lp::{bfs_minimum, random_lp};
use common::{brute_force_horizon, builtin_model_args, model_args, random_system, run_cli, subcommand_invocations};
use occlp::cli::{load_model, parse_table};
use occlp::dp::{self, finite_horizon_value, Policy};
use occlp::lpcore::{solve, LpStatus};
use occlp::lpform::{discounted_residual, dual_slack_average, solve_average, verify_theorem_4_1};
use occlp::measures::{default_basis, discounted_occupational_measure, Controller};
use occlp::model::catalog;
use occlp::tauberian::{
    abel_mean, cesaro_lower_bound, find_cesaro_horizon, find_good_start, horizon_sweep,
    set_convergence_experiment, BoundedSequence, SampleSpec, SweepGrid,
};
use occlp::FiniteControlSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHAS: [f64; 4] = [0.3, 0.5, 0.9, 0.99];

/// Outcome of one criterion: `Ok(summary)` or `Err(first failure)`.
type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn theorem_on(sys: &FiniteControlSystem, label: &str) -> Result<Duration, String> {
    let mut slowest = Duration::ZERO;
    for alpha in ALPHAS {
        for y0 in 0..sys.num_states() {
            let t = Instant::now();
            let r = verify_theorem_4_1(sys, y0, alpha, 1e-8).map_err(|e| format!("{label}: {e}"))?;
            slowest = slowest.max(t.elapsed());
            ensure(r.passed(), || format!("{label} alpha={alpha} y0={y0}: {:?}", r.failures().collect::<Vec<_>>()))?;
        }
    }
    Ok(slowest)
}

fn c1_catalog_equality() -> Outcome {
    let mut slowest = Duration::ZERO;
    let mut count = 0;
    for (name, sys) in catalog::all() {
        slowest = slowest.max(theorem_on(&sys, name)?);
        count += ALPHAS.len() * sys.num_states();
    }
    ensure(slowest < Duration::from_secs(1), || format!("slowest instance took {slowest:?}"))?;
    Ok(format!("{count} instances, slowest {:.1} ms", slowest.as_secs_f64() * 1e3))
}

fn c2_random_equality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut count = 0;
    for k in 0..200 {
        let sys = random_system(&mut rng, 6, 4, 9);
        theorem_on(&sys, &format!("random #{k}"))?;
        count += ALPHAS.len() * sys.num_states();
    }
    Ok(format!("200 systems, {count} instances, 0 failures"))
}

fn c3_measure_inclusion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    for (name, sys) in catalog::all() {
        for _ in 0..100 {
            let policy = Policy::new((0..sys.num_states()).map(|y| rng.gen_range(0..sys.actions(y).len())).collect());
            let y0 = rng.gen_range(0..sys.num_states());
            let alpha = rng.gen_range(0.01..0.999);
            let gamma = discounted_occupational_measure(&sys, &Controller::Feedback(policy), y0, alpha)
                .map_err(|e| format!("{name}: {e}"))?;
            let r = discounted_residual(&sys, &gamma, y0, alpha);
            worst = worst.max(r);
            ensure(r <= 1e-10, || format!("{name} y0={y0} alpha={alpha}: residual {r:e}"))?;
        }
    }
    Ok(format!("max residual {worst:.2e}"))
}

fn c4_limits_cycle3() -> Outcome {
    let start = Instant::now();
    let sys = catalog::cycle3();
    let g_star = solve_average(&sys).map_err(|e| e.to_string())?.value;
    ensure((g_star - 1.0).abs() <= 1e-12, || format!("g* = {g_star}"))?;
    let alpha: f64 = 0.999;
    let vi = dp::discounted_value(&sys, alpha).map_err(|e| e.to_string())?;
    let (scaled, _) = dp::min_over_initial(&vi.value, 1.0 - alpha);
    let closed = (alpha + 2.0 * alpha * alpha) / (1.0 + alpha + alpha * alpha);
    ensure((scaled - closed).abs() <= 1e-8, || format!("scaled value {scaled} vs closed form {closed}"))?;
    ensure((scaled - g_star).abs() <= 2e-3, || format!("|{scaled} - {g_star}| > 2e-3"))?;
    let m = sys.cost_bound();
    let grid: Vec<usize> = (3..=300).collect();
    let sweep = horizon_sweep(&sys, &grid).map_err(|e| e.to_string())?;
    for p in &sweep.points {
        ensure(p.abs_error <= 2.0 * m / p.parameter, || format!("S={}: |G_S - g*| = {}", p.parameter, p.abs_error))?;
    }
    ensure(sweep.points[0].value == 1.0, || format!("G_3 = {}", sweep.points[0].value))?;
    ensure(sweep.points[1].value == 0.75, || format!("G_4 = {}", sweep.points[1].value))?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    Ok(format!("alpha=0.999 error {:.2e}, G_3=1, G_4=3/4, {:.0} ms", (scaled - g_star).abs(), took.as_secs_f64() * 1e3))
}

fn c5_average_dual() -> Outcome {
    let mut systems: Vec<(String, FiniteControlSystem)> =
        catalog::all().into_iter().map(|(n, s)| (n.to_string(), s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for k in 0..200 {
        systems.push((format!("random #{k}"), random_system(&mut rng, 6, 4, 9)));
    }
    let mut worst_gap: f64 = 0.0;
    for (name, sys) in &systems {
        let sol = solve_average(sys).map_err(|e| format!("{name}: {e}"))?;
        let mu = sol.dual.mu.ok_or_else(|| format!("{name}: no normalization dual"))?;
        let gap = (mu - sol.value).abs();
        worst_gap = worst_gap.max(gap);
        ensure(gap <= 1e-8, || format!("{name}: |mu - g*| = {gap:e}"))?;
        let slack = dual_slack_average(sys, &sol.dual.psi, mu);
        ensure(slack >= -1e-8, || format!("{name}: slack {slack:e}"))?;
    }
    Ok(format!("{} models, max |mu - g*| {worst_gap:.2e}", systems.len()))
}

fn random_sequence(rng: &mut ChaCha8Rng) -> BoundedSequence {
    let pre: Vec<f64> = (0..rng.gen_range(0..8)).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let cyc: Vec<f64> = (0..rng.gen_range(1..8)).map(|_| rng.gen_range(-5.0..5.0)).collect();
    BoundedSequence::eventually_periodic(pre, cyc).unwrap()
}

fn c6_cesaro_horizon() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut max_t = 0;
    for k in 0..1000 {
        let seq = random_sequence(&mut rng);
        let alpha = 1.0 - 10f64.powf(rng.gen_range(-4.0..-0.3));
        let eps = rng.gen_range(0.01..2.0);
        let h = find_cesaro_horizon(&seq, alpha, eps).map_err(|e| format!("draw {k}: {e}"))?;
        let m = seq.bound();
        let sigma = abel_mean(&seq, alpha).map_err(|e| e.to_string())?;
        let lb = cesaro_lower_bound(m, sigma, alpha, eps);
        ensure(h.horizon >= lb.max(1), || format!("draw {k}: T={} below bound {lb}", h.horizon))?;
        let avg = |t: usize| (0..t).map(|s| seq.value(s)).sum::<f64>() / t as f64;
        let rhs = |t: usize| sigma + eps + 2.0 * m / t as f64;
        ensure(avg(h.horizon) < rhs(h.horizon), || format!("draw {k}: inequality fails at T={}", h.horizon))?;
        if k < 100 {
            for t in lb.max(1)..h.horizon {
                ensure(avg(t) >= rhs(t), || format!("draw {k}: smaller T={t} also works"))?;
            }
        }
        max_t = max_t.max(h.horizon);
    }
    Ok(format!("1000 draws, 100 checked minimal, largest T {max_t}"))
}

fn c7_good_start() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for k in 0..1000 {
        let t = rng.gen_range(1..=50);
        let q: Vec<f64> = (0..t).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let sigma = q.iter().sum::<f64>() / t as f64;
        let eps = rng.gen_range(0.01..3.0);
        let g = find_good_start(&q, sigma, eps).map_err(|e| format!("draw {k}: {e}"))?;
        ensure(g.t_star + g.l == t, || format!("draw {k}: t* + l != t"))?;
        let mut run = 0.0;
        for s in 1..=g.l {
            run += q[g.t_star + s - 1];
            ensure(run / s as f64 <= sigma + eps, || format!("draw {k}: running average at S={s} too large"))?;
        }
        let m = q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let bound = eps * t as f64 / (sigma + eps + m) - 1.0;
        ensure(g.l as f64 >= bound, || format!("draw {k}: l={} < {bound}", g.l))?;
    }
    Ok("1000 draws".into())
}

/// Σ_j 2^{-j} |∫q_j dγ_α − ∫q_j dγ_W| on cycle3 from `start`, by geometric series.
fn cycle3_oracle(sys: &FiniteControlSystem, basis: &occlp::TestFunctionBasis, alpha: f64, start: usize) -> f64 {
    let n = sys.num_states();
    let pair_from = |y: usize| sys.pairs_at(y).start;
    let mut total = 0.0;
    for (j, q) in basis.functions().iter().enumerate() {
        let mut disc = 0.0;
        let mut uniform = 0.0;
        for k in 0..n {
            let v = q[pair_from((start + k) % n)];
            disc += alpha.powi(k as i32) * v;
            uniform += v / n as f64;
        }
        disc *= (1.0 - alpha) / (1.0 - alpha.powi(n as i32));
        total += 0.5f64.powi(j as i32 + 1) * (disc - uniform).abs();
    }
    total
}

fn c8_set_convergence() -> Outcome {
    let grid = SweepGrid::Alpha(vec![0.5, 0.99]);
    let mut summary = Vec::new();
    for name in ["two_state", "cycle3"] {
        let sys = catalog::by_name(name).unwrap();
        let basis = default_basis(&sys, 8).map_err(|e| e.to_string())?;
        let r = set_convergence_experiment(&sys, &grid, SampleSpec::Exhaustive, &basis).map_err(|e| e.to_string())?;
        let (lo, hi) = (r.points[0].value, r.points[1].value);
        ensure(hi < lo, || format!("{name}: deviation {hi} at 0.99 not below {lo} at 0.5"))?;
        if name == "cycle3" {
            let oracle = (0..sys.num_states())
                .map(|s| cycle3_oracle(&sys, &basis, 0.99, s))
                .fold(0.0f64, f64::max);
            ensure(hi <= oracle + 1e-8, || format!("cycle3: deviation {hi} exceeds oracle {oracle}"))?;
        }
        summary.push(format!("{name} {lo:.3e} -> {hi:.3e}"));
    }
    Ok(summary.join(", "))
}

fn c9_lp_solver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let mut worst_cs: f64 = 0.0;
    for k in 0..500 {
        let lp = random_lp(&mut rng);
        let sol = solve(&lp).map_err(|e| format!("LP {k}: {e}"))?;
        ensure(sol.status == LpStatus::Optimal, || format!("LP {k}: status {:?}", sol.status))?;
        let best = bfs_minimum(&lp.c, &lp.a, &lp.b).ok_or_else(|| format!("LP {k}: oracle found no vertex"))?;
        ensure((sol.objective - best).abs() <= 1e-8, || format!("LP {k}: {} vs {best}", sol.objective))?;
        // x_j (c_j − A_jᵀy) recomputed from the returned primal/dual pair
        let cs = (0..lp.cols())
            .map(|j| {
                let reduced = lp.c[j] - (0..lp.rows()).map(|i| lp.a[i][j] * sol.y[i]).sum::<f64>();
                (sol.x[j] * reduced).abs()
            })
            .fold(0.0f64, f64::max);
        worst_cs = worst_cs.max(cs);
        ensure(cs <= 1e-9, || format!("LP {k}: complementary slackness {cs:e}"))?;
    }
    Ok(format!("500 LPs, max slackness residual {worst_cs:.2e}"))
}

fn c10_finite_horizon() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut checks = 0;
    for k in 0..500 {
        let sys = random_system(&mut rng, 4, 3, 9);
        for steps in 1..=6 {
            let fh = finite_horizon_value(&sys, steps).map_err(|e| e.to_string())?;
            for y in 0..sys.num_states() {
                let brute = brute_force_horizon(&sys, y, steps);
                ensure(fh.value[y] == brute, || format!("system {k} S={steps} y={y}: {} vs {brute}", fh.value[y]))?;
                checks += 1;
            }
        }
    }
    Ok(format!("500 systems, {checks} exact comparisons"))
}

fn c11_cli() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("model.csv");
    let path_s = path.to_str().unwrap();
    let models = builtin_model_args();
    for m in &models {
        let mut args = vec!["export"];
        args.extend(m);
        args.extend(["--out", path_s]);
        let (code, _, err) = run_cli(&args);
        ensure(code == 0, || format!("{args:?}: exit {code}: {err}"))?;
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let back = parse_table(&text).map_err(|e| e.to_string())?;
        let (_, original) = load_model(&model_args(m)).map_err(|e| e.to_string())?;
        ensure(back.same_table(&original), || format!("{m:?}: ingested table differs"))?;
    }
    let calls = subcommand_invocations();
    for call in &calls {
        let args: Vec<&str> = call.iter().map(String::as_str).collect();
        let (c1, o1, e1) = run_cli(&args);
        let (c2, o2, _) = run_cli(&args);
        ensure(c1 == 0 && c2 == 0, || format!("{args:?}: exit {c1}/{c2}: {e1}"))?;
        ensure(o1 == o2, || format!("{args:?}: outputs differ"))?;
    }
    Ok(format!("{} models round-tripped, {} invocations repeated", models.len(), calls.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("discounted LP equality on catalog models", c1_catalog_equality),
        ("discounted LP equality on random systems", c2_random_equality),
        ("discounted measures satisfy the W_alpha rows", c3_measure_inclusion),
        ("Abel and Cesaro limits on cycle3", c4_limits_cycle3),
        ("average LP dual equals g*", c5_average_dual),
        ("Cesaro horizon lemma", c6_cesaro_horizon),
        ("good start lemma", c7_good_start),
        ("set convergence trend", c8_set_convergence),
        ("LP solver against vertex enumeration", c9_lp_solver),
        ("finite horizon against enumeration", c10_finite_horizon),
        ("CLI round-trip and determinism", c11_cli),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
