#![allow(dead_code)]

pub mod lp;

use occlp::model::{build_from_table, FiniteControlSystem, TableRow};
use rand::Rng;

/// Random viable system: every state gets 1..=max_actions actions with
/// uniformly random successors and integer costs in [-max_cost, max_cost].
pub fn random_system<R: Rng>(rng: &mut R, max_states: usize, max_actions: usize, max_cost: i32) -> FiniteControlSystem {
    let n = rng.gen_range(1..=max_states);
    let mut rows = Vec::new();
    for y in 0..n {
        let k = rng.gen_range(1..=max_actions);
        for a in 0..k {
            let next = rng.gen_range(0..n);
            let cost = rng.gen_range(-max_cost..=max_cost) as f64;
            rows.push(TableRow::new(&format!("y{y}"), &format!("a{a}"), &format!("y{next}"), cost));
        }
    }
    build_from_table(&rows).unwrap()
}

/// Every action sequence of length `steps` from `y0`; returns the minimal total cost.
pub fn brute_force_horizon(sys: &FiniteControlSystem, y0: usize, steps: usize) -> f64 {
    if steps == 0 {
        return 0.0;
    }
    (0..sys.actions(y0).len())
        .map(|a| sys.cost(y0, a) + brute_force_horizon(sys, sys.next_state(y0, a), steps - 1))
        .fold(f64::INFINITY, f64::min)
}

/// Runs the `occlp` binary; returns (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, Vec<u8>, String) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_occlp"))
        .args(args)
        .output()
        .expect("spawn occlp");
    (
        out.status.code().unwrap_or(-1),
        out.stdout,
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Builtin model selections accepted by the CLI, as argument lists.
pub fn builtin_model_args() -> Vec<Vec<&'static str>> {
    let mut v: Vec<Vec<&str>> = occlp::model::catalog::NAMES.iter().map(|n| vec!["--model", *n]).collect();
    v.push(vec!["--grid-dynamics", "integrator"]);
    v.push(vec!["--grid-dynamics", "contraction", "--grid-points", "7", "--grid-controls", "-0.25,0,0.25"]);
    v
}

/// One invocation per subcommand (and model), exercising every output format.
pub fn subcommand_invocations() -> Vec<Vec<String>> {
    let mut calls = Vec::new();
    for m in builtin_model_args() {
        let m: Vec<String> = m.iter().map(|s| s.to_string()).collect();
        let with = |extra: &[&str]| {
            let mut v = vec![extra[0].to_string()];
            v.extend(m.iter().cloned());
            v.extend(extra[1..].iter().map(|s| s.to_string()));
            v
        };
        calls.push(with(&["validate"]));
        calls.push(with(&["export"]));
        let y0 = match occlp::model::catalog::by_name(&m[1]) {
            Some(sys) => sys.state_label(sys.num_states() - 1).to_owned(),
            None => "0".to_owned(),
        };
        calls.push(with(&["solve-discounted", "--alpha", "0.9", "--y0", &y0]));
        calls.push(with(&["solve-average"]));
        calls.push(with(&["sweep-alpha", "--grid", "0.5,0.9,0.99"]));
        calls.push(with(&["sweep-horizon", "--grid", "1..20"]));
        calls.push(with(&["set-convergence", "--grid", "0.5,0.9", "--samples", "16", "--basis", "6", "--seed", "3"]));
        calls.push(with(&["set-convergence", "--horizon-grid", "5,10", "--samples", "16", "--seed", "3"]));
    }
    for seq in ["cycle012", "step5", "const1"] {
        calls.push(
            ["tauberian", "--seq", seq, "--alpha", "0.95", "--eps", "0.3", "--t", "40"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        );
    }
    calls
}

/// Parses model-selection flags the way the CLI does.
pub fn model_args(m: &[&str]) -> occlp::cli::ModelArgs {
    use clap::Parser;
    #[derive(Parser)]
    struct Wrap {
        #[command(flatten)]
        model: occlp::cli::ModelArgs,
    }
    let mut argv = vec!["occlp"];
    argv.extend(m);
    Wrap::parse_from(argv).model
}
