//! `occlp` command-line front end.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 bad input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::error::{FormError, ModelError, TauberianError};
use crate::lpform;
use crate::measures::{self, OccupationalMeasure};
use crate::model::{self, catalog, FiniteControlSystem, GridSpec, TableRow};
use crate::report::ReportRecord;
use crate::tauberian::{self, BoundedSequence, SampleSpec, SweepGrid};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("BadConfig: {0}")]
    BadConfig(String),
    #[error("ParseError at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Tauberian(#[from] TauberianError),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Parser)]
#[command(name = "occlp", version, about = "Occupation-measure LPs for discounted and average optimal control")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Builtin model (two_state, cycle3, lq1d) or path to a `state,action,next_state,cost` CSV.
    #[arg(long)]
    pub model: Option<String>,
    /// Builtin grid dynamics: integrator (y+u) or contraction (0.5y+u), both with cost |y|²+|u|².
    #[arg(long)]
    pub grid_dynamics: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
    pub grid_lower: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub grid_upper: f64,
    #[arg(long, default_value_t = 5)]
    pub grid_points: usize,
    /// Comma-separated scalar controls.
    #[arg(long, allow_hyphen_values = true, default_value = "-0.5,0,0.5")]
    pub grid_controls: String,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check model invariants.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write the model as a CSV table.
    Export {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Discounted problem: value iteration vs. LP primal vs. LP dual.
    SolveDiscounted {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        alpha: f64,
        /// Initial state label.
        #[arg(long)]
        y0: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Also dump the LP in plain-text form to this path.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Long-run average problem via the stationary-measure LP.
    SolveAverage {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// min_y (1-α)V_α(y) along an α grid.
    SweepAlpha {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated, strictly increasing values in (0, 1).
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// G_S = min_y V(S,y)/S along a horizon grid.
    SweepHorizon {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated integers or an inclusive range `a..b`.
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Hausdorff deviation between sampled occupational measures and W.
    SetConvergence {
        #[command(flatten)]
        model: ModelArgs,
        /// Discount grid (comma-separated).
        #[arg(long)]
        grid: Option<String>,
        /// Horizon grid (comma-separated or `a..b`).
        #[arg(long)]
        horizon_grid: Option<String>,
        /// Random (policy, start) draws when exhaustive enumeration is too large.
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Number of test functions.
        #[arg(long, default_value_t = 8)]
        basis: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Horizon and good-start lemmas on a bounded sequence.
    Tauberian {
        /// Builtin (cycle012, step5, const1) or JSON file `{"preamble": [...], "cycle": [...]}`.
        #[arg(long)]
        seq: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
        /// Prefix length used for the good-start lemma.
        #[arg(long, default_value_t = 60)]
        t: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

/// Largest policy×start product enumerated exhaustively by `set-convergence`.
pub const EXHAUSTIVE_LIMIT: usize = 4096;

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(Outcome { text, out, pass }) => {
            if let Err(e) = emit(&text, out.as_deref()) {
                eprintln!("{e}");
                return 2;
            }
            if pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

struct Outcome {
    text: String,
    out: Option<PathBuf>,
    pass: bool,
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_err(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| io_err(Path::new("<stdout>"), e))
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Parses a comma-separated list of floats.
pub fn parse_float_list(field: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|w| {
            w.trim()
                .parse::<f64>()
                .map_err(|_| CliError::BadConfig(format!("{field}: {w:?} is not a number")))
        })
        .collect()
}

/// Parses `a,b,c` or an inclusive range `a..b`.
pub fn parse_usize_list(field: &str, s: &str) -> Result<Vec<usize>, CliError> {
    let bad = |w: &str| CliError::BadConfig(format!("{field}: {w:?} is not a positive integer"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad(a))?;
        let b: usize = b.trim().parse().map_err(|_| bad(b))?;
        if a > b {
            return Err(CliError::BadConfig(format!("{field}: empty range {s}")));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|w| w.trim().parse().map_err(|_| bad(w))).collect()
}

/// Resolves the model source; exactly one of `--model` and `--grid-dynamics` is required.
pub fn load_model(args: &ModelArgs) -> Result<(String, FiniteControlSystem), CliError> {
    match (&args.model, &args.grid_dynamics) {
        (Some(_), Some(_)) => Err(CliError::BadConfig(
            "model: give either --model or --grid-dynamics, not both".into(),
        )),
        (None, None) => Err(CliError::BadConfig("model: one of --model or --grid-dynamics is required".into())),
        (Some(name), None) => match catalog::by_name(name) {
            Some(sys) => Ok((name.clone(), sys)),
            None => Ok((name.clone(), load_table(Path::new(name))?)),
        },
        (None, Some(dyn_name)) => {
            let controls = parse_float_list("grid-controls", &args.grid_controls)?;
            let spec = GridSpec::interval(args.grid_lower, args.grid_upper, args.grid_points, &controls);
            let sys = match dyn_name.as_str() {
                "integrator" => model::build_grid_system(&spec, catalog::integrator, catalog::quadratic_cost)?,
                "contraction" => model::build_grid_system(&spec, catalog::contraction, catalog::quadratic_cost)?,
                other => {
                    return Err(CliError::BadConfig(format!(
                        "grid-dynamics: unknown dynamics {other:?} (expected integrator or contraction)"
                    )))
                }
            };
            Ok((format!("grid:{dyn_name}"), sys))
        }
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    state: String,
    action: String,
    next_state: String,
    cost: String,
}

/// Reads a `state,action,next_state,cost` CSV into a system.
pub fn load_table(path: &Path) -> Result<FiniteControlSystem, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_table(&text)
}

pub fn parse_table(text: &str) -> Result<FiniteControlSystem, CliError> {
    if text.trim().is_empty() {
        return Err(ModelError::EmptyInput.into());
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CliError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != ["state", "action", "next_state", "cost"] {
        return Err(CliError::Parse {
            line: 1,
            message: "header must be state,action,next_state,cost".into(),
        });
    }
    let mut rows = Vec::new();
    for rec in reader.deserialize::<CsvRow>() {
        let row = rec.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rows.len() as u64 + 2;
        let cost: f64 = row.cost.parse().map_err(|_| CliError::Parse {
            line,
            message: format!("cost {:?} is not a number", row.cost),
        })?;
        if !cost.is_finite() {
            return Err(CliError::Parse {
                line,
                message: format!("cost {:?} is not finite", row.cost),
            });
        }
        rows.push(TableRow {
            state: row.state,
            action: row.action,
            next_state: row.next_state,
            cost,
        });
    }
    Ok(model::build_from_table(&rows)?)
}

/// The system as a `state,action,next_state,cost` CSV.
pub fn export_table(sys: &FiniteControlSystem) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["state", "action", "next_state", "cost"]).expect("in-memory write");
    for r in sys.to_rows() {
        w.write_record([r.state, r.action, r.next_state, r.cost.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

#[derive(Serialize)]
struct MeasureEntry {
    pair_id: usize,
    state: String,
    action: String,
    weight: f64,
}

fn measure_entries(sys: &FiniteControlSystem, m: &OccupationalMeasure) -> Vec<MeasureEntry> {
    m.weights
        .iter()
        .enumerate()
        .map(|(p, &weight)| {
            let (y, a) = sys.pair(p);
            MeasureEntry {
                pair_id: p,
                state: sys.state_label(y).to_owned(),
                action: sys.actions(y)[a].label.clone(),
                weight,
            }
        })
        .collect()
}

#[derive(Serialize)]
struct PotentialEntry {
    state: String,
    psi: f64,
}

fn potential_entries(sys: &FiniteControlSystem, psi: &[f64]) -> Vec<PotentialEntry> {
    psi.iter()
        .enumerate()
        .map(|(y, &v)| PotentialEntry {
            state: sys.state_label(y).to_owned(),
            psi: v,
        })
        .collect()
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::BadConfig(format!("alpha: {alpha} is not in (0, 1)")))
    }
}

fn builtin_sequence(name: &str) -> Option<BoundedSequence> {
    let (pre, cyc) = match name {
        "cycle012" => (vec![], vec![0.0, 1.0, 2.0]),
        "step5" => (vec![5.0], vec![0.0]),
        "const1" => (vec![], vec![1.0]),
        _ => return None,
    };
    BoundedSequence::eventually_periodic(pre, cyc).ok()
}

#[derive(Deserialize)]
struct SequenceFile {
    #[serde(default)]
    preamble: Vec<f64>,
    cycle: Vec<f64>,
    bound: Option<f64>,
}

fn load_sequence(spec: &str) -> Result<BoundedSequence, CliError> {
    if let Some(s) = builtin_sequence(spec) {
        return Ok(s);
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let f: SequenceFile =
        serde_json::from_str(&text).map_err(|e| CliError::BadConfig(format!("seq: {e}")))?;
    if f.cycle.is_empty() {
        return Err(CliError::BadConfig("seq: cycle must be nonempty".into()));
    }
    let seq = match f.bound {
        Some(b) => BoundedSequence::with_bound(f.preamble, f.cycle, b),
        None => BoundedSequence::eventually_periodic(f.preamble, f.cycle),
    };
    seq.map_err(|e| CliError::BadConfig(format!("seq: {e}")))
}

fn execute(cmd: &Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Validate { model, out } => {
            let (name, sys) = load_model(model)?;
            let report = sys.validate();
            let text = to_json(&json!({
                "model": name,
                "states": sys.num_states(),
                "pairs": sys.num_pairs(),
                "cost_bound": sys.cost_bound(),
                "valid": report.is_valid(),
                "violations": report.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            }));
            Ok(Outcome {
                text,
                out: out.out.clone(),
                pass: report.is_valid(),
            })
        }
        Command::Export { model, out } => {
            let (_, sys) = load_model(model)?;
            Ok(Outcome {
                text: export_table(&sys),
                out: out.out.clone(),
                pass: true,
            })
        }
        Command::SolveDiscounted {
            model,
            alpha,
            y0,
            tol,
            dump_lp,
            out,
        } => {
            check_alpha(*alpha)?;
            let (name, sys) = load_model(model)?;
            let y = sys
                .state_index(y0)
                .ok_or_else(|| CliError::BadConfig(format!("y0: unknown state {y0:?}")))?;
            let dlp = lpform::build_discounted_lp(&sys, y, *alpha)?;
            if let Some(path) = dump_lp {
                fs::write(path, dlp.lp.to_text()).map_err(|e| io_err(path, e))?;
            }
            let report = lpform::verify_theorem_4_1(&sys, y, *alpha, *tol)?;
            let sol = lpform::solve_discounted(&sys, y, *alpha)?;
            let value = |q: &str| report.get(q).map_or(f64::NAN, |r| r.value);
            let text = to_json(&json!({
                "model": name,
                "alpha": alpha,
                "y0": y0,
                "scaled_value": value("scaled_value"),
                "lp_primal": value("lp_primal"),
                "lp_dual": value("lp_dual"),
                "gap_value_primal": value("gap_value_primal"),
                "gap_primal_dual": value("gap_primal_dual"),
                "pass": report.passed(),
                "checks": report.records,
                "measure": measure_entries(&sys, &sol.measure),
                "potential": potential_entries(&sys, &sol.dual.psi.values),
            }));
            Ok(Outcome {
                text,
                out: out.out.clone(),
                pass: report.passed(),
            })
        }
        Command::SolveAverage { model, tol, dump_lp, out } => {
            let (name, sys) = load_model(model)?;
            if let Some(path) = dump_lp {
                let alp = lpform::build_average_lp(&sys)?;
                fs::write(path, alp.lp.to_text()).map_err(|e| io_err(path, e))?;
            }
            let sol = lpform::solve_average(&sys)?;
            let mu = sol.dual.mu.unwrap_or(f64::NAN);
            let slack = lpform::dual_slack_average(&sys, &sol.dual.psi, mu);
            let checks = vec![
                ReportRecord::at_most("gap_primal_mu", (sol.value - mu).abs(), *tol),
                ReportRecord::at_least("mu_dual_feasibility_slack", slack, -*tol),
            ];
            let pass = checks.iter().all(|c| c.pass);
            let text = to_json(&json!({
                "model": name,
                "g_star": sol.value,
                "mu": mu,
                "pass": pass,
                "checks": checks,
                "measure": measure_entries(&sys, &sol.measure),
                "potential": potential_entries(&sys, &sol.dual.psi.values),
            }));
            Ok(Outcome {
                text,
                out: out.out.clone(),
                pass,
            })
        }
        Command::SweepAlpha { model, grid, out } => {
            let (_, sys) = load_model(model)?;
            let alphas = parse_float_list("grid", grid)?;
            let r = tauberian::alpha_sweep(&sys, &alphas)?;
            Ok(Outcome {
                text: r.to_csv(),
                out: out.out.clone(),
                pass: true,
            })
        }
        Command::SweepHorizon { model, grid, out } => {
            let (_, sys) = load_model(model)?;
            let horizons = parse_usize_list("grid", grid)?;
            let r = tauberian::horizon_sweep(&sys, &horizons)?;
            Ok(Outcome {
                text: r.to_csv(),
                out: out.out.clone(),
                pass: true,
            })
        }
        Command::SetConvergence {
            model,
            grid,
            horizon_grid,
            samples,
            basis,
            seed,
            out,
        } => {
            let (_, sys) = load_model(model)?;
            let grid = match (grid, horizon_grid) {
                (Some(g), None) => SweepGrid::Alpha(parse_float_list("grid", g)?),
                (None, Some(h)) => SweepGrid::Horizon(parse_usize_list("horizon-grid", h)?),
                _ => {
                    return Err(CliError::BadConfig(
                        "grid: give exactly one of --grid and --horizon-grid".into(),
                    ))
                }
            };
            if *basis == 0 {
                return Err(CliError::BadConfig("basis: need at least one test function".into()));
            }
            let basis = measures::default_basis(&sys, *basis).map_err(|e| CliError::BadConfig(format!("basis: {e}")))?;
            let spec = SampleSpec::auto(&sys, EXHAUSTIVE_LIMIT, *samples, *seed);
            let r = tauberian::set_convergence_experiment(&sys, &grid, spec, &basis)?;
            Ok(Outcome {
                text: r.to_csv(),
                out: out.out.clone(),
                pass: true,
            })
        }
        Command::Tauberian { seq, alpha, eps, t, out } => {
            check_alpha(*alpha)?;
            if !(*eps > 0.0) {
                return Err(CliError::BadConfig(format!("eps: {eps} must be positive")));
            }
            if *t == 0 {
                return Err(CliError::BadConfig("t: must be at least 1".into()));
            }
            let sequence = load_sequence(seq)?;
            let h = tauberian::find_cesaro_horizon(&sequence, *alpha, *eps)?;
            let prefix = sequence.take(*t);
            let sigma_t = prefix.iter().sum::<f64>() / *t as f64;
            let g = tauberian::find_good_start(&prefix, sigma_t, *eps)?;
            let k2 = h.average < h.rhs && h.horizon >= h.lower_bound;
            let growth = g.l as f64 >= g.growth_bound;
            let text = to_json(&json!({
                "sequence": { "preamble": sequence.preamble(), "cycle": sequence.cycle(), "bound": sequence.bound() },
                "alpha": alpha,
                "eps": eps,
                "sigma": h.sigma,
                "horizon": h.horizon,
                "lower_bound": h.lower_bound,
                "average": h.average,
                "rhs": h.rhs,
                "k2_holds": k2,
                "t": t,
                "prefix_average": sigma_t,
                "t_star": g.t_star,
                "l": g.l,
                "growth_bound": g.growth_bound,
                "good_start_holds": true,
                "growth_holds": growth,
            }));
            Ok(Outcome {
                text,
                out: out.out.clone(),
                pass: k2 && growth,
            })
        }
    }
}
