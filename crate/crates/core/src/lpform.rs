//! Occupation-measure linear programs.
//!
//! On a finite state space the test functions `φ` in the balance constraints
//! can be taken to be state indicators, so each constraint family reduces to
//! one equality per state:
//!
//! * discounted, anchored at `y₀`:
//!   `Σ_u γ(y′,u) − α Σ_{f(y,u)=y′} γ(y,u) = (1−α)·1{y′ = y₀}`;
//! * long-run average: `Σ_u γ(y′,u) − Σ_{f(y,u)=y′} γ(y,u) = 0` plus `Σ γ = 1`.
//!
//! Dual variables of the state rows are the potentials `ψ`. With the sign
//! convention of [`crate::lpcore`] (`Aᵀy ≤ c`) they satisfy
//! `ψ(y) − α ψ(f(y,u)) ≤ g(y,u)` and `μ ≤ g(y,u) + ψ(f(y,u)) − ψ(y)` directly,
//! so `ψ` is comparable to `V_α` without any renormalization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dp::{self, ValueFunction};
use crate::error::FormError;
use crate::lpcore::{self, LPSolution, LpStatus, StandardFormLP};
use crate::measures::{OccupationalMeasure, Provenance, TestFunctionBasis};
use crate::model::FiniteControlSystem;
use crate::report::{Report, ReportRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountedLP {
    pub lp: StandardFormLP,
    pub y0: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageLP {
    pub lp: StandardFormLP,
}

/// Dual solution: potentials on states, plus `μ` for the average problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotential {
    pub psi: ValueFunction,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountedSolution {
    /// `g*_α(y₀)`.
    pub value: f64,
    pub measure: OccupationalMeasure,
    pub dual: DualPotential,
    /// `bᵀy = (1−α) ψ(y₀)`.
    pub dual_value: f64,
    pub lp: LPSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageSolution {
    /// `g*`.
    pub value: f64,
    pub measure: OccupationalMeasure,
    pub dual: DualPotential,
    pub lp: LPSolution,
}

fn balance_rows(sys: &FiniteControlSystem, inflow: f64) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; sys.num_pairs()]; sys.num_states()];
    for p in 0..sys.num_pairs() {
        let (y, _) = sys.pair(p);
        a[y][p] += 1.0;
        a[sys.pair_next(p)][p] -= inflow;
    }
    a
}

pub fn build_discounted_lp(sys: &FiniteControlSystem, y0: usize, alpha: f64) -> Result<DiscountedLP, FormError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(dp_err(alpha));
    }
    if y0 >= sys.num_states() {
        return Err(FormError::UnknownState(y0));
    }
    let a = balance_rows(sys, alpha);
    let mut b = vec![0.0; sys.num_states()];
    b[y0] = 1.0 - alpha;
    let lp = StandardFormLP::new(sys.cost_vector(), a, b)?;
    Ok(DiscountedLP { lp, y0, alpha })
}

fn dp_err(alpha: f64) -> FormError {
    FormError::Dp(crate::error::DpError::BadDiscount(alpha))
}

fn require_optimal(sol: &LPSolution) -> Result<(), FormError> {
    match sol.status {
        LpStatus::Optimal => Ok(()),
        LpStatus::Infeasible => Err(FormError::Infeasible),
        LpStatus::Unbounded => Err(FormError::Unbounded),
    }
}

pub fn solve_discounted(sys: &FiniteControlSystem, y0: usize, alpha: f64) -> Result<DiscountedSolution, FormError> {
    let dlp = build_discounted_lp(sys, y0, alpha)?;
    let sol = lpcore::solve(&dlp.lp)?;
    require_optimal(&sol)?;
    let measure = OccupationalMeasure::new(sol.x.clone(), Provenance::Discounted { alpha, y0 });
    Ok(DiscountedSolution {
        value: sol.objective,
        measure,
        dual: DualPotential {
            psi: ValueFunction::potential(sol.y.clone()),
            mu: None,
        },
        dual_value: sol.dual_objective(&dlp.lp),
        lp: sol,
    })
}

pub fn build_average_lp(sys: &FiniteControlSystem) -> Result<AverageLP, FormError> {
    let mut a = balance_rows(sys, 1.0);
    a.push(vec![1.0; sys.num_pairs()]);
    let mut b = vec![0.0; sys.num_states()];
    b.push(1.0);
    Ok(AverageLP {
        lp: StandardFormLP::new(sys.cost_vector(), a, b)?,
    })
}

pub fn solve_average(sys: &FiniteControlSystem) -> Result<AverageSolution, FormError> {
    let alp = build_average_lp(sys)?;
    solve_average_with(sys, &alp.lp)
}

fn solve_average_with(sys: &FiniteControlSystem, lp: &StandardFormLP) -> Result<AverageSolution, FormError> {
    let sol = lpcore::solve(lp)?;
    require_optimal(&sol)?;
    let n = sys.num_states();
    let measure = OccupationalMeasure::new(sol.x.clone(), Provenance::Abstract);
    Ok(AverageSolution {
        value: sol.objective,
        measure,
        dual: DualPotential {
            psi: ValueFunction::potential(sol.y[..n].to_vec()),
            mu: Some(sol.y[n]),
        },
        lp: sol,
    })
}

/// `min_γ Σ_p q_p γ_p` over W for an arbitrary objective `q`.
pub fn minimize_over_w(sys: &FiniteControlSystem, objective: &[f64]) -> Result<AverageSolution, FormError> {
    let mut alp = build_average_lp(sys)?;
    alp.lp.c = objective.to_vec();
    alp.lp.check()?;
    solve_average_with(sys, &alp.lp)
}

/// `min_z ρ` between fixed moments and the moments `Q z` of a polytope
/// `{z ≥ 0 : A₀ z = b₀}`, with `|·|` split into nonnegative parts.
fn min_weighted_l1(
    base_rows: &[Vec<f64>],
    base_rhs: &[f64],
    moment_map: &[Vec<f64>],
    target: &[f64],
    weights: &[f64],
) -> Result<f64, FormError> {
    let k = moment_map.first().map_or(0, Vec::len);
    let jn = moment_map.len();
    let n = k + 2 * jn;
    let mut c = vec![0.0; n];
    for j in 0..jn {
        c[k + j] = weights[j];
        c[k + jn + j] = weights[j];
    }
    let mut a = Vec::with_capacity(base_rows.len() + jn);
    for row in base_rows {
        let mut r = row.clone();
        r.resize(n, 0.0);
        a.push(r);
    }
    for (j, q) in moment_map.iter().enumerate() {
        let mut r = q.clone();
        r.resize(n, 0.0);
        r[k + j] = 1.0;
        r[k + jn + j] = -1.0;
        a.push(r);
    }
    let mut b = base_rhs.to_vec();
    b.extend_from_slice(target);
    let lp = StandardFormLP::new(c, a, b)?;
    let sol = lpcore::solve(&lp)?;
    require_optimal(&sol)?;
    Ok(sol.objective.max(0.0))
}

fn basis_weights(basis: &TestFunctionBasis) -> Vec<f64> {
    (0..basis.len()).map(|j| basis.weight(j)).collect()
}

/// `ρ(γ, W) = min_{γ′ ∈ W} ρ(γ, γ′)`.
pub fn distance_to_w(
    gamma: &OccupationalMeasure,
    sys: &FiniteControlSystem,
    basis: &TestFunctionBasis,
) -> Result<f64, FormError> {
    if gamma.weights.len() != sys.num_pairs() || basis.num_pairs() != sys.num_pairs() {
        return Err(FormError::Measure(crate::error::MeasureError::BasisMismatch(
            "measure, basis and system disagree on the number of pairs".into(),
        )));
    }
    let alp = build_average_lp(sys)?;
    min_weighted_l1(
        &alp.lp.a,
        &alp.lp.b,
        basis.functions(),
        &basis.moments(gamma),
        &basis_weights(basis),
    )
}

/// `min_{γ′ ∈ co(hull)} ρ(γ, γ′)`.
pub fn distance_to_hull(
    gamma: &OccupationalMeasure,
    hull: &[OccupationalMeasure],
    basis: &TestFunctionBasis,
) -> Result<f64, FormError> {
    if hull.is_empty() {
        return Err(FormError::Measure(crate::error::MeasureError::EmptySet));
    }
    let moments: Vec<Vec<f64>> = hull.iter().map(|h| basis.moments(h)).collect();
    let moment_map: Vec<Vec<f64>> = (0..basis.len())
        .map(|j| moments.iter().map(|m| m[j]).collect())
        .collect();
    min_weighted_l1(
        &[vec![1.0; hull.len()]],
        &[1.0],
        &moment_map,
        &basis.moments(gamma),
        &basis_weights(basis),
    )
}

/// Uniform measures on the simple cycles of the transition graph, which are
/// exactly the extreme points of W for a deterministic system.
///
/// Returns `None` once more than `cap` cycles have been found.
pub fn cycle_vertices(sys: &FiniteControlSystem, cap: usize) -> Option<Vec<OccupationalMeasure>> {
    let n = sys.num_states();
    let mut out = Vec::new();
    let mut path: Vec<usize> = Vec::new();
    let mut on_path = vec![false; n];

    fn dfs(
        sys: &FiniteControlSystem,
        start: usize,
        y: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        out: &mut Vec<OccupationalMeasure>,
        cap: usize,
    ) -> bool {
        for p in sys.pairs_at(y) {
            let next = sys.pair_next(p);
            if next == start {
                path.push(p);
                let mut w = vec![0.0; sys.num_pairs()];
                let share = 1.0 / path.len() as f64;
                for &q in path.iter() {
                    w[q] = share;
                }
                out.push(OccupationalMeasure::new(w, Provenance::Abstract));
                path.pop();
                if out.len() > cap {
                    return false;
                }
            } else if next > start && !on_path[next] {
                on_path[next] = true;
                path.push(p);
                let ok = dfs(sys, start, next, path, on_path, out, cap);
                path.pop();
                on_path[next] = false;
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    for start in 0..n {
        on_path[start] = true;
        let ok = dfs(sys, start, start, &mut path, &mut on_path, &mut out, cap);
        on_path[start] = false;
        if !ok {
            return None;
        }
    }
    Some(out)
}

/// Extreme points of W collected as LP basic solutions by minimizing
/// `±1_p` for every pair and `samples` seeded random objectives.
pub fn sampled_vertices(
    sys: &FiniteControlSystem,
    samples: usize,
    seed: u64,
) -> Result<Vec<OccupationalMeasure>, FormError> {
    let np = sys.num_pairs();
    let mut objectives: Vec<Vec<f64>> = Vec::new();
    for p in 0..np {
        for s in [1.0, -1.0] {
            let mut c = vec![0.0; np];
            c[p] = s;
            objectives.push(c);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        objectives.push((0..np).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let mut out: Vec<OccupationalMeasure> = Vec::new();
    for c in objectives {
        let sol = minimize_over_w(sys, &c)?;
        let dup = out.iter().any(|v| {
            v.weights
                .iter()
                .zip(&sol.measure.weights)
                .all(|(a, b)| (a - b).abs() < 1e-9)
        });
        if !dup {
            out.push(sol.measure);
        }
    }
    Ok(out)
}

/// Vertices of W: exact cycle enumeration when the graph has at most
/// `cap` simple cycles, LP objective sampling otherwise.
pub fn w_vertices(sys: &FiniteControlSystem, cap: usize, seed: u64) -> Result<Vec<OccupationalMeasure>, FormError> {
    match cycle_vertices(sys, cap) {
        Some(v) => Ok(v),
        None => sampled_vertices(sys, 4 * sys.num_pairs(), seed),
    }
}

/// Cross-checks `(1−α)V_α(y₀)` from value iteration against the discounted
/// LP's primal and dual optima, and checks that `ψ = V_α` is dual feasible.
pub fn verify_theorem_4_1(sys: &FiniteControlSystem, y0: usize, alpha: f64, tol: f64) -> Result<Report, FormError> {
    let vi = dp::discounted_value(sys, alpha)?;
    let scaled = (1.0 - alpha) * vi.value[y0];
    let sol = solve_discounted(sys, y0, alpha)?;
    let primal = sol.value;
    let dual = sol.dual_value;
    let slack = dual_slack_discounted(sys, &vi.value, alpha);
    let dlp = build_discounted_lp(sys, y0, alpha)?;
    let certs = lpcore::check_certificates(&dlp.lp, &sol.lp);

    let mut report = Report::default();
    report.push(ReportRecord::info("scaled_value", scaled));
    report.push(ReportRecord::info("lp_primal", primal));
    report.push(ReportRecord::info("lp_dual", dual));
    report.push(ReportRecord::at_most("gap_value_primal", (scaled - primal).abs(), tol));
    report.push(ReportRecord::at_most("gap_primal_dual", (primal - dual).abs(), tol));
    report.push(ReportRecord::at_most("gap_value_dual", (scaled - dual).abs(), tol));
    report.push(ReportRecord::at_least("value_dual_feasibility_slack", slack, -tol));
    report.push(ReportRecord::at_most(
        "value_iteration_error_bound",
        vi.error_bound,
        tol,
    ));
    report.push(ReportRecord::at_least(
        "lp_certificates",
        if certs.passed() { 1.0 } else { 0.0 },
        1.0,
    ));
    Ok(report)
}

/// `min_{(y,u)} { g(y,u) + α ψ(f(y,u)) − ψ(y) }`; nonnegative iff `ψ` is
/// feasible for the discounted dual.
pub fn dual_slack_discounted(sys: &FiniteControlSystem, psi: &ValueFunction, alpha: f64) -> f64 {
    (0..sys.num_pairs())
        .map(|p| {
            let (y, _) = sys.pair(p);
            sys.pair_cost(p) + alpha * psi[sys.pair_next(p)] - psi[y]
        })
        .fold(f64::INFINITY, f64::min)
}

/// `min_{(y,u)} { g(y,u) + ψ(f(y,u)) − ψ(y) − μ }`.
pub fn dual_slack_average(sys: &FiniteControlSystem, psi: &ValueFunction, mu: f64) -> f64 {
    (0..sys.num_pairs())
        .map(|p| {
            let (y, _) = sys.pair(p);
            sys.pair_cost(p) + psi[sys.pair_next(p)] - psi[y] - mu
        })
        .fold(f64::INFINITY, f64::min)
}

/// Max-norm residual of `Aγ = b` for the discounted LP anchored at `y₀`.
pub fn discounted_residual(sys: &FiniteControlSystem, gamma: &OccupationalMeasure, y0: usize, alpha: f64) -> f64 {
    let mut r = vec![0.0; sys.num_states()];
    r[y0] = -(1.0 - alpha);
    for (p, &w) in gamma.weights.iter().enumerate() {
        r[sys.pair(p).0] += w;
        r[sys.pair_next(p)] -= alpha * w;
    }
    r.iter().map(|v| v.abs()).fold(0.0, f64::max)
}
