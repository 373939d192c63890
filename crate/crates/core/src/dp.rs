//! Dynamic programming: Bellman backups, value iteration for the discounted
//! value `V_α`, backward recursion for the `S`-step value `V(S, ·)`, and the
//! operator `H_ψ(y) = min_u { α(ψ(f(y,u)) − ψ(y)) + g(y,u) }`.

use serde::Serialize;

use crate::error::DpError;
use crate::model::FiniteControlSystem;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueTag {
    Discounted { alpha: f64 },
    Horizon { steps: usize },
    Potential,
}

/// A real value per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub values: Vec<f64>,
    pub tag: ValueTag,
}

impl ValueFunction {
    pub fn new(values: Vec<f64>, tag: ValueTag) -> Self {
        Self { values, tag }
    }

    pub fn zeros(n: usize, tag: ValueTag) -> Self {
        Self::new(vec![0.0; n], tag)
    }

    pub fn potential(values: Vec<f64>) -> Self {
        Self::new(values, ValueTag::Potential)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_distance(&self, other: &ValueFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for ValueFunction {
    type Output = f64;
    fn index(&self, y: usize) -> &f64 {
        &self.values[y]
    }
}

/// Stationary feedback: one action index per state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy {
    pub choice: Vec<usize>,
}

impl Policy {
    pub fn new(choice: Vec<usize>) -> Self {
        Self { choice }
    }

    pub fn is_admissible(&self, sys: &FiniteControlSystem) -> bool {
        self.choice.len() == sys.num_states()
            && self.choice.iter().enumerate().all(|(y, &a)| a < sys.actions(y).len())
    }

    /// Every stationary pure policy of `sys`, in lexicographic order.
    pub fn enumerate(sys: &FiniteControlSystem) -> impl Iterator<Item = Policy> + '_ {
        let n = sys.num_states();
        let total: usize = (0..n).map(|y| sys.actions(y).len()).product();
        (0..total).map(move |mut k| {
            let mut choice = vec![0; n];
            for y in (0..n).rev() {
                let m = sys.actions(y).len();
                choice[y] = k % m;
                k /= m;
            }
            Policy { choice }
        })
    }
}

fn check_alpha(alpha: f64) -> Result<(), DpError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(DpError::BadDiscount(alpha))
    }
}

fn check_len(sys: &FiniteControlSystem, v: &ValueFunction) -> Result<(), DpError> {
    if v.len() == sys.num_states() {
        Ok(())
    } else {
        Err(DpError::SizeMismatch {
            expected: sys.num_states(),
            got: v.len(),
        })
    }
}

/// Per-state minimization of `score(y, a)`; ties go to the smallest action index.
fn argmin_per_state<F>(sys: &FiniteControlSystem, score: F) -> (Vec<f64>, Vec<usize>)
where
    F: Fn(usize, usize) -> f64,
{
    let n = sys.num_states();
    let mut best = Vec::with_capacity(n);
    let mut arg = Vec::with_capacity(n);
    for y in 0..n {
        let mut b = f64::INFINITY;
        let mut ba = 0;
        for a in 0..sys.actions(y).len() {
            let s = score(y, a);
            if s < b {
                b = s;
                ba = a;
            }
        }
        best.push(b);
        arg.push(ba);
    }
    (best, arg)
}

/// `(TV)(y) = min_u { g(y,u) + α V(f(y,u)) }` with an argmin policy.
pub fn bellman_backup(
    sys: &FiniteControlSystem,
    v: &ValueFunction,
    alpha: f64,
) -> Result<(ValueFunction, Policy), DpError> {
    check_len(sys, v)?;
    let (values, choice) = argmin_per_state(sys, |y, a| sys.cost(y, a) + alpha * v[sys.next_state(y, a)]);
    Ok((
        ValueFunction::new(values, ValueTag::Discounted { alpha }),
        Policy { choice },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIteration {
    pub value: ValueFunction,
    pub policy: Policy,
    pub iterations: usize,
    /// `‖T V_prev − V_prev‖∞` at the final step.
    pub residual: f64,
    /// Guaranteed bound on `‖value − V_α‖∞`.
    pub error_bound: f64,
}

/// Value iteration from `V ≡ 0`.
///
/// Stops once `‖TV − V‖∞ ≤ tol·(1−α)/(2α)` and returns `TV`, whose distance
/// to `V_α` is then at most `tol/2`. The threshold is floored at a few ulps
/// of `‖V‖∞`, below which floating-point backups cannot make progress;
/// `error_bound` always reports the bound actually achieved.
pub fn value_iteration(
    sys: &FiniteControlSystem,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ValueIteration, DpError> {
    check_alpha(alpha)?;
    let target = tol * (1.0 - alpha) / (2.0 * alpha);
    let mut v = ValueFunction::zeros(sys.num_states(), ValueTag::Discounted { alpha });
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let (next, policy) = bellman_backup(sys, &v, alpha)?;
        residual = next.sup_distance(&v);
        let floor = 8.0 * f64::EPSILON * next.sup_norm().max(1.0);
        if residual <= target.max(floor) {
            return Ok(ValueIteration {
                value: next,
                policy,
                iterations: it,
                residual,
                error_bound: alpha * residual / (1.0 - alpha),
            });
        }
        v = next;
    }
    Err(DpError::MaxIterExceeded {
        iterations: max_iter,
        residual,
        target,
    })
}

/// [`value_iteration`] with default tolerance and iteration cap.
pub fn discounted_value(sys: &FiniteControlSystem, alpha: f64) -> Result<ValueIteration, DpError> {
    value_iteration(sys, alpha, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

/// Result of the `S`-step backward recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHorizon {
    pub value: ValueFunction,
    /// `stage_policies[k]` is optimal with `k + 1` steps to go.
    pub stage_policies: Vec<Policy>,
}

impl FiniteHorizon {
    pub fn steps(&self) -> usize {
        self.stage_policies.len()
    }

    /// An optimal open-loop control sequence from `y0`.
    pub fn optimal_controls(&self, sys: &FiniteControlSystem, y0: usize) -> Vec<usize> {
        let mut y = y0;
        let mut controls = Vec::with_capacity(self.steps());
        for policy in self.stage_policies.iter().rev() {
            let a = policy.choice[y];
            controls.push(a);
            y = sys.next_state(y, a);
        }
        controls
    }
}

/// `V(0,·) = 0`, `V(k+1, y) = min_u { g(y,u) + V(k, f(y,u)) }`.
pub fn finite_horizon_value(sys: &FiniteControlSystem, steps: usize) -> Result<FiniteHorizon, DpError> {
    if steps == 0 {
        return Err(DpError::ZeroHorizon);
    }
    let mut v = vec![0.0; sys.num_states()];
    let mut stage_policies = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (next, choice) = argmin_per_state(sys, |y, a| sys.cost(y, a) + v[sys.next_state(y, a)]);
        v = next;
        stage_policies.push(Policy { choice });
    }
    Ok(FiniteHorizon {
        value: ValueFunction::new(v, ValueTag::Horizon { steps }),
        stage_policies,
    })
}

/// `scale · min_y V(y)` and the smallest minimizing state.
pub fn min_over_initial(v: &ValueFunction, scale: f64) -> (f64, usize) {
    assert!(!v.is_empty(), "value function must be nonempty");
    let mut best = 0;
    for (y, &x) in v.values.iter().enumerate() {
        if x < v.values[best] {
            best = y;
        }
    }
    (scale * v.values[best], best)
}

/// `H_ψ(y) = min_u { α(ψ(f(y,u)) − ψ(y)) + g(y,u) }`.
pub fn h_operator(sys: &FiniteControlSystem, psi: &ValueFunction, alpha: f64) -> Result<ValueFunction, DpError> {
    check_len(sys, psi)?;
    let (values, _) = argmin_per_state(sys, |y, a| alpha * (psi[sys.next_state(y, a)] - psi[y]) + sys.cost(y, a));
    Ok(ValueFunction::potential(values))
}

/// Total discounted cost of following `policy` from every state, summed in
/// closed form over the eventual cycle. Independent of value iteration.
pub fn policy_value(sys: &FiniteControlSystem, policy: &Policy, alpha: f64) -> Vec<f64> {
    (0..sys.num_states())
        .map(|y0| {
            let traj = crate::measures::Trajectory::from_policy(sys, policy, y0);
            let costs: Vec<f64> = traj.pairs().map(|p| sys.pair_cost(p)).collect();
            let (pre, cyc) = costs.split_at(traj.cycle_start);
            let head: f64 = pre.iter().enumerate().map(|(t, c)| alpha.powi(t as i32) * c).sum();
            let lap: f64 = cyc.iter().enumerate().map(|(t, c)| alpha.powi(t as i32) * c).sum();
            head + alpha.powi(pre.len() as i32) * lap / (1.0 - alpha.powi(cyc.len() as i32))
        })
        .collect()
}
