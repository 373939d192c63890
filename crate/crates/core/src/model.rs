//! Finite deterministic control systems.
//!
//! A [`FiniteControlSystem`] is a finite state set together with, for every
//! state, a nonempty ordered list of admissible actions. Each action carries
//! its successor state and its stage cost. Systems come either from a table
//! of `(state, action, next_state, cost)` rows or from discretizing a
//! continuous map on a rectangular grid.

use std::collections::HashMap;
use std::fmt;

use crate::error::ModelError;

/// One admissible action at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub label: String,
    /// Index of the successor state.
    pub next: usize,
    pub cost: f64,
}

/// Coordinates attached to grid-built systems, used by monomial test functions.
#[derive(Debug, Clone, PartialEq)]
pub struct GridGeometry {
    pub state_dim: usize,
    pub control_dim: usize,
    /// One entry per admissible pair: state coordinates followed by control coordinates.
    pub pair_points: Vec<Vec<f64>>,
}

/// A finite deterministic control system.
///
/// States are indexed `0..num_states()` in input order (tables) or row-major
/// order (grids). Admissible pairs are enumerated state by state, action by
/// action, and that enumeration is the canonical `pair_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteControlSystem {
    states: Vec<String>,
    actions: Vec<Vec<Action>>,
    pair_offsets: Vec<usize>,
    pairs: Vec<(usize, usize)>,
    cost_bound: f64,
    geometry: Option<GridGeometry>,
}

impl FiniteControlSystem {
    /// Assembles a system without checking any invariant.
    ///
    /// Use [`FiniteControlSystem::validate`] to inspect the result. The
    /// builders ([`build_from_table`], [`build_grid_system`]) only ever return
    /// valid systems.
    pub fn from_parts(states: Vec<String>, actions: Vec<Vec<Action>>) -> Self {
        let mut pair_offsets = Vec::with_capacity(actions.len() + 1);
        let mut pairs = Vec::new();
        for (y, acts) in actions.iter().enumerate() {
            pair_offsets.push(pairs.len());
            pairs.extend((0..acts.len()).map(|a| (y, a)));
        }
        pair_offsets.push(pairs.len());
        let cost_bound = actions
            .iter()
            .flatten()
            .map(|a| a.cost.abs())
            .fold(0.0, f64::max);
        Self {
            states,
            actions,
            pair_offsets,
            pairs,
            cost_bound,
            geometry: None,
        }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn state_label(&self, y: usize) -> &str {
        &self.states[y]
    }

    pub fn state_labels(&self) -> &[String] {
        &self.states
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }

    pub fn actions(&self, y: usize) -> &[Action] {
        &self.actions[y]
    }

    /// `(state, action)` for a pair id.
    pub fn pair(&self, p: usize) -> (usize, usize) {
        self.pairs[p]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair_id(&self, y: usize, a: usize) -> usize {
        debug_assert!(a < self.actions[y].len());
        self.pair_offsets[y] + a
    }

    /// Pair ids of the actions available at `y`.
    pub fn pairs_at(&self, y: usize) -> std::ops::Range<usize> {
        self.pair_offsets[y]..self.pair_offsets[y + 1]
    }

    pub fn next_state(&self, y: usize, a: usize) -> usize {
        self.actions[y][a].next
    }

    pub fn cost(&self, y: usize, a: usize) -> f64 {
        self.actions[y][a].cost
    }

    pub fn pair_next(&self, p: usize) -> usize {
        let (y, a) = self.pairs[p];
        self.actions[y][a].next
    }

    pub fn pair_cost(&self, p: usize) -> f64 {
        let (y, a) = self.pairs[p];
        self.actions[y][a].cost
    }

    /// Cost vector indexed by pair id.
    pub fn cost_vector(&self) -> Vec<f64> {
        (0..self.num_pairs()).map(|p| self.pair_cost(p)).collect()
    }

    /// `M = max |g|` over admissible pairs.
    pub fn cost_bound(&self) -> f64 {
        self.cost_bound
    }

    pub fn geometry(&self) -> Option<&GridGeometry> {
        self.geometry.as_ref()
    }

    pub fn max_actions(&self) -> usize {
        self.actions.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Table rows `(state, action, next_state, cost)` in pair order.
    pub fn to_rows(&self) -> Vec<TableRow> {
        self.pairs
            .iter()
            .map(|&(y, a)| {
                let act = &self.actions[y][a];
                TableRow {
                    state: self.states[y].clone(),
                    action: act.label.clone(),
                    next_state: self
                        .states
                        .get(act.next)
                        .cloned()
                        .unwrap_or_else(|| format!("#{}", act.next)),
                    cost: act.cost,
                }
            })
            .collect()
    }

    /// Same states, pair enumeration, transitions and costs. Grid geometry is ignored.
    pub fn same_table(&self, other: &FiniteControlSystem) -> bool {
        self.states == other.states && self.actions == other.actions && self.pairs == other.pairs
    }

    /// Checks every structural invariant and reports all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.states.is_empty() {
            violations.push(Violation::NoStates);
        }
        for (y, acts) in self.actions.iter().enumerate() {
            let label = self.label_or_index(y);
            if acts.is_empty() {
                violations.push(Violation::NoAdmissibleAction { state: label.clone() });
            }
            for act in acts {
                if act.next >= self.states.len() {
                    violations.push(Violation::DanglingTarget {
                        state: label.clone(),
                        action: act.label.clone(),
                        target: format!("#{}", act.next),
                    });
                }
                if !act.cost.is_finite() {
                    violations.push(Violation::NonFiniteCost {
                        state: label.clone(),
                        action: act.label.clone(),
                    });
                }
            }
            for (i, a) in acts.iter().enumerate() {
                if acts[..i].iter().any(|b| b.label == a.label) {
                    violations.push(Violation::DuplicatePair {
                        state: label.clone(),
                        action: a.label.clone(),
                    });
                }
            }
        }
        if self.actions.len() != self.states.len() {
            violations.push(Violation::ShapeMismatch {
                states: self.states.len(),
                action_lists: self.actions.len(),
            });
        }
        let exact_bound = self
            .actions
            .iter()
            .flatten()
            .map(|a| a.cost.abs())
            .fold(0.0, f64::max);
        if exact_bound != self.cost_bound {
            violations.push(Violation::CostBoundMismatch {
                stored: self.cost_bound,
                exact: exact_bound,
            });
        }
        // pair_index must enumerate exactly the admissible pairs, once each.
        let expected: usize = self.actions.iter().map(Vec::len).sum();
        let bijective = self.pairs.len() == expected
            && self
                .pairs
                .iter()
                .enumerate()
                .all(|(p, &(y, a))| y < self.actions.len() && a < self.actions[y].len() && self.pair_offsets[y] + a == p);
        if !bijective {
            violations.push(Violation::PairIndexBroken);
        }
        ValidationReport { violations }
    }

    fn label_or_index(&self, y: usize) -> String {
        self.states.get(y).cloned().unwrap_or_else(|| format!("#{y}"))
    }
}

/// One row of a tabular model.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub state: String,
    pub action: String,
    pub next_state: String,
    pub cost: f64,
}

impl TableRow {
    pub fn new(state: &str, action: &str, next_state: &str, cost: f64) -> Self {
        Self {
            state: state.to_owned(),
            action: action.to_owned(),
            next_state: next_state.to_owned(),
            cost,
        }
    }
}

/// Builds a system whose admissible pairs are exactly `rows`.
///
/// The state set is the set of labels in the `state` column, in order of
/// first appearance. A row whose `next_state` never appears in that column
/// is rejected.
pub fn build_from_table(rows: &[TableRow]) -> Result<FiniteControlSystem, ModelError> {
    if rows.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    let mut states: Vec<String> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for r in rows {
        if !index.contains_key(r.state.as_str()) {
            index.insert(r.state.as_str(), states.len());
            states.push(r.state.clone());
        }
    }
    let mut actions: Vec<Vec<Action>> = vec![Vec::new(); states.len()];
    for r in rows {
        let y = index[r.state.as_str()];
        if actions[y].iter().any(|a| a.label == r.action) {
            return Err(ModelError::DuplicatePair {
                state: r.state.clone(),
                action: r.action.clone(),
            });
        }
        let next = *index
            .get(r.next_state.as_str())
            .ok_or_else(|| ModelError::DanglingTarget {
                state: r.state.clone(),
                action: r.action.clone(),
                target: r.next_state.clone(),
            })?;
        if !r.cost.is_finite() {
            return Err(ModelError::NonFiniteCost {
                state: r.state.clone(),
                action: r.action.clone(),
            });
        }
        actions[y].push(Action {
            label: r.action.clone(),
            next,
            cost: r.cost,
        });
    }
    Ok(FiniteControlSystem::from_parts(states, actions))
}

/// Rectangular grid over the state box plus a finite list of controls.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: Vec<usize>,
    /// Each control is a vector; all controls share one dimension.
    pub controls: Vec<Vec<f64>>,
}

impl GridSpec {
    /// One-dimensional box `[lower, upper]` with scalar controls.
    pub fn interval(lower: f64, upper: f64, points: usize, controls: &[f64]) -> Self {
        Self {
            lower: vec![lower],
            upper: vec![upper],
            points: vec![points],
            controls: controls.iter().map(|&u| vec![u]).collect(),
        }
    }

    pub fn check(&self) -> Result<(), ModelError> {
        let d = self.lower.len();
        if d == 0 || self.upper.len() != d || self.points.len() != d {
            return Err(ModelError::BadGrid("bounds and points must have one entry per dimension".into()));
        }
        for i in 0..d {
            if !self.lower[i].is_finite() || !self.upper[i].is_finite() {
                return Err(ModelError::BadGrid(format!("non-finite bound in dimension {i}")));
            }
            if self.lower[i] >= self.upper[i] {
                return Err(ModelError::BadGrid(format!("empty interval in dimension {i}")));
            }
            if self.points[i] < 2 {
                return Err(ModelError::BadGrid(format!("dimension {i} needs at least 2 points")));
            }
        }
        if self.controls.is_empty() {
            return Err(ModelError::BadGrid("action grid is empty".into()));
        }
        let k = self.controls[0].len();
        if k == 0 || self.controls.iter().any(|u| u.len() != k || u.iter().any(|x| !x.is_finite())) {
            return Err(ModelError::BadGrid("controls must be finite vectors of one common dimension".into()));
        }
        Ok(())
    }

    pub fn num_points(&self) -> usize {
        self.points.iter().product()
    }

    pub fn coordinate(&self, dim: usize, i: usize) -> f64 {
        let (lo, hi, n) = (self.lower[dim], self.upper[dim], self.points[dim]);
        if i + 1 == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    /// Grid point for a row-major flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let idx = self.unflatten(flat);
        idx.iter().enumerate().map(|(d, &i)| self.coordinate(d, i)).collect()
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.points.len()];
        for d in (0..self.points.len()).rev() {
            idx[d] = flat % self.points[d];
            flat /= self.points[d];
        }
        idx
    }

    fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.points).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Slack used when deciding whether a point lies in the box; absorbs
    /// floating-point rounding in `f` only.
    fn slack(&self, dim: usize) -> f64 {
        1e-12 * (self.upper[dim] - self.lower[dim])
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lower.len()
            && x.iter().enumerate().all(|(d, &v)| {
                v.is_finite() && v >= self.lower[d] - self.slack(d) && v <= self.upper[d] + self.slack(d)
            })
    }

    /// Nearest grid point (row-major index). On a rectangular grid the
    /// Euclidean nearest point is found per coordinate; ties go to the lower
    /// index, which yields the lexicographically smallest index overall.
    pub fn project(&self, x: &[f64]) -> usize {
        let idx: Vec<usize> = x
            .iter()
            .enumerate()
            .map(|(d, &v)| {
                let n = self.points[d];
                let mut best = 0;
                let mut best_dist = f64::INFINITY;
                for i in 0..n {
                    let dist = (self.coordinate(d, i) - v).abs();
                    if dist < best_dist {
                        best = i;
                        best_dist = dist;
                    }
                }
                best
            })
            .collect();
        self.flatten(&idx)
    }
}

fn format_point(x: &[f64]) -> String {
    if x.len() == 1 {
        format!("{}", x[0])
    } else {
        let parts: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        format!("({})", parts.join(";"))
    }
}

/// Discretizes `y(t+1) = f(y(t), u(t))` with stage cost `g` on a grid.
///
/// A control `u` is admissible at grid point `y` iff `f(y, u)` lies in the
/// box; the successor is then the nearest grid point. Fails with
/// [`ModelError::NoAdmissibleAction`] listing every grid point that has no
/// admissible control.
pub fn build_grid_system<F, G>(spec: &GridSpec, f: F, g: G) -> Result<FiniteControlSystem, ModelError>
where
    F: Fn(&[f64], &[f64]) -> Vec<f64>,
    G: Fn(&[f64], &[f64]) -> f64,
{
    spec.check()?;
    let n = spec.num_points();
    let mut states = Vec::with_capacity(n);
    let mut actions = Vec::with_capacity(n);
    let mut pair_points = Vec::new();
    let mut stuck = Vec::new();
    for flat in 0..n {
        let y = spec.point(flat);
        let label = format_point(&y);
        let mut acts = Vec::new();
        for u in &spec.controls {
            let target = f(&y, u);
            if !spec.contains(&target) {
                continue;
            }
            let cost = g(&y, u);
            if !cost.is_finite() {
                return Err(ModelError::NonFiniteCost {
                    state: label,
                    action: format_point(u),
                });
            }
            acts.push(Action {
                label: format_point(u),
                next: spec.project(&target),
                cost,
            });
            pair_points.push(y.iter().chain(u.iter()).copied().collect());
        }
        if acts.is_empty() {
            stuck.push(label.clone());
        }
        states.push(label);
        actions.push(acts);
    }
    if !stuck.is_empty() {
        return Err(ModelError::NoAdmissibleAction(stuck));
    }
    let mut sys = FiniteControlSystem::from_parts(states, actions);
    sys.geometry = Some(GridGeometry {
        state_dim: spec.lower.len(),
        control_dim: spec.controls[0].len(),
        pair_points,
    });
    Ok(sys)
}

/// A structural defect found by [`FiniteControlSystem::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoStates,
    NoAdmissibleAction { state: String },
    DanglingTarget { state: String, action: String, target: String },
    DuplicatePair { state: String, action: String },
    NonFiniteCost { state: String, action: String },
    CostBoundMismatch { stored: f64, exact: f64 },
    ShapeMismatch { states: usize, action_lists: usize },
    PairIndexBroken,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoStates => write!(f, "system has no states"),
            Violation::NoAdmissibleAction { state } => {
                write!(f, "NoAdmissibleAction: state {state} has an empty action set")
            }
            Violation::DanglingTarget { state, action, target } => {
                write!(f, "DanglingTarget: ({state}, {action}) leads to unknown state {target}")
            }
            Violation::DuplicatePair { state, action } => write!(f, "DuplicatePair: ({state}, {action})"),
            Violation::NonFiniteCost { state, action } => write!(f, "NonFiniteCost: ({state}, {action})"),
            Violation::CostBoundMismatch { stored, exact } => {
                write!(f, "cost bound {stored} differs from max |cost| = {exact}")
            }
            Violation::ShapeMismatch { states, action_lists } => {
                write!(f, "{states} states but {action_lists} action lists")
            }
            Violation::PairIndexBroken => write!(f, "pair index is not a bijection onto admissible pairs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Builtin models used throughout tests, examples and the CLI.
pub mod catalog {
    use super::*;

    /// `s0 --stay(1)--> s0`, `s0 --go(5)--> s1`, `s1 --stay(0)--> s1`.
    pub fn two_state() -> FiniteControlSystem {
        build_from_table(&[
            TableRow::new("s0", "stay", "s0", 1.0),
            TableRow::new("s0", "go", "s1", 5.0),
            TableRow::new("s1", "stay", "s1", 0.0),
        ])
        .expect("builtin model is valid")
    }

    /// Forced cycle `s0 -> s1 -> s2 -> s0` with costs 0, 1, 2.
    pub fn cycle3() -> FiniteControlSystem {
        build_from_table(&[
            TableRow::new("s0", "next", "s1", 0.0),
            TableRow::new("s1", "next", "s2", 1.0),
            TableRow::new("s2", "next", "s0", 2.0),
        ])
        .expect("builtin model is valid")
    }

    pub fn self_loop(cost: f64) -> FiniteControlSystem {
        build_from_table(&[TableRow::new("s", "a", "s", cost)]).expect("builtin model is valid")
    }

    pub fn lq1d_spec() -> GridSpec {
        GridSpec::interval(-1.0, 1.0, 5, &[-0.5, 0.0, 0.5])
    }

    /// Integrator `y + u` with cost `y² + u²` on `[-1, 1]`, 5 points, controls `{-0.5, 0, 0.5}`.
    pub fn lq1d() -> FiniteControlSystem {
        build_grid_system(&lq1d_spec(), integrator, quadratic_cost).expect("builtin model is valid")
    }

    pub fn integrator(y: &[f64], u: &[f64]) -> Vec<f64> {
        y.iter().zip(u.iter().cycle()).map(|(a, b)| a + b).collect()
    }

    /// `0.5·y + u`.
    pub fn contraction(y: &[f64], u: &[f64]) -> Vec<f64> {
        y.iter().zip(u.iter().cycle()).map(|(a, b)| 0.5 * a + b).collect()
    }

    pub fn quadratic_cost(y: &[f64], u: &[f64]) -> f64 {
        y.iter().chain(u).map(|v| v * v).sum()
    }

    pub const NAMES: [&str; 3] = ["two_state", "cycle3", "lq1d"];

    pub fn by_name(name: &str) -> Option<FiniteControlSystem> {
        match name {
            "two_state" => Some(two_state()),
            "cycle3" => Some(cycle3()),
            "lq1d" => Some(lq1d()),
            _ => None,
        }
    }

    pub fn all() -> Vec<(&'static str, FiniteControlSystem)> {
        NAMES.iter().map(|&n| (n, by_name(n).unwrap())).collect()
    }
}
