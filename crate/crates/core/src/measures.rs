//! Occupational measures on the admissible pairs of a finite system and the
//! test-function pseudometric `ρ` between them.
//!
//! Every trajectory of a deterministic finite system driven by a stationary
//! policy (or an eventually periodic open-loop program) is eventually
//! periodic, so discounted measures are computed exactly from the preamble and
//! the cycle rather than by truncating the discounted sum.

use std::collections::HashMap;

use serde::Serialize;

use crate::dp::Policy;
use crate::error::MeasureError;
use crate::model::FiniteControlSystem;

/// How controls are chosen along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum Controller {
    Feedback(Policy),
    /// Open-loop action indices: `preamble` once, then `cycle` forever.
    OpenLoop { preamble: Vec<usize>, cycle: Vec<usize> },
}

/// An eventually periodic sequence of visited pair ids: `pairs[..cycle_start]`
/// once, then `pairs[cycle_start..]` repeated forever.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    seq: Vec<usize>,
    pub cycle_start: usize,
}

impl Trajectory {
    pub fn generate(sys: &FiniteControlSystem, controller: &Controller, y0: usize) -> Result<Self, MeasureError> {
        if let Controller::OpenLoop { cycle, .. } = controller {
            if cycle.is_empty() {
                return Err(MeasureError::EmptyControls);
            }
        }
        // Machine state is (y, program position); it repeats within finitely many steps.
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        let mut seq = Vec::new();
        let mut y = y0;
        let mut t = 0usize;
        loop {
            let (a, phase) = match controller {
                Controller::Feedback(policy) => (policy.choice.get(y).copied().unwrap_or(usize::MAX), 0),
                Controller::OpenLoop { preamble, cycle } => {
                    if t < preamble.len() {
                        (preamble[t], t)
                    } else {
                        let k = (t - preamble.len()) % cycle.len();
                        (cycle[k], preamble.len() + k)
                    }
                }
            };
            if let Some(&start) = seen.get(&(y, phase)) {
                return Ok(Self { seq, cycle_start: start });
            }
            if a >= sys.actions(y).len() {
                return Err(MeasureError::InadmissibleControl {
                    state: sys.state_label(y).to_owned(),
                    action: a,
                    time: t,
                });
            }
            seen.insert((y, phase), t);
            seq.push(sys.pair_id(y, a));
            y = sys.next_state(y, a);
            t += 1;
        }
    }

    /// Trajectory of an admissible stationary policy.
    ///
    /// Panics if `policy` is not admissible for `sys`.
    pub fn from_policy(sys: &FiniteControlSystem, policy: &Policy, y0: usize) -> Self {
        Self::generate(sys, &Controller::Feedback(policy.clone()), y0).expect("policy must be admissible")
    }

    /// Preamble followed by one lap of the cycle.
    pub fn pairs(&self) -> impl Iterator<Item = usize> + '_ {
        self.seq.iter().copied()
    }

    pub fn preamble(&self) -> &[usize] {
        &self.seq[..self.cycle_start]
    }

    pub fn cycle(&self) -> &[usize] {
        &self.seq[self.cycle_start..]
    }

    /// Pair visited at time `t`.
    pub fn pair_at(&self, t: usize) -> usize {
        if t < self.seq.len() {
            self.seq[t]
        } else {
            let lap = self.seq.len() - self.cycle_start;
            self.seq[self.cycle_start + (t - self.cycle_start) % lap]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Discounted { alpha: f64, y0: usize },
    Horizon { steps: usize, y0: usize },
    Abstract,
}

/// Probability weights indexed by pair id.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationalMeasure {
    pub weights: Vec<f64>,
    pub provenance: Provenance,
}

impl OccupationalMeasure {
    pub fn new(weights: Vec<f64>, provenance: Provenance) -> Self {
        Self { weights, provenance }
    }

    pub fn dirac(num_pairs: usize, p: usize) -> Self {
        let mut weights = vec![0.0; num_pairs];
        weights[p] = 1.0;
        Self::new(weights, Provenance::Abstract)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// CSV with header `pair_id,state,action,weight`.
    pub fn to_csv(&self, sys: &FiniteControlSystem) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["pair_id", "state", "action", "weight"]).expect("in-memory write");
        for (p, &weight) in self.weights.iter().enumerate() {
            let (y, a) = sys.pair(p);
            w.write_record([
                p.to_string(),
                sys.state_label(y).to_owned(),
                sys.actions(y)[a].label.clone(),
                weight.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

fn check_alpha(alpha: f64) -> Result<(), MeasureError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(MeasureError::BadDiscount(alpha))
    }
}

/// `γ(Q) = (1−α) Σ_t α^t 1_Q(y(t), u(t))`, summed exactly over the eventual cycle.
pub fn discounted_occupational_measure(
    sys: &FiniteControlSystem,
    controller: &Controller,
    y0: usize,
    alpha: f64,
) -> Result<OccupationalMeasure, MeasureError> {
    check_alpha(alpha)?;
    let traj = Trajectory::generate(sys, controller, y0)?;
    Ok(discounted_from_trajectory(sys.num_pairs(), &traj, y0, alpha))
}

pub(crate) fn discounted_from_trajectory(
    num_pairs: usize,
    traj: &Trajectory,
    y0: usize,
    alpha: f64,
) -> OccupationalMeasure {
    let mut weights = vec![0.0; num_pairs];
    let c0 = traj.cycle_start;
    let lap = traj.cycle().len();
    let cycle_scale = 1.0 / (1.0 - alpha.powi(lap as i32));
    let mut discount = 1.0 - alpha;
    for (t, p) in traj.pairs().enumerate() {
        weights[p] += if t < c0 { discount } else { discount * cycle_scale };
        discount *= alpha;
    }
    OccupationalMeasure::new(weights, Provenance::Discounted { alpha, y0 })
}

/// Empirical pair frequencies over `t = 0..S−1` of an `S`-step control sequence.
pub fn horizon_occupational_measure(
    sys: &FiniteControlSystem,
    controls: &[usize],
    y0: usize,
) -> Result<OccupationalMeasure, MeasureError> {
    if controls.is_empty() {
        return Err(MeasureError::EmptyControls);
    }
    let mut weights = vec![0.0; sys.num_pairs()];
    let share = 1.0 / controls.len() as f64;
    let mut y = y0;
    for (t, &a) in controls.iter().enumerate() {
        if a >= sys.actions(y).len() {
            return Err(MeasureError::InadmissibleControl {
                state: sys.state_label(y).to_owned(),
                action: a,
                time: t,
            });
        }
        weights[sys.pair_id(y, a)] += share;
        y = sys.next_state(y, a);
    }
    Ok(OccupationalMeasure::new(
        weights,
        Provenance::Horizon {
            steps: controls.len(),
            y0,
        },
    ))
}

/// `S`-step controls produced by a stationary policy.
pub fn policy_controls(sys: &FiniteControlSystem, policy: &Policy, y0: usize, steps: usize) -> Vec<usize> {
    let mut y = y0;
    (0..steps)
        .map(|_| {
            let a = policy.choice[y];
            y = sys.next_state(y, a);
            a
        })
        .collect()
}

/// `∫ q dγ` for `q` given by its values on pair ids.
pub fn integrate(gamma: &OccupationalMeasure, q: &[f64]) -> f64 {
    gamma.weights.iter().zip(q).map(|(w, v)| w * v).sum()
}

/// Test functions `q_1, …, q_J` on pair space with weights `2^{-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionBasis {
    functions: Vec<Vec<f64>>,
}

impl TestFunctionBasis {
    /// Every function must have one value per pair and sup-norm at most 1.
    pub fn new(functions: Vec<Vec<f64>>) -> Result<Self, MeasureError> {
        if functions.is_empty() {
            return Err(MeasureError::EmptyBasis);
        }
        let n = functions[0].len();
        for (j, q) in functions.iter().enumerate() {
            if q.len() != n {
                return Err(MeasureError::BasisMismatch(format!(
                    "function {j} has {} values, expected {n}",
                    q.len()
                )));
            }
            if q.iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
                return Err(MeasureError::BasisMismatch(format!("function {j} exceeds sup-norm 1")));
            }
        }
        Ok(Self { functions })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn num_pairs(&self) -> usize {
        self.functions[0].len()
    }

    pub fn function(&self, j: usize) -> &[f64] {
        &self.functions[j]
    }

    pub fn functions(&self) -> &[Vec<f64>] {
        &self.functions
    }

    /// Weight of the `j`-th function (0-based): `2^{-(j+1)}`.
    pub fn weight(&self, j: usize) -> f64 {
        0.5f64.powi(j as i32 + 1)
    }

    /// `(∫ q_j dγ)_j`.
    pub fn moments(&self, gamma: &OccupationalMeasure) -> Vec<f64> {
        self.functions.iter().map(|q| integrate(gamma, q)).collect()
    }

    fn check(&self, gamma: &OccupationalMeasure) -> Result<(), MeasureError> {
        if gamma.weights.len() == self.num_pairs() {
            Ok(())
        } else {
            Err(MeasureError::BasisMismatch(format!(
                "measure has {} weights, basis covers {} pairs",
                gamma.weights.len(),
                self.num_pairs()
            )))
        }
    }
}

/// Truncated `ρ(γ′, γ″) = Σ_j 2^{-j} |∫q_j dγ′ − ∫q_j dγ″|`.
pub fn rho(a: &OccupationalMeasure, b: &OccupationalMeasure, basis: &TestFunctionBasis) -> Result<f64, MeasureError> {
    basis.check(a)?;
    basis.check(b)?;
    Ok(basis
        .functions
        .iter()
        .enumerate()
        .map(|(j, q)| {
            let d: f64 = a.weights.iter().zip(&b.weights).zip(q).map(|((x, y), v)| (x - y) * v).sum();
            basis.weight(j) * d.abs()
        })
        .sum())
}

/// `sup_{γ ∈ from} inf_{γ' ∈ to} ρ(γ, γ')`.
pub fn one_sided_deviation(
    from: &[OccupationalMeasure],
    to: &[OccupationalMeasure],
    basis: &TestFunctionBasis,
) -> Result<f64, MeasureError> {
    if from.is_empty() || to.is_empty() {
        return Err(MeasureError::EmptySet);
    }
    let mut worst: f64 = 0.0;
    for a in from {
        let mut best = f64::INFINITY;
        for b in to {
            best = best.min(rho(a, b, basis)?);
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

/// Hausdorff distance induced by `ρ` between two finite sets of measures.
pub fn hausdorff(
    first: &[OccupationalMeasure],
    second: &[OccupationalMeasure],
    basis: &TestFunctionBasis,
) -> Result<f64, MeasureError> {
    Ok(one_sided_deviation(first, second, basis)?.max(one_sided_deviation(second, first, basis)?))
}

/// Canonical basis of `j` test functions.
///
/// Tabular systems get pair indicators in pair order, then state indicators,
/// repeating that cycle if more functions are requested. Grid systems get
/// monomials in the pair coordinates `(y, u)`, ordered by largest exponent,
/// then total degree, then exponent vector in descending lexicographic order
/// (so in 1-D: `1, y, u, y·u, y², …`), each rescaled to sup-norm 1 over the
/// admissible pairs.
pub fn default_basis(sys: &FiniteControlSystem, count: usize) -> Result<TestFunctionBasis, MeasureError> {
    if count == 0 {
        return Err(MeasureError::EmptyBasis);
    }
    let np = sys.num_pairs();
    let functions = match sys.geometry() {
        None => {
            let period = np + sys.num_states();
            (0..count)
                .map(|j| {
                    let k = j % period;
                    if k < np {
                        (0..np).map(|p| if p == k { 1.0 } else { 0.0 }).collect()
                    } else {
                        let y = k - np;
                        (0..np).map(|p| if sys.pair(p).0 == y { 1.0 } else { 0.0 }).collect()
                    }
                })
                .collect()
        }
        Some(geom) => {
            let dim = geom.state_dim + geom.control_dim;
            monomial_exponents(dim, count)
                .into_iter()
                .map(|exps| {
                    let raw: Vec<f64> = geom
                        .pair_points
                        .iter()
                        .map(|z| z.iter().zip(&exps).map(|(x, &e)| x.powi(e as i32)).product())
                        .collect();
                    let scale = raw.iter().map(|v: &f64| v.abs()).fold(0.0, f64::max);
                    if scale > 0.0 {
                        raw.into_iter().map(|v| v / scale).collect()
                    } else {
                        raw
                    }
                })
                .collect()
        }
    };
    TestFunctionBasis::new(functions)
}

/// First `count` exponent vectors in `dim` variables, in the order used by [`default_basis`].
pub fn monomial_exponents(dim: usize, count: usize) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = Vec::with_capacity(count);
    let mut level = 0u32;
    while out.len() < count {
        // Vectors with max exponent == level.
        let mut layer = Vec::new();
        let mut e = vec![0u32; dim];
        loop {
            if e.iter().copied().max().unwrap_or(0) == level {
                layer.push(e.clone());
            }
            // odometer over 0..=level
            let mut i = 0;
            while i < dim && e[i] == level {
                e[i] = 0;
                i += 1;
            }
            if i == dim {
                break;
            }
            e[i] += 1;
        }
        layer.sort_by(|a, b| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            da.cmp(&db).then_with(|| b.cmp(a))
        });
        out.extend(layer);
        level += 1;
        if dim == 0 {
            break;
        }
    }
    out.truncate(count);
    out
}
