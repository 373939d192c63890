//! Abel and Cesàro means of bounded sequences, the constructive horizon and
//! good-start lemmas, and the limit experiments that compare
//! `min_y (1−α)V_α(y)` and `G_S = min_y V(S,y)/S` with the average optimum `g*`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dp::{self, Policy};
use crate::error::TauberianError;
use crate::lpform;
use crate::measures::{self, OccupationalMeasure, TestFunctionBasis, Trajectory};
use crate::model::FiniteControlSystem;

/// `|b_t| ≤ bound` for all `t`. With a nonempty `cycle` the sequence is
/// `preamble` followed by `cycle` repeated forever; with an empty `cycle` it
/// is the finite sequence `preamble`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedSequence {
    preamble: Vec<f64>,
    cycle: Vec<f64>,
    bound: f64,
}

impl BoundedSequence {
    /// Bound is taken as the largest absolute value present.
    pub fn eventually_periodic(preamble: Vec<f64>, cycle: Vec<f64>) -> Result<Self, TauberianError> {
        let bound = preamble.iter().chain(&cycle).map(|v| v.abs()).fold(0.0, f64::max);
        Self::with_bound(preamble, cycle, bound)
    }

    pub fn finite(values: Vec<f64>) -> Result<Self, TauberianError> {
        Self::eventually_periodic(values, Vec::new())
    }

    pub fn constant(c: f64) -> Self {
        Self::eventually_periodic(Vec::new(), vec![c]).expect("finite constant")
    }

    pub fn with_bound(preamble: Vec<f64>, cycle: Vec<f64>, bound: f64) -> Result<Self, TauberianError> {
        if preamble.is_empty() && cycle.is_empty() {
            return Err(TauberianError::BadParameter("sequence is empty".into()));
        }
        if preamble.iter().chain(&cycle).any(|v| !v.is_finite() || v.abs() > bound) {
            return Err(TauberianError::BadParameter(format!("values exceed the bound {bound}")));
        }
        Ok(Self { preamble, cycle, bound })
    }

    /// Stage costs along a trajectory.
    pub fn from_trajectory(sys: &FiniteControlSystem, traj: &Trajectory) -> Self {
        let costs: Vec<f64> = traj.pairs().map(|p| sys.pair_cost(p)).collect();
        let (pre, cyc) = costs.split_at(traj.cycle_start);
        Self::with_bound(pre.to_vec(), cyc.to_vec(), sys.cost_bound()).expect("costs obey the system bound")
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn preamble(&self) -> &[f64] {
        &self.preamble
    }

    pub fn cycle(&self) -> &[f64] {
        &self.cycle
    }

    pub fn is_periodic(&self) -> bool {
        !self.cycle.is_empty()
    }

    /// Stored length for finite sequences, `None` for infinite ones.
    pub fn finite_len(&self) -> Option<usize> {
        if self.is_periodic() {
            None
        } else {
            Some(self.preamble.len())
        }
    }

    pub fn value(&self, t: usize) -> f64 {
        if t < self.preamble.len() {
            self.preamble[t]
        } else {
            assert!(self.is_periodic(), "index {t} past the end of a finite sequence");
            self.cycle[(t - self.preamble.len()) % self.cycle.len()]
        }
    }

    /// `Σ_{t<n} b_t`.
    pub fn partial_sum(&self, n: usize) -> f64 {
        let head = n.min(self.preamble.len());
        let mut s: f64 = self.preamble[..head].iter().sum();
        if n > head {
            let rest = n - head;
            let lap: f64 = self.cycle.iter().sum();
            let laps = rest / self.cycle.len();
            let rem = rest % self.cycle.len();
            s += laps as f64 * lap + self.cycle[..rem].iter().sum::<f64>();
        }
        s
    }

    /// First `n` values.
    pub fn take(&self, n: usize) -> Vec<f64> {
        (0..n).map(|t| self.value(t)).collect()
    }

    pub fn cycle_average(&self) -> Option<f64> {
        self.is_periodic()
            .then(|| self.cycle.iter().sum::<f64>() / self.cycle.len() as f64)
    }
}

fn check_alpha(alpha: f64) -> Result<(), TauberianError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(TauberianError::BadParameter(format!("alpha = {alpha} is not in (0, 1)")))
    }
}

/// `σ = (1−α) Σ_t α^t b_t` in closed form.
pub fn abel_mean(seq: &BoundedSequence, alpha: f64) -> Result<f64, TauberianError> {
    check_alpha(alpha)?;
    if !seq.is_periodic() {
        return Err(TauberianError::BadParameter(
            "Abel mean needs an infinite (eventually periodic) sequence".into(),
        ));
    }
    let mut disc = 1.0;
    let mut head = 0.0;
    for &b in &seq.preamble {
        head += disc * b;
        disc *= alpha;
    }
    let mut lap = 0.0;
    let mut d = 1.0;
    for &b in &seq.cycle {
        lap += d * b;
        d *= alpha;
    }
    // d = α^L after the loop
    Ok((1.0 - alpha) * (head + disc * lap / (1.0 - d)))
}

/// Output of [`find_cesaro_horizon`].
#[derive(Debug, Clone, PartialEq)]
pub struct CesaroHorizon {
    pub horizon: usize,
    /// `[ε / ((4M + 4|σ| + ε)(−ln α))]`, the integer-part lower bound.
    pub lower_bound: usize,
    pub sigma: f64,
    /// `(1/T) Σ_{t<T} b_t`.
    pub average: f64,
    /// `σ + ε + 2M/T`.
    pub rhs: f64,
}

/// Integer part of `ε / ((4M + 4|σ| + ε)(−ln α))`.
pub fn cesaro_lower_bound(bound: f64, sigma: f64, alpha: f64, eps: f64) -> usize {
    let v = eps / ((4.0 * bound + 4.0 * sigma.abs() + eps) * (-alpha.ln()));
    v.floor() as usize
}

const HORIZON_CAP: usize = 1_000_000_000;

/// Smallest `T ≥ max(1, lower bound)` with `(1/T) Σ_{t<T} b_t < σ + ε + 2M/T`.
pub fn find_cesaro_horizon(seq: &BoundedSequence, alpha: f64, eps: f64) -> Result<CesaroHorizon, TauberianError> {
    if !(eps > 0.0) {
        return Err(TauberianError::BadParameter(format!("eps = {eps} must be positive")));
    }
    let sigma = abel_mean(seq, alpha)?;
    let m = seq.bound();
    let lower_bound = cesaro_lower_bound(m, sigma, alpha, eps);
    let start = lower_bound.max(1);
    let mut sum = seq.partial_sum(start - 1);
    for t in start..start.saturating_add(HORIZON_CAP) {
        sum += seq.value(t - 1);
        let tf = t as f64;
        let average = sum / tf;
        let rhs = sigma + eps + 2.0 * m / tf;
        if average < rhs {
            return Ok(CesaroHorizon {
                horizon: t,
                lower_bound,
                sigma,
                average,
                rhs,
            });
        }
    }
    Err(TauberianError::Internal(format!(
        "no horizon satisfying the Cesàro inequality within {HORIZON_CAP} steps"
    )))
}

/// Output of [`find_good_start`].
#[derive(Debug, Clone, PartialEq)]
pub struct GoodStart {
    pub t_star: usize,
    /// `l = t − t*`.
    pub l: usize,
    /// `ε t / (σ + ε + M) − 1`, the guaranteed lower bound on `l`.
    pub growth_bound: f64,
}

/// Start index `t*` after which every running average of `values` stays
/// below `σ + ε`: `t* = max{ s : (1/s) Σ_{τ<s} q(τ) > σ + ε }`, or 0.
pub fn find_good_start(values: &[f64], sigma: f64, eps: f64) -> Result<GoodStart, TauberianError> {
    if values.is_empty() {
        return Err(TauberianError::BadParameter("sequence is empty".into()));
    }
    if !(eps > 0.0) {
        return Err(TauberianError::BadParameter(format!("eps = {eps} must be positive")));
    }
    let t = values.len();
    let actual = values.iter().sum::<f64>() / t as f64;
    if (actual - sigma).abs() > 1e-12 * actual.abs().max(1.0) {
        return Err(TauberianError::SigmaMismatch { supplied: sigma, actual });
    }
    let level = sigma + eps;
    let mut t_star = 0;
    let mut prefix = 0.0;
    for s in 1..=t {
        prefix += values[s - 1];
        if prefix / s as f64 > level {
            t_star = s;
        }
    }
    if t_star >= t {
        return Err(TauberianError::Internal("good start fell on the last index".into()));
    }
    let l = t - t_star;
    let mut run = 0.0;
    for s in 1..=l {
        run += values[t_star + s - 1];
        if run / s as f64 > level {
            return Err(TauberianError::Internal(format!(
                "running average over {s} steps from {t_star} exceeds sigma + eps"
            )));
        }
    }
    let m = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(GoodStart {
        t_star,
        l,
        growth_bound: eps * t as f64 / (sigma + eps + m) - 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub parameter: f64,
    pub value: f64,
    pub reference: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// CSV with header `parameter,value,reference,abs_error`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter,value,reference,abs_error\n");
        for p in &self.points {
            writeln!(out, "{},{},{},{}", p.parameter, p.value, p.reference, p.abs_error).unwrap();
        }
        out
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

fn strictly_increasing(grid: &[f64]) -> Result<(), TauberianError> {
    if grid.is_empty() {
        return Err(TauberianError::BadParameter("empty grid".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TauberianError::BadParameter("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `min_y (1−α) V_α(y)` along an α grid, compared with `g*`.
pub fn alpha_sweep(sys: &FiniteControlSystem, alphas: &[f64]) -> Result<SweepResult, TauberianError> {
    strictly_increasing(alphas)?;
    for &a in alphas {
        check_alpha(a)?;
    }
    let g_star = lpform::solve_average(sys)?.value;
    let mut points = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let vi = dp::discounted_value(sys, alpha)?;
        let (value, _) = dp::min_over_initial(&vi.value, 1.0 - alpha);
        points.push(SweepPoint {
            parameter: alpha,
            value,
            reference: g_star,
            abs_error: (value - g_star).abs(),
        });
    }
    Ok(SweepResult { points })
}

/// `G_S = min_y V(S,y)/S` along an `S` grid, compared with `g*`.
pub fn horizon_sweep(sys: &FiniteControlSystem, horizons: &[usize]) -> Result<SweepResult, TauberianError> {
    let as_f: Vec<f64> = horizons.iter().map(|&s| s as f64).collect();
    strictly_increasing(&as_f)?;
    if horizons[0] == 0 {
        return Err(TauberianError::BadParameter("horizons must be at least 1".into()));
    }
    let g_star = lpform::solve_average(sys)?.value;
    // one backward recursion, sampled at the grid points
    let mut v = vec![0.0; sys.num_states()];
    let mut points = Vec::with_capacity(horizons.len());
    let mut next_grid = 0;
    let last = *horizons.last().unwrap();
    for s in 1..=last {
        v = (0..sys.num_states())
            .map(|y| {
                (0..sys.actions(y).len())
                    .map(|a| sys.cost(y, a) + v[sys.next_state(y, a)])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        if horizons[next_grid] == s {
            let value = v.iter().copied().fold(f64::INFINITY, f64::min) / s as f64;
            points.push(SweepPoint {
                parameter: s as f64,
                value,
                reference: g_star,
                abs_error: (value - g_star).abs(),
            });
            next_grid += 1;
        }
    }
    Ok(SweepResult { points })
}

/// One step of the Cesàro-from-Abel extraction: the optimal discounted
/// trajectory from the best start, `σ = min_y (1−α)V_α(y)`, `ε = √(−ln α)`,
/// and the horizon `T` returned by [`find_cesaro_horizon`].
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonExtraction {
    pub alpha: f64,
    pub eps: f64,
    pub start: usize,
    pub horizon: CesaroHorizon,
    pub g_star: f64,
}

pub fn extract_horizon(sys: &FiniteControlSystem, alpha: f64) -> Result<HorizonExtraction, TauberianError> {
    check_alpha(alpha)?;
    let vi = dp::discounted_value(sys, alpha)?;
    let (_, start) = dp::min_over_initial(&vi.value, 1.0 - alpha);
    let traj = Trajectory::from_policy(sys, &vi.policy, start);
    let seq = BoundedSequence::from_trajectory(sys, &traj);
    let eps = (-alpha.ln()).sqrt();
    let horizon = find_cesaro_horizon(&seq, alpha, eps)?;
    Ok(HorizonExtraction {
        alpha,
        eps,
        start,
        horizon,
        g_star: lpform::solve_average(sys)?.value,
    })
}

/// Parameter axis of a set-convergence experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepGrid {
    Alpha(Vec<f64>),
    Horizon(Vec<usize>),
}

/// Which `(policy, start)` pairs generate the sampled measure sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSpec {
    /// Every pure stationary policy from every state.
    Exhaustive,
    /// `count` seeded random `(policy, start)` draws.
    Random { count: usize, seed: u64 },
}

impl SampleSpec {
    /// Exhaustive when the policy-start product has at most `limit` elements.
    pub fn auto(sys: &FiniteControlSystem, limit: usize, count: usize, seed: u64) -> Self {
        let mut total: usize = sys.num_states();
        for y in 0..sys.num_states() {
            total = total.saturating_mul(sys.actions(y).len());
        }
        if total <= limit {
            SampleSpec::Exhaustive
        } else {
            SampleSpec::Random { count, seed }
        }
    }

    fn draws(&self, sys: &FiniteControlSystem) -> Vec<(Policy, usize)> {
        match *self {
            SampleSpec::Exhaustive => Policy::enumerate(sys)
                .flat_map(|p| (0..sys.num_states()).map(move |y| (p.clone(), y)))
                .collect(),
            SampleSpec::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| {
                        let choice = (0..sys.num_states())
                            .map(|y| rng.gen_range(0..sys.actions(y).len()))
                            .collect();
                        (Policy::new(choice), rng.gen_range(0..sys.num_states()))
                    })
                    .collect()
            }
        }
    }
}

/// Both one-sided deviations between the hull of `sample` and W:
/// `(max_γ ρ(γ, W), max_{v ∈ vert W} ρ(v, co sample))`.
pub fn set_deviation(
    sys: &FiniteControlSystem,
    sample: &[OccupationalMeasure],
    vertices: &[OccupationalMeasure],
    basis: &TestFunctionBasis,
) -> Result<(f64, f64), TauberianError> {
    let mut to_w: f64 = 0.0;
    for g in sample {
        to_w = to_w.max(lpform::distance_to_w(g, sys, basis)?);
    }
    let mut to_hull: f64 = 0.0;
    for v in vertices {
        to_hull = to_hull.max(lpform::distance_to_hull(v, sample, basis)?);
    }
    Ok((to_w, to_hull))
}

fn dedup(measures: Vec<OccupationalMeasure>) -> Vec<OccupationalMeasure> {
    let mut out: Vec<OccupationalMeasure> = Vec::new();
    for m in measures {
        if !out.iter().any(|o| o.weights == m.weights) {
            out.push(m);
        }
    }
    out
}

/// Cap on the number of simple cycles enumerated as vertices of W.
pub const VERTEX_CAP: usize = 10_000;

/// Two-sided Hausdorff deviation between the convex hull of sampled
/// occupational measures and W at each grid point.
pub fn set_convergence_experiment(
    sys: &FiniteControlSystem,
    grid: &SweepGrid,
    sample: SampleSpec,
    basis: &TestFunctionBasis,
) -> Result<SweepResult, TauberianError> {
    let seed = match sample {
        SampleSpec::Random { seed, .. } => seed,
        SampleSpec::Exhaustive => 0,
    };
    let vertices = lpform::w_vertices(sys, VERTEX_CAP, seed)?;
    let draws = sample.draws(sys);
    let trajectories: Vec<(Trajectory, &Policy, usize)> = draws
        .iter()
        .map(|(p, y)| (Trajectory::from_policy(sys, p, *y), p, *y))
        .collect();
    let params: Vec<f64> = match grid {
        SweepGrid::Alpha(a) => {
            for &x in a {
                check_alpha(x)?;
            }
            a.clone()
        }
        SweepGrid::Horizon(s) => {
            if s.contains(&0) {
                return Err(TauberianError::BadParameter("horizons must be at least 1".into()));
            }
            s.iter().map(|&v| v as f64).collect()
        }
    };
    strictly_increasing(&params)?;
    let mut points = Vec::with_capacity(params.len());
    for (k, &param) in params.iter().enumerate() {
        let mut gammas = Vec::with_capacity(trajectories.len());
        for (traj, policy, y0) in &trajectories {
            let g = match grid {
                SweepGrid::Alpha(_) => measures::discounted_from_trajectory(sys.num_pairs(), traj, *y0, param),
                SweepGrid::Horizon(s) => {
                    let controls = measures::policy_controls(sys, policy, *y0, s[k]);
                    measures::horizon_occupational_measure(sys, &controls, *y0)?
                }
            };
            gammas.push(g);
        }
        let gammas = dedup(gammas);
        let (a, b) = set_deviation(sys, &gammas, &vertices, basis)?;
        let value = a.max(b);
        points.push(SweepPoint {
            parameter: param,
            value,
            reference: 0.0,
            abs_error: value,
        });
    }
    Ok(SweepResult { points })
}
