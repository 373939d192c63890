//! Dense revised simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0`.
//!
//! Two phases with one artificial variable per row, Bland's rule for both the
//! entering and the leaving variable, and an explicit basis inverse updated by
//! elementary row operations and refactorized periodically. Optimal solutions
//! are vertices and come with the dual vector `y` of `max bᵀy  s.t.  Aᵀy ≤ c`.
//!
//! Tolerance ladder (the only place these numbers live):
//! feasibility `1e-9·(1 + ‖b‖∞)`, nonnegativity `-1e-9`, dual feasibility
//! `1e-9·(1 + ‖c‖∞)`, complementary slackness `1e-9`, duality gap
//! `1e-8·(1 + |cᵀx|)`.

use std::fmt::Write as _;

use crate::error::LpError;
use crate::report::{Report, ReportRecord};

pub const PRIMAL_TOL: f64 = 1e-9;
pub const NONNEG_TOL: f64 = 1e-9;
pub const DUAL_TOL: f64 = 1e-9;
pub const SLACKNESS_TOL: f64 = 1e-9;
pub const GAP_TOL: f64 = 1e-8;

const PIVOT_TOL: f64 = 1e-9;
const PRICE_TOL: f64 = 1e-10;
const REFACTOR_EVERY: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct StandardFormLP {
    pub c: Vec<f64>,
    /// Row-major, `m` rows of length `n`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl StandardFormLP {
    pub fn new(c: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self, LpError> {
        let lp = Self { c, a, b };
        lp.check()?;
        Ok(lp)
    }

    pub fn rows(&self) -> usize {
        self.b.len()
    }

    pub fn cols(&self) -> usize {
        self.c.len()
    }

    pub fn check(&self) -> Result<(), LpError> {
        if self.a.len() != self.b.len() {
            return Err(LpError::Dimension(format!("{} rows in A, {} entries in b", self.a.len(), self.b.len())));
        }
        if let Some(i) = self.a.iter().position(|r| r.len() != self.c.len()) {
            return Err(LpError::Dimension(format!(
                "row {i} of A has {} entries, c has {}",
                self.a[i].len(),
                self.c.len()
            )));
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("c"));
        }
        if self.b.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("b"));
        }
        if self.a.iter().flatten().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("A"));
        }
        Ok(())
    }

    /// Plain-text dump: `rows m cols n`, then `b`, `c`, and `A` row by row.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let line = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(out, "rows {} cols {}", self.rows(), self.cols()).unwrap();
        writeln!(out, "{}", line(&self.b)).unwrap();
        writeln!(out, "{}", line(&self.c)).unwrap();
        for row in &self.a {
            writeln!(out, "{}", line(row)).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LpError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| LpError::Parse("empty input".into()))?;
        let words: Vec<&str> = header.split_whitespace().collect();
        let (m, n) = match words.as_slice() {
            ["rows", m, "cols", n] => (
                m.parse::<usize>().map_err(|e| LpError::Parse(format!("rows: {e}")))?,
                n.parse::<usize>().map_err(|e| LpError::Parse(format!("cols: {e}")))?,
            ),
            _ => return Err(LpError::Parse(format!("bad header {header:?}"))),
        };
        let mut vector = |what: &str, len: usize| -> Result<Vec<f64>, LpError> {
            let l = lines.next().unwrap_or("");
            let v = l
                .split_whitespace()
                .map(|w| w.parse::<f64>().map_err(|e| LpError::Parse(format!("{what}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if v.len() != len {
                return Err(LpError::Parse(format!("{what}: expected {len} numbers, got {}", v.len())));
            }
            Ok(v)
        };
        let b = vector("b", m)?;
        let c = vector("c", n)?;
        let a = (0..m).map(|i| vector(&format!("A row {i}"), n)).collect::<Result<Vec<_>, _>>()?;
        Self::new(c, a, b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LPSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
    /// Column indices of the final basis (original variables only).
    pub basis: Vec<usize>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub slackness_residual: f64,
}

impl LPSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn dual_objective(&self, lp: &StandardFormLP) -> f64 {
        dot(&lp.b, &self.y)
    }
}

/// One simplex pivot, for tracing and reproducibility checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Pivot {
    pub phase: u8,
    pub entering: usize,
    pub leaving: usize,
    /// Values of the original variables after the pivot.
    pub x: Vec<f64>,
}

pub fn solve(lp: &StandardFormLP) -> Result<LPSolution, LpError> {
    Simplex::new(lp)?.run(None)
}

/// Like [`solve`] but also returns every pivot taken.
pub fn solve_traced(lp: &StandardFormLP) -> Result<(LPSolution, Vec<Pivot>), LpError> {
    let mut trace = Vec::new();
    let sol = Simplex::new(lp)?.run(Some(&mut trace))?;
    Ok((sol, trace))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

struct Simplex<'a> {
    lp: &'a StandardFormLP,
    m: usize,
    n: usize,
    /// Row signs making the working right-hand side nonnegative.
    sign: Vec<f64>,
    rhs: Vec<f64>,
    /// Basic variable per row; ids `>= n` are artificials.
    basis: Vec<usize>,
    binv: Vec<Vec<f64>>,
    xb: Vec<f64>,
    since_refactor: usize,
}

impl<'a> Simplex<'a> {
    fn new(lp: &'a StandardFormLP) -> Result<Self, LpError> {
        lp.check()?;
        let m = lp.rows();
        let n = lp.cols();
        let sign: Vec<f64> = lp.b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let rhs: Vec<f64> = lp.b.iter().zip(&sign).map(|(v, s)| v * s).collect();
        let binv = (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        Ok(Self {
            lp,
            m,
            n,
            xb: rhs.clone(),
            sign,
            rhs,
            basis: (n..n + m).collect(),
            binv,
            since_refactor: 0,
        })
    }

    /// Entry `i` of working column `j` (sign-adjusted, artificials are unit columns).
    fn entry(&self, i: usize, j: usize) -> f64 {
        if j < self.n {
            self.sign[i] * self.lp.a[i][j]
        } else if j - self.n == i {
            1.0
        } else {
            0.0
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        // B⁻¹ a_j
        (0..self.m)
            .map(|r| (0..self.m).map(|k| self.binv[r][k] * self.entry(k, j)).sum())
            .collect()
    }

    fn duals(&self, cost: &dyn Fn(usize) -> f64) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&j| cost(j)).collect();
        (0..self.m)
            .map(|k| (0..self.m).map(|r| cb[r] * self.binv[r][k]).sum())
            .collect()
    }

    fn reduced_cost(&self, j: usize, y: &[f64], cost: &dyn Fn(usize) -> f64) -> f64 {
        cost(j) - (0..self.m).map(|i| y[i] * self.entry(i, j)).sum::<f64>()
    }

    fn pivot(&mut self, row: usize, entering: usize, col: &[f64]) {
        let p = col[row];
        for k in 0..self.m {
            self.binv[row][k] /= p;
        }
        self.xb[row] /= p;
        for r in 0..self.m {
            if r != row && col[r] != 0.0 {
                let f = col[r];
                for k in 0..self.m {
                    self.binv[r][k] -= f * self.binv[row][k];
                }
                self.xb[r] -= f * self.xb[row];
            }
        }
        self.basis[row] = entering;
        self.since_refactor += 1;
    }

    /// Recomputes B⁻¹ and x_B from scratch by Gauss–Jordan elimination.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut aug: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut row: Vec<f64> = self.basis.iter().map(|&j| self.entry(i, j)).collect();
                row.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
                row
            })
            .collect();
        for c in 0..m {
            let piv = (c..m)
                .max_by(|&r, &s| aug[r][c].abs().total_cmp(&aug[s][c].abs()))
                .expect("nonempty range");
            if aug[piv][c].abs() < 1e-12 {
                return Err(LpError::NumericalFailure(format!("singular basis at column {c}")));
            }
            aug.swap(c, piv);
            let p = aug[c][c];
            for v in aug[c].iter_mut() {
                *v /= p;
            }
            for r in 0..m {
                if r != c && aug[r][c] != 0.0 {
                    let f = aug[r][c];
                    for k in 0..2 * m {
                        aug[r][k] -= f * aug[c][k];
                    }
                }
            }
        }
        self.binv = aug.into_iter().map(|row| row[m..].to_vec()).collect();
        self.xb = (0..m).map(|r| dot(&self.binv[r], &self.rhs)).collect();
        self.since_refactor = 0;
        Ok(())
    }

    fn original_x(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (r, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = self.xb[r];
            }
        }
        x
    }

    /// Runs simplex iterations for one phase. Returns `false` on unboundedness.
    fn iterate(
        &mut self,
        phase: u8,
        cost: &dyn Fn(usize) -> f64,
        trace: &mut Option<&mut Vec<Pivot>>,
    ) -> Result<bool, LpError> {
        let limit = 50 * (self.m + self.n) + 10_000;
        let allow_artificial = phase == 1;
        for _ in 0..limit {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let y = self.duals(cost);
            let in_basis = |j: usize, basis: &[usize]| basis.contains(&j);
            let total = if allow_artificial { self.n + self.m } else { self.n };
            // Bland: smallest index with negative reduced cost.
            let entering = (0..total)
                .find(|&j| !in_basis(j, &self.basis) && self.reduced_cost(j, &y, cost) < -PRICE_TOL);
            let Some(entering) = entering else {
                return Ok(true);
            };
            let col = self.column(entering);
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                if col[r] > PIVOT_TOL {
                    let ratio = self.xb[r].max(0.0) / col[r];
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            if ratio < lratio && !tie || tie && self.basis[r] < self.basis[lr] {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            let leaving = self.basis[row];
            self.pivot(row, entering, &col);
            if let Some(t) = trace.as_deref_mut() {
                t.push(Pivot {
                    phase,
                    entering,
                    leaving,
                    x: self.original_x(),
                });
            }
        }
        Err(LpError::NumericalFailure(format!("no convergence in {limit} pivots")))
    }

    fn run(mut self, mut trace: Option<&mut Vec<Pivot>>) -> Result<LPSolution, LpError> {
        let n = self.n;
        let m = self.m;
        let bscale = 1.0 + sup(&self.lp.b);

        let phase1 = |j: usize| if j >= n { 1.0 } else { 0.0 };
        self.iterate(1, &phase1, &mut trace)?;
        self.refactor()?;
        let infeas: f64 = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(&j, _)| j >= n)
            .map(|(_, v)| v.abs())
            .sum();
        if infeas > PRIMAL_TOL * bscale {
            return Ok(self.finish(LpStatus::Infeasible));
        }

        // Drive remaining (zero-valued) artificials out of the basis where possible.
        for r in 0..m {
            if self.basis[r] < n {
                continue;
            }
            let mut replacement = None;
            for j in 0..n {
                if self.basis.contains(&j) {
                    continue;
                }
                let v: f64 = (0..m).map(|k| self.binv[r][k] * self.entry(k, j)).sum();
                if v.abs() > PIVOT_TOL {
                    replacement = Some(j);
                    break;
                }
            }
            if let Some(j) = replacement {
                let col = self.column(j);
                let leaving = self.basis[r];
                self.pivot(r, j, &col);
                if let Some(t) = trace.as_deref_mut() {
                    t.push(Pivot {
                        phase: 1,
                        entering: j,
                        leaving,
                        x: self.original_x(),
                    });
                }
            }
        }
        self.refactor()?;

        let c = &self.lp.c;
        let phase2 = |j: usize| if j < n { c[j] } else { 0.0 };
        let bounded = self.iterate(2, &phase2, &mut trace)?;
        self.refactor()?;
        Ok(self.finish(if bounded { LpStatus::Optimal } else { LpStatus::Unbounded }))
    }

    fn finish(&self, status: LpStatus) -> LPSolution {
        let lp = self.lp;
        if status != LpStatus::Optimal {
            return LPSolution {
                status,
                x: Vec::new(),
                y: Vec::new(),
                objective: match status {
                    LpStatus::Unbounded => f64::NEG_INFINITY,
                    _ => f64::INFINITY,
                },
                basis: Vec::new(),
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
                slackness_residual: f64::NAN,
            };
        }
        let n = self.n;
        let mut x = self.original_x();
        for v in x.iter_mut() {
            // clamp rounding noise below zero
            if *v < 0.0 && *v > -NONNEG_TOL {
                *v = 0.0;
            }
        }
        let c = &lp.c;
        let cost = |j: usize| if j < n { c[j] } else { 0.0 };
        let yw = self.duals(&cost);
        let y: Vec<f64> = yw.iter().zip(&self.sign).map(|(v, s)| v * s).collect();
        let res = residuals(lp, &x, &y);
        let mut basis: Vec<usize> = self.basis.iter().copied().filter(|&j| j < n).collect();
        basis.sort_unstable();
        LPSolution {
            status,
            objective: dot(c, &x),
            x,
            y,
            basis,
            primal_residual: res.primal,
            dual_residual: res.dual,
            slackness_residual: res.slackness,
        }
    }
}

struct Residuals {
    primal: f64,
    dual: f64,
    slackness: f64,
}

fn residuals(lp: &StandardFormLP, x: &[f64], y: &[f64]) -> Residuals {
    let primal = lp
        .a
        .iter()
        .zip(&lp.b)
        .map(|(row, bi)| (dot(row, x) - bi).abs())
        .fold(0.0, f64::max);
    let mut dual: f64 = 0.0;
    let mut slackness: f64 = 0.0;
    for j in 0..lp.cols() {
        let aty: f64 = (0..lp.rows()).map(|i| lp.a[i][j] * y[i]).sum();
        let reduced = lp.c[j] - aty;
        dual = dual.max(-reduced);
        slackness = slackness.max((x[j] * reduced).abs());
    }
    Residuals { primal, dual, slackness }
}

/// Recomputes every optimality certificate from `(lp, sol.x, sol.y)` alone.
pub fn check_certificates(lp: &StandardFormLP, sol: &LPSolution) -> Report {
    let mut report = Report::default();
    if sol.x.len() != lp.cols() || sol.y.len() != lp.rows() {
        report.push(ReportRecord::at_most("dimensions", 1.0, 0.0));
        return report;
    }
    let res = residuals(lp, &sol.x, &sol.y);
    let min_x = sol.x.iter().copied().fold(0.0, f64::min);
    let primal_obj = dot(&lp.c, &sol.x);
    let dual_obj = dot(&lp.b, &sol.y);
    report.push(ReportRecord::at_least("nonnegativity", min_x, -NONNEG_TOL));
    report.push(ReportRecord::at_most(
        "primal_residual",
        res.primal,
        PRIMAL_TOL * (1.0 + sup(&lp.b)),
    ));
    report.push(ReportRecord::at_most(
        "dual_residual",
        res.dual,
        DUAL_TOL * (1.0 + sup(&lp.c)),
    ));
    report.push(ReportRecord::at_most("complementary_slackness", res.slackness, SLACKNESS_TOL));
    report.push(ReportRecord::at_most(
        "duality_gap",
        (primal_obj - dual_obj).abs(),
        GAP_TOL * (1.0 + primal_obj.abs()),
    ));
    report
}
