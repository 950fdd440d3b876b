//! Dense two-phase primal simplex over rows `a.x <= b` / `a.x = b`, `x >= 0`.
//!
//! Sized for the models this crate builds (at most a couple hundred rows and
//! columns). Dantzig pricing with a permanent switch to Bland's rule once the
//! objective stalls, so the solver cannot cycle.

use std::fmt;

const PIVOT_TOL: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-7;
const STALL_LIMIT: u64 = 256;
const MAX_ITERATIONS: u64 = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rel: Relation,
    pub rhs: f64,
}

/// Maximize `objective . x` subject to the rows and `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Basic optimal solution, one value per structural variable.
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: u64,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpError {
    /// No finite optimum; the models here are boxed, so this flags a bug.
    Unbounded,
    /// Iteration cap hit; carries where the solver was when it gave up.
    Stalled { phase: u8, iterations: u64, objective: f64 },
    BadShape(String),
}

impl fmt::Display for LpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpError::Unbounded => write!(f, "LP is unbounded"),
            LpError::Stalled { phase, iterations, objective } => write!(
                f,
                "simplex stalled in phase {phase} after {iterations} iterations (objective {objective})"
            ),
            LpError::BadShape(msg) => write!(f, "bad LP shape: {msg}"),
        }
    }
}

impl std::error::Error for LpError {}

struct Tableau {
    m: usize,
    cols: usize,
    n_structural: usize,
    first_artificial: usize,
    /// Row-major `m x cols` constraint body.
    a: Vec<f64>,
    b: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced-cost row and current objective value.
    z: Vec<f64>,
    z_value: f64,
    iterations: u64,
    bland: bool,
    stall: u64,
    best_seen: f64,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let cols = self.cols;
        let inv = 1.0 / self.a[row * cols + col];
        for c in 0..cols {
            self.a[row * cols + c] *= inv;
        }
        self.b[row] *= inv;
        self.a[row * cols + col] = 1.0;
        for r in 0..self.m {
            if r == row {
                continue;
            }
            let factor = self.a[r * cols + col];
            if factor != 0.0 {
                for c in 0..cols {
                    self.a[r * cols + c] -= factor * self.a[row * cols + c];
                }
                self.b[r] -= factor * self.b[row];
                self.a[r * cols + col] = 0.0;
            }
        }
        let zf = self.z[col];
        if zf != 0.0 {
            for c in 0..cols {
                self.z[c] -= zf * self.a[row * cols + c];
            }
            self.z_value += zf * self.b[row];
            self.z[col] = 0.0;
        }
        self.basis[row] = col;
        self.iterations += 1;
    }

    /// Rebuilds the reduced-cost row for the given maximization costs.
    fn price(&mut self, costs: &[f64]) {
        self.z[..costs.len()].copy_from_slice(costs);
        for c in costs.len()..self.cols {
            self.z[c] = 0.0;
        }
        self.z_value = 0.0;
        for r in 0..self.m {
            let cb = if self.basis[r] < costs.len() { costs[self.basis[r]] } else { 0.0 };
            if cb != 0.0 {
                for c in 0..self.cols {
                    self.z[c] -= cb * self.at(r, c);
                }
                self.z_value += cb * self.b[r];
            }
        }
        // Basis columns price to exactly zero.
        for r in 0..self.m {
            self.z[self.basis[r]] = 0.0;
        }
    }

    fn entering(&self, allow_artificial: bool) -> Option<usize> {
        let limit = if allow_artificial { self.cols } else { self.first_artificial };
        if self.bland {
            (0..limit).find(|&c| self.z[c] > PIVOT_TOL)
        } else {
            let mut best = None;
            let mut best_val = PIVOT_TOL;
            for c in 0..limit {
                if self.z[c] > best_val {
                    best_val = self.z[c];
                    best = Some(c);
                }
            }
            best
        }
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.m {
            let a = self.at(r, col);
            if a > RATIO_TOL {
                let ratio = self.b[r] / a;
                match best {
                    None => best = Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio - RATIO_TOL
                            || ((ratio - bratio).abs() <= RATIO_TOL && self.basis[r] < self.basis[br])
                        {
                            best = Some((r, ratio));
                        }
                    }
                }
            }
        }
        best.map(|(r, _)| r)
    }

    fn run(&mut self, phase: u8, allow_artificial: bool) -> Result<(), LpError> {
        self.bland = false;
        self.stall = 0;
        self.best_seen = self.z_value;
        loop {
            let Some(col) = self.entering(allow_artificial) else {
                return Ok(());
            };
            let Some(row) = self.leaving(col) else {
                return Err(LpError::Unbounded);
            };
            self.pivot(row, col);
            if self.iterations > MAX_ITERATIONS {
                return Err(LpError::Stalled {
                    phase,
                    iterations: self.iterations,
                    objective: self.z_value,
                });
            }
            if self.z_value > self.best_seen + 1e-12 {
                self.best_seen = self.z_value;
                self.stall = 0;
            } else {
                self.stall += 1;
                if self.stall > STALL_LIMIT {
                    self.bland = true;
                }
            }
        }
    }
}

/// Solves the LP, returning a basic optimal solution or infeasibility.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    let n = lp.num_vars;
    if lp.objective.len() != n {
        return Err(LpError::BadShape(format!(
            "objective has {} coefficients for {n} variables",
            lp.objective.len()
        )));
    }
    let m = lp.rows.len();

    // Normalize rows to nonnegative rhs, flipping Le rows into surplus form
    // where needed. slack_sign: +1 slack, -1 surplus, 0 none (equality).
    let mut body: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut slack_sign = Vec::with_capacity(m);
    for row in &lp.rows {
        for &(c, _) in &row.coeffs {
            if c >= n {
                return Err(LpError::BadShape(format!("coefficient on variable {c} out of range")));
            }
        }
        let flip = row.rhs < 0.0;
        let sign = if flip { -1.0 } else { 1.0 };
        body.push(row.coeffs.iter().map(|&(c, v)| (c, sign * v)).collect());
        rhs.push(sign * row.rhs);
        slack_sign.push(match (row.rel, flip) {
            (Relation::Le, false) => 1i8,
            (Relation::Le, true) => -1,
            (Relation::Eq, _) => 0,
        });
    }

    let n_slack = slack_sign.iter().filter(|&&s| s != 0).count();
    let needs_artificial: Vec<bool> = slack_sign.iter().map(|&s| s != 1).collect();
    let n_art = needs_artificial.iter().filter(|&&x| x).count();
    let cols = n + n_slack + n_art;

    let mut t = Tableau {
        m,
        cols,
        n_structural: n,
        first_artificial: n + n_slack,
        a: vec![0.0; m * cols],
        b: rhs,
        basis: vec![0; m],
        z: vec![0.0; cols],
        z_value: 0.0,
        iterations: 0,
        bland: false,
        stall: 0,
        best_seen: 0.0,
    };

    let mut slack_at = n;
    let mut art_at = n + n_slack;
    for r in 0..m {
        for &(c, v) in &body[r] {
            t.a[r * cols + c] += v;
        }
        if slack_sign[r] != 0 {
            t.a[r * cols + slack_at] = slack_sign[r] as f64;
            if slack_sign[r] == 1 {
                t.basis[r] = slack_at;
            }
            slack_at += 1;
        }
        if needs_artificial[r] {
            t.a[r * cols + art_at] = 1.0;
            t.basis[r] = art_at;
            art_at += 1;
        }
    }

    if n_art > 0 {
        let mut costs = vec![0.0; cols];
        for c in t.first_artificial..cols {
            costs[c] = -1.0;
        }
        t.price(&costs);
        t.run(1, true)?;
        if t.z_value < -FEAS_TOL {
            return Ok(LpOutcome::Infeasible);
        }
        // Pivot basic artificials out on any usable column; rows that stay
        // artificial are all-zero outside the artificial block and inert.
        for r in 0..m {
            if t.basis[r] >= t.first_artificial {
                if let Some(col) =
                    (0..t.first_artificial).find(|&c| t.at(r, c).abs() > FEAS_TOL)
                {
                    t.pivot(r, col);
                }
            }
        }
    }

    let mut costs = vec![0.0; cols];
    costs[..n].copy_from_slice(&lp.objective);
    t.price(&costs);
    t.run(2, false)?;

    let mut x = vec![0.0; n];
    for r in 0..m {
        if t.basis[r] < t.n_structural {
            x[t.basis[r]] = t.b[r];
        }
    }
    Ok(LpOutcome::Optimal(LpSolution {
        x,
        value: t.z_value,
        iterations: t.iterations,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(coeffs: Vec<(usize, f64)>, rhs: f64) -> LpRow {
        LpRow { coeffs, rel: Relation::Le, rhs }
    }

    #[test]
    fn box_with_cut() {
        let lp = LinearProgram {
            num_vars: 1,
            objective: vec![1.0],
            rows: vec![le(vec![(0, 1.0)], 10.0), le(vec![(0, 1.0)], 1.0)],
        };
        match solve_lp(&lp).unwrap() {
            LpOutcome::Optimal(s) => {
                assert!((s.value - 1.0).abs() < 1e-9);
                assert!((s.x[0] - 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_optimum_is_a_vertex() {
        let lp = LinearProgram {
            num_vars: 2,
            objective: vec![1.0, 1.0],
            rows: vec![le(vec![(0, 1.0), (1, 1.0)], 1.0)],
        };
        match solve_lp(&lp).unwrap() {
            LpOutcome::Optimal(s) => {
                assert!((s.value - 1.0).abs() < 1e-9);
                let vertex = (s.x[0].abs() < 1e-9 && (s.x[1] - 1.0).abs() < 1e-9)
                    || (s.x[1].abs() < 1e-9 && (s.x[0] - 1.0).abs() < 1e-9);
                assert!(vertex, "not a vertex: {:?}", s.x);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_box() {
        let lp = LinearProgram {
            num_vars: 1,
            objective: vec![1.0],
            rows: vec![le(vec![(0, 1.0)], -1.0)],
        };
        assert!(matches!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible));
    }

    #[test]
    fn equality_rows() {
        // max x + 2y s.t. x + y = 1, y <= 0.4
        let lp = LinearProgram {
            num_vars: 2,
            objective: vec![1.0, 2.0],
            rows: vec![
                LpRow { coeffs: vec![(0, 1.0), (1, 1.0)], rel: Relation::Eq, rhs: 1.0 },
                le(vec![(1, 1.0)], 0.4),
            ],
        };
        match solve_lp(&lp).unwrap() {
            LpOutcome::Optimal(s) => {
                assert!((s.value - 1.4).abs() < 1e-9);
                assert!((s.x[0] - 0.6).abs() < 1e-9 && (s.x[1] - 0.4).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_rhs_ge_form() {
        // max -x s.t. x >= 2 (written as -x <= -2), x <= 5.
        let lp = LinearProgram {
            num_vars: 1,
            objective: vec![-1.0],
            rows: vec![le(vec![(0, -1.0)], -2.0), le(vec![(0, 1.0)], 5.0)],
        };
        match solve_lp(&lp).unwrap() {
            LpOutcome::Optimal(s) => {
                assert!((s.x[0] - 2.0).abs() < 1e-9);
                assert!((s.value + 2.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_detected() {
        let lp = LinearProgram {
            num_vars: 2,
            objective: vec![1.0, 0.0],
            rows: vec![le(vec![(1, 1.0)], 1.0)],
        };
        assert_eq!(solve_lp(&lp).unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn infeasible_equality_system() {
        let lp = LinearProgram {
            num_vars: 2,
            objective: vec![0.0, 0.0],
            rows: vec![
                LpRow { coeffs: vec![(0, 1.0), (1, 1.0)], rel: Relation::Eq, rhs: 1.0 },
                LpRow { coeffs: vec![(0, 1.0), (1, 1.0)], rel: Relation::Eq, rhs: 2.0 },
            ],
        };
        assert!(matches!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible));
    }
}
