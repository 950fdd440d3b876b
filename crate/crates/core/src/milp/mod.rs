//! The dominant-structure optimization: exponent objective, feasible region,
//! mixed-integer model, branch-and-bound solve, uniqueness certification,
//! and an independent grid oracle.

pub mod branch;
pub mod model;
pub mod oracle;
pub mod simplex;

pub use model::{build_milp, MilpModel};
pub use oracle::{grid_oracle, GridSolution};
pub use simplex::{solve_lp, LinearProgram, LpError, LpOutcome, LpRow, Relation};

use crate::counting::Mode;
use crate::girg::Gamma;
use crate::pattern::{pair_index, pairs, Pattern};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fmt;
use std::time::Instant;

/// Largest pattern size the solver accepts (60 binaries at k = 6).
pub const MAX_SOLVE_K: usize = 6;
/// Branch-and-bound node budget per model solve.
pub const DEFAULT_NODE_BUDGET: u64 = 500_000;
/// Equality tolerance of the objective cut in the uniqueness loop.
pub const UNIQUENESS_CUT_TOL: f64 = 1e-7;
/// Coordinate tolerance when comparing optimizers in the uniqueness loop.
pub const UNIQUENESS_MATCH_TOL: f64 = 1e-6;
const EDGE_TERM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum MilpError {
    InvalidInstance(String),
    DimensionMismatch { expected: usize, got: usize },
    Lp(LpError),
    BudgetExceeded { nodes: u64 },
    NoFeasibleGridPoint,
    Internal(String),
}

impl fmt::Display for MilpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MilpError::InvalidInstance(msg) => write!(f, "invalid instance: {msg}"),
            MilpError::DimensionMismatch { expected, got } => {
                write!(f, "assignment has {got} entries, expected {expected}")
            }
            MilpError::Lp(e) => write!(f, "{e}"),
            MilpError::BudgetExceeded { nodes } => {
                write!(f, "search budget exceeded after {nodes} nodes")
            }
            MilpError::NoFeasibleGridPoint => write!(f, "no feasible lattice point"),
            MilpError::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for MilpError {}

impl From<LpError> for MilpError {
    fn from(e: LpError) -> Self {
        MilpError::Lp(e)
    }
}

/// A point in the feasible region: per-vertex weight exponents and per-pair
/// distance exponents (upper-triangular, row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Assignment {
    pub fn uniform(k: usize, alpha: f64, beta: f64) -> Self {
        Assignment {
            alpha: vec![alpha; k],
            beta: vec![beta; k * (k - 1) / 2],
        }
    }

    pub fn beta_at(&self, k: usize, i: usize, j: usize) -> f64 {
        self.beta[pair_index(k, i, j)]
    }

    fn close_to(&self, other: &Assignment, tol: f64) -> bool {
        self.alpha.len() == other.alpha.len()
            && self.beta.len() == other.beta.len()
            && self
                .alpha
                .iter()
                .zip(&other.alpha)
                .chain(self.beta.iter().zip(&other.beta))
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// One optimization problem: pattern plus model parameters and variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptInstance {
    pub pattern: Pattern,
    pub tau: f64,
    pub gamma: Gamma,
    pub dim: usize,
    pub variant: Mode,
}

impl OptInstance {
    pub fn validate(&self) -> Result<(), MilpError> {
        if !(self.tau > 2.0 && self.tau < 3.0) {
            return Err(MilpError::InvalidInstance(format!(
                "tau must be in (2,3), got {}",
                self.tau
            )));
        }
        if let Gamma::Finite(g) = self.gamma {
            if !(g > 1.0) {
                return Err(MilpError::InvalidInstance(format!(
                    "gamma must be > 1 or infinite, got {g}"
                )));
            }
        }
        if self.dim < 1 {
            return Err(MilpError::InvalidInstance("dimension must be >= 1".into()));
        }
        Ok(())
    }

    fn check_assignment(&self, a: &Assignment) -> Result<(), MilpError> {
        let k = self.pattern.k();
        if a.alpha.len() != k {
            return Err(MilpError::DimensionMismatch { expected: k, got: a.alpha.len() });
        }
        let m = k * (k - 1) / 2;
        if a.beta.len() != m {
            return Err(MilpError::DimensionMismatch { expected: m, got: a.beta.len() });
        }
        Ok(())
    }

    fn at_dim(&self, dim: usize) -> OptInstance {
        OptInstance { dim, ..self.clone() }
    }
}

/// Uniqueness verdict of the optimizer projection onto `(alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Uniqueness {
    #[serde(rename = "unique")]
    Unique,
    #[serde(rename = "non-unique")]
    NonUnique,
    #[serde(rename = "tolerance-ambiguous")]
    ToleranceAmbiguous,
}

impl fmt::Display for Uniqueness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Uniqueness::Unique => "unique",
            Uniqueness::NonUnique => "non-unique",
            Uniqueness::ToleranceAmbiguous => "tolerance-ambiguous",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iters: u64,
    pub ms: u128,
}

/// Solved outcome: the optimizer, the exponent `f* = k + objective`, the
/// uniqueness verdict, and the extreme alternates the certification loop
/// discovered (no completeness claim when the optimum is a continuum).
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub pattern: Pattern,
    pub tau: f64,
    pub gamma: Gamma,
    pub dim: usize,
    pub variant: Mode,
    pub f_star: f64,
    pub optimizer: Assignment,
    pub unique: Uniqueness,
    pub alternates: Vec<Assignment>,
    pub stats: SolveStats,
}

fn beta_triplets(k: usize, beta: &[f64]) -> Vec<serde_json::Value> {
    pairs(k)
        .into_iter()
        .map(|(i, j)| json!([i, j, beta[pair_index(k, i, j)]]))
        .collect()
}

impl SolveReport {
    pub fn to_json(&self) -> serde_json::Value {
        let k = self.pattern.k();
        json!({
            "pattern": self.pattern,
            "tau": self.tau,
            "gamma": self.gamma,
            "d": self.dim,
            "variant": self.variant,
            "f_star": self.f_star,
            "alpha": self.optimizer.alpha,
            "beta": beta_triplets(k, &self.optimizer.beta),
            "unique": self.unique,
            "alternates": self.alternates.iter().map(|a| json!({
                "alpha": a.alpha,
                "beta": beta_triplets(k, &a.beta),
            })).collect::<Vec<_>>(),
            "stats": {
                "nodes": self.stats.nodes,
                "lp_iters": self.stats.lp_iters,
                "ms": self.stats.ms,
            },
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, String> {
        let pattern: Pattern =
            serde_json::from_value(v["pattern"].clone()).map_err(|e| e.to_string())?;
        let k = pattern.k();
        let parse_assignment = |alpha: &serde_json::Value, beta: &serde_json::Value| -> Result<Assignment, String> {
            let alpha: Vec<f64> = serde_json::from_value(alpha.clone()).map_err(|e| e.to_string())?;
            let trips: Vec<(usize, usize, f64)> =
                serde_json::from_value(beta.clone()).map_err(|e| e.to_string())?;
            let mut b = vec![0.0; k * (k - 1) / 2];
            for (i, j, val) in trips {
                b[pair_index(k, i, j)] = val;
            }
            Ok(Assignment { alpha, beta: b })
        };
        let optimizer = parse_assignment(&v["alpha"], &v["beta"])?;
        let mut alternates = Vec::new();
        for alt in v["alternates"].as_array().cloned().unwrap_or_default() {
            alternates.push(parse_assignment(&alt["alpha"], &alt["beta"])?);
        }
        Ok(SolveReport {
            pattern,
            tau: v["tau"].as_f64().ok_or("missing tau")?,
            gamma: serde_json::from_value(v["gamma"].clone()).map_err(|e| e.to_string())?,
            dim: v["d"].as_u64().ok_or("missing d")? as usize,
            variant: serde_json::from_value(v["variant"].clone()).map_err(|e| e.to_string())?,
            f_star: v["f_star"].as_f64().ok_or("missing f_star")?,
            optimizer,
            unique: serde_json::from_value(v["unique"].clone()).map_err(|e| e.to_string())?,
            alternates,
            stats: serde_json::from_value(v["stats"].clone()).unwrap_or_default(),
        })
    }
}

/// The exponent of the expected in-class count: `k + (1-tau) sum alpha_i
/// + d sum_j min_{i<j} beta_ij + gamma sum_edges min(alpha_i + alpha_j
/// - d beta_ij - 1, 0)`. With the threshold kernel the edge sum is zero when
/// every edge term is nonnegative and minus infinity otherwise.
pub fn objective_f(inst: &OptInstance, a: &Assignment) -> Result<f64, MilpError> {
    inst.check_assignment(a)?;
    let k = inst.pattern.k();
    let d = inst.dim as f64;
    let mut value = k as f64 + (1.0 - inst.tau) * a.alpha.iter().sum::<f64>();
    for j in 2..=k {
        let min_beta = (1..j)
            .map(|i| a.beta_at(k, i, j))
            .fold(f64::INFINITY, f64::min);
        value += d * min_beta;
    }
    match inst.gamma {
        Gamma::Finite(g) => {
            for &(i, j) in inst.pattern.edges() {
                let term = a.alpha[i - 1] + a.alpha[j - 1] - d * a.beta_at(k, i, j) - 1.0;
                if term < 0.0 {
                    value += g * term;
                }
            }
        }
        Gamma::Infinite => {
            for &(i, j) in inst.pattern.edges() {
                let term = a.alpha[i - 1] + a.alpha[j - 1] - d * a.beta_at(k, i, j) - 1.0;
                if term < -EDGE_TERM_TOL {
                    return Ok(f64::NEG_INFINITY);
                }
            }
        }
    }
    Ok(value)
}

/// Box bounds, triangle-max rows, and (induced variant) non-edge rows, each
/// checked with slack `tol`.
pub fn is_feasible(inst: &OptInstance, a: &Assignment, tol: f64) -> bool {
    if inst.check_assignment(a).is_err() {
        return false;
    }
    let k = inst.pattern.k();
    let d = inst.dim as f64;
    let alpha_max = 1.0 / (inst.tau - 1.0);
    if a.alpha.iter().any(|&x| x < -tol || x > alpha_max + tol) {
        return false;
    }
    if a.beta.iter().any(|&b| b < -1.0 / d - tol || b > tol) {
        return false;
    }
    for (i, j) in pairs(k) {
        for s in 1..=k {
            if s == i || s == j {
                continue;
            }
            let lhs = a.beta_at(k, i, j);
            let rhs = a.beta_at(k, i, s).max(a.beta_at(k, j, s));
            if lhs > rhs + tol {
                return false;
            }
        }
    }
    if inst.variant == Mode::Induced {
        for (i, j) in pairs(k) {
            if !inst.pattern.has_edge(i, j)
                && a.alpha[i - 1] + a.alpha[j - 1] > 1.0 + d * a.beta_at(k, i, j) + tol
            {
                return false;
            }
        }
    }
    true
}

/// The conjectured finite value set for unique optimal weight exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaClass {
    /// alpha = 0
    Zero,
    /// alpha = (tau-2)/(tau-1)
    Intermediate,
    /// alpha = 1/2
    Half,
    /// alpha = 1/(tau-1)
    Maximal,
    Other,
}

impl AlphaClass {
    pub fn value(&self, tau: f64) -> Option<f64> {
        match self {
            AlphaClass::Zero => Some(0.0),
            AlphaClass::Intermediate => Some((tau - 2.0) / (tau - 1.0)),
            AlphaClass::Half => Some(0.5),
            AlphaClass::Maximal => Some(1.0 / (tau - 1.0)),
            AlphaClass::Other => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            AlphaClass::Zero => "0",
            AlphaClass::Intermediate => "(tau-2)/(tau-1)",
            AlphaClass::Half => "1/2",
            AlphaClass::Maximal => "1/(tau-1)",
            AlphaClass::Other => "other",
        }
    }
}

/// Nearest of `{0, (tau-2)/(tau-1), 1/2, 1/(tau-1)}` within `tol`, else Other.
pub fn classify_alpha_value(alpha: f64, tau: f64, tol: f64) -> AlphaClass {
    let classes = [
        AlphaClass::Zero,
        AlphaClass::Intermediate,
        AlphaClass::Half,
        AlphaClass::Maximal,
    ];
    let mut best = AlphaClass::Other;
    let mut best_dist = f64::INFINITY;
    for c in classes {
        let v = c.value(tau).unwrap();
        let dist = (alpha - v).abs();
        if dist < best_dist {
            best_dist = dist;
            best = c;
        }
    }
    if best_dist <= tol {
        best
    } else {
        AlphaClass::Other
    }
}

fn rescale_value(x: f64, d_from: usize, d_to: usize) -> f64 {
    if d_from == d_to || x == 0.0 {
        return x;
    }
    let num = d_from as f64;
    let den = d_to as f64;
    let y0 = x * num / den;
    // Prefer the representative whose inverse rescale recovers x exactly;
    // one always exists within a couple of ulps when magnitude shrinks.
    let mut candidates = [y0, y0, y0, y0, y0];
    candidates[1] = y0.next_up();
    candidates[2] = y0.next_down();
    candidates[3] = y0.next_up().next_up();
    candidates[4] = y0.next_down().next_down();
    for y in candidates {
        if y * den / num == x {
            return y;
        }
    }
    y0
}

/// Maps an optimizer between dimensions: alpha unchanged, beta scaled by
/// `d_from / d_to`. Round trips recover the input whenever the target
/// representation admits a preimage, and never drift past 1 ulp.
pub fn rescale_dimension(a: &Assignment, d_from: usize, d_to: usize) -> Assignment {
    Assignment {
        alpha: a.alpha.clone(),
        beta: a.beta.iter().map(|&b| rescale_value(b, d_from, d_to)).collect(),
    }
}

fn extract_assignment(model: &MilpModel, x: &[f64]) -> Assignment {
    let k = model.layout.k;
    let alpha = (1..=k).map(|i| x[model.layout.alpha(i)]).collect();
    let beta = pairs(k)
        .into_iter()
        .map(|(i, j)| x[model.layout.beta(i, j)])
        .collect();
    Assignment { alpha, beta }
}

fn uniqueness_cut_rows(model: &MilpModel, z_star: f64) -> Vec<(Vec<(usize, f64)>, Relation, f64)> {
    // A hard equality row: basic solutions keep it tight to roundoff, so the
    // re-solves cannot drift along the objective and fake an alternate. The
    // simplex accepts residues up to its feasibility tolerance, well inside
    // the documented equality tolerance.
    let obj: Vec<(usize, f64)> = model
        .objective
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c != 0.0)
        .map(|(v, &c)| (v, c))
        .collect();
    vec![(obj, Relation::Eq, z_star)]
}

fn uniqueness_loop(
    model: &MilpModel,
    z_star: f64,
    reference: &Assignment,
    node_budget: u64,
) -> Result<(Uniqueness, Vec<Assignment>, branch::BbStats), MilpError> {
    let cut = uniqueness_cut_rows(model, z_star);
    let k = model.layout.k;
    let total = model.layout.total();

    let mut targets: Vec<usize> = (1..=k).map(|i| model.layout.alpha(i)).collect();
    targets.extend(pairs(k).into_iter().map(|(i, j)| model.layout.beta(i, j)));

    let runs: Vec<Result<(Option<Assignment>, branch::BbStats), MilpError>> = targets
        .par_iter()
        .flat_map(|&var| [(var, 1.0), (var, -1.0)])
        .map(|(var, sigma)| {
            let mut objective = vec![0.0; total];
            objective[var] = sigma;
            let (sol, stats) = branch::solve_milp(model, &objective, &cut, node_budget)?;
            Ok((sol.map(|s| extract_assignment(model, &s.x)), stats))
        })
        .collect();

    let mut ambiguous = false;
    let mut alternates: Vec<Assignment> = Vec::new();
    let mut total_stats = branch::BbStats::default();
    for run in runs {
        let (found, stats) = run?;
        total_stats.nodes += stats.nodes;
        total_stats.lp_iterations += stats.lp_iterations;
        match found {
            None => ambiguous = true,
            Some(found) => {
                if !found.close_to(reference, UNIQUENESS_MATCH_TOL)
                    && !alternates.iter().any(|a| a.close_to(&found, UNIQUENESS_MATCH_TOL))
                {
                    alternates.push(found);
                }
            }
        }
    }
    let verdict = if ambiguous {
        Uniqueness::ToleranceAmbiguous
    } else if alternates.is_empty() {
        Uniqueness::Unique
    } else {
        Uniqueness::NonUnique
    };
    Ok((verdict, alternates, total_stats))
}

/// Solves the model to global optimality and certifies uniqueness.
///
/// Internally the model is solved in its dimension-1 normalization and the
/// optimizer rescaled back, so results agree across dimensions down to the
/// representation of `beta`. Nodes and LP iterations cover the whole call,
/// certification loop included.
pub fn solve_instance(inst: &OptInstance) -> Result<SolveReport, MilpError> {
    solve_instance_with(inst, DEFAULT_NODE_BUDGET)
}

pub fn solve_instance_with(inst: &OptInstance, node_budget: u64) -> Result<SolveReport, MilpError> {
    inst.validate()?;
    let k = inst.pattern.k();
    if k > MAX_SOLVE_K {
        return Err(MilpError::InvalidInstance(format!(
            "pattern size {k} exceeds the solver bound {MAX_SOLVE_K}"
        )));
    }
    let start = Instant::now();
    let normalized = inst.at_dim(1);
    let model = build_milp(&normalized);
    let (sol, mut stats) = branch::solve_milp(&model, &model.objective, &[], node_budget)?;
    let sol = sol.ok_or_else(|| {
        MilpError::Internal("model reported infeasible, but the box corners are feasible".into())
    })?;
    let reference = extract_assignment(&model, &sol.x);
    let f_star = k as f64 + sol.objective;

    let (unique, alternates_d1, loop_stats) =
        uniqueness_loop(&model, sol.objective, &reference, node_budget)?;
    stats.nodes += loop_stats.nodes;
    stats.lp_iterations += loop_stats.lp_iterations;

    let optimizer = rescale_dimension(&reference, 1, inst.dim);
    let alternates = alternates_d1
        .iter()
        .map(|a| rescale_dimension(a, 1, inst.dim))
        .collect();

    debug_assert!(is_feasible(inst, &optimizer, 1e-7));

    Ok(SolveReport {
        pattern: inst.pattern.clone(),
        tau: inst.tau,
        gamma: inst.gamma,
        dim: inst.dim,
        variant: inst.variant,
        f_star,
        optimizer,
        unique,
        alternates,
        stats: SolveStats {
            nodes: stats.nodes,
            lp_iters: stats.lp_iterations,
            ms: start.elapsed().as_millis(),
        },
    })
}

/// Re-derives the optimizer on the optimal face and runs the certification
/// loop: maximize and minimize every alpha and beta coordinate subject to the
/// objective pinned at `f_star - k`; unique iff every re-solve returns the
/// reference point.
pub fn check_uniqueness(
    inst: &OptInstance,
    f_star: f64,
) -> Result<(Uniqueness, Vec<Assignment>), MilpError> {
    inst.validate()?;
    let normalized = inst.at_dim(1);
    let model = build_milp(&normalized);
    let z_star = f_star - inst.pattern.k() as f64;
    let cut = uniqueness_cut_rows(&model, z_star);
    let (base, _) = branch::solve_milp(&model, &model.objective, &cut, DEFAULT_NODE_BUDGET)?;
    let Some(base) = base else {
        return Ok((Uniqueness::ToleranceAmbiguous, Vec::new()));
    };
    let reference = extract_assignment(&model, &base.x);
    let (verdict, alternates_d1, _) =
        uniqueness_loop(&model, z_star, &reference, DEFAULT_NODE_BUDGET)?;
    Ok((
        verdict,
        alternates_d1
            .iter()
            .map(|a| rescale_dimension(a, 1, inst.dim))
            .collect(),
    ))
}

#[cfg(test)]
mod tests;
