//! Exact ordered subgraph counts, totally and restricted to weight/distance
//! classes, plus the degree-filtered approximate count.
//!
//! Counts follow the ordered convention: the number of injective k-tuples
//! whose induced host graph contains (general) or equals (induced) the
//! pattern. Unordered embeddings are the ordered count divided by the
//! pattern's automorphism count.

use crate::girg::{Graph, GirgGraph};
use crate::pattern::{connected_ordering, pair_index, Pattern, PatternError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    General,
    Induced,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::General => f.write_str("general"),
            Mode::Induced => f.write_str("induced"),
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "general" | "sub" | "subgraph" => Ok(Mode::General),
            "induced" | "ind" => Ok(Mode::Induced),
            other => Err(format!("not a counting mode: {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CountError {
    Pattern(PatternError),
    PatternLargerThanHost { k: usize, n: usize },
    RepeatedVertex(usize),
    SpecShape(String),
    Overflow,
}

impl fmt::Display for CountError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountError::Pattern(e) => write!(f, "{e}"),
            CountError::PatternLargerThanHost { k, n } => {
                write!(f, "pattern has {k} vertices but host only {n}")
            }
            CountError::RepeatedVertex(v) => write!(f, "vertex {v} repeated in tuple"),
            CountError::SpecShape(msg) => write!(f, "bad class spec: {msg}"),
            CountError::Overflow => write!(f, "count exceeds 64 bits"),
        }
    }
}

impl std::error::Error for CountError {}

impl From<PatternError> for CountError {
    fn from(e: PatternError) -> Self {
        CountError::Pattern(e)
    }
}

/// The class of k-tuples whose weights scale as `n^{alpha_i}` and pairwise
/// distances as `n^{beta_ij}`, with multiplicative window `eps`.
///
/// Windows are half-open, `[eps n^zeta, n^zeta / eps)`, so that log-spaced
/// covers partition exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexClassSpec {
    pub alpha: Vec<f64>,
    /// Upper-triangular, row-major: `(1,2), (1,3), ..., (2,3), ...`.
    pub beta: Vec<f64>,
    pub eps: f64,
}

impl VertexClassSpec {
    pub fn validate(&self, k: usize) -> Result<(), CountError> {
        if self.alpha.len() != k {
            return Err(CountError::SpecShape(format!(
                "alpha has {} entries, expected {k}",
                self.alpha.len()
            )));
        }
        if self.beta.len() != k * (k - 1) / 2 {
            return Err(CountError::SpecShape(format!(
                "beta has {} entries, expected {}",
                self.beta.len(),
                k * (k - 1) / 2
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(CountError::SpecShape(format!("eps must be in (0,1), got {}", self.eps)));
        }
        if self.alpha.iter().chain(&self.beta).any(|v| !v.is_finite()) {
            return Err(CountError::SpecShape("exponents must be finite".into()));
        }
        Ok(())
    }

    fn window(&self, n: f64, zeta: f64) -> (f64, f64) {
        let scale = n.powf(zeta);
        (self.eps * scale, scale / self.eps)
    }

    fn in_window(&self, n: f64, zeta: f64, x: f64) -> bool {
        let (lo, hi) = self.window(n, zeta);
        lo <= x && x < hi
    }
}

/// True iff every tuple weight and pairwise distance falls in its window.
/// Tuple entries are 0-based host vertices, one per pattern position.
pub fn class_membership(
    g: &GirgGraph,
    tuple: &[usize],
    spec: &VertexClassSpec,
) -> Result<bool, CountError> {
    let k = tuple.len();
    spec.validate(k)?;
    for (a, &v) in tuple.iter().enumerate() {
        if tuple[..a].contains(&v) {
            return Err(CountError::RepeatedVertex(v));
        }
    }
    let n = g.n() as f64;
    for (i, &v) in tuple.iter().enumerate() {
        if !spec.in_window(n, spec.alpha[i], g.weights[v]) {
            return Ok(false);
        }
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let beta = spec.beta[pair_index(k, i + 1, j + 1)];
            if !spec.in_window(n, beta, g.distance(tuple[i], tuple[j])) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Static plan for the backtracking kernel, derived from a connected ordering.
struct Plan {
    k: usize,
    /// Pattern vertices in placement order.
    order: Vec<usize>,
    /// For position t >= 1: an earlier position whose vertex is pattern-adjacent.
    anchor: Vec<usize>,
    /// Earlier positions with a pattern edge to position t (anchor excluded).
    check_edges: Vec<Vec<usize>>,
    /// Earlier positions without a pattern edge to position t.
    check_nonedges: Vec<Vec<usize>>,
}

impl Plan {
    fn new(h: &Pattern) -> Result<Self, CountError> {
        let order = connected_ordering(h)?;
        let k = h.k();
        let mut anchor = vec![0usize; k];
        let mut check_edges = vec![Vec::new(); k];
        let mut check_nonedges = vec![Vec::new(); k];
        for t in 1..k {
            let vt = order[t];
            let a = (0..t)
                .find(|&s| h.has_edge(order[s], vt))
                .expect("connected ordering anchors every vertex");
            anchor[t] = a;
            for s in 0..t {
                if s == a {
                    continue;
                }
                if h.has_edge(order[s], vt) {
                    check_edges[t].push(s);
                } else {
                    check_nonedges[t].push(s);
                }
            }
            if !h.has_edge(order[a], vt) {
                unreachable!();
            }
        }
        Ok(Plan {
            k,
            order,
            anchor,
            check_edges,
            check_nonedges,
        })
    }
}

/// Per-position admissibility filters beyond the pattern structure itself.
trait TupleFilter: Sync {
    /// Whether host vertex `v` may occupy pattern position index `pos`
    /// (index into the plan's order).
    fn admits(&self, pos: usize, v: usize) -> bool;
    /// Pairwise admissibility against an already placed vertex.
    fn admits_pair(&self, pos_a: usize, va: usize, pos_b: usize, vb: usize) -> bool;
}

struct NoFilter;

impl TupleFilter for NoFilter {
    fn admits(&self, _: usize, _: usize) -> bool {
        true
    }
    fn admits_pair(&self, _: usize, _: usize, _: usize, _: usize) -> bool {
        true
    }
}

/// Class windows evaluated on the sampled instance.
struct ClassFilter<'a> {
    g: &'a GirgGraph,
    spec: &'a VertexClassSpec,
    /// Pattern vertex (1-based) occupying each plan position.
    order: Vec<usize>,
    n: f64,
}

impl TupleFilter for ClassFilter<'_> {
    fn admits(&self, pos: usize, v: usize) -> bool {
        let alpha = self.spec.alpha[self.order[pos] - 1];
        self.spec.in_window(self.n, alpha, self.g.weights[v])
    }

    fn admits_pair(&self, pos_a: usize, va: usize, pos_b: usize, vb: usize) -> bool {
        let k = self.spec.alpha.len();
        let beta = self.spec.beta[pair_index(k, self.order[pos_a], self.order[pos_b])];
        self.spec.in_window(self.n, beta, self.g.distance(va, vb))
    }
}

fn extend(
    g: &Graph,
    plan: &Plan,
    mode: Mode,
    filter: &impl TupleFilter,
    placed: &mut Vec<u32>,
    used: &mut [bool],
) -> Result<u64, CountError> {
    let t = placed.len();
    if t == plan.k {
        return Ok(1);
    }
    let mut total: u64 = 0;
    let anchor_host = placed[plan.anchor[t]] as usize;
    'candidates: for &cand in g.neighbors(anchor_host) {
        let v = cand as usize;
        if used[v] || !filter.admits(t, v) {
            continue;
        }
        for &s in &plan.check_edges[t] {
            if !g.has_edge(placed[s] as usize, v) {
                continue 'candidates;
            }
        }
        if mode == Mode::Induced {
            for &s in &plan.check_nonedges[t] {
                if g.has_edge(placed[s] as usize, v) {
                    continue 'candidates;
                }
            }
        }
        for s in 0..t {
            if !filter.admits_pair(s, placed[s] as usize, t, v) {
                continue 'candidates;
            }
        }
        placed.push(cand);
        used[v] = true;
        let sub = extend(g, plan, mode, filter, placed, used)?;
        total = total.checked_add(sub).ok_or(CountError::Overflow)?;
        used[v] = false;
        placed.pop();
    }
    Ok(total)
}

fn count_with_filter(
    g: &Graph,
    h: &Pattern,
    mode: Mode,
    filter: &impl TupleFilter,
) -> Result<u64, CountError> {
    let plan = Plan::new(h)?;
    if plan.k > g.n() {
        return Err(CountError::PatternLargerThanHost { k: plan.k, n: g.n() });
    }
    (0..g.n())
        .into_par_iter()
        .map(|first| {
            if !filter.admits(0, first) {
                return Ok(0);
            }
            let mut placed = Vec::with_capacity(plan.k);
            placed.push(first as u32);
            let mut used = vec![false; g.n()];
            used[first] = true;
            extend(g, &plan, mode, filter, &mut placed, &mut used)
        })
        .try_reduce(|| 0u64, |a, b| a.checked_add(b).ok_or(CountError::Overflow))
}

/// Ordered occurrences of a connected pattern in the host.
pub fn count_ordered(g: &Graph, h: &Pattern, mode: Mode) -> Result<u64, CountError> {
    count_with_filter(g, h, mode, &NoFilter)
}

/// Ordered occurrences restricted to tuples inside the class. Candidates are
/// pre-filtered by their weight window before the backtracking touches them.
pub fn count_in_class(
    g: &GirgGraph,
    h: &Pattern,
    mode: Mode,
    spec: &VertexClassSpec,
) -> Result<u64, CountError> {
    spec.validate(h.k())?;
    let plan = Plan::new(h)?;
    let filter = ClassFilter {
        g,
        spec,
        order: plan.order.clone(),
        n: g.n() as f64,
    };
    count_with_filter(&g.graph, h, mode, &filter)
}

/// Which vertex statistic the approximate counter filters on. The theory is
/// stated in weight exponents; the filtering procedure is stated on degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterStat {
    Degree,
    Weight,
}

/// Approximate count: restrict the host to vertices whose degree (or weight)
/// lies in the union of windows `[eps n^alpha, n^alpha / eps)` over
/// `alpha_star`, then count exactly on the induced subgraph.
pub fn approx_count_degree_filtered(
    g: &GirgGraph,
    h: &Pattern,
    mode: Mode,
    alpha_star: &[f64],
    eps: f64,
    stat: FilterStat,
) -> Result<u64, CountError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CountError::SpecShape(format!("eps must be in (0,1), got {eps}")));
    }
    let n = g.n() as f64;
    let keep: Vec<usize> = (0..g.n())
        .filter(|&v| {
            let x = match stat {
                FilterStat::Degree => g.graph.degree(v) as f64,
                FilterStat::Weight => g.weights[v],
            };
            alpha_star.iter().any(|&a| {
                let scale = n.powf(a);
                eps * scale <= x && x < scale / eps
            })
        })
        .collect();
    if keep.len() < h.k() {
        return Ok(0);
    }
    count_ordered(&g.graph.induced(&keep), h, mode)
}

/// One row of the counting CSV: `n,seed,pattern,mode,count,elapsed_ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub n: usize,
    pub seed: u64,
    pub pattern: String,
    pub mode: Mode,
    pub count: u64,
    pub elapsed_ms: u128,
}
