//! GIRG and IRG samplers: Pareto weights, uniform torus positions, and the
//! capped product kernel.
//!
//! Weights are exact Pareto with minimum 1, `P(W > x) = x^{1-tau}`. The kernel
//! constant `mu` is the analytic Pareto mean `(tau-1)/(tau-2)`, not the
//! empirical mean, so edge probabilities do not depend on other vertices'
//! draws. All randomness is keyed off the instance seed: weights and positions
//! come from dedicated ChaCha streams, per-pair edge draws from a counter
//! hash of `(seed, u, v)` so pair blocks can be sampled on any schedule.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// Fixed minimum weight of the Pareto law.
pub const W0: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub enum GirgError {
    InvalidParams(String),
    DimensionMismatch { left: usize, right: usize },
    NegativeInput(&'static str),
}

impl fmt::Display for GirgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GirgError::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            GirgError::DimensionMismatch { left, right } => {
                write!(f, "dimension mismatch: {left} vs {right}")
            }
            GirgError::NegativeInput(what) => write!(f, "negative input: {what}"),
        }
    }
}

impl std::error::Error for GirgError {}

/// Kernel exponent: a finite value `> 1` or the threshold limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Finite(f64),
    Infinite,
}

impl Gamma {
    pub fn is_finite(&self) -> bool {
        matches!(self, Gamma::Finite(_))
    }

    pub fn value(&self) -> f64 {
        match self {
            Gamma::Finite(g) => *g,
            Gamma::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gamma::Finite(g) => write!(f, "{g}"),
            Gamma::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Gamma {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "oo" => Ok(Gamma::Infinite),
            other => other
                .parse::<f64>()
                .map(Gamma::Finite)
                .map_err(|_| format!("not a kernel exponent: {s:?}")),
        }
    }
}

impl Serialize for Gamma {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Gamma::Finite(g) => serializer.serialize_f64(*g),
            Gamma::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Gamma {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(deserializer)?;
        match v {
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(Gamma::Finite)
                .ok_or_else(|| D::Error::custom("bad gamma number")),
            serde_json::Value::String(s) => s.parse().map_err(D::Error::custom),
            other => Err(D::Error::custom(format!("bad gamma value: {other}"))),
        }
    }
}

/// Model parameters for one sampled instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GirgParams {
    pub n: usize,
    pub d: usize,
    pub tau: f64,
    pub gamma: Gamma,
    pub seed: u64,
}

impl GirgParams {
    pub fn validate(&self) -> Result<(), GirgError> {
        if !(self.tau > 2.0 && self.tau < 3.0) {
            return Err(GirgError::InvalidParams(format!(
                "tau must be in (2,3), got {}",
                self.tau
            )));
        }
        if let Gamma::Finite(g) = self.gamma {
            if !(g > 1.0) {
                return Err(GirgError::InvalidParams(format!(
                    "gamma must be > 1 or infinite, got {g}"
                )));
            }
        }
        if self.n < 2 {
            return Err(GirgError::InvalidParams(format!("n must be >= 2, got {}", self.n)));
        }
        if self.d < 1 {
            return Err(GirgError::InvalidParams("d must be >= 1".into()));
        }
        Ok(())
    }

    /// Analytic Pareto mean `(tau-1)/(tau-2)`.
    pub fn mu(&self) -> f64 {
        (self.tau - 1.0) / (self.tau - 2.0)
    }
}

/// Simple undirected host graph with sorted adjacency lists (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adj: Vec<Vec<u32>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph { adj: vec![Vec::new(); n] }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Graph::new(n);
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        g.finish();
        g
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        debug_assert!(u != v && u < self.n() && v < self.n());
        self.adj[u].push(v as u32);
        self.adj[v].push(u as u32);
    }

    /// Sorts adjacency lists; call once after the last `add_edge`.
    pub fn finish(&mut self) {
        for list in &mut self.adj {
            list.sort_unstable();
            list.dedup();
        }
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(|l| l.len()).sum::<usize>() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&(v as u32)).is_ok()
    }

    /// Host induced on `keep`, relabeled to `0..keep.len()` in the given order.
    pub fn induced(&self, keep: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.n()];
        for (new, &old) in keep.iter().enumerate() {
            index[old] = new;
        }
        let mut g = Graph::new(keep.len());
        for (new_u, &old_u) in keep.iter().enumerate() {
            for &w in self.neighbors(old_u) {
                let new_v = index[w as usize];
                if new_v != usize::MAX && new_u < new_v {
                    g.add_edge(new_u, new_v);
                }
            }
        }
        g.finish();
        g
    }

    /// Edge list text, one `u v` per line, 1-based.
    pub fn edge_list_text(&self) -> String {
        let mut out = String::new();
        for u in 0..self.n() {
            for &v in self.neighbors(u) {
                if (v as usize) > u {
                    out.push_str(&format!("{} {}\n", u + 1, v as usize + 1));
                }
            }
        }
        out
    }
}

/// One sampled GIRG instance.
#[derive(Debug, Clone)]
pub struct GirgGraph {
    pub params: GirgParams,
    pub mu: f64,
    pub weights: Vec<f64>,
    /// Flat row-major positions, `d` coordinates per vertex in `[0,1)`.
    pub positions: Vec<f64>,
    pub graph: Graph,
}

impl GirgGraph {
    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn position(&self, v: usize) -> &[f64] {
        let d = self.params.d;
        &self.positions[v * d..(v + 1) * d]
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        torus_distance(self.position(u), self.position(v)).expect("stored positions share d")
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.graph.num_edges() as f64 / self.n() as f64
    }

    /// Sidecar JSON with params, weights, and positions, matching the
    /// edge-list export.
    pub fn sidecar_json(&self) -> serde_json::Value {
        let d = self.params.d;
        let positions: Vec<Vec<f64>> = (0..self.n()).map(|v| self.position(v).to_vec()).collect();
        serde_json::json!({
            "params": self.params,
            "mu": self.mu,
            "w0": W0,
            "d": d,
            "weights": self.weights,
            "positions": positions,
        })
    }
}

/// One sampled IRG instance: same weight law, no geometry.
#[derive(Debug, Clone)]
pub struct IrgGraph {
    pub params: GirgParams,
    pub mu: f64,
    pub weights: Vec<f64>,
    pub graph: Graph,
}

// Stream tags for deriving independent sub-streams from the instance seed.
const TAG_WEIGHTS: u64 = 0x5747_5453;
const TAG_POSITIONS: u64 = 0x504f_5353;
const TAG_GIRG_EDGES: u64 = 0x4745_4447;
const TAG_IRG_EDGES: u64 = 0x4945_4447;

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub(crate) fn derive_rng(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(tag)))
}

/// Uniform in `[0,1)` keyed by `(seed, tag, u, v)`; schedule-independent.
fn pair_uniform(seed: u64, tag: u64, u: usize, v: usize) -> f64 {
    let mut h = splitmix64(seed ^ splitmix64(tag));
    h = splitmix64(h ^ (u as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    h = splitmix64(h ^ (v as u64));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Inverse-transform Pareto draw: `u` in `(0,1]` maps to `u^{-1/(tau-1)}`.
pub fn pareto_from_uniform(u: f64, tau: f64) -> f64 {
    u.powf(-1.0 / (tau - 1.0))
}

/// i.i.d. Pareto weights with `P(W > x) = x^{1-tau}` for `x >= 1`.
pub fn sample_weights(n: usize, tau: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.gen::<f64>(); // (0,1]
            pareto_from_uniform(u, tau)
        })
        .collect()
}

/// `n` points on the unit torus, flat row-major, every coordinate in `[0,1)`.
pub fn sample_positions(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n * d).map(|_| rng.gen::<f64>()).collect()
}

/// Infinity-norm torus distance; result in `[0, 1/2]`.
pub fn torus_distance(x: &[f64], y: &[f64]) -> Result<f64, GirgError> {
    if x.len() != y.len() {
        return Err(GirgError::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let mut best = 0.0f64;
    for (a, b) in x.iter().zip(y) {
        let diff = (a - b).abs();
        best = best.max(diff.min(1.0 - diff));
    }
    Ok(best)
}

/// Connection probability of the capped product kernel.
///
/// Finite gamma: `min(1, (w_u w_v / (n mu dist^d))^gamma)`; zero distance hits
/// the cap. Infinite gamma: the indicator of `w_u w_v > n mu dist^d`, strict.
pub fn edge_probability(
    w_u: f64,
    w_v: f64,
    dist: f64,
    params: &GirgParams,
) -> Result<f64, GirgError> {
    if w_u < 0.0 || w_v < 0.0 {
        return Err(GirgError::NegativeInput("weight"));
    }
    if dist < 0.0 {
        return Err(GirgError::NegativeInput("distance"));
    }
    let threshold = params.n as f64 * params.mu() * dist.powi(params.d as i32);
    let ww = w_u * w_v;
    Ok(match params.gamma {
        Gamma::Infinite => {
            if ww > threshold {
                1.0
            } else {
                0.0
            }
        }
        Gamma::Finite(g) => {
            if ww >= threshold {
                1.0
            } else {
                (ww / threshold).powf(g).min(1.0)
            }
        }
    })
}

fn assemble(n: usize, edge_rows: Vec<Vec<(u32, u32)>>) -> Graph {
    let mut g = Graph::new(n);
    for row in edge_rows {
        for (u, v) in row {
            g.add_edge(u as usize, v as usize);
        }
    }
    g.finish();
    g
}

/// Samples a GIRG: Pareto weights, uniform torus positions, independent
/// pair connections with the capped kernel. Deterministic given the seed.
pub fn sample_girg(params: &GirgParams) -> Result<GirgGraph, GirgError> {
    params.validate()?;
    let n = params.n;
    let weights = sample_weights(n, params.tau, &mut derive_rng(params.seed, TAG_WEIGHTS));
    let positions = sample_positions(n, params.d, &mut derive_rng(params.seed, TAG_POSITIONS));
    let d = params.d;

    let edge_rows: Vec<Vec<(u32, u32)>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let xu = &positions[u * d..(u + 1) * d];
            let wu = weights[u];
            let mut row = Vec::new();
            for v in (u + 1)..n {
                let xv = &positions[v * d..(v + 1) * d];
                let dist = torus_distance(xu, xv).expect("same dimension");
                let p = edge_probability(wu, weights[v], dist, params).expect("valid inputs");
                if pair_uniform(params.seed, TAG_GIRG_EDGES, u, v) < p {
                    row.push((u as u32, v as u32));
                }
            }
            row
        })
        .collect();

    Ok(GirgGraph {
        params: *params,
        mu: params.mu(),
        weights,
        positions,
        graph: assemble(n, edge_rows),
    })
}

/// Samples the non-geometric counterpart: same weight stream as
/// [`sample_girg`] for the same seed, pair probability `min(1, w_u w_v / (mu n))`.
pub fn sample_irg(params: &GirgParams) -> Result<IrgGraph, GirgError> {
    params.validate()?;
    let n = params.n;
    let weights = sample_weights(n, params.tau, &mut derive_rng(params.seed, TAG_WEIGHTS));
    let mu = params.mu();
    let mun = mu * n as f64;

    let edge_rows: Vec<Vec<(u32, u32)>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let wu = weights[u];
            let mut row = Vec::new();
            for v in (u + 1)..n {
                let p = (wu * weights[v] / mun).min(1.0);
                if pair_uniform(params.seed, TAG_IRG_EDGES, u, v) < p {
                    row.push((u as u32, v as u32));
                }
            }
            row
        })
        .collect();

    Ok(IrgGraph {
        params: *params,
        mu,
        weights,
        graph: assemble(n, edge_rows),
    })
}

/// True iff the natural weight/distance cutoffs hold: max weight below
/// `n^{1/(tau-1)} / eps_bar` and min pairwise distance above `eps_bar n^{-1/d}`.
pub fn cutoff_event_holds(g: &GirgGraph, eps_bar: f64) -> bool {
    let n = g.n() as f64;
    let weight_cap = n.powf(1.0 / (g.params.tau - 1.0)) / eps_bar;
    if g.weights.iter().any(|&w| w >= weight_cap) {
        return false;
    }
    let dist_floor = eps_bar * n.powf(-1.0 / g.params.d as f64);
    for u in 0..g.n() {
        for v in (u + 1)..g.n() {
            if g.distance(u, v) <= dist_floor {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, d: usize, tau: f64, gamma: Gamma, seed: u64) -> GirgParams {
        GirgParams { n, d, tau, gamma, seed }
    }

    #[test]
    fn pareto_inverse_transform_boundaries() {
        assert_eq!(pareto_from_uniform(1.0, 2.5), 1.0);
        assert!((pareto_from_uniform(0.25, 3.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weight_tail_matches_law() {
        let n = 100_000;
        let tau = 2.5;
        let ws = sample_weights(n, tau, &mut derive_rng(7, TAG_WEIGHTS));
        assert!(ws.iter().all(|&w| w >= 1.0));
        let p = 10f64.powf(1.0 - tau);
        let frac = ws.iter().filter(|&&w| w > 10.0).count() as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!(
            (frac - p).abs() <= 3.0 * se,
            "tail fraction {frac} vs {p} (se {se})"
        );
    }

    #[test]
    fn positions_uniform() {
        let n = 100_000;
        let d = 2;
        let xs = sample_positions(n, d, &mut derive_rng(11, TAG_POSITIONS));
        assert!(xs.iter().all(|&c| (0.0..1.0).contains(&c)));
        for coord in 0..d {
            let mean: f64 = (0..n).map(|v| xs[v * d + coord]).sum::<f64>() / n as f64;
            let se = (1.0 / 12.0f64 / n as f64).sqrt();
            assert!((mean - 0.5).abs() <= 3.0 * se, "coord {coord} mean {mean}");
        }
        // Determinism under the same stream.
        let again = sample_positions(n, d, &mut derive_rng(11, TAG_POSITIONS));
        assert_eq!(xs, again);
    }

    #[test]
    fn torus_distance_cases() {
        assert!((torus_distance(&[0.1], &[0.9]).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(torus_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let d2 = torus_distance(&[0.0, 0.0], &[0.4, 0.7]).unwrap();
        assert!((d2 - 0.4).abs() < 1e-15);
        assert!(matches!(
            torus_distance(&[0.1], &[0.1, 0.2]),
            Err(GirgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn edge_probability_cases() {
        let p = params(100, 1, 2.5, Gamma::Finite(2.0), 0);
        let mu = p.mu();
        // Cap: product at or above the threshold.
        let dist = 0.1;
        let thr = 100.0 * mu * dist;
        assert_eq!(edge_probability(thr, 1.0, dist, &p).unwrap(), 1.0);
        assert_eq!(edge_probability(1.0, 1.0, 0.0, &p).unwrap(), 1.0);
        // Quarter ratio squared.
        let prob = edge_probability(thr / 4.0, 1.0, dist, &p).unwrap();
        assert!((prob - 1.0 / 16.0).abs() < 1e-12);
        // Infinite gamma is strict.
        let pi = params(100, 1, 2.5, Gamma::Infinite, 0);
        assert_eq!(edge_probability(thr, 1.0, dist, &pi).unwrap(), 0.0);
        assert_eq!(edge_probability(thr * (1.0 + 1e-9), 1.0, dist, &pi).unwrap(), 1.0);
        assert!(edge_probability(-1.0, 1.0, dist, &p).is_err());
    }

    #[test]
    fn gamma_monotone_below_cap() {
        let base = params(1000, 1, 2.5, Gamma::Finite(1.5), 0);
        let gammas = [1.5, 2.0, 3.0, 5.0, 10.0];
        for &(wu, wv, dist) in &[(1.0, 2.0, 0.3), (3.0, 1.0, 0.45), (1.0, 1.0, 0.05)] {
            let mut last = f64::INFINITY;
            for &g in &gammas {
                let p = params(base.n, base.d, base.tau, Gamma::Finite(g), 0);
                let prob = edge_probability(wu, wv, dist, &p).unwrap();
                assert!(prob <= last + 1e-15, "gamma {g} raised probability");
                last = prob;
            }
        }
    }

    #[test]
    fn girg_seed_reproducibility() {
        let p = params(300, 2, 2.5, Gamma::Finite(2.0), 99);
        let a = sample_girg(&p).unwrap();
        let b = sample_girg(&p).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.graph, b.graph);
        let c = sample_girg(&params(300, 2, 2.5, Gamma::Finite(2.0), 100)).unwrap();
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn girg_structure_invariants() {
        let p = params(200, 1, 2.5, Gamma::Finite(2.0), 5);
        let g = sample_girg(&p).unwrap();
        for u in 0..g.n() {
            assert!(!g.graph.has_edge(u, u));
            for &v in g.graph.neighbors(u) {
                assert!(g.graph.has_edge(v as usize, u));
            }
        }
    }

    #[test]
    fn threshold_girg_matches_indicator_rule() {
        let p = params(150, 1, 2.5, Gamma::Infinite, 13);
        let g = sample_girg(&p).unwrap();
        for u in 0..g.n() {
            for v in (u + 1)..g.n() {
                let indicator =
                    g.weights[u] * g.weights[v] > p.n as f64 * g.mu * g.distance(u, v).powi(1);
                assert_eq!(g.graph.has_edge(u, v), indicator, "pair ({u},{v})");
            }
        }
    }

    #[test]
    fn irg_edge_total_within_three_sigma() {
        let p = params(2000, 1, 2.5, Gamma::Finite(2.0), 21);
        let g = sample_irg(&p).unwrap();
        let mun = g.mu * p.n as f64;
        let mut mean = 0.0;
        let mut var = 0.0;
        for u in 0..p.n {
            for v in (u + 1)..p.n {
                let prob = (g.weights[u] * g.weights[v] / mun).min(1.0);
                mean += prob;
                var += prob * (1.0 - prob);
            }
        }
        let observed = g.graph.num_edges() as f64;
        assert!(
            (observed - mean).abs() <= 3.0 * var.sqrt(),
            "edges {observed} vs mean {mean} sd {}",
            var.sqrt()
        );
    }

    #[test]
    fn irg_shares_weight_stream_with_girg() {
        let p = params(100, 1, 2.5, Gamma::Finite(2.0), 77);
        assert_eq!(sample_girg(&p).unwrap().weights, sample_irg(&p).unwrap().weights);
    }

    #[test]
    fn cutoff_event_cases() {
        let p = params(2, 1, 2.5, Gamma::Finite(2.0), 0);
        let mut g = sample_girg(&p).unwrap();
        g.weights = vec![1.0, 1.0];
        g.positions = vec![0.2, 0.5];
        assert!(cutoff_event_holds(&g, 0.1));
        g.positions = vec![0.4, 0.4];
        assert!(!cutoff_event_holds(&g, 0.1));
    }

    #[test]
    fn cutoff_probability_grows_as_eps_shrinks() {
        // The distance floor eps * n^{-1/d} must fall well below the minimum
        // pairwise spacing (order n^{-2/d}) before the event becomes likely.
        let mut holds = Vec::new();
        for &eps in &[0.1, 1e-3, 1e-5] {
            let mut count = 0;
            for seed in 0..100 {
                let p = params(1000, 1, 2.5, Gamma::Finite(2.0), seed);
                if cutoff_event_holds(&sample_girg(&p).unwrap(), eps) {
                    count += 1;
                }
            }
            holds.push(count);
        }
        assert!(holds[0] <= holds[1] && holds[1] <= holds[2], "{holds:?}");
        assert!(holds[2] >= 95, "eps=1e-5 held only {}/100 times", holds[2]);
    }

    #[test]
    fn gamma_serde_forms() {
        assert_eq!(serde_json::to_string(&Gamma::Finite(2.0)).unwrap(), "2.0");
        assert_eq!(serde_json::to_string(&Gamma::Infinite).unwrap(), "\"inf\"");
        assert_eq!(serde_json::from_str::<Gamma>("\"inf\"").unwrap(), Gamma::Infinite);
        assert_eq!(serde_json::from_str::<Gamma>("2.5").unwrap(), Gamma::Finite(2.5));
        assert_eq!("inf".parse::<Gamma>().unwrap(), Gamma::Infinite);
    }

    #[test]
    fn edge_list_export() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]);
        assert_eq!(g.edge_list_text(), "1 2\n2 3\n");
    }
}
