//! The mixed-integer model for the dominant-structure problem.
//!
//! Continuous variables: per-vertex weight exponents `alpha`, per-pair
//! distance exponents `beta`, the per-vertex minima `zeta_j` (j = 2..k), and
//! per-edge energy terms `delta`. Binaries `z_{i,j,s}` select which side of
//! each triangle-max constraint is active. The objective excludes the
//! constant `k`; reports add it back.
//!
//! The threshold kernel is modeled by pinning `delta` to zero, which turns
//! the energy rows into hard constraints `alpha_i + alpha_j >= 1 + d beta_ij`.

use crate::counting::Mode;
use crate::girg::Gamma;
use crate::milp::simplex::{LinearProgram, LpRow, Relation};
use crate::milp::OptInstance;
use crate::pattern::{pair_index, pairs};
use std::fmt::Write as _;

/// Variable layout inside the flat model vector.
#[derive(Debug, Clone)]
pub struct VarLayout {
    pub k: usize,
    pub num_pairs: usize,
    pub num_edges: usize,
    pub num_z: usize,
}

impl VarLayout {
    pub fn alpha(&self, i: usize) -> usize {
        debug_assert!((1..=self.k).contains(&i));
        i - 1
    }

    pub fn beta(&self, i: usize, j: usize) -> usize {
        self.k + pair_index(self.k, i, j)
    }

    pub fn zeta(&self, j: usize) -> usize {
        debug_assert!((2..=self.k).contains(&j));
        self.k + self.num_pairs + (j - 2)
    }

    pub fn delta(&self, edge_idx: usize) -> usize {
        self.k + self.num_pairs + (self.k - 1) + edge_idx
    }

    pub fn z(&self, triple_idx: usize) -> usize {
        self.k + self.num_pairs + (self.k - 1) + self.num_edges + triple_idx
    }

    pub fn total(&self) -> usize {
        self.k + self.num_pairs + (self.k - 1) + self.num_edges + self.num_z
    }
}

/// Ordered triples `(i, j, s)` with `i < j`, `s != i, j`, matching the z
/// variable order.
pub fn triples(k: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (i, j) in pairs(k) {
        for s in 1..=k {
            if s != i && s != j {
                out.push((i, j, s));
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct MilpModel {
    pub tau: f64,
    pub gamma: Gamma,
    pub dim: usize,
    pub variant: Mode,
    pub edges: Vec<(usize, usize)>,
    pub layout: VarLayout,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Maximization coefficients; the constant `k` is not part of the model.
    pub objective: Vec<f64>,
    /// Sparse `<=` rows over the model variables.
    pub rows: Vec<(Vec<(usize, f64)>, f64)>,
    /// Indices of the binary variables.
    pub binary: Vec<usize>,
}

/// Builds the model for an instance, at the instance's own dimension.
pub fn build_milp(inst: &OptInstance) -> MilpModel {
    let k = inst.pattern.k();
    let d = inst.dim as f64;
    let edges: Vec<(usize, usize)> = inst.pattern.edges().to_vec();
    let trip = triples(k);
    let layout = VarLayout {
        k,
        num_pairs: k * (k - 1) / 2,
        num_edges: edges.len(),
        num_z: trip.len(),
    };
    let total = layout.total();

    let mut lower = vec![0.0; total];
    let mut upper = vec![0.0; total];
    let mut objective = vec![0.0; total];

    let alpha_max = 1.0 / (inst.tau - 1.0);
    for i in 1..=k {
        let v = layout.alpha(i);
        lower[v] = 0.0;
        upper[v] = alpha_max;
        objective[v] = 1.0 - inst.tau;
    }
    for (i, j) in pairs(k) {
        let v = layout.beta(i, j);
        lower[v] = -1.0 / d;
        upper[v] = 0.0;
    }
    for j in 2..=k {
        let v = layout.zeta(j);
        lower[v] = -1.0 / d;
        upper[v] = 0.0;
        objective[v] = d;
    }
    for e in 0..edges.len() {
        let v = layout.delta(e);
        match inst.gamma {
            Gamma::Finite(g) => {
                lower[v] = -1.0;
                upper[v] = 0.0;
                objective[v] = g;
            }
            Gamma::Infinite => {
                // Pinned to zero: the energy rows become hard constraints.
                lower[v] = 0.0;
                upper[v] = 0.0;
                objective[v] = 0.0;
            }
        }
    }
    let mut binary = Vec::with_capacity(trip.len());
    for t in 0..trip.len() {
        let v = layout.z(t);
        lower[v] = 0.0;
        upper[v] = 1.0;
        binary.push(v);
    }

    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    // zeta_j <= beta_{i,j} for every pair i < j.
    for (i, j) in pairs(k) {
        rows.push((vec![(layout.zeta(j), 1.0), (layout.beta(i, j), -1.0)], 0.0));
    }
    // Triangle-max disjunctions.
    for (t, &(i, j, s)) in trip.iter().enumerate() {
        // beta_ij - beta_is + z/d <= 1/d
        rows.push((
            vec![
                (layout.beta(i, j), 1.0),
                (layout.beta(i, s), -1.0),
                (layout.z(t), 1.0 / d),
            ],
            1.0 / d,
        ));
        // beta_ij - beta_js - z/d <= 0
        rows.push((
            vec![
                (layout.beta(i, j), 1.0),
                (layout.beta(j, s), -1.0),
                (layout.z(t), -1.0 / d),
            ],
            0.0,
        ));
    }
    // Edge energy: delta <= alpha_i + alpha_j - d beta_ij - 1.
    for (e, &(i, j)) in edges.iter().enumerate() {
        rows.push((
            vec![
                (layout.delta(e), 1.0),
                (layout.alpha(i), -1.0),
                (layout.alpha(j), -1.0),
                (layout.beta(i, j), d),
            ],
            -1.0,
        ));
    }
    // Induced variant non-edge rows: alpha_i + alpha_j <= 1 + d beta_ij.
    if inst.variant == Mode::Induced {
        for (i, j) in pairs(k) {
            if !inst.pattern.has_edge(i, j) {
                rows.push((
                    vec![
                        (layout.alpha(i), 1.0),
                        (layout.alpha(j), 1.0),
                        (layout.beta(i, j), -d),
                    ],
                    1.0,
                ));
            }
        }
    }

    MilpModel {
        tau: inst.tau,
        gamma: inst.gamma,
        dim: inst.dim,
        variant: inst.variant,
        edges,
        layout,
        lower,
        upper,
        objective,
        rows,
        binary,
    }
}

/// A model instantiated as a nonnegative-variable LP: every variable is
/// shifted by its lower bound and capped by an upper-bound row.
pub struct ShiftedLp {
    pub lp: LinearProgram,
    pub shift: Vec<f64>,
    /// Constant to add to the LP value to recover the model objective.
    pub objective_offset: f64,
}

impl MilpModel {
    /// Number of continuous variables (the layout order puts them first).
    pub fn num_continuous(&self) -> usize {
        self.layout.total() - self.layout.num_z
    }

    /// Builds the LP relaxation with per-variable bound overrides (used to fix
    /// binaries), extra rows, and an optional objective replacement.
    pub fn relaxation(
        &self,
        bounds_override: &[(usize, f64, f64)],
        extra_rows: &[(Vec<(usize, f64)>, Relation, f64)],
        objective: &[f64],
    ) -> ShiftedLp {
        let total = self.layout.total();
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        for &(v, lo, hi) in bounds_override {
            lower[v] = lo;
            upper[v] = hi;
        }
        let shift = lower;

        let mut rows = Vec::with_capacity(self.rows.len() + extra_rows.len() + total);
        let base = self.rows.iter().map(|(c, rhs)| (c, Relation::Le, *rhs));
        let extra = extra_rows.iter().map(|(c, rel, rhs)| (c, *rel, *rhs));
        for (coeffs, rel, rhs) in base.chain(extra) {
            let adj: f64 = coeffs.iter().map(|&(v, c)| c * shift[v]).sum();
            rows.push(LpRow {
                coeffs: coeffs.clone(),
                rel,
                rhs: rhs - adj,
            });
        }
        for v in 0..total {
            rows.push(LpRow {
                coeffs: vec![(v, 1.0)],
                rel: Relation::Le,
                rhs: upper[v] - shift[v],
            });
        }

        let objective_offset: f64 = objective.iter().zip(&shift).map(|(c, l)| c * l).sum();
        ShiftedLp {
            lp: LinearProgram {
                num_vars: total,
                objective: objective.to_vec(),
                rows,
            },
            shift,
            objective_offset,
        }
    }

    pub fn var_name(&self, v: usize) -> String {
        let l = &self.layout;
        let k = l.k;
        if v < k {
            return format!("a_{}", v + 1);
        }
        if v < k + l.num_pairs {
            let (i, j) = pairs(k)[v - k];
            return format!("b_{i}_{j}");
        }
        if v < k + l.num_pairs + (k - 1) {
            return format!("zeta_{}", v - k - l.num_pairs + 2);
        }
        if v < k + l.num_pairs + (k - 1) + l.num_edges {
            let (i, j) = self.edges[v - k - l.num_pairs - (k - 1)];
            return format!("delta_{i}_{j}");
        }
        let (i, j, s) = triples(k)[v - k - l.num_pairs - (k - 1) - l.num_edges];
        format!("z_{i}_{j}_{s}")
    }

    /// Renders the model in the standard LP text format.
    pub fn to_lp_format(&self, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ {name}");
        let _ = writeln!(out, "Maximize");
        let mut obj = String::from(" obj:");
        for (v, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                let _ = write!(obj, " {} {}", signed(c), self.var_name(v));
            }
        }
        let _ = writeln!(out, "{obj}");
        let _ = writeln!(out, "Subject To");
        for (idx, (coeffs, rhs)) in self.rows.iter().enumerate() {
            let mut line = format!(" c{}:", idx + 1);
            for &(v, c) in coeffs {
                let _ = write!(line, " {} {}", signed(c), self.var_name(v));
            }
            let _ = writeln!(out, "{line} <= {rhs}");
        }
        let _ = writeln!(out, "Bounds");
        for v in 0..self.layout.total() {
            let _ = writeln!(out, " {} <= {} <= {}", self.lower[v], self.var_name(v), self.upper[v]);
        }
        let _ = writeln!(out, "Binary");
        let mut bins = String::from(" ");
        for &v in &self.binary {
            let _ = write!(bins, "{} ", self.var_name(v));
        }
        let _ = writeln!(out, "{}", bins.trim_end());
        let _ = writeln!(out, "End");
        out
    }
}

fn signed(c: f64) -> String {
    if c < 0.0 {
        format!("- {}", -c)
    } else {
        format!("+ {c}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::parse_pattern;

    fn inst(text: &str, tau: f64, gamma: Gamma, dim: usize, variant: Mode) -> OptInstance {
        OptInstance {
            pattern: parse_pattern(text).unwrap(),
            tau,
            gamma,
            dim,
            variant,
        }
    }

    #[test]
    fn variable_counts_k4() {
        let k4 = inst(
            "k=4; edges=1-2,1-3,1-4,2-3,2-4,3-4",
            2.5,
            Gamma::Finite(2.0),
            1,
            Mode::General,
        );
        let m = build_milp(&k4);
        assert_eq!(m.layout.k, 4);
        assert_eq!(m.layout.num_pairs, 6);
        assert_eq!(m.layout.total(), 4 + 6 + 3 + 6 + 12);
        assert_eq!(m.binary.len(), 12);
    }

    #[test]
    fn z_count_k3() {
        let k3 = inst("k=3; edges=1-2,1-3,2-3", 2.5, Gamma::Finite(2.0), 1, Mode::General);
        assert_eq!(build_milp(&k3).binary.len(), 3);
    }

    #[test]
    fn induced_cycle_adds_two_rows() {
        let c4 = "k=4; edges=1-2,2-3,3-4,1-4";
        let general = build_milp(&inst(c4, 2.5, Gamma::Finite(2.0), 1, Mode::General));
        let induced = build_milp(&inst(c4, 2.5, Gamma::Finite(2.0), 1, Mode::Induced));
        assert_eq!(induced.rows.len(), general.rows.len() + 2);
    }

    #[test]
    fn threshold_variant_pins_delta() {
        let k3 = inst("k=3; edges=1-2,1-3,2-3", 2.5, Gamma::Infinite, 1, Mode::General);
        let m = build_milp(&k3);
        let dv = m.layout.delta(0);
        assert_eq!(m.lower[dv], 0.0);
        assert_eq!(m.upper[dv], 0.0);
        assert_eq!(m.objective[dv], 0.0);
        // Same row count as the finite-kernel model.
        let mf = build_milp(&inst("k=3; edges=1-2,1-3,2-3", 2.5, Gamma::Finite(2.0), 1, Mode::General));
        assert_eq!(m.rows.len(), mf.rows.len());
    }

    #[test]
    fn lp_format_sections_and_names() {
        let k3 = inst("k=3; edges=1-2,2-3", 2.2, Gamma::Finite(2.0), 1, Mode::General);
        let text = build_milp(&k3).to_lp_format("wedge");
        for section in ["Maximize", "Subject To", "Bounds", "Binary", "End"] {
            assert!(text.contains(section), "missing {section}:\n{text}");
        }
        for name in ["a_1", "b_1_2", "zeta_2", "delta_1_2", "z_1_2_3"] {
            assert!(text.contains(name), "missing {name}:\n{text}");
        }
    }
}
