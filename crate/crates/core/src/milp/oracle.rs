//! Independent grid-search oracle for the dominant-structure problem.
//!
//! Evaluates the exponent objective over the step lattice, keeping exactly
//! the triangle-max-feasible points (plus the non-edge rows in the induced
//! variant) and returning the maximum.
//!
//! Enumerating all `beta` tuples directly is hopeless, but the feasible ones
//! are ultrametric-type matrices: among any three pairwise values the
//! maximum is attained at least twice. Every such matrix is realized by a
//! labeled merge history (a sequence of pairwise block merges) with
//! nondecreasing level heights, and conversely every history/height choice
//! is feasible. So the oracle enumerates alpha lattice tuples and merge
//! histories, and maximizes over the height lattice with a chain DP. That is
//! an exact reorganization of the full lattice sweep, not a relaxation.

use crate::counting::Mode;
use crate::girg::Gamma;
use crate::milp::{Assignment, MilpError, OptInstance};
use crate::pattern::{automorphisms, pair_index, pairs};
use rayon::prelude::*;
use std::sync::atomic::{AtomicU64, Ordering};

/// Abort threshold on the estimated number of inner DP cell updates.
const WORK_BUDGET: f64 = 4e11;
const TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct GridSolution {
    pub assignment: Assignment,
    pub value: f64,
}

/// One labeled merge history: which level joins each pair, which level is
/// each vertex's first contact with a smaller-indexed vertex, and the edge
/// and non-edge levels of the pattern being optimized.
struct Chain {
    /// Level (0-based merge step) at which each pair first shares a block.
    pair_level: Vec<usize>,
    /// Count of vertices whose zeta term binds at each level.
    zeta_count: Vec<u32>,
    /// Pattern edges grouped by level.
    edges_at: Vec<Vec<(usize, usize)>>,
    /// Pattern non-edges grouped by level (induced variant only).
    nonedges_at: Vec<Vec<(usize, usize)>>,
}

fn build_chains(inst: &OptInstance) -> Vec<Chain> {
    let k = inst.pattern.k();
    let levels = k - 1;
    let pair_list = pairs(k);
    let mut out = Vec::new();
    // Enumerate merge histories over block sets, recording pair levels.
    let mut blocks: Vec<Vec<usize>> = (1..=k).map(|v| vec![v]).collect();
    let mut pair_level = vec![usize::MAX; pair_list.len()];
    fn rec(
        k: usize,
        level: usize,
        blocks: &mut Vec<Vec<usize>>,
        pair_level: &mut Vec<usize>,
        sink: &mut Vec<Vec<usize>>,
    ) {
        if blocks.len() == 1 {
            sink.push(pair_level.clone());
            return;
        }
        let nb = blocks.len();
        for a in 0..nb {
            for b in (a + 1)..nb {
                let (block_a, block_b) = (blocks[a].clone(), blocks[b].clone());
                let mut touched = Vec::new();
                for &u in &block_a {
                    for &v in &block_b {
                        let idx = pair_index(k, u, v);
                        pair_level[idx] = level;
                        touched.push(idx);
                    }
                }
                let mut merged = block_a.clone();
                merged.extend_from_slice(&block_b);
                let mut next: Vec<Vec<usize>> = Vec::with_capacity(nb - 1);
                for (i, blk) in blocks.iter().enumerate() {
                    if i != a && i != b {
                        next.push(blk.clone());
                    }
                }
                next.push(merged);
                rec(k, level + 1, &mut next, pair_level, sink);
                for idx in touched {
                    pair_level[idx] = usize::MAX;
                }
            }
        }
    }
    let mut histories = Vec::new();
    rec(k, 0, &mut blocks, &mut pair_level, &mut histories);

    for pair_level in histories {
        let mut zeta_count = vec![0u32; levels];
        for j in 2..=k {
            let first = (1..j)
                .map(|i| pair_level[pair_index(k, i, j)])
                .min()
                .expect("j >= 2 has earlier vertices");
            zeta_count[first] += 1;
        }
        let mut edges_at = vec![Vec::new(); levels];
        let mut nonedges_at = vec![Vec::new(); levels];
        for &(i, j) in &pair_list {
            let level = pair_level[pair_index(k, i, j)];
            if inst.pattern.has_edge(i, j) {
                edges_at[level].push((i, j));
            } else if inst.variant == Mode::Induced {
                nonedges_at[level].push((i, j));
            }
        }
        out.push(Chain {
            pair_level,
            zeta_count,
            edges_at,
            nonedges_at,
        });
    }
    out
}

fn lattice_up_to(step: f64, max: f64) -> Vec<f64> {
    let count = (max / step + TOL).floor() as usize;
    (0..=count).map(|m| m as f64 * step).collect()
}

/// DP over one chain: maximize sum over levels of
/// `d * zeta_count[l] * h_l + gamma * sum_{edges at l} min(a_e - d h_l, 0)`
/// subject to nondecreasing `h` on the lattice and the per-level induced /
/// threshold constraints. Returns the best total and, optionally, heights.
fn chain_best(
    chain: &Chain,
    alpha: &[f64],
    hvals: &[f64],
    d: f64,
    gamma: Gamma,
    heights_out: Option<&mut Vec<usize>>,
) -> Option<f64> {
    let levels = chain.zeta_count.len();
    let nh = hvals.len();
    let mut prev: Vec<f64> = vec![0.0; nh];
    let mut choice: Vec<Vec<usize>> = if heights_out.is_some() {
        vec![vec![0; nh]; levels]
    } else {
        Vec::new()
    };

    let mut first = true;
    for level in 0..levels {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for &(i, j) in &chain.nonedges_at[level] {
            lo = lo.max((alpha[i - 1] + alpha[j - 1] - 1.0) / d);
        }
        if gamma == Gamma::Infinite {
            for &(i, j) in &chain.edges_at[level] {
                hi = hi.min((alpha[i - 1] + alpha[j - 1] - 1.0) / d);
            }
        }
        let zc = d * chain.zeta_count[level] as f64;
        let mut cur = vec![f64::NEG_INFINITY; nh];
        // prefix maximum of the previous level as we sweep h upward
        let mut run = f64::NEG_INFINITY;
        let mut run_at = 0usize;
        for (v, &h) in hvals.iter().enumerate() {
            if prev[v] > run {
                run = prev[v];
                run_at = v;
            }
            if h < lo - TOL || h > hi + TOL || run == f64::NEG_INFINITY {
                continue;
            }
            let mut g = zc * h;
            if let Gamma::Finite(gam) = gamma {
                for &(i, j) in &chain.edges_at[level] {
                    let e = alpha[i - 1] + alpha[j - 1] - d * h - 1.0;
                    if e < 0.0 {
                        g += gam * e;
                    }
                }
            }
            cur[v] = g + if first { 0.0 } else { run };
            if !choice.is_empty() {
                choice[level][v] = run_at;
            }
        }
        // First level has no predecessor; `run` tracked prev = zeros, which
        // is only correct for level 0 when we skip adding it.
        if first {
            first = false;
        }
        prev = cur;
    }

    let (best_v, best) = prev
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if !best.is_finite() {
        return None;
    }
    if let Some(out) = heights_out {
        out.clear();
        out.resize(levels, 0);
        let mut v = best_v;
        for level in (0..levels).rev() {
            out[level] = v;
            v = choice[level][v];
        }
    }
    Some(*best)
}

struct Candidate {
    value: f64,
    alpha_idx: Vec<u16>,
    chain_idx: usize,
}

/// Monotone f64 ordering bits for an atomic best-so-far.
fn order_bits(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_order_bits(b: u64) -> f64 {
    if b >> 63 == 1 {
        f64::from_bits(b & !(1 << 63))
    } else {
        f64::from_bits(!b)
    }
}

/// Exhaustive lattice maximum of the exponent objective over the feasible
/// region (triangle-max rows, boxes, induced rows when applicable).
pub fn grid_oracle(inst: &OptInstance, step: f64) -> Result<GridSolution, MilpError> {
    inst.validate()?;
    if !(step > 0.0) {
        return Err(MilpError::InvalidInstance(format!("grid step must be positive, got {step}")));
    }
    let k = inst.pattern.k();
    let tau = inst.tau;
    let d = inst.dim as f64;
    let avals = lattice_up_to(step, 1.0 / (tau - 1.0));
    let hvals: Vec<f64> = lattice_up_to(step, 1.0 / d)
        .into_iter()
        .rev()
        .map(|v| -v)
        .collect();

    if k == 1 {
        // Only the alpha box: objective 1 + (1-tau) alpha, maximized at 0.
        return Ok(GridSolution {
            assignment: Assignment { alpha: vec![0.0], beta: vec![] },
            value: 1.0,
        });
    }

    let chains = build_chains(inst);
    let auts: Vec<Vec<usize>> = automorphisms(&inst.pattern)
        .map_err(|e| MilpError::InvalidInstance(e.to_string()))?
        .into_iter()
        .filter(|p| p.iter().enumerate().any(|(i, &v)| v != i + 1))
        .collect();

    let tuples = (avals.len() as f64).powi(k as i32) / (auts.len() + 1) as f64;
    let per_tuple = chains.len() as f64
        * hvals.len() as f64
        * (k as f64 + inst.pattern.edge_count() as f64);
    if tuples * per_tuple > WORK_BUDGET {
        return Err(MilpError::BudgetExceeded {
            nodes: (tuples * per_tuple) as u64,
        });
    }

    let global_best = AtomicU64::new(order_bits(f64::NEG_INFINITY));
    let candidates: Vec<Option<Candidate>> = (0..avals.len())
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0u16; k];
            idx[0] = first as u16;
            let mut best: Option<Candidate> = None;
            enumerate_alpha(
                inst,
                &avals,
                &hvals,
                &chains,
                &auts,
                &mut idx,
                1,
                first as f64 * step,
                step,
                &global_best,
                &mut best,
            );
            best
        })
        .collect();

    let mut winner: Option<Candidate> = None;
    for cand in candidates.into_iter().flatten() {
        let replace = match &winner {
            None => true,
            Some(w) => {
                cand.value > w.value + TOL
                    || ((cand.value - w.value).abs() <= TOL
                        && (cand.alpha_idx.as_slice(), cand.chain_idx)
                            < (w.alpha_idx.as_slice(), w.chain_idx))
            }
        };
        if replace {
            winner = Some(cand);
        }
    }
    let winner = winner.ok_or(MilpError::NoFeasibleGridPoint)?;

    // Reconstruct the winning heights and assemble the assignment.
    let alpha: Vec<f64> = winner.alpha_idx.iter().map(|&i| avals[i as usize]).collect();
    let chain = &chains[winner.chain_idx];
    let mut heights = Vec::new();
    let tail = chain_best(chain, &alpha, &hvals, d, inst.gamma, Some(&mut heights))
        .expect("winner must be feasible");
    let value = k as f64 + (1.0 - tau) * alpha.iter().sum::<f64>() + tail;
    let beta: Vec<f64> = chain
        .pair_level
        .iter()
        .map(|&level| hvals[heights[level]])
        .collect();
    Ok(GridSolution {
        assignment: Assignment { alpha, beta },
        value,
    })
}

#[allow(clippy::too_many_arguments)]
fn enumerate_alpha(
    inst: &OptInstance,
    avals: &[f64],
    hvals: &[f64],
    chains: &[Chain],
    auts: &[Vec<usize>],
    idx: &mut Vec<u16>,
    depth: usize,
    partial_sum: f64,
    step: f64,
    global_best: &AtomicU64,
    best: &mut Option<Candidate>,
) {
    let k = idx.len();
    let tau = inst.tau;
    // Remaining alphas only lower k + (1-tau) * sum, so prune on the partial.
    let bound = k as f64 + (1.0 - tau) * partial_sum;
    if bound <= from_order_bits(global_best.load(Ordering::Relaxed)) + TOL {
        return;
    }
    if depth == k {
        // Orbit dedup: only evaluate lexicographically minimal relabelings.
        for aut in auts {
            let mut cmp = std::cmp::Ordering::Equal;
            for i in 0..k {
                cmp = idx[aut[i] - 1].cmp(&idx[i]);
                if cmp != std::cmp::Ordering::Equal {
                    break;
                }
            }
            if cmp == std::cmp::Ordering::Less {
                return;
            }
        }
        let alpha: Vec<f64> = idx.iter().map(|&i| avals[i as usize]).collect();
        let d = inst.dim as f64;
        for (ci, chain) in chains.iter().enumerate() {
            if let Some(tail) = chain_best(chain, &alpha, hvals, d, inst.gamma, None) {
                let value = k as f64 + (1.0 - tau) * partial_sum + tail;
                global_best.fetch_max(order_bits(value), Ordering::Relaxed);
                let replace = match best {
                    None => true,
                    Some(w) => {
                        value > w.value + TOL
                            || ((value - w.value).abs() <= TOL
                                && (idx.as_slice(), ci) < (w.alpha_idx.as_slice(), w.chain_idx))
                    }
                };
                if replace {
                    *best = Some(Candidate {
                        value,
                        alpha_idx: idx.clone(),
                        chain_idx: ci,
                    });
                }
            }
        }
        return;
    }
    for a in 0..avals.len() {
        idx[depth] = a as u16;
        enumerate_alpha(
            inst,
            avals,
            hvals,
            chains,
            auts,
            idx,
            depth + 1,
            partial_sum + a as f64 * step,
            step,
            global_best,
            best,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::parse_pattern;

    fn inst(text: &str, tau: f64, variant: Mode) -> OptInstance {
        OptInstance {
            pattern: parse_pattern(text).unwrap(),
            tau,
            gamma: Gamma::Finite(2.0),
            dim: 1,
            variant,
        }
    }

    #[test]
    fn chain_counts() {
        assert_eq!(build_chains(&inst("k=3; edges=1-2", 2.5, Mode::General)).len(), 3);
        assert_eq!(build_chains(&inst("k=4; edges=1-2", 2.5, Mode::General)).len(), 18);
    }

    #[test]
    fn edgeless_two_vertices() {
        let sol = grid_oracle(&inst("k=2; edges=", 2.5, Mode::General), 0.05).unwrap();
        assert_eq!(sol.value, 2.0);
        assert_eq!(sol.assignment.alpha, vec![0.0, 0.0]);
        assert_eq!(sol.assignment.beta, vec![0.0]);
    }

    #[test]
    fn triangle_low_tau_hits_half_point() {
        // 3(3 - 2.2)/2 = 1.2, attained at alpha = 1/2, beta = 0 on the lattice.
        let sol = grid_oracle(&inst("k=3; edges=1-2,1-3,2-3", 2.2, Mode::General), 0.05).unwrap();
        assert!((sol.value - 1.2).abs() < 1e-9, "value {}", sol.value);
    }

    #[test]
    fn triangle_high_tau_hits_geometric_point() {
        let sol = grid_oracle(&inst("k=3; edges=1-2,1-3,2-3", 2.7, Mode::General), 0.05).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-9, "value {}", sol.value);
    }

    #[test]
    fn grid_maximum_matches_brute_force_on_coarse_lattice() {
        // Cross-check the chain DP against a direct sweep over all beta
        // tuples with explicit triangle-max filtering.
        let step = 0.25;
        for variant in [Mode::General, Mode::Induced] {
            for text in ["k=3; edges=1-2,1-3,2-3", "k=3; edges=1-2,2-3"] {
                let inst = inst(text, 2.6, variant);
                let sol = grid_oracle(&inst, step).unwrap();
                let avals = lattice_up_to(step, 1.0 / (inst.tau - 1.0));
                let bvals: Vec<f64> = lattice_up_to(step, 1.0).into_iter().map(|v| -v).collect();
                let mut best = f64::NEG_INFINITY;
                for &a1 in &avals {
                    for &a2 in &avals {
                        for &a3 in &avals {
                            for &b12 in &bvals {
                                for &b13 in &bvals {
                                    for &b23 in &bvals {
                                        let a = Assignment {
                                            alpha: vec![a1, a2, a3],
                                            beta: vec![b12, b13, b23],
                                        };
                                        if crate::milp::is_feasible(&inst, &a, 1e-12) {
                                            let v = crate::milp::objective_f(&inst, &a).unwrap();
                                            best = best.max(v);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                assert!(
                    (sol.value - best).abs() < 1e-9,
                    "{text} {variant}: dp={} sweep={best}",
                    sol.value
                );
            }
        }
    }

    #[test]
    fn budget_guard_trips_on_fine_k5() {
        let c5 = inst("k=5; edges=1-2,2-3,3-4,4-5,1-5", 2.2, Mode::General);
        assert!(matches!(
            grid_oracle(&c5, 0.002),
            Err(MilpError::BudgetExceeded { .. })
        ));
    }
}
