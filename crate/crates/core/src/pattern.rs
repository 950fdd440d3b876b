//! Small fixed patterns: parsing, structural tests, and census enumeration.
//!
//! A pattern is a simple labeled graph on vertices `1..=k`. Vertices are
//! 1-based throughout, and serialized forms keep the 1-based labels.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Largest `k` accepted by [`enumerate_patterns`].
pub const MAX_ENUMERATE_K: usize = 6;
/// Largest `k` accepted by [`automorphism_count`] and [`automorphisms`].
pub const MAX_AUTOMORPHISM_K: usize = 8;
/// Largest `k` accepted by [`is_hamiltonian_pattern`].
pub const MAX_HAMILTONIAN_K: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum PatternError {
    /// Text did not match the `k=<int>; edges=<i>-<j>,...` grammar.
    Malformed { pos: usize, expected: &'static str },
    /// An edge endpoint lies outside `1..=k`.
    OutOfRange { pos: usize, vertex: usize, k: usize },
    SelfLoop { pos: usize, vertex: usize },
    DuplicateEdge { pos: usize, i: usize, j: usize },
    /// Vertex count outside the bound supported by the operation.
    KOutOfBounds { k: usize, max: usize },
    /// Exact counting and orderings require a connected pattern.
    Disconnected,
}

impl fmt::Display for PatternError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternError::Malformed { pos, expected } => {
                write!(f, "malformed pattern at byte {pos}: expected {expected}")
            }
            PatternError::OutOfRange { pos, vertex, k } => {
                write!(f, "vertex {vertex} out of range 1..={k} at byte {pos}")
            }
            PatternError::SelfLoop { pos, vertex } => {
                write!(f, "self-loop {vertex}-{vertex} at byte {pos}")
            }
            PatternError::DuplicateEdge { pos, i, j } => {
                write!(f, "duplicate edge {i}-{j} at byte {pos}")
            }
            PatternError::KOutOfBounds { k, max } => {
                write!(f, "k={k} exceeds the supported bound {max}")
            }
            PatternError::Disconnected => write!(f, "pattern is disconnected"),
        }
    }
}

impl std::error::Error for PatternError {}

/// A simple labeled graph on `k` vertices, the motif being counted or optimized.
///
/// Edges are stored as sorted pairs `(i, j)` with `1 <= i < j <= k`, kept in
/// lexicographic order. The JSON form is `{"k":4,"edges":[[1,2],[2,3]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern {
    k: usize,
    edges: Vec<(usize, usize)>,
}

impl Pattern {
    /// Builds a pattern, normalizing edge order and rejecting self-loops,
    /// duplicates, and endpoints outside `1..=k`.
    pub fn new(k: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, PatternError> {
        if k == 0 {
            return Err(PatternError::KOutOfBounds { k, max: usize::MAX });
        }
        let mut seen = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(PatternError::SelfLoop { pos: 0, vertex: a });
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if i < 1 || j > k {
                let v = if i < 1 { i } else { j };
                return Err(PatternError::OutOfRange { pos: 0, vertex: v, k });
            }
            if !seen.insert((i, j)) {
                return Err(PatternError::DuplicateEdge { pos: 0, i, j });
            }
        }
        Ok(Pattern {
            k,
            edges: seen.into_iter().collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&(i, j)).is_ok()
    }

    /// Neighbors of vertex `v` (1-based).
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for &(i, j) in &self.edges {
            if i == v {
                out.push(j);
            } else if j == v {
                out.push(i);
            }
        }
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(i, j)| i == v || j == v).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.k];
        for &(i, j) in &self.edges {
            deg[i - 1] += 1;
            deg[j - 1] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        if self.k == 1 {
            return true;
        }
        let mut seen = vec![false; self.k];
        let mut stack = vec![1usize];
        seen[0] = true;
        let mut visited = 1;
        while let Some(v) = stack.pop() {
            for u in self.neighbors(v) {
                if !seen[u - 1] {
                    seen[u - 1] = true;
                    visited += 1;
                    stack.push(u);
                }
            }
        }
        visited == self.k
    }

    /// Connected and acyclic.
    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.edges.len() == self.k - 1
    }

    /// Grammar form `k=<k>; edges=<i>-<j>,...`.
    pub fn to_text(&self) -> String {
        let edges = self
            .edges
            .iter()
            .map(|(i, j)| format!("{i}-{j}"))
            .collect::<Vec<_>>()
            .join(",");
        format!("k={}; edges={}", self.k, edges)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Upper-triangular pair list for `k` vertices in row-major order:
/// `(1,2), (1,3), ..., (1,k), (2,3), ...`.
pub fn pairs(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(k * (k.saturating_sub(1)) / 2);
    for i in 1..=k {
        for j in (i + 1)..=k {
            out.push((i, j));
        }
    }
    out
}

/// Index of the unordered pair `{a, b}` in the [`pairs`] layout.
pub fn pair_index(k: usize, a: usize, b: usize) -> usize {
    let (i, j) = if a < b { (a, b) } else { (b, a) };
    debug_assert!(i >= 1 && j <= k && i < j);
    (i - 1) * k - (i - 1) * i / 2 + (j - i - 1)
}

/// Parses the grammar `k=<int>; edges=<i>-<j>[,<i>-<j>]*` (edges may be empty).
///
/// Errors carry the byte position of the offending token.
pub fn parse_pattern(text: &str) -> Result<Pattern, PatternError> {
    let mut cursor = Cursor::new(text);
    cursor.skip_ws();
    cursor.expect("k=", "`k=`")?;
    let k = cursor.parse_usize("vertex count")?;
    if k == 0 {
        return Err(PatternError::Malformed {
            pos: 0,
            expected: "vertex count >= 1",
        });
    }
    cursor.skip_ws();
    cursor.expect(";", "`;`")?;
    cursor.skip_ws();
    cursor.expect("edges=", "`edges=`")?;

    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    cursor.skip_ws();
    if !cursor.at_end() {
        loop {
            cursor.skip_ws();
            let pos = cursor.pos;
            let a = cursor.parse_usize("edge endpoint")?;
            cursor.expect("-", "`-`")?;
            let b = cursor.parse_usize("edge endpoint")?;
            if a == b {
                return Err(PatternError::SelfLoop { pos, vertex: a });
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if i < 1 || j > k {
                let v = if i < 1 { i } else { j };
                return Err(PatternError::OutOfRange { pos, vertex: v, k });
            }
            if !seen.insert((i, j)) {
                return Err(PatternError::DuplicateEdge { pos, i, j });
            }
            edges.push((i, j));
            cursor.skip_ws();
            if cursor.at_end() {
                break;
            }
            cursor.expect(",", "`,` or end of input")?;
        }
    }
    Pattern::new(k, edges)
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.text.len()
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(|c: char| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, token: &str, expected: &'static str) -> Result<(), PatternError> {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(PatternError::Malformed {
                pos: self.pos,
                expected,
            })
        }
    }

    fn parse_usize(&mut self, expected: &'static str) -> Result<usize, PatternError> {
        let digits = self.rest().chars().take_while(|c| c.is_ascii_digit()).count();
        if digits == 0 {
            return Err(PatternError::Malformed {
                pos: self.pos,
                expected,
            });
        }
        let value = self.rest()[..digits].parse().map_err(|_| PatternError::Malformed {
            pos: self.pos,
            expected,
        })?;
        self.pos += digits;
        Ok(value)
    }
}

/// The vertex order of a spanning cycle when one exists. `k <= 2` never
/// qualifies.
pub fn hamiltonian_cycle(p: &Pattern) -> Result<Option<Vec<usize>>, PatternError> {
    let k = p.k();
    if k > MAX_HAMILTONIAN_K {
        return Err(PatternError::KOutOfBounds {
            k,
            max: MAX_HAMILTONIAN_K,
        });
    }
    if k < 3 || p.degrees().iter().any(|&d| d < 2) {
        return Ok(None);
    }
    // Backtracking over simple paths anchored at vertex 1.
    let mut used = vec![false; k + 1];
    used[1] = true;
    let mut path = vec![1usize];
    fn extend(p: &Pattern, used: &mut [bool], path: &mut Vec<usize>) -> bool {
        if path.len() == p.k() {
            return p.has_edge(*path.last().unwrap(), 1);
        }
        for next in p.neighbors(*path.last().unwrap()) {
            if !used[next] {
                used[next] = true;
                path.push(next);
                if extend(p, used, path) {
                    return true;
                }
                path.pop();
                used[next] = false;
            }
        }
        false
    }
    if extend(p, &mut used, &mut path) {
        Ok(Some(path))
    } else {
        Ok(None)
    }
}

/// True iff the pattern contains a spanning cycle, i.e. some relabeling puts
/// the cycle `1-2-...-k-1` inside the edge set.
pub fn is_hamiltonian_pattern(p: &Pattern) -> Result<bool, PatternError> {
    Ok(hamiltonian_cycle(p)?.is_some())
}

/// All vertex permutations mapping the edge set onto itself, each given as a
/// map `perm[v-1] = image of v`.
pub fn automorphisms(p: &Pattern) -> Result<Vec<Vec<usize>>, PatternError> {
    let k = p.k();
    if k > MAX_AUTOMORPHISM_K {
        return Err(PatternError::KOutOfBounds {
            k,
            max: MAX_AUTOMORPHISM_K,
        });
    }
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (1..=k).collect();
    loop {
        if p.edges()
            .iter()
            .all(|&(i, j)| p.has_edge(perm[i - 1], perm[j - 1]))
        {
            out.push(perm.clone());
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(out)
}

/// Number of vertex permutations mapping edges onto edges exactly.
pub fn automorphism_count(p: &Pattern) -> Result<u64, PatternError> {
    Ok(automorphisms(p)?.len() as u64)
}

fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// An ordering `v_1..v_k` of the vertices where every `v_t` (t >= 2) is
/// adjacent to some earlier `v_s`. Vertices are picked greedily by descending
/// degree (ties by index), which is also the candidate order the counting
/// backtracker wants.
pub fn connected_ordering(p: &Pattern) -> Result<Vec<usize>, PatternError> {
    if !p.is_connected() {
        return Err(PatternError::Disconnected);
    }
    let deg = p.degrees();
    let k = p.k();
    let start = (1..=k).max_by_key(|&v| (deg[v - 1], std::cmp::Reverse(v))).unwrap();
    let mut order = vec![start];
    let mut placed = vec![false; k + 1];
    placed[start] = true;
    while order.len() < k {
        let next = (1..=k)
            .filter(|&v| !placed[v] && order.iter().any(|&u| p.has_edge(u, v)))
            .max_by_key(|&v| (deg[v - 1], std::cmp::Reverse(v)))
            .expect("connected pattern always has a frontier vertex");
        placed[next] = true;
        order.push(next);
    }
    Ok(order)
}

/// Adjacency bitmask over the [`pairs`] layout, bit `pair_index(k,i,j)` set
/// iff `{i,j}` is an edge.
fn edge_mask(p: &Pattern) -> u64 {
    let mut mask = 0u64;
    for &(i, j) in p.edges() {
        mask |= 1 << pair_index(p.k(), i, j);
    }
    mask
}

/// Lexicographically smallest adjacency bitmask over all `k!` relabelings.
pub fn canonical_code(p: &Pattern) -> u64 {
    let k = p.k();
    let mask = edge_mask(p);
    let pair_list = pairs(k);
    let mut best = u64::MAX;
    let mut perm: Vec<usize> = (1..=k).collect();
    loop {
        let mut remapped = 0u64;
        for (idx, &(i, j)) in pair_list.iter().enumerate() {
            if mask >> idx & 1 == 1 {
                remapped |= 1 << pair_index(k, perm[i - 1], perm[j - 1]);
            }
        }
        best = best.min(remapped);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best
}

fn pattern_from_mask(k: usize, mask: u64) -> Pattern {
    let edges: Vec<_> = pairs(k)
        .into_iter()
        .enumerate()
        .filter(|(idx, _)| mask >> idx & 1 == 1)
        .map(|(_, e)| e)
        .collect();
    Pattern::new(k, edges).expect("mask edges are valid by construction")
}

/// One canonical representative per isomorphism class of patterns on `k`
/// vertices, ordered by edge count then canonical code.
pub fn enumerate_patterns(k: usize, connected_only: bool) -> Result<Vec<Pattern>, PatternError> {
    if k == 0 || k > MAX_ENUMERATE_K {
        return Err(PatternError::KOutOfBounds {
            k,
            max: MAX_ENUMERATE_K,
        });
    }
    let m = k * (k - 1) / 2;
    let mut codes = BTreeSet::new();
    for mask in 0..(1u64 << m) {
        let p = pattern_from_mask(k, mask);
        if connected_only && !p.is_connected() {
            continue;
        }
        codes.insert((p.edge_count(), canonical_code(&p)));
    }
    Ok(codes
        .into_iter()
        .map(|(_, code)| pattern_from_mask(k, code))
        .collect())
}

/// Human-readable names for the small census used in reports; `None` for
/// anything outside the named set.
pub fn pattern_name(p: &Pattern) -> Option<&'static str> {
    let mut deg = p.degrees();
    deg.sort_unstable();
    match (p.k(), deg.as_slice()) {
        (1, _) => Some("K1"),
        (2, [1, 1]) => Some("K2"),
        (3, [1, 1, 2]) => Some("P3"),
        (3, [2, 2, 2]) => Some("K3"),
        (4, [1, 1, 1, 3]) => Some("star"),
        (4, [1, 1, 2, 2]) => Some("path"),
        (4, [1, 2, 2, 3]) => Some("paw"),
        (4, [2, 2, 2, 2]) => Some("cycle"),
        (4, [2, 2, 3, 3]) => Some("diamond"),
        (4, [3, 3, 3, 3]) => Some("K4"),
        (5, [2, 2, 2, 2, 2]) => Some("C5"),
        (5, [4, 4, 4, 4, 4]) => Some("K5"),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(text: &str) -> Pattern {
        parse_pattern(text).unwrap()
    }

    #[test]
    fn parse_triangle_and_star() {
        let tri = pat("k=3; edges=1-2,2-3,1-3");
        assert_eq!(tri.k(), 3);
        assert_eq!(tri.edges(), &[(1, 2), (1, 3), (2, 3)]);

        let star = pat("k=4; edges=1-4,2-4,3-4");
        assert_eq!(star.edges(), &[(1, 4), (2, 4), (3, 4)]);

        let empty = pat("k=2; edges=");
        assert_eq!(empty.edge_count(), 0);
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_pattern("k=2; edges=2-2") {
            Err(PatternError::SelfLoop { pos, vertex: 2 }) => assert_eq!(pos, 11),
            other => panic!("expected self-loop error, got {other:?}"),
        }
        match parse_pattern("k=3; edges=1-2,1-2") {
            Err(PatternError::DuplicateEdge { pos, i: 1, j: 2 }) => assert_eq!(pos, 15),
            other => panic!("expected duplicate error, got {other:?}"),
        }
        match parse_pattern("k=3; edges=1-7") {
            Err(PatternError::OutOfRange { vertex: 7, k: 3, .. }) => {}
            other => panic!("expected out-of-range error, got {other:?}"),
        }
        assert!(matches!(
            parse_pattern("k=x"),
            Err(PatternError::Malformed { .. })
        ));
        assert!(matches!(
            parse_pattern("k=3 edges=1-2"),
            Err(PatternError::Malformed { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        for text in ["k=3; edges=1-2,1-3,2-3", "k=5; edges=", "k=4; edges=1-2,3-4"] {
            let p = pat(text);
            assert_eq!(parse_pattern(&p.to_text()).unwrap(), p);
        }
    }

    #[test]
    fn json_form() {
        let p = pat("k=4; edges=1-2,2-3");
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"k":4,"edges":[[1,2],[2,3]]}"#);
        let back: Pattern = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn hamiltonicity() {
        let k4 = pat("k=4; edges=1-2,1-3,1-4,2-3,2-4,3-4");
        assert!(is_hamiltonian_pattern(&k4).unwrap());
        let star = pat("k=4; edges=1-4,2-4,3-4");
        assert!(!is_hamiltonian_pattern(&star).unwrap());
        let c5 = pat("k=5; edges=1-2,2-3,3-4,4-5,1-5");
        assert!(is_hamiltonian_pattern(&c5).unwrap());
        // A theta-like graph: Hamiltonian only via the right relabeling.
        let theta = pat("k=4; edges=1-2,2-3,3-4,1-4,1-3");
        assert!(is_hamiltonian_pattern(&theta).unwrap());
        let k2 = pat("k=2; edges=1-2");
        assert!(!is_hamiltonian_pattern(&k2).unwrap());
    }

    #[test]
    fn hamiltonian_needs_min_degree_two() {
        for k in 2..=5 {
            for p in enumerate_patterns(k, true).unwrap() {
                if is_hamiltonian_pattern(&p).unwrap() {
                    assert!(p.degrees().iter().all(|&d| d >= 2), "pattern {p}");
                }
            }
        }
    }

    #[test]
    fn automorphism_counts() {
        assert_eq!(automorphism_count(&pat("k=3; edges=1-2,1-3,2-3")).unwrap(), 6);
        assert_eq!(automorphism_count(&pat("k=3; edges=1-2,2-3")).unwrap(), 2);
        assert_eq!(automorphism_count(&pat("k=4; edges=1-4,2-4,3-4")).unwrap(), 6);
    }

    #[test]
    fn automorphism_count_divides_factorial() {
        let fact: u64 = [1, 1, 2, 6, 24, 120][5];
        for p in enumerate_patterns(5, false).unwrap() {
            let a = automorphism_count(&p).unwrap();
            assert_eq!(fact % a, 0, "aut={a} for {p}");
        }
    }

    #[test]
    fn connected_ordering_contract() {
        let k3 = pat("k=3; edges=1-2,1-3,2-3");
        let order = connected_ordering(&k3).unwrap();
        assert_eq!(order.len(), 3);

        let p4 = pat("k=4; edges=1-2,2-3,3-4");
        let order = connected_ordering(&p4).unwrap();
        for t in 1..order.len() {
            assert!(
                order[..t].iter().any(|&u| p4.has_edge(u, order[t])),
                "vertex {} not anchored in {:?}",
                order[t],
                order
            );
        }

        let disjoint = pat("k=4; edges=1-2,3-4");
        assert_eq!(connected_ordering(&disjoint), Err(PatternError::Disconnected));
    }

    #[test]
    fn census_sizes() {
        assert_eq!(enumerate_patterns(3, true).unwrap().len(), 2);
        assert_eq!(enumerate_patterns(4, true).unwrap().len(), 6);
        assert_eq!(enumerate_patterns(5, true).unwrap().len(), 21);
        // Known totals including disconnected graphs.
        assert_eq!(enumerate_patterns(4, false).unwrap().len(), 11);
        assert_eq!(enumerate_patterns(5, false).unwrap().len(), 34);
    }

    #[test]
    fn census_is_pairwise_non_isomorphic() {
        for k in 2..=5 {
            let reps = enumerate_patterns(k, true).unwrap();
            for a in 0..reps.len() {
                for b in (a + 1)..reps.len() {
                    assert_ne!(
                        canonical_code(&reps[a]),
                        canonical_code(&reps[b]),
                        "{} ~ {}",
                        reps[a],
                        reps[b]
                    );
                }
            }
        }
    }

    #[test]
    fn k4_census_names() {
        let names: Vec<_> = enumerate_patterns(4, true)
            .unwrap()
            .iter()
            .map(|p| pattern_name(p).unwrap())
            .collect();
        for expect in ["star", "path", "paw", "cycle", "diamond", "K4"] {
            assert!(names.contains(&expect), "{expect} missing from {names:?}");
        }
    }

    #[test]
    fn pair_index_layout() {
        let k = 5;
        for (idx, (i, j)) in pairs(k).into_iter().enumerate() {
            assert_eq!(pair_index(k, i, j), idx);
            assert_eq!(pair_index(k, j, i), idx);
        }
    }
}
