//! Perfect matchings in small bipartite graphs (augmenting paths), with a
//! Hall-violating witness when none exists.

use alloc::vec;
use alloc::vec::Vec;

/// A set of left vertices whose neighbourhood is strictly smaller.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HallViolation {
    pub rows: Vec<usize>,
    pub neighbours: Vec<usize>,
}

/// Adjacency of a bipartite graph on `{0..n} × {0..n}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipartiteGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn from_fn(n: usize, mut edge: impl FnMut(usize, usize) -> bool) -> Self {
        let adj = (0..n)
            .map(|i| (0..n).filter(|&j| edge(i, j)).collect())
            .collect();
        BipartiteGraph { n, adj }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(&j)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn augment(&self, u: usize, seen: &mut [bool], match_right: &mut [Option<usize>]) -> bool {
        // a free neighbour is taken before any rematching
        if let Some(&v) = self.adj[u].iter().find(|&&v| !seen[v] && match_right[v].is_none()) {
            seen[v] = true;
            match_right[v] = Some(u);
            return true;
        }
        for &v in &self.adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if match_right[v].is_none_or(|w| self.augment(w, seen, match_right)) {
                match_right[v] = Some(u);
                return true;
            }
        }
        false
    }

    /// Perfect matching as `left → right`, or a Hall violation.
    ///
    /// Left vertices are processed in index order and neighbours in
    /// increasing order, so the result is deterministic; when the identity
    /// is a perfect matching it is the one returned.
    pub fn perfect_matching(&self) -> Result<Vec<usize>, HallViolation> {
        let mut match_right: Vec<Option<usize>> = vec![None; self.n];
        let mut free_left = None;
        for u in 0..self.n {
            let mut seen = vec![false; self.n];
            if !self.augment(u, &mut seen, &mut match_right) && free_left.is_none() {
                free_left = Some(u);
            }
        }
        if let Some(root) = free_left {
            return Err(self.hall_witness(root, &match_right));
        }
        let mut left = vec![0; self.n];
        for (v, u) in match_right.iter().enumerate() {
            left[u.expect("matching is perfect")] = v;
        }
        Ok(left)
    }

    /// Left vertices reachable from an unmatched `root` by alternating paths;
    /// their neighbourhood is matched into the set minus `root`.
    fn hall_witness(&self, root: usize, match_right: &[Option<usize>]) -> HallViolation {
        let mut in_rows = vec![false; self.n];
        let mut in_cols = vec![false; self.n];
        let mut stack = vec![root];
        in_rows[root] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.adj[u] {
                if in_cols[v] {
                    continue;
                }
                in_cols[v] = true;
                if let Some(w) = match_right[v] {
                    if !in_rows[w] {
                        in_rows[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        HallViolation {
            rows: (0..self.n).filter(|&i| in_rows[i]).collect(),
            neighbours: (0..self.n).filter(|&j| in_cols[j]).collect(),
        }
    }
}

/// Lexicographic successor of a permutation, in place; false at the last one.
pub fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_perfect_matching() {
        let g = BipartiteGraph::from_fn(3, |i, j| (i + j) % 3 != 0 || i == 0);
        let m = g.perfect_matching().unwrap();
        let mut used = [false; 3];
        for (i, &j) in m.iter().enumerate() {
            assert!(g.has_edge(i, j));
            assert!(!used[j]);
            used[j] = true;
        }
    }

    #[test]
    fn reports_hall_violation() {
        // rows 0 and 1 both only see column 0
        let g = BipartiteGraph::from_fn(3, |i, j| if i < 2 { j == 0 } else { true });
        let w = g.perfect_matching().unwrap_err();
        assert!(w.rows.len() > w.neighbours.len());
        for &r in &w.rows {
            for j in 0..3 {
                if g.has_edge(r, j) {
                    assert!(w.neighbours.contains(&j));
                }
            }
        }
    }

    #[test]
    fn enumerates_all_permutations() {
        let mut p = [0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(p, [3, 2, 1, 0]);
    }
}
