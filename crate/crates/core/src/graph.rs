//! Qubit connectivity graphs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl ConnectivityGraph {
    /// Edges are normalized to `(min, max)` and sorted lexicographically.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("graph with no vertices".into()));
        }
        let mut norm = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::OutOfRange(format!("edge ({a},{b}) on {n} vertices")));
            }
            if a == b {
                return Err(Error::Invalid(format!("self-loop on vertex {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        let before = norm.len();
        norm.dedup();
        if norm.len() != before {
            return Err(Error::Invalid("duplicate edge".into()));
        }
        Ok(Self { n, edges: norm })
    }

    /// Complete bipartite graph between `{0..k}` and `{k..n}`.
    pub fn bipartite(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::Invalid(format!("bipartite split {k} of {n}")));
        }
        let edges: Vec<_> = (0..k).flat_map(|a| (k..n).map(move |b| (a, b))).collect();
        Self::new(n, &edges)
    }

    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Invalid("ring needs at least 3 vertices".into()));
        }
        let edges: Vec<_> = (0..n).map(|a| (a, (a + 1) % n)).collect();
        Self::new(n, &edges)
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|a| (a - 1, a)).collect();
        Self::new(n, &edges)
    }

    /// Star with centre 0.
    pub fn star(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|a| (0, a)).collect();
        Self::new(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        Self::new(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn neighbours(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// BFS distances from `src`; unreachable vertices get `usize::MAX`.
    pub fn distances_from(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(v) = queue.pop_front() {
            for w in self.neighbours(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Greedy max-dispersion choice of `k` logical qubits: start at the
    /// minimum-degree vertex, then repeatedly take the vertex farthest from
    /// the chosen set. Ties go to the smallest index.
    pub fn select_logical_qubits(&self, k: usize) -> Result<Vec<usize>> {
        if k > self.n {
            return Err(Error::Invalid(format!("{k} logical qubits on {} vertices", self.n)));
        }
        if k == 0 {
            return Ok(vec![]);
        }
        let first = (0..self.n).min_by_key(|&v| (self.degree(v), v)).unwrap();
        let mut chosen = vec![first];
        let mut nearest = self.distances_from(first);
        while chosen.len() < k {
            let next = (0..self.n)
                .filter(|v| !chosen.contains(v))
                .max_by_key(|&v| (nearest[v], std::cmp::Reverse(v)))
                .unwrap();
            chosen.push(next);
            for (d, e) in nearest.iter_mut().zip(self.distances_from(next)) {
                *d = (*d).min(e);
            }
        }
        Ok(chosen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ConnectivityGraph::new(3, &[(0, 0)]).is_err());
        assert!(ConnectivityGraph::new(3, &[(0, 3)]).is_err());
        assert!(ConnectivityGraph::new(3, &[(0, 1), (1, 0)]).is_err());
        let g = ConnectivityGraph::new(3, &[(2, 1), (0, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn family_sizes() {
        assert_eq!(ConnectivityGraph::bipartite(2, 5).unwrap().edge_count(), 6);
        assert_eq!(ConnectivityGraph::ring(7).unwrap().edge_count(), 7);
        assert_eq!(ConnectivityGraph::complete(7).unwrap().edge_count(), 21);
        assert_eq!(ConnectivityGraph::star(6).unwrap().max_degree(), 5);
    }

    #[test]
    fn logical_selection() {
        let k5 = ConnectivityGraph::complete(5).unwrap();
        assert_eq!(k5.select_logical_qubits(2).unwrap(), vec![0, 1]);
        let c6 = ConnectivityGraph::ring(6).unwrap();
        assert_eq!(c6.select_logical_qubits(2).unwrap(), vec![0, 3]);
        assert_eq!(c6.select_logical_qubits(6).unwrap().len(), 6);
        assert!(c6.select_logical_qubits(7).is_err());
        let star = ConnectivityGraph::star(5).unwrap();
        assert_eq!(star.select_logical_qubits(2).unwrap(), vec![1, 2]);
    }
}
