use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary directed network stored as a sorted edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Network {
    n_nodes: usize,
    edges: Vec<(u32, u32)>,
}

impl Network {
    pub fn empty(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            edges: Vec::new(),
        }
    }

    /// Duplicate edges are merged; self-loops and out-of-range endpoints
    /// are errors.
    pub fn from_edges(n_nodes: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut edges: Vec<_> = edges.into_iter().collect();
        for (at, &(i, j)) in edges.iter().enumerate() {
            let limit = n_nodes as u64;
            if i as u64 >= limit || j as u64 >= limit {
                return Err(Error::IndexOutOfRange {
                    at,
                    what: "edge endpoint",
                    value: i.max(j) as u64,
                    limit,
                });
            }
            if i == j {
                return Err(Error::SelfLoop { at, node: i });
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Ok(Self { n_nodes, edges })
    }

    /// Complete directed graph without self-loops.
    pub fn complete(n_nodes: usize) -> Self {
        let n = n_nodes as u32;
        let edges = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .collect();
        Self { n_nodes, edges }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn contains(&self, i: u32, j: u32) -> bool {
        self.edges.binary_search(&(i, j)).is_ok()
    }

    /// Out-neighbours of `i`, ascending.
    pub fn successors(&self, i: u32) -> &[(u32, u32)] {
        let lo = self.edges.partition_point(|&(a, _)| a < i);
        let hi = self.edges.partition_point(|&(a, _)| a <= i);
        &self.edges[lo..hi]
    }

    pub fn is_subset_of(&self, other: &Network) -> bool {
        self.edges.iter().all(|&(i, j)| other.contains(i, j))
    }

    /// Dense 0/1 adjacency, row-major. Only sensible for small networks.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut dense = vec![vec![0u8; self.n_nodes]; self.n_nodes];
        for &(i, j) in &self.edges {
            dense[i as usize][j as usize] = 1;
        }
        dense
    }

    pub fn transpose(&self) -> Self {
        let mut edges: Vec<_> = self.edges.iter().map(|&(i, j)| (j, i)).collect();
        edges.sort_unstable();
        Self {
            n_nodes: self.n_nodes,
            edges,
        }
    }

    pub fn union(&self, other: &Network) -> Result<Self> {
        if self.n_nodes != other.n_nodes {
            return Err(Error::ShapeMismatch(self.n_nodes, other.n_nodes));
        }
        Network::from_edges(
            self.n_nodes,
            self.edges.iter().chain(other.edges.iter()).copied(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_edges_sorts_and_dedups() {
        let net = Network::from_edges(3, [(2, 0), (0, 1), (2, 0)]).unwrap();
        assert_eq!(net.edges(), &[(0, 1), (2, 0)]);
        assert!(net.contains(2, 0));
        assert!(!net.contains(0, 2));
        assert!(Network::from_edges(3, [(1, 1)]).is_err());
        assert!(Network::from_edges(3, [(1, 3)]).is_err());
    }

    #[test]
    fn successors_slice() {
        let net = Network::from_edges(4, [(1, 0), (1, 3), (2, 1)]).unwrap();
        assert_eq!(net.successors(1), &[(1, 0), (1, 3)]);
        assert!(net.successors(0).is_empty());
        assert_eq!(Network::complete(3).n_edges(), 6);
    }
}
