//! Undirected simple graphs.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::ratio::Ratio;
use crate::rng::{unit_f64, CounterRng};
use crate::{Error, Result};

/// Default cap on Erdős–Rényi redraws when a connected graph is required.
pub const DEFAULT_MAX_REDRAWS: usize = 1000;

/// An immutable undirected simple graph on nodes `0..n`.
///
/// Neighbour lists are stored in compressed rows and are sorted, so
/// iteration order is deterministic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate edges (in either
    /// orientation) are collapsed.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut canon = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::EndpointOutOfRange(u, v, n));
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        canon.dedup();
        Ok(Self::from_canonical(n, canon))
    }

    fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; 2 * edges.len()];
        for &(u, v) in &edges {
            targets[fill[u]] = v;
            fill[u] += 1;
            targets[fill[v]] = u;
            fill[v] += 1;
        }
        for i in 0..n {
            targets[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        Graph {
            n,
            offsets,
            targets,
            edges,
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::from_canonical(n.max(1), edges)
    }

    pub fn path(n: usize) -> Self {
        Self::from_canonical(n.max(1), (1..n).map(|i| (i - 1, i)).collect())
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least three nodes");
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((0, n - 1));
        edges.sort_unstable();
        Self::from_canonical(n, edges)
    }

    /// Node 0 is the centre.
    pub fn star(n: usize) -> Self {
        Self::from_canonical(n.max(1), (1..n).map(|i| (0, i)).collect())
    }

    /// G(n, p) with a counter-based generator: the indicator of the `k`-th
    /// unordered pair in draw `a` depends only on `(seed, a, k)`. With
    /// `require_connected`, disconnected draws are discarded and the next
    /// draw index is used, up to `max_redraws` draws in total.
    pub fn erdos_renyi(
        n: usize,
        p: f64,
        seed: u64,
        require_connected: bool,
        max_redraws: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        if max_redraws == 0 {
            return Err(Error::InvalidParameter("max_redraws must be at least 1".into()));
        }
        for attempt in 0..max_redraws {
            let stream = CounterRng::with_stream(seed, attempt as u64);
            let mut edges = Vec::new();
            let mut k = 0u64;
            for i in 0..n {
                for j in i + 1..n {
                    if unit_f64(stream.word_at(k)) < p {
                        edges.push((i, j));
                    }
                    k += 1;
                }
            }
            let g = Self::from_canonical(n, edges);
            if !require_connected || g.is_connected() {
                return Ok(g);
            }
        }
        Err(Error::RedrawBudgetExhausted {
            attempts: max_redraws,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Canonical edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Breadth-first search from node 0.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = vec![0usize];
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop() {
            for &v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push(v);
                }
            }
        }
        reached == self.n
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    /// The number of neighbours of `i` whose flag in `members` is set.
    pub fn neighbors_in(&self, i: usize, members: &[bool]) -> usize {
        self.neighbors(i).iter().filter(|&&j| members[j]).count()
    }

    /// Exact cohesiveness of `subset`: the minimum over its members of the
    /// fraction of their neighbours that lie inside the subset.
    pub fn cohesiveness(&self, subset: &[usize]) -> Result<Cohesion> {
        if subset.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut members = vec![false; self.n];
        for &i in subset {
            if i >= self.n {
                return Err(Error::NodeOutOfRange { node: i, n: self.n });
            }
            members[i] = true;
        }
        let mut sorted: Vec<usize> = subset.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut value = Ratio::ONE;
        for &i in &sorted {
            let d = self.degree(i);
            if d == 0 {
                return Err(Error::IsolatedNode(i));
            }
            let inside = self.neighbors_in(i, &members);
            let frac = Ratio::new(inside as i128, d as i128).expect("degree is positive");
            if frac < value {
                value = frac;
            }
        }
        Ok(Cohesion {
            value,
            subset: sorted,
        })
    }

    /// Principal adjacency eigenvector by power iteration on `A + I`.
    ///
    /// The unit shift keeps bipartite graphs from oscillating between the
    /// `±κ` eigenvectors. The returned vector is nonnegative with unit L2
    /// norm and satisfies `‖Av − κv‖∞ ≤ tol`.
    pub fn eigenvector_centrality(&self, tol: f64, max_iter: usize) -> Result<Centrality> {
        if !self.is_connected() {
            return Err(Error::NotConnected);
        }
        let n = self.n;
        let mut v = vec![1.0 / libm::sqrt(n as f64); n];
        let mut av = vec![0.0; n];
        for iteration in 1..=max_iter {
            self.adjacency_apply(&v, &mut av);
            let kappa: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
            let residual = v
                .iter()
                .zip(&av)
                .map(|(x, ax)| (ax - kappa * x).abs())
                .fold(0.0, f64::max);
            if residual <= tol {
                return Ok(Centrality {
                    weights: v,
                    kappa,
                    residual,
                    iterations: iteration,
                });
            }
            let mut norm = 0.0;
            for (x, ax) in v.iter_mut().zip(&av) {
                *x += ax;
                norm += *x * *x;
            }
            let norm = libm::sqrt(norm);
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Err(Error::NoConvergence {
            what: "eigenvector centrality",
            iterations: max_iter,
        })
    }

    fn adjacency_apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.neighbors(i).iter().map(|&j| x[j]).sum();
        }
    }
}

/// Cohesiveness of a node subset, as an exact fraction in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cohesion {
    pub value: Ratio,
    pub subset: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Centrality {
    pub weights: Vec<f64>,
    pub kappa: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_and_dyad_degrees() {
        let star = Graph::new(3, [(0, 1), (0, 2)]).unwrap();
        assert_eq!(star.degrees(), vec![2, 1, 1]);
        let dyad = Graph::new(2, [(0, 1)]).unwrap();
        assert_eq!(dyad.degrees(), vec![1, 1]);
    }

    #[test]
    fn duplicates_collapse() {
        let g = Graph::new(3, [(0, 1), (0, 1), (1, 0)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degrees(), vec![1, 1, 0]);
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(Graph::new(3, [(0, 3)]), Err(Error::EndpointOutOfRange(0, 3, 3)));
        assert_eq!(Graph::new(3, [(1, 1)]), Err(Error::SelfLoop(1)));
    }

    #[test]
    fn connectivity() {
        assert!(Graph::path(2).is_connected());
        assert!(Graph::star(3).is_connected());
        let split = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(!split.is_connected());
        assert!(Graph::new(1, []).unwrap().is_connected());
    }

    #[test]
    fn cohesiveness_examples() {
        let k4 = Graph::complete(4);
        assert_eq!(k4.cohesiveness(&[0, 1]).unwrap().value, Ratio::new(1, 3).unwrap());
        assert_eq!(k4.cohesiveness(&[0, 1, 2, 3]).unwrap().value, Ratio::ONE);
        let dyad = Graph::path(2);
        assert_eq!(dyad.cohesiveness(&[0]).unwrap().value, Ratio::ZERO);
        assert_eq!(dyad.cohesiveness(&[]), Err(Error::EmptySubset));
        let g = Graph::new(3, [(0, 1)]).unwrap();
        assert_eq!(g.cohesiveness(&[2]), Err(Error::IsolatedNode(2)));
    }

    #[test]
    fn er_is_deterministic() {
        let a = Graph::erdos_renyi(100, 0.1, 99, false, 1).unwrap();
        let b = Graph::erdos_renyi(100, 0.1, 99, false, 1).unwrap();
        assert_eq!(a, b);
        let c = Graph::erdos_renyi(100, 0.1, 100, false, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn er_empty_graph_never_connects() {
        assert_eq!(
            Graph::erdos_renyi(5, 0.0, 1, true, 10),
            Err(Error::RedrawBudgetExhausted { attempts: 10 })
        );
        assert_eq!(Graph::erdos_renyi(5, 1.0, 1, true, 1).unwrap(), Graph::complete(5));
        assert!(Graph::erdos_renyi(5, 1.5, 1, false, 1).is_err());
    }

    #[test]
    fn centrality_of_k3_is_uniform() {
        let c = Graph::complete(3).eigenvector_centrality(1e-12, 10_000).unwrap();
        for w in c.weights {
            assert!((w - 1.0 / libm::sqrt(3.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn centrality_of_path3() {
        // Eigenpair of [[0,1,0],[1,0,1],[0,1,0]]: κ = √2, v ∝ (1, √2, 1).
        let c = Graph::path(3).eigenvector_centrality(1e-12, 10_000).unwrap();
        assert!((c.kappa - libm::sqrt(2.0)).abs() < 1e-10);
        assert!((c.weights[0] - 0.5).abs() < 1e-10);
        assert!((c.weights[1] - libm::sqrt(0.5)).abs() < 1e-10);
        assert!((c.weights[2] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn centrality_of_star() {
        let c = Graph::star(3).eigenvector_centrality(1e-12, 10_000).unwrap();
        assert!(c.weights[0] > c.weights[1]);
        assert!((c.weights[1] - c.weights[2]).abs() < 1e-12);
        let split = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(split.eigenvector_centrality(1e-9, 10), Err(Error::NotConnected));
    }
}
