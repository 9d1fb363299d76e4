//! Weighted directed communication graphs.
//!
//! Nodes are 0-based inside the crate. An arc `(j, i)` means agent `i`
//! receives from agent `j`; its weight `w_ij` is strictly positive. The
//! 1-based node ids used in scenario files are converted in
//! [`WeightedDigraph::from_one_based`] and [`WeightedDigraph::one_based_arcs`].

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::DenseMatrix;
use crate::tolerance;

/// A directed arc `from -> to` carrying weight `w_{to,from}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Fixed-topology weighted digraph without self-loops.
///
/// Arcs are stored sorted by `(to, from)` so the in-neighbourhood of each
/// node is a contiguous slice. That order is also the canonical arc order
/// used by channel realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    n: usize,
    arcs: Vec<Arc>,
    offsets: Vec<usize>,
}

impl WeightedDigraph {
    /// Builds a graph from `(from, to, weight)` triples with 0-based ids.
    pub fn new<I>(n: usize, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(invalid("graph must have at least one node"));
        }
        let mut list = Vec::new();
        for (from, to, weight) in arcs {
            for node in [from, to] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if from == to {
                return Err(invalid(format!("self-loop on node {from}")));
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(invalid(format!("arc {from}->{to} has non-positive or non-finite weight {weight}")));
            }
            list.push(Arc { from, to, weight });
        }
        list.sort_by_key(|a| (a.to, a.from));
        if let Some(w) = list.windows(2).find(|w| (w[0].to, w[0].from) == (w[1].to, w[1].from)) {
            return Err(invalid(format!("duplicate arc {}->{}", w[0].from, w[0].to)));
        }
        let mut offsets = vec![0; n + 1];
        for a in &list {
            offsets[a.to + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Ok(Self { n, arcs: list, offsets })
    }

    /// Builds a graph from `[j, i, w_ij]` triples with 1-based ids, the
    /// convention of scenario files.
    pub fn from_one_based(n: usize, arcs: &[(usize, usize, f64)]) -> Result<Self> {
        let mut converted = Vec::with_capacity(arcs.len());
        for &(j, i, w) in arcs {
            if j == 0 || i == 0 {
                return Err(invalid("node ids are 1-based; 0 is not a valid id"));
            }
            converted.push((j - 1, i - 1, w));
        }
        Self::new(n, converted)
    }

    /// Arcs as `(j, i, w_ij)` with 1-based ids.
    pub fn one_based_arcs(&self) -> Vec<(usize, usize, f64)> {
        self.arcs.iter().map(|a| (a.from + 1, a.to + 1, a.weight)).collect()
    }

    /// Complete digraph on `n` nodes with every weight equal to `weight`.
    pub fn complete(n: usize, weight: f64) -> Result<Self> {
        let arcs = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (j, i, weight)));
        Self::new(n, arcs)
    }

    /// Undirected cycle `0 - 1 - ... - (n-1) - 0` (both arc directions).
    pub fn ring(n: usize, weight: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid("ring needs at least 2 nodes"));
        }
        if n == 2 {
            return Self::new(2, [(0, 1, weight), (1, 0, weight)]);
        }
        let arcs = (0..n).flat_map(|i| [(i, (i + 1) % n, weight), ((i + 1) % n, i, weight)]);
        Self::new(n, arcs)
    }

    /// Directed cycle `0 -> 1 -> ... -> (n-1) -> 0`.
    pub fn directed_cycle(n: usize, weight: f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid("cycle needs at least 2 nodes"));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n, weight)))
    }

    /// Five-node balanced, strongly connected, non-symmetric digraph: the
    /// union of the cycle `0->1->2->3->4->0` and the pentagram
    /// `0->2->4->1->3->0`, all weights 1. Every node has in- and out-degree 2.
    pub fn balanced5() -> Self {
        let arcs = (0..5).flat_map(|i| [(i, (i + 1) % 5, 1.0), (i, (i + 2) % 5, 1.0)]);
        Self::new(5, arcs).expect("balanced5 is well formed")
    }

    /// Random strongly connected digraph: a directed Hamiltonian cycle over a
    /// random node order, plus every other ordered pair with probability
    /// `density`. Weights are uniform on `[w_lo, w_hi)`.
    pub fn random_strongly_connected<R: Rng + ?Sized>(
        n: usize,
        density: f64,
        (w_lo, w_hi): (f64, f64),
        rng: &mut R,
    ) -> Result<Self> {
        if n < 2 {
            return Err(invalid("random graph needs at least 2 nodes"));
        }
        if !(0.0 < w_lo && w_lo < w_hi) {
            return Err(invalid("weight range must satisfy 0 < lo < hi"));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut present = vec![false; n * n];
        for k in 0..n {
            let (j, i) = (order[k], order[(k + 1) % n]);
            present[i * n + j] = true;
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && !present[i * n + j] && rng.random::<f64>() < density {
                    present[i * n + j] = true;
                }
            }
        }
        let mut arcs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if present[i * n + j] {
                    arcs.push((j, i, rng.random_range(w_lo..w_hi)));
                }
            }
        }
        Self::new(n, arcs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// All arcs in canonical `(to, from)` order.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// Incoming arcs of node `i`, sorted by source. Panics if `i >= n`.
    pub fn in_arcs(&self, i: usize) -> &[Arc] {
        &self.arcs[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Range of canonical arc indices whose head is `i`.
    pub fn in_arc_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// The in-neighbour set `{ l : (l, i) is an arc }`.
    pub fn in_neighbors(&self, i: usize) -> Result<Vec<usize>> {
        self.check_node(i)?;
        Ok(self.in_arcs(i).iter().map(|a| a.from).collect())
    }

    /// Canonical index of arc `(j, i)`, if present.
    pub fn arc_index(&self, j: usize, i: usize) -> Option<usize> {
        if i >= self.n {
            return None;
        }
        self.in_arcs(i).binary_search_by_key(&j, |a| a.from).ok().map(|k| self.offsets[i] + k)
    }

    pub fn weight(&self, j: usize, i: usize) -> Option<f64> {
        self.arc_index(j, i).map(|k| self.arcs[k].weight)
    }

    /// Σ_j w_ij over incoming arcs of `i`.
    pub fn in_weight(&self, i: usize) -> f64 {
        self.in_arcs(i).iter().map(|a| a.weight).sum()
    }

    pub fn out_weights(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for a in &self.arcs {
            out[a.from] += a.weight;
        }
        out
    }

    pub fn is_strongly_connected(&self) -> bool {
        if self.n == 1 {
            return true;
        }
        let mut forward = vec![Vec::new(); self.n];
        let mut backward = vec![Vec::new(); self.n];
        for a in &self.arcs {
            forward[a.from].push(a.to);
            backward[a.to].push(a.from);
        }
        reaches_all(&forward) && reaches_all(&backward)
    }

    /// Incoming weight equals outgoing weight at every node, within
    /// [`tolerance::BALANCE`].
    pub fn is_balanced(&self) -> bool {
        self.is_balanced_within(tolerance::BALANCE)
    }

    pub fn is_balanced_within(&self, tol: f64) -> bool {
        let out = self.out_weights();
        (0..self.n).all(|i| (self.in_weight(i) - out[i]).abs() <= tol)
    }

    /// Weighted adjacency matrix with `[A]_ij = w_ij` for each arc `(j, i)`.
    pub fn adjacency(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.n, self.n);
        for arc in &self.arcs {
            a[(arc.to, arc.from)] = arc.weight;
        }
        a
    }

    /// Laplacian `L = D − A` with in-weight degrees on the diagonal.
    pub fn laplacian(&self) -> DenseMatrix {
        let mut l = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let mut deg = 0.0;
            for arc in self.in_arcs(i) {
                l[(i, arc.from)] = -arc.weight;
                deg += arc.weight;
            }
            l[(i, i)] = deg;
        }
        l
    }

    /// Δ = 1 / max_i Σ_{j ∈ N_i} w_ij, the supremum of admissible Perron
    /// step sizes.
    pub fn epsilon_bound(&self) -> Result<f64> {
        if self.arcs.is_empty() {
            return Err(Error::NoArcs);
        }
        let max_in = (0..self.n).map(|i| self.in_weight(i)).fold(0.0, f64::max);
        Ok(1.0 / max_in)
    }

    /// First node with an empty in-neighbourhood, if any.
    pub fn first_isolated_receiver(&self) -> Option<usize> {
        (0..self.n).find(|&i| self.in_degree(i) == 0)
    }

    /// Same arc set with every weight replaced by `f(arc)`.
    pub fn reweighted(&self, mut f: impl FnMut(&Arc) -> f64) -> Result<Self> {
        let arcs: Vec<_> = self.arcs.iter().map(|a| (a.from, a.to, f(a))).collect();
        Self::new(self.n, arcs)
    }

    pub(crate) fn check_node(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: i, n: self.n })
        }
    }
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == adj.len()
}
