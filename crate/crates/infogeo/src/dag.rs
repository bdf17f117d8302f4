//! Directed acyclic graphs and the topology catalog.
//!
//! A `Dag` owns the structural facts every other module relies on:
//! a validated edge set, parent lists sorted ascending (the low-index
//! parent is the least significant bit of a parent configuration), and
//! a deterministic topological order (Kahn's algorithm, ascending node
//! index on ties). Parameter blocks are laid out in that order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Named topologies used throughout the test batteries and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyId {
    /// Complete DAG on `n` nodes: edge i -> j for every i < j.
    Complete(usize),
    /// Markov chain 0 -> 1 -> ... -> n-1.
    Chain(usize),
    /// One root feeding n-1 leaves: 0 -> j for j = 1..n.
    ExplodingStar(usize),
    /// n independent roots feeding one collider: j -> n for j = 0..n.
    /// Has n+1 nodes in total.
    CollapsingStar(usize),
    /// Two roots, two colliders: 0 -> 2, 1 -> 2, 0 -> 3, 1 -> 3.
    DoubleCollider,
    /// Single loop with two routes: 0 -> 1 -> 3, 0 -> 2 -> 3.
    Diamond,
}

impl fmt::Display for TopologyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyId::Complete(n) => write!(f, "complete:{n}"),
            TopologyId::Chain(n) => write!(f, "chain:{n}"),
            TopologyId::ExplodingStar(n) => write!(f, "exploding-star:{n}"),
            TopologyId::CollapsingStar(n) => write!(f, "collapsing-star:{n}"),
            TopologyId::DoubleCollider => write!(f, "double-collider"),
            TopologyId::Diamond => write!(f, "diamond"),
        }
    }
}

impl FromStr for TopologyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let parse_n = |what: &str| -> Result<usize> {
            let a = arg.ok_or_else(|| {
                Error::Parse(format!("topology `{what}` needs a size, e.g. `{what}:3`"))
            })?;
            a.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad size `{a}` for topology `{what}`")))
        };
        match name {
            "complete" => Ok(TopologyId::Complete(parse_n("complete")?)),
            "chain" => Ok(TopologyId::Chain(parse_n("chain")?)),
            "exploding-star" => Ok(TopologyId::ExplodingStar(parse_n("exploding-star")?)),
            "collapsing-star" => Ok(TopologyId::CollapsingStar(parse_n("collapsing-star")?)),
            "double-collider" => Ok(TopologyId::DoubleCollider),
            "diamond" => Ok(TopologyId::Diamond),
            other => Err(Error::Parse(format!("unknown topology `{other}`"))),
        }
    }
}

/// A validated DAG with cached parent/child lists and topological order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    n: usize,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl Dag {
    /// Builds a DAG from an explicit edge list.
    ///
    /// Rejects out-of-range endpoints, self-loops, duplicate edges, and
    /// cycles. Edge order in the input is irrelevant; parent lists come
    /// out sorted ascending.
    pub fn new(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidInput("a DAG needs at least one node".into()));
        }
        let mut parents = vec![Vec::new(); n_nodes];
        let mut children = vec![Vec::new(); n_nodes];
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in edges {
            if u >= n_nodes || v >= n_nodes {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) out of range for {n_nodes} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at node {u}")));
            }
            if !seen.insert((u, v)) {
                return Err(Error::InvalidInput(format!("duplicate edge ({u}, {v})")));
            }
            parents[v].push(u);
            children[u].push(v);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }

        // Kahn's algorithm; always remove the smallest available index so
        // the order is a deterministic function of the graph alone.
        let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut ready: std::collections::BTreeSet<usize> = indeg
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| i)
            .collect();
        let mut topo = Vec::with_capacity(n_nodes);
        while let Some(&u) = ready.iter().next() {
            ready.remove(&u);
            topo.push(u);
            for &v in &children[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    ready.insert(v);
                }
            }
        }
        if topo.len() != n_nodes {
            return Err(Error::InvalidInput("graph contains a cycle".into()));
        }

        let mut edges = edges.to_vec();
        edges.sort_unstable();
        Ok(Dag {
            n: n_nodes,
            edges,
            parents,
            children,
            topo,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges sorted lexicographically.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Parents of `v`, ascending. The first entry is the least
    /// significant bit of `v`'s parent configuration index.
    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Topological order with ascending-index tie-break.
    pub fn topo_order(&self) -> &[usize] {
        &self.topo
    }

    /// Smallest ancestral set containing `v` (all ancestors plus `v`),
    /// returned ascending.
    pub fn ancestral_set(&self, v: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![v];
        seen[v] = true;
        while let Some(u) = stack.pop() {
            for &p in &self.parents[u] {
                if !seen[p] {
                    seen[p] = true;
                    stack.push(p);
                }
            }
        }
        (0..self.n).filter(|&i| seen[i]).collect()
    }

    /// Number of connected components of the undirected skeleton.
    pub fn n_components(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                for &w in self.parents[u].iter().chain(self.children[u].iter()) {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }
}

/// Cycle structure of the undirected skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SkeletonSummary {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub n_components: usize,
    /// First Betti number of the skeleton: E - V + C. Zero for forests.
    pub beta1: usize,
    pub is_forest: bool,
}

pub fn skeleton_summary(dag: &Dag) -> SkeletonSummary {
    let v = dag.n_nodes();
    let e = dag.n_edges();
    let c = dag.n_components();
    let beta1 = e + c - v; // e - v + c, kept in usize-safe order
    SkeletonSummary {
        n_nodes: v,
        n_edges: e,
        n_components: c,
        beta1,
        is_forest: beta1 == 0,
    }
}

/// What arithmetic class the volume-averaged curvature is expected to
/// land in, keyed on the skeleton's first Betti number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum QuantizationClass {
    /// beta1 = 0: averages sit on the half-integer lattice.
    HalfIntegerExpected,
    /// beta1 = 1: a single independent loop; rational values observed.
    RationalExpected,
    /// beta1 >= 2: no exact arithmetic structure is claimed.
    IrrationalConjectured,
}

pub fn quantization_class(summary: &SkeletonSummary) -> QuantizationClass {
    match summary.beta1 {
        0 => QuantizationClass::HalfIntegerExpected,
        1 => QuantizationClass::RationalExpected,
        _ => QuantizationClass::IrrationalConjectured,
    }
}

/// Instantiates a catalog topology.
pub fn build_catalog_dag(id: TopologyId) -> Result<Dag> {
    match id {
        TopologyId::Complete(n) => {
            if n == 0 {
                return Err(Error::InvalidInput("complete: need n >= 1".into()));
            }
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    edges.push((i, j));
                }
            }
            Dag::new(n, &edges)
        }
        TopologyId::Chain(n) => {
            if n == 0 {
                return Err(Error::InvalidInput("chain: need n >= 1".into()));
            }
            let edges: Vec<_> = (1..n).map(|j| (j - 1, j)).collect();
            Dag::new(n, &edges)
        }
        TopologyId::ExplodingStar(n) => {
            if n == 0 {
                return Err(Error::InvalidInput("exploding-star: need n >= 1".into()));
            }
            let edges: Vec<_> = (1..n).map(|j| (0, j)).collect();
            Dag::new(n, &edges)
        }
        TopologyId::CollapsingStar(n) => {
            if n == 0 {
                return Err(Error::InvalidInput(
                    "collapsing-star: need n >= 1 roots".into(),
                ));
            }
            let edges: Vec<_> = (0..n).map(|j| (j, n)).collect();
            Dag::new(n + 1, &edges)
        }
        TopologyId::DoubleCollider => Dag::new(4, &[(0, 2), (1, 2), (0, 3), (1, 3)]),
        TopologyId::Diamond => Dag::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]),
    }
}
