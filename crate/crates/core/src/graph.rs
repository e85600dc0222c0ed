//! Attributed graphs, vertex partitions and relative density.
//!
//! Vertices are dense ids `0..n`. Edges are undirected and simple; each stored
//! edge carries a categorical attribute in `1..=k_edge_attrs`, with the value
//! `0` reserved for "no edge" and therefore never stored.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;

/// Vertex attribute. `Occluded` only appears in the observed layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum VertexAttr {
    Occluded = 0,
    Red = 1,
    Green = 2,
}

/// Edge attribute (topic label). Always in `1..=K_E` for a stored edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeAttr(u16);

impl EdgeAttr {
    pub const RED: EdgeAttr = EdgeAttr(1);
    pub const GREEN: EdgeAttr = EdgeAttr(2);

    /// Rejects the reserved "no edge" value 0.
    pub fn new(value: u16) -> Result<Self> {
        if value == 0 {
            return Err(Error::input("edge attribute 0 means \"no edge\" and cannot be stored"));
        }
        Ok(EdgeAttr(value))
    }

    pub fn value(self) -> u16 {
        self.0
    }

    pub fn is_red(self) -> bool {
        self == Self::RED
    }
}

/// Common surface of the graph kinds in the crate.
pub trait SimpleGraph: Sized {
    fn vertex_count(&self) -> usize;
    fn edge_count(&self) -> usize;

    /// Subgraph induced by `vs`, relabelled to `0..|vs|` in ascending id order.
    fn induced_subgraph(&self, vs: &[VertexId]) -> Result<Self>;

    /// `|E| / C(|V|, 2)`.
    fn relative_density(&self) -> Result<f64> {
        let n = self.vertex_count();
        if n < 2 {
            return Err(Error::UndefinedDensity(n));
        }
        Ok(self.edge_count() as f64 / pair_count(n) as f64)
    }
}

pub fn induced_subgraph<G: SimpleGraph>(g: &G, vs: &[VertexId]) -> Result<G> {
    g.induced_subgraph(vs)
}

pub fn relative_density<G: SimpleGraph>(g: &G) -> Result<f64> {
    g.relative_density()
}

/// `C(n, 2)`.
pub fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Deduplicates and sorts `vs`, checking every id is below `n`.
pub(crate) fn normalize_vertex_set(n: usize, vs: &[VertexId]) -> Result<Vec<VertexId>> {
    let set: BTreeSet<VertexId> = vs.iter().copied().collect();
    if let Some(&bad) = set.iter().find(|&&v| v >= n) {
        return Err(Error::input(format!("unknown vertex id {bad} (graph has {n} vertices)")));
    }
    Ok(set.into_iter().collect())
}

/// Maps original ids to positions in a sorted vertex subset.
pub(crate) fn relabel_map(n: usize, sorted: &[VertexId]) -> Vec<Option<VertexId>> {
    let mut map = vec![None; n];
    for (i, &v) in sorted.iter().enumerate() {
        map[v] = Some(i);
    }
    map
}

/// An undirected simple graph with categorical edge attributes, ground-truth
/// vertex attributes and an observed (partially occluded) vertex layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributedGraph {
    k_edge_attrs: u16,
    /// `(u, v, attr)` with `u < v`, sorted lexicographically.
    edges: Vec<(VertexId, VertexId, EdgeAttr)>,
    /// Neighbours sorted by id.
    adj: Vec<Vec<(VertexId, EdgeAttr)>>,
    truth: Vec<VertexAttr>,
    observed: Vec<VertexAttr>,
}

impl AttributedGraph {
    /// Validating constructor.
    ///
    /// `truth` must be Red/Green only, `observed` Red/Occluded only, and every
    /// observed Red must be truly Red.
    pub fn new(
        k_edge_attrs: u16,
        edges: impl IntoIterator<Item = (VertexId, VertexId, EdgeAttr)>,
        truth: Vec<VertexAttr>,
        observed: Vec<VertexAttr>,
    ) -> Result<Self> {
        let n = truth.len();
        if observed.len() != n {
            return Err(Error::input(format!(
                "observed layer has {} entries, truth has {n}",
                observed.len()
            )));
        }
        if let Some(v) = truth.iter().position(|&a| a == VertexAttr::Occluded) {
            return Err(Error::input(format!("ground-truth attribute of vertex {v} is occluded")));
        }
        for (v, (&o, &t)) in observed.iter().zip(&truth).enumerate() {
            match o {
                VertexAttr::Green => {
                    return Err(Error::input(format!("vertex {v}: only red attributes are observable")))
                }
                VertexAttr::Red if t != VertexAttr::Red => {
                    return Err(Error::input(format!("vertex {v} is observed red but truly green")))
                }
                _ => {}
            }
        }
        let mut list = Vec::new();
        for (u, v, a) in edges {
            if u == v {
                return Err(Error::input(format!("self-loop at vertex {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::input(format!("edge ({u}, {v}) references an unknown vertex")));
            }
            if a.value() > k_edge_attrs {
                return Err(Error::input(format!(
                    "edge ({u}, {v}) has attribute {} outside 1..={k_edge_attrs}",
                    a.value()
                )));
            }
            list.push((u.min(v), u.max(v), a));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::input(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }
        Ok(Self::from_sorted_edges(k_edge_attrs, list, truth, observed))
    }

    /// Trusted constructor for edges already sorted, deduplicated and in range.
    pub(crate) fn from_sorted_edges(
        k_edge_attrs: u16,
        edges: Vec<(VertexId, VertexId, EdgeAttr)>,
        truth: Vec<VertexAttr>,
        observed: Vec<VertexAttr>,
    ) -> Self {
        let n = truth.len();
        let mut adj = vec![Vec::new(); n];
        // Lexicographic edge order keeps both adjacency directions sorted.
        for &(u, v, a) in &edges {
            adj[u].push((v, a));
            adj[v].push((u, a));
        }
        for list in &mut adj {
            list.sort_unstable_by_key(|&(w, _)| w);
        }
        AttributedGraph { k_edge_attrs, edges, adj, truth, observed }
    }

    pub fn n(&self) -> usize {
        self.truth.len()
    }

    pub fn k_edge_attrs(&self) -> u16 {
        self.k_edge_attrs
    }

    pub fn edges(&self) -> &[(VertexId, VertexId, EdgeAttr)] {
        &self.edges
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeAttr)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v].len()
    }

    pub fn edge_attr(&self, u: VertexId, v: VertexId) -> Option<EdgeAttr> {
        let list = self.adj.get(u)?;
        list.binary_search_by_key(&v, |&(w, _)| w).ok().map(|i| list[i].1)
    }

    pub fn truth(&self, v: VertexId) -> VertexAttr {
        self.truth[v]
    }

    pub fn observed(&self, v: VertexId) -> VertexAttr {
        self.observed[v]
    }

    pub fn truth_layer(&self) -> &[VertexAttr] {
        &self.truth
    }

    pub fn observed_layer(&self) -> &[VertexAttr] {
        &self.observed
    }

    /// Ground-truth red set.
    pub fn red_set(&self) -> Vec<VertexId> {
        (0..self.n()).filter(|&v| self.truth[v] == VertexAttr::Red).collect()
    }

    /// Identified set: vertices observed red.
    pub fn identified_set(&self) -> Vec<VertexId> {
        (0..self.n()).filter(|&v| self.observed[v] == VertexAttr::Red).collect()
    }

    /// All vertices whose observed attribute is occluded.
    pub fn candidate_set(&self) -> Vec<VertexId> {
        (0..self.n()).filter(|&v| self.observed[v] == VertexAttr::Occluded).collect()
    }

    /// Truly red candidates.
    pub fn red_candidates(&self) -> Vec<VertexId> {
        (0..self.n())
            .filter(|&v| self.observed[v] == VertexAttr::Occluded && self.truth[v] == VertexAttr::Red)
            .collect()
    }

    /// Same graph with a new identified set; everything else is occluded.
    pub fn with_identified(&self, identified: &[VertexId]) -> Result<Self> {
        let mut observed = vec![VertexAttr::Occluded; self.n()];
        for &v in identified {
            if v >= self.n() {
                return Err(Error::input(format!("unknown vertex id {v}")));
            }
            if self.truth[v] != VertexAttr::Red {
                return Err(Error::input(format!("vertex {v} is not truly red and cannot be identified")));
            }
            observed[v] = VertexAttr::Red;
        }
        Ok(AttributedGraph { observed, ..self.clone() })
    }

    /// Order-sensitive 64-bit FNV-1a digest of the edge list.
    pub fn edge_checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
        };
        for &(u, v, a) in &self.edges {
            eat(u as u64);
            eat(v as u64);
            eat(a.value() as u64);
        }
        h
    }
}

impl SimpleGraph for AttributedGraph {
    fn vertex_count(&self) -> usize {
        self.n()
    }

    fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn induced_subgraph(&self, vs: &[VertexId]) -> Result<Self> {
        let keep = normalize_vertex_set(self.n(), vs)?;
        let map = relabel_map(self.n(), &keep);
        let edges = self
            .edges
            .iter()
            .filter_map(|&(u, v, a)| Some((map[u]?, map[v]?, a)))
            .collect();
        let truth = keep.iter().map(|&v| self.truth[v]).collect();
        let observed = keep.iter().map(|&v| self.observed[v]).collect();
        Ok(Self::from_sorted_edges(self.k_edge_attrs, edges, truth, observed))
    }
}

/// A split of the vertex set into a red side and its green complement.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    red: Vec<VertexId>,
    green: Vec<VertexId>,
}

impl Partition {
    pub fn new(n: usize, red: &[VertexId]) -> Result<Self> {
        let red = normalize_vertex_set(n, red)?;
        let mut is_red = vec![false; n];
        for &v in &red {
            is_red[v] = true;
        }
        let green = (0..n).filter(|&v| !is_red[v]).collect();
        Ok(Partition { red, green })
    }

    pub fn red_set(&self) -> &[VertexId] {
        &self.red
    }

    pub fn green_set(&self) -> &[VertexId] {
        &self.green
    }

    pub fn n(&self) -> usize {
        self.red.len() + self.green.len()
    }

    pub fn membership(&self) -> Vec<bool> {
        let mut is_red = vec![false; self.n()];
        for &v in &self.red {
            is_red[v] = true;
        }
        is_red
    }

    /// Ground-truth layer implied by the partition.
    pub fn truth_layer(&self) -> Vec<VertexAttr> {
        self.membership()
            .into_iter()
            .map(|r| if r { VertexAttr::Red } else { VertexAttr::Green })
            .collect()
    }
}
