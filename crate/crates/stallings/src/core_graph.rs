//! Stallings core graphs of finitely generated subgroups of free groups.
//!
//! A subgroup `H <= F_n` is represented by its core graph: the smallest based,
//! labeled, oriented graph whose loop language at the basepoint is `H`. Core
//! graphs are built by wedging subdivided loops for the generators at the
//! basepoint, folding to a deterministic/co-deterministic graph, and trimming
//! dangling trees. Folded core graphs are unique per subgroup, so a canonical
//! vertex numbering makes equality of [`CoreGraph`] values equality of
//! subgroups.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::words::{Letter, Word};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("alphabet rank mismatch: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("graph is not folded")]
    NotFolded,
    #[error("graph is not connected")]
    Disconnected,
    #[error("invalid graph data: {0}")]
    Invalid(String),
}

/// An oriented labeled edge `src --label--> dst`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub label: usize,
}

/// A based, labeled, oriented multigraph. This is the mutable builder stage:
/// it need not be folded or core.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    n: usize,
    vertex_count: usize,
    basepoint: usize,
    edges: Vec<Edge>,
}

impl LabeledGraph {
    pub fn new(n: usize) -> Self {
        LabeledGraph { n, vertex_count: 1, basepoint: 0, edges: Vec::new() }
    }

    pub fn alphabet_rank(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn add_vertex(&mut self) -> usize {
        self.vertex_count += 1;
        self.vertex_count - 1
    }

    pub fn add_edge(&mut self, src: usize, dst: usize, label: usize) {
        debug_assert!(src < self.vertex_count && dst < self.vertex_count);
        debug_assert!(label < self.n);
        self.edges.push(Edge { src, dst, label });
    }

    /// Wedge of subdivided loops at the basepoint, one loop per generator
    /// word. An inverse letter contributes an edge traversed against its
    /// orientation.
    pub fn wedge_of_words(gens: &[Word], n: usize) -> Result<Self, GraphError> {
        let mut g = LabeledGraph::new(n);
        for w in gens {
            if w.rank() != n {
                return Err(GraphError::RankMismatch(w.rank(), n));
            }
            if w.is_empty() {
                continue;
            }
            let mut at = g.basepoint;
            for (i, l) in w.letters().iter().enumerate() {
                let next = if i + 1 == w.len() { g.basepoint } else { g.add_vertex() };
                if l.inverse {
                    g.add_edge(next, at, l.gen);
                } else {
                    g.add_edge(at, next, l.gen);
                }
                at = next;
            }
        }
        Ok(g)
    }

    /// Deterministic and co-deterministic: at most one outgoing and one
    /// incoming edge per label at each vertex, with no duplicate edges.
    pub fn is_folded(&self) -> bool {
        let mut seen_out = std::collections::HashSet::new();
        let mut seen_in = std::collections::HashSet::new();
        for e in &self.edges {
            if !seen_out.insert((e.src, e.label)) || !seen_in.insert((e.dst, e.label)) {
                return false;
            }
        }
        true
    }

    /// Edge-end count per vertex; a loop contributes 2 to its vertex.
    pub fn valences(&self) -> Vec<usize> {
        let mut val = vec![0usize; self.vertex_count];
        for e in &self.edges {
            val[e.src] += 1;
            val[e.dst] += 1;
        }
        val
    }

    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.vertex_count];
        for e in &self.edges {
            adj[e.src].push(e.dst);
            adj[e.dst].push(e.src);
        }
        let mut seen = vec![false; self.vertex_count];
        let mut queue = VecDeque::from([self.basepoint]);
        seen[self.basepoint] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.vertex_count
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Unions the classes; returns `(winner, loser)` or `None` if already equal.
    fn union(&mut self, a: usize, b: usize) -> Option<(usize, usize)> {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return None;
        }
        let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        Some((big, small))
    }
}

/// Stallings folding with union-find vertex merging. The result has the same
/// loop language at the basepoint and is deterministic + co-deterministic.
/// Folding an already-folded graph returns an isomorphic copy.
pub fn fold(g: &LabeledGraph) -> LabeledGraph {
    let n = g.n;
    let v = g.vertex_count;
    let mut uf = UnionFind::new(v);
    // per-representative maps label -> neighbor (possibly stale; find() on read)
    let mut out: Vec<Vec<Option<usize>>> = vec![vec![None; n]; v];
    let mut inc: Vec<Vec<Option<usize>>> = vec![vec![None; n]; v];
    let mut pending: VecDeque<(usize, usize)> = VecDeque::new();

    let attach_out = |out: &mut Vec<Vec<Option<usize>>>,
                          uf: &mut UnionFind,
                          pending: &mut VecDeque<(usize, usize)>,
                          s: usize,
                          l: usize,
                          d: usize| {
        match out[s][l] {
            Some(t) => {
                let t = uf.find(t);
                let d = uf.find(d);
                if t != d {
                    pending.push_back((t, d));
                }
            }
            None => out[s][l] = Some(d),
        }
    };

    for e in &g.edges {
        let s = uf.find(e.src);
        let d = uf.find(e.dst);
        attach_out(&mut out, &mut uf, &mut pending, s, e.label, d);
        attach_out(&mut inc, &mut uf, &mut pending, d, e.label, s);
    }

    while let Some((a, b)) = pending.pop_front() {
        let Some((win, lose)) = uf.union(a, b) else { continue };
        for l in 0..n {
            if let Some(t) = out[lose][l].take() {
                attach_out(&mut out, &mut uf, &mut pending, win, l, t);
            }
            if let Some(s) = inc[lose][l].take() {
                attach_out(&mut inc, &mut uf, &mut pending, win, l, s);
            }
        }
    }

    // compact representatives
    let mut newid = vec![usize::MAX; v];
    let mut count = 0;
    for i in 0..v {
        if uf.find(i) == i {
            newid[i] = count;
            count += 1;
        }
    }
    let mut folded = LabeledGraph {
        n,
        vertex_count: count,
        basepoint: 0,
        edges: Vec::new(),
    };
    let bp = uf.find(g.basepoint);
    folded.basepoint = newid[bp];
    for i in 0..v {
        if newid[i] == usize::MAX {
            continue;
        }
        for l in 0..n {
            if let Some(t) = out[i][l] {
                let t = uf.find(t);
                folded.edges.push(Edge { src: newid[i], dst: newid[t], label: l });
            }
        }
    }
    folded
}

/// Removes valence-1 vertices other than the basepoint until none remain.
/// The loop language at the basepoint is unchanged.
pub fn trim_to_core(g: &LabeledGraph) -> LabeledGraph {
    let (trimmed, _) = trim_to_core_indexed(g);
    trimmed
}

/// Like [`trim_to_core`] but also returns, for each vertex of the trimmed
/// graph, its index in the input graph.
pub fn trim_to_core_indexed(g: &LabeledGraph) -> (LabeledGraph, Vec<usize>) {
    let mut alive = vec![true; g.vertex_count];
    let mut edges: Vec<Edge> = g.edges.clone();
    loop {
        let mut val = vec![0usize; g.vertex_count];
        for e in &edges {
            val[e.src] += 1;
            val[e.dst] += 1;
        }
        let mut removed = false;
        for v in 0..g.vertex_count {
            if alive[v] && v != g.basepoint && val[v] <= 1 {
                alive[v] = false;
                removed = true;
            }
        }
        if !removed {
            break;
        }
        edges.retain(|e| alive[e.src] && alive[e.dst]);
    }
    let mut newid = vec![usize::MAX; g.vertex_count];
    let mut kept = Vec::new();
    for v in 0..g.vertex_count {
        if alive[v] {
            newid[v] = kept.len();
            kept.push(v);
        }
    }
    let trimmed = LabeledGraph {
        n: g.n,
        vertex_count: kept.len(),
        basepoint: newid[g.basepoint],
        edges: edges
            .iter()
            .map(|e| Edge { src: newid[e.src], dst: newid[e.dst], label: e.label })
            .collect(),
    };
    (trimmed, kept)
}

/// Per-vertex valences with the list of branch vertices (valence >= 3).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchVertexReport {
    /// Branch vertices as `(vertex id, valence)`, in canonical vertex order.
    pub vertices: Vec<(usize, usize)>,
    /// `sum_v max(0, valence(v) - 2)`.
    pub weighted_count: usize,
    /// Number of vertices with valence >= 3.
    pub simple_count: usize,
    pub all_trivalent: bool,
}

/// JSON wire form of a core graph, with the canonical vertex numbering.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub basepoint: usize,
    pub edges: Vec<(usize, usize, usize)>,
}

/// A folded core graph in canonical form: vertices are numbered by a
/// breadth-first traversal from the basepoint (basepoint = 0) with edges
/// ordered label-ascending, outgoing before incoming. Two based-labeled
/// isomorphic core graphs are equal as values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoreGraph {
    n: usize,
    vertex_count: usize,
    out: Vec<Vec<Option<usize>>>,
    inc: Vec<Vec<Option<usize>>>,
}

impl CoreGraph {
    /// The trivial subgroup: a single basepoint vertex, no edges.
    pub fn trivial(n: usize) -> Self {
        CoreGraph {
            n,
            vertex_count: 1,
            out: vec![vec![None; n]],
            inc: vec![vec![None; n]],
        }
    }

    /// Core graph of `<gens>` in `F_n`: wedge of subdivided loops, folded and
    /// trimmed. An empty generator list yields the trivial graph.
    pub fn from_generators(gens: &[Word], n: usize) -> Result<Self, GraphError> {
        let wedge = LabeledGraph::wedge_of_words(gens, n)?;
        Ok(Self::from_graph(&wedge))
    }

    /// Folds, trims, and canonicalizes an arbitrary connected based graph.
    pub fn from_graph(g: &LabeledGraph) -> Self {
        let folded = fold(g);
        let core = trim_to_core(&folded);
        Self::canonicalize(&core)
    }

    /// Canonicalizes a graph that is already folded; errors otherwise.
    pub fn from_folded(g: &LabeledGraph) -> Result<Self, GraphError> {
        if !g.is_folded() {
            return Err(GraphError::NotFolded);
        }
        Ok(Self::canonicalize(&trim_to_core(g)))
    }

    fn canonicalize(g: &LabeledGraph) -> Self {
        debug_assert!(g.is_folded());
        debug_assert!(g.is_connected());
        let n = g.n;
        let v = g.vertex_count;
        let mut out_raw = vec![vec![None; n]; v];
        let mut inc_raw = vec![vec![None; n]; v];
        for e in &g.edges {
            out_raw[e.src][e.label] = Some(e.dst);
            inc_raw[e.dst][e.label] = Some(e.src);
        }
        let mut order = vec![usize::MAX; v];
        let mut bfs = Vec::with_capacity(v);
        order[g.basepoint] = 0;
        bfs.push(g.basepoint);
        let mut head = 0;
        while head < bfs.len() {
            let u = bfs[head];
            head += 1;
            for l in 0..n {
                for nb in [out_raw[u][l], inc_raw[u][l]].into_iter().flatten() {
                    if order[nb] == usize::MAX {
                        order[nb] = bfs.len();
                        bfs.push(nb);
                    }
                }
            }
        }
        debug_assert_eq!(bfs.len(), v, "canonicalize requires a connected graph");
        let mut out = vec![vec![None; n]; v];
        let mut inc = vec![vec![None; n]; v];
        for e in &g.edges {
            out[order[e.src]][e.label] = Some(order[e.dst]);
            inc[order[e.dst]][e.label] = Some(order[e.src]);
        }
        CoreGraph { n, vertex_count: v, out, inc }
    }

    pub fn alphabet_rank(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn basepoint(&self) -> usize {
        0
    }

    pub fn out_edge(&self, v: usize, label: usize) -> Option<usize> {
        self.out[v][label]
    }

    pub fn in_edge(&self, v: usize, label: usize) -> Option<usize> {
        self.inc[v][label]
    }

    /// Edges in canonical order: by source vertex, then label.
    pub fn edges(&self) -> Vec<Edge> {
        let mut edges = Vec::new();
        for v in 0..self.vertex_count {
            for l in 0..self.n {
                if let Some(t) = self.out[v][l] {
                    edges.push(Edge { src: v, dst: t, label: l });
                }
            }
        }
        edges
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().flatten().filter(|t| t.is_some()).count()
    }

    /// Rank of the represented subgroup: `E - V + 1` for a connected graph.
    pub fn rank(&self) -> usize {
        self.edge_count() + 1 - self.vertex_count
    }

    /// True iff `w` reads a closed path at the basepoint.
    pub fn contains(&self, w: &Word) -> Result<bool, GraphError> {
        if w.rank() != self.n {
            return Err(GraphError::RankMismatch(w.rank(), self.n));
        }
        let mut at = 0;
        for l in w.letters() {
            let next = if l.inverse { self.inc[at][l.gen] } else { self.out[at][l.gen] };
            match next {
                Some(v) => at = v,
                None => return Ok(false),
            }
        }
        Ok(at == 0)
    }

    pub fn valence(&self, v: usize) -> usize {
        self.out[v].iter().filter(|t| t.is_some()).count()
            + self.inc[v].iter().filter(|t| t.is_some()).count()
    }

    pub fn branch_vertices(&self) -> BranchVertexReport {
        let mut vertices = Vec::new();
        let mut weighted = 0;
        for v in 0..self.vertex_count {
            let val = self.valence(v);
            if val >= 3 {
                vertices.push((v, val));
            }
            weighted += val.saturating_sub(2);
        }
        let simple = vertices.len();
        BranchVertexReport {
            all_trivalent: weighted == simple,
            weighted_count: weighted,
            simple_count: simple,
            vertices,
        }
    }

    /// Canonical byte encoding: identical for based-labeled-isomorphic core
    /// graphs, distinct otherwise.
    pub fn canonical_form(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(8 + self.edge_count() * 12);
        bytes.extend_from_slice(&(self.n as u32).to_le_bytes());
        bytes.extend_from_slice(&(self.vertex_count as u32).to_le_bytes());
        for e in self.edges() {
            bytes.extend_from_slice(&(e.src as u32).to_le_bytes());
            bytes.extend_from_slice(&(e.label as u32).to_le_bytes());
            bytes.extend_from_slice(&(e.dst as u32).to_le_bytes());
        }
        bytes
    }

    /// A free basis for the subgroup: one word per edge outside a spanning
    /// tree, via basepoint paths. Deterministic given the canonical form.
    pub fn generators(&self) -> Vec<Word> {
        let v = self.vertex_count;
        // BFS spanning tree in canonical order; path[u] reads basepoint -> u
        let mut path: Vec<Option<Word>> = vec![None; v];
        path[0] = Some(Word::empty(self.n));
        let mut queue = VecDeque::from([0usize]);
        let mut tree_edges = std::collections::HashSet::new();
        while let Some(u) = queue.pop_front() {
            for l in 0..self.n {
                if let Some(t) = self.out[u][l] {
                    if path[t].is_none() {
                        let mut letters = path[u].as_ref().unwrap().letters().to_vec();
                        letters.push(Letter::new(l, false));
                        path[t] = Some(Word::reduce(letters, self.n));
                        tree_edges.insert((u, t, l));
                        queue.push_back(t);
                    }
                }
                if let Some(s) = self.inc[u][l] {
                    if path[s].is_none() {
                        let mut letters = path[u].as_ref().unwrap().letters().to_vec();
                        letters.push(Letter::new(l, true));
                        path[s] = Some(Word::reduce(letters, self.n));
                        tree_edges.insert((s, u, l));
                        queue.push_back(s);
                    }
                }
            }
        }
        let mut gens = Vec::new();
        for e in self.edges() {
            if tree_edges.contains(&(e.src, e.dst, e.label)) {
                continue;
            }
            let mut letters = path[e.src].as_ref().unwrap().letters().to_vec();
            letters.push(Letter::new(e.label, false));
            letters.extend(path[e.dst].as_ref().unwrap().inverse().letters());
            gens.push(Word::reduce(letters, self.n));
        }
        gens
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n,
            basepoint: 0,
            edges: self.edges().iter().map(|e| (e.src, e.dst, e.label)).collect(),
        }
    }

    pub fn from_json(json: &GraphJson) -> Result<Self, GraphError> {
        if json.n == 0 {
            return Err(GraphError::Invalid("alphabet rank must be >= 1".into()));
        }
        let vmax = json
            .edges
            .iter()
            .map(|&(s, d, _)| s.max(d) + 1)
            .max()
            .unwrap_or(0)
            .max(json.basepoint + 1);
        let mut g = LabeledGraph::new(json.n);
        while g.vertex_count() < vmax {
            g.add_vertex();
        }
        g.basepoint = json.basepoint;
        for &(s, d, l) in &json.edges {
            if l >= json.n {
                return Err(GraphError::Invalid(format!("label {l} out of range")));
            }
            g.add_edge(s, d, l);
        }
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Self::from_folded(&g)
    }
}
