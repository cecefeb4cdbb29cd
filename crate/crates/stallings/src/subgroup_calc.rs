//! Intersections, joins, pushouts, and Euler data for subgroups given by
//! core graphs.
//!
//! The intersection of `H` and `K` is read off the basepoint component of the
//! label-matched product (pullback) of their core graphs; other components of
//! the pullback encode intersections of conjugates and are exposed raw. The
//! join `<H, K>` is the fold of the wedge of the two graphs at their
//! basepoints. The pushout `T` identifies vertices (and edges) of the two
//! graphs paired by the basepoint component; it is a counting object and is
//! never folded in place.

use serde::{Deserialize, Serialize};

use crate::core_graph::{
    trim_to_core_indexed, CoreGraph, Edge, GraphError, LabeledGraph,
};

/// The full label-matched product of two folded core graphs, with vertex set
/// `V(H) x V(K)`. Projections to either factor are the coordinate maps.
#[derive(Debug, Clone)]
pub struct PullbackGraph {
    /// Vertex `i` of the pullback is the pair `vertices[i]` of core vertices.
    pub vertices: Vec<(usize, usize)>,
    pub edges: Vec<Edge>,
    pub basepoint: usize,
    pub alphabet_rank: usize,
}

impl PullbackGraph {
    pub fn project_h(&self, v: usize) -> usize {
        self.vertices[v].0
    }

    pub fn project_k(&self, v: usize) -> usize {
        self.vertices[v].1
    }
}

pub fn pullback(gh: &CoreGraph, gk: &CoreGraph) -> Result<PullbackGraph, GraphError> {
    let n = check_ranks(gh, gk)?;
    let vk = gk.vertex_count();
    let vertices: Vec<(usize, usize)> = (0..gh.vertex_count())
        .flat_map(|u| (0..vk).map(move |v| (u, v)))
        .collect();
    let id = |u: usize, v: usize| u * vk + v;
    let mut edges = Vec::new();
    for u in 0..gh.vertex_count() {
        for l in 0..n {
            let Some(u2) = gh.out_edge(u, l) else { continue };
            for v in 0..vk {
                if let Some(v2) = gk.out_edge(v, l) {
                    edges.push(Edge { src: id(u, v), dst: id(u2, v2), label: l });
                }
            }
        }
    }
    Ok(PullbackGraph { vertices, edges, basepoint: 0, alphabet_rank: n })
}

/// Basepoint component of the pullback as a based graph, with each vertex
/// tagged by its pair of core-graph vertices. The component of folded inputs
/// is itself folded.
pub fn basepoint_component(pb: &PullbackGraph) -> (LabeledGraph, Vec<(usize, usize)>) {
    let v = pb.vertices.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); v];
    for (i, e) in pb.edges.iter().enumerate() {
        adj[e.src].push(i);
        adj[e.dst].push(i);
    }
    let mut newid = vec![usize::MAX; v];
    let mut stack = vec![pb.basepoint];
    let mut pairs = vec![pb.vertices[pb.basepoint]];
    newid[pb.basepoint] = 0;
    let mut kept_edges = std::collections::HashSet::new();
    while let Some(x) = stack.pop() {
        for &ei in &adj[x] {
            kept_edges.insert(ei);
            let e = &pb.edges[ei];
            for y in [e.src, e.dst] {
                if newid[y] == usize::MAX {
                    newid[y] = pairs.len();
                    pairs.push(pb.vertices[y]);
                    stack.push(y);
                }
            }
        }
    }
    let mut g = LabeledGraph::new(pb.alphabet_rank);
    while g.vertex_count() < pairs.len() {
        g.add_vertex();
    }
    let mut kept: Vec<usize> = kept_edges.into_iter().collect();
    kept.sort_unstable();
    for ei in kept {
        let e = &pb.edges[ei];
        g.add_edge(newid[e.src], newid[e.dst], e.label);
    }
    (g, pairs)
}

/// Trimmed core of the basepoint component, with each remaining vertex tagged
/// by its `(H vertex, K vertex)` pair. This graph represents `H ∩ K` and is
/// folded but not canonically numbered.
pub fn intersection_component(
    gh: &CoreGraph,
    gk: &CoreGraph,
) -> Result<(LabeledGraph, Vec<(usize, usize)>), GraphError> {
    let pb = pullback(gh, gk)?;
    let (component, pairs) = basepoint_component(&pb);
    let (core, kept) = trim_to_core_indexed(&component);
    let pairs = kept.into_iter().map(|old| pairs[old]).collect();
    Ok((core, pairs))
}

/// Core graph of `H ∩ K` at the common basepoint.
pub fn intersect(gh: &CoreGraph, gk: &CoreGraph) -> Result<CoreGraph, GraphError> {
    let (core, _) = intersection_component(gh, gk)?;
    CoreGraph::from_folded(&core)
}

/// Core graph of the join `<H, K>`: wedge at the basepoints, folded, trimmed.
pub fn join(gh: &CoreGraph, gk: &CoreGraph) -> Result<CoreGraph, GraphError> {
    check_ranks(gh, gk)?;
    let mut g = LabeledGraph::new(gh.alphabet_rank());
    while g.vertex_count() < gh.vertex_count() + gk.vertex_count() - 1 {
        g.add_vertex();
    }
    for e in gh.edges() {
        g.add_edge(e.src, e.dst, e.label);
    }
    // K's basepoint (canonical vertex 0) is identified with H's
    let remap = |v: usize| if v == 0 { 0 } else { gh.vertex_count() + v - 1 };
    for e in gk.edges() {
        g.add_edge(remap(e.src), remap(e.dst), e.label);
    }
    Ok(CoreGraph::from_graph(&g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    H,
    K,
}

/// The pushout `T`: quotient of the disjoint union of the two core graphs
/// identifying vertices (and edges) paired by the basepoint component of the
/// pullback. Multi-edges and label clashes are allowed; `T` is used for
/// counting only.
#[derive(Debug, Clone, Serialize)]
pub struct PushoutGraph {
    /// Explicit vertex classes over the disjoint union.
    pub vertex_classes: Vec<Vec<(Side, usize)>>,
    /// Edge classes, indexing each side's canonical edge list.
    pub edge_classes: Vec<Vec<(Side, usize)>>,
}

/// Reduced Euler characteristic: `rank(pi_1) - 1` clamped at zero, i.e.
/// `max(0, E - V)` for a connected graph (basepoint tails do not change
/// `E - V`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerData {
    pub chi_bar: usize,
}

impl PushoutGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertex_classes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_classes.len()
    }

    pub fn reduced_euler(&self) -> EulerData {
        EulerData { chi_bar: self.edge_count().saturating_sub(self.vertex_count()) }
    }
}

pub fn pushout_t(gh: &CoreGraph, gk: &CoreGraph) -> Result<PushoutGraph, GraphError> {
    check_ranks(gh, gk)?;
    let pb = pullback(gh, gk)?;
    let (component, pairs) = basepoint_component(&pb);

    let vh = gh.vertex_count();
    let vk = gk.vertex_count();
    let mut vparent: Vec<usize> = (0..vh + vk).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let vunion = |parent: &mut Vec<usize>, a: usize, b: usize| {
        let (a, b) = (find(parent, a), find(parent, b));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    };
    for &(u, v) in &pairs {
        vunion(&mut vparent, u, vh + v);
    }

    let eh = gh.edges();
    let ek = gk.edges();
    let edge_index = |edges: &[Edge]| -> std::collections::HashMap<Edge, usize> {
        edges.iter().enumerate().map(|(i, &e)| (e, i)).collect()
    };
    let hid = edge_index(&eh);
    let kid = edge_index(&ek);
    let mut eparent: Vec<usize> = (0..eh.len() + ek.len()).collect();
    for e in component.edges() {
        let (hu, ku) = pairs[e.src];
        let (hv, kv) = pairs[e.dst];
        let he = hid[&Edge { src: hu, dst: hv, label: e.label }];
        let ke = kid[&Edge { src: ku, dst: kv, label: e.label }];
        let (a, b) = (find(&mut eparent, he), find(&mut eparent, eh.len() + ke));
        if a != b {
            eparent[a.max(b)] = a.min(b);
        }
    }

    let collect = |parent: &mut Vec<usize>, h_count: usize, total: usize| {
        let mut classes: std::collections::BTreeMap<usize, Vec<(Side, usize)>> =
            std::collections::BTreeMap::new();
        for x in 0..total {
            let root = find(parent, x);
            let member = if x < h_count { (Side::H, x) } else { (Side::K, x - h_count) };
            classes.entry(root).or_default().push(member);
        }
        classes.into_values().collect::<Vec<_>>()
    };
    Ok(PushoutGraph {
        vertex_classes: collect(&mut vparent, vh, vh + vk),
        edge_classes: collect(&mut eparent, eh.len(), eh.len() + ek.len()),
    })
}

/// Reduced Euler characteristic of a connected graph.
pub fn reduced_euler(g: &LabeledGraph) -> Result<EulerData, GraphError> {
    if !g.is_connected() {
        return Err(GraphError::Disconnected);
    }
    Ok(EulerData { chi_bar: g.edges().len().saturating_sub(g.vertex_count()) })
}

pub fn reduced_euler_core(g: &CoreGraph) -> EulerData {
    EulerData { chi_bar: g.rank().saturating_sub(1) }
}

/// Index of the subgroup in `F_n`, read off the core graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubgroupIndex {
    Finite(usize),
    Infinite,
}

impl std::fmt::Display for SubgroupIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SubgroupIndex::Finite(i) => write!(f, "{i}"),
            SubgroupIndex::Infinite => write!(f, "infinite"),
        }
    }
}

/// `V` if the core graph is a full covering of the wedge (every vertex has an
/// in- and out-edge for every label), else infinite.
pub fn index(g: &CoreGraph) -> SubgroupIndex {
    let n = g.alphabet_rank();
    for v in 0..g.vertex_count() {
        for l in 0..n {
            if g.out_edge(v, l).is_none() || g.in_edge(v, l).is_none() {
                return SubgroupIndex::Infinite;
            }
        }
    }
    SubgroupIndex::Finite(g.vertex_count())
}

fn check_ranks(gh: &CoreGraph, gk: &CoreGraph) -> Result<usize, GraphError> {
    if gh.alphabet_rank() != gk.alphabet_rank() {
        return Err(GraphError::RankMismatch(gh.alphabet_rank(), gk.alphabet_rank()));
    }
    Ok(gh.alphabet_rank())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::Word;

    fn core(texts: &[&str]) -> CoreGraph {
        let gens: Vec<Word> = texts.iter().map(|t| Word::parse(t, 2).unwrap()).collect();
        CoreGraph::from_generators(&gens, 2).unwrap()
    }

    #[test]
    fn pullback_with_no_shared_labels() {
        let pb = pullback(&core(&["a"]), &core(&["b"])).unwrap();
        assert_eq!(pb.vertices.len(), 1);
        assert!(pb.edges.is_empty());
    }

    #[test]
    fn pullback_of_cyclic_powers_is_lcm_cycle() {
        let pb = pullback(&core(&["aa"]), &core(&["aaa"])).unwrap();
        assert_eq!(pb.vertices.len(), 6);
        assert_eq!(pb.edges.len(), 6);
        // one 6-cycle: every vertex has exactly one out and one in a-edge
        let mut outdeg = vec![0; 6];
        let mut indeg = vec![0; 6];
        for e in &pb.edges {
            outdeg[e.src] += 1;
            indeg[e.dst] += 1;
        }
        assert!(outdeg.iter().all(|&d| d == 1) && indeg.iter().all(|&d| d == 1));
    }

    #[test]
    fn pullback_contains_diagonal() {
        let h = core(&["aa", "ab", "bb"]);
        let pb = pullback(&h, &h).unwrap();
        let (component, pairs) = basepoint_component(&pb);
        // diagonal component is isomorphic to the core graph itself
        assert!(pairs.iter().all(|&(u, v)| u == v));
        assert_eq!(component.vertex_count(), h.vertex_count());
        assert_eq!(component.edges().len(), h.edge_count());
    }

    #[test]
    fn intersect_examples() {
        assert_eq!(intersect(&core(&["a"]), &core(&["b"])).unwrap(), CoreGraph::trivial(2));
        let lcm = intersect(&core(&["aa"]), &core(&["aaa"])).unwrap();
        assert_eq!(lcm, core(&["aaaaaa"]));
        assert_eq!(lcm.rank(), 1);
        let h = core(&["aa", "ab", "bb"]);
        assert_eq!(intersect(&h, &h).unwrap(), h);
    }

    #[test]
    fn intersect_is_symmetric() {
        let h = core(&["ab", "ba"]);
        let k = core(&["aa", "b"]);
        let hk = intersect(&h, &k).unwrap();
        let kh = intersect(&k, &h).unwrap();
        assert_eq!(hk.canonical_form(), kh.canonical_form());
    }

    #[test]
    fn intersection_words_lie_in_both() {
        let h = core(&["ab", "ba"]);
        let k = core(&["aa", "b"]);
        let hk = intersect(&h, &k).unwrap();
        for w in hk.generators() {
            assert!(h.contains(&w).unwrap());
            assert!(k.contains(&w).unwrap());
        }
    }

    #[test]
    fn join_examples() {
        let j = join(&core(&["aa"]), &core(&["aaa"])).unwrap();
        assert_eq!(j, core(&["a"]));
        // oracle: a = a^3 a^-2 lies in the join
        assert!(j.contains(&Word::parse("a", 2).unwrap()).unwrap());
        let h = core(&["aa", "ab", "bb"]);
        assert_eq!(join(&h, &h).unwrap(), h);
        let wedge = join(&core(&["a"]), &core(&["b"])).unwrap();
        assert_eq!(wedge.rank(), 2);
    }

    #[test]
    fn join_contains_generators_of_both() {
        let h = core(&["ab", "ba"]);
        let k = core(&["aa", "b"]);
        let j = join(&h, &k).unwrap();
        for w in h.generators().iter().chain(k.generators().iter()) {
            assert!(j.contains(w).unwrap());
        }
    }

    #[test]
    fn pushout_of_equal_subgroups_is_the_core() {
        let h = core(&["aa", "ab", "bb"]);
        let t = pushout_t(&h, &h).unwrap();
        assert_eq!(t.vertex_count(), h.vertex_count());
        assert_eq!(t.edge_count(), h.edge_count());
        assert_eq!(t.reduced_euler().chi_bar, h.rank() - 1);
    }

    #[test]
    fn pushout_of_disjoint_loops_is_wedge() {
        let t = pushout_t(&core(&["a"]), &core(&["b"])).unwrap();
        assert_eq!(t.vertex_count(), 1);
        assert_eq!(t.edge_count(), 2);
        assert_eq!(t.reduced_euler().chi_bar, 1);
    }

    #[test]
    fn pushout_dominates_join_euler() {
        let h = core(&["aa"]);
        let k = core(&["aaa"]);
        let t = pushout_t(&h, &k).unwrap();
        let j = join(&h, &k).unwrap();
        assert!(reduced_euler_core(&j).chi_bar <= t.reduced_euler().chi_bar);
        assert_eq!(reduced_euler_core(&j).chi_bar, 0);
    }

    #[test]
    fn reduced_euler_examples() {
        assert_eq!(reduced_euler_core(&core(&["a", "b"])).chi_bar, 1);
        assert_eq!(reduced_euler_core(&CoreGraph::trivial(2)).chi_bar, 0);
        assert_eq!(reduced_euler_core(&core(&["aa", "ab", "bb"])).chi_bar, 2);
        // tree input to the graph-level form
        let mut tree = LabeledGraph::new(2);
        let v = tree.add_vertex();
        tree.add_edge(0, v, 0);
        assert_eq!(reduced_euler(&tree).unwrap().chi_bar, 0);
    }

    #[test]
    fn index_examples() {
        assert_eq!(index(&core(&["aa", "ab", "bb"])), SubgroupIndex::Finite(2));
        assert_eq!(index(&core(&["a", "b"])), SubgroupIndex::Finite(1));
        assert_eq!(index(&core(&["a"])), SubgroupIndex::Infinite);
    }

    #[test]
    fn rank_mismatch_is_rejected() {
        let h = core(&["a"]);
        let k = CoreGraph::from_generators(&[Word::parse("c", 3).unwrap()], 3).unwrap();
        assert!(matches!(intersect(&h, &k), Err(GraphError::RankMismatch(2, 3))));
        assert!(matches!(join(&h, &k), Err(GraphError::RankMismatch(2, 3))));
    }
}
