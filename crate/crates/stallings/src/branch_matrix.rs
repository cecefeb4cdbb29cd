//! The 0/1 branch-vertex matrix of a pair of subgroups, its block
//! decomposition `(l, p, q)`, and the resulting rank bounds on the join.
//!
//! Rows are indexed by branch vertices of the core graph of `H`, columns by
//! branch vertices of the core graph of `K`. An entry is 1 exactly when the
//! corresponding pair is a branch vertex of the intersection core (the
//! trimmed basepoint component of the pullback). When all branch vertices of
//! both cores are trivalent the matrix has dimensions `(2h-2) x (2k-2)`;
//! otherwise dimensions are the simple branch counts and a trivalence flag is
//! cleared so count identities are not asserted.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core_graph::{CoreGraph, GraphError};
use crate::subgroup_calc::intersection_component;

#[derive(Debug, Error, PartialEq)]
pub enum BranchMatrixError {
    #[error("both subgroups must have rank >= 2 (got {0} and {1})")]
    RankTooSmall(usize, usize),
    #[error("certificate precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchMatrix {
    /// Branch vertices of the `H` core as `(vertex, valence)`.
    pub rows: Vec<(usize, usize)>,
    /// Branch vertices of the `K` core as `(vertex, valence)`.
    pub cols: Vec<(usize, usize)>,
    /// Positions of the ones as `(row index, col index)`.
    pub ones: Vec<(usize, usize)>,
    /// All branch vertices of both input cores are trivalent.
    pub trivalent: bool,
    /// All branch vertices of the intersection core are trivalent as well.
    pub intersection_trivalent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDecomposition {
    /// Number of blocks: connected components of the bipartite ones-graph
    /// that contain at least one 1.
    pub l: usize,
    /// All-zero rows.
    pub p: usize,
    /// All-zero columns.
    pub q: usize,
    /// Row set and column set of each block.
    pub blocks: Vec<(Vec<usize>, Vec<usize>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankBounds {
    /// `1 + (l + p + q)/2`.
    pub kent_bound: f64,
    /// `min(h + q/2, k + p/2)`, from `l <= min((2h-2)-p, (2k-2)-q)`.
    pub refined_bound: f64,
    /// Floor of the smaller of the two; ranks are integral.
    pub integral_bound: usize,
}

/// Verdict record for the rank-3 case analysis: both subgroups of rank 3 with
/// intersection of rank >= 3 must have join of rank <= 3.
#[derive(Debug, Clone, Serialize)]
pub struct JoinRankCertificate {
    pub l: usize,
    pub p: usize,
    pub q: usize,
    pub ones: usize,
    pub bound: usize,
    pub rank_join: usize,
    pub pass: bool,
}

pub fn build_matrix(gh: &CoreGraph, gk: &CoreGraph) -> Result<BranchMatrix, BranchMatrixError> {
    if gh.rank() < 2 || gk.rank() < 2 {
        return Err(BranchMatrixError::RankTooSmall(gh.rank(), gk.rank()));
    }
    let rh = gh.branch_vertices();
    let rk = gk.branch_vertices();
    let row_of: std::collections::HashMap<usize, usize> =
        rh.vertices.iter().enumerate().map(|(i, &(v, _))| (v, i)).collect();
    let col_of: std::collections::HashMap<usize, usize> =
        rk.vertices.iter().enumerate().map(|(i, &(v, _))| (v, i)).collect();

    let (core, pairs) = intersection_component(gh, gk)?;
    let valences = core.valences();
    let mut ones = Vec::new();
    let mut intersection_trivalent = true;
    for (v, &val) in valences.iter().enumerate() {
        if val < 3 {
            continue;
        }
        if val > 3 {
            intersection_trivalent = false;
        }
        let (u, w) = pairs[v];
        // valence of a pullback vertex is at most the valence of either
        // projection, so both projections are branch vertices
        ones.push((row_of[&u], col_of[&w]));
    }
    ones.sort_unstable();
    Ok(BranchMatrix {
        trivalent: rh.all_trivalent && rk.all_trivalent,
        intersection_trivalent,
        rows: rh.vertices,
        cols: rk.vertices,
        ones,
    })
}

/// Blocks are the connected components of the bipartite graph on
/// rows ∪ columns with an edge per 1; this is the permutation-invariant form
/// of the permuted block shape `(M_1, ..., M_l, O_{p x q})`.
pub fn block_decompose(m: &BranchMatrix) -> BlockDecomposition {
    let rows = m.rows.len();
    let cols = m.cols.len();
    let mut parent: Vec<usize> = (0..rows + cols).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(r, c) in &m.ones {
        let (a, b) = (find(&mut parent, r), find(&mut parent, rows + c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut touched_rows = vec![false; rows];
    let mut touched_cols = vec![false; cols];
    for &(r, c) in &m.ones {
        touched_rows[r] = true;
        touched_cols[c] = true;
    }
    let mut blocks: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> =
        std::collections::BTreeMap::new();
    for r in 0..rows {
        if touched_rows[r] {
            let root = find(&mut parent, r);
            blocks.entry(root).or_default().0.push(r);
        }
    }
    for c in 0..cols {
        if touched_cols[c] {
            let root = find(&mut parent, rows + c);
            blocks.entry(root).or_default().1.push(c);
        }
    }
    let blocks: Vec<_> = blocks.into_values().collect();
    BlockDecomposition {
        l: blocks.len(),
        p: touched_rows.iter().filter(|&&t| !t).count(),
        q: touched_cols.iter().filter(|&&t| !t).count(),
        blocks,
    }
}

pub fn rank_bounds(h: usize, k: usize, d: &BlockDecomposition) -> RankBounds {
    let (l, p, q) = (d.l as f64, d.p as f64, d.q as f64);
    let kent_bound = 1.0 + (l + p + q) / 2.0;
    let refined_bound = (h as f64 + q / 2.0).min(k as f64 + p / 2.0);
    RankBounds {
        kent_bound,
        refined_bound,
        integral_bound: kent_bound.min(refined_bound).floor() as usize,
    }
}

/// Builds the matrix for a qualifying rank-3 pair and checks the join rank
/// against the bound. Errors unless `rank H = rank K = 3` and
/// `rank(H ∩ K) >= 3`.
pub fn join_rank_certificate(
    gh: &CoreGraph,
    gk: &CoreGraph,
) -> Result<JoinRankCertificate, BranchMatrixError> {
    if gh.rank() != 3 || gk.rank() != 3 {
        return Err(BranchMatrixError::Precondition(format!(
            "ranks must both be 3, got {} and {}",
            gh.rank(),
            gk.rank()
        )));
    }
    let inter = crate::subgroup_calc::intersect(gh, gk)?;
    if inter.rank() < 3 {
        return Err(BranchMatrixError::Precondition(format!(
            "intersection rank must be >= 3, got {}",
            inter.rank()
        )));
    }
    let m = build_matrix(gh, gk)?;
    let d = block_decompose(&m);
    let bounds = rank_bounds(3, 3, &d);
    let rank_join = crate::subgroup_calc::join(gh, gk)?.rank();
    Ok(JoinRankCertificate {
        l: d.l,
        p: d.p,
        q: d.q,
        ones: m.ones.len(),
        bound: bounds.integral_bound,
        rank_join,
        pass: rank_join <= 3,
    })
}
