//! Computational toolkit for finitely generated subgroups of free groups and
//! for loxodromic isometries of hyperbolic 3-space.
//!
//! The combinatorial half represents subgroups by folded core graphs and
//! supports membership, rank, intersection, join, and the branch-vertex
//! matrix with its rank bounds on the join. A search harness enumerates or
//! samples pairs of rank-m subgroups and hunts for a pair whose intersection
//! has rank >= m while the join has rank > m. The geometric half works in the
//! upper half-space model: displacement, cylinders, Schottky group sampling,
//! and sampling-based estimates of the subgroup generated by short-translation
//! cyclic groups at a point.

pub mod branch_matrix;
pub mod cli;
pub mod core_graph;
pub mod hyperbolic;
pub mod search;
pub mod subgroup_calc;
pub mod words;

pub use core_graph::CoreGraph;
pub use words::Word;
