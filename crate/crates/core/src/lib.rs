//! Finite-state program synthesis over bitvectors.

pub mod lvm;
pub mod specir;
pub mod bitblast;
pub mod lattice;
pub mod cegis;
pub mod frontends;
pub mod harness;
