//! Dual-space cluster expansion for classical particles.
//!
//! Positions are traded for the momenta of relative pair displacements; the
//! momentum constraints select cyclic cluster graphs, and the partition
//! function reorganises into a sum over cluster decompositions. The crate
//! covers the whole chain: the valid-cluster atlas ([`graph`]), explicit
//! momentum assignments ([`momentum`]), pair potentials and their transforms
//! ([`potential`]), cluster weights ([`weights`]), the density equation and
//! critical density ([`thermo`]) and brute-force finite-volume oracles
//! ([`oracle`]).

pub mod cli;
pub mod graph;
pub mod momentum;
pub mod numerics;
pub mod oracle;
pub mod potential;
pub mod report;
pub mod thermo;
pub mod weights;
