//! Pseudotrajectories, their development functional, and backward
//! collision trees.

mod duality;
mod forward;
mod identities;
mod tree;

pub use duality::{duality_check, DualityCheck};
pub use forward::{
    chi_indicator, develop_phi, run_pseudo, PseudoEvent, PseudoEventKind, PseudoParams,
    PseudoTrace, MAX_ANNIHILATIONS, MAX_CHI_PARTICLES, MAX_KAPPA,
};
pub use identities::{development_identity_gap, sample_small_system, semigroup_property_gap};
pub use tree::{
    backward_characteristic, overlap_free, random_admissible_tree, tree_weight, CollisionTree,
    Creation,
};
