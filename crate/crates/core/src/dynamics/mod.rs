//! Exact event-driven hard-sphere dynamics, collision graphs and
//! conditioning diagnostics.

mod conditioning;
mod engine;
mod flow;
mod graph;

pub use crate::pseudo::chi_indicator;
pub use conditioning::{
    check_upsilon, distance_clusters, upsilon_step, ConditioningParams, UpsilonReport, UpsilonStep,
};
pub use engine::{Contact, Engine, DEFAULT_MAX_EVENTS, DEGENERATE_GAP};
pub use flow::{next_pair_collision, run_flow, CollisionEvent, EventLog, Flow};
pub use graph::{clustering_tree, collision_graph, first_cycle_event, CollisionGraph, Edge};
