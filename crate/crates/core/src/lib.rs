//! Embedded index coding: problem model, finite-field linear algebra, minrank
//! search, graph structures and cover schemes.

pub mod catalog;
pub mod codes;
pub mod covers;
pub mod experiments;
pub mod gf;
pub mod graphs;
pub mod minrank;
pub mod model;

/// Default cap on search nodes for exhaustive routines.
pub const DEFAULT_NODE_GUARD: u64 = 100_000_000;

/// Node guard, overridable through `EICP_GUARD_NODES`.
pub fn node_guard() -> u64 {
    std::env::var("EICP_GUARD_NODES")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_NODE_GUARD)
}
