//! Library-wide error type.
//!
//! `NotConverged` is deliberately *not* here for plain simulations: a run
//! that reaches its horizon without settling is reported in-band via
//! [`crate::dynamics::SimResult`]. The variant below is reserved for
//! operations whose contract requires a fixed point (local equilibria).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // --- topology validation ---
    #[error("topology contains a cycle")]
    CycleDetected,
    #[error("origin must be exactly node 0; nodes without incoming links: {nodes:?}")]
    MultipleOrigins { nodes: Vec<usize> },
    #[error("destination must be exactly the last node; nodes without outgoing links: {nodes:?}")]
    MultipleDestinations { nodes: Vec<usize> },
    #[error("node {node} has no path to the destination")]
    NodeWithoutPathToDestination { node: usize },
    #[error("link ids must be unique and dense in 0..|E|: {reason}")]
    LinkIdsNotDense { reason: String },
    #[error("link {link} references node {node} outside 0..{node_count}")]
    NodeIndexOutOfRange { link: usize, node: usize, node_count: usize },

    // --- flow functions ---
    #[error("flow function parameter out of range: {reason}")]
    BadFlowFunction { reason: String },
    #[error("density {rho} outside the flow function domain")]
    DomainExceeded { rho: f64 },
    #[error("flow {flow} at or above capacity {f_max}")]
    FlowAtOrAboveCapacity { flow: f64, f_max: f64 },
    #[error("flow {flow} on link {link} exceeds capacity {f_max}")]
    FlowExceedsCapacity { link: usize, flow: f64, f_max: f64 },

    // --- network-level ---
    #[error("network has {fns} flow functions for {links} links")]
    FlowFunctionCountMismatch { fns: usize, links: usize },
    #[error("inflow must be nonnegative, got {inflow}")]
    NegativeInflow { inflow: f64 },
    #[error("inflow is zero")]
    ZeroInflow,
    #[error("vector length {got} does not match link count {expected}")]
    LengthMismatch { got: usize, expected: usize },

    // --- routing ---
    #[error("policy does not cover node {node}")]
    PolicyNodeMissing { node: usize },
    #[error("policy parameter out of range: {reason}")]
    BadPolicy { reason: String },
    #[error("all outgoing links of node {node} are density-saturated")]
    AllOutgoingSaturated { node: usize },

    // --- dynamics ---
    #[error("perturbation invalid: {reason}")]
    BadPerturbation { reason: String },
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("link {link} needs a finite density cap for cascade simulation")]
    MissingDensityCap { link: usize },
    #[error("local input {lambda} is not below the local perturbed capacity {capacity}")]
    InputExceedsLocalCapacity { lambda: f64, capacity: f64 },
    #[error("no fixed point found within the horizon")]
    NotConverged,

    // --- resilience ---
    #[error("delta {delta} is not below the node capacity {kappa}")]
    DeltaExceedsNodeCapacity { delta: f64, kappa: f64 },
    #[error("flow is not an equilibrium: node {node} routing residual {residual}")]
    NotAnEquilibrium { node: usize, residual: f64 },

    // --- optimization ---
    #[error("problem infeasible")]
    Infeasible,
    #[error("linear program unbounded")]
    Unbounded,
    #[error("operation unsupported for this flow-function variant: {reason}")]
    UnsupportedVariant { reason: String },
    #[error("Wardrop equilibrium carries zero flow on link {link}")]
    WardropHasZeroFlowLink { link: usize },
    #[error("desired flow is zero on link {link}")]
    DesiredFlowHasZeroLink { link: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
