//! Dynamical flow networks on DAGs: fixed-step integration of the density
//! dynamics, routing policies and their local-responsiveness test, cascade
//! simulation with density caps, margin/min-cut analysis, and the
//! equilibrium optimization suite (max-margin LP, delay minimization,
//! congestion-game equilibria, and marginal tolls).
//!
//! Conventions used throughout:
//!
//! * Nodes are `0..node_count`, with `0` the origin and `node_count - 1`
//!   the destination. Links are identified by dense ids `0..link_count`;
//!   every per-link vector (densities, flows, capacities) is indexed by
//!   link id.
//! * A *flow vector* assigns a nonnegative outflow to each link. It is an
//!   admissible equilibrium when it conserves the inflow at every
//!   non-destination node and stays strictly below capacity.
//! * All floating-point work is `f64`; the min-cut routines are generic
//!   and also run over exact rationals.

pub mod dynamics;
pub mod error;
pub mod flow_fn;
pub mod lp;
pub mod mincut;
pub mod network;
pub mod opt;
pub mod presets;
pub mod resilience;
pub mod routing;
pub mod topology;

pub use error::{Error, Result};
pub use flow_fn::FlowFunction;
pub use network::{AdmissibilityViolation, FlowNetwork, FlowVector};
pub use topology::{Link, Topology};
