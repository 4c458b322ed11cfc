//! A flow network: topology + per-link flow functions + constant inflow.

use crate::error::{Error, Result};
use crate::flow_fn::FlowFunction;
use crate::topology::Topology;

/// Per-link flow values, indexed by link id. Nonnegativity is a value-level
/// invariant; strict admissibility (f < f_max) is checked by operations.
pub type FlowVector = Vec<f64>;

/// Conservation is checked to this absolute tolerance; exact equality on
/// accumulated floating-point sums is meaningless.
pub const CONSERVATION_TOL: f64 = 1e-9;
/// Capacity strictness margin: admissible means f ≤ f_max − this.
pub const CAPACITY_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub topology: Topology,
    pub flow_fns: Vec<FlowFunction>,
    pub inflow: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdmissibilityViolation {
    /// Outgoing flow at the origin does not match the inflow.
    OriginImbalance { outflow: f64, inflow: f64 },
    /// In/out mismatch at an intermediate node.
    NodeImbalance { node: usize, in_flow: f64, out_flow: f64 },
    /// f_e at or above capacity, or negative.
    CapacityViolation { link: usize, flow: f64, f_max: f64 },
}

impl FlowNetwork {
    pub fn new(topology: Topology, flow_fns: Vec<FlowFunction>, inflow: f64) -> Result<Self> {
        if flow_fns.len() != topology.link_count() {
            return Err(Error::FlowFunctionCountMismatch {
                fns: flow_fns.len(),
                links: topology.link_count(),
            });
        }
        if !(inflow >= 0.0 && inflow.is_finite()) {
            return Err(Error::NegativeInflow { inflow });
        }
        for f in &flow_fns {
            f.validate()?;
        }
        Ok(FlowNetwork { topology, flow_fns, inflow })
    }

    pub fn link_count(&self) -> usize {
        self.topology.link_count()
    }

    /// Per-link flow capacities.
    pub fn capacities(&self) -> Vec<f64> {
        self.flow_fns.iter().map(|f| f.f_max()).collect()
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.link_count() {
            return Err(Error::LengthMismatch { got: v.len(), expected: self.link_count() });
        }
        Ok(())
    }

    /// Arrival rate at each node under flow vector `f`: inflow at the
    /// origin, sum of incoming flows elsewhere.
    pub fn node_arrivals(&self, f: &[f64]) -> Vec<f64> {
        let n = self.topology.node_count();
        let mut lambda = vec![0.0; n];
        lambda[0] = self.inflow;
        for v in 1..n {
            lambda[v] = self.topology.in_links(v).iter().map(|&e| f[e]).sum();
        }
        lambda
    }

    /// Minimum over non-destination nodes of the residual capacity
    /// Σ_{e out of v} (f_max_e − f*_e), with a minimizing node
    /// (lowest index on ties).
    pub fn node_residual_capacity(&self, f_star: &[f64]) -> Result<(f64, usize)> {
        self.check_len(f_star)?;
        for (e, (&f, fn_)) in f_star.iter().zip(&self.flow_fns).enumerate() {
            if f > fn_.f_max() || f < 0.0 {
                return Err(Error::FlowExceedsCapacity { link: e, flow: f, f_max: fn_.f_max() });
            }
        }
        let mut best = (f64::INFINITY, usize::MAX);
        for v in 0..self.topology.destination() {
            let residual: f64 =
                self.topology.out_links(v).iter().map(|&e| self.flow_fns[e].f_max() - f_star[e]).sum();
            if residual < best.0 {
                best = (residual, v);
            }
        }
        Ok(best)
    }

    /// True iff `f` conserves the inflow through every non-destination node
    /// and stays strictly below capacity on every link. All failures are
    /// returned, not just the first.
    pub fn is_admissible_equilibrium(&self, f: &[f64]) -> (bool, Vec<AdmissibilityViolation>) {
        let mut violations = Vec::new();
        if f.len() != self.link_count() {
            violations.push(AdmissibilityViolation::OriginImbalance {
                outflow: f64::NAN,
                inflow: self.inflow,
            });
            return (false, violations);
        }
        for (e, (&flow, fn_)) in f.iter().zip(&self.flow_fns).enumerate() {
            let f_max = fn_.f_max();
            if !(flow >= 0.0) || flow > f_max - CAPACITY_MARGIN {
                violations.push(AdmissibilityViolation::CapacityViolation { link: e, flow, f_max });
            }
        }
        let origin_out: f64 = self.topology.out_links(0).iter().map(|&e| f[e]).sum();
        if (origin_out - self.inflow).abs() > CONSERVATION_TOL {
            violations.push(AdmissibilityViolation::OriginImbalance {
                outflow: origin_out,
                inflow: self.inflow,
            });
        }
        for v in 1..self.topology.destination() {
            let in_flow: f64 = self.topology.in_links(v).iter().map(|&e| f[e]).sum();
            let out_flow: f64 = self.topology.out_links(v).iter().map(|&e| f[e]).sum();
            if (in_flow - out_flow).abs() > CONSERVATION_TOL {
                violations.push(AdmissibilityViolation::NodeImbalance { node: v, in_flow, out_flow });
            }
        }
        (violations.is_empty(), violations)
    }
}
