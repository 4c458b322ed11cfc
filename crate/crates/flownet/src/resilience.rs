//! Analytic resilience metrics and the empirical strong-resilience probe.
//!
//! The probe perturbs only the node that attains the min-residual metric,
//! scaling all of its outgoing capacities uniformly — the worst-case
//! family behind the strong-resilience bound — and bisects the
//! perturbation magnitude δ until the fully-transferring boundary is
//! bracketed.

use crate::dynamics::{simulate, Perturbation, SimConfig, TransferVerdict};
use crate::error::{Error, Result};
use crate::network::{FlowNetwork, FlowVector};
use crate::opt::maximize_resilience;
use crate::routing::{densities_for, RoutingPolicy};

/// Residual bound certifying that a flow is an equilibrium of the
/// unperturbed closed-loop system.
pub const EQUILIBRIUM_RESIDUAL_TOL: f64 = 1e-8;

/// One simulated perturbation magnitude and its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeVerdict {
    pub delta: f64,
    /// `Some(true/false)` when the run converged to a limit; `None` when
    /// the horizon closed in-band (the tail mean still steers the search).
    pub fully_transferring: Option<bool>,
    /// Tail-window mean of the destination arrival rate.
    pub lim_lambda_n: f64,
}

/// Analytic metrics plus the bisection record of the empirical probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ResilienceReport {
    /// Min node residual capacity of the given equilibrium.
    pub analytic_r: f64,
    /// Node attaining it (lowest index on ties); the probe's target.
    pub argmin_node: usize,
    /// Min-cut residual-network capacity.
    pub min_cut_c: f64,
    /// Weak-resilience ceiling (equals the min-cut capacity).
    pub weak_upper_bound: f64,
    /// C − λ0 − R: what locality gives up against the weak bound.
    pub strong_gap: f64,
    /// Midpoint of the final bracket.
    pub empirical_threshold: Option<f64>,
    /// (largest δ observed transferring, smallest δ observed not).
    pub bracket: Option<(f64, f64)>,
    /// Every probe run, sorted by δ.
    pub probes: Vec<ProbeVerdict>,
}

/// Uniformly scale every out-link of `node` so the lost capacity totals
/// `delta`: factor (κ−δ)/κ with κ the node's outgoing capacity. `f_star`
/// is the equilibrium being attacked (the probe targets its min-residual
/// node); the scaling itself depends only on the topology and δ.
pub fn adversarial_perturbation(
    net: &FlowNetwork,
    f_star: &FlowVector,
    node: usize,
    delta: f64,
) -> Result<Perturbation> {
    if f_star.len() != net.link_count() {
        return Err(Error::LengthMismatch { got: f_star.len(), expected: net.link_count() });
    }
    assert!(delta >= 0.0, "perturbation magnitudes are nonnegative");
    assert!(node < net.topology.destination(), "node must have out-links");
    let caps = net.capacities();
    let out = net.topology.out_links(node);
    let kappa: f64 = out.iter().map(|&e| caps[e]).sum();
    if delta >= kappa {
        return Err(Error::DeltaExceedsNodeCapacity { delta, kappa });
    }
    let factor = (kappa - delta) / kappa;
    let entries: Vec<(usize, f64)> = out.iter().map(|&e| (e, factor)).collect();
    Perturbation::scale(net.link_count(), &entries)
}

/// Verify stationarity: at the densities realizing `f_star`, every
/// node's arrival rate times its split must reproduce `f_star` on each
/// out-link within [`EQUILIBRIUM_RESIDUAL_TOL`].
fn check_equilibrium(
    net: &FlowNetwork,
    policy: &RoutingPolicy,
    f_star: &FlowVector,
) -> Result<()> {
    let rho = densities_for(net, f_star)?;
    let arrivals = net.node_arrivals(f_star);
    for v in 0..net.topology.destination() {
        let out = net.topology.out_links(v);
        let rho_local: Vec<f64> = out.iter().map(|&e| rho[e]).collect();
        let split = policy.split(&net.topology, v, &rho_local)?;
        for (i, &e) in out.iter().enumerate() {
            let residual = (arrivals[v] * split[i] - f_star[e]).abs();
            if residual >= EQUILIBRIUM_RESIDUAL_TOL {
                return Err(Error::NotAnEquilibrium { node: v, residual });
            }
        }
    }
    Ok(())
}

/// Bisect the adversarial magnitude at the min-residual node until the
/// fully-transferring/not boundary is bracketed within `bracket_tol`
/// (default 0.02·κ), starting from five evenly spaced coarse probes.
/// Each probe integrates the perturbed dynamics from f° = f*.
pub fn strong_resilience_probe(
    net: &FlowNetwork,
    policy: &RoutingPolicy,
    f_star: &FlowVector,
    cfg: &SimConfig,
    bracket_tol: Option<f64>,
) -> Result<ResilienceReport> {
    policy.validate(&net.topology)?;
    check_equilibrium(net, policy, f_star)?;
    let (analytic_r, argmin_node) = net.node_residual_capacity(f_star)?;
    let min_cut_c = crate::mincut::min_cut_capacity(net).capacity;

    let caps = net.capacities();
    let kappa: f64 =
        net.topology.out_links(argmin_node).iter().map(|&e| caps[e]).sum();
    let tol = bracket_tol.unwrap_or(0.02 * kappa);
    assert!(tol > 0.0, "bracket tolerance must be positive");

    let mut probes: Vec<ProbeVerdict> = Vec::new();
    let mut run = |delta: f64| -> Result<bool> {
        let pert = adversarial_perturbation(net, f_star, argmin_node, delta)?;
        let sim = simulate(net, policy, &pert, f_star, cfg)?;
        let transferring = matches!(sim.transfer_verdict, TransferVerdict::FullyTransferring);
        probes.push(ProbeVerdict {
            delta,
            fully_transferring: sim.limit_flow.as_ref().map(|_| transferring),
            lim_lambda_n: sim.limit_lambda_n,
        });
        Ok(transferring)
    };

    // δ = 0 is the identity (transferring by definition); δ = κ removes
    // the node's entire capacity (not transferring); neither is simulated.
    let (mut lo, mut hi) = (0.0f64, kappa);
    for i in 1..=5 {
        let delta = kappa * i as f64 / 6.0;
        if run(delta)? {
            lo = lo.max(delta);
        } else {
            hi = hi.min(delta);
        }
    }
    for _ in 0..12 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if run(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    probes.sort_by(|a, b| a.delta.total_cmp(&b.delta));

    Ok(ResilienceReport {
        analytic_r,
        argmin_node,
        min_cut_c,
        weak_upper_bound: min_cut_c,
        strong_gap: min_cut_c - net.inflow - analytic_r,
        empirical_threshold: Some(0.5 * (lo + hi)),
        bracket: Some((lo, hi)),
        probes,
    })
}

/// Robustness price of anarchy P(f*) = R* − R(f*): the margin the given
/// equilibrium leaves on the table against the max-margin flow.
pub fn price_of_anarchy(net: &FlowNetwork, f_star: &FlowVector) -> Result<f64> {
    let r_star = maximize_resilience(net)?.objective;
    let (r, _) = net.node_residual_capacity(f_star)?;
    Ok(r_star - r)
}
