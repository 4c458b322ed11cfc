//! Fixed-step integration of the density dynamics
//! `dρ_e/dt = λ_v(t)·G^v_e(ρ^v) − μ̃_e(ρ_e)`, with perturbed flow
//! functions, limit-flow detection, transfer classification, and the
//! finite-density cascade semantics for capped links.
//!
//! The integrator is classical RK4 with a fixed step: traces are
//! bit-reproducible for a given (network, policy, perturbation, config).

use crate::error::{Error, Result};
use crate::flow_fn::FlowFunction;
use crate::network::{FlowNetwork, FlowVector};
use crate::routing::RoutingPolicy;

/// Capacity-reduction disturbance: per-link scale factors in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    factors: Vec<f64>,
}

impl Perturbation {
    /// No-op disturbance.
    pub fn identity(link_count: usize) -> Self {
        Perturbation { factors: vec![1.0; link_count] }
    }

    /// Scale the listed links' flow functions by the given factors.
    pub fn scale(link_count: usize, entries: &[(usize, f64)]) -> Result<Self> {
        let mut factors = vec![1.0; link_count];
        for &(link, c) in entries {
            if link >= link_count {
                return Err(Error::BadPerturbation {
                    reason: format!("link {link} out of range (< {link_count})"),
                });
            }
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::BadPerturbation {
                    reason: format!("scale factor {c} outside (0, 1] on link {link}"),
                });
            }
            factors[link] = c;
        }
        Ok(Perturbation { factors })
    }

    pub fn factor(&self, link_id: usize) -> f64 {
        self.factors[link_id]
    }

    pub fn link_count(&self) -> usize {
        self.factors.len()
    }

    /// The network with scaled flow functions substituted in.
    pub fn apply(&self, net: &FlowNetwork) -> Result<FlowNetwork> {
        if self.factors.len() != net.link_count() {
            return Err(Error::LengthMismatch {
                got: self.factors.len(),
                expected: net.link_count(),
            });
        }
        let flow_fns = net
            .flow_fns
            .iter()
            .zip(&self.factors)
            .map(|(ff, &c)| {
                if c == 1.0 {
                    Ok(ff.clone())
                } else {
                    FlowFunction::scaled(ff.clone(), c)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        FlowNetwork::new(net.topology.clone(), flow_fns, net.inflow)
    }
}

/// Disturbance magnitude: per-link sup-norm gaps `δ_e = (1−c_e)·f_max_e`
/// and their total.
pub fn perturbation_magnitude(net: &FlowNetwork, pert: &Perturbation) -> (f64, Vec<f64>) {
    let per_link: Vec<f64> = net
        .capacities()
        .iter()
        .zip(&pert.factors)
        .map(|(&f_max, &c)| (1.0 - c) * f_max)
        .collect();
    (per_link.iter().sum(), per_link)
}

/// Integration and convergence-detection parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// RK4 step.
    pub step_size: f64,
    /// Integration horizon (time units).
    pub horizon: f64,
    /// Convergence window W (time units): the run is declared converged
    /// when every link's outflow varies less than `convergence_tol`
    /// across the whole window.
    pub convergence_window: f64,
    pub convergence_tol: f64,
    /// Transfer classification tolerance; `None` means `1e−3·λ0`.
    pub transfer_tol: Option<f64>,
    /// Record every k-th step into the trace (0-th and final steps always).
    pub trace_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            step_size: 0.01,
            horizon: 2000.0,
            convergence_window: 50.0,
            convergence_tol: 1e-7,
            transfer_tol: None,
            trace_stride: 100,
        }
    }
}

impl SimConfig {
    fn assert_valid(&self) {
        assert!(self.step_size > 0.0, "step_size must be > 0");
        assert!(
            self.horizon >= self.convergence_window && self.convergence_window > 0.0,
            "need horizon ≥ convergence_window > 0"
        );
        assert!(self.convergence_tol > 0.0, "convergence_tol must be > 0");
        assert!(self.trace_stride > 0, "trace_stride must be ≥ 1");
    }
}

/// Throughput classification of a finished run.
#[derive(Debug, Clone, PartialEq)]
pub enum TransferVerdict {
    FullyTransferring,
    NotFullyTransferring { limit: f64 },
}

/// A link shutting down at its density cap.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeEvent {
    pub t: f64,
    pub link_id: usize,
}

/// One recorded trace row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub rho: Vec<f64>,
    pub f: Vec<f64>,
    pub lambda_n: f64,
}

/// Everything a simulation run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub trace: Vec<TraceSample>,
    /// Limit flow when the convergence window closed; `None` means the
    /// horizon was reached without convergence (reported in-band).
    pub limit_flow: Option<FlowVector>,
    /// Time at which convergence was detected.
    pub converged_at: Option<f64>,
    /// Mean destination arrival rate over the final window.
    pub limit_lambda_n: f64,
    pub transfer_verdict: TransferVerdict,
    /// Shutdown events in time order (cascade runs only).
    pub cascade_events: Vec<CascadeEvent>,
    pub final_rho: Vec<f64>,
    /// Discrete `∫ (λ0 − λ_n) dt` accumulated by the same RK4 scheme;
    /// for smooth runs it balances `Σρ(T) − Σρ(0)` to rounding error.
    pub mass_integral: f64,
}

/// Integrate the smooth (no-cap) dynamics from the densities realizing
/// `initial_flow` under the *unperturbed* flow functions.
pub fn simulate(
    net: &FlowNetwork,
    policy: &RoutingPolicy,
    pert: &Perturbation,
    initial_flow: &FlowVector,
    cfg: &SimConfig,
) -> Result<SimResult> {
    policy.validate(&net.topology)?;
    let perturbed = pert.apply(net)?;
    let rho0 = crate::routing::densities_for(net, initial_flow)?;
    integrate(&perturbed, policy, rho0, cfg, false)
}

/// Integrate the finite-density cascade semantics: a link's outflow drops
/// to zero permanently once its density reaches the cap, and also while
/// every outgoing link of its head node is (transitively) shut; arrivals
/// at a node whose entire out-neighborhood is saturated are dropped.
pub fn simulate_cascade(
    net: &FlowNetwork,
    policy: &RoutingPolicy,
    pert: &Perturbation,
    initial_flow: &FlowVector,
    cfg: &SimConfig,
) -> Result<SimResult> {
    policy.validate(&net.topology)?;
    let perturbed = pert.apply(net)?;
    for (e, ff) in perturbed.flow_fns.iter().enumerate() {
        if ff.rho_max().is_none() {
            return Err(Error::MissingDensityCap { link: e });
        }
    }
    let rho0 = crate::routing::densities_for(net, initial_flow)?;
    integrate(&perturbed, policy, rho0, cfg, true)
}

/// Limit flow of the single-node system: out-link densities driven by a
/// constant arrival `lambda` split by the node's policy. Flows are
/// returned in out-link (ascending link id) order.
///
/// `init_rho` seeds the integration (zeros when `None`).
pub fn local_equilibrium(
    net: &FlowNetwork,
    v: usize,
    policy: &RoutingPolicy,
    pert: &Perturbation,
    lambda: f64,
    init_rho: Option<&[f64]>,
    cfg: &SimConfig,
) -> Result<FlowVector> {
    let perturbed = pert.apply(net)?;
    let out = net.topology.out_links(v);
    let local_fns: Vec<FlowFunction> =
        out.iter().map(|&e| perturbed.flow_fns[e].clone()).collect();
    let capacity: f64 = local_fns.iter().map(|ff| ff.f_max()).sum();
    if lambda >= capacity {
        return Err(Error::InputExceedsLocalCapacity { lambda, capacity });
    }
    let pairs: Vec<(usize, usize)> = out.iter().map(|_| (0, 1)).collect();
    let mini_topology = crate::topology::topology_from_pairs(2, &pairs)?;
    let mini_net = FlowNetwork::new(mini_topology, local_fns, lambda)?;
    let mini_policy = restrict_policy(policy, out);
    mini_policy.validate(&mini_net.topology)?;

    let rho0 = match init_rho {
        Some(r) => {
            if r.len() != out.len() {
                return Err(Error::LengthMismatch { got: r.len(), expected: out.len() });
            }
            r.to_vec()
        }
        None => vec![0.0; out.len()],
    };
    let mut local_cfg = cfg.clone();
    local_cfg.trace_stride = usize::MAX;
    let result = integrate(&mini_net, &mini_policy, rho0, &local_cfg, false)?;
    result.limit_flow.ok_or(Error::NotConverged)
}

/// Slice a policy's per-link parameters down to the given links,
/// renumbered by position.
fn restrict_policy(policy: &RoutingPolicy, links: &[usize]) -> RoutingPolicy {
    let take = |v: &[f64]| -> Vec<f64> { links.iter().map(|&e| v[e]).collect() };
    match policy {
        RoutingPolicy::ConstantFraction { fractions } => {
            RoutingPolicy::ConstantFraction { fractions: take(fractions) }
        }
        RoutingPolicy::LocallyResponsiveExp { f_star, rho_star, eta } => {
            RoutingPolicy::LocallyResponsiveExp {
                f_star: take(f_star),
                rho_star: take(rho_star),
                eta: *eta,
            }
        }
        RoutingPolicy::CustomLogit { weights, rates } => {
            RoutingPolicy::CustomLogit { weights: take(weights), rates: take(rates) }
        }
        RoutingPolicy::DensityCappedExp { f_star, rho_star, eta, rho_max } => {
            RoutingPolicy::DensityCappedExp {
                f_star: take(f_star),
                rho_star: take(rho_star),
                eta: *eta,
                rho_max: take(rho_max),
            }
        }
    }
}

/// Per-stage state derivative; `lambda_n` rides along for the mass
/// integral and the destination trace.
struct StageEval {
    drho: Vec<f64>,
    lambda_n: f64,
}

fn integrate(
    net: &FlowNetwork,
    policy: &RoutingPolicy,
    rho0: Vec<f64>,
    cfg: &SimConfig,
    cascade: bool,
) -> Result<SimResult> {
    cfg.assert_valid();
    let topology = &net.topology;
    let m = net.link_count();
    let n = topology.node_count();
    let destination = topology.destination();
    let h = cfg.step_size;
    let steps = (cfg.horizon / h).round() as usize;
    let w_steps = ((cfg.convergence_window / h).round() as usize).max(1);
    let band_stride = (w_steps / 200).max(1);
    let transfer_tol = cfg.transfer_tol.unwrap_or(1e-3 * net.inflow);

    let rho_max: Vec<f64> =
        net.flow_fns.iter().map(|ff| ff.rho_max().unwrap_or(f64::INFINITY)).collect();
    let mut density_shut = vec![false; m];
    for (e, &r) in rho0.iter().enumerate() {
        if cascade && r >= rho_max[e] {
            density_shut[e] = true;
        }
    }
    let mut effective_shut = vec![false; m];
    let mut events: Vec<CascadeEvent> = Vec::new();

    // Ring buffers over the last window: per-link outflow samples for the
    // convergence band, destination arrivals for the tail mean.
    let ring_len = w_steps + 1;
    let mut f_ring = vec![0.0f64; ring_len * m];
    let mut lambda_ring = vec![0.0f64; ring_len];

    let mut rho = rho0;
    let mut mass_integral = 0.0f64;
    let mut trace: Vec<TraceSample> = Vec::new();
    let mut limit_flow: Option<FlowVector> = None;
    let mut converged_at: Option<f64> = None;

    // The "cut out" rule: a link is effectively shut when it is at its own
    // cap or when all of its head's outgoing links are effectively shut.
    // Reverse topological order resolves multi-hop chains in one pass.
    let refresh_effective = |density_shut: &[bool], effective_shut: &mut [bool]| {
        effective_shut.copy_from_slice(density_shut);
        for &v in topology.topo_order().iter().rev() {
            if v == destination {
                continue;
            }
            if topology.out_links(v).iter().all(|&e| effective_shut[e]) {
                for &e in topology.in_links(v) {
                    effective_shut[e] = true;
                }
            }
        }
    };

    let eval_stage = |rho: &[f64], effective_shut: &[bool]| -> Result<StageEval> {
        let mut f = vec![0.0f64; m];
        for e in 0..m {
            if !effective_shut[e] {
                f[e] = net.flow_fns[e].eval_unchecked(rho[e]);
            }
        }
        let mut lambda = vec![0.0f64; n];
        lambda[0] = net.inflow;
        for v in 1..n {
            lambda[v] = topology.in_links(v).iter().map(|&e| f[e]).sum();
        }
        let mut drho = vec![0.0f64; m];
        for v in 0..destination {
            let out = topology.out_links(v);
            for i in 0..out.len() {
                drho[out[i]] = -f[out[i]];
            }
            if lambda[v] > 0.0 {
                let rho_local: Vec<f64> = out.iter().map(|&e| rho[e]).collect();
                match policy.split(topology, v, &rho_local) {
                    Ok(g) => {
                        for (i, &e) in out.iter().enumerate() {
                            drho[e] += lambda[v] * g[i];
                        }
                    }
                    // Every out-link saturated: the arrival is dropped.
                    Err(Error::AllOutgoingSaturated { .. }) if cascade => {}
                    Err(err) => return Err(err),
                }
            }
        }
        Ok(StageEval { drho, lambda_n: lambda[destination] })
    };

    let record =
        |trace: &mut Vec<TraceSample>, k: usize, rho: &[f64], f: &[f64], lambda_n: f64| {
            trace.push(TraceSample {
                t: k as f64 * h,
                rho: rho.to_vec(),
                f: f.to_vec(),
                lambda_n,
            });
        };

    let flows_at = |rho: &[f64], effective_shut: &[bool]| -> Vec<f64> {
        (0..m)
            .map(|e| if effective_shut[e] { 0.0 } else { net.flow_fns[e].eval_unchecked(rho[e]) })
            .collect()
    };

    refresh_effective(&density_shut, &mut effective_shut);
    let f_now = flows_at(&rho, &effective_shut);
    let lambda_n_now: f64 = topology.in_links(destination).iter().map(|&e| f_now[e]).sum();
    f_ring[..m].copy_from_slice(&f_now);
    lambda_ring[0] = lambda_n_now;
    record(&mut trace, 0, &rho, &f_now, lambda_n_now);

    let mut final_step = steps;
    for k in 0..steps {
        if cascade {
            refresh_effective(&density_shut, &mut effective_shut);
        }
        let s1 = eval_stage(&rho, &effective_shut)?;
        let mut r2 = rho.clone();
        for e in 0..m {
            r2[e] += 0.5 * h * s1.drho[e];
        }
        let s2 = eval_stage(&r2, &effective_shut)?;
        let mut r3 = rho.clone();
        for e in 0..m {
            r3[e] += 0.5 * h * s2.drho[e];
        }
        let s3 = eval_stage(&r3, &effective_shut)?;
        let mut r4 = rho.clone();
        for e in 0..m {
            r4[e] += h * s3.drho[e];
        }
        let s4 = eval_stage(&r4, &effective_shut)?;

        for e in 0..m {
            rho[e] += h / 6.0
                * (s1.drho[e] + 2.0 * s2.drho[e] + 2.0 * s3.drho[e] + s4.drho[e]);
        }
        mass_integral += h / 6.0
            * ((net.inflow - s1.lambda_n)
                + 2.0 * (net.inflow - s2.lambda_n)
                + 2.0 * (net.inflow - s3.lambda_n)
                + (net.inflow - s4.lambda_n));

        let t_next = (k + 1) as f64 * h;
        for e in 0..m {
            if !rho[e].is_finite() {
                return Err(Error::NonFiniteState { t: t_next });
            }
            if rho[e] < 0.0 {
                rho[e] = 0.0;
            }
            if cascade && !density_shut[e] && rho[e] >= rho_max[e] {
                rho[e] = rho_max[e];
                density_shut[e] = true;
                events.push(CascadeEvent { t: t_next, link_id: e });
            }
        }
        if cascade {
            refresh_effective(&density_shut, &mut effective_shut);
        }

        let f_now = flows_at(&rho, &effective_shut);
        let lambda_n_now: f64 =
            topology.in_links(destination).iter().map(|&e| f_now[e]).sum();
        let slot = (k + 1) % ring_len;
        f_ring[slot * m..(slot + 1) * m].copy_from_slice(&f_now);
        lambda_ring[slot] = lambda_n_now;

        if (k + 1) % cfg.trace_stride == 0 && k + 1 != steps {
            record(&mut trace, k + 1, &rho, &f_now, lambda_n_now);
        }

        // Band test over the full window, run sparsely: the limit flow is
        // declared when every link's outflow stayed within the tolerance.
        if k + 1 >= w_steps && ((k + 1) % band_stride == 0 || k + 1 == steps) {
            let mut band = 0.0f64;
            'links: for e in 0..m {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for s in 0..ring_len {
                    let v = f_ring[s * m + e];
                    lo = lo.min(v);
                    hi = hi.max(v);
                    if hi - lo >= cfg.convergence_tol {
                        band = hi - lo;
                        break 'links;
                    }
                }
                band = band.max(hi - lo);
            }
            if band < cfg.convergence_tol {
                limit_flow = Some(f_now.clone());
                converged_at = Some(t_next);
                final_step = k + 1;
                if (k + 1) % cfg.trace_stride != 0 || k + 1 == steps {
                    record(&mut trace, k + 1, &rho, &f_now, lambda_n_now);
                }
                break;
            }
        }
        if k + 1 == steps {
            record(&mut trace, k + 1, &rho, &f_now, lambda_n_now);
        }
    }

    let filled = (final_step + 1).min(ring_len);
    let start = final_step + 1 - filled;
    let limit_lambda_n =
        (start..=final_step).map(|s| lambda_ring[s % ring_len]).sum::<f64>() / filled as f64;
    let transfer_verdict = if (limit_lambda_n - net.inflow).abs() <= transfer_tol {
        TransferVerdict::FullyTransferring
    } else {
        TransferVerdict::NotFullyTransferring { limit: limit_lambda_n }
    };

    Ok(SimResult {
        trace,
        limit_flow,
        converged_at,
        limit_lambda_n,
        transfer_verdict,
        cascade_events: events,
        final_rho: rho,
        mass_integral,
    })
}
