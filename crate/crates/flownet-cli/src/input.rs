//! File schemas and loaders: network descriptions, scenarios, flow
//! vectors, and the initial-flow resolution rules.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use flownet::dynamics::{local_equilibrium, Perturbation, SimConfig};
use flownet::opt::PathSet;
use flownet::routing::RoutingPolicy;
use flownet::topology::topology_from_pairs;
use flownet::{FlowFunction, FlowNetwork, FlowVector};

/// Errors carrying the exit-code split: `Malformed` (unreadable or
/// unparseable input, exit 1) vs `Validation` (well-formed but
/// semantically invalid, exit 2).
#[derive(Debug)]
pub enum CliError {
    Malformed(String),
    Validation(String),
}

impl From<flownet::Error> for CliError {
    fn from(e: flownet::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Malformed(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str, what: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Malformed(format!("{what}: {e}")))
}

// ---------------------------------------------------------------------
// Network files

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    nodes: usize,
    inflow: f64,
    links: Vec<LinkSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkSpec {
    id: usize,
    tail: usize,
    head: usize,
    flow_fn: FlowFnSpec,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum FlowFnSpec {
    #[serde(rename = "exp")]
    Exp { f_max: f64, a: f64 },
    #[serde(rename = "quad")]
    Quad { f_max: f64, rho_max: f64 },
}

pub fn load_network(path: &Path) -> CliResult<FlowNetwork> {
    let spec: NetworkFile = parse_json(&read_file(path)?, "network file")?;
    let mut links = spec.links;
    links.sort_by_key(|l| l.id);
    for (i, l) in links.iter().enumerate() {
        if l.id != i {
            return Err(CliError::Validation(format!(
                "link ids must be exactly 0..{} (got {})",
                links.len(),
                l.id
            )));
        }
    }
    let pairs: Vec<(usize, usize)> = links.iter().map(|l| (l.tail, l.head)).collect();
    let topology = topology_from_pairs(spec.nodes, &pairs)?;
    let flow_fns = links
        .iter()
        .map(|l| match l.flow_fn {
            FlowFnSpec::Exp { f_max, a } => FlowFunction::exp_saturating(f_max, a),
            FlowFnSpec::Quad { f_max, rho_max } => {
                FlowFunction::concave_quadratic(f_max, rho_max)
            }
        })
        .collect::<flownet::Result<Vec<_>>>()?;
    Ok(FlowNetwork::new(topology, flow_fns, spec.inflow)?)
}

/// A bare flow vector (JSON array of floats).
pub fn load_flow_vector(path: &Path) -> CliResult<FlowVector> {
    parse_json(&read_file(path)?, "flow vector file")
}

// ---------------------------------------------------------------------
// Scenario files

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Network file path, relative to the scenario file's directory.
    pub network: String,
    pub policy: PolicySpec,
    #[serde(default)]
    pub perturbations: Vec<PerturbationSpec>,
    pub initial_flow: InitialFlowSpec,
    #[serde(default)]
    pub config: ConfigSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum PolicySpec {
    #[serde(rename = "constant")]
    Constant { fractions: Vec<f64> },
    #[serde(rename = "lr_exp")]
    LrExp { eta: f64, f_star: Vec<f64> },
    #[serde(rename = "lr_exp_capped")]
    LrExpCapped { eta: f64, f_star: Vec<f64> },
    #[serde(rename = "logit")]
    Logit { weights: Vec<f64>, rates: Vec<f64> },
}

impl PolicySpec {
    /// Same policy with the responsiveness gain replaced; `None` when the
    /// variant has no η parameter.
    pub fn with_eta(&self, eta: f64) -> Option<PolicySpec> {
        match self {
            PolicySpec::LrExp { f_star, .. } => {
                Some(PolicySpec::LrExp { eta, f_star: f_star.clone() })
            }
            PolicySpec::LrExpCapped { f_star, .. } => {
                Some(PolicySpec::LrExpCapped { eta, f_star: f_star.clone() })
            }
            _ => None,
        }
    }

}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub link: usize,
    pub factor: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum InitialFlowSpec {
    Explicit(Vec<f64>),
    /// "equilibrium" | "random" | "random:<seed>"
    Named(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    pub step: Option<f64>,
    pub horizon: Option<f64>,
    pub window: Option<f64>,
    pub convergence_tol: Option<f64>,
    pub transfer_tol: Option<f64>,
    pub trace_stride: Option<usize>,
}

pub struct LoadedScenario {
    pub net: FlowNetwork,
    pub policy: RoutingPolicy,
    pub policy_spec: PolicySpec,
    pub perturbation: Perturbation,
    pub initial_flow: FlowVector,
    pub config: ConfigSpec,
}

pub fn load_scenario(path: &Path, seed: u64) -> CliResult<LoadedScenario> {
    let sc: ScenarioFile = parse_json(&read_file(path)?, "scenario file")?;
    let net_path: PathBuf = match path.parent() {
        Some(dir) => dir.join(&sc.network),
        None => PathBuf::from(&sc.network),
    };
    let net = load_network(&net_path)?;
    let policy = build_policy(&sc.policy, &net)?;
    let perturbation = build_perturbation(&sc.perturbations, net.link_count())?;
    let initial_flow = resolve_initial_flow(&sc.initial_flow, &net, &policy, seed)?;
    Ok(LoadedScenario {
        net,
        policy,
        policy_spec: sc.policy,
        perturbation,
        initial_flow,
        config: sc.config,
    })
}

pub fn build_policy(spec: &PolicySpec, net: &FlowNetwork) -> CliResult<RoutingPolicy> {
    let policy = match spec {
        PolicySpec::Constant { fractions } => {
            RoutingPolicy::ConstantFraction { fractions: fractions.clone() }
        }
        PolicySpec::LrExp { eta, f_star } => {
            RoutingPolicy::locally_responsive_exp(net, f_star.clone(), *eta)?
        }
        PolicySpec::LrExpCapped { eta, f_star } => {
            RoutingPolicy::density_capped_exp(net, f_star.clone(), *eta)?
        }
        PolicySpec::Logit { weights, rates } => {
            RoutingPolicy::CustomLogit { weights: weights.clone(), rates: rates.clone() }
        }
    };
    policy.validate(&net.topology)?;
    Ok(policy)
}

pub fn build_perturbation(
    specs: &[PerturbationSpec],
    link_count: usize,
) -> CliResult<Perturbation> {
    let entries: Vec<(usize, f64)> = specs.iter().map(|p| (p.link, p.factor)).collect();
    Ok(Perturbation::scale(link_count, &entries)?)
}

/// Build the effective simulation config: defaults, overridden by the
/// scenario's `config` block, overridden by the CLI flags.
pub fn make_config(
    spec: &ConfigSpec,
    cli_step: Option<f64>,
    cli_horizon: Option<f64>,
) -> CliResult<SimConfig> {
    let mut cfg = SimConfig::default();
    if let Some(x) = spec.step {
        cfg.step_size = x;
    }
    if let Some(x) = spec.horizon {
        cfg.horizon = x;
    }
    if let Some(x) = spec.window {
        cfg.convergence_window = x;
    }
    if let Some(x) = spec.convergence_tol {
        cfg.convergence_tol = x;
    }
    if spec.transfer_tol.is_some() {
        cfg.transfer_tol = spec.transfer_tol;
    }
    if let Some(x) = spec.trace_stride {
        cfg.trace_stride = x;
    }
    if let Some(x) = cli_step {
        cfg.step_size = x;
    }
    if let Some(x) = cli_horizon {
        cfg.horizon = x;
    }
    let ok = cfg.step_size.is_finite()
        && cfg.step_size > 0.0
        && cfg.horizon.is_finite()
        && cfg.horizon >= cfg.step_size
        && cfg.convergence_window.is_finite()
        && cfg.convergence_window > 0.0
        && cfg.convergence_window <= cfg.horizon
        && cfg.convergence_tol > 0.0
        && cfg.transfer_tol.is_none_or(|t| t > 0.0)
        && cfg.trace_stride >= 1;
    if !ok {
        return Err(CliError::Validation(format!("invalid simulation config {cfg:?}")));
    }
    Ok(cfg)
}

/// Resolve the scenario's initial flow:
/// - an explicit vector is used as-is (downstream admissibility checks
///   apply);
/// - `"equilibrium"` propagates the inflow through the *unperturbed*
///   closed loop, solving each node's local relaxation in topological
///   order;
/// - `"random"` / `"random:<seed>"` samples path flows uniformly on the
///   inflow simplex, rejecting capacity-violating draws (1000 attempts).
pub fn resolve_initial_flow(
    spec: &InitialFlowSpec,
    net: &FlowNetwork,
    policy: &RoutingPolicy,
    cli_seed: u64,
) -> CliResult<FlowVector> {
    match spec {
        InitialFlowSpec::Explicit(v) => Ok(v.clone()),
        InitialFlowSpec::Named(name) if name == "equilibrium" => {
            equilibrium_flow(net, policy)
        }
        InitialFlowSpec::Named(name) if name == "random" => {
            random_path_flow(net, cli_seed)
        }
        InitialFlowSpec::Named(name) => match name.strip_prefix("random:") {
            Some(s) => {
                let seed: u64 = s.parse().map_err(|_| {
                    CliError::Malformed(format!("bad random seed in initial_flow: {name:?}"))
                })?;
                random_path_flow(net, seed)
            }
            None => Err(CliError::Malformed(format!(
                "initial_flow must be a vector, \"equilibrium\", or \"random[:<seed>]\" (got {name:?})"
            ))),
        },
    }
}

fn equilibrium_flow(net: &FlowNetwork, policy: &RoutingPolicy) -> CliResult<FlowVector> {
    let topology = &net.topology;
    let identity = Perturbation::identity(net.link_count());
    let cfg = SimConfig::default();
    let mut arrivals = vec![0.0; topology.node_count()];
    arrivals[0] = net.inflow;
    let mut f = vec![0.0; net.link_count()];
    for &v in topology.topo_order() {
        if v == topology.destination() || arrivals[v] == 0.0 {
            continue;
        }
        let local =
            local_equilibrium(net, v, policy, &identity, arrivals[v], None, &cfg)?;
        for (i, &e) in topology.out_links(v).iter().enumerate() {
            f[e] = local[i];
            arrivals[topology.link(e).head_node] += local[i];
        }
    }
    Ok(f)
}

fn random_path_flow(net: &FlowNetwork, seed: u64) -> CliResult<FlowVector> {
    let paths = PathSet::enumerate(&net.topology);
    let caps = net.capacities();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..1000 {
        let weights: Vec<f64> = (0..paths.path_count()).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        let mut f = vec![0.0; net.link_count()];
        for (p, w) in paths.paths.iter().zip(&weights) {
            for &e in p {
                f[e] += net.inflow * w / total;
            }
        }
        if f.iter().zip(&caps).all(|(&fe, &cap)| fe < cap * (1.0 - 1e-6)) {
            return Ok(f);
        }
    }
    Err(CliError::Validation(
        "no capacity-respecting random path flow found in 1000 draws".into(),
    ))
}

/// Parse a comma-separated float list (the `--values` flag).
pub fn parse_value_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Malformed(format!("bad float {tok:?} in --values")))
        })
        .collect()
}

/// Rebuild a scenario's policy with a different responsiveness gain.
pub fn eta_policy(
    spec: &PolicySpec,
    net: &FlowNetwork,
    eta: f64,
) -> CliResult<RoutingPolicy> {
    let with = spec.with_eta(eta).ok_or_else(|| {
        CliError::Validation(
            "eta sweep needs an lr_exp or lr_exp_capped policy in the scenario".into(),
        )
    })?;
    build_policy(&with, net)
}
