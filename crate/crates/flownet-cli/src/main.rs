//! Command-line front end: scenario ingestion, subcommand dispatch, and
//! plot-data emission for the flow-network toolkit.
//!
//! Exit codes: 0 success (and fully transferring for simulation runs),
//! 1 malformed input, 2 validation failure, 3 not fully transferring,
//! 4 no convergence within the horizon.

mod input;
mod output;

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use flownet::dynamics::{perturbation_magnitude, simulate, simulate_cascade};
use flownet::mincut::{decimal_rational, min_cut_capacity_exact, node_residual_capacity_exact};
use flownet::opt::{
    eval_delay, maximize_resilience, min_delay_with_resilience, resilience_delay_sweep,
    synthesize_tolls, verify_equal_path_costs, wardrop_equilibrium, PathSet,
};
use flownet::resilience::{price_of_anarchy, strong_resilience_probe};

use input::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "flownet", version, about = "Dynamical flow network toolkit")]
struct Cli {
    /// Seed for any randomized input generation.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Output directory for result files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the integration step size.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Override the integration horizon.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the smooth dynamics of a scenario.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Integrate the finite-density cascade dynamics of a scenario.
    Cascade {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Static metrics of a network and equilibrium: min-cut capacity and
    /// min node residual, in floating-point and exact arithmetic.
    Analyze {
        #[arg(long)]
        network: PathBuf,
        /// JSON file holding the equilibrium flow vector.
        #[arg(long)]
        f_star: PathBuf,
    },
    /// Empirical strong-resilience probe (bisection on the adversarial
    /// perturbation magnitude).
    Probe {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        bracket_tol: Option<f64>,
    },
    /// Maximize the minimum node residual capacity (LP).
    OptimizeR {
        #[arg(long)]
        network: PathBuf,
    },
    /// Minimize average delay subject to a residual-capacity margin.
    OptimizeD {
        #[arg(long)]
        network: PathBuf,
        /// Required margin b.
        #[arg(long)]
        b: f64,
    },
    /// Wardrop equilibrium of the delay game.
    Wardrop {
        #[arg(long)]
        network: PathBuf,
    },
    /// Tolls steering the Wardrop equilibrium to a target flow.
    Tolls {
        #[arg(long)]
        network: PathBuf,
        /// JSON file holding the target flow vector.
        #[arg(long)]
        target: PathBuf,
    },
    /// Parameter sweeps emitting plot tables.
    Sweep {
        #[arg(long)]
        kind: SweepKind,
        /// Network file (tradeoff sweep).
        #[arg(long)]
        network: Option<PathBuf>,
        /// Scenario file (eta sweep).
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Grid size for the tradeoff sweep.
        #[arg(long, default_value_t = 16)]
        points: usize,
        /// Comma-separated η values for the eta sweep.
        #[arg(long)]
        values: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    /// Delay/margin trade-off table over b ∈ [0, R*].
    Tradeoff,
    /// Responsiveness-gain sweep of a cascade scenario.
    Eta,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            e.print().expect("stderr");
            std::process::exit(code);
        }
    };
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(CliError::Malformed(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: &Cli) -> CliResult<i32> {
    match &cli.cmd {
        Cmd::Simulate { scenario } => cmd_simulate(cli, scenario, false),
        Cmd::Cascade { scenario } => cmd_simulate(cli, scenario, true),
        Cmd::Analyze { network, f_star } => cmd_analyze(cli, network, f_star),
        Cmd::Probe { scenario, bracket_tol } => cmd_probe(cli, scenario, *bracket_tol),
        Cmd::OptimizeR { network } => cmd_optimize_r(cli, network),
        Cmd::OptimizeD { network, b } => cmd_optimize_d(cli, network, *b),
        Cmd::Wardrop { network } => cmd_wardrop(cli, network),
        Cmd::Tolls { network, target } => cmd_tolls(cli, network, target),
        Cmd::Sweep { kind, network, scenario, points, values } => match kind {
            SweepKind::Tradeoff => {
                let net = required(network, "--network", "sweep --kind tradeoff")?;
                cmd_sweep_tradeoff(cli, net, *points)
            }
            SweepKind::Eta => {
                let sc = required(scenario, "--scenario", "sweep --kind eta")?;
                let values = required(values, "--values", "sweep --kind eta")?;
                cmd_sweep_eta(cli, sc, values)
            }
        },
    }
}

fn required<'a, T>(opt: &'a Option<T>, flag: &str, cmd: &str) -> CliResult<&'a T> {
    opt.as_ref()
        .ok_or_else(|| CliError::Malformed(format!("{cmd} requires {flag}")))
}

fn cmd_simulate(cli: &Cli, scenario: &Path, cascade: bool) -> CliResult<i32> {
    let sc = input::load_scenario(scenario, cli.seed)?;
    let cfg = input::make_config(&sc.config, cli.step, cli.horizon)?;
    let sim = if cascade {
        simulate_cascade(&sc.net, &sc.policy, &sc.perturbation, &sc.initial_flow, &cfg)?
    } else {
        simulate(&sc.net, &sc.policy, &sc.perturbation, &sc.initial_flow, &cfg)?
    };
    let (magnitude, _) = perturbation_magnitude(&sc.net, &sc.perturbation);
    output::write_file(
        &cli.out.join("trace.csv"),
        &output::trace_csv(&sim, sc.net.link_count()),
    )?;
    output::write_json(
        &cli.out.join("summary.json"),
        &output::summary_json(&sim, sc.net.inflow, magnitude),
    )?;
    println!(
        "lim lambda_n = {} ({}); trace.csv and summary.json written to {}",
        sim.limit_lambda_n,
        output::verdict_name(&sim),
        cli.out.display()
    );
    Ok(output::exit_code_for(&sim))
}

fn cmd_analyze(cli: &Cli, network: &Path, f_star: &Path) -> CliResult<i32> {
    let net = input::load_network(network)?;
    let f = input::load_flow_vector(f_star)?;
    let (ok, violations) = net.is_admissible_equilibrium(&f);
    if !ok {
        return Err(CliError::Validation(format!(
            "flow is not an admissible equilibrium: {violations:?}"
        )));
    }
    let cut = min_cut_capacity_exact(&net);
    let (r_exact, argmin_node) = node_residual_capacity_exact(&net, &f)?;
    let (r, _) = net.node_residual_capacity(&f)?;
    let c = flownet::mincut::min_cut_capacity(&net).capacity;
    let gap_exact = cut.capacity.clone() - decimal_rational(net.inflow) - r_exact.clone();
    let poa = price_of_anarchy(&net, &f)?;
    let report = json!({
        "min_cut_c": c,
        "min_cut_c_exact": cut.capacity.to_string(),
        "cut_node_set": cut.cut_node_set,
        "crossing_links": cut.crossing_links,
        "analytic_r": r,
        "analytic_r_exact": r_exact.to_string(),
        "argmin_node": argmin_node,
        "strong_gap": c - net.inflow - r,
        "strong_gap_exact": gap_exact.to_string(),
        "price_of_anarchy": poa,
    });
    output::write_json(&cli.out.join("analyze.json"), &report)?;
    println!(
        "C = {} ({}), R = {} ({}) at node {argmin_node}, gap C - lambda0 - R = {}",
        c,
        cut.capacity,
        r,
        r_exact,
        gap_exact
    );
    Ok(0)
}

fn cmd_probe(cli: &Cli, scenario: &Path, bracket_tol: Option<f64>) -> CliResult<i32> {
    let sc = input::load_scenario(scenario, cli.seed)?;
    let cfg = input::make_config(&sc.config, cli.step, cli.horizon)?;
    let report =
        strong_resilience_probe(&sc.net, &sc.policy, &sc.initial_flow, &cfg, bracket_tol)?;
    output::write_file(&cli.out.join("probes.csv"), &output::probes_csv(&report))?;
    output::write_json(&cli.out.join("probe_report.json"), &output::probe_report_json(&report))?;
    let (lo, hi) = report.bracket.unwrap_or((f64::NAN, f64::NAN));
    println!(
        "analytic R = {}, empirical threshold in [{lo}, {hi}] after {} probes",
        report.analytic_r,
        report.probes.len()
    );
    Ok(0)
}

fn cmd_optimize_r(cli: &Cli, network: &Path) -> CliResult<i32> {
    let net = input::load_network(network)?;
    let sol = maximize_resilience(&net)?;
    let report = json!({
        "r_star": sol.objective,
        "f_opt": sol.f_opt,
        "iterations": sol.iterations,
        "residual": sol.residual,
    });
    output::write_json(&cli.out.join("optimize_r.json"), &report)?;
    println!("R* = {} attained by {:?}", sol.objective, sol.f_opt);
    Ok(0)
}

fn cmd_optimize_d(cli: &Cli, network: &Path, b: f64) -> CliResult<i32> {
    if !(b.is_finite() && b >= 0.0) {
        return Err(CliError::Validation(format!("margin b must be finite and >= 0, got {b}")));
    }
    let net = input::load_network(network)?;
    let sol = min_delay_with_resilience(&net, b)?;
    let report = json!({
        "b": b,
        "d_star": sol.objective,
        "f_opt": sol.f_opt,
        "iterations": sol.iterations,
        "gap": sol.residual,
    });
    output::write_json(&cli.out.join("optimize_d.json"), &report)?;
    println!("D* = {} at margin b = {b}", sol.objective);
    Ok(0)
}

fn cmd_wardrop(cli: &Cli, network: &Path) -> CliResult<i32> {
    let net = input::load_network(network)?;
    let f_w = wardrop_equilibrium(&net)?;
    let delays: Vec<f64> = net
        .flow_fns
        .iter()
        .zip(&f_w)
        .map(|(ff, &fe)| eval_delay(ff, fe))
        .collect::<flownet::Result<_>>()?;
    let paths = PathSet::enumerate(&net.topology);
    let costs: Vec<f64> =
        (0..paths.path_count()).map(|p| paths.path_total(p, &delays)).collect();
    let min_cost = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let report = json!({
        "f_w": f_w,
        "link_delays": delays,
        "paths": paths.paths,
        "path_costs": costs,
        "min_path_cost": min_cost,
    });
    output::write_json(&cli.out.join("wardrop.json"), &report)?;
    println!("f^W = {f_w:?}, minimal path delay {min_cost}");
    Ok(0)
}

fn cmd_tolls(cli: &Cli, network: &Path, target: &Path) -> CliResult<i32> {
    let net = input::load_network(network)?;
    let f_desired = input::load_flow_vector(target)?;
    let tolls = synthesize_tolls(&net, &f_desired)?;
    let residual = verify_equal_path_costs(&net, &f_desired, &tolls)?;
    let report = json!({
        "tolls": tolls,
        "target": f_desired,
        "verification_residual": residual,
    });
    output::write_json(&cli.out.join("tolls.json"), &report)?;
    println!("tolls = {tolls:?}, equal-path-cost residual {residual}");
    Ok(0)
}

fn cmd_sweep_tradeoff(cli: &Cli, network: &Path, points: usize) -> CliResult<i32> {
    if points < 2 {
        return Err(CliError::Validation(format!("--points must be >= 2, got {points}")));
    }
    let net = input::load_network(network)?;
    let table = resilience_delay_sweep(&net, points)?;
    output::write_file(&cli.out.join("sweep_tradeoff.csv"), &output::tradeoff_csv(&table))?;
    println!(
        "sweep_tradeoff.csv written: {} rows, D*({}) = {} .. D*({}) = {}",
        table.len(),
        table[0].b,
        table[0].d_star,
        table[table.len() - 1].b,
        table[table.len() - 1].d_star
    );
    Ok(0)
}

fn cmd_sweep_eta(cli: &Cli, scenario: &Path, values: &str) -> CliResult<i32> {
    let etas = input::parse_value_list(values)?;
    if etas.is_empty() {
        return Err(CliError::Malformed("--values must list at least one η".into()));
    }
    let sc = input::load_scenario(scenario, cli.seed)?;
    let cfg = input::make_config(&sc.config, cli.step, cli.horizon)?;
    let mut rows = Vec::new();
    for &eta in &etas {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(CliError::Validation(format!("η must be positive, got {eta}")));
        }
        let policy = input::eta_policy(&sc.policy_spec, &sc.net, eta)?;
        let sim =
            simulate_cascade(&sc.net, &policy, &sc.perturbation, &sc.initial_flow, &cfg)?;
        let pass = output::verdict_name(&sim) == "FullyTransferring";
        rows.push((eta, sim.limit_lambda_n, pass));
    }
    output::write_file(&cli.out.join("sweep_eta.csv"), &output::eta_csv(&rows))?;
    let passes = rows.iter().filter(|r| r.2).count();
    println!("sweep_eta.csv written: {passes}/{} values fully transferring", rows.len());
    Ok(0)
}
