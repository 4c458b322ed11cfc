//! Acceptance suite: one test per shipping criterion. Every test prints a
//! `[criterion N] PASS`/`FAIL` line (plus one line per sub-check) and then
//! asserts that all of its sub-checks hold, so a red criterion fails the
//! target honestly instead of being papered over.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads=1`
//! to see every line, including the passing ones.
//!
//! Four sub-checks are expected to stay red: the reference targets they
//! encode are mutually inconsistent with values this library computes and
//! cross-checks by independent routes (grid search, exact rational
//! arithmetic, conservation identities). Each red line prints the computed
//! value next to the reference target so the discrepancy is auditable.

mod props;

use std::time::Instant;

use flownet::dynamics::{
    perturbation_magnitude, simulate, simulate_cascade, CascadeEvent, Perturbation,
    SimConfig, TransferVerdict,
};
use flownet::mincut::{decimal_rational, min_cut_capacity_exact, node_residual_capacity_exact};
use flownet::opt::{
    maximize_resilience, min_delay_with_resilience, resilience_delay_sweep,
    synthesize_tolls, verify_equal_path_costs, wardrop_equilibrium,
};
use flownet::presets::{
    mesh15_net, two_level_delay_skewed_net, two_level_graded_net, two_level_net,
    MESH15_F_STAR, TWO_LEVEL_F_STAR,
};
use flownet::resilience::{adversarial_perturbation, price_of_anarchy, strong_resilience_probe};
use flownet::routing::RoutingPolicy;

/// Collects sub-checks for one criterion and renders the verdict.
struct Criterion {
    id: u32,
    checks: Vec<(String, bool, String)>,
}

impl Criterion {
    fn new(id: u32) -> Self {
        Criterion { id, checks: Vec::new() }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push((name.to_string(), pass, detail));
    }

    /// Prints one line per sub-check plus the criterion verdict, then
    /// panics if any sub-check failed.
    fn finish(self) {
        let mut failing = Vec::new();
        for (name, pass, detail) in &self.checks {
            let mark = if *pass { "ok  " } else { "FAIL" };
            println!("[criterion {}] {mark} — {name}: {detail}", self.id);
            if !pass {
                failing.push(format!("{name} ({detail})"));
            }
        }
        if failing.is_empty() {
            println!("[criterion {}] PASS", self.id);
        } else {
            println!(
                "[criterion {}] FAIL ({} of {} checks failed)",
                self.id,
                failing.len(),
                self.checks.len()
            );
        }
        assert!(
            failing.is_empty(),
            "criterion {} failing checks: {}",
            self.id,
            failing.join("; ")
        );
    }
}

fn fmt_flows(f: &[f64]) -> String {
    let inner: Vec<String> = f.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", inner.join(", "))
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

// ---------------------------------------------------------------------

/// Criterion 1 — the two reference policies on the two-level net, under
/// the scale(e1, 0.7) perturbation started from the equilibrium flow:
/// both should lose throughput to lim λ₂ = 1.9 ± 0.01, and the logit
/// policy should settle on limit flows (0.4, 1.6, 0.75, 0.75) ± 0.01.
/// Runtime < 10 s.
#[test]
fn criterion_1_reference_policies_under_link_1_weakening() {
    let t0 = Instant::now();
    let mut c = Criterion::new(1);

    let net = two_level_net();
    let f_star = TWO_LEVEL_F_STAR.to_vec();
    let pert = Perturbation::scale(net.link_count(), &[(0, 0.7)]).unwrap();
    let cfg = SimConfig::default();

    let fixed = RoutingPolicy::ConstantFraction { fractions: vec![0.75, 0.25, 0.5, 0.5] };
    let sim1 = simulate(&net, &fixed, &pert, &f_star, &cfg).unwrap();
    c.check(
        "fixed-split policy: lim λ₂ = 1.9 ± 0.01",
        (sim1.limit_lambda_n - 1.9).abs() <= 0.01,
        format!("lim λ₂ = {:.9}", sim1.limit_lambda_n),
    );

    let logit = RoutingPolicy::CustomLogit {
        weights: vec![2.0, 1.0, 1.0, 1.0],
        rates: vec![0.031, -0.7196, 0.0, 0.0],
    };
    let sim2 = simulate(&net, &logit, &pert, &f_star, &cfg).unwrap();
    c.check(
        "logit policy: lim λ₂ = 1.9 ± 0.01",
        (sim2.limit_lambda_n - 1.9).abs() <= 0.01,
        format!("lim λ₂ = {:.9}", sim2.limit_lambda_n),
    );
    let target = [0.4, 1.6, 0.75, 0.75];
    match &sim2.limit_flow {
        Some(limit) => c.check(
            "logit policy: limit flows = (0.4, 1.6, 0.75, 0.75) ± 0.01",
            close(limit, &target, 0.01),
            format!("limit flows = {}", fmt_flows(limit)),
        ),
        None => c.check(
            "logit policy: limit flows = (0.4, 1.6, 0.75, 0.75) ± 0.01",
            false,
            "run did not converge".to_string(),
        ),
    }

    let elapsed = t0.elapsed().as_secs_f64();
    c.check("runtime < 10 s", elapsed < 10.0, format!("{elapsed:.2} s"));
    c.finish();
}

/// Criterion 2 — the strong-resilience probe on the two-level net with
/// the responsive policy (η = 1) brackets the transfer threshold within
/// [0.95, 1.05] around the analytic margin R = 1.0; a δ = 0.5 hit at the
/// critical node keeps full transfer, a δ = 1.2 hit destroys it.
/// Runtime < 2 min.
#[test]
fn criterion_2_probe_brackets_the_transfer_threshold() {
    let t0 = Instant::now();
    let mut c = Criterion::new(2);

    let net = two_level_net();
    let f_star = TWO_LEVEL_F_STAR.to_vec();
    let policy =
        RoutingPolicy::locally_responsive_exp(&net, f_star.clone(), 1.0).unwrap();
    let cfg = SimConfig::default();

    let report = strong_resilience_probe(&net, &policy, &f_star, &cfg, None).unwrap();
    c.check(
        "analytic margin R = 1.0",
        (report.analytic_r - 1.0).abs() <= 1e-12,
        format!("R = {} at node {}", report.analytic_r, report.argmin_node),
    );
    match report.bracket {
        Some((lo, hi)) => c.check(
            "probe bracket within [0.95, 1.05]",
            (0.95..=1.05).contains(&lo) && (0.95..=1.05).contains(&hi) && lo <= hi,
            format!("bracket [{lo}, {hi}] from {} probes", report.probes.len()),
        ),
        None => c.check(
            "probe bracket within [0.95, 1.05]",
            false,
            "probe produced no bracket".to_string(),
        ),
    }

    for (delta, want_transfer) in [(0.5, true), (1.2, false)] {
        let hit = adversarial_perturbation(&net, &f_star, report.argmin_node, delta).unwrap();
        let sim = simulate(&net, &policy, &hit, &f_star, &cfg).unwrap();
        let transfers = matches!(sim.transfer_verdict, TransferVerdict::FullyTransferring);
        let name = if want_transfer {
            "δ = 0.5 keeps full transfer"
        } else {
            "δ = 1.2 destroys full transfer"
        };
        c.check(
            name,
            transfers == want_transfer,
            format!(
                "lim λ₂ = {:.9}, converged: {}",
                sim.limit_lambda_n,
                sim.limit_flow.is_some()
            ),
        );
    }

    let elapsed = t0.elapsed().as_secs_f64();
    c.check("runtime < 2 min", elapsed < 120.0, format!("{elapsed:.2} s"));
    c.finish();
}

/// Criterion 3 — the margin-maximization LP: on the delay-skewed net it
/// must return R* = 1.5 attained at (2, 0, 0, 0) (to LP tolerance 1e−8);
/// on the graded net (ε = 0.5) the reference target is R* = 3.0.
#[test]
fn criterion_3_margin_lp_reference_optima() {
    let mut c = Criterion::new(3);

    let skewed = two_level_delay_skewed_net();
    let sol = maximize_resilience(&skewed).unwrap();
    c.check(
        "delay-skewed net: R* = 1.5",
        (sol.objective - 1.5).abs() <= 1e-8,
        format!("R* = {:.10}", sol.objective),
    );
    c.check(
        "delay-skewed net: maximizer (2, 0, 0, 0)",
        close(&sol.f_opt, &[2.0, 0.0, 0.0, 0.0], 1e-8),
        format!("f = {}", fmt_flows(&sol.f_opt)),
    );

    let graded = two_level_graded_net(0.5);
    let sol5 = maximize_resilience(&graded).unwrap();
    c.check(
        "graded net (ε = 0.5): R* = 3.0",
        (sol5.objective - 3.0).abs() <= 1e-8,
        format!(
            "computed R* = {:.10} at f = {}; at inflow 2 the branch node's \
             residual (2.5 − f₂) peaks at 2.5 while the source node's stays \
             at 3, so no feasible flow reaches 3.0 — that target equals the \
             min-cut ceiling C − λ₀ = 5 − 2 = 3, not an attainable margin \
             (grid search agrees with the LP)",
            sol5.objective,
            fmt_flows(&sol5.f_opt)
        ),
    );

    c.finish();
}

/// Criterion 4 — delay minimization under a margin floor on the
/// delay-skewed net: b = 0 gives D = 15.17 ± 1% at
/// f ≈ (0.5, 1.5, 0.75, 0.75) ± 0.02; the delay–margin sweep is monotone
/// in b and its last point (b = 1.5) routes everything on link 1
/// (f₁ = 2 ± 0.01).
#[test]
fn criterion_4_constrained_delay_minimization_and_sweep() {
    let mut c = Criterion::new(4);

    let net = two_level_delay_skewed_net();
    let sol = min_delay_with_resilience(&net, 0.0).unwrap();
    c.check(
        "b = 0: D = 15.17 ± 1%",
        (sol.objective - 15.17).abs() <= 0.01 * 15.17,
        format!("D = {:.9}", sol.objective),
    );
    c.check(
        "b = 0: f ≈ (0.5, 1.5, 0.75, 0.75) ± 0.02",
        close(&sol.f_opt, &[0.5, 1.5, 0.75, 0.75], 0.02),
        format!("f = {}", fmt_flows(&sol.f_opt)),
    );

    let sweep = resilience_delay_sweep(&net, 16).unwrap();
    let mut monotone = true;
    let mut breach = String::new();
    for w in sweep.windows(2) {
        if w[1].d_star < w[0].d_star - 1e-9 {
            monotone = false;
            breach = format!(
                "D*({}) = {} < D*({}) = {}",
                w[1].b, w[1].d_star, w[0].b, w[0].d_star
            );
            break;
        }
    }
    c.check(
        "sweep: D* monotone in b",
        monotone,
        if monotone {
            format!(
                "D* rises {:.6} → {:.6} over {} points",
                sweep[0].d_star,
                sweep.last().unwrap().d_star,
                sweep.len()
            )
        } else {
            breach
        },
    );
    let last = sweep.last().unwrap();
    c.check(
        "sweep ends at b = 1.5 with f₁ = 2 ± 0.01",
        (last.b - 1.5).abs() <= 1e-9 && (last.f_opt[0] - 2.0).abs() <= 0.01,
        format!("b = {}, f₁ = {:.6}", last.b, last.f_opt[0]),
    );

    c.finish();
}

/// Criterion 5 — zero-toll routing equilibrium and toll synthesis on the
/// graded net (ε = 0.5): f^W = (1, 1, 0.5, 0.5) ± 1e−3; the robustness
/// price P(f^W) has reference target 1.5 ± 1e−2; tolls synthesized for a
/// strictly interior target must equalize tolled path costs to ≤ 1e−6.
#[test]
fn criterion_5_routing_equilibrium_robustness_price_and_tolls() {
    let mut c = Criterion::new(5);

    let net = two_level_graded_net(0.5);
    let fw = wardrop_equilibrium(&net).unwrap();
    c.check(
        "equilibrium flows f^W = (1, 1, 0.5, 0.5) ± 1e−3",
        close(&fw, &[1.0, 1.0, 0.5, 0.5], 1e-3),
        format!("f^W = {}", fmt_flows(&fw)),
    );

    let price = price_of_anarchy(&net, &fw).unwrap();
    c.check(
        "robustness price P(f^W) = 1.5 ± 1e−2",
        (price - 1.5).abs() <= 1e-2,
        format!(
            "computed P = {price:.10} = R* 2.5 − R(f^W) 1.5; the reference \
             target 1.5 presumes the same margin optimum R* = 3.0 that \
             criterion 3 shows is unattainable"
        ),
    );

    let target = vec![1.2, 0.8, 0.4, 0.4];
    let tolls = synthesize_tolls(&net, &target).unwrap();
    let residual = verify_equal_path_costs(&net, &target, &tolls).unwrap();
    c.check(
        "tolls for interior target (1.2, 0.8, 0.4, 0.4): equal-path-cost residual ≤ 1e−6",
        residual <= 1e-6,
        format!("residual = {residual:.3e}, tolls = {}", fmt_flows(&tolls)),
    );

    c.finish();
}

/// Criterion 6 — exact analytics on the 15-link mesh: min-cut capacity
/// C = 5.2 and equilibrium margin R = 0.75, both in exact rational
/// arithmetic on the given capacities (26/5 and 3/4 — no float rounding).
#[test]
fn criterion_6_exact_cut_and_margin_analytics() {
    let mut c = Criterion::new(6);

    let net = mesh15_net();
    let cut = min_cut_capacity_exact(&net);
    c.check(
        "min-cut capacity C = 26/5 exactly",
        cut.capacity == decimal_rational(5.2),
        format!(
            "C = {} across links {:?} (node set {:?})",
            cut.capacity, cut.crossing_links, cut.cut_node_set
        ),
    );

    let (margin, node) = node_residual_capacity_exact(&net, &MESH15_F_STAR.to_vec()).unwrap();
    c.check(
        "equilibrium margin R = 3/4 exactly",
        margin == decimal_rational(0.75),
        format!("R = {margin} at node {node}"),
    );

    c.finish();
}

/// Criterion 7 — cascade sweeps on the 15-link mesh with the
/// density-capped responsive policy. δ = 0.7 (link 10 scaled by 8/15):
/// η ∈ {0.1, 0.2} collapse throughput to 0 and η ∈ {0.3, 0.5} keep it at
/// 3 (± 1e−3). δ = 4 (eight links weakened): every tested η collapses
/// throughput, with shutdowns ordered from links 10/12 upstream to links
/// 1–3. Runtime < 2 min total.
#[test]
fn criterion_7_cascade_sweeps_and_shutdown_order() {
    let t0 = Instant::now();
    let mut c = Criterion::new(7);

    let net = mesh15_net();
    let f_star = MESH15_F_STAR.to_vec();
    let cfg = SimConfig::default();

    let small = Perturbation::scale(net.link_count(), &[(9, 8.0 / 15.0)]).unwrap();
    let (small_mag, _) = perturbation_magnitude(&net, &small);
    c.check(
        "link-10 weakening has magnitude δ = 0.7",
        (small_mag - 0.7).abs() <= 1e-12,
        format!("δ = {small_mag}"),
    );
    for (eta, want) in [(0.1, 0.0), (0.2, 0.0), (0.3, 3.0), (0.5, 3.0)] {
        let policy = RoutingPolicy::density_capped_exp(&net, f_star.clone(), eta).unwrap();
        let sim = simulate_cascade(&net, &policy, &small, &f_star, &cfg).unwrap();
        c.check(
            &format!("δ = 0.7, η = {eta}: lim λ₈ = {want} ± 1e−3"),
            (sim.limit_lambda_n - want).abs() <= 1e-3,
            format!("lim λ₈ = {:.9}", sim.limit_lambda_n),
        );
    }

    let factors: &[(usize, f64)] = &[
        (3, 2.0 / 9.0),
        (4, 23.0 / 35.0),
        (5, 4.0 / 5.0),
        (6, 2.0 / 7.0),
        (7, 2.0 / 7.0),
        (8, 1.0 / 2.0),
        (9, 3.0 / 5.0),
        (11, 8.0 / 15.0),
    ];
    let big = Perturbation::scale(net.link_count(), factors).unwrap();
    let (big_mag, _) = perturbation_magnitude(&net, &big);
    c.check(
        "eight-link weakening has magnitude δ = 4",
        (big_mag - 4.0).abs() <= 1e-12,
        format!("δ = {big_mag}"),
    );
    let mut order_events: Vec<CascadeEvent> = Vec::new();
    for eta in [0.1, 0.5, 1.0] {
        let policy = RoutingPolicy::density_capped_exp(&net, f_star.clone(), eta).unwrap();
        let sim = simulate_cascade(&net, &policy, &big, &f_star, &cfg).unwrap();
        c.check(
            &format!("δ = 4, η = {eta}: lim λ₈ = 0 ± 1e−3"),
            sim.limit_lambda_n.abs() <= 1e-3,
            format!(
                "lim λ₈ = {:.3e}, {} links shut",
                sim.limit_lambda_n,
                sim.cascade_events.len()
            ),
        );
        if eta == 0.1 {
            order_events = sim.cascade_events.clone();
        }
    }

    let order: Vec<String> =
        order_events.iter().map(|ev| format!("link {}", ev.link_id + 1)).collect();
    let first_ok =
        matches!(order_events.first().map(|ev| ev.link_id), Some(9) | Some(11));
    c.check(
        "δ = 4, η = 0.1: first shutdown is link 10 or link 12",
        first_ok,
        format!(
            "observed shutdown order: {} — the weakening overloads links 4, \
             5, 7, 8, 12 at t = 0 and link 5 (load 1.5 vs new cap 1.15) \
             fills fastest, so the cascade seeds mid-network rather than at \
             links 10/12",
            order.join(" → ")
        ),
    );
    let last_ok = order_events.last().map(|ev| ev.link_id).is_some_and(|l| l <= 2);
    c.check(
        "δ = 4, η = 0.1: last shutdown is among links 1–3",
        last_ok,
        format!(
            "last shutdown: {}",
            order.last().cloned().unwrap_or_else(|| "none".to_string())
        ),
    );

    let elapsed = t0.elapsed().as_secs_f64();
    c.check("runtime < 2 min total", elapsed < 120.0, format!("{elapsed:.2} s"));
    c.finish();
}

/// Criterion 8 — the seed-42 property suites, re-run here through the
/// same shared checks the `properties` target wraps.
#[test]
fn criterion_8_property_suites_green() {
    let mut c = Criterion::new(8);

    let suites: [(&str, fn() -> Result<(), String>); 9] = [
        ("routing simplex (10⁴ samples)", props::check_routing_simplex),
        ("routing monotonicity (10⁴ samples)", props::check_routing_monotonicity),
        ("integrator mass balance", props::check_mass_balance),
        ("equilibrium stationarity", props::check_stationarity),
        ("global attractivity (20 random starts)", props::check_attractivity),
        (
            "local overload bound (100 random single-node systems)",
            props::check_local_overload_bound,
        ),
        ("brute-force min-cut oracle (nets ≤ 12 nodes)", props::check_min_cut_oracle),
        ("margin LP vs grid oracle", props::check_margin_lp_vs_grid),
        ("potential gradient vs finite differences", props::check_beckmann_gradient),
    ];
    for (name, run) in suites {
        let result = run();
        let detail = match &result {
            Ok(()) => "green".to_string(),
            Err(e) => e.clone(),
        };
        c.check(name, result.is_ok(), detail);
    }

    c.finish();
}
