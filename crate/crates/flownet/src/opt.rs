//! Equilibrium selection and pricing: the max-margin LP, delay-minimizing
//! flows under a margin constraint, Wardrop equilibria via the Beckmann
//! potential, and toll synthesis with its equal-path-cost verification.
//!
//! The nonlinear convex solves run away-step Frank–Wolfe over the flow
//! polytope with the in-repo simplex as linear-minimization oracle and
//! exact line search (bisection on the directional derivative). Capacities
//! inside the oracle are shrunk by 1e−6 so delays and their gradients stay
//! finite on the whole feasible set.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::flow_fn::FlowFunction;
use crate::lp::{Constraint, LinearProgram, Relation};
use crate::mincut::min_cut_capacity;
use crate::network::{FlowNetwork, FlowVector};
use crate::topology::Topology;

/// Per-link nonnegative tolls, in delay units.
pub type TollVector = Vec<f64>;

/// Relative capacity shrink used inside the nonlinear solvers.
pub const CAPACITY_SHRINK: f64 = 1e-6;

/// Frank–Wolfe stopping rule: duality gap ≤ `FW_GAP_FRACTION·λ0`.
pub const FW_GAP_FRACTION: f64 = 1e-7;

/// Tighter gap for Wardrop solves: toll verification needs path costs
/// equalized to ~1e−6 relative, which the 1e−7·λ0 gap does not guarantee.
pub const WARDROP_GAP_FRACTION: f64 = 1e-10;

pub const FW_MAX_ITER: usize = 100_000;

/// Result of one optimization solve.
#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub f_opt: FlowVector,
    pub objective: f64,
    pub iterations: usize,
    /// LP solves: |re-evaluated margin − LP optimum|; Frank–Wolfe solves:
    /// the final duality gap.
    pub residual: f64,
}

/// One row of the margin/delay trade-off sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub b: f64,
    pub d_star: f64,
    pub f_opt: FlowVector,
}

/// All origin→destination paths of a DAG, as link-id sequences in
/// depth-first (ascending out-link) order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Vec<usize>>,
}

impl PathSet {
    pub fn enumerate(topology: &Topology) -> PathSet {
        fn dfs(
            topology: &Topology,
            v: usize,
            current: &mut Vec<usize>,
            paths: &mut Vec<Vec<usize>>,
        ) {
            if v == topology.destination() {
                paths.push(current.clone());
                return;
            }
            for &e in topology.out_links(v) {
                current.push(e);
                dfs(topology, topology.link(e).head_node, current, paths);
                current.pop();
            }
        }
        let mut paths = Vec::new();
        dfs(topology, 0, &mut Vec::new(), &mut paths);
        PathSet { paths }
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    /// Sum of a per-link quantity along one path.
    pub fn path_total(&self, path_idx: usize, per_link: &[f64]) -> f64 {
        self.paths[path_idx].iter().map(|&e| per_link[e]).sum()
    }

    /// 0/1 path-link incidence matrix (rows = paths).
    pub fn incidence_matrix(&self, link_count: usize) -> Vec<Vec<f64>> {
        self.paths
            .iter()
            .map(|p| {
                let mut row = vec![0.0; link_count];
                for &e in p {
                    row[e] = 1.0;
                }
                row
            })
            .collect()
    }
}

/// Saturating-exponential parameters (rate, effective capacity) of a flow
/// function, unwrapping scale factors; the delay model is defined only for
/// this family.
fn exp_params(ff: &FlowFunction) -> Result<(f64, f64)> {
    match ff {
        FlowFunction::ExpSaturating { f_max, a } => Ok((*a, *f_max)),
        FlowFunction::Scaled { base, factor } => {
            let (a, f_max) = exp_params(base)?;
            Ok((a, factor * f_max))
        }
        FlowFunction::ConcaveQuadratic { .. } => Err(Error::UnsupportedVariant {
            reason: "delay functions require saturating-exponential links".into(),
        }),
    }
}

/// Link delay T(f) = μ^{−1}(f)/f, extended continuously to T(0) = 1/μ′(0)
/// and to +∞ at or above capacity.
pub fn eval_delay(ff: &FlowFunction, f: f64) -> Result<f64> {
    let (a, f_max) = exp_params(ff)?;
    assert!(f >= 0.0, "flows are nonnegative");
    if f >= f_max {
        Ok(f64::INFINITY)
    } else if f == 0.0 {
        Ok(1.0 / (a * f_max))
    } else {
        Ok(-(-f / f_max).ln_1p() / (a * f))
    }
}

/// Average network delay D(f) = Σ_e f_e·T_e(f_e)/λ0, computed through the
/// identity f·T(f) = μ^{−1}(f); +∞ as soon as any link is at capacity.
pub fn average_delay(net: &FlowNetwork, f: &FlowVector) -> Result<f64> {
    if net.inflow <= 0.0 {
        return Err(Error::ZeroInflow);
    }
    if f.len() != net.link_count() {
        return Err(Error::LengthMismatch { got: f.len(), expected: net.link_count() });
    }
    let mut total = 0.0;
    for (ff, &fe) in net.flow_fns.iter().zip(f) {
        let (a, f_max) = exp_params(ff)?;
        if fe >= f_max {
            return Ok(f64::INFINITY);
        }
        total += -(-fe / f_max).ln_1p() / a;
    }
    Ok(total / net.inflow)
}

/// Beckmann potential Σ_e ∫₀^{f_e} T_e(s) ds, by Simpson quadrature on the
/// parameterized integral f·∫₀^1 T(f·u) du (2000 panels per link).
pub fn beckmann_potential(net: &FlowNetwork, f: &FlowVector) -> Result<f64> {
    if f.len() != net.link_count() {
        return Err(Error::LengthMismatch { got: f.len(), expected: net.link_count() });
    }
    const PANELS: usize = 2000;
    let mut total = 0.0;
    for (ff, &fe) in net.flow_fns.iter().zip(f) {
        let (_, f_max) = exp_params(ff)?;
        if fe >= f_max {
            return Ok(f64::INFINITY);
        }
        if fe == 0.0 {
            continue;
        }
        let h = 1.0 / PANELS as f64;
        let mut acc = eval_delay(ff, 0.0)? + eval_delay(ff, fe)?;
        for i in 1..PANELS {
            let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += weight * eval_delay(ff, fe * i as f64 * h)?;
        }
        total += fe * acc * h / 3.0;
    }
    Ok(total)
}

/// Conservation + capacity rows of the flow polytope over `m` flow
/// variables; `margin` additionally enforces the per-node residual bound
/// Σ_{E_v⁺}(f_max − f_e) ≥ margin (with the *true* capacities on the
/// residual side, independent of the box caps).
fn polytope_rows(net: &FlowNetwork, caps: &[f64], margin: Option<f64>) -> Vec<Constraint> {
    let m = net.link_count();
    let topology = &net.topology;
    let mut rows = Vec::new();
    for v in 0..topology.destination() {
        let mut coeffs = vec![0.0; m];
        for &e in topology.out_links(v) {
            coeffs[e] = 1.0;
        }
        let mut rhs = 0.0;
        if v == 0 {
            rhs = net.inflow;
        } else {
            for &e in topology.in_links(v) {
                coeffs[e] = -1.0;
            }
        }
        rows.push(Constraint { coeffs, relation: Relation::Eq, rhs });
    }
    for (e, &cap) in caps.iter().enumerate() {
        let mut coeffs = vec![0.0; m];
        coeffs[e] = 1.0;
        rows.push(Constraint { coeffs, relation: Relation::Le, rhs: cap });
    }
    if let Some(b) = margin {
        let true_caps = net.capacities();
        for v in 0..topology.destination() {
            let mut coeffs = vec![0.0; m];
            let mut cap_sum = 0.0;
            for &e in topology.out_links(v) {
                coeffs[e] = 1.0;
                cap_sum += true_caps[e];
            }
            rows.push(Constraint { coeffs, relation: Relation::Le, rhs: cap_sum - b });
        }
    }
    rows
}

/// Max-margin LP over `m + 1` variables (flows then the margin `t`).
fn margin_lp(net: &FlowNetwork, caps: &[f64]) -> LinearProgram {
    let m = net.link_count();
    let topology = &net.topology;
    let true_caps = net.capacities();
    let mut constraints = Vec::new();
    for v in 0..topology.destination() {
        let mut coeffs = vec![0.0; m + 1];
        for &e in topology.out_links(v) {
            coeffs[e] = 1.0;
        }
        let mut rhs = 0.0;
        if v == 0 {
            rhs = net.inflow;
        } else {
            for &e in topology.in_links(v) {
                coeffs[e] = -1.0;
            }
        }
        constraints.push(Constraint { coeffs, relation: Relation::Eq, rhs });
    }
    for (e, &cap) in caps.iter().enumerate() {
        let mut coeffs = vec![0.0; m + 1];
        coeffs[e] = 1.0;
        constraints.push(Constraint { coeffs, relation: Relation::Le, rhs: cap });
    }
    for v in 0..topology.destination() {
        let mut coeffs = vec![0.0; m + 1];
        let mut cap_sum = 0.0;
        for &e in topology.out_links(v) {
            coeffs[e] = 1.0;
            cap_sum += true_caps[e];
        }
        coeffs[m] = 1.0;
        constraints.push(Constraint { coeffs, relation: Relation::Le, rhs: cap_sum });
    }
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    LinearProgram { num_vars: m + 1, objective, constraints }
}

/// Maximize the minimum node residual capacity over the (closed) flow
/// polytope; returns the optimal margin and one maximizer.
pub fn maximize_resilience(net: &FlowNetwork) -> Result<OptResult> {
    if net.inflow >= min_cut_capacity(net).capacity {
        return Err(Error::Infeasible);
    }
    let sol = margin_lp(net, &net.capacities()).solve()?;
    let f_opt: FlowVector = sol.x[..net.link_count()].to_vec();
    let (margin, _) = net.node_residual_capacity(&f_opt)?;
    Ok(OptResult {
        residual: (margin - sol.objective).abs(),
        f_opt,
        objective: sol.objective,
        iterations: sol.iterations,
    })
}

/// Optimal margin over the shrunk-capacity polytope — the attainable
/// ceiling for the constrained delay solve.
fn max_margin_capped(net: &FlowNetwork, caps: &[f64]) -> Result<f64> {
    Ok(margin_lp(net, caps).solve()?.objective)
}

fn shrunk_caps(net: &FlowNetwork) -> Vec<f64> {
    net.capacities().iter().map(|c| c * (1.0 - CAPACITY_SHRINK)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct FwOutcome {
    x: Vec<f64>,
    gap: f64,
    iterations: usize,
}

/// Away-step Frank–Wolfe with exact line search over a polytope given by
/// LP rows. Linear convergence needs the away steps: plain Frank–Wolfe
/// zig-zags near faces and stalls above the gap tolerances used here.
fn away_step_frank_wolfe(
    rows: &[Constraint],
    m: usize,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    gap_tol: f64,
    max_iter: usize,
) -> Result<FwOutcome> {
    let lmo = |g: &[f64]| -> Result<Vec<f64>> {
        let objective: Vec<f64> = g.iter().map(|v| -v).collect();
        let lp = LinearProgram { num_vars: m, objective, constraints: rows.to_vec() };
        Ok(lp.solve()?.x)
    };
    let key = |x: &[f64]| -> Vec<i64> { x.iter().map(|v| (v * 1e10).round() as i64).collect() };

    let x0 = lmo(&vec![0.0; m])?;
    let mut vertices: Vec<Vec<f64>> = vec![x0.clone()];
    let mut weights: Vec<f64> = vec![1.0];
    let mut index: HashMap<Vec<i64>, usize> = HashMap::from([(key(&x0), 0)]);
    let mut x = x0;
    let mut gap = f64::INFINITY;

    for it in 0..max_iter {
        let g = grad(&x);
        let s = lmo(&g)?;
        gap = dot(&g, &x) - dot(&g, &s);
        if gap <= gap_tol {
            return Ok(FwOutcome { x, gap, iterations: it });
        }

        let mut away: Option<(usize, f64)> = None;
        if vertices.len() > 1 {
            for (i, v) in vertices.iter().enumerate() {
                let adv = dot(&g, v) - dot(&g, &x);
                if away.as_ref().is_none_or(|&(_, best)| adv > best) {
                    away = Some((i, adv));
                }
            }
        }

        let take_fw = away.as_ref().is_none_or(|&(_, adv)| gap >= adv);
        if take_fw {
            let d: Vec<f64> = s.iter().zip(&x).map(|(si, xi)| si - xi).collect();
            let gamma = exact_line_search(grad, &x, &d, 1.0);
            if gamma >= 1.0 {
                vertices = vec![s.clone()];
                weights = vec![1.0];
                index = HashMap::from([(key(&s), 0)]);
            } else {
                for w in &mut weights {
                    *w *= 1.0 - gamma;
                }
                let k = key(&s);
                if let Some(&i) = index.get(&k) {
                    weights[i] += gamma;
                } else {
                    index.insert(k, vertices.len());
                    vertices.push(s.clone());
                    weights.push(gamma);
                }
            }
        } else {
            let (ai, _) = away.unwrap();
            let alpha = weights[ai];
            if alpha >= 1.0 - 1e-15 {
                // Degenerate: x *is* the away vertex; no away step exists.
                return Ok(FwOutcome { x, gap, iterations: it });
            }
            let gamma_max = alpha / (1.0 - alpha);
            let d: Vec<f64> = x.iter().zip(&vertices[ai]).map(|(xi, vi)| xi - vi).collect();
            let gamma = exact_line_search(grad, &x, &d, gamma_max);
            for w in &mut weights {
                *w *= 1.0 + gamma;
            }
            weights[ai] -= gamma;
        }

        // Prune, renormalize, and rebuild x from the convex combination so
        // weight drift cannot accumulate.
        let mut i = 0;
        while i < vertices.len() {
            if weights[i] < 1e-14 {
                vertices.swap_remove(i);
                weights.swap_remove(i);
            } else {
                i += 1;
            }
        }
        index.clear();
        for (i, v) in vertices.iter().enumerate() {
            index.insert(key(v), i);
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        x = vec![0.0; m];
        for (v, &w) in vertices.iter().zip(&weights) {
            for (xe, ve) in x.iter_mut().zip(v) {
                *xe += w * ve;
            }
        }
    }
    Ok(FwOutcome { x, gap, iterations: max_iter })
}

/// Largest step in [0, γ_max] along `d` before the directional derivative
/// turns positive; the objective is convex, so the derivative is monotone.
fn exact_line_search(
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    d: &[f64],
    gamma_max: f64,
) -> f64 {
    let slope = |gamma: f64| -> f64 {
        let point: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + gamma * di).collect();
        dot(&grad(point.as_slice()), d)
    };
    if slope(gamma_max) <= 0.0 {
        return gamma_max;
    }
    let (mut lo, mut hi) = (0.0f64, gamma_max);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimize the average delay over the flow polytope intersected with
/// {min node residual ≥ b}. The requested margin is silently capped at
/// the shrunk polytope's own optimum (within the 1e−6 capacity shrink of
/// the requested bound); margins above the true optimum are rejected.
pub fn min_delay_with_resilience(net: &FlowNetwork, b: f64) -> Result<OptResult> {
    assert!(b >= 0.0, "margin must be nonnegative");
    let r_star = maximize_resilience(net)?.objective;
    if b > r_star + 1e-9 {
        return Err(Error::Infeasible);
    }
    let caps = shrunk_caps(net);
    let b_eff = b.min(max_margin_capped(net, &caps)?);
    let rows = polytope_rows(net, &caps, Some(b_eff));

    let lambda0 = net.inflow;
    let params: Vec<(f64, f64)> =
        net.flow_fns.iter().map(exp_params).collect::<Result<_>>()?;
    let grad = move |f: &[f64]| -> Vec<f64> {
        f.iter()
            .zip(&params)
            .map(|(&fe, &(a, f_max))| 1.0 / (lambda0 * a * (f_max - fe)))
            .collect()
    };
    let out = away_step_frank_wolfe(
        &rows,
        net.link_count(),
        &grad,
        FW_GAP_FRACTION * lambda0,
        FW_MAX_ITER,
    )?;
    Ok(OptResult {
        objective: average_delay(net, &out.x)?,
        f_opt: out.x,
        iterations: out.iterations,
        residual: out.gap,
    })
}

/// Delay/margin trade-off: solve [`min_delay_with_resilience`] on an even
/// grid of `points ≥ 2` margins spanning [0, R*].
pub fn resilience_delay_sweep(net: &FlowNetwork, points: usize) -> Result<Vec<SweepPoint>> {
    assert!(points >= 2);
    let r_star = maximize_resilience(net)?.objective;
    let mut table = Vec::with_capacity(points);
    for i in 0..points {
        let b = r_star * i as f64 / (points - 1) as f64;
        let sol = min_delay_with_resilience(net, b)?;
        table.push(SweepPoint { b, d_star: sol.objective, f_opt: sol.f_opt });
    }
    Ok(table)
}

/// The unique flow at which every used path has minimal delay, found by
/// minimizing the Beckmann potential (gradient = per-link delays).
pub fn wardrop_equilibrium(net: &FlowNetwork) -> Result<FlowVector> {
    let params: Vec<(f64, f64)> =
        net.flow_fns.iter().map(exp_params).collect::<Result<_>>()?;
    let caps = shrunk_caps(net);
    let rows = polytope_rows(net, &caps, None);
    let grad = move |f: &[f64]| -> Vec<f64> {
        f.iter()
            .zip(&params)
            .map(|(&fe, &(a, f_max))| {
                if fe <= 0.0 {
                    1.0 / (a * f_max)
                } else {
                    -(-fe / f_max).ln_1p() / (a * fe)
                }
            })
            .collect()
    };
    let out = away_step_frank_wolfe(
        &rows,
        net.link_count(),
        &grad,
        WARDROP_GAP_FRACTION * net.inflow,
        FW_MAX_ITER,
    )?;

    // Equilibrium certificate: every used path's delay ties the minimum.
    let delays: Vec<f64> = net
        .flow_fns
        .iter()
        .zip(&out.x)
        .map(|(ff, &fe)| eval_delay(ff, fe))
        .collect::<Result<_>>()?;
    let paths = PathSet::enumerate(&net.topology);
    let costs: Vec<f64> =
        (0..paths.path_count()).map(|p| paths.path_total(p, &delays)).collect();
    let min_cost = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    for (p, &cost) in costs.iter().enumerate() {
        let used = paths.paths[p].iter().all(|&e| out.x[e] > 1e-9);
        assert!(
            !used || cost - min_cost <= 1e-5 * min_cost.max(1e-300),
            "equal-delay certificate failed on path {p}: {cost} vs {min_cost}"
        );
    }
    Ok(out.x)
}

/// Toll vector making `f_desired` the unique toll-induced equilibrium:
/// Υ = c·T(f^W) − T(f_desired) with the smallest factor c keeping every
/// entry nonnegative (the max delay ratio).
pub fn synthesize_tolls(net: &FlowNetwork, f_desired: &FlowVector) -> Result<TollVector> {
    let f_w = wardrop_equilibrium(net)?;
    let ratio = toll_factor_floor(net, f_desired, &f_w)?;
    tolls_with_factor(net, f_desired, &f_w, ratio)
}

/// One-parameter toll family: any factor `c` at or above the max delay
/// ratio yields a valid (nonnegative, verifying) toll vector.
pub fn synthesize_tolls_with_factor(
    net: &FlowNetwork,
    f_desired: &FlowVector,
    c: f64,
) -> Result<TollVector> {
    let f_w = wardrop_equilibrium(net)?;
    let floor = toll_factor_floor(net, f_desired, &f_w)?;
    assert!(
        c >= floor - 1e-12,
        "factor {c} below the equalizing ratio {floor} would need negative tolls"
    );
    tolls_with_factor(net, f_desired, &f_w, c)
}

fn toll_factor_floor(
    net: &FlowNetwork,
    f_desired: &FlowVector,
    f_w: &FlowVector,
) -> Result<f64> {
    if f_desired.len() != net.link_count() {
        return Err(Error::LengthMismatch {
            got: f_desired.len(),
            expected: net.link_count(),
        });
    }
    let mut ratio = 0.0f64;
    for (e, ff) in net.flow_fns.iter().enumerate() {
        if f_w[e] <= 0.0 {
            return Err(Error::WardropHasZeroFlowLink { link: e });
        }
        if f_desired[e] <= 0.0 {
            return Err(Error::DesiredFlowHasZeroLink { link: e });
        }
        let (_, f_max) = exp_params(ff)?;
        if f_desired[e] >= f_max {
            return Err(Error::FlowExceedsCapacity {
                link: e,
                flow: f_desired[e],
                f_max,
            });
        }
        ratio = ratio.max(eval_delay(ff, f_desired[e])? / eval_delay(ff, f_w[e])?);
    }
    Ok(ratio)
}

fn tolls_with_factor(
    net: &FlowNetwork,
    f_desired: &FlowVector,
    f_w: &FlowVector,
    c: f64,
) -> Result<TollVector> {
    let tolls = net
        .flow_fns
        .iter()
        .enumerate()
        .map(|(e, ff)| {
            let toll = c * eval_delay(ff, f_w[e])? - eval_delay(ff, f_desired[e])?;
            // The max-ratio construction keeps tolls ≥ 0 up to rounding.
            Ok(toll.max(0.0))
        })
        .collect::<Result<TollVector>>()?;
    Ok(tolls)
}

/// Max relative spread of tolled path costs T(f_desired) + Υ around their
/// mean — the equal-cost check that certifies the tolled equilibrium.
pub fn verify_equal_path_costs(
    net: &FlowNetwork,
    f_desired: &FlowVector,
    tolls: &TollVector,
) -> Result<f64> {
    let per_link: Vec<f64> = net
        .flow_fns
        .iter()
        .zip(f_desired.iter().zip(tolls))
        .map(|(ff, (&fe, &toll))| Ok(eval_delay(ff, fe)? + toll))
        .collect::<Result<_>>()?;
    let paths = PathSet::enumerate(&net.topology);
    let costs: Vec<f64> =
        (0..paths.path_count()).map(|p| paths.path_total(p, &per_link)).collect();
    let mean = costs.iter().sum::<f64>() / costs.len() as f64;
    Ok(costs.iter().map(|c| (c - mean).abs() / mean).fold(0.0, f64::max))
}
