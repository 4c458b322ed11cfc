//! Max-flow / min-cut over link capacities, plus exact-rational variants
//! of the cut and residual-capacity analytics.
//!
//! The solver is shortest-augmenting-path (Edmonds–Karp), generic over the
//! capacity scalar so the same code runs on `f64` and on `BigRational`.
//! Termination is combinatorial (O(V·E) augmentations), so it does not
//! depend on capacity values.

use std::collections::VecDeque;
use std::ops::Sub;

use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};

use crate::error::{Error, Result};
use crate::network::{FlowNetwork, FlowVector};
use crate::topology::Topology;

/// Scalar usable as an arc capacity.
pub trait Capacity: Clone + PartialOrd + Sub<Output = Self> + Zero {}
impl<T: Clone + PartialOrd + Sub<Output = T> + Zero> Capacity for T {}

/// One origin–destination cut: the origin-side node set, the links
/// crossing out of it, and their total capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct CutReport {
    /// Sorted node ids on the origin side (always contains 0, never the
    /// destination).
    pub cut_node_set: Vec<usize>,
    /// Sorted ids of links with tail inside the set and head outside.
    pub crossing_links: Vec<usize>,
    /// Sum of `f_max` over the crossing links.
    pub capacity: f64,
}

/// [`CutReport`] with the capacity kept in exact rational arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactCutReport {
    pub cut_node_set: Vec<usize>,
    pub crossing_links: Vec<usize>,
    pub capacity: BigRational,
}

struct Arc<C> {
    to: usize,
    residual: C,
    paired: usize,
}

/// Max-flow value from node 0 to the destination under the given per-link
/// capacities, together with one minimum cut (the residual-reachable set).
///
/// `min_residual` is the usability threshold for residual arcs; pass zero
/// for exact scalars and a small capacity-scaled epsilon for `f64` so that
/// rounding dust on saturated arcs cannot flip cut membership.
pub fn max_flow_min_cut<C: Capacity>(
    topology: &Topology,
    capacities: &[C],
    min_residual: C,
) -> (C, Vec<usize>, Vec<usize>) {
    assert_eq!(capacities.len(), topology.link_count());
    let n = topology.node_count();
    let (source, sink) = (0, topology.destination());

    let mut arcs: Vec<Arc<C>> = Vec::with_capacity(2 * capacities.len());
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for link in topology.links() {
        let fwd = arcs.len();
        adj[link.tail_node].push(fwd);
        adj[link.head_node].push(fwd + 1);
        arcs.push(Arc { to: link.head_node, residual: capacities[link.link_id].clone(), paired: fwd + 1 });
        arcs.push(Arc { to: link.tail_node, residual: C::zero(), paired: fwd });
    }

    let bfs = |arcs: &[Arc<C>]| -> Vec<Option<usize>> {
        let mut parent_arc: Vec<Option<usize>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[source] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for &ai in &adj[v] {
                let arc = &arcs[ai];
                if !seen[arc.to] && arc.residual > min_residual {
                    seen[arc.to] = true;
                    parent_arc[arc.to] = Some(ai);
                    if arc.to == sink {
                        return parent_arc;
                    }
                    queue.push_back(arc.to);
                }
            }
        }
        parent_arc
    };

    // Shortest-path augmentation needs at most ~V·E/2 rounds.
    let max_rounds = n * topology.link_count() + 16;
    for _ in 0..max_rounds {
        let parent_arc = bfs(&arcs);
        if parent_arc[sink].is_none() {
            break;
        }
        let mut bottleneck: Option<C> = None;
        let mut v = sink;
        while let Some(ai) = parent_arc[v] {
            let r = &arcs[ai].residual;
            if bottleneck.as_ref().is_none_or(|b| r < b) {
                bottleneck = Some(r.clone());
            }
            v = arcs[arcs[ai].paired].to;
        }
        let b = bottleneck.expect("augmenting path has at least one arc");
        let mut v = sink;
        while let Some(ai) = parent_arc[v] {
            arcs[ai].residual = arcs[ai].residual.clone() - b.clone();
            let pa = arcs[ai].paired;
            arcs[pa].residual = arcs[pa].residual.clone() + b.clone();
            v = arcs[pa].to;
        }
    }

    let parent_arc = bfs(&arcs);
    let mut cut_node_set: Vec<usize> =
        (0..n).filter(|&v| v == source || parent_arc[v].is_some()).collect();
    debug_assert!(!cut_node_set.contains(&sink), "augmenting path missed");
    cut_node_set.sort_unstable();
    let in_cut = |v: usize| cut_node_set.binary_search(&v).is_ok();
    let crossing_links: Vec<usize> = topology
        .links()
        .iter()
        .filter(|l| in_cut(l.tail_node) && !in_cut(l.head_node))
        .map(|l| l.link_id)
        .collect();
    // Report the cut's own capacity sum rather than accumulated bottlenecks:
    // identical by duality, but free of incremental rounding for f64.
    let mut value = C::zero();
    for &e in &crossing_links {
        value = value + capacities[e].clone();
    }
    (value, cut_node_set, crossing_links)
}

/// Min-cut capacity of the network (link capacities `f_max`), with one
/// minimizing cut.
pub fn min_cut_capacity(net: &FlowNetwork) -> CutReport {
    let capacities = net.capacities();
    let eps = capacities.iter().fold(0.0f64, |m, &c| m.max(c)) * 1e-12;
    let (capacity, cut_node_set, crossing_links) =
        max_flow_min_cut(&net.topology, &capacities, eps);
    CutReport { cut_node_set, crossing_links, capacity }
}

/// [`min_cut_capacity`] in exact rational arithmetic, lifting each `f64`
/// capacity to the shortest decimal that rounds back to it.
pub fn min_cut_capacity_exact(net: &FlowNetwork) -> ExactCutReport {
    let capacities: Vec<BigRational> = net.capacities().iter().map(|&c| decimal_rational(c)).collect();
    let (capacity, cut_node_set, crossing_links) =
        max_flow_min_cut(&net.topology, &capacities, BigRational::zero());
    ExactCutReport { cut_node_set, crossing_links, capacity }
}

/// Minimum node residual capacity in exact rational arithmetic; returns
/// the value and the lowest-index minimizing node.
pub fn node_residual_capacity_exact(
    net: &FlowNetwork,
    f_star: &FlowVector,
) -> Result<(BigRational, usize)> {
    if f_star.len() != net.link_count() {
        return Err(Error::LengthMismatch { got: f_star.len(), expected: net.link_count() });
    }
    let caps: Vec<BigRational> = net.capacities().iter().map(|&c| decimal_rational(c)).collect();
    let flows: Vec<BigRational> = f_star.iter().map(|&f| decimal_rational(f)).collect();
    for (e, (f, c)) in flows.iter().zip(&caps).enumerate() {
        if f > c || f < &BigRational::zero() {
            return Err(Error::FlowExceedsCapacity {
                link: e,
                flow: f_star[e],
                f_max: net.capacities()[e],
            });
        }
    }
    let mut best: Option<(BigRational, usize)> = None;
    for v in 0..net.topology.destination() {
        let mut residual = BigRational::zero();
        for &e in net.topology.out_links(v) {
            residual = residual + (caps[e].clone() - flows[e].clone());
        }
        if best.as_ref().is_none_or(|(b, _)| &residual < b) {
            best = Some((residual, v));
        }
    }
    Ok(best.expect("validated topology has a non-destination node"))
}

/// Lift an `f64` to the rational with the fewest decimal digits (up to 9)
/// that rounds back to it exactly; falls back to the exact binary value.
pub fn decimal_rational(x: f64) -> BigRational {
    assert!(x.is_finite());
    for k in 0..=9u32 {
        let pow = 10f64.powi(k as i32);
        let scaled = x * pow;
        let r = scaled.round();
        if r.abs() < 9e15 && r / pow == x {
            return BigRational::new((r as i64).into(), (10i64.pow(k)).into());
        }
    }
    BigRational::from_f64(x).expect("finite f64 lifts exactly")
}

/// Reference min cut by exhaustive enumeration of origin-side subsets.
/// Only viable for small graphs; guarded at 20 nodes.
pub fn brute_force_min_cut<C: Capacity>(
    topology: &Topology,
    capacities: &[C],
) -> (C, Vec<usize>) {
    let n = topology.node_count();
    assert!(n <= 20, "exhaustive cut enumeration needs a small graph");
    let interior: Vec<usize> = (1..n - 1).collect();
    let mut best: Option<(C, Vec<usize>)> = None;
    for mask in 0u64..(1u64 << interior.len()) {
        let mut set = vec![0usize];
        for (bit, &v) in interior.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                set.push(v);
            }
        }
        let mut cap = C::zero();
        for link in topology.links() {
            if set.contains(&link.tail_node) && !set.contains(&link.head_node) {
                cap = cap + capacities[link.link_id].clone();
            }
        }
        if best.as_ref().is_none_or(|(b, _)| &cap < b) {
            best = Some((cap, set));
        }
    }
    best.expect("at least the {0} cut exists")
}
