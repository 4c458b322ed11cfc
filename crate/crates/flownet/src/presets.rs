//! Small reference networks shared by the test, acceptance, and bench
//! suites (and mirrored by the scenario files shipped in `scenarios/`).
//!
//! Link ids follow construction order; densities and flows are indexed by
//! link id everywhere.

use crate::flow_fn::FlowFunction;
use crate::network::FlowNetwork;
use crate::topology::topology_from_pairs;

/// Two-level net: a direct origin→destination link in parallel with a
/// two-hop route whose second leg is a parallel pair.
///
/// Links: 0: 0→2, 1: 0→1, 2: 1→2, 3: 1→2. Saturating-exponential flows,
/// a = 1, capacities (2, 2, 0.75, 0.75), inflow 2.
pub fn two_level_net() -> FlowNetwork {
    let topology = topology_from_pairs(3, &[(0, 2), (0, 1), (1, 2), (1, 2)]).unwrap();
    let flow_fns = [2.0, 2.0, 0.75, 0.75]
        .iter()
        .map(|&f_max| FlowFunction::exp_saturating(f_max, 1.0).unwrap())
        .collect();
    FlowNetwork::new(topology, flow_fns, 2.0).unwrap()
}

/// Equilibrium flow of [`two_level_net`] under the constant split
/// (0.75, 0.25) at the origin and an even split at node 1.
pub const TWO_LEVEL_F_STAR: [f64; 4] = [1.5, 0.5, 0.25, 0.25];

/// [`two_level_net`] topology with strongly skewed congestion rates:
/// the direct link is slow to build delay (a = 0.01), the two-hop route
/// fast (a = 10). Same capacities and inflow. The delay minimizer and the
/// resilience maximizer land on opposite corners of the polytope.
pub fn two_level_delay_skewed_net() -> FlowNetwork {
    let topology = topology_from_pairs(3, &[(0, 2), (0, 1), (1, 2), (1, 2)]).unwrap();
    let a = [0.01, 10.0, 10.0, 10.0];
    let f_max = [2.0, 2.0, 0.75, 0.75];
    let flow_fns = a
        .iter()
        .zip(&f_max)
        .map(|(&a, &f_max)| FlowFunction::exp_saturating(f_max, a).unwrap())
        .collect();
    FlowNetwork::new(topology, flow_fns, 2.0).unwrap()
}

/// [`two_level_net`] topology with capacities and congestion rates graded
/// by `eps` ∈ (0, 1): capacities (1/ε+ε, 1/ε+ε, 1/(2ε)+ε/2, 1/(2ε)+ε/2),
/// inflow 1/ε. The rates are chosen so the equal-delay flow splits as
/// (1, 1/ε−1, 1/(2ε)−1/2, 1/(2ε)−1/2).
pub fn two_level_graded_net(eps: f64) -> FlowNetwork {
    assert!(eps > 0.0 && eps < 1.0);
    let topology = topology_from_pairs(3, &[(0, 2), (0, 1), (1, 2), (1, 2)]).unwrap();
    let a_rest = (3.0 * eps / (1.0 - eps)) * ((eps + eps * eps) / (1.0 + eps * eps)).ln()
        / ((1.0 + eps * eps - eps) / (1.0 + eps * eps)).ln();
    let a = [1.0, a_rest, a_rest, a_rest];
    let big = 1.0 / eps + eps;
    let small = 0.5 / eps + 0.5 * eps;
    let f_max = [big, big, small, small];
    let flow_fns = a
        .iter()
        .zip(&f_max)
        .map(|(&a, &f_max)| FlowFunction::exp_saturating(f_max, a).unwrap())
        .collect();
    FlowNetwork::new(topology, flow_fns, 1.0 / eps).unwrap()
}

/// Two disjoint two-hop routes: 0→1→3 (links 0, 2) and 0→2→3 (links 1, 3),
/// capacities (1/ε, 1, 1/ε, 1), inflow 1. The unit-capacity second leg
/// sits behind its own node, so the min node residual can be made
/// arbitrarily small relative to the min cut.
pub fn two_route_net(eps: f64) -> FlowNetwork {
    assert!(eps > 0.0 && eps < 1.0);
    let topology = topology_from_pairs(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
    let f_max = [1.0 / eps, 1.0, 1.0 / eps, 1.0];
    let flow_fns =
        f_max.iter().map(|&f_max| FlowFunction::exp_saturating(f_max, 1.0).unwrap()).collect();
    FlowNetwork::new(topology, flow_fns, 1.0).unwrap()
}

/// Flow used with [`two_route_net`]: (ε, 1−ε, ε, 1−ε).
pub fn two_route_f_star(eps: f64) -> Vec<f64> {
    vec![eps, 1.0 - eps, eps, 1.0 - eps]
}

/// Parallel links from origin to destination, saturating-exponential with
/// a = 1.
pub fn parallel_net(f_max: &[f64], inflow: f64) -> FlowNetwork {
    let pairs: Vec<(usize, usize)> = f_max.iter().map(|_| (0, 1)).collect();
    let topology = topology_from_pairs(2, &pairs).unwrap();
    let flow_fns =
        f_max.iter().map(|&f_max| FlowFunction::exp_saturating(f_max, 1.0).unwrap()).collect();
    FlowNetwork::new(topology, flow_fns, inflow).unwrap()
}

/// 9-node, 15-link mesh with concave-quadratic flow functions (density cap
/// 3 on every link), inflow 3. The workhorse for cascade experiments.
///
/// Links by id: 0: 0→1, 1: 0→2, 2: 0→3, 3: 1→4, 4: 2→4, 5: 2→5, 6: 3→5,
/// 7: 3→7, 8: 1→6, 9: 4→6, 10: 5→7, 11: 4→8, 12: 5→8, 13: 6→8, 14: 7→8.
pub fn mesh15_net() -> FlowNetwork {
    let pairs = [
        (0, 1),
        (0, 2),
        (0, 3),
        (1, 4),
        (2, 4),
        (2, 5),
        (3, 5),
        (3, 7),
        (1, 6),
        (4, 6),
        (5, 7),
        (4, 8),
        (5, 8),
        (6, 8),
        (7, 8),
    ];
    let f_max = [2.5, 2.5, 2.5, 0.9, 1.75, 1.0, 0.7, 0.7, 0.4, 1.5, 1.0, 1.5, 1.0, 2.0, 1.6];
    let topology = topology_from_pairs(9, &pairs).unwrap();
    let flow_fns = f_max
        .iter()
        .map(|&f_max| FlowFunction::concave_quadratic(f_max, 3.0).unwrap())
        .collect();
    FlowNetwork::new(topology, flow_fns, 3.0).unwrap()
}

/// Equilibrium flow used with [`mesh15_net`]; conserves the inflow at
/// every node and leaves node 2 with the least residual capacity (0.75).
pub const MESH15_F_STAR: [f64; 15] =
    [0.5, 2.0, 0.5, 0.3, 1.5, 0.5, 0.25, 0.25, 0.2, 0.9, 0.45, 0.9, 0.3, 1.1, 0.7];
