//! Distributed routing policies: each non-destination node maps the
//! densities of its own outgoing links to a probability split over them.
//!
//! All per-link parameter vectors are indexed by link id. Exponential
//! variants evaluate their softmax in shifted form (max exponent
//! subtracted) so that cascade-scale densities cannot overflow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::network::{FlowNetwork, FlowVector};
use crate::topology::Topology;

/// A routing policy for every non-destination node of one network.
#[derive(Debug, Clone, PartialEq)]
pub enum RoutingPolicy {
    /// Fixed split, independent of the observed densities.
    ConstantFraction {
        /// Per-link probability; entries of each node's out-links sum to 1.
        fractions: Vec<f64>,
    },
    /// Share of link `e` proportional to `f*_e · exp(−η(ρ_e − ρ*_e))`.
    LocallyResponsiveExp { f_star: FlowVector, rho_star: Vec<f64>, eta: f64 },
    /// Share of link `e` proportional to `w_e · exp(−b_e ρ_e)`; arbitrary
    /// signs on `b` make this family generally *not* locally responsive.
    CustomLogit { weights: Vec<f64>, rates: Vec<f64> },
    /// [`RoutingPolicy::LocallyResponsiveExp`] multiplied by the indicator
    /// `ρ_e < rho_max_e`: saturated links receive exactly zero.
    DensityCappedExp {
        f_star: FlowVector,
        rho_star: Vec<f64>,
        eta: f64,
        rho_max: Vec<f64>,
    },
}

/// Outcome of the local-responsiveness test at one node.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponsivenessReport {
    /// Smallest finite-difference estimate of an off-diagonal partial
    /// ∂G_j/∂ρ_e (j ≠ e) over the sampled points.
    pub min_offdiag_partial: f64,
    /// Off-diagonal partials all ≥ −1e−8.
    pub monotone_in_others: bool,
    /// Per blown-up subset, the excluded links' total share vanishes
    /// monotonically below 1e−6.
    pub saturated_share_vanishes: bool,
    /// Largest excluded-set share remaining at the most extreme probe.
    pub worst_excluded_share: f64,
}

impl ResponsivenessReport {
    pub fn is_locally_responsive(&self) -> bool {
        self.monotone_in_others && self.saturated_share_vanishes
    }
}

impl RoutingPolicy {
    /// Exponentially density-responsive policy with ρ* derived from f*
    /// through the network's flow functions.
    pub fn locally_responsive_exp(
        net: &FlowNetwork,
        f_star: FlowVector,
        eta: f64,
    ) -> Result<Self> {
        let rho_star = densities_for(net, &f_star)?;
        let policy = RoutingPolicy::LocallyResponsiveExp { f_star, rho_star, eta };
        policy.validate(&net.topology)?;
        Ok(policy)
    }

    /// Density-capped variant of [`Self::locally_responsive_exp`]; every
    /// link must carry a density cap.
    pub fn density_capped_exp(net: &FlowNetwork, f_star: FlowVector, eta: f64) -> Result<Self> {
        let rho_star = densities_for(net, &f_star)?;
        let rho_max = net
            .flow_fns
            .iter()
            .enumerate()
            .map(|(e, ff)| ff.rho_max().ok_or(Error::MissingDensityCap { link: e }))
            .collect::<Result<Vec<f64>>>()?;
        let policy = RoutingPolicy::DensityCappedExp { f_star, rho_star, eta, rho_max };
        policy.validate(&net.topology)?;
        Ok(policy)
    }

    /// Structural validation against a topology: vector lengths, weight
    /// signs, per-node normalization.
    pub fn validate(&self, topology: &Topology) -> Result<()> {
        let m = topology.link_count();
        let check_len = |v: &[f64]| -> Result<()> {
            if v.len() != m {
                return Err(Error::LengthMismatch { got: v.len(), expected: m });
            }
            if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::BadPolicy { reason: format!("non-finite parameter {bad}") });
            }
            Ok(())
        };
        let check_weights = |w: &[f64], label: &str| -> Result<()> {
            check_len(w)?;
            if w.iter().any(|&x| x < 0.0) {
                return Err(Error::BadPolicy { reason: format!("negative {label}") });
            }
            for v in 0..topology.destination() {
                if !topology.out_links(v).iter().any(|&e| w[e] > 0.0) {
                    return Err(Error::BadPolicy {
                        reason: format!("node {v} has no positive {label} on its out-links"),
                    });
                }
            }
            Ok(())
        };
        match self {
            RoutingPolicy::ConstantFraction { fractions } => {
                check_weights(fractions, "fraction")?;
                for v in 0..topology.destination() {
                    let sum: f64 = topology.out_links(v).iter().map(|&e| fractions[e]).sum();
                    if (sum - 1.0).abs() > 1e-9 {
                        return Err(Error::BadPolicy {
                            reason: format!("fractions at node {v} sum to {sum}, expected 1"),
                        });
                    }
                }
                Ok(())
            }
            RoutingPolicy::LocallyResponsiveExp { f_star, rho_star, eta } => {
                check_weights(f_star, "equilibrium flow")?;
                check_len(rho_star)?;
                if !(*eta > 0.0) {
                    return Err(Error::BadPolicy { reason: format!("eta must be > 0, got {eta}") });
                }
                Ok(())
            }
            RoutingPolicy::CustomLogit { weights, rates } => {
                check_weights(weights, "weight")?;
                check_len(rates)
            }
            RoutingPolicy::DensityCappedExp { f_star, rho_star, eta, rho_max } => {
                check_weights(f_star, "equilibrium flow")?;
                check_len(rho_star)?;
                check_len(rho_max)?;
                if !(*eta > 0.0) {
                    return Err(Error::BadPolicy { reason: format!("eta must be > 0, got {eta}") });
                }
                if rho_max.iter().any(|&r| r <= 0.0) {
                    return Err(Error::BadPolicy { reason: "rho_max must be > 0".into() });
                }
                Ok(())
            }
        }
    }

    /// Probability split at node `v` given the densities of its out-links
    /// (`rho_local[i]` belongs to `topology.out_links(v)[i]`).
    pub fn split(&self, topology: &Topology, v: usize, rho_local: &[f64]) -> Result<Vec<f64>> {
        let out = topology.out_links(v);
        assert!(v < topology.destination(), "destination has no split");
        assert_eq!(rho_local.len(), out.len());
        match self {
            RoutingPolicy::ConstantFraction { fractions } => {
                Ok(out.iter().map(|&e| fractions[e]).collect())
            }
            RoutingPolicy::LocallyResponsiveExp { f_star, rho_star, eta } => {
                let exponents: Vec<f64> = out
                    .iter()
                    .zip(rho_local)
                    .map(|(&e, &rho)| -eta * (rho - rho_star[e]))
                    .collect();
                let weights: Vec<f64> = out.iter().map(|&e| f_star[e]).collect();
                Ok(shifted_softmax(&weights, &exponents))
            }
            RoutingPolicy::CustomLogit { weights, rates } => {
                let exponents: Vec<f64> =
                    out.iter().zip(rho_local).map(|(&e, &rho)| -rates[e] * rho).collect();
                let w: Vec<f64> = out.iter().map(|&e| weights[e]).collect();
                Ok(shifted_softmax(&w, &exponents))
            }
            RoutingPolicy::DensityCappedExp { f_star, rho_star, eta, rho_max } => {
                let usable: Vec<bool> =
                    out.iter().zip(rho_local).map(|(&e, &rho)| rho < rho_max[e]).collect();
                if usable.iter().all(|u| !u) {
                    return Err(Error::AllOutgoingSaturated { node: v });
                }
                let exponents: Vec<f64> = out
                    .iter()
                    .zip(rho_local)
                    .map(|(&e, &rho)| -eta * (rho - rho_star[e]))
                    .collect();
                let weights: Vec<f64> = out
                    .iter()
                    .zip(&usable)
                    .map(|(&e, &u)| if u { f_star[e] } else { 0.0 })
                    .collect();
                Ok(shifted_softmax(&weights, &exponents))
            }
        }
    }
}

/// Softmax of `w_i · exp(x_i)` with the max exponent factored out; links
/// with zero weight get an exact 0 share regardless of their exponent.
fn shifted_softmax(weights: &[f64], exponents: &[f64]) -> Vec<f64> {
    let shift = weights
        .iter()
        .zip(exponents)
        .filter(|(&w, _)| w > 0.0)
        .map(|(_, &x)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    let terms: Vec<f64> = weights
        .iter()
        .zip(exponents)
        .map(|(&w, &x)| {
            if w > 0.0 {
                // −∞ − −∞ from overflowed equal exponents counts as a tie.
                let d = x - shift;
                w * if d.is_nan() { 1.0 } else { d.exp() }
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = terms.iter().sum();
    terms.iter().map(|t| t / total).collect()
}

/// Densities realizing a flow vector: ρ_e = μ_e^{−1}(f_e).
pub fn densities_for(net: &FlowNetwork, f: &FlowVector) -> Result<Vec<f64>> {
    if f.len() != net.link_count() {
        return Err(Error::LengthMismatch { got: f.len(), expected: net.link_count() });
    }
    f.iter().zip(&net.flow_fns).map(|(&fe, ff)| ff.invert(fe)).collect()
}

/// Finite-difference test of the two locally-responsive properties at one
/// node: (a) each link's share is nondecreasing in every *other* link's
/// density; (b) when the densities of any proper subset of out-links blow
/// up, that subset's total share vanishes.
///
/// Sampling is seeded and log-uniform over [1e−2, 1e2]; the blow-up is
/// probed at densities 10³, 10⁴, 10⁶ with the rest held at the unit
/// density, exhaustively over subsets when the node has ≤ 4 out-links and
/// over 20 sampled subsets otherwise.
pub fn check_locally_responsive(
    policy: &RoutingPolicy,
    topology: &Topology,
    v: usize,
    samples: usize,
    seed: u64,
) -> Result<ResponsivenessReport> {
    let out = topology.out_links(v);
    let k = out.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut min_partial = f64::INFINITY;
    for _ in 0..samples {
        let rho: Vec<f64> = (0..k)
            .map(|_| 10f64.powf(rng.gen_range(-2.0..2.0)))
            .collect();
        for e in 0..k {
            let h = 1e-5 * rho[e].max(1.0);
            let mut hi = rho.clone();
            hi[e] += h;
            let mut lo = rho.clone();
            lo[e] = (lo[e] - h).max(0.0);
            let span = hi[e] - lo[e];
            let g_hi = policy.split(topology, v, &hi)?;
            let g_lo = policy.split(topology, v, &lo)?;
            for j in 0..k {
                if j != e {
                    min_partial = min_partial.min((g_hi[j] - g_lo[j]) / span);
                }
            }
        }
    }
    if k < 2 {
        min_partial = 0.0; // no off-diagonal pairs exist
    }
    let monotone_in_others = min_partial >= -1e-8;

    let subsets: Vec<u32> = if k <= 4 {
        (1..(1u32 << k) - 1).collect()
    } else {
        (0..20).map(|_| rng.gen_range(1..(1u32 << k) - 1)).collect()
    };
    let mut saturated_share_vanishes = true;
    let mut worst_excluded_share = 0.0f64;
    for mask in subsets {
        // Bit set ⇒ the link's density blows up (the "excluded" set).
        let mut prev = f64::INFINITY;
        let mut last = f64::NAN;
        for &level in &[1e3, 1e4, 1e6] {
            let rho: Vec<f64> =
                (0..k).map(|i| if mask >> i & 1 == 1 { level } else { 1.0 }).collect();
            let g = match policy.split(topology, v, &rho) {
                Ok(g) => g,
                // A density-capped policy with every probed link saturated
                // assigns the excluded set exactly zero by construction.
                Err(Error::AllOutgoingSaturated { .. }) => vec![0.0; k],
                Err(e) => return Err(e),
            };
            let share: f64 =
                (0..k).filter(|&i| mask >> i & 1 == 1).map(|i| g[i]).sum();
            if share > prev + 1e-12 {
                saturated_share_vanishes = false;
            }
            prev = share;
            last = share;
        }
        worst_excluded_share = worst_excluded_share.max(last);
        if last > 1e-6 {
            saturated_share_vanishes = false;
        }
    }

    Ok(ResponsivenessReport {
        min_offdiag_partial: min_partial,
        monotone_in_others,
        saturated_share_vanishes,
        worst_excluded_share,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{two_level_net, TWO_LEVEL_F_STAR};

    fn two_level_lr_exp(eta: f64) -> (FlowNetwork, RoutingPolicy) {
        let net = two_level_net();
        let policy =
            RoutingPolicy::locally_responsive_exp(&net, TWO_LEVEL_F_STAR.to_vec(), eta).unwrap();
        (net, policy)
    }

    #[test]
    fn equilibrium_densities_reproduce_equilibrium_split() {
        let (net, policy) = two_level_lr_exp(1.0);
        let rho_star = densities_for(&net, &TWO_LEVEL_F_STAR.to_vec()).unwrap();
        let g0 = policy.split(&net.topology, 0, &[rho_star[0], rho_star[1]]).unwrap();
        assert_eq!(g0, vec![0.75, 0.25]);
        let g1 = policy.split(&net.topology, 1, &[rho_star[2], rho_star[3]]).unwrap();
        assert_eq!(g1, vec![0.5, 0.5]);
    }

    #[test]
    fn constant_fractions_ignore_densities() {
        let net = two_level_net();
        let policy =
            RoutingPolicy::ConstantFraction { fractions: vec![0.75, 0.25, 0.5, 0.5] };
        policy.validate(&net.topology).unwrap();
        for rho in [[0.0, 0.0], [7.0, 0.1], [1e9, 1e-9]] {
            assert_eq!(policy.split(&net.topology, 0, &rho).unwrap(), vec![0.75, 0.25]);
        }
    }

    #[test]
    fn logit_at_zero_density_splits_by_weight() {
        let net = two_level_net();
        let policy = RoutingPolicy::CustomLogit {
            weights: vec![2.0, 1.0, 1.0, 1.0],
            rates: vec![0.031, -0.7196, 0.0, 0.0],
        };
        policy.validate(&net.topology).unwrap();
        let g = policy.split(&net.topology, 0, &[0.0, 0.0]).unwrap();
        assert!((g[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((g[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn extreme_densities_stay_on_the_simplex() {
        let (net, policy) = two_level_lr_exp(50.0);
        for rho in [[1e306, 0.0], [1e306, 1e306], [0.0, 1e-306]] {
            let g = policy.split(&net.topology, 0, &rho).unwrap();
            assert!(g.iter().all(|p| p.is_finite() && (0.0..=1.0).contains(p)), "{g:?}");
            assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn capped_variant_zeroes_saturated_links() {
        let net = two_level_net();
        let policy = RoutingPolicy::DensityCappedExp {
            f_star: TWO_LEVEL_F_STAR.to_vec(),
            rho_star: vec![0.0; 4],
            eta: 1.0,
            rho_max: vec![3.0; 4],
        };
        let g = policy.split(&net.topology, 0, &[3.0, 1.0]).unwrap();
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 1.0);
        let err = policy.split(&net.topology, 0, &[3.0, 5.0]).unwrap_err();
        assert!(matches!(err, Error::AllOutgoingSaturated { node: 0 }));
    }

    #[test]
    fn exponential_family_is_locally_responsive() {
        let (net, policy) = two_level_lr_exp(1.0);
        for v in 0..2 {
            let report = check_locally_responsive(&policy, &net.topology, v, 200, 42).unwrap();
            assert!(report.is_locally_responsive(), "{report:?}");
        }
    }

    #[test]
    fn skew_logit_fails_monotonicity() {
        let net = two_level_net();
        let policy = RoutingPolicy::CustomLogit {
            weights: vec![2.0, 1.0, 1.0, 1.0],
            rates: vec![0.031, -0.7196, 0.0, 0.0],
        };
        let report = check_locally_responsive(&policy, &net.topology, 0, 200, 42).unwrap();
        assert!(!report.monotone_in_others);
        assert!(!report.is_locally_responsive());
    }

    #[test]
    fn constant_fractions_fail_only_the_saturation_property() {
        let net = two_level_net();
        let policy =
            RoutingPolicy::ConstantFraction { fractions: vec![0.75, 0.25, 0.5, 0.5] };
        let report = check_locally_responsive(&policy, &net.topology, 0, 200, 42).unwrap();
        assert!(report.monotone_in_others);
        assert!(!report.saturated_share_vanishes);
        assert!((report.worst_excluded_share - 0.75).abs() < 1e-12);
    }

    #[test]
    fn mismatched_fraction_sum_is_rejected() {
        let net = two_level_net();
        let policy =
            RoutingPolicy::ConstantFraction { fractions: vec![0.75, 0.35, 0.5, 0.5] };
        assert!(matches!(policy.validate(&net.topology), Err(Error::BadPolicy { .. })));
    }
}
