//! Link flow functions: density → flow maps with a finite flow capacity.
//!
//! Two base shapes plus a multiplicative reduction wrapper:
//! saturating exponential (unbounded density domain, capacity approached in
//! the limit) and concave quadratic (finite density cap, capacity attained
//! at half the cap). `Scaled` models capacity-reducing disturbances.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FlowFunction {
    /// μ(ρ) = f_max·(1 − e^{−aρ}) on ρ ≥ 0.
    ExpSaturating { f_max: f64, a: f64 },
    /// μ(ρ) = 4·f_max·ρ·(rho_max − ρ)/rho_max² on [0, rho_max].
    ConcaveQuadratic { f_max: f64, rho_max: f64 },
    /// c·μ_base(ρ), c ∈ (0, 1].
    Scaled { base: Box<FlowFunction>, factor: f64 },
}

impl FlowFunction {
    pub fn exp_saturating(f_max: f64, a: f64) -> Result<Self> {
        let fn_ = FlowFunction::ExpSaturating { f_max, a };
        fn_.validate()?;
        Ok(fn_)
    }

    pub fn concave_quadratic(f_max: f64, rho_max: f64) -> Result<Self> {
        let fn_ = FlowFunction::ConcaveQuadratic { f_max, rho_max };
        fn_.validate()?;
        Ok(fn_)
    }

    pub fn scaled(self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::BadFlowFunction {
                reason: format!("scale factor {factor} outside (0, 1]"),
            });
        }
        Ok(FlowFunction::Scaled { base: Box::new(self), factor })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FlowFunction::ExpSaturating { f_max, a } => {
                if !(f_max.is_finite() && *f_max > 0.0) {
                    return Err(Error::BadFlowFunction { reason: format!("f_max = {f_max}") });
                }
                if !(a.is_finite() && *a > 0.0) {
                    return Err(Error::BadFlowFunction { reason: format!("a = {a}") });
                }
            }
            FlowFunction::ConcaveQuadratic { f_max, rho_max } => {
                if !(f_max.is_finite() && *f_max > 0.0) {
                    return Err(Error::BadFlowFunction { reason: format!("f_max = {f_max}") });
                }
                if !(rho_max.is_finite() && *rho_max > 0.0) {
                    return Err(Error::BadFlowFunction { reason: format!("rho_max = {rho_max}") });
                }
            }
            FlowFunction::Scaled { base, factor } => {
                if !(*factor > 0.0 && *factor <= 1.0) {
                    return Err(Error::BadFlowFunction {
                        reason: format!("scale factor {factor} outside (0, 1]"),
                    });
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    /// Flow capacity: sup of μ. Exactly c·base.f_max for `Scaled`.
    pub fn f_max(&self) -> f64 {
        match self {
            FlowFunction::ExpSaturating { f_max, .. } => *f_max,
            FlowFunction::ConcaveQuadratic { f_max, .. } => *f_max,
            FlowFunction::Scaled { base, factor } => factor * base.f_max(),
        }
    }

    /// Density cap, if the domain is finite.
    pub fn rho_max(&self) -> Option<f64> {
        match self {
            FlowFunction::ExpSaturating { .. } => None,
            FlowFunction::ConcaveQuadratic { rho_max, .. } => Some(*rho_max),
            FlowFunction::Scaled { base, .. } => base.rho_max(),
        }
    }

    /// μ′(0); finite for both base shapes.
    pub fn slope_at_zero(&self) -> f64 {
        match self {
            FlowFunction::ExpSaturating { f_max, a } => a * f_max,
            FlowFunction::ConcaveQuadratic { f_max, rho_max } => 4.0 * f_max / rho_max,
            FlowFunction::Scaled { base, factor } => factor * base.slope_at_zero(),
        }
    }

    pub fn eval(&self, rho: f64) -> Result<f64> {
        if rho < 0.0 || !rho.is_finite() {
            return Err(Error::DomainExceeded { rho });
        }
        if let Some(rho_max) = self.rho_max() {
            if rho > rho_max {
                return Err(Error::DomainExceeded { rho });
            }
        }
        Ok(self.eval_unchecked(rho))
    }

    /// μ(ρ) with the density clamped into the domain. The dynamics layer
    /// relies on the clamp: transient integrator overshoot past a density
    /// cap must read as zero outflow, not negative flow.
    pub fn eval_unchecked(&self, rho: f64) -> f64 {
        match self {
            FlowFunction::ExpSaturating { f_max, a } => {
                let rho = rho.max(0.0);
                // -exp_m1 avoids cancellation for small a·ρ.
                f_max * -(-a * rho).exp_m1()
            }
            FlowFunction::ConcaveQuadratic { f_max, rho_max } => {
                let rho = rho.clamp(0.0, *rho_max);
                4.0 * f_max * rho * (rho_max - rho) / (rho_max * rho_max)
            }
            FlowFunction::Scaled { base, factor } => factor * base.eval_unchecked(rho),
        }
    }

    /// Inverse of μ. For the quadratic shape this is the increasing-branch
    /// root on [0, rho_max/2]; the decreasing branch is only reachable
    /// through dynamics, never through flow-specified initialization.
    pub fn invert(&self, f: f64) -> Result<f64> {
        if f < 0.0 || !f.is_finite() {
            return Err(Error::FlowAtOrAboveCapacity { flow: f, f_max: self.f_max() });
        }
        match self {
            FlowFunction::ExpSaturating { f_max, a } => {
                if f >= *f_max {
                    return Err(Error::FlowAtOrAboveCapacity { flow: f, f_max: *f_max });
                }
                // ρ = −ln(1 − f/f_max)/a, via ln_1p for accuracy near 0.
                Ok(-(-f / f_max).ln_1p() / a)
            }
            FlowFunction::ConcaveQuadratic { f_max, rho_max } => {
                if f > *f_max {
                    return Err(Error::FlowAtOrAboveCapacity { flow: f, f_max: *f_max });
                }
                Ok(rho_max / 2.0 * (1.0 - (1.0 - f / f_max).max(0.0).sqrt()))
            }
            FlowFunction::Scaled { base, factor } => {
                if f >= self.f_max() && !matches!(**base, FlowFunction::ConcaveQuadratic { .. }) {
                    return Err(Error::FlowAtOrAboveCapacity { flow: f, f_max: self.f_max() });
                }
                base.invert(f / factor)
            }
        }
    }
}
