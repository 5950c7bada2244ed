//! Transition densities of the constant-coefficient Lévy processes used by the
//! Lagrangian step, and samplers for their increments.
//!
//! Conventions: the Gaussian kernel belongs to `ψ(p) = ½|p|²` (variance `t`),
//! Cauchy to `ψ(p) = |p|`, and `Stable(α)` to `ψ(p) = |p|^α`. In particular
//! `Stable(2)` has variance `2t`.

mod sampling;
mod stable;

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use statrs::function::erf::erf;

use crate::error::{Error, Result};

pub use sampling::{sample_increment, symmetric_stable};
pub use stable::{StableTable, CACHE_DIR_ENV, TABLE_NODES};

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("t", format!("must be positive, got {t}")))
    }
}

/// `(2πt)^{-1/2} exp(-x²/2t)`
pub fn gaussian_density(t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    Ok(gaussian(t, x))
}

/// Normalized Cauchy density `t / (π (t² + x²))`.
pub fn cauchy_density(t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    Ok(cauchy(t, x))
}

/// Density with characteristic function `exp(-t|p|^α)`, from the shared table.
pub fn stable_density(alpha: f64, t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    Ok(StableTable::shared(alpha)?.density(t, x))
}

#[inline]
fn gaussian(t: f64, x: f64) -> f64 {
    (-x * x / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

#[inline]
fn cauchy(t: f64, x: f64) -> f64 {
    t / (PI * (t * t + x * x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Gaussian,
    Cauchy,
    Stable,
}

/// A symmetric transition density `p_t(x)` of a Lévy process.
#[derive(Debug, Clone)]
pub enum TransitionKernel {
    Gaussian,
    Cauchy,
    Stable(Arc<StableTable>),
}

impl TransitionKernel {
    pub fn stable(alpha: f64) -> Result<Self> {
        Ok(TransitionKernel::Stable(StableTable::shared(alpha)?))
    }

    pub fn family(&self) -> KernelFamily {
        match self {
            TransitionKernel::Gaussian => KernelFamily::Gaussian,
            TransitionKernel::Cauchy => KernelFamily::Cauchy,
            TransitionKernel::Stable(_) => KernelFamily::Stable,
        }
    }

    /// Stability index: 2 for Gaussian, 1 for Cauchy.
    pub fn alpha(&self) -> f64 {
        match self {
            TransitionKernel::Gaussian => 2.0,
            TransitionKernel::Cauchy => 1.0,
            TransitionKernel::Stable(table) => table.alpha(),
        }
    }

    /// `p_t(x)` for `t > 0` (unchecked).
    pub fn density(&self, t: f64, x: f64) -> f64 {
        match self {
            TransitionKernel::Gaussian => gaussian(t, x),
            TransitionKernel::Cauchy => cauchy(t, x),
            TransitionKernel::Stable(table) => table.density(t, x),
        }
    }

    pub fn cdf(&self, t: f64, x: f64) -> f64 {
        match self {
            TransitionKernel::Gaussian => 0.5 * (1.0 + erf(x / (2.0 * t).sqrt())),
            TransitionKernel::Cauchy => 0.5 + (x / t).atan() / PI,
            TransitionKernel::Stable(table) => table.cdf(t, x),
        }
    }

    /// Whether the density decays faster than any power.
    pub fn is_light_tailed(&self) -> bool {
        matches!(self, TransitionKernel::Gaussian) || self.alpha() >= 2.0
    }

    /// Allowed sup-norm growth of one quadrature step.
    pub fn tail_tolerance(&self) -> f64 {
        if self.is_light_tailed() {
            1e-6
        } else {
            1e-3
        }
    }

    /// Distance beyond which `p_t(x) < 1e-17 · p_t(0)`, for light tails only.
    pub(crate) fn negligible_radius(&self, t: f64) -> f64 {
        match self {
            TransitionKernel::Gaussian => 9.0 * t.sqrt(),
            TransitionKernel::Stable(table) if table.alpha() >= 2.0 => 9.0 * (2.0 * t).sqrt(),
            _ => f64::INFINITY,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        sample_increment(self.family(), t, self.alpha(), rng)
    }
}
