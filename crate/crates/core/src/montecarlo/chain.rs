use rand::Rng;

use crate::error::{Error, Result};
use crate::kernels::{sample_increment, KernelFamily};
use crate::symbol::{FrozenSymbol, Psi, Shape, SymbolSpec};

/// Law of one frozen-coefficient increment over time `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum IncrementLaw {
    Zero,
    Kernel {
        family: KernelFamily,
        alpha: f64,
        time: f64,
    },
}

impl IncrementLaw {
    /// The increment whose characteristic function is `exp(-τ H(q, ·))` for
    /// the frozen symbol.
    ///
    /// Variance convention: `½|p|²` is standard Brownian motion (variance
    /// `τ`), while `a|p|²` has variance `2aτ`.
    pub(crate) fn of(frozen: &FrozenSymbol, tau: f64) -> Result<Self> {
        let time = frozen.scale * tau;
        if time < 0.0 {
            return Err(Error::invalid(
                "coefficient",
                format!("negative frozen scale {}", frozen.scale),
            ));
        }
        if time == 0.0 {
            return Ok(IncrementLaw::Zero);
        }
        let power = |alpha: f64| {
            if alpha == 2.0 {
                IncrementLaw::Kernel {
                    family: KernelFamily::Gaussian,
                    alpha,
                    time: 2.0 * time,
                }
            } else if alpha == 1.0 {
                IncrementLaw::Kernel {
                    family: KernelFamily::Cauchy,
                    alpha,
                    time,
                }
            } else {
                IncrementLaw::Kernel {
                    family: KernelFamily::Stable,
                    alpha,
                    time,
                }
            }
        };
        match frozen.shape {
            Shape::Power { alpha } | Shape::Levy(Psi::Power(alpha)) => Ok(power(alpha)),
            Shape::Levy(Psi::HalfSquare) => Ok(IncrementLaw::Kernel {
                family: KernelFamily::Gaussian,
                alpha: 2.0,
                time,
            }),
            Shape::Levy(Psi::Abs) => Ok(power(1.0)),
            Shape::Levy(Psi::Zero) => Ok(IncrementLaw::Zero),
            Shape::Levy(Psi::NegativeSquare) => Err(Error::NoSamplingLaw(
                "ψ = -|p|² is not a Lévy exponent".into(),
            )),
            Shape::Relativistic { .. } => Err(Error::NoSamplingLaw(
                "relativistic symbols are only supported on the grid".into(),
            )),
        }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            IncrementLaw::Zero => 0.0,
            IncrementLaw::Kernel {
                family,
                alpha,
                time,
            } => sample_increment(family, time, alpha, rng),
        }
    }
}

/// Rejects symbols without a constant-coefficient sampling law before any
/// path is drawn.
pub(crate) fn check_sampling_law(spec: &SymbolSpec) -> Result<()> {
    match spec {
        SymbolSpec::FractionalPower { a, .. } => nonnegative(a.bounds().0),
        SymbolSpec::Relativistic { .. } => Err(Error::NoSamplingLaw(
            "relativistic symbols are only supported on the grid".into(),
        )),
        SymbolSpec::ConstantLevy { psi } => IncrementLaw::of(
            &FrozenSymbol {
                scale: 1.0,
                shape: Shape::Levy(*psi),
            },
            1.0,
        )
        .map(|_| ()),
        SymbolSpec::Scaled { a, inner } => {
            nonnegative(a.bounds().0)?;
            check_sampling_law(inner)
        }
    }
}

fn nonnegative(lo: f64) -> Result<()> {
    if lo >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "coefficient",
            format!("lower bound {lo} is negative"),
        ))
    }
}

/// A frozen-coefficient chain `Y(0) = q₀, …, Y(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    pub positions: Vec<f64>,
    pub increments: Vec<f64>,
    pub step: f64,
}

/// Draws one path: `Y(k+1) = Y(k) + ξ_k` where `ξ_k` has characteristic
/// function `exp(-(t/n) H(Y(k), ·))`.
pub fn simulate_chain<R: Rng + ?Sized>(
    spec: &SymbolSpec,
    q0: f64,
    t: f64,
    n: usize,
    rng: &mut R,
) -> Result<ChainPath> {
    check_chain_args(spec, t, n)?;
    let step = t / n as f64;
    let mut positions = Vec::with_capacity(n + 1);
    let mut increments = Vec::with_capacity(n);
    positions.push(q0);
    let mut y = q0;
    for _ in 0..n {
        let dy = IncrementLaw::of(&spec.freeze(y), step)?.sample(rng);
        increments.push(dy);
        y += dy;
        positions.push(y);
    }
    Ok(ChainPath {
        positions,
        increments,
        step,
    })
}

pub(crate) fn check_chain_args(spec: &SymbolSpec, t: f64, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::invalid("t", format!("must be positive, got {t}")));
    }
    check_sampling_law(spec)
}
