//! Isotropic chains in the plane. Coefficients are radial: the symbol is
//! frozen at `|Y(k)|`, and increments have characteristic function
//! `exp(-τ H(|Y(k)|, |p|))`.
//!
//! A symmetric α-stable vector is drawn as `√A · G` with `G ~ N(0, 2I)` and
//! `A ≥ 0` a positive (α/2)-stable variable with `E e^{-sA} = e^{-τ s^{α/2}}`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};

use super::chain::{check_chain_args, IncrementLaw};
use super::estimate::{check_paths, sharded, McEstimate};
use crate::error::Result;
use crate::kernels::KernelFamily;
use crate::symbol::SymbolSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath2 {
    pub positions: Vec<[f64; 2]>,
    pub increments: Vec<[f64; 2]>,
    pub step: f64,
}

/// Kanter's draw of the positive stable law with `E e^{-sA} = e^{-s^γ}`,
/// `0 < γ < 1`.
pub fn positive_stable<R: Rng + ?Sized>(gamma: f64, rng: &mut R) -> f64 {
    let u = PI * Distribution::<f64>::sample(&Open01, rng);
    let w: f64 = Exp1.sample(rng);
    let a = (gamma * u).sin() / u.sin().powf(1.0 / gamma);
    let b = (((1.0 - gamma) * u).sin() / w).powf((1.0 - gamma) / gamma);
    a * b
}

fn gaussian_pair<R: Rng + ?Sized>(sd: f64, rng: &mut R) -> [f64; 2] {
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    [sd * x, sd * y]
}

fn sample_isotropic<R: Rng + ?Sized>(law: IncrementLaw, rng: &mut R) -> [f64; 2] {
    match law {
        IncrementLaw::Zero => [0.0, 0.0],
        IncrementLaw::Kernel {
            family: KernelFamily::Gaussian,
            time,
            ..
        } => gaussian_pair(time.sqrt(), rng),
        IncrementLaw::Kernel { alpha, time, .. } => {
            let mix = time.powf(2.0 / alpha) * positive_stable(alpha / 2.0, rng);
            gaussian_pair((2.0 * mix).sqrt(), rng)
        }
    }
}

fn law_at(spec: &SymbolSpec, y: [f64; 2], dt: f64) -> Result<IncrementLaw> {
    IncrementLaw::of(&spec.freeze(y[0].hypot(y[1])), dt)
}

pub fn simulate_chain_2d<R: Rng + ?Sized>(
    spec: &SymbolSpec,
    q0: [f64; 2],
    t: f64,
    n: usize,
    rng: &mut R,
) -> Result<ChainPath2> {
    check_chain_args(spec, t, n)?;
    let step = t / n as f64;
    let mut positions = vec![q0];
    let mut increments = Vec::with_capacity(n);
    let mut y = q0;
    for _ in 0..n {
        let dy = sample_isotropic(law_at(spec, y, step)?, rng);
        increments.push(dy);
        y = [y[0] + dy[0], y[1] + dy[1]];
        positions.push(y);
    }
    Ok(ChainPath2 {
        positions,
        increments,
        step,
    })
}

/// Mean of `f(Y(n))` over planar chains; `f` must be bounded.
pub fn expectation_estimate_2d<F>(
    spec: &SymbolSpec,
    q0: [f64; 2],
    t: f64,
    n: usize,
    f: F,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate>
where
    F: Fn([f64; 2]) -> f64 + Sync,
{
    check_chain_args(spec, t, n)?;
    check_paths(n_paths)?;
    let dt = t / n as f64;
    let m = sharded(n_paths, seed, |rng| {
        let mut y = q0;
        for _ in 0..n {
            let dy = sample_isotropic(law_at(spec, y, dt)?, rng);
            y = [y[0] + dy[0], y[1] + dy[1]];
        }
        Ok(f(y))
    })?;
    Ok(m.estimate(n))
}
