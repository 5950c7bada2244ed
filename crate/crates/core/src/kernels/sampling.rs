use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};

use super::KernelFamily;

/// Chambers–Mallows–Stuck draw of the symmetric stable law with
/// characteristic function `exp(-|p|^α)`.
pub fn symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    let v = PI * (u - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// One increment of the kernel's process over time `t`. `alpha` is only
/// read for [`KernelFamily::Stable`]. Uses `X_t = t^{1/α} X_1`.
pub fn sample_increment<R: Rng + ?Sized>(
    family: KernelFamily,
    t: f64,
    alpha: f64,
    rng: &mut R,
) -> f64 {
    match family {
        KernelFamily::Gaussian => {
            let z: f64 = StandardNormal.sample(rng);
            t.sqrt() * z
        }
        KernelFamily::Cauchy => {
            let u: f64 = Open01.sample(rng);
            t * (PI * (u - 0.5)).tan()
        }
        KernelFamily::Stable => t.powf(1.0 / alpha) * symmetric_stable(alpha, rng),
    }
}
