//! Negative-definite symbols `H(q, p)` and sampled checks of the hypotheses
//! that make `exp(-t H(q, D))` a Feller step.
//!
//! Every catalog symbol is real-valued and even in `p`, so `eval` returns a
//! complex number with zero imaginary part; the complex return type keeps the
//! checks honest for the general (hermitian) case.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A real coefficient `q ↦ c(q)` with certified bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientFn {
    Constant(f64),
    /// `base + amplitude * sin(frequency * q)`
    Sinusoidal {
        base: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// Piecewise-linear through `(grid[i], values[i])`, held constant outside.
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
}

impl CoefficientFn {
    pub fn constant(c: f64) -> Self {
        CoefficientFn::Constant(c)
    }

    pub fn sinusoidal(base: f64, amplitude: f64, frequency: f64) -> Self {
        CoefficientFn::Sinusoidal {
            base,
            amplitude,
            frequency,
        }
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::invalid(
                "tabulated",
                format!(
                    "need >= 2 matching nodes, got {} / {}",
                    grid.len(),
                    values.len()
                ),
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "tabulated",
                "grid must be strictly increasing",
            ));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::invalid("tabulated", "non-finite entry"));
        }
        Ok(CoefficientFn::Tabulated { grid, values })
    }

    pub fn eval(&self, q: f64) -> f64 {
        match self {
            CoefficientFn::Constant(c) => *c,
            CoefficientFn::Sinusoidal {
                base,
                amplitude,
                frequency,
            } => base + amplitude * (frequency * q).sin(),
            CoefficientFn::Tabulated { grid, values } => {
                let last = grid.len() - 1;
                if q <= grid[0] {
                    return values[0];
                }
                if q >= grid[last] {
                    return values[last];
                }
                let i = grid.partition_point(|&g| g <= q) - 1;
                let w = (q - grid[i]) / (grid[i + 1] - grid[i]);
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    /// Certified `[lo, hi]` such that `lo <= c(q) <= hi` for every real `q`.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            CoefficientFn::Constant(c) => (*c, *c),
            CoefficientFn::Sinusoidal {
                base,
                amplitude,
                frequency,
            } => {
                if *frequency == 0.0 {
                    (*base, *base)
                } else {
                    (base - amplitude.abs(), base + amplitude.abs())
                }
            }
            CoefficientFn::Tabulated { values, .. } => values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                }),
        }
    }

    /// Bounds as required of `a(q)` or `m(q)`: `0 < lo <= hi < ∞`.
    pub fn positive_bounds(&self, name: &'static str) -> Result<(f64, f64)> {
        let (lo, hi) = self.bounds();
        if lo > 0.0 && hi.is_finite() {
            Ok((lo, hi))
        } else {
            Err(Error::UnboundedCoefficient { name, lo, hi })
        }
    }

    /// Largest absolute value.
    pub fn sup_abs(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.abs().max(hi.abs())
    }

    pub fn is_constant(&self) -> bool {
        match self {
            CoefficientFn::Constant(_) => true,
            CoefficientFn::Sinusoidal {
                amplitude,
                frequency,
                ..
            } => *amplitude == 0.0 || *frequency == 0.0,
            CoefficientFn::Tabulated { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
        }
    }

    /// Points that exercise the whole range of the coefficient.
    pub fn sweep_points(&self) -> Vec<f64> {
        match self {
            CoefficientFn::Constant(_) => vec![0.0],
            CoefficientFn::Sinusoidal { frequency, .. } => {
                if *frequency == 0.0 {
                    return vec![0.0];
                }
                let period = 2.0 * std::f64::consts::PI / frequency.abs();
                (0..=256).map(|k| period * k as f64 / 256.0).collect()
            }
            CoefficientFn::Tabulated { grid, .. } => {
                let mut pts = Vec::with_capacity(2 * grid.len() + 1);
                for w in grid.windows(2) {
                    pts.push(w[0]);
                    pts.push(0.5 * (w[0] + w[1]));
                }
                pts.push(grid[grid.len() - 1]);
                pts
            }
        }
    }
}

/// Closed-form characteristic exponents `ψ(p)` of constant-coefficient Lévy
/// processes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psi {
    /// `½|p|²`, standard Brownian motion.
    HalfSquare,
    /// `|p|`, the Cauchy process.
    Abs,
    /// `|p|^α`, symmetric α-stable.
    Power(f64),
    /// `ψ ≡ 0`. Test hook.
    #[doc(hidden)]
    Zero,
    /// `-|p|²`, deliberately not negative definite. Test hook.
    #[doc(hidden)]
    NegativeSquare,
}

impl Psi {
    pub fn eval(&self, p: f64) -> f64 {
        match *self {
            Psi::HalfSquare => 0.5 * p * p,
            Psi::Abs => p.abs(),
            Psi::Power(alpha) => p.abs().powf(alpha),
            Psi::Zero => 0.0,
            Psi::NegativeSquare => -p * p,
        }
    }

    /// Smallest `κ` with `|ψ(p)| <= κ (1 + |p|²)` for all `p`.
    fn growth_constant(&self) -> f64 {
        match *self {
            Psi::HalfSquare => 0.5,
            Psi::Abs | Psi::Power(_) | Psi::NegativeSquare => 1.0,
            Psi::Zero => 0.0,
        }
    }
}

/// A catalog symbol `H(q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolSpec {
    /// `a(q)|p|^α`
    FractionalPower { alpha: f64, a: CoefficientFn },
    /// `√(|p|^α + m(q)²) − m(q)`
    Relativistic { alpha: f64, m: CoefficientFn },
    /// `ψ(p)`
    ConstantLevy { psi: Psi },
    /// `a(q) · H_inner(q, p)`
    Scaled {
        a: CoefficientFn,
        inner: Box<SymbolSpec>,
    },
}

/// The coefficient part of a symbol evaluated at a fixed `q`.
///
/// `H(q, p) = scale * shape(p)`; this is exactly the characteristic exponent
/// of the Lévy increment of the frozen-coefficient chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenSymbol {
    pub scale: f64,
    pub shape: Shape,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Power { alpha: f64 },
    Relativistic { alpha: f64, m: f64 },
    Levy(Psi),
}

impl FrozenSymbol {
    pub fn eval(&self, p: f64) -> f64 {
        let shape = match self.shape {
            Shape::Power { alpha } => p.abs().powf(alpha),
            Shape::Relativistic { alpha, m } => relativistic(alpha, m, p),
            Shape::Levy(psi) => psi.eval(p),
        };
        self.scale * shape
    }
}

fn relativistic(alpha: f64, m: f64, p: f64) -> f64 {
    let x = p.abs().powf(alpha);
    // √(x + m²) − m without cancellation for small x
    let root = (x + m * m).sqrt();
    if m > 0.0 {
        x / (root + m)
    } else {
        root - m
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "alpha",
            format!("must lie in (0, 2], got {alpha}"),
        ))
    }
}

impl SymbolSpec {
    pub fn fractional_power(alpha: f64, a: CoefficientFn) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(SymbolSpec::FractionalPower { alpha, a })
    }

    pub fn relativistic(alpha: f64, m: CoefficientFn) -> Result<Self> {
        check_alpha(alpha)?;
        m.positive_bounds("m")?;
        Ok(SymbolSpec::Relativistic { alpha, m })
    }

    pub fn constant_levy(psi: Psi) -> Result<Self> {
        if let Psi::Power(alpha) = psi {
            check_alpha(alpha)?;
        }
        Ok(SymbolSpec::ConstantLevy { psi })
    }

    pub fn scaled(a: CoefficientFn, inner: SymbolSpec) -> Self {
        SymbolSpec::Scaled {
            a,
            inner: Box::new(inner),
        }
    }

    /// Evaluates the coefficients at `q`.
    pub fn freeze(&self, q: f64) -> FrozenSymbol {
        match self {
            SymbolSpec::FractionalPower { alpha, a } => FrozenSymbol {
                scale: a.eval(q),
                shape: Shape::Power { alpha: *alpha },
            },
            SymbolSpec::Relativistic { alpha, m } => FrozenSymbol {
                scale: 1.0,
                shape: Shape::Relativistic {
                    alpha: *alpha,
                    m: m.eval(q),
                },
            },
            SymbolSpec::ConstantLevy { psi } => FrozenSymbol {
                scale: 1.0,
                shape: Shape::Levy(*psi),
            },
            SymbolSpec::Scaled { a, inner } => {
                let mut frozen = inner.freeze(q);
                frozen.scale *= a.eval(q);
                frozen
            }
        }
    }

    pub fn eval(&self, q: f64, p: f64) -> Complex64 {
        Complex64::new(self.freeze(q).eval(p), 0.0)
    }

    /// True when `H` does not depend on `q`.
    pub fn is_q_independent(&self) -> bool {
        match self {
            SymbolSpec::FractionalPower { a, .. } => a.is_constant(),
            SymbolSpec::Relativistic { m, .. } => m.is_constant(),
            SymbolSpec::ConstantLevy { .. } => true,
            SymbolSpec::Scaled { a, inner } => a.is_constant() && inner.is_q_independent(),
        }
    }

    /// `κ` with `sup_q |H(q, p)| <= κ (1 + |p|²)`, from the coefficient bounds.
    pub fn growth_constant(&self) -> f64 {
        match self {
            // |p|^α <= 1 + |p|² for α in (0, 2]
            SymbolSpec::FractionalPower { a, .. } => a.sup_abs(),
            // √(x + m²) − m <= √x = |p|^{α/2} <= 1 + |p|²
            SymbolSpec::Relativistic { .. } => 1.0,
            SymbolSpec::ConstantLevy { psi } => psi.growth_constant(),
            SymbolSpec::Scaled { a, inner } => a.sup_abs() * inner.growth_constant(),
        }
    }

    /// Sample of `q` values that sweeps every coefficient over its range.
    pub fn q_sweep(&self) -> Vec<f64> {
        let mut pts = match self {
            SymbolSpec::FractionalPower { a, .. } => a.sweep_points(),
            SymbolSpec::Relativistic { m, .. } => m.sweep_points(),
            SymbolSpec::ConstantLevy { .. } => vec![0.0],
            SymbolSpec::Scaled { a, inner } => {
                let mut pts = a.sweep_points();
                pts.extend(inner.q_sweep());
                pts
            }
        };
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCheck {
    /// Largest observed `|H(q,p)| / (1 + |p|²)`.
    pub kappa_fit: f64,
    /// `κ` derived from the coefficient bounds.
    pub kappa_bound: f64,
    pub pass: bool,
    /// Worst `(q, p)` when the check fails.
    pub violation: Option<(f64, f64)>,
}

/// Compares the sampled growth ratio against the bound-derived `κ`.
pub fn check_growth_bound(spec: &SymbolSpec, p_samples: &[f64]) -> Result<GrowthCheck> {
    if p_samples.is_empty() {
        return Err(Error::invalid("p_samples", "must be nonempty"));
    }
    let kappa_bound = spec.growth_constant();
    let mut kappa_fit = 0.0_f64;
    let mut worst = (0.0, 0.0);
    for q in spec.q_sweep() {
        let frozen = spec.freeze(q);
        for &p in p_samples {
            let ratio = frozen.eval(p).abs() / (1.0 + p * p);
            if ratio > kappa_fit {
                kappa_fit = ratio;
                worst = (q, p);
            }
        }
    }
    let pass = kappa_fit <= kappa_bound * (1.0 + 1e-12);
    Ok(GrowthCheck {
        kappa_fit,
        kappa_bound,
        pass,
        violation: (!pass).then_some(worst),
    })
}

/// The hermitian matrix `M[j,k] = H(q,p_j) + conj(H(q,p_k)) − H(q, p_j − p_k)`.
pub fn negative_definite_matrix(spec: &SymbolSpec, q: f64, p_points: &[f64]) -> DMatrix<Complex64> {
    let m = p_points.len();
    DMatrix::from_fn(m, m, |j, k| {
        spec.eval(q, p_points[j]) + spec.eval(q, p_points[k]).conj()
            - spec.eval(q, p_points[j] - p_points[k])
    })
}

/// Sampled negative-definiteness test: smallest eigenvalue of the matrix
/// above is at least `-1e-9 ‖M‖`.
pub fn check_negative_definite(spec: &SymbolSpec, q: f64, p_points: &[f64]) -> Result<bool> {
    let m = p_points.len();
    if !(2..=8).contains(&m) {
        return Err(Error::invalid(
            "p_points",
            format!("need 2..=8 points, got {m}"),
        ));
    }
    Ok(min_eigenvalue(&negative_definite_matrix(spec, q, p_points)).0)
}

/// Returns `(passes, min eigenvalue)` for a hermitian matrix.
pub(crate) fn min_eigenvalue(matrix: &DMatrix<Complex64>) -> (bool, f64) {
    let norm = matrix.norm();
    if norm == 0.0 {
        return (true, 0.0);
    }
    let eig = matrix.clone().symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    (min >= -1e-9 * norm, min)
}
