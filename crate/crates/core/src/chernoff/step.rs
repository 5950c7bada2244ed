use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, GridFunction, HamiltonianStep};
use crate::kernels::TransitionKernel;
use crate::symbol::{CoefficientFn, SymbolSpec};

/// A one-parameter family `F(t)` acting on grid functions.
///
/// `Composite` factors are listed as in `F₁(t) ∘ … ∘ F_m(t)`: the rightmost
/// factor acts first.
#[derive(Debug, Clone)]
pub enum StepOperator {
    /// Pseudo-differential step with symbol `exp(-t H(q, p))`.
    Hamiltonian {
        spec: SymbolSpec,
    },
    /// `φ ↦ (T_{a(q) t} φ)(q)` for the kernel's semigroup `T`.
    Lagrangian {
        a: CoefficientFn,
        kernel: TransitionKernel,
    },
    /// Multiplication by `exp(t V)`.
    Potential {
        v: CoefficientFn,
    },
    /// `φ ↦ φ(q + t b(q))`.
    Drift {
        b: CoefficientFn,
    },
    Composite {
        factors: Vec<StepOperator>,
    },
}

impl StepOperator {
    /// Exponential growth rate `κ` in `‖F(t)‖ <= exp(κ t)`: `sup V⁺` summed
    /// over potential factors, zero otherwise.
    pub fn growth_rate(&self) -> f64 {
        match self {
            StepOperator::Potential { v } => v.bounds().1.max(0.0),
            StepOperator::Composite { factors } => factors.iter().map(Self::growth_rate).sum(),
            _ => 0.0,
        }
    }

    /// Precomputes everything that depends only on the grid and `t`.
    pub fn prepare(&self, grid: Grid1D, t: f64) -> Result<PreparedStep> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::NegativeTime(t));
        }
        if let StepOperator::Composite { factors } = self {
            return factors
                .iter()
                .map(|f| f.prepare(grid, t))
                .collect::<Result<Vec<_>>>()
                .map(|fs| PreparedStep(Inner::Composite(fs)));
        }
        if t == 0.0 {
            return Ok(PreparedStep(Inner::Identity));
        }
        let inner = match self {
            StepOperator::Hamiltonian { spec } => {
                Inner::Hamiltonian(HamiltonianStep::new(spec, grid, t)?)
            }
            StepOperator::Lagrangian { a, kernel } => {
                Inner::Lagrangian(LagrangianStep::new(a, kernel, grid, t)?)
            }
            StepOperator::Potential { v } => {
                Inner::Multiply(grid.nodes().map(|q| (t * v.eval(q)).exp()).collect())
            }
            StepOperator::Drift { b } => Inner::Drift(DriftStep::new(b, grid, t)?),
            StepOperator::Composite { .. } => unreachable!(),
        };
        Ok(PreparedStep(inner))
    }

    /// `F(t)φ`.
    pub fn apply(&self, t: f64, phi: &GridFunction) -> Result<GridFunction> {
        self.prepare(*phi.grid(), t)?.apply(phi)
    }
}

/// `F(t)` with a fixed grid and `t`.
#[derive(Debug, Clone)]
pub struct PreparedStep(Inner);

#[derive(Debug, Clone)]
enum Inner {
    Identity,
    Hamiltonian(HamiltonianStep),
    Lagrangian(LagrangianStep),
    Multiply(Vec<f64>),
    Drift(DriftStep),
    Composite(Vec<PreparedStep>),
}

impl PreparedStep {
    pub fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        match &self.0 {
            Inner::Identity => Ok(phi.clone()),
            Inner::Hamiltonian(step) => step.apply(phi),
            Inner::Lagrangian(step) => step.apply(phi),
            Inner::Multiply(mult) => {
                let mut out = phi.clone();
                for (v, m) in out.values_mut().iter_mut().zip(mult) {
                    *v *= *m;
                }
                Ok(out)
            }
            Inner::Drift(step) => step.apply(phi),
            Inner::Composite(factors) => {
                let mut state = phi.clone();
                for f in factors.iter().rev() {
                    state = f.apply(&state)?;
                }
                Ok(state)
            }
        }
    }
}

/// Quadrature form of `(T_{a(q) t} φ)(q)`: row `j` holds
/// `Δy · p_{a(q_j) t}(q_j − y_i)` for `i` in a band around `j`.
///
/// When a row sums above one (a kernel narrower than the grid resolves) the
/// centre weight is lowered to the mass the other nodes leave over, so the
/// off-centre samples still carry the jump part of the generator. Rows stay
/// nonnegative with sum at most one.
#[derive(Debug, Clone)]
pub struct LagrangianStep {
    grid: Grid1D,
    rows: Vec<(usize, Vec<f64>)>,
}

impl LagrangianStep {
    pub fn new(a: &CoefficientFn, kernel: &TransitionKernel, grid: Grid1D, t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid("t", format!("must be positive, got {t}")));
        }
        a.positive_bounds("a")?;
        let n = grid.len();
        let dq = grid.dq();
        let rows = (0..n)
            .into_par_iter()
            .map(|j| {
                let q = grid.node(j);
                let s = a.eval(q) * t;
                let reach = kernel.negligible_radius(s);
                let (lo, hi) = if reach.is_finite() {
                    let w = (reach / dq).ceil() as usize;
                    (j.saturating_sub(w), (j + w + 1).min(n))
                } else {
                    (0, n)
                };
                let mut weights: Vec<f64> = (lo..hi)
                    .map(|i| dq * kernel.density(s, q - grid.node(i)))
                    .collect();
                let centre = j - lo;
                let total: f64 = weights.iter().sum();
                let off_centre = total - weights[centre];
                if off_centre > 1.0 {
                    weights.iter_mut().for_each(|w| *w /= total);
                } else {
                    weights[centre] = weights[centre].min(1.0 - off_centre);
                }
                (lo, weights)
            })
            .collect();
        Ok(Self { grid, rows })
    }

    pub fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        if *phi.grid() != self.grid {
            return Err(Error::GridMismatch(
                "lagrangian step built for another grid".into(),
            ));
        }
        let src = phi.values();
        let out = self
            .rows
            .par_iter()
            .map(|(lo, weights)| {
                weights
                    .iter()
                    .zip(&src[*lo..*lo + weights.len()])
                    .fold(Complex64::default(), |acc, (w, v)| acc + v * *w)
            })
            .collect();
        GridFunction::new(self.grid, out)
    }
}

/// `φ(q + t b(q))` by four-point Lagrange interpolation; `φ` is taken as zero
/// off the grid. Real and imaginary parts are clamped to the range of the
/// stencil values, so the step never overshoots or changes sign.
#[derive(Debug, Clone)]
pub struct DriftStep {
    grid: Grid1D,
    stencils: Vec<(isize, [f64; 4])>,
}

impl DriftStep {
    pub fn new(b: &CoefficientFn, grid: Grid1D, t: f64) -> Result<Self> {
        let displacement = t * b.sup_abs();
        if displacement >= grid.half_width() / 4.0 {
            return Err(Error::DisplacementOutOfGrid {
                displacement,
                half_width: grid.half_width(),
            });
        }
        let dq = grid.dq();
        let stencils = grid
            .nodes()
            .map(|q| {
                let x = q + t * b.eval(q);
                let pos = (x + grid.half_width()) / dq;
                let base = pos.floor() as isize - 1;
                let s = pos - base as f64;
                let w = [
                    -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
                    s * (s - 2.0) * (s - 3.0) / 2.0,
                    -s * (s - 1.0) * (s - 3.0) / 2.0,
                    s * (s - 1.0) * (s - 2.0) / 6.0,
                ];
                (base, w)
            })
            .collect();
        Ok(Self { grid, stencils })
    }

    pub fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        if *phi.grid() != self.grid {
            return Err(Error::GridMismatch(
                "drift step built for another grid".into(),
            ));
        }
        let n = self.grid.len() as isize;
        let src = phi.values();
        let out = self
            .stencils
            .iter()
            .map(|&(base, w)| {
                let mut acc = Complex64::default();
                let (mut lo, mut hi) = (
                    Complex64::new(f64::INFINITY, f64::INFINITY),
                    Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
                );
                for (k, wk) in w.iter().enumerate() {
                    let i = base + k as isize;
                    let v = if (0..n).contains(&i) {
                        src[i as usize]
                    } else {
                        Complex64::default()
                    };
                    lo = Complex64::new(lo.re.min(v.re), lo.im.min(v.im));
                    hi = Complex64::new(hi.re.max(v.re), hi.im.max(v.im));
                    acc += v * *wk;
                }
                Complex64::new(acc.re.clamp(lo.re, hi.re), acc.im.clamp(lo.im, hi.im))
            })
            .collect();
        GridFunction::new(self.grid, out)
    }
}

/// `F̃(t)φ` for the Lagrangian family; rejects `t <= 0`.
pub fn lagrangian_step(
    a: &CoefficientFn,
    kernel: &TransitionKernel,
    t: f64,
    phi: &GridFunction,
) -> Result<GridFunction> {
    LagrangianStep::new(a, kernel, *phi.grid(), t)?.apply(phi)
}

/// `exp(t V) φ`.
pub fn potential_step(v: &CoefficientFn, t: f64, phi: &GridFunction) -> Result<GridFunction> {
    StepOperator::Potential { v: v.clone() }.apply(t, phi)
}

/// `φ(q + t b(q))`.
pub fn drift_step(b: &CoefficientFn, t: f64, phi: &GridFunction) -> Result<GridFunction> {
    StepOperator::Drift { b: b.clone() }.apply(t, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::Psi;

    fn grid() -> Grid1D {
        Grid1D::new(20.0, 1024).unwrap()
    }

    fn gaussian(grid: Grid1D) -> GridFunction {
        GridFunction::from_fn(grid, |q| (-q * q / 2.0).exp())
    }

    #[test]
    fn lagrangian_heat_step_matches_closed_form() {
        let g = grid();
        let out = lagrangian_step(
            &CoefficientFn::constant(1.0),
            &TransitionKernel::Gaussian,
            1.0,
            &gaussian(g),
        )
        .unwrap();
        let exact = GridFunction::from_fn(g, |q| (-q * q / 4.0).exp() / 2f64.sqrt());
        assert!(out.sup_distance(&exact).unwrap() < 1e-6);
    }

    #[test]
    fn lagrangian_cauchy_two_half_steps_equal_one_step() {
        let g = grid();
        let one = CoefficientFn::constant(1.0);
        let phi = gaussian(g);
        let half = lagrangian_step(&one, &TransitionKernel::Cauchy, 0.5, &phi).unwrap();
        let twice = lagrangian_step(&one, &TransitionKernel::Cauchy, 0.5, &half).unwrap();
        let full = lagrangian_step(&one, &TransitionKernel::Cauchy, 1.0, &phi).unwrap();
        assert!(twice.inner_sup_distance(&full).unwrap() < 1e-4);
    }

    #[test]
    fn lagrangian_preserves_constants_in_the_interior() {
        let g = grid();
        let phi = GridFunction::from_fn(g, |_| 1.0);
        let a = CoefficientFn::sinusoidal(1.0, 0.5, 1.0);
        let out = lagrangian_step(&a, &TransitionKernel::Gaussian, 0.5, &phi).unwrap();
        for j in g.inner_half() {
            assert!((out.values()[j].re - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn lagrangian_rejects_bad_inputs() {
        let g = grid();
        let phi = gaussian(g);
        assert!(lagrangian_step(
            &CoefficientFn::constant(1.0),
            &TransitionKernel::Gaussian,
            0.0,
            &phi
        )
        .is_err());
        assert!(matches!(
            lagrangian_step(
                &CoefficientFn::sinusoidal(0.5, 1.0, 1.0),
                &TransitionKernel::Gaussian,
                1.0,
                &phi
            ),
            Err(Error::UnboundedCoefficient { .. })
        ));
    }

    #[test]
    fn constant_coefficient_rescales_time() {
        let g = grid();
        let phi = gaussian(g);
        let scaled = lagrangian_step(
            &CoefficientFn::constant(0.8),
            &TransitionKernel::Cauchy,
            0.5,
            &phi,
        )
        .unwrap();
        let direct = lagrangian_step(
            &CoefficientFn::constant(1.0),
            &TransitionKernel::Cauchy,
            0.4,
            &phi,
        )
        .unwrap();
        assert_eq!(scaled, direct);
    }

    #[test]
    fn potential_examples() {
        let g = grid();
        let phi = gaussian(g);
        assert_eq!(
            potential_step(&CoefficientFn::constant(0.0), 1.0, &phi).unwrap(),
            phi
        );
        let damped = potential_step(&CoefficientFn::constant(-1.0), 1.0, &phi).unwrap();
        for (a, b) in damped.values().iter().zip(phi.values()) {
            assert!((a - b * (-1f64).exp()).norm() < 1e-16);
        }
        // V(q) = -q² as a table through the nodes
        let nodes: Vec<f64> = g.nodes().collect();
        let v = CoefficientFn::tabulated(nodes.clone(), nodes.iter().map(|q| -q * q).collect())
            .unwrap();
        let ones = GridFunction::from_fn(g, |_| 1.0);
        let out = potential_step(&v, 0.1, &ones).unwrap();
        for (val, q) in out.values().iter().zip(&nodes) {
            assert!((val.re - (-0.1 * q * q).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn drift_examples() {
        let g = grid();
        let phi = gaussian(g);
        let b = CoefficientFn::constant(1.0);
        assert_eq!(drift_step(&b, 0.0, &phi).unwrap(), phi);
        let shifted = drift_step(&b, 0.5, &phi).unwrap();
        let exact = GridFunction::from_fn(g, |q| (-(q + 0.5).powi(2) / 2.0).exp());
        // Lagrange remainder: (9/16) Δq⁴ max|φ''''| / 24 ≈ 1.6e-7 on this grid
        assert!(shifted.sup_distance(&exact).unwrap() < 2e-7);
        let fine = Grid1D::new(20.0, 4096).unwrap();
        let shifted = drift_step(&b, 0.5, &gaussian(fine)).unwrap();
        let exact = GridFunction::from_fn(fine, |q| (-(q + 0.5).powi(2) / 2.0).exp());
        assert!(shifted.sup_distance(&exact).unwrap() < 1e-8);
    }

    #[test]
    fn drift_rejects_large_displacements() {
        let g = grid();
        assert!(matches!(
            drift_step(&CoefficientFn::constant(2.0), 3.0, &gaussian(g)),
            Err(Error::DisplacementOutOfGrid { .. })
        ));
    }

    #[test]
    fn composite_examples() {
        let g = grid();
        let phi = gaussian(g);
        let empty = StepOperator::Composite { factors: vec![] };
        assert_eq!(empty.apply(0.7, &phi).unwrap(), phi);

        let v = CoefficientFn::constant(-1.0);
        let single = StepOperator::Composite {
            factors: vec![StepOperator::Potential { v: v.clone() }],
        };
        assert_eq!(
            single.apply(1.0, &phi).unwrap(),
            potential_step(&v, 1.0, &phi).unwrap()
        );

        let b = CoefficientFn::sinusoidal(0.0, 1.0, 1.0);
        let spec = SymbolSpec::constant_levy(Psi::HalfSquare).unwrap();
        let composite = StepOperator::Composite {
            factors: vec![
                StepOperator::Potential { v: v.clone() },
                StepOperator::Drift { b: b.clone() },
                StepOperator::Hamiltonian { spec: spec.clone() },
            ],
        };
        let t = 0.3;
        let by_hand = potential_step(
            &v,
            t,
            &drift_step(
                &b,
                t,
                &crate::grid::hamiltonian_step(&spec, t, &phi).unwrap(),
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(composite.apply(t, &phi).unwrap(), by_hand);
    }

    #[test]
    fn every_variant_is_identity_at_zero() {
        let g = grid();
        let phi = gaussian(g);
        let ops = [
            StepOperator::Hamiltonian {
                spec: SymbolSpec::constant_levy(Psi::Abs).unwrap(),
            },
            StepOperator::Lagrangian {
                a: CoefficientFn::constant(1.0),
                kernel: TransitionKernel::Cauchy,
            },
            StepOperator::Potential {
                v: CoefficientFn::constant(3.0),
            },
            StepOperator::Drift {
                b: CoefficientFn::constant(1.0),
            },
        ];
        for op in ops {
            assert_eq!(op.apply(0.0, &phi).unwrap(), phi);
        }
    }
}
