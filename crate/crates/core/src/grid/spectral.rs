//! The step `F(t)φ(q) = (2π)^{-1/2} ∫ exp(i p q) exp(-t H(q, p)) φ̂(p) dp`.
//!
//! For symbols that do not depend on `q` this is a Fourier multiplier and
//! costs two FFTs. Otherwise every output node gets its own inverse sum,
//! `O(N²)`, evaluated from a cached `N × N` table of `exp(-t H(q_j, p_k))`
//! (8 bytes per entry). Each row is summed pairwise in a fixed order, so the
//! result does not depend on the thread count.

use num_complex::Complex64;
use rayon::prelude::*;

use super::{FourierPlan, Grid1D, GridFunction};
use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;
use crate::symbol::SymbolSpec;

#[derive(Debug, Clone)]
enum Propagator {
    /// `exp(-t ψ(p_k))` per centered frequency.
    Multiplier(Vec<f64>),
    /// Row-major `exp(-t H(q_j, p_k))`.
    Table(Vec<f64>),
}

/// `F(t)` for a fixed symbol, grid and `t`, ready to be applied repeatedly.
#[derive(Debug, Clone)]
pub struct HamiltonianStep {
    plan: FourierPlan,
    propagator: Propagator,
    /// `exp(2πi m/N)`
    twiddles: Vec<Complex64>,
}

impl HamiltonianStep {
    pub fn new(spec: &SymbolSpec, grid: Grid1D, t: f64) -> Result<Self> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::NegativeTime(t));
        }
        let n = grid.len();
        let propagator = if spec.is_q_independent() {
            let frozen = spec.freeze(0.0);
            Propagator::Multiplier(
                grid.frequencies()
                    .map(|p| (-t * frozen.eval(p)).exp())
                    .collect(),
            )
        } else {
            let freqs: Vec<f64> = grid.frequencies().collect();
            let mut table = vec![0.0; n * n];
            table.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
                let frozen = spec.freeze(grid.node(j));
                for (cell, &p) in row.iter_mut().zip(&freqs) {
                    *cell = (-t * frozen.eval(p)).exp();
                }
            });
            Propagator::Table(table)
        };
        let twiddles = (0..n)
            .map(|m| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / n as f64))
            .collect();
        Ok(Self {
            plan: FourierPlan::new(grid),
            propagator,
            twiddles,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        self.plan.grid()
    }

    pub fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        let mut hat = self.plan.forward(phi)?;
        match &self.propagator {
            Propagator::Multiplier(mult) => {
                for (v, m) in hat.values_mut().iter_mut().zip(mult) {
                    *v *= *m;
                }
                self.plan.inverse(&hat)
            }
            Propagator::Table(table) => {
                let grid = *self.grid();
                let n = grid.len();
                let mask = n - 1;
                // fold exp(-i p_k L) = (-1)^s into the coefficients
                let coeffs: Vec<Complex64> = hat
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(s, v)| if s % 2 == 0 { *v } else { -*v })
                    .collect();
                let scale = grid.dp() / (2.0 * std::f64::consts::PI).sqrt();
                let mut out = vec![Complex64::default(); n];
                out.par_iter_mut().enumerate().for_each_init(
                    || vec![Complex64::default(); n],
                    |terms, (j, slot)| {
                        let row = &table[j * n..(j + 1) * n];
                        // exp(i p_k q_j) ∝ ω^{k j}, k = s - N/2 ≡ s + N/2
                        let step = j & mask;
                        let mut idx = ((n / 2) * j) & mask;
                        for s in 0..n {
                            terms[s] = self.twiddles[idx] * (coeffs[s] * row[s]);
                            idx = (idx + step) & mask;
                        }
                        *slot = pairwise_sum(terms) * scale;
                    },
                );
                GridFunction::new(grid, out)
            }
        }
    }
}

/// One-shot `F(t)φ`.
pub fn hamiltonian_step(spec: &SymbolSpec, t: f64, phi: &GridFunction) -> Result<GridFunction> {
    HamiltonianStep::new(spec, *phi.grid(), t)?.apply(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{CoefficientFn, Psi};

    fn gaussian(grid: Grid1D) -> GridFunction {
        GridFunction::from_fn(grid, |q| (-q * q / 2.0).exp())
    }

    #[test]
    fn zero_symbol_is_identity() {
        let grid = Grid1D::new(20.0, 256).unwrap();
        let phi = gaussian(grid);
        let spec = SymbolSpec::constant_levy(Psi::Zero).unwrap();
        let out = hamiltonian_step(&spec, 3.0, &phi).unwrap();
        assert!(out.sup_distance(&phi).unwrap() < 1e-12);
    }

    #[test]
    fn zero_time_is_identity_for_q_dependent_symbol() {
        let grid = Grid1D::new(20.0, 256).unwrap();
        let phi = gaussian(grid);
        let spec = SymbolSpec::relativistic(1.5, CoefficientFn::sinusoidal(1.0, 0.5, 1.0)).unwrap();
        let out = hamiltonian_step(&spec, 0.0, &phi).unwrap();
        assert!(out.sup_distance(&phi).unwrap() < 1e-12);
    }

    #[test]
    fn heat_step_matches_closed_form() {
        let grid = Grid1D::new(20.0, 1024).unwrap();
        let spec = SymbolSpec::constant_levy(Psi::HalfSquare).unwrap();
        let out = hamiltonian_step(&spec, 1.0, &gaussian(grid)).unwrap();
        for (j, q) in grid.nodes().enumerate() {
            if q.abs() <= 10.0 {
                let exact = (-q * q / 4.0).exp() / 2f64.sqrt();
                assert!((out.values()[j].re - exact).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn direct_sum_agrees_with_multiplier_path() {
        // constant on the grid, but not flagged q-independent
        let grid = Grid1D::new(20.0, 256).unwrap();
        let phi = GridFunction::from_fn(grid, |q| (-(q - 1.0).powi(2)).exp());
        let fast = SymbolSpec::fractional_power(1.5, CoefficientFn::constant(0.7)).unwrap();
        let slow = SymbolSpec::fractional_power(
            1.5,
            CoefficientFn::tabulated(vec![-1e3, -999.0, 999.0, 1e3], vec![0.9, 0.7, 0.7, 0.9])
                .unwrap(),
        )
        .unwrap();
        assert!(fast.is_q_independent());
        assert!(!slow.is_q_independent());
        let a = hamiltonian_step(&fast, 0.4, &phi).unwrap();
        let b = hamiltonian_step(&slow, 0.4, &phi).unwrap();
        assert!(a.sup_distance(&b).unwrap() < 1e-13);
    }

    #[test]
    fn rejects_negative_time() {
        let grid = Grid1D::new(20.0, 64).unwrap();
        let spec = SymbolSpec::constant_levy(Psi::Abs).unwrap();
        assert!(matches!(
            hamiltonian_step(&spec, -0.1, &gaussian(grid)),
            Err(Error::NegativeTime(_))
        ));
    }
}
