//! Chernoff iteration `[F(t/n)]^n φ` and empirical convergence studies.

mod step;

use std::io::Write;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

pub use step::{
    drift_step, lagrangian_step, potential_step, DriftStep, LagrangianStep, PreparedStep,
    StepOperator,
};

/// Relative slack of the blow-up guard.
pub const BLOW_UP_SLACK: f64 = 1e-3;

/// Result of `[F(t/n)]^n φ` with the sup-norm after every step.
#[derive(Debug, Clone)]
pub struct Iterate {
    pub state: GridFunction,
    pub sup_norms: Vec<f64>,
}

/// Applies `F(t/n)` `n` times. Aborts with [`Error::BlowUp`] as soon as the
/// sup-norm exceeds `exp(κ t) ‖φ‖∞ (1 + 1e-3)`.
pub fn iterate(op: &StepOperator, t: f64, n: usize, phi: &GridFunction) -> Result<Iterate> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::invalid("t", format!("must be positive, got {t}")));
    }
    let step = op.prepare(*phi.grid(), t / n as f64)?;
    let bound = (op.growth_rate() * t).exp() * phi.sup_norm() * (1.0 + BLOW_UP_SLACK);
    let mut state = phi.clone();
    let mut sup_norms = Vec::with_capacity(n);
    for iteration in 1..=n {
        state = step.apply(&state)?;
        let norm = state.sup_norm();
        if norm > bound || !norm.is_finite() {
            return Err(Error::BlowUp {
                iteration,
                norm,
                bound,
            });
        }
        sup_norms.push(norm);
    }
    Ok(Iterate { state, sup_norms })
}

/// What a convergence study measures errors against.
#[derive(Debug, Clone)]
pub enum Reference {
    /// The iterate at the largest `n` of the list.
    SelfLargest,
    Exact(GridFunction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub sup_error: f64,
    pub l2_error: f64,
    /// `ln(err(n)/err(n')) / ln(n'/n)` against the next row; `log₂` of the
    /// error ratio for doublings.
    pub observed_order: Option<f64>,
    pub wall_ms: f64,
}

/// Errors of `[F(t/n)]^n φ` on the inner half-grid for each `n`.
pub fn convergence_study(
    op: &StepOperator,
    t: f64,
    n_list: &[usize],
    reference: &Reference,
    phi: &GridFunction,
) -> Result<Vec<ConvergenceRow>> {
    if n_list.is_empty() {
        return Err(Error::invalid("n_list", "must be nonempty"));
    }
    if n_list[0] == 0 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "n_list",
            "must be strictly ascending and >= 1",
        ));
    }
    let mut states = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let start = Instant::now();
        let it = iterate(op, t, n, phi)?;
        states.push((it.state, start.elapsed().as_secs_f64() * 1e3));
    }
    let reference = match reference {
        Reference::SelfLargest => &states.last().expect("nonempty").0,
        Reference::Exact(g) => g,
    };
    let mut rows = n_list
        .iter()
        .zip(&states)
        .map(|(&n, (state, wall_ms))| {
            Ok(ConvergenceRow {
                n,
                sup_error: state.inner_sup_distance(reference)?,
                l2_error: state.inner_l2_distance(reference)?,
                observed_order: None,
                wall_ms: *wall_ms,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for i in 0..rows.len().saturating_sub(1) {
        let (e0, e1) = (rows[i].sup_error, rows[i + 1].sup_error);
        if e0 > 0.0 && e1 > 0.0 {
            let ratio = rows[i + 1].n as f64 / rows[i].n as f64;
            rows[i].observed_order = Some((e0 / e1).ln() / ratio.ln());
        }
    }
    Ok(rows)
}

/// CSV with columns `n,sup_error,l2_error,observed_order,wall_ms`; an
/// undefined order is written as `NaN`.
pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(["n", "sup_error", "l2_error", "observed_order", "wall_ms"])
        .map_err(err)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format!("{:.16e}", r.sup_error),
            format!("{:.16e}", r.l2_error),
            r.observed_order
                .map_or_else(|| "NaN".to_string(), |o| format!("{o:.16e}")),
            format!("{:.3}", r.wall_ms),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::kernels::TransitionKernel;
    use crate::symbol::{CoefficientFn, Psi, SymbolSpec};

    fn heat() -> StepOperator {
        StepOperator::Hamiltonian {
            spec: SymbolSpec::constant_levy(Psi::HalfSquare).unwrap(),
        }
    }

    fn gaussian(grid: Grid1D) -> GridFunction {
        GridFunction::from_fn(grid, |q| (-q * q / 2.0).exp())
    }

    #[test]
    fn single_step_equals_apply() {
        let g = Grid1D::new(20.0, 256).unwrap();
        let phi = gaussian(g);
        let it = iterate(&heat(), 0.8, 1, &phi).unwrap();
        assert_eq!(it.state, heat().apply(0.8, &phi).unwrap());
        assert_eq!(it.sup_norms.len(), 1);
    }

    #[test]
    fn constant_coefficient_iterates_agree() {
        let g = Grid1D::new(20.0, 1024).unwrap();
        let phi = gaussian(g);
        let one = iterate(&heat(), 1.0, 1, &phi).unwrap().state;
        for n in [2, 64] {
            let many = iterate(&heat(), 1.0, n, &phi).unwrap().state;
            assert!(many.sup_distance(&one).unwrap() < 1e-10);
        }
    }

    #[test]
    fn rejects_zero_steps() {
        let g = Grid1D::new(20.0, 64).unwrap();
        assert!(iterate(&heat(), 1.0, 0, &gaussian(g)).is_err());
    }

    #[test]
    fn blow_up_guard_fires() {
        // a growing symbol violates the contraction bound
        let g = Grid1D::new(20.0, 256).unwrap();
        let bad = StepOperator::Hamiltonian {
            spec: SymbolSpec::constant_levy(Psi::NegativeSquare).unwrap(),
        };
        assert!(matches!(
            iterate(&bad, 1.0, 8, &gaussian(g)),
            Err(Error::BlowUp { .. })
        ));
    }

    #[test]
    fn potential_growth_is_allowed_up_to_the_bound() {
        let g = Grid1D::new(20.0, 256).unwrap();
        let op = StepOperator::Potential {
            v: CoefficientFn::constant(2.0),
        };
        let it = iterate(&op, 1.0, 4, &gaussian(g)).unwrap();
        assert!((it.state.sup_norm() - 2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn self_reference_with_single_entry_is_zero() {
        let g = Grid1D::new(20.0, 128).unwrap();
        let rows =
            convergence_study(&heat(), 1.0, &[1], &Reference::SelfLargest, &gaussian(g)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].sup_error, 0.0);
        assert_eq!(rows[0].observed_order, None);
    }

    #[test]
    fn constant_coefficient_study_is_exact() {
        let g = Grid1D::new(20.0, 512).unwrap();
        let rows = convergence_study(
            &heat(),
            1.0,
            &[1, 2, 4, 8],
            &Reference::SelfLargest,
            &gaussian(g),
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.sup_error < 1e-10));
    }

    #[test]
    fn study_validates_n_list() {
        let g = Grid1D::new(20.0, 64).unwrap();
        let phi = gaussian(g);
        assert!(convergence_study(&heat(), 1.0, &[], &Reference::SelfLargest, &phi).is_err());
        assert!(convergence_study(&heat(), 1.0, &[4, 2], &Reference::SelfLargest, &phi).is_err());
        assert!(convergence_study(&heat(), 1.0, &[0, 2], &Reference::SelfLargest, &phi).is_err());
    }

    #[test]
    fn csv_layout() {
        let rows = vec![
            ConvergenceRow {
                n: 4,
                sup_error: 0.1,
                l2_error: 0.2,
                observed_order: Some(1.0),
                wall_ms: 1.5,
            },
            ConvergenceRow {
                n: 8,
                sup_error: 0.05,
                l2_error: 0.1,
                observed_order: None,
                wall_ms: 2.0,
            },
        ];
        let mut buf = Vec::new();
        write_convergence_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "n,sup_error,l2_error,observed_order,wall_ms");
        assert!(lines[2].contains(",NaN,"));
    }

    #[test]
    fn variable_lagrangian_self_convergence_shrinks() {
        let g = Grid1D::new(20.0, 512).unwrap();
        let op = StepOperator::Lagrangian {
            a: CoefficientFn::sinusoidal(1.0, 0.5, 1.0),
            kernel: TransitionKernel::Gaussian,
        };
        let rows = convergence_study(
            &op,
            1.0,
            &[2, 4, 8, 32],
            &Reference::SelfLargest,
            &gaussian(g),
        )
        .unwrap();
        assert!(rows[0].sup_error > rows[1].sup_error && rows[1].sup_error > rows[2].sup_error);
    }
}
