//! Uniform 1-D grids, grid functions and the scaled discrete Fourier transform
//!
//! ```text
//! f̂(p_k) = Δq (2π)^{-1/2} Σ_j exp(-i p_k q_j) φ(q_j)
//! φ(q_j) = Δp (2π)^{-1/2} Σ_k exp( i p_k q_j) f̂(p_k)
//! ```
//!
//! which is the Riemann sum of the unitary transform on `ℝ`.

mod spectral;

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub use spectral::{hamiltonian_step, HamiltonianStep};

/// `N` nodes `q_j = -L + jΔq` on `[-L, L)`, `Δq = 2L/N`, and `N` centered
/// frequencies `p_k = kΔp`, `k = -N/2 .. N/2 - 1`, `Δp = π/L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    half_width: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::invalid(
                "L",
                format!("must be positive, got {half_width}"),
            ));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::invalid(
                "N",
                format!("must be a power of two >= 16, got {n}"),
            ));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dq(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn dp(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    pub fn node(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dq()
    }

    /// Frequency at centered index `s` (`s = 0` is the most negative mode).
    pub fn frequency(&self, s: usize) -> f64 {
        (s as f64 - (self.n / 2) as f64) * self.dp()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.node(j))
    }

    pub fn frequencies(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(|s| self.frequency(s))
    }

    /// Indices of nodes with `|q| <= L/2`; errors are measured there.
    pub fn inner_half(&self) -> std::ops::RangeInclusive<usize> {
        // q_j = -L + jΔq, so |q_j| <= L/2 for j in [N/4, 3N/4]
        self.n / 4..=3 * self.n / 4
    }

    /// Index of the node nearest to `q`, if inside the grid.
    pub fn nearest_node(&self, q: f64) -> Option<usize> {
        let j = ((q + self.half_width) / self.dq()).round();
        (j >= 0.0 && (j as usize) < self.n).then_some(j as usize)
    }
}

/// Complex samples of a function on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::invalid("values", "non-finite entry"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![Complex64::default(); grid.len()],
        }
    }

    /// Samples a real function at the nodes.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().map(|q| Complex64::new(f(q), 0.0)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `max_j |φ(q_j)|`
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Smallest real part.
    pub fn min_re(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.re)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_real_nonnegative(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0 && v.re >= 0.0)
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    /// `max |φ - ψ|` over the inner half of the grid.
    pub fn inner_sup_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .grid
            .inner_half()
            .map(|j| (self.values[j] - other.values[j]).norm())
            .fold(0.0, f64::max))
    }

    /// Discrete `L²` distance over the inner half of the grid.
    pub fn inner_l2_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        let sq: f64 = self
            .grid
            .inner_half()
            .map(|j| (self.values[j] - other.values[j]).norm_sqr())
            .sum();
        Ok((sq * self.grid.dq()).sqrt())
    }

    /// `max |φ - ψ|` over all nodes.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }

    /// Writes `q,re,im` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["q", "re", "im"]).map_err(csv_err)?;
        for (q, v) in self.grid.nodes().zip(&self.values) {
            w.write_record([fmt17(q), fmt17(v.re), fmt17(v.im)])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the format written by [`GridFunction::write_csv`]. Lines starting
    /// with `#` are ignored. The grid is recovered from the node column.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(input);
        let headers = r.headers().map_err(csv_err)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["q", "re", "im"] {
            return Err(Error::Csv(format!(
                "expected header q,re,im, found {headers:?}"
            )));
        }
        let mut qs = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Csv("short row".into()))?
                    .trim()
                    .parse()
                    .map_err(|e| Error::Csv(format!("{e}")))
            };
            qs.push(field(0)?);
            values.push(Complex64::new(field(1)?, field(2)?));
        }
        if qs.len() < 2 {
            return Err(Error::Csv("need at least two rows".into()));
        }
        let half_width = -qs[0];
        let grid = Grid1D::new(half_width, qs.len())?;
        let dq = grid.dq();
        if qs
            .iter()
            .enumerate()
            .any(|(j, &q)| (q - grid.node(j)).abs() > 1e-9 * dq.max(1.0))
        {
            return Err(Error::Csv(
                "node column is not a uniform grid on [-L, L)".into(),
            ));
        }
        Self::new(grid, values)
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

/// Values of `f̂` at the centered frequencies of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
}

/// Cached FFT plans for one grid size.
#[derive(Clone)]
pub struct FourierPlan {
    grid: Grid1D,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FourierPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierPlan")
            .field("grid", &self.grid)
            .finish()
    }
}

impl FourierPlan {
    pub fn new(grid: Grid1D) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.len()),
            inverse: planner.plan_fft_inverse(grid.len()),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn forward(&self, phi: &GridFunction) -> Result<Spectrum> {
        if phi.grid != self.grid {
            return Err(Error::GridMismatch("plan and function grids differ".into()));
        }
        let n = self.grid.len();
        let mut buf = phi.values.clone();
        self.forward.process(&mut buf);
        let scale = self.grid.dq() / (2.0 * std::f64::consts::PI).sqrt();
        // k = s - N/2 ≡ s + N/2 (mod N); exp(-i p_k q_0) = exp(i k π) = (-1)^s
        let values = (0..n)
            .map(|s| {
                let v = buf[(s + n / 2) % n] * scale;
                if s % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        Ok(Spectrum {
            grid: self.grid,
            values,
        })
    }

    pub fn inverse(&self, spectrum: &Spectrum) -> Result<GridFunction> {
        if spectrum.grid != self.grid {
            return Err(Error::GridMismatch("plan and spectrum grids differ".into()));
        }
        let n = self.grid.len();
        let mut buf = vec![Complex64::default(); n];
        for (s, v) in spectrum.values.iter().enumerate() {
            buf[(s + n / 2) % n] = if s % 2 == 0 { *v } else { -*v };
        }
        self.inverse.process(&mut buf);
        let scale = self.grid.dp() / (2.0 * std::f64::consts::PI).sqrt();
        for v in &mut buf {
            *v *= scale;
        }
        Ok(GridFunction {
            grid: self.grid,
            values: buf,
        })
    }
}

/// Forward transform with a throwaway plan.
pub fn forward_fourier(phi: &GridFunction) -> Spectrum {
    FourierPlan::new(phi.grid)
        .forward(phi)
        .expect("plan built for this grid")
}

/// Inverse transform with a throwaway plan.
pub fn inverse_fourier(spectrum: &Spectrum) -> GridFunction {
    FourierPlan::new(spectrum.grid)
        .inverse(spectrum)
        .expect("plan built for this grid")
}
