//! Tabulated density of the symmetric α-stable law with characteristic
//! function `exp(-|p|^α)`.
//!
//! The table stores `p_1(x)` at `2^14` nodes `x = sinh(u)`, `u` uniform, so it
//! resolves the peak and reaches far into the power-law tail with one array.
//! Each node is an inverse Fourier integral
//!
//! ```text
//! p_1(x) = (1/π) ∫_0^∞ cos(p x) exp(-p^α) dp
//! ```
//!
//! evaluated with 16-point Gauss–Legendre panels (graded towards the cusp at
//! `p = 0`). For many oscillations the half-period integrals form an
//! alternating series that is summed with Wynn's epsilon algorithm.
//! Other times follow from self-similarity, `p_t(x) = t^{-1/α} p_1(t^{-1/α} x)`.
//! Beyond the table a fitted tail `c |x|^{-1-α}` is used.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::{gauss16, WynnEpsilon};

/// Number of table nodes.
pub const TABLE_NODES: usize = 1 << 14;

/// Environment variable naming the directory for on-disk table caches.
pub const CACHE_DIR_ENV: &str = "FELLER_CACHE_DIR";

/// Relative height (to the peak) at which the table hands over to the tail.
const TAIL_HANDOVER: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct StableTable {
    alpha: f64,
    p_max: f64,
    x_max: f64,
    du: f64,
    values: Vec<f64>,
    /// `∫_0^{x_i} p_1`
    cumulative: Vec<f64>,
    tail_constant: f64,
}

impl StableTable {
    /// Builds the table by quadrature.
    pub fn compute(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let p_max = frequency_cutoff(alpha);
        let mut values: Vec<f64> = table_nodes(alpha)
            .map(|x| fourier_density(alpha, x, p_max).max(0.0))
            .collect();
        // symmetric stable laws are unimodal; flatten quadrature noise in the far tail
        for i in 1..values.len() {
            values[i] = values[i].min(values[i - 1]);
        }
        Ok(Self::from_values(alpha, p_max, values))
    }

    fn from_values(alpha: f64, p_max: f64, values: Vec<f64>) -> Self {
        let x_max = table_extent(alpha);
        let du = x_max.asinh() / (TABLE_NODES - 1) as f64;
        let mut table = Self {
            alpha,
            p_max,
            x_max,
            du,
            values,
            cumulative: Vec::new(),
            tail_constant: 0.0,
        };
        table.tail_constant = table.values[TABLE_NODES - 1] * x_max.powf(1.0 + alpha);
        table.cumulative = table.integrate_nodes();
        table
    }

    /// Returns the process-wide shared table for `alpha`, computing it (or
    /// reading it from `$FELLER_CACHE_DIR`) on first use.
    pub fn shared(alpha: f64) -> Result<Arc<Self>> {
        check_alpha(alpha)?;
        static TABLES: OnceLock<Mutex<HashMap<u64, Arc<StableTable>>>> = OnceLock::new();
        let tables = TABLES.get_or_init(Default::default);
        let key = alpha.to_bits();
        if let Some(t) = tables.lock().expect("table cache poisoned").get(&key) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(Self::from_cache_or_compute(alpha)?);
        let mut guard = tables.lock().expect("table cache poisoned");
        Ok(Arc::clone(guard.entry(key).or_insert(table)))
    }

    fn from_cache_or_compute(alpha: f64) -> Result<Self> {
        let Some(path) = cache_path(alpha) else {
            return Self::compute(alpha);
        };
        if let Ok(table) = Self::load(&path, alpha) {
            return Ok(table);
        }
        let table = Self::compute(alpha)?;
        // the cache is optional; an unwritable directory only costs a recompute
        let _ = table.save(&path);
        Ok(table)
    }

    /// Writes the binary cache: `α: f64`, `N: u64`, `p_max: f64`, then `N`
    /// density values, all little-endian.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(24 + 8 * self.values.len());
        buf.extend_from_slice(&self.alpha.to_le_bytes());
        buf.extend_from_slice(&(self.values.len() as u64).to_le_bytes());
        buf.extend_from_slice(&self.p_max.to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut file = fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    /// Reads a cache written by [`StableTable::save`], checking that the
    /// header matches what [`StableTable::compute`] would produce.
    pub fn load(path: &Path, alpha: f64) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 24 {
            return Err(Error::Cache("truncated header".into()));
        }
        let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().unwrap() };
        let file_alpha = f64::from_le_bytes(word(0));
        let n = u64::from_le_bytes(word(1)) as usize;
        let p_max = f64::from_le_bytes(word(2));
        if file_alpha.to_bits() != alpha.to_bits() {
            return Err(Error::Cache(format!("alpha {file_alpha} != {alpha}")));
        }
        if n != TABLE_NODES || p_max.to_bits() != frequency_cutoff(alpha).to_bits() {
            return Err(Error::Cache("layout does not match this build".into()));
        }
        if bytes.len() != 24 + 8 * n {
            return Err(Error::Cache(format!(
                "expected {} bytes, found {}",
                24 + 8 * n,
                bytes.len()
            )));
        }
        let values = (0..n).map(|i| f64::from_le_bytes(word(3 + i))).collect();
        Ok(Self::from_values(alpha, p_max, values))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Frequency cutoff of the inversion quadrature.
    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    /// Largest tabulated `|x|` for `t = 1`.
    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// Fitted tail constant `c` in `p_1(x) ≈ c |x|^{-1-α}` beyond the table.
    pub fn tail_constant(&self) -> f64 {
        self.tail_constant
    }

    /// Leading coefficient of the asymptotic expansion,
    /// `Γ(1+α) sin(πα/2) / π`, for comparison with the fit.
    pub fn tail_constant_asymptotic(&self) -> f64 {
        gamma(1.0 + self.alpha) * (PI * self.alpha / 2.0).sin() / PI
    }

    /// `p_1(x)`.
    pub fn unit_density(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax > self.x_max {
            return self.tail_constant * ax.powf(-1.0 - self.alpha);
        }
        self.interpolate(ax.asinh()).max(0.0)
    }

    /// `p_t(x)` by self-similarity.
    pub fn density(&self, t: f64, x: f64) -> f64 {
        let s = t.powf(1.0 / self.alpha);
        self.unit_density(x / s) / s
    }

    /// `P(X_t <= x)`.
    pub fn cdf(&self, t: f64, x: f64) -> f64 {
        let s = t.powf(1.0 / self.alpha);
        let z = x / s;
        let half = self.half_mass(z.abs());
        if z >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }

    /// Total mass of the tabulated law including the extrapolated tails.
    pub fn total_mass(&self) -> f64 {
        2.0 * (self.cumulative[TABLE_NODES - 1] + self.tail_mass(self.x_max))
    }

    fn tail_mass(&self, from: f64) -> f64 {
        if self.tail_constant == 0.0 {
            0.0
        } else {
            self.tail_constant / self.alpha * from.powf(-self.alpha)
        }
    }

    /// `∫_0^{z} p_1` for `z >= 0`.
    fn half_mass(&self, z: f64) -> f64 {
        if z >= self.x_max {
            let total = self.cumulative[TABLE_NODES - 1] + self.tail_mass(self.x_max);
            return total - self.tail_mass(z);
        }
        let u = z.asinh();
        let i = ((u / self.du) as usize).min(TABLE_NODES - 2);
        let u0 = i as f64 * self.du;
        self.cumulative[i] + self.segment_integral(u0, u)
    }

    fn integrate_nodes(&self) -> Vec<f64> {
        let mut cum = Vec::with_capacity(TABLE_NODES);
        cum.push(0.0);
        let mut acc = 0.0;
        for i in 0..TABLE_NODES - 1 {
            let u0 = i as f64 * self.du;
            acc += self.segment_integral(u0, u0 + self.du);
            cum.push(acc);
        }
        cum
    }

    /// `∫ p_1(sinh u) cosh u du` over `[u0, u1]` using the interpolant.
    fn segment_integral(&self, u0: f64, u1: f64) -> f64 {
        if u1 <= u0 {
            return 0.0;
        }
        // the interpolant is cubic in u, cosh is smooth: 4 points suffice
        const NODES: [f64; 4] = [
            -0.861_136_311_594_052_6,
            -0.339_981_043_584_856_3,
            0.339_981_043_584_856_3,
            0.861_136_311_594_052_6,
        ];
        const WEIGHTS: [f64; 4] = [
            0.347_854_845_137_453_9,
            0.652_145_154_862_546_1,
            0.652_145_154_862_546_1,
            0.347_854_845_137_453_9,
        ];
        let half = 0.5 * (u1 - u0);
        let mid = 0.5 * (u1 + u0);
        NODES
            .iter()
            .zip(WEIGHTS)
            .map(|(&n, w)| {
                let u = mid + half * n;
                w * self.interpolate(u).max(0.0) * u.cosh()
            })
            .sum::<f64>()
            * half
    }

    /// Cubic Lagrange interpolation in `u`, reflecting across `u = 0`.
    fn interpolate(&self, u: f64) -> f64 {
        let pos = u / self.du;
        let last = TABLE_NODES as isize - 1;
        let base = (pos.floor() as isize).min(last - 2) - 1;
        let base = base.min(last - 3);
        let s = pos - base as f64;
        let node = |k: isize| self.values[(base + k).unsigned_abs().min(last as usize)];
        let (f0, f1, f2, f3) = (node(0), node(1), node(2), node(3));
        // nodes at 0, 1, 2, 3
        let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
        let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
        let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
        let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
        f0 * l0 + f1 * l1 + f2 * l2 + f3 * l3
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

fn cache_path(alpha: f64) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_DIR_ENV)?;
    Some(PathBuf::from(dir).join(format!("stable_{:016x}.bin", alpha.to_bits())))
}

/// `p_max` with `exp(-p_max^α) < 1e-16`.
fn frequency_cutoff(alpha: f64) -> f64 {
    // e^{-37} ≈ 8.5e-17
    37f64.powf(1.0 / alpha)
}

/// Table extent: where the leading tail term drops below `1e-12` of the peak.
fn table_extent(alpha: f64) -> f64 {
    if alpha >= 2.0 {
        // exp(-x²/4) underflows long before this
        return 40.0;
    }
    let peak = gamma(1.0 + 1.0 / alpha) / PI;
    let c = gamma(1.0 + alpha) * (PI * alpha / 2.0).sin() / PI;
    (c / (TAIL_HANDOVER * peak))
        .powf(1.0 / (1.0 + alpha))
        .clamp(40.0, 1e12)
}

fn table_nodes(alpha: f64) -> impl Iterator<Item = f64> {
    let du = table_extent(alpha).asinh() / (TABLE_NODES - 1) as f64;
    (0..TABLE_NODES).map(move |i| (i as f64 * du).sinh())
}

/// `(1/π) ∫_0^∞ cos(p x) exp(-p^α) dp`, truncated at `p_max`.
pub(crate) fn fourier_density(alpha: f64, x: f64, p_max: f64) -> f64 {
    let x = x.abs();
    let integrand = |p: f64| (-p.powf(alpha)).exp() * (p * x).cos();
    if x == 0.0 || x * p_max / PI <= 200.0 {
        let half_period = if x == 0.0 {
            f64::INFINITY
        } else {
            PI / (2.0 * x)
        };
        return integrate_graded(alpha, 0.0, p_max, half_period, integrand) / PI;
    }
    // zeros of cos(p x) at (k + ½)π/x
    let half = PI / (2.0 * x);
    let mut sum = integrate_graded(alpha, 0.0, half, half, integrand);
    let mut eps = WynnEpsilon::new();
    eps.push(sum);
    for k in 1usize.. {
        let lo = (2 * k - 1) as f64 * half;
        if lo >= p_max {
            return sum / PI;
        }
        let hi = ((2 * k + 1) as f64 * half).min(p_max);
        sum += integrate_graded(alpha, lo, hi, half, integrand);
        let est = eps.push(sum);
        if k >= 6 && eps.delta() <= 1e-18 + 1e-13 * est.abs() {
            return est / PI;
        }
        if k >= 500 {
            return est / PI;
        }
    }
    unreachable!()
}

/// Integrates over `[a, b]` with panels no longer than the local amplitude
/// scale, the oscillation half-period or the distance from the origin.
fn integrate_graded(alpha: f64, a: f64, b: f64, half_period: f64, f: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss16();
    let mut total = 0.0;
    let mut cur = a;
    let step = |p: f64| -> f64 {
        let amplitude_scale = 4.0 * p.powf(1.0 - alpha) / alpha;
        p.min(half_period).min(amplitude_scale)
    };
    if a == 0.0 {
        let first = b.min(half_period).min(1.0);
        // geometric panels [first·2^{-k-1}, first·2^{-k}] down to 1e-18
        let mut hi = first;
        let mut pieces = Vec::new();
        while hi > 1e-18 {
            pieces.push(hi);
            hi *= 0.5;
        }
        for &hi in pieces.iter().rev() {
            total += rule.integrate(0.5 * hi, hi, &f);
        }
        cur = first;
    }
    while cur < b {
        let next = (cur + step(cur)).min(b);
        total += rule.integrate(cur, next, &f);
        cur = next;
    }
    total
}
