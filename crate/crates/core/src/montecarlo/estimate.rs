use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::chain::{check_chain_args, IncrementLaw};
use crate::error::{Error, Result};
use crate::symbol::{CoefficientFn, SymbolSpec};

/// Paths per shard. Fixed, so results do not depend on the thread count.
pub const SHARD_PATHS: usize = 4096;

pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√n_paths`.
    pub std_error: f64,
    pub n_paths: usize,
    pub n_steps: usize,
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub(crate) fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub(crate) fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Moments {
            count,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * w,
        }
    }

    pub(crate) fn estimate(&self, n_steps: usize) -> McEstimate {
        let var = if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error: (var.max(0.0) / self.count as f64).sqrt(),
            n_paths: self.count,
            n_steps,
        }
    }
}

/// The random stream of one shard, derived from `(seed, shard)`.
pub fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    rng
}

pub(crate) fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths < MIN_PATHS {
        return Err(Error::invalid(
            "n_paths",
            format!("must be at least {MIN_PATHS}, got {n_paths}"),
        ));
    }
    Ok(())
}

/// Runs `path` once per sample, sharded, and merges in shard order.
pub(crate) fn sharded<G>(n_paths: usize, seed: u64, path: G) -> Result<Moments>
where
    G: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let shards = n_paths.div_ceil(SHARD_PATHS);
    let parts = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = shard_rng(seed, shard);
            let len = SHARD_PATHS.min(n_paths - shard * SHARD_PATHS);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(path(&mut rng)?);
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().fold(Moments::default(), Moments::merge))
}

/// Mean of `f(Y(n))` over frozen-coefficient chains started at `q0`.
/// `f` must be bounded.
pub fn expectation_estimate<F>(
    spec: &SymbolSpec,
    q0: f64,
    t: f64,
    n: usize,
    f: F,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_chain_args(spec, t, n)?;
    check_paths(n_paths)?;
    let dt = t / n as f64;
    let m = sharded(n_paths, seed, |rng| {
        let mut y = q0;
        for _ in 0..n {
            y += IncrementLaw::of(&spec.freeze(y), dt)?.sample(rng);
        }
        Ok(f(y))
    })?;
    Ok(m.estimate(n))
}

/// `exp(Σ V(Y_k) dt + Σ b(Y_k) ΔY_k − ½ Σ b(Y_k)² dt)` over a path, with the
/// integrands taken at the left endpoint of each step.
pub fn girsanov_weight(positions: &[f64], dt: f64, v: &CoefficientFn, b: &CoefficientFn) -> f64 {
    let mut log_w = 0.0;
    for w in positions.windows(2) {
        let (y, dy) = (w[0], w[1] - w[0]);
        let bk = b.eval(y);
        log_w += v.eval(y) * dt + bk * dy - 0.5 * bk * bk * dt;
    }
    log_w.exp()
}

/// Feynman–Kac estimate with potential `v` and Girsanov drift `b` under
/// standard Brownian motion (increment variance `t/n`).
#[allow(clippy::too_many_arguments)]
pub fn girsanov_estimate<F>(
    q0: f64,
    t: f64,
    n: usize,
    f: F,
    v: &CoefficientFn,
    b: &CoefficientFn,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::invalid("t", format!("must be positive, got {t}")));
    }
    check_paths(n_paths)?;
    let dt = t / n as f64;
    let sd = dt.sqrt();
    let m = sharded(n_paths, seed, |rng| {
        let mut y = q0;
        let mut log_w = 0.0;
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            let dy = sd * z;
            let bk = b.eval(y);
            log_w += v.eval(y) * dt + bk * dy - 0.5 * bk * bk * dt;
            y += dy;
        }
        Ok(log_w.exp() * f(y))
    })?;
    Ok(m.estimate(n))
}

/// One row of an estimates CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct McRecord {
    pub label: String,
    pub estimate: McEstimate,
    pub seed: u64,
}

/// CSV with columns `label,mean,std_error,n_paths,n_steps,seed`.
pub fn write_estimates_csv<W: Write>(records: &[McRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let err = |e: csv::Error| Error::Csv(e.to_string());
    w.write_record(["label", "mean", "std_error", "n_paths", "n_steps", "seed"])
        .map_err(err)?;
    for r in records {
        w.write_record([
            r.label.clone(),
            format!("{:.16e}", r.estimate.mean),
            format!("{:.16e}", r.estimate.std_error),
            r.estimate.n_paths.to_string(),
            r.estimate.n_steps.to_string(),
            r.seed.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::Psi;

    fn brownian() -> SymbolSpec {
        SymbolSpec::fractional_power(2.0, CoefficientFn::constant(0.5)).unwrap()
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (a, b) = xs.split_at(377);
        let mut ma = Moments::default();
        let mut mb = Moments::default();
        a.iter().for_each(|&x| ma.push(x));
        b.iter().for_each(|&x| mb.push(x));
        let merged = ma.merge(mb);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.m2 - whole.m2).abs() < 1e-9 * whole.m2);
    }

    #[test]
    fn constant_f_has_zero_error() {
        let est = expectation_estimate(&brownian(), 0.0, 1.0, 8, |_| 1.0, 5000, 3).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.n_paths, 5000);
        assert_eq!(est.n_steps, 8);
    }

    #[test]
    fn odd_f_is_centered() {
        let est = expectation_estimate(&brownian(), 0.0, 1.0, 4, |x| x, 20_000, 11).unwrap();
        assert!(est.mean.abs() <= 3.0 * est.std_error);
    }

    #[test]
    fn identical_seed_is_bit_identical() {
        let a = expectation_estimate(&brownian(), 0.2, 1.0, 4, |x| x.cos(), 9000, 5).unwrap();
        let b = expectation_estimate(&brownian(), 0.2, 1.0, 4, |x| x.cos(), 9000, 5).unwrap();
        assert_eq!(a, b);
        let c = expectation_estimate(&brownian(), 0.2, 1.0, 4, |x| x.cos(), 9000, 6).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn too_few_paths_rejected() {
        assert!(expectation_estimate(&brownian(), 0.0, 1.0, 4, |x| x, 99, 1).is_err());
    }

    #[test]
    fn relativistic_has_no_sampling_law() {
        let spec = SymbolSpec::relativistic(1.0, CoefficientFn::constant(1.0)).unwrap();
        assert!(matches!(
            expectation_estimate(&spec, 0.0, 1.0, 4, |x| x, 100, 1),
            Err(Error::NoSamplingLaw(_))
        ));
    }

    #[test]
    fn girsanov_without_perturbation_reduces_to_expectation() {
        let zero = CoefficientFn::constant(0.0);
        let spec = SymbolSpec::constant_levy(Psi::HalfSquare).unwrap();
        let f = |x: f64| (-x * x).exp();
        let g = girsanov_estimate(0.0, 1.0, 16, f, &zero, &zero, 20_000, 8).unwrap();
        let e = expectation_estimate(&spec, 0.0, 1.0, 16, f, 20_000, 8).unwrap();
        let tol = 3.0 * (g.std_error.powi(2) + e.std_error.powi(2)).sqrt();
        assert!((g.mean - e.mean).abs() <= tol);
    }

    #[test]
    fn constant_potential_is_a_constant_factor() {
        let zero = CoefficientFn::constant(0.0);
        let v = CoefficientFn::constant(-0.7);
        let spec = SymbolSpec::constant_levy(Psi::HalfSquare).unwrap();
        let f = |x: f64| (-x * x).exp();
        let g = girsanov_estimate(0.0, 1.0, 16, f, &v, &zero, 20_000, 2).unwrap();
        let e = expectation_estimate(&spec, 0.0, 1.0, 16, f, 20_000, 2).unwrap();
        let scaled = (-0.7f64).exp() * e.mean;
        assert!((g.mean - scaled).abs() <= 3.0 * g.std_error.max(1e-15));
    }

    #[test]
    fn csv_layout() {
        let rec = McRecord {
            label: "heat".into(),
            estimate: McEstimate {
                mean: 0.5,
                std_error: 0.01,
                n_paths: 100,
                n_steps: 4,
            },
            seed: 7,
        };
        let mut buf = Vec::new();
        write_estimates_csv(&[rec], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "label,mean,std_error,n_paths,n_steps,seed");
        assert!(lines[1].starts_with("heat,") && lines[1].ends_with(",100,4,7"));
    }
}
