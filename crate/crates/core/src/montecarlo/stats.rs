//! Kolmogorov–Smirnov goodness-of-fit tests with asymptotic critical values.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// `c(α) = √(−½ ln(α/2))`, so the rejection region is `D > c(α)·√(1/n_eff)`.
pub fn ks_coefficient(level: f64) -> f64 {
    (-0.5 * (level / 2.0).ln()).sqrt()
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// One-sample test of `samples` against the continuous `cdf`.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64, level: f64) -> KsTest {
    let xs = sorted(samples);
    let n = xs.len() as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let critical = ks_coefficient(level) / n.sqrt();
    KsTest {
        statistic,
        critical,
        pass: statistic <= critical,
    }
}

/// Two-sample test that `a` and `b` come from the same law.
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> KsTest {
    let (xa, xb) = (sorted(a), sorted(b));
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut statistic: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        statistic = statistic.max((i as f64 / na - j as f64 / nb).abs());
    }
    let critical = ks_coefficient(level) * ((na + nb) / (na * nb)).sqrt();
    KsTest {
        statistic,
        critical,
        pass: statistic <= critical,
    }
}
