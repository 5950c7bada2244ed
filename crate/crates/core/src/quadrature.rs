//! Small numerical helpers shared by the kernel tables and the grid engine:
//! Gauss–Legendre rules, Wynn's epsilon extrapolation and pairwise summation.

use std::ops::Add;
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The 16-point rule, built once.
pub fn gauss16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Wynn's epsilon algorithm over a growing sequence of partial sums.
///
/// Push partial sums one at a time; `estimate` returns the most recent
/// even-column extrapolant.
#[derive(Debug, Default, Clone)]
pub struct WynnEpsilon {
    table: Vec<f64>,
    best: f64,
    prev_best: f64,
    count: usize,
}

impl WynnEpsilon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, s: f64) -> f64 {
        // table holds the last anti-diagonal: e_{k}^{(0)}, e_{k-1}^{(1)}, ...
        let mut diag = Vec::with_capacity(self.table.len() + 1);
        diag.push(s);
        let mut aux = 0.0; // e_{-1} column
        for (j, &old) in self.table.iter().enumerate() {
            let diff = diag[j] - old;
            let next = if diff.abs() < 1e-300 {
                // degenerate: keep the converged value
                f64::INFINITY
            } else {
                aux + 1.0 / diff
            };
            aux = old;
            if !next.is_finite() {
                break;
            }
            diag.push(next);
        }
        self.table = diag;
        self.count += 1;
        // even columns hold the extrapolants
        let last_even = (self.table.len() - 1) & !1;
        self.prev_best = self.best;
        self.best = self.table[last_even];
        if !self.best.is_finite() {
            self.best = s;
        }
        self.best
    }

    pub fn estimate(&self) -> f64 {
        self.best
    }

    /// Change between the two latest extrapolants.
    pub fn delta(&self) -> f64 {
        if self.count < 2 {
            f64::INFINITY
        } else {
            (self.best - self.prev_best).abs()
        }
    }
}

/// Pairwise (cascade) summation with a sequential base block.
pub fn pairwise_sum<T>(values: &[T]) -> T
where
    T: Copy + Default + Add<Output = T>,
{
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().fold(T::default(), |acc, &v| acc + v)
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}
