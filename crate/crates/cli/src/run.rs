//! Subcommand drivers. Each writes its files into an output directory and
//! stamps them with the config hash.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use feller_core::chernoff::{
    convergence_study, iterate, write_convergence_csv, Reference, StepOperator,
};
use feller_core::grid::GridFunction;
use feller_core::kernels::TransitionKernel;
use feller_core::montecarlo::{
    expectation_estimate, girsanov_estimate, shard_rng, write_estimates_csv, McRecord,
};
use feller_core::symbol::{check_growth_bound, check_negative_definite, CoefficientFn, SymbolSpec};
use rand::Rng;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{build_coefficient, build_symbol, Estimator, ExperimentConfig, StepConfig};
use crate::error::{CliError, Result};

/// SHA-256 of the canonical JSON of `cfg`, ignoring the output path.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut canonical = cfg.clone();
    canonical.output = None;
    // serde_json::Value maps are sorted by key
    let value = serde_json::to_value(&canonical).expect("config serializes");
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn stamped_csv(
    hash: &str,
    body: impl FnOnce(&mut Vec<u8>) -> feller_core::Result<()>,
) -> Result<Vec<u8>> {
    let mut buf = format!("# config_hash={hash}\n").into_bytes();
    body(&mut buf)?;
    Ok(buf)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn required_n(cfg: &ExperimentConfig) -> Result<usize> {
    cfg.n
        .ok_or_else(|| CliError::config("n", "required for this subcommand"))
}

#[derive(Debug, Clone, Serialize)]
struct TailFlag {
    alpha: f64,
    fitted: f64,
    asymptotic: f64,
    relative_gap: f64,
}

fn stable_tails(op: &StepOperator, out: &mut Vec<TailFlag>) {
    match op {
        StepOperator::Lagrangian {
            kernel: TransitionKernel::Stable(table),
            ..
        } => {
            let (fitted, asymptotic) = (table.tail_constant(), table.tail_constant_asymptotic());
            out.push(TailFlag {
                alpha: table.alpha(),
                fitted,
                asymptotic,
                relative_gap: (fitted / asymptotic - 1.0).abs(),
            });
        }
        StepOperator::Composite { factors } => factors.iter().for_each(|f| stable_tails(f, out)),
        _ => {}
    }
}

/// `evolve.csv` (`q,re,im`) and `evolve.json`.
pub fn run_evolve(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let n = required_n(cfg)?;
    let grid = cfg.grid()?;
    let op = cfg.operator()?;
    let phi = cfg.initial_datum(grid)?;
    let hash = config_hash(cfg);
    prepare_dir(out)?;

    let start = Instant::now();
    let result = iterate(&op, cfg.t, n, &phi)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    let mut tails = Vec::new();
    stable_tails(&op, &mut tails);
    let csv_path = out.join("evolve.csv");
    write_file(
        &csv_path,
        &stamped_csv(&hash, |buf| result.state.write_csv(buf))?,
    )?;
    let json_path = out.join("evolve.json");
    write_json(
        &json_path,
        &json!({
            "config": cfg,
            "config_hash": hash,
            "n": n,
            "t": cfg.t,
            "wall_ms": wall_ms,
            "sup_norms": result.sup_norms,
            "stable_tail_constants": tails,
        }),
    )?;
    Ok(vec![csv_path, json_path])
}

fn reference(cfg: &ExperimentConfig) -> Result<Reference> {
    match cfg.reference.as_deref() {
        None | Some("self") => Ok(Reference::SelfLargest),
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
            let g = GridFunction::read_csv(file)
                .map_err(|e| CliError::config("reference", e.to_string()))?;
            if *g.grid() != cfg.grid()? {
                return Err(CliError::config("reference", "grid differs from `grid`"));
            }
            Ok(Reference::Exact(g))
        }
    }
}

/// `converge.csv`, plus `converge_tsweep.csv` when `t_sweep` is set.
pub fn run_converge(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let n_list = cfg
        .n_list
        .clone()
        .ok_or_else(|| CliError::config("n_list", "required for converge"))?;
    let grid = cfg.grid()?;
    let op = cfg.operator()?;
    let phi = cfg.initial_datum(grid)?;
    let reference = reference(cfg)?;
    let hash = config_hash(cfg);
    prepare_dir(out)?;

    let rows = convergence_study(&op, cfg.t, &n_list, &reference, &phi)?;
    let path = out.join("converge.csv");
    write_file(
        &path,
        &stamped_csv(&hash, |buf| write_convergence_csv(&rows, buf))?,
    )?;
    let mut written = vec![path];

    if let Some(ts) = &cfg.t_sweep {
        let mut text =
            format!("# config_hash={hash}\nt,n,sup_error,l2_error,observed_order,wall_ms\n");
        for &t in ts {
            for r in convergence_study(&op, t, &n_list, &Reference::SelfLargest, &phi)? {
                let order = r
                    .observed_order
                    .map_or("NaN".to_string(), |o| format!("{o:.16e}"));
                writeln!(
                    text,
                    "{t:.16e},{},{:.16e},{:.16e},{order},{:.16e}",
                    r.n, r.sup_error, r.l2_error, r.wall_ms
                )
                .expect("write to string");
            }
        }
        let path = out.join("converge_tsweep.csv");
        write_file(&path, text.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// `mc.csv`: one estimate of `E[f(Y_t) · weight]` per starting point, with
/// `f` the initial datum.
pub fn run_mc(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let mc = cfg
        .mc
        .as_ref()
        .ok_or_else(|| CliError::config("mc", "required for mc"))?;
    let n = required_n(cfg)?;
    let f = cfg.initial_fn()?;
    let hash = config_hash(cfg);
    let coefficient = |c: &Option<_>, field| match c {
        Some(c) => build_coefficient(c, field),
        None => Ok(CoefficientFn::constant(0.0)),
    };
    let label = mc.label.clone().unwrap_or_else(|| match mc.estimator {
        Estimator::Expectation => "expectation".into(),
        Estimator::Girsanov => "girsanov".into(),
    });

    let records = match mc.estimator {
        Estimator::Expectation => {
            if mc.v.is_some() || mc.b.is_some() {
                return Err(CliError::config(
                    "mc.estimator",
                    "`v` and `b` need estimator = \"girsanov\"",
                ));
            }
            let spec = cfg.symbol()?;
            mc.q0
                .to_vec()
                .into_iter()
                .map(|q0| {
                    let estimate =
                        expectation_estimate(&spec, q0, cfg.t, n, &f, mc.n_paths, mc.seed)?;
                    Ok(McRecord {
                        label: format!("{label}@q0={q0}"),
                        estimate,
                        seed: mc.seed,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        Estimator::Girsanov => {
            let v = coefficient(&mc.v, "mc.v")?;
            let b = coefficient(&mc.b, "mc.b")?;
            mc.q0
                .to_vec()
                .into_iter()
                .map(|q0| {
                    let estimate =
                        girsanov_estimate(q0, cfg.t, n, &f, &v, &b, mc.n_paths, mc.seed)?;
                    Ok(McRecord {
                        label: format!("{label}@q0={q0}"),
                        estimate,
                        seed: mc.seed,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    prepare_dir(out)?;
    let path = out.join("mc.csv");
    write_file(
        &path,
        &stamped_csv(&hash, |buf| write_estimates_csv(&records, buf))?,
    )?;
    Ok(vec![path])
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub violations: Vec<serde_json::Value>,
}

impl Check {
    fn new(
        name: impl Into<String>,
        violations: Vec<serde_json::Value>,
        detail: impl Into<String>,
    ) -> Self {
        Check {
            name: name.into(),
            pass: violations.is_empty(),
            detail: detail.into(),
            violations,
        }
    }
}

/// Momenta `0, ±10^k` for `k` in `[-3, 3]` on a log grid.
fn momentum_samples() -> Vec<f64> {
    let mut ps = vec![0.0];
    for k in 0..=60 {
        let p = 10f64.powf(-3.0 + 0.1 * k as f64);
        ps.extend([p, -p]);
    }
    ps
}

const MAX_VIOLATIONS: usize = 20;
const SYMBOL_TOL: f64 = 1e-12;

fn symbol_checks(name: &str, spec: &SymbolSpec, seed: u64, checks: &mut Vec<Check>) -> Result<()> {
    let ps = momentum_samples();
    let qs = spec.q_sweep();

    let growth = check_growth_bound(spec, &ps)?;
    checks.push(Check {
        name: format!("{name}: growth bound"),
        pass: growth.pass,
        detail: format!(
            "κ fitted {:e}, bound {:e}",
            growth.kappa_fit, growth.kappa_bound
        ),
        violations: growth
            .violation
            .map(|(q, p)| vec![json!({ "q": q, "p": p })])
            .unwrap_or_default(),
    });

    let mut rng = shard_rng(seed, 0);
    let mut bad = Vec::new();
    let sets = 16;
    for &q in &qs {
        for _ in 0..sets {
            let m = rng.random_range(2..=8);
            let pts: Vec<f64> = (0..m).map(|_| rng.random_range(-10.0..10.0)).collect();
            if !check_negative_definite(spec, q, &pts)? && bad.len() < MAX_VIOLATIONS {
                bad.push(json!({ "q": q, "p_points": pts }));
            }
        }
    }
    checks.push(Check::new(
        format!("{name}: negative definiteness"),
        bad,
        format!("{} q values × {sets} seeded point sets", qs.len()),
    ));

    let mut zero = Vec::new();
    let mut real = Vec::new();
    let mut even = Vec::new();
    for &q in &qs {
        let h0 = spec.eval(q, 0.0);
        if h0.norm() > SYMBOL_TOL && zero.len() < MAX_VIOLATIONS {
            zero.push(json!({ "q": q, "value": [h0.re, h0.im] }));
        }
        for &p in &ps {
            let h = spec.eval(q, p);
            let scale = 1.0 + h.norm();
            if h.re < -SYMBOL_TOL * scale && real.len() < MAX_VIOLATIONS {
                real.push(json!({ "q": q, "p": p, "re": h.re }));
            }
            if (h - spec.eval(q, -p)).norm() > SYMBOL_TOL * scale && even.len() < MAX_VIOLATIONS {
                even.push(json!({ "q": q, "p": p }));
            }
        }
    }
    checks.push(Check::new(format!("{name}: H(q,0) = 0"), zero, ""));
    checks.push(Check::new(format!("{name}: Re H >= 0"), real, ""));
    checks.push(Check::new(format!("{name}: evenness in p"), even, ""));

    coefficient_checks(name, spec, checks);
    Ok(())
}

fn bound_check(name: String, c: &CoefficientFn, strict: bool, checks: &mut Vec<Check>) {
    let (lo, hi) = c.bounds();
    let ok = hi.is_finite() && if strict { lo > 0.0 } else { lo >= 0.0 };
    let violations = if ok {
        vec![]
    } else {
        vec![json!({ "lo": lo, "hi": hi })]
    };
    let relation = if strict { "0 <" } else { "0 <=" };
    checks.push(Check::new(
        name,
        violations,
        format!("{relation} {lo:e} <= {hi:e} < ∞"),
    ));
}

fn coefficient_checks(name: &str, spec: &SymbolSpec, checks: &mut Vec<Check>) {
    match spec {
        SymbolSpec::FractionalPower { a, .. } => {
            bound_check(format!("{name}: bounds of a"), a, false, checks)
        }
        SymbolSpec::Relativistic { m, .. } => {
            bound_check(format!("{name}: bounds of m"), m, true, checks)
        }
        SymbolSpec::ConstantLevy { .. } => {}
        SymbolSpec::Scaled { a, inner } => {
            bound_check(format!("{name}: bounds of a"), a, false, checks);
            coefficient_checks(&format!("{name}.inner"), inner, checks);
        }
    }
}

/// Checks the symbol and the step recipe without iterating; writes
/// `validate.json` and fails with exit code 4 if any check fails.
pub fn run_validate(cfg: &ExperimentConfig, out: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    let grid = cfg.grid()?;
    let hash = config_hash(cfg);
    let mut checks = Vec::new();

    if let Some(s) = &cfg.symbol {
        symbol_checks("symbol", &build_symbol(s, "symbol")?, seed, &mut checks)?;
    }
    let smallest_n = cfg
        .n_list
        .iter()
        .flatten()
        .copied()
        .chain(cfg.n)
        .min()
        .unwrap_or(1);
    let tau = cfg.t / smallest_n as f64;
    for (i, step) in cfg.steps.iter().enumerate() {
        let field = format!("steps[{i}]");
        match step {
            StepConfig::Hamiltonian { symbol: Some(s) } => {
                symbol_checks(
                    &field,
                    &build_symbol(s, &format!("{field}.symbol"))?,
                    seed,
                    &mut checks,
                )?;
            }
            StepConfig::Hamiltonian { symbol: None } => {}
            StepConfig::Lagrangian { a, .. } => {
                let a = build_coefficient(a, &format!("{field}.a"))?;
                bound_check(format!("{field}: bounds of a"), &a, true, &mut checks);
            }
            StepConfig::Potential { v } => {
                let v = build_coefficient(v, &format!("{field}.v"))?;
                let (lo, hi) = v.bounds();
                let violations = if lo.is_finite() && hi.is_finite() {
                    vec![]
                } else {
                    vec![json!({ "lo": lo, "hi": hi })]
                };
                checks.push(Check::new(
                    format!("{field}: bounds of v"),
                    violations,
                    format!("[{lo:e}, {hi:e}]"),
                ));
            }
            StepConfig::Drift { b } => {
                let b = build_coefficient(b, &format!("{field}.b"))?;
                let displacement = tau * b.sup_abs();
                let limit = grid.half_width() / 4.0;
                let violations = if displacement < limit {
                    vec![]
                } else {
                    vec![json!({ "displacement": displacement, "limit": limit })]
                };
                checks.push(Check::new(
                    format!("{field}: drift displacement"),
                    violations,
                    format!("τ sup|b| = {displacement:e} < L/4 = {limit:e} at τ = {tau:e}"),
                ));
            }
        }
    }

    let pass = checks.iter().all(|c| c.pass);
    prepare_dir(out)?;
    let path = out.join("validate.json");
    write_json(
        &path,
        &json!({
            "config_hash": hash,
            "seed": seed,
            "pass": pass,
            "checks": checks,
        }),
    )?;
    if pass {
        Ok(vec![path])
    } else {
        let failed: Vec<_> = checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::ValidationFailed(failed.join("; ")))
    }
}
