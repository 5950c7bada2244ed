use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn presets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets")
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fellerfeynman"))
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

/// `(q, re)` pairs, skipping the hash comment and header.
fn read_grid_csv(path: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0], f[1])
        })
        .collect()
}

fn converge_column(path: &Path, col: usize) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

const BASE: &str = r#"
t = 1.0
n = 32
n_list = [4, 8, 16, 32]

[grid]
L = 20.0
N = 512

[initial]
kind = "gaussian"
"#;

const HEAT_SYMBOL: &str = r#"
[symbol]
kind = "constant-levy"
psi = "half-square"
"#;

#[test]
fn heat_evolve_writes_grid_and_metadata() {
    let out = TempDir::new().unwrap();
    let o = run("evolve", &presets().join("heat.toml"), out.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.path().join("evolve.csv")).unwrap();
    assert!(text.starts_with("# config_hash="));
    assert_eq!(text.lines().nth(1), Some("q,re,im"));
    assert_eq!(read_grid_csv(&out.path().join("evolve.csv")).len(), 1024);

    let meta: Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("evolve.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["grid"]["N"], 1024);
    assert_eq!(meta["config"]["symbol"]["psi"], "half-square");
    assert_eq!(meta["sup_norms"].as_array().unwrap().len(), 64);
    assert!(meta["wall_ms"].as_f64().unwrap() >= 0.0);
    let hash = meta["config_hash"].as_str().unwrap();
    assert!(text.starts_with(&format!("# config_hash={hash}\n")));
}

#[test]
fn non_power_of_two_grid_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        &format!("{BASE}{HEAT_SYMBOL}").replace("N = 512", "N = 1000"),
    );
    let o = run("evolve", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.N"));
}

#[test]
fn unparsable_config_exits_with_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "t = [");
    assert_eq!(run("evolve", &cfg, dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn constant_potential_factors_out() {
    let dir = TempDir::new().unwrap();
    let with_v = |v: f64| {
        format!("{BASE}{HEAT_SYMBOL}\n[[steps]]\nkind = \"potential\"\nv = {v:?}\n\n[[steps]]\nkind = \"hamiltonian\"\n")
    };
    let a = write_config(dir.path(), "a.toml", &with_v(-1.0));
    let b = write_config(dir.path(), "b.toml", &with_v(0.0));
    assert!(run("evolve", &a, &dir.path().join("a"), &[])
        .status
        .success());
    assert!(run("evolve", &b, &dir.path().join("b"), &[])
        .status
        .success());
    let ga = read_grid_csv(&dir.path().join("a/evolve.csv"));
    let gb = read_grid_csv(&dir.path().join("b/evolve.csv"));
    let e = (-1f64).exp();
    let worst = ga
        .iter()
        .zip(&gb)
        .map(|(x, y)| (x.1 - e * y.1).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn drift_beyond_grid_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let text = format!("{BASE}{HEAT_SYMBOL}\n[[steps]]\nkind = \"drift\"\nb = 10.0\n")
        .replace("n = 32", "n = 1");
    let cfg = write_config(dir.path(), "drift.toml", &text);
    assert_eq!(run("evolve", &cfg, dir.path(), &[]).status.code(), Some(2));
    assert_eq!(
        run("validate", &cfg, dir.path(), &[]).status.code(),
        Some(4)
    );
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("validate.json")).unwrap())
            .unwrap();
    let drift = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "steps[0]: drift displacement")
        .unwrap();
    assert_eq!(drift["pass"], false);
    assert_eq!(drift["violations"][0]["displacement"], 10.0);
}

#[test]
fn heat_converge_is_exact() {
    let out = TempDir::new().unwrap();
    assert!(
        run("converge", &presets().join("heat.toml"), out.path(), &[])
            .status
            .success()
    );
    let errors = converge_column(&out.path().join("converge.csv"), 1);
    assert_eq!(errors.len(), 5);
    assert!(errors.iter().all(|&e| e < 1e-10), "{errors:?}");
}

#[test]
fn variable_diffusion_converge_decreases() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(presets().join("variable-diffusion.toml")).unwrap();
    let text: String = text
        .lines()
        .filter(|l| !l.starts_with("t_sweep"))
        .collect::<Vec<_>>()
        .join("\n");
    let cfg = write_config(dir.path(), "vd.toml", &text);
    assert!(run("converge", &cfg, dir.path(), &[]).status.success());
    let errors = converge_column(&dir.path().join("converge.csv"), 1);
    let errors = &errors[..errors.len() - 1];
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn single_entry_n_list_gives_one_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "one.toml",
        &format!("{BASE}{HEAT_SYMBOL}").replace("n_list = [4, 8, 16, 32]", "n_list = [4]"),
    );
    assert!(run("converge", &cfg, dir.path(), &[]).status.success());
    let text = fs::read_to_string(dir.path().join("converge.csv")).unwrap();
    let rows: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,sup_error,l2_error,observed_order,wall_ms");
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("4,0.0000000000000000e0,0.0000000000000000e0,NaN,"));
}

#[test]
fn converge_against_reference_file() {
    let dir = TempDir::new().unwrap();
    let heat = write_config(dir.path(), "heat.toml", &format!("{BASE}{HEAT_SYMBOL}"));
    assert!(run("evolve", &heat, &dir.path().join("ref"), &[])
        .status
        .success());
    let text = format!("reference = \"ref/evolve.csv\"\n{BASE}{HEAT_SYMBOL}");
    let cfg = write_config(dir.path(), "against.toml", &text);
    let o = run("converge", &cfg, &dir.path().join("cmp"), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let errors = converge_column(&dir.path().join("cmp/converge.csv"), 1);
    assert_eq!(errors.len(), 4);
    assert!(errors.iter().all(|&e| e < 1e-12), "{errors:?}");
}

#[test]
fn t_sweep_is_recorded() {
    let dir = TempDir::new().unwrap();
    let text = format!("t_sweep = [0.25, 0.5]\n{BASE}{HEAT_SYMBOL}");
    let cfg = write_config(dir.path(), "sweep.toml", &text);
    assert!(run("converge", &cfg, dir.path(), &[]).status.success());
    let text = fs::read_to_string(dir.path().join("converge_tsweep.csv")).unwrap();
    let rows: Vec<_> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,n,sup_error,l2_error,observed_order,wall_ms");
    assert_eq!(rows.len(), 1 + 2 * 4);
}

#[test]
fn validate_accepts_variable_fractional_power() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        "{BASE}\n[symbol]\nkind = \"fractional-power\"\nalpha = 1.5\na = {{ kind = \"sinusoidal\", base = 1.0, amplitude = 0.5, frequency = 1.0 }}\n"
    );
    let cfg = write_config(dir.path(), "fp.toml", &text);
    let o = run("validate", &cfg, dir.path(), &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("validate.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], true);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 6);
    assert!(checks
        .iter()
        .all(|c| c["pass"] == true && c["violations"].as_array().unwrap().is_empty()));
}

#[test]
fn validate_rejects_negative_square() {
    let dir = TempDir::new().unwrap();
    let text = format!("{BASE}{HEAT_SYMBOL}").replace("half-square", "negative-square");
    let cfg = write_config(dir.path(), "neg.toml", &text);
    let o = run("validate", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(4));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("validate.json")).unwrap())
            .unwrap();
    assert_eq!(report["pass"], false);
    let nd = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "symbol: negative definiteness")
        .unwrap();
    assert_eq!(nd["pass"], false);
    assert!(!nd["violations"].as_array().unwrap().is_empty());
}

#[test]
fn mc_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        "{BASE}\n[symbol]\nkind = \"fractional-power\"\nalpha = 1.5\na = {{ kind = \"sinusoidal\", base = 1.0, amplitude = 0.5, frequency = 1.0 }}\n\n[mc]\nn_paths = 5000\nseed = 11\nq0 = [0.0, 0.5]\n"
    );
    let cfg = write_config(dir.path(), "mc.toml", &text);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run("mc", &cfg, &a, &[]).status.success());
    assert!(run("mc", &cfg, &b, &["--threads", "1"]).status.success());
    let first = fs::read(a.join("mc.csv")).unwrap();
    assert_eq!(first, fs::read(b.join("mc.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[1], "label,mean,std_error,n_paths,n_steps,seed");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("expectation@q0=0,"));

    let c = dir.path().join("c");
    assert!(run("mc", &cfg, &c, &["--seed", "12"]).status.success());
    let other = fs::read_to_string(c.join("mc.csv")).unwrap();
    assert_ne!(other.lines().next(), lines.first().copied());
    assert!(other.lines().nth(2).unwrap().ends_with(",12"));
}

#[test]
fn mc_needs_a_sampling_law() {
    let dir = TempDir::new().unwrap();
    let text = fs::read_to_string(presets().join("relativistic.toml")).unwrap()
        + "\n[mc]\nn_paths = 1000\nseed = 1\n";
    let cfg = write_config(dir.path(), "rel.toml", &text);
    assert_eq!(run("mc", &cfg, dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn every_preset_runs() {
    let mut names: Vec<_> = fs::read_dir(presets())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 8);
    for preset in names {
        let out = TempDir::new().unwrap();
        for sub in ["validate", "evolve"] {
            let o = run(sub, &preset, out.path(), &[]);
            assert!(
                o.status.success(),
                "{} {sub}: {}",
                preset.display(),
                String::from_utf8_lossy(&o.stderr)
            );
        }
    }
}

#[test]
fn girsanov_preset_matches_grid() {
    let out = TempDir::new().unwrap();
    let preset = presets().join("girsanov.toml");
    assert!(run("evolve", &preset, out.path(), &[]).status.success());
    assert!(run("mc", &preset, out.path(), &[]).status.success());
    let grid = read_grid_csv(&out.path().join("evolve.csv"));
    let at_zero = grid.iter().find(|(q, _)| *q == 0.0).unwrap().1;
    let exact = (-0.49f64 / 3.0).exp() / 3f64.sqrt();
    assert!((at_zero - exact).abs() < 1e-4, "{at_zero} vs {exact}");
    let text = fs::read_to_string(out.path().join("mc.csv")).unwrap();
    let row: Vec<f64> = text
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .skip(1)
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((row[0] - exact).abs() <= 3.0 * row[1], "{row:?}");
}
