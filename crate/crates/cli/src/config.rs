//! Experiment configuration: a single TOML document.
//!
//! ```toml
//! t = 1.0
//! n = 64
//!
//! [grid]
//! L = 20.0
//! N = 1024
//!
//! [symbol]
//! kind = "constant-levy"
//! psi = "half-square"
//!
//! [[steps]]
//! kind = "hamiltonian"
//!
//! [initial]
//! kind = "gaussian"
//! ```

use std::path::{Path, PathBuf};

use feller_core::chernoff::StepOperator;
use feller_core::grid::{Grid1D, GridFunction};
use feller_core::kernels::TransitionKernel;
use feller_core::symbol::{CoefficientFn, Psi, SymbolSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Largest allowed `|φ(q)|` for `|q| > L/2`.
pub const PADDING_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepConfig>,
    pub initial: InitialConfig,
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    /// Extra end times for `converge`; each reruns the `n_list` study.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_sweep: Option<Vec<f64>>,
    /// `"self"` or the path of a grid-function CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumption_a_note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

/// A coefficient: a bare number or a table with a `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientConfig {
    Constant(f64),
    Detailed(CoefficientKind),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientKind {
    Constant {
        value: f64,
    },
    Sinusoidal {
        base: f64,
        amplitude: f64,
        frequency: f64,
    },
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiName {
    HalfSquare,
    Abs,
    Power,
    /// Test hook: `ψ ≡ 0`.
    Zero,
    /// Test hook: `ψ = -|p|²`, not negative definite.
    NegativeSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymbolConfig {
    FractionalPower {
        alpha: f64,
        a: CoefficientConfig,
    },
    Relativistic {
        alpha: f64,
        m: CoefficientConfig,
    },
    ConstantLevy {
        psi: PsiName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    Scaled {
        a: CoefficientConfig,
        inner: Box<SymbolConfig>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelName {
    Gaussian,
    Cauchy,
    Stable,
}

/// One factor of the step recipe. Factors compose left to right with the
/// rightmost acting first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepConfig {
    /// Uses the top-level `symbol` unless one is given here.
    Hamiltonian {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symbol: Option<SymbolConfig>,
    },
    Lagrangian {
        a: CoefficientConfig,
        kernel: KernelName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    Potential {
        v: CoefficientConfig,
    },
    Drift {
        b: CoefficientConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    /// `exp(-(q - center)² / (2 width²))`
    Gaussian {
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// `exp(1 - 1/(1 - r²))` with `r = (q - center)/radius`, zero for `|r| >= 1`.
    Bump {
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        radius: f64,
    },
    /// `½ (tanh((q - left)/smoothing) - tanh((q - right)/smoothing))`
    IndicatorSmoothed {
        left: f64,
        right: f64,
        #[serde(default = "tenth")]
        smoothing: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn tenth() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// `E f(Y(n))` over the frozen-coefficient chain of `symbol`.
    #[default]
    Expectation,
    /// Brownian paths weighted by `exp(∫V dτ + ∫b dξ − ½∫b² dτ)`.
    Girsanov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Points {
    One(f64),
    Many(Vec<f64>),
}

impl Default for Points {
    fn default() -> Self {
        Points::One(0.0)
    }
}

impl Points {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Points::One(q) => vec![*q],
            Points::Many(qs) => qs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default)]
    pub q0: Points,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<CoefficientConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<CoefficientConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// Reads and validates a config file. A relative `reference` path is
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(r) = &cfg.reference {
            if r != "self" && Path::new(r).is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.reference = Some(dir.join(r).to_string_lossy().into_owned());
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that does not depend on the subcommand.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(CliError::config(
                "t",
                format!("must be positive, got {}", self.t),
            ));
        }
        if let Some(s) = &self.symbol {
            build_symbol(s, "symbol")?;
        }
        self.operator()?;
        if self.n == Some(0) {
            return Err(CliError::config("n", "must be at least 1"));
        }
        if let Some(list) = &self.n_list {
            if list.is_empty() {
                return Err(CliError::config("n_list", "must be nonempty"));
            }
            if list[0] == 0 || list.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::config(
                    "n_list",
                    "must be strictly ascending with entries >= 1",
                ));
            }
        }
        if let Some(ts) = &self.t_sweep {
            if ts.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                return Err(CliError::config("t_sweep", "entries must be positive"));
            }
        }
        if let Some(mc) = &self.mc {
            if mc.n_paths < feller_core::montecarlo::MIN_PATHS {
                return Err(CliError::config(
                    "mc.n_paths",
                    format!("must be at least {}", feller_core::montecarlo::MIN_PATHS),
                ));
            }
            if let Some(v) = &mc.v {
                build_coefficient(v, "mc.v")?;
            }
            if let Some(b) = &mc.b {
                build_coefficient(b, "mc.b")?;
            }
        }
        self.initial_datum(grid)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        let g = self.grid;
        if !(g.half_width.is_finite() && g.half_width > 0.0) {
            return Err(CliError::config(
                "grid.L",
                format!("must be positive, got {}", g.half_width),
            ));
        }
        if g.n < 16 || !g.n.is_power_of_two() {
            return Err(CliError::config(
                "grid.N",
                format!("must be a power of two >= 16, got {}", g.n),
            ));
        }
        Grid1D::new(g.half_width, g.n).map_err(|e| CliError::config("grid", e.to_string()))
    }

    pub fn symbol(&self) -> Result<SymbolSpec> {
        match &self.symbol {
            Some(s) => build_symbol(s, "symbol"),
            None => Err(CliError::config("symbol", "missing")),
        }
    }

    /// The step recipe; a lone Hamiltonian step when `steps` is empty.
    pub fn operator(&self) -> Result<StepOperator> {
        if self.steps.is_empty() {
            return Ok(StepOperator::Hamiltonian {
                spec: self.symbol()?,
            });
        }
        let mut factors = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| self.build_step(s, &format!("steps[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        Ok(if factors.len() == 1 {
            factors.remove(0)
        } else {
            StepOperator::Composite { factors }
        })
    }

    fn build_step(&self, step: &StepConfig, field: &str) -> Result<StepOperator> {
        Ok(match step {
            StepConfig::Hamiltonian { symbol } => StepOperator::Hamiltonian {
                spec: match symbol {
                    Some(s) => build_symbol(s, &format!("{field}.symbol"))?,
                    None => self.symbol()?,
                },
            },
            StepConfig::Lagrangian { a, kernel, alpha } => {
                let a_field = format!("{field}.a");
                let a = build_coefficient(a, &a_field)?;
                if let Err(e) = a.positive_bounds("a") {
                    return Err(CliError::config(a_field, e.to_string()));
                }
                let kernel = match (kernel, alpha) {
                    (KernelName::Gaussian, None) => TransitionKernel::Gaussian,
                    (KernelName::Cauchy, None) => TransitionKernel::Cauchy,
                    (KernelName::Stable, Some(alpha)) => TransitionKernel::stable(*alpha)
                        .map_err(|e| CliError::config(format!("{field}.alpha"), e.to_string()))?,
                    (KernelName::Stable, None) => {
                        return Err(CliError::config(
                            format!("{field}.alpha"),
                            "required for the stable kernel",
                        ))
                    }
                    (_, Some(_)) => {
                        return Err(CliError::config(
                            format!("{field}.alpha"),
                            "only allowed for the stable kernel",
                        ))
                    }
                };
                StepOperator::Lagrangian { a, kernel }
            }
            StepConfig::Potential { v } => StepOperator::Potential {
                v: build_coefficient(v, &format!("{field}.v"))?,
            },
            StepConfig::Drift { b } => StepOperator::Drift {
                b: build_coefficient(b, &format!("{field}.b"))?,
            },
        })
    }

    /// The initial datum sampled on the grid; must be negligible outside
    /// `[-L/2, L/2]`.
    pub fn initial_datum(&self, grid: Grid1D) -> Result<GridFunction> {
        let f = self.initial_fn()?;
        let half = grid.half_width() / 2.0;
        if let Some(q) = grid
            .nodes()
            .find(|q| q.abs() > half && f(*q).abs() > PADDING_TOLERANCE)
        {
            return Err(CliError::config(
                "initial",
                format!(
                    "|φ({q})| = {:e} exceeds {PADDING_TOLERANCE:e} outside [-L/2, L/2]",
                    f(q).abs()
                ),
            ));
        }
        Ok(GridFunction::from_fn(grid, f))
    }

    /// The initial datum as a function; also the test function of `mc`.
    pub fn initial_fn(&self) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        Ok(match self.initial {
            InitialConfig::Gaussian { center, width } => {
                positive("initial.width", width)?;
                Box::new(move |q| (-(q - center).powi(2) / (2.0 * width * width)).exp())
            }
            InitialConfig::Bump { center, radius } => {
                positive("initial.radius", radius)?;
                Box::new(move |q| {
                    let r = (q - center) / radius;
                    if r.abs() < 1.0 {
                        (1.0 - 1.0 / (1.0 - r * r)).exp()
                    } else {
                        0.0
                    }
                })
            }
            InitialConfig::IndicatorSmoothed {
                left,
                right,
                smoothing,
            } => {
                positive("initial.smoothing", smoothing)?;
                if !(left.is_finite() && right.is_finite() && left < right) {
                    return Err(CliError::config("initial.right", "must exceed `left`"));
                }
                Box::new(move |q| {
                    0.5 * (((q - left) / smoothing).tanh() - ((q - right) / smoothing).tanh())
                })
            }
        })
    }

    pub fn output_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        override_dir
            .map(Path::to_path_buf)
            .or_else(|| self.output.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

fn positive(field: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(
            field,
            format!("must be positive, got {x}"),
        ))
    }
}

pub fn build_coefficient(c: &CoefficientConfig, field: &str) -> Result<CoefficientFn> {
    let finite = |name: &str, x: f64| {
        if x.is_finite() {
            Ok(x)
        } else {
            Err(CliError::config(
                format!("{field}.{name}"),
                "must be finite",
            ))
        }
    };
    Ok(match c {
        CoefficientConfig::Constant(v)
        | CoefficientConfig::Detailed(CoefficientKind::Constant { value: v }) => {
            CoefficientFn::constant(finite("value", *v)?)
        }
        CoefficientConfig::Detailed(CoefficientKind::Sinusoidal {
            base,
            amplitude,
            frequency,
        }) => CoefficientFn::sinusoidal(
            finite("base", *base)?,
            finite("amplitude", *amplitude)?,
            finite("frequency", *frequency)?,
        ),
        CoefficientConfig::Detailed(CoefficientKind::Tabulated { grid, values }) => {
            CoefficientFn::tabulated(grid.clone(), values.clone())
                .map_err(|e| CliError::config(field, e.to_string()))?
        }
    })
}

pub fn build_symbol(s: &SymbolConfig, field: &str) -> Result<SymbolSpec> {
    let alpha_err =
        |e: feller_core::Error| CliError::config(format!("{field}.alpha"), e.to_string());
    Ok(match s {
        SymbolConfig::FractionalPower { alpha, a } => {
            SymbolSpec::fractional_power(*alpha, build_coefficient(a, &format!("{field}.a"))?)
                .map_err(alpha_err)?
        }
        SymbolConfig::Relativistic { alpha, m } => {
            let m = build_coefficient(m, &format!("{field}.m"))?;
            if let Err(e) = m.positive_bounds("m") {
                return Err(CliError::config(format!("{field}.m"), e.to_string()));
            }
            SymbolSpec::relativistic(*alpha, m).map_err(alpha_err)?
        }
        SymbolConfig::ConstantLevy { psi, alpha } => {
            let psi = match (psi, alpha) {
                (PsiName::Power, Some(a)) => Psi::Power(*a),
                (PsiName::Power, None) => {
                    return Err(CliError::config(
                        format!("{field}.alpha"),
                        "required for psi = \"power\"",
                    ))
                }
                (_, Some(_)) => {
                    return Err(CliError::config(
                        format!("{field}.alpha"),
                        "only allowed for psi = \"power\"",
                    ))
                }
                (PsiName::HalfSquare, None) => Psi::HalfSquare,
                (PsiName::Abs, None) => Psi::Abs,
                (PsiName::Zero, None) => Psi::Zero,
                (PsiName::NegativeSquare, None) => Psi::NegativeSquare,
            };
            SymbolSpec::constant_levy(psi).map_err(alpha_err)?
        }
        SymbolConfig::Scaled { a, inner } => SymbolSpec::scaled(
            build_coefficient(a, &format!("{field}.a"))?,
            build_symbol(inner, &format!("{field}.inner"))?,
        ),
    })
}
