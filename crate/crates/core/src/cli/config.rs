//! Run configuration, read from a TOML file.
//!
//! ```toml
//! n = 2                      # sphere dimension S^n
//! k = 1                      # curvature order, 1 ≤ k ≤ n
//! seed = 7                   # optional, default 0
//!
//! [grid]
//! mode = "full-s2"           # or "axisymmetric"
//! n_theta = 64
//! n_phi = 128                # full-s2 only
//!
//! [f0]                       # exactly one of the three keys
//! constant = 3.62686
//! # expression = "2 + 0.1*cos(theta)"
//! # table = "f0.txt"         # relative to the config file
//!
//! [continuation]             # optional; keys of the solver configuration
//! t_step_init = 0.25
//!
//! [output]                   # optional
//! dir = "out"
//! csv = true
//! mesh = false
//! report = true
//!
//! [steiner]                  # optional
//! t_samples = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
//! body = "1 + 0.05*cos(theta)"   # decompose this body instead of a solution
//!
//! [validate]                 # optional
//! perturbations = 3
//! amplitude = 0.01
//! ```
//!
//! The output directory may also come from `HYPERCURV_OUT`; `--out` wins
//! over both.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::expr::{parse_expr, Expr};
use crate::error::{Error, Result};
use crate::solver::ContinuationConfig;
use crate::sphere_grid::{GridMode, MIN_POLAR_NODES};

pub const OUT_ENV: &str = "HYPERCURV_OUT";

/// Upper limits that keep a malformed file from requesting absurd grids.
const MAX_DIM: usize = 16;
const MAX_N_THETA: usize = 4096;
const MAX_N_PHI: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Solve,
    Validate,
    Steiner,
    SphereTest,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Solve => "solve",
            Mode::Validate => "validate",
            Mode::Steiner => "steiner",
            Mode::SphereTest => "sphere-test",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub mode: GridMode,
    pub n_theta: usize,
    #[serde(default)]
    pub n_phi: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum F0Spec {
    Constant(f64),
    Expression { source: String, expr: Expr },
    Table(PathBuf),
}

impl F0Spec {
    pub fn describe(&self) -> String {
        match self {
            F0Spec::Constant(c) => format!("constant {c:?}"),
            F0Spec::Expression { source, .. } => format!("expression {source}"),
            F0Spec::Table(p) => format!("table {}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub csv: bool,
    pub mesh: bool,
    pub report: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: None,
            csv: true,
            mesh: false,
            report: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteinerSpec {
    pub t_samples: Vec<f64>,
    pub body: Option<String>,
}

impl Default for SteinerSpec {
    fn default() -> Self {
        Self {
            t_samples: (1..=6).map(|i| 0.1 * i as f64).collect(),
            body: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSpec {
    pub perturbations: usize,
    pub amplitude: f64,
}

impl Default for ValidateSpec {
    fn default() -> Self {
        Self {
            perturbations: 3,
            amplitude: 0.01,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct F0Section {
    constant: Option<f64>,
    expression: Option<String>,
    table: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: usize,
    k: usize,
    #[serde(default)]
    seed: u64,
    grid: GridSpec,
    f0: F0Section,
    #[serde(default)]
    continuation: ContinuationConfig,
    #[serde(default)]
    output: OutputSpec,
    #[serde(default)]
    steiner: SteinerSpec,
    #[serde(default)]
    validate: ValidateSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub grid: GridSpec,
    pub f0: F0Spec,
    pub continuation: ContinuationConfig,
    pub output: OutputSpec,
    pub steiner: SteinerSpec,
    pub steiner_body: Option<Expr>,
    pub validate: ValidateSpec,
    /// Directory that relative table paths are resolved against.
    pub base_dir: PathBuf,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    /// Parses and validates a configuration. No files are touched.
    pub fn parse(text: &str, mode: Mode, base_dir: &Path) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| cfg_err(e.message().to_string()))?;
        if table
            .get("continuation")
            .and_then(|c| c.as_table())
            .is_some_and(|c| c.contains_key("k"))
        {
            return Err(cfg_err("set k at the top level, not in [continuation]"));
        }
        let file: FileConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| cfg_err(e.message().to_string()))?;

        let f0 = match (file.f0.constant, file.f0.expression, file.f0.table) {
            (Some(c), None, None) => F0Spec::Constant(c),
            (None, Some(source), None) => {
                let expr = parse_expr(&source)?;
                F0Spec::Expression { source, expr }
            }
            (None, None, Some(path)) => F0Spec::Table(path),
            _ => return Err(cfg_err("[f0] needs exactly one of constant, expression, table")),
        };
        let steiner_body = file.steiner.body.as_deref().map(parse_expr).transpose()?;
        let mut continuation = file.continuation;
        continuation.k = file.k;
        let cfg = Self {
            mode,
            n: file.n,
            k: file.k,
            seed: file.seed,
            grid: file.grid,
            f0,
            continuation,
            output: file.output,
            steiner: file.steiner,
            steiner_body,
            validate: file.validate,
            base_dir: base_dir.to_path_buf(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, mode: Mode) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, mode, base)
    }

    /// Defaults for `sphere-test`, which needs no file.
    pub fn self_test() -> Self {
        Self {
            mode: Mode::SphereTest,
            n: 2,
            k: 1,
            seed: 0,
            grid: GridSpec {
                mode: GridMode::FullS2,
                n_theta: 32,
                n_phi: Some(64),
            },
            f0: F0Spec::Constant(2.0 * 1.0f64.sinh() * 1.0f64.cosh()),
            continuation: ContinuationConfig::with_k(1),
            output: OutputSpec::default(),
            steiner: SteinerSpec::default(),
            steiner_body: None,
            validate: ValidateSpec::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_DIM).contains(&self.n) {
            return Err(cfg_err(format!("n = {} outside 2..={MAX_DIM}", self.n)));
        }
        if self.k == 0 || self.k > self.n {
            return Err(cfg_err(format!("k = {} outside 1..={}", self.k, self.n)));
        }
        if !(MIN_POLAR_NODES..=MAX_N_THETA).contains(&self.grid.n_theta) {
            return Err(cfg_err(format!("n_theta outside {MIN_POLAR_NODES}..={MAX_N_THETA}")));
        }
        match self.grid.mode {
            GridMode::FullS2 => {
                if self.n != 2 {
                    return Err(cfg_err("full-s2 grids need n = 2"));
                }
                match self.grid.n_phi {
                    None => return Err(cfg_err("full-s2 grids need n_phi")),
                    Some(np) if !(4..=MAX_N_PHI).contains(&np) || np % 2 != 0 => {
                        return Err(cfg_err(format!("n_phi must be even and in 4..={MAX_N_PHI}")))
                    }
                    Some(_) => {}
                }
            }
            GridMode::Axisymmetric => {
                if self.grid.n_phi.is_some_and(|np| np != 1) {
                    return Err(cfg_err("axisymmetric grids take no n_phi"));
                }
            }
        }
        if let F0Spec::Constant(c) = self.f0 {
            if !(c > 0.0) || !c.is_finite() {
                return Err(cfg_err(format!("constant f0 = {c} must be positive and finite")));
            }
        }
        if self.steiner.t_samples.iter().any(|t| !t.is_finite()) {
            return Err(cfg_err("steiner t_samples must be finite"));
        }
        if !(self.validate.amplitude.is_finite() && self.validate.amplitude >= 0.0) {
            return Err(cfg_err("validate amplitude must be finite and non-negative"));
        }
        if self.validate.perturbations > 64 {
            return Err(cfg_err("at most 64 perturbations"));
        }
        self.continuation.validate(self.n)
    }

    /// Resolution order: `--out`, then `HYPERCURV_OUT`, then the file, then `out`.
    pub fn output_dir(&self, cli_out: Option<&Path>) -> PathBuf {
        if let Some(p) = cli_out {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUT_ENV) {
            return PathBuf::from(p);
        }
        match &self.output.dir {
            Some(d) if d.is_relative() => self.base_dir.join(d),
            Some(d) => d.clone(),
            None => PathBuf::from("out"),
        }
    }

    pub fn table_path(&self) -> Option<PathBuf> {
        match &self.f0 {
            F0Spec::Table(p) if p.is_relative() => Some(self.base_dir.join(p)),
            F0Spec::Table(p) => Some(p.clone()),
            _ => None,
        }
    }
}
