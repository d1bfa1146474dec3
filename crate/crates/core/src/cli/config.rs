//! TOML run configuration. Every key has a default and unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{Propulsion, SimParams, DEFAULT_MAX_RUNS, DEFAULT_MAX_TOTAL_ITERS, DEFAULT_MU};
use crate::error::{Error, Result};
use crate::export::DEFAULT_SATURATION;
use crate::geometry::{EllipseGeometry, DEFAULT_ECCENTRICITY, DEFAULT_SEMI_MAJOR};
use crate::modes::{DEFAULT_CACHE_RESOLUTION, DEFAULT_FD_STEP};
use crate::specfun::ModeSpec;
use crate::stats::DEFAULT_BINS;

/// Coupling found by `corral calibrate` for the default configuration.
pub const DEFAULT_C: f64 = 426.153_535_817_672_04;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_MODE_GRID: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub a: f64,
    pub e: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            a: DEFAULT_SEMI_MAJOR,
            e: DEFAULT_ECCENTRICITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    /// Mode weighted by `p alpha`.
    pub alpha_mode: ModeSpec,
    /// Mode weighted by `(0.5 - p) beta`.
    pub beta_mode: ModeSpec,
    /// Resolution of exported mode and averaged-field grids.
    pub grid: usize,
    /// Resolution of the interpolation cache used by the simulation.
    pub cache: usize,
    pub use_cache: bool,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self {
            alpha_mode: ModeSpec::odd_1_5(),
            beta_mode: ModeSpec::even_4_4(),
            grid: DEFAULT_MODE_GRID,
            cache: DEFAULT_CACHE_RESOLUTION,
            use_cache: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub c: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub h: f64,
    pub k: f64,
    pub max_total_iters: usize,
    pub max_runs: usize,
    pub propulsion: Propulsion,
    pub seed: u64,
    pub w0: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            mu: DEFAULT_MU,
            alpha: 0.5,
            beta: 0.5,
            h: DEFAULT_FD_STEP,
            k: DEFAULT_FD_STEP,
            max_total_iters: DEFAULT_MAX_TOTAL_ITERS,
            max_runs: DEFAULT_MAX_RUNS,
            propulsion: Propulsion::Perpendicular,
            seed: DEFAULT_SEED,
            w0: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub bins: usize,
    pub saturation: f64,
    /// Monte Carlo draws for `avgfield`; 0 skips the Monte Carlo field.
    pub mc_draws: usize,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            bins: DEFAULT_BINS,
            saturation: DEFAULT_SATURATION,
            mc_draws: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// A named weight pair; `simulate` and `avgfield` process every case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case {
    pub name: String,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub modes: ModesConfig,
    pub sim: SimConfig,
    pub stats: StatsConfig,
    pub output: OutputConfig,
    pub cases: Vec<Case>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryConfig::default(),
            modes: ModesConfig::default(),
            sim: SimConfig::default(),
            stats: StatsConfig::default(),
            output: OutputConfig::default(),
            cases: default_cases(),
        }
    }
}

pub fn default_cases() -> Vec<Case> {
    let case = |name: &str, alpha, beta| Case {
        name: name.into(),
        alpha,
        beta,
    };
    vec![
        case("equal", 0.5, 0.5),
        case("even_dominant", 0.05, 0.5),
        case("odd_dominant", 0.5, 0.1),
    ]
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                path: "<config>".into(),
                line,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.display().to_string(),
                line,
                message,
            },
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        self.modes.alpha_mode.validate()?;
        self.modes.beta_mode.validate()?;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.modes.grid < 2 || self.modes.cache < 2 {
            return bad("modes.grid and modes.cache must be at least 2".into());
        }
        if self.stats.bins == 0 {
            return bad("stats.bins must be at least 1".into());
        }
        if !(self.stats.saturation > 0.0) {
            return bad(format!("stats.saturation must be positive, got {}", self.stats.saturation));
        }
        self.params(self.sim.alpha, self.sim.beta).validate()?;
        for case in &self.cases {
            if case.name.is_empty() || case.name.contains(['/', '\\']) || case.name.starts_with('.') {
                return bad(format!("case name {:?} is not a plain directory name", case.name));
            }
            if !(case.alpha >= 0.0 && case.beta >= 0.0) {
                return bad(format!("case {} has negative weights", case.name));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<EllipseGeometry> {
        EllipseGeometry::new(self.geometry.a, self.geometry.e)
    }

    /// Simulation parameters with the given weights.
    pub fn params(&self, alpha: f64, beta: f64) -> SimParams {
        let s = &self.sim;
        SimParams {
            c: s.c,
            mu: s.mu,
            alpha,
            beta,
            h: s.h,
            k: s.k,
            max_total_iters: s.max_total_iters,
            max_runs: s.max_runs,
            propulsion: s.propulsion,
            seed: s.seed,
            w0: s.w0,
        }
    }
}
