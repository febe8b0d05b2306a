//! Experiment configuration files.
//!
//! One TOML file per experiment. Every section except `reaction` is
//! optional and falls back to documented defaults; the fully resolved
//! configuration is written into the run manifest.

use std::path::{Path, PathBuf};

use ignition_core::cauchy::supersolution::{Construction, ResidualGrid, EPS_NUM};
use ignition_core::nonlinearity::{ReactionKind, DEFAULT_SAMPLES};
use ignition_core::periodic_solver::{ClassifySettings, DEFAULT_PHYSICAL_HORIZON, MIN_CELLS};
use ignition_core::profiles::ProfileSpec;
use ignition_core::threshold::ThresholdSettings;
use ignition_core::{Nonlinearity, PeriodVector, PeriodicProfile};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Front,
    Periodic,
    Thetamap,
    Threshold,
    Homog,
    Spread,
    Profilecv,
    Residual,
    Sweep,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Front => "front",
            ExperimentKind::Periodic => "periodic",
            ExperimentKind::Thetamap => "thetamap",
            ExperimentKind::Threshold => "threshold",
            ExperimentKind::Homog => "homog",
            ExperimentKind::Spread => "spread",
            ExperimentKind::Profilecv => "profilecv",
            ExperimentKind::Residual => "residual",
            ExperimentKind::Sweep => "sweep",
        }
    }
}

/// `f` by family, with its threshold `θ` and plateau width `ρ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReactionConfig {
    Power { a: f64, p: f64, theta: f64, rho: f64 },
    Tabulated { table: Vec<(f64, f64)>, theta: f64, rho: f64 },
}

impl ReactionConfig {
    pub fn build(&self) -> Result<Nonlinearity, CliError> {
        let (kind, theta, rho) = match self {
            ReactionConfig::Power { a, p, theta, rho } => (ReactionKind::Power { a: *a, p: *p }, *theta, *rho),
            ReactionConfig::Tabulated { table, theta, rho } => {
                (ReactionKind::Tabulated { table: table.clone() }, *theta, *rho)
            }
        };
        Nonlinearity::validate(kind, theta, rho, DEFAULT_SAMPLES).map_err(CliError::from_core)
    }
}

/// Either `xi` with `lambda`, or explicit `lengths`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodConfig {
    pub xi: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub lengths: Option<Vec<f64>>,
}

impl PeriodConfig {
    pub fn build(&self) -> Result<PeriodVector, CliError> {
        let p = match (&self.xi, self.lambda, &self.lengths) {
            (Some(xi), Some(l), None) => PeriodVector::normalized(xi, l),
            (None, None, Some(ls)) => PeriodVector::from_components(ls),
            _ => return Err(CliError::config("[period] needs either `xi` and `lambda` or `lengths`")),
        };
        p.map_err(CliError::from_core)
    }

    /// Direction only; `lambda` may be absent.
    pub fn direction(&self) -> Result<Vec<f64>, CliError> {
        match (&self.xi, &self.lengths) {
            (Some(xi), _) => Ok(PeriodVector::normalized(xi, 1.0).map_err(CliError::from_core)?.xi().to_vec()),
            (None, Some(_)) => Ok(self.build()?.xi().to_vec()),
            _ => Err(CliError::config("[period] needs `xi`")),
        }
    }
}

/// Discretisation of the periodic and whole-space solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Cells per axis of the periodic torus grid.
    pub n: usize,
    pub dt: Option<f64>,
    pub physical_horizon: f64,
    /// Cells per period on the whole-space grid.
    pub m: usize,
    /// Spacing on whole-space axes along which the periodic limit is constant.
    pub h_free: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n: MIN_CELLS, dt: None, physical_horizon: DEFAULT_PHYSICAL_HORIZON, m: 32, h_free: 0.1 }
    }
}

impl GridConfig {
    pub fn classify(&self) -> ClassifySettings {
        ClassifySettings {
            n: self.n,
            dt: self.dt,
            physical_horizon: self.physical_horizon,
            fit_rate: false,
            lyapunov_every: 0,
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if !self.n.is_power_of_two() || self.n < MIN_CELLS {
            return Err(CliError::config(format!("grid.n = {} must be a power of two >= {MIN_CELLS}", self.n)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(CliError::config(format!("grid.dt = {dt} must be positive")));
            }
        }
        if !(self.physical_horizon > 0.0) {
            return Err(CliError::config("grid.physical_horizon must be positive"));
        }
        if self.m < 2 {
            return Err(CliError::config("grid.m must be at least 2"));
        }
        if !(self.h_free > 0.0) {
            return Err(CliError::config("grid.h_free must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontConfig {
    pub alphas: Vec<f64>,
    /// Write sampled profiles, one file per `α`.
    #[serde(default)]
    pub profiles: bool,
    /// Keep every `stride`-th profile node.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicConfig {
    pub t_end: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Steps between samples; 0 picks about 500 samples.
    #[serde(default)]
    pub sample_every: usize,
    /// Also classify the large-time limit.
    #[serde(default)]
    pub classify: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetamapConfig {
    pub lambdas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    /// Directions; defaults to `[period].xi`.
    #[serde(default)]
    pub xis: Vec<Vec<f64>>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_lambda_start")]
    pub lambda_start: f64,
}

fn default_rel_tol() -> f64 {
    1e-3
}

fn default_lambda_start() -> f64 {
    1.0
}

impl ThresholdConfig {
    pub fn settings(&self, grid: &GridConfig) -> ThresholdSettings {
        ThresholdSettings { classify: grid.classify(), rel_tol: self.rel_tol, lambda_start: self.lambda_start }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogConfig {
    /// Number of leading coordinates averaged out.
    pub axis: usize,
    pub xi_tilde: Vec<f64>,
    /// Approach directions toward the boundary face.
    pub approach: Vec<Vec<f64>>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataConfig {
    Bump {
        height: f64,
        radius: f64,
    },
    FrontLike {
        e: Vec<f64>,
        #[serde(default = "one")]
        left_level: f64,
        #[serde(default)]
        offset: f64,
    },
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

/// Whole-space run shared by `spread` and `profilecv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchyConfig {
    pub data: DataConfig,
    pub t_end: f64,
    #[serde(default = "one")]
    pub snapshot_every: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Envelope rate `λ₀` of `|u₀ − v₀|`.
    pub lambda0: f64,
    /// Half-width (radial runs) or distance ahead (front-like runs);
    /// defaults to the smallest admissible value.
    pub half_width: Option<f64>,
    /// Distance behind the plateau edge for front-like runs.
    #[serde(default = "default_behind")]
    pub behind: f64,
    /// Level of the tracked set; defaults to `(1 + θ)/2`.
    pub level: Option<f64>,
    #[serde(default = "default_fit_fraction")]
    pub fit_fraction: f64,
    /// Ball radius of the local persistence check.
    pub persistence_radius: Option<f64>,
    /// Only keep snapshots while the companion periodic solution stays in
    /// `[θ − w, θ + w]` (near-critical runs).
    pub near_threshold_window: Option<f64>,
    #[serde(default)]
    pub write_snapshots: bool,
}

fn default_behind() -> f64 {
    10.0
}

fn default_fit_fraction() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichConfig {
    pub tau: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "default_sandwich_tol")]
    pub tolerance: f64,
}

fn default_sandwich_tol() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WbarConfig {
    /// Speed as a multiple of `c*(θ)`.
    #[serde(default = "default_c_factor")]
    pub c_factor: f64,
    pub lambda0: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub shift: f64,
    #[serde(default)]
    pub tau: f64,
    /// Consecutive periodic states examined.
    #[serde(default = "default_wbar_steps")]
    pub steps: usize,
    /// Period cells tiled along the propagation axis.
    #[serde(default = "default_periods")]
    pub periods: usize,
    #[serde(default)]
    pub axis: usize,
}

fn default_c_factor() -> f64 {
    1.1
}

fn default_wbar_steps() -> usize {
    50
}

fn default_periods() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualConfig {
    pub which: Vec<Construction>,
    /// Speed of the monostable front as a multiple of `c*(θ)`.
    #[serde(default = "default_c_factor")]
    pub c_factor: f64,
    pub alpha: Option<f64>,
    pub lambda0: Option<f64>,
    pub eta: Option<f64>,
    pub mu1: Option<f64>,
    #[serde(default = "default_residual_grid")]
    pub grid: ResidualGrid,
    #[serde(default = "default_eps")]
    pub tolerance: f64,
    pub wbar: Option<WbarConfig>,
}

fn default_residual_grid() -> ResidualGrid {
    ResidualGrid::default()
}

fn default_eps() -> f64 {
    EPS_NUM
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Front speeds over `alphas`.
    Alpha,
    /// `θ_{ξ,λ}` over `lambdas` at `[period].xi`.
    Lambda,
    /// `θ_{ξ,λ}` over the product of `xis` and `lambdas`.
    XiLambda,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub xis: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Output directory; `--out` takes precedence.
    pub output: Option<PathBuf>,
    /// Memoise periodic classifications under `<output>/.cache`.
    #[serde(default = "yes")]
    pub cache: bool,
    pub reaction: ReactionConfig,
    pub profile: Option<ProfileSpec>,
    pub period: Option<PeriodConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    pub front: Option<FrontConfig>,
    pub periodic: Option<PeriodicConfig>,
    pub thetamap: Option<ThetamapConfig>,
    pub threshold: Option<ThresholdConfig>,
    pub homog: Option<HomogConfig>,
    pub cauchy: Option<CauchyConfig>,
    pub sandwich: Option<SandwichConfig>,
    pub residual: Option<ResidualConfig>,
    pub sweep: Option<SweepConfig>,
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    s.as_ref().ok_or_else(|| CliError::config(format!("missing section [{name}]")))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn profile(&self) -> Result<PeriodicProfile, CliError> {
        PeriodicProfile::new(section(&self.profile, "profile")?.clone()).map_err(CliError::from_core)
    }

    pub fn period(&self) -> Result<PeriodVector, CliError> {
        section(&self.period, "period")?.build()
    }

    pub fn front(&self) -> Result<&FrontConfig, CliError> {
        section(&self.front, "front")
    }
    pub fn periodic(&self) -> Result<&PeriodicConfig, CliError> {
        section(&self.periodic, "periodic")
    }
    pub fn thetamap(&self) -> Result<&ThetamapConfig, CliError> {
        section(&self.thetamap, "thetamap")
    }
    pub fn threshold(&self) -> Result<&ThresholdConfig, CliError> {
        section(&self.threshold, "threshold")
    }
    pub fn homog(&self) -> Result<&HomogConfig, CliError> {
        section(&self.homog, "homog")
    }
    pub fn cauchy(&self) -> Result<&CauchyConfig, CliError> {
        section(&self.cauchy, "cauchy")
    }
    pub fn residual(&self) -> Result<&ResidualConfig, CliError> {
        section(&self.residual, "residual")
    }
    pub fn sweep(&self) -> Result<&SweepConfig, CliError> {
        section(&self.sweep, "sweep")
    }

    /// Checks everything that can be checked without simulating.
    pub fn validate(&self) -> Result<(), CliError> {
        let f = self.reaction.build()?;
        self.grid.validate()?;
        if self.profile.is_some() {
            self.profile()?;
        }
        if self.period.as_ref().is_some_and(|p| p.lambda.is_some() || p.lengths.is_some()) {
            self.period()?;
        }
        match self.experiment {
            ExperimentKind::Front => {
                let c = self.front()?;
                if c.alphas.is_empty() {
                    return Err(CliError::config("front.alphas is empty"));
                }
                if let Some(a) = c.alphas.iter().find(|a| !(**a >= 0.0 && **a < f.theta())) {
                    return Err(CliError::config(format!("front.alphas: {a} is not in [0, theta)")));
                }
            }
            ExperimentKind::Periodic => {
                self.profile()?;
                self.period()?;
                let c = self.periodic()?;
                if !(c.t_end > 0.0) {
                    return Err(CliError::config("periodic.t_end must be positive"));
                }
                if let Some(dt) = self.grid.dt {
                    let cap = self.periodic_cap(&f)?;
                    if dt > cap {
                        return Err(CliError::config(format!("grid.dt = {dt} exceeds the stability cap {cap}")));
                    }
                }
            }
            ExperimentKind::Thetamap => {
                self.profile()?;
                section(&self.period, "period")?.direction()?;
                if self.thetamap()?.lambdas.is_empty() {
                    return Err(CliError::config("thetamap.lambdas is empty"));
                }
            }
            ExperimentKind::Threshold => {
                self.profile()?;
                let c = self.threshold()?;
                if c.xis.is_empty() {
                    section(&self.period, "period")?.direction()?;
                }
                positive(c.rel_tol, "threshold.rel_tol")?;
                positive(c.lambda_start, "threshold.lambda_start")?;
            }
            ExperimentKind::Homog => {
                self.profile()?;
                let c = self.homog()?;
                if c.approach.is_empty() {
                    return Err(CliError::config("homog.approach is empty"));
                }
                positive(c.rel_tol, "homog.rel_tol")?;
            }
            ExperimentKind::Spread | ExperimentKind::Profilecv => {
                self.profile()?;
                self.period()?;
                let c = self.cauchy()?;
                positive(c.t_end, "cauchy.t_end")?;
                positive(c.snapshot_every, "cauchy.snapshot_every")?;
                positive(c.lambda0, "cauchy.lambda0")?;
                if !(c.fit_fraction > 0.0 && c.fit_fraction <= 1.0) {
                    return Err(CliError::config("cauchy.fit_fraction must lie in (0, 1]"));
                }
                if self.experiment == ExperimentKind::Profilecv && !matches!(c.data, DataConfig::FrontLike { .. }) {
                    return Err(CliError::config("profilecv needs front-like data"));
                }
            }
            ExperimentKind::Residual => {
                let c = self.residual()?;
                if c.which.is_empty() {
                    return Err(CliError::config("residual.which is empty"));
                }
                let needs_pair =
                    c.which.iter().any(|w| matches!(w, Construction::Claim41UbarAlpha | Construction::Claim41UlowerAlpha));
                if needs_pair && (c.alpha.is_none() || c.lambda0.is_none()) {
                    return Err(CliError::config("residual.alpha and residual.lambda0 are required for claim41"));
                }
                if c.which.contains(&Construction::Claim31Wbar) {
                    self.profile()?;
                    self.period()?;
                    section(&c.wbar, "residual.wbar")?;
                }
            }
            ExperimentKind::Sweep => {
                let c = self.sweep()?;
                match c.kind {
                    SweepKind::Alpha if c.alphas.is_empty() => return Err(CliError::config("sweep.alphas is empty")),
                    SweepKind::Lambda | SweepKind::XiLambda if c.lambdas.is_empty() => {
                        return Err(CliError::config("sweep.lambdas is empty"))
                    }
                    SweepKind::XiLambda if c.xis.is_empty() => return Err(CliError::config("sweep.xis is empty")),
                    SweepKind::Lambda => {
                        self.profile()?;
                        section(&self.period, "period")?.direction()?;
                    }
                    SweepKind::XiLambda => {
                        self.profile()?;
                    }
                    SweepKind::Alpha => {}
                }
            }
        }
        Ok(())
    }

    fn periodic_cap(&self, f: &Nonlinearity) -> Result<f64, CliError> {
        let p = self.period()?;
        let lam = p.lambda();
        let st = ignition_core::periodic_solver::rescaled_stencil(&self.profile()?, &p, self.grid.n, lam * lam)
            .map_err(CliError::from_core)?;
        Ok(st.stable_dt(f))
    }
}

fn positive(x: f64, name: &str) -> Result<(), CliError> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} = {x} must be positive")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
experiment = "threshold"

[reaction]
family = "power"
a = 1.0
p = 1.0
theta = 0.4
rho = 0.1

[profile]
family = "step"
dim = 2
axis = 0
split = 0.5
high = 0.7
low = 0.2

[threshold]
xis = [[1.0, 0.0]]
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(c.grid, GridConfig::default());
        assert_eq!(c.threshold.unwrap().rel_tol, 1e-3);
    }

    #[test]
    fn missing_theta_is_named() {
        let text = BASE.replace("theta = 0.4\n", "");
        let err = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(err.to_string().contains("theta"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn grid_must_be_a_power_of_two() {
        let text = format!("{BASE}\n[grid]\nn = 100\n");
        assert!(ExperimentConfig::from_toml(&text).unwrap_err().to_string().contains("power of two"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASE.replace("rho = 0.1", "rho = 0.1\nrh0 = 2");
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }
}
