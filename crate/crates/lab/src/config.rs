//! Scenario configuration. TOML with flat sections; every key is optional
//! and unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use blowup_core::blowup::DEFAULT_LADDER;
use blowup_core::drift::DriftSpec;
use blowup_core::kernels::{dirichlet_eigenpairs, SpectralBasis};
use blowup_core::model::{Domain, Grid, ModelParams};
use blowup_core::solver::SolverSettings;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelSection,
    pub drift: DriftSpec,
    pub initial: InitialSection,
    pub solver: SolverSection,
    pub campaign: CampaignSection,
    pub checks: ChecksSection,
    pub blowup: BlowupSection,
    pub convolution: ConvolutionSection,
    pub moments: MomentSection,
    pub long_run: LongRunSection,
    pub lil: LilSection,
    pub increments: IncrementSection,
    pub divergent: DivergentSection,
    pub output: OutputSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".into(),
            model: ModelSection::default(),
            drift: DriftSpec::power(2.0),
            initial: InitialSection::default(),
            solver: SolverSection::default(),
            campaign: CampaignSection::default(),
            checks: ChecksSection::default(),
            blowup: BlowupSection::default(),
            convolution: ConvolutionSection::default(),
            moments: MomentSection::default(),
            long_run: LongRunSection::default(),
            lil: LilSection::default(),
            increments: IncrementSection::default(),
            divergent: DivergentSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Ball,
    TruncatedSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    pub sigma: f64,
    /// Riesz exponent; absent for white noise.
    pub eta: Option<f64>,
    pub domain: DomainKind,
    /// Half width `L` of the truncated domain.
    pub half_width: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { alpha: 2.0, beta: 0.75, nu: 1.0, sigma: 1.0, eta: None, domain: DomainKind::Ball, half_width: 20.0 }
    }
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams> {
        let domain = match self.domain {
            DomainKind::Ball => Domain::Ball,
            DomainKind::TruncatedSpace => Domain::TruncatedSpace { half_width: self.half_width },
        };
        Ok(ModelParams::new(self.alpha, self.beta, self.nu, self.sigma, self.eta, domain)?)
    }

    /// White-noise model on `[-half_width, half_width]`, used by the
    /// stochastic-convolution checks.
    pub fn free_white(&self, half_width: f64) -> Result<ModelParams> {
        Ok(ModelParams::new(self.alpha, self.beta, self.nu, 1.0, None, Domain::TruncatedSpace { half_width })?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Zero,
    /// `amplitude phi_1`
    Phi1,
    Constant,
    /// `amplitude exp(-x^2 / (2 width^2))`
    Bump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub kind: InitialKind,
    pub amplitude: f64,
    pub width: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        InitialSection { kind: InitialKind::Zero, amplitude: 1.0, width: 0.5 }
    }
}

impl InitialSection {
    pub fn values(&self, basis: &SpectralBasis) -> Result<Vec<f64>> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(LabError::Config(format!("initial.amplitude must be nonnegative, got {}", self.amplitude)));
        }
        let a = self.amplitude;
        let x = &basis.grid.points;
        let half = basis.half_width;
        Ok(match self.kind {
            InitialKind::Zero => vec![0.0; x.len()],
            InitialKind::Phi1 => basis.phi[0].iter().map(|p| (a * p).max(0.0)).collect(),
            InitialKind::Constant => {
                x.iter().map(|x| if x.abs() < half { a } else { 0.0 }).collect()
            }
            InitialKind::Bump => {
                if self.width <= 0.0 {
                    return Err(LabError::Config("initial.width must be positive".into()));
                }
                x.iter().map(|x| if x.abs() < half { a * (-x * x / (2.0 * self.width * self.width)).exp() } else { 0.0 }).collect()
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dt: f64,
    pub horizon: f64,
    pub grid_points: usize,
    pub modes: usize,
    pub ladder: Vec<f64>,
    pub dt_floor: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { dt: 1e-2, horizon: 10.0, grid_points: 129, modes: 16, ladder: DEFAULT_LADDER.to_vec(), dt_floor: 1e-9 }
    }
}

impl SolverSection {
    pub fn settings(&self) -> SolverSettings {
        let mut s = SolverSettings::new(self.dt, self.horizon);
        s.ladder = self.ladder.clone();
        s.dt_floor = self.dt_floor;
        s
    }

    pub fn basis(&self, params: &ModelParams) -> Result<SpectralBasis> {
        basis(params, self.modes, self.grid_points)
    }
}

pub fn basis(params: &ModelParams, modes: usize, grid_points: usize) -> Result<SpectralBasis> {
    let grid = Grid::uniform(params.domain.half_width(), grid_points)?;
    Ok(dirichlet_eigenpairs(params, modes, &grid)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CampaignSection {
    pub paths: usize,
    pub seed: u64,
    /// Index of the first path; a resumed campaign starts here.
    pub first_path: usize,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
}

impl Default for CampaignSection {
    fn default() -> Self {
        CampaignSection { paths: 200, seed: 20_240_917, first_path: 0, workers: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Blowup,
    ConvolutionVariance,
    MomentScaling,
    Lil,
    IncrementSupremum,
    DivergentInf,
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Blowup => "blowup",
            CheckKind::ConvolutionVariance => "convolution_variance",
            CheckKind::MomentScaling => "moment_scaling",
            CheckKind::Lil => "lil",
            CheckKind::IncrementSupremum => "increment_supremum",
            CheckKind::DivergentInf => "divergent_inf",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    pub run: Vec<CheckKind>,
    /// Checks whose failure makes the run exit nonzero.
    pub blocking: Vec<CheckKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// Wilson lower bound above zero.
    Positive,
    /// No path blows up.
    Zero,
    /// Blowup fraction at least `min_fraction`.
    AtLeast,
    /// Report only.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupSection {
    pub expect: Expectation,
    pub min_fraction: f64,
}

impl Default for BlowupSection {
    fn default() -> Self {
        BlowupSection { expect: Expectation::None, min_fraction: 0.9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvolutionSection {
    pub t: f64,
    pub x0: f64,
    pub dt: f64,
    pub paths: usize,
    pub half_width: f64,
    pub modes: usize,
    pub grid_points: usize,
    pub tolerance: f64,
}

impl Default for ConvolutionSection {
    fn default() -> Self {
        ConvolutionSection { t: 1.0, x0: 0.0, dt: 1e-3, paths: 10_000, half_width: 6.0, modes: 48, grid_points: 193, tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentSection {
    pub k: u32,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub lag_min: f64,
    pub lag_max: f64,
    pub n_lags: usize,
    pub x0: f64,
    pub paths: usize,
    pub half_width: f64,
    pub modes: usize,
    pub grid_points: usize,
    pub tolerance: f64,
}

impl Default for MomentSection {
    fn default() -> Self {
        MomentSection {
            k: 2,
            dt: 1e-2,
            t_start: 20.0,
            t_end: 40.0,
            lag_min: 0.05,
            lag_max: 1.6,
            n_lags: 8,
            x0: 0.0,
            paths: 100,
            half_width: 20.0,
            modes: 100,
            grid_points: 401,
            tolerance: 0.1,
        }
    }
}

/// Long white-noise runs of the stochastic convolution shared by the
/// iterated-logarithm, increment and divergent-infimum checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LongRunSection {
    pub dt: f64,
    pub t_max: f64,
    pub half_width: f64,
    pub modes: usize,
    pub grid_points: usize,
    pub paths: usize,
    /// Points spread over the unit ball for window extrema.
    pub window_points: usize,
    pub x0: f64,
}

impl Default for LongRunSection {
    fn default() -> Self {
        LongRunSection { dt: 0.1, t_max: 1e4, half_width: 40.0, modes: 150, grid_points: 601, paths: 100, window_points: 9, x0: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LilSection {
    pub t_max: Vec<f64>,
    /// Checkpoints per doubling of time.
    pub per_doubling: usize,
    pub band: [f64; 2],
}

impl Default for LilSection {
    fn default() -> Self {
        LilSection { t_max: vec![1e2, 1e3, 1e4], per_doubling: 8, band: [0.4, 1.6] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncrementSection {
    pub n: Vec<f64>,
}

impl Default for IncrementSection {
    fn default() -> Self {
        IncrementSection { n: vec![4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DivergentSection {
    pub t_low: f64,
    pub pass_rate: f64,
}

impl Default for DivergentSection {
    fn default() -> Self {
        DivergentSection { t_low: 1e2, pass_rate: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| LabError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            LabError::Parse(m) => LabError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Delegates parameter checks to the core types.
    pub fn validate(&self) -> Result<()> {
        let p = self.model.params()?;
        self.drift.validate()?;
        self.solver.settings().validate()?;
        if self.solver.modes == 0 {
            return Err(LabError::Config("solver.modes must be positive".into()));
        }
        if self.checks.blocking.iter().any(|c| !self.checks.run.contains(c)) {
            return Err(LabError::Config("checks.blocking lists a check that is not run".into()));
        }
        let long = self.checks.run.iter().any(|c| matches!(c, CheckKind::Lil | CheckKind::IncrementSupremum | CheckKind::DivergentInf));
        if long {
            self.model.free_white(self.long_run.half_width)?;
            if self.lil.t_max.iter().any(|t| *t > self.long_run.t_max || *t <= std::f64::consts::E.powi(2)) {
                return Err(LabError::Config("lil.t_max values must lie in (e^2, long_run.t_max]".into()));
            }
        }
        if self.checks.run.contains(&CheckKind::MomentScaling) && !matches!(self.moments.k, 2 | 4) {
            return Err(LabError::Config(format!("moments.k must be 2 or 4, got {}", self.moments.k)));
        }
        if p.d != 1 {
            return Err(LabError::Config("only one space dimension is supported".into()));
        }
        Ok(())
    }
}
