//! JSON experiment configuration.
//!
//! A config names one system and carries an optional section per
//! experiment. Unknown keys are rejected everywhere.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::library::LibrarySystem;
use crate::bounds::BoundInputs;
use crate::error::{Error, Result};
use crate::estimators::Observable;
use crate::rds::{DrivingMeasure, MapDescriptor, Matrix, ParamFamily, ParamSampler};
use crate::spaces::{Point, RegionSet, StateSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceConfig {
    Interval { a: f64, b: f64 },
    Circle,
    Projective { dim: usize },
}

impl SpaceConfig {
    pub fn build(&self) -> Result<StateSpace> {
        match *self {
            SpaceConfig::Interval { a, b } => StateSpace::interval(a, b),
            SpaceConfig::Circle => Ok(StateSpace::Circle),
            SpaceConfig::Projective { dim } => StateSpace::projective(dim),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapConfig {
    MoebiusDecay { alpha: f64 },
    PolynomialDecay { alpha: f64 },
    Affine { slope: f64, offset: f64 },
    /// Row-major square matrix with determinant 1.
    Matrix { rows: Vec<Vec<f64>> },
    /// `diag(s, 1/s)`.
    Diag { s: f64 },
    /// Rotation matrix by `angle` radians.
    Rotation { angle: f64 },
}

impl MapConfig {
    pub fn build(&self) -> Result<MapDescriptor> {
        match self {
            MapConfig::MoebiusDecay { alpha } => MapDescriptor::moebius(*alpha),
            MapConfig::PolynomialDecay { alpha } => MapDescriptor::polynomial(*alpha),
            MapConfig::Affine { slope, offset } => MapDescriptor::affine(*slope, *offset),
            MapConfig::Matrix { rows } => Ok(MapDescriptor::projective(Matrix::from_rows(rows)?)),
            MapConfig::Diag { s } => Ok(MapDescriptor::projective(Matrix::diag2(*s)?)),
            MapConfig::Rotation { angle } => Ok(MapDescriptor::projective(Matrix::rotation(*angle))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub map: MapConfig,
    /// Omitted on every atom means equal weights.
    #[serde(default)]
    pub weight: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyConfig {
    MoebiusDecay,
    PolynomialDecay,
    Rotation,
}

impl From<FamilyConfig> for ParamFamily {
    fn from(f: FamilyConfig) -> Self {
        match f {
            FamilyConfig::MoebiusDecay => ParamFamily::MoebiusDecay,
            FamilyConfig::PolynomialDecay => ParamFamily::PolynomialDecay,
            FamilyConfig::Rotation => ParamFamily::Rotation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SamplerConfig {
    Uniform { lo: f64, hi: f64 },
    Discrete { values: Vec<f64>, weights: Vec<f64> },
}

impl SamplerConfig {
    pub fn build(&self) -> Result<ParamSampler> {
        match self {
            SamplerConfig::Uniform { lo, hi } => ParamSampler::uniform(*lo, *hi),
            SamplerConfig::Discrete { values, weights } => ParamSampler::discrete(values.clone(), weights),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    Library {
        name: LibrarySystem,
    },
    Finite {
        space: SpaceConfig,
        atoms: Vec<AtomConfig>,
    },
    Parametric {
        space: SpaceConfig,
        family: FamilyConfig,
        sampler: SamplerConfig,
    },
}

impl SystemConfig {
    pub fn library(&self) -> Option<LibrarySystem> {
        match self {
            SystemConfig::Library { name } => Some(*name),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<DrivingMeasure> {
        match self {
            SystemConfig::Library { name } => name.build(),
            SystemConfig::Finite { space, atoms } => {
                let space = space.build()?;
                let maps = atoms.iter().map(|a| a.map.build()).collect::<Result<Vec<_>>>()?;
                match atoms.iter().filter(|a| a.weight.is_some()).count() {
                    0 => DrivingMeasure::uniform(space, maps),
                    k if k == atoms.len() => DrivingMeasure::finite(
                        space,
                        maps.into_iter().zip(atoms.iter().map(|a| a.weight.unwrap_or_default())).collect(),
                    ),
                    _ => Err(Error::Config("give a weight for every atom or for none".into())),
                }
            }
            SystemConfig::Parametric { space, family, sampler } => {
                DrivingMeasure::parametric(space.build()?, (*family).into(), sampler.build()?)
            }
        }
    }
}

/// A scalar observable `h: M -> R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionConfig {
    Coordinate,
    Shifted { c: f64 },
    Zero,
    Constant { c: f64 },
    Cosine { k: u32 },
    DistanceTo { point: Vec<f64> },
}

impl FunctionConfig {
    pub fn build(&self, space: &StateSpace) -> Result<Observable> {
        let h = match self {
            FunctionConfig::Coordinate => Observable::Coordinate,
            FunctionConfig::Shifted { c } => Observable::Shifted(*c),
            FunctionConfig::Zero => Observable::Zero,
            FunctionConfig::Constant { c } => Observable::Constant(*c),
            FunctionConfig::Cosine { k } => Observable::Cosine(*k),
            FunctionConfig::DistanceTo { point } => Observable::DistanceTo(space.point(point)?),
        };
        h.check(space)?;
        Ok(h)
    }
}

/// How the stationary law is represented for Kantorovich observables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferenceConfig {
    /// The uniform law on the interval, compared in closed form.
    Uniform,
    /// One long run recorded after `burn_in` steps, every `stride` steps.
    Sample {
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "one")]
        stride: usize,
    },
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig::Sample { burn_in: default_burn_in(), samples: default_samples(), stride: 1 }
    }
}

fn default_burn_in() -> usize {
    1000
}

fn default_samples() -> usize {
    20_000
}

fn one() -> usize {
    1
}

/// The per-trial quantity whose tail is estimated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TailObservable {
    /// `(1/n) S_n(h)`.
    Birkhoff { h: FunctionConfig },
    /// `kappa(E_n, eta)`, centered at its mean.
    KappaToStationary {
        #[serde(default)]
        reference: ReferenceConfig,
    },
    /// `kappa(E_n, eta)` itself on an interval.
    KappaInterval {
        #[serde(default)]
        reference: ReferenceConfig,
    },
    /// `S_B(x, n)` with `B` given as candidate points.
    Sync { candidates: Vec<Vec<f64>>, mu_b: f64 },
    /// `K^{phi_0}_{n, eps}` of the orbit.
    CorrSum { epsilon: f64 },
    /// `(1/n) ln |G_n'(x)|`.
    #[serde(rename = "lyap-1d")]
    Lyap1d,
    /// `(1/n) ln |A_n x|`.
    LyapProjective,
    /// `(1/n) ln ||A_n||`.
    LyapMatrixNorm,
    /// Logarithmic-average Kantorovich distance; run with `asclt`.
    AscltKappa { h: FunctionConfig },
}

impl TailObservable {
    pub fn name(&self) -> &'static str {
        match self {
            TailObservable::Birkhoff { .. } => "birkhoff",
            TailObservable::KappaToStationary { .. } => "kappa-to-stationary",
            TailObservable::KappaInterval { .. } => "kappa-interval",
            TailObservable::Sync { .. } => "sync",
            TailObservable::CorrSum { .. } => "corr-sum",
            TailObservable::Lyap1d => "lyap-1d",
            TailObservable::LyapProjective => "lyap-projective",
            TailObservable::LyapMatrixNorm => "lyap-matrix-norm",
            TailObservable::AscltKappa { .. } => "asclt-kappa",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSelector {
    Main,
    Refined,
    Lln,
    EmpiricalKappa,
    IntervalKappa,
    Sync,
    CorrDim,
    CircleLyap,
    ProjectiveLyap,
    MatrixNorm,
}

/// Values that replace analytic constants or estimates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default)]
    pub gee: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub u: Option<Vec<f64>>,
    #[serde(default)]
    pub m_nu: Option<f64>,
    #[serde(default, rename = "M_nu")]
    pub big_m_nu: Option<f64>,
    #[serde(default)]
    pub c_cap: Option<f64>,
    /// Estimated `t_n` for the Lyapunov gates.
    #[serde(default)]
    pub t_n: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub observable: TailObservable,
    pub n: usize,
    pub t_ladder: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub bound: Option<BoundSelector>,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    /// Pilot size for the centering mean; defaults to `trials`.
    #[serde(default)]
    pub pilot_trials: Option<usize>,
    /// Trials for estimated `lambda` and `u` when no analytic value exists.
    #[serde(default = "default_lambda_trials")]
    pub lambda_trials: usize,
    /// Horizon multiple used for the long-run Lyapunov limit.
    #[serde(default = "default_long_run")]
    pub long_run_factor: usize,
}

fn default_lambda_trials() -> usize {
    1000
}

fn default_long_run() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaConfig {
    pub n_ladder: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub grid: Option<usize>,
    /// Fixed divergence ceiling; default `0.9 (n + 1) diam`.
    #[serde(default)]
    pub ceiling: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AscltConfig {
    pub h: FunctionConfig,
    #[serde(default = "default_min_exp")]
    pub min_exp: u32,
    #[serde(default = "default_max_exp")]
    pub max_exp: u32,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default = "default_sigma_n")]
    pub sigma_n: usize,
    #[serde(default = "default_sigma_trials")]
    pub sigma_trials: usize,
    #[serde(default)]
    pub reference: ReferenceConfig,
}

fn default_min_exp() -> u32 {
    6
}

fn default_max_exp() -> u32 {
    14
}

fn default_sigma_n() -> usize {
    1000
}

fn default_sigma_trials() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: usize,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default)]
    pub coupled_with: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrDimConfig {
    pub n: usize,
    pub ladder: Vec<f64>,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapConfig {
    pub n: usize,
    pub trials: usize,
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    /// Also report nonexpansive fixed points of one composed draw.
    #[serde(default)]
    pub fixed_points: bool,
}

/// Explicit inputs for the `bounds` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub inputs: BoundInputs,
    pub t_ladder: Vec<f64>,
    #[serde(default = "unit_mass")]
    pub mu_b: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub interval: Option<(f64, f64)>,
    #[serde(default)]
    pub t_n: Option<f64>,
}

fn unit_mass() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    /// Pieces of a region set for locally contracting families.
    #[serde(default)]
    pub regions: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub seed: u64,
    /// Grid resolution for suprema over starting points.
    #[serde(default)]
    pub grid: Option<usize>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub lambda: Option<LambdaConfig>,
    #[serde(default)]
    pub tail: Option<TailConfig>,
    #[serde(default)]
    pub asclt: Option<AscltConfig>,
    #[serde(default)]
    pub corr_dim: Option<CorrDimConfig>,
    #[serde(default)]
    pub lyap: Option<LyapConfig>,
    #[serde(default)]
    pub bounds: Option<BoundsConfig>,
}

pub const DEFAULT_GRID: usize = 64;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn grid(&self) -> usize {
        self.grid.unwrap_or(DEFAULT_GRID)
    }

    pub fn region_set(&self, space: &StateSpace) -> Result<Option<RegionSet>> {
        self.regions.as_ref().map(|r| RegionSet::new(*space, r, self.grid())).transpose()
    }

    /// `start` as a point of `space`, or the space's reference point.
    pub fn start_point(space: &StateSpace, start: Option<&[f64]>) -> Result<Point> {
        start.map_or_else(|| Ok(space.origin()), |c| space.point(c))
    }

    pub fn section<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T> {
        section.as_ref().ok_or_else(|| Error::Config(format!("config has no `{name}` section")))
    }
}
