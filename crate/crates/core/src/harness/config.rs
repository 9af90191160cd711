//! Experiment configuration, read from TOML.
//!
//! Every field has a default, so an empty file is a valid configuration;
//! `quapprox scaling --dump-config` prints them all. Unknown keys are
//! rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ErrorMeasure;
use crate::fourier::FourierModel;
use crate::sampling::FrequencyDensity;
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Best-of-K sampled trainable circuits.
    Trainable,
    /// Random reservoir with analytic readout weights.
    ReservoirOptimal,
    /// Random reservoir with a least-squares readout.
    ReservoirFitted,
}

impl Mode {
    pub fn tag(self) -> &'static str {
        match self {
            Mode::Trainable => "trainable",
            Mode::ReservoirOptimal => "reservoir-optimal",
            Mode::ReservoirFitted => "reservoir-fitted",
        }
    }

    pub fn is_reservoir(self) -> bool {
        self != Mode::Trainable
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Mode::Trainable, Mode::ReservoirOptimal, Mode::ReservoirFitted]
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| {
                Error::Argument(format!(
                    "unknown mode '{s}' (expected trainable, reservoir-optimal or reservoir-fitted)"
                ))
            })
    }
}

/// Whether circuit outputs come from simulation or from the cosine formulas.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluation {
    #[default]
    Simulated,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    #[default]
    Uniform,
    Gaussian,
    Dirac,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureConfig {
    pub kind: MeasureKind,
    /// Half-width of the hypercube for `uniform`.
    pub half_width: f64,
    /// Standard deviation for `gaussian`.
    pub sigma: f64,
    /// Support and weights for `dirac`.
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// CSV with columns `x1,…,xd,weight` for `file`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            kind: MeasureKind::Uniform,
            half_width: 1.0,
            sigma: 1.0,
            points: Vec::new(),
            weights: Vec::new(),
            path: None,
        }
    }
}

impl MeasureConfig {
    pub fn build(&self) -> Result<ErrorMeasure> {
        let field = |e: Error| Error::Config(format!("[measure]: {e}"));
        match self.kind {
            MeasureKind::Uniform => ErrorMeasure::uniform(self.half_width).map_err(field),
            MeasureKind::Gaussian => ErrorMeasure::gaussian(self.sigma).map_err(field),
            MeasureKind::Dirac => ErrorMeasure::dirac(self.points.clone(), self.weights.clone()).map_err(field),
            MeasureKind::File => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("[measure] kind = \"file\" needs `path`".into()))?;
                ErrorMeasure::from_file(Path::new(path))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainableConfig {
    /// K in best-of-K selection.
    pub candidates: usize,
    /// Points drawn from μ to score candidates.
    pub selection_points: usize,
    /// Output scale R; defaults to the spectral mass of the model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Estimate probabilities from this many shots instead of exactly.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
}

impl Default for TrainableConfig {
    fn default() -> Self {
        Self {
            candidates: 20,
            selection_points: 256,
            r: None,
            shots: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReservoirConfig {
    /// Frequency density: `cauchy`, `t:<nu>`, `gaussian:<sigma>` or `mixture:<delta>:<nu>:<density>`.
    pub density: String,
    /// Ridge parameter; defaults to `1e-10 · n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    /// Training-set size for `reservoir-fitted`.
    pub train_points: usize,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        Self {
            density: "cauchy".into(),
            ridge: None,
            train_points: 512,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SupConfig {
    pub enabled: bool,
    /// The grid covers `[-half_width, half_width]^d`.
    pub half_width: f64,
    /// Intervals per axis; the grid has `grid + 1` points per axis.
    pub grid: usize,
}

impl Default for SupConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            half_width: 1.0,
            grid: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment_id: String,
    pub mode: Mode,
    /// `gaussian`, `laplace` or `shifted-gaussian[:<shift>]`.
    pub model: String,
    pub dim: usize,
    pub n: Vec<usize>,
    pub seeds: usize,
    pub master_seed: u64,
    /// Monte-Carlo points for each reported `L²` error.
    pub mc_points: usize,
    pub evaluation: Evaluation,
    pub measure: MeasureConfig,
    pub trainable: TrainableConfig,
    pub reservoir: ReservoirConfig,
    pub sup: SupConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment_id: "scaling".into(),
            mode: Mode::Trainable,
            model: "gaussian".into(),
            dim: 1,
            n: vec![4, 16, 64, 256],
            seeds: 50,
            master_seed: 1,
            mc_points: 2000,
            evaluation: Evaluation::Simulated,
            measure: MeasureConfig::default(),
            trainable: TrainableConfig::default(),
            reservoir: ReservoirConfig::default(),
            sup: SupConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serialises")
    }

    pub fn density(&self) -> Result<FrequencyDensity> {
        self.reservoir
            .density
            .parse()
            .map_err(|e| Error::Config(format!("reservoir.density: {e}")))
    }

    pub fn fourier_model(&self) -> Result<FourierModel> {
        FourierModel::by_name(&self.model, self.dim).map_err(|e| Error::Config(format!("model: {e}")))
    }

    /// Checks every field, naming the first offending one.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("field `{field}`: {msg}")));
        if self.schema_version != SCHEMA_VERSION {
            return bad(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            );
        }
        if self.experiment_id.trim().is_empty() {
            return bad("experiment_id", "must not be empty".into());
        }
        if self.dim == 0 {
            return bad("dim", "must be at least 1".into());
        }
        if self.model.trim().is_empty() {
            return bad("model", "missing".into());
        }
        self.fourier_model()?;
        if self.n.is_empty() {
            return bad("n", "needs at least one circuit size".into());
        }
        if let Some(k) = self.n.iter().position(|&n| n == 0) {
            return bad("n", format!("entry {k} is not positive"));
        }
        let mut sorted = self.n.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.n.len() {
            return bad("n", "sizes must be distinct".into());
        }
        if self.seeds == 0 {
            return bad("seeds", "must be at least 1".into());
        }
        if self.mc_points == 0 && self.measure.kind != MeasureKind::Dirac {
            return bad("mc_points", "must be at least 1".into());
        }
        let mu = self.measure.build()?;
        mu.check_dim(self.dim).map_err(|e| Error::Config(format!("[measure]: {e}")))?;
        match self.mode {
            Mode::Trainable => {
                if self.trainable.candidates == 0 {
                    return bad("trainable.candidates", "must be at least 1".into());
                }
                if self.trainable.selection_points == 0 {
                    return bad("trainable.selection_points", "must be at least 1".into());
                }
                if let Some(r) = self.trainable.r {
                    if !(r > 0.0 && r.is_finite()) {
                        return bad("trainable.r", format!("must be positive, got {r}"));
                    }
                }
                if self.trainable.shots == Some(0) {
                    return bad("trainable.shots", "must be positive when set".into());
                }
            }
            Mode::ReservoirOptimal | Mode::ReservoirFitted => {
                self.density()?;
                if let Some(l) = self.reservoir.ridge {
                    if !(l >= 0.0 && l.is_finite()) {
                        return bad("reservoir.ridge", format!("must be nonnegative, got {l}"));
                    }
                }
                if self.mode == Mode::ReservoirFitted && self.reservoir.train_points == 0 {
                    return bad("reservoir.train_points", "must be at least 1".into());
                }
            }
        }
        if self.sup.enabled {
            if !(self.sup.half_width >= 0.0 && self.sup.half_width.is_finite()) {
                return bad("sup.half_width", "must be nonnegative".into());
            }
            if self.sup.grid == 0 {
                return bad("sup.grid", "must be at least 1".into());
            }
            let total = ((self.sup.grid + 1) as f64).powi(self.dim as i32);
            if total > super::MAX_GRID_POINTS as f64 {
                return bad("sup.grid", format!("{total} grid points exceed the limit"));
            }
        }
        Ok(())
    }
}
