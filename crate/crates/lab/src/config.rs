//! Experiment configuration, read from and written to TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use ergokit::dimension::DimensionConfig;
use ergokit::entropy::ScaleGrid;
use ergokit::expansive::ExpansiveConfig;
use ergokit::measures::{periodize, uniform_empirical, AnalyticMeasure, AtomicMeasure, Measure, PointJson};
use ergokit::recurrence::LadderConfig;
use ergokit::systems::{Sided, SystemHandle};

use crate::rng::Streams;
use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EntropyLocal,
    EntropySpectrum,
    Recurrence,
    Dimension,
    Expansive,
    Approx,
    Suite,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::EntropyLocal => "entropy-local",
            ExperimentKind::EntropySpectrum => "entropy-spectrum",
            ExperimentKind::Recurrence => "recurrence",
            ExperimentKind::Dimension => "dimension",
            ExperimentKind::Expansive => "expansive",
            ExperimentKind::Approx => "approx",
            ExperimentKind::Suite => "suite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SystemSpec {
    Doubling,
    Tent,
    Rotation { alpha: f64 },
    Shift { alphabet: u8, sided: Sided },
}

impl SystemSpec {
    pub fn build(&self) -> Result<SystemHandle, LabError> {
        Ok(match self {
            SystemSpec::Doubling => SystemHandle::doubling(),
            SystemSpec::Tent => SystemHandle::tent(),
            SystemSpec::Rotation { alpha } => SystemHandle::rotation(*alpha),
            SystemSpec::Shift { alphabet, sided } => {
                if *alphabet < 2 {
                    return Err(LabError::Config(format!("shift alphabet {alphabet} must be at least 2")));
                }
                SystemHandle::full_shift(*alphabet, *sided)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSpec {
    Bernoulli {
        p: Vec<f64>,
    },
    Markov {
        #[serde(rename = "P")]
        p: Vec<Vec<f64>>,
        pi: Vec<f64>,
    },
    /// Periodic measure of …www… on a shift.
    Periodic {
        word: Vec<u8>,
    },
    /// Empirical measure of a random orbit segment of `length` points.
    UniformEmpirical {
        length: usize,
    },
    Atomic {
        atoms: Vec<PointJson>,
        weights: Vec<f64>,
    },
}

impl MeasureSpec {
    /// `reach`: coordinates (or bits) every sampled point must still carry.
    pub fn build(&self, sys: &SystemHandle, streams: &Streams, reach: usize) -> Result<Measure, LabError> {
        Ok(match self {
            MeasureSpec::Bernoulli { p } => {
                let m = AnalyticMeasure::bernoulli(p.clone())?;
                m.check_system(sys)?;
                m.into()
            }
            MeasureSpec::Markov { p, pi } => {
                let m = AnalyticMeasure::markov(p.clone(), pi.clone())?;
                m.check_system(sys)?;
                m.into()
            }
            MeasureSpec::Periodic { word } => periodize(sys, word)?.into(),
            MeasureSpec::UniformEmpirical { length } => {
                uniform_empirical(sys, &mut streams.get("measure"), *length, reach)?.into()
            }
            MeasureSpec::Atomic { atoms, weights } => {
                let pts = atoms.iter().map(PointJson::to_point).collect::<Result<Vec<_>, _>>()?;
                AtomicMeasure::new(sys, pts, weights.clone())?.into()
            }
        })
    }

    /// Closed-form metric entropy, when the measure has one.
    pub fn entropy(&self, sys: &SystemHandle) -> Option<f64> {
        match self {
            MeasureSpec::Bernoulli { p } => AnalyticMeasure::bernoulli(p.clone()).ok().map(|m| m.entropy()),
            MeasureSpec::Markov { p, pi } => AnalyticMeasure::markov(p.clone(), pi.clone()).ok().map(|m| m.entropy()),
            MeasureSpec::Periodic { .. } => Some(0.0),
            MeasureSpec::UniformEmpirical { .. } => sys.expanding.map(|e| e.lambda.ln()),
            MeasureSpec::Atomic { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub points: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { points: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansiveSection {
    pub deltas: Vec<f64>,
    #[serde(flatten)]
    pub config: ExpansiveConfig,
}

impl Default for ExpansiveSection {
    fn default() -> Self {
        ExpansiveSection { deltas: vec![0.25], config: ExpansiveConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxConfig {
    pub lengths: Vec<usize>,
    pub trials: usize,
    /// Cylinder depth of the discretized target.
    pub depth: usize,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig { lengths: vec![4, 8, 16, 32, 64], trials: 50, depth: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suites: Vec<String>,
    pub mollifier_cases: usize,
    pub beta_gamma_cases: usize,
    pub cover_cases: usize,
    pub eta_theta_cases: usize,
    pub q_monotone_cases: usize,
    pub periodic_cases: usize,
    /// Slope multiplier of the mollifier ramp; 1 is the true mollifier.
    pub mollifier_ramp: f64,
}

pub const ALL_SUITES: [&str; 6] = ["mollifier", "beta-gamma", "cover-chain", "eta-theta", "q-monotone", "periodic-zero"];

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            suites: ALL_SUITES.iter().map(|s| s.to_string()).collect(),
            mollifier_cases: 1000,
            beta_gamma_cases: 500,
            cover_cases: 200,
            eta_theta_cases: 200,
            q_monotone_cases: 60,
            periodic_cases: 50,
            mollifier_ramp: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub out: String,
    pub system: SystemSpec,
    pub measure: MeasureSpec,
    #[serde(default)]
    pub grid: ScaleGrid,
    #[serde(default)]
    pub ladder: LadderConfig,
    #[serde(default)]
    pub dimension: DimensionConfig,
    #[serde(default)]
    pub expansive: ExpansiveSection,
    #[serde(default)]
    pub sample: SampleConfig,
    #[serde(default)]
    pub approx: ApproxConfig,
    #[serde(default)]
    pub suite: SuiteConfig,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, system: SystemSpec, measure: MeasureSpec) -> Self {
        ExperimentConfig {
            experiment,
            seed: 0,
            out: "out".into(),
            system,
            measure,
            grid: ScaleGrid::default(),
            ladder: LadderConfig::default(),
            dimension: DimensionConfig::default(),
            expansive: ExpansiveSection::default(),
            sample: SampleConfig::default(),
            approx: ApproxConfig::default(),
            suite: SuiteConfig::default(),
        }
    }

    /// Built-in configuration used when no config file is given.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let fair = MeasureSpec::Bernoulli { p: vec![0.5, 0.5] };
        let one = SystemSpec::Shift { alphabet: 2, sided: Sided::One };
        match kind {
            ExperimentKind::EntropyLocal | ExperimentKind::Approx | ExperimentKind::Suite => Self::new(kind, one, fair),
            ExperimentKind::EntropySpectrum => Self::new(kind, one, MeasureSpec::Bernoulli { p: vec![0.25, 0.75] }),
            ExperimentKind::Recurrence | ExperimentKind::Dimension => {
                let mut c = Self::new(kind, SystemSpec::Doubling, MeasureSpec::UniformEmpirical { length: 1 << 14 });
                c.ladder.rungs = 14;
                c.sample.points = 200;
                c
            }
            ExperimentKind::Expansive => {
                let mut c = Self::new(kind, SystemSpec::Shift { alphabet: 2, sided: Sided::Two }, fair);
                c.sample.points = 8;
                c
            }
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, LabError> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}
