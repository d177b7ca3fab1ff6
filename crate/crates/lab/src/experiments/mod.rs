//! One module per experiment kind; each turns a config into a RunArtifact.

pub mod approx;
pub mod dimension;
pub mod entropy;
pub mod expansive;
pub mod recurrence;
pub mod suite;

use ergokit::measures::Measure;
use ergokit::systems::{Point, SystemHandle};

use crate::artifact::RunArtifact;
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::rng::Streams;
use crate::LabError;

pub fn run(cfg: &ExperimentConfig) -> Result<RunArtifact, LabError> {
    match cfg.experiment {
        ExperimentKind::EntropyLocal => entropy::run_local(cfg),
        ExperimentKind::EntropySpectrum => entropy::run_spectrum(cfg),
        ExperimentKind::Recurrence => recurrence::run(cfg),
        ExperimentKind::Dimension => dimension::run(cfg),
        ExperimentKind::Expansive => expansive::run(cfg),
        ExperimentKind::Approx => approx::run_genericity_experiment(cfg),
        ExperimentKind::Suite => suite::run_inequality_suite(cfg),
    }
}

/// System, measure and a sample drawn from it. `reach` is the number of
/// coordinates every point must carry.
pub(crate) struct Setup {
    pub sys: SystemHandle,
    pub mu: Measure,
    pub sample: Vec<Point>,
}

pub(crate) fn setup(cfg: &ExperimentConfig, reach: usize) -> Result<Setup, LabError> {
    let sys = cfg.system.build()?;
    let streams = Streams::new(cfg.seed);
    let mu = cfg.measure.build(&sys, &streams, reach)?;
    if cfg.sample.points == 0 {
        return Err(LabError::Config("sample.points must be positive".into()));
    }
    let sample = mu.sample(&sys, &mut streams.get("sample"), cfg.sample.points, reach)?;
    Ok(Setup { sys, mu, sample })
}
