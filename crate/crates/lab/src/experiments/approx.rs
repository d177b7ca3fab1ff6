//! Genericity experiment: periodized random words from an analytic target
//! approach it weakly while every zero-entropy indicator stays at 0.

use rayon::prelude::*;
use serde_json::json;

use ergokit::dimension::{local_dimension, DimensionConfig};
use ergokit::entropy::essential_local_entropy;
use ergokit::expansive::{default_side, eta_lower};
use ergokit::measures::{invariance_defect, periodize, wasserstein1, Measure, DEFAULT_ATOM_CAP};
use ergokit::recurrence::{recurrence_rates, LadderConfig};
use ergokit::stats::median;

use crate::artifact::{num, RunArtifact, Table};
use crate::config::ExperimentConfig;
use crate::rng::Streams;
use crate::svg::Plot;
use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub length: usize,
    pub trial: usize,
    pub word: Vec<u8>,
    pub w1: f64,
    pub entropy: f64,
    pub recurrence: f64,
    pub dimension: f64,
    pub eta: f64,
    pub invariance_defect: f64,
}

pub fn run_genericity_experiment(cfg: &ExperimentConfig) -> Result<RunArtifact, LabError> {
    let sys = cfg.system.build()?;
    if !sys.is_shift() {
        return Err(LabError::Config(format!("approx needs a full shift, got `{}`", sys.name)));
    }
    let streams = Streams::new(cfg.seed);
    let target = match cfg.measure.build(&sys, &streams, 0)? {
        Measure::Analytic(a) => a,
        Measure::Atomic(_) => return Err(LabError::Config("approx needs an analytic target measure".into())),
    };
    let ac = &cfg.approx;
    if ac.lengths.is_empty() || ac.trials == 0 {
        return Err(LabError::Config("approx needs word lengths and at least one trial".into()));
    }
    let (disc, disc_err) = target.discretize(&sys, ac.depth, DEFAULT_ATOM_CAP)?;
    let delta = *cfg.expansive.deltas.first().ok_or_else(|| LabError::Config("expansive.deltas is empty".into()))?;
    let n_max = cfg.expansive.config.n_max;
    let side = default_side(&sys);

    let mut rng = streams.get("approx/words");
    let mut jobs = Vec::new();
    for &l in &ac.lengths {
        if l == 0 {
            return Err(LabError::Config("word length must be positive".into()));
        }
        for t in 0..ac.trials {
            let w = target.sample_window(&mut rng, 0, l);
            jobs.push((l, t, w.slice(0, l as i64 - 1)?));
        }
    }
    let trials = jobs
        .into_par_iter()
        .map(|(length, trial, word)| -> Result<Trial, LabError> {
            let nu = periodize(&sys, &word)?;
            let w1 = wasserstein1(&sys, &nu, &disc)?.value;
            let defect = invariance_defect(&sys, &nu)?;
            let r0 = 0.99 * nu.separation(&sys)?.min(sys.diameter());
            let x = nu.atoms()[0].clone();
            let mu: Measure = nu.clone().into();
            let entropy = essential_local_entropy(&sys, &mu, nu.atoms(), &cfg.grid)?.value;
            let ladder = LadderConfig { r0, rungs: 8, fit_rungs: 5, horizon: 2 * length as u64 + 2 };
            let recurrence = recurrence_rates(&sys, &x, &ladder)?.upper_rate;
            let dc = DimensionConfig { r0, ..cfg.dimension.clone() };
            let dimension = local_dimension(&sys, &mu, &x, &dc)?.value;
            let eta = eta_lower(&sys, &mu, &x, delta, 0, n_max, side)?;
            Ok(Trial { length, trial, word, w1, entropy, recurrence, dimension, eta, invariance_defect: defect })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(
        "trials",
        &["L", "trial", "word", "w1", "entropy", "recurrence", "dimension", "eta", "invariance_defect"],
    );
    for t in &trials {
        table.push(vec![
            t.length.to_string(),
            t.trial.to_string(),
            t.word.iter().map(|s| s.to_string()).collect::<String>(),
            num(t.w1),
            num(t.entropy),
            num(t.recurrence),
            num(t.dimension),
            num(t.eta),
            num(t.invariance_defect),
        ]);
    }
    let mut medians = Table::new("median_w1", &["L", "median_w1"]);
    let mut meds = Vec::new();
    for &l in &ac.lengths {
        let v: Vec<f64> = trials.iter().filter(|t| t.length == l).map(|t| t.w1).collect();
        let m = median(&v);
        meds.push(m);
        medians.push(vec![l.to_string(), num(m)]);
    }
    let decreasing = meds.windows(2).all(|w| w[1] < w[0]);
    let all_zero = |f: fn(&Trial) -> f64| trials.iter().all(|t| f(t) == 0.0);
    let summary = json!({
        "system": sys.name,
        "target_entropy": target.entropy(),
        "depth": ac.depth,
        "discretization_error": disc_err,
        "lengths": ac.lengths,
        "trials": ac.trials,
        "median_w1": meds,
        "median_w1_strictly_decreasing": decreasing,
        "entropy_all_zero": all_zero(|t| t.entropy),
        "recurrence_all_zero": all_zero(|t| t.recurrence),
        "dimension_all_zero": all_zero(|t| t.dimension),
        "invariance_defect_all_zero": all_zero(|t| t.invariance_defect),
        "eta_min": trials.iter().map(|t| t.eta).fold(f64::INFINITY, f64::min),
    });
    let mut art = RunArtifact::new(cfg.experiment.name(), summary);
    art.plots.push(Plot::from_table("median_w1", "median W1 to target", &medians, "L", "median_w1", None).log_log());
    art.plots.push(Plot::from_table("w1_entropy", "W1 against entropy estimate", &table, "w1", "entropy", Some("L")));
    art.tables.extend([table, medians]);
    Ok(art)
}
