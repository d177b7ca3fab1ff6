//! Local dimensions over a sample and the packing-dimension surrogate.

use rayon::prelude::*;
use serde_json::json;

use ergokit::dimension::{local_dimension, packing_dimension_estimate};

use super::setup;
use crate::artifact::{num, RunArtifact, Table};
use crate::config::ExperimentConfig;
use crate::svg::Plot;
use crate::LabError;

pub fn run(cfg: &ExperimentConfig) -> Result<RunArtifact, LabError> {
    let s = setup(cfg, 300)?;
    let mut dc = cfg.dimension.clone();
    if dc.entropy.is_none() {
        dc.entropy = cfg.measure.entropy(&s.sys);
    }
    let report = packing_dimension_estimate(&s.sys, &s.mu, &s.sample, &dc)?;
    let locals = s.sample.par_iter().map(|x| local_dimension(&s.sys, &s.mu, x, &dc)).collect::<Result<Vec<_>, _>>()?;

    let mut dims = Table::new("local_dimension", &["index", "value", "converged"]);
    let mut ladder = Table::new("mass_ladder", &["index", "r", "log_mass"]);
    for (i, r) in locals.iter().enumerate() {
        dims.push(vec![i.to_string(), num(r.value), r.converged.to_string()]);
        for row in &r.per_scale {
            ladder.push(vec![i.to_string(), num(row.epsilon), num(row.raw)]);
        }
    }
    let summary = json!({
        "system": s.sys.name,
        "points": s.sample.len(),
        "surrogate": report.surrogate.value,
        "surrogate_method": report.surrogate.method,
        "converged": report.surrogate.converged,
        "lower_quantile_value": report.lower_quantile_value,
        "lower_label": report.lower_label,
        "bound": report.varandas_bound,
    });
    let mut art = RunArtifact::new(cfg.experiment.name(), summary);
    art.converged = report.surrogate.converged;
    art.plots.push(Plot::from_table("mass_ladder", "ball masses", &ladder, "r", "log_mass", None).log_x());
    art.tables.extend([dims, ladder]);
    Ok(art)
}
