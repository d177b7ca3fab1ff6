//! Γ-set masses and the finite-scale expansivity verdicts.

use serde_json::json;

use ergokit::expansive::classify_expansive;

use super::setup;
use crate::artifact::{num, RunArtifact, Table};
use crate::config::ExperimentConfig;
use crate::svg::Plot;
use crate::LabError;

pub fn run(cfg: &ExperimentConfig) -> Result<RunArtifact, LabError> {
    let ec = &cfg.expansive.config;
    let s = setup(cfg, ec.n_max + 300)?;
    let verdicts = classify_expansive(&s.sys, &s.mu, &s.sample, &cfg.expansive.deltas, ec)?;

    let mut masses = Table::new("masses", &["delta", "index", "n", "mass"]);
    let mut table = Table::new("verdicts", &["delta", "verdict", "expansive_fraction", "stalled_fraction", "max_tail_mass"]);
    let mut rows = Vec::new();
    for v in &verdicts {
        for (i, p) in v.per_point.iter().enumerate() {
            for (n, m) in p.masses.iter().enumerate() {
                masses.push(vec![num(v.delta), i.to_string(), n.to_string(), num(*m)]);
            }
        }
        let tail = v.per_point.iter().map(|p| p.masses[ec.n_max]).fold(0.0, f64::max);
        let name = serde_json::to_value(v.verdict)?;
        table.push(vec![
            num(v.delta),
            name.as_str().unwrap_or_default().to_string(),
            num(v.expansive_fraction),
            num(v.stalled_fraction),
            num(tail),
        ]);
        rows.push(json!({
            "delta": v.delta,
            "sided": v.sided,
            "verdict": v.verdict,
            "expansive_fraction": v.expansive_fraction,
            "stalled_fraction": v.stalled_fraction,
            "max_tail_mass": tail,
        }));
    }
    let summary = json!({ "system": s.sys.name, "points": s.sample.len(), "n_max": ec.n_max, "verdicts": rows });
    let mut art = RunArtifact::new(cfg.experiment.name(), summary);
    art.plots.push(Plot::from_table("masses", "masses of V[x, n, delta]", &masses, "n", "mass", Some("delta")).log_y());
    art.tables.extend([masses, table]);
    Ok(art)
}
