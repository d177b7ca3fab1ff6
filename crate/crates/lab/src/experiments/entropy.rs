//! Essential local entropy and the correlation-entropy spectrum.

use serde_json::json;

use ergokit::entropy::{correlation_entropy_spectrum, essential_local_entropy};

use super::setup;
use crate::artifact::{num, RunArtifact, Table};
use crate::config::ExperimentConfig;
use crate::svg::Plot;
use crate::LabError;

pub fn run_local(cfg: &ExperimentConfig) -> Result<RunArtifact, LabError> {
    let grid = &cfg.grid;
    grid.validate()?;
    let s = setup(cfg, grid.required_reach())?;
    let report = essential_local_entropy(&s.sys, &s.mu, &s.sample, grid)?;

    let mut points = Table::new("local_entropy", &["epsilon", "point", "value"]);
    for r in &report.per_scale {
        points.push(vec![num(r.epsilon), r.n.to_string(), num(r.raw)]);
    }
    let mut radii = Table::new("per_radius", &["epsilon", "quantile_value"]);
    for &e in &grid.epsilons {
        let vals: Vec<f64> = report.per_scale.iter().filter(|r| r.epsilon == e).map(|r| r.raw).collect();
        radii.push(vec![num(e), num(ergokit::stats::quantile(&vals, grid.quantile))]);
    }

    let reference = cfg.measure.entropy(&s.sys);
    let summary = json!({
        "system": s.sys.name,
        "points": s.sample.len(),
        "value": report.value,
        "converged": report.converged,
        "method": report.method,
        "reference_entropy": reference,
        "relative_error": reference.filter(|h| *h > 0.0).map(|h| report.value / h - 1.0),
    });
    let mut art = RunArtifact::new(cfg.experiment.name(), summary);
    art.converged = report.converged;
    art.plots.push(Plot::from_table("local_entropy", "local entropy per point", &points, "epsilon", "value", None).log_x());
    art.tables.push(points);
    art.tables.push(radii);
    Ok(art)
}

pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<RunArtifact, LabError> {
    let grid = &cfg.grid;
    grid.validate()?;
    let sys = cfg.system.build()?;
    let streams = crate::rng::Streams::new(cfg.seed);
    let mu = cfg.measure.build(&sys, &streams, grid.n_max + 64)?;
    let sp = correlation_entropy_spectrum(&sys, &mu, grid)?;

    let mut table = Table::new("spectrum", &["q", "H_lower", "H_upper", "converged"]);
    let mut scales = Table::new("spectrum_scales", &["q", "bound", "epsilon", "n", "increment"]);
    let mut converged = true;
    for r in &sp.rows {
        let c = r.lower.converged && r.upper.converged;
        converged &= c;
        table.push(vec![num(r.q), num(r.lower.value), num(r.upper.value), c.to_string()]);
        for (bound, rep) in [("lower", &r.lower), ("upper", &r.upper)] {
            for row in &rep.per_scale {
                scales.push(vec![num(r.q), bound.into(), num(row.epsilon), row.n.to_string(), num(row.raw)]);
            }
        }
    }
    let rows: Vec<_> = sp
        .rows
        .iter()
        .map(|r| json!({"q": r.q, "lower": r.lower.value, "upper": r.upper.value, "method": r.lower.method}))
        .collect();
    let summary = json!({ "system": sys.name, "rows": rows, "converged": converged });
    let mut art = RunArtifact::new(cfg.experiment.name(), summary);
    art.converged = converged;
    art.plots.push(Plot::columns("spectrum", "correlation entropy spectrum", &table, "q", &["H_lower", "H_upper"]));
    art.tables.push(table);
    art.tables.push(scales);
    Ok(art)
}
