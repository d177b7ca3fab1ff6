//! Return and waiting times on a radius ladder, and the h/log λ bounds when
//! the system declares an expanding constant.

use rayon::prelude::*;
use serde_json::json;

use ergokit::recurrence::{recurrence_rates, varandas_check, waiting_rates, RecurrenceProfile, VarandasConfig};
use ergokit::Error;

use super::setup;
use crate::artifact::{num, RunArtifact, Table};
use crate::config::ExperimentConfig;
use crate::svg::Plot;
use crate::LabError;

const RATE_HEADER: [&str; 7] = ["index", "lower_rate", "upper_rate", "slope", "not_found", "reliable", "status"];

fn rate_row(i: usize, r: &Result<RecurrenceProfile, Error>) -> Vec<String> {
    match r {
        Ok(p) => vec![
            i.to_string(),
            num(p.lower_rate),
            num(p.upper_rate),
            num(p.slope),
            p.not_found.to_string(),
            p.reliable.to_string(),
            "ok".into(),
        ],
        Err(_) => vec![i.to_string(), "nan".into(), "nan".into(), "nan".into(), "nan".into(), "false".into(), "insufficient".into()],
    }
}

fn keep_insufficient(r: Result<RecurrenceProfile, Error>) -> Result<Result<RecurrenceProfile, Error>, LabError> {
    match r {
        Err(e @ Error::InsufficientData(_)) => Ok(Err(e)),
        Err(e) => Err(e.into()),
        ok => Ok(ok),
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunArtifact, LabError> {
    let s = setup(cfg, cfg.ladder.horizon as usize + 64)?;
    let n = s.sample.len();
    let points = s
        .sample
        .par_iter()
        .map(|x| keep_insufficient(recurrence_rates(&s.sys, x, &cfg.ladder)))
        .collect::<Result<Vec<_>, _>>()?;
    let pairs = (0..n)
        .into_par_iter()
        .map(|i| keep_insufficient(waiting_rates(&s.sys, &s.sample[i], &s.sample[(i + n / 2) % n], &cfg.ladder)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut pt = Table::new("return_rates", &RATE_HEADER);
    let mut pr = Table::new("waiting_rates", &RATE_HEADER);
    let mut ladder = Table::new("return_ladder", &["index", "r", "tau", "found"]);
    for (i, r) in points.iter().enumerate() {
        pt.push(rate_row(i, r));
        if let Ok(p) = r {
            for (rad, t) in p.radii.iter().zip(&p.times) {
                ladder.push(vec![
                    i.to_string(),
                    num(*rad),
                    t.unwrap_or(p.horizon).to_string(),
                    t.is_some().to_string(),
                ]);
            }
        }
    }
    for (i, r) in pairs.iter().enumerate() {
        pr.push(rate_row(i, r));
    }
    let reliable = points.iter().chain(&pairs).all(|r| matches!(r, Ok(p) if p.reliable));

    let entropy = cfg.measure.entropy(&s.sys);
    let varandas = match (entropy, s.sys.expanding) {
        (Some(h), Some(_)) => {
            let vc = VarandasConfig { ladder: cfg.ladder.clone(), dimension: cfg.dimension.clone(), ..VarandasConfig::new(h) };
            let r = varandas_check(&s.sys, &s.mu, &s.sample, &vc)?;
            Some(json!({
                "bound": r.bound,
                "point_limit": r.bound + vc.point_slack,
                "pair_limit": r.bound + vc.pair_slack,
                "points_fraction": r.points.fraction,
                "points_undetermined": r.points.undetermined,
                "pairs_fraction": r.pairs.fraction,
                "pairs_undetermined": r.pairs.undetermined,
                "packing_surrogate": r.packing.surrogate.value,
                "packing_limit": r.bound + vc.dimension_slack,
                "packing_ok": r.packing_ok,
            }))
        }
        _ => None,
    };
    let ups = |t: &Table| {
        let mut v: Vec<f64> = t.column("upper_rate").into_iter().filter(|x| x.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let summary = json!({
        "system": s.sys.name,
        "points": n,
        "median_return_upper": ergokit::stats::median(&ups(&pt)),
        "median_waiting_upper": ergokit::stats::median(&ups(&pr)),
        "reliable": reliable,
        "varandas": varandas,
    });
    let mut art = RunArtifact::new(cfg.experiment.name(), summary);
    art.converged = reliable;
    art.plots.push(Plot::from_table("return_ladder", "return times", &ladder, "r", "tau", None).log_log());
    art.tables.extend([pt, pr, ladder]);
    Ok(art)
}
