//! Return and waiting times on a geometric radius ladder, recurrence rates,
//! and the Varandas upper-bound checks for expanding systems.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dimension::{packing_dimension_estimate, DimensionConfig, PackingReport};
use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::stats;
use crate::systems::{Point, SystemHandle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderConfig {
    /// Largest radius; rung j is r0·2^{-j}.
    pub r0: f64,
    pub rungs: usize,
    /// Rates are read from this many smallest radii with a finite time.
    pub fit_rungs: usize,
    pub horizon: u64,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig { r0: 0.1, rungs: 10, fit_rungs: 5, horizon: 1_000_000 }
    }
}

impl LadderConfig {
    pub fn radii(&self) -> Vec<f64> {
        (0..self.rungs).map(|j| self.r0 * 0.5f64.powi(j as i32)).collect()
    }

    fn validate(&self, sys: &SystemHandle) -> Result<()> {
        if !(self.r0 > 0.0) || self.r0 > sys.diameter() {
            return Err(Error::Invalid(format!("r0 = {} must lie in (0, diam]", self.r0)));
        }
        if self.rungs == 0 || self.fit_rungs == 0 || self.horizon == 0 {
            return Err(Error::Invalid("ladder needs rungs, fit rungs and horizon >= 1".into()));
        }
        Ok(())
    }
}

/// Fraction of NotFound rungs above which a profile is flagged unreliable.
pub const UNRELIABLE_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceProfile {
    pub radii: Vec<f64>,
    /// None: not found within the horizon.
    pub times: Vec<Option<u64>>,
    pub lower_rate: f64,
    pub upper_rate: f64,
    /// Least-squares slope of log τ against −log r over the fit rungs.
    pub slope: f64,
    /// Largest |log τ − fitted line| over the fit rungs.
    pub max_residual: f64,
    pub not_found: usize,
    pub reliable: bool,
    pub horizon: u64,
}

impl RecurrenceProfile {
    /// `r,tau,found`; unfound rungs report the horizon.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,tau,found\n");
        for (r, t) in self.radii.iter().zip(&self.times) {
            match t {
                Some(k) => out.push_str(&format!("{r},{k},true\n")),
                None => out.push_str(&format!("{r},{},false\n", self.horizon)),
            }
        }
        out
    }
}

/// First k ∈ [1, horizon] with d(f^k x, y) < r for each radius, found in one
/// pass along the orbit. Radii must be strictly decreasing.
pub fn entrance_ladder(sys: &SystemHandle, x: &Point, y: &Point, radii: &[f64], horizon: u64) -> Result<Vec<Option<u64>>> {
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("radii must be positive and strictly decreasing".into()));
    }
    if horizon == 0 {
        return Err(Error::Invalid("horizon must be at least 1".into()));
    }
    let mut times = vec![None; radii.len()];
    let mut next = 0;
    let mut z = x.clone();
    for k in 1..=horizon {
        if next == radii.len() {
            break;
        }
        z = sys.apply(&z)?;
        let d = sys.metric(&z, y)?;
        // a hit on rung j is a hit on every larger rung
        while next < radii.len() && d < radii[next] {
            times[next] = Some(k);
            next += 1;
        }
    }
    Ok(times)
}

/// τ_r(x): least k ≥ 1 with f^k x ∈ B(x, r).
pub fn return_time(sys: &SystemHandle, x: &Point, r: f64, horizon: u64) -> Result<Option<u64>> {
    Ok(entrance_ladder(sys, x, x, &[r], horizon)?[0])
}

/// τ_r(x, y): least k ≥ 1 with f^k x ∈ B(y, r).
pub fn waiting_time(sys: &SystemHandle, x: &Point, y: &Point, r: f64, horizon: u64) -> Result<Option<u64>> {
    Ok(entrance_ladder(sys, x, y, &[r], horizon)?[0])
}

pub fn recurrence_rates(sys: &SystemHandle, x: &Point, cfg: &LadderConfig) -> Result<RecurrenceProfile> {
    waiting_rates(sys, x, x, cfg)
}

/// Rates of τ_r(x, y) along the ladder. Over the `fit_rungs` smallest radii
/// with a finite time, the lower (upper) rate is the min (max) of
/// log τ_r/(−log r), and both are exactly 0 when τ is constant there.
pub fn waiting_rates(sys: &SystemHandle, x: &Point, y: &Point, cfg: &LadderConfig) -> Result<RecurrenceProfile> {
    cfg.validate(sys)?;
    let radii = cfg.radii();
    let times = entrance_ladder(sys, x, y, &radii, cfg.horizon)?;
    let finite: Vec<(f64, u64)> = radii.iter().zip(&times).filter_map(|(&r, t)| t.map(|k| (r, k))).collect();
    if finite.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} of {} rungs found within horizon {}",
            finite.len(),
            radii.len(),
            cfg.horizon
        )));
    }
    let fit = &finite[finite.len().saturating_sub(cfg.fit_rungs)..];
    let xs: Vec<f64> = fit.iter().map(|(r, _)| -r.ln()).collect();
    let ys: Vec<f64> = fit.iter().map(|(_, k)| (*k as f64).ln()).collect();
    let constant = fit.iter().all(|(_, k)| *k == fit[0].1);
    let (lower_rate, upper_rate) = if constant {
        (0.0, 0.0)
    } else {
        let ratios: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| b / a).collect();
        (ratios.iter().copied().fold(f64::INFINITY, f64::min), ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    };
    let slope = if fit.len() >= 2 { stats::ls_slope(&xs, &ys) } else { 0.0 };
    let max_residual = if fit.len() >= 2 {
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        xs.iter().zip(&ys).map(|(a, b)| (b - my - slope * (a - mx)).abs()).fold(0.0, f64::max)
    } else {
        0.0
    };
    let not_found = radii.len() - finite.len();
    Ok(RecurrenceProfile {
        reliable: (not_found as f64) <= UNRELIABLE_FRACTION * radii.len() as f64,
        radii,
        times,
        lower_rate,
        upper_rate,
        slope,
        max_residual,
        not_found,
        horizon: cfg.horizon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarandasConfig {
    pub ladder: LadderConfig,
    /// Entropy reference h; the bound is h/log λ.
    pub entropy: f64,
    pub point_slack: f64,
    pub pair_slack: f64,
    pub dimension: DimensionConfig,
    pub dimension_slack: f64,
}

impl VarandasConfig {
    pub fn new(entropy: f64) -> Self {
        VarandasConfig {
            ladder: LadderConfig { rungs: 14, ..LadderConfig::default() },
            entropy,
            point_slack: 0.1,
            pair_slack: 0.15,
            dimension: DimensionConfig::default(),
            dimension_slack: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarandasItem {
    pub checked: usize,
    /// Profiles without enough finite times; counted as violations.
    pub undetermined: usize,
    pub satisfied: usize,
    pub fraction: f64,
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarandasReport {
    pub bound: f64,
    /// Packing-dimension surrogate against bound + dimension_slack.
    pub packing: PackingReport,
    pub packing_ok: bool,
    /// R̄(x) ≤ bound + point_slack.
    pub points: VarandasItem,
    /// R̄(x, y) ≤ bound + pair_slack, pairing sample i with i + N/2.
    pub pairs: VarandasItem,
}

fn tally(rates: Vec<Option<f64>>, limit: f64) -> VarandasItem {
    let checked = rates.len();
    let undetermined = rates.iter().filter(|r| r.is_none()).count();
    let satisfied = rates.iter().filter(|r| matches!(r, Some(v) if *v <= limit)).count();
    VarandasItem {
        checked,
        undetermined,
        satisfied,
        fraction: satisfied as f64 / checked.max(1) as f64,
        rates: rates.into_iter().map(|r| r.unwrap_or(f64::NAN)).collect(),
    }
}

fn rate_or_none(r: Result<RecurrenceProfile>) -> Result<Option<f64>> {
    match r {
        Ok(p) => Ok(Some(p.upper_rate)),
        Err(Error::InsufficientData(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// The three upper bounds by h_μ/log λ on a sample from μ.
pub fn varandas_check(sys: &SystemHandle, mu: &Measure, sample: &[Point], cfg: &VarandasConfig) -> Result<VarandasReport> {
    let lambda = sys.expanding.ok_or_else(|| Error::NoExpandingConstant(sys.name.clone()))?.lambda;
    if sample.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    let bound = cfg.entropy / lambda.ln();
    let points = sample
        .par_iter()
        .map(|x| rate_or_none(recurrence_rates(sys, x, &cfg.ladder)))
        .collect::<Result<Vec<_>>>()?;
    let n = sample.len();
    let pairs = (0..n)
        .into_par_iter()
        .map(|i| rate_or_none(waiting_rates(sys, &sample[i], &sample[(i + n / 2) % n], &cfg.ladder)))
        .collect::<Result<Vec<_>>>()?;
    let mut dim_cfg = cfg.dimension.clone();
    dim_cfg.entropy = Some(cfg.entropy);
    let packing = packing_dimension_estimate(sys, mu, sample, &dim_cfg)?;
    Ok(VarandasReport {
        bound,
        packing_ok: packing.surrogate.value <= bound + cfg.dimension_slack,
        packing,
        points: tally(points, bound + cfg.point_slack),
        pairs: tally(pairs, bound + cfg.pair_slack),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{Phase, Sided, Word};

    #[test]
    fn fixed_and_periodic_points() {
        let sys = SystemHandle::doubling();
        let zero = Point::circle(0.0);
        assert_eq!(return_time(&sys, &zero, 1e-9, 10).unwrap(), Some(1));
        let x = Point::Circle(Phase::periodic(&[false, true, true]));
        assert_eq!(return_time(&sys, &x, 0.1, 100).unwrap(), Some(3));
        let cfg = LadderConfig { r0: 0.1, rungs: 8, fit_rungs: 5, horizon: 100 };
        let p = recurrence_rates(&sys, &x, &cfg).unwrap();
        assert_eq!((p.lower_rate, p.upper_rate), (0.0, 0.0));
        assert!(p.reliable);
    }

    #[test]
    fn waiting_miss_is_not_found() {
        let sys = SystemHandle::full_shift(2, Sided::One);
        let x = Point::Word(Word::periodic(vec![0]));
        let y = Point::Word(Word::periodic(vec![1]));
        assert_eq!(waiting_time(&sys, &x, &y, 0.25, 1000).unwrap(), None);
        assert_eq!(waiting_time(&sys, &y, &sys.apply(&y).unwrap(), 0.01, 5).unwrap(), Some(1));
        let cfg = LadderConfig { r0: 0.5, rungs: 6, fit_rungs: 3, horizon: 50 };
        assert!(matches!(waiting_rates(&sys, &x, &y, &cfg), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn csv_layout() {
        let p = RecurrenceProfile {
            radii: vec![0.1, 0.05],
            times: vec![Some(3), None],
            lower_rate: 0.0,
            upper_rate: 0.0,
            slope: 0.0,
            max_residual: 0.0,
            not_found: 1,
            reliable: false,
            horizon: 9,
        };
        assert_eq!(p.to_csv(), "r,tau,found\n0.1,3,true\n0.05,9,false\n");
    }
}
