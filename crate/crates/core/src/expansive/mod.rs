//! Masses of the closed two-sided balls V[x, n, δ] and the finite-scale
//! expansive-measure test built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bowen::{ball_mass_with, mollified_mass_with, BallQuery, BallSide, DistanceTable, MassBracket, RefineOptions};
use crate::error::{Error, Result};
use crate::measures::{Measure, PointJson};
use crate::systems::{Point, SystemHandle};

/// Two-sided closed balls on invertible systems, forward closed balls otherwise.
pub fn default_side(sys: &SystemHandle) -> BallSide {
    if sys.invertible {
        BallSide::TwoSidedClosed
    } else {
        BallSide::ForwardClosed
    }
}

fn check_side(sys: &SystemHandle, sided: BallSide) -> Result<()> {
    match sided {
        BallSide::Open => Err(Error::Invalid("Γ-set masses use closed balls".into())),
        BallSide::TwoSidedClosed if !sys.invertible => Err(Error::NotInvertible(sys.name.clone())),
        _ => Ok(()),
    }
}

/// μ(V[x, n, δ]), an upper bound for μ(Γ_δ(x)).
pub fn gamma_set_mass(sys: &SystemHandle, mu: &Measure, x: &Point, delta: f64, n: usize, sided: BallSide) -> Result<f64> {
    Ok(gamma_set_mass_with(sys, mu, x, delta, n, sided, &RefineOptions::default())?.value)
}

pub fn gamma_set_mass_with(
    sys: &SystemHandle,
    mu: &Measure,
    x: &Point,
    delta: f64,
    n: usize,
    sided: BallSide,
    opts: &RefineOptions,
) -> Result<MassBracket> {
    check_side(sys, sided)?;
    if delta >= sys.diameter() && matches!(mu, Measure::Analytic(_)) {
        return Ok(MassBracket { value: 1.0, unresolved: 0.0, nodes: 0 });
    }
    ball_mass_with(sys, &BallQuery::new(x.clone(), n, delta, sided), mu, opts)
}

/// Masses (or mollified masses) for n = 0..=n_max.
fn profile(sys: &SystemHandle, mu: &Measure, x: &Point, eps: f64, n_max: usize, sided: BallSide, mollified: bool) -> Result<Vec<f64>> {
    check_side(sys, sided)?;
    match mu {
        Measure::Atomic(m) => {
            let t = DistanceTable::new(sys, sided, x, m, n_max)?;
            Ok((0..=n_max).map(|n| if mollified { t.mollified(eps, n) } else { t.mass(eps, n) }).collect())
        }
        Measure::Analytic(_) => (0..=n_max)
            .map(|n| {
                let q = BallQuery::new(x.clone(), n, eps, sided);
                let opts = RefineOptions::default();
                if mollified {
                    Ok(mollified_mass_with(sys, &q, mu, &opts)?.value)
                } else if eps >= sys.diameter() {
                    Ok(1.0)
                } else {
                    Ok(ball_mass_with(sys, &q, mu, &opts)?.value)
                }
            })
            .collect(),
    }
}

fn tail_inf(v: &[f64], s: usize) -> Result<f64> {
    if s >= v.len() {
        return Err(Error::Invalid(format!("tail start {s} beyond n_max {}", v.len() - 1)));
    }
    Ok(v[s..].iter().copied().fold(f64::INFINITY, f64::min))
}

/// inf_{s ≤ n ≤ n_max} μ(V[x, n, ε]).
pub fn eta_lower(sys: &SystemHandle, mu: &Measure, x: &Point, epsilon: f64, s: usize, n_max: usize, sided: BallSide) -> Result<f64> {
    tail_inf(&profile(sys, mu, x, epsilon, n_max, sided, false)?, s)
}

/// inf_{s ≤ n ≤ n_max} of the mollified mass under the same distance.
pub fn theta_lower(sys: &SystemHandle, mu: &Measure, x: &Point, epsilon: f64, s: usize, n_max: usize, sided: BallSide) -> Result<f64> {
    tail_inf(&profile(sys, mu, x, epsilon, n_max, sided, true)?, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Expansive,
    NotExpansive,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansiveConfig {
    pub n_max: usize,
    pub threshold: f64,
    /// Fraction of points that must look expansive; 1 − quantile of points
    /// with stalled masses rule expansivity out.
    pub quantile: f64,
    #[serde(default)]
    pub sided: Option<BallSide>,
}

impl Default for ExpansiveConfig {
    fn default() -> Self {
        ExpansiveConfig { n_max: 10, threshold: 1e-3, quantile: 0.95, sided: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMasses {
    pub x: PointJson,
    /// μ(V[x, n, δ]) for n = 0..=n_max.
    pub masses: Vec<f64>,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansivityVerdict {
    pub delta: f64,
    pub sided: BallSide,
    pub per_point: Vec<PointMasses>,
    pub verdict: Verdict,
    pub mass_quantile: f64,
    pub expansive_fraction: f64,
    pub stalled_fraction: f64,
}

/// One verdict per δ. Expansive: for at least `quantile` of the points the
/// mass at n_max is below threshold and still dropping. Not expansive: for
/// at least 1 − quantile of them it is at or above threshold and unchanged
/// from n_max − 1. Otherwise inconclusive.
pub fn classify_expansive(
    sys: &SystemHandle,
    mu: &Measure,
    sample: &[Point],
    deltas: &[f64],
    cfg: &ExpansiveConfig,
) -> Result<Vec<ExpansivityVerdict>> {
    if sample.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    if cfg.n_max == 0 {
        return Err(Error::Invalid("n_max must be at least 1".into()));
    }
    let sided = cfg.sided.unwrap_or_else(|| default_side(sys));
    deltas
        .iter()
        .map(|&delta| {
            let per_point = sample
                .par_iter()
                .map(|x| {
                    let masses = profile(sys, mu, x, delta, cfg.n_max, sided, false)?;
                    let eta = tail_inf(&masses, 0)?;
                    Ok(PointMasses { x: PointJson::from_point(x), masses, eta })
                })
                .collect::<Result<Vec<_>>>()?;
            let total = per_point.len() as f64;
            let k = cfg.n_max;
            let expansive = per_point.iter().filter(|p| p.masses[k] < cfg.threshold && p.masses[k] < p.masses[k - 1]).count();
            let stalled = per_point.iter().filter(|p| p.masses[k] >= cfg.threshold && p.masses[k] == p.masses[k - 1]).count();
            let (ef, sf) = (expansive as f64 / total, stalled as f64 / total);
            let verdict = if ef >= cfg.quantile {
                Verdict::Expansive
            } else if sf >= 1.0 - cfg.quantile {
                Verdict::NotExpansive
            } else {
                Verdict::Inconclusive
            };
            Ok(ExpansivityVerdict {
                delta,
                sided,
                per_point,
                verdict,
                mass_quantile: cfg.quantile,
                expansive_fraction: ef,
                stalled_fraction: sf,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::AtomicMeasure;
    use crate::systems::{Sided, Word};

    #[test]
    fn fixed_point_is_not_expansive() {
        let sys = SystemHandle::full_shift(2, Sided::Two);
        let x = Point::Word(Word::periodic(vec![1]));
        let mu: Measure = AtomicMeasure::dirac(&sys, x.clone()).unwrap().into();
        let v = classify_expansive(&sys, &mu, &[x.clone()], &[1e-3, 0.25, 2.0], &ExpansiveConfig::default()).unwrap();
        assert!(v.iter().all(|r| r.verdict == Verdict::NotExpansive));
        assert_eq!(eta_lower(&sys, &mu, &x, 0.1, 3, 6, BallSide::TwoSidedClosed).unwrap(), 1.0);
        assert_eq!(theta_lower(&sys, &mu, &x, 0.1, 3, 6, BallSide::TwoSidedClosed).unwrap(), 1.0);
    }

    #[test]
    fn sides_are_checked() {
        let sys = SystemHandle::doubling();
        let x = Point::circle(0.0);
        let mu: Measure = AtomicMeasure::dirac(&sys, x.clone()).unwrap().into();
        assert!(matches!(gamma_set_mass(&sys, &mu, &x, 0.1, 2, BallSide::TwoSidedClosed), Err(Error::NotInvertible(_))));
        assert_eq!(gamma_set_mass(&sys, &mu, &x, 0.1, 2, BallSide::ForwardClosed).unwrap(), 1.0);
        assert_eq!(default_side(&sys), BallSide::ForwardClosed);
    }
}
