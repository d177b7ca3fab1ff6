//! Local dimension of measures, the radius packing premeasure of finite
//! sets, and a percentile surrogate for the packing dimension of a measure.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bowen::{ball_mass, BallQuery, BallSide, DistanceTable};
use crate::entropy::{EstimateReport, ScaleRow};
use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::stats;
use crate::systems::{Point, SystemHandle};

pub const METHOD_SURROGATE: &str = "surrogate: 95th percentile of local dimensions";
pub const LABEL_HEURISTIC: &str = "heuristic";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackingGauge {
    pub alpha: f64,
}

impl PackingGauge {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Invalid(format!("gauge exponent {alpha} must be positive")));
        }
        Ok(PackingGauge { alpha })
    }

    pub fn phi(&self, t: f64) -> f64 {
        t.powf(self.alpha)
    }
}

/// Closed balls B(centers[i], radii[i]) with pairwise d > r_i + r_j.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaPacking {
    pub centers: Vec<Point>,
    pub radii: Vec<f64>,
}

impl DeltaPacking {
    pub fn is_disjoint(&self, sys: &SystemHandle) -> Result<bool> {
        for i in 0..self.centers.len() {
            for j in i + 1..self.centers.len() {
                if sys.metric(&self.centers[i], &self.centers[j])? <= self.radii[i] + self.radii[j] {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingPremeasure {
    pub value: f64,
    /// |E|·δ^α.
    pub upper_bound: f64,
    /// True when the grid supremum was found by exhaustive search; otherwise
    /// `value` is a lower bound from greedy insertion with exchanges.
    pub exact: bool,
    pub packing: DeltaPacking,
}

/// Largest set searched exhaustively.
pub const EXHAUSTIVE_MAX: usize = 6;

/// Radii allowed for a δ-packing of E: dyadic 2^{-j} ≤ δ/2, largest first,
/// down to the largest dyadic below dmin(E)/4.
pub fn radius_grid(sys: &SystemHandle, e: &[Point], delta: f64) -> Result<Vec<f64>> {
    let top = (delta / 2.0).log2().floor() as i32;
    let mut dmin = f64::INFINITY;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            dmin = dmin.min(sys.metric(&e[i], &e[j])?);
        }
    }
    let bottom = if dmin.is_finite() && dmin > 0.0 {
        // 2^b < dmin/4
        let b = (dmin / 4.0).log2().ceil() as i32 - 1;
        b.min(top)
    } else {
        top
    };
    Ok((bottom..=top).rev().map(|j| 2f64.powi(j)).collect())
}

/// P^φ_δ(E): the supremum of Σ φ(2r_k) over δ-packings with centers in E
/// and radii on the dyadic grid.
pub fn packing_premeasure(sys: &SystemHandle, e: &[Point], gauge: PackingGauge, delta: f64) -> Result<PackingPremeasure> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Invalid(format!("δ = {delta} must lie in (0, 1)")));
    }
    let upper_bound = e.len() as f64 * gauge.phi(delta);
    if e.is_empty() {
        return Ok(PackingPremeasure {
            value: 0.0,
            upper_bound,
            exact: true,
            packing: DeltaPacking { centers: vec![], radii: vec![] },
        });
    }
    let grid = radius_grid(sys, e, delta)?;
    let mut d = vec![vec![0.0; e.len()]; e.len()];
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            d[i][j] = sys.metric(&e[i], &e[j])?;
            d[j][i] = d[i][j];
        }
    }
    let gain: Vec<f64> = grid.iter().map(|r| gauge.phi(2.0 * r)).collect();
    let exact = e.len() <= EXHAUSTIVE_MAX;
    let choice = if exact { exhaustive(&d, &grid, &gain) } else { greedy_exchange(&d, &grid, &gain) };
    let mut packing = DeltaPacking { centers: vec![], radii: vec![] };
    let mut value = 0.0;
    for (i, c) in choice.iter().enumerate() {
        if let Some(k) = *c {
            packing.centers.push(e[i].clone());
            packing.radii.push(grid[k]);
            value += gain[k];
        }
    }
    Ok(PackingPremeasure { value, upper_bound, exact, packing })
}

/// choice[i] = grid index of the radius at point i, None if unused.
type Choice = Vec<Option<usize>>;

fn fits(d: &[Vec<f64>], grid: &[f64], choice: &Choice, i: usize, k: usize) -> bool {
    choice.iter().enumerate().all(|(j, c)| j == i || c.map_or(true, |cj| d[i][j] > grid[k] + grid[cj]))
}

fn total(gain: &[f64], choice: &Choice) -> f64 {
    choice.iter().flatten().map(|&k| gain[k]).sum()
}

fn exhaustive(d: &[Vec<f64>], grid: &[f64], gain: &[f64]) -> Choice {
    fn go(i: usize, d: &[Vec<f64>], grid: &[f64], gain: &[f64], cur: &mut Choice, acc: f64, best: &mut (f64, Choice)) {
        let n = cur.len();
        if i == n {
            if acc > best.0 {
                *best = (acc, cur.clone());
            }
            return;
        }
        if acc + (n - i) as f64 * gain[0] <= best.0 {
            return;
        }
        for k in 0..grid.len() {
            if fits(d, grid, cur, i, k) {
                cur[i] = Some(k);
                go(i + 1, d, grid, gain, cur, acc + gain[k], best);
                cur[i] = None;
            }
        }
        go(i + 1, d, grid, gain, cur, acc, best);
    }
    let mut cur = vec![None; d.len()];
    let mut best = (-1.0, cur.clone());
    go(0, d, grid, gain, &mut cur, 0.0, &mut best);
    best.1
}

fn greedy_exchange(d: &[Vec<f64>], grid: &[f64], gain: &[f64]) -> Choice {
    let n = d.len();
    let mut choice: Choice = vec![None; n];
    for k in 0..grid.len() {
        for i in 0..n {
            if choice[i].is_none() && fits(d, grid, &choice, i, k) {
                choice[i] = Some(k);
            }
        }
    }
    let largest_fit = |choice: &Choice, i: usize| (0..grid.len()).find(|&k| fits(d, grid, choice, i, k));
    let mut value = total(gain, &choice);
    for _ in 0..64 {
        let mut improved = false;
        for i in 0..n {
            let up = match choice[i] {
                Some(0) => continue,
                Some(k) => k - 1,
                None => grid.len() - 1,
            };
            for j in 0..n {
                if j == i {
                    continue;
                }
                // grow i by one rung, then refit j as large as possible
                let mut trial = choice.clone();
                trial[j] = None;
                if !fits(d, grid, &trial, i, up) {
                    continue;
                }
                trial[i] = Some(up);
                trial[j] = largest_fit(&trial, j);
                for m in 0..n {
                    if trial[m].is_none() {
                        trial[m] = largest_fit(&trial, m);
                    }
                }
                let v = total(gain, &trial);
                if v > value {
                    choice = trial;
                    value = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    choice
}

/// P^φ_δ(E) along decreasing δ; the premeasure decreases to P^φ_0(E) and the
/// value is read at the smallest δ. Rows carry (δ, |E|, P^φ_δ).
pub fn packing_premeasure_limit(sys: &SystemHandle, e: &[Point], gauge: PackingGauge, deltas: &[f64]) -> Result<EstimateReport> {
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("δ ladder must be nonempty and strictly decreasing".into()));
    }
    let mut per_scale = Vec::new();
    let mut vals = Vec::new();
    for &dl in deltas {
        let p = packing_premeasure(sys, e, gauge, dl)?;
        per_scale.push(ScaleRow { epsilon: dl, n: e.len(), raw: p.value });
        vals.push(p.value);
    }
    let last = *vals.last().expect("nonempty");
    let converged = vals.len() >= 2 && stats::agree(vals[vals.len() - 2], last, 0.05);
    Ok(EstimateReport { value: last, per_scale, converged, method: "premeasure-at-smallest-delta".into() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionConfig {
    pub r0: f64,
    pub rungs: usize,
    pub upper_quantile: f64,
    pub lower_quantile: f64,
    /// Entropy reference for the h/log λ bound, when known.
    #[serde(default)]
    pub entropy: Option<f64>,
}

impl Default for DimensionConfig {
    fn default() -> Self {
        DimensionConfig { r0: 0.05, rungs: 6, upper_quantile: 0.95, lower_quantile: 0.05, entropy: None }
    }
}

impl DimensionConfig {
    pub fn radii(&self) -> Vec<f64> {
        (0..self.rungs).map(|j| self.r0 * 0.5f64.powi(j as i32)).collect()
    }
}

/// Slope of log μ(B(x, r)) against log r over the ladder. Rows carry
/// (r, 1, log μ(B(x, r))). `converged` compares the slopes of the two
/// halves of the ladder.
pub fn local_dimension(sys: &SystemHandle, mu: &Measure, x: &Point, cfg: &DimensionConfig) -> Result<EstimateReport> {
    if cfg.rungs < 2 || !(cfg.r0 > 0.0) {
        return Err(Error::Invalid("local dimension needs r0 > 0 and at least 2 rungs".into()));
    }
    let radii = cfg.radii();
    let masses: Vec<f64> = match mu {
        Measure::Atomic(m) => {
            let t = DistanceTable::new(sys, BallSide::Open, x, m, 1)?;
            radii.iter().map(|&r| t.mass(r, 1)).collect()
        }
        Measure::Analytic(_) => {
            radii.iter().map(|&r| ball_mass(sys, &BallQuery::open(x.clone(), 1, r), mu)).collect::<Result<_>>()?
        }
    };
    if let Some(j) = masses.iter().position(|m| !(*m > 0.0)) {
        return Err(Error::InsufficientData(format!("ball of radius {} has zero mass", radii[j])));
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = masses.iter().map(|m| m.ln()).collect();
    let value = stats::ls_slope(&lx, &ly);
    let h = radii.len() / 2;
    let converged = if radii.len() >= 4 {
        stats::agree(stats::ls_slope(&lx[..h + 1], &ly[..h + 1]), stats::ls_slope(&lx[h..], &ly[h..]), 0.1)
    } else {
        true
    };
    let per_scale = radii.iter().zip(&ly).map(|(&r, &y)| ScaleRow { epsilon: r, n: 1, raw: y }).collect();
    Ok(EstimateReport { value, per_scale, converged, method: "log-log-slope".into() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingReport {
    /// Upper-quantile local dimension over the sample; rows carry
    /// (r0, point index, local dimension).
    pub surrogate: EstimateReport,
    pub lower_quantile_value: f64,
    pub lower_label: String,
    /// h/log λ when both are known.
    pub varandas_bound: Option<f64>,
}

pub fn packing_dimension_estimate(
    sys: &SystemHandle,
    mu: &Measure,
    sample: &[Point],
    cfg: &DimensionConfig,
) -> Result<PackingReport> {
    if sample.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    let reports =
        sample.par_iter().map(|x| local_dimension(sys, mu, x, cfg)).collect::<Result<Vec<EstimateReport>>>()?;
    let dims: Vec<f64> = reports.iter().map(|r| r.value).collect();
    let per_scale = dims.iter().enumerate().map(|(i, &v)| ScaleRow { epsilon: cfg.r0, n: i, raw: v }).collect();
    let converged = reports.iter().filter(|r| r.converged).count() as f64 >= cfg.upper_quantile * reports.len() as f64;
    let varandas_bound = match (cfg.entropy, sys.expanding) {
        (Some(h), Some(e)) => Some(h / e.lambda.ln()),
        _ => None,
    };
    Ok(PackingReport {
        surrogate: EstimateReport {
            value: stats::quantile(&dims, cfg.upper_quantile),
            per_scale,
            converged,
            method: METHOD_SURROGATE.into(),
        },
        lower_quantile_value: stats::quantile(&dims, cfg.lower_quantile),
        lower_label: LABEL_HEURISTIC.into(),
        varandas_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::AtomicMeasure;

    #[test]
    fn separated_points_take_full_radii() {
        let sys = SystemHandle::golden_rotation();
        let g = PackingGauge::new(0.7).unwrap();
        let e: Vec<Point> = [0.0, 0.3, 0.6].iter().map(|&x| Point::circle(x)).collect();
        let p = packing_premeasure(&sys, &e, g, 0.25).unwrap();
        assert!((p.value - 3.0 * 0.25f64.powf(0.7)).abs() < 1e-15);
        assert!(p.exact && p.packing.is_disjoint(&sys).unwrap());
        let one = packing_premeasure(&sys, &e[..1], g, 0.125).unwrap();
        assert_eq!(one.value, 0.125f64.powf(0.7));
    }

    #[test]
    fn dirac_dimension_is_zero() {
        let sys = SystemHandle::doubling();
        let x = Point::circle(0.25);
        let mu: Measure = AtomicMeasure::dirac(&sys, x.clone()).unwrap().into();
        let r = local_dimension(&sys, &mu, &x, &DimensionConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(PackingGauge::new(0.0).is_err());
    }
}
