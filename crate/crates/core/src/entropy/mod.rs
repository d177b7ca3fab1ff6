//! Local entropy functionals, correlation entropies, generating-set sums and
//! a spanning-set estimate of topological entropy, all at finite scales.

mod correlation;
mod cover;

pub use correlation::{
    correlation_entropy_spectrum, correlation_functional, correlation_integral, log_correlation_integral, Spectrum,
    SpectrumRow,
};
pub use cover::{
    generating_set_sums, lower_fractal_rate, topological_entropy_estimate, CoverOptions, GeneratingSetReport,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bowen::{ball_mass, mollified_mass, BallQuery, BallSide, DistanceTable, TAIL_DIGITS};
use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::stats;
use crate::systems::{Point, SystemHandle};

pub const METHOD_ORBIT_INCREMENT: &str = "orbit-anchored-increment";
pub const METHOD_ATOM_BOUND: &str = "atom-mass-bound";
pub const METHOD_INCREMENT: &str = "anchored-increment";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    /// Strictly decreasing radii; the estimate is read at the last one.
    pub epsilons: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    /// Tail start: liminf over n is a min over n ∈ (s, n_max].
    pub s: usize,
    pub q_values: Vec<f64>,
    /// Orbit points averaged per local-entropy evaluation.
    #[serde(default = "default_window")]
    pub orbit_window: usize,
    /// Relative agreement required between the last two radii.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Quantile standing in for the essential infimum.
    #[serde(default = "default_quantile")]
    pub quantile: f64,
}

fn default_window() -> usize {
    4096
}

fn default_rel_tol() -> f64 {
    0.05
}

fn default_quantile() -> f64 {
    0.05
}

impl Default for ScaleGrid {
    fn default() -> Self {
        ScaleGrid {
            epsilons: vec![0.25, 0.125, 0.0625],
            n_min: 1,
            n_max: 14,
            s: 4,
            q_values: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0],
            orbit_window: default_window(),
            rel_tol: default_rel_tol(),
            quantile: default_quantile(),
        }
    }
}

impl ScaleGrid {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::Invalid("scale grid has no radii".into()));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::Invalid("radii must be positive".into()));
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Invalid("radii must be strictly decreasing".into()));
        }
        if self.n_min < 1 || self.n_min > self.n_max {
            return Err(Error::Invalid(format!("bad n range [{}, {}]", self.n_min, self.n_max)));
        }
        if self.s >= self.n_max {
            return Err(Error::Invalid(format!("tail start {} must be below n_max {}", self.s, self.n_max)));
        }
        if self.orbit_window == 0 {
            return Err(Error::Invalid("orbit window must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.quantile) {
            return Err(Error::Invalid("quantile must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Coordinates a sampled symbolic point must cover for local entropy.
    pub fn required_reach(&self) -> usize {
        self.orbit_window + self.n_max + TAIL_DIGITS + 64
    }

    pub fn smallest_epsilon(&self) -> f64 {
        *self.epsilons.last().expect("validated")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub epsilon: f64,
    pub n: usize,
    pub raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub value: f64,
    pub per_scale: Vec<ScaleRow>,
    pub converged: bool,
    pub method: String,
}

/// Per-radius values in grid order → (value at the last radius, converged).
pub(crate) fn extrapolate(per_eps: &[f64], rel_tol: f64) -> (f64, bool) {
    let last = *per_eps.last().expect("at least one radius");
    let converged = per_eps.len() >= 2 && stats::agree(per_eps[per_eps.len() - 2], last, rel_tol);
    (last, converged)
}

/// −log m, with +∞ for an empty ball and no negative zero.
#[inline]
pub(crate) fn neg_log(m: f64) -> f64 {
    if !(m > 0.0) {
        return f64::INFINITY;
    }
    let v = -m.ln();
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Masses of B_n(x, ε) (or mollified masses) for each radius and n = lo..=hi;
/// n = 0 is the whole space.
pub fn mass_profiles(
    sys: &SystemHandle,
    mu: &Measure,
    x: &Point,
    epsilons: &[f64],
    lo: usize,
    hi: usize,
    mollified: bool,
) -> Result<Vec<Vec<f64>>> {
    let whole = |n: usize| n == 0;
    match mu {
        Measure::Atomic(m) => {
            let table = DistanceTable::new(sys, BallSide::Open, x, m, hi.max(1))?;
            Ok(epsilons
                .iter()
                .map(|&e| {
                    (lo..=hi)
                        .map(|n| {
                            if whole(n) {
                                1.0
                            } else if mollified {
                                table.mollified(e, n)
                            } else {
                                table.mass(e, n)
                            }
                        })
                        .collect()
                })
                .collect())
        }
        Measure::Analytic(_) => epsilons
            .iter()
            .map(|&e| {
                (lo..=hi)
                    .map(|n| {
                        if whole(n) {
                            return Ok(1.0);
                        }
                        let q = BallQuery::open(x.clone(), n, e);
                        if mollified {
                            mollified_mass(sys, &q, mu)
                        } else {
                            ball_mass(sys, &q, mu)
                        }
                    })
                    .collect()
            })
            .collect(),
    }
}

/// inf_{s < n ≤ n_max} −log μ(B_n(x, ε))/n.
pub fn beta_lower(sys: &SystemHandle, mu: &Measure, x: &Point, epsilon: f64, s: usize, n_max: usize) -> Result<f64> {
    if s >= n_max {
        return Err(Error::Invalid(format!("tail start {s} must be below n_max {n_max}")));
    }
    let m = mass_profiles(sys, mu, x, &[epsilon], s + 1, n_max, false)?.remove(0);
    Ok(tail_inf(&m, s + 1))
}

/// inf_{s ≤ n ≤ n_max, n ≥ 1} −log g_{x,ε,n}(μ)/n.
pub fn gamma_lower(sys: &SystemHandle, mu: &Measure, x: &Point, epsilon: f64, s: usize, n_max: usize) -> Result<f64> {
    let lo = s.max(1);
    if lo > n_max {
        return Err(Error::Invalid(format!("tail start {s} exceeds n_max {n_max}")));
    }
    let m = mass_profiles(sys, mu, x, &[epsilon], lo, n_max, true)?.remove(0);
    Ok(tail_inf(&m, lo))
}

fn tail_inf(masses: &[f64], first_n: usize) -> f64 {
    masses
        .iter()
        .enumerate()
        .map(|(k, &m)| neg_log(m) / (first_n + k) as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Lower local entropy h̲_μ(f, x) at the grid's scales.
///
/// Atoms of atomic measures give exactly 0: every ball around an atom has
/// mass at least its weight. Otherwise L_n = mean_{j<J} −log μ(B_n(f^j x, ε))
/// is averaged along the orbit and the per-radius value is the smallest
/// anchored increment (L_n − L_s)/(n − s) over n ∈ (s, n_max].
pub fn local_entropy(sys: &SystemHandle, mu: &Measure, x: &Point, grid: &ScaleGrid) -> Result<EstimateReport> {
    grid.validate()?;
    if let Measure::Atomic(m) = mu {
        if m.atom_index(sys, x)?.is_some() {
            let mut per_scale = Vec::new();
            for &e in &grid.epsilons {
                per_scale.push(ScaleRow { epsilon: e, n: grid.s, raw: beta_lower(sys, mu, x, e, grid.s, grid.n_max)? });
            }
            return Ok(EstimateReport { value: 0.0, per_scale, converged: true, method: METHOD_ATOM_BOUND.into() });
        }
    }
    let width = grid.n_max - grid.s + 1;
    let mut sums = vec![vec![0.0f64; width]; grid.epsilons.len()];
    let mut y = x.clone();
    for j in 0..grid.orbit_window {
        if j > 0 {
            y = sys.apply(&y)?;
        }
        let prof = mass_profiles(sys, mu, &y, &grid.epsilons, grid.s, grid.n_max, false)?;
        for (acc, row) in sums.iter_mut().zip(&prof) {
            for (a, &m) in acc.iter_mut().zip(row) {
                *a += neg_log(m);
            }
        }
    }
    let j = grid.orbit_window as f64;
    let mut per_scale = Vec::new();
    let mut per_eps = Vec::new();
    for (e, acc) in grid.epsilons.iter().zip(&sums) {
        let l_s = acc[0] / j;
        let mut best = f64::INFINITY;
        for k in 1..width {
            let l_n = acc[k] / j;
            let inc = if l_n.is_infinite() { f64::INFINITY } else { (l_n - l_s) / k as f64 };
            per_scale.push(ScaleRow { epsilon: *e, n: grid.s + k, raw: inc });
            best = best.min(inc);
        }
        per_eps.push(best);
    }
    let (value, converged) = extrapolate(&per_eps, grid.rel_tol);
    Ok(EstimateReport { value, per_scale, converged, method: METHOD_ORBIT_INCREMENT.into() })
}

/// Empirical essential infimum of h̲_μ(f, ·): the grid quantile of the
/// per-point values. Rows carry (ε, point index, per-point value).
pub fn essential_local_entropy(
    sys: &SystemHandle,
    mu: &Measure,
    sample: &[Point],
    grid: &ScaleGrid,
) -> Result<EstimateReport> {
    grid.validate()?;
    if sample.is_empty() {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    let reports: Vec<EstimateReport> = sample
        .par_iter()
        .map(|x| local_entropy(sys, mu, x, grid))
        .collect::<Result<Vec<_>>>()?;
    let mut per_scale = Vec::new();
    let mut per_eps = Vec::new();
    for &e in &grid.epsilons {
        let vals: Vec<f64> = reports.iter().map(|r| per_radius_value(r, e)).collect();
        for (i, v) in vals.iter().enumerate() {
            per_scale.push(ScaleRow { epsilon: e, n: i, raw: *v });
        }
        per_eps.push(stats::quantile(&vals, grid.quantile));
    }
    let (value, converged) = extrapolate(&per_eps, grid.rel_tol);
    let method = format!("quantile-{} of local entropy", grid.quantile);
    Ok(EstimateReport { value, per_scale, converged, method })
}

/// The value a local-entropy report assigns to one radius.
fn per_radius_value(r: &EstimateReport, epsilon: f64) -> f64 {
    if r.method == METHOD_ATOM_BOUND {
        return 0.0;
    }
    r.per_scale.iter().filter(|row| row.epsilon == epsilon).map(|row| row.raw).fold(f64::INFINITY, f64::min)
}
