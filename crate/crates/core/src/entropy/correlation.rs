//! Correlation integrals I_q(ε, n) = ∫ μ(B_n(x, ε))^{q−1} dμ(x) and the
//! lower/upper correlation entropies built from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extrapolate, EstimateReport, ScaleGrid, ScaleRow, METHOD_ATOM_BOUND, METHOD_INCREMENT};
use crate::bowen::{BallSide, DistanceTable, RefineOptions};
use crate::error::{Error, Result};
use crate::measures::{AnalyticKind, AnalyticMeasure, AtomicMeasure, Measure};
use crate::systems::{Sided, SystemHandle};

#[inline]
fn is_one(q: f64) -> bool {
    q == 1.0
}

/// For q ≠ 1, log I_q(ε, n); for q = 1, ∫ log μ(B_n(x, ε)) dμ(x).
/// The n = 0 ball is the whole space, where both vanish.
pub fn log_correlation_integral(sys: &SystemHandle, mu: &Measure, q: f64, epsilon: f64, n: usize) -> Result<f64> {
    Ok(log_integrals(sys, mu, &[q], epsilon, &[n])?[0][0])
}

/// I_q(ε, n) for q ≠ 1, ∫ log μ(B_n) dμ for q = 1.
pub fn correlation_integral(sys: &SystemHandle, mu: &Measure, q: f64, epsilon: f64, n: usize) -> Result<f64> {
    let v = log_correlation_integral(sys, mu, q, epsilon, n)?;
    Ok(if is_one(q) { v } else { v.exp() })
}

/// The fixed-scale functional −log I_q/((q − 1)n), or −(1/n)∫ log μ(B_n) at q = 1.
pub fn correlation_functional(sys: &SystemHandle, mu: &Measure, q: f64, epsilon: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("the correlation functional needs n >= 1".into()));
    }
    let v = log_correlation_integral(sys, mu, q, epsilon, n)?;
    Ok(functional(q, v, n))
}

fn functional(q: f64, log_i: f64, n: usize) -> f64 {
    if is_one(q) {
        -log_i / n as f64
    } else {
        -log_i / ((q - 1.0) * n as f64)
    }
}

/// `[q][k]` = log integral for q_values[q] at ns[k].
fn log_integrals(sys: &SystemHandle, mu: &Measure, qs: &[f64], epsilon: f64, ns: &[usize]) -> Result<Vec<Vec<f64>>> {
    match mu {
        Measure::Atomic(m) => atomic_log_integrals(sys, m, qs, epsilon, ns),
        Measure::Analytic(a) => qs.iter().map(|&q| ns.iter().map(|&n| analytic_log_integral(sys, a, q, epsilon, n)).collect()).collect(),
    }
}

fn atomic_log_integrals(
    sys: &SystemHandle,
    m: &AtomicMeasure,
    qs: &[f64],
    epsilon: f64,
    ns: &[usize],
) -> Result<Vec<Vec<f64>>> {
    let n_hi = ns.iter().copied().max().unwrap_or(1).max(1);
    // masses[a][k] = μ(B_{ns[k]}(atom a, ε)) ≥ weight of a
    let masses = m
        .atoms()
        .par_iter()
        .map(|a| {
            let t = DistanceTable::new(sys, BallSide::Open, a, m, n_hi)?;
            Ok(ns.iter().map(|&n| if n == 0 { 1.0 } else { t.mass(epsilon, n) }).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(qs
        .iter()
        .map(|&q| {
            (0..ns.len())
                .map(|k| {
                    let mut acc = 0.0;
                    for (w, row) in m.weights().iter().zip(&masses) {
                        acc += if is_one(q) { w * row[k].ln() } else { w * row[k].powf(q - 1.0) };
                    }
                    if is_one(q) {
                        acc
                    } else {
                        acc.ln()
                    }
                })
                .collect()
        })
        .collect())
}

/// Exact cylinder sum. On a one-sided shift at ε = 2^{-c} ≤ 1/2 the Bowen
/// ball B_n(x, ε) is the cylinder of length L = n + c − 1 around x, so
/// I_q = Σ_{|w|=L} μ[w]^q and ∫ log μ(B_n) = Σ μ[w] log μ[w].
fn analytic_log_integral(sys: &SystemHandle, a: &AnalyticMeasure, q: f64, epsilon: f64, n: usize) -> Result<f64> {
    if a.check_system(sys)? != Sided::One {
        return Err(Error::UnsupportedQuery("correlation integrals of analytic measures need a one-sided shift".into()));
    }
    let c = -epsilon.log2();
    if !(epsilon <= 0.5) || c.fract() != 0.0 {
        return Err(Error::UnsupportedQuery(format!(
            "analytic correlation integrals are exact only at dyadic ε ≤ 1/2, got {epsilon}"
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let len = n + c as usize - 1;
    let cap = RefineOptions::default().depth_cap;
    if len > cap {
        return Err(Error::DepthCapExceeded { depth: len, unresolved: 1.0 });
    }
    let xlogx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    Ok(match (a.kind(), is_one(q)) {
        (AnalyticKind::Bernoulli(p), true) => len as f64 * p.iter().map(|&x| xlogx(x)).sum::<f64>(),
        (AnalyticKind::Bernoulli(p), false) => {
            len as f64 * p.iter().filter(|&&x| x > 0.0).map(|x| x.powf(q)).sum::<f64>().ln()
        }
        (AnalyticKind::Markov { p, pi }, true) => {
            let first: f64 = pi.iter().map(|&x| xlogx(x)).sum();
            let step: f64 = pi.iter().zip(p).map(|(w, row)| w * row.iter().map(|&x| xlogx(x)).sum::<f64>()).sum();
            first + (len - 1) as f64 * step
        }
        (AnalyticKind::Markov { p, pi }, false) => {
            // π^q (P^{∘q})^{L−1} 1, renormalized each step
            let k = pi.len();
            let pw = |x: f64| if x > 0.0 { x.powf(q) } else { 0.0 };
            let mut v: Vec<f64> = pi.iter().map(|&x| pw(x)).collect();
            let mut log_scale = 0.0;
            for _ in 1..len {
                let mut w = vec![0.0; k];
                for i in 0..k {
                    for j in 0..k {
                        w[j] += v[i] * pw(p[i][j]);
                    }
                }
                let s: f64 = w.iter().sum();
                log_scale += s.ln();
                v = w.into_iter().map(|x| x / s).collect();
            }
            log_scale + v.iter().sum::<f64>().ln()
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub q: f64,
    pub lower: EstimateReport,
    pub upper: EstimateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub rows: Vec<SpectrumRow>,
}

impl Spectrum {
    /// `q,H_lower,H_upper,converged`, one line per order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,H_lower,H_upper,converged\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.q,
                r.lower.value,
                r.upper.value,
                r.lower.converged && r.upper.converged
            ));
        }
        out
    }

    pub fn get(&self, q: f64) -> Option<&SpectrumRow> {
        self.rows.iter().find(|r| r.q == q)
    }
}

/// Lower and upper correlation entropies for every q of the grid.
///
/// The per-radius lower (upper) value is the min (max) over n ∈ (s, n_max]
/// of the anchored increment of −log I_q/(q − 1) (of −∫ log μ(B_n) at q = 1)
/// between s and n. Atomic measures give exactly 0: all ball masses are
/// bounded below by the atom weights, so the functional is O(1/n).
pub fn correlation_entropy_spectrum(sys: &SystemHandle, mu: &Measure, grid: &ScaleGrid) -> Result<Spectrum> {
    grid.validate()?;
    let ns: Vec<usize> = (grid.s..=grid.n_max).collect();
    // per radius: [q][k]
    let tables = grid
        .epsilons
        .iter()
        .map(|&e| log_integrals(sys, mu, &grid.q_values, e, &ns))
        .collect::<Result<Vec<_>>>()?;
    let atomic = matches!(mu, Measure::Atomic(_));
    let rows = grid
        .q_values
        .iter()
        .enumerate()
        .map(|(qi, &q)| {
            let scale = if is_one(q) { 1.0 } else { q - 1.0 };
            let mut rows = Vec::new();
            let mut lows = Vec::new();
            let mut highs = Vec::new();
            for (&e, t) in grid.epsilons.iter().zip(&tables) {
                let row = &t[qi];
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for k in 1..ns.len() {
                    let inc = (row[0] - row[k]) / (scale * k as f64);
                    rows.push(ScaleRow { epsilon: e, n: ns[k], raw: inc });
                    lo = lo.min(inc);
                    hi = hi.max(inc);
                }
                lows.push(lo);
                highs.push(hi);
            }
            let report = |per_eps: &[f64]| {
                if atomic {
                    EstimateReport { value: 0.0, per_scale: rows.clone(), converged: true, method: METHOD_ATOM_BOUND.into() }
                } else {
                    let (value, converged) = extrapolate(per_eps, grid.rel_tol);
                    EstimateReport { value, per_scale: rows.clone(), converged, method: METHOD_INCREMENT.into() }
                }
            };
            SpectrumRow { q, lower: report(&lows), upper: report(&highs) }
        })
        .collect();
    Ok(Spectrum { rows })
}
