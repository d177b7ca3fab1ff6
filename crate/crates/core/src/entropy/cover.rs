//! Greedy (n, r)-covers: generating-set sums S and W, and spanning-set
//! counts for topological entropy.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{extrapolate, EstimateReport, ScaleGrid, ScaleRow};
use crate::bowen::{BallSide, DistanceTable};
use crate::error::{Error, Result};
use crate::measures::AtomicMeasure;
use crate::systems::{Phase, Point, Sided, SystemHandle, SystemKind, Word};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverOptions {
    /// Covers tried after the deterministic heaviest-first one.
    pub restarts: usize,
    pub seed: u64,
    /// Largest atom set (or spanning net) searched.
    pub max_points: usize,
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions { restarts: 8, seed: 0, max_points: 1 << 20 }
    }
}

/// Sums over the best greedy cover found. `s_value` is an upper bound on the
/// infimum over generating sets; `w_value` and `s_double` are evaluated on
/// the same cover, and `i_double` = I(s, 2r, n).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingSetReport {
    pub s_value: f64,
    pub w_value: f64,
    pub s_double: f64,
    pub i_double: f64,
    pub cover: Vec<Point>,
    pub upper_bound: bool,
}

pub fn generating_set_sums(
    sys: &SystemHandle,
    mu: &AtomicMeasure,
    s: f64,
    r: f64,
    n: usize,
    opts: &CoverOptions,
) -> Result<GeneratingSetReport> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Invalid(format!("exponent s = {s} must lie in (0, 1)")));
    }
    if !(r > 0.0) || n == 0 {
        return Err(Error::Invalid("need r > 0 and n >= 1".into()));
    }
    let count = mu.len();
    if count > opts.max_points.min(1 << 14) {
        return Err(Error::CoverSearchBudgetExceeded(count));
    }
    // dist[a][b] = d_n(atom a, atom b)
    let tables = mu
        .atoms()
        .iter()
        .map(|a| DistanceTable::new(sys, BallSide::Open, a, mu, n))
        .collect::<Result<Vec<_>>>()?;
    let w = mu.weights();
    let mass = |c: usize, rad: f64| tables[c].mass(rad, n);
    let ball = |c: usize, rad: f64, b: usize| tables[c].distance(b, n) < rad;

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for restart in 0..=opts.restarts {
        let mut covered = vec![false; count];
        let mut centers = Vec::new();
        let mut left = count;
        while left > 0 {
            let c = if restart == 0 {
                // heaviest uncovered atom, lowest index on ties
                (0..count).filter(|&i| !covered[i]).fold(None, |acc: Option<usize>, i| match acc {
                    Some(j) if w[j] >= w[i] => Some(j),
                    _ => Some(i),
                })
            } else {
                let k = rng.gen_range(0..left);
                (0..count).filter(|&i| !covered[i]).nth(k)
            }
            .expect("an uncovered atom remains");
            centers.push(c);
            for b in 0..count {
                if !covered[b] && ball(c, r, b) {
                    covered[b] = true;
                    left -= 1;
                }
            }
        }
        let total: f64 = centers.iter().map(|&c| mass(c, r).powf(s)).sum();
        if best.as_ref().map_or(true, |(v, _)| total < *v) {
            best = Some((total, centers));
        }
    }
    let (s_value, centers) = best.expect("at least one cover");
    let w_value: f64 = centers.iter().map(|&c| tables[c].mollified(r, n).powf(s)).sum();
    let s_double: f64 = centers.iter().map(|&c| mass(c, 2.0 * r).powf(s)).sum();
    let i_double: f64 = (0..count).map(|a| w[a] * mass(a, 2.0 * r).powf(s - 1.0)).sum();
    Ok(GeneratingSetReport {
        s_value,
        w_value,
        s_double,
        i_double,
        cover: centers.iter().map(|&c| mu.atoms()[c].clone()).collect(),
        upper_bound: true,
    })
}

/// d⁻(s, r) at finite scale: min over n ∈ (grid.s, grid.n_max] of
/// log W(s, r, n)/((1 − s)n).
pub fn lower_fractal_rate(
    sys: &SystemHandle,
    mu: &AtomicMeasure,
    s: f64,
    r: f64,
    grid: &ScaleGrid,
    opts: &CoverOptions,
) -> Result<EstimateReport> {
    grid.validate()?;
    let mut per_scale = Vec::new();
    let mut best = f64::INFINITY;
    for n in grid.s + 1..=grid.n_max {
        let g = generating_set_sums(sys, mu, s, r, n, opts)?;
        let v = g.w_value.ln() / ((1.0 - s) * n as f64);
        per_scale.push(ScaleRow { epsilon: r, n, raw: v });
        best = best.min(v);
    }
    Ok(EstimateReport { value: best, per_scale, converged: true, method: "min-over-tail".into() })
}

/// Points whose greedy (n, ε)-spanning subsets approximate minimal spanning
/// sets of the whole space: all words of the resolving length on shifts,
/// a dyadic grid on the circle.
fn spanning_net(sys: &SystemHandle, eps_min: f64, n_max: usize, cap: usize) -> Result<Vec<Point>> {
    let c = (1.0 / eps_min).log2().ceil().max(0.0) as usize + 1;
    match sys.kind {
        SystemKind::Shift { alphabet, sided } => {
            let (len, lead) = match sided {
                Sided::One => (n_max + c, 0),
                Sided::Two => (n_max + 2 * c, c),
            };
            let size = (alphabet as f64).powi(len as i32);
            if size > cap as f64 {
                return Err(Error::CoverSearchBudgetExceeded(size.min(usize::MAX as f64) as usize));
            }
            let mut out = Vec::with_capacity(size as usize);
            let mut word = vec![0u8; len];
            loop {
                out.push(Point::Word(Word::periodic(word.clone()).shifted(lead as i64)));
                let mut i = len;
                loop {
                    if i == 0 {
                        return Ok(out);
                    }
                    i -= 1;
                    word[i] += 1;
                    if word[i] < alphabet {
                        break;
                    }
                    word[i] = 0;
                }
            }
        }
        _ => {
            let bits = (n_max + c + 3).min(24);
            if (1usize << bits) > cap {
                return Err(Error::CoverSearchBudgetExceeded(1 << bits));
            }
            Ok((0u64..1 << bits).map(|j| Point::Circle(Phase::from_u64(j << (64 - bits)))).collect())
        }
    }
}

/// Size of a greedy (n, ε)-spanning subset of `net`: each point not yet
/// within d_n < ε of a center becomes one. Centers are bucketed so only
/// possible neighbours are compared.
fn greedy_span(sys: &SystemHandle, net: &[Point], orbits: &[Vec<Point>], n: usize, eps: f64) -> Result<usize> {
    if n == 0 {
        return Ok(1);
    }
    let circle_cells = (1.0 / eps).floor().max(1.0) as i64;
    let key = |i: usize| -> Vec<i64> {
        match &net[i] {
            // disagreement at a coordinate j < n puts d_n ≥ 1/2
            Point::Word(w) if eps <= 0.5 => (0..n as i64).map(|j| w.get(j).expect("periodic") as i64).collect(),
            Point::Word(_) => Vec::new(),
            Point::Circle(p) => vec![((p.to_f64() * circle_cells as f64) as i64).min(circle_cells - 1)],
        }
    };
    let neighbours = |k: &[i64]| -> Vec<Vec<i64>> {
        match (k.len(), &net[0]) {
            (1, Point::Circle(_)) => {
                let mut v = vec![vec![k[0]]];
                for d in [-1, 1] {
                    let m = (k[0] + d).rem_euclid(circle_cells);
                    if !v.contains(&vec![m]) {
                        v.push(vec![m]);
                    }
                }
                v
            }
            _ => vec![k.to_vec()],
        }
    };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut count = 0;
    for i in 0..net.len() {
        let k = key(i);
        let mut hit = false;
        'search: for nk in neighbours(&k) {
            if let Some(list) = buckets.get(&nk) {
                for &c in list {
                    if within(sys, &orbits[i], &orbits[c], n, eps)? {
                        hit = true;
                        break 'search;
                    }
                }
            }
        }
        if !hit {
            buckets.entry(k).or_default().push(i);
            count += 1;
        }
    }
    Ok(count)
}

fn within(sys: &SystemHandle, a: &[Point], b: &[Point], n: usize, eps: f64) -> Result<bool> {
    for i in 0..n {
        if sys.metric(&a[i], &b[i])? >= eps {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Growth rate of greedy (n, ε)-spanning counts N_n over a fine net:
/// (log N_{n_max} − log N_s)/(n_max − s) per radius, read at the smallest.
/// Rows carry (ε, n, log N_n).
pub fn topological_entropy_estimate(sys: &SystemHandle, grid: &ScaleGrid, opts: &CoverOptions) -> Result<EstimateReport> {
    grid.validate()?;
    let net = spanning_net(sys, grid.smallest_epsilon(), grid.n_max, opts.max_points)?;
    let orbits = net
        .iter()
        .map(|x| {
            let mut v = Vec::with_capacity(grid.n_max);
            let mut y = x.clone();
            for i in 0..grid.n_max {
                if i > 0 {
                    y = sys.apply(&y)?;
                }
                v.push(y.clone());
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut per_scale = Vec::new();
    let mut per_eps = Vec::new();
    for &e in &grid.epsilons {
        let lo = (greedy_span(sys, &net, &orbits, grid.s, e)? as f64).ln();
        per_scale.push(ScaleRow { epsilon: e, n: grid.s, raw: lo });
        let hi = (greedy_span(sys, &net, &orbits, grid.n_max, e)? as f64).ln();
        per_scale.push(ScaleRow { epsilon: e, n: grid.n_max, raw: hi });
        per_eps.push((hi - lo) / (grid.n_max - grid.s) as f64);
    }
    let (value, converged) = extrapolate(&per_eps, grid.rel_tol);
    Ok(EstimateReport { value, per_scale, converged, method: "spanning-count-increment".into() })
}
