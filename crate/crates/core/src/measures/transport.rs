//! Exact 1-Wasserstein distance between atomic measures as a transportation
//! problem, solved by successive shortest paths with node potentials.

use serde::{Deserialize, Serialize};

use super::atomic::{same_atom, AtomicMeasure};
use crate::error::{Error, Result};
use crate::systems::SystemHandle;

pub const DEFAULT_ATOM_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakDistanceReport {
    pub value: f64,
    pub transport_plan: Vec<PlanEntry>,
}

pub fn wasserstein1(sys: &SystemHandle, mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<WeakDistanceReport> {
    wasserstein1_capped(sys, mu, nu, DEFAULT_ATOM_CAP)
}

pub fn wasserstein1_capped(
    sys: &SystemHandle,
    mu: &AtomicMeasure,
    nu: &AtomicMeasure,
    cap: usize,
) -> Result<WeakDistanceReport> {
    for m in [mu, nu] {
        if m.len() > cap {
            return Err(Error::SizeCapExceeded { size: m.len(), cap });
        }
    }
    let cost = mu
        .atoms()
        .iter()
        .map(|a| nu.atoms().iter().map(|b| sys.metric(a, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(solve_transport(mu.weights(), nu.weights(), &cost))
}

/// W1(μ, f_*μ). Pushed atoms within the merge tolerance of an atom of μ are
/// identified with it first, so exactly invariant measures give exactly 0.
pub fn invariance_defect(sys: &SystemHandle, mu: &AtomicMeasure) -> Result<f64> {
    let pushed = mu.push_forward(sys)?;
    let mut atoms = Vec::with_capacity(pushed.len());
    for a in pushed.atoms() {
        let mut snapped = a.clone();
        for b in mu.atoms() {
            if same_atom(sys, a, b)? {
                snapped = b.clone();
                break;
            }
        }
        atoms.push(snapped);
    }
    let pushed = AtomicMeasure::from_parts_unchecked(atoms, pushed.weights().to_vec());
    Ok(wasserstein1(sys, mu, &pushed)?.value)
}

const MASS_EPS: f64 = 1e-15;

/// Minimum-cost transport between `supply` and `demand` (both summing to
/// ~1) under the dense `cost` matrix.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> WeakDistanceReport {
    let n = supply.len();
    let m = demand.len();
    let mut sup = supply.to_vec();
    let mut dem = demand.to_vec();
    let mut flow = vec![vec![0.0f64; m]; n];
    // potentials on sources and sinks keep reduced costs nonnegative
    let mut pot_s = vec![0.0f64; n];
    let mut pot_t = vec![0.0f64; m];
    let total_supply: f64 = sup.iter().sum();
    let total_demand: f64 = dem.iter().sum();
    let target = total_supply.min(total_demand);
    let mut shipped = 0.0;

    let mut dist_s = vec![0.0f64; n];
    let mut dist_t = vec![0.0f64; m];
    let mut done_s = vec![false; n];
    let mut done_t = vec![false; m];
    // predecessor of a sink is a source; of a source (reached backwards) a sink
    let mut pred_t = vec![usize::MAX; m];
    let mut pred_s = vec![usize::MAX; n];

    while target - shipped > MASS_EPS {
        for i in 0..n {
            dist_s[i] = if sup[i] > MASS_EPS { 0.0 } else { f64::INFINITY };
            done_s[i] = false;
            pred_s[i] = usize::MAX;
        }
        for j in 0..m {
            dist_t[j] = f64::INFINITY;
            done_t[j] = false;
            pred_t[j] = usize::MAX;
        }
        let mut reached = None;
        loop {
            // pick the closest unsettled node among sources and sinks
            let mut best = f64::INFINITY;
            let mut pick: Option<(bool, usize)> = None;
            for i in 0..n {
                if !done_s[i] && dist_s[i] < best {
                    best = dist_s[i];
                    pick = Some((true, i));
                }
            }
            for j in 0..m {
                if !done_t[j] && dist_t[j] < best {
                    best = dist_t[j];
                    pick = Some((false, j));
                }
            }
            let Some((is_source, k)) = pick else { break };
            if is_source {
                done_s[k] = true;
                for j in 0..m {
                    if done_t[j] {
                        continue;
                    }
                    let rc = (cost[k][j] + pot_s[k] - pot_t[j]).max(0.0);
                    let nd = dist_s[k] + rc;
                    if nd < dist_t[j] {
                        dist_t[j] = nd;
                        pred_t[j] = k;
                    }
                }
            } else {
                done_t[k] = true;
                if dem[k] > MASS_EPS {
                    reached = Some(k);
                    break;
                }
                for i in 0..n {
                    if done_s[i] || flow[i][k] <= MASS_EPS {
                        continue;
                    }
                    let rc = (-cost[i][k] - pot_s[i] + pot_t[k]).max(0.0);
                    let nd = dist_t[k] + rc;
                    if nd < dist_s[i] {
                        dist_s[i] = nd;
                        pred_s[i] = k;
                    }
                }
            }
        }
        let Some(sink) = reached else { break };
        let dsink = dist_t[sink];
        for i in 0..n {
            if dist_s[i].is_finite() {
                pot_s[i] += dist_s[i].min(dsink);
            } else {
                pot_s[i] += dsink;
            }
        }
        for j in 0..m {
            if dist_t[j].is_finite() {
                pot_t[j] += dist_t[j].min(dsink);
            } else {
                pot_t[j] += dsink;
            }
        }
        // bottleneck along the path sink <- source <- sink <- ... <- source
        let mut amount = dem[sink];
        let mut j = sink;
        let origin;
        loop {
            let i = pred_t[j];
            let back = pred_s[i];
            if back == usize::MAX {
                amount = amount.min(sup[i]);
                origin = i;
                break;
            }
            amount = amount.min(flow[i][back]);
            j = back;
        }
        let mut j = sink;
        loop {
            let i = pred_t[j];
            flow[i][j] += amount;
            let back = pred_s[i];
            if back == usize::MAX {
                break;
            }
            flow[i][back] -= amount;
            if flow[i][back] < MASS_EPS {
                flow[i][back] = 0.0;
            }
            j = back;
        }
        sup[origin] -= amount;
        dem[sink] -= amount;
        shipped += amount;
    }

    let mut plan = Vec::new();
    let mut value = 0.0;
    for (i, row) in flow.iter().enumerate() {
        for (j, &f) in row.iter().enumerate() {
            if f > 0.0 {
                value += f * cost[i][j];
                plan.push(PlanEntry { source: i, target: j, mass: f });
            }
        }
    }
    WeakDistanceReport { value, transport_plan: plan }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_uniform(cost: &[Vec<f64>]) -> f64 {
        // all permutations; optimal plans between uniform measures of equal size are permutations
        fn rec(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == cost.len() {
                *best = best.min(acc);
                return;
            }
            for j in 0..cost.len() {
                if !used[j] {
                    used[j] = true;
                    rec(cost, row + 1, used, acc + cost[row][j], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, 0, &mut vec![false; cost.len()], 0.0, &mut best);
        best / cost.len() as f64
    }

    #[test]
    fn permutation_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in 1..=6 {
            for _ in 0..20 {
                let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
                let w = vec![1.0 / n as f64; n];
                let r = solve_transport(&w, &w, &cost);
                assert!((r.value - brute_uniform(&cost)).abs() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn marginals_and_cost() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let norm = |v: Vec<f64>| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let a = norm((0..9).map(|_| rng.gen::<f64>() + 0.1).collect());
        let b = norm((0..13).map(|_| rng.gen::<f64>() + 0.1).collect());
        let cost: Vec<Vec<f64>> = (0..9).map(|_| (0..13).map(|_| rng.gen::<f64>()).collect()).collect();
        let r = solve_transport(&a, &b, &cost);
        let mut ra = vec![0.0; 9];
        let mut rb = vec![0.0; 13];
        let mut c = 0.0;
        for e in &r.transport_plan {
            ra[e.source] += e.mass;
            rb[e.target] += e.mass;
            c += e.mass * cost[e.source][e.target];
        }
        for (x, y) in ra.iter().zip(&a).chain(rb.iter().zip(&b)) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!((c - r.value).abs() < 1e-9);
    }
}
