//! Batch checks of the finite-scale inequalities on random configurations.
//! Failures are results: each failing case is dumped with everything needed
//! to replay it.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use ergokit::bowen::{mollifier_value, BallSide, DistanceTable};
use ergokit::dimension::{local_dimension, DimensionConfig};
use ergokit::entropy::{
    beta_lower, correlation_entropy_spectrum, correlation_functional, essential_local_entropy, gamma_lower,
    generating_set_sums, CoverOptions, ScaleGrid,
};
use ergokit::expansive::{default_side, eta_lower, theta_lower};
use ergokit::measures::{periodic_measure, periodize, AnalyticMeasure, AtomicMeasure, Measure, MeasureJson, PointJson};
use ergokit::recurrence::{recurrence_rates, waiting_rates, LadderConfig};
use ergokit::systems::{Phase, Point, Sided, SystemHandle};

use crate::artifact::{RunArtifact, Table};
use crate::config::{ExperimentConfig, SuiteConfig, SystemSpec, ALL_SUITES};
use crate::rng::Streams;
use crate::LabError;

/// Failing instances kept per suite.
pub const DUMP_CAP: usize = 20;
pub const Q_VALUES: [f64; 7] = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];
pub const Q_TOL: f64 = 1e-9;
pub const COVER_REL_SLACK: f64 = 1e-12;

pub fn zoo() -> Vec<SystemSpec> {
    vec![
        SystemSpec::Doubling,
        SystemSpec::Tent,
        SystemSpec::Rotation { alpha: (5f64.sqrt() - 1.0) / 2.0 },
        SystemSpec::Shift { alphabet: 2, sided: Sided::One },
        SystemSpec::Shift { alphabet: 2, sided: Sided::Two },
        SystemSpec::Shift { alphabet: 3, sided: Sided::One },
    ]
}

fn periodic_zoo() -> Vec<SystemSpec> {
    vec![
        SystemSpec::Doubling,
        SystemSpec::Tent,
        SystemSpec::Shift { alphabet: 2, sided: Sided::One },
        SystemSpec::Shift { alphabet: 2, sided: Sided::Two },
        SystemSpec::Shift { alphabet: 3, sided: Sided::One },
        SystemSpec::Shift { alphabet: 3, sided: Sided::Two },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: String,
    pub cases: usize,
    pub failed: usize,
    pub passes: Vec<bool>,
    pub dumps: Vec<Value>,
}

/// A generated case: system, measure, center point and free parameters.
struct Case {
    spec: SystemSpec,
    sys: SystemHandle,
    mu: Measure,
    x: Point,
    params: Value,
}

impl Case {
    fn dump(&self, index: usize, observed: Value) -> Value {
        json!({
            "index": index,
            "system": self.spec,
            "measure": MeasureJson::from_measure(&self.mu),
            "x": PointJson::from_point(&self.x),
            "params": self.params,
            "observed": observed,
        })
    }
}

fn random_atomic(sys: &SystemHandle, rng: &mut ChaCha8Rng, atoms: usize) -> Result<AtomicMeasure, LabError> {
    let pts: Vec<Point> = (0..atoms).map(|_| sys.random_point(rng, 200)).collect();
    let w: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    Ok(AtomicMeasure::new(sys, pts, w.into_iter().map(|x| x / s).collect())?)
}

/// Random zoo system and atomic measure; the center is an atom half the time.
fn atomic_case(rng: &mut ChaCha8Rng, atoms: std::ops::Range<usize>, params: Value) -> Result<Case, LabError> {
    let specs = zoo();
    let spec = specs[rng.gen_range(0..specs.len())].clone();
    let sys = spec.build()?;
    let k = rng.gen_range(atoms);
    let m = random_atomic(&sys, rng, k)?;
    let x = if rng.gen_bool(0.5) { m.atoms()[rng.gen_range(0..m.len())].clone() } else { sys.random_point(rng, 200) };
    Ok(Case { spec, sys, mu: m.into(), x, params })
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

fn p_f64(c: &Case, key: &str) -> f64 {
    c.params[key].as_f64().expect("generated parameter")
}

fn p_usize(c: &Case, key: &str) -> usize {
    c.params[key].as_u64().expect("generated parameter") as usize
}

type Check<'a> = dyn Fn(&Case) -> Result<(bool, Value), LabError> + Sync + 'a;

fn run_cases(name: &str, cases: Vec<Case>, check: &Check<'_>) -> Result<SuiteOutcome, LabError> {
    let results = cases.par_iter().map(check).collect::<Result<Vec<_>, _>>()?;
    let mut dumps = Vec::new();
    let mut passes = Vec::new();
    for (i, (ok, observed)) in results.into_iter().enumerate() {
        passes.push(ok);
        if !ok && dumps.len() < DUMP_CAP {
            dumps.push(cases[i].dump(i, observed));
        }
    }
    Ok(SuiteOutcome {
        name: name.into(),
        cases: passes.len(),
        failed: passes.iter().filter(|p| !**p).count(),
        passes,
        dumps,
    })
}

/// μ(B_n(x, ε)) ≤ ∫ g dμ ≤ μ(B_n(x, 2ε)). `ramp` scales the slope of the
/// mollifier ramp; 1 uses the library mollifier.
pub fn mollifier_suite(streams: &Streams, cases: usize, ramp: f64) -> Result<SuiteOutcome, LabError> {
    let mut rng = streams.get("suite/mollifier");
    let cs = (0..cases)
        .map(|_| {
            let eps = log_uniform(&mut rng, 1e-3, 0.6);
            let n = rng.gen_range(1..10usize);
            atomic_case(&mut rng, 1..30, json!({"epsilon": eps, "n": n, "ramp": ramp}))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let profile = move |d: f64, e: f64| {
        if ramp == 1.0 {
            mollifier_value(d, e)
        } else if d <= e {
            1.0
        } else {
            (1.0 - ramp * (d - e) / e).max(0.0)
        }
    };
    run_cases("mollifier", cs, &|c| {
        let (eps, n) = (p_f64(c, "epsilon"), p_usize(c, "n"));
        let m = c.mu.as_atomic().expect("atomic case");
        let t = DistanceTable::new(&c.sys, BallSide::Open, &c.x, m, n)?;
        let (lo, mid, hi) = (t.mass(eps, n), t.mollified_with(eps, n, &profile), t.mass(2.0 * eps, n));
        Ok((lo <= mid && mid <= hi, json!({"ball": lo, "mollified": mid, "double_ball": hi})))
    })
}

/// β̲^{2ε}(s) ≤ γ̲^ε(s+1) ≤ β̲^ε(s), β̲ non-decreasing in s and
/// non-increasing in ε.
pub fn beta_gamma_suite(streams: &Streams, cases: usize) -> Result<SuiteOutcome, LabError> {
    const N_MAX: usize = 10;
    let mut rng = streams.get("suite/beta-gamma");
    let cs = (0..cases)
        .map(|_| {
            let eps = rng.gen_range(0.01..0.3);
            let s = rng.gen_range(0..6usize);
            atomic_case(&mut rng, 2..30, json!({"epsilon": eps, "s": s, "n_max": N_MAX}))
        })
        .collect::<Result<Vec<_>, _>>()?;
    run_cases("beta-gamma", cs, &|c| {
        let (eps, s) = (p_f64(c, "epsilon"), p_usize(c, "s"));
        let beta = |e: f64, s: usize| beta_lower(&c.sys, &c.mu, &c.x, e, s, N_MAX);
        let b2 = beta(2.0 * eps, s)?;
        let g = gamma_lower(&c.sys, &c.mu, &c.x, eps, s + 1, N_MAX)?;
        let b = beta(eps, s)?;
        let b_prev = if s > 0 { beta(eps, s - 1)? } else { f64::NEG_INFINITY };
        let b_wide = beta(1.5 * eps, s)?;
        let ok = b2 <= g && g <= b && b_prev <= b && b_wide <= b;
        Ok((ok, json!({"beta_2eps": b2, "gamma": g, "beta": b, "beta_prev_s": b_prev, "beta_1_5eps": b_wide})))
    })
}

/// I(s, 2r, n) ≤ S(s, r, n) ≤ W(s, r, n) ≤ S(s, 2r, n) on the greedy cover.
pub fn cover_chain_suite(streams: &Streams, cases: usize) -> Result<SuiteOutcome, LabError> {
    let mut rng = streams.get("suite/cover-chain");
    let cs = (0..cases)
        .map(|_| {
            let s = rng.gen_range(0.1..0.9);
            let r = rng.gen_range(0.02..0.4);
            let n = rng.gen_range(1..6usize);
            atomic_case(&mut rng, 1..40, json!({"s": s, "r": r, "n": n}))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let opts = CoverOptions::default();
    run_cases("cover-chain", cs, &|c| {
        let m = c.mu.as_atomic().expect("atomic case");
        let g = generating_set_sums(&c.sys, m, p_f64(c, "s"), p_f64(c, "r"), p_usize(c, "n"), &opts)?;
        let ok = g.i_double <= g.s_value * (1.0 + COVER_REL_SLACK) && g.s_value <= g.w_value && g.w_value <= g.s_double;
        Ok((ok, json!({"I_2r": g.i_double, "S": g.s_value, "W": g.w_value, "S_2r": g.s_double})))
    })
}

/// η̲^ε ≤ θ̲^ε ≤ η̲^{2ε} and η̲ non-decreasing in s, on closed balls.
pub fn eta_theta_suite(streams: &Streams, cases: usize) -> Result<SuiteOutcome, LabError> {
    const N_MAX: usize = 6;
    let mut rng = streams.get("suite/eta-theta");
    let cs = (0..cases)
        .map(|_| {
            let eps = rng.gen_range(0.01..0.3);
            let s = rng.gen_range(0..N_MAX);
            atomic_case(&mut rng, 1..30, json!({"epsilon": eps, "s": s, "n_max": N_MAX}))
        })
        .collect::<Result<Vec<_>, _>>()?;
    run_cases("eta-theta", cs, &|c| {
        let (eps, s) = (p_f64(c, "epsilon"), p_usize(c, "s"));
        let side = default_side(&c.sys);
        let e1 = eta_lower(&c.sys, &c.mu, &c.x, eps, s, N_MAX, side)?;
        let th = theta_lower(&c.sys, &c.mu, &c.x, eps, s, N_MAX, side)?;
        let e2 = eta_lower(&c.sys, &c.mu, &c.x, 2.0 * eps, s, N_MAX, side)?;
        let next = eta_lower(&c.sys, &c.mu, &c.x, eps, s + 1, N_MAX, side)?;
        let ok = e1 <= th && th <= e2 && e1 <= next;
        Ok((ok, json!({"eta": e1, "theta": th, "eta_2eps": e2, "eta_next_s": next, "sided": side})))
    })
}

/// The fixed-(ε, n) correlation functional is non-increasing in q. Every
/// tenth case uses an analytic measure on the one-sided 2-shift.
pub fn q_monotone_suite(streams: &Streams, cases: usize) -> Result<SuiteOutcome, LabError> {
    let mut rng = streams.get("suite/q-monotone");
    let analytic: Vec<AnalyticMeasure> = vec![
        AnalyticMeasure::bernoulli(vec![0.25, 0.75])?,
        AnalyticMeasure::markov(vec![vec![0.5, 0.5], vec![1.0, 0.0]], vec![2.0 / 3.0, 1.0 / 3.0])?,
        AnalyticMeasure::bernoulli(vec![0.5, 0.5])?,
    ];
    let mut cs = Vec::with_capacity(cases);
    for i in 0..cases {
        let n = rng.gen_range(1..10usize);
        if i % 10 == 0 {
            let spec = SystemSpec::Shift { alphabet: 2, sided: Sided::One };
            let sys = spec.build()?;
            let mu: Measure = analytic[(i / 10) % analytic.len()].clone().into();
            let eps = 0.5f64.powi(rng.gen_range(1..4));
            let x = sys.random_point(&mut rng, 0);
            cs.push(Case { spec, sys, mu, x, params: json!({"epsilon": eps, "n": n}) });
        } else {
            let eps = rng.gen_range(0.02..0.3);
            cs.push(atomic_case(&mut rng, 2..40, json!({"epsilon": eps, "n": n}))?);
        }
    }
    run_cases("q-monotone", cs, &|c| {
        let (eps, n) = (p_f64(c, "epsilon"), p_usize(c, "n"));
        let h = Q_VALUES.iter().map(|&q| correlation_functional(&c.sys, &c.mu, q, eps, n)).collect::<Result<Vec<_>, _>>()?;
        let ok = h.windows(2).all(|w| w[1] <= w[0] + Q_TOL);
        Ok((ok, json!({"q": Q_VALUES, "functional": h})))
    })
}

/// A random periodic orbit of `sys` with a pattern of 1..=8 symbols. Circle
/// maps use a periodic binary expansion, closed up after at most 4 passes.
fn random_periodic(spec: &SystemSpec, sys: &SystemHandle, rng: &mut ChaCha8Rng) -> Result<(AtomicMeasure, Vec<u8>), LabError> {
    loop {
        let len = rng.gen_range(1..=8usize);
        if let Some((k, _)) = sys.shift_params() {
            let w: Vec<u8> = (0..len).map(|_| rng.gen_range(0..k)).collect();
            return Ok((periodize(sys, &w)?, w));
        }
        let bits: Vec<bool> = (0..len).map(|_| rng.gen()).collect();
        let x = Point::Circle(Phase::periodic(&bits));
        for mult in 1..=4 {
            if let Ok(m) = periodic_measure(sys, &x, mult * len) {
                return Ok((m, bits.iter().map(|&b| b as u8).collect()));
            }
        }
        debug_assert!(!matches!(spec, SystemSpec::Doubling), "doubling orbits close after one pass");
    }
}

/// Every zero-entropy indicator is exactly 0 on periodic measures, with
/// ladders below the orbit separation.
pub fn periodic_zero_suite(streams: &Streams, cases: usize, grid: &ScaleGrid) -> Result<SuiteOutcome, LabError> {
    const CHECKED_ATOMS: usize = 8;
    let mut rng = streams.get("suite/periodic-zero");
    let specs = periodic_zoo();
    let mut cs = Vec::with_capacity(cases);
    for i in 0..cases {
        let spec = specs[i % specs.len()].clone();
        let sys = spec.build()?;
        let (m, pattern) = random_periodic(&spec, &sys, &mut rng)?;
        let x = m.atoms()[0].clone();
        cs.push(Case { spec, sys, mu: m.into(), x, params: json!({"pattern": pattern}) });
    }
    run_cases("periodic-zero", cs, &|c| {
        let m = c.mu.as_atomic().expect("periodic case");
        let atoms = &m.atoms()[..m.len().min(CHECKED_ATOMS)];
        let r0 = 0.99 * m.separation(&c.sys)?.min(c.sys.diameter());
        let ladder = LadderConfig { r0, rungs: 8, fit_rungs: 5, horizon: 4 * m.len() as u64 + 4 };
        let dc = DimensionConfig { r0, ..DimensionConfig::default() };
        let entropy = essential_local_entropy(&c.sys, &c.mu, m.atoms(), &grid)?.value;
        let mut rates = Vec::new();
        let mut dims = Vec::new();
        for a in atoms {
            let p = recurrence_rates(&c.sys, a, &ladder)?;
            rates.extend([p.lower_rate, p.upper_rate]);
            for b in atoms {
                let p = waiting_rates(&c.sys, a, b, &ladder)?;
                rates.extend([p.lower_rate, p.upper_rate]);
            }
            dims.push(local_dimension(&c.sys, &c.mu, a, &dc)?.value);
        }
        let sp = correlation_entropy_spectrum(&c.sys, &c.mu, &grid)?;
        let spectrum: Vec<f64> = sp.rows.iter().flat_map(|r| [r.lower.value, r.upper.value]).collect();
        let ok = entropy == 0.0
            && rates.iter().all(|&v| v == 0.0)
            && dims.iter().all(|&v| v == 0.0)
            && spectrum.iter().all(|&v| v == 0.0);
        let nonzero = |v: &[f64]| v.iter().copied().filter(|x| *x != 0.0).collect::<Vec<_>>();
        Ok((
            ok,
            json!({
                "atoms": m.len(),
                "entropy": entropy,
                "nonzero_rates": nonzero(&rates),
                "nonzero_dimensions": nonzero(&dims),
                "nonzero_spectrum": nonzero(&spectrum),
            }),
        ))
    })
}

pub fn run_suites(cfg: &SuiteConfig, grid: &ScaleGrid, streams: &Streams) -> Result<Vec<SuiteOutcome>, LabError> {
    let mut out = Vec::new();
    for name in &cfg.suites {
        out.push(match name.as_str() {
            "mollifier" => mollifier_suite(streams, cfg.mollifier_cases, cfg.mollifier_ramp)?,
            "beta-gamma" => beta_gamma_suite(streams, cfg.beta_gamma_cases)?,
            "cover-chain" => cover_chain_suite(streams, cfg.cover_cases)?,
            "eta-theta" => eta_theta_suite(streams, cfg.eta_theta_cases)?,
            "q-monotone" => q_monotone_suite(streams, cfg.q_monotone_cases)?,
            "periodic-zero" => periodic_zero_suite(streams, cfg.periodic_cases, grid)?,
            other => {
                return Err(LabError::Config(format!("unknown suite `{other}`; known: {}", ALL_SUITES.join(", "))))
            }
        });
    }
    Ok(out)
}

pub fn run_inequality_suite(cfg: &ExperimentConfig) -> Result<RunArtifact, LabError> {
    let streams = Streams::new(cfg.seed);
    let outcomes = run_suites(&cfg.suite, &cfg.grid, &streams)?;
    let mut counts = Table::new("suites", &["suite", "cases", "passed", "failed"]);
    let mut cases = Table::new("cases", &["suite", "index", "pass"]);
    let mut failures = BTreeMap::new();
    for o in &outcomes {
        counts.push(vec![o.name.clone(), o.cases.to_string(), (o.cases - o.failed).to_string(), o.failed.to_string()]);
        for (i, p) in o.passes.iter().enumerate() {
            cases.push(vec![o.name.clone(), i.to_string(), p.to_string()]);
        }
        failures.insert(o.name.clone(), o.dumps.clone());
    }
    let total: usize = outcomes.iter().map(|o| o.failed).sum();
    let per_suite: Vec<Value> =
        outcomes.iter().map(|o| json!({"suite": o.name, "cases": o.cases, "failed": o.failed})).collect();
    let summary = json!({
        "seed": cfg.seed,
        "suites": per_suite,
        "total_failed": total,
        "failures": failures,
    });
    let mut art = RunArtifact::new(cfg.experiment.name(), summary);
    art.tables.extend([counts, cases]);
    Ok(art)
}
