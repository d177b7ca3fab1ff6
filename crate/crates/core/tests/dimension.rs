use ergokit::dimension::{
    local_dimension, packing_dimension_estimate, packing_premeasure, packing_premeasure_limit, DimensionConfig,
    PackingGauge,
};
use ergokit::measures::{periodize, uniform_empirical, AnalyticMeasure, AtomicMeasure, Measure};
use ergokit::systems::{Point, Sided, SystemHandle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dyadic radii from 2^{⌊log2 δ/2⌋} down to the largest dyadic below dmin/4.
fn oracle_grid(d: &[Vec<f64>], delta: f64) -> Vec<f64> {
    let mut top = 1.0;
    while top > delta / 2.0 {
        top /= 2.0;
    }
    let mut dmin = f64::INFINITY;
    for (i, row) in d.iter().enumerate() {
        for &v in &row[i + 1..] {
            dmin = dmin.min(v);
        }
    }
    let mut out = vec![top];
    while dmin.is_finite() && *out.last().unwrap() >= dmin / 4.0 {
        let r = out.last().unwrap() / 2.0;
        out.push(r);
    }
    out
}

/// Every assignment of a grid radius or nothing to every point.
fn brute_premeasure(sys: &SystemHandle, e: &[Point], alpha: f64, delta: f64) -> f64 {
    let n = e.len();
    let d: Vec<Vec<f64>> = e.iter().map(|a| e.iter().map(|b| sys.metric(a, b).unwrap()).collect()).collect();
    let grid = oracle_grid(&d, delta);
    let base = grid.len() + 1;
    let mut best = 0.0f64;
    for code in 0..base.pow(n as u32) {
        let mut c = code;
        let pick: Vec<Option<f64>> = (0..n)
            .map(|_| {
                let k = c % base;
                c /= base;
                (k < grid.len()).then(|| grid[k])
            })
            .collect();
        let ok = (0..n).all(|i| {
            (i + 1..n).all(|j| match (pick[i], pick[j]) {
                (Some(a), Some(b)) => d[i][j] > a + b,
                _ => true,
            })
        });
        if ok {
            best = best.max(pick.iter().flatten().map(|r| (2.0 * r).powf(alpha)).sum());
        }
    }
    best
}

fn random_set(sys: &SystemHandle, rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<Point> {
    let c: f64 = rng.gen();
    (0..n)
        .map(|_| match sys.shift_params() {
            Some(_) => sys.random_point(rng, 80),
            None => Point::circle(c + spread * rng.gen::<f64>()),
        })
        .collect()
}

#[test]
fn premeasure_matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for sys in [SystemHandle::golden_rotation(), SystemHandle::full_shift(2, Sided::One)] {
        for _ in 0..40 {
            let n = rng.gen_range(1..6);
            let e = random_set(&sys, &mut rng, n, 0.2);
            let alpha = rng.gen_range(0.2..2.0);
            let delta = rng.gen_range(0.02..0.9);
            let p = packing_premeasure(&sys, &e, PackingGauge::new(alpha).unwrap(), delta).unwrap();
            let want = brute_premeasure(&sys, &e, alpha, delta);
            assert!((p.value - want).abs() <= 1e-12 * want, "{} vs {want}", p.value);
            assert!(p.exact && p.value <= p.upper_bound && p.packing.is_disjoint(&sys).unwrap());
        }
    }
}

#[test]
fn collinear_triple() {
    let sys = SystemHandle::golden_rotation();
    let delta = 0.25;
    let e: Vec<Point> = (0..3).map(|i| Point::circle(0.1 + i as f64 * delta / 4.0)).collect();
    let g = PackingGauge::new(1.0).unwrap();
    let p = packing_premeasure(&sys, &e, g, delta).unwrap();
    assert_eq!(p.value, brute_premeasure(&sys, &e, 1.0, delta));
}

#[test]
fn separated_and_single() {
    let sys = SystemHandle::full_shift(2, Sided::One);
    let g = PackingGauge::new(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // first symbols differ pairwise at distance ≥ 1/2 > δ
    let e: Vec<Point> = (0..2u8)
        .map(|s| {
            let mut w: Vec<u8> = (0..80).map(|_| rng.gen_range(0..2)).collect();
            w[0] = s;
            Point::Word(ergokit::systems::Word::one_sided(w))
        })
        .collect();
    for delta in [0.25, 0.125] {
        assert_eq!(packing_premeasure(&sys, &e, g, delta).unwrap().value, 2.0 * delta.powf(0.5));
        assert_eq!(packing_premeasure(&sys, &e[..1], g, delta).unwrap().value, delta.powf(0.5));
    }
}

#[test]
fn large_sets_use_search() {
    let sys = SystemHandle::doubling();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let e = random_set(&sys, &mut rng, 40, 1.0);
    let p = packing_premeasure(&sys, &e, PackingGauge::new(1.0).unwrap(), 0.1).unwrap();
    assert!(!p.exact && p.value > 0.0 && p.value <= p.upper_bound);
    assert!(p.packing.is_disjoint(&sys).unwrap());
    assert!(p.packing.radii.iter().all(|&r| r <= 0.05));
    let lim = packing_premeasure_limit(&sys, &e, PackingGauge::new(1.0).unwrap(), &[0.5, 0.1, 0.01]).unwrap();
    assert_eq!(lim.per_scale.len(), 3);
}

#[test]
fn bernoulli_and_lebesgue_dimension_one() {
    let sys = SystemHandle::full_shift(2, Sided::One);
    let mu: Measure = AnalyticMeasure::bernoulli(vec![0.5, 0.5]).unwrap().into();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = DimensionConfig::default();
    for x in mu.sample(&sys, &mut rng, 5, 300).unwrap() {
        let r = local_dimension(&sys, &mu, &x, &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 0.15, "{}", r.value);
    }
    let sys = SystemHandle::doubling();
    let mu: Measure = uniform_empirical(&sys, &mut rng, 1 << 15, 64).unwrap().into();
    for x in [0.2, 0.45, 0.8] {
        let r = local_dimension(&sys, &mu, &Point::circle(x), &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 0.15, "{}", r.value);
    }
    let sample = mu.sample(&sys, &mut rng, 50, 0).unwrap();
    let mut c = cfg.clone();
    c.entropy = Some(2f64.ln());
    let p = packing_dimension_estimate(&sys, &mu, &sample, &c).unwrap();
    assert!(p.surrogate.value <= p.varandas_bound.unwrap() + 0.15);
    assert!(p.lower_quantile_value <= p.surrogate.value && p.lower_label == "heuristic");
}

#[test]
fn atoms_have_dimension_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sys = SystemHandle::full_shift(3, Sided::One);
    for _ in 0..10 {
        let len = rng.gen_range(1..8);
        let w: Vec<u8> = (0..len).map(|_| rng.gen_range(0..3)).collect();
        let m = periodize(&sys, &w).unwrap();
        let cfg = DimensionConfig { r0: m.separation(&sys).unwrap().min(1.0) * 0.99, ..DimensionConfig::default() };
        let mu: Measure = m.clone().into();
        for a in m.atoms() {
            assert_eq!(local_dimension(&sys, &mu, a, &cfg).unwrap().value, 0.0);
        }
        let p = packing_dimension_estimate(&sys, &mu, m.atoms(), &cfg).unwrap();
        assert_eq!(p.surrogate.value, 0.0);
    }
    let sys = SystemHandle::tent();
    let z = Point::circle(0.0);
    let mu: Measure = AtomicMeasure::dirac(&sys, z.clone()).unwrap().into();
    let p = packing_dimension_estimate(&sys, &mu, &[z], &DimensionConfig::default()).unwrap();
    assert_eq!(p.surrogate.value, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn premeasure_monotone(seed in any::<u64>(), n in 1usize..6, alpha in 0.2f64..2.0, d1 in 0.01f64..0.9, d2 in 0.01f64..0.9) {
        let sys = SystemHandle::golden_rotation();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = random_set(&sys, &mut rng, n + 1, 0.3);
        let g = PackingGauge::new(alpha).unwrap();
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let small = packing_premeasure(&sys, &e[..n], g, lo).unwrap().value;
        prop_assert!(small <= packing_premeasure(&sys, &e, g, lo).unwrap().value);
        prop_assert!(small <= packing_premeasure(&sys, &e[..n], g, hi).unwrap().value);
    }
}
