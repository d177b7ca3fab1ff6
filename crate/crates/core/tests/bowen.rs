use ergokit::bowen::{
    ball_contains, ball_mass, ball_mass_with, mollified_mass, mollified_mass_with, BallQuery, BallSide, DistanceTable,
    RefineOptions,
};
use ergokit::measures::{periodic_measure, AnalyticMeasure, AtomicMeasure, Measure};
use ergokit::systems::{dn, Phase, Point, Sided, SystemHandle, Word};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn zoo() -> Vec<SystemHandle> {
    vec![
        SystemHandle::doubling(),
        SystemHandle::tent(),
        SystemHandle::golden_rotation(),
        SystemHandle::full_shift(2, Sided::One),
        SystemHandle::full_shift(2, Sided::Two),
        SystemHandle::full_shift(3, Sided::One),
    ]
}

fn random_atomic(sys: &SystemHandle, rng: &mut ChaCha8Rng, atoms: usize) -> AtomicMeasure {
    let pts: Vec<Point> = (0..atoms).map(|_| sys.random_point(rng, 200)).collect();
    let w: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    AtomicMeasure::new(sys, pts, w.into_iter().map(|x| x / s).collect()).unwrap()
}

/// A point agreeing with `x` to roughly `depth` binary places.
fn perturb(sys: &SystemHandle, x: &Point, rng: &mut ChaCha8Rng, depth: i64) -> Point {
    match x {
        Point::Circle(p) => Point::Circle(Phase::from_u64(p.fixed().wrapping_add(rng.gen::<u64>() >> depth))),
        Point::Word(w) => {
            let (lo, hi) = w.coverage().unwrap();
            let data: Vec<u8> = (lo..=hi)
                .map(|i| {
                    let s = w.get(i).unwrap();
                    if i.abs() >= depth && rng.gen_bool(0.5) {
                        (s + 1) % sys.shift_params().unwrap().0
                    } else {
                        s
                    }
                })
                .collect();
            Point::Word(Word::window(lo, data))
        }
    }
}

#[test]
fn mollified_two_atoms() {
    let sys = SystemHandle::golden_rotation();
    let x = Point::circle(0.0);
    let mu = AtomicMeasure::new(&sys, vec![Point::circle(0.15), Point::circle(0.3)], vec![0.5, 0.5]).unwrap();
    let g = mollified_mass(&sys, &BallQuery::open(x, 1, 0.1), &mu.into()).unwrap();
    assert!((g - 0.25).abs() < 1e-12);
}

#[test]
fn periodic_atom_carries_its_weight() {
    let sys = SystemHandle::doubling();
    let x = Point::Circle(Phase::periodic(&[false, false, true]));
    let mu = periodic_measure(&sys, &x, 3).unwrap();
    for n in [1, 3, 20] {
        let m = ball_mass(&sys, &BallQuery::open(x.clone(), n, 1e-3), &mu.clone().into()).unwrap();
        assert!(m >= 1.0 / 3.0 - 1e-15);
    }
}

#[test]
fn sandwich_and_nesting_on_random_atomic() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for sys in zoo() {
        for _ in 0..30 {
            let atoms = rng.gen_range(1..40);
            let mu = random_atomic(&sys, &mut rng, atoms);
            let x = if rng.gen_bool(0.5) { mu.atoms()[0].clone() } else { sys.random_point(&mut rng, 200) };
            let table = DistanceTable::new(&sys, BallSide::Open, &x, &mu, 12).unwrap();
            for n in 1..=12 {
                for e in [0.01, 0.05, 0.1, 0.3] {
                    let g = table.mollified(e, n);
                    assert!(table.mass(e, n) <= g && g <= table.mass(2.0 * e, n));
                    if n > 1 {
                        assert!(table.mass(e, n) <= table.mass(e, n - 1));
                    }
                    assert!(table.mass(e, n) <= table.mass(1.5 * e, n));
                }
            }
        }
    }
}

#[test]
fn table_agrees_with_direct_queries() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sys = SystemHandle::full_shift(2, Sided::Two);
    let mu = random_atomic(&sys, &mut rng, 25);
    let x = mu.atoms()[3].clone();
    let table = DistanceTable::new(&sys, BallSide::TwoSidedClosed, &x, &mu, 6).unwrap();
    let m: Measure = mu.clone().into();
    for n in 0..=6 {
        let q = BallQuery::two_sided(x.clone(), n, 0.2);
        assert_eq!(table.mass(0.2, n), ball_mass(&sys, &q, &m).unwrap());
        let direct: f64 = mu
            .iter()
            .filter(|(a, _)| ball_contains(&sys, &q, a).unwrap())
            .map(|(_, w)| w)
            .sum();
        assert!((direct - table.mass(0.2, n)).abs() < 1e-15);
        if n > 0 {
            assert!(table.mass(0.2, n) <= table.mass(0.2, n - 1));
        }
    }
}

#[test]
fn lipschitz_inclusion() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for sys in zoo() {
        for _ in 0..200 {
            let x = sys.random_point(&mut rng, 200);
            let n = rng.gen_range(1..10);
            let r = rng.gen_range(0.01..0.4);
            let depth = rng.gen_range(1..30);
            let y = perturb(&sys, &x, &mut rng, depth);
            let d = sys.metric(&x, &y).unwrap();
            if d < r * sys.lipschitz.unwrap().powi(-(n as i32)) {
                assert!(ball_contains(&sys, &BallQuery::open(x.clone(), n, r), &y).unwrap(), "{}", sys.name);
            }
        }
    }
}

#[test]
fn continuity_witness() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for sys in zoo() {
        let mu: Measure = random_atomic(&sys, &mut rng, 30).into();
        for _ in 0..100 {
            let x = sys.random_point(&mut rng, 200);
            let depth = rng.gen_range(4..20);
            let x2 = perturb(&sys, &x, &mut rng, depth);
            let n = rng.gen_range(1..6);
            let e = rng.gen_range(0.02..0.3);
            let a = mollified_mass(&sys, &BallQuery::open(x.clone(), n, e), &mu).unwrap();
            let b = mollified_mass(&sys, &BallQuery::open(x2.clone(), n, e), &mu).unwrap();
            assert!((a - b).abs() <= dn(&sys, &x, &x2, n).unwrap() / e + 1e-12);
        }
    }
}

fn bernoulli_half() -> Measure {
    AnalyticMeasure::bernoulli(vec![0.5, 0.5]).unwrap().into()
}

fn window(rng: &mut ChaCha8Rng, start: i64, len: usize, k: u8) -> Point {
    Point::Word(Word::window(start, (0..len).map(|_| rng.gen_range(0..k)).collect()))
}

#[test]
fn uniform_one_sided_oracles() {
    // under Bernoulli(1/2) the tail T is uniform: μ(B_n) = 2^{-n}·2ε for
    // ε ≤ 1/2 and ∫g = 2^{-n}·3ε for ε ≤ 1/4
    let sys = SystemHandle::full_shift(2, Sided::One);
    let mu = bernoulli_half();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let x = window(&mut rng, 0, 300, 2);
        let n = rng.gen_range(1..15);
        let e: f64 = rng.gen_range(0.001..0.5);
        let q = BallQuery::open(x, n, e);
        let scale = 0.5f64.powi(n as i32);
        let m = ball_mass(&sys, &q, &mu).unwrap();
        assert!((m - scale * 2.0 * e).abs() <= 1e-12 * scale);
        if e <= 0.25 {
            let g = mollified_mass(&sys, &q, &mu).unwrap();
            assert!((g - scale * 3.0 * e).abs() <= 1e-12 * scale);
        }
    }
}

/// P(Z_0 < ε, …, Z_{n-1} < ε) for Bernoulli(1/2), where Z_0 = b_0/2 + Z_1/2.
fn uniform_ball(n: usize, e: f64) -> f64 {
    fn f(m: usize, a: f64, e: f64) -> f64 {
        if m == 1 {
            return a.clamp(0.0, 1.0);
        }
        0.5 * (f(m - 1, (2.0 * a).min(e), e) + f(m - 1, (2.0 * a - 1.0).min(e), e))
    }
    f(n, e, e)
}

#[test]
fn large_radius_refinement_matches_recursion() {
    let sys = SystemHandle::full_shift(2, Sided::One);
    let mu = bernoulli_half();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let x = window(&mut rng, 0, 300, 2);
        let n = rng.gen_range(1..6);
        let e = rng.gen_range(0.05..1.0);
        let b = ball_mass_with(&sys, &BallQuery::open(x, n, e), &mu, &RefineOptions::default()).unwrap();
        let want = uniform_ball(n, e);
        assert!((b.value - want).abs() <= b.unresolved / 2.0 + 1e-12, "n={n} e={e}: {b:?} vs {want}");
    }
}

#[test]
fn tail_recursion_matches_refinement() {
    let sys2 = SystemHandle::full_shift(2, Sided::One);
    let sys3 = SystemHandle::full_shift(3, Sided::One);
    let cases: Vec<(SystemHandle, Measure)> = vec![
        (sys2.clone(), AnalyticMeasure::bernoulli(vec![0.25, 0.75]).unwrap().into()),
        (
            sys2,
            AnalyticMeasure::markov(vec![vec![0.5, 0.5], vec![1.0, 0.0]], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap().into(),
        ),
        (sys3, AnalyticMeasure::bernoulli(vec![0.2, 0.3, 0.5]).unwrap().into()),
    ];
    let slow = RefineOptions { exact_tail: false, rel_tol: 1e-9, ..RefineOptions::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (sys, mu) in cases {
        for _ in 0..15 {
            let x = mu.sample(&sys, &mut rng, 1, 400).unwrap().pop().unwrap();
            let n = rng.gen_range(1..8);
            let e = rng.gen_range(0.01..0.25);
            let q = BallQuery::open(x, n, e);
            for mollify in [false, true] {
                let (a, b) = if mollify {
                    (
                        mollified_mass_with(&sys, &q, &mu, &RefineOptions::default()).unwrap(),
                        mollified_mass_with(&sys, &q, &mu, &slow).unwrap(),
                    )
                } else {
                    (
                        ball_mass_with(&sys, &q, &mu, &RefineOptions::default()).unwrap(),
                        ball_mass_with(&sys, &q, &mu, &slow).unwrap(),
                    )
                };
                let slack = (a.unresolved + b.unresolved) / 2.0 + 1e-11 * a.value;
                assert!((a.value - b.value).abs() <= slack, "{} n={n} e={e} {a:?} {b:?}", sys.name);
            }
        }
    }
}

/// μ(V[x, n, 1/4]) for Bernoulli(1/2) on the two-sided 2-shift: agreement on
/// [−n−1, n+1], then (u, v) uniform on the unit square subject to
/// u + c·v ≤ 1 and v + c·u ≤ 1 with c = 4^{-n}.
fn two_sided_oracle(n: usize) -> f64 {
    let c = 0.25f64.powi(n as i32);
    let s = 1.0 / (1.0 + c);
    let quad = [(1.0, 1.0 - c), (1.0, 1.0), (1.0 - c, 1.0), (s, s)];
    let mut area2 = 0.0;
    for i in 0..4 {
        let (x0, y0) = quad[i];
        let (x1, y1) = quad[(i + 1) % 4];
        area2 += x0 * y1 - x1 * y0;
    }
    0.5f64.powi(2 * n as i32 + 3) * (1.0 - c + area2.abs() / 2.0)
}

#[test]
fn two_sided_quarter_ball() {
    let sys = SystemHandle::full_shift(2, Sided::Two);
    let mu = bernoulli_half();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for n in 0..=10 {
        let x = window(&mut rng, -300, 601, 2);
        let b = ball_mass_with(&sys, &BallQuery::two_sided(x, n, 0.25), &mu, &RefineOptions::default()).unwrap();
        let want = two_sided_oracle(n);
        assert!(b.lower() <= want && want <= b.upper(), "n={n}: {b:?} vs {want}");
        assert!(b.unresolved <= 1e-6 * want);
    }
}

#[test]
fn two_sided_nesting() {
    let sys = SystemHandle::full_shift(2, Sided::Two);
    let mu: Measure = AnalyticMeasure::bernoulli(vec![0.3, 0.7]).unwrap().into();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = mu.sample(&sys, &mut rng, 1, 300).unwrap().pop().unwrap();
    let mut prev = f64::INFINITY;
    for n in 0..8 {
        let b = ball_mass_with(&sys, &BallQuery::two_sided(x.clone(), n, 0.3), &mu, &RefineOptions::default()).unwrap();
        assert!(b.lower() <= prev);
        prev = b.upper();
    }
}

#[test]
fn analytic_sandwich() {
    let sys = SystemHandle::full_shift(2, Sided::One);
    let mu: Measure =
        AnalyticMeasure::markov(vec![vec![0.5, 0.5], vec![1.0, 0.0]], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap().into();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..40 {
        let x = mu.sample(&sys, &mut rng, 1, 400).unwrap().pop().unwrap();
        let n = rng.gen_range(1..10);
        let e = rng.gen_range(0.01..0.5);
        let q = BallQuery::open(x, n, e);
        let lo = ball_mass_with(&sys, &q, &mu, &RefineOptions::default()).unwrap();
        let g = mollified_mass_with(&sys, &q, &mu, &RefineOptions::default()).unwrap();
        let hi = ball_mass_with(&sys, &q.with_epsilon(2.0 * e), &mu, &RefineOptions::default()).unwrap();
        assert!(lo.lower() <= g.upper() + 1e-15 && g.lower() <= hi.upper() + 1e-15);
    }
}

#[test]
fn depth_cap_is_enforced() {
    let sys = SystemHandle::full_shift(2, Sided::One);
    let mu = bernoulli_half();
    let x = Point::Word(Word::periodic(vec![0, 1]));
    let opts = RefineOptions { depth_cap: 20, ..RefineOptions::default() };
    let r = ball_mass_with(&sys, &BallQuery::open(x, 19, 0.25), &mu, &opts);
    assert!(matches!(r, Err(ergokit::Error::DepthCapExceeded { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn atomic_sandwich_exact(seed in any::<u64>(), which in 0usize..6, n in 1usize..10, e in 0.001f64..0.6) {
        let sys = zoo().swap_remove(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_atomic(&sys, &mut rng, 1 + (seed % 30) as usize);
        let x = sys.random_point(&mut rng, 200);
        let q = BallQuery::open(x, n, e);
        let m: Measure = mu.into();
        let lo = ball_mass(&sys, &q, &m).unwrap();
        let g = mollified_mass(&sys, &q, &m).unwrap();
        let hi = ball_mass(&sys, &q.with_epsilon(2.0 * e), &m).unwrap();
        prop_assert!(lo <= g && g <= hi);
        prop_assert!(ball_mass(&sys, &q.with_n(n + 1), &m).unwrap() <= lo);
    }

    #[test]
    fn center_is_inside(seed in any::<u64>(), which in 0usize..6, n in 1usize..20, e in 1e-9f64..1.0) {
        let sys = zoo().swap_remove(which);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sys.random_point(&mut rng, 200);
        prop_assert!(ball_contains(&sys, &BallQuery::open(x.clone(), n, e), &x).unwrap());
    }
}
