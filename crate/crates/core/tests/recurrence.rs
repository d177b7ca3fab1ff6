use ergokit::measures::{periodize, uniform_empirical, Measure};
use ergokit::recurrence::{
    entrance_ladder, recurrence_rates, return_time, varandas_check, waiting_rates, waiting_time, LadderConfig,
    VarandasConfig,
};
use ergokit::systems::{Phase, Point, Sided, SystemHandle, Word};
use ergokit::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn circle_gap(a: u64, b: u64) -> f64 {
    let d = a.wrapping_sub(b).min(b.wrapping_sub(a));
    d as f64 / 18_446_744_073_709_551_616.0
}

#[test]
fn doubling_return_matches_scan() {
    let sys = SystemHandle::doubling();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = 2f64.powi(-8);
    for _ in 0..20 {
        let w: u64 = rng.gen();
        let want = (1..64u32).find(|&k| circle_gap(w << k, w) < r).map(u64::from);
        let got = return_time(&sys, &Point::Circle(Phase::from_u64(w)), r, 63).unwrap();
        assert_eq!(got, want);
        if let Some(k) = got {
            assert!(k <= 256 + 8);
        }
    }
}

#[test]
fn zero_run_waiting_time() {
    let sys = SystemHandle::full_shift(2, Sided::One);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let zero = Point::Word(Word::periodic(vec![0]));
    for _ in 0..10 {
        let data: Vec<u8> = (0..6000).map(|_| rng.gen_range(0..2)).collect();
        let want = (1..5000).find(|&k| data[k..k + 6].iter().all(|&s| s == 0)).map(|k| k as u64);
        let x = Point::Word(Word::one_sided(data));
        assert_eq!(waiting_time(&sys, &x, &zero, 2f64.powi(-6), 4999).unwrap(), want);
    }
}

#[test]
fn trivial_times() {
    let sys = SystemHandle::tent();
    let x = Point::circle(0.3);
    assert_eq!(waiting_time(&sys, &x, &sys.apply(&x).unwrap(), 1e-6, 3).unwrap(), Some(1));
    let sys = SystemHandle::doubling();
    let p = Point::Circle(Phase::periodic(&[true, false, false]));
    let off = Point::circle(0.5);
    assert_eq!(waiting_time(&sys, &p, &off, 0.05, 10_000).unwrap(), None);
}

#[test]
fn periodic_rates_vanish_below_separation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for sys in [SystemHandle::full_shift(2, Sided::One), SystemHandle::full_shift(3, Sided::Two)] {
        let k = sys.shift_params().unwrap().0;
        for _ in 0..10 {
            let len = rng.gen_range(1..9);
            let w: Vec<u8> = (0..len).map(|_| rng.gen_range(0..k)).collect();
            let mu = periodize(&sys, &w).unwrap();
            let sep = mu.separation(&sys).unwrap().min(1.0);
            let cfg = LadderConfig { r0: sep * 0.99, rungs: 8, fit_rungs: 5, horizon: 100 };
            let atoms = mu.atoms();
            for a in atoms {
                let p = recurrence_rates(&sys, a, &cfg).unwrap();
                assert_eq!((p.lower_rate, p.upper_rate), (0.0, 0.0));
                for b in atoms {
                    let p = waiting_rates(&sys, a, b, &cfg).unwrap();
                    assert_eq!((p.lower_rate, p.upper_rate), (0.0, 0.0));
                }
            }
        }
    }
}

#[test]
fn lebesgue_points_recur_at_rate_one() {
    let sys = SystemHandle::doubling();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = LadderConfig { rungs: 14, ..LadderConfig::default() };
    let mut ups = Vec::new();
    for _ in 0..20 {
        let x = sys.random_point(&mut rng, cfg.horizon as usize);
        let y = sys.random_point(&mut rng, cfg.horizon as usize);
        let p = recurrence_rates(&sys, &x, &cfg).unwrap();
        let q = waiting_rates(&sys, &x, &y, &cfg).unwrap();
        assert!(p.lower_rate <= p.upper_rate && q.lower_rate <= q.upper_rate);
        ups.push((p.upper_rate, q.upper_rate));
    }
    let mut a: Vec<f64> = ups.iter().map(|u| u.0).collect();
    let mut b: Vec<f64> = ups.iter().map(|u| u.1).collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    assert!((a[10] - 1.0).abs() < 0.15, "{a:?}");
    assert!((b[10] - 1.0).abs() < 0.2, "{b:?}");
}

#[test]
fn varandas_on_periodic_and_lebesgue() {
    let sys = SystemHandle::doubling();
    let x = Point::Circle(Phase::periodic(&[false, true, true, true]));
    let mu: Measure = ergokit::measures::periodic_measure(&sys, &x, 4).unwrap().into();
    let mut cfg = VarandasConfig::new(0.0);
    cfg.ladder = LadderConfig { r0: 0.03, rungs: 8, fit_rungs: 5, horizon: 1000 };
    cfg.dimension.r0 = 0.03;
    let sample = mu.sample(&sys, &mut ChaCha8Rng::seed_from_u64(1), 20, 0).unwrap();
    let r = varandas_check(&sys, &mu, &sample, &cfg).unwrap();
    assert_eq!(r.bound, 0.0);
    assert_eq!((r.points.satisfied, r.pairs.satisfied), (20, 20));
    assert!(r.packing_ok && r.packing.surrogate.value == 0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = VarandasConfig::new(2f64.ln());
    let mu: Measure = uniform_empirical(&sys, &mut rng, 1 << 14, cfg.ladder.horizon as usize + 64).unwrap().into();
    let sample = mu.sample(&sys, &mut rng, 60, 0).unwrap();
    let r = varandas_check(&sys, &mu, &sample, &cfg).unwrap();
    assert!(r.points.fraction >= 0.9 && r.pairs.fraction >= 0.9, "{} {}", r.points.fraction, r.pairs.fraction);
    assert!(r.packing_ok);

    let rot = SystemHandle::golden_rotation();
    assert!(matches!(varandas_check(&rot, &mu, &sample, &cfg), Err(Error::NoExpandingConstant(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn times_grow_as_radii_shrink(seed in any::<u64>(), which in 0usize..4) {
        let sys = [SystemHandle::doubling(), SystemHandle::tent(), SystemHandle::golden_rotation(),
                   SystemHandle::full_shift(2, Sided::One)][which].clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = sys.random_point(&mut rng, 3000);
        let y = sys.random_point(&mut rng, 3000);
        let radii: Vec<f64> = (0..8).map(|j| 0.3 * 0.5f64.powi(j)).collect();
        for target in [&x, &y] {
            let t = entrance_ladder(&sys, &x, target, &radii, 2000).unwrap();
            for w in t.windows(2) {
                match (w[0], w[1]) {
                    (Some(a), Some(b)) => prop_assert!(a <= b),
                    (None, Some(_)) => prop_assert!(false),
                    _ => {}
                }
            }
        }
        let cfg = LadderConfig { r0: 0.3, rungs: 8, fit_rungs: 5, horizon: 2000 };
        if let Ok(p) = recurrence_rates(&sys, &x, &cfg) {
            prop_assert!(p.lower_rate <= p.upper_rate);
            prop_assert_eq!(recurrence_rates(&sys, &x, &cfg).unwrap(), p);
        }
    }
}
