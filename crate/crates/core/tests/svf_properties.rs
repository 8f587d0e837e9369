use ldp_tails::svf::{catalogue, SlowlyVaryingSpec};
use proptest::prelude::*;

fn log_grid(from: i32, to: i32, per_decade: i32) -> Vec<f64> {
    (from * per_decade..=to * per_decade)
        .map(|i| 10f64.powf(i as f64 / per_decade as f64))
        .collect()
}

#[test]
fn log_of_slowly_varying_is_small_against_log_t() {
    for (name, l) in catalogue() {
        for t in log_grid(8, 14, 2) {
            let v = l.log_ratio(t).unwrap();
            assert!(v <= 0.05, "{name}: |log ℓ(t)|/log t = {v} at t = {t}");
        }
    }
}

#[test]
fn regular_variation_sandwich() {
    let alpha = 0.1;
    let grid = log_grid(3, 12, 4);
    for (name, l) in catalogue() {
        let up: Vec<f64> = grid
            .iter()
            .map(|&t| t.powf(alpha) * l.evaluate(t).unwrap())
            .collect();
        let down: Vec<f64> = grid
            .iter()
            .map(|&t| t.powf(-alpha) * l.evaluate(t).unwrap())
            .collect();
        assert!(
            up.windows(2).all(|w| w[1] > w[0]),
            "{name}: t^α ℓ(t) not increasing"
        );
        assert!(
            down.windows(2).all(|w| w[1] < w[0]),
            "{name}: t^−α ℓ(t) not decreasing"
        );
    }
}

#[test]
fn deviation_shrinks_along_the_grid() {
    for (name, l) in catalogue() {
        for a in [0.5, 2.0, 10.0] {
            let devs: Vec<f64> = log_grid(3, 15, 1)
                .iter()
                .map(|&t| l.slow_variation_deviation(a, t).unwrap())
                .collect();
            assert!(
                devs.windows(2).all(|w| w[1] <= w[0] + 1e-15),
                "{name}, a = {a}: {devs:?}"
            );
            assert!(devs.last().unwrap() < &0.05, "{name}, a = {a}: {devs:?}");
        }
    }
}

#[test]
fn frozen_deviation_values() {
    let l1 = SlowlyVaryingSpec::power_of_log(1.0, 1.0).unwrap();
    let l2 = SlowlyVaryingSpec::power_of_log(2.0, 1.0).unwrap();
    assert!((l1.slow_variation_deviation(2.0, 1e6).unwrap() - 0.050171626121275604).abs() < 1e-12);
    assert!((l2.slow_variation_deviation(2.0, 1e6).unwrap() - 0.10286044431020427).abs() < 1e-12);
    let r = l1.ratio_with_scaling(2.0, |_| 2.0, 1e6).unwrap();
    assert!((r - 1.050_171_626_121_275_6).abs() < 1e-12);
}

fn spec_strategy() -> impl Strategy<Value = SlowlyVaryingSpec> {
    prop_oneof![
        (0.1f64..10.0).prop_map(|c| SlowlyVaryingSpec::constant(c).unwrap()),
        (-2.0f64..2.0, 1.0f64..5.0)
            .prop_map(|(p, s)| SlowlyVaryingSpec::power_of_log(p, s).unwrap()),
        (-2.0f64..2.0).prop_map(|p| SlowlyVaryingSpec::iterated_log(p).unwrap()),
        (-0.5f64..0.5, prop::collection::vec(-0.3f64..0.3, 1..5),).prop_map(|(eta, eps)| {
            let mut table: Vec<(f64, f64)> = eps
                .iter()
                .enumerate()
                .map(|(i, e)| (10f64.powi(i as i32), *e))
                .collect();
            table.push((10f64.powi(eps.len() as i32), 0.0));
            SlowlyVaryingSpec::karamata(1.0, eta, table).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closure_deviation_bounds(
        l in spec_strategy(),
        m in spec_strategy(),
        alpha in -3.0f64..3.0,
        a in prop::sample::select(vec![0.5, 2.0, 10.0]),
        exp10 in 3.0f64..12.0,
    ) {
        let t = 10f64.powf(exp10);
        let dl = l.slow_variation_deviation(a, t).unwrap();
        let dm = m.slow_variation_deviation(a, t).unwrap();
        let slack = 1e-12;
        let prod = l.product(&m).slow_variation_deviation(a, t).unwrap();
        prop_assert!(prod <= dl + dm + dl * dm + slack);
        let sum = l.sum(&m).slow_variation_deviation(a, t).unwrap();
        prop_assert!(sum <= dl.max(dm) + slack);
        let pow = l.power(alpha).unwrap().slow_variation_deviation(a, t).unwrap();
        let bound = ((1.0 + dl).powf(alpha) - 1.0).abs().max(((1.0 - dl).max(0.0).powf(alpha) - 1.0).abs());
        prop_assert!(pow <= bound + slack, "{pow} > {bound}");
    }

    #[test]
    fn karamata_refinement_is_exact(
        eta in -0.5f64..0.5,
        eps in prop::collection::vec(-0.3f64..0.3, 1..5),
        split in 0.01f64..0.99,
        which in 0usize..4,
        t in 1.0f64..1e6,
    ) {
        let mut table: Vec<(f64, f64)> = eps.iter().enumerate().map(|(i, e)| (10f64.powi(i as i32), *e)).collect();
        table.push((10f64.powi(eps.len() as i32), 0.0));
        let coarse = SlowlyVaryingSpec::karamata(1.0, eta, table.clone()).unwrap();
        let i = which % eps.len();
        let (lo, v) = table[i];
        let hi = table[i + 1].0;
        let mid = lo * (hi / lo).powf(split);
        let mut fine = table.clone();
        fine.insert(i + 1, (mid, v));
        let fine = SlowlyVaryingSpec::karamata(1.0, eta, fine).unwrap();
        let (c, f) = (coarse.evaluate(t).unwrap(), fine.evaluate(t).unwrap());
        prop_assert!((c / f - 1.0).abs() <= 4.0 * f64::EPSILON, "{c} vs {f}");
    }

    #[test]
    fn evaluation_is_positive(l in spec_strategy(), t in 1e-6f64..1e15) {
        prop_assert!(l.evaluate(t).unwrap() > 0.0);
    }

    #[test]
    fn serde_round_trip(l in spec_strategy()) {
        let text = serde_json::to_string(&l).unwrap();
        let back: SlowlyVaryingSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, l);
    }
}
