use ldp_tails::stream::StreamKey;
use ldp_tails::tail_models::{catalogue, TailModel, IBP_GRID};
use proptest::prelude::*;

#[test]
fn sampler_reproduces_weibull_survival() {
    let n = 1_000_000u64;
    for r in [0.5, 0.3] {
        let m = TailModel::exact_weibull(r).unwrap();
        let mut u = StreamKey::new(99).stream(1, 0);
        let xs: Vec<f64> = (0..n).map(|_| m.sample(u.next_open01()).unwrap()).collect();
        for t in [1.0f64, 4.0, 9.0] {
            let p = (-t.powf(r)).exp();
            let hits = xs.iter().filter(|&&x| x >= t).count() as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (hits - p).abs() <= 4.0 * se,
                "r = {r}, t = {t}: {hits} vs {p}"
            );
        }
    }
}

#[test]
fn catalogue_sampler_matches_its_survival() {
    let n = 200_000u64;
    for (name, m) in catalogue() {
        let mut u = StreamKey::new(5).stream(2, 0);
        let xs: Vec<f64> = (0..n).map(|_| m.sample(u.next_open01()).unwrap()).collect();
        let mean = m.mean().unwrap();
        for t in [mean, 2.0 * mean.abs() + 1.0] {
            let p = m.survival(t);
            let hits = xs.iter().filter(|&&x| x >= t).count() as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-12);
            assert!(
                (hits - p).abs() <= 4.0 * se,
                "{name}, t = {t}: {hits} vs {p}"
            );
        }
    }
}

#[test]
fn mean_agrees_with_first_moment() {
    for (name, m) in catalogue() {
        let (a, b) = (m.mean().unwrap(), m.moment(1).unwrap());
        assert!((a - b).abs() <= 1e-8, "{name}: {a} vs {b}");
    }
    assert_eq!(TailModel::exact_weibull(0.5).unwrap().mean().unwrap(), 2.0);
    assert_eq!(
        TailModel::exact_weibull(0.25).unwrap().mean().unwrap(),
        24.0
    );
    assert_eq!(
        TailModel::exact_weibull(0.5).unwrap().moment(2).unwrap(),
        24.0
    );
    assert!(
        TailModel::shifted_weibull(0.5, -2.0)
            .unwrap()
            .mean()
            .unwrap()
            .abs()
            < 1e-12
    );
}

#[test]
fn integration_by_parts_grid() {
    for (name, m) in catalogue() {
        for &(alpha, a, b) in &IBP_GRID {
            let res = m.integration_by_parts_residual(alpha, a, b).unwrap();
            assert!(
                res <= 1e-6,
                "{name}, (α, a, b) = ({alpha}, {a}, {b}): {res:e}"
            );
        }
    }
    let shifted = TailModel::shifted_weibull(0.5, -1.0).unwrap();
    assert!(
        shifted
            .integration_by_parts_residual(0.05, 0.0, 20.0)
            .unwrap()
            <= 1e-6
    );
}

proptest! {
    #[test]
    fn bounds_are_ordered(idx in 0usize..6, t in -5.0f64..1e4) {
        let (_, m) = &catalogue()[idx % catalogue().len()];
        let (lo, hi) = m.survival_bounds(t);
        prop_assert!(0.0 <= lo && lo <= hi && hi <= 1.0);
    }

    #[test]
    fn sampler_is_monotone(idx in 0usize..6, u in 1e-12f64..0.999_999, v in 1e-12f64..0.999_999) {
        let (_, m) = &catalogue()[idx % catalogue().len()];
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        prop_assert!(m.sample(lo).unwrap() >= m.sample(hi).unwrap());
    }

    #[test]
    fn survival_is_nonincreasing(idx in 0usize..6, s in -5.0f64..500.0, d in 0.0f64..50.0) {
        let (_, m) = &catalogue()[idx % catalogue().len()];
        prop_assert!(m.survival(s + d) <= m.survival(s));
    }
}
