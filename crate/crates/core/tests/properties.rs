use proptest::prelude::*;

use fde_density::basis::{BasisSpec, IntervalSupport};
use fde_density::estimator::{contrast, estimate_coefficients, Sample};
use fde_density::fbm::{fbm_covariance, increments, FbmGenerator, HurstIndex, TimeGrid};
use fde_density::quadrature::{trapezoid, uniform_nodes};
use fde_density::selection::{penalty, proposal_set, select_model, PenaltyConfig};

fn sample_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.2f64..1.2, 1..300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_symmetric(s in 0.0f64..50.0, t in 0.0f64..50.0, hv in 0.01f64..0.99) {
        let h = HurstIndex::new(hv).unwrap();
        prop_assert_eq!(fbm_covariance(s, t, h), fbm_covariance(t, s, h));
        prop_assert!((fbm_covariance(t, t, h) - t.powf(2.0 * hv)).abs() <= 1e-12 * (1.0 + t.powf(2.0 * hv)));
    }

    #[test]
    fn increments_telescope(values in prop::collection::vec(-1e3f64..1e3, 1..100)) {
        let inc = increments(&values);
        let mut acc = 0.0;
        for (i, d) in inc.iter().enumerate() {
            acc += d;
            prop_assert!((acc - values[i]).abs() <= 1e-9 * (1.0 + values[i].abs()));
        }
    }

    #[test]
    fn paths_reproducible(n in 1usize..40, hv in 0.05f64..0.95, seed in any::<u64>()) {
        let grid = TimeGrid::new(n, 0.37).unwrap();
        let gen = FbmGenerator::new(grid, HurstIndex::new(hv).unwrap()).unwrap();
        prop_assert_eq!(gen.sample(seed), gen.sample(seed));
    }

    #[test]
    fn estimate_prefix_and_argmin(values in sample_strategy(), m in 1usize..25, noise in prop::collection::vec(-1.0f64..1.0, 25)) {
        let spec = BasisSpec::trigonometric(IntervalSupport::new(-1.0, 1.0).unwrap(), 25).unwrap();
        let s = Sample::iid(values).unwrap();
        let full = estimate_coefficients(&s, &spec, 25).unwrap();
        let est = estimate_coefficients(&s, &spec, m).unwrap();
        prop_assert_eq!(&est.theta_hat[..], &full.theta_hat[..m]);
        let at_min = contrast(&s, &spec, &est.theta_hat).unwrap();
        prop_assert!((at_min + est.norm_sq()).abs() <= 1e-12);
        let other: Vec<f64> = est.theta_hat.iter().zip(&noise).map(|(t, e)| t + e).collect();
        prop_assert!(contrast(&s, &spec, &other).unwrap() >= at_min - 1e-12);
    }

    #[test]
    fn plancherel(values in sample_strategy(), m in 1usize..30) {
        let spec = BasisSpec::trigonometric(IntervalSupport::new(-1.0, 1.0).unwrap(), 30).unwrap();
        let est = estimate_coefficients(&Sample::iid(values).unwrap(), &spec, m).unwrap();
        let xs = uniform_nodes(-1.0, 1.0, 20_000);
        let sq: Vec<f64> = xs.iter().map(|&x| est.eval(x).powi(2)).collect();
        let norm = est.norm_sq();
        prop_assert!((trapezoid(&xs, &sq) - norm).abs() <= 1e-6 * norm);
    }

    #[test]
    fn criterion_decomposes(values in sample_strategy(), kappa in 0.0f64..10.0, hv in 0.05f64..0.95) {
        let spec = BasisSpec::trigonometric(IntervalSupport::new(-1.0, 1.0).unwrap(), 30).unwrap();
        let s = Sample::iid(values).unwrap();
        let cfg = PenaltyConfig::for_sample(&s, HurstIndex::new(hv).unwrap(), kappa).unwrap().with_override(Some(30));
        let sel = select_model(&s, &spec, &cfg).unwrap();
        for row in &sel.table {
            let est = estimate_coefficients(&s, &spec, row.m).unwrap();
            let pen = penalty(row.m, &spec, &cfg).unwrap();
            prop_assert!((row.criterion - (-est.norm_sq() + pen)).abs() <= 1e-12);
        }
        let best = sel.table.iter().map(|r| r.criterion).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(sel.row(sel.m_hat).unwrap().criterion, best);
        prop_assert!(sel.proposal.contains(sel.m_hat));
    }

    #[test]
    fn larger_kappa_never_grows_m_hat(values in sample_strategy(), kappa in 0.0f64..5.0, c in 1.0f64..100.0) {
        let spec = BasisSpec::trigonometric(IntervalSupport::new(-1.0, 1.0).unwrap(), 30).unwrap();
        let s = Sample::iid(values).unwrap();
        let cfg = PenaltyConfig::for_sample(&s, HurstIndex::new(0.6).unwrap(), kappa).unwrap().with_override(Some(30));
        let a = select_model(&s, &spec, &cfg).unwrap().m_hat;
        let b = select_model(&s, &spec, &cfg.with_kappa(kappa * c)).unwrap().m_hat;
        prop_assert!(b <= a);
    }

    #[test]
    fn zero_kappa_selects_largest(values in prop::collection::vec(-0.9f64..0.9, 5..200), cap in 1usize..30) {
        let spec = BasisSpec::trigonometric(IntervalSupport::new(-1.0, 1.0).unwrap(), 30).unwrap();
        let s = Sample::iid(values).unwrap();
        let cfg = PenaltyConfig::for_sample(&s, HurstIndex::new(0.5).unwrap(), 0.0).unwrap().with_override(Some(cap));
        let sel = select_model(&s, &spec, &cfg).unwrap();
        let top = sel.table.iter().map(|r| r.criterion).fold(f64::INFINITY, f64::min);
        // Several largest models can tie when trailing coefficients vanish; the smallest wins.
        let first_best = sel.table.iter().find(|r| r.criterion == top).unwrap().m;
        prop_assert_eq!(sel.m_hat, first_best);
        prop_assert!(sel.table.windows(2).all(|w| w[1].criterion <= w[0].criterion));
    }

    #[test]
    fn proposal_set_shrinks_with_hurst(span in 2.0f64..1e5, h1 in 0.5f64..0.99, h2 in 0.5f64..0.99) {
        let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
        let spec = BasisSpec::trigonometric(IntervalSupport::unit(), 80).unwrap();
        let set = |hv| proposal_set(&spec, &PenaltyConfig::new(2.0, HurstIndex::new(hv).unwrap(), 1, span).unwrap()).unwrap().members.len();
        prop_assert!(set(hi) <= set(lo));
    }
}
