mod common;

use coexist_core::analytics::{success_punc, success_rsma, success_rsma_shared_fading};
use coexist_core::model::{RsmaSplit, Scheme};
use coexist_core::selector::{evaluate_point, validate_point, SplitSource};
use coexist_core::sim::{paoi_distribution_check, simulate, SimOptions, StageFading};
use coexist_core::SystemConfig;
use common::*;
use proptest::prelude::*;

fn cfg(slots: u64) -> SystemConfig {
    SystemConfig {
        num_slots: slots,
        ..reference_cfg()
    }
}

#[test]
fn all_schemes_agree_with_closed_forms() {
    let c = cfg(50_000);
    let split = RsmaSplit::new(0.2, 0.01).unwrap();
    for (i, gap) in [-20.0, 5.0, 25.0].into_iter().enumerate() {
        let p = evaluate_point(&reference_point(0.0), &c, gap, &SplitSource::Fixed(split)).unwrap();
        let checks = validate_point(&p, &reference_point(0.0), &c, i as u64, SimOptions::default(), 3.0).unwrap();
        for v in checks {
            assert!(v.agrees, "gap {gap}: {v:?}");
        }
    }
}

#[test]
fn punctured_peaks_are_geometric() {
    let c = cfg(20_000);
    let op = reference_point(0.0);
    let r = simulate(Scheme::Punc, &op, &c, None, 9, SimOptions::default()).unwrap();
    let q = c.activation_prob * success_punc(&op, &c);
    let gof = paoi_distribution_check(&r.peaks, q).unwrap();
    assert!(gof.pass, "{gof:?}");
}

#[test]
fn shared_stage_fading_follows_its_own_closed_form() {
    let c = cfg(100_000);
    let op = reference_point(10.0);
    let split = RsmaSplit::new(0.3, 0.01).unwrap();
    let opts = SimOptions {
        stage_fading: StageFading::Shared,
        check_invariants: false,
    };
    let r = simulate(Scheme::Rsma, &op, &c, Some(&split), 3, opts).unwrap();
    let shared = success_rsma_shared_fading(&op, &c, &split);
    assert!(r.success.unwrap().agrees_with(shared, 3.0));
    assert!(shared >= success_rsma(&op, &c, &split));
}

#[test]
fn renewal_identity_holds() {
    let c = cfg(30_000);
    let op = reference_point(12.0);
    let r = simulate(Scheme::Noma, &op, &c, None, 2, SimOptions::default()).unwrap();
    let s = r.success.unwrap();
    let rate = r.successes as f64 / r.minislots as f64;
    let target = c.activation_prob * s.mean;
    let se = (rate * (1.0 - rate) / r.minislots as f64).sqrt();
    assert!((rate - target).abs() <= 3.0 * se);
    let aoi = r.avg_aoi.unwrap();
    assert!((aoi.mean * rate - 1.0).abs() <= 3.0 * aoi.std_err * rate + 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn aoi_recursion_and_scheme_ordering(gap in -30.0f64..40.0, seed in 0u64..1000, omega in 0.05f64..0.95) {
        let c = SystemConfig { rng_seed: seed, ..cfg(2_000) };
        let op = reference_point(gap);
        let opts = SimOptions { check_invariants: true, ..SimOptions::default() };
        let split = RsmaSplit::new(omega, 0.01).unwrap();
        let punc = simulate(Scheme::Punc, &op, &c, None, 0, opts).unwrap();
        let noma = simulate(Scheme::Noma, &op, &c, None, 0, opts).unwrap();
        let rsma = simulate(Scheme::Rsma, &op, &c, Some(&split), 0, opts).unwrap();
        // common random numbers: same arrivals, and the pathwise ordering is exact
        prop_assert_eq!(punc.arrivals, noma.arrivals);
        prop_assert_eq!(punc.arrivals, rsma.arrivals);
        prop_assert!(punc.successes >= noma.successes);
        prop_assert!(noma.embb_spectral_eff.mean >= punc.embb_spectral_eff.mean);
        prop_assert!(rsma.embb_spectral_eff.mean >= punc.embb_spectral_eff.mean);
        for r in [&punc, &noma, &rsma] {
            prop_assert_eq!(r.num_peaks(), r.successes);
            let covered: u64 = r.peaks.iter().map(|(k, v)| k * v).sum();
            prop_assert_eq!(covered + r.censored_minislots, r.minislots);
        }
    }
}
