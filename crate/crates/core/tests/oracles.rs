mod common;

use coexist_core::analytics::{avg_aoi, rsma_stage_probs, success_noma, success_punc, success_rsma, RsmaLink};
use coexist_core::model::{derive_rates, rho_split, RsmaSplit, SystemConfig};
use coexist_core::optimizer::{grid_search, gwo_optimize, OptimizerSettings};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn table1_rates_match_first_principles() {
    let cfg = SystemConfig::table1();
    let r = derive_rates(&cfg).unwrap();
    assert!((r.minislot_duration - 1e-3 / 7.0).abs() < 1e-18);
    assert!((r.mc_rate - 1.792e6).abs() < 1e-6);
    assert!((r.rho / rho_of(&cfg, 1.0) - 1.0).abs() < 1e-9);
    let (r1, r2) = rho_split(&cfg, 0.01).unwrap();
    assert!((r1 / rho_of(&cfg, 0.01) - 1.0).abs() < 1e-9);
    assert!((r2 / rho_of(&cfg, 0.99) - 1.0).abs() < 1e-9);
}

#[test]
fn noma_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..25 {
        let op = random_point(&mut rng);
        let cfg = random_cfg(&mut rng);
        let q = noma_success_by_quadrature(&op, rho_of(&cfg, 1.0));
        let s = success_noma(&op, &cfg);
        assert!((q - s).abs() < 1e-6, "quadrature {q} vs closed form {s}");
    }
}

#[test]
fn punc_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for i in 0..5 {
        let op = random_point(&mut rng);
        let cfg = random_cfg(&mut rng);
        let mc = punc_success_by_monte_carlo(&op, rho_of(&cfg, 1.0), 200_000, i);
        assert!(mc.within(success_punc(&op, &cfg), 3.0), "{mc:?}");
    }
}

#[test]
fn rsma_matches_monte_carlo_and_stage_product() {
    let cfg = reference_cfg();
    for (i, gap) in [-10.0, 0.0, 10.0, 20.0].into_iter().enumerate() {
        let op = reference_point(gap);
        for omega in [0.3, 0.9] {
            let split = RsmaSplit::new(omega, 0.01).unwrap();
            let (r1, r2) = rho_split(&cfg, 0.01).unwrap();
            let s = success_rsma(&op, &cfg, &split);
            let st = rsma_stage_probs(&op, &cfg, &split);
            assert!((st.s_1 * (1.0 - st.p_out_2) - s).abs() < 1e-12);
            let mc = rsma_success_by_monte_carlo(&op, omega, r1, r2, 200_000, i as u64);
            assert!(mc.within(s, 3.0), "gap {gap} omega {omega}: mc {mc:?} vs {s}");
        }
    }
}

#[test]
fn avg_aoi_matches_markov_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..10 {
        let p: f64 = rng.random_range(0.1..=1.0);
        let s: f64 = rng.random_range(0.1..=1.0);
        let chain = aoi_by_power_iteration(p * s);
        let closed = avg_aoi(p, s);
        assert!((chain / closed - 1.0).abs() < 1e-9, "p {p} s {s}: {chain} vs {closed}");
    }
}

#[test]
fn grid_optimum_dominates_random_samples() {
    let cfg = reference_cfg();
    let settings = OptimizerSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for gap in [0.0, 20.0] {
        let op = reference_point(gap);
        let best = grid_search(&op, &cfg, &settings).unwrap();
        let link = RsmaLink::new(&op, &cfg);
        for _ in 0..20_000 {
            let w = rng.random_range(0.01..0.99);
            let l = rng.random_range(0.01..0.99);
            assert!(link.success(w, l) <= best.objective + 1e-6);
        }
    }
}

#[test]
fn gwo_never_beats_a_finer_grid() {
    let cfg = reference_cfg();
    let op = reference_point(15.0);
    let gwo = gwo_optimize(&op, &cfg, &OptimizerSettings::default()).unwrap();
    let fine = grid_search(
        &op,
        &cfg,
        &OptimizerSettings {
            grid_points_omega: 4000,
            grid_points_lambda: 4000,
            ..OptimizerSettings::default()
        },
    )
    .unwrap();
    // the grid floor for lambda is the box edge, so the finer grid covers the optimum
    assert!(gwo.objective <= fine.objective + 1e-6, "{} vs {}", gwo.objective, fine.objective);
    assert!((gwo.objective - fine.objective).abs() < 1e-3);
}
