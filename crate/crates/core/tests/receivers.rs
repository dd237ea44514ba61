use ambc_core::analytics::{al_params, optimum_pe_constant, optimum_pe_gaussian, simplified_pd};
use ambc_core::detector::m_eigen;
use ambc_core::signal::noise_vector;
use ambc_core::sim::{run_ber, run_estimation_bench, run_roc};
use ambc_core::{CsiMode, Probability, ReceiverKind, Scenario, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn constant_modulus_beats_gaussian_ambient() {
    for g in 16..=30 {
        let sc = Scenario { gamma_db: g as f64, ..Scenario::default() };
        let cc = sc.composite().unwrap();
        let s2 = sc.s_amplitude().powi(2);
        let pc = optimum_pe_constant(&cc, &m_eigen(&cc).unwrap(), s2).unwrap().value();
        let (p0, p1) = al_params(&cc, s2).unwrap();
        let pg = optimum_pe_gaussian(&p0, &p1).value();
        assert!(pc <= pg, "{g} dB: {pc} > {pg}");
    }
}

#[test]
fn noise_components_are_uncorrelated() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 1_000_000;
    let mut cross = [C64::new(0.0, 0.0); 3];
    for _ in 0..n {
        let v = noise_vector(4, &mut rng);
        cross[0] += v[0] * v[1].conj();
        cross[1] += v[1] * v[2].conj();
        cross[2] += v[0] * v[3].conj();
    }
    for c in cross {
        assert!((c / n as f64).norm() < 0.01);
    }
}

#[test]
fn alignment_improves_with_preamble_length() {
    let sc = Scenario { trials: 20_000, block_len: 200, seed: 4, ..Scenario::default() };
    let rows = run_estimation_bench(&sc, &[10, 30, 100], &[CsiMode::Svd, CsiMode::PowerIter]).unwrap();
    for csi in [CsiMode::Svd, CsiMode::PowerIter] {
        let medians: Vec<f64> = rows
            .iter()
            .filter(|r| r.csi == csi)
            .map(|r| r.result.as_ref().unwrap().alignment.unwrap().median)
            .collect();
        assert_eq!(medians.len(), 3);
        assert!(medians.windows(2).all(|w| w[1] >= w[0]), "{csi:?}: {medians:?}");
    }
}

#[test]
fn short_invcov_preamble_is_marked_not_fatal() {
    let sc = Scenario { trials: 1000, ..Scenario::default() };
    let rows = run_estimation_bench(&sc, &[8, 30], &[CsiMode::InvCov]).unwrap();
    assert!(rows[0].result.is_none());
    assert!(rows[0].error.as_deref().unwrap().contains("not enough"));
    assert!(rows[1].result.is_some());
}

#[test]
fn long_preamble_approaches_perfect_csi() {
    let base = Scenario { trials: 1_000_000, preamble_len: 100, seed: 5, ..Scenario::default() };
    let perfect = run_ber(&base).unwrap().ber.value();
    let svd = run_ber(&Scenario { csi: CsiMode::Svd, ..base }).unwrap().ber.value();
    assert!(((svd - perfect) / perfect).abs() < 0.2, "svd {svd} vs perfect {perfect}");
}

#[test]
fn roc_matches_marcum_and_grows_with_antennas() {
    let pfs: Vec<Probability> = [1e-4, 1e-3, 1e-2, 1e-1, 0.5, 1.0].iter().map(|&p| Probability::new(p).unwrap()).collect();
    let mut last: Option<Vec<f64>> = None;
    for n_r in [8, 16, 24, 32] {
        let sc = Scenario {
            n_r,
            trials: 100_000,
            receiver: ReceiverKind::Simplified { pf: Probability::new(1e-2).unwrap() },
            ..Scenario::default()
        };
        let roc = run_roc(&sc, &pfs).unwrap();
        let pd: Vec<f64> = roc.iter().map(|r| r.pd_analytic.unwrap()).collect();
        for r in &roc {
            let p = r.pd_analytic.unwrap();
            let sd = (p * (1.0 - p) / 1e5).sqrt();
            assert!((r.pd_emp - p).abs() <= 3.0 * sd + 1e-12, "n_r {n_r} pf {}: {} vs {p}", r.pf_target, r.pd_emp);
        }
        assert_eq!(roc.last().unwrap().pd_emp, 1.0);
        if let Some(prev) = &last {
            assert!(pd.iter().zip(prev).all(|(a, b)| a >= b));
        }
        last = Some(pd);
    }
}

#[test]
fn analytic_detection_matches_reported_operating_point() {
    // High detection at 28 dB with sixteen antennas and a 1% false-alarm rate.
    let sc = Scenario::default();
    let theta = ambc_core::analytics::noncentrality_theta(&sc.channels().unwrap(), &sc.alphabet, sc.s_amplitude().powi(2))
        .unwrap();
    let pd = simplified_pd(theta, 16, Probability::new(1e-2).unwrap()).unwrap().value();
    assert!(pd > 0.8 && pd < 0.9, "{pd}");
}
