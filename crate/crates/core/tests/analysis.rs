use loschmidt::analysis::*;
use loschmidt::echo::{amplitude, Boundary, ChainSpec, Sites, TimeArgument, TimeKind};
use loschmidt::numerics::reduce_phase;
use loschmidt::planar::critical_time;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn no_error_at_zero_time(n in 1usize..=8, ell in prop::sample::select(vec![2.0, 3.0, 4.0]),
                             abc in any::<bool>(), imag in any::<bool>()) {
        let b = if abc { Boundary::Abc } else { Boundary::Pbc };
        let kind = if imag { TimeKind::Imaginary } else { TimeKind::Real };
        prop_assert_eq!(error_e(n, ell, b, 0.0, kind).unwrap(), 0.0);
    }
}

#[test]
fn error_decays_with_chain_length() {
    // odd L carries its own parity offset, so only integer ell are compared
    let ells = [2.0, 3.0, 4.0];
    for n in [4, 6] {
        let e: Vec<f64> = ells.iter().map(|&l| error_e(n, l, Boundary::Pbc, 0.2, TimeKind::Real).unwrap().abs()).collect();
        for w in e.windows(2) {
            assert!(w[1] < w[0] || w[1] < ERROR_FLOOR, "N={n}: {e:?}");
        }
        let fit = decay_rate_vs_ell(n, Boundary::Pbc, 0.2, &ells).unwrap();
        assert!(fit.rate > 0.0 && fit.r_squared > 0.95, "N={n}: {fit:?}");
    }
    for tau in [0.1, 0.3] {
        let fit = decay_rate_vs_ell(6, Boundary::Pbc, tau, &[2.0, 3.0, 4.0]).unwrap();
        assert!(fit.rate > 0.0, "tau={tau}: {fit:?}");
    }
}

#[test]
fn finite_chain_free_energy_below_planar() {
    // f_{10,30} - tau^2 within 1e-15 of zero is not resolved
    let spec = ChainSpec::new(10, Sites::Finite(30), Boundary::Pbc).unwrap();
    let mut unresolved = 0;
    for k in 1..=30 {
        let tau = 0.01 * k as f64;
        let f = amplitude(&spec, TimeArgument::scaled(TimeKind::Real, tau, 10)).unwrap().free_energy;
        let gap = f - tau * tau;
        if gap.abs() < 1e-15 {
            unresolved += 1;
        } else {
            assert!(gap < 0.0, "tau={tau}: f={f}");
        }
    }
    assert!(unresolved < 30);
}

#[test]
fn relative_error_shrinks() {
    let r6 = error_r(6, 3.0, 0.2).unwrap();
    let r10 = error_r(10, 3.0, 0.2).unwrap();
    assert!(r6 < 0.0 && r10 < 0.0 && r6.abs() < 0.3);
    assert!(r10.abs() < r6.abs());
    assert!(error_r(6, 2.0, 0.2).is_err());
    assert!(error_r(6, 3.0, 0.32).is_err());
}

#[test]
fn speed_limit_sequence() {
    let tc = critical_time();
    let recs = qsl_sequence(13).unwrap();
    assert_eq!(recs.last().unwrap().n_flipped, 27);
    for r in &recs {
        assert!(r.tau_qsl > tc, "{r:?}");
        assert!(r.depth < -10.0, "{r:?}");
        assert!(r.refinement_width <= 1e-9);
        // an isolated zero: the amplitude changes sign across it
        let spec = ChainSpec::infinite(r.n_flipped, Boundary::Pbc).unwrap();
        let d = 1e-6 * r.t_zero;
        let g = |t: f64| amplitude(&spec, TimeArgument::real(t)).unwrap().amplitude;
        let (a, b) = (g(r.t_zero - d), g(r.t_zero + d));
        assert!(a.log_magnitude.is_finite() && b.log_magnitude.is_finite(), "{r:?}");
        assert!(reduce_phase(a.phase - b.phase).abs() > 3.0, "{r:?}: {a:?} {b:?}");
    }
    for w in recs[recs.len() - 4..].windows(2) {
        assert!(w[1].tau_qsl <= w[0].tau_qsl);
    }
    let s = QslSummary::from_records(&recs).unwrap();
    assert!(s.trend < 0.0 && s.last_gap < s.first_gap && s.min > tc);
}

#[test]
fn speed_limit_single_flip_is_bessel_zero() {
    let r = qsl_time(1).unwrap();
    assert!((2.0 * r.t_zero - 2.404_825_557_695_773).abs() < 1e-8);
}

#[test]
fn toda_identity_holds() {
    // the identity is exact here, so residuals sit at difference noise
    for n in 2..=10 {
        let r = toda_residual(n, 0.5).unwrap();
        assert!(r.relative.is_finite() && r.log_normalized.is_finite());
        assert!(r.relative < 1e-6, "N={n}: {r:?}");
    }
}

#[test]
fn factorization_routes_agree() {
    for n in [4, 6, 8] {
        for tau in [0.1, 0.2, 0.3] {
            let c = factorization_check(n, tau).unwrap();
            assert!(c.discrepancy < 1e-4, "N={n} tau={tau}: {c:?}");
            // planar f'' = 2, up to finite-N corrections
            assert!((c.connected * (n * n) as f64 / 2.0 - 1.0).abs() < 0.05, "N={n} tau={tau}: {c:?}");
        }
    }
}
