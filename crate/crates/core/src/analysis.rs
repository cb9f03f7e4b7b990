//! Diagnostics tying the exact engine to the planar limit: finite-size
//! errors, the odd-N speed limit, the Toda identity and the Jacobi-formula
//! cross-check of second derivatives.

use num_complex::Complex64;

use crate::echo::{amplitude, log_amplitude_derivatives, real_time_lu, Boundary, ChainSpec, TimeArgument, TimeKind};
use crate::numerics::{
    bessel_j_row, find_root_bracketed, fit_exponential, golden_section_minimize, minus_i_pow, reduce_phase,
    ComplexMatrix, ExponentialFit, LogPolarAmplitude,
};
use crate::planar::critical_time;
use crate::{Error, Result};

/// `|E|` values below this are clipped before a log fit.
pub const ERROR_FLOOR: f64 = 1e-15;

/// Scan step of the speed-limit search, in units of `N`.
const QSL_STEP: f64 = 0.01;
/// Trailing window of the log envelope used to spot dips, in units of `N`.
const QSL_ENVELOPE: f64 = 0.2;
const QSL_DIP: f64 = -30.0;
const QSL_ZERO_DEPTH: f64 = -25.0;
const QSL_WIDTH: f64 = 1e-10;

fn log_value(spec: &ChainSpec, kind: TimeKind, x: f64) -> Result<f64> {
    let r = amplitude(spec, TimeArgument::scaled(kind, x, spec.n_flipped))?;
    Ok(match kind {
        TimeKind::Real => r.echo_log,
        TimeKind::Imaginary => r.amplitude.log_magnitude,
    })
}

/// `E_N = ln(echo_L / echo_inf)` with `L = ell N`; in imaginary time the
/// thermal amplitudes replace the echoes.
pub fn error_e(n: usize, ell: f64, boundary: Boundary, x: f64, kind: TimeKind) -> Result<f64> {
    let finite = ChainSpec::with_ell(n, ell, boundary)?;
    let infinite = ChainSpec::infinite(n, boundary)?;
    let reference = log_value(&infinite, kind, x)?;
    if reference == f64::NEG_INFINITY {
        return Err(Error::domain("analysis", format!("reference echo vanishes at N = {n}, x = {x}")));
    }
    Ok(log_value(&finite, kind, x)? - reference)
}

/// `R_N = 1 - tau^2 / f_{N,L}(tau)` on the periodic chain.
pub fn error_r(n: usize, ell: f64, tau: f64) -> Result<f64> {
    let tau_cr = critical_time();
    if !(0.05..=tau_cr - 0.02).contains(&tau) {
        return Err(Error::InvalidInput(format!("tau = {tau} outside [0.05, tau_cr - 0.02]")));
    }
    if !(ell > 2.0) {
        return Err(Error::InvalidInput(format!("ell = {ell} must exceed 2")));
    }
    let spec = ChainSpec::with_ell(n, ell, Boundary::Pbc)?;
    let f = amplitude(&spec, TimeArgument::scaled(TimeKind::Real, tau, n))?.free_energy;
    Ok(1.0 - tau * tau / f)
}

/// Fit of `|E_N|` against `L - N` over several `ell`.
pub fn decay_rate_vs_ell(n: usize, boundary: Boundary, tau: f64, ells: &[f64]) -> Result<ExponentialFit> {
    if ells.iter().any(|&l| l < 2.0) {
        return Err(Error::InvalidInput("every ell must be at least 2".into()));
    }
    if tau >= critical_time() {
        return Err(Error::InvalidInput(format!("tau = {tau} is past tau_cr")));
    }
    let mut xs = Vec::with_capacity(ells.len());
    let mut ys = Vec::with_capacity(ells.len());
    for &ell in ells {
        let e = error_e(n, ell, boundary, tau, TimeKind::Real)?;
        xs.push((ell - 1.0) * n as f64);
        ys.push(e.abs().max(ERROR_FLOOR));
    }
    fit_exponential(&xs, &ys)
}

/// First zero of the echo of an odd-N periodic chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QslRecord {
    pub n_flipped: usize,
    pub tau_qsl: f64,
    pub t_zero: f64,
    /// Width of the final bracket around `t_zero`.
    pub refinement_width: f64,
    /// `ln|G|` at `t_zero` minus the smaller of its values at the ends of the
    /// scan interval holding the zero (`-inf` for an exact zero).
    pub depth: f64,
}

/// Earliest zero of the periodic-chain amplitude, scanning `t` up to `2N`.
pub fn qsl_time(n: usize) -> Result<QslRecord> {
    let spec = ChainSpec::infinite(n, Boundary::Pbc)?;
    let step = QSL_STEP * n as f64;
    let window = (QSL_ENVELOPE / QSL_STEP).round() as usize;
    let steps = (2.0 / QSL_STEP).round() as usize;
    let at = |t: f64| amplitude(&spec, TimeArgument::real(t)).map(|r| r.amplitude);

    let mut samples: Vec<(f64, LogPolarAmplitude)> = vec![(0.0, LogPolarAmplitude::ONE)];
    for j in 1..=steps {
        let t = j as f64 * step;
        let g = at(t)?;
        let prev = samples[j - 1].1;
        samples.push((t, g));
        let env = samples[j.saturating_sub(window)..=j]
            .iter()
            .map(|s| s.1.log_magnitude)
            .filter(|l| l.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let flipped = !g.is_zero() && !prev.is_zero() && reduce_phase(g.phase - prev.phase).abs() > std::f64::consts::FRAC_PI_2;
        let dipped = g.is_zero() || g.log_magnitude - env < QSL_DIP;
        if !(flipped || dipped) {
            continue;
        }
        let (lo, hi) = ((j - 1) as f64 * step, t);
        if let Some(rec) = refine_zero(&spec, lo, hi, prev.phase, flipped)? {
            return Ok(rec);
        }
    }
    Err(Error::domain("analysis", format!("no zero in window t <= {} for N = {n}", 2 * n)))
}

fn refine_zero(spec: &ChainSpec, lo: f64, hi: f64, ref_phase: f64, flipped: bool) -> Result<Option<QslRecord>> {
    let n = spec.n_flipped;
    let log_at = |t: f64| amplitude(spec, TimeArgument::real(t)).map(|r| r.amplitude.log_magnitude);
    // local envelope: the smaller of the two bracketing samples
    let env = log_at(lo)?.min(log_at(hi)?);
    // projection onto the phase just before the zero changes sign across it
    let projected = |t: f64| -> f64 {
        match amplitude(spec, TimeArgument::real(t)) {
            Ok(r) if !r.is_zero() => (r.amplitude.log_magnitude - env).exp() * (r.amplitude.phase - ref_phase).cos(),
            _ => 0.0,
        }
    };

    let t_zero = if flipped {
        // the scan bracket already straddles the sign change
        find_root_bracketed(projected, lo, hi, 1e-15)?
    } else {
        let mut failure = None;
        let (t_min, _) = golden_section_minimize(
            |t| {
                log_at(t).unwrap_or_else(|e| {
                    failure = Some(e);
                    f64::NAN
                })
            },
            lo,
            hi,
            QSL_WIDTH,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        // a minimum on the bracket edge is background decay, not a zero
        if t_min - lo < 2.0 * QSL_WIDTH || hi - t_min < 2.0 * QSL_WIDTH {
            return Ok(None);
        }
        find_root_bracketed(projected, t_min - QSL_WIDTH, t_min + QSL_WIDTH, 1e-15).unwrap_or(t_min)
    };
    let depth = log_at(t_zero)? - env;
    if flipped {
        // near large-N zeros the rounding floor can sit above the depth
        // threshold, so a sign change that is stable off the root suffices
        let d = 1e-5 * (hi - lo);
        if !(projected(t_zero - d) > 0.0 && projected(t_zero + d) < 0.0) {
            return Ok(None);
        }
    } else if depth >= QSL_ZERO_DEPTH {
        return Ok(None);
    }
    Ok(Some(QslRecord { n_flipped: n, tau_qsl: t_zero / n as f64, t_zero, refinement_width: 2.0 * QSL_WIDTH, depth }))
}

/// Records for `N = 3, 5, ..., 2 k_max + 1`.
pub fn qsl_sequence(k_max: usize) -> Result<Vec<QslRecord>> {
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be positive".into()));
    }
    (1..=k_max).map(|k| qsl_time(2 * k + 1)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QslSummary {
    pub min: f64,
    /// Sign of last minus first.
    pub trend: f64,
    pub first_gap: f64,
    pub last_gap: f64,
}

impl QslSummary {
    pub fn from_records(records: &[QslRecord]) -> Option<Self> {
        let (first, last) = (records.first()?, records.last()?);
        let tc = critical_time();
        Some(Self {
            min: records.iter().map(|r| r.tau_qsl).fold(f64::INFINITY, f64::min),
            trend: (last.tau_qsl - first.tau_qsl).signum(),
            first_gap: first.tau_qsl - tc,
            last_gap: last.tau_qsl - tc,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TodaResidual {
    /// `|lhs - rhs| / (|lhs| + |rhs|)`.
    pub relative: f64,
    /// `|ln|lhs| - ln|rhs|| / (N + 1)^2`.
    pub log_normalized: f64,
}

/// Residual of `G_{N+1}^2 d^2/dt^2 ln G_{N+1} = -4 G_N G_{N+2}` on the
/// absorbing chain.
pub fn toda_residual(n: usize, t: f64) -> Result<TodaResidual> {
    let spec = |m: usize| ChainSpec::infinite(m, Boundary::Abc);
    let time = TimeArgument::real(t);
    let d2 = log_amplitude_derivatives(&spec(n + 1)?, time, 2)?[1];
    let g = |m: usize| amplitude(&spec(m)?, time).map(|r| r.amplitude);
    let (g0, g1, g2) = (g(n)?, g(n + 1)?, g(n + 2)?);
    // both sides divided by G_{N+1}^2
    let rhs = (g0 * g2 / g1.powi(2)).to_complex() * -4.0;
    let relative = (d2 - rhs).norm() / (d2.norm() + rhs.norm());
    let log_normalized = (d2.norm().ln() - rhs.norm().ln()).abs() / ((n + 1) * (n + 1)) as f64;
    Ok(TodaResidual { relative, log_normalized })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorizationCheck {
    /// `d^2 ln G/dt^2` from finite differences of `ln G`.
    pub direct: Complex64,
    /// Same, from differencing the Jacobi formula `tr(M^-1 dM/dt)`.
    pub jacobi: Complex64,
    /// `d^2 f/d tau^2 = -Re(direct)`.
    pub f_second: f64,
    /// `(1/N^2) d^2 f/d tau^2`, the connected two-point function.
    pub connected: f64,
    pub discrepancy: f64,
}

/// `d/dt ln G = tr(M^-1 M')` for the infinite periodic chain, with
/// `d/dt [(-i)^k J_k(2t)] = (-i)^k (J_{k-1}(2t) - J_{k+1}(2t))`.
fn jacobi_first_moment(n: usize, t: f64) -> Result<Complex64> {
    let spec = ChainSpec::infinite(n, Boundary::Pbc)?;
    let (amp, lu) = real_time_lu(&spec, t)?;
    if amp.is_zero() {
        return Err(Error::domain("analysis", format!("amplitude vanishes at N = {n}, t = {t}")));
    }
    let j = bessel_j_row(n + 1, 2.0 * t)?.values;
    let bessel = |k: i64| if k < 0 { if k % 2 == 0 { j[(-k) as usize] } else { -j[(-k) as usize] } } else { j[k as usize] };
    let dc: Vec<Complex64> = (0..n as i64).map(|k| minus_i_pow(k) * (bessel(k - 1) - bessel(k + 1))).collect();
    let dm = ComplexMatrix::from_fn(n, n, |a, b| dc[a.abs_diff(b)]);
    let mut trace = Complex64::new(0.0, 0.0);
    for col in 0..n {
        let rhs: Vec<Complex64> = (0..n).map(|row| dm.get(row, col)).collect();
        trace += lu.solve(&rhs)?[col];
    }
    Ok(trace)
}

/// Agreement of two routes to `d^2/dt^2 ln G_N` at `t = N tau` on the
/// infinite periodic chain.
pub fn factorization_check(n: usize, tau: f64) -> Result<FactorizationCheck> {
    if !(tau >= 0.0 && tau < critical_time()) {
        return Err(Error::InvalidInput(format!("tau = {tau} outside [0, tau_cr)")));
    }
    let spec = ChainSpec::infinite(n, Boundary::Pbc)?;
    let t = n as f64 * tau;
    let direct = log_amplitude_derivatives(&spec, TimeArgument::real(t), 2)?[1];
    let h = (1e-3 * t).max(1e-4);
    let diff = |h: f64| -> Result<Complex64> {
        Ok((jacobi_first_moment(n, t + h)? - jacobi_first_moment(n, t - h)?) / (2.0 * h))
    };
    let jacobi = (4.0 * diff(h / 2.0)? - diff(h)?) / 3.0;
    let f_second = -direct.re;
    Ok(FactorizationCheck {
        direct,
        jacobi,
        f_second,
        connected: f_second / (n * n) as f64,
        discrepancy: (direct - jacobi).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_vanish_at_origin() {
        for kind in [TimeKind::Real, TimeKind::Imaginary] {
            assert_eq!(error_e(3, 2.0, Boundary::Pbc, 0.0, kind).unwrap(), 0.0);
            assert_eq!(error_e(4, 3.0, Boundary::Abc, 0.0, kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn error_e_needs_integral_l() {
        assert!(error_e(3, 2.5, Boundary::Pbc, 0.1, TimeKind::Real).is_err());
    }

    #[test]
    fn error_r_domain() {
        assert!(error_r(6, 3.0, 0.01).is_err());
        assert!(error_r(6, 3.0, 0.32).is_err());
        assert!(error_r(6, 2.0, 0.2).is_err());
        assert!(error_r(6, 3.0, 0.2).unwrap().is_finite());
    }

    #[test]
    fn single_spin_qsl_is_bessel_zero() {
        let r = qsl_time(1).unwrap();
        assert!((r.t_zero - 2.404825557695773 / 2.0).abs() < 1e-9, "{}", r.t_zero);
        assert!(r.depth < -25.0);
    }

    #[test]
    fn even_chain_has_no_zero() {
        assert!(qsl_time(4).is_err());
    }

    #[test]
    fn summary_of_records() {
        let mk = |tau| QslRecord { n_flipped: 3, tau_qsl: tau, t_zero: 3.0 * tau, refinement_width: 0.0, depth: -40.0 };
        let s = QslSummary::from_records(&[mk(0.6), mk(0.5), mk(0.45)]).unwrap();
        assert_eq!(s.min, 0.45);
        assert_eq!(s.trend, -1.0);
        assert!(s.last_gap < s.first_gap);
        assert!(QslSummary::from_records(&[]).is_none());
    }

    #[test]
    fn jacobi_first_moment_matches_fd() {
        let d = log_amplitude_derivatives(&ChainSpec::infinite(3, Boundary::Pbc).unwrap(), TimeArgument::real(0.7), 1)
            .unwrap()[0];
        assert!((jacobi_first_moment(3, 0.7).unwrap() - d).norm() < 1e-8);
    }

    #[test]
    fn factorization_at_small_tau() {
        let c = factorization_check(4, 0.0).unwrap();
        assert!((c.f_second - 2.0).abs() < 1e-4);
        assert!(c.discrepancy < 1e-4);
    }

    #[test]
    fn constant_error_gives_zero_rate() {
        let f = fit_exponential(&[1.0, 2.0, 3.0], &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(f.rate, 0.0);
    }
}
