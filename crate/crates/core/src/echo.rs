//! Exact Loschmidt amplitudes of the XY chain for finite N.
//!
//! With the quench from `N` flipped spins the amplitude is a unitary
//! (periodic chain) or symplectic (absorbing left edge) matrix integral.
//! Through Andreief's identity it becomes an `N x N` Toeplitz or
//! Toeplitz+Hankel determinant whose symbol is `exp(-w cos theta)`.
//!
//! Sign convention: the Toeplitz symbol coefficients are
//! `c_k = (1/2pi) int exp(-i y cos t) e^{ikt} dt = (-i)^k J_k(y)`, with
//! `y = 2t` (periodic) or `y = 4t` (absorbing). Writing the entries as
//! `i^{b-a} J_{a-b}(-2t)` gives the complex conjugate, i.e. the amplitude
//! at `-t`; the echo is the same either way.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::numerics::{
    circle_points, fourier_coefficient, gram_log_det, half_circle_midpoints, polynomial_coefficients_from_circle, reduce_phase,
    symbol_row, ComplexMatrix, LogPolarAmplitude, LuDecomposition, Weight,
};
pub use crate::numerics::Sites;
use crate::{Error, Result};

/// Echoes below this are exact zeros.
pub const ECHO_ZERO: f64 = 1e-280;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Periodic chain, U(N) ensemble.
    Pbc,
    /// Absorbing left edge, USp(2N) ensemble.
    Abc,
}

impl Boundary {
    /// `2` for periodic, `4` for absorbing: the factor multiplying `t` in
    /// the symbol.
    pub fn symbol_factor(self) -> f64 {
        match self {
            Boundary::Pbc => 2.0,
            Boundary::Abc => 4.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainSpec {
    pub n_flipped: usize,
    pub sites: Sites,
    pub boundary: Boundary,
}

impl ChainSpec {
    pub fn new(n_flipped: usize, sites: Sites, boundary: Boundary) -> Result<Self> {
        if n_flipped == 0 {
            return Err(Error::InvalidSpec("N must be positive".into()));
        }
        if let Sites::Finite(l) = sites {
            if l < n_flipped.max(2) {
                return Err(Error::InvalidSpec(format!("L = {l} needs L >= N = {n_flipped} and L >= 2")));
            }
        }
        Ok(Self { n_flipped, sites, boundary })
    }

    pub fn infinite(n_flipped: usize, boundary: Boundary) -> Result<Self> {
        Self::new(n_flipped, Sites::Infinite, boundary)
    }

    /// Chain with `L = ell * N`; `ell * N` must be an integer.
    pub fn with_ell(n_flipped: usize, ell: f64, boundary: Boundary) -> Result<Self> {
        let l = ell * n_flipped as f64;
        if !(l.is_finite() && (l - l.round()).abs() < 1e-9 && l >= 1.0) {
            return Err(Error::InvalidSpec(format!("ell * N = {l} is not a positive integer")));
        }
        Self::new(n_flipped, Sites::Finite(l.round() as usize), boundary)
    }

    /// `L / N` in lowest terms, `None` for the infinite chain.
    pub fn ell(&self) -> Option<(usize, usize)> {
        match self.sites {
            Sites::Infinite => None,
            Sites::Finite(l) => {
                let g = gcd(l, self.n_flipped);
                Some((l / g, self.n_flipped / g))
            }
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TimeKind {
    Real,
    Imaginary,
}

/// Evolution parameter: `t` in real time, `beta` in imaginary time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeArgument {
    pub kind: TimeKind,
    pub value: f64,
    /// `tau = t/N` or `gamma = beta/N` when the argument was built from it.
    pub scaled: Option<f64>,
}

impl TimeArgument {
    pub fn real(t: f64) -> Self {
        Self { kind: TimeKind::Real, value: t, scaled: None }
    }

    pub fn imaginary(beta: f64) -> Self {
        Self { kind: TimeKind::Imaginary, value: beta, scaled: None }
    }

    /// `value = n * scaled`.
    pub fn scaled(kind: TimeKind, scaled: f64, n: usize) -> Self {
        Self { kind, value: n as f64 * scaled, scaled: Some(scaled) }
    }

    pub fn shifted(self, dv: f64) -> Self {
        Self { kind: self.kind, value: self.value + dv, scaled: None }
    }

    pub fn weight(&self, boundary: Boundary) -> Weight {
        let a = boundary.symbol_factor() * self.value;
        match self.kind {
            TimeKind::Real => Weight::Oscillatory(a),
            TimeKind::Imaginary => Weight::Thermal(a),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudeResult {
    pub amplitude: LogPolarAmplitude,
    /// `ln` of the echo, `2 ln|G|`.
    pub echo_log: f64,
    /// `f_N(tau) = -ln|G|/N^2` in real time (`+inf` at zeros),
    /// `F(gamma) = ln G/N^2` in imaginary time.
    pub free_energy: f64,
    pub spec: ChainSpec,
    pub time: TimeArgument,
}

impl AmplitudeResult {
    pub fn is_zero(&self) -> bool {
        self.amplitude.is_zero()
    }
}

/// Real-time matrix of the chosen ensemble.
pub(crate) fn amplitude_matrix(spec: &ChainSpec, weight: Weight) -> Result<ComplexMatrix> {
    let n = spec.n_flipped;
    Ok(match (spec.boundary, spec.sites) {
        (Boundary::Pbc, Sites::Infinite) => {
            let c = symbol_row(weight, n)?;
            ComplexMatrix::from_fn(n, n, |a, b| c[a.abs_diff(b)])
        }
        (Boundary::Pbc, Sites::Finite(l)) => {
            let c = (0..n as i64).map(|k| fourier_coefficient(k, weight, Sites::Finite(l))).collect::<Result<Vec<_>>>()?;
            ComplexMatrix::from_fn(n, n, |a, b| c[a.abs_diff(b)])
        }
        (Boundary::Abc, Sites::Infinite) => {
            let c = symbol_row(weight, 2 * n + 2)?;
            ComplexMatrix::from_fn(n, n, |a, b| c[a.abs_diff(b)] - c[a + b + 2])
        }
        (Boundary::Abc, Sites::Finite(l)) => {
            let nodes = open_chain_nodes(weight, l);
            ComplexMatrix::from_fn(n, n, |a, b| {
                let (a, b) = ((a + 1) as f64, (b + 1) as f64);
                nodes.iter().map(|&(th, w, f)| w * f * (a * th).sin() * (b * th).sin()).sum()
            })
        }
    })
}

/// Open-chain nodes `theta_s = pi s/(L+1)` with quadrature weight
/// `2/(L+1)` and the symbol value.
fn open_chain_nodes(weight: Weight, l: usize) -> Vec<(f64, f64, Complex64)> {
    let h = PI / (l + 1) as f64;
    (1..=l).map(|s| (s as f64 * h, 2.0 / (l + 1) as f64, weight.at(s as f64 * h))).collect()
}

/// Nodes of the discrete positive measure whose Gram determinant is the
/// imaginary-time amplitude, as `(seed, multiplier)`.
fn thermal_gram_nodes(spec: &ChainSpec, weight: Weight) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = spec.n_flipped;
    let quad = 2 * n + 2 * weight.log_scale().ceil() as usize + 64;
    let circle = |thetas: Vec<f64>, w: f64| {
        thetas
            .iter()
            .map(|&th| (Complex64::from((w * weight.at_scaled(th).re).sqrt()), Complex64::from_polar(1.0, th)))
            .unzip()
    };
    let half = |thetas: Vec<f64>, w: f64| {
        thetas
            .iter()
            .map(|&th| {
                let seed = (w * weight.at_scaled(th).re).sqrt() * th.sin();
                (Complex64::from(seed), Complex64::from(2.0 * th.cos()))
            })
            .unzip()
    };
    match (spec.boundary, spec.sites) {
        (Boundary::Pbc, Sites::Infinite) => {
            circle((0..quad).map(|j| TAU * j as f64 / quad as f64).collect(), 1.0 / quad as f64)
        }
        (Boundary::Pbc, Sites::Finite(l)) => circle((0..l).map(|s| TAU * s as f64 / l as f64).collect(), 1.0 / l as f64),
        (Boundary::Abc, Sites::Infinite) => {
            let m = quad / 2;
            half(half_circle_midpoints(m).collect(), 2.0 / m as f64)
        }
        (Boundary::Abc, Sites::Finite(l)) => {
            half((1..=l).map(|s| PI * s as f64 / (l + 1) as f64).collect(), 2.0 / (l + 1) as f64)
        }
    }
}

/// Real-time amplitude with the LU factors it came from.
pub(crate) fn real_time_lu(spec: &ChainSpec, t: f64) -> Result<(LogPolarAmplitude, LuDecomposition)> {
    let m = amplitude_matrix(spec, TimeArgument::real(t).weight(spec.boundary))?;
    let lu = LuDecomposition::new(&m)?;
    let mut amp = lu.log_det();
    // numerically singular, or below the echo floor
    let n = spec.n_flipped as f64;
    if lu.pivot_ratio() < 8.0 * n * f64::EPSILON || 2.0 * amp.log_magnitude < ECHO_ZERO.ln() {
        amp = LogPolarAmplitude::ZERO;
    }
    Ok((amp, lu))
}

/// Exact amplitude `G_N` of the chain.
pub fn amplitude(spec: &ChainSpec, time: TimeArgument) -> Result<AmplitudeResult> {
    if !time.value.is_finite() {
        return Err(Error::InvalidInput(format!("time {} is not finite", time.value)));
    }
    let n2 = (spec.n_flipped * spec.n_flipped) as f64;
    let amp = if time.value == 0.0 {
        LogPolarAmplitude::ONE
    } else {
        match time.kind {
            TimeKind::Real => real_time_lu(spec, time.value)?.0,
            TimeKind::Imaginary => {
                let weight = time.weight(spec.boundary);
                let (seed, mult) = thermal_gram_nodes(spec, weight);
                let lg = gram_log_det(&seed, &mult, spec.n_flipped)?;
                LogPolarAmplitude::new(lg + spec.n_flipped as f64 * weight.log_scale(), 0.0)
            }
        }
    };
    let echo_log = 2.0 * amp.log_magnitude;
    let free_energy = match time.kind {
        TimeKind::Real => -amp.log_magnitude / n2 + 0.0,
        TimeKind::Imaginary => amp.log_magnitude / n2,
    };
    Ok(AmplitudeResult { amplitude: amp, echo_log, free_energy, spec: *spec, time })
}

/// The eigenvalue integral evaluated by brute-force Riemann sums on
/// `grid` nodes per angle, for `N <= 3`.
pub fn brute_force_amplitude(spec: &ChainSpec, time: TimeArgument, grid: usize) -> Result<LogPolarAmplitude> {
    let n = spec.n_flipped;
    if n > 3 {
        return Err(Error::InvalidInput(format!("brute force is limited to N <= 3, got {n}")));
    }
    if grid < 256 {
        return Err(Error::InvalidInput(format!("grid {grid} < 256")));
    }
    if spec.sites != Sites::Infinite {
        return Err(Error::InvalidInput("brute force integrates the infinite chain".into()));
    }
    let weight = time.weight(spec.boundary);
    let total = match spec.boundary {
        Boundary::Pbc => {
            let f: Vec<Complex64> = (0..grid).map(|j| weight.at(TAU * j as f64 / grid as f64)).collect();
            // |e^{i a} - e^{i b}|^2 depends on a - b only
            let d: Vec<f64> = (0..grid).map(|k| 2.0 - 2.0 * (TAU * k as f64 / grid as f64).cos()).collect();
            let vdm2 = |i: usize, j: usize| d[j - i];
            ordered_sum(n, &f, vdm2) / (grid as f64).powi(n as i32)
        }
        Boundary::Abc => {
            let nodes: Vec<f64> = half_circle_midpoints(grid).collect();
            let x: Vec<f64> = nodes.iter().map(|t| t.cos()).collect();
            let f: Vec<Complex64> = nodes.iter().map(|&t| weight.at(t) * t.sin().powi(2)).collect();
            let vdm2 = |i: usize, j: usize| (x[i] - x[j]).powi(2);
            ordered_sum(n, &f, vdm2) * 2f64.powi((n * n) as i32) / (grid as f64).powi(n as i32)
        }
    };
    Ok(LogPolarAmplitude::from_complex(total))
}

/// `sum_{j1 < ... < jn} prod f(j) prod_{a<b} v(j_a, j_b)` for `n <= 3`.
fn ordered_sum(n: usize, f: &[Complex64], v: impl Fn(usize, usize) -> f64) -> Complex64 {
    let g = f.len();
    let mut total = Complex64::new(0.0, 0.0);
    match n {
        1 => total = f.iter().sum(),
        2 => {
            for i in 0..g {
                for j in i + 1..g {
                    total += f[i] * f[j] * v(i, j);
                }
            }
        }
        _ => {
            for i in 0..g {
                for j in i + 1..g {
                    let fij = f[i] * f[j] * v(i, j);
                    let mut inner = Complex64::new(0.0, 0.0);
                    for k in j + 1..g {
                        inner += f[k] * (v(i, k) * v(j, k));
                    }
                    total += fij * inner;
                }
            }
        }
    }
    total
}

/// One row of a free-energy sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub tau: f64,
    pub t: f64,
    pub amplitude: LogPolarAmplitude,
    pub echo_log: f64,
    /// `+inf` where the echo vanishes.
    pub free_energy: f64,
    pub zero: bool,
}

impl SweepRow {
    pub fn from_result(tau: f64, r: &AmplitudeResult) -> Self {
        Self {
            tau,
            t: r.time.value,
            amplitude: r.amplitude,
            echo_log: r.echo_log,
            free_energy: r.free_energy,
            zero: r.is_zero(),
        }
    }
}

/// `f_N(tau)` on an ascending grid of nonnegative `tau`.
pub fn dynamical_free_energy_sweep(spec: &ChainSpec, taus: &[f64]) -> Result<Vec<SweepRow>> {
    if taus.iter().any(|t| !(*t >= 0.0)) || taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("taus must be nonnegative and ascending".into()));
    }
    taus.iter()
        .map(|&tau| {
            let r = amplitude(spec, TimeArgument::scaled(TimeKind::Real, tau, spec.n_flipped))?;
            Ok(SweepRow::from_result(tau, &r))
        })
        .collect()
}

/// `<det(1 + wU)> * G_N` on the infinite periodic chain.
pub fn impurity_generating(n: usize, t: f64, w: Complex64) -> Result<LogPolarAmplitude> {
    if n == 0 {
        return Err(Error::InvalidSpec("N must be positive".into()));
    }
    let c = symbol_row(Weight::Oscillatory(2.0 * t), n + 1)?;
    // symbol times (1 + w e^{i theta})
    let m = ComplexMatrix::from_fn(n, n, |a, b| {
        let k = b as i64 - a as i64;
        c[k.unsigned_abs() as usize] + w * c[(k + 1).unsigned_abs() as usize]
    });
    Ok(LuDecomposition::new(&m)?.log_det())
}

/// `<chi_{A_p}>`: the coefficient of `w^p` in `<det(1 + wU)>`.
pub fn impurity_ratio(n: usize, t: f64, p: usize) -> Result<Complex64> {
    if p > n {
        return Err(Error::InvalidInput(format!("p = {p} exceeds N = {n}")));
    }
    if p == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let spec = ChainSpec::infinite(n, Boundary::Pbc)?;
    let g = amplitude(&spec, TimeArgument::real(t))?.amplitude;
    if g.is_zero() {
        return Err(Error::domain("echo", format!("amplitude vanishes at N = {n}, t = {t}")));
    }
    let evals = circle_points(n + 1, 1.0)
        .into_iter()
        .map(|w| Ok((impurity_generating(n, t, w)? / g).to_complex()))
        .collect::<Result<Vec<_>>>()?;
    Ok(polynomial_coefficients_from_circle(&evals, 1.0, n)?[p])
}

/// First `order` derivatives of `ln G` with respect to `t` (or `beta`).
///
/// Central differences with `h = max(1e-4, 1e-3 |t|)`, one Richardson step.
/// Refuses to differentiate within `10 h` of a zero of the amplitude.
pub fn log_amplitude_derivatives(spec: &ChainSpec, time: TimeArgument, order: usize) -> Result<Vec<Complex64>> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidInput(format!("derivative order {order} not in 1..=3")));
    }
    let h = (1e-3 * time.value.abs()).max(1e-4);
    let at = |s: f64| amplitude(spec, time.shifted(s)).map(|r| r.amplitude);

    let guard: Vec<LogPolarAmplitude> = (-10..=10).map(|j| at(j as f64 * h)).collect::<Result<_>>()?;
    let near_zero = guard.iter().any(|a| a.is_zero())
        || guard.windows(2).any(|w| reduce_phase(w[1].phase - w[0].phase).abs() > PI / 2.0);
    if near_zero {
        return Err(Error::domain(
            "echo",
            format!("amplitude has a zero within 10h of {} (N = {})", time.value, spec.n_flipped),
        ));
    }

    let g0 = at(0.0)?;
    let delta = |s: f64| -> Result<Complex64> {
        let g = at(s)?;
        Ok(Complex64::new(g.log_magnitude - g0.log_magnitude, reduce_phase(g.phase - g0.phase)))
    };
    let stencil = |h: f64| -> Result<[Complex64; 3]> {
        let (p1, m1, p2, m2) = (delta(h)?, delta(-h)?, delta(2.0 * h)?, delta(-2.0 * h)?);
        Ok([(p1 - m1) / (2.0 * h), (p1 + m1) / (h * h), (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h * h * h)])
    };
    let coarse = stencil(h)?;
    let fine = stencil(h / 2.0)?;
    Ok((0..order).map(|k| (4.0 * fine[k] - coarse[k]) / 3.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::bessel_j_row;

    fn pbc(n: usize) -> ChainSpec {
        ChainSpec::infinite(n, Boundary::Pbc).unwrap()
    }

    #[test]
    fn single_spin_is_j0() {
        for &t in &[0.0, 0.4, 1.3] {
            let r = amplitude(&pbc(1), TimeArgument::real(t)).unwrap();
            let j0 = bessel_j_row(0, 2.0 * t).unwrap().values[0];
            assert!((r.amplitude.to_complex().re - j0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_spins_closed_form() {
        let t = 0.9;
        let j = bessel_j_row(1, 2.0 * t).unwrap().values;
        let g = amplitude(&pbc(2), TimeArgument::real(t)).unwrap().amplitude.to_complex();
        assert!((g - Complex64::new(j[0] * j[0] + j[1] * j[1], 0.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_time_is_exactly_one() {
        let r = amplitude(&pbc(5), TimeArgument::real(0.0)).unwrap();
        assert_eq!(r.amplitude, LogPolarAmplitude::ONE);
        assert_eq!(r.free_energy, 0.0);
    }

    #[test]
    fn finite_chain_needs_enough_sites() {
        assert!(ChainSpec::new(5, Sites::Finite(4), Boundary::Pbc).is_err());
        assert!(ChainSpec::new(0, Sites::Infinite, Boundary::Pbc).is_err());
        assert!(ChainSpec::with_ell(4, 2.5, Boundary::Pbc).is_ok());
        assert!(ChainSpec::with_ell(3, 2.5, Boundary::Pbc).is_err());
    }

    #[test]
    fn ell_is_reduced() {
        let s = ChainSpec::new(4, Sites::Finite(10), Boundary::Abc).unwrap();
        assert_eq!(s.ell(), Some((5, 2)));
        assert_eq!(pbc(3).ell(), None);
    }

    #[test]
    fn finite_chain_at_zero_time_is_one() {
        for n in 1..=6 {
            for l in [n.max(2), n + 1, 2 * n + 3] {
                for b in [Boundary::Pbc, Boundary::Abc] {
                    let spec = ChainSpec::new(n, Sites::Finite(l), b).unwrap();
                    let m = amplitude_matrix(&spec, Weight::Oscillatory(0.0)).unwrap();
                    let d = crate::numerics::log_det(&m).unwrap();
                    assert!(d.log_magnitude.abs() < 1e-12 && d.phase.abs() < 1e-12, "n={n} l={l} {b:?}");
                }
            }
        }
    }

    #[test]
    fn thermal_gram_matches_bessel_matrix() {
        use crate::numerics::modified_bessel_i_row;
        for &(n, beta) in &[(3usize, 0.4), (5, 0.65), (6, 1.1)] {
            for b in [Boundary::Pbc, Boundary::Abc] {
                let x = b.symbol_factor() * beta;
                let i = modified_bessel_i_row(2 * n + 2, x).unwrap();
                let m = ComplexMatrix::from_fn(n, n, |p, q| {
                    let v = match b {
                        Boundary::Pbc => i.value(p.abs_diff(q)),
                        Boundary::Abc => i.value(p.abs_diff(q)) - i.value(p + q + 2),
                    };
                    Complex64::new(v, 0.0)
                });
                let lu = crate::numerics::log_det(&m).unwrap().log_magnitude;
                let spec = ChainSpec::infinite(n, b).unwrap();
                let gram = amplitude(&spec, TimeArgument::imaginary(beta)).unwrap().amplitude.log_magnitude;
                assert!((lu - gram).abs() < 1e-11, "{b:?} n={n}: {lu} vs {gram}");
            }
        }
    }

    #[test]
    fn thermal_finite_chain_matches_moment_matrix() {
        let spec = ChainSpec::new(4, Sites::Finite(9), Boundary::Pbc).unwrap();
        let w = TimeArgument::imaginary(0.7).weight(Boundary::Pbc);
        let lu = crate::numerics::log_det(&amplitude_matrix(&spec, w).unwrap()).unwrap();
        let gram = amplitude(&spec, TimeArgument::imaginary(0.7)).unwrap().amplitude;
        assert!((lu.log_magnitude - gram.log_magnitude).abs() < 1e-12);
        let spec = ChainSpec::new(4, Sites::Finite(9), Boundary::Abc).unwrap();
        let w = TimeArgument::imaginary(0.7).weight(Boundary::Abc);
        let lu = crate::numerics::log_det(&amplitude_matrix(&spec, w).unwrap()).unwrap();
        let gram = amplitude(&spec, TimeArgument::imaginary(0.7)).unwrap().amplitude;
        assert!((lu.log_magnitude - gram.log_magnitude).abs() < 1e-12);
    }

    #[test]
    fn brute_force_single_spin() {
        let t = TimeArgument::real(0.5);
        let bf = brute_force_amplitude(&pbc(1), t, 4096).unwrap().to_complex();
        let ex = amplitude(&pbc(1), t).unwrap().amplitude.to_complex();
        assert!((bf - ex).norm() < 1e-8);
    }

    #[test]
    fn brute_force_zero_time() {
        let bf = brute_force_amplitude(&pbc(2), TimeArgument::real(0.0), 256).unwrap().to_complex();
        assert!((bf - 1.0).norm() < 1e-10);
    }

    #[test]
    fn brute_force_abc_three_spins() {
        let spec = ChainSpec::infinite(3, Boundary::Abc).unwrap();
        let t = TimeArgument::real(0.3);
        let bf = brute_force_amplitude(&spec, t, 512).unwrap().to_complex();
        let ex = amplitude(&spec, t).unwrap().amplitude.to_complex();
        assert!((bf - ex).norm() < 1e-6, "{bf} vs {ex}");
    }

    #[test]
    fn brute_force_guards() {
        assert!(brute_force_amplitude(&pbc(4), TimeArgument::real(0.1), 256).is_err());
        assert!(brute_force_amplitude(&pbc(2), TimeArgument::real(0.1), 128).is_err());
    }

    #[test]
    fn sweep_starts_at_zero_free_energy() {
        let rows = dynamical_free_energy_sweep(&pbc(10), &[0.0, 0.2]).unwrap();
        assert_eq!(rows[0].free_energy, 0.0);
        assert!((rows[1].free_energy - 0.04).abs() < 0.02);
    }

    #[test]
    fn sweep_rejects_descending() {
        assert!(dynamical_free_energy_sweep(&pbc(3), &[0.2, 0.1]).is_err());
    }

    #[test]
    fn impurity_at_w_zero_is_amplitude() {
        let a = impurity_generating(4, 0.8, Complex64::new(0.0, 0.0)).unwrap();
        let g = amplitude(&pbc(4), TimeArgument::real(0.8)).unwrap().amplitude;
        assert!((a.log_magnitude - g.log_magnitude).abs() < 1e-13);
    }

    #[test]
    fn impurity_p_zero_is_one() {
        assert_eq!(impurity_ratio(5, 1.0, 0).unwrap(), Complex64::new(1.0, 0.0));
        assert!(impurity_ratio(3, 1.0, 4).is_err());
    }

    #[test]
    fn top_coefficient_at_zero_time_is_mean_det() {
        // <det U> over Haar U(N) vanishes
        let c = impurity_ratio(2, 1e-12, 2).unwrap();
        assert!(c.norm() < 1e-10);
    }

    #[test]
    fn first_derivative_vanishes_at_origin() {
        let d = log_amplitude_derivatives(&pbc(4), TimeArgument::real(0.0), 1).unwrap();
        assert!(d[0].norm() < 1e-9);
    }

    #[test]
    fn single_spin_second_derivative() {
        let t: f64 = 0.3;
        let x = 2.0 * t;
        let j = bessel_j_row(1, x).unwrap().values;
        let exact = -4.0 * ((j[0] - j[1] / x) * j[0] + j[1] * j[1]) / (j[0] * j[0]);
        let d = log_amplitude_derivatives(&pbc(1), TimeArgument::real(t), 2).unwrap();
        assert!((d[1].re - exact).abs() < 1e-6, "{} vs {exact}", d[1].re);
        assert!(d[1].im.abs() < 1e-6);
    }

    #[test]
    fn derivatives_stable_under_step_halving() {
        // compare the scheme against itself at twice the time resolution
        let spec = pbc(6);
        let d = log_amplitude_derivatives(&spec, TimeArgument::real(0.6), 2).unwrap();
        let h = 0.6e-3 / 2.0;
        let at = |s: f64| amplitude(&spec, TimeArgument::real(0.6 + s)).unwrap().amplitude.log_magnitude;
        let fd = (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h);
        assert!((d[1].re - fd).abs() < 1e-5);
    }

    #[test]
    fn derivative_guard_near_odd_zero() {
        // first zero of J_0(2t)
        let t0 = 2.404825557695773 / 2.0;
        assert!(log_amplitude_derivatives(&pbc(1), TimeArgument::real(t0 + 1e-4), 2).is_err());
    }
}
