//! Planar (large N, fixed `tau = t/N` or `gamma = beta/N`) limit.
//!
//! In real time the eigenvalue density of the first phase is the analytic
//! continuation of the thermal one and lives on a complex curve `Gamma`
//! fixed by a reality condition. `Gamma` pinches on a zero of the density at
//! `tau_cr`, which solves `sqrt(1 + 4 tau^2) = ln((1 + sqrt(1 + 4 tau^2))/(2 tau))`.
//!
//! Contours are traced in coordinates where they are graphs:
//!
//! - periodic: `z = exp(rho + i phi)` with `rho = 2 tau sin(phi) cosh(rho)`;
//! - absorbing: `z = cos(u + i v)` with `v = -2 tau sin(u) cosh(v)`.
//!
//! Both equations lose their small root once `2 tau > max x/cosh x`, which is
//! the pinch.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::echo::{Boundary, TimeKind};
use crate::numerics::{find_root_bracketed, half_circle_midpoints};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Continuation sub-steps per output point.
const SUBSTEPS: usize = 4;
const CORRECTOR_TOL: f64 = 1e-11;

/// Grid size for interval quadratures of the thermal densities.
const INTERVAL_NODES: usize = 1024;

fn critical_equation(tau: f64) -> f64 {
    let s = (1.0 + 4.0 * tau * tau).sqrt();
    s - ((1.0 + s) / (2.0 * tau)).ln()
}

/// `tau_cr`, by bisection of the critical equation on `[0.05, 1]`.
pub fn critical_time() -> f64 {
    let (mut lo, mut hi) = (0.05, 1.0);
    // critical_equation(lo) < 0 < critical_equation(hi)
    while hi - lo > 0.0 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if critical_equation(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if critical_equation(lo).abs() <= critical_equation(hi).abs() { lo } else { hi }
}

/// Residual of the critical equation.
pub fn critical_residual(tau: f64) -> f64 {
    critical_equation(tau)
}

/// Upper zero `z_+ = i (1 + sqrt(1 + 4 tau^2)) / (2 tau)` of the periodic density.
pub fn z_plus(tau: f64) -> Complex64 {
    Complex64::new(0.0, (1.0 + (1.0 + 4.0 * tau * tau).sqrt()) / (2.0 * tau))
}

/// Lower zero `z_- = i (1 - sqrt(1 + 4 tau^2)) / (2 tau)`.
pub fn z_minus(tau: f64) -> Complex64 {
    Complex64::new(0.0, (1.0 - (1.0 + 4.0 * tau * tau).sqrt()) / (2.0 * tau))
}

/// Zero `i/(2 tau)` of the absorbing-chain density.
pub fn z_zero_abc(tau: f64) -> Complex64 {
    Complex64::new(0.0, 1.0 / (2.0 * tau))
}

/// The level function whose zero set contains `Gamma`.
pub fn level_function(boundary: Boundary, tau: f64, z: Complex64) -> f64 {
    match boundary {
        Boundary::Pbc => -z.norm().ln() + tau * (z - z.inv()).im,
        Boundary::Abc => {
            let s = (1.0 - z * z).sqrt();
            ((-I * z + s).ln() - 2.0 * tau * s).re
        }
    }
}

/// `tau_cr` as the root of the periodic level function at `z_+(tau)`.
pub fn critical_time_via_contour() -> Result<f64> {
    let g = |tau: f64| level_function(Boundary::Pbc, tau, z_plus(tau));
    find_root_bracketed(g, 0.1, 0.6, 1e-15)
}

/// Critical constants of the planar limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalData {
    pub tau_cr: f64,
    /// `ell` at which `tau_star(ell) = tau_cr`.
    pub ell_star: f64,
    /// Imaginary part of `z_0(tau_cr) = i/(2 tau_cr)`.
    pub z0_imag: f64,
}

impl CriticalData {
    pub fn compute() -> Self {
        let tau_cr = critical_time();
        Self { tau_cr, ell_star: (1.0 + 4.0 * tau_cr * tau_cr).sqrt(), z0_imag: 1.0 / (2.0 * tau_cr) }
    }

    pub fn z_plus(&self, tau: f64) -> Complex64 {
        z_plus(tau)
    }

    pub fn z_zero_abc(&self, tau: f64) -> Complex64 {
        z_zero_abc(tau)
    }

    pub fn tau_star(&self, ell: f64) -> Result<f64> {
        finite_size_critical(ell).map(|f| f.tau_star)
    }

    pub fn gamma_star(&self, ell: f64) -> Result<f64> {
        finite_size_critical(ell).map(|f| f.gamma_star)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DensityFamily {
    /// Real time, periodic chain, first phase.
    PbcPhase1,
    /// Real time, absorbing chain, first phase.
    AbcPhase1,
    /// Thermal periodic chain, `gamma <= 1/2`.
    GwwOneCut,
    /// Thermal periodic chain, `gamma > 1/2`: one arc with a gap at `pi`.
    GwwTwoCut,
    /// Thermal absorbing chain, `gamma <= 1/2`.
    GwwAbcOneCut,
    /// Thermal absorbing chain, `gamma > 1/2`.
    GwwAbcSoftEdge,
    /// Real time, absorbing chain, just past `tau_cr` (endpoints to first order).
    AbcPhase2NearCritical,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarDensity {
    pub family: DensityFamily,
    /// `tau` for real-time families, `gamma` for thermal ones.
    pub parameter: f64,
    /// Arc endpoint of [`DensityFamily::GwwTwoCut`].
    pub theta0: Option<f64>,
    /// Soft edge `A = (gamma - 1)/gamma` of [`DensityFamily::GwwAbcSoftEdge`].
    pub soft_edge: Option<f64>,
    /// Cut endpoints `(A, B)` of [`DensityFamily::AbcPhase2NearCritical`].
    pub endpoints: Option<(Complex64, Complex64)>,
}

impl PlanarDensity {
    pub fn new(family: DensityFamily, parameter: f64) -> Result<Self> {
        use DensityFamily::*;
        let p = parameter;
        let bad = |why: &str| Err(Error::InvalidInput(format!("{family:?} at {p}: {why}")));
        if !(p.is_finite() && p >= 0.0) {
            return bad("parameter must be finite and nonnegative");
        }
        let tau_cr = critical_time();
        let mut d = Self { family, parameter: p, theta0: None, soft_edge: None, endpoints: None };
        match family {
            PbcPhase1 | AbcPhase1 if p >= tau_cr => return bad("first phase needs tau < tau_cr"),
            GwwOneCut | GwwAbcOneCut if p > 0.5 => return bad("one-cut solution needs gamma <= 1/2"),
            GwwTwoCut | GwwAbcSoftEdge if p <= 0.5 => return bad("needs gamma > 1/2"),
            GwwTwoCut => d.theta0 = Some(2.0 * (1.0 / (2.0 * p)).sqrt().asin()),
            GwwAbcSoftEdge => d.soft_edge = Some((p - 1.0) / p),
            AbcPhase2NearCritical => {
                let nc = second_phase_near_critical(Boundary::Abc, p)?;
                d.endpoints = Some((nc.a, nc.b));
            }
            _ => {}
        }
        Ok(d)
    }

    /// Thermal density of the phase that `gamma` falls in.
    pub fn thermal(boundary: Boundary, gamma: f64) -> Result<Self> {
        let family = match (boundary, gamma <= 0.5) {
            (Boundary::Pbc, true) => DensityFamily::GwwOneCut,
            (Boundary::Pbc, false) => DensityFamily::GwwTwoCut,
            (Boundary::Abc, true) => DensityFamily::GwwAbcOneCut,
            (Boundary::Abc, false) => DensityFamily::GwwAbcSoftEdge,
        };
        Self::new(family, gamma)
    }

    /// First-phase real-time density.
    pub fn real_time(boundary: Boundary, tau: f64) -> Result<Self> {
        match boundary {
            Boundary::Pbc => Self::new(DensityFamily::PbcPhase1, tau),
            Boundary::Abc => Self::new(DensityFamily::AbcPhase1, tau),
        }
    }
}

/// Density at `point`: `z` for real-time families, `theta` (periodic) or `x`
/// (absorbing) on the real axis for thermal ones.
pub fn density_value(d: &PlanarDensity, point: Complex64) -> Result<Complex64> {
    use DensityFamily::*;
    let p = d.parameter;
    let outside = || Err(Error::InvalidInput(format!("{point} is outside the support of {:?}", d.family)));
    let real = |lo: f64, hi: f64| point.im == 0.0 && point.re >= lo && point.re <= hi;
    match d.family {
        PbcPhase1 => {
            if point == Complex64::new(0.0, 0.0) {
                return outside();
            }
            Ok((1.0 + I * p * (point + point.inv())) / TAU)
        }
        AbcPhase1 => {
            let s = (1.0 - point * point).sqrt();
            if s.norm() == 0.0 {
                return outside();
            }
            Ok((1.0 + 2.0 * I * p * point) / (PI * s))
        }
        AbcPhase2NearCritical => {
            let (a, b) = d.endpoints.expect("endpoints set by constructor");
            let den = 1.0 - point * point;
            if den.norm() == 0.0 {
                return outside();
            }
            Ok(I * (2.0 * p / PI) * ((a - point) * (point - b) / den).sqrt())
        }
        GwwOneCut => {
            if !real(-PI, PI) {
                return outside();
            }
            Ok(((1.0 + 2.0 * p * point.re.cos()) / TAU).into())
        }
        GwwTwoCut => {
            let th0 = d.theta0.expect("theta0 set by constructor");
            if !real(-th0, th0) {
                return outside();
            }
            let h = point.re / 2.0;
            let r = (1.0 / (2.0 * p) - h.sin().powi(2)).max(0.0);
            Ok((2.0 * p / PI * h.cos() * r.sqrt()).into())
        }
        GwwAbcOneCut => {
            if !(point.im == 0.0 && point.re.abs() < 1.0) {
                return outside();
            }
            let x = point.re;
            Ok(((1.0 + 2.0 * p * x) / (PI * (1.0 - x * x).sqrt())).into())
        }
        GwwAbcSoftEdge => {
            let a = d.soft_edge.expect("soft edge set by constructor");
            if !(point.im == 0.0 && point.re >= a && point.re < 1.0) {
                return outside();
            }
            let x = point.re;
            Ok((2.0 * p / PI * ((x - a) / (1.0 - x)).sqrt()).into())
        }
    }
}

/// Total mass of a thermal density, by a quadrature in a variable that
/// removes its edge singularities.
pub fn interval_normalization(d: &PlanarDensity) -> Result<f64> {
    use DensityFamily::*;
    let m = INTERVAL_NODES;
    let p = d.parameter;
    let mean = |f: &dyn Fn(f64) -> f64, len: f64| half_circle_midpoints(m).map(f).sum::<f64>() * len / m as f64;
    match d.family {
        GwwOneCut => {
            // periodic trapezoid in theta
            let h = TAU / m as f64;
            let mut s = 0.0;
            for j in 0..m {
                s += density_value(d, Complex64::new(-PI + j as f64 * h, 0.0))?.re;
            }
            Ok(s * h)
        }
        GwwTwoCut => {
            // sin(theta/2) = a sin(psi), psi in (-pi/2, pi/2)
            let a = (1.0 / (2.0 * p)).sqrt();
            let f = |s: f64| {
                let psi = s - PI / 2.0;
                let theta = 2.0 * (a * psi.sin()).asin();
                let jac = 2.0 * a * psi.cos() / (theta / 2.0).cos();
                density_value(d, theta.into()).map(|v| v.re * jac).unwrap_or(f64::NAN)
            };
            Ok(mean(&f, PI))
        }
        GwwAbcOneCut => {
            // x = cos(s)
            let f = |s: f64| density_value(d, s.cos().into()).map(|v| v.re * s.sin()).unwrap_or(f64::NAN);
            Ok(mean(&f, PI))
        }
        GwwAbcSoftEdge => {
            // x = c0 + c cos(s), from A to 1
            let a = d.soft_edge.expect("soft edge set by constructor");
            let (c0, c) = ((1.0 + a) / 2.0, (1.0 - a) / 2.0);
            let f = |s: f64| density_value(d, (c0 + c * s.cos()).into()).map(|v| v.re * c * s.sin()).unwrap_or(f64::NAN);
            Ok(mean(&f, PI))
        }
        _ => Err(Error::InvalidInput(format!("{:?} is not supported on a real interval", d.family))),
    }
}

/// Mass of any density with a known support: interval quadrature for the
/// thermal families, a traced contour for the first-phase real-time ones.
pub fn density_normalization(d: &PlanarDensity) -> Result<f64> {
    match d.family {
        DensityFamily::PbcPhase1 | DensityFamily::AbcPhase1 => {
            let boundary = if d.family == DensityFamily::PbcPhase1 { Boundary::Pbc } else { Boundary::Abc };
            match trace_contour(boundary, d.parameter, 256)? {
                TraceOutcome::Traced(c) => contour_normalization(&c, d),
                TraceOutcome::Pinched { .. } => Err(Error::domain("planar", "contour pinched")),
            }
        }
        DensityFamily::AbcPhase2NearCritical => {
            Err(Error::InvalidInput("near-critical two-cut density has no traced support".into()))
        }
        _ => interval_normalization(d),
    }
}

/// A traced support curve.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourPolyline {
    pub tau: f64,
    pub boundary: Boundary,
    pub points: Vec<Complex64>,
    /// `phi` (periodic, uniform on `[0, 2 pi)`) or `u` (absorbing, from `pi`
    /// down to 0) of each point.
    pub angles: Vec<f64>,
    /// `rho = ln|z|` (periodic) or `v = Im w` (absorbing) of each point.
    pub offsets: Vec<f64>,
    pub closed: bool,
    pub level_residuals: Vec<f64>,
}

impl ContourPolyline {
    pub fn max_residual(&self) -> f64 {
        self.level_residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Smallest distance from `z` to the polyline vertices.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.points.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Offset derivative `d rho/d phi` or `d v/d u` at point `k`.
    fn offset_slope(&self, k: usize) -> f64 {
        let (a, o, t) = (self.angles[k], self.offsets[k], self.tau);
        match self.boundary {
            Boundary::Pbc => 2.0 * t * a.cos() * o.cosh() / (1.0 - 2.0 * t * a.sin() * o.sinh()),
            Boundary::Abc => -2.0 * t * a.cos() * o.cosh() / (1.0 + 2.0 * t * a.sin() * o.sinh()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceOutcome {
    Traced(ContourPolyline),
    /// The corrector lost the branch at `angle`: the support has pinched.
    Pinched { tau: f64, boundary: Boundary, angle: f64 },
}

impl TraceOutcome {
    pub fn polyline(self) -> Option<ContourPolyline> {
        match self {
            TraceOutcome::Traced(c) => Some(c),
            TraceOutcome::Pinched { .. } => None,
        }
    }

    pub fn is_pinched(&self) -> bool {
        matches!(self, TraceOutcome::Pinched { .. })
    }
}

/// Newton on `F(o) = -o + s cosh(o)` with `s = 2 tau sin(angle)` for the
/// periodic chain, or on `-o - s cosh(o)` for the absorbing one.
fn correct(sign: f64, s: f64, guess: f64) -> Option<f64> {
    let mut o = guess;
    for _ in 0..60 {
        let f = -o + sign * s * o.cosh();
        let df = -1.0 + sign * s * o.sinh();
        if df.abs() < 1e-300 {
            return None;
        }
        let step = f / df;
        o -= step;
        if !o.is_finite() {
            return None;
        }
        if step.abs() <= CORRECTOR_TOL * 1e-3 || (-o + sign * s * o.cosh()).abs() < 1e-15 {
            // the seed's branch lies below the fold, where F' < 0
            if sign * s * o.sinh() >= 1.0 {
                return None;
            }
            return Some(o);
        }
    }
    None
}

/// Continuation of `Gamma` from the seed `z = +1` (periodic, counterclockwise)
/// or `z = -1` (absorbing, towards `+1`).
pub fn trace_contour(boundary: Boundary, tau: f64, n_points: usize) -> Result<TraceOutcome> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(Error::InvalidInput(format!("tau = {tau} must be finite and nonnegative")));
    }
    if n_points < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 contour points, got {n_points}")));
    }
    let (sign, start, span, closed) = match boundary {
        Boundary::Pbc => (1.0, 0.0, TAU, true),
        Boundary::Abc => (-1.0, PI, -PI, false),
    };
    let intervals = if closed { n_points } else { n_points - 1 };
    let angle_at = |k: usize| start + span * k as f64 / intervals as f64;

    let mut angles = Vec::with_capacity(n_points);
    let mut offsets = Vec::with_capacity(n_points);
    let mut o = 0.0;
    for k in 0..n_points {
        if k > 0 {
            let (a0, a1) = (angle_at(k - 1), angle_at(k));
            for j in 1..=SUBSTEPS {
                let a = a0 + (a1 - a0) * j as f64 / SUBSTEPS as f64;
                match correct(sign, 2.0 * tau * a.sin(), o) {
                    Some(next) => o = next,
                    None => return Ok(TraceOutcome::Pinched { tau, boundary, angle: a }),
                }
            }
        }
        angles.push(angle_at(k));
        offsets.push(o);
    }
    if !closed {
        // u = 0 exactly: the seed z = +1
        *offsets.last_mut().unwrap() = 0.0;
    }
    let points: Vec<Complex64> = angles
        .iter()
        .zip(&offsets)
        .map(|(&a, &o)| match boundary {
            Boundary::Pbc => Complex64::from_polar(o.exp(), a),
            Boundary::Abc => Complex64::new(a, o).cos(),
        })
        .collect();
    let level_residuals = points.iter().map(|&z| level_function(boundary, tau, z)).collect();
    Ok(TraceOutcome::Traced(ContourPolyline { tau, boundary, points, angles, offsets, closed, level_residuals }))
}

fn check_pair(c: &ContourPolyline, d: &PlanarDensity) -> Result<()> {
    let family = match c.boundary {
        Boundary::Pbc => DensityFamily::PbcPhase1,
        Boundary::Abc => DensityFamily::AbcPhase1,
    };
    if d.family != family || d.parameter != c.tau {
        return Err(Error::InvalidInput(format!(
            "{:?} at {} does not live on the {:?} contour at tau = {}",
            d.family, d.parameter, c.boundary, c.tau
        )));
    }
    Ok(())
}

/// `rho(z) dz` per unit of the contour parameter, at point `k`.
fn mass_element(c: &ContourPolyline, d: &PlanarDensity, k: usize) -> Result<Complex64> {
    let slope = c.offset_slope(k);
    Ok(match c.boundary {
        // dz/(iz) = (1 - i rho') d phi
        Boundary::Pbc => density_value(d, c.points[k])? * Complex64::new(1.0, -slope),
        // rho(x) dx = -(1 + 2 i tau cos w) dw/pi, integrated from u = pi to 0
        Boundary::Abc => {
            let w = Complex64::new(c.angles[k], c.offsets[k]);
            (1.0 + 2.0 * I * d.parameter * w.cos()) * Complex64::new(1.0, slope) / PI
        }
    })
}

fn trapezoid_weights(c: &ContourPolyline) -> Vec<f64> {
    let n = c.points.len();
    if c.closed {
        vec![TAU / n as f64; n]
    } else {
        let h = PI / (n - 1) as f64;
        (0..n).map(|k| if k == 0 || k == n - 1 { h / 2.0 } else { h }).collect()
    }
}

/// Integral of the density along the contour (its total mass).
pub fn contour_normalization(c: &ContourPolyline, d: &PlanarDensity) -> Result<f64> {
    check_pair(c, d)?;
    let w = trapezoid_weights(c);
    let mut total = Complex64::new(0.0, 0.0);
    for (k, wk) in w.iter().enumerate() {
        total += mass_element(c, d, k)? * *wk;
    }
    if total.im.abs() >= 1e-8 {
        return Err(Error::domain("planar", format!("mass along the contour is not real: {total}")));
    }
    Ok(total.re)
}

/// Running integral of the density from the first contour point.
pub fn contour_cumulative(c: &ContourPolyline, d: &PlanarDensity) -> Result<Vec<Complex64>> {
    check_pair(c, d)?;
    let n = c.points.len();
    let h = if c.closed { TAU / n as f64 } else { PI / (n - 1) as f64 };
    let e: Vec<Complex64> = (0..n).map(|k| mass_element(c, d, k)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n);
    let mut acc = Complex64::new(0.0, 0.0);
    out.push(acc);
    for k in 1..n {
        acc += (e[k - 1] + e[k]) * (h / 2.0);
        out.push(acc);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResolventCheck {
    pub integral: Complex64,
    pub closed_form: Complex64,
    pub deviation: Complex64,
}

/// Integrates `du/(2 pi u) [1 + i tau (u + 1/u)] (z + u)/(z - u)` around the
/// periodic contour and compares with `-i + 2 tau z` (inside) or
/// `i - 2 tau/z` (outside).
pub fn resolvent_check(tau: f64, z: Complex64, inside: bool) -> Result<ResolventCheck> {
    let c = trace_contour(Boundary::Pbc, tau, 1024)?
        .polyline()
        .ok_or_else(|| Error::domain("planar", format!("contour pinched at tau = {tau}")))?;
    if c.distance_to(z) < 0.05 {
        return Err(Error::InvalidInput(format!("{z} is within 0.05 of the contour")));
    }
    // Gamma is a radial graph, so inside/outside is a comparison of moduli
    let is_inside = if z.norm() == 0.0 {
        true
    } else {
        let phi = z.arg().rem_euclid(TAU);
        let rho = correct(1.0, 2.0 * tau * phi.sin(), 0.0).ok_or_else(|| Error::domain("planar", "no contour radius"))?;
        z.norm().ln() < rho
    };
    if is_inside != inside {
        return Err(Error::InvalidInput(format!("{z} is not {} the contour", if inside { "inside" } else { "outside" })));
    }
    let h = TAU / c.points.len() as f64;
    let mut integral = Complex64::new(0.0, 0.0);
    for (k, &u) in c.points.iter().enumerate() {
        // du/u = (rho' + i) d phi
        let du_over_u = Complex64::new(c.offset_slope(k), 1.0) * h;
        integral += du_over_u / TAU * (1.0 + I * tau * (u + u.inv())) * (z + u) / (z - u);
    }
    let closed_form = if inside { -I + 2.0 * tau * z } else { I - 2.0 * tau / z };
    Ok(ResolventCheck { integral, closed_form, deviation: integral - closed_form })
}

/// Planar free energy and its first derivative.
///
/// Real time (`x = tau < tau_cr`): `tau^2` (periodic), `2 tau^2` (absorbing).
/// Imaginary time (`x = gamma`): `gamma^2` for `gamma <= 1/2`, then
/// `2 gamma - 3/4 - ln(2 gamma)/2`; doubled for the absorbing chain.
pub fn planar_free_energy(boundary: Boundary, kind: TimeKind, x: f64) -> Result<(f64, f64)> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::InvalidInput(format!("argument {x} must be finite and nonnegative")));
    }
    let factor = match boundary {
        Boundary::Pbc => 1.0,
        Boundary::Abc => 2.0,
    };
    let (f, df) = match kind {
        TimeKind::Real => {
            if x >= critical_time() {
                return Err(Error::domain("planar", format!("tau = {x} is past tau_cr; no closed form")));
            }
            (x * x, 2.0 * x)
        }
        TimeKind::Imaginary if x <= 0.5 => (x * x, 2.0 * x),
        TimeKind::Imaginary => (2.0 * x - 0.75 - 0.5 * (2.0 * x).ln(), 2.0 - 0.5 / x),
    };
    Ok((factor * f, factor * df))
}

/// Second and third derivatives of the thermal free energy (periodic chain).
pub fn thermal_higher_derivatives(gamma: f64) -> (f64, f64) {
    if gamma <= 0.5 { (2.0, 0.0) } else { (0.5 / (gamma * gamma), -1.0 / gamma.powi(3)) }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NearCritical {
    /// Cut endpoints, to first order in `tau - tau_cr`.
    pub a: Complex64,
    pub b: Complex64,
    pub f_prime: f64,
    /// Limit of `f''` as `tau -> tau_cr+`.
    pub f_second_limit: f64,
}

/// Second phase close to the transition, `tau_cr <= tau <= 1.5 tau_cr`.
pub fn second_phase_near_critical(boundary: Boundary, tau: f64) -> Result<NearCritical> {
    let tc = critical_time();
    if !(tau >= tc && tau <= 1.5 * tc) {
        return Err(Error::InvalidInput(format!("tau = {tau} outside [tau_cr, 1.5 tau_cr]")));
    }
    let d = 1.0 - tc / tau;
    let centre = Complex64::new(0.0, 1.0 / (2.0 * tau));
    let f_prime_abc = 4.0 * tau - 8.0 * d * d * (1.0 + 4.0 * tc * tc).powf(-1.5);
    let half = match boundary {
        Boundary::Pbc => 0.5,
        Boundary::Abc => 1.0,
    };
    Ok(NearCritical { a: centre - d, b: centre + d, f_prime: half * f_prime_abc, f_second_limit: half * 4.0 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiniteSizeCritical {
    pub tau_star: f64,
    pub gamma_star: f64,
}

/// Critical lines of the finite chain with `L = ell N`.
pub fn finite_size_critical(ell: f64) -> Result<FiniteSizeCritical> {
    if !(ell.is_finite() && ell >= 1.0) {
        return Err(Error::InvalidInput(format!("ell = {ell} must be at least 1")));
    }
    Ok(FiniteSizeCritical { tau_star: (ell * ell - 1.0).sqrt() / 2.0, gamma_star: (ell - 1.0) / 2.0 })
}

/// `ell` at which the finite-size line meets `tau_cr`.
pub fn ell_star() -> f64 {
    let t = critical_time();
    (1.0 + 4.0 * t * t).sqrt()
}
