//! Special functions, log-polar determinants, root finding, coefficient
//! extraction and least-squares fits shared by the other modules.

mod bessel;
mod linalg;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

pub use bessel::{bessel_j_row, modified_bessel_i_row, BesselRow};
pub use linalg::{gram_log_det, log_det, reduce_phase, ComplexMatrix, LogPolarAmplitude, LuDecomposition};

use crate::{Error, Result};

/// Default absolute tolerance of [`find_root_bracketed`].
pub const ROOT_TOL: f64 = 1e-12;

/// The symbol `exp(-w cos(theta))` of the matrix models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    /// `w = i y`: real-time evolution (`y = 2t` periodic, `4t` absorbing).
    Oscillatory(f64),
    /// `w = -x`: imaginary time (`x = 2 beta` periodic, `4 beta` absorbing).
    Thermal(f64),
}

impl Weight {
    pub fn at(self, theta: f64) -> Complex64 {
        match self {
            Weight::Oscillatory(y) => Complex64::from_polar(1.0, -y * theta.cos()),
            Weight::Thermal(x) => Complex64::new((x * theta.cos()).exp(), 0.0),
        }
    }

    /// Same weight divided by `exp(log_scale())`, so that it never exceeds 1.
    pub fn at_scaled(self, theta: f64) -> Complex64 {
        match self {
            Weight::Oscillatory(_) => self.at(theta),
            Weight::Thermal(x) => Complex64::new((x * theta.cos() - x.abs()).exp(), 0.0),
        }
    }

    pub fn log_scale(self) -> f64 {
        match self {
            Weight::Oscillatory(_) => 0.0,
            Weight::Thermal(x) => x.abs(),
        }
    }
}

/// Site count of the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sites {
    Finite(usize),
    Infinite,
}

/// `(-i)^k` for integer `k`.
pub fn minus_i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `c_0 ..= c_{n_max}` of the infinite-chain symbol, with
/// `c_k = (1/2pi) int exp(-w cos t) e^{ikt} dt` (even in `k`).
///
/// Thermal rows are not rescaled and overflow for `x` beyond ~700.
pub fn symbol_row(weight: Weight, n_max: usize) -> Result<Vec<Complex64>> {
    match weight {
        Weight::Oscillatory(y) => {
            let row = bessel_j_row(n_max, y)?;
            Ok(row.values.iter().enumerate().map(|(k, &j)| minus_i_pow(k as i64) * j).collect())
        }
        Weight::Thermal(x) => {
            let row = modified_bessel_i_row(n_max, x)?;
            Ok((0..=n_max).map(|k| Complex64::new(row.value(k), 0.0)).collect())
        }
    }
}

/// Fourier coefficient of the symbol on the full circle or on `L` equally
/// spaced nodes `theta_s = 2 pi (s-1) / L`.
pub fn fourier_coefficient(k: i64, weight: Weight, sites: Sites) -> Result<Complex64> {
    match sites {
        Sites::Infinite => Ok(symbol_row(weight, k.unsigned_abs() as usize)?[k.unsigned_abs() as usize]),
        Sites::Finite(l) => {
            if l < 2 {
                return Err(Error::InvalidInput(format!("site count {l} < 2")));
            }
            let sum: Complex64 = (0..l)
                .map(|s| {
                    let th = TAU * s as f64 / l as f64;
                    weight.at(th) * Complex64::from_polar(1.0, k as f64 * th)
                })
                .sum();
            Ok(sum / l as f64)
        }
    }
}

/// Brent's method on a sign-changing bracket; returns the abscissa to
/// within `tol`.
pub fn find_root_bracketed(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa * fb < 0.0) {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let (mut c, mut fc) = (a, fa);
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..500 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Ok(b)
}

/// Golden-section search for a minimum of `f` on `[a, b]`, stopped once the
/// bracket is narrower than `width`. Returns `(x, f(x))`.
pub fn golden_section_minimize(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, width: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > width {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 { (x1, f1) } else { (x2, f2) }
}

/// The `m` points `r e^{2 pi i j / m}`.
pub fn circle_points(m: usize, radius: f64) -> Vec<Complex64> {
    (0..m).map(|j| Complex64::from_polar(radius, TAU * j as f64 / m as f64)).collect()
}

/// Coefficients `a_0..=a_degree` of a polynomial from its values at
/// [`circle_points`]`(m, radius)`, by an inverse DFT.
pub fn polynomial_coefficients_from_circle(
    evaluations: &[Complex64],
    radius: f64,
    degree: usize,
) -> Result<Vec<Complex64>> {
    let m = evaluations.len();
    if m < degree + 1 {
        return Err(Error::InvalidInput(format!("{m} evaluations cannot fix degree {degree}")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius {radius} must be positive")));
    }
    Ok((0..=degree)
        .map(|p| {
            let s: Complex64 = evaluations
                .iter()
                .enumerate()
                .map(|(j, y)| y * Complex64::from_polar(1.0, -TAU * ((j * p) % m) as f64 / m as f64))
                .sum();
            s / (m as f64 * radius.powi(p as i32))
        })
        .collect())
}

/// Least-squares fit of `ln y = intercept - rate * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentialFit {
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<ExponentialFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 paired points".into()));
    }
    if let Some(y) = ys.iter().find(|y| !(**y > 0.0)) {
        return Err(Error::InvalidInput(format!("non-positive sample {y}")));
    }
    let n = xs.len() as f64;
    let ls: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ls.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ls).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ls.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs.iter().zip(&ls).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ExponentialFit { rate: -slope, intercept, r_squared })
}

/// Midpoint nodes `pi (j - 1/2) / m` on `(0, pi)`.
pub(crate) fn half_circle_midpoints(m: usize) -> impl Iterator<Item = f64> {
    (0..m).map(move |j| PI * (j as f64 + 0.5) / m as f64)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
pub(crate) mod quadrature {
    //! Adaptive Gauss-Kronrod (7, 15) panels; test oracle only.

    use num_complex::Complex64;

    const XK: [f64; 8] = [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ];
    const WK: [f64; 8] = [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ];
    const WG: [f64; 4] = [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ];

    fn panel(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut k = fc * WK[7];
        let mut g = fc * WG[3];
        for i in 0..7 {
            let v = f(c - h * XK[i]) + f(c + h * XK[i]);
            k += v * WK[i];
            if i % 2 == 1 {
                g += v * WG[i / 2];
            }
        }
        (k * h, ((k - g) * h).norm())
    }

    pub fn integrate(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
        fn rec(f: &dyn Fn(f64) -> Complex64, a: f64, b: f64, tol: f64, depth: u32) -> Complex64 {
            let (v, err) = panel(f, a, b);
            if err <= tol || depth > 40 {
                return v;
            }
            let m = 0.5 * (a + b);
            rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
        }
        rec(f, a, b, tol, 0)
    }
}
