//! Integer-order Bessel functions J_k and I_k by Miller's backward recurrence.

use crate::{Error, Result};

/// Above this size partial sums are rescaled to stay inside f64 range.
const RESCALE_ABOVE: f64 = 1e250;

/// Arguments beyond this are returned with a factored-out `exp(x)`.
const LOG_SCALE_ABOVE: f64 = 200.0;

/// A row of Bessel values of orders `0..=n_max` at one argument.
///
/// The stored numbers are `values[k] = B_k(x) * exp(-log_scale)`.
/// `log_scale` is zero for J rows and for I rows with `x <= 200`.
#[derive(Clone, Debug, PartialEq)]
pub struct BesselRow {
    pub argument: f64,
    pub values: Vec<f64>,
    pub log_scale: f64,
}

impl BesselRow {
    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    /// Unscaled value of order `k`; may overflow for log-scaled rows.
    pub fn value(&self, k: usize) -> f64 {
        self.values[k] * self.log_scale.exp()
    }
}

fn start_order(n_max: usize, ax: f64) -> usize {
    let extra = 16usize.max((2.0 * ax).ceil() as usize);
    let m = n_max + extra;
    m + (m & 1)
}

fn unit_row(n_max: usize, x: f64) -> BesselRow {
    let mut values = vec![0.0; n_max + 1];
    values[0] = 1.0;
    BesselRow { argument: x, values, log_scale: 0.0 }
}

/// Backward sweep of `v[k-1] = (2k/x) v[k] + sign * v[k+1]` from `start`.
fn backward_sweep(start: usize, x: f64, sign: f64) -> Vec<f64> {
    let mut v = vec![0.0; start + 2];
    v[start] = 1.0;
    for k in (1..=start).rev() {
        let next = (2.0 * k as f64 / x) * v[k] + sign * v[k + 1];
        v[k - 1] = next;
        if next.abs() > RESCALE_ABOVE {
            for e in &mut v[k - 1..] {
                *e /= RESCALE_ABOVE;
            }
        }
    }
    v
}

/// `J_0(x) ..= J_{n_max}(x)`.
///
/// Negative orders follow from `J_{-k} = (-1)^k J_k`.
pub fn bessel_j_row(n_max: usize, x: f64) -> Result<BesselRow> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("Bessel argument {x} is not finite")));
    }
    if x == 0.0 {
        return Ok(unit_row(n_max, x));
    }
    let ax = x.abs();
    let start = start_order(n_max, ax);
    let v = backward_sweep(start, ax, -1.0);
    // J_0 + 2 sum J_{2k} = 1
    let norm = v[0] + 2.0 * v[2..].iter().step_by(2).sum::<f64>();
    let values = (0..=n_max)
        .map(|k| {
            let j = v[k] / norm;
            if x < 0.0 && k % 2 == 1 { -j } else { j }
        })
        .collect();
    Ok(BesselRow { argument: x, values, log_scale: 0.0 })
}

/// `I_0(x) ..= I_{n_max}(x)` for `x >= 0`.
///
/// Rows with `x > 200` keep a factor `exp(x)` in `log_scale`.
pub fn modified_bessel_i_row(n_max: usize, x: f64) -> Result<BesselRow> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidInput(format!(
            "modified Bessel argument must be finite and nonnegative, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(unit_row(n_max, x));
    }
    let start = start_order(n_max, x);
    let v = backward_sweep(start, x, 1.0);
    // I_0 + 2 sum I_k = e^x
    let norm = v[0] + 2.0 * v[1..].iter().sum::<f64>();
    let (factor, log_scale) = if x > LOG_SCALE_ABOVE { (1.0, x) } else { (x.exp(), 0.0) };
    let values = v[..=n_max].iter().map(|e| e / norm * factor).collect();
    Ok(BesselRow { argument: x, values, log_scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series of J_k, fine for moderate x.
    fn j_series(k: u32, x: f64) -> f64 {
        let h = x / 2.0;
        let mut term = h.powi(k as i32) / (1..=k).map(f64::from).product::<f64>();
        let mut sum = term;
        for m in 1..200 {
            term *= -h * h / (m as f64 * (m + k) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    }

    #[test]
    fn j_at_zero_is_unit_vector() {
        let row = bessel_j_row(5, 0.0).unwrap();
        assert_eq!(row.values, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn j0_vanishes_at_first_zero() {
        let x = 2.404825557695773;
        let row = bessel_j_row(0, x).unwrap();
        assert!(row.values[0].abs() < 1e-10, "{}", row.values[0]);
        assert!(j_series(0, x).abs() < 1e-10);
    }

    #[test]
    fn j_matches_series() {
        for &x in &[0.1, 1.0, 3.7, 9.0] {
            let row = bessel_j_row(12, x).unwrap();
            for k in 0..=12u32 {
                let s = j_series(k, x);
                let d = (row.values[k as usize] - s).abs();
                assert!(d < 1e-12 * s.abs().max(1e-3), "k={k} x={x} {d}");
            }
        }
    }

    #[test]
    fn j_small_recurrence() {
        let row = bessel_j_row(2, 1.0).unwrap();
        let v = &row.values;
        assert!((v[0] + v[2] - 2.0 * v[1]).abs() < 1e-10);
    }

    #[test]
    fn j_negative_argument_parity() {
        let p = bessel_j_row(6, 2.5).unwrap();
        let m = bessel_j_row(6, -2.5).unwrap();
        for k in 0..=6 {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(m.values[k], s * p.values[k]);
        }
    }

    #[test]
    fn j_rejects_nan() {
        assert!(bessel_j_row(3, f64::NAN).is_err());
        assert!(bessel_j_row(3, f64::INFINITY).is_err());
    }

    #[test]
    fn j_large_argument_against_asymptotics() {
        // J_0(x) ~ sqrt(2/(pi x)) cos(x - pi/4) (1 - 9/(128 x^2)) - ...
        let x = 200.0;
        let row = bessel_j_row(0, x).unwrap();
        let mu = x - std::f64::consts::FRAC_PI_4;
        let p = 1.0 - 9.0 / (128.0 * x * x);
        let q = -1.0 / (8.0 * x);
        let asym = (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * mu.cos() - q * mu.sin());
        assert!((row.values[0] - asym).abs() < 1e-9);
    }

    #[test]
    fn i_at_zero() {
        let row = modified_bessel_i_row(3, 0.0).unwrap();
        assert_eq!(row.values, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn i_recurrence() {
        let row = modified_bessel_i_row(2, 2.0).unwrap();
        let v = &row.values;
        assert!((v[0] - v[2] - 2.0 * v[1] / 2.0).abs() < 1e-10);
    }

    #[test]
    fn i_rejects_negative() {
        assert!(modified_bessel_i_row(2, -1.0).is_err());
        assert!(modified_bessel_i_row(2, f64::NAN).is_err());
    }

    #[test]
    fn i_log_scaled_above_threshold() {
        let lo = modified_bessel_i_row(4, 150.0).unwrap();
        assert_eq!(lo.log_scale, 0.0);
        let hi = modified_bessel_i_row(4, 400.0).unwrap();
        assert_eq!(hi.log_scale, 400.0);
        // I_0(x) e^{-x} ~ 1/sqrt(2 pi x) (1 + 1/(8x) + 9/(128 x^2))
        let x: f64 = 400.0;
        let asym =
            (1.0 + 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x)) / (2.0 * std::f64::consts::PI * x).sqrt();
        assert!((hi.values[0] / asym - 1.0).abs() < 1e-7);
    }
}
