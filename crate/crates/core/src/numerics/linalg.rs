//! Dense complex LU, log-polar determinants and Gram determinants of
//! discrete positive measures.

use std::f64::consts::{PI, TAU};
use std::ops::{Div, Mul};

use num_complex::Complex64;

use crate::{Error, Result};

/// Reduces an angle to `(-pi, pi]`.
pub fn reduce_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    if r > PI { r - TAU } else { r }
}

/// A complex number stored as `(ln|z|, arg z)`.
///
/// `log_magnitude = -inf` encodes an exact zero (phase is then 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPolarAmplitude {
    pub log_magnitude: f64,
    pub phase: f64,
}

impl LogPolarAmplitude {
    pub const ONE: Self = Self { log_magnitude: 0.0, phase: 0.0 };
    pub const ZERO: Self = Self { log_magnitude: f64::NEG_INFINITY, phase: 0.0 };

    pub fn new(log_magnitude: f64, phase: f64) -> Self {
        if log_magnitude == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        Self { log_magnitude, phase: reduce_phase(phase) }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z == Complex64::new(0.0, 0.0) {
            return Self::ZERO;
        }
        Self::new(z.norm().ln(), z.arg())
    }

    pub fn to_complex(self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.log_magnitude.exp(), self.phase)
    }

    pub fn is_zero(self) -> bool {
        self.log_magnitude == f64::NEG_INFINITY
    }

    pub fn conj(self) -> Self {
        Self::new(self.log_magnitude, -self.phase)
    }

    pub fn powi(self, k: i32) -> Self {
        if self.is_zero() {
            return if k == 0 { Self::ONE } else { Self::ZERO };
        }
        Self::new(k as f64 * self.log_magnitude, k as f64 * self.phase)
    }

    /// `self / other`; dividing by zero gives `+inf` magnitude.
    pub fn ratio(self, other: Self) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.log_magnitude - other.log_magnitude, self.phase - other.phase)
    }
}

impl Mul for LogPolarAmplitude {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        Self::new(self.log_magnitude + rhs.log_magnitude, self.phase + rhs.phase)
    }
}

impl Div for LogPolarAmplitude {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self.ratio(rhs)
    }
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidInput("ragged matrix rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.concat() })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }
}

/// `PA = LU` with partial pivoting, stored in place.
#[derive(Clone, Debug)]
pub struct LuDecomposition {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    swaps: usize,
    singular: bool,
}

impl LuDecomposition {
    pub fn new(matrix: &ComplexMatrix) -> Result<Self> {
        if matrix.rows != matrix.cols {
            return Err(Error::NotSquare { rows: matrix.rows, cols: matrix.cols });
        }
        let n = matrix.rows;
        let mut lu = matrix.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if pmax == 0.0 {
                singular = true;
                break;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let m = lu[i * n + k] / pivot;
                lu[i * n + k] = m;
                if m != Complex64::new(0.0, 0.0) {
                    for j in k + 1..n {
                        let u = lu[k * n + j];
                        lu[i * n + j] -= m * u;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm, swaps, singular })
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn pivots(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.n).map(|k| self.lu[k * self.n + k])
    }

    pub fn log_det(&self) -> LogPolarAmplitude {
        if self.singular {
            return LogPolarAmplitude::ZERO;
        }
        let (mut lm, mut ph) = (0.0, PI * (self.swaps % 2) as f64);
        for p in self.pivots() {
            lm += p.norm().ln();
            ph += p.arg();
        }
        LogPolarAmplitude::new(lm, ph)
    }

    /// `min |u_kk| / max |u_kk|`, a cheap inverse-condition proxy.
    pub fn pivot_ratio(&self) -> f64 {
        if self.singular || self.n == 0 {
            return if self.n == 0 { 1.0 } else { 0.0 };
        }
        let (lo, hi) = self
            .pivots()
            .map(|p| p.norm())
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), a| (lo.min(a), hi.max(a)));
        lo / hi
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if b.len() != self.n {
            return Err(Error::InvalidInput(format!("rhs length {} != {}", b.len(), self.n)));
        }
        if self.singular {
            return Err(Error::domain("numerics", "solve with a singular matrix"));
        }
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let d = self.lu[i * n + j] * x[j];
                x[i] -= d;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let d = self.lu[i * n + j] * x[j];
                x[i] -= d;
            }
            x[i] /= self.lu[i * n + i];
        }
        Ok(x)
    }
}

/// Determinant in log-polar form.
pub fn log_det(matrix: &ComplexMatrix) -> Result<LogPolarAmplitude> {
    Ok(LuDecomposition::new(matrix)?.log_det())
}

/// `ln det G` for the Gram matrix `G_ab = <A^a s, A^b s>` of a diagonal
/// operator `A` acting on a seed vector `s`, for `a, b < n`.
///
/// With `s_j = sqrt(w_j) phi(x_j)` and `A = diag(m_j)` this is the Gram
/// determinant of `{m^a phi}` under the discrete measure `w`. The basis is
/// orthogonalised by Arnoldi with full reorthogonalisation, so only the
/// ratios of successive monic norms are ever formed. Plain elimination on
/// the moment matrix loses everything when the measure is sharply peaked.
pub fn gram_log_det(seed: &[Complex64], multiplier: &[Complex64], n: usize) -> Result<f64> {
    if seed.len() != multiplier.len() {
        return Err(Error::InvalidInput("seed and multiplier lengths differ".into()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let s0 = norm(seed);
    if s0 == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    basis.push(seed.iter().map(|z| z / s0).collect());
    let mut log_norm = s0.ln();
    let mut total = 2.0 * log_norm;
    for _ in 1..n {
        let last = basis.last().expect("basis is never empty");
        let mut r: Vec<Complex64> = last.iter().zip(multiplier).map(|(q, m)| q * m).collect();
        for _ in 0..2 {
            for q in &basis {
                let h: Complex64 = q.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= h * qi;
                }
            }
        }
        let h = norm(&r);
        if h == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        basis.push(r.into_iter().map(|z| z / h).collect());
        log_norm += h.ln();
        total += 2.0 * log_norm;
    }
    Ok(total)
}
