//! Numerical primitives: error function and its inverse, sign functions and a
//! bracketed bisection root finder.

use crate::error::{Error, Result};
use crate::real::Real;

/// Stopping rule for iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<T> {
    pub abs_tol: T,
    pub max_iter: usize,
}

impl<T: Real> Tolerance<T> {
    pub fn new(abs_tol: T, max_iter: usize) -> Result<Self> {
        if !(abs_tol > T::zero()) {
            return Err(Error::param("abs_tol", "must be > 0"));
        }
        if max_iter == 0 {
            return Err(Error::param("max_iter", "must be >= 1"));
        }
        Ok(Self { abs_tol, max_iter })
    }
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self { abs_tol: T::lit(1e-13), max_iter: 400 }
    }
}

// Below this the positive-term series is used, above it the erfc continued fraction.
const SERIES_CUTOFF: f64 = 2.5;
const MAX_TERMS: usize = 500;

/// Gauss error function.
///
/// For `|x| < 2.5` this sums `erf(x) = 2/sqrt(pi) * exp(-x^2) * sum (2x^2)^n x / (2n+1)!!`,
/// whose terms are all positive. Larger arguments go through `1 - erfc(x)` with the
/// Laplace continued fraction. Odd symmetry is exact: the magnitude is computed on `|x|`.
pub fn erf<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x < T::zero() {
        return -erf(-x);
    }
    if x == T::zero() {
        return x;
    }
    if x < T::lit(SERIES_CUTOFF) {
        erf_series(x)
    } else {
        T::one() - erfc_continued_fraction(x)
    }
}

fn erf_series<T: Real>(x: T) -> T {
    let two_x2 = T::lit(2.0) * x * x;
    let mut term = x;
    let mut sum = x;
    for n in 0..MAX_TERMS {
        term = term * two_x2 / T::from_usize(2 * n + 3).unwrap();
        sum = sum + term;
        if term <= T::epsilon() * sum {
            break;
        }
    }
    T::FRAC_2_SQRT_PI() * (-x * x).exp() * sum
}

/// erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), x > 0.
fn erfc_continued_fraction<T: Real>(x: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let mut f = x;
    let mut c = f;
    let mut d = T::zero();
    for n in 1..MAX_TERMS {
        let a = T::from_usize(n).unwrap() * T::lit(0.5);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        d = d.recip();
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    (-x * x).exp() / (T::PI().sqrt() * f)
}

/// d/dx erf(x)
#[inline]
pub fn erf_derivative<T: Real>(x: T) -> T {
    T::FRAC_2_SQRT_PI() * (-x * x).exp()
}

const ERF_INV_MAX_ITER: usize = 50;

/// Inverse error function on `(-1, 1)`.
///
/// `|y| >= 1` is a domain error, not a saturated value: callers use it to detect a
/// state on or outside the performance envelope.
pub fn erf_inv<T: Real>(y: T) -> Result<T> {
    if !(y.abs() < T::one()) {
        return Err(Error::Domain(format!("erf_inv requires |y| < 1, got {y}")));
    }
    if y == T::zero() {
        return Ok(y);
    }
    if y < T::zero() {
        return erf_inv(-y).map(|v| -v);
    }
    let mut xi = initial_erf_inv(y);
    let mut best = xi;
    let mut best_res = T::infinity();
    for _ in 0..ERF_INV_MAX_ITER {
        let res = erf(xi) - y;
        if res.abs() < best_res {
            best_res = res.abs();
            best = xi;
        }
        if res == T::zero() {
            break;
        }
        let step = res / erf_derivative(xi);
        xi = xi - step;
        if step.abs() <= T::lit(2.0) * T::epsilon() * xi.abs() {
            let res = (erf(xi) - y).abs();
            if res < best_res {
                best = xi;
            }
            break;
        }
    }
    Ok(best)
}

// Giles, "Approximating the erfinv function" (single precision branch).
fn initial_erf_inv<T: Real>(y: T) -> T {
    let yf = y.as_f64();
    let mut w = -((1.0 - yf) * (1.0 + yf)).ln();
    let p = if w < 5.0 {
        w -= 2.5;
        let mut p = 2.810_226_36e-08;
        p = 3.432_739_39e-07 + p * w;
        p = -3.523_387_7e-06 + p * w;
        p = -4.391_506_54e-06 + p * w;
        p = 0.000_218_580_87 + p * w;
        p = -0.001_253_725_03 + p * w;
        p = -0.004_177_681_64 + p * w;
        p = 0.246_640_727 + p * w;
        1.501_409_41 + p * w
    } else {
        w = w.sqrt() - 3.0;
        let mut p = -0.000_200_214_257;
        p = 0.000_100_950_558 + p * w;
        p = 0.001_349_343_22 + p * w;
        p = -0.003_673_428_44 + p * w;
        p = 0.005_739_507_73 + p * w;
        p = -0.007_622_461_3 + p * w;
        p = 0.009_438_870_47 + p * w;
        p = 1.001_674_06 + p * w;
        2.832_976_82 + p * w
    };
    T::lit(p * yf)
}

/// Boundary-layer sign: `s / (|s| + boundary_layer)`.
#[inline]
pub fn smooth_sign<T: Real>(s: T, boundary_layer: T) -> T {
    debug_assert!(boundary_layer > T::zero());
    s / (s.abs() + boundary_layer)
}

/// Discontinuous sign with `sign(0) = 0`.
#[inline]
pub fn hard_sign<T: Real>(s: T) -> T {
    if s > T::zero() {
        T::one()
    } else if s < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// Bisection on `[lo, hi]`.
///
/// Returns once `|f(r)| <= tol.abs_tol`, the bracket is narrower than `tol.abs_tol`,
/// or the bracket cannot be split any further in floating point.
pub fn bisect<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T, tol: Tolerance<T>) -> Result<T> {
    if !(lo < hi) {
        return Err(Error::param("bracket", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Bracket { lo: lo.as_f64(), hi: hi.as_f64() });
    }
    let half = T::lit(0.5);
    let mut mid = lo;
    for _ in 0..tol.max_iter {
        mid = lo + (hi - lo) * half;
        let f_mid = f(mid);
        if f_mid.abs() <= tol.abs_tol || hi - lo <= tol.abs_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence { iterations: tol.max_iter, last_x: mid.as_f64() })
}
