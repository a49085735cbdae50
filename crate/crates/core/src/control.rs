//! Control laws: first-order PPF-aware, second-order PPF-aware sliding mode and the
//! non-PPF hybrid-gain baseline.
//!
//! All laws are stateless functions of the current time and state.

use crate::error::{Error, Result};
use crate::gain::HybridGainSpec;
use crate::ppf::PerformanceFunction;
use crate::real::Real;
use crate::scalarmath::{erf, hard_sign, smooth_sign};

/// Plant `e1' = e2, e2' = -2 zeta omega_n e2 - omega_n^2 e1 + u + d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderPlant<T> {
    pub omega_n: T,
    pub zeta: T,
}

impl<T: Real> SecondOrderPlant<T> {
    pub fn new(omega_n: T, zeta: T) -> Result<Self> {
        if !(omega_n > T::zero()) || !omega_n.is_finite() {
            return Err(Error::param("omega_n", "must be finite and > 0"));
        }
        if !(zeta > T::zero()) || !zeta.is_finite() {
            return Err(Error::param("zeta", "must be finite and > 0"));
        }
        Ok(Self { omega_n, zeta })
    }

    /// Known drift `f(e1, e2)`.
    #[inline]
    pub fn drift(&self, e1: T, e2: T) -> T {
        -T::lit(2.0) * self.zeta * self.omega_n * e2 - self.omega_n * self.omega_n * e1
    }
}

/// Switching function applied to the sliding variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Switching<T> {
    /// `sign(s)` with `sign(0) = 0`.
    Hard,
    /// `s / (|s| + boundary_layer)`.
    Smoothed { boundary_layer: T },
}

impl<T: Real> Switching<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Hard => Ok(()),
            Self::Smoothed { boundary_layer } if boundary_layer > T::zero() => Ok(()),
            Self::Smoothed { .. } => Err(Error::param("boundary_layer", "must be > 0 in smoothed mode")),
        }
    }

    #[inline]
    pub fn apply(&self, s: T) -> T {
        match *self {
            Self::Hard => hard_sign(s),
            Self::Smoothed { boundary_layer } => smooth_sign(s, boundary_layer),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlidingConfig<T> {
    /// Surface slope `c`.
    pub c: T,
    pub switching: Switching<T>,
}

impl<T: Real> SlidingConfig<T> {
    pub fn new(c: T, switching: Switching<T>) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::param("c", "must be finite and > 0"));
        }
        switching.validate()?;
        Ok(Self { c, switching })
    }
}

/// `u = rho' erf(xi) - G_hyb(|xi|) sign(xi) / chi`, giving `xi' = -G_hyb sign(xi) + chi d`.
pub fn first_order_control<T: Real>(
    pf: &PerformanceFunction<T>,
    spec: &HybridGainSpec<T>,
    x: T,
    t: T,
    switching: &Switching<T>,
) -> Result<T> {
    let ts = pf.xi_from_state(x, t)?;
    let feedforward = pf.rho_dot(t)? * erf(ts.xi);
    Ok(feedforward - spec.eval_gain(ts.xi.abs()) * switching.apply(ts.xi) / ts.chi)
}

/// PPF-aware sliding variable `s = e2 + c erf(xi)` together with `xi`.
pub fn sliding_variable<T: Real>(
    pf: &PerformanceFunction<T>,
    cfg: &SlidingConfig<T>,
    e1: T,
    e2: T,
    t: T,
) -> Result<(T, T)> {
    let ts = pf.xi_from_state(e1, t)?;
    // erf(erf_inv(q)) == q analytically; use q directly.
    let psi = e1 / pf.rho(t)?;
    Ok((e2 + cfg.c * psi, ts.xi))
}

/// Second-order PPF-aware law
/// `u = wn^2 rho psi + (2 zeta wn - c/rho) e2 + (c rho'/rho) psi - G_hyb(|s|) sign(s)`
/// with `psi = erf(xi) = e1 / rho`; in closed loop `s' = -G_hyb(|s|) sign(s) + d`.
pub fn second_order_ppf_control<T: Real>(
    pf: &PerformanceFunction<T>,
    plant: &SecondOrderPlant<T>,
    spec: &HybridGainSpec<T>,
    cfg: &SlidingConfig<T>,
    e1: T,
    e2: T,
    t: T,
) -> Result<T> {
    let (s, _xi) = sliding_variable(pf, cfg, e1, e2, t)?;
    let rho = pf.rho(t)?;
    let rho_dot = pf.rho_dot(t)?;
    let psi = e1 / rho;
    let wn = plant.omega_n;
    let two = T::lit(2.0);
    let linearizing = wn * wn * rho * psi
        + (two * plant.zeta * wn - cfg.c / rho) * e2
        + cfg.c * rho_dot / rho * psi;
    Ok(linearizing - spec.eval_gain(s.abs()) * cfg.switching.apply(s))
}

/// Baseline with linear surface `s_b = e2 + c e1`; takes no envelope by construction.
pub fn baseline_sliding_variable<T: Real>(cfg: &SlidingConfig<T>, e1: T, e2: T) -> T {
    e2 + cfg.c * e1
}

/// `u = wn^2 e1 + (2 zeta wn - c) e2 - G_hyb(|s_b|) sign(s_b)`, so `s_b' = -G_hyb sign(s_b) + d`.
pub fn second_order_baseline_control<T: Real>(
    plant: &SecondOrderPlant<T>,
    spec: &HybridGainSpec<T>,
    cfg: &SlidingConfig<T>,
    e1: T,
    e2: T,
) -> T {
    let s = baseline_sliding_variable(cfg, e1, e2);
    let wn = plant.omega_n;
    let linearizing = wn * wn * e1 + (T::lit(2.0) * plant.zeta * wn - cfg.c) * e2;
    linearizing - spec.eval_gain(s.abs()) * cfg.switching.apply(s)
}
