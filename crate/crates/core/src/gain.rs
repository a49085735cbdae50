//! Hybrid gain schedule, tuning inequalities and closed-form time bounds.
//!
//! Outside the tube (`w > eps`) the gain is the bounded saturating law
//! `k0 + k1 w^g / (eps0^g + w^g)`; inside it switches to an inner gain that is
//! either mixed-power (`a w^gi + b w^alpha`, vanishing at the origin) or Gaussian
//! (`Lambda sqrt(pi/2) e^{-w^2/2}`). The switch is a strict case split, so the
//! schedule is discontinuous at `w = eps` unless the parameters happen to match.

use crate::error::{Error, Result};
use crate::ppf::PerformanceFunction;
use crate::real::Real;
use crate::scalarmath::{bisect, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerGain<T> {
    MixedPower { a: T, b: T, gamma: T, alpha: T },
    Gaussian { lambda: T },
}

impl<T: Real> InnerGain<T> {
    pub fn mixed_power(a: T, b: T, gamma: T, alpha: T) -> Result<Self> {
        let g = Self::MixedPower { a, b, gamma, alpha };
        g.validate()?;
        Ok(g)
    }

    pub fn gaussian(lambda: T) -> Result<Self> {
        let g = Self::Gaussian { lambda };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::MixedPower { a, b, gamma, alpha } => {
                if !(a > T::zero()) {
                    return Err(Error::param("a", "must be > 0"));
                }
                if !(b > T::zero()) {
                    return Err(Error::param("b", "must be > 0"));
                }
                if !(gamma > T::zero() && gamma < T::one()) {
                    return Err(Error::param("gamma_in", "must lie in (0, 1)"));
                }
                if !(alpha > T::one()) || !alpha.is_finite() {
                    return Err(Error::param("alpha", "must be finite and > 1"));
                }
            }
            Self::Gaussian { lambda } => {
                if !(lambda > T::zero()) || !lambda.is_finite() {
                    return Err(Error::param("Lambda", "must be finite and > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, w: T) -> T {
        match *self {
            Self::MixedPower { a, b, gamma, alpha } => a * w.powf(gamma) + b * w.powf(alpha),
            Self::Gaussian { lambda } => gaussian_peak(lambda) * (-(w * w) * T::lit(0.5)).exp(),
        }
    }

    /// Smallest inner gain on `[0, eps]`.
    ///
    /// Mixed power vanishes at the origin, so only its value at the tube edge is
    /// meaningful for the tube condition; for the Gaussian the edge value is the floor.
    pub fn at_tube_edge(&self, eps: T) -> T {
        self.eval(eps)
    }
}

/// `Lambda * sqrt(pi / 2)`
#[inline]
fn gaussian_peak<T: Real>(lambda: T) -> T {
    lambda * (T::PI() * T::lit(0.5)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridGainSpec<T> {
    pub k0: T,
    pub k1: T,
    pub gamma_out: T,
    pub eps0: T,
    pub eps: T,
    pub inner: InnerGain<T>,
}

impl<T: Real> HybridGainSpec<T> {
    pub fn new(k0: T, k1: T, gamma_out: T, eps0: T, eps: T, inner: InnerGain<T>) -> Result<Self> {
        let spec = Self { k0, k1, gamma_out, eps0, eps, inner };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k0 > T::zero()) || !self.k0.is_finite() {
            return Err(Error::param("k0", "must be finite and > 0"));
        }
        if !(self.k1 > T::zero()) || !self.k1.is_finite() {
            return Err(Error::param("k1", "must be finite and > 0"));
        }
        if !(self.gamma_out > T::zero() && self.gamma_out < T::one()) {
            return Err(Error::param("gamma_out", "must lie in (0, 1)"));
        }
        if !(self.eps0 > T::zero()) || !self.eps0.is_finite() {
            return Err(Error::param("eps0", "must be finite and > 0"));
        }
        if !(self.eps > T::zero() && self.eps <= self.eps0) {
            return Err(Error::param("eps", "must lie in (0, eps0]"));
        }
        self.inner.validate()
    }

    /// Saturating outer branch, used for `w > eps`.
    pub fn outer(&self, w: T) -> T {
        let wg = w.powf(self.gamma_out);
        self.k0 + self.k1 * wg / (self.eps0.powf(self.gamma_out) + wg)
    }

    /// `G_hyb(w)` with `w = |xi|` or `|s|`.
    pub fn eval_gain(&self, w: T) -> T {
        if w > self.eps {
            self.outer(w)
        } else {
            self.inner.eval(w)
        }
    }

    /// Upper bound of the schedule over all `w >= 0`.
    pub fn max_gain(&self) -> T {
        let inner_max = match self.inner {
            InnerGain::MixedPower { .. } => self.inner.eval(self.eps),
            InnerGain::Gaussian { lambda } => gaussian_peak(lambda),
        };
        (self.k0 + self.k1).max(inner_max)
    }

    /// Same spec with every gain magnitude multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        let inner = match self.inner {
            InnerGain::MixedPower { a, b, gamma, alpha } => {
                InnerGain::MixedPower { a: a * factor, b: b * factor, gamma, alpha }
            }
            InnerGain::Gaussian { lambda } => InnerGain::Gaussian { lambda: lambda * factor },
        };
        Self { k0: self.k0 * factor, k1: self.k1 * factor, inner, ..*self }
    }
}

/// Outcome of the tuning inequalities `k0 > d_bar_outer` and `G_in(eps) > d_bar_inner`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport<T> {
    pub outer_ok: bool,
    pub inner_ok: bool,
    pub d_bar_outer: T,
    pub d_bar_inner: T,
    pub eta0: T,
    pub eta_eps: T,
    pub residual_radius: Option<T>,
}

impl<T: Real> FeasibilityReport<T> {
    pub fn passed(&self) -> bool {
        self.outer_ok && self.inner_ok
    }

    fn build(spec: &HybridGainSpec<T>, d_bar_outer: T, d_bar_inner: T) -> Self {
        let eta0 = spec.k0 - d_bar_outer;
        let eta_eps = spec.inner.at_tube_edge(spec.eps) - d_bar_inner;
        Self {
            outer_ok: eta0 > T::zero(),
            inner_ok: eta_eps > T::zero(),
            d_bar_outer,
            d_bar_inner,
            eta0,
            eta_eps,
            residual_radius: residual_radius(&spec.inner, d_bar_inner, spec.eps),
        }
    }
}

/// Radius of the residual set `{|w| <= r}` for inner gain vs. disturbance bound `d_bar`.
///
/// Mixed power: the unique `r` in `(0, eps]` with `a r^g + b r^alpha = d_bar`, or `None`
/// when even `G_in(eps)` falls short. Gaussian: `0` when its tube floor dominates
/// `d_bar`, otherwise `None`.
pub fn residual_radius<T: Real>(inner: &InnerGain<T>, d_bar: T, eps: T) -> Option<T> {
    if d_bar <= T::zero() {
        return Some(T::zero());
    }
    match inner {
        InnerGain::MixedPower { .. } => {
            if inner.eval(eps) < d_bar {
                return None;
            }
            // Run to floating-point resolution: near r = 0 the slope of r^g is unbounded,
            // so an absolute width criterion would stop far from the root.
            let tol = Tolerance { abs_tol: T::min_positive_value(), max_iter: 4000 };
            bisect(|r| inner.eval(r) - d_bar, T::zero(), eps, tol).ok()
        }
        InnerGain::Gaussian { .. } => (inner.eval(eps) > d_bar).then(T::zero),
    }
}

/// First-order tuning check with transformed disturbance bounds evaluated at `xi0` and `eps`.
pub fn check_feasibility_first_order<T: Real>(
    spec: &HybridGainSpec<T>,
    pf: &PerformanceFunction<T>,
    d_max: T,
    xi0: T,
) -> FeasibilityReport<T> {
    let d_bar_outer = pf.scaled_disturbance_bound(xi0, d_max);
    let d_bar_inner = pf.scaled_disturbance_bound(spec.eps, d_max);
    FeasibilityReport::build(spec, d_bar_outer, d_bar_inner)
}

/// Second-order tuning check: the sliding dynamics see the unscaled `d_max`.
pub fn check_feasibility_second_order<T: Real>(spec: &HybridGainSpec<T>, d_max: T) -> FeasibilityReport<T> {
    FeasibilityReport::build(spec, d_max, d_max)
}

/// Outer-region reaching time bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReachBounds<T> {
    /// From `w0` down to `eps0`.
    pub t_a: T,
    /// From `eps0` down to `eps`.
    pub t_b: T,
    pub t_out: T,
}

pub fn reach_time_bounds<T: Real>(spec: &HybridGainSpec<T>, d_bar_outer: T, w0: T) -> Result<ReachBounds<T>> {
    let eta0 = spec.k0 - d_bar_outer;
    if !(eta0 > T::zero()) {
        return Err(Error::InfeasibleGain(format!(
            "eta0 = k0 - d_bar = {} - {} <= 0",
            spec.k0, d_bar_outer
        )));
    }
    let two = T::lit(2.0);
    let t_a = (w0 - spec.eps0).max(T::zero()) / (eta0 + spec.k1 / two);
    let one_minus_g = T::one() - spec.gamma_out;
    let t_b = two * spec.eps0.powf(spec.gamma_out) / (spec.k1 * one_minus_g)
        * (spec.eps0.powf(one_minus_g) - spec.eps.powf(one_minus_g));
    Ok(ReachBounds { t_a, t_b, t_out: t_a + t_b })
}

/// Inner-region settling bound.
pub fn inner_settle_bound<T: Real>(inner: &InnerGain<T>, eps0: T, d_bar_inner: T) -> Result<T> {
    match *inner {
        InnerGain::MixedPower { a, b, gamma, alpha } => {
            Ok((a * (T::one() - gamma)).recip() + (b * (alpha - T::one())).recip())
        }
        InnerGain::Gaussian { lambda } => {
            let margin = gaussian_peak(lambda) - d_bar_inner;
            if !(margin > T::zero()) {
                return Err(Error::InfeasibleGain(format!(
                    "Lambda*sqrt(pi/2) = {} does not exceed d_bar = {}",
                    gaussian_peak(lambda),
                    d_bar_inner
                )));
            }
            Ok(eps0 / margin)
        }
    }
}
