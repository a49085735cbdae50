//! Prescribed performance envelope `rho(t)` and the erf state transformation
//! `x = rho(t) * erf(xi)`.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::scalarmath::{erf, erf_inv};

/// States with `|x| / rho(t) >= 1 - FEASIBILITY_MARGIN` are treated as outside the envelope.
pub const FEASIBILITY_MARGIN: f64 = 1e-12;

/// Exponentially shrinking envelope `(rho0 - rho_inf) e^{-lambda t} + rho_inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceFunction<T> {
    rho0: T,
    rho_inf: T,
    lambda: T,
}

/// Transformed coordinate together with the scaling `chi = 1 / (rho * erf'(xi))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedState<T> {
    pub xi: T,
    pub chi: T,
}

impl<T: Real> PerformanceFunction<T> {
    pub fn new(rho0: T, rho_inf: T, lambda: T) -> Result<Self> {
        if !(rho_inf > T::zero()) {
            return Err(Error::param("rho_inf", "must be > 0"));
        }
        if !(rho0 > rho_inf) || !rho0.is_finite() {
            return Err(Error::param("rho0", "must be finite and > rho_inf"));
        }
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::param("lambda", "must be finite and > 0"));
        }
        Ok(Self { rho0, rho_inf, lambda })
    }

    pub fn rho0(&self) -> T {
        self.rho0
    }

    pub fn rho_inf(&self) -> T {
        self.rho_inf
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    fn check_time(t: T) -> Result<()> {
        if t >= T::zero() {
            Ok(())
        } else {
            Err(Error::Domain(format!("time must be >= 0, got {t}")))
        }
    }

    #[inline]
    fn envelope(&self, t: T) -> T {
        (self.rho0 - self.rho_inf) * (-self.lambda * t).exp() + self.rho_inf
    }

    /// Envelope radius at `t >= 0`.
    pub fn rho(&self, t: T) -> Result<T> {
        Self::check_time(t)?;
        Ok(self.envelope(t))
    }

    /// Time derivative of the envelope; always negative.
    pub fn rho_dot(&self, t: T) -> Result<T> {
        Self::check_time(t)?;
        Ok(-self.lambda * (self.rho0 - self.rho_inf) * (-self.lambda * t).exp())
    }

    /// `chi(t, xi) = (sqrt(pi)/2) e^{xi^2} / rho(t)`.
    pub fn chi(&self, xi: T, t: T) -> Result<T> {
        Ok(half_sqrt_pi::<T>() * (xi * xi).exp() / self.rho(t)?)
    }

    /// Maps a state inside the envelope to its transformed coordinate.
    pub fn xi_from_state(&self, x: T, t: T) -> Result<TransformedState<T>> {
        let rho = self.rho(t)?;
        let ratio = x / rho;
        if !(ratio.abs() < T::one() - T::lit(FEASIBILITY_MARGIN)) {
            return Err(Error::Infeasible { t: t.as_f64(), x_abs: x.abs().as_f64(), rho: rho.as_f64() });
        }
        let xi = erf_inv(ratio)?;
        let chi = half_sqrt_pi::<T>() * (xi * xi).exp() / rho;
        Ok(TransformedState { xi, chi })
    }

    /// `rho(t) * erf(xi)`; strictly inside the envelope for any finite `xi`.
    pub fn state_from_xi(&self, xi: T, t: T) -> T {
        debug_assert!(t >= T::zero());
        self.envelope(t) * erf(xi)
    }

    /// Worst-case transformed disturbance `(sqrt(pi)/2) e^{xi_bound^2} d_max / rho_inf`
    /// over `|xi| <= xi_bound`.
    pub fn scaled_disturbance_bound(&self, xi_bound: T, d_max: T) -> T {
        half_sqrt_pi::<T>() * (xi_bound * xi_bound).exp() * d_max / self.rho_inf
    }
}

#[inline]
fn half_sqrt_pi<T: Real>() -> T {
    T::PI().sqrt() * T::lit(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pf() -> PerformanceFunction<f64> {
        PerformanceFunction::new(4.0, 0.05, 4.0).unwrap()
    }

    #[test]
    fn construction_invariants() {
        assert!(PerformanceFunction::new(0.05, 0.05, 1.0_f64).is_err());
        assert!(PerformanceFunction::new(1.0, 0.0, 1.0_f64).is_err());
        assert!(PerformanceFunction::new(1.0, 0.1, 0.0_f64).is_err());
        assert!(PerformanceFunction::new(1.0, 0.1, -1.0_f64).is_err());
    }

    #[test]
    fn rho_examples() {
        let pf = pf();
        assert_eq!(pf.rho(0.0).unwrap(), 4.0);
        assert!((pf.rho(1.0).unwrap() - 0.122_347).abs() < 1e-6);
        assert!((pf.rho(20.0).unwrap() - 0.05).abs() < 1e-15);
        assert!(matches!(pf.rho(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn rho_dot_examples() {
        let pf = pf();
        assert!((pf.rho_dot(0.0).unwrap() + 15.8).abs() < 1e-12);
        let late = pf.rho_dot(20.0).unwrap();
        assert!(late < 0.0 && late > -1e-30);
        assert!(pf.rho_dot(-1.0).is_err());
    }

    #[test]
    fn rho_dot_matches_finite_difference() {
        let h = 1e-6;
        for pf in [pf(), PerformanceFunction::new(2.5, 0.35, 1.4).unwrap()] {
            for i in 0..50 {
                let t = i as f64 * 0.1 + h;
                let fd = (pf.rho(t + h).unwrap() - pf.rho(t - h).unwrap()) / (2.0 * h);
                let exact = pf.rho_dot(t).unwrap();
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3), "t = {t}");
            }
        }
    }

    #[test]
    fn xi_from_state_examples() {
        let pf = pf();
        let ts = pf.xi_from_state(0.0, 0.0).unwrap();
        assert_eq!(ts.xi, 0.0);
        assert!((ts.chi - 0.221_557).abs() < 1e-6);
        let ts = pf.xi_from_state(3.0, 0.0).unwrap();
        assert!((ts.xi - 0.813_419_8).abs() < 1e-7);
        assert!(matches!(pf.xi_from_state(4.2, 0.0), Err(Error::Infeasible { .. })));
        assert!(pf.xi_from_state(4.0, 0.0).is_err());
        assert!(pf.xi_from_state(-4.0, 0.0).is_err());
    }

    #[test]
    fn state_from_xi_examples() {
        let pf = pf();
        assert_eq!(pf.state_from_xi(0.0, 3.0), 0.0);
        assert!((pf.state_from_xi(1.0, 0.0) - 3.370_803_2).abs() < 1e-7);
    }

    #[test]
    fn scaled_disturbance_bound_examples() {
        let pf = pf();
        assert_eq!(pf.scaled_disturbance_bound(1.3, 0.0), 0.0);
        assert!((pf.scaled_disturbance_bound(0.2, 0.25) - 4.6120).abs() < 1e-4);
        assert!((pf.scaled_disturbance_bound(0.813_419_8, 0.25) - 8.587).abs() < 1e-3);
    }

    #[test]
    fn envelope_strictly_decreasing_on_grid() {
        for &lambda in &[0.2, 1.0, 1.4, 2.0] {
            let pf = PerformanceFunction::new(2.5, 0.35, lambda).unwrap();
            let mut prev = pf.rho(0.0).unwrap();
            for i in 1..=1000 {
                let t = i as f64 * 0.01;
                let r = pf.rho(t).unwrap();
                assert!(r < prev && r > pf.rho_inf());
                assert!(pf.rho_dot(t).unwrap() < 0.0);
                prev = r;
            }
        }
        let pf = pf();
        for i in 0..=1000 {
            assert!(pf.rho_dot(i as f64 * 0.01).unwrap() < 0.0);
        }
    }

    #[test]
    fn single_precision_transform() {
        let pf = PerformanceFunction::new(4.0_f32, 0.05, 4.0).unwrap();
        let ts = pf.xi_from_state(3.0, 0.0).unwrap();
        assert!((ts.xi - 0.813_42).abs() < 1e-5);
        assert!((pf.state_from_xi(ts.xi, 0.0) - 3.0).abs() < 1e-5);
    }

    prop_compose! {
        fn envelope()(rho_inf in 0.01_f64..1.0, span in 0.1_f64..5.0, lambda in 0.05_f64..5.0)
            -> PerformanceFunction<f64> {
            PerformanceFunction::new(rho_inf + span, rho_inf, lambda).unwrap()
        }
    }

    proptest! {
        #[test]
        fn transform_roundtrip(pf in envelope(), t in 0.0_f64..10.0, frac in -0.99_f64..0.99) {
            let x = frac * pf.rho(t).unwrap();
            let ts = pf.xi_from_state(x, t).unwrap();
            prop_assert!(ts.chi > 0.0);
            prop_assert!((pf.state_from_xi(ts.xi, t) - x).abs() <= 1e-9);
        }

        #[test]
        fn inverse_roundtrip_from_xi(pf in envelope(), t in 0.0_f64..10.0, xi in -2.5_f64..2.5) {
            let x = pf.state_from_xi(xi, t);
            let back = pf.xi_from_state(x, t).unwrap();
            prop_assert!((back.xi - xi).abs() <= 1e-9 * (1.0 + (xi * xi).exp()));
        }

        #[test]
        fn finite_xi_stays_inside(pf in envelope(), xis in proptest::collection::vec(-5.0_f64..5.0, 1..50)) {
            for (i, xi) in xis.iter().enumerate() {
                let t = i as f64 * 0.2;
                prop_assert!(pf.state_from_xi(*xi, t).abs() < pf.rho(t).unwrap());
            }
        }

        #[test]
        fn scaled_bound_monotone(pf in envelope(), eps in 0.0_f64..1.0, extra in 0.0_f64..2.0, d in 0.0_f64..1.0, dd in 0.0_f64..1.0) {
            let xi0 = eps + extra;
            prop_assert!(pf.scaled_disturbance_bound(xi0, d) >= pf.scaled_disturbance_bound(eps, d));
            prop_assert!(pf.scaled_disturbance_bound(eps, d + dd) >= pf.scaled_disturbance_bound(eps, d));
        }
    }
}
