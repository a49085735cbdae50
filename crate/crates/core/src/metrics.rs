//! Integral performance metrics over a recorded trajectory and side-by-side comparison.

use crate::error::{Error, Result};
use crate::ppf::PerformanceFunction;
use crate::real::Real;
use crate::sim::{EventKind, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport<T> {
    /// Control energy, integral of `u^2`.
    pub j_u: T,
    /// Peak normalized error `max |e1| / rho`.
    pub j_peak: T,
    /// Integral of the envelope excess `max(0, |e1| - rho)`.
    pub j_viol: T,
    pub iae: T,
    pub ise: T,
    pub u_max: T,
    /// First tube entry, if any.
    pub reaching_time: Option<T>,
    /// Set when the trajectory stopped before the horizon; metrics cover the prefix only.
    pub truncated: bool,
}

fn trapezoid<T: Real>(times: &[T], mut f: impl FnMut(usize) -> T) -> T {
    let half = T::lit(0.5);
    let mut acc = T::zero();
    let mut prev = f(0);
    for i in 1..times.len() {
        let cur = f(i);
        acc = acc + half * (times[i] - times[i - 1]) * (prev + cur);
        prev = cur;
    }
    acc
}

/// Evaluates every metric on the recorded samples with the composite trapezoid rule.
/// The envelope is re-evaluated at the sample times, so baseline trajectories recorded
/// without one are handled the same way.
pub fn compute_metrics<T: Real>(traj: &Trajectory<T>, pf: &PerformanceFunction<T>) -> Result<MetricsReport<T>> {
    if traj.is_empty() {
        return Err(Error::EmptyInput("trajectory"));
    }
    let times = &traj.times;
    let e1 = &traj.e1;
    let rho: Vec<T> = times.iter().map(|&t| pf.rho(t)).collect::<Result<_>>()?;

    let j_u = trapezoid(times, |i| traj.u[i] * traj.u[i]);
    let j_viol = trapezoid(times, |i| (e1[i].abs() - rho[i]).max(T::zero()));
    let iae = trapezoid(times, |i| e1[i].abs());
    let ise = trapezoid(times, |i| e1[i] * e1[i]);
    let j_peak = e1.iter().zip(&rho).fold(T::zero(), |m, (e, r)| m.max(e.abs() / *r));
    let u_max = traj.u.iter().fold(T::zero(), |m, u| m.max(u.abs()));

    Ok(MetricsReport {
        j_u,
        j_peak,
        j_viol,
        iae,
        ise,
        u_max,
        reaching_time: traj.first_event(EventKind::TubeEntry),
        truncated: !traj.completed,
    })
}

/// Percentage improvement of one metric over the baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainPercent<T> {
    Value(T),
    /// Baseline is zero while the compared value is not, or either run stopped early.
    Undefined,
}

impl<T: Real> GainPercent<T> {
    pub fn of(ppf: T, baseline: T) -> Self {
        if baseline == T::zero() {
            if ppf == T::zero() {
                GainPercent::Value(T::zero())
            } else {
                GainPercent::Undefined
            }
        } else {
            GainPercent::Value(T::lit(100.0) * (baseline - ppf) / baseline)
        }
    }

    pub fn value(self) -> Option<T> {
        match self {
            GainPercent::Value(v) => Some(v),
            GainPercent::Undefined => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison<T> {
    pub ppf: MetricsReport<T>,
    pub baseline: MetricsReport<T>,
    pub j_u_gain: GainPercent<T>,
    pub iae_gain: GainPercent<T>,
    pub ise_gain: GainPercent<T>,
}

impl<T: Real> Comparison<T> {
    /// Constraint verdict for the first report.
    pub fn ppf_verdict(&self) -> &'static str {
        verdict(&self.ppf)
    }

    pub fn baseline_verdict(&self) -> &'static str {
        verdict(&self.baseline)
    }
}

fn verdict<T: Real>(r: &MetricsReport<T>) -> &'static str {
    if r.truncated {
        "Halted"
    } else if r.j_viol == T::zero() {
        "No violation"
    } else {
        "Violation"
    }
}

/// Gains are `Undefined` when either report is truncated, since the integrals then
/// cover different horizons.
pub fn compare<T: Real>(ppf: &MetricsReport<T>, baseline: &MetricsReport<T>) -> Comparison<T> {
    let gain = |p: T, b: T| {
        if ppf.truncated || baseline.truncated {
            GainPercent::Undefined
        } else {
            GainPercent::of(p, b)
        }
    };
    Comparison {
        ppf: *ppf,
        baseline: *baseline,
        j_u_gain: gain(ppf.j_u, baseline.j_u),
        iae_gain: gain(ppf.iae, baseline.iae),
        ise_gain: gain(ppf.ise, baseline.ise),
    }
}
