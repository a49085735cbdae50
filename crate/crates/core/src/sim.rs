//! Fixed-step closed-loop simulation.
//!
//! The control and the disturbance are re-evaluated at every integrator stage.
//! A PPF-aware run stops at the first sample (or stage) outside the envelope, since
//! the transformed coordinate does not exist there; a baseline run only records
//! the violation and keeps going.

use rayon::prelude::*;

use crate::control::{
    baseline_sliding_variable, first_order_control, second_order_baseline_control, second_order_ppf_control,
    sliding_variable, SecondOrderPlant, SlidingConfig, Switching,
};
use crate::error::{Error, Result};
use crate::gain::HybridGainSpec;
use crate::ppf::PerformanceFunction;
use crate::real::Real;

/// Upper bound on the number of integration steps in one run.
pub const MAX_STEPS: usize = 100_000_000;

/// Matched sinusoidal disturbance `d_max sin(freq t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disturbance<T> {
    pub d_max: T,
    pub freq: T,
}

impl<T: Real> Disturbance<T> {
    pub fn new(d_max: T, freq: T) -> Result<Self> {
        if !(d_max >= T::zero()) || !d_max.is_finite() {
            return Err(Error::param("d_max", "must be finite and >= 0"));
        }
        if !(freq > T::zero()) || !freq.is_finite() {
            return Err(Error::param("freq", "must be finite and > 0"));
        }
        Ok(Self { d_max, freq })
    }

    #[inline]
    pub fn eval(&self, t: T) -> T {
        self.d_max * (self.freq * t).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub horizon: T,
    pub dt: T,
    pub integrator: Integrator,
    pub record_stride: usize,
    /// Optional symmetric saturation of the applied control.
    pub u_limit: Option<T>,
}

impl<T: Real> SimConfig<T> {
    pub fn new(horizon: T, dt: T, integrator: Integrator, record_stride: usize) -> Result<Self> {
        let cfg = Self { horizon, dt, integrator, record_stride, u_limit: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::param("dt", "must be finite and > 0"));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return Err(Error::param("horizon", "must be finite and >= dt"));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride", "must be >= 1"));
        }
        if (self.horizon / self.dt).as_f64() > MAX_STEPS as f64 {
            return Err(Error::param("dt", format!("horizon/dt exceeds {MAX_STEPS} steps")));
        }
        if let Some(limit) = self.u_limit {
            if !(limit > T::zero()) {
                return Err(Error::param("u_limit", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round().to_usize().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    TubeEntry,
    EnvelopeViolation,
    InfeasibleAbort,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event<T> {
    pub kind: EventKind,
    pub time: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondOrderController {
    Ppf,
    Baseline,
}

/// Sampled closed-loop record.
///
/// `e1` holds `x` for first-order runs. `e2` and `s` are empty for first-order runs,
/// `xi` is empty for baseline runs and `rho` is empty when no envelope was supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub order: Order,
    pub times: Vec<T>,
    pub e1: Vec<T>,
    pub e2: Vec<T>,
    pub xi: Vec<T>,
    pub s: Vec<T>,
    pub u: Vec<T>,
    pub d: Vec<T>,
    pub rho: Vec<T>,
    pub events: Vec<Event<T>>,
    /// False when the run stopped before the horizon (envelope violation or abort).
    pub completed: bool,
    /// Tube half-width used for `TubeEntry` detection.
    pub tube_level: T,
}

impl<T: Real> Trajectory<T> {
    fn new(order: Order, tube_level: T) -> Self {
        Self {
            order,
            times: Vec::new(),
            e1: Vec::new(),
            e2: Vec::new(),
            xi: Vec::new(),
            s: Vec::new(),
            u: Vec::new(),
            d: Vec::new(),
            rho: Vec::new(),
            events: Vec::new(),
            completed: false,
            tube_level,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first_event(&self, kind: EventKind) -> Option<T> {
        self.events.iter().find(|e| e.kind == kind).map(|e| e.time)
    }

    pub fn has_event(&self, kind: EventKind) -> bool {
        self.first_event(kind).is_some()
    }

    pub fn last_time(&self) -> Option<T> {
        self.times.last().copied()
    }

    /// Signal used for tube detection: `xi` for first-order runs, `s` otherwise.
    pub fn tube_signal(&self) -> &[T] {
        match self.order {
            Order::First => &self.xi,
            Order::Second => &self.s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderScenario<T> {
    pub pf: PerformanceFunction<T>,
    pub gain: HybridGainSpec<T>,
    pub disturbance: Disturbance<T>,
    pub switching: Switching<T>,
    pub x0: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderScenario<T> {
    /// Required for the PPF controller; optional (diagnostics only) for the baseline.
    pub pf: Option<PerformanceFunction<T>>,
    pub plant: SecondOrderPlant<T>,
    pub gain: HybridGainSpec<T>,
    pub disturbance: Disturbance<T>,
    pub sliding: SlidingConfig<T>,
    pub e0: (T, T),
    pub controller: SecondOrderController,
}

/// Control value plus the quantities recorded alongside it.
#[derive(Debug, Clone, Copy)]
struct Evaluation<T> {
    u: T,
    xi: Option<T>,
    s: Option<T>,
}

trait ClosedLoop<T: Real> {
    fn evaluate(&self, t: T, y: [T; 2]) -> Result<Evaluation<T>>;
    fn derivative(&self, y: [T; 2], u: T, d: T) -> [T; 2];
    fn disturbance(&self) -> &Disturbance<T>;
    fn envelope(&self) -> Option<&PerformanceFunction<T>>;
    /// True when leaving the envelope ends the run.
    fn enforces_envelope(&self) -> bool;
}

struct FirstOrderLoop<'a, T> {
    sc: &'a FirstOrderScenario<T>,
}

impl<T: Real> ClosedLoop<T> for FirstOrderLoop<'_, T> {
    fn evaluate(&self, t: T, y: [T; 2]) -> Result<Evaluation<T>> {
        let sc = self.sc;
        let xi = sc.pf.xi_from_state(y[0], t)?.xi;
        let u = first_order_control(&sc.pf, &sc.gain, y[0], t, &sc.switching)?;
        Ok(Evaluation { u, xi: Some(xi), s: None })
    }

    fn derivative(&self, _y: [T; 2], u: T, d: T) -> [T; 2] {
        [u + d, T::zero()]
    }

    fn disturbance(&self) -> &Disturbance<T> {
        &self.sc.disturbance
    }

    fn envelope(&self) -> Option<&PerformanceFunction<T>> {
        Some(&self.sc.pf)
    }

    fn enforces_envelope(&self) -> bool {
        true
    }
}

struct SecondOrderLoop<'a, T> {
    sc: &'a SecondOrderScenario<T>,
}

impl<T: Real> ClosedLoop<T> for SecondOrderLoop<'_, T> {
    fn evaluate(&self, t: T, y: [T; 2]) -> Result<Evaluation<T>> {
        let sc = self.sc;
        let [e1, e2] = y;
        match (sc.controller, sc.pf.as_ref()) {
            (SecondOrderController::Ppf, Some(pf)) => {
                let (s, xi) = sliding_variable(pf, &sc.sliding, e1, e2, t)?;
                let u = second_order_ppf_control(pf, &sc.plant, &sc.gain, &sc.sliding, e1, e2, t)?;
                Ok(Evaluation { u, xi: Some(xi), s: Some(s) })
            }
            (SecondOrderController::Ppf, None) => {
                Err(Error::param("pf", "the PPF controller needs a performance function"))
            }
            (SecondOrderController::Baseline, _) => {
                let s = baseline_sliding_variable(&sc.sliding, e1, e2);
                let u = second_order_baseline_control(&sc.plant, &sc.gain, &sc.sliding, e1, e2);
                Ok(Evaluation { u, xi: None, s: Some(s) })
            }
        }
    }

    fn derivative(&self, y: [T; 2], u: T, d: T) -> [T; 2] {
        [y[1], self.sc.plant.drift(y[0], y[1]) + u + d]
    }

    fn disturbance(&self) -> &Disturbance<T> {
        &self.sc.disturbance
    }

    fn envelope(&self) -> Option<&PerformanceFunction<T>> {
        self.sc.pf.as_ref()
    }

    fn enforces_envelope(&self) -> bool {
        self.sc.controller == SecondOrderController::Ppf
    }
}

fn saturate<T: Real>(u: T, limit: Option<T>) -> T {
    match limit {
        Some(l) => u.max(-l).min(l),
        None => u,
    }
}

enum StepOutcome<T> {
    Next([T; 2]),
    /// A stage state left the envelope at the given time.
    LeftEnvelope(T),
}

fn step<T: Real, L: ClosedLoop<T>>(sys: &L, cfg: &SimConfig<T>, t: T, y: [T; 2], u0: T) -> Result<StepOutcome<T>> {
    let dt = cfg.dt;
    let dist = sys.disturbance();
    let add = |y: [T; 2], k: [T; 2], h: T| [y[0] + h * k[0], y[1] + h * k[1]];
    let k1 = sys.derivative(y, u0, dist.eval(t));
    match cfg.integrator {
        Integrator::Euler => Ok(StepOutcome::Next(add(y, k1, dt))),
        Integrator::Rk4 => {
            let half = dt * T::lit(0.5);
            let stage = |ts: T, ys: [T; 2]| -> Result<Option<[T; 2]>> {
                match sys.evaluate(ts, ys) {
                    Ok(ev) => Ok(Some(sys.derivative(ys, saturate(ev.u, cfg.u_limit), dist.eval(ts)))),
                    Err(Error::Infeasible { .. }) if sys.enforces_envelope() => Ok(None),
                    Err(e) => Err(e),
                }
            };
            let Some(k2) = stage(t + half, add(y, k1, half))? else {
                return Ok(StepOutcome::LeftEnvelope(t + half));
            };
            let Some(k3) = stage(t + half, add(y, k2, half))? else {
                return Ok(StepOutcome::LeftEnvelope(t + half));
            };
            let Some(k4) = stage(t + dt, add(y, k3, dt))? else {
                return Ok(StepOutcome::LeftEnvelope(t + dt));
            };
            let sixth = dt / T::lit(6.0);
            let two = T::lit(2.0);
            Ok(StepOutcome::Next([
                y[0] + sixth * (k1[0] + two * k2[0] + two * k3[0] + k4[0]),
                y[1] + sixth * (k1[1] + two * k2[1] + two * k3[1] + k4[1]),
            ]))
        }
    }
}

fn simulate<T: Real, L: ClosedLoop<T>>(
    sys: &L,
    cfg: &SimConfig<T>,
    order: Order,
    y0: [T; 2],
    tube_level: T,
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let mut traj = Trajectory::new(order, tube_level);
    let n = cfg.n_steps();
    let mut y = y0;
    let mut in_tube = false;
    let mut outside_envelope = false;

    for i in 0..=n {
        let t = T::from_usize(i).unwrap() * cfg.dt;
        let ev = match sys.evaluate(t, y) {
            Ok(ev) => ev,
            Err(Error::Infeasible { .. }) if sys.enforces_envelope() => {
                traj.events.push(Event { kind: EventKind::EnvelopeViolation, time: t });
                return Ok(traj);
            }
            Err(e) => return Err(e),
        };
        let u = saturate(ev.u, cfg.u_limit);
        let rho = match sys.envelope() {
            Some(pf) => Some(pf.rho(t)?),
            None => None,
        };
        if let Some(rho) = rho {
            let outside = y[0].abs() >= rho;
            if outside && !outside_envelope {
                traj.events.push(Event { kind: EventKind::EnvelopeViolation, time: t });
            }
            outside_envelope = outside;
        }
        let signal = match order {
            Order::First => ev.xi,
            Order::Second => ev.s,
        };
        if let Some(sig) = signal {
            if !in_tube && sig.abs() <= tube_level {
                in_tube = true;
                traj.events.push(Event { kind: EventKind::TubeEntry, time: t });
            }
        }
        if i % cfg.record_stride == 0 {
            traj.times.push(t);
            traj.e1.push(y[0]);
            if order == Order::Second {
                traj.e2.push(y[1]);
            }
            if let Some(xi) = ev.xi {
                traj.xi.push(xi);
            }
            if let Some(s) = ev.s {
                traj.s.push(s);
            }
            traj.u.push(u);
            traj.d.push(sys.disturbance().eval(t));
            if let Some(rho) = rho {
                traj.rho.push(rho);
            }
        }
        if i == n {
            break;
        }
        match step(sys, cfg, t, y, u)? {
            StepOutcome::Next(next) => {
                if !(next[0].is_finite() && next[1].is_finite()) {
                    return Err(Error::NumericDivergence { last_valid_time: t.as_f64() });
                }
                y = next;
            }
            StepOutcome::LeftEnvelope(at) => {
                traj.events.push(Event { kind: EventKind::EnvelopeViolation, time: at });
                return Ok(traj);
            }
        }
    }
    traj.completed = true;
    Ok(traj)
}

fn infeasible_start<T: Real>(order: Order, tube_level: T) -> Trajectory<T> {
    let mut traj = Trajectory::new(order, tube_level);
    traj.events.push(Event { kind: EventKind::InfeasibleAbort, time: T::zero() });
    traj
}

/// Integrates `x' = u + d` under the first-order PPF-aware law.
///
/// An initial state outside the envelope yields an empty trajectory carrying a single
/// `InfeasibleAbort` event.
pub fn run_first_order<T: Real>(sc: &FirstOrderScenario<T>, cfg: &SimConfig<T>) -> Result<Trajectory<T>> {
    sc.gain.validate()?;
    sc.switching.validate()?;
    if !(sc.x0.abs() < sc.pf.rho0()) {
        return Ok(infeasible_start(Order::First, sc.gain.eps));
    }
    simulate(&FirstOrderLoop { sc }, cfg, Order::First, [sc.x0, T::zero()], sc.gain.eps)
}

/// Integrates the second-order plant under the PPF-aware or the baseline law.
pub fn run_second_order<T: Real>(sc: &SecondOrderScenario<T>, cfg: &SimConfig<T>) -> Result<Trajectory<T>> {
    sc.gain.validate()?;
    sc.sliding.switching.validate()?;
    if sc.controller == SecondOrderController::Ppf {
        let pf = sc.pf.as_ref().ok_or_else(|| Error::param("pf", "the PPF controller needs a performance function"))?;
        if !(sc.e0.0.abs() < pf.rho0()) {
            return Ok(infeasible_start(Order::Second, sc.gain.eps));
        }
    }
    simulate(&SecondOrderLoop { sc }, cfg, Order::Second, [sc.e0.0, sc.e0.1], sc.gain.eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    Xi,
    S,
}

/// Earliest sample time `t*` such that the chosen signal stays within `±level` on
/// every recorded sample of `[t*, t* + dwell]`. A window running past the end of the
/// record is judged on the samples that exist.
pub fn measure_reaching_time<T: Real>(traj: &Trajectory<T>, which: Signal, level: T, dwell: T) -> Option<T> {
    let signal = match which {
        Signal::Xi => &traj.xi,
        Signal::S => &traj.s,
    };
    let mut start: Option<usize> = None;
    for (i, (v, t)) in signal.iter().zip(&traj.times).enumerate() {
        if v.abs() <= level {
            let s = *start.get_or_insert(i);
            if *t - traj.times[s] >= dwell {
                return Some(traj.times[s]);
            }
        } else {
            start = None;
        }
    }
    start.map(|s| traj.times[s])
}

/// Runs independent jobs in parallel; results keep the input order.
pub fn run_batch<I, R, F>(items: &[I], f: F) -> Vec<R>
where
    I: Sync,
    R: Send,
    F: Fn(&I) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}
