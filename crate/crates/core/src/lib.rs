//! Prescribed-performance, hybrid-gain finite-time sliding mode control.
//!
//! The crate covers the erf-based error transformation, the hybrid switching gain with
//! its feasibility and reaching-time calculators, the first- and second-order control
//! laws, a fixed-step closed-loop simulator and the integral performance metrics.
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` aliases below are the
//! usual entry points.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod gain;
pub mod metrics;
pub mod ppf;
pub mod real;
pub mod scalarmath;
pub mod sim;

pub use control::{
    baseline_sliding_variable, first_order_control, second_order_baseline_control, second_order_ppf_control,
    sliding_variable, SecondOrderPlant, SlidingConfig, Switching,
};
pub use error::{Error, Result};
pub use gain::{
    check_feasibility_first_order, check_feasibility_second_order, inner_settle_bound, reach_time_bounds,
    residual_radius, FeasibilityReport, HybridGainSpec, InnerGain, ReachBounds,
};
pub use metrics::{compare, compute_metrics, Comparison, GainPercent, MetricsReport};
pub use ppf::{PerformanceFunction, TransformedState, FEASIBILITY_MARGIN};
pub use real::Real;
pub use scalarmath::{bisect, erf, erf_derivative, erf_inv, hard_sign, smooth_sign, Tolerance};
pub use sim::{
    measure_reaching_time, run_batch, run_first_order, run_second_order, Disturbance, Event, EventKind,
    FirstOrderScenario, Integrator, Order, SecondOrderController, SecondOrderScenario, Signal, SimConfig,
    Trajectory,
};

pub type PerformanceFunction64 = PerformanceFunction<f64>;
pub type PerformanceFunction32 = PerformanceFunction<f32>;
pub type HybridGainSpec64 = HybridGainSpec<f64>;
pub type HybridGainSpec32 = HybridGainSpec<f32>;
pub type InnerGain64 = InnerGain<f64>;
pub type InnerGain32 = InnerGain<f32>;
pub type FeasibilityReport64 = FeasibilityReport<f64>;
pub type ReachBounds64 = ReachBounds<f64>;
pub type SecondOrderPlant64 = SecondOrderPlant<f64>;
pub type SlidingConfig64 = SlidingConfig<f64>;
pub type Switching64 = Switching<f64>;
pub type Disturbance64 = Disturbance<f64>;
pub type SimConfig64 = SimConfig<f64>;
pub type SimConfig32 = SimConfig<f32>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type FirstOrderScenario64 = FirstOrderScenario<f64>;
pub type SecondOrderScenario64 = SecondOrderScenario<f64>;
pub type MetricsReport64 = MetricsReport<f64>;
pub type Comparison64 = Comparison<f64>;
