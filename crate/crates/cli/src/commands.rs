//! Subcommand implementations. Each returns the process exit status and writes
//! human-readable output to the given streams.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use ftsmc_core::{
    baseline_sliding_variable, check_feasibility_first_order, check_feasibility_second_order, compare as compare_reports,
    compute_metrics, erf_inv, inner_settle_bound, reach_time_bounds, run_first_order, run_second_order, sliding_variable,
    Error, EventKind, FeasibilityReport, SecondOrderController, Trajectory,
};

use crate::output::{self, event_name, num};
use crate::scenario::{ControllerName, Model, Scenario};

/// Stable process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    /// Usage, parse, I/O or configuration-mismatch error.
    Usage = 1,
    /// A feasibility inequality failed, or a PPF run left the envelope.
    Feasibility = 2,
    InfeasibleInitial = 3,
    Divergence = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Options {
    /// Overrides `sim.record_stride` from the scenario.
    pub record_stride: Option<usize>,
}

type Outcome<T> = Result<T, ExitStatus>;

fn load(path: &Path, err: &mut dyn Write) -> Outcome<Scenario> {
    let sc = Scenario::load(path).map_err(|e| {
        let _ = writeln!(err, "error: {}: {e}", path.display());
        ExitStatus::Usage
    })?;
    for note in &sc.notes {
        let _ = writeln!(err, "note: {note}");
    }
    Ok(sc)
}

fn refuse_infeasible(sc: &Scenario, err: &mut dyn Write) -> Outcome<()> {
    if sc.initial_feasible {
        return Ok(());
    }
    let _ = writeln!(
        err,
        "error: infeasible initial condition: |x(0)| = {} is not < rho(0) = {}; the envelope must contain the \
         initial state (|x(0)| < rho(0)). Set allow_envelope_inflation = true in [ppf] to inflate rho0.",
        sc.initial_position().abs(),
        sc.pf.rho0()
    );
    Err(ExitStatus::InfeasibleInitial)
}

/// Simulates a validated scenario, applying the stride override.
pub fn run(sc: &Scenario, opts: Options) -> Result<Trajectory<f64>, Error> {
    let mut cfg = sc.sim;
    if let Some(stride) = opts.record_stride {
        cfg.record_stride = stride;
    }
    match &sc.model {
        Model::FirstOrder(m) => run_first_order(m, &cfg),
        Model::SecondOrder(m) => run_second_order(m, &cfg),
    }
}

fn run_reported(sc: &Scenario, opts: Options, label: &str, err: &mut dyn Write) -> Outcome<Trajectory<f64>> {
    match run(sc, opts) {
        Ok(traj) => Ok(traj),
        Err(e @ Error::NumericDivergence { .. }) => {
            let _ = writeln!(err, "error: {label}{e}");
            Err(ExitStatus::Divergence)
        }
        Err(e) => {
            let _ = writeln!(err, "error: {label}{e}");
            Err(ExitStatus::Usage)
        }
    }
}

fn halted(sc: &Scenario, traj: &Trajectory<f64>) -> bool {
    sc.controller() == ControllerName::Ppf && !traj.completed
}

fn echo_events(traj: &Trajectory<f64>, label: &str, err: &mut dyn Write) {
    for e in &traj.events {
        if e.kind != EventKind::TubeEntry {
            let _ = writeln!(err, "event: {label}{} at t = {}", event_name(e.kind), num(e.time));
        }
    }
}

fn write_file(path: &Path, err: &mut dyn Write, f: impl FnOnce(BufWriter<File>) -> csv::Result<()>) -> Outcome<()> {
    let res = File::create(path).map_err(csv::Error::from).and_then(|file| f(BufWriter::new(file)));
    res.map_err(|e| {
        let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
        ExitStatus::Usage
    })
}

fn write_text(path: &Path, text: &str, err: &mut dyn Write) -> Outcome<()> {
    fs::write(path, text).map_err(|e| {
        let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
        ExitStatus::Usage
    })
}

fn create_dir(dir: &Path, err: &mut dyn Write) -> Outcome<()> {
    fs::create_dir_all(dir).map_err(|e| {
        let _ = writeln!(err, "error: cannot create {}: {e}", dir.display());
        ExitStatus::Usage
    })
}

fn status(r: Outcome<ExitStatus>) -> ExitStatus {
    r.unwrap_or_else(|e| e)
}

/// Runs one scenario and writes `trajectory.csv` and `metrics.txt` into `out_dir`.
pub fn simulate(path: &Path, out_dir: &Path, opts: Options, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    status(simulate_inner(path, out_dir, opts, out, err))
}

fn simulate_inner(path: &Path, out_dir: &Path, opts: Options, out: &mut dyn Write, err: &mut dyn Write) -> Outcome<ExitStatus> {
    let sc = load(path, err)?;
    refuse_infeasible(&sc, err)?;
    let traj = run_reported(&sc, opts, "", err)?;
    echo_events(&traj, "", err);
    let metrics = compute_metrics(&traj, &sc.pf).map_err(|e| {
        let _ = writeln!(err, "error: {e}");
        ExitStatus::Usage
    })?;
    create_dir(out_dir, err)?;
    write_file(&out_dir.join("trajectory.csv"), err, |w| output::write_trajectory(w, &traj))?;
    write_text(&out_dir.join("metrics.txt"), &output::metrics_text(&metrics, &traj), err)?;
    let _ = writeln!(out, "wrote {} samples to {}", traj.len(), out_dir.display());
    let _ = write!(out, "{}", output::metrics_text(&metrics, &traj));
    if halted(&sc, &traj) {
        let _ = writeln!(err, "error: the PPF run left the envelope and was halted; outputs cover the recorded prefix");
        return Ok(ExitStatus::Feasibility);
    }
    Ok(ExitStatus::Success)
}

fn check_compatible(a: &Scenario, b: &Scenario) -> Result<(), String> {
    let (fa, fb) = (&a.file, &b.file);
    if fa.sim.horizon != fb.sim.horizon {
        return Err(format!("sim.horizon differs ({} vs {})", fa.sim.horizon, fb.sim.horizon));
    }
    if fa.sim.dt != fb.sim.dt {
        return Err(format!("sim.dt differs ({} vs {})", fa.sim.dt, fb.sim.dt));
    }
    if fa.plant != fb.plant {
        return Err("[plant] sections differ".into());
    }
    if fa.disturbance != fb.disturbance {
        return Err("[disturbance] sections differ".into());
    }
    Ok(())
}

/// Runs a PPF-aware and a baseline scenario and writes both trajectories plus `comparison.csv`.
pub fn compare(
    ppf_path: &Path,
    baseline_path: &Path,
    out_dir: &Path,
    opts: Options,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> ExitStatus {
    status(compare_inner(ppf_path, baseline_path, out_dir, opts, out, err))
}

fn compare_inner(
    ppf_path: &Path,
    baseline_path: &Path,
    out_dir: &Path,
    opts: Options,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome<ExitStatus> {
    let ppf = load(ppf_path, err)?;
    let base = load(baseline_path, err)?;
    if let Err(msg) = check_compatible(&ppf, &base) {
        let _ = writeln!(err, "error: configuration mismatch: {msg}");
        return Err(ExitStatus::Usage);
    }
    refuse_infeasible(&ppf, err)?;
    refuse_infeasible(&base, err)?;

    let (rp, rb) = std::thread::scope(|s| {
        let hp = s.spawn(|| run(&ppf, opts));
        let hb = s.spawn(|| run(&base, opts));
        (hp.join().expect("simulation thread panicked"), hb.join().expect("simulation thread panicked"))
    });
    let to_outcome = |r: Result<Trajectory<f64>, Error>, label: &str, err: &mut dyn Write| match r {
        Ok(t) => Ok(t),
        Err(e) => {
            let _ = writeln!(err, "error: {label}: {e}");
            Err(if matches!(e, Error::NumericDivergence { .. }) { ExitStatus::Divergence } else { ExitStatus::Usage })
        }
    };
    let tp = to_outcome(rp, "PPF-aware run", err)?;
    let tb = to_outcome(rb, "non-PPF run", err)?;
    echo_events(&tp, "PPF-aware ", err);

    let metric = |traj: &Trajectory<f64>, sc: &Scenario, err: &mut dyn Write| {
        compute_metrics(traj, &sc.pf).map_err(|e| {
            let _ = writeln!(err, "error: {e}");
            ExitStatus::Usage
        })
    };
    let mp = metric(&tp, &ppf, err)?;
    let mb = metric(&tb, &base, err)?;
    let cmp = compare_reports(&mp, &mb);

    create_dir(out_dir, err)?;
    write_file(&out_dir.join("trajectory_ppf.csv"), err, |w| output::write_trajectory(w, &tp))?;
    write_file(&out_dir.join("trajectory_baseline.csv"), err, |w| output::write_trajectory(w, &tb))?;
    write_file(&out_dir.join("comparison.csv"), err, |w| output::write_comparison(w, &cmp))?;
    let _ = write!(out, "{}", output::comparison_text(&cmp));
    if halted(&ppf, &tp) {
        let _ = writeln!(err, "error: the PPF run left the envelope and was halted; its column covers the recorded prefix");
        return Ok(ExitStatus::Feasibility);
    }
    Ok(ExitStatus::Success)
}

/// Quantities printed by `feasibility` and `bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    /// `|xi(0)|` for first-order scenarios, `|s(0)|` otherwise.
    pub w0: f64,
    pub report: FeasibilityReport<f64>,
    pub g_in_eps: f64,
    pub bounds: Result<(f64, f64, f64), String>,
    pub t_in: Result<f64, String>,
}

pub fn analyze(sc: &Scenario) -> Result<Analysis, Error> {
    let gain = *sc.gain();
    let d_max = sc.disturbance().d_max;
    let (w0, report) = match &sc.model {
        Model::FirstOrder(m) => {
            let xi0 = erf_inv(m.x0 / sc.pf.rho0())?.abs();
            (xi0, check_feasibility_first_order(&gain, &sc.pf, d_max, xi0))
        }
        Model::SecondOrder(m) => {
            let (e1, e2) = m.e0;
            let s0 = match m.controller {
                SecondOrderController::Ppf => sliding_variable(&sc.pf, &m.sliding, e1, e2, 0.0)?.0,
                SecondOrderController::Baseline => baseline_sliding_variable(&m.sliding, e1, e2),
            };
            (s0.abs(), check_feasibility_second_order(&gain, d_max))
        }
    };
    let bounds = reach_time_bounds(&gain, report.d_bar_outer, w0).map(|b| (b.t_a, b.t_b, b.t_out)).map_err(|e| e.to_string());
    let t_in = inner_settle_bound(&gain.inner, gain.eps0, report.d_bar_inner).map_err(|e| e.to_string());
    Ok(Analysis { w0, report, g_in_eps: gain.inner.at_tube_edge(gain.eps), bounds, t_in })
}

fn analysis_for(path: &Path, err: &mut dyn Write) -> Outcome<(Scenario, Analysis)> {
    let sc = load(path, err)?;
    refuse_infeasible(&sc, err)?;
    let a = analyze(&sc).map_err(|e| {
        let _ = writeln!(err, "error: {e}");
        ExitStatus::Usage
    })?;
    Ok((sc, a))
}

fn write_bounds(a: &Analysis, out: &mut dyn Write) {
    match &a.bounds {
        Ok((t_a, t_b, t_out)) => {
            let _ = writeln!(out, "T_A            {}", num(*t_a));
            let _ = writeln!(out, "T_B            {}", num(*t_b));
            let _ = writeln!(out, "T_out          {}", num(*t_out));
        }
        Err(e) => {
            let _ = writeln!(out, "T_out          unavailable ({e})");
        }
    }
    match &a.t_in {
        Ok(t) => {
            let _ = writeln!(out, "T_in           {}", num(*t));
        }
        Err(e) => {
            let _ = writeln!(out, "T_in           unavailable ({e})");
        }
    }
}

/// Prints the feasibility report; exit 2 when either inequality fails.
pub fn feasibility(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    status(feasibility_inner(path, out, err))
}

fn feasibility_inner(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Outcome<ExitStatus> {
    let (sc, a) = analysis_for(path, err)?;
    let r = &a.report;
    let k0 = sc.gain().k0;
    let pass = |ok: bool| if ok { "pass" } else { "FAIL" };
    let lines: Vec<(String, String)> = if sc.is_first_order() {
        vec![
            ("order".into(), "first".into()),
            ("xi0".into(), num(a.w0)),
            ("d_bar_xi(xi0)".into(), num(r.d_bar_outer)),
            ("d_bar_xi(eps)".into(), num(r.d_bar_inner)),
        ]
    } else {
        vec![
            ("order".into(), "second".into()),
            ("s0".into(), num(a.w0)),
            ("d_max".into(), num(r.d_bar_outer)),
        ]
    };
    for (k, v) in lines {
        let _ = writeln!(out, "{k:<15}{v}");
    }
    let _ = writeln!(out, "{:<15}{}", "k0", num(k0));
    let _ = writeln!(out, "{:<15}{}", "G_in(eps)", num(a.g_in_eps));
    let _ = writeln!(out, "{:<15}{}", "eta0", num(r.eta0));
    let _ = writeln!(out, "{:<15}{}", "eta_eps", num(r.eta_eps));
    let _ = writeln!(out, "{:<15}{}", "residual", r.residual_radius.map(num).unwrap_or_else(|| "none".into()));
    let _ = writeln!(out, "{:<15}{} (k0 = {:.6} vs {:.6})", "outer", pass(r.outer_ok), k0, r.d_bar_outer);
    let _ = writeln!(out, "{:<15}{} (G_in(eps) = {:.6} vs {:.6})", "inner", pass(r.inner_ok), a.g_in_eps, r.d_bar_inner);
    write_bounds(&a, out);
    if !r.outer_ok {
        let _ = writeln!(err, "outer inequality failed: k0 = {:.6} <= {:.6}", k0, r.d_bar_outer);
    }
    if !r.inner_ok {
        let _ = writeln!(err, "inner inequality failed: G_in(eps) = {:.6} <= {:.6}", a.g_in_eps, r.d_bar_inner);
    }
    Ok(if r.passed() { ExitStatus::Success } else { ExitStatus::Feasibility })
}

/// Prints only the closed-form time bounds.
pub fn bounds(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    status(analysis_for(path, err).map(|(_, a)| {
        write_bounds(&a, out);
        if a.bounds.is_ok() && a.t_in.is_ok() {
            ExitStatus::Success
        } else {
            ExitStatus::Feasibility
        }
    }))
}
