//! CSV trajectories and plain-text reports.

use std::io::Write;

use ftsmc_core::{Comparison, EventKind, GainPercent, MetricsReport, Order, Trajectory};

/// Fixed scientific notation with 12 significant digits; locale independent.
pub fn num(v: f64) -> String {
    format!("{v:.11e}")
}

pub fn trajectory_header(traj: &Trajectory<f64>) -> Vec<&'static str> {
    let mut h = vec!["t"];
    match traj.order {
        Order::First => h.extend(["x", "xi"]),
        Order::Second => {
            h.extend(["e1", "e2"]);
            if !traj.xi.is_empty() {
                h.push("xi");
            }
            h.push("s");
        }
    }
    h.extend(["u", "d", "rho"]);
    h
}

pub fn write_trajectory<W: Write>(w: W, traj: &Trajectory<f64>) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(trajectory_header(traj))?;
    let has_xi = !traj.xi.is_empty();
    let has_rho = !traj.rho.is_empty();
    let mut row: Vec<String> = Vec::with_capacity(8);
    for i in 0..traj.len() {
        row.clear();
        row.push(num(traj.times[i]));
        row.push(num(traj.e1[i]));
        match traj.order {
            Order::First => row.push(num(traj.xi[i])),
            Order::Second => {
                row.push(num(traj.e2[i]));
                if has_xi {
                    row.push(num(traj.xi[i]));
                }
                row.push(num(traj.s[i]));
            }
        }
        row.push(num(traj.u[i]));
        row.push(num(traj.d[i]));
        row.push(if has_rho { num(traj.rho[i]) } else { String::new() });
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn event_name(kind: EventKind) -> &'static str {
    match kind {
        EventKind::TubeEntry => "tube_entry",
        EventKind::EnvelopeViolation => "envelope_violation",
        EventKind::InfeasibleAbort => "infeasible_abort",
    }
}

pub fn metrics_text(m: &MetricsReport<f64>, traj: &Trajectory<f64>) -> String {
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        s.push_str(&format!("{k:<15}{v}\n"));
    };
    line("J_u", num(m.j_u));
    line("J_peak", num(m.j_peak));
    line("J_viol", num(m.j_viol));
    line("IAE", num(m.iae));
    line("ISE", num(m.ise));
    line("u_max", num(m.u_max));
    line("reaching_time", m.reaching_time.map(num).unwrap_or_else(|| "none".into()));
    line("samples", traj.len().to_string());
    line("completed", traj.completed.to_string());
    if m.truncated {
        line("truncated", "true (metrics cover the recorded prefix only)".into());
    }
    for e in &traj.events {
        line("event", format!("{} t={}", event_name(e.kind), num(e.time)));
    }
    s
}

fn gain_cell(g: GainPercent<f64>) -> String {
    match g {
        GainPercent::Value(v) => format!("{v:.1}"),
        GainPercent::Undefined => "undefined".into(),
    }
}

/// Rows J_u, J_peak, J_viol, IAE, ISE; columns metric, non-PPF, PPF-aware, Gain(%).
pub fn write_comparison<W: Write>(w: W, c: &Comparison<f64>) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["metric", "non-PPF", "PPF-aware", "Gain(%)"])?;
    let (b, p) = (&c.baseline, &c.ppf);
    let rows = [
        ("J_u", b.j_u, p.j_u, gain_cell(c.j_u_gain)),
        ("J_peak", b.j_peak, p.j_peak, c.ppf_verdict().to_string()),
        ("J_viol", b.j_viol, p.j_viol, "--".to_string()),
        ("IAE", b.iae, p.iae, gain_cell(c.iae_gain)),
        ("ISE", b.ise, p.ise, gain_cell(c.ise_gain)),
    ];
    for (name, bv, pv, g) in rows {
        out.write_record([name.to_string(), num(bv), num(pv), g])?;
    }
    out.flush()?;
    Ok(())
}

pub fn comparison_text(c: &Comparison<f64>) -> String {
    let (b, p) = (&c.baseline, &c.ppf);
    let mut s = format!("{:<8}{:>14}{:>14}{:>14}\n", "metric", "non-PPF", "PPF-aware", "Gain(%)");
    let rows = [
        ("J_u", b.j_u, p.j_u, gain_cell(c.j_u_gain)),
        ("J_peak", b.j_peak, p.j_peak, c.ppf_verdict().to_string()),
        ("J_viol", b.j_viol, p.j_viol, "--".to_string()),
        ("IAE", b.iae, p.iae, gain_cell(c.iae_gain)),
        ("ISE", b.ise, p.ise, gain_cell(c.ise_gain)),
    ];
    for (name, bv, pv, g) in rows {
        s.push_str(&format!("{name:<8}{bv:>14.6}{pv:>14.6}{g:>14}\n"));
    }
    s.push_str(&format!("matched peak control: u_max non-PPF = {:.6}, PPF-aware = {:.6}\n", b.u_max, p.u_max));
    s
}
