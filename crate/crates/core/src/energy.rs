//! Energy spent on a jump: kinetic energy at lift-off plus hoist work.

use serde::{Deserialize, Serialize};

use crate::sim::{Event, SimTrace, TraceRow};
use crate::{Error, Result, Scenario};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub hoist: f64,
    pub total: f64,
}

fn hoist_power(r: &TraceRow) -> f64 {
    (r.input.f_r_left * r.state.l1_dot).abs() + (r.input.f_r_right * r.state.l2_dot).abs()
}

/// Trapezoidal hoist work over the rows with `t0 <= t <= t1`.
pub fn hoist_work(rows: &[TraceRow], t0: f64, t1: f64) -> f64 {
    let eps = 1e-9;
    let window: Vec<&TraceRow> = rows.iter().filter(|r| r.t >= t0 - eps && r.t <= t1 + eps).collect();
    window.windows(2).map(|w| 0.5 * (hoist_power(w[0]) + hoist_power(w[1])) * (w[1].t - w[0].t)).sum()
}

/// Kinetic energy at lift-off plus hoist work over the flight.
pub fn jump_energy(trace: &SimTrace, scenario: &Scenario) -> Result<EnergyReport> {
    let t_lo = trace.lift_off_time().ok_or_else(|| Error::invalid("trace", "no lift-off event"))?;
    let lift_off = trace
        .rows
        .iter()
        .find(|r| r.t >= t_lo - 1e-9)
        .ok_or_else(|| Error::invalid("trace", "no samples after lift-off"))?;
    let t_end = trace
        .events
        .iter()
        .find_map(|e| match e {
            Event::HorizonEnd { t } => Some(*t),
            _ => None,
        })
        .or_else(|| trace.rows.last().map(|r| r.t))
        .unwrap_or(t_lo);
    let kinetic = 0.5 * scenario.mass * lift_off.velocity.norm_squared();
    let hoist = hoist_work(&trace.rows, t_lo, t_end);
    Ok(EnergyReport { kinetic, hoist, total: kinetic + hoist })
}
