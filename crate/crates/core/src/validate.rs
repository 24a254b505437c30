//! Independent end-to-end feasibility oracle.
//!
//! [`execute`] replays a flight plan event by event through the raw physical
//! formulas — no solver code involved — draining the battery on every leg
//! and hover, recharging to full at each station return, and collecting
//! every constraint violation along the way. Violations are data, never
//! panics, so callers can assert "zero violations" as their exit gate.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::model::{achievable_rate, velocity_poly, Instance};
use crate::plan::FlightPlan;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Fly { from: usize, to: usize },
    Hover { node: usize },
    Recharge { node: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEvent {
    #[serde(flatten)]
    pub kind: EventKind,
    pub duration_s: f64,
    /// Energy drawn from the battery; negative while recharging.
    pub energy_j: f64,
    pub battery_after_j: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TraceTotals {
    /// Total battery energy consumed (flying + hovering), J.
    pub energy_j: f64,
    /// Flying plus hovering time, s.
    pub flight_time_s: f64,
    /// Time spent recharging at the station, s.
    pub recharge_time_s: f64,
    /// flight_time_s + recharge_time_s.
    pub total_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TraceViolation {
    /// Battery went below zero at this event index.
    BatteryDepleted { event: usize, deficit_j: f64 },
    RateBelowThreshold { terminal: usize, rate_bps: f64, threshold_bps: f64 },
    PowerOutOfRange { terminal: usize, power_w: f64, p_max_w: f64 },
    VelocityOutOfRange { from: usize, to: usize, velocity_mps: f64, v_max_mps: f64 },
    CoverageMissing { terminal: usize },
    DuplicateVisit { terminal: usize },
    MalformedSubTour { index: usize, reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct ExecutionTrace {
    pub events: Vec<TraceEvent>,
    pub totals: TraceTotals,
    pub violations: Vec<TraceViolation>,
}

impl ExecutionTrace {
    /// One JSON event per line.
    pub fn write_jsonl<W: Write>(&self, out: &mut W) -> io::Result<()> {
        for event in &self.events {
            serde_json::to_writer(&mut *out, event)?;
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Simulates `plan` on `instance`: full battery at launch, drain per leg and
/// hover, recharge to full at every station arrival (the last one included —
/// the mission ends ready for the next).
pub fn execute(plan: &FlightPlan, instance: &Instance) -> ExecutionTrace {
    let uav = &instance.uav;
    let ch = &instance.channel;
    let f_max = uav.battery_capacity_j;
    let mut events: Vec<TraceEvent> = Vec::new();
    let mut violations = Vec::new();
    let mut totals = TraceTotals::default();
    let mut battery = f_max;

    let drain = |energy: f64,
                     duration: f64,
                     kind: EventKind,
                     battery: &mut f64,
                     events: &mut Vec<TraceEvent>,
                     violations: &mut Vec<TraceViolation>,
                     totals: &mut TraceTotals| {
        *battery -= energy;
        totals.energy_j += energy;
        totals.flight_time_s += duration;
        events.push(TraceEvent {
            kind,
            duration_s: duration,
            energy_j: energy,
            battery_after_j: *battery,
        });
        if *battery < -1e-9 * f_max.max(1.0) {
            violations.push(TraceViolation::BatteryDepleted {
                event: events.len() - 1,
                deficit_j: -*battery,
            });
        }
    };

    let mut seen = vec![false; instance.k() + 1];
    for (si, sub) in plan.subtours.iter().enumerate() {
        let m = sub.order.len();
        if m < 3 || sub.order[0] != 0 || sub.order[m - 1] != 0 {
            violations.push(TraceViolation::MalformedSubTour {
                index: si,
                reason: "sub-tour must start and end at the station".into(),
            });
            continue;
        }
        if sub.velocities_mps.len() != m - 1
            || sub.hovers.len() != m - 2
            || sub.powers_w.len() != m - 2
        {
            violations.push(TraceViolation::MalformedSubTour {
                index: si,
                reason: "velocities/hovers/powers lengths disagree with the order".into(),
            });
            continue;
        }
        let hover_of = |pos: usize| {
            if sub.order[pos] == 0 {
                instance.station.position
            } else {
                sub.hovers[pos - 1]
            }
        };
        for leg in 0..m - 1 {
            // Leg flight.
            let v = sub.velocities_mps[leg];
            let dist = hover_of(leg).dist(&hover_of(leg + 1));
            if !(v > 0.0 && v.is_finite()) {
                violations.push(TraceViolation::MalformedSubTour {
                    index: si,
                    reason: format!("non-positive velocity on leg {leg}"),
                });
                continue;
            }
            if v > uav.v_max_mps * (1.0 + 1e-9) {
                violations.push(TraceViolation::VelocityOutOfRange {
                    from: sub.order[leg],
                    to: sub.order[leg + 1],
                    velocity_mps: v,
                    v_max_mps: uav.v_max_mps,
                });
            }
            drain(
                dist * velocity_poly(&uav.psi, v),
                dist / v,
                EventKind::Fly {
                    from: sub.order[leg],
                    to: sub.order[leg + 1],
                },
                &mut battery,
                &mut events,
                &mut violations,
                &mut totals,
            );

            // Hover and transmit at the arrival node (not the station).
            let node = sub.order[leg + 1];
            if node == 0 {
                continue;
            }
            if seen[node] {
                violations.push(TraceViolation::DuplicateVisit { terminal: node });
            }
            seen[node] = true;
            let gt = &instance.terminals[node - 1];
            let power = sub.powers_w[leg];
            if !(0.0..=ch.p_max_w * (1.0 + 1e-9)).contains(&power) {
                violations.push(TraceViolation::PowerOutOfRange {
                    terminal: node,
                    power_w: power,
                    p_max_w: ch.p_max_w,
                });
            }
            let rate = achievable_rate(power, &sub.hovers[leg], &gt.position, ch);
            if rate < ch.rate_threshold_bps * (1.0 - 1e-9) {
                violations.push(TraceViolation::RateBelowThreshold {
                    terminal: node,
                    rate_bps: rate,
                    threshold_bps: ch.rate_threshold_bps,
                });
            }
            if rate <= 0.0 {
                violations.push(TraceViolation::MalformedSubTour {
                    index: si,
                    reason: format!("zero rate at terminal {node}"),
                });
                continue;
            }
            let duration = gt.data_bits / rate;
            drain(
                duration * (uav.transmit_coeff * power + uav.hover_power_w),
                duration,
                EventKind::Hover { node },
                &mut battery,
                &mut events,
                &mut violations,
                &mut totals,
            );
        }

        // Back at the station: refill.
        let deficit = f_max - battery;
        if deficit > 0.0 {
            let duration = deficit / uav.recharge_power_w;
            totals.recharge_time_s += duration;
            battery = f_max;
            events.push(TraceEvent {
                kind: EventKind::Recharge { node: 0 },
                duration_s: duration,
                energy_j: -deficit,
                battery_after_j: battery,
            });
        }
    }

    for t in &instance.terminals {
        if !seen[t.id] {
            violations.push(TraceViolation::CoverageMissing { terminal: t.id });
        }
    }
    totals.total_time_s = totals.flight_time_s + totals.recharge_time_s;
    ExecutionTrace {
        events,
        totals,
        violations,
    }
}
