//! Total time as a function of the (constant) cruise velocity on a fixed
//! instance: rebuild edge weights per sample, re-route, record the total
//! virtual time and the sub-tour partition. The curve is piecewise smooth;
//! jumps appear exactly where the battery budget forces the partition to
//! change. The routing-stage optimal velocity is emitted as a marker.

use serde::Serialize;

use crate::exec;
use crate::model::Instance;
use crate::scalar::optimal_cruise_velocity;
use crate::strategy::{per_terminal_powers, PipelineOpts, StrategyError};
use crate::tspe::{build_edge_weights, exact_tspe_limited, heuristic_tspe, Trajectory, TspeError};

#[derive(Debug, Clone, Serialize)]
pub struct SweepSample {
    pub velocity_mps: f64,
    pub feasible: bool,
    pub total_s: Option<f64>,
    pub n_subtours: Option<usize>,
    /// Canonical partition encoding, e.g. "1,3|2,4"; stable across
    /// velocities so discontinuities are visible in the data.
    pub partition_id: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCurve {
    pub samples: Vec<SweepSample>,
    /// Routing-stage optimal velocity (the marker).
    pub v_marker_mps: f64,
    pub marker_total_s: Option<f64>,
}

impl SweepCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("velocity_mps,feasible,total_s,n_subtours,partition_id\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.velocity_mps,
                s.feasible,
                s.total_s.map(|v| v.to_string()).unwrap_or_default(),
                s.n_subtours.map(|v| v.to_string()).unwrap_or_default(),
                s.partition_id.clone().unwrap_or_default()
            ));
        }
        out
    }
}

pub fn partition_id(trajectory: &Trajectory) -> String {
    let mut blocks: Vec<Vec<usize>> = trajectory
        .subtours
        .iter()
        .map(|s| {
            let mut v = s[1..s.len() - 1].to_vec();
            v.sort_unstable();
            v
        })
        .collect();
    blocks.sort();
    blocks
        .iter()
        .map(|b| {
            b.iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("|")
}

/// Sweeps `[v_lo, v_hi]` in `step` increments (the marker velocity is
/// added as an extra sample). Velocities that cannot cover every terminal
/// within the battery budget yield infeasible rows, not errors.
pub fn velocity_sweep(
    instance: &Instance,
    v_lo: f64,
    v_hi: f64,
    step: f64,
    seed: u64,
    opts: &PipelineOpts,
) -> Result<SweepCurve, StrategyError> {
    assert!(v_lo > 0.0 && v_hi >= v_lo && step > 0.0);
    let powers = per_terminal_powers(instance, opts.scalar_tol)?;
    let v_marker = optimal_cruise_velocity(&instance.uav, opts.scalar_tol)?;

    let mut velocities: Vec<f64> = Vec::new();
    let n = ((v_hi - v_lo) / step).round() as usize;
    for i in 0..=n {
        velocities.push((v_lo + step * i as f64).min(v_hi));
    }
    if v_marker >= v_lo && v_marker <= v_hi {
        velocities.push(v_marker);
    }

    let samples: Vec<SweepSample> = exec::map_collect(&velocities, |&v| {
        if v > instance.uav.v_max_mps {
            return SweepSample {
                velocity_mps: v,
                feasible: false,
                total_s: None,
                n_subtours: None,
                partition_id: None,
                error: Some(format!("velocity {v} above the ceiling")),
            };
        }
        let routed = build_edge_weights(instance, v, &powers)
            .map_err(StrategyError::from)
            .and_then(|w| {
                let f_max = instance.uav.battery_capacity_j;
                if instance.k() <= opts.exact_limit {
                    exact_tspe_limited(&w, f_max, opts.exact_limit).map_err(Into::into)
                } else {
                    heuristic_tspe(&w, f_max, seed).map_err(Into::into)
                }
            });
        match routed {
            Ok(t) => SweepSample {
                velocity_mps: v,
                feasible: true,
                total_s: Some(t.total_vtc),
                n_subtours: Some(t.subtours.len()),
                partition_id: Some(partition_id(&t)),
                error: None,
            },
            Err(StrategyError::Tspe(TspeError::InfeasibleTerminal { id, .. })) => SweepSample {
                velocity_mps: v,
                feasible: false,
                total_s: None,
                n_subtours: None,
                partition_id: None,
                error: Some(format!("terminal {id} unreachable at {v} m/s")),
            },
            Err(e) => SweepSample {
                velocity_mps: v,
                feasible: false,
                total_s: None,
                n_subtours: None,
                partition_id: None,
                error: Some(e.to_string()),
            },
        }
    });

    let marker_total_s = samples
        .iter()
        .find(|s| s.velocity_mps == v_marker)
        .and_then(|s| s.total_s);
    Ok(SweepCurve {
        samples,
        v_marker_mps: v_marker,
        marker_total_s,
    })
}
