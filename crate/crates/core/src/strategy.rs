//! The four trajectory designs under comparison and their shared pipeline.
//!
//! All strategies hover over the terminals at per-terminal optimal powers
//! and route with the energy-constrained solver at their own velocity:
//!
//! * `Effi` — the energy-per-meter minimizing velocity;
//! * `Max`  — the velocity ceiling;
//! * `Ini`  — the virtual-time-per-meter minimizing velocity;
//! * `Opt`  — `Ini` followed by per-sub-tour refinement of velocities,
//!   powers and hover positions.
//!
//! Every result is replayed through the independent validator; a plan with
//! violations is a bug, not a result.

use std::time::Instant;

use thiserror::Error;

use crate::exec;
use crate::model::{Instance, ModelError};
use crate::plan::{FlightPlan, SubTourPlan};
use crate::refine::{bcd_optimize, init_bcd_state, RefineError, SubTourProblem};
use crate::scalar::{
    energy_efficient_velocity, optimal_cruise_velocity, optimal_hover_power, ScalarError,
};
use crate::scenario::Scenario;
use crate::tspe::{
    build_edge_weights, exact_tspe_limited, heuristic_tspe, Trajectory, TspeError,
    DEFAULT_EXACT_LIMIT,
};
use crate::validate::{execute, ExecutionTrace, TraceViolation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Strategy {
    Effi,
    Max,
    Ini,
    Opt,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Effi, Strategy::Max, Strategy::Ini, Strategy::Opt];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Effi => "EFFI",
            Strategy::Max => "MAX",
            Strategy::Ini => "INI",
            Strategy::Opt => "OPT",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EFFI" => Some(Strategy::Effi),
            "MAX" => Some(Strategy::Max),
            "INI" => Some(Strategy::Ini),
            "OPT" => Some(Strategy::Opt),
            _ => None,
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Pipeline knobs shared by all strategies.
#[derive(Debug, Clone)]
pub struct PipelineOpts {
    /// Largest K routed exactly; beyond it the heuristic takes over.
    pub exact_limit: usize,
    /// Tolerance for the scalar solves (velocity brackets, power ratios).
    pub scalar_tol: f64,
    /// Relative objective-decrease threshold stopping the refinement.
    pub bcd_tol: f64,
    pub bcd_max_iter: usize,
    /// Reuse the `Ini` visiting order for `Effi`/`Max` instead of
    /// re-routing at their own velocity.
    pub reuse_ini_order: bool,
}

impl Default for PipelineOpts {
    fn default() -> Self {
        Self {
            exact_limit: DEFAULT_EXACT_LIMIT,
            scalar_tol: 1e-9,
            bcd_tol: 1e-4,
            bcd_max_iter: 50,
            reuse_ini_order: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Tspe(#[from] TspeError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{strategy}: validator found violations in the produced plan: {violations:?}")]
    InvalidResult {
        strategy: &'static str,
        violations: Vec<TraceViolation>,
    },
}

impl StrategyError {
    /// Infeasible-instance errors (exit code 2) versus internal failures
    /// (exit code 3).
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            StrategyError::Scalar(ScalarError::InfeasibleTerminal { .. })
                | StrategyError::Tspe(TspeError::InfeasibleTerminal { .. })
                | StrategyError::Tspe(TspeError::RateBelowThreshold { .. })
                | StrategyError::Refine(RefineError::OverBudget { .. })
        )
    }
}

#[derive(Debug, Clone)]
pub struct StrategyResult {
    pub strategy: Strategy,
    pub trajectory: Trajectory,
    pub plan: FlightPlan,
    pub trace: ExecutionTrace,
    pub wall_time_s: f64,
}

/// Transmit power per terminal, hovering right above it; parallel across
/// terminals.
pub fn per_terminal_powers(instance: &Instance, tol: f64) -> Result<Vec<f64>, ScalarError> {
    let reports = exec::map_collect(&instance.terminals, |t| {
        optimal_hover_power(t, &t.position, &instance.channel, &instance.uav, tol)
            .map(|r| r.optimal_p)
    });
    reports.into_iter().collect()
}

/// Routing at a fixed velocity: exact up to the size limit, insertion
/// heuristic beyond it (seeded by the scenario for determinism).
fn route(
    instance: &Instance,
    velocity: f64,
    powers: &[f64],
    seed: u64,
    opts: &PipelineOpts,
) -> Result<Trajectory, StrategyError> {
    let weights = build_edge_weights(instance, velocity, powers)?;
    let f_max = instance.uav.battery_capacity_j;
    if instance.k() <= opts.exact_limit {
        Ok(exact_tspe_limited(&weights, f_max, opts.exact_limit)?)
    } else {
        log::warn!(
            "{} terminals exceed the exact limit {}; routing heuristically",
            instance.k(),
            opts.exact_limit
        );
        Ok(heuristic_tspe(&weights, f_max, seed)?)
    }
}

pub fn run_strategy(
    scenario: &Scenario,
    strategy: Strategy,
    opts: &PipelineOpts,
) -> Result<StrategyResult, StrategyError> {
    let start = Instant::now();
    let instance = &scenario.instance;
    let uav = &instance.uav;
    let velocity = match strategy {
        Strategy::Effi => energy_efficient_velocity(uav, opts.scalar_tol)?,
        Strategy::Max => uav.v_max_mps,
        Strategy::Ini | Strategy::Opt => optimal_cruise_velocity(uav, opts.scalar_tol)?,
    };
    let powers = per_terminal_powers(instance, opts.scalar_tol)?;

    let trajectory = if opts.reuse_ini_order && matches!(strategy, Strategy::Effi | Strategy::Max)
    {
        let cruise = optimal_cruise_velocity(uav, opts.scalar_tol)?;
        let ini = route(instance, cruise, &powers, scenario.rng_seed, opts)?;
        let weights = build_edge_weights(instance, velocity, &powers)?;
        let reused = Trajectory::from_subtours(ini.subtours, &weights)?;
        for (i, &e) in reused.energy_per_subtour.iter().enumerate() {
            if e > uav.battery_capacity_j {
                return Err(StrategyError::Tspe(TspeError::InfeasibleTerminal {
                    id: reused.subtours[i][1],
                    required: e,
                    budget: uav.battery_capacity_j,
                }));
            }
        }
        reused
    } else {
        route(instance, velocity, &powers, scenario.rng_seed, opts)?
    };

    let plan = match strategy {
        Strategy::Opt => {
            let refined: Vec<Result<SubTourPlan, RefineError>> =
                exec::map_collect(&trajectory.subtours, |order| {
                    let problem = SubTourProblem::new(instance, order)?;
                    let node_powers: Vec<f64> =
                        problem.nodes.iter().map(|&n| powers[n - 1]).collect();
                    let init = init_bcd_state(&problem, velocity, &node_powers);
                    let state = bcd_optimize(&problem, init, opts.bcd_tol, opts.bcd_max_iter)?;
                    Ok(SubTourPlan {
                        order: order.clone(),
                        velocities_mps: state.velocity,
                        hovers: state.hover,
                        powers_w: state.power,
                    })
                });
            FlightPlan {
                subtours: refined.into_iter().collect::<Result<Vec<_>, _>>()?,
            }
        }
        _ => FlightPlan::uniform(&trajectory, velocity, &powers, instance),
    };

    let trace = execute(&plan, instance);
    if !trace.violations.is_empty() {
        return Err(StrategyError::InvalidResult {
            strategy: strategy.name(),
            violations: trace.violations,
        });
    }
    Ok(StrategyResult {
        strategy,
        trajectory,
        plan,
        trace,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
