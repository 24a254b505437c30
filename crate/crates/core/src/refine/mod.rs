//! Per-sub-tour joint refinement of leg velocities, transmit powers and
//! hover positions by block coordinate descent.
//!
//! The surrogate objective replaces each terminal's downlink rate with a
//! slack variable bounded above by a concave lower bound on the true rate
//! (first-order expansion in the squared hover offset), which makes both
//! blocks convex:
//!
//! * velocities + powers — separable once the single energy-budget
//!   constraint is dualized; solved exactly by bisection on the multiplier
//!   ([`velocity_power`]);
//! * hover positions + slacks — a small smooth convex program solved by a
//!   log-barrier interior-point method ([`positions`]).
//!
//! Each accepted block keeps the surrogate objective non-increasing; the
//! final state tightens slacks to the exact rates, so the surrogate and the
//! true objective coincide at the returned point.

mod positions;
mod velocity_power;

pub use positions::solve_positions;
pub use velocity_power::solve_velocity_power;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    achievable_rate, velocity_poly, ChannelParams, Instance, ModelError, Position, LOG2_E,
};
use crate::scalar::ScalarError;

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("sub-tour order must be [0, terminals.., 0] with at least one terminal")]
    BadOrder,
    #[error("sub-tour needs {required:.1} J at its most economical settings but the battery holds {budget:.1} J")]
    OverBudget { required: f64, budget: f64 },
    #[error("surrogate objective rose from {from} to {to} at iteration {iteration}")]
    MonotonicityViolation {
        iteration: usize,
        from: f64,
        to: f64,
    },
    #[error("position subproblem became infeasible at a feasible expansion point; this is a bug")]
    LostFeasibility,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One sub-tour to refine: its terminals in visiting order and the cyclic
/// leg list through the station.
#[derive(Debug, Clone)]
pub struct SubTourProblem<'a> {
    pub instance: &'a Instance,
    /// Terminal ids in visiting order (station excluded).
    pub nodes: Vec<usize>,
    /// Legs as ordered node pairs: `(0,a), (a,b), .., (z,0)`.
    pub edges: Vec<(usize, usize)>,
}

impl<'a> SubTourProblem<'a> {
    /// Builds the problem from a full order `[0, a, .., 0]`.
    pub fn new(instance: &'a Instance, order: &[usize]) -> Result<Self, RefineError> {
        if order.len() < 3 || order[0] != 0 || *order.last().unwrap() != 0 {
            return Err(RefineError::BadOrder);
        }
        let nodes: Vec<usize> = order[1..order.len() - 1].to_vec();
        if nodes.iter().any(|&v| v == 0 || v > instance.k()) {
            return Err(RefineError::BadOrder);
        }
        let edges = order.windows(2).map(|w| (w[0], w[1])).collect();
        Ok(Self {
            instance,
            nodes,
            edges,
        })
    }

    pub fn terminal(&self, idx: usize) -> &crate::model::GroundTerminal {
        &self.instance.terminals[self.nodes[idx] - 1]
    }

    /// `D_i (eta P + P^h + P^r) / P^r`: hover virtual time times the slack.
    pub(crate) fn hover_vtc_coeff(&self, idx: usize, power: f64) -> f64 {
        let uav = &self.instance.uav;
        self.terminal(idx).data_bits
            * (uav.transmit_coeff * power + uav.hover_power_w + uav.recharge_power_w)
            / uav.recharge_power_w
    }

    /// `D_i (eta P + P^h)`: hover energy times the slack.
    pub(crate) fn hover_energy_coeff(&self, idx: usize, power: f64) -> f64 {
        let uav = &self.instance.uav;
        self.terminal(idx).data_bits * (uav.transmit_coeff * power + uav.hover_power_w)
    }
}

/// Decision variables of one sub-tour plus the objective history.
#[derive(Debug, Clone, Serialize)]
pub struct BcdState {
    /// Hover point per terminal, aligned with `SubTourProblem::nodes`.
    pub hover: Vec<Position>,
    /// Transmit power per terminal, W.
    pub power: Vec<f64>,
    /// One velocity per leg, aligned with `SubTourProblem::edges`.
    pub velocity: Vec<f64>,
    /// Rate slack per terminal, bit/s.
    pub slack: Vec<f64>,
    /// Surrogate (slack-based) objective after each iteration, s.
    pub objective_history: Vec<f64>,
    /// True-rate objective at the same points, s.
    pub exact_objective_history: Vec<f64>,
}

/// Concave lower bound on the rate as a function of the squared hover
/// offset, expanded at a reference point.
#[derive(Debug, Clone, Copy)]
pub struct TaylorCoeffs {
    /// Slope against the squared offset, (bit/s)/m^2; never negative.
    pub c1: f64,
    /// Rate at the expansion point, bit/s.
    pub c2: f64,
    /// Squared offset at the expansion point, m^2.
    pub expansion_sq_dist: f64,
}

impl TaylorCoeffs {
    /// Bound value at squared offset `q`.
    pub fn bound_at(&self, q: f64) -> f64 {
        -self.c1 * (q - self.expansion_sq_dist) + self.c2
    }
}

/// First-order lower bound on the achievable rate, expanded at
/// `expansion_point`. The true rate is convex in the squared offset, so the
/// tangent is a global lower bound, tight at the expansion point.
pub fn taylor_bound(
    power: f64,
    hover_now: &Position,
    expansion_point: &Position,
    gt: &Position,
    ch: &ChannelParams,
) -> (TaylorCoeffs, f64) {
    let q_e = expansion_point.dist_sq(gt);
    let h_eff_sq = ch.altitude_m * ch.altitude_m + q_e;
    let snr = power * ch.ref_gain / (ch.noise_power_w * h_eff_sq);
    let c2 = ch.bandwidth_hz * (1.0 + snr).log2();
    let c1 = ch.bandwidth_hz * power * ch.ref_gain * LOG2_E
        / (ch.noise_power_w * h_eff_sq * h_eff_sq * (1.0 + snr));
    let coeffs = TaylorCoeffs {
        c1,
        c2,
        expansion_sq_dist: q_e,
    };
    let bound = coeffs.bound_at(hover_now.dist_sq(gt));
    (coeffs, bound)
}

/// Initial state per the refinement recipe: hover right above the
/// terminals, fly the routing velocity everywhere, and set each slack to
/// the zero-offset rate of its initial power. `powers` aligns with
/// `problem.nodes`.
pub fn init_bcd_state(problem: &SubTourProblem, v_ini: f64, powers: &[f64]) -> BcdState {
    assert_eq!(powers.len(), problem.nodes.len());
    let ch = &problem.instance.channel;
    let hover: Vec<Position> = (0..problem.nodes.len())
        .map(|i| problem.terminal(i).position)
        .collect();
    let slack: Vec<f64> = powers
        .iter()
        .zip(&hover)
        .enumerate()
        .map(|(i, (&p, h))| achievable_rate(p, h, &problem.terminal(i).position, ch))
        .collect();
    let mut state = BcdState {
        hover,
        power: powers.to_vec(),
        velocity: vec![v_ini; problem.edges.len()],
        slack,
        objective_history: Vec::new(),
        exact_objective_history: Vec::new(),
    };
    let phi = surrogate_objective(problem, &state);
    let exact = exact_objective(problem, &state);
    state.objective_history.push(phi);
    state.exact_objective_history.push(exact);
    state
}

/// Position of a node id under the current state (station stays pinned).
pub fn node_hover(problem: &SubTourProblem, state: &BcdState, node: usize) -> Position {
    if node == 0 {
        problem.instance.station.position
    } else {
        let idx = problem.nodes.iter().position(|&n| n == node).unwrap();
        state.hover[idx]
    }
}

/// Surrogate objective: hover terms against the slacks plus per-leg flight
/// virtual time at the current hover geometry.
pub fn surrogate_objective(problem: &SubTourProblem, state: &BcdState) -> f64 {
    objective_with(problem, state, |i| state.slack[i])
}

/// True objective: the same expression with slacks replaced by the exact
/// rates at the current hover points and powers.
pub fn exact_objective(problem: &SubTourProblem, state: &BcdState) -> f64 {
    objective_with(problem, state, |i| {
        achievable_rate(
            state.power[i],
            &state.hover[i],
            &problem.terminal(i).position,
            &problem.instance.channel,
        )
    })
}

fn objective_with<F: Fn(usize) -> f64>(
    problem: &SubTourProblem,
    state: &BcdState,
    rate_of: F,
) -> f64 {
    let uav = &problem.instance.uav;
    let mut total = 0.0;
    for i in 0..problem.nodes.len() {
        total += problem.hover_vtc_coeff(i, state.power[i]) / rate_of(i);
    }
    for (e, &(a, b)) in problem.edges.iter().enumerate() {
        let d = node_hover(problem, state, a).dist(&node_hover(problem, state, b));
        total += d * velocity_poly(&uav.tau, state.velocity[e]);
    }
    total
}

/// Battery energy the surrogate charges this sub-tour: per-leg flight
/// energy plus hover energies against the slacks.
pub fn surrogate_energy(problem: &SubTourProblem, state: &BcdState) -> f64 {
    let uav = &problem.instance.uav;
    let mut total = 0.0;
    for i in 0..problem.nodes.len() {
        total += problem.hover_energy_coeff(i, state.power[i]) / state.slack[i];
    }
    for (e, &(a, b)) in problem.edges.iter().enumerate() {
        let d = node_hover(problem, state, a).dist(&node_hover(problem, state, b));
        total += d * velocity_poly(&uav.psi, state.velocity[e]);
    }
    total
}

/// Block coordinate descent: alternate the velocity+power block and the
/// position+slack block until the fractional objective decrease drops below
/// `tol` or `max_iter` iterations have run, then tighten slacks to the
/// exact rates. The surrogate history is non-increasing by construction; a
/// rise beyond 1e-9 relative is reported as an internal error.
pub fn bcd_optimize(
    problem: &SubTourProblem,
    init: BcdState,
    tol: f64,
    max_iter: usize,
) -> Result<BcdState, RefineError> {
    let mut state = init;
    if state.objective_history.is_empty() {
        let phi = surrogate_objective(problem, &state);
        state.objective_history.push(phi);
        state
            .exact_objective_history
            .push(exact_objective(problem, &state));
    }
    for iteration in 1..=max_iter {
        let phi_prev = *state.objective_history.last().unwrap();

        // Velocity + power block. Accept only if it does not regress (the
        // dual bisection stops within a finite budget tolerance).
        let (velocities, powers) = solve_velocity_power(problem, &state)?;
        let mut candidate = state.clone();
        candidate.velocity = velocities;
        candidate.power = powers;
        if surrogate_objective(problem, &candidate) <= phi_prev * (1.0 + 1e-12) {
            state.velocity = candidate.velocity;
            state.power = candidate.power;
        }

        // Position + slack block (internally safeguarded the same way).
        let sca_point = state.hover.clone();
        let (hovers, slacks) = solve_positions(problem, &state, &sca_point)?;
        state.hover = hovers;
        state.slack = slacks;

        let phi = surrogate_objective(problem, &state);
        if phi > phi_prev * (1.0 + 1e-9) {
            return Err(RefineError::MonotonicityViolation {
                iteration,
                from: phi_prev,
                to: phi,
            });
        }
        state.objective_history.push(phi);
        state
            .exact_objective_history
            .push(exact_objective(problem, &state));
        if phi_prev - phi < tol * phi_prev {
            break;
        }
    }

    // Tighten: the slack constraint holds with equality at an optimum, so
    // lift each slack to the exact rate. This can only lower the surrogate.
    let ch = &problem.instance.channel;
    for i in 0..problem.nodes.len() {
        state.slack[i] = achievable_rate(
            state.power[i],
            &state.hover[i],
            &problem.terminal(i).position,
            ch,
        );
    }
    let phi = surrogate_objective(problem, &state);
    state.objective_history.push(phi);
    state
        .exact_objective_history
        .push(exact_objective(problem, &state));
    Ok(state)
}
