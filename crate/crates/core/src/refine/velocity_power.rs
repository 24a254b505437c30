//! Velocity and transmit-power block.
//!
//! With hovers and slacks held fixed, both objective and energy budget are
//! separable: every power term is affine increasing in its power, so each
//! power drops to the least value that still meets both the rate threshold
//! and its slack at the current offset; every leg's cost is `distance *
//! (vtc-poly + lambda * energy-poly)(v)`, whose minimizer does not depend
//! on the distance — one scalar solve per multiplier serves every leg.
//! The single energy-budget multiplier is found by bisection: zero if the
//! budget is slack at the unconstrained optimum, otherwise the smallest
//! multiplier whose minimizer fits the budget within `1e-6 * F^max`.

use crate::model::{power_for_rate, velocity_poly};
use crate::scalar::minimize_unimodal;

use super::{BcdState, RefineError, SubTourProblem};

const BUDGET_REL_TOL: f64 = 1e-6;
const V_LO: f64 = 1e-3;
const V_TOL: f64 = 1e-9;

pub fn solve_velocity_power(
    problem: &SubTourProblem,
    state: &BcdState,
) -> Result<(Vec<f64>, Vec<f64>), RefineError> {
    let instance = problem.instance;
    let uav = &instance.uav;
    let ch = &instance.channel;
    let f_max = uav.battery_capacity_j;
    let m = problem.nodes.len();

    // Power block: the least power meeting max(threshold, slack) at the
    // current offset. Feasibility of the incoming state guarantees it fits
    // inside the power box.
    let mut powers = Vec::with_capacity(m);
    let mut hover_energy = 0.0; // sum_i D_i (eta p + P^h) / S_i
    for i in 0..m {
        let offset_sq = state.hover[i].dist_sq(&problem.terminal(i).position);
        let target = ch.rate_threshold_bps.max(state.slack[i]);
        let p = power_for_rate(target, offset_sq, ch).min(ch.p_max_w);
        debug_assert!(
            power_for_rate(target, offset_sq, ch) <= ch.p_max_w * (1.0 + 1e-9),
            "state infeasible: required power exceeds the box"
        );
        hover_energy += problem.hover_energy_coeff(i, p) / state.slack[i];
        powers.push(p);
    }

    // Total leg length at the current hover geometry.
    let total_len: f64 = problem
        .edges
        .iter()
        .map(|&(a, b)| {
            super::node_hover(problem, state, a).dist(&super::node_hover(problem, state, b))
        })
        .sum();

    let best_velocity = |lambda: f64| -> Result<f64, RefineError> {
        let report = minimize_unimodal(
            |v| velocity_poly(&uav.tau, v) + lambda * velocity_poly(&uav.psi, v),
            V_LO.min(uav.v_max_mps / 2.0),
            uav.v_max_mps,
            V_TOL,
        )?;
        Ok(report.argmin)
    };
    let flight_energy = |v: f64| total_len * velocity_poly(&uav.psi, v);

    // Budget slack at the unconstrained (multiplier zero) optimum?
    let v0 = best_velocity(0.0)?;
    if hover_energy + flight_energy(v0) <= f_max {
        return Ok((vec![v0; problem.edges.len()], powers));
    }

    // Most economical point: if even that busts the budget, the sub-tour is
    // infeasible outright.
    let v_econ = {
        let report = minimize_unimodal(
            |v| velocity_poly(&uav.psi, v),
            V_LO.min(uav.v_max_mps / 2.0),
            uav.v_max_mps,
            V_TOL,
        )?;
        report.argmin
    };
    let min_energy = hover_energy + flight_energy(v_econ);
    if min_energy > f_max {
        return Err(RefineError::OverBudget {
            required: min_energy,
            budget: f_max,
        });
    }

    // Bisect the multiplier: energy(lambda) decreases continuously toward
    // the economical floor, so the bracket below always closes.
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut v_hi = best_velocity(hi)?;
    let mut guard = 0;
    while hover_energy + flight_energy(v_hi) > f_max {
        lo = hi;
        hi *= 2.0;
        v_hi = best_velocity(hi)?;
        guard += 1;
        if guard > 200 {
            // energy(lambda) -> min_energy <= f_max, so this cannot happen.
            return Err(RefineError::LostFeasibility);
        }
    }
    for _ in 0..200 {
        if f_max - (hover_energy + flight_energy(v_hi)) <= BUDGET_REL_TOL * f_max {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v_mid = best_velocity(mid)?;
        if hover_energy + flight_energy(v_mid) <= f_max {
            hi = mid;
            v_hi = v_mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok((vec![v_hi; problem.edges.len()], powers))
}

#[cfg(test)]
mod tests {
    use super::super::tests::{ini_setup, instance};
    use super::super::{surrogate_energy, surrogate_objective};
    use super::*;
    use crate::scalar::optimal_cruise_velocity;

    #[test]
    fn slack_budget_recovers_cruise_velocity_and_floor_powers() {
        let inst = instance(&[(700.0, 150.0), (-450.0, 800.0), (320.0, -610.0)]);
        let (problem, state) = ini_setup(&inst, &[0, 1, 2, 3, 0]);
        let (velocities, powers) = solve_velocity_power(&problem, &state).unwrap();
        let cruise = optimal_cruise_velocity(&inst.uav, 1e-9).unwrap();
        for v in &velocities {
            assert!((v - cruise).abs() < 1e-6, "velocity {v} vs cruise {cruise}");
        }
        // Per-variable grid oracle for each power: the objective piece is
        // affine increasing, so the least feasible grid point must win.
        let ch = &inst.channel;
        for (i, &p) in powers.iter().enumerate() {
            let offset_sq = state.hover[i].dist_sq(&problem.terminal(i).position);
            let target = ch.rate_threshold_bps.max(state.slack[i]);
            let p_lo = power_for_rate(target, offset_sq, ch);
            let mut best = f64::INFINITY;
            let mut best_p = p_lo;
            let steps = 2000;
            for s in 0..=steps {
                let q = p_lo + (ch.p_max_w - p_lo) * s as f64 / steps as f64;
                let val = problem.hover_vtc_coeff(i, q) / state.slack[i];
                if val < best {
                    best = val;
                    best_p = q;
                }
            }
            assert!((p - best_p).abs() < 1e-4, "power {p} vs grid {best_p}");
        }
    }

    #[test]
    fn tight_budget_is_respected_and_binding() {
        let inst = instance(&[(2600.0, 300.0), (-2500.0, 1800.0)]);
        let (problem, state) = ini_setup(&inst, &[0, 1, 2, 0]);
        // Shrink the budget to just under what the cruise point uses.
        let cruise_cost = surrogate_energy(&problem, &state);
        let mut tight = inst.clone();
        tight.uav.battery_capacity_j = cruise_cost * 0.97;
        let tight_problem = SubTourProblem::new(&tight, &[0, 1, 2, 0]).unwrap();
        let (velocities, powers) = solve_velocity_power(&tight_problem, &state).unwrap();
        let mut post = state.clone();
        post.velocity = velocities;
        post.power = powers;
        let used = surrogate_energy(&tight_problem, &post);
        let f_max = tight.uav.battery_capacity_j;
        assert!(used <= f_max, "budget violated: {used} > {f_max}");
        assert!(
            f_max - used <= 1e-5 * f_max,
            "budget should be nearly binding: slack {}",
            f_max - used
        );
    }

    #[test]
    fn impossible_budget_errors() {
        let inst = instance(&[(2600.0, 300.0), (-2500.0, 1800.0)]);
        let (_, state) = ini_setup(&inst, &[0, 1, 2, 0]);
        let mut tiny = inst.clone();
        tiny.uav.battery_capacity_j = 1_000.0;
        let problem = SubTourProblem::new(&tiny, &[0, 1, 2, 0]).unwrap();
        assert!(matches!(
            solve_velocity_power(&problem, &state),
            Err(RefineError::OverBudget { .. })
        ));
    }

    #[test]
    fn shrinking_budget_never_improves_objective() {
        let inst = instance(&[(2000.0, -500.0), (1500.0, 2200.0)]);
        let (problem, state) = ini_setup(&inst, &[0, 1, 2, 0]);
        let base_cost = surrogate_energy(&problem, &state);
        let mut prev_obj = f64::NEG_INFINITY;
        for shrink in [1.02, 1.0, 0.99, 0.98, 0.97] {
            let mut capped = inst.clone();
            capped.uav.battery_capacity_j = base_cost * shrink;
            let p = SubTourProblem::new(&capped, &[0, 1, 2, 0]).unwrap();
            let (velocities, powers) = solve_velocity_power(&p, &state).unwrap();
            let mut post = state.clone();
            post.velocity = velocities;
            post.power = powers;
            let obj = surrogate_objective(&p, &post);
            assert!(
                obj >= prev_obj - 1e-9 * obj.abs(),
                "objective improved when budget shrank: {obj} < {prev_obj}"
            );
            prev_obj = obj;
        }
    }
}
