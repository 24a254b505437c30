//! Hover-position and slack block.
//!
//! With velocities and powers fixed, each slack's optimum is exactly the
//! concave rate bound at its hover point (raising a slack only ever helps),
//! so the slacks are eliminated analytically and the block reduces to a
//! smooth convex program in the hover coordinates alone:
//!
//! * objective — hover terms `A_i / R_i(q_i)` plus smoothed leg lengths
//!   times their virtual-time coefficients, with `q_i` the squared offset
//!   from terminal `i` and `R_i` affine decreasing in `q_i`;
//! * one disc constraint per terminal (`R_i >= threshold`);
//! * one energy-budget constraint.
//!
//! Norms are smoothed as `sqrt(|d|^2 + eps^2)` with `eps = 1e-6` m, and the
//! program is solved by a log-barrier interior-point method with damped
//! Newton steps, the barrier parameter falling tenfold from 1 until the
//! duality-gap estimate drops below `1e-8` of the objective. The result is
//! accepted only if it beats the expansion point on the true (unsmoothed)
//! surrogate objective; otherwise the expansion point is returned with its
//! slacks tightened, which never regresses.

use nalgebra::{DMatrix, DVector};

use crate::model::{velocity_poly, Position};

use super::{surrogate_objective, taylor_bound, BcdState, RefineError, SubTourProblem};

const EPS_NORM: f64 = 1e-6;
const GAP_REL: f64 = 1e-8;
const NEWTON_MAX: usize = 60;
const OUTER_MAX: usize = 40;

#[derive(Clone, Copy)]
enum End {
    Fixed(Position),
    Var(usize),
}

struct EdgeTerm {
    a: End,
    b: End,
    /// Virtual-time coefficient (s/m) of this leg at its fixed velocity.
    t: f64,
    /// Energy coefficient (J/m).
    e: f64,
}

struct FreeGt {
    w: Position,
    /// Hover virtual-time coefficient A_i (see `hover_vtc_coeff`).
    a: f64,
    /// Hover energy coefficient B_i.
    b: f64,
    c1: f64,
    /// Rate bound: `R(q) = kappa - c1 q`.
    kappa: f64,
    /// Disc constraint: `q <= r_cap`.
    r_cap: f64,
}

struct Barrier {
    edges: Vec<EdgeTerm>,
    free: Vec<FreeGt>,
    fixed_budget: f64,
    f_max: f64,
}

pub fn solve_positions(
    problem: &SubTourProblem,
    state: &BcdState,
    sca_point: &[Position],
) -> Result<(Vec<Position>, Vec<f64>), RefineError> {
    let ch = &problem.instance.channel;
    let uav = &problem.instance.uav;
    let m = problem.nodes.len();
    assert_eq!(sca_point.len(), m);

    // Rate-bound data per terminal at the expansion point.
    let mut c1s = vec![0.0; m];
    let mut kappas = vec![0.0; m];
    let mut c2s = vec![0.0; m];
    let mut r_caps = vec![0.0; m];
    let mut free_idx = vec![usize::MAX; m];
    let mut free = Vec::new();
    for i in 0..m {
        let w = problem.terminal(i).position;
        let (coeffs, _) = taylor_bound(state.power[i], &sca_point[i], &sca_point[i], &w, ch);
        if coeffs.c2 < ch.rate_threshold_bps * (1.0 - 1e-9) || coeffs.c1 <= 0.0 {
            // The expansion point must satisfy the rate threshold.
            return Err(RefineError::LostFeasibility);
        }
        let kappa = coeffs.c2 + coeffs.c1 * coeffs.expansion_sq_dist;
        let r_cap = coeffs.expansion_sq_dist
            + (coeffs.c2 - ch.rate_threshold_bps).max(0.0) / coeffs.c1;
        c1s[i] = coeffs.c1;
        kappas[i] = kappa;
        c2s[i] = coeffs.c2;
        r_caps[i] = r_cap;
        if r_cap > 1e-12 {
            free_idx[i] = free.len();
            free.push(FreeGt {
                w,
                a: problem.hover_vtc_coeff(i, state.power[i]),
                b: problem.hover_energy_coeff(i, state.power[i]),
                c1: coeffs.c1,
                kappa,
                r_cap,
            });
        }
    }

    // Baseline: stay at the expansion point, slacks lifted to the bound.
    let baseline = || -> (Vec<Position>, Vec<f64>) { (sca_point.to_vec(), c2s.clone()) };
    let baseline_state = {
        let (h, s) = baseline();
        let mut b = state.clone();
        b.hover = h;
        b.slack = s;
        b
    };
    if free.is_empty() {
        return Ok((baseline_state.hover, baseline_state.slack));
    }

    // Leg terms at the current velocities; endpoints map to variables of
    // free terminals, fixed positions otherwise.
    let end_of = |node: usize| -> End {
        if node == 0 {
            End::Fixed(problem.instance.station.position)
        } else {
            let i = problem.nodes.iter().position(|&n| n == node).unwrap();
            if free_idx[i] == usize::MAX {
                End::Fixed(sca_point[i])
            } else {
                End::Var(free_idx[i])
            }
        }
    };
    let edges: Vec<EdgeTerm> = problem
        .edges
        .iter()
        .enumerate()
        .map(|(e, &(a, b))| EdgeTerm {
            a: end_of(a),
            b: end_of(b),
            t: velocity_poly(&uav.tau, state.velocity[e]),
            e: velocity_poly(&uav.psi, state.velocity[e]),
        })
        .collect();
    // Pinned terminals still consume hover energy against their bound.
    let fixed_budget: f64 = (0..m)
        .filter(|&i| free_idx[i] == usize::MAX)
        .map(|i| problem.hover_energy_coeff(i, state.power[i]) / c2s[i])
        .sum();
    let barrier = Barrier {
        edges,
        free,
        fixed_budget,
        f_max: uav.battery_capacity_j,
    };

    // Strictly interior start: pull each free hover toward its terminal
    // until its disc constraint has real slack.
    let nf = barrier.free.len();
    let mut u = DVector::zeros(2 * nf);
    for (fi, gt) in barrier.free.iter().enumerate() {
        let i = (0..m).find(|&i| free_idx[i] == fi).unwrap();
        let h = sca_point[i];
        let mut chosen = None;
        for alpha in [1.0, 0.999, 0.99, 0.9, 0.5, 0.0] {
            let cand = Position::new(
                gt.w.x + alpha * (h.x - gt.w.x),
                gt.w.y + alpha * (h.y - gt.w.y),
            );
            if gt.r_cap - cand.dist_sq(&gt.w) > 1e-9 * (1.0 + gt.r_cap) {
                chosen = Some(cand);
                break;
            }
        }
        let p = chosen.unwrap_or(gt.w);
        u[2 * fi] = p.x;
        u[2 * fi + 1] = p.y;
    }
    if barrier.budget_slack(&u) <= 1e-9 * barrier.f_max {
        // Budget-pinned iterate: no strictly interior start exists nearby.
        return Ok((baseline_state.hover, baseline_state.slack));
    }

    // Log-barrier outer loop.
    let n_constr = (nf + 1) as f64;
    let mut mu = 1.0;
    for _ in 0..OUTER_MAX {
        newton(&barrier, &mut u, mu);
        let f_now = barrier.objective(&u);
        if mu * n_constr <= GAP_REL * f_now.abs().max(1e-9) {
            break;
        }
        mu /= 10.0;
    }

    // Candidate state; keep it only if it beats the baseline on the true
    // surrogate objective.
    let mut cand = state.clone();
    for i in 0..m {
        if free_idx[i] != usize::MAX {
            let fi = free_idx[i];
            let h = Position::new(u[2 * fi], u[2 * fi + 1]);
            cand.hover[i] = h;
            cand.slack[i] = kappas[i] - c1s[i] * h.dist_sq(&problem.terminal(i).position);
        } else {
            cand.hover[i] = sca_point[i];
            cand.slack[i] = c2s[i];
        }
    }
    if surrogate_objective(problem, &cand) <= surrogate_objective(problem, &baseline_state) {
        Ok((cand.hover, cand.slack))
    } else {
        Ok((baseline_state.hover, baseline_state.slack))
    }
}

fn smooth_norm(dx: f64, dy: f64) -> f64 {
    (dx * dx + dy * dy + EPS_NORM * EPS_NORM).sqrt()
}

impl Barrier {
    fn pos_of(&self, end: &End, u: &DVector<f64>) -> Position {
        match end {
            End::Fixed(p) => *p,
            End::Var(fi) => Position::new(u[2 * fi], u[2 * fi + 1]),
        }
    }

    /// Objective value (hover + leg virtual time) over the free variables.
    fn objective(&self, u: &DVector<f64>) -> f64 {
        let mut f = 0.0;
        for (fi, gt) in self.free.iter().enumerate() {
            let q = Position::new(u[2 * fi], u[2 * fi + 1]).dist_sq(&gt.w);
            f += gt.a / (gt.kappa - gt.c1 * q);
        }
        for edge in &self.edges {
            let pa = self.pos_of(&edge.a, u);
            let pb = self.pos_of(&edge.b, u);
            f += edge.t * smooth_norm(pa.x - pb.x, pa.y - pb.y);
        }
        f
    }

    /// Energy headroom `f_max - E(u)`.
    fn budget_slack(&self, u: &DVector<f64>) -> f64 {
        let mut e = self.fixed_budget;
        for (fi, gt) in self.free.iter().enumerate() {
            let q = Position::new(u[2 * fi], u[2 * fi + 1]).dist_sq(&gt.w);
            e += gt.b / (gt.kappa - gt.c1 * q);
        }
        for edge in &self.edges {
            let pa = self.pos_of(&edge.a, u);
            let pb = self.pos_of(&edge.b, u);
            e += edge.e * smooth_norm(pa.x - pb.x, pa.y - pb.y);
        }
        self.f_max - e
    }

    /// Barrier value; `None` outside the strictly feasible region.
    fn value(&self, u: &DVector<f64>, mu: f64) -> Option<f64> {
        let mut phi = 0.0;
        for (fi, gt) in self.free.iter().enumerate() {
            let q = Position::new(u[2 * fi], u[2 * fi + 1]).dist_sq(&gt.w);
            let c = gt.r_cap - q;
            if c <= 0.0 {
                return None;
            }
            phi += gt.a / (gt.kappa - gt.c1 * q) - mu * c.ln();
        }
        for edge in &self.edges {
            let pa = self.pos_of(&edge.a, u);
            let pb = self.pos_of(&edge.b, u);
            phi += edge.t * smooth_norm(pa.x - pb.x, pa.y - pb.y);
        }
        let cb = self.budget_slack(u);
        if cb <= 0.0 {
            return None;
        }
        Some(phi - mu * cb.ln())
    }

    /// Barrier value, gradient and Hessian at `u`.
    fn grad_hess(&self, u: &DVector<f64>, mu: f64) -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        let n = u.len();
        let mut phi = 0.0;
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        // Budget pieces accumulate separately: the barrier needs grad E and
        // hess E against the headroom.
        let mut e_val = self.fixed_budget;
        let mut e_g = DVector::zeros(n);
        let mut e_h = DMatrix::zeros(n, n);

        for (fi, gt) in self.free.iter().enumerate() {
            let (ix, iy) = (2 * fi, 2 * fi + 1);
            let dx = u[ix] - gt.w.x;
            let dy = u[iy] - gt.w.y;
            let q = dx * dx + dy * dy;
            let c = gt.r_cap - q;
            if c <= 0.0 {
                return None;
            }
            let r = gt.kappa - gt.c1 * q;

            // Hover virtual time a/R and hover energy b/R.
            for (coeff, val, gv, hv) in [
                (gt.a, &mut phi, &mut g, &mut h),
                (gt.b, &mut e_val, &mut e_g, &mut e_h),
            ] {
                *val += coeff / r;
                let lin = 2.0 * coeff * gt.c1 / (r * r);
                gv[ix] += lin * dx;
                gv[iy] += lin * dy;
                let quad = 8.0 * coeff * gt.c1 * gt.c1 / (r * r * r);
                hv[(ix, ix)] += lin + quad * dx * dx;
                hv[(iy, iy)] += lin + quad * dy * dy;
                hv[(ix, iy)] += quad * dx * dy;
                hv[(iy, ix)] += quad * dx * dy;
            }

            // Disc barrier -mu ln(r_cap - q).
            phi -= mu * c.ln();
            let lin = 2.0 * mu / c;
            g[ix] += lin * dx;
            g[iy] += lin * dy;
            let quad = 4.0 * mu / (c * c);
            h[(ix, ix)] += lin + quad * dx * dx;
            h[(iy, iy)] += lin + quad * dy * dy;
            h[(ix, iy)] += quad * dx * dy;
            h[(iy, ix)] += quad * dx * dy;
        }

        for edge in &self.edges {
            let pa = self.pos_of(&edge.a, u);
            let pb = self.pos_of(&edge.b, u);
            let dx = pa.x - pb.x;
            let dy = pa.y - pb.y;
            let s = smooth_norm(dx, dy);
            phi += edge.t * s;
            e_val += edge.e * s;
            // Gradient direction d/s and curvature (I - (d/s)(d/s)^T)/s.
            let gx = dx / s;
            let gy = dy / s;
            let hxx = (1.0 - gx * gx) / s;
            let hyy = (1.0 - gy * gy) / s;
            let hxy = -gx * gy / s;
            let apply = |end: &End, sign: f64, gvec: &mut DVector<f64>, coeff: f64| {
                if let End::Var(fi) = end {
                    gvec[2 * fi] += sign * coeff * gx;
                    gvec[2 * fi + 1] += sign * coeff * gy;
                }
            };
            apply(&edge.a, 1.0, &mut g, edge.t);
            apply(&edge.b, -1.0, &mut g, edge.t);
            apply(&edge.a, 1.0, &mut e_g, edge.e);
            apply(&edge.b, -1.0, &mut e_g, edge.e);
            let apply_h = |ea: &End, eb: &End, sign: f64, hmat: &mut DMatrix<f64>, coeff: f64| {
                if let (End::Var(fa), End::Var(fb)) = (ea, eb) {
                    let (ax, ay) = (2 * fa, 2 * fa + 1);
                    let (bx, by) = (2 * fb, 2 * fb + 1);
                    hmat[(ax, bx)] += sign * coeff * hxx;
                    hmat[(ay, by)] += sign * coeff * hyy;
                    hmat[(ax, by)] += sign * coeff * hxy;
                    hmat[(ay, bx)] += sign * coeff * hxy;
                }
            };
            for (coeff, hmat) in [(edge.t, &mut h), (edge.e, &mut e_h)] {
                apply_h(&edge.a, &edge.a, 1.0, hmat, coeff);
                apply_h(&edge.b, &edge.b, 1.0, hmat, coeff);
                apply_h(&edge.a, &edge.b, -1.0, hmat, coeff);
                apply_h(&edge.b, &edge.a, -1.0, hmat, coeff);
            }
        }

        let cb = self.f_max - e_val;
        if cb <= 0.0 {
            return None;
        }
        phi -= mu * cb.ln();
        // -mu ln(f_max - E): gradient mu E'/cb, Hessian mu(E'E'^T/cb^2 + E''/cb).
        let scale = mu / cb;
        g += &e_g * scale;
        h += &e_h * scale;
        let outer_scale = mu / (cb * cb);
        h.ger(outer_scale, &e_g, &e_g, 1.0);
        Some((phi, g, h))
    }
}

/// Damped Newton to stationarity of the barrier at fixed `mu`.
fn newton(barrier: &Barrier, u: &mut DVector<f64>, mu: f64) {
    for _ in 0..NEWTON_MAX {
        let Some((phi, g, h)) = barrier.grad_hess(u, mu) else {
            return; // start drifted infeasible; caller's safeguard handles it
        };
        let step = match solve_spd(h, &-&g) {
            Some(s) => s,
            None => return,
        };
        let dec = g.dot(&step).abs();
        if 0.5 * dec <= 1e-10 * (1.0 + phi.abs()) {
            return;
        }
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha >= 1e-14 {
            let trial = &*u + &step * alpha;
            if let Some(val) = barrier.value(&trial, mu) {
                if val <= phi - 1e-4 * alpha * dec {
                    *u = trial;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return;
        }
    }
}

/// Cholesky solve with a growing ridge as fallback.
fn solve_spd(h: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let n = h.nrows();
    let mut ridge = 0.0;
    for _ in 0..8 {
        let mut hr = h.clone();
        if ridge > 0.0 {
            for i in 0..n {
                hr[(i, i)] += ridge;
            }
        }
        if let Some(chol) = hr.cholesky() {
            return Some(chol.solve(rhs));
        }
        let trace: f64 = (0..n).map(|i| h[(i, i)]).sum();
        ridge = if ridge == 0.0 {
            (trace / n as f64).max(1e-12) * 1e-10
        } else {
            ridge * 100.0
        };
    }
    None
}
