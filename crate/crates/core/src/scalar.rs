//! One-dimensional convex minimization and the fractional-programming
//! transform used to pick the cruise velocity and per-terminal transmit
//! powers before any routing happens.

use thiserror::Error;

use crate::model::{
    achievable_rate, power_for_rate, velocity_poly, ChannelParams, GroundTerminal, Position,
    UavParams,
};

#[derive(Debug, Error)]
pub enum ScalarError {
    #[error("invalid bracket [{lo}, {hi}]")]
    BadBracket { lo: f64, hi: f64 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("terminal {id}: rate threshold unreachable even at p_max ({rate_at_max:.3e} < {threshold:.3e} bit/s)")]
    InfeasibleTerminal {
        id: usize,
        rate_at_max: f64,
        threshold: f64,
    },
    #[error("ratio iteration failed to converge within {max_iter} iterations (residual {residual:.3e})")]
    NoConvergence { max_iter: usize, residual: f64 },
}

/// Result of a bracketed scalar minimization.
#[derive(Debug, Clone, Copy)]
pub struct ScalarSolveReport {
    pub argmin: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Result of the parametric ratio minimization for one terminal.
#[derive(Debug, Clone, Copy)]
pub struct DinkelbachReport {
    /// Minimizing transmit power, W.
    pub optimal_p: f64,
    /// Final ratio parameter (the minimized hover virtual time, s).
    pub lambda: f64,
    pub iterations: usize,
    /// |min_p numerator(p) - lambda * denominator(p)| at the final lambda,
    /// normalized by the denominator so it is commensurate with lambda.
    pub residual: f64,
}

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9; // 1/phi

/// Golden-section search for the minimum of a strictly unimodal `f` on
/// `[lo, hi]`. The bracket is shrunk until its width is at most `tol`.
pub fn minimize_unimodal<F>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<ScalarSolveReport, ScalarError>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(ScalarError::BadTolerance(tol));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(ScalarError::BadBracket { lo, hi });
    }
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - INV_GOLDEN * (b - a);
    let mut x2 = a + INV_GOLDEN * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 2;
    while b - a > tol && iterations < 400 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_GOLDEN * (b - a);
            f2 = f(x2);
        }
        iterations += 1;
    }
    // Also consider the bracket ends: the minimum of a monotone objective
    // sits on the boundary, which interior probes alone would miss.
    let fa = f(a);
    let fb = f(b);
    let (mut argmin, mut value) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    if fa < value {
        argmin = a;
        value = fa;
    }
    if fb < value {
        argmin = b;
        value = fb;
    }
    Ok(ScalarSolveReport {
        argmin,
        value,
        iterations,
        converged: b - a <= tol,
    })
}

/// Smallest sensible velocity bracket edge: the per-meter polynomials
/// diverge at v -> 0, so the minimizer is never near zero.
const V_BRACKET_LO: f64 = 1e-3;

/// Velocity minimizing the flight virtual time per meter, clipped to the
/// admissible range. This is the cruise speed used to seed routing.
pub fn optimal_cruise_velocity(uav: &UavParams, tol: f64) -> Result<f64, ScalarError> {
    let report = minimize_unimodal(
        |v| velocity_poly(&uav.tau, v),
        V_BRACKET_LO.min(uav.v_max_mps / 2.0),
        uav.v_max_mps,
        tol,
    )?;
    Ok(report.argmin)
}

/// Velocity minimizing the flight energy per meter.
pub fn energy_efficient_velocity(uav: &UavParams, tol: f64) -> Result<f64, ScalarError> {
    let report = minimize_unimodal(
        |v| velocity_poly(&uav.psi, v),
        V_BRACKET_LO.min(uav.v_max_mps / 2.0),
        uav.v_max_mps,
        tol,
    )?;
    Ok(report.argmin)
}

/// Hover virtual time for terminal `gt` as a function of transmit power,
/// with the hover point held at `hover`.
#[cfg(test)]
fn hover_vtc_of_power(
    p: f64,
    gt: &GroundTerminal,
    hover: &Position,
    ch: &ChannelParams,
    uav: &UavParams,
) -> f64 {
    let rate = achievable_rate(p, hover, &gt.position, ch);
    gt.data_bits * (uav.transmit_coeff * p + uav.hover_power_w + uav.recharge_power_w)
        / (uav.recharge_power_w * rate)
}

/// Minimizes the hover virtual time of one terminal over the transmit power
/// box, using the parametric (ratio) transform: each iteration solves
/// `min_p numerator(p) - lambda * denominator(p)` (convex, by golden
/// section) and updates lambda to the achieved ratio. The lambda sequence
/// decreases monotonically to the optimal ratio.
pub fn optimal_hover_power(
    gt: &GroundTerminal,
    hover: &Position,
    ch: &ChannelParams,
    uav: &UavParams,
    tol: f64,
) -> Result<DinkelbachReport, ScalarError> {
    let (report, _) = dinkelbach_with_trace(gt, hover, ch, uav, tol)?;
    Ok(report)
}

pub(crate) fn dinkelbach_with_trace(
    gt: &GroundTerminal,
    hover: &Position,
    ch: &ChannelParams,
    uav: &UavParams,
    tol: f64,
) -> Result<(DinkelbachReport, Vec<f64>), ScalarError> {
    if !(tol > 0.0) {
        return Err(ScalarError::BadTolerance(tol));
    }
    let rate_at_max = achievable_rate(ch.p_max_w, hover, &gt.position, ch);
    if rate_at_max < ch.rate_threshold_bps {
        return Err(ScalarError::InfeasibleTerminal {
            id: gt.id,
            rate_at_max,
            threshold: ch.rate_threshold_bps,
        });
    }
    let offset_sq = hover.dist_sq(&gt.position);
    let p_lo = power_for_rate(ch.rate_threshold_bps, offset_sq, ch).min(ch.p_max_w);
    let p_hi = ch.p_max_w;

    // numerator(p) = D (eta p + P^h + P^r); denominator(p) = P^r * rate(p).
    let numerator =
        |p: f64| gt.data_bits * (uav.transmit_coeff * p + uav.hover_power_w + uav.recharge_power_w);
    let denominator =
        |p: f64| uav.recharge_power_w * achievable_rate(p, hover, &gt.position, ch);

    let mut p = p_hi;
    let mut lambda = numerator(p) / denominator(p);
    let mut lambdas = vec![lambda];
    let max_iter = 100;
    let inner_tol = ((p_hi - p_lo) * 1e-12).max(1e-18);
    for iterations in 1..=max_iter {
        let parametric = |q: f64| numerator(q) - lambda * denominator(q);
        let sub = if p_hi - p_lo <= inner_tol {
            ScalarSolveReport {
                argmin: p_lo,
                value: parametric(p_lo),
                iterations: 0,
                converged: true,
            }
        } else {
            minimize_unimodal(parametric, p_lo, p_hi, inner_tol)?
        };
        p = sub.argmin;
        let residual = sub.value.abs() / denominator(p);
        if residual <= tol * (1.0 + lambda.abs()) {
            return Ok((
                DinkelbachReport {
                    optimal_p: p,
                    lambda,
                    iterations,
                    residual,
                },
                lambdas,
            ));
        }
        lambda = numerator(p) / denominator(p);
        debug_assert!(
            lambda <= lambdas.last().unwrap() * (1.0 + 1e-12),
            "ratio parameter must not increase"
        );
        lambdas.push(lambda);
    }
    Err(ScalarError::NoConvergence {
        max_iter,
        residual: (numerator(p) - lambda * denominator(p)).abs() / denominator(p),
    })
}
