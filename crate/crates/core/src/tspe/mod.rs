//! Energy-constrained routing: who is visited in which depot-anchored
//! sub-tour, and in what order.
//!
//! The constraint system is flow-based: binary arc indicators x plus
//! continuous per-arc energy labels z that force every cycle through the
//! station and cap cumulative consumption at the battery capacity. The
//! module ships an exact solver (subset dynamic programming), an insertion
//! heuristic for larger instances, an LP/MPS exporter so the model stays
//! externally checkable, and a validator for the flow solution itself.

mod exact;
mod export;
mod flow;
mod heuristic;

pub use exact::{exact_tspe, exact_tspe_limited, DEFAULT_EXACT_LIMIT};
pub use export::{export_milp, MilpFormat};
pub use flow::{
    decode_trajectory, encode_trajectory, validate_flow_solution, FlowSolution, FlowViolation,
};
pub use heuristic::heuristic_tspe;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    achievable_rate, flight_energy, flight_vtc, hover_energy, hover_vtc, Instance, ModelError,
};

#[derive(Debug, Error)]
pub enum TspeError {
    #[error("edge weights: {0}")]
    BadWeights(String),
    #[error("terminal {id}: its single-visit tour needs {required:.1} J but the battery holds {budget:.1} J")]
    InfeasibleTerminal {
        id: usize,
        required: f64,
        budget: f64,
    },
    #[error("{k} terminals exceed the exact-solver limit of {limit}; use the heuristic")]
    TooLarge { k: usize, limit: usize },
    #[error("terminal {id}: rate {rate:.4e} bit/s is below the threshold {threshold:.4e} bit/s")]
    RateBelowThreshold {
        id: usize,
        rate: f64,
        threshold: f64,
    },
    #[error("sub-tours must start and end at the station and cover every terminal exactly once")]
    BadCoverage,
    #[error("flow solution fails validation: {0:?}")]
    InvalidFlow(Vec<FlowViolation>),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Constant per-edge and per-node weights for one routing problem.
///
/// Node 0 is the station; nodes `1..=K` are the terminals. At the station
/// both hover entries are zero: recharging time is already accounted inside
/// every virtual-time entry.
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    n: usize,
    flight_energy: Vec<Vec<f64>>,
    flight_vtc: Vec<Vec<f64>>,
    hover_energy: Vec<f64>,
    hover_vtc: Vec<f64>,
}

impl EdgeWeights {
    pub fn new(
        flight_energy: Vec<Vec<f64>>,
        flight_vtc: Vec<Vec<f64>>,
        hover_energy: Vec<f64>,
        hover_vtc: Vec<f64>,
    ) -> Result<Self, TspeError> {
        let n = flight_energy.len();
        if n < 2 {
            return Err(TspeError::BadWeights("need at least two nodes".into()));
        }
        for (name, m) in [("flight_energy", &flight_energy), ("flight_vtc", &flight_vtc)] {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return Err(TspeError::BadWeights(format!("{name} is not {n}x{n}")));
            }
            for i in 0..n {
                if m[i][i] != 0.0 {
                    return Err(TspeError::BadWeights(format!(
                        "{name} diagonal entry {i} is {}",
                        m[i][i]
                    )));
                }
                for j in 0..n {
                    let (a, b) = (m[i][j], m[j][i]);
                    if !(a >= 0.0 && a.is_finite()) {
                        return Err(TspeError::BadWeights(format!("{name}[{i}][{j}] = {a}")));
                    }
                    if (a - b).abs() > 1e-9 * a.abs().max(b.abs()) {
                        return Err(TspeError::BadWeights(format!(
                            "{name} asymmetric at ({i},{j}): {a} vs {b}"
                        )));
                    }
                }
            }
        }
        if hover_energy.len() != n || hover_vtc.len() != n {
            return Err(TspeError::BadWeights("hover vectors must have length n".into()));
        }
        if hover_energy[0] != 0.0 || hover_vtc[0] != 0.0 {
            return Err(TspeError::BadWeights(
                "station hover energy and virtual time must be zero".into(),
            ));
        }
        if hover_energy[1..].iter().chain(&hover_vtc[1..]).any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(TspeError::BadWeights("hover entries must be non-negative".into()));
        }
        // Flight virtual time is metric-times-constant by construction, so
        // the triangle inequality must hold.
        #[cfg(debug_assertions)]
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    debug_assert!(
                        flight_vtc[i][j] <= flight_vtc[i][l] + flight_vtc[l][j] + 1e-6,
                        "triangle inequality violated at ({i},{l},{j})"
                    );
                }
            }
        }
        Ok(Self {
            n,
            flight_energy,
            flight_vtc,
            hover_energy,
            hover_vtc,
        })
    }

    /// Node count K+1 (station included).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Terminal count K.
    pub fn k(&self) -> usize {
        self.n - 1
    }

    #[inline]
    pub fn flight_energy(&self, i: usize, j: usize) -> f64 {
        self.flight_energy[i][j]
    }

    #[inline]
    pub fn flight_vtc(&self, i: usize, j: usize) -> f64 {
        self.flight_vtc[i][j]
    }

    #[inline]
    pub fn hover_energy(&self, i: usize) -> f64 {
        self.hover_energy[i]
    }

    #[inline]
    pub fn hover_vtc(&self, i: usize) -> f64 {
        self.hover_vtc[i]
    }

    /// Energy of one sub-tour `[0, a, .., 0]`: every leg plus every hover.
    pub fn subtour_energy(&self, nodes: &[usize]) -> f64 {
        let mut e = 0.0;
        for w in nodes.windows(2) {
            e += self.flight_energy[w[0]][w[1]];
        }
        for &v in &nodes[1..nodes.len().saturating_sub(1)] {
            e += self.hover_energy[v];
        }
        e
    }

    /// Virtual time of one sub-tour, legs plus hovers.
    pub fn subtour_vtc(&self, nodes: &[usize]) -> f64 {
        let mut t = 0.0;
        for w in nodes.windows(2) {
            t += self.flight_vtc[w[0]][w[1]];
        }
        for &v in &nodes[1..nodes.len().saturating_sub(1)] {
            t += self.hover_vtc[v];
        }
        t
    }
}

/// Builds routing weights for a fixed cruise velocity and fixed per-terminal
/// transmit powers, hovering directly above each terminal.
pub fn build_edge_weights(
    instance: &Instance,
    v_ini: f64,
    powers: &[f64],
) -> Result<EdgeWeights, TspeError> {
    let k = instance.k();
    assert_eq!(powers.len(), k, "one transmit power per terminal");
    let n = k + 1;
    let mut fe = vec![vec![0.0; n]; n];
    let mut fv = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = instance.node_position(i).dist(&instance.node_position(j));
            let e = flight_energy(d, v_ini, &instance.uav)?;
            let t = flight_vtc(d, v_ini, &instance.uav)?;
            fe[i][j] = e;
            fe[j][i] = e;
            fv[i][j] = t;
            fv[j][i] = t;
        }
    }
    let mut he = vec![0.0; n];
    let mut hv = vec![0.0; n];
    for (t, &p) in instance.terminals.iter().zip(powers) {
        let rate = achievable_rate(p, &t.position, &t.position, &instance.channel);
        if rate < instance.channel.rate_threshold_bps * (1.0 - 1e-9) {
            return Err(TspeError::RateBelowThreshold {
                id: t.id,
                rate,
                threshold: instance.channel.rate_threshold_bps,
            });
        }
        he[t.id] = hover_energy(p, t.data_bits, rate, &instance.uav)?;
        hv[t.id] = hover_vtc(p, t.data_bits, rate, &instance.uav)?;
    }
    EdgeWeights::new(fe, fv, he, hv)
}

/// A complete visiting order: depot-anchored sub-tours jointly covering all
/// terminals, with their total virtual time and per-sub-tour energy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    /// Each sub-tour starts and ends at node 0.
    pub subtours: Vec<Vec<usize>>,
    /// Total virtual time (hover + flight) in seconds.
    #[serde(rename = "vtc_s")]
    pub total_vtc: f64,
    /// Energy drawn from the battery per sub-tour, J.
    #[serde(rename = "energy_j_per_subtour")]
    pub energy_per_subtour: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory from raw node sequences, canonicalizing
    /// orientation and ordering sub-tours by decreasing energy so equal
    /// solutions always serialize identically.
    pub fn from_subtours(
        mut subtours: Vec<Vec<usize>>,
        weights: &EdgeWeights,
    ) -> Result<Self, TspeError> {
        let k = weights.k();
        let mut seen = vec![false; k + 1];
        for tour in &subtours {
            if tour.len() < 3 || tour[0] != 0 || *tour.last().unwrap() != 0 {
                return Err(TspeError::BadCoverage);
            }
            for &v in &tour[1..tour.len() - 1] {
                if v == 0 || v > k || seen[v] {
                    return Err(TspeError::BadCoverage);
                }
                seen[v] = true;
            }
        }
        if !seen[1..].iter().all(|&s| s) {
            return Err(TspeError::BadCoverage);
        }
        for tour in &mut subtours {
            let m = tour.len();
            if m > 3 && tour[1] > tour[m - 2] {
                tour.reverse();
            }
        }
        let mut with_energy: Vec<(f64, Vec<usize>)> = subtours
            .into_iter()
            .map(|t| (weights.subtour_energy(&t), t))
            .collect();
        with_energy.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then_with(|| a.1[1].cmp(&b.1[1]))
        });
        let energy_per_subtour: Vec<f64> = with_energy.iter().map(|(e, _)| *e).collect();
        let subtours: Vec<Vec<usize>> = with_energy.into_iter().map(|(_, t)| t).collect();
        let total_vtc = subtours.iter().map(|t| weights.subtour_vtc(t)).sum();
        Ok(Self {
            subtours,
            total_vtc,
            energy_per_subtour,
        })
    }
}
