//! Executable flight plans: a visiting order fleshed out with per-leg
//! velocities, per-terminal transmit powers and hover points.

use serde::{Deserialize, Serialize};

use crate::model::{Instance, Position};
use crate::tspe::Trajectory;

/// One depot-anchored sub-tour, fully specified.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubTourPlan {
    /// Node sequence `[0, a, b, .., 0]`.
    pub order: Vec<usize>,
    /// One velocity per leg; `velocities_mps[l]` flies `order[l] -> order[l+1]`.
    pub velocities_mps: Vec<f64>,
    /// Hover point per interior node, aligned with `order[1..len-1]`.
    pub hovers: Vec<Position>,
    /// Transmit power per interior node, same alignment.
    pub powers_w: Vec<f64>,
}

/// A full mission: sub-tours executed in sequence, recharging at the
/// station between them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlightPlan {
    pub subtours: Vec<SubTourPlan>,
}

impl FlightPlan {
    /// Plan that flies a fixed cruise velocity everywhere and hovers right
    /// above each terminal. `powers[i]` is the transmit power of terminal
    /// `i + 1`.
    pub fn uniform(
        trajectory: &Trajectory,
        velocity_mps: f64,
        powers: &[f64],
        instance: &Instance,
    ) -> Self {
        let subtours = trajectory
            .subtours
            .iter()
            .map(|order| {
                let interior = &order[1..order.len() - 1];
                SubTourPlan {
                    order: order.clone(),
                    velocities_mps: vec![velocity_mps; order.len() - 1],
                    hovers: interior
                        .iter()
                        .map(|&v| instance.terminals[v - 1].position)
                        .collect(),
                    powers_w: interior.iter().map(|&v| powers[v - 1]).collect(),
                }
            })
            .collect();
        Self { subtours }
    }

    /// Interior visiting order flattened across sub-tours.
    pub fn visited_terminals(&self) -> impl Iterator<Item = usize> + '_ {
        self.subtours
            .iter()
            .flat_map(|s| s.order[1..s.order.len() - 1].iter().copied())
    }
}
