//! Reproducible scenario generation for benchmarks and sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    ChannelParams, GroundTerminal, Instance, ModelError, Position, Station, UavParams,
};

/// Deployment rectangle, station at its center.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Area {
    pub width_m: f64,
    pub height_m: f64,
}

impl Area {
    pub fn square(side_m: f64) -> Self {
        Self {
            width_m: side_m,
            height_m: side_m,
        }
    }

    /// Parses "2000" (square) or "2000x3000".
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((w, h)) = s.split_once(['x', 'X']) {
            Some(Self {
                width_m: w.trim().parse().ok()?,
                height_m: h.trim().parse().ok()?,
            })
        } else {
            s.parse().ok().map(Self::square)
        }
    }
}

impl Default for Area {
    fn default() -> Self {
        // Wide enough that typical missions exercise the battery budget.
        Self::square(2000.0)
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub instance: Instance,
    pub rng_seed: u64,
    pub area: Area,
}

/// Uniform i.i.d. terminal placement over `area`, station at the center,
/// identical payload everywhere. Deterministic per seed.
pub fn generate_scenario(
    k: usize,
    area: Area,
    seed: u64,
    channel: ChannelParams,
    uav: UavParams,
    data_bits: f64,
) -> Result<Scenario, ModelError> {
    if k == 0 {
        return Err(ModelError::NoTerminals);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terminals: Vec<GroundTerminal> = Vec::with_capacity(k);
    while terminals.len() < k {
        let position = Position::new(
            rng.random_range(-area.width_m / 2.0..=area.width_m / 2.0),
            rng.random_range(-area.height_m / 2.0..=area.height_m / 2.0),
        );
        // Exact duplicates would break the instance invariant; resample.
        if terminals.iter().any(|t| t.position == position) {
            continue;
        }
        terminals.push(GroundTerminal {
            id: terminals.len() + 1,
            position,
            data_bits,
        });
    }
    let instance = Instance::new(
        Station {
            position: Position::new(0.0, 0.0),
        },
        terminals,
        channel,
        uav,
    )?;
    Ok(Scenario {
        instance,
        rng_seed: seed,
        area,
    })
}
