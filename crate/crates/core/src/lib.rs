//! voltpath: minimum-total-time trajectory planning for a rechargeable
//! data-dissemination UAV.
//!
//! A rotary-wing UAV carries pre-cached payloads to fixed ground terminals,
//! returning to a recharging station before its battery runs out. The cost
//! of a mission is its total time: flying plus hovering plus the recharging
//! time needed to put the spent energy back. Planning runs in two steps:
//!
//! 1. **Initialization** — pick a cruise speed and per-terminal transmit
//!    powers by scalar convex optimization, then route with an exact
//!    energy-constrained traveling-salesman solver (or a heuristic at
//!    larger scale) over a flow-based constraint system.
//! 2. **Refinement** — for each depot-anchored sub-tour, jointly re-optimize
//!    leg velocities, transmit powers and hover positions by block
//!    coordinate descent with a convex surrogate for the rate constraint.
//!
//! The [`validate`] module replays any plan step by step through the raw
//! physical formulas and reports every constraint violation, keeping the
//! solvers honest. The default `parallel` feature runs the data-parallel
//! outer loops on rayon; disabling it falls back to sequential iterators
//! with identical output.

mod exec;

pub mod model;
pub mod montecarlo;
pub mod plan;
pub mod refine;
pub mod scalar;
pub mod scenario;
pub mod strategy;
pub mod sweep;
pub mod tspe;
pub mod units;
pub mod validate;
