//! Insertion heuristic for instances beyond the exact-solver limit.
//!
//! Construction is cheapest feasible insertion: repeatedly place the
//! terminal whose best energy-feasible insertion raises total virtual time
//! the least, opening a fresh sub-tour when nothing fits. Improvement
//! alternates intra-tour 2-opt with inter-tour relocation, never accepting
//! a move that breaks a sub-tour's energy budget. A couple of seeded
//! random-order restarts guard against bad construction orders; the best
//! result wins, deterministically for a given seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EdgeWeights, Trajectory, TspeError};

const RESTARTS: usize = 3;
const EPS: f64 = 1e-9;

pub fn heuristic_tspe(
    weights: &EdgeWeights,
    f_max: f64,
    seed: u64,
) -> Result<Trajectory, TspeError> {
    let k = weights.k();
    for i in 1..=k {
        let required = 2.0 * weights.flight_energy(0, i) + weights.hover_energy(i);
        if required > f_max {
            return Err(TspeError::InfeasibleTerminal {
                id: i,
                required,
                budget: f_max,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    for restart in 0..RESTARTS {
        let order = if restart == 0 {
            None
        } else {
            let mut order: Vec<usize> = (1..=k).collect();
            order.shuffle(&mut rng);
            Some(order)
        };
        let mut tours = construct(weights, f_max, order.as_deref());
        improve(weights, f_max, &mut tours);
        let total: f64 = tours.iter().map(|t| weights.subtour_vtc(t)).sum();
        if best.as_ref().is_none_or(|(b, _)| total < b - EPS) {
            best = Some((total, tours));
        }
    }
    Trajectory::from_subtours(best.unwrap().1, weights)
}

/// Cheapest feasible insertion. With `order = None` the globally cheapest
/// (terminal, position) pair is inserted each round; with a fixed order the
/// terminals are placed one by one at their own cheapest position.
fn construct(weights: &EdgeWeights, f_max: f64, order: Option<&[usize]>) -> Vec<Vec<usize>> {
    let k = weights.k();
    let mut tours: Vec<Vec<usize>> = Vec::new();
    let mut energies: Vec<f64> = Vec::new();

    match order {
        Some(order) => {
            for &g in order {
                match cheapest_insertion(weights, f_max, g, &tours, &energies) {
                    Some((t, pos, _, de)) => {
                        tours[t].insert(pos, g);
                        energies[t] += de;
                    }
                    None => {
                        tours.push(vec![0, g, 0]);
                        energies
                            .push(2.0 * weights.flight_energy(0, g) + weights.hover_energy(g));
                    }
                }
            }
        }
        None => {
            let mut remaining: Vec<usize> = (1..=k).collect();
            while !remaining.is_empty() {
                // Globally cheapest feasible insertion this round; terminals
                // with no feasible slot fall back to a new tour, largest
                // singleton first.
                let mut pick: Option<(f64, usize, usize, usize, f64)> = None;
                for (ri, &g) in remaining.iter().enumerate() {
                    if let Some((t, pos, dv, de)) =
                        cheapest_insertion(weights, f_max, g, &tours, &energies)
                    {
                        if pick.as_ref().is_none_or(|p| dv < p.0 - EPS) {
                            pick = Some((dv, ri, t, pos, de));
                        }
                    }
                }
                match pick {
                    Some((_, ri, t, pos, de)) => {
                        let g = remaining.swap_remove(ri);
                        tours[t].insert(pos, g);
                        energies[t] += de;
                    }
                    None => {
                        // Open a tour for the most expensive remaining stop.
                        let (ri, _) = remaining
                            .iter()
                            .enumerate()
                            .map(|(ri, &g)| {
                                (ri, weights.hover_vtc(g) + 2.0 * weights.flight_vtc(0, g))
                            })
                            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                            .unwrap();
                        let g = remaining.swap_remove(ri);
                        tours.push(vec![0, g, 0]);
                        energies
                            .push(2.0 * weights.flight_energy(0, g) + weights.hover_energy(g));
                    }
                }
            }
        }
    }
    tours
}

/// Best feasible insertion position for terminal `g` across all tours:
/// `(tour, position, delta_vtc, delta_energy)`.
fn cheapest_insertion(
    weights: &EdgeWeights,
    f_max: f64,
    g: usize,
    tours: &[Vec<usize>],
    energies: &[f64],
) -> Option<(usize, usize, f64, f64)> {
    let mut best: Option<(usize, usize, f64, f64)> = None;
    for (ti, tour) in tours.iter().enumerate() {
        for pos in 1..tour.len() {
            let (a, b) = (tour[pos - 1], tour[pos]);
            let de = weights.flight_energy(a, g) + weights.flight_energy(g, b)
                - weights.flight_energy(a, b)
                + weights.hover_energy(g);
            if energies[ti] + de > f_max {
                continue;
            }
            let dv = weights.flight_vtc(a, g) + weights.flight_vtc(g, b)
                - weights.flight_vtc(a, b)
                + weights.hover_vtc(g);
            if best.as_ref().is_none_or(|p| dv < p.2 - EPS) {
                best = Some((ti, pos, dv, de));
            }
        }
    }
    best
}

fn improve(weights: &EdgeWeights, f_max: f64, tours: &mut Vec<Vec<usize>>) {
    let mut moves = 0usize;
    loop {
        let improved = two_opt_pass(weights, f_max, tours) || relocate_pass(weights, f_max, tours);
        moves += 1;
        if !improved || moves > 10_000 {
            break;
        }
    }
    tours.retain(|t| t.len() > 2);
}

/// One first-improvement 2-opt sweep over every tour. Segment reversal
/// keeps the visit set, so only the energy delta needs re-checking.
fn two_opt_pass(weights: &EdgeWeights, f_max: f64, tours: &mut [Vec<usize>]) -> bool {
    let mut improved = false;
    for tour in tours.iter_mut() {
        let m = tour.len();
        if m < 5 {
            continue;
        }
        let mut energy = weights.subtour_energy(tour);
        let mut restart = true;
        while restart {
            restart = false;
            'scan: for i in 1..m - 2 {
                for j in (i + 1)..m - 1 {
                    let (a, b, c, d) = (tour[i - 1], tour[i], tour[j], tour[j + 1]);
                    let dv = weights.flight_vtc(a, c) + weights.flight_vtc(b, d)
                        - weights.flight_vtc(a, b)
                        - weights.flight_vtc(c, d);
                    if dv >= -EPS {
                        continue;
                    }
                    let de = weights.flight_energy(a, c) + weights.flight_energy(b, d)
                        - weights.flight_energy(a, b)
                        - weights.flight_energy(c, d);
                    if energy + de > f_max {
                        continue;
                    }
                    tour[i..=j].reverse();
                    energy += de;
                    improved = true;
                    restart = true;
                    break 'scan;
                }
            }
        }
    }
    improved
}

/// Moves single terminals between tours when that lowers total virtual time
/// and the destination stays within budget.
fn relocate_pass(weights: &EdgeWeights, f_max: f64, tours: &mut Vec<Vec<usize>>) -> bool {
    let mut energies: Vec<f64> = tours.iter().map(|t| weights.subtour_energy(t)).collect();
    let mut improved = false;
    let mut restart = true;
    while restart {
        restart = false;
        'outer: for src in 0..tours.len() {
            for pos in 1..tours[src].len().saturating_sub(1) {
                let g = tours[src][pos];
                let (a, b) = (tours[src][pos - 1], tours[src][pos + 1]);
                let gain_v = weights.flight_vtc(a, g) + weights.flight_vtc(g, b)
                    - weights.flight_vtc(a, b);
                let gain_e = weights.flight_energy(a, g) + weights.flight_energy(g, b)
                    - weights.flight_energy(a, b)
                    + weights.hover_energy(g);
                for dst in 0..tours.len() {
                    if dst == src {
                        continue;
                    }
                    for ins in 1..tours[dst].len() {
                        let (u, v) = (tours[dst][ins - 1], tours[dst][ins]);
                        let cost_v = weights.flight_vtc(u, g) + weights.flight_vtc(g, v)
                            - weights.flight_vtc(u, v);
                        if cost_v - gain_v >= -EPS {
                            continue;
                        }
                        let cost_e = weights.flight_energy(u, g) + weights.flight_energy(g, v)
                            - weights.flight_energy(u, v)
                            + weights.hover_energy(g);
                        if energies[dst] + cost_e > f_max {
                            continue;
                        }
                        tours[src].remove(pos);
                        tours[dst].insert(ins, g);
                        energies[src] -= gain_e;
                        energies[dst] += cost_e;
                        improved = true;
                        restart = true;
                        break 'outer;
                    }
                }
            }
        }
        if restart {
            // Drop tours emptied by relocation before the next sweep.
            let mut i = 0;
            while i < tours.len() {
                if tours[i].len() <= 2 {
                    tours.remove(i);
                    energies.remove(i);
                } else {
                    i += 1;
                }
            }
        }
    }
    improved
}
