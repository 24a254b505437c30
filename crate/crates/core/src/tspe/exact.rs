//! Exact routing by subset dynamic programming.
//!
//! Stage one is Held-Karp over every subset of terminals: `path[mask][j]` is
//! the cheapest flight virtual time of a path from the station through
//! exactly `mask`, ending at `j`. Closing each subset's cheapest path back
//! to the station yields, per subset, the optimal sub-tour and its energy.
//! Because per-edge virtual time and energy are both distance times a
//! constant at a fixed cruise velocity, the min-time cycle is also the
//! min-energy cycle, so subset feasibility against the battery capacity is
//! decided exactly. Stage two is a set-partition DP choosing the feasible
//! partition of the terminals with the smallest total virtual time.
//!
//! Subsets within a popcount layer are independent, so the Held-Karp layers
//! and the per-subset cycle closing fan out in parallel; ties resolve by
//! node/subset index, keeping results identical in both execution modes.

use crate::exec;

use super::{EdgeWeights, Trajectory, TspeError};

/// Largest K the exact solver accepts by default. The subset DP costs
/// roughly `3^K` plus `2^K K^2` and stays interactive up to here.
pub const DEFAULT_EXACT_LIMIT: usize = 14;

/// Optimal trajectory under the battery capacity `f_max`, with the default
/// size limit.
pub fn exact_tspe(weights: &EdgeWeights, f_max: f64) -> Result<Trajectory, TspeError> {
    exact_tspe_limited(weights, f_max, DEFAULT_EXACT_LIMIT)
}

/// Optimal trajectory with an explicit exact-solver size limit.
pub fn exact_tspe_limited(
    weights: &EdgeWeights,
    f_max: f64,
    limit: usize,
) -> Result<Trajectory, TspeError> {
    let k = weights.k();
    if k > limit {
        return Err(TspeError::TooLarge { k, limit });
    }
    check_singletons(weights, f_max)?;

    let full: usize = 1 << k;
    // Held-Karp path table, flattened: entry (mask, j) at mask*k + (j-1).
    let mut path = vec![f64::INFINITY; full * k];
    let mut parent = vec![0u8; full * k];
    for j in 1..=k {
        path[(1 << (j - 1)) * k + (j - 1)] = weights.flight_vtc(0, j);
    }

    let mut by_count: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
    for mask in 1..full {
        by_count[mask.count_ones() as usize].push(mask);
    }

    for size in 2..=k {
        let layer: Vec<(usize, Vec<(f64, u8)>)> = exec::map_collect(&by_count[size], |&mask| {
            let mut entries = Vec::with_capacity(size);
            for j in 1..=k {
                if mask & (1 << (j - 1)) == 0 {
                    continue;
                }
                let rest = mask ^ (1 << (j - 1));
                let mut best = f64::INFINITY;
                let mut best_prev = 0u8;
                for l in 1..=k {
                    if rest & (1 << (l - 1)) == 0 {
                        continue;
                    }
                    let c = path[rest * k + (l - 1)] + weights.flight_vtc(l, j);
                    if c < best {
                        best = c;
                        best_prev = l as u8;
                    }
                }
                entries.push((best, best_prev));
            }
            (mask, entries)
        });
        for (mask, entries) in layer {
            let mut it = entries.into_iter();
            for j in 1..=k {
                if mask & (1 << (j - 1)) == 0 {
                    continue;
                }
                let (cost, prev) = it.next().unwrap();
                path[mask * k + (j - 1)] = cost;
                parent[mask * k + (j - 1)] = prev;
            }
        }
    }

    // Close each subset's cheapest path into a cycle; evaluate its virtual
    // time and energy along the reconstructed tour.
    let closed: Vec<(f64, f64)> = exec::map_indexed(full, |mask| {
        if mask == 0 {
            return (f64::INFINITY, f64::INFINITY);
        }
        let mut best = f64::INFINITY;
        let mut best_end = 0usize;
        for j in 1..=k {
            if mask & (1 << (j - 1)) == 0 {
                continue;
            }
            let c = path[mask * k + (j - 1)] + weights.flight_vtc(j, 0);
            if c < best {
                best = c;
                best_end = j;
            }
        }
        let nodes = reconstruct(&parent, mask, best_end, k);
        (weights.subtour_vtc(&nodes), weights.subtour_energy(&nodes))
    });

    // Partition DP: dp[mask] = least total virtual time covering `mask`.
    // Every candidate first block contains the lowest set bit, and ties
    // prefer the numerically smallest block.
    let mut dp = vec![f64::INFINITY; full];
    let mut choice = vec![0usize; full];
    dp[0] = 0.0;
    for mask in 1..full {
        let anchor = mask & mask.wrapping_neg();
        let mut best = f64::INFINITY;
        let mut best_block = 0usize;
        let mut block = mask;
        while block > 0 {
            if block & anchor != 0 && closed[block].1 <= f_max {
                let c = dp[mask ^ block] + closed[block].0;
                if c < best || (c == best && block < best_block) {
                    best = c;
                    best_block = block;
                }
            }
            block = (block - 1) & mask;
        }
        dp[mask] = best;
        choice[mask] = best_block;
    }

    if !dp[full - 1].is_finite() {
        // Singletons are feasible, so a partition always exists.
        unreachable!("partition DP found no feasible cover despite feasible singletons");
    }

    let mut subtours = Vec::new();
    let mut mask = full - 1;
    while mask > 0 {
        let block = choice[mask];
        let mut best = f64::INFINITY;
        let mut best_end = 0usize;
        for j in 1..=k {
            if block & (1 << (j - 1)) == 0 {
                continue;
            }
            let c = path[block * k + (j - 1)] + weights.flight_vtc(j, 0);
            if c < best {
                best = c;
                best_end = j;
            }
        }
        subtours.push(reconstruct(&parent, block, best_end, k));
        mask ^= block;
    }
    Trajectory::from_subtours(subtours, weights)
}

fn check_singletons(weights: &EdgeWeights, f_max: f64) -> Result<(), TspeError> {
    for i in 1..=weights.k() {
        let required = 2.0 * weights.flight_energy(0, i) + weights.hover_energy(i);
        if required > f_max {
            return Err(TspeError::InfeasibleTerminal {
                id: i,
                required,
                budget: f_max,
            });
        }
    }
    Ok(())
}

/// Walks the parent table back from `end`, returning `[0, .., end, 0]`.
fn reconstruct(parent: &[u8], mask: usize, end: usize, k: usize) -> Vec<usize> {
    let mut rev = vec![0usize, end];
    let mut m = mask;
    let mut cur = end;
    while m.count_ones() > 1 {
        let prev = parent[m * k + (cur - 1)] as usize;
        m ^= 1 << (cur - 1);
        cur = prev;
        rev.push(cur);
    }
    rev.push(0);
    rev.reverse();
    rev
}

#[cfg(test)]
mod tests {
    use super::super::{build_edge_weights, tests::small_instance};
    use super::*;

    #[test]
    fn single_terminal_formula() {
        let inst = small_instance(&[(700.0, -300.0)]);
        let w = build_edge_weights(&inst, 20.0, &[0.1]).unwrap();
        let t = exact_tspe(&w, f64::INFINITY).unwrap();
        assert_eq!(t.subtours, vec![vec![0, 1, 0]]);
        let expected = w.hover_vtc(1) + 2.0 * w.flight_vtc(0, 1);
        assert!((t.total_vtc - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn infeasible_singleton_is_named() {
        let inst = small_instance(&[(100.0, 0.0), (25_000.0, 0.0)]);
        let w = build_edge_weights(&inst, 20.0, &[0.1, 0.1]).unwrap();
        match exact_tspe(&w, 399_600.0) {
            Err(TspeError::InfeasibleTerminal { id, .. }) => assert_eq!(id, 2),
            other => panic!("expected infeasible terminal, got {other:?}"),
        }
    }

    #[test]
    fn size_limit_enforced() {
        let coords: Vec<(f64, f64)> = (0..16).map(|i| (100.0 + i as f64 * 50.0, 60.0)).collect();
        let inst = small_instance(&coords);
        let w = build_edge_weights(&inst, 20.0, &vec![0.1; 16]).unwrap();
        assert!(matches!(
            exact_tspe(&w, f64::INFINITY),
            Err(TspeError::TooLarge { k: 16, limit: 14 })
        ));
        assert!(exact_tspe_limited(&w, f64::INFINITY, 16).is_ok());
    }

    #[test]
    fn relaxed_capacity_gives_one_subtour() {
        let inst = small_instance(&[
            (400.0, 100.0),
            (-250.0, 330.0),
            (600.0, -580.0),
            (-90.0, -410.0),
            (150.0, 720.0),
        ]);
        let w = build_edge_weights(&inst, 22.0, &[0.1; 5]).unwrap();
        let t = exact_tspe(&w, f64::INFINITY).unwrap();
        assert_eq!(t.subtours.len(), 1, "relaxed capacity must merge everything");
    }

    #[test]
    fn shrinking_capacity_never_reduces_total_time() {
        let inst = small_instance(&[
            (900.0, 100.0),
            (-750.0, 630.0),
            (600.0, -980.0),
            (-90.0, -910.0),
            (450.0, 820.0),
            (-1000.0, -200.0),
        ]);
        let w = build_edge_weights(&inst, 22.0, &[0.12; 6]).unwrap();
        let mut last = 0.0;
        for i in 0..8 {
            let cap = 399_600.0 * (1.0 - 0.09 * i as f64);
            match exact_tspe(&w, cap) {
                Ok(t) => {
                    assert!(
                        t.total_vtc >= last - 1e-9 * t.total_vtc,
                        "cap {cap}: vtc dropped from {last} to {}",
                        t.total_vtc
                    );
                    last = t.total_vtc;
                }
                Err(_) => break, // instance became infeasible outright
            }
        }
    }
}
