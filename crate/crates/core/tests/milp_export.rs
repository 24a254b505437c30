//! Round-trips the exported LP text through an independent parser and
//! cross-solves the model with an external MILP solver (microlp), checking
//! the optimum against the in-tree exact solver.

mod common;

use common::{instance_from, parse_lp, seeded_coords, solve_with_highs, Sense};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use voltpath::scalar::optimal_cruise_velocity;
use voltpath::strategy::per_terminal_powers;
use voltpath::tspe::{build_edge_weights, exact_tspe, export_milp, EdgeWeights, MilpFormat};

fn reference_weights(k: usize, seed: u64) -> EdgeWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = seeded_coords(&mut rng, k, 1500.0);
    let inst = instance_from(&coords, 2e9);
    let v = optimal_cruise_velocity(&inst.uav, 1e-9).unwrap();
    let powers = per_terminal_powers(&inst, 1e-9).unwrap();
    build_edge_weights(&inst, v, &powers).unwrap()
}

fn fmt12_value(x: f64) -> f64 {
    // What the exporter prints, parsed back: 12 significant digits.
    if x == 0.0 {
        return 0.0;
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (11 - mag).clamp(0, 30) as usize;
    format!("{x:.decimals$}").parse().unwrap()
}

#[test]
fn lp_round_trip_reproduces_the_coefficient_matrix() {
    let w = reference_weights(3, 5);
    let f_max = 399_600.0;
    let mut buf = Vec::new();
    export_milp(&w, f_max, &mut buf, MilpFormat::Lp).unwrap();
    let parsed = parse_lp(&String::from_utf8(buf).unwrap());

    let n = w.n();
    // Objective: T^f on every arc, printed at 12 significant digits.
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let name = format!("x_{i}_{j}");
            assert_eq!(
                parsed.objective.get(&name).copied(),
                Some(fmt12_value(w.flight_vtc(i, j))),
                "objective coefficient of {name}"
            );
        }
    }
    // Hover offset comment carries the constant part.
    let hover: f64 = (1..n).map(|i| w.hover_vtc(i)).sum();
    assert!((parsed.objective_offset - fmt12_value(hover)).abs() <= 1e-9 * hover);

    // Row census and spot checks on every row family.
    let k = n - 1;
    assert_eq!(parsed.rows.len(), 1 + 4 * k + n * (n - 1));
    let row = |name: &str| {
        parsed
            .rows
            .iter()
            .find(|(r, ..)| r == name)
            .unwrap_or_else(|| panic!("missing row {name}"))
    };
    let (_, balance, sense, rhs) = row("rs_balance");
    assert_eq!(*sense, Sense::Eq);
    assert_eq!(*rhs, 0.0);
    for i in 1..n {
        assert_eq!(balance.get(&format!("x_0_{i}")), Some(&1.0));
        assert_eq!(balance.get(&format!("x_{i}_0")), Some(&-1.0));
    }
    for i in 1..n {
        let (_, flow, sense, rhs) = row(&format!("flow_{i}"));
        assert_eq!(*sense, Sense::Eq);
        assert_eq!(*rhs, 0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            assert_eq!(flow.get(&format!("z_{i}_{j}")), Some(&1.0));
            assert_eq!(flow.get(&format!("z_{j}_{i}")), Some(&-1.0));
            let c = w.hover_energy(i) + w.flight_energy(i, j);
            assert_eq!(
                flow.get(&format!("x_{i}_{j}")).copied(),
                Some(-fmt12_value(c))
            );
        }
        let (_, src, ..) = row(&format!("src_{i}"));
        assert_eq!(src.get(&format!("z_0_{i}")), Some(&1.0));
        assert_eq!(
            src.get(&format!("x_0_{i}")).copied(),
            Some(-fmt12_value(w.flight_energy(0, i)))
        );
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (_, cap, sense, _) = row(&format!("cap_{i}_{j}"));
            assert_eq!(*sense, Sense::Le);
            assert_eq!(cap.get(&format!("z_{i}_{j}")), Some(&1.0));
            assert_eq!(
                cap.get(&format!("x_{i}_{j}")).copied(),
                Some(-fmt12_value(f_max))
            );
            assert_eq!(parsed.bounds[&format!("z_{i}_{j}")], (0.0, fmt12_value(f_max)));
        }
    }
    assert_eq!(parsed.binaries.len(), n * (n - 1));
}

#[test]
fn external_solver_agrees_with_exact_routing() {
    for (k, seed) in [(5usize, 31u64), (6, 32), (7, 33)] {
        let w = reference_weights(k, seed);
        let f_max = 399_600.0;
        let exact = exact_tspe(&w, f_max).unwrap();
        let mut buf = Vec::new();
        export_milp(&w, f_max, &mut buf, MilpFormat::Lp).unwrap();
        let parsed = parse_lp(&String::from_utf8(buf).unwrap());
        let milp_total = solve_with_highs(&parsed);
        assert!(
            (milp_total - exact.total_vtc).abs() <= 1e-6 * exact.total_vtc.max(1.0),
            "K={k}: external {milp_total} vs exact {}",
            exact.total_vtc
        );
    }
}
