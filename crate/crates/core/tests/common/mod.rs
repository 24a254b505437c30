//! Shared test oracles: deliberately naive, independent re-implementations
//! used to pin expected values for the real solvers, plus an LP-text parser
//! and a bridge to the external HiGHS solver. Nothing here may call into
//! solver code paths beyond plain model formulas and weight lookups.

#![allow(dead_code)] // each test binary uses its own subset

use std::collections::BTreeMap;

use highs::{HighsModelStatus, RowProblem, Sense as HighsSense};
use voltpath::model::{ChannelParams, GroundTerminal, Instance, Position, Station, UavParams};
use voltpath::tspe::EdgeWeights;

pub fn instance_from(coords: &[(f64, f64)], data_bits: f64) -> Instance {
    let terminals = coords
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| GroundTerminal {
            id: i + 1,
            position: Position::new(x, y),
            data_bits,
        })
        .collect();
    Instance::new(
        Station {
            position: Position::new(0.0, 0.0),
        },
        terminals,
        ChannelParams::default(),
        UavParams::default(),
    )
    .unwrap()
}

/// Exhaustive grid argmin.
pub fn grid_argmin<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> f64 {
    let mut best_x = lo;
    let mut best = f(lo);
    let n = ((hi - lo) / step).ceil() as usize;
    for i in 1..=n {
        let x = (lo + step * i as f64).min(hi);
        let y = f(x);
        if y < best {
            best = y;
            best_x = x;
        }
    }
    best_x
}

/// Brute-force routing oracle: enumerate every set partition of the
/// terminals and, per block, every visiting permutation; keep the cheapest
/// energy-feasible assembly. Exponential; K <= 8 only.
pub fn brute_force_tspe(weights: &EdgeWeights, f_max: f64) -> Option<f64> {
    let k = weights.k();
    assert!(k <= 8, "oracle is exponential");
    let mut best: Option<f64> = None;
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    partitions(1, k, &mut blocks, &mut |blocks| {
        let mut total = 0.0;
        for block in blocks {
            match best_block_cost(weights, f_max, block) {
                Some(c) => total += c,
                None => return,
            }
        }
        if best.is_none_or(|b| total < b) {
            best = Some(total);
        }
    });
    best
}

/// Minimum virtual time of one block over all permutations whose tour
/// respects the energy budget.
fn best_block_cost(weights: &EdgeWeights, f_max: f64, block: &[usize]) -> Option<f64> {
    let mut perm: Vec<usize> = block.to_vec();
    let mut best: Option<f64> = None;
    permute(&mut perm, 0, &mut |p| {
        let mut vtc = 0.0;
        let mut energy = 0.0;
        let mut prev = 0usize;
        for &v in p {
            vtc += weights.flight_vtc(prev, v) + weights.hover_vtc(v);
            energy += weights.flight_energy(prev, v) + weights.hover_energy(v);
            prev = v;
        }
        vtc += weights.flight_vtc(prev, 0);
        energy += weights.flight_energy(prev, 0);
        if energy <= f_max && best.is_none_or(|b| vtc < b) {
            best = Some(vtc);
        }
    });
    best
}

fn permute<F: FnMut(&[usize])>(items: &mut Vec<usize>, start: usize, visit: &mut F) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}

/// Recursive set-partition enumeration of `{from..=to}`.
fn partitions<F: FnMut(&[Vec<usize>])>(
    from: usize,
    to: usize,
    blocks: &mut Vec<Vec<usize>>,
    visit: &mut F,
) {
    if from > to {
        visit(blocks);
        return;
    }
    for i in 0..blocks.len() {
        blocks[i].push(from);
        partitions(from + 1, to, blocks, visit);
        blocks[i].pop();
    }
    blocks.push(vec![from]);
    partitions(from + 1, to, blocks, visit);
    blocks.pop();
}

#[allow(dead_code)]
pub fn seeded_coords(rng: &mut impl rand::Rng, k: usize, radius: f64) -> Vec<(f64, f64)> {
    let mut coords = Vec::with_capacity(k);
    while coords.len() < k {
        let c: (f64, f64) = (
            rng.random_range(-radius..radius),
            rng.random_range(-radius..radius),
        );
        if !coords.contains(&c) {
            coords.push(c);
        }
    }
    coords
}

#[derive(Debug, PartialEq)]
pub enum Sense {
    Eq,
    Le,
}

#[derive(Debug, Default)]
pub struct ParsedLp {
    pub objective_offset: f64,
    pub objective: BTreeMap<String, f64>,
    pub rows: Vec<(String, BTreeMap<String, f64>, Sense, f64)>,
    pub bounds: BTreeMap<String, (f64, f64)>,
    pub binaries: Vec<String>,
}

impl Default for Sense {
    fn default() -> Self {
        Sense::Eq
    }
}

/// Minimal parser for the dialect the exporter writes.
pub fn parse_lp(text: &str) -> ParsedLp {
    let mut out = ParsedLp::default();
    let mut section = "";
    let mut pending: Vec<String> = Vec::new();
    let flush = |pending: &mut Vec<String>, out: &mut ParsedLp| {
        if pending.is_empty() {
            return;
        }
        let joined = pending.join(" ");
        pending.clear();
        let (name, rest) = joined.split_once(':').expect("row needs a name");
        let tokens: Vec<&str> = rest.split_whitespace().collect();
        let (sense, split_at) = if let Some(i) = tokens.iter().position(|t| *t == "=") {
            (Sense::Eq, i)
        } else if let Some(i) = tokens.iter().position(|t| *t == "<=") {
            (Sense::Le, i)
        } else {
            // objective row
            out.objective = parse_expr(&tokens);
            return;
        };
        let expr = parse_expr(&tokens[..split_at]);
        let rhs: f64 = tokens[split_at + 1].parse().unwrap();
        out.rows.push((name.trim().to_string(), expr, sense, rhs));
    };
    for raw in text.lines() {
        let line = raw.trim_end();
        if let Some(comment) = line.strip_prefix('\\') {
            if let Some((_, v)) = comment.split_once("objective_offset_s =") {
                out.objective_offset = v.trim().parse().unwrap();
            }
            continue;
        }
        let trimmed = line.trim();
        match trimmed {
            "Minimize" | "Subject To" | "Bounds" | "Binaries" | "End" => {
                flush(&mut pending, &mut out);
                section = match trimmed {
                    "Minimize" => "obj",
                    "Subject To" => "rows",
                    "Bounds" => "bounds",
                    "Binaries" => "bin",
                    _ => "",
                };
                continue;
            }
            "" => continue,
            _ => {}
        }
        match section {
            "obj" | "rows" => {
                if trimmed.contains(':') {
                    flush(&mut pending, &mut out);
                }
                pending.push(trimmed.to_string());
            }
            "bounds" => {
                let t: Vec<&str> = trimmed.split_whitespace().collect();
                assert_eq!(t[1], "<=");
                assert_eq!(t[3], "<=");
                out.bounds.insert(
                    t[2].to_string(),
                    (t[0].parse().unwrap(), t[4].parse().unwrap()),
                );
            }
            "bin" => {
                out.binaries
                    .extend(trimmed.split_whitespace().map(str::to_string));
            }
            _ => {}
        }
    }
    out
}

fn parse_expr(tokens: &[&str]) -> BTreeMap<String, f64> {
    let mut expr = BTreeMap::new();
    let mut sign = 1.0;
    let mut coeff: Option<f64> = None;
    for &t in tokens {
        match t {
            "+" => {
                sign = 1.0;
                coeff = None;
            }
            "-" => {
                sign = -1.0;
                coeff = None;
            }
            _ => {
                if let Ok(v) = t.parse::<f64>() {
                    coeff = Some(v);
                } else {
                    let c = sign * coeff.take().unwrap_or(1.0);
                    *expr.entry(t.to_string()).or_insert(0.0) += c;
                }
            }
        }
    }
    expr
}


/// Feeds the parsed LP to the HiGHS solver and returns the total time
/// (solver objective plus the documented hover offset).
pub fn solve_with_highs(parsed: &ParsedLp) -> f64 {
    let mut problem = RowProblem::default();
    let mut vars = BTreeMap::new();
    for name in &parsed.binaries {
        let obj = parsed.objective.get(name).copied().unwrap_or(0.0);
        vars.insert(name.clone(), problem.add_integer_column(obj, 0..=1));
    }
    for (name, &(lo, hi)) in &parsed.bounds {
        let obj = parsed.objective.get(name).copied().unwrap_or(0.0);
        vars.insert(name.clone(), problem.add_column(obj, lo..=hi));
    }
    for (_, expr, sense, rhs) in &parsed.rows {
        let terms: Vec<(highs::Col, f64)> =
            expr.iter().map(|(var, &c)| (vars[var], c)).collect();
        match sense {
            Sense::Eq => problem.add_row(*rhs..=*rhs, &terms),
            Sense::Le => problem.add_row(..=*rhs, &terms),
        };
    }
    let solved = problem.optimise(HighsSense::Minimise).solve();
    assert_eq!(solved.status(), HighsModelStatus::Optimal);
    solved.objective_value() + parsed.objective_offset
}
