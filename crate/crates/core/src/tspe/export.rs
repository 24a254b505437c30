//! LP/MPS text export of the routing model, so the flow formulation stays
//! first-class and can be cross-checked with any external MILP solver.
//!
//! Directed reading: one binary `x_i_j` and one continuous `z_i_j` per
//! ordered node pair. Rows, with node 0 the station and K terminals:
//!
//! * `rs_balance`          (1 row)   station departures equal returns
//! * `indeg_j` / `outdeg_j` (2K rows) each terminal entered and left once
//! * `flow_i`              (K rows)  out-flow minus in-flow of terminal i
//!   equals hover energy plus outgoing-leg energy, arc-activated
//! * `src_i`               (K rows)  station departure arcs carry exactly
//!   the first leg's energy
//! * `cap_i_j`       (n(n-1) rows)  `z_i_j <= F^max x_i_j`
//!
//! `z >= 0` stays in the bounds section, `x` are declared binary. Totals:
//! `1 + 4K + n(n-1)` rows and `2 n(n-1)` variables for `n = K + 1`.
//!
//! The objective covers the flight legs only; the constant hover
//! virtual-time offset is written as a structured comment
//! (`objective_offset_s = <value>`) to be added back after solving.
//! Coefficients are fixed-point decimals with 12 significant digits.

use std::io::{self, Write};

use super::EdgeWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpFormat {
    Lp,
    Mps,
}

impl MilpFormat {
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "lp" => Some(Self::Lp),
            "mps" => Some(Self::Mps),
            _ => None,
        }
    }
}

/// Fixed-point decimal with 12 significant digits.
fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (11 - mag).clamp(0, 30) as usize;
    format!("{x:.decimals$}")
}

struct Model {
    n: usize,
    hover_offset: f64,
}

impl Model {
    fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
    }
}

/// Writes the routing MILP for `weights` under capacity `f_max` to `sink`.
pub fn export_milp<W: Write>(
    weights: &EdgeWeights,
    f_max: f64,
    sink: &mut W,
    format: MilpFormat,
) -> io::Result<()> {
    if !f_max.is_finite() || f_max <= 0.0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("capacity must be finite and positive, got {f_max}"),
        ));
    }
    let model = Model {
        n: weights.n(),
        hover_offset: (1..weights.n()).map(|i| weights.hover_vtc(i)).sum(),
    };
    match format {
        MilpFormat::Lp => write_lp(weights, f_max, &model, sink),
        MilpFormat::Mps => write_mps(weights, f_max, &model, sink),
    }
}

fn write_lp<W: Write>(
    weights: &EdgeWeights,
    f_max: f64,
    model: &Model,
    out: &mut W,
) -> io::Result<()> {
    let n = model.n;
    writeln!(out, "\\ energy-constrained routing over {} terminals", n - 1)?;
    writeln!(
        out,
        "\\ objective covers flight virtual time; add the constant hover offset:"
    )?;
    writeln!(out, "\\ objective_offset_s = {}", fmt12(model.hover_offset))?;
    writeln!(out, "Minimize")?;
    let obj_terms: Vec<String> = model
        .arcs()
        .map(|(i, j)| format!("{} x_{i}_{j}", fmt12(weights.flight_vtc(i, j))))
        .collect();
    write_wrapped(out, " obj:", &join_plus(&obj_terms))?;

    writeln!(out, "Subject To")?;
    // Station balance.
    let mut terms: Vec<String> = (1..n).map(|i| format!("x_0_{i}")).collect();
    terms.extend((1..n).map(|i| format!("- x_{i}_0")));
    write_wrapped(out, " rs_balance:", &format!("{} = 0", join_plus_signed(&terms)))?;
    // Terminal degrees.
    for j in 1..n {
        let terms: Vec<String> = (0..n)
            .filter(|&i| i != j)
            .map(|i| format!("x_{i}_{j}"))
            .collect();
        write_wrapped(out, &format!(" indeg_{j}:"), &format!("{} = 1", join_plus(&terms)))?;
    }
    for j in 1..n {
        let terms: Vec<String> = (0..n)
            .filter(|&i| i != j)
            .map(|i| format!("x_{j}_{i}"))
            .collect();
        write_wrapped(out, &format!(" outdeg_{j}:"), &format!("{} = 1", join_plus(&terms)))?;
    }
    // Flow conservation with arc-activated constant coefficients.
    for i in 1..n {
        let mut terms: Vec<String> = (0..n).filter(|&j| j != i).map(|j| format!("z_{i}_{j}")).collect();
        terms.extend((0..n).filter(|&j| j != i).map(|j| format!("- z_{j}_{i}")));
        terms.extend((0..n).filter(|&j| j != i).map(|j| {
            let c = weights.hover_energy(i) + weights.flight_energy(i, j);
            format!("- {} x_{i}_{j}", fmt12(c))
        }));
        write_wrapped(out, &format!(" flow_{i}:"), &format!("{} = 0", join_plus_signed(&terms)))?;
    }
    // Station departure arcs.
    for i in 1..n {
        let line = format!(
            "z_0_{i} - {} x_0_{i} = 0",
            fmt12(weights.flight_energy(0, i))
        );
        write_wrapped(out, &format!(" src_{i}:"), &line)?;
    }
    // Capacity coupling.
    for (i, j) in model.arcs() {
        let line = format!("z_{i}_{j} - {} x_{i}_{j} <= 0", fmt12(f_max));
        write_wrapped(out, &format!(" cap_{i}_{j}:"), &line)?;
    }

    writeln!(out, "Bounds")?;
    for (i, j) in model.arcs() {
        writeln!(out, " 0 <= z_{i}_{j} <= {}", fmt12(f_max))?;
    }
    writeln!(out, "Binaries")?;
    let names: Vec<String> = model.arcs().map(|(i, j)| format!("x_{i}_{j}")).collect();
    write_wrapped(out, "", &names.join(" "))?;
    writeln!(out, "End")?;
    Ok(())
}

fn join_plus(terms: &[String]) -> String {
    terms.join(" + ")
}

/// Joins terms that may already carry a leading "- ".
fn join_plus_signed(terms: &[String]) -> String {
    let mut s = String::new();
    for (k, t) in terms.iter().enumerate() {
        if k == 0 {
            s.push_str(t);
        } else if let Some(rest) = t.strip_prefix("- ") {
            s.push_str(" - ");
            s.push_str(rest);
        } else {
            s.push_str(" + ");
            s.push_str(t);
        }
    }
    s
}

/// Writes `head body`, wrapping the body at ~200 characters with indented
/// continuation lines (old LP readers dislike very long lines).
fn write_wrapped<W: Write>(out: &mut W, head: &str, body: &str) -> io::Result<()> {
    const WIDTH: usize = 200;
    let mut line = String::from(head);
    for token in body.split(' ') {
        if line.len() + token.len() + 1 > WIDTH {
            writeln!(out, "{line}")?;
            line = String::from("   ");
        }
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str(token);
    }
    writeln!(out, "{line}")?;
    Ok(())
}

fn write_mps<W: Write>(
    weights: &EdgeWeights,
    f_max: f64,
    model: &Model,
    out: &mut W,
) -> io::Result<()> {
    let n = model.n;
    writeln!(out, "* energy-constrained routing over {} terminals", n - 1)?;
    writeln!(out, "* objective_offset_s = {}", fmt12(model.hover_offset))?;
    writeln!(out, "NAME          TSPE")?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N  obj")?;
    writeln!(out, " E  rs_balance")?;
    for j in 1..n {
        writeln!(out, " E  indeg_{j}")?;
    }
    for j in 1..n {
        writeln!(out, " E  outdeg_{j}")?;
    }
    for i in 1..n {
        writeln!(out, " E  flow_{i}")?;
    }
    for i in 1..n {
        writeln!(out, " E  src_{i}")?;
    }
    for (i, j) in model.arcs() {
        writeln!(out, " L  cap_{i}_{j}")?;
    }

    writeln!(out, "COLUMNS")?;
    writeln!(out, "    MARKER                 'MARKER'                 'INTORG'")?;
    for (i, j) in model.arcs() {
        let var = format!("x_{i}_{j}");
        let mut entries: Vec<(String, f64)> =
            vec![("obj".into(), weights.flight_vtc(i, j))];
        if i == 0 {
            entries.push(("rs_balance".into(), 1.0));
        }
        if j == 0 {
            entries.push(("rs_balance".into(), -1.0));
        }
        if j != 0 {
            entries.push((format!("indeg_{j}"), 1.0));
        }
        if i != 0 {
            entries.push((format!("outdeg_{i}"), 1.0));
        }
        if i != 0 {
            let c = weights.hover_energy(i) + weights.flight_energy(i, j);
            entries.push((format!("flow_{i}"), -c));
        }
        if i == 0 {
            entries.push((format!("src_{j}"), -weights.flight_energy(0, j)));
        }
        entries.push((format!("cap_{i}_{j}"), -f_max));
        write_mps_column(out, &var, &entries)?;
    }
    writeln!(out, "    MARKER                 'MARKER'                 'INTEND'")?;
    for (i, j) in model.arcs() {
        let var = format!("z_{i}_{j}");
        let mut entries: Vec<(String, f64)> = Vec::new();
        if i != 0 {
            entries.push((format!("flow_{i}"), 1.0));
        }
        if j != 0 {
            entries.push((format!("flow_{j}"), -1.0));
        }
        if i == 0 {
            entries.push((format!("src_{j}"), 1.0));
        }
        entries.push((format!("cap_{i}_{j}"), 1.0));
        write_mps_column(out, &var, &entries)?;
    }

    writeln!(out, "RHS")?;
    for j in 1..n {
        writeln!(out, "    rhs       indeg_{j}  1")?;
    }
    for j in 1..n {
        writeln!(out, "    rhs       outdeg_{j}  1")?;
    }

    writeln!(out, "BOUNDS")?;
    for (i, j) in model.arcs() {
        writeln!(out, " UP bnd       x_{i}_{j}  1")?;
    }
    for (i, j) in model.arcs() {
        writeln!(out, " UP bnd       z_{i}_{j}  {}", fmt12(f_max))?;
    }
    writeln!(out, "ENDATA")?;
    Ok(())
}

fn write_mps_column<W: Write>(
    out: &mut W,
    var: &str,
    entries: &[(String, f64)],
) -> io::Result<()> {
    for pair in entries.chunks(2) {
        let mut line = format!("    {var:<10}");
        for (row, coeff) in pair {
            line.push_str(&format!("  {row:<12}  {}", fmt12(*coeff)));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
