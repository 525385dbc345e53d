//! CPLEX LP text export.

use std::io::{self, Write};

use super::catalog::VarKind;
use super::model::MilpModel;
use crate::solver::lp::Sense;

const TERMS_PER_LINE: usize = 8;

fn write_terms<W: Write>(out: &mut W, model: &MilpModel, terms: &[(usize, f64)]) -> io::Result<()> {
    for (n, &(j, a)) in terms.iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            write!(out, "\n   ")?;
        }
        let sign = if a < 0.0 { "-" } else { "+" };
        let mag = a.abs();
        let name = model.catalog.name(j);
        match (n, mag == 1.0) {
            (0, true) if a > 0.0 => write!(out, " {name}")?,
            (0, false) if a > 0.0 => write!(out, " {mag} {name}")?,
            (_, true) => write!(out, " {sign} {name}")?,
            (_, false) => write!(out, " {sign} {mag} {name}")?,
        }
    }
    Ok(())
}

/// Writes the model in CPLEX LP format with deterministic names.
pub fn write_lp<W: Write>(model: &MilpModel, out: &mut W) -> io::Result<()> {
    let stats = model.stats();
    writeln!(
        out,
        "\\ max-min effective SINR association: K={} M={} L={} p={} Q={}",
        stats.num_ues, stats.num_ans, model.antennas, model.power, model.big_m
    )?;
    writeln!(out, "Maximize")?;
    writeln!(out, " obj: theta")?;
    writeln!(out, "Subject To")?;
    for row in &model.rows {
        write!(out, " {}:", row.name)?;
        if row.terms.is_empty() {
            write!(out, " 0 theta")?;
        } else {
            write_terms(out, model, &row.terms)?;
        }
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        writeln!(out, " {op} {}", row.rhs)?;
    }
    writeln!(out, "Bounds")?;
    for j in 0..model.num_vars() {
        if model.catalog.kind(j) == VarKind::Binary {
            continue;
        }
        let (lo, hi) = (model.lower[j], model.upper[j]);
        let name = model.catalog.name(j);
        if hi.is_finite() {
            writeln!(out, " {lo} <= {name} <= {hi}")?;
        } else if lo != 0.0 {
            writeln!(out, " {name} >= {lo}")?;
        }
    }
    writeln!(out, "Binaries")?;
    let binaries: Vec<String> = (0..model.catalog.num_binaries())
        .map(|j| model.catalog.name(j))
        .collect();
    for chunk in binaries.chunks(10) {
        writeln!(out, " {}", chunk.join(" "))?;
    }
    writeln!(out, "End")?;
    Ok(())
}

pub fn to_lp_string(model: &MilpModel) -> String {
    let mut buf = Vec::new();
    write_lp(model, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("LP text is ASCII")
}
