//! Free-format MPS writer and reader for [`LinearProgram`].

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{ColId, LinearProgram};
use crate::error::{Error, Result};

const OBJ: &str = "obj";

fn num(v: f64) -> String {
    // Shortest representation that round-trips exactly.
    format!("{v:?}")
}

pub fn export_mps(lp: &LinearProgram) -> String {
    let mut out = String::new();
    let name = if lp.name.is_empty() { "model" } else { &lp.name };
    let _ = writeln!(out, "NAME {name}");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ}");
    for r in &lp.rows {
        let kind = match (r.lower.is_finite(), r.upper.is_finite()) {
            (true, true) if r.lower == r.upper => "E",
            (true, _) => "G",
            (false, true) => "L",
            // A free row constrains nothing; keep it as a second objective-like row.
            (false, false) => "N",
        };
        let _ = writeln!(out, " {kind}  {}", r.name);
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.columns.len()];
    for (ri, r) in lp.rows.iter().enumerate() {
        for (c, a) in &r.coefficients {
            by_col[c.0].push((ri, *a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0;
    for (ci, c) in lp.columns.iter().enumerate() {
        if c.integer != in_int {
            let kind = if c.integer { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER{marker} 'MARKER' {kind}");
            marker += 1;
            in_int = c.integer;
        }
        let mut wrote = false;
        if c.cost != 0.0 {
            let _ = writeln!(out, "    {} {OBJ} {}", c.name, num(c.cost));
            wrote = true;
        }
        for (ri, a) in &by_col[ci] {
            let _ = writeln!(out, "    {} {} {}", c.name, lp.rows[*ri].name, num(*a));
            wrote = true;
        }
        if !wrote {
            let _ = writeln!(out, "    {} {OBJ} 0", c.name);
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER{marker} 'MARKER' 'INTEND'");
    }

    out.push_str("RHS\n");
    if lp.objective_offset != 0.0 {
        let _ = writeln!(out, "    RHS {OBJ} {}", num(-lp.objective_offset));
    }
    for r in &lp.rows {
        let rhs = match (r.lower.is_finite(), r.upper.is_finite()) {
            (true, _) => r.lower,
            (false, true) => r.upper,
            (false, false) => 0.0,
        };
        if rhs != 0.0 {
            let _ = writeln!(out, "    RHS {} {}", r.name, num(rhs));
        }
    }
    let ranged: Vec<_> = lp
        .rows
        .iter()
        .filter(|r| r.lower.is_finite() && r.upper.is_finite() && r.lower != r.upper)
        .collect();
    if !ranged.is_empty() {
        out.push_str("RANGES\n");
        for r in ranged {
            let _ = writeln!(out, "    RNG {} {}", r.name, num(r.upper - r.lower));
        }
    }

    out.push_str("BOUNDS\n");
    for c in &lp.columns {
        let n = &c.name;
        if c.lower == c.upper {
            let _ = writeln!(out, " FX BND {n} {}", num(c.lower));
            continue;
        }
        if c.lower == f64::NEG_INFINITY {
            let _ = writeln!(out, " MI BND {n}");
        } else if c.lower != 0.0 || c.integer {
            let _ = writeln!(out, " LO BND {n} {}", num(c.lower));
        }
        if c.upper.is_finite() {
            let _ = writeln!(out, " UP BND {n} {}", num(c.upper));
        } else if c.integer {
            let _ = writeln!(out, " PL BND {n}");
        }
    }
    out.push_str("ENDATA\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        context: format!("MPS line {line}"),
        message: message.into(),
    }
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    match s {
        "Inf" | "inf" | "Infinity" | "1e+30" | "1e30" => Ok(f64::INFINITY),
        "-Inf" | "-inf" | "-Infinity" | "-1e+30" | "-1e30" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse()
            .map_err(|_| parse_err(line, format!("`{s}` is not a number"))),
    }
}

/// Reads the free-format subset produced by [`export_mps`] (plus `BV`, `MI`, `PL`, `FR`).
pub fn import_mps(text: &str) -> Result<LinearProgram> {
    let mut lp = LinearProgram::new("");
    let mut section = Section::None;
    let mut row_kind: HashMap<String, char> = HashMap::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut objective_rows: Vec<String> = Vec::new();
    let mut rhs: HashMap<String, f64> = HashMap::new();
    let mut ranges: HashMap<String, f64> = HashMap::new();
    let mut entries: Vec<Vec<(ColId, f64)>> = Vec::new();
    let mut integer = false;
    let mut explicit_bounds: Vec<bool> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        let f: Vec<&str> = trimmed.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match f[0] {
                "NAME" => {
                    lp.name = f.get(1).unwrap_or(&"").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => break,
                "OBJSENSE" => return Err(parse_err(line, "only minimization is supported")),
                other => return Err(parse_err(line, format!("unknown section `{other}`"))),
            };
            continue;
        }
        match section {
            Section::Rows => {
                if f.len() != 2 {
                    return Err(parse_err(line, "row line is `<type> <name>`"));
                }
                let kind = f[0].chars().next().unwrap_or('?');
                let name = f[1].to_string();
                match kind {
                    'N' if objective_rows.is_empty() => objective_rows.push(name.clone()),
                    'N' => {
                        objective_rows.push(name.clone());
                        row_index.insert(name.clone(), lp.rows.len());
                        lp.add_row(name.clone(), f64::NEG_INFINITY, f64::INFINITY, vec![]);
                        entries.push(Vec::new());
                    }
                    'E' | 'L' | 'G' => {
                        row_index.insert(name.clone(), lp.rows.len());
                        lp.add_row(name.clone(), f64::NEG_INFINITY, f64::INFINITY, vec![]);
                        entries.push(Vec::new());
                    }
                    _ => return Err(parse_err(line, format!("unknown row type `{}`", f[0]))),
                }
                row_kind.insert(name, kind);
            }
            Section::Columns => {
                if f.len() >= 3 && f[1] == "'MARKER'" {
                    integer = match f[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        m => return Err(parse_err(line, format!("unknown marker {m}"))),
                    };
                    continue;
                }
                if f.len() != 3 && f.len() != 5 {
                    return Err(parse_err(line, "column line is `<col> <row> <value> [<row> <value>]`"));
                }
                let col = match lp.column_id(f[0]) {
                    Some(c) => c,
                    None => {
                        explicit_bounds.push(false);
                        lp.add_column(f[0], 0.0, f64::INFINITY, 0.0, integer)
                    }
                };
                for pair in f[1..].chunks(2) {
                    let value = parse_num(pair[1], line)?;
                    if objective_rows.first().map(String::as_str) == Some(pair[0]) {
                        lp.columns[col.0].cost += value;
                    } else if let Some(&ri) = row_index.get(pair[0]) {
                        entries[ri].push((col, value));
                    } else {
                        return Err(parse_err(line, format!("unknown row `{}`", pair[0])));
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                let pairs = if f.len() % 2 == 1 { &f[1..] } else { &f[..] };
                for pair in pairs.chunks(2) {
                    if pair.len() != 2 {
                        return Err(parse_err(line, "expected `<row> <value>` pairs"));
                    }
                    let value = parse_num(pair[1], line)?;
                    if section == Section::Rhs && objective_rows.first().map(String::as_str) == Some(pair[0]) {
                        lp.objective_offset = -value;
                        continue;
                    }
                    if !row_index.contains_key(pair[0]) {
                        return Err(parse_err(line, format!("unknown row `{}`", pair[0])));
                    }
                    let target = if section == Section::Rhs { &mut rhs } else { &mut ranges };
                    target.insert(pair[0].to_string(), value);
                }
            }
            Section::Bounds => {
                if f.len() < 3 {
                    return Err(parse_err(line, "bound line is `<type> <set> <col> [<value>]`"));
                }
                let col = lp
                    .column_id(f[2])
                    .ok_or_else(|| parse_err(line, format!("unknown column `{}`", f[2])))?;
                let value = || -> Result<f64> {
                    f.get(3)
                        .ok_or_else(|| parse_err(line, "bound value missing"))
                        .and_then(|s| parse_num(s, line))
                };
                explicit_bounds[col.0] = true;
                let c = &mut lp.columns[col.0];
                match f[0] {
                    "UP" => {
                        let v = value()?;
                        c.upper = v;
                        if v < 0.0 && c.lower == 0.0 {
                            c.lower = f64::NEG_INFINITY;
                        }
                    }
                    "LO" => c.lower = value()?,
                    "FX" => {
                        let v = value()?;
                        c.lower = v;
                        c.upper = v;
                    }
                    "MI" => c.lower = f64::NEG_INFINITY,
                    "PL" => c.upper = f64::INFINITY,
                    "FR" => {
                        c.lower = f64::NEG_INFINITY;
                        c.upper = f64::INFINITY;
                    }
                    "BV" => {
                        c.lower = 0.0;
                        c.upper = 1.0;
                        c.integer = true;
                    }
                    other => return Err(parse_err(line, format!("unknown bound type `{other}`"))),
                }
            }
            Section::None => return Err(parse_err(line, "data outside a section")),
        }
    }

    for (name, &ri) in &row_index {
        let b = rhs.get(name).copied().unwrap_or(0.0);
        let r = &mut lp.rows[ri];
        let (lo, up) = match row_kind[name] {
            'E' => match ranges.get(name) {
                Some(&rg) if rg > 0.0 => (b, b + rg),
                Some(&rg) if rg < 0.0 => (b + rg, b),
                _ => (b, b),
            },
            'G' => (b, ranges.get(name).map_or(f64::INFINITY, |rg| b + rg.abs())),
            'L' => (ranges.get(name).map_or(f64::NEG_INFINITY, |rg| b - rg.abs()), b),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        };
        r.lower = lo;
        r.upper = up;
    }
    for (ri, e) in entries.into_iter().enumerate() {
        lp.rows[ri].coefficients = e;
    }
    // Integer columns without bounds default to binary in most readers.
    for (c, explicit) in lp.columns.iter_mut().zip(&explicit_bounds) {
        if c.integer && !explicit {
            c.upper = 1.0;
        }
    }
    lp.validate()?;
    Ok(lp)
}
