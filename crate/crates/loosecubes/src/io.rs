//! Text formats for polycubes and schedules.

use crate::error::{Error, Result};
use crate::lattice::{Cell, Configuration, Dimension, ModuleId, UnitStep};
use crate::motion::{Move, Schedule};
use std::fmt::Write;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses `x y [z]` lines; `dim = None` infers 2D when no line carries a z.
pub fn parse_polycube(text: &str, dim: Option<Dimension>) -> Result<Configuration> {
    let mut cells = Vec::new();
    let mut saw_z = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<i32> = line
            .split_whitespace()
            .map(|t| t.parse::<i32>().map_err(|e| parse_err(i + 1, format!("{t:?}: {e}"))))
            .collect::<Result<_>>()?;
        let c = match nums.as_slice() {
            [x, y] => Cell::new(*x, *y, 0),
            [x, y, z] => {
                saw_z = true;
                Cell::new(*x, *y, *z)
            }
            _ => return Err(parse_err(i + 1, "expected 2 or 3 integers")),
        };
        cells.push(c);
    }
    let dim = dim.unwrap_or(if saw_z { Dimension::Three } else { Dimension::Two });
    Configuration::new(dim, cells)
}

pub fn write_polycube(config: &Configuration) -> String {
    let mut s = String::new();
    for c in config.sorted_cells() {
        let _ = writeln!(s, "{} {} {}", c.x, c.y, c.z);
    }
    s
}

pub fn write_schedule(schedule: &Schedule) -> String {
    let mut s = format!("k={} planner={}\n", schedule.k, schedule.planner);
    for (k, v) in &schedule.counters {
        let _ = writeln!(s, "# {k}={v}");
    }
    for m in &schedule.moves {
        let steps = if m.steps.is_empty() {
            "-".to_string()
        } else {
            m.steps.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
        };
        let c = m.start;
        let _ = writeln!(s, "move {} ({},{},{}) {}", m.mover, c.x, c.y, c.z, steps);
    }
    s
}

fn parse_cell(tok: &str, line: usize) -> Result<Cell> {
    let inner = tok
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| parse_err(line, format!("bad cell {tok:?}")))?;
    let v: Vec<i32> = inner
        .split(',')
        .map(|t| t.trim().parse::<i32>().map_err(|e| parse_err(line, format!("{t:?}: {e}"))))
        .collect::<Result<_>>()?;
    match v.as_slice() {
        [x, y, z] => Ok(Cell::new(*x, *y, *z)),
        _ => Err(parse_err(line, format!("bad cell {tok:?}"))),
    }
}

pub fn parse_schedule(text: &str) -> Result<Schedule> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let mut k = None;
    let mut planner = None;
    for tok in header.split_whitespace() {
        match tok.split_once('=') {
            Some(("k", v)) => k = Some(v.parse::<i32>().map_err(|e| parse_err(1, e.to_string()))?),
            Some(("planner", v)) => planner = Some(v.to_string()),
            _ => return Err(parse_err(1, format!("bad header token {tok:?}"))),
        }
    }
    let mut schedule = Schedule::new(
        k.ok_or_else(|| parse_err(1, "missing k"))?,
        &planner.ok_or_else(|| parse_err(1, "missing planner"))?,
    );
    for (i, raw) in lines {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((key, v)) = rest.trim().split_once('=') {
                if let Ok(v) = v.parse::<i64>() {
                    schedule.counters.insert(key.to_string(), v);
                }
            }
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let [kw, id, cell, steps] = toks.as_slice() else {
            return Err(parse_err(i + 1, "expected `move <id> (<x>,<y>,<z>) <steps>`"));
        };
        if *kw != "move" {
            return Err(parse_err(i + 1, format!("unknown record {kw:?}")));
        }
        let id: u32 = id.parse().map_err(|_| parse_err(i + 1, format!("bad id {id:?}")))?;
        let start = parse_cell(cell, i + 1)?;
        let steps = if *steps == "-" {
            Vec::new()
        } else {
            steps
                .split(',')
                .map(|s| s.parse::<UnitStep>().map_err(|e| parse_err(i + 1, e)))
                .collect::<Result<_>>()?
        };
        schedule.moves.push(Move::new(ModuleId(id), start, steps));
    }
    Ok(schedule)
}
