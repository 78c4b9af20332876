use crate::lattice::{Cell, CellBox, Configuration, Dimension};
use crate::motion::Field;
use rustc_hash::FxHashSet;
use std::collections::VecDeque;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum ViolationKind {
    A,
    B,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Violation {
    pub kind: ViolationKind,
    pub cells: Vec<Cell>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::A => write!(f, "A-violation")?,
            ViolationKind::B => write!(f, "B-violation")?,
        }
        for c in &self.cells {
            write!(f, " {} {} {}", c.x, c.y, c.z)?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct FeatureSizeReport {
    pub holds: bool,
    pub violations: Vec<Violation>,
}

/// Offsets of edge-adjacent cells that are lexicographically greater.
fn diagonal_offsets(dim: Dimension) -> Vec<Cell> {
    let mut out = Vec::new();
    for dx in -1..=1 {
        for dy in -1..=1 {
            for dz in -1..=1i32 {
                let d = Cell::new(dx, dy, dz);
                let nonzero = [dx, dy, dz].iter().filter(|v| **v != 0).count();
                if nonzero == 2 && d > Cell::default() && (dim == Dimension::Three || dz == 0) {
                    out.push(d);
                }
            }
        }
    }
    out
}

fn anchors_with(field: &Field, c: Cell) -> Vec<Cell> {
    let k = field.k();
    let dim = field.dim();
    let zr = if dim == Dimension::Two { 0..=0 } else { c.z - k + 1..=c.z };
    let mut out = Vec::new();
    for x in c.x - k + 1..=c.x {
        for y in c.y - k + 1..=c.y {
            for z in zr.clone() {
                let a = Cell::new(x, y, z);
                if field.cube_empty(a) {
                    out.push(a);
                }
            }
        }
    }
    out
}

fn cell_ok(field: &Field, c: Cell) -> bool {
    !anchors_with(field, c).is_empty()
}

fn translatable(field: &Field, from: Cell, to: Cell) -> bool {
    let bounds = CellBox::new(from.min(to), from.max(to));
    let mut seen: FxHashSet<Cell> = FxHashSet::default();
    seen.insert(from);
    let mut queue = VecDeque::from([from]);
    while let Some(a) = queue.pop_front() {
        if a == to {
            return true;
        }
        for &s in field.dim().steps() {
            let b = a.step(s);
            if bounds.contains(b) && !seen.contains(&b) && field.cube_empty(b) {
                seen.insert(b);
                queue.push_back(b);
            }
        }
    }
    false
}

fn pair_ok(field: &Field, q1: Cell, q2: Cell) -> bool {
    let a1 = anchors_with(field, q1);
    let a2 = anchors_with(field, q2);
    if a1.iter().any(|a| a2.contains(a)) {
        return true;
    }
    a1.iter().any(|&p| a2.iter().any(|&q| translatable(field, p, q)))
}

fn check_region(config: &Configuration, k: i32) -> Option<CellBox> {
    config.bounding_box(k).ok()
}

/// Empty cells of the inflated box not covered by any empty k-cube.
pub fn check_condition_a(config: &Configuration, k: i32) -> Vec<Cell> {
    let Some(region) = check_region(config, k) else { return vec![] };
    let field = Field::new(config, None, k);
    region
        .cells()
        .filter(|&c| !config.contains(c) && !cell_ok(&field, c))
        .collect()
}

/// Edge-adjacent empty pairs whose cubes cannot slide into each other.
pub fn check_condition_b(config: &Configuration, k: i32) -> Vec<(Cell, Cell)> {
    let Some(region) = check_region(config, k) else { return vec![] };
    let field = Field::new(config, None, k);
    let offs = diagonal_offsets(config.dim());
    let mut out = Vec::new();
    for q1 in region.cells() {
        if config.contains(q1) {
            continue;
        }
        for &d in &offs {
            let q2 = q1.add(d);
            if !config.contains(q2) && !pair_ok(&field, q1, q2) {
                out.push((q1, q2));
            }
        }
    }
    out
}

fn report(a: Vec<Cell>, b: Vec<(Cell, Cell)>) -> FeatureSizeReport {
    let mut violations: Vec<Violation> = a
        .into_iter()
        .map(|c| Violation {
            kind: ViolationKind::A,
            cells: vec![c],
            detail: "no empty cube contains the cell".into(),
        })
        .collect();
    violations.extend(b.into_iter().map(|(p, q)| Violation {
        kind: ViolationKind::B,
        cells: vec![p, q],
        detail: "containing cubes cannot slide into each other".into(),
    }));
    FeatureSizeReport { holds: violations.is_empty(), violations }
}

pub fn external_feature_size_at_least(config: &Configuration, k: i32) -> FeatureSizeReport {
    report(check_condition_a(config, k), check_condition_b(config, k))
}

/// Feature-size check restricted to empty cells within Chebyshev distance
/// `radius` of the given centres (and pairs touching them). Sufficient after
/// a move when the configuration satisfied the property before it.
pub fn violations_near(config: &Configuration, centers: &[Cell], radius: i32, k: i32) -> FeatureSizeReport {
    let field = Field::new(config, None, k);
    let dim = config.dim();
    let rz = if dim == Dimension::Two { 0 } else { radius };
    let mut cells: Vec<Cell> = Vec::new();
    let mut seen: FxHashSet<Cell> = FxHashSet::default();
    for &c in centers {
        let b = CellBox::new(c.offset(-radius, -radius, -rz), c.offset(radius, radius, rz));
        for q in b.cells() {
            if !config.contains(q) && seen.insert(q) {
                cells.push(q);
            }
        }
    }
    cells.sort();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut offs = diagonal_offsets(dim);
    offs.extend(offs.clone().into_iter().map(|d| Cell::default().sub(d)));
    let mut pairs: FxHashSet<(Cell, Cell)> = FxHashSet::default();
    for &q in &cells {
        if !cell_ok(&field, q) {
            a.push(q);
        }
        for &d in &offs {
            let p = q.add(d);
            if config.contains(p) {
                continue;
            }
            let pair = if q < p { (q, p) } else { (p, q) };
            if pairs.insert(pair) && !pair_ok(&field, pair.0, pair.1) {
                b.push(pair);
            }
        }
    }
    b.sort();
    report(a, b)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Pattern {
    /// 1×1×3
    Line,
    /// 1×2×2
    Square,
    /// 1×2×3
    Rectangle,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PatternOccurrence {
    pub pattern: Pattern,
    pub a: Cell,
    pub b: Cell,
}

fn pattern_offsets(dim: Dimension) -> Vec<(Pattern, Cell)> {
    let mut out = Vec::new();
    for dx in -2..=2 {
        for dy in -2..=2 {
            for dz in -2..=2i32 {
                let d = Cell::new(dx, dy, dz);
                if d <= Cell::default() || (dim == Dimension::Two && dz != 0) {
                    continue;
                }
                let mut m = [dx.abs(), dy.abs(), dz.abs()];
                m.sort();
                let p = match m {
                    [0, 0, 2] => Pattern::Line,
                    [0, 1, 1] => Pattern::Square,
                    [0, 1, 2] => Pattern::Rectangle,
                    _ => continue,
                };
                out.push((p, d));
            }
        }
    }
    out
}

/// Pairs of modules at opposite corners of a 1×1×3, 1×2×2 or 1×2×3 box whose
/// other cells are empty.
pub fn forbidden_pattern_scan(config: &Configuration) -> Vec<PatternOccurrence> {
    let offs = pattern_offsets(config.dim());
    let mut out = Vec::new();
    for a in config.sorted_cells() {
        for &(pattern, d) in &offs {
            let b = a.add(d);
            if !config.contains(b) {
                continue;
            }
            let bx = CellBox::new(a.min(b), a.max(b));
            if bx.cells().all(|c| c == a || c == b || !config.contains(c)) {
                out.push(PatternOccurrence { pattern, a, b });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: i32, y: i32, z: i32) -> Cell {
        Cell::new(x, y, z)
    }

    fn cfg(cells: &[Cell]) -> Configuration {
        Configuration::new(Dimension::Three, cells.iter().copied()).unwrap()
    }

    #[test]
    fn unit_gap_violates_a() {
        assert_eq!(check_condition_a(&cfg(&[c(0, 0, 0), c(2, 0, 0)]), 2), vec![c(1, 0, 0)]);
    }

    #[test]
    fn diagonal_pair_violates_b() {
        let conf = cfg(&[c(0, 0, 0), c(1, 1, 0)]);
        let b = check_condition_b(&conf, 2);
        assert!(b.contains(&(c(0, 1, 0), c(1, 0, 0))));
    }

    #[test]
    fn simple_shapes_hold() {
        assert!(external_feature_size_at_least(&cfg(&[c(0, 0, 0)]), 3).holds);
        assert!(external_feature_size_at_least(&cfg(&[c(0, 0, 0), c(1, 0, 0), c(2, 0, 0)]), 2).holds);
    }

    #[test]
    fn pattern_examples() {
        let p = forbidden_pattern_scan(&cfg(&[c(0, 0, 0), c(2, 0, 0)]));
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].pattern, Pattern::Line);
        let p = forbidden_pattern_scan(&cfg(&[c(0, 0, 0), c(1, 1, 0)]));
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].pattern, Pattern::Square);
    }
}
