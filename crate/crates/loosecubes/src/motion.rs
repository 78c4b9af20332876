use crate::error::{Error, Result};
use crate::lattice::{is_connected_without, Axis, Cell, CellBox, Configuration, Dimension, ModuleId};
pub use crate::lattice::UnitStep;
use rustc_hash::{FxHashMap, FxHashSet};
use std::cell::RefCell;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::fmt;

/// An axis-aligned cube of side `k` (a `k × k` square at z = 0 in 2D).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct KCube {
    pub anchor: Cell,
    pub k: i32,
}

impl KCube {
    pub fn new(anchor: Cell, k: i32) -> Self {
        KCube { anchor, k }
    }

    fn z_extent(&self, dim: Dimension) -> i32 {
        if dim == Dimension::Two {
            1
        } else {
            self.k
        }
    }

    pub fn contains(&self, c: Cell, dim: Dimension) -> bool {
        let a = self.anchor;
        c.x >= a.x
            && c.x < a.x + self.k
            && c.y >= a.y
            && c.y < a.y + self.k
            && c.z >= a.z
            && c.z < a.z + self.z_extent(dim)
    }

    pub fn cells(&self, dim: Dimension) -> impl Iterator<Item = Cell> {
        let a = self.anchor;
        let (k, kz) = (self.k, self.z_extent(dim));
        (0..k).flat_map(move |dx| {
            (0..k).flat_map(move |dy| (0..kz).map(move |dz| a.offset(dx, dy, dz)))
        })
    }

    pub fn as_box(&self, dim: Dimension) -> CellBox {
        let kz = self.z_extent(dim);
        CellBox::new(self.anchor, self.anchor.offset(self.k - 1, self.k - 1, kz - 1))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum SlideKind {
    Straight,
    Corner,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Slide {
    pub mover: ModuleId,
    pub start: Cell,
    pub steps: Vec<UnitStep>,
    pub kind: SlideKind,
}

impl Slide {
    pub fn straight(mover: ModuleId, start: Cell, s: UnitStep) -> Self {
        Slide { mover, start, steps: vec![s], kind: SlideKind::Straight }
    }

    pub fn corner(mover: ModuleId, start: Cell, s1: UnitStep, s2: UnitStep) -> Self {
        Slide { mover, start, steps: vec![s1, s2], kind: SlideKind::Corner }
    }

    pub fn end(&self) -> Cell {
        self.steps.iter().fold(self.start, |c, &s| c.step(s))
    }

    fn well_formed(&self) -> bool {
        match self.kind {
            SlideKind::Straight => self.steps.len() == 1,
            SlideKind::Corner => self.steps.len() == 2 && self.steps[0].axis != self.steps[1].axis,
        }
    }
}

/// Witness of a slide's looseness.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Witness {
    Straight(KCube),
    Corner { first: KCube, translation: Vec<UnitStep>, second: KCube },
}

/// One continuous motion of one module.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Move {
    pub mover: ModuleId,
    pub start: Cell,
    pub steps: Vec<UnitStep>,
    pub witness: Option<Vec<Witness>>,
}

impl Move {
    pub fn new(mover: ModuleId, start: Cell, steps: Vec<UnitStep>) -> Self {
        Move { mover, start, steps, witness: None }
    }

    pub fn end(&self) -> Cell {
        self.steps.iter().fold(self.start, |c, &s| c.step(s))
    }

    /// Cells visited, including start and end.
    pub fn path(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        out.push(self.start);
        let mut c = self.start;
        for &s in &self.steps {
            c = c.step(s);
            out.push(c);
        }
        out
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Schedule {
    pub k: i32,
    pub planner: String,
    pub moves: Vec<Move>,
    pub counters: BTreeMap<String, i64>,
}

impl Schedule {
    pub fn new(k: i32, planner: &str) -> Self {
        Schedule { k, planner: planner.to_string(), moves: Vec::new(), counters: BTreeMap::new() }
    }

    pub fn total_steps(&self) -> usize {
        self.moves.iter().map(|m| m.steps.len()).sum()
    }
}

/// Splits a step sequence into slides: two consecutive steps on distinct
/// axes form a corner slide, anything else is a straight slide.
pub fn decompose(steps: &[UnitStep]) -> Vec<(SlideKind, Vec<UnitStep>)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < steps.len() {
        if i + 1 < steps.len() && steps[i].axis != steps[i + 1].axis {
            out.push((SlideKind::Corner, vec![steps[i], steps[i + 1]]));
            i += 2;
        } else {
            out.push((SlideKind::Straight, vec![steps[i]]));
            i += 1;
        }
    }
    out
}

/// Occupancy view of a configuration with one module (the mover) lifted out,
/// plus memoised accessibility of empty k-cubes.
pub struct Field<'a> {
    config: &'a Configuration,
    excluded: Option<Cell>,
    k: i32,
    dim: Dimension,
    bbox: Option<CellBox>,
    escape: RefCell<FxHashMap<Cell, bool>>,
    empty: RefCell<FxHashMap<Cell, bool>>,
}

impl<'a> Field<'a> {
    pub fn new(config: &'a Configuration, excluded: Option<Cell>, k: i32) -> Self {
        assert!(k >= 1, "k must be positive");
        Field {
            config,
            excluded,
            k,
            dim: config.dim(),
            bbox: config.bounding_box(0).ok(),
            escape: RefCell::new(FxHashMap::default()),
            empty: RefCell::new(FxHashMap::default()),
        }
    }

    pub fn k(&self) -> i32 {
        self.k
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn config(&self) -> &Configuration {
        self.config
    }

    pub fn excluded(&self) -> Option<Cell> {
        self.excluded
    }

    pub fn bbox(&self) -> Option<CellBox> {
        self.bbox
    }

    pub fn is_free(&self, c: Cell) -> bool {
        (self.dim == Dimension::Three || c.z == 0)
            && (Some(c) == self.excluded || !self.config.contains(c))
    }

    pub fn is_static(&self, c: Cell) -> bool {
        Some(c) != self.excluded && self.config.contains(c)
    }

    pub fn cube_empty(&self, anchor: Cell) -> bool {
        if self.dim == Dimension::Two && anchor.z != 0 {
            return false;
        }
        if let Some(&v) = self.empty.borrow().get(&anchor) {
            return v;
        }
        let kz = if self.dim == Dimension::Two { 1 } else { self.k };
        let mut v = true;
        'scan: for dx in 0..self.k {
            for dy in 0..self.k {
                for dz in 0..kz {
                    if self.is_static(anchor.offset(dx, dy, dz)) {
                        v = false;
                        break 'scan;
                    }
                }
            }
        }
        self.empty.borrow_mut().insert(anchor, v);
        v
    }

    /// Anchors of cubes containing every given cell, lexicographic order.
    fn anchors_containing(&self, cells: &[Cell]) -> impl Iterator<Item = Cell> {
        let k = self.k;
        let mut lo = [i32::MIN; 3];
        let mut hi = [i32::MAX; 3];
        for &c in cells {
            for a in Axis::ALL {
                let i = a.index();
                let (l, h) = if a == Axis::Z && self.dim == Dimension::Two {
                    (0, 0)
                } else {
                    (c.get(a) - k + 1, c.get(a))
                };
                lo[i] = lo[i].max(l);
                hi[i] = hi[i].min(h);
            }
        }
        (lo[0]..=hi[0]).flat_map(move |x| {
            (lo[1]..=hi[1]).flat_map(move |y| (lo[2]..=hi[2]).map(move |z| Cell::new(x, y, z)))
        })
    }

    /// Unit steps needed for the cube at `anchor` to leave the bounding box.
    fn exit_distance(&self, anchor: Cell) -> i32 {
        let Some(b) = self.bbox else { return 0 };
        let k = self.k;
        let mut d = (b.max.x + 1 - anchor.x).min(anchor.x + k - b.min.x);
        d = d.min(b.max.y + 1 - anchor.y).min(anchor.y + k - b.min.y);
        if self.dim == Dimension::Three {
            d = d.min(b.max.z + 1 - anchor.z).min(anchor.z + k - b.min.z);
        }
        d.max(0)
    }

    fn escaped(&self, anchor: Cell) -> bool {
        let Some(b) = self.bbox else { return true };
        let k = self.k;
        let kz = if self.dim == Dimension::Two { 1 } else { k };
        anchor.x > b.max.x
            || anchor.x + k - 1 < b.min.x
            || anchor.y > b.max.y
            || anchor.y + k - 1 < b.min.y
            || anchor.z > b.max.z
            || anchor.z + kz - 1 < b.min.z
    }

    /// Whether an empty cube at `anchor` can translate through empty cubes
    /// to outside the bounding box.
    pub fn cube_escapes(&self, anchor: Cell) -> bool {
        if !self.cube_empty(anchor) {
            return false;
        }
        if let Some(&v) = self.escape.borrow().get(&anchor) {
            return v;
        }
        let mut seen = vec![anchor];
        let mut index: FxHashSet<Cell> = FxHashSet::default();
        index.insert(anchor);
        let mut queue = BinaryHeap::from([(Reverse(self.exit_distance(anchor)), anchor)]);
        let mut result = false;
        'search: while let Some((_, a)) = queue.pop() {
            if self.escaped(a) {
                result = true;
                break;
            }
            for &s in self.dim.steps() {
                let b = a.step(s);
                if index.contains(&b) || !self.cube_empty(b) {
                    continue;
                }
                if let Some(&v) = self.escape.borrow().get(&b) {
                    result = v;
                    break 'search;
                }
                index.insert(b);
                seen.push(b);
                queue.push((Reverse(self.exit_distance(b)), b));
            }
        }
        let mut memo = self.escape.borrow_mut();
        for a in seen {
            memo.insert(a, result);
        }
        result
    }

    pub fn accessible(&self, c: Cell) -> bool {
        self.anchors_containing(&[c])
            .into_iter()
            .any(|a| self.cube_escapes(a))
    }

    pub fn straight_witness(&self, a: Cell, b: Cell) -> Option<KCube> {
        if !self.is_free(b) {
            return None;
        }
        if self.k == 1 {
            return Some(KCube::new(b, 1));
        }
        self.anchors_containing(&[a, b])
            .into_iter()
            .find(|&q| self.cube_empty(q))
            .map(|q| KCube::new(q, self.k))
    }

    /// Corner witness for `a → a+s1 → a+s1+s2`. The translation between the
    /// two cubes keeps the pivot cell inside every intermediate cube.
    pub fn corner_witness(&self, a: Cell, s1: UnitStep, s2: UnitStep) -> Option<Witness> {
        let b = a.step(s1);
        let c = b.step(s2);
        if s1.axis == s2.axis || !self.is_free(b) || !self.is_free(c) {
            return None;
        }
        if self.k == 1 {
            return Some(Witness::Corner {
                first: KCube::new(b, 1),
                translation: vec![s2],
                second: KCube::new(c, 1),
            });
        }
        let firsts: Vec<Cell> = self
            .anchors_containing(&[a, b])
            .into_iter()
            .filter(|&q| self.cube_empty(q))
            .collect();
        if firsts.is_empty() {
            return None;
        }
        let seconds: Vec<Cell> = self
            .anchors_containing(&[b, c])
            .into_iter()
            .filter(|&q| self.cube_empty(q))
            .collect();
        if seconds.is_empty() {
            return None;
        }
        let pivot_box = self.anchors_containing(&[b]).collect::<Vec<_>>();
        for &q1 in &firsts {
            // BFS over empty cubes containing the pivot
            let mut parent: FxHashMap<Cell, Option<(Cell, UnitStep)>> = FxHashMap::default();
            parent.insert(q1, None);
            let mut queue = VecDeque::from([q1]);
            while let Some(q) = queue.pop_front() {
                for &s in self.dim.steps() {
                    let r = q.step(s);
                    if parent.contains_key(&r) || !pivot_box.contains(&r) || !self.cube_empty(r) {
                        continue;
                    }
                    parent.insert(r, Some((q, s)));
                    queue.push_back(r);
                }
            }
            if let Some(&q2) = seconds.iter().find(|q| parent.contains_key(q)) {
                let mut translation = Vec::new();
                let mut cur = q2;
                while let Some((p, s)) = parent[&cur] {
                    translation.push(s);
                    cur = p;
                }
                translation.reverse();
                return Some(Witness::Corner {
                    first: KCube::new(q1, self.k),
                    translation,
                    second: KCube::new(q2, self.k),
                });
            }
        }
        None
    }

    /// Whether `corner_witness` would succeed, without building the witness.
    pub fn corner_ok(&self, a: Cell, s1: UnitStep, s2: UnitStep) -> bool {
        let b = a.step(s1);
        let c = b.step(s2);
        if s1.axis == s2.axis || !self.is_free(b) || !self.is_free(c) {
            return false;
        }
        if self.k == 1 {
            return true;
        }
        let k = self.k;
        let kz = if self.dim == Dimension::Two { 1 } else { k };
        if k * k * kz > 64 {
            return self.corner_witness(a, s1, s2).is_some();
        }
        let lo = Cell::new(b.x - k + 1, b.y - k + 1, if kz == 1 { 0 } else { b.z - k + 1 });
        let idx = |dx: i32, dy: i32, dz: i32| ((dx * k + dy) * kz + dz) as u32;
        let inside = |q: Cell, p: Cell| {
            (0..3).all(|i| {
                let (qi, pi) = (q.get(Axis::ALL[i]), p.get(Axis::ALL[i]));
                pi >= qi && pi < qi + if i == 2 { kz } else { k }
            })
        };
        let (mut empty, mut firsts, mut seconds) = (0u64, 0u64, 0u64);
        for dx in 0..k {
            for dy in 0..k {
                for dz in 0..kz {
                    let q = lo.offset(dx, dy, dz);
                    if !self.cube_empty(q) {
                        continue;
                    }
                    let bit = 1u64 << idx(dx, dy, dz);
                    empty |= bit;
                    if inside(q, a) {
                        firsts |= bit;
                    }
                    if inside(q, c) {
                        seconds |= bit;
                    }
                }
            }
        }
        if firsts == 0 || seconds == 0 {
            return false;
        }
        let mut seen = firsts;
        loop {
            if seen & seconds != 0 {
                return true;
            }
            let mut grown = seen;
            for dx in 0..k {
                for dy in 0..k {
                    for dz in 0..kz {
                        if seen & (1u64 << idx(dx, dy, dz)) == 0 {
                            continue;
                        }
                        for (ex, ey, ez) in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)] {
                            let (nx, ny, nz) = (dx + ex, dy + ey, dz + ez);
                            if (0..k).contains(&nx) && (0..k).contains(&ny) && (0..kz).contains(&nz) {
                                grown |= (1u64 << idx(nx, ny, nz)) & empty;
                            }
                        }
                    }
                }
            }
            if grown == seen {
                return false;
            }
            seen = grown;
        }
    }

    pub fn slide_witness(&self, start: Cell, kind: SlideKind, steps: &[UnitStep]) -> Option<Witness> {
        match kind {
            SlideKind::Straight => self
                .straight_witness(start, start.step(steps[0]))
                .map(Witness::Straight),
            SlideKind::Corner => self.corner_witness(start, steps[0], steps[1]),
        }
    }
}

fn check_mover(config: &Configuration, slide: &Slide) -> Result<()> {
    if config.module_at(slide.start) != Some(slide.mover) {
        return Err(Error::StaleSlide(slide.start));
    }
    if !slide.well_formed() {
        return Err(Error::Malformed(format!("{:?} slide with steps {:?}", slide.kind, slide.steps)));
    }
    Ok(())
}

pub fn is_k_loose_straight(config: &Configuration, slide: &Slide, k: i32) -> Result<Option<KCube>> {
    check_mover(config, slide)?;
    if slide.kind != SlideKind::Straight {
        return Err(Error::Malformed("expected a straight slide".into()));
    }
    let f = Field::new(config, Some(slide.start), k);
    Ok(f.straight_witness(slide.start, slide.end()))
}

pub fn is_k_loose_corner(
    config: &Configuration,
    slide: &Slide,
    k: i32,
) -> Result<Option<(KCube, Vec<UnitStep>, KCube)>> {
    check_mover(config, slide)?;
    if slide.kind != SlideKind::Corner {
        return Err(Error::Malformed("expected a corner slide".into()));
    }
    let f = Field::new(config, Some(slide.start), k);
    Ok(match f.corner_witness(slide.start, slide.steps[0], slide.steps[1]) {
        Some(Witness::Corner { first, translation, second }) => Some((first, translation, second)),
        _ => None,
    })
}

/// Whether `cell` is k-accessible; the module occupying it, if any, is ignored.
pub fn is_k_accessible(config: &Configuration, cell: Cell, k: i32) -> bool {
    let excluded = config.contains(cell).then_some(cell);
    Field::new(config, excluded, k).accessible(cell)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Access {
    /// No accessibility requirement.
    Off,
    /// The mover must be accessible where it is picked up and put down.
    Endpoints,
    /// Additionally accessible after every slide.
    EverySlide,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum MoveFailure {
    Stale(Cell),
    Malformed(String),
    Disconnects,
    Occupied { slide: usize, cell: Cell },
    NoWitness { slide: usize },
    NotAccessible { cell: Cell },
    FinalDisconnected,
}

impl fmt::Display for MoveFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MoveFailure::Stale(c) => write!(f, "stale: mover not at {c}"),
            MoveFailure::Malformed(m) => write!(f, "malformed: {m}"),
            MoveFailure::Disconnects => write!(f, "disconnects"),
            MoveFailure::Occupied { slide, cell } => write!(f, "slide {slide}: destination {cell} occupied"),
            MoveFailure::NoWitness { slide } => write!(f, "slide {slide}: no witness cube"),
            MoveFailure::NotAccessible { cell } => write!(f, "not accessible at {cell}"),
            MoveFailure::FinalDisconnected => write!(f, "final configuration disconnected"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SlideCheck {
    pub slide: Slide,
    pub witness: Option<Witness>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MoveReport {
    pub slides: Vec<SlideCheck>,
    pub connectivity_ok: bool,
    pub accessibility_ok: bool,
    pub failure: Option<MoveFailure>,
}

impl MoveReport {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Checks one move against the configuration it starts from.
pub fn validate_move(config: &Configuration, mv: &Move, k: i32, access: Access) -> MoveReport {
    let mut report = MoveReport {
        slides: Vec::new(),
        connectivity_ok: true,
        accessibility_ok: true,
        failure: None,
    };
    if config.module_at(mv.start) != Some(mv.mover) {
        report.failure = Some(MoveFailure::Stale(mv.start));
        return report;
    }
    if mv.steps.is_empty() {
        return report;
    }
    if config.dim() == Dimension::Two && mv.steps.iter().any(|s| s.axis == Axis::Z) {
        report.failure = Some(MoveFailure::Malformed("z step in a 2D configuration".into()));
        return report;
    }
    if !is_connected_without(config, Some(mv.start)) {
        report.connectivity_ok = false;
        report.failure = Some(MoveFailure::Disconnects);
        return report;
    }
    let field = Field::new(config, Some(mv.start), k);
    if access != Access::Off && !field.accessible(mv.start) {
        report.accessibility_ok = false;
        report.failure = Some(MoveFailure::NotAccessible { cell: mv.start });
        return report;
    }
    let parts = decompose(&mv.steps);
    let last = parts.len().saturating_sub(1);
    let mut pos = mv.start;
    for (i, (kind, steps)) in parts.into_iter().enumerate() {
        let slide = Slide { mover: mv.mover, start: pos, steps, kind };
        let mut probe = pos;
        for &s in &slide.steps {
            probe = probe.step(s);
            if !field.is_free(probe) {
                report.slides.push(SlideCheck { slide, witness: None });
                report.failure = Some(MoveFailure::Occupied { slide: i, cell: probe });
                return report;
            }
        }
        let witness = field.slide_witness(pos, kind, &slide.steps);
        let end = slide.end();
        let missing = witness.is_none();
        report.slides.push(SlideCheck { slide, witness });
        if missing {
            report.failure = Some(MoveFailure::NoWitness { slide: i });
            return report;
        }
        pos = end;
        let check = match access {
            Access::Off => false,
            Access::Endpoints => i == last,
            Access::EverySlide => true,
        };
        if check && !field.accessible(pos) {
            report.accessibility_ok = false;
            report.failure = Some(MoveFailure::NotAccessible { cell: pos });
            return report;
        }
    }
    if pos != mv.start
        && config.len() > 1
        && !pos.neighbors(config.dim()).any(|c| field.is_static(c))
    {
        report.connectivity_ok = false;
        report.failure = Some(MoveFailure::FinalDisconnected);
    }
    report
}

/// All single slides keeping the configuration connected, with witnesses.
pub fn enumerate_valid_slides(config: &Configuration, k: i32) -> Vec<(Slide, Witness)> {
    let dim = config.dim();
    let mut steps: Vec<UnitStep> = dim.steps().to_vec();
    steps.sort();
    let mut out = Vec::new();
    for (id, start) in config.modules() {
        if !is_connected_without(config, Some(start)) {
            continue;
        }
        let field = Field::new(config, Some(start), k);
        let attached = |end: Cell| {
            config.len() == 1 || end.neighbors(dim).any(|c| field.is_static(c))
        };
        for &s in &steps {
            let end = start.step(s);
            if let Some(q) = field.straight_witness(start, end) {
                if attached(end) {
                    out.push((Slide::straight(id, start, s), Witness::Straight(q)));
                }
            }
        }
        for &s1 in &steps {
            for &s2 in &steps {
                if s1.axis == s2.axis {
                    continue;
                }
                if let Some(w) = field.corner_witness(start, s1, s2) {
                    if attached(start.step(s1).step(s2)) {
                        out.push((Slide::corner(id, start, s1, s2), w));
                    }
                }
            }
        }
    }
    out
}

/// Applies a move without validation.
pub fn apply_move(config: &mut Configuration, mv: &Move) -> Result<()> {
    if config.module_at(mv.start) != Some(mv.mover) {
        return Err(Error::StaleSlide(mv.start));
    }
    config.move_module(mv.mover, mv.end())
}
