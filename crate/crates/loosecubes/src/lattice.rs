use crate::error::{Error, Result};
use rustc_hash::{FxHashMap, FxHashSet};
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Cell { x, y, z }
    }

    pub fn get(self, axis: Axis) -> i32 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    pub fn with(mut self, axis: Axis, v: i32) -> Self {
        match axis {
            Axis::X => self.x = v,
            Axis::Y => self.y = v,
            Axis::Z => self.z = v,
        }
        self
    }

    pub fn offset(self, dx: i32, dy: i32, dz: i32) -> Self {
        Cell::new(self.x + dx, self.y + dy, self.z + dz)
    }

    pub fn step(self, s: UnitStep) -> Self {
        self.with(s.axis, self.get(s.axis) + s.sign as i32)
    }

    pub fn add(self, o: Cell) -> Self {
        self.offset(o.x, o.y, o.z)
    }

    pub fn sub(self, o: Cell) -> Self {
        self.offset(-o.x, -o.y, -o.z)
    }

    pub fn min(self, o: Cell) -> Self {
        Cell::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Cell) -> Self {
        Cell::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn manhattan(self, o: Cell) -> i32 {
        (self.x - o.x).abs() + (self.y - o.y).abs() + (self.z - o.z).abs()
    }

    pub fn chebyshev(self, o: Cell) -> i32 {
        (self.x - o.x).abs().max((self.y - o.y).abs()).max((self.z - o.z).abs())
    }

    /// Face neighbours within the given dimension (4 in 2D, 6 in 3D).
    pub fn neighbors(self, dim: Dimension) -> impl Iterator<Item = Cell> {
        dim.steps().iter().map(move |&s| self.step(s))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

/// One axis-parallel unit translation.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct UnitStep {
    pub axis: Axis,
    pub sign: i8,
}

impl UnitStep {
    pub const fn new(axis: Axis, sign: i8) -> Self {
        UnitStep { axis, sign }
    }
    pub const PX: UnitStep = UnitStep::new(Axis::X, 1);
    pub const NX: UnitStep = UnitStep::new(Axis::X, -1);
    pub const PY: UnitStep = UnitStep::new(Axis::Y, 1);
    pub const NY: UnitStep = UnitStep::new(Axis::Y, -1);
    pub const PZ: UnitStep = UnitStep::new(Axis::Z, 1);
    pub const NZ: UnitStep = UnitStep::new(Axis::Z, -1);

    pub fn reversed(self) -> Self {
        UnitStep::new(self.axis, -self.sign)
    }

    /// The step that moves `from` to the face-adjacent cell `to`.
    pub fn between(from: Cell, to: Cell) -> Option<UnitStep> {
        let d = to.sub(from);
        match (d.x, d.y, d.z) {
            (1, 0, 0) => Some(Self::PX),
            (-1, 0, 0) => Some(Self::NX),
            (0, 1, 0) => Some(Self::PY),
            (0, -1, 0) => Some(Self::NY),
            (0, 0, 1) => Some(Self::PZ),
            (0, 0, -1) => Some(Self::NZ),
            _ => None,
        }
    }
}

impl fmt::Display for UnitStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign > 0 { '+' } else { '-' };
        write!(f, "{}{}", s, self.axis.name())
    }
}

impl std::str::FromStr for UnitStep {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim().replace('\u{2212}', "-");
        let mut ch = s.chars();
        let sign = match ch.next() {
            Some('+') => 1,
            Some('-') => -1,
            _ => return Err(format!("bad step {s:?}")),
        };
        let axis = match (ch.next(), ch.next()) {
            (Some('x'), None) => Axis::X,
            (Some('y'), None) => Axis::Y,
            (Some('z'), None) => Axis::Z,
            _ => return Err(format!("bad step {s:?}")),
        };
        Ok(UnitStep::new(axis, sign))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Dimension {
    Two,
    Three,
}

const STEPS_2D: [UnitStep; 4] = [UnitStep::PX, UnitStep::NX, UnitStep::PY, UnitStep::NY];
const STEPS_3D: [UnitStep; 6] = [
    UnitStep::PX,
    UnitStep::NX,
    UnitStep::PY,
    UnitStep::NY,
    UnitStep::PZ,
    UnitStep::NZ,
];

impl Dimension {
    pub fn axes(self) -> &'static [Axis] {
        match self {
            Dimension::Two => &Axis::ALL[..2],
            Dimension::Three => &Axis::ALL,
        }
    }

    pub fn steps(self) -> &'static [UnitStep] {
        match self {
            Dimension::Two => &STEPS_2D,
            Dimension::Three => &STEPS_3D,
        }
    }

    pub fn from_int(d: u8) -> Option<Self> {
        match d {
            2 => Some(Dimension::Two),
            3 => Some(Dimension::Three),
            _ => None,
        }
    }

    pub fn as_int(self) -> u8 {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }
}

/// Inclusive axis-aligned box.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct CellBox {
    pub min: Cell,
    pub max: Cell,
}

impl CellBox {
    pub fn new(min: Cell, max: Cell) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        CellBox { min, max }
    }

    pub fn of_cells<'a>(cells: impl IntoIterator<Item = &'a Cell>) -> Option<Self> {
        let mut it = cells.into_iter();
        let first = *it.next()?;
        let (lo, hi) = it.fold((first, first), |(lo, hi), &c| (lo.min(c), hi.max(c)));
        Some(CellBox::new(lo, hi))
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.min.x
            && c.x <= self.max.x
            && c.y >= self.min.y
            && c.y <= self.max.y
            && c.z >= self.min.z
            && c.z <= self.max.z
    }

    /// Grows the box by `m` along every axis of `dim`.
    pub fn inflate(&self, m: i32, dim: Dimension) -> Self {
        let mz = if dim == Dimension::Two { 0 } else { m };
        CellBox::new(self.min.offset(-m, -m, -mz), self.max.offset(m, m, mz))
    }

    pub fn union(&self, o: &CellBox) -> Self {
        CellBox::new(self.min.min(o.min), self.max.max(o.max))
    }

    pub fn extent(&self, axis: Axis) -> i32 {
        self.max.get(axis) - self.min.get(axis) + 1
    }

    pub fn volume(&self) -> usize {
        Axis::ALL.iter().map(|&a| self.extent(a) as usize).product()
    }

    pub fn on_boundary(&self, c: Cell) -> bool {
        self.contains(c)
            && Axis::ALL.iter().any(|&a| {
                self.extent(a) > 1 && (c.get(a) == self.min.get(a) || c.get(a) == self.max.get(a))
            })
    }

    /// Dense row-major index, `None` outside the box.
    pub fn index(&self, c: Cell) -> Option<usize> {
        if !self.contains(c) {
            return None;
        }
        let ex = self.extent(Axis::X) as usize;
        let ey = self.extent(Axis::Y) as usize;
        let (x, y, z) = (
            (c.x - self.min.x) as usize,
            (c.y - self.min.y) as usize,
            (c.z - self.min.z) as usize,
        );
        Some((z * ey + y) * ex + x)
    }

    /// Cells in lexicographic (x, y, z) order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let b = *self;
        (b.min.x..=b.max.x).flat_map(move |x| {
            (b.min.y..=b.max.y)
                .flat_map(move |y| (b.min.z..=b.max.z).map(move |z| Cell::new(x, y, z)))
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ModuleId(pub u32);

impl fmt::Display for ModuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite set of occupied cells with stable module identities.
#[derive(Clone, Debug)]
pub struct Configuration {
    dim: Dimension,
    index: FxHashMap<Cell, ModuleId>,
    positions: Vec<Cell>,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.positions == other.positions
    }
}

impl Eq for Configuration {}

impl Configuration {
    /// Builds a configuration; ids are assigned in lexicographic cell order.
    pub fn new(dim: Dimension, cells: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let mut v: Vec<Cell> = cells.into_iter().collect();
        v.sort();
        for w in v.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Duplicate(w[0]));
            }
        }
        Self::with_positions(dim, v)
    }

    /// Builds a configuration where module `i` sits at `positions[i]`.
    pub fn with_positions(dim: Dimension, positions: Vec<Cell>) -> Result<Self> {
        let mut index = FxHashMap::default();
        index.reserve(positions.len());
        for (i, &c) in positions.iter().enumerate() {
            if dim == Dimension::Two && c.z != 0 {
                return Err(Error::NonPlanar(c));
            }
            if index.insert(c, ModuleId(i as u32)).is_some() {
                return Err(Error::Duplicate(c));
            }
        }
        Ok(Configuration { dim, index, positions })
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.index.contains_key(&c)
    }

    pub fn module_at(&self, c: Cell) -> Option<ModuleId> {
        self.index.get(&c).copied()
    }

    pub fn position(&self, id: ModuleId) -> Option<Cell> {
        self.positions.get(id.0 as usize).copied()
    }

    /// Occupied cells in module-id order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.positions.iter().copied()
    }

    pub fn positions(&self) -> &[Cell] {
        &self.positions
    }

    pub fn sorted_cells(&self) -> Vec<Cell> {
        let mut v = self.positions.clone();
        v.sort();
        v
    }

    pub fn cell_set(&self) -> BTreeSet<Cell> {
        self.positions.iter().copied().collect()
    }

    pub fn same_cells(&self, other: &Configuration) -> bool {
        self.len() == other.len() && self.cells().all(|c| other.contains(c))
    }

    pub fn modules(&self) -> impl Iterator<Item = (ModuleId, Cell)> + '_ {
        self.positions
            .iter()
            .enumerate()
            .map(|(i, &c)| (ModuleId(i as u32), c))
    }

    /// Relocates a module; the destination must be empty.
    pub fn move_module(&mut self, id: ModuleId, to: Cell) -> Result<()> {
        let from = self.position(id).ok_or(Error::UnknownModule(id.0))?;
        if from == to {
            return Ok(());
        }
        if self.dim == Dimension::Two && to.z != 0 {
            return Err(Error::NonPlanar(to));
        }
        if self.index.contains_key(&to) {
            return Err(Error::Occupied(to));
        }
        self.index.remove(&from);
        self.index.insert(to, id);
        self.positions[id.0 as usize] = to;
        Ok(())
    }

    pub fn bounding_box(&self, margin: i32) -> Result<CellBox> {
        CellBox::of_cells(self.positions.iter())
            .map(|b| b.inflate(margin, self.dim))
            .ok_or(Error::Empty)
    }
}

pub fn bounding_box(config: &Configuration, margin: i32) -> Result<CellBox> {
    config.bounding_box(margin)
}

/// Number of face-connected components of a cell set.
pub fn component_count(cells: &FxHashSet<Cell>, dim: Dimension) -> usize {
    let mut seen: FxHashSet<Cell> = FxHashSet::default();
    let mut count = 0;
    let mut queue = VecDeque::new();
    for &c in cells {
        if !seen.insert(c) {
            continue;
        }
        count += 1;
        queue.push_back(c);
        while let Some(u) = queue.pop_front() {
            for v in u.neighbors(dim) {
                if cells.contains(&v) && seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
    }
    count
}

/// Face-connected components, each sorted, ordered by their minimum cell.
pub fn components(cells: &BTreeSet<Cell>, dim: Dimension) -> Vec<Vec<Cell>> {
    let mut seen: FxHashSet<Cell> = FxHashSet::default();
    let mut out = Vec::new();
    for &c in cells {
        if !seen.insert(c) {
            continue;
        }
        let mut comp = vec![c];
        let mut queue = VecDeque::from([c]);
        while let Some(u) = queue.pop_front() {
            for v in u.neighbors(dim) {
                if cells.contains(&v) && seen.insert(v) {
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort();
        out.push(comp);
    }
    out
}

/// Whether the occupied cells, optionally minus one, form at most one component.
pub fn is_connected_without(config: &Configuration, without: Option<Cell>) -> bool {
    let n = config.len() - usize::from(without.is_some_and(|c| config.contains(c)));
    let Some(start) = config.cells().find(|&c| Some(c) != without) else {
        return true;
    };
    let mut seen: FxHashSet<Cell> = FxHashSet::default();
    seen.insert(start);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for v in u.neighbors(config.dim()) {
            if Some(v) != without && config.contains(v) && seen.insert(v) {
                stack.push(v);
            }
        }
    }
    seen.len() == n
}

pub fn is_connected(config: &Configuration) -> bool {
    is_connected_without(config, None)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum EmptyKind {
    Outer,
    Void(usize),
}

/// Outer/void classification of the empty cells around a configuration.
#[derive(Clone, Debug)]
pub struct EmptyRegionLabel {
    region: CellBox,
    // 0 occupied, 1 outer, 2 + i void i
    labels: Vec<u32>,
    void_sizes: Vec<usize>,
}

impl EmptyRegionLabel {
    pub fn region(&self) -> CellBox {
        self.region
    }

    /// `None` for occupied cells; cells outside the region are outer.
    pub fn get(&self, c: Cell) -> Option<EmptyKind> {
        match self.region.index(c) {
            None => Some(EmptyKind::Outer),
            Some(i) => match self.labels[i] {
                0 => None,
                1 => Some(EmptyKind::Outer),
                v => Some(EmptyKind::Void(v as usize - 2)),
            },
        }
    }

    pub fn is_outer(&self, c: Cell) -> bool {
        self.get(c) == Some(EmptyKind::Outer)
    }

    pub fn is_void(&self, c: Cell) -> bool {
        matches!(self.get(c), Some(EmptyKind::Void(_)))
    }

    pub fn void_count(&self) -> usize {
        self.void_sizes.len()
    }

    pub fn void_sizes(&self) -> &[usize] {
        &self.void_sizes
    }

    pub fn void_cells(&self, i: usize) -> Vec<Cell> {
        self.region
            .cells()
            .filter(|&c| self.get(c) == Some(EmptyKind::Void(i)))
            .collect()
    }
}

/// Flood-fills the empty cells of the bounding box inflated by `k + 1`.
pub fn label_empty_space(config: &Configuration, k: i32) -> EmptyRegionLabel {
    let dim = config.dim();
    let region = match config.bounding_box(k.max(0) + 1) {
        Ok(b) => b,
        Err(_) => {
            return EmptyRegionLabel {
                region: CellBox::new(Cell::default(), Cell::default()),
                labels: vec![1],
                void_sizes: vec![],
            }
        }
    };
    const UNSEEN: u32 = u32::MAX;
    let mut labels = vec![UNSEEN; region.volume()];
    for c in config.cells() {
        labels[region.index(c).unwrap()] = 0;
    }
    let flood = |labels: &mut Vec<u32>, seed: Cell, tag: u32| -> usize {
        let mut n = 1;
        labels[region.index(seed).unwrap()] = tag;
        let mut queue = VecDeque::from([seed]);
        while let Some(u) = queue.pop_front() {
            for v in u.neighbors(dim) {
                if let Some(i) = region.index(v) {
                    if labels[i] == UNSEEN {
                        labels[i] = tag;
                        n += 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        n
    };
    flood(&mut labels, region.min, 1);
    let mut void_sizes = Vec::new();
    for c in region.cells() {
        if labels[region.index(c).unwrap()] == UNSEEN {
            let tag = 2 + void_sizes.len() as u32;
            void_sizes.push(flood(&mut labels, c, tag));
        }
    }
    EmptyRegionLabel { region, labels, void_sizes }
}

/// Outer empty cells face-adjacent to at least one module.
pub fn surface_empty_cells(config: &Configuration) -> BTreeSet<Cell> {
    let labels = label_empty_space(config, 0);
    let mut out = BTreeSet::new();
    for c in config.cells() {
        for v in c.neighbors(config.dim()) {
            if labels.is_outer(v) {
                out.insert(v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(cells: &[(i32, i32, i32)]) -> Configuration {
        Configuration::new(
            Dimension::Three,
            cells.iter().map(|&(x, y, z)| Cell::new(x, y, z)),
        )
        .unwrap()
    }

    #[test]
    fn bounding_box_examples() {
        let b = cfg(&[(0, 0, 0), (2, 1, 0)]).bounding_box(2).unwrap();
        assert_eq!(b, CellBox::new(Cell::new(-2, -2, -2), Cell::new(4, 3, 2)));
        let b = cfg(&[(0, 0, 0), (1, 0, 0), (0, 1, 0)]).bounding_box(1).unwrap();
        assert_eq!(b, CellBox::new(Cell::new(-1, -1, -1), Cell::new(2, 2, 1)));
        assert_eq!(cfg(&[]).bounding_box(0), Err(Error::Empty));
    }

    #[test]
    fn connectivity_examples() {
        assert!(is_connected(&cfg(&[(0, 0, 0), (1, 0, 0)])));
        assert!(!is_connected(&cfg(&[(0, 0, 0), (2, 0, 0)])));
        assert!(!is_connected(&cfg(&[(0, 0, 0), (1, 1, 0)])));
        assert!(is_connected(&cfg(&[])));
    }

    #[test]
    fn duplicates_and_planarity_rejected() {
        let c = Cell::new(1, 1, 0);
        assert_eq!(
            Configuration::new(Dimension::Three, [c, c]),
            Err(Error::Duplicate(c))
        );
        assert!(Configuration::new(Dimension::Two, [Cell::new(0, 0, 1)]).is_err());
    }

    #[test]
    fn voids_of_boxes() {
        let solid: Vec<_> = CellBox::new(Cell::new(0, 0, 0), Cell::new(2, 2, 2))
            .cells()
            .collect();
        let c = Configuration::new(Dimension::Three, solid.clone()).unwrap();
        assert_eq!(label_empty_space(&c, 2).void_count(), 0);
        let hollow = solid.into_iter().filter(|&c| c != Cell::new(1, 1, 1));
        let c = Configuration::new(Dimension::Three, hollow).unwrap();
        let l = label_empty_space(&c, 2);
        assert_eq!(l.void_sizes(), &[1]);
        assert_eq!(l.void_cells(0), vec![Cell::new(1, 1, 1)]);
    }

    #[test]
    fn surface_of_column() {
        assert_eq!(surface_empty_cells(&cfg(&[(0, 0, 0)])).len(), 6);
        assert_eq!(surface_empty_cells(&cfg(&[(0, 0, 0), (0, 0, 1)])).len(), 10);
    }

    #[test]
    fn move_module_updates_both_maps() {
        let mut c = cfg(&[(0, 0, 0), (1, 0, 0)]);
        let id = c.module_at(Cell::new(1, 0, 0)).unwrap();
        c.move_module(id, Cell::new(1, 1, 0)).unwrap();
        assert_eq!(c.position(id), Some(Cell::new(1, 1, 0)));
        assert!(!c.contains(Cell::new(1, 0, 0)));
        assert_eq!(
            c.move_module(id, Cell::new(0, 0, 0)),
            Err(Error::Occupied(Cell::new(0, 0, 0)))
        );
    }
}
