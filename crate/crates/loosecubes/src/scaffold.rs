//! Disassembly of an arbitrary polycube into a straight line with the help of
//! a sweeping strip of scaffold modules.
//!
//! A diagonal band of scaffold sweeps the region `U ⊇ T` from its largest to
//! its smallest sweep key. In front of the band lies what is left of `T`,
//! behind it everything has already been parked in the deposit line.

use crate::error::{Error, Result};
use crate::lattice::{is_connected, is_connected_without, Cell, CellBox, Configuration, Dimension, UnitStep};
use crate::motion::{Field, Schedule};
use crate::transport::{Carrier, Deposit, Workbench};
use rustc_hash::{FxHashMap, FxHashSet};
use std::collections::{BTreeSet, VecDeque};
use std::hash::{Hash, Hasher};

/// Exact sweep key `primary + eps1·ε + eps2·ε²`; larger keys are swept first.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct SweepKey {
    pub primary: i64,
    pub eps1: i64,
    pub eps2: i64,
}

/// How cells on the same sweep line are ordered.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum TieBreak {
    /// The sign of the ε term: smaller y first.
    #[default]
    Epsilon,
    /// Larger y first.
    HigherYFirst,
}

pub fn sweep_key(c: Cell, dim: Dimension, tie: TieBreak) -> SweepKey {
    let (x, y, z) = (c.x as i64, c.y as i64, c.z as i64);
    let ys = match tie {
        TieBreak::Epsilon => -y,
        TieBreak::HigherYFirst => y,
    };
    match dim {
        Dimension::Two => SweepKey { primary: 3 * x + 5 * y, eps1: ys, eps2: 0 },
        Dimension::Three => SweepKey { primary: x + 3 * y + 3 * z, eps1: ys, eps2: -z },
    }
}

/// Place/remove pairs of the sweep over `u`, in processing order.
pub fn sweep_events(u: &BTreeSet<Cell>, dim: Dimension) -> Vec<(Cell, Cell)> {
    let mut cells: Vec<Cell> = u.iter().copied().collect();
    cells.sort_by_key(|&c| std::cmp::Reverse(sweep_key(c, dim, TieBreak::Epsilon)));
    cells.into_iter().map(|c| (c, c.offset(1, 1, 0))).collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum DigAction {
    Place(Cell),
    Remove(Cell),
}

/// One case of digging a module into the band; actions within a phase may be
/// performed in any order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DigPlan {
    pub case: u8,
    pub phases: Vec<Vec<DigAction>>,
}

fn rm(c: Cell, dx: i32, dy: i32, dz: i32) -> DigAction {
    DigAction::Remove(c.offset(dx, dy, dz))
}

fn pl(c: Cell, dx: i32, dy: i32, dz: i32) -> DigAction {
    DigAction::Place(c.offset(dx, dy, dz))
}

pub fn dig_phases_2d(case: u8, e: Cell) -> Vec<Vec<DigAction>> {
    match case {
        1 => vec![
            vec![rm(e, 1, 1, 0), rm(e, 0, 1, 0)],
            vec![rm(e, 1, 0, 0), rm(e, 2, 0, 0)],
            vec![pl(e, 0, 0, 0)],
            vec![pl(e, 1, 0, 0), pl(e, 2, 0, 0)],
            vec![pl(e, 0, 1, 0)],
        ],
        2 => vec![
            vec![rm(e, 1, 1, 0), rm(e, 0, 1, 0)],
            vec![rm(e, -1, 2, 0), rm(e, -1, 1, 0)],
            vec![pl(e, 0, 0, 0)],
            vec![pl(e, -1, 1, 0), pl(e, -1, 2, 0)],
            vec![pl(e, 0, 1, 0)],
        ],
        _ => vec![
            vec![rm(e, 1, 1, 0), rm(e, 0, 1, 0), rm(e, 1, 0, 0)],
            vec![rm(e, -1, 1, 0), rm(e, -1, 2, 0), rm(e, -2, 2, 0)],
            vec![pl(e, 1, 0, 0), pl(e, 0, 0, 0)],
            vec![pl(e, 0, 1, 0), pl(e, -1, 1, 0)],
            vec![pl(e, -2, 2, 0), pl(e, -1, 2, 0)],
        ],
    }
}

/// Case 1: module at (x−1,y); Case 2: module at (x−2,y+1) but not (x−1,y);
/// Case 3: neither.
pub fn dig_case_2d(occupied: impl Fn(Cell) -> bool, e: Cell) -> DigPlan {
    let case = if occupied(e.offset(-1, 0, 0)) {
        1
    } else if occupied(e.offset(-2, 1, 0)) {
        2
    } else {
        3
    };
    DigPlan { case, phases: dig_phases_2d(case, e) }
}

pub fn dig_phases_3d(case: u8, e: Cell) -> Vec<Vec<DigAction>> {
    match case {
        1 => vec![
            vec![rm(e, 1, 1, 0), rm(e, 0, 1, 0), rm(e, 0, 0, 1)],
            vec![rm(e, 1, 0, 0), rm(e, 2, 0, 0), rm(e, 3, 0, 0)],
            vec![pl(e, 0, 0, 0), pl(e, 1, 0, 0), pl(e, 2, 0, 0), pl(e, 3, 0, 0)],
            vec![pl(e, 0, 1, 0), pl(e, 0, 0, 1)],
        ],
        _ => vec![
            vec![rm(e, 1, 1, 0), rm(e, 0, 1, 0), rm(e, -1, 1, 0), rm(e, 0, 0, 1), rm(e, -1, 0, 1)],
            vec![pl(e, 0, 0, 0)],
            vec![pl(e, -1, 1, 0), pl(e, -1, 0, 1), pl(e, 0, 1, 0), pl(e, 0, 0, 1)],
        ],
    }
}

/// Case 1: module at (x−1,y,z); Case 2 otherwise.
pub fn dig_case_3d(occupied: impl Fn(Cell) -> bool, e: Cell) -> DigPlan {
    let case = if occupied(e.offset(-1, 0, 0)) { 1 } else { 2 };
    DigPlan { case, phases: dig_phases_3d(case, e) }
}

/// Snapshot of the structure between two sweep events.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SweepState {
    pub remainder: BTreeSet<Cell>,
    pub sweep_band: BTreeSet<Cell>,
    pub perimeter_path: BTreeSet<Cell>,
    pub deposit_line: Vec<Cell>,
    pub t: SweepKey,
    pub region_u: BTreeSet<Cell>,
}

impl SweepState {
    pub fn union(&self) -> BTreeSet<Cell> {
        let mut all = self.remainder.clone();
        all.extend(&self.sweep_band);
        all.extend(&self.perimeter_path);
        all.extend(self.deposit_line.iter().copied());
        all
    }

    pub fn parts_disjoint(&self) -> bool {
        let total =
            self.remainder.len() + self.sweep_band.len() + self.perimeter_path.len() + self.deposit_line.len();
        self.union().len() == total
    }
}

#[derive(Clone, Debug)]
pub struct ScaffoldOptions {
    pub reduced_u: bool,
    pub tie: TieBreak,
    /// Width of the padding layer around `U` in 3D.
    pub pad: i32,
    /// Spare modules kept in the deposit beyond the computed need.
    pub slack: usize,
    /// Record a `SweepState` after every event.
    pub trace: bool,
}

impl Default for ScaffoldOptions {
    fn default() -> Self {
        ScaffoldOptions { reduced_u: true, tie: TieBreak::Epsilon, pad: 0, slack: 2, trace: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScaffoldStats {
    /// Modules added to `T` for the whole run.
    pub extra: usize,
    pub moves: usize,
    pub steps: usize,
    pub events: usize,
    /// Largest number of scaffold modules standing at once.
    pub max_scaffold: usize,
    pub region_size: usize,
    /// Events resolved by direct placement, by each dig case, and by local search.
    pub direct: usize,
    pub dug: [usize; 4],
    pub searched: usize,
    /// Dig events where the case chosen by the guards did not apply.
    pub case_mismatch: usize,
    /// Band cells placed after their own event, or never placed.
    pub deferred: usize,
    pub dropped: usize,
}

impl ScaffoldStats {
    pub fn line(&self) -> String {
        format!("extra={} moves={} steps={}", self.extra, self.moves, self.steps)
    }
}

#[derive(Clone, Debug)]
pub struct ScaffoldPlan {
    /// `T` together with the extra modules; schedule ids refer to this.
    pub initial: Configuration,
    pub schedule: Schedule,
    pub stats: ScaffoldStats,
    pub trace: Vec<SweepState>,
}

/// Geometry shared by the 2D and 3D sweeps.
struct Layout {
    dim: Dimension,
    tie: TieBreak,
    t: FxHashSet<Cell>,
    u: FxHashSet<Cell>,
    /// Every cell the band may occupy.
    domain: FxHashSet<Cell>,
    /// Present from the start until the band passes them.
    lower: FxHashSet<Cell>,
    /// Never removed by the band; torn down in this order at the end.
    upper: Vec<Cell>,
    /// Offset to the cell whose event removes a cell.
    pad_shift: Cell,
    /// Cells that leave once the band makes them redundant, with the event
    /// at which they do.
    floating: FxHashSet<Cell>,
    late: FxHashMap<Cell, Cell>,
    /// Band width behind floating cells outside `u`.
    pad_width: i64,
}

impl Layout {
    fn key(&self, c: Cell) -> SweepKey {
        sweep_key(c, self.dim, self.tie)
    }

    fn shift(&self, c: Cell) -> Cell {
        if self.u.contains(&c) || self.dim == Dimension::Two {
            Cell::new(1, 1, 0)
        } else {
            self.pad_shift
        }
    }

    /// Sorted events with the cells leaving at each.
    fn events(&self) -> Vec<(Cell, Vec<Cell>)> {
        let upper: FxHashSet<Cell> = self.upper.iter().copied().collect();
        let mut leave: FxHashMap<Cell, Vec<Cell>> = FxHashMap::default();
        for &c in &self.domain {
            leave.entry(c).or_default();
            if self.floating.contains(&c) {
                if let Some(&e) = self.late.get(&c) {
                    leave.entry(e).or_default().push(c);
                }
            } else if !upper.contains(&c) {
                leave.entry(c.sub(self.shift(c))).or_default().push(c);
            }
        }
        let mut out: Vec<(Cell, Vec<Cell>)> = leave
            .into_iter()
            .map(|(e, mut l)| {
                l.sort();
                (e, l)
            })
            .collect();
        out.sort_by_key(|(e, _)| std::cmp::Reverse(self.key(*e)));
        out
    }

    /// Decides when each floating cell leaves: at the first event after the
    /// band has passed it where it is redundant and accessible.
    fn settle(&mut self, start: &FxHashSet<Cell>, k: i32) {
        self.late.clear();
        let mut present = start.clone();
        let mut queue: Vec<Cell> = self.floating.iter().copied().collect();
        queue.sort_by_key(|&c| self.key(c));
        let mut waiting: Vec<Cell> = Vec::new();
        for (e, leavers) in self.events() {
            if self.domain.contains(&e) {
                present.insert(e);
            }
            for c in &leavers {
                present.remove(c);
            }
            let t = self.key(e).primary;
            while let Some(&c) = queue.last() {
                let w = if self.u.contains(&c) { 4 } else { self.pad_width };
                if self.key(c).primary < t + w {
                    break;
                }
                queue.pop();
                if present.contains(&c) {
                    waiting.push(c);
                }
            }
            let mut changed = true;
            while changed {
                changed = false;
                let mut i = 0;
                while i < waiting.len() {
                    let c = waiting[i];
                    if free_cube(&present, c, self.dim) && set_removable(&present, c, self.dim) && {
                        let config = Configuration::new(self.dim, present.iter().copied()).unwrap();
                        Field::new(&config, Some(c), k).accessible(c)
                    } {
                        present.remove(&c);
                        self.late.insert(c, e);
                        waiting.swap_remove(i);
                        changed = true;
                    } else {
                        i += 1;
                    }
                }
            }
        }
    }

    /// Largest number of structure modules at any point of the sweep,
    /// relative to the initial count, and the largest band.
    fn simulate(&self, initial: &FxHashSet<Cell>) -> (usize, usize) {
        let mut present = initial.clone();
        let mut band = 0usize;
        let (mut peak, mut peak_band) = (present.len(), 0);
        for (e, leavers) in self.events() {
            if self.domain.contains(&e) {
                present.insert(e);
                band += 1;
            }
            peak = peak.max(present.len());
            for c in leavers {
                if present.remove(&c) {
                    band -= 1;
                }
            }
            peak_band = peak_band.max(band);
        }
        (peak - initial.len(), peak_band)
    }
}

/// Cells around `c` within `r` are enough to reconnect its neighbours.
fn locally_removable(config: &Configuration, c: Cell, r: i32) -> bool {
    let dim = config.dim();
    let nbrs: Vec<Cell> = c.neighbors(dim).filter(|&n| config.contains(n)).collect();
    let Some(&first) = nbrs.first() else { return config.len() <= 1 };
    let rz = if dim == Dimension::Two { 0 } else { r };
    let window = CellBox::new(c.offset(-r, -r, -rz), c.offset(r, r, rz));
    let mut seen: FxHashSet<Cell> = FxHashSet::default();
    seen.insert(first);
    let mut queue = VecDeque::from([first]);
    while let Some(u) = queue.pop_front() {
        for v in u.neighbors(dim) {
            if v != c && window.contains(v) && config.contains(v) && seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    nbrs.iter().all(|n| seen.contains(n))
}

fn free_cube(set: &FxHashSet<Cell>, c: Cell, dim: Dimension) -> bool {
    let zs: &[i32] = if dim == Dimension::Two { &[0] } else { &[-1, 0] };
    for dx in [-1, 0] {
        for dy in [-1, 0] {
            for &dz in zs {
                let a = c.offset(dx, dy, dz);
                let b = CellBox::new(a, a.offset(1, 1, -zs[0]));
                if b.cells().all(|q| q == c || !set.contains(&q)) {
                    return true;
                }
            }
        }
    }
    false
}

fn set_removable(set: &FxHashSet<Cell>, c: Cell, dim: Dimension) -> bool {
    let nbrs: Vec<Cell> = c.neighbors(dim).filter(|n| set.contains(n)).collect();
    let Some(&first) = nbrs.first() else { return set.len() <= 1 };
    let mut seen: FxHashSet<Cell> = FxHashSet::default();
    seen.insert(first);
    let mut queue = VecDeque::from([first]);
    let mut found = 1;
    while let Some(u) = queue.pop_front() {
        for v in u.neighbors(dim) {
            if v != c && set.contains(&v) && seen.insert(v) {
                if nbrs.contains(&v) {
                    found += 1;
                    if found == nbrs.len() {
                        return true;
                    }
                }
                queue.push_back(v);
            }
        }
    }
    found == nbrs.len()
}

/// Cells of `set` farthest from `root` first.
fn peel_order(set: &FxHashSet<Cell>, root: Cell, dim: Dimension) -> Vec<Cell> {
    let mut dist: FxHashMap<Cell, usize> = FxHashMap::default();
    let mut queue = VecDeque::from([(root, 0)]);
    let mut out = Vec::new();
    while let Some((u, d)) = queue.pop_front() {
        for v in u.neighbors(dim) {
            if set.contains(&v) && !dist.contains_key(&v) {
                dist.insert(v, d + 1);
                out.push(v);
                queue.push_back((v, d + 1));
            }
        }
    }
    out.reverse();
    out
}

fn removable(config: &Configuration, c: Cell) -> bool {
    locally_removable(config, c, 3) || is_connected_without(config, Some(c))
}

const MAX_LIFTS: usize = 1200;

struct Sweep<'a> {
    lay: &'a Layout,
    wb: Workbench,
    dep: Deposit,
    expected: FxHashSet<Cell>,
    stats: ScaffoldStats,
    trace: Option<Vec<SweepState>>,
    /// Floating cells not yet passed by the band, largest key last.
    queue: Vec<Cell>,
    /// Passed floating cells still standing.
    waiting: Vec<Cell>,
    /// Band cells whose placement is still owed.
    debt: Vec<Cell>,
    /// Neighbourhood fingerprints at which a search around a cell failed.
    failed: FxHashMap<Cell, u64>,
}

impl<'a> Sweep<'a> {
    fn k(&self) -> i32 {
        self.wb.carrier.k
    }

    /// Checks a sequence of phases without routing, choosing an order within
    /// each phase; returns the linearized actions.
    fn dry_run(&self, phases: &[Vec<DigAction>], target: &FxHashSet<Cell>, touched: &[Cell]) -> Option<Vec<DigAction>> {
        let mut config = self.wb.config.clone();
        let mut len = self.dep.len;
        let mut out = Vec::new();
        let flat: Vec<(usize, DigAction)> =
            phases.iter().enumerate().flat_map(|(i, p)| p.iter().map(move |a| (i, *a))).collect();
        let mut done = vec![false; flat.len()];
        if self.dfs(&mut config, &mut len, &flat, &mut done, target, &mut out) {
            let ok = touched
                .iter()
                .filter(|c| self.lay.domain.contains(c))
                .all(|c| config.contains(*c) == target.contains(c));
            if ok {
                return Some(out);
            }
        }
        None
    }

    fn applicable(&self, config: &Configuration, len: usize, a: DigAction, target: &FxHashSet<Cell>) -> Option<bool> {
        let k = self.k();
        match a {
            DigAction::Remove(c) => {
                if !config.contains(c) || self.dep_index(c, len).is_some() {
                    return Some(false);
                }
                let ok = removable(config, c) && Field::new(config, Some(c), k).accessible(c);
                ok.then_some(true)
            }
            DigAction::Place(c) => {
                if config.contains(c) || !target.contains(&c) {
                    return Some(false);
                }
                let tip = self.dep.cell(len.checked_sub(1)?);
                let attached = c.neighbors(config.dim()).any(|n| n != tip && config.contains(n));
                let ok = attached && Field::new(config, Some(tip), k).accessible(c);
                ok.then_some(true)
            }
        }
    }

    fn dep_index(&self, c: Cell, len: usize) -> Option<usize> {
        (0..len).find(|&i| self.dep.cell(i) == c)
    }

    fn dfs(
        &self,
        config: &mut Configuration,
        len: &mut usize,
        flat: &[(usize, DigAction)],
        done: &mut [bool],
        target: &FxHashSet<Cell>,
        out: &mut Vec<DigAction>,
    ) -> bool {
        let Some(phase) = flat.iter().zip(done.iter()).find(|(_, d)| !**d).map(|((p, _), _)| *p) else {
            return true;
        };
        for i in 0..flat.len() {
            if done[i] || flat[i].0 != phase {
                continue;
            }
            let a = flat[i].1;
            match self.applicable(config, *len, a, target) {
                None => continue,
                Some(false) => {
                    done[i] = true;
                    if self.dfs(config, len, flat, done, target, out) {
                        return true;
                    }
                    done[i] = false;
                    return false;
                }
                Some(true) => {}
            }
            let (id, from, to) = match a {
                DigAction::Remove(c) => (config.module_at(c).unwrap(), c, self.dep.cell(*len)),
                DigAction::Place(c) => {
                    let tip = self.dep.cell(*len - 1);
                    (config.module_at(tip).unwrap(), tip, c)
                }
            };
            config.move_module(id, to).unwrap();
            let dl = if matches!(a, DigAction::Remove(_)) { 1isize } else { -1 };
            *len = (*len as isize + dl) as usize;
            done[i] = true;
            out.push(a);
            if self.dfs(config, len, flat, done, target, out) {
                return true;
            }
            out.pop();
            done[i] = false;
            *len = (*len as isize - dl) as usize;
            config.move_module(id, from).unwrap();
        }
        false
    }

    fn execute(&mut self, actions: &[DigAction]) -> Result<()> {
        for &a in actions {
            match a {
                DigAction::Remove(c) => self.wb.stow(c, &mut self.dep)?,
                DigAction::Place(c) => self.wb.fetch(&mut self.dep, c)?,
            }
        }
        Ok(())
    }

    fn attempt(&mut self, phases: &[Vec<DigAction>], target: &FxHashSet<Cell>, touched: &[Cell]) -> bool {
        let Some(actions) = self.dry_run(phases, target, touched) else {
            return false;
        };
        let saved = (self.wb.config.clone(), self.wb.moves.len(), self.dep.clone());
        if self.execute(&actions).is_ok() {
            return true;
        }
        self.wb.config = saved.0;
        self.wb.moves.truncate(saved.1);
        self.dep = saved.2;
        false
    }

    fn process(&mut self, e: Cell, leavers: &[Cell]) -> Result<()> {
        let lay = self.lay;
        let enter = lay.domain.contains(&e) && !self.expected.contains(&e);
        let present_leavers: Vec<Cell> = leavers.iter().copied().filter(|c| self.wb.config.contains(*c)).collect();
        if lay.domain.contains(&e) {
            self.expected.insert(e);
        }
        for c in leavers {
            self.expected.remove(c);
        }
        if !enter && present_leavers.is_empty() {
            return Ok(());
        }
        let target = self.expected.clone();
        let mut touched: Vec<Cell> = leavers.to_vec();
        touched.push(e);
        let removal: Vec<DigAction> = present_leavers.iter().map(|&c| DigAction::Remove(c)).collect();
        if !enter {
            if self.attempt(&[removal], &target, &touched) {
                return Ok(());
            }
            return self.search(e, &target, &touched, false);
        }
        if self.place(e, &target, &touched, &removal) {
            return Ok(());
        }
        self.search(e, &target, &touched, true)
    }

    /// Places `e` and performs `removal`, by a direct move, a dig case or
    /// local search.
    fn place(&mut self, e: Cell, target: &FxHashSet<Cell>, touched: &[Cell], removal: &[DigAction]) -> bool {
        let lay = self.lay;
        let direct = vec![vec![DigAction::Place(e)], removal.to_vec()];
        let occupied = |c: Cell| self.wb.config.contains(c);
        let (first, cases): (u8, Vec<u8>) = match lay.dim {
            Dimension::Two => (dig_case_2d(occupied, e).case, vec![1, 2, 3]),
            Dimension::Three => (dig_case_3d(occupied, e).case, vec![1, 2]),
        };
        let mut order: Vec<u8> = vec![first];
        order.extend(cases.into_iter().filter(|&c| c != first));
        let inside = lay.u.contains(&e);
        if !inside && self.attempt(&direct, target, touched) {
            self.stats.direct += 1;
            return true;
        }
        for case in order {
            let mut phases = match lay.dim {
                Dimension::Two => dig_phases_2d(case, e),
                Dimension::Three => dig_phases_3d(case, e),
            };
            phases.push(removal.to_vec());
            let mut t2 = touched.to_vec();
            t2.extend(phases.iter().flatten().map(|a| match a {
                DigAction::Place(c) | DigAction::Remove(c) => *c,
            }));
            if self.attempt(&phases, target, &t2) {
                self.stats.dug[case as usize] += 1;
                self.stats.case_mismatch += usize::from(case != first);
                return true;
            }
        }
        if inside && self.attempt(&direct, target, touched) {
            self.stats.direct += 1;
            return true;
        }
        self.lift_around(e, target, touched, true)
    }

    fn structure(&self) -> FxHashSet<Cell> {
        let dep: FxHashSet<Cell> = self.dep.cells().into_iter().collect();
        self.wb.config.cells().filter(|c| !dep.contains(c)).collect()
    }

    fn width(&self, c: Cell) -> i64 {
        if self.lay.u.contains(&c) || self.lay.t.contains(&c) {
            4
        } else {
            self.lay.pad_width
        }
    }

    /// Tries to stow `c` if it is redundant and reachable right now.
    fn try_stow(&mut self, c: Cell) -> bool {
        if !self.wb.config.contains(c)
            || !removable(&self.wb.config, c)
            || !Field::new(&self.wb.config, Some(c), self.k()).accessible(c)
        {
            return false;
        }
        let saved = (self.wb.config.clone(), self.wb.moves.len(), self.dep.clone());
        if self.wb.stow(c, &mut self.dep).is_ok() {
            return true;
        }
        self.wb.config = saved.0;
        self.wb.moves.truncate(saved.1);
        self.dep = saved.2;
        false
    }

    /// One event of the adaptive sweep: the band cell enters if it can, and
    /// passed cells leave as soon as nothing depends on them.
    fn advance(&mut self, e: Cell) {
        let lay = self.lay;
        let t = lay.key(e).primary;
        if lay.domain.contains(&e) && !self.wb.config.contains(e) {
            self.debt.push(e);
        }
        let mut i = 0;
        while i < self.debt.len() {
            let c = self.debt[i];
            if lay.key(c).primary < t + self.width(c) && !self.wb.config.contains(c) {
                let mut target = self.structure();
                target.insert(c);
                if self.place(c, &target, &[c], &[]) {
                    self.stats.deferred += usize::from(c != e);
                    self.debt.swap_remove(i);
                    continue;
                }
                i += 1;
            } else {
                self.stats.dropped += usize::from(!self.wb.config.contains(c));
                self.debt.swap_remove(i);
            }
        }
        while let Some(&c) = self.queue.last() {
            if lay.key(c).primary < t + self.width(c) {
                break;
            }
            self.queue.pop();
            self.waiting.push(c);
        }
        self.waiting.retain(|&c| self.wb.config.contains(c));
        self.waiting.sort_by_key(|&c| std::cmp::Reverse(lay.key(c)));
        loop {
            let before = self.waiting.len();
            let mut i = 0;
            while i < self.waiting.len() {
                if self.try_stow(self.waiting[i]) {
                    self.waiting.remove(i);
                } else {
                    i += 1;
                }
            }
            if self.waiting.len() == before {
                break;
            }
        }
    }

    /// Stows everything still standing, farthest from the deposit first.
    fn drain(&mut self) -> Result<()> {
        loop {
            let rest = self.structure();
            if rest.is_empty() {
                return Ok(());
            }
            let order = peel_order(&rest, self.dep.cell(0), self.lay.dim);
            if !order.iter().any(|&c| self.try_stow(c)) {
                return Err(Error::InvariantBreach(format!("{} modules stuck after the sweep", rest.len())));
            }
        }
    }

    /// Temporarily lifts a few nearby band modules to make room.
    fn search(&mut self, e: Cell, target: &FxHashSet<Cell>, touched: &[Cell], place: bool) -> Result<()> {
        if self.lift_around(e, target, touched, place) {
            return Ok(());
        }
        Err(Error::InvariantBreach(format!("sweep event at {e}: no admissible action sequence")))
    }

    fn fingerprint(&self, e: Cell, place: bool) -> u64 {
        let mut h = rustc_hash::FxHasher::default();
        let rz = if self.lay.dim == Dimension::Two { 0 } else { 4 };
        for c in CellBox::new(e.offset(-4, -4, -rz), e.offset(4, 4, rz)).cells() {
            self.wb.config.contains(c).hash(&mut h);
        }
        place.hash(&mut h);
        h.finish()
    }

    fn lift_around(&mut self, e: Cell, target: &FxHashSet<Cell>, touched: &[Cell], place: bool) -> bool {
        let fp = self.fingerprint(e, place);
        if self.failed.get(&e) == Some(&fp) {
            return false;
        }
        let found = self.lift_search(e, target, touched, place);
        if !found {
            self.failed.insert(e, fp);
        }
        found
    }

    fn lift_search(&mut self, e: Cell, target: &FxHashSet<Cell>, touched: &[Cell], place: bool) -> bool {
        let lay = self.lay;
        let rz = if lay.dim == Dimension::Two { 0 } else { 2 };
        let window: Vec<Cell> = CellBox::new(e.offset(-2, -2, -rz), e.offset(2, 2, rz))
            .cells()
            .filter(|&c| c != e && self.wb.config.contains(c) && lay.domain.contains(&c))
            .collect();
        let leavers: Vec<DigAction> = touched
            .iter()
            .filter(|c| **c != e && self.wb.config.contains(**c))
            .map(|&c| DigAction::Remove(c))
            .collect();
        let wide: Vec<Cell> = CellBox::new(e.offset(-3, -3, -rz * 3 / 2), e.offset(3, 3, rz * 3 / 2))
            .cells()
            .filter(|&c| c != e && self.wb.config.contains(c) && lay.domain.contains(&c))
            .collect();
        let mut lifts: Vec<Vec<Cell>> = Vec::new();
        if place {
            let zs: &[i32] = if lay.dim == Dimension::Two { &[0] } else { &[-1, 0] };
            let mut cubes: Vec<Vec<Cell>> = Vec::new();
            for dx in [-1, 0] {
                for dy in [-1, 0] {
                    for &dz in zs {
                        let a = e.offset(dx, dy, dz);
                        let q = CellBox::new(a, a.offset(1, 1, -zs[0]));
                        cubes.push(q.cells().filter(|&c| c != e && self.wb.config.contains(c)).collect());
                    }
                }
            }
            cubes.sort_by_key(|q| q.len());
            for size in 0..=2usize {
                for base in &cubes {
                    let rest: Vec<Cell> = wide.iter().copied().filter(|c| !base.contains(c)).collect();
                    for subset in combinations(rest.len(), size) {
                        let mut lift = base.clone();
                        lift.extend(subset.iter().map(|&i| rest[i]));
                        if !lift.is_empty() {
                            lifts.push(lift);
                        }
                    }
                }
            }
        }
        for size in 1..=3usize {
            for subset in combinations(window.len(), size) {
                lifts.push(subset.iter().map(|&i| window[i]).collect());
            }
        }
        for lift in lifts.into_iter().take(MAX_LIFTS) {
            let mut phases = vec![lift.iter().map(|&c| DigAction::Remove(c)).collect::<Vec<_>>()];
            if place {
                phases.push(vec![DigAction::Place(e)]);
            }
            phases.push(lift.iter().map(|&c| DigAction::Place(c)).collect());
            phases.push(leavers.clone());
            let mut t2 = touched.to_vec();
            t2.extend(&lift);
            if self.attempt(&phases, target, &t2) {
                self.stats.searched += 1;
                return true;
            }
        }
        false
    }

    fn record(&mut self, t: SweepKey) {
        let Some(trace) = self.trace.as_mut() else { return };
        let lay = self.lay;
        let deposit_line = self.dep.cells();
        let dep: FxHashSet<Cell> = deposit_line.iter().copied().collect();
        let mut st = SweepState {
            remainder: BTreeSet::new(),
            sweep_band: BTreeSet::new(),
            perimeter_path: BTreeSet::new(),
            deposit_line,
            t,
            region_u: lay.u.iter().copied().collect(),
        };
        for c in self.wb.config.cells() {
            if dep.contains(&c) {
                continue;
            }
            let swept = lay.key(c) >= t;
            if !swept && lay.lower.contains(&c) && (lay.t.contains(&c) || lay.u.contains(&c)) {
                st.remainder.insert(c);
            } else if swept && lay.u.contains(&c) {
                st.sweep_band.insert(c);
            } else {
                st.perimeter_path.insert(c);
            }
        }
        trace.push(st);
    }

    fn audit(&self, e: Cell) -> Result<()> {
        let dep: FxHashSet<Cell> = self.dep.cells().into_iter().collect();
        let n = self.wb.config.len() - dep.len();
        if n != self.expected.len() || self.expected.iter().any(|c| !self.wb.config.contains(*c)) {
            return Err(Error::InvariantBreach(format!("after event {e}: structure differs from the sweep state")));
        }
        Ok(())
    }

    fn run(mut self, teardown: &[Cell], schedule_name: &str, extra: usize) -> Result<(Vec<SweepState>, Schedule, ScaffoldStats)> {
        let events = self.lay.events();
        self.stats.events = events.len();
        let adaptive = !self.lay.floating.is_empty();
        if adaptive {
            self.queue = self.lay.floating.iter().copied().collect();
            self.queue.sort_by_key(|&c| self.lay.key(c));
        }
        for (e, leavers) in &events {
            if adaptive {
                self.advance(*e);
            } else {
                self.process(*e, leavers)?;
                self.audit(*e)?;
            }
            let t = self.lay.key(*e);
            self.record(t);
        }
        if adaptive {
            self.drain()?;
        } else {
            for &c in teardown {
                self.wb.stow(c, &mut self.dep)?;
                self.expected.remove(&c);
            }
            if !self.expected.is_empty() {
                return Err(Error::InvariantBreach("modules left behind after the sweep".into()));
            }
        }
        let mut schedule = Schedule::new(self.k(), schedule_name);
        schedule.moves = std::mem::take(&mut self.wb.moves);
        self.stats.extra = extra;
        self.stats.moves = schedule.moves.len();
        self.stats.steps = schedule.total_steps();
        let s = &self.stats;
        for (k, v) in [
            ("extra", s.extra),
            ("events", s.events),
            ("max_scaffold", s.max_scaffold),
            ("region", s.region_size),
            ("direct", s.direct),
            ("case1", s.dug[1]),
            ("case2", s.dug[2]),
            ("case3", s.dug[3]),
            ("searched", s.searched),
            ("case_mismatch", s.case_mismatch),
            ("deferred", s.deferred),
            ("dropped", s.dropped),
        ] {
            schedule.counters.insert(k.to_string(), v as i64);
        }
        Ok((self.trace.unwrap_or_default(), schedule, self.stats))
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn check_input(t: &Configuration, dim: Dimension) -> Result<()> {
    if t.is_empty() {
        return Err(Error::Empty);
    }
    if t.dim() != dim {
        return Err(Error::Malformed(format!("expected a {}D configuration", dim.as_int())));
    }
    if !is_connected(t) {
        return Err(Error::DisconnectedInput);
    }
    Ok(())
}

/// Rectangular ring order: from `start` on the top row leftwards, around, and
/// closing at the top-right corner.
fn ring_order(d: CellBox, start_x: i32) -> Vec<Cell> {
    let (lo, hi) = (d.min, d.max);
    let mut out = Vec::new();
    for x in (lo.x..=start_x).rev() {
        out.push(Cell::new(x, hi.y, 0));
    }
    for y in (lo.y..hi.y).rev() {
        out.push(Cell::new(lo.x, y, 0));
    }
    for x in lo.x + 1..=hi.x {
        out.push(Cell::new(x, lo.y, 0));
    }
    for y in lo.y + 1..hi.y {
        out.push(Cell::new(hi.x, y, 0));
    }
    for x in start_x + 1..hi.x {
        out.push(Cell::new(x, hi.y, 0));
    }
    out.push(hi);
    out
}

pub fn plan_scaffold_2d(t: &Configuration) -> Result<ScaffoldPlan> {
    plan_scaffold_2d_with(t, &ScaffoldOptions::default())
}

pub fn plan_scaffold_2d_with(t: &Configuration, opts: &ScaffoldOptions) -> Result<ScaffoldPlan> {
    check_input(t, Dimension::Two)?;
    let dim = Dimension::Two;
    let ub = t.bounding_box(0)?;
    let d = ub.inflate(3, dim);
    let u: FxHashSet<Cell> = ub.cells().collect();
    let domain: FxHashSet<Cell> = d.cells().collect();
    let ring: Vec<Cell> = d.cells().filter(|&c| d.on_boundary(c)).collect();
    let cr = t.cells().max_by_key(|c| (c.x, c.y)).unwrap();
    let connector: Vec<Cell> = (cr.y + 1..d.max.y).map(|y| Cell::new(cr.x, y, 0)).collect();
    let tset: FxHashSet<Cell> = t.cells().collect();
    let mut lower: FxHashSet<Cell> = tset.clone();
    lower.extend(&connector);
    lower.extend(&ring);
    let lay = Layout {
        dim,
        tie: opts.tie,
        t: tset,
        u,
        domain,
        lower: lower.clone(),
        upper: Vec::new(),
        pad_shift: Cell::new(1, 1, 0),
        floating: FxHashSet::default(),
        late: FxHashMap::default(),
        pad_width: 6,
    };
    let (growth, peak_band) = lay.simulate(&lower);
    let reserve = growth + opts.slack.max(1);
    let order = ring_order(d, cr.x);
    let pool_len = connector.len() + order.len() + reserve;
    let pool_cells: Vec<Cell> = (1..=pool_len as i32).map(|j| cr.offset(0, j, 0)).collect();
    let initial = Configuration::new(dim, t.cells().chain(pool_cells.iter().copied()))?;

    let mut pool = Deposit::new(cr.offset(0, 1, 0), UnitStep::PY, UnitStep::PX);
    pool.len = pool_len;
    pool.min_lane = (d.max.y - cr.y) as usize;
    let mut wb = Workbench::new(initial.clone(), Carrier::default());
    for &c in order.iter().skip(1) {
        wb.fetch(&mut pool, c)?;
    }
    let mut dep = Deposit::new(Cell::new(d.min.x - 1, d.min.y, 0), UnitStep::NX, UnitStep::NY);
    while pool.len > (d.max.y - cr.y) as usize {
        let tip = pool.tip().unwrap();
        wb.stow(tip, &mut dep)?;
        pool.len -= 1;
    }
    let stats = ScaffoldStats { region_size: d.volume(), max_scaffold: peak_band, ..Default::default() };
    let sweep = Sweep {
        lay: &lay,
        wb,
        dep,
        expected: lower,
        queue: Vec::new(),
        waiting: Vec::new(),
        debt: Vec::new(),
        failed: FxHashMap::default(),
        stats,
        trace: opts.trace.then(Vec::new),
    };
    let (trace, schedule, stats) = sweep.run(&[], "scaffold", pool_len)?;
    Ok(ScaffoldPlan { initial, schedule, stats, trace })
}

/// Metacells (2×2×2 blocks) met by the sweep-normal lines through module
/// centres, clipped to the bounding box of `T`.
pub fn metacell_region(t: &Configuration) -> BTreeSet<Cell> {
    let b = match t.bounding_box(0) {
        Ok(b) => b,
        Err(_) => return BTreeSet::new(),
    };
    let d = [1i32, 3, 3];
    let mut metas: FxHashSet<Cell> = FxHashSet::default();
    for c in t.cells() {
        let lo = 12 * (b.min.x - c.x - 2);
        let hi = 12 * (b.max.x - c.x + 2);
        let mut s = lo - 1;
        while s <= hi + 1 {
            // Sample the line at parameter s/12 with s odd.
            let m = |ci: i32, di: i32| (12 * ci + 6 + s * di).div_euclid(24);
            metas.insert(Cell::new(m(c.x, d[0]), m(c.y, d[1]), m(c.z, d[2])));
            s += 2;
        }
    }
    b.cells()
        .filter(|q| metas.contains(&Cell::new(q.x.div_euclid(2), q.y.div_euclid(2), q.z.div_euclid(2))))
        .collect()
}

pub fn plan_scaffold_3d(t: &Configuration, reduced_u: bool) -> Result<ScaffoldPlan> {
    plan_scaffold_3d_with(t, &ScaffoldOptions { reduced_u, ..Default::default() })
}

pub fn plan_scaffold_3d_with(t: &Configuration, opts: &ScaffoldOptions) -> Result<ScaffoldPlan> {
    check_input(t, Dimension::Three)?;
    let dim = Dimension::Three;
    let tb = t.bounding_box(0)?;
    let u: FxHashSet<Cell> = if opts.reduced_u {
        metacell_region(t).into_iter().collect()
    } else {
        tb.cells().collect()
    };
    let p = opts.pad;
    let mut domain: FxHashSet<Cell> = u.clone();
    for &c in &u {
        for q in CellBox::new(c.offset(-p, -p, -p), c.offset(p, p, p)).cells() {
            domain.insert(q);
        }
    }
    let b = CellBox::of_cells(domain.iter()).unwrap();
    let tset: FxHashSet<Cell> = t.cells().collect();
    let key = |c: Cell| sweep_key(c, dim, opts.tie);
    let top = t.cells().max_by_key(|&c| key(c)).unwrap();
    let mut connector = Vec::new();
    let mut cur = top;
    for (goal, step) in [(b.max.x, UnitStep::PX), (b.max.y, UnitStep::PY), (b.max.z, UnitStep::PZ)] {
        while cur.get(step.axis) != goal {
            cur = cur.step(step);
            connector.push(cur);
        }
    }
    let bottom = t.cells().min_by_key(|&c| key(c)).unwrap();
    let mut cur = bottom;
    for (goal, step) in [(b.min.x, UnitStep::NX), (b.min.y, UnitStep::NY), (b.min.z, UnitStep::NZ)] {
        while cur.get(step.axis) != goal {
            cur = cur.step(step);
            connector.push(cur);
        }
    }
    let mut spine = vec![b.min.offset(-1, 0, 0)];
    let mut c = spine[0];
    for (goal, step) in [(b.max.z, UnitStep::PZ), (b.max.y, UnitStep::PY)] {
        while c.get(step.axis) != goal {
            c = c.step(step);
            spine.push(c);
        }
    }
    let root = spine[0].offset(-1, 0, 0);
    domain.extend(&connector);
    let mut lower: FxHashSet<Cell> = tset.clone();
    lower.extend(&connector);
    let mut lay = Layout {
        dim,
        tie: opts.tie,
        t: tset,
        u,
        domain,
        lower: lower.clone(),
        upper: Vec::new(),
        pad_shift: Cell::new(0, 2, 0),
        floating: FxHashSet::default(),
        late: FxHashMap::default(),
        pad_width: 6,
    };
    lay.floating = lay.domain.clone();
    let mut start: FxHashSet<Cell> = lower.clone();
    start.extend(&spine);
    let mut with_dep = start.clone();
    with_dep.insert(root);
    lay.settle(&with_dep, Carrier::default().k);
    let mut left: FxHashSet<Cell> = lay.floating.iter().copied().filter(|c| !lay.late.contains_key(c)).collect();
    left.extend(&spine);
    let teardown = peel_order(&left, root, dim);
    let (growth, peak_band) = lay.simulate(&start);
    let reserve = growth + opts.slack.max(1);
    let mut dep = Deposit::new(root, UnitStep::NX, UnitStep::NY);
    dep.len = reserve;
    let initial = Configuration::new(dim, start.iter().copied().chain(dep.cells()))?;
    let wb = Workbench::new(initial.clone(), Carrier::default());
    let stats = ScaffoldStats { region_size: lay.domain.len(), max_scaffold: peak_band, ..Default::default() };
    let sweep = Sweep {
        lay: &lay,
        wb,
        dep,
        expected: start,
        stats,
        trace: opts.trace.then(Vec::new),
        queue: Vec::new(),
        waiting: Vec::new(),
        debt: Vec::new(),
        failed: FxHashMap::default(),
    };
    let (trace, schedule, stats) = sweep.run(&teardown, "scaffold", connector.len() + spine.len() + reserve)?;
    Ok(ScaffoldPlan { initial, schedule, stats, trace })
}
