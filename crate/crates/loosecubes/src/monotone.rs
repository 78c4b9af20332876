//! Slice-by-slice deconstruction into a vertical line without extra modules.
//!
//! Every module performs exactly one move. The bottom of the line, `m0`, is
//! the lexicographically largest cell of the top slice and stays in place.

use crate::error::{Error, Result};
use crate::feature_size::{external_feature_size_at_least, violations_near};
use crate::lattice::{
    components, is_connected, is_connected_without, label_empty_space, Cell, Configuration, Dimension,
    EmptyRegionLabel,
};
use crate::motion::{Move, Schedule};
use crate::transport::Carrier;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

const DIM: Dimension = Dimension::Three;

fn up(c: Cell, d: i32) -> Cell {
    c.offset(0, 0, d)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slice {
    pub z: i32,
    /// Sorted.
    pub cells: Vec<Cell>,
    pub on_outer_surface: bool,
}

impl Slice {
    pub fn min_cell(&self) -> Cell {
        self.cells[0]
    }
}

/// All same-z components of `cells`, ordered by (z, minimum cell).
pub fn slices_of(cells: &BTreeSet<Cell>, labels: &EmptyRegionLabel) -> Vec<Slice> {
    let mut by_z: BTreeMap<i32, BTreeSet<Cell>> = BTreeMap::new();
    for &c in cells {
        by_z.entry(c.z).or_default().insert(c);
    }
    let mut out = Vec::new();
    for (z, layer) in by_z {
        for comp in components(&layer, DIM) {
            let on_outer_surface = comp.iter().any(|c| c.neighbors(DIM).any(|v| labels.is_outer(v)));
            out.push(Slice { z, cells: comp, on_outer_surface });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceGraph {
    pub nodes: Vec<Slice>,
    pub edges: Vec<(usize, usize)>,
    pub s0: usize,
}

impl SliceGraph {
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(move |&(a, b)| {
            if a == i {
                Some(b)
            } else if b == i {
                Some(a)
            } else {
                None
            }
        })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    /// Hop distances from `from`; unreachable nodes get `usize::MAX`.
    pub fn distances(&self, from: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.nodes.len()];
        d[from] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u) {
                if d[v] == usize::MAX {
                    d[v] = d[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        d
    }

    pub fn is_locally_maximal(&self, i: usize) -> bool {
        let z = self.nodes[i].z;
        self.neighbors(i).all(|j| self.nodes[j].z < z)
    }

    pub fn is_locally_minimal(&self, i: usize) -> bool {
        let z = self.nodes[i].z;
        self.neighbors(i).all(|j| self.nodes[j].z > z)
    }

    pub fn is_locally_extremal(&self, i: usize) -> bool {
        self.is_locally_maximal(i) || self.is_locally_minimal(i)
    }

    /// Whether the graph minus node `i` is connected.
    pub fn connected_without(&self, i: usize) -> bool {
        let rest: Vec<usize> = (0..self.nodes.len()).filter(|&j| j != i).collect();
        let Some(&start) = rest.first() else { return true };
        let mut seen = vec![false; self.nodes.len()];
        seen[i] = true;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.iter().all(|&b| b)
    }
}

fn graph_over(cells: &BTreeSet<Cell>, labels: &EmptyRegionLabel, m0: Cell) -> SliceGraph {
    let nodes: Vec<Slice> = slices_of(cells, labels)
        .into_iter()
        .filter(|s| s.on_outer_surface)
        .collect();
    let mut owner: BTreeMap<Cell, usize> = BTreeMap::new();
    for (i, s) in nodes.iter().enumerate() {
        for &c in &s.cells {
            owner.insert(c, i);
        }
    }
    let mut edges = BTreeSet::new();
    for (i, s) in nodes.iter().enumerate() {
        for &c in &s.cells {
            if let Some(&j) = owner.get(&up(c, 1)) {
                edges.insert((i.min(j), i.max(j)));
            }
        }
    }
    let s0 = owner.get(&m0).copied().unwrap_or(0);
    SliceGraph { nodes, edges: edges.into_iter().collect(), s0 }
}

/// Top cell: the lexicographically largest cell among those of maximum z.
pub fn choose_m0(cells: &BTreeSet<Cell>) -> Option<Cell> {
    cells.iter().copied().max_by_key(|c| (c.z, *c))
}

pub fn build_slice_graph(config: &Configuration) -> SliceGraph {
    let cells = config.cell_set();
    let labels = label_empty_space(config, 0);
    let m0 = choose_m0(&cells).unwrap_or_default();
    graph_over(&cells, &labels, m0)
}

/// Slices other than `s0` eligible for deconstruction, best first. The
/// first entry is the selection proper.
pub fn slice_candidates(h: &SliceGraph) -> Vec<usize> {
    if h.nodes.len() <= 1 {
        return vec![h.s0];
    }
    let dist = h.distances(h.s0);
    let rank = |i: &usize| (std::cmp::Reverse(dist[*i]), h.nodes[*i].min_cell());
    let mut leaves: Vec<usize> = (0..h.nodes.len())
        .filter(|&i| i != h.s0 && h.degree(i) == 1)
        .collect();
    leaves.sort_by_key(rank);
    let mut extremal: Vec<usize> = (0..h.nodes.len())
        .filter(|&i| i != h.s0 && h.degree(i) != 1 && h.is_locally_extremal(i) && h.connected_without(i))
        .collect();
    extremal.sort_by_key(rank);
    leaves.extend(extremal);
    leaves
}

pub fn select_slice(h: &SliceGraph) -> Option<usize> {
    slice_candidates(h).first().copied()
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Color {
    Red,
    Green,
    Blue,
    Orange,
}

impl Color {
    pub fn reddish(self) -> bool {
        matches!(self, Color::Red | Color::Orange)
    }

    pub fn bluish(self) -> bool {
        !self.reddish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceColoring {
    pub colors: BTreeMap<Cell, Color>,
}

/// Colours the cells of `s` by the cell on the structure side: below for a
/// locally maximal slice, above (`maximal == false`) for a locally minimal one.
pub fn color_slice(config: &Configuration, s: &Slice, maximal: bool) -> SliceColoring {
    let cells = config.cell_set();
    color_with(&cells, &label_empty_space(config, 0), s, maximal)
}

fn color_with(cells: &BTreeSet<Cell>, labels: &EmptyRegionLabel, s: &Slice, maximal: bool) -> SliceColoring {
    let dz = if maximal { -1 } else { 1 };
    let layer: BTreeSet<Cell> = cells.iter().copied().filter(|c| c.z == s.z + dz).collect();
    let mut outer_of: BTreeMap<Cell, bool> = BTreeMap::new();
    for comp in components(&layer, DIM) {
        let outer = comp.iter().any(|c| c.neighbors(DIM).any(|v| labels.is_outer(v)));
        for c in comp {
            outer_of.insert(c, outer);
        }
    }
    let colors = s
        .cells
        .iter()
        .map(|&c| {
            let b = up(c, dz);
            let color = match outer_of.get(&b) {
                Some(true) => Color::Red,
                Some(false) => Color::Orange,
                None if labels.is_outer(b) => Color::Green,
                None => Color::Blue,
            };
            (c, color)
        })
        .collect();
    SliceColoring { colors }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceDigraph {
    pub edges: BTreeSet<(Cell, Cell)>,
    pub reachable: BTreeSet<Cell>,
}

/// Left is −x, up is +y.
pub fn build_slice_digraph(coloring: &SliceColoring) -> SliceDigraph {
    let col = &coloring.colors;
    let mut edges = BTreeSet::new();
    for &c in col.keys() {
        let left = c.offset(-1, 0, 0);
        if col.contains_key(&left) {
            edges.insert((c, left));
        }
        let above = c.offset(0, 1, 0);
        if col.contains_key(&above) {
            edges.insert((c, above));
        }
        for (d1, d2) in [(c.offset(1, 0, 0), c.offset(2, 0, 0)), (c.offset(0, -1, 0), c.offset(0, -2, 0))] {
            if let (Some(a), Some(b), Some(r)) = (col.get(&c), col.get(&d1), col.get(&d2)) {
                if a.bluish() && b.bluish() && r.reddish() {
                    edges.insert((c, d2));
                }
            }
        }
    }
    let mut adj: BTreeMap<Cell, Vec<Cell>> = BTreeMap::new();
    for &(a, b) in &edges {
        adj.entry(a).or_default().push(b);
    }
    let mut reachable: BTreeSet<Cell> = col
        .iter()
        .filter(|(_, &k)| k == Color::Orange)
        .map(|(&c, _)| c)
        .collect();
    let mut stack: Vec<Cell> = reachable.iter().copied().collect();
    while let Some(u) = stack.pop() {
        for &v in adj.get(&u).into_iter().flatten() {
            if reachable.insert(v) {
                stack.push(v);
            }
        }
    }
    SliceDigraph { edges, reachable }
}

fn slice_distances(cells: &[Cell], from: Cell) -> BTreeMap<Cell, usize> {
    let set: BTreeSet<Cell> = cells.iter().copied().collect();
    let mut d = BTreeMap::new();
    d.insert(from, 0);
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        let du = d[&u];
        for v in u.neighbors(DIM) {
            if set.contains(&v) && !d.contains_key(&v) {
                d.insert(v, du + 1);
                queue.push_back(v);
            }
        }
    }
    d
}

fn rightmost_topmost(cells: impl Iterator<Item = Cell>) -> Option<Cell> {
    cells.max_by_key(|c| (c.x, c.y))
}

/// Removal order for a slice: green columns right of the right-most
/// top-most red cell first (right to left), then decreasing distance to it.
/// With `anchor` given, that cell is the reference and stays.
pub fn full_order(s: &Slice, coloring: Option<&SliceColoring>, anchor: Option<Cell>) -> Vec<Cell> {
    let color = |c: &Cell| coloring.and_then(|k| k.colors.get(c).copied());
    let mr = anchor
        .or_else(|| rightmost_topmost(s.cells.iter().copied().filter(|c| color(c) == Some(Color::Red))))
        .or_else(|| rightmost_topmost(s.cells.iter().copied().filter(|c| color(c).is_some_and(Color::reddish))))
        .or_else(|| rightmost_topmost(s.cells.iter().copied()))
        .expect("slices are non-empty");
    let dist = slice_distances(&s.cells, mr);
    let d = |c: &Cell| dist.get(c).copied().unwrap_or(usize::MAX);
    let (mut right, mut rest): (Vec<Cell>, Vec<Cell>) = s
        .cells
        .iter()
        .copied()
        .filter(|&c| Some(c) != anchor)
        .partition(|c| c.x > mr.x && anchor.is_none());
    right.sort_by_key(|c| (std::cmp::Reverse(c.x), std::cmp::Reverse(d(c)), std::cmp::Reverse(*c)));
    rest.sort_by_key(|c| (std::cmp::Reverse(d(c)), std::cmp::Reverse(*c)));
    right.extend(rest);
    right
}

/// Lemma checks on a partial removal: the removed set is row/column convex,
/// removed blue cells lie in removed 2×2 blue squares, and reachable bluish
/// cells sit strictly above or strictly left of some orange cell.
pub fn partial_lemma_failures(coloring: &SliceColoring, digraph: &SliceDigraph) -> Vec<String> {
    let col = &coloring.colors;
    let removed: BTreeSet<Cell> = col.keys().copied().filter(|c| !digraph.reachable.contains(c)).collect();
    let mut out = Vec::new();
    let kept = &digraph.reachable;
    for &a in kept {
        for &b in kept {
            if a < b && (a.x == b.x || a.y == b.y) {
                let between = CellLine::new(a, b);
                if between.clone().all(|c| col.contains_key(&c)) && between.clone().any(|c| removed.contains(&c)) {
                    out.push(format!("reachable {a} and {b} with a removed cell between"));
                }
            }
        }
    }
    for &c in &removed {
        if col[&c] != Color::Blue {
            continue;
        }
        let in_square = [(0, 0), (-1, 0), (0, -1), (-1, -1)].iter().any(|&(dx, dy)| {
            let a = c.offset(dx, dy, 0);
            [(0, 0), (1, 0), (0, 1), (1, 1)]
                .iter()
                .all(|&(ex, ey)| {
                    let q = a.offset(ex, ey, 0);
                    removed.contains(&q) && col[&q] == Color::Blue
                })
        });
        if !in_square {
            out.push(format!("removed blue {c} outside a removed blue 2x2 square"));
        }
    }
    let oranges: Vec<Cell> = col.iter().filter(|(_, &k)| k == Color::Orange).map(|(&c, _)| c).collect();
    for &c in kept {
        if col[&c].bluish() && !oranges.iter().any(|o| c.y > o.y || c.x < o.x) {
            out.push(format!("reachable bluish {c} neither above nor left of an orange cell"));
        }
    }
    out
}

#[derive(Clone)]
struct CellLine {
    cur: Cell,
    end: Cell,
    done: bool,
}

impl CellLine {
    /// Cells strictly between `a` and `b`, which share a row or column.
    fn new(a: Cell, b: Cell) -> Self {
        let mut l = CellLine { cur: a, end: b, done: false };
        l.advance();
        l
    }

    fn advance(&mut self) {
        let d = self.end.sub(self.cur);
        self.cur = self.cur.offset(d.x.signum(), d.y.signum(), d.z.signum());
        self.done = self.cur == self.end;
    }
}

impl Iterator for CellLine {
    type Item = Cell;
    fn next(&mut self) -> Option<Cell> {
        if self.done {
            return None;
        }
        let c = self.cur;
        self.advance();
        Some(c)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CheckCadence {
    Move,
    Slice,
    End,
}

#[derive(Clone, Debug)]
pub struct MonotoneOptions {
    pub cadence: CheckCadence,
    pub carrier: Carrier,
}

impl Default for MonotoneOptions {
    fn default() -> Self {
        MonotoneOptions { cadence: CheckCadence::End, carrier: Carrier::default() }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct MonotoneStats {
    pub moves: usize,
    pub steps: usize,
    pub voids_opened: usize,
    pub slices: usize,
    pub partial: usize,
    /// Moves taken out of the preferred order.
    pub reordered: usize,
    /// Slices skipped because the preferred one made no progress.
    pub fallback_slices: usize,
    pub lemma_failures: usize,
    /// Moves taken although the local feature-size check failed.
    pub unguarded: usize,
    pub feature_size_checks: usize,
    /// Intermediate configurations below feature size 2 (move cadence only).
    pub fs_violations: usize,
}

#[derive(Clone, Debug)]
pub struct MonotonePlan {
    pub m0: Cell,
    pub schedule: Schedule,
    pub stats: MonotoneStats,
}

struct Planner {
    config: Configuration,
    schedule: Schedule,
    m0: Cell,
    line: usize,
    opts: MonotoneOptions,
    stats: MonotoneStats,
}

impl Planner {
    fn tip(&self) -> Cell {
        up(self.m0, self.line as i32 + 1)
    }

    fn structure(&self) -> BTreeSet<Cell> {
        self.config
            .cells()
            .filter(|c| !(c.x == self.m0.x && c.y == self.m0.y && c.z > self.m0.z))
            .collect()
    }

    fn audit(&mut self) -> Result<()> {
        self.stats.feature_size_checks += 1;
        let fs = external_feature_size_at_least(&self.config, 2);
        if !fs.holds {
            return Err(Error::InvariantBreach(format!(
                "feature size below 2 after {} moves: {}",
                self.schedule.moves.len(),
                fs.violations[0]
            )));
        }
        Ok(())
    }

    /// Moves `c` to the line tip if that keeps the structure connected and,
    /// with `guard`, the feature size near the change.
    fn try_move(&mut self, c: Cell, guard: bool) -> Result<bool> {
        if !is_connected_without(&self.config, Some(c)) {
            return Ok(false);
        }
        let tip = self.tip();
        let id = self.config.module_at(c).expect("occupied");
        let mut next = self.config.clone();
        next.move_module(id, tip)?;
        if guard && !violations_near(&next, &[c, tip], 3, 2).holds {
            return Ok(false);
        }
        let Some(steps) = self.opts.carrier.route_direct(&self.config, c, tip) else {
            return Ok(false);
        };
        self.config = next;
        self.stats.steps += steps.len();
        self.schedule.moves.push(Move::new(id, c, steps));
        self.line += 1;
        if self.opts.cadence == CheckCadence::Move {
            self.stats.feature_size_checks += 1;
            if !external_feature_size_at_least(&self.config, 2).holds {
                self.stats.fs_violations += 1;
            }
        }
        Ok(true)
    }

    /// Removes cells in `order`, preferring earlier ones and moves that keep
    /// the feature size. Returns how many moved.
    fn remove(&mut self, order: &[Cell]) -> Result<usize> {
        let mut left: Vec<Cell> = order.to_vec();
        let mut moved = 0;
        'outer: while !left.is_empty() {
            for guard in [true, false] {
                for i in 0..left.len() {
                    if self.try_move(left[i], guard)? {
                        if i > 0 {
                            self.stats.reordered += 1;
                        }
                        if !guard {
                            self.stats.unguarded += 1;
                        }
                        left.remove(i);
                        moved += 1;
                        continue 'outer;
                    }
                }
            }
            break;
        }
        Ok(moved)
    }

    /// One iteration on slice `i` of `h`. Returns the number of modules moved.
    fn deconstruct(&mut self, h: &SliceGraph, i: usize, labels: &EmptyRegionLabel) -> Result<usize> {
        let s = &h.nodes[i];
        if i == h.s0 {
            let order = full_order(s, None, Some(self.m0));
            return self.remove(&order);
        }
        let structure = self.structure();
        let touches = |dz: i32| s.cells.iter().any(|&c| structure.contains(&up(c, dz)));
        let maximal = if h.degree(i) == 0 {
            touches(-1) || !touches(1)
        } else {
            h.is_locally_maximal(i)
        };
        let coloring = color_with(&structure, labels, s, maximal);
        let rest: BTreeSet<Cell> = structure.iter().copied().filter(|c| s.cells.binary_search(c).is_err()).collect();
        let splits = components(&rest, DIM).len() > 1;
        let order = full_order(s, Some(&coloring), None);
        if !splits {
            return self.remove(&order);
        }
        self.stats.partial += 1;
        let digraph = build_slice_digraph(&coloring);
        self.stats.lemma_failures += partial_lemma_failures(&coloring, &digraph).len();
        let order: Vec<Cell> = order.into_iter().filter(|c| !digraph.reachable.contains(c)).collect();
        self.remove(&order)
    }

    fn run(&mut self) -> Result<()> {
        loop {
            let structure = self.structure();
            if structure.len() <= 1 {
                return Ok(());
            }
            let labels = label_empty_space(&self.config, 0);
            let h = graph_over(&structure, &labels, self.m0);
            let voids = labels.void_count();
            let candidates = slice_candidates(&h);
            let mut progressed = false;
            for (rank, &i) in candidates.iter().enumerate() {
                if self.deconstruct(&h, i, &labels)? > 0 {
                    if rank > 0 {
                        self.stats.fallback_slices += 1;
                    }
                    progressed = true;
                    break;
                }
            }
            if !progressed {
                return Err(Error::RoutingFailed(format!(
                    "no slice can be deconstructed with {} modules left",
                    structure.len()
                )));
            }
            self.stats.slices += 1;
            let after = label_empty_space(&self.config, 0).void_count();
            self.stats.voids_opened += voids.saturating_sub(after);
            if self.opts.cadence != CheckCadence::End {
                self.audit()?;
            }
        }
    }
}

pub fn plan_monotone(t: &Configuration) -> Result<MonotonePlan> {
    plan_monotone_with(t, &MonotoneOptions::default())
}

pub fn plan_monotone_with(t: &Configuration, opts: &MonotoneOptions) -> Result<MonotonePlan> {
    if t.dim() != DIM {
        return Err(Error::IneligibleInput("the monotone planner works on 3D configurations".into()));
    }
    if !is_connected(t) {
        return Err(Error::DisconnectedInput);
    }
    let fs = external_feature_size_at_least(t, 2);
    if !fs.holds {
        let list: Vec<String> = fs.violations.iter().take(8).map(|v| v.to_string()).collect();
        return Err(Error::IneligibleInput(format!(
            "external feature size below 2 ({} violations): {}",
            fs.violations.len(),
            list.join("; ")
        )));
    }
    let m0 = choose_m0(&t.cell_set()).ok_or(Error::Empty)?;
    let mut schedule = Schedule::new(opts.carrier.k, "monotone");
    schedule.moves.push(Move::new(t.module_at(m0).expect("m0 occupied"), m0, Vec::new()));
    let mut p = Planner {
        config: t.clone(),
        schedule,
        m0,
        line: 0,
        opts: opts.clone(),
        stats: MonotoneStats::default(),
    };
    p.run()?;
    if p.opts.cadence == CheckCadence::End {
        p.audit()?;
    }
    p.stats.moves = p.schedule.moves.len();
    let st = p.stats;
    for (k, v) in [
        ("moves", st.moves),
        ("steps", st.steps),
        ("voids_opened", st.voids_opened),
        ("slices", st.slices),
        ("partial", st.partial),
        ("reordered", st.reordered),
        ("fallback_slices", st.fallback_slices),
        ("lemma_failures", st.lemma_failures),
        ("unguarded", st.unguarded),
        ("fs_violations", st.fs_violations),
    ] {
        p.schedule.counters.insert(k.to_string(), v as i64);
    }
    Ok(MonotonePlan { m0, schedule: p.schedule, stats: st })
}
