//! Shortest-path search for a single module over loose slides.

use crate::lattice::{Axis, Cell, CellBox};
use crate::motion::{Field, UnitStep};
use rustc_hash::FxHashMap;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Parser state between slides: after a straight slide along an axis the next
/// step must stay on that axis, otherwise the two steps would be read back as
/// a corner slide.
pub type Pending = Option<Axis>;

#[derive(Clone, Debug)]
pub struct RouteOptions {
    /// Require accessibility after every slide.
    pub strict: bool,
    /// Cells the mover may visit.
    pub region: CellBox,
    pub start_pending: Pending,
    pub max_expansions: usize,
}

impl RouteOptions {
    pub fn new(region: CellBox) -> Self {
        RouteOptions {
            strict: true,
            region,
            start_pending: None,
            max_expansions: 2_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Route {
    pub steps: Vec<UnitStep>,
    pub end_pending: Pending,
}

fn key(c: Cell, p: Pending) -> (Cell, u8) {
    (c, p.map_or(3, |a| a.index() as u8))
}

/// A* over (cell, pending) states; edges are witnessed straight and corner slides.
pub fn find_route(field: &Field, from: Cell, to: Cell, opts: &RouteOptions) -> Option<Route> {
    find_route_to(field, from, |c, _| c == to, |c| c.manhattan(to), opts)
}

pub fn find_route_to(
    field: &Field,
    from: Cell,
    is_goal: impl Fn(Cell, Pending) -> bool,
    heuristic: impl Fn(Cell) -> i32,
    opts: &RouteOptions,
) -> Option<Route> {
    let dim = field.dim();
    let steps = dim.steps();
    let mut best: FxHashMap<(Cell, u8), i32> = FxHashMap::default();
    let mut parent: FxHashMap<(Cell, u8), ((Cell, Pending), [Option<UnitStep>; 2])> =
        FxHashMap::default();
    let mut heap = BinaryHeap::new();
    let mut counter = 0u64;
    best.insert(key(from, opts.start_pending), 0);
    heap.push(Reverse((heuristic(from), 0i32, counter, from, opts.start_pending)));
    let mut expansions = 0;
    while let Some(Reverse((_, g, _, cell, pend))) = heap.pop() {
        if best.get(&key(cell, pend)).is_some_and(|&b| b < g) {
            continue;
        }
        if is_goal(cell, pend) {
            let mut out = Vec::new();
            let mut cur = (cell, pend);
            while let Some(&(prev, st)) = parent.get(&key(cur.0, cur.1)) {
                for s in st.iter().rev().flatten() {
                    out.push(*s);
                }
                cur = prev;
            }
            out.reverse();
            return Some(Route { steps: out, end_pending: pend });
        }
        expansions += 1;
        if expansions > opts.max_expansions {
            return None;
        }
        let mut push = |next: Cell, np: Pending, cost: i32, st: [Option<UnitStep>; 2],
                        heap: &mut BinaryHeap<_>| {
            let ng = g + cost;
            let kk = key(next, np);
            if best.get(&kk).is_some_and(|&b| b <= ng) {
                return;
            }
            best.insert(kk, ng);
            parent.insert(kk, ((cell, pend), st));
            counter += 1;
            heap.push(Reverse((ng + heuristic(next), ng, counter, next, np)));
        };
        for &s1 in steps {
            if pend.is_some_and(|a| a != s1.axis) {
                continue;
            }
            let b = cell.step(s1);
            if !opts.region.contains(b) || !field.is_free(b) {
                continue;
            }
            if field.straight_witness(cell, b).is_some() && (!opts.strict || field.accessible(b)) {
                push(b, Some(s1.axis), 1, [Some(s1), None], &mut heap);
            }
            for &s2 in steps {
                if s2.axis == s1.axis {
                    continue;
                }
                let c = b.step(s2);
                if !opts.region.contains(c) || !field.is_free(c) {
                    continue;
                }
                if field.corner_ok(cell, s1, s2)
                    && (!opts.strict || field.accessible(c))
                {
                    push(c, None, 2, [Some(s1), Some(s2)], &mut heap);
                }
            }
        }
    }
    None
}
