//! Carrying single modules to and from a straight deposit line.
//!
//! A deposit is a straight run of cells `base + i·dir`. Modules travel along
//! the lane `base + i·dir + side`, which is kept clear, and drop into the tip
//! with a final corner slide.

use crate::error::{Error, Result};
use crate::lattice::{Cell, CellBox, Configuration, ModuleId, UnitStep};
use crate::motion::{apply_move, decompose, validate_move, Access, Field, Move, SlideKind};
use crate::router::{find_route, find_route_to, Pending, RouteOptions};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deposit {
    pub base: Cell,
    pub dir: UnitStep,
    pub side: UnitStep,
    /// Occupied cells are `cell(0..len)`.
    pub len: usize,
    /// Lane cells below this index are not guaranteed clear.
    pub min_lane: usize,
}

fn times(s: UnitStep, n: i32) -> Cell {
    let mut c = Cell::default();
    for _ in 0..n {
        c = c.step(s);
    }
    c
}

impl Deposit {
    pub fn new(base: Cell, dir: UnitStep, side: UnitStep) -> Self {
        Deposit { base, dir, side, len: 0, min_lane: 0 }
    }

    pub fn cell(&self, i: usize) -> Cell {
        self.base.add(times(self.dir, i as i32))
    }

    pub fn lane(&self, i: usize) -> Cell {
        self.cell(i).step(self.side)
    }

    pub fn tip(&self) -> Option<Cell> {
        self.len.checked_sub(1).map(|i| self.cell(i))
    }

    pub fn cells(&self) -> Vec<Cell> {
        (0..self.len).map(|i| self.cell(i)).collect()
    }

    /// Index along the lane, if `c` is a lane cell with index in `lo..=hi`.
    fn lane_index(&self, c: Cell, lo: usize, hi: usize) -> Option<usize> {
        let d = c.sub(self.lane(0));
        let a = self.dir.axis;
        let along = d.get(a) * self.dir.sign as i32;
        if d.with(a, 0) != Cell::default() || along < lo as i32 || along > hi as i32 {
            return None;
        }
        Some(along as usize)
    }

    fn lane_distance(&self, c: Cell, lo: usize, hi: usize) -> i32 {
        let d = c.sub(self.lane(0));
        let a = self.dir.axis;
        let along = d.get(a) * self.dir.sign as i32;
        let clamped = along.clamp(lo as i32, hi as i32);
        d.with(a, 0).manhattan(Cell::default()) + (along - clamped).abs()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Carrier {
    pub k: i32,
    /// Free margin around the configuration available to routes.
    pub margin: i32,
    pub max_expansions: usize,
}

impl Default for Carrier {
    fn default() -> Self {
        Carrier { k: 2, margin: 3, max_expansions: 400_000 }
    }
}

fn pending_after(steps: &[UnitStep]) -> Pending {
    match decompose(steps).last() {
        Some((SlideKind::Straight, s)) => Some(s[0].axis),
        _ => None,
    }
}

impl Carrier {
    fn region(&self, config: &Configuration, extra: &[Cell]) -> CellBox {
        let mut b = config.bounding_box(0).unwrap_or_else(|_| CellBox::new(extra[0], extra[0]));
        for &c in extra {
            b = b.union(&CellBox::new(c, c));
        }
        b.inflate(self.margin, config.dim())
    }

    fn opts(&self, region: CellBox) -> RouteOptions {
        let mut o = RouteOptions::new(region);
        o.max_expansions = self.max_expansions;
        o
    }

    fn valid(&self, config: &Configuration, mv: &Move) -> bool {
        validate_move(config, mv, self.k, Access::EverySlide).ok()
    }

    /// Shortest strict route from `from` to `to` for the module at `from`.
    pub fn route_direct(&self, config: &Configuration, from: Cell, to: Cell) -> Option<Vec<UnitStep>> {
        let field = Field::new(config, Some(from), self.k);
        let region = self.region(config, &[from, to]);
        find_route(&field, from, to, &self.opts(region)).map(|r| r.steps)
    }

    /// Route for the module at `from` to the next free deposit cell.
    pub fn route_to_deposit(&self, config: &Configuration, from: Cell, dep: &Deposit) -> Option<Vec<UnitStep>> {
        let target = dep.cell(dep.len);
        let id = config.module_at(from)?;
        let field = Field::new(config, Some(from), self.k);
        let (lo, hi) = (dep.min_lane, dep.len);
        if lo <= hi {
            let region = self.region(config, &[from, dep.lane(hi), target]);
            let goal = |c: Cell, p: Pending| match dep.lane_index(c, lo, hi) {
                Some(i) if i < hi => p.is_none() || p == Some(dep.dir.axis),
                Some(_) => p.is_none() || p == Some(dep.side.axis),
                None => false,
            };
            if let Some(r) = find_route_to(&field, from, goal, |c| dep.lane_distance(c, lo, hi), &self.opts(region)) {
                let end = from.add(r.steps.iter().fold(Cell::default(), |a, s| a.step(*s)));
                let i = dep.lane_index(end, lo, hi).unwrap_or(hi);
                let mut steps = r.steps;
                steps.extend(std::iter::repeat(dep.dir).take(hi - i));
                steps.push(dep.side.reversed());
                if self.valid(config, &Move::new(id, from, steps.clone())) {
                    return Some(steps);
                }
            }
        }
        self.route_direct(config, from, target)
    }

    /// Route for the deposit's tip module to `to`.
    pub fn route_from_deposit(&self, config: &Configuration, dep: &Deposit, to: Cell) -> Option<Vec<UnitStep>> {
        let tip = dep.tip()?;
        let id = config.module_at(tip)?;
        let top = dep.len - 1;
        if dep.min_lane <= top {
            let i = (dep.min_lane..=top).min_by_key(|&i| dep.lane(i).manhattan(to)).unwrap_or(top);
            let mut steps = vec![dep.side];
            steps.extend(std::iter::repeat(dep.dir.reversed()).take(top - i));
            let field = Field::new(config, Some(tip), self.k);
            let mut opts = self.opts(self.region(config, &[tip, to]));
            opts.start_pending = pending_after(&steps);
            if let Some(r) = find_route(&field, dep.lane(i), to, &opts) {
                steps.extend(r.steps);
                if self.valid(config, &Move::new(id, tip, steps.clone())) {
                    return Some(steps);
                }
            }
        }
        self.route_direct(config, tip, to)
    }
}

/// A configuration together with the schedule that produced it.
#[derive(Clone, Debug)]
pub struct Workbench {
    pub config: Configuration,
    pub moves: Vec<Move>,
    pub carrier: Carrier,
}

impl Workbench {
    pub fn new(config: Configuration, carrier: Carrier) -> Self {
        Workbench { config, moves: Vec::new(), carrier }
    }

    pub fn commit(&mut self, mv: Move) -> Result<()> {
        let rep = validate_move(&self.config, &mv, self.carrier.k, Access::EverySlide);
        if let Some(f) = rep.failure {
            return Err(Error::InvariantBreach(format!("move of {} from {}: {f}", mv.mover, mv.start)));
        }
        apply_move(&mut self.config, &mv)?;
        self.moves.push(mv);
        Ok(())
    }

    fn id_at(&self, c: Cell) -> Result<ModuleId> {
        self.config
            .module_at(c)
            .ok_or_else(|| Error::InvariantBreach(format!("no module at {c}")))
    }

    /// Moves the module at `c` onto the deposit tip.
    pub fn stow(&mut self, c: Cell, dep: &mut Deposit) -> Result<()> {
        let id = self.id_at(c)?;
        let steps = self
            .carrier
            .route_to_deposit(&self.config, c, dep)
            .ok_or_else(|| Error::RoutingFailed(format!("{c} to deposit")))?;
        self.commit(Move::new(id, c, steps))?;
        dep.len += 1;
        Ok(())
    }

    /// Moves the deposit's tip module to `c`.
    pub fn fetch(&mut self, dep: &mut Deposit, c: Cell) -> Result<()> {
        let tip = dep.tip().ok_or_else(|| Error::InvariantBreach("deposit exhausted".into()))?;
        let id = self.id_at(tip)?;
        let steps = self
            .carrier
            .route_from_deposit(&self.config, dep, c)
            .ok_or_else(|| Error::RoutingFailed(format!("deposit to {c}")))?;
        self.commit(Move::new(id, tip, steps))?;
        dep.len -= 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Dimension;

    #[test]
    fn stow_and_fetch_along_a_line() {
        let mut cells: Vec<Cell> = (0..4).map(|x| Cell::new(x, 0, 0)).collect();
        cells.push(Cell::new(3, 1, 0));
        let config = Configuration::new(Dimension::Two, cells).unwrap();
        let mut dep = Deposit::new(Cell::new(4, 0, 0), UnitStep::PX, UnitStep::NY);
        let mut wb = Workbench::new(config, Carrier::default());
        wb.stow(Cell::new(3, 1, 0), &mut dep).unwrap();
        wb.stow(Cell::new(0, 0, 0), &mut dep).unwrap();
        assert_eq!(dep.cells(), vec![Cell::new(4, 0, 0), Cell::new(5, 0, 0)]);
        wb.fetch(&mut dep, Cell::new(0, 1, 0)).unwrap_err();
        wb.fetch(&mut dep, Cell::new(0, 0, 0)).unwrap();
        assert!(wb.config.contains(Cell::new(0, 0, 0)));
        assert_eq!(dep.len, 1);
    }
}
