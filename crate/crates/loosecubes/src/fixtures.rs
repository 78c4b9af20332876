//! Instance generators, frame export and scaling measurements.

use crate::error::{Error, Result};
use crate::feature_size::external_feature_size_at_least;
use crate::lattice::{is_connected, Cell, CellBox, Configuration, Dimension};
use crate::motion::{apply_move, Move, Schedule};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

const RETRIES: usize = 500;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FixtureSpec {
    /// Hollow 5×5 square plus the corners of the concentric 3×3 square.
    HollowSquareCorners2d,
    /// Hollow 5×5×5 cube plus the corners of the concentric 3×3×3 cube.
    HollowCubeCorners3d,
    SolidBox { dims: [i32; 3] },
    /// Feature size ≥ 2, grown from 2×2×2 blocks.
    RandomFeature2 { n: usize, seed: u64 },
    /// Random face-connected growth.
    RandomTree { dim: Dimension, n: usize, seed: u64 },
    /// A 1×1×h column.
    Tower { height: i32 },
    /// Shell of a box of outer size `dims`, one module thick.
    HollowBox { dims: [i32; 3] },
    /// Hollow box with a column standing on the floor at the centre of the
    /// void, clear of the ceiling.
    BoxWithPillar { dims: [i32; 3], pillar: i32 },
    /// Straight row of n modules along x.
    Line { dim: Dimension, n: usize },
}

impl FixtureSpec {
    pub fn name(&self) -> String {
        match self {
            FixtureSpec::HollowSquareCorners2d => "hollow-square-corners-2d".into(),
            FixtureSpec::HollowCubeCorners3d => "hollow-cube-corners-3d".into(),
            FixtureSpec::SolidBox { dims: [a, b, c] } => format!("solid-box-{a}x{b}x{c}"),
            FixtureSpec::RandomFeature2 { n, seed } => format!("random-feature2-n{n}-s{seed}"),
            FixtureSpec::RandomTree { dim, n, seed } => format!("random-tree-{}d-n{n}-s{seed}", dim.as_int()),
            FixtureSpec::Tower { height } => format!("tower-{height}"),
            FixtureSpec::HollowBox { dims: [a, b, c] } => format!("hollow-box-{a}x{b}x{c}"),
            FixtureSpec::BoxWithPillar { dims: [a, b, c], pillar } => format!("box-with-pillar-{a}x{b}x{c}-p{pillar}"),
            FixtureSpec::Line { dim, n } => format!("line-{}d-n{n}", dim.as_int()),
        }
    }
}

fn config(dim: Dimension, cells: impl IntoIterator<Item = Cell>) -> Result<Configuration> {
    Configuration::new(dim, cells)
}

fn box_cells(min: Cell, max: Cell) -> impl Iterator<Item = Cell> {
    CellBox::new(min, max).cells().collect::<Vec<_>>().into_iter()
}

fn shell(dims: [i32; 3]) -> BTreeSet<Cell> {
    let b = CellBox::new(Cell::default(), Cell::new(dims[0] - 1, dims[1] - 1, dims[2] - 1));
    b.cells().filter(|&c| b.on_boundary(c)).collect()
}

fn hollow_with_corners(dim: Dimension) -> Result<Configuration> {
    let (zmax, zs): (i32, &[i32]) = match dim {
        Dimension::Two => (0, &[0]),
        Dimension::Three => (4, &[1, 3]),
    };
    let outer = CellBox::new(Cell::default(), Cell::new(4, 4, zmax));
    let mut cells: BTreeSet<Cell> = outer
        .cells()
        .filter(|c| {
            let on = |v: i32| v == 0 || v == 4;
            on(c.x) || on(c.y) || (dim == Dimension::Three && on(c.z))
        })
        .collect();
    for &x in &[1, 3] {
        for &y in &[1, 3] {
            for &z in zs {
                cells.insert(Cell::new(x, y, z));
            }
        }
    }
    config(dim, cells)
}

fn random_tree(dim: Dimension, n: usize, rng: &mut ChaCha8Rng) -> Result<Configuration> {
    let mut set = BTreeSet::from([Cell::default()]);
    let mut list = vec![Cell::default()];
    while set.len() < n {
        let c = list[rng.gen_range(0..list.len())];
        let s = dim.steps()[rng.gen_range(0..dim.steps().len())];
        let d = c.step(s);
        if set.insert(d) {
            list.push(d);
        }
    }
    config(dim, set)
}

fn metacell(c: Cell) -> impl Iterator<Item = Cell> {
    box_cells(Cell::new(2 * c.x, 2 * c.y, 2 * c.z), Cell::new(2 * c.x + 1, 2 * c.y + 1, 2 * c.z + 1))
}

fn random_feature2_once(n: usize, rng: &mut ChaCha8Rng) -> Option<Configuration> {
    let blocks = (n / 8).max(1);
    let mut meta = vec![Cell::default()];
    let mut seen = BTreeSet::from([Cell::default()]);
    while meta.len() < blocks {
        let c = *meta.choose(rng)?;
        let s = *Dimension::Three.steps().choose(rng)?;
        let d = c.step(s);
        if seen.insert(d) {
            meta.push(d);
        }
    }
    let mut cells: BTreeSet<Cell> = if n < 8 {
        BTreeSet::from([Cell::default()])
    } else {
        meta.iter().flat_map(|&m| metacell(m)).collect()
    };
    let mut tries = 0;
    while cells.len() < n {
        tries += 1;
        if tries > 200 {
            return None;
        }
        let v: Vec<Cell> = cells.iter().copied().collect();
        let c = *v.choose(rng)?;
        let d = c.step(*Dimension::Three.steps().choose(rng)?);
        if cells.contains(&d) {
            continue;
        }
        cells.insert(d);
        let probe = Configuration::new(Dimension::Three, cells.iter().copied()).ok()?;
        if !external_feature_size_at_least(&probe, 2).holds {
            cells.remove(&d);
        }
    }
    let conf = Configuration::new(Dimension::Three, cells).ok()?;
    (is_connected(&conf) && external_feature_size_at_least(&conf, 2).holds).then_some(conf)
}

/// Deterministic for a fixed spec; advertised properties are re-checked.
pub fn generate(spec: &FixtureSpec) -> Result<Configuration> {
    let conf = match *spec {
        FixtureSpec::HollowSquareCorners2d => hollow_with_corners(Dimension::Two)?,
        FixtureSpec::HollowCubeCorners3d => hollow_with_corners(Dimension::Three)?,
        FixtureSpec::SolidBox { dims } => {
            let dim = if dims[2] == 1 { Dimension::Two } else { Dimension::Three };
            config(dim, box_cells(Cell::default(), Cell::new(dims[0] - 1, dims[1] - 1, dims[2] - 1)))?
        }
        FixtureSpec::RandomFeature2 { n, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..RETRIES)
                .find_map(|_| random_feature2_once(n, &mut rng))
                .ok_or_else(|| Error::GenerationFailed(spec.name()))?
        }
        FixtureSpec::RandomTree { dim, n, seed } => random_tree(dim, n.max(1), &mut ChaCha8Rng::seed_from_u64(seed))?,
        FixtureSpec::Tower { height } => config(Dimension::Three, (0..height).map(|z| Cell::new(0, 0, z)))?,
        FixtureSpec::HollowBox { dims } => config(Dimension::Three, shell(dims))?,
        FixtureSpec::BoxWithPillar { dims, pillar } => {
            let mut cells = shell(dims);
            let (cx, cy) = (dims[0] / 2, dims[1] / 2);
            for z in 1..=pillar {
                cells.insert(Cell::new(cx, cy, z));
            }
            config(Dimension::Three, cells)?
        }
        FixtureSpec::Line { dim, n } => config(dim, (0..n as i32).map(|x| Cell::new(x, 0, 0)))?,
    };
    if !is_connected(&conf) {
        return Err(Error::GenerationFailed(format!("{} is disconnected", spec.name())));
    }
    let needs_fs2 = matches!(
        spec,
        FixtureSpec::RandomFeature2 { .. } | FixtureSpec::BoxWithPillar { .. }
    );
    if needs_fs2 && !external_feature_size_at_least(&conf, 2).holds {
        return Err(Error::GenerationFailed(format!("{} has feature size below 2", spec.name())));
    }
    Ok(conf)
}

/// Snapshots after every `every` unit steps, plus the first and last.
pub fn export_frames(initial: &Configuration, schedule: &Schedule, every: usize) -> Result<Vec<(usize, Configuration)>> {
    let every = every.max(1);
    let mut config = initial.clone();
    let mut frames = vec![(0, config.clone())];
    let mut step = 0;
    for mv in &schedule.moves {
        let mut pos = mv.start;
        for &s in &mv.steps {
            let next = pos.step(s);
            apply_move(&mut config, &Move::new(mv.mover, pos, vec![s]))?;
            pos = next;
            step += 1;
            if step % every == 0 {
                frames.push((step, config.clone()));
            }
        }
    }
    if frames.last().map(|f| f.0) != Some(step) {
        frames.push((step, config));
    }
    Ok(frames)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Planner {
    Scaffold2d,
    Scaffold3d { reduced_u: bool },
    Monotone,
}

#[derive(Clone, Debug)]
pub struct ScalingRow {
    pub n: usize,
    pub moves: usize,
    pub steps: usize,
    pub extra_modules: usize,
    pub wall_time: Duration,
}

/// Runs `planner` once on `config`.
pub fn measure(planner: Planner, config: &Configuration) -> Result<ScalingRow> {
    let t0 = Instant::now();
    let (schedule, extra) = match planner {
        Planner::Scaffold2d => {
            let p = crate::scaffold::plan_scaffold_2d(config)?;
            (p.schedule, p.stats.extra)
        }
        Planner::Scaffold3d { reduced_u } => {
            let p = crate::scaffold::plan_scaffold_3d(config, reduced_u)?;
            (p.schedule, p.stats.extra)
        }
        Planner::Monotone => (crate::monotone::plan_monotone(config)?.schedule, 0),
    };
    Ok(ScalingRow {
        n: config.len(),
        moves: schedule.moves.len(),
        steps: schedule.total_steps(),
        extra_modules: extra,
        wall_time: t0.elapsed(),
    })
}

/// Rows over generated corpora: random trees for the scaffold planners,
/// feature-size-2 instances for the monotone planner.
pub fn scaling_report(planner: Planner, sizes: &[usize], trials: usize, seed: u64) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::new();
    for &n in sizes {
        for t in 0..trials {
            let s = seed.wrapping_add((n as u64) << 16).wrapping_add(t as u64);
            let spec = match planner {
                Planner::Scaffold2d => FixtureSpec::RandomTree { dim: Dimension::Two, n, seed: s },
                Planner::Scaffold3d { .. } => FixtureSpec::RandomTree { dim: Dimension::Three, n, seed: s },
                Planner::Monotone => FixtureSpec::RandomFeature2 { n, seed: s },
            };
            rows.push(measure(planner, &generate(&spec)?)?);
        }
    }
    Ok(rows)
}

/// Least-squares slope of log y against log x over points with x, y > 0.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_sizes() {
        assert_eq!(generate(&FixtureSpec::HollowSquareCorners2d).unwrap().len(), 20);
        assert_eq!(generate(&FixtureSpec::HollowCubeCorners3d).unwrap().len(), 98 + 8);
        assert_eq!(generate(&FixtureSpec::SolidBox { dims: [2, 2, 2] }).unwrap().len(), 8);
    }

    #[test]
    fn random_feature2_is_deterministic() {
        let spec = FixtureSpec::RandomFeature2 { n: 40, seed: 7 };
        let a = generate(&spec).unwrap();
        assert_eq!(a.len(), 40);
        assert!(a.same_cells(&generate(&spec).unwrap()));
    }

    #[test]
    fn slope_of_a_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (i as f64, 3.0 * (i as f64).powi(2))).collect();
        assert!((loglog_slope(&pts).unwrap() - 2.0).abs() < 1e-9);
    }
}
