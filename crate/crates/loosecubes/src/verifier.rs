//! Independent schedule replay and brute-force reachability oracle.

use crate::error::{Error, Result};
use crate::feature_size::external_feature_size_at_least;
use crate::lattice::{is_connected, Cell, Configuration};
use crate::motion::{enumerate_valid_slides, validate_move, Access, Field, Move, MoveReport, Schedule, Slide};
use rustc_hash::{FxHashMap, FxHashSet};
use std::collections::VecDeque;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cadence {
    Never,
    EveryMove,
    End,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub k: i32,
    pub strict: bool,
    pub expect_monotone: bool,
    pub feature_size: Cadence,
    /// Keep per-move reports (witnesses included).
    pub keep_reports: bool,
}

impl VerifyOptions {
    pub fn new(k: i32) -> Self {
        VerifyOptions { k, strict: false, expect_monotone: false, feature_size: Cadence::Never, keep_reports: false }
    }
}

#[derive(Clone, Debug)]
pub struct MoveEntry {
    pub index: usize,
    pub report: MoveReport,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub ok: bool,
    pub per_move: Vec<MoveEntry>,
    pub first_failure: Option<(usize, String)>,
    pub moves_checked: usize,
    pub feature_size_checks: usize,
    pub final_config: Configuration,
}

pub fn verify_schedule(
    initial: &Configuration,
    schedule: &Schedule,
    k: i32,
    strict: bool,
    expect_monotone: bool,
) -> ValidationReport {
    let opts = VerifyOptions { strict, expect_monotone, ..VerifyOptions::new(k) };
    verify_schedule_with(initial, schedule, &opts)
}

pub fn verify_schedule_with(initial: &Configuration, schedule: &Schedule, opts: &VerifyOptions) -> ValidationReport {
    let mut config = initial.clone();
    let mut report = ValidationReport {
        ok: true,
        per_move: Vec::new(),
        first_failure: None,
        moves_checked: 0,
        feature_size_checks: 0,
        final_config: initial.clone(),
    };
    let fail = |report: &mut ValidationReport, i: usize, msg: String| {
        report.ok = false;
        if report.first_failure.is_none() {
            report.first_failure = Some((i, msg));
        }
    };
    if schedule.k != opts.k {
        fail(&mut report, 0, format!("schedule header k={} but k={} requested", schedule.k, opts.k));
        return report;
    }
    if !is_connected(&config) {
        fail(&mut report, 0, "initial configuration disconnected".into());
        return report;
    }
    let access = if opts.strict { Access::EverySlide } else { Access::Endpoints };
    let mut moved: FxHashSet<u32> = FxHashSet::default();
    for (i, mv) in schedule.moves.iter().enumerate() {
        if opts.expect_monotone && !moved.insert(mv.mover.0) {
            fail(&mut report, i, format!("monotonicity: module {} moves again", mv.mover));
            break;
        }
        let r = validate_move(&config, mv, opts.k, access);
        report.moves_checked += 1;
        let failure = r.failure.clone();
        if opts.keep_reports {
            report.per_move.push(MoveEntry { index: i, report: r });
        }
        if let Some(f) = failure {
            fail(&mut report, i, format!("move {i} (module {}): {f}", mv.mover));
            break;
        }
        config
            .move_module(mv.mover, mv.end())
            .expect("validated move has an empty destination");
        if opts.feature_size == Cadence::EveryMove {
            report.feature_size_checks += 1;
            let fs = external_feature_size_at_least(&config, 2);
            if !fs.holds {
                fail(&mut report, i, format!("feature size below 2 after move {i}: {}", fs.violations[0]));
                break;
            }
        }
    }
    if report.ok && opts.feature_size == Cadence::End {
        report.feature_size_checks += 1;
        let fs = external_feature_size_at_least(&config, 2);
        if !fs.holds {
            let n = schedule.moves.len();
            fail(&mut report, n, format!("feature size below 2 at end: {}", fs.violations[0]));
        }
    }
    if report.ok && opts.expect_monotone {
        if let Some(id) = (0..config.len() as u32).find(|id| !moved.contains(id)) {
            fail(&mut report, schedule.moves.len(), format!("monotonicity: module {id} never moves"));
        }
    }
    report.final_config = config;
    report
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    Reachable,
    Unreachable,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct ReachabilityResult {
    pub verdict: Verdict,
    pub path: Option<Vec<Slide>>,
    pub states_explored: usize,
}

impl ReachabilityResult {
    pub fn reachable(&self) -> bool {
        self.verdict == Verdict::Reachable
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_states: usize,
    pub max_modules: usize,
    pub accessible: bool,
    /// Quotient states by translation.
    pub normalize: bool,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 200_000, max_modules: 8, accessible: false, normalize: true }
    }
}

fn canonical(cells: &[Cell], normalize: bool) -> (Vec<Cell>, Cell) {
    let mut v = cells.to_vec();
    v.sort();
    let off = if normalize { v[0] } else { Cell::default() };
    for c in &mut v {
        *c = c.sub(off);
    }
    (v, off)
}

/// Single-slide successors of a configuration.
pub fn successors(config: &Configuration, k: i32, accessible: bool) -> Vec<Slide> {
    enumerate_valid_slides(config, k)
        .into_iter()
        .map(|(s, _)| s)
        .filter(|s| {
            !accessible || {
                let f = Field::new(config, Some(s.start), k);
                f.accessible(s.start) && f.accessible(s.end())
            }
        })
        .collect()
}

/// Breadth-first exploration calling `visit` on every new state (absolute
/// coordinates of its first discovery); stops early when `visit` returns false.
/// Returns (states explored, exhausted).
pub fn explore(
    start: &Configuration,
    k: i32,
    limits: Limits,
    mut visit: impl FnMut(&Configuration, Option<&Slide>) -> bool,
) -> (usize, bool) {
    let dim = start.dim();
    let mut seen: FxHashSet<Vec<Cell>> = FxHashSet::default();
    let (c0, _) = canonical(start.positions(), limits.normalize);
    seen.insert(c0);
    if !visit(start, None) {
        return (1, false);
    }
    let mut queue = VecDeque::from([start.sorted_cells()]);
    while let Some(cells) = queue.pop_front() {
        let conf = Configuration::new(dim, cells).expect("states are valid");
        for s in successors(&conf, k, limits.accessible) {
            let mut next = conf.clone();
            next.move_module(s.mover, s.end()).expect("slide destination empty");
            let (key, _) = canonical(next.positions(), limits.normalize);
            if seen.contains(&key) {
                continue;
            }
            if seen.len() >= limits.max_states {
                return (seen.len(), false);
            }
            seen.insert(key);
            if !visit(&next, Some(&s)) {
                return (seen.len(), false);
            }
            queue.push_back(next.sorted_cells());
        }
    }
    (seen.len(), true)
}

pub fn bfs_reconfigure(
    start: &Configuration,
    goal: &Configuration,
    k: i32,
    limits: Limits,
) -> Result<ReachabilityResult> {
    if start.len() != goal.len() {
        return Err(Error::Malformed("start and goal differ in size".into()));
    }
    if start.len() > limits.max_modules {
        return Err(Error::Malformed(format!("more than {} modules", limits.max_modules)));
    }
    if !is_connected(start) || !is_connected(goal) {
        return Err(Error::DisconnectedInput);
    }
    let dim = start.dim();
    let norm = limits.normalize;
    let (target, _) = canonical(goal.positions(), norm);
    let (s0, _) = canonical(start.positions(), norm);
    if s0 == target {
        return Ok(ReachabilityResult { verdict: Verdict::Reachable, path: Some(vec![]), states_explored: 1 });
    }
    // canonical state -> (parent canonical state, slide in parent's canonical frame)
    let mut parent: FxHashMap<Vec<Cell>, Option<(Vec<Cell>, Slide)>> = FxHashMap::default();
    parent.insert(s0.clone(), None);
    let mut queue = VecDeque::from([s0]);
    while let Some(cells) = queue.pop_front() {
        let conf = Configuration::new(dim, cells.clone()).expect("states are valid");
        for s in successors(&conf, k, limits.accessible) {
            let mut next = conf.clone();
            next.move_module(s.mover, s.end()).expect("slide destination empty");
            let (key, _) = canonical(next.positions(), norm);
            if parent.contains_key(&key) {
                continue;
            }
            if parent.len() >= limits.max_states {
                return Ok(ReachabilityResult { verdict: Verdict::Inconclusive, path: None, states_explored: parent.len() });
            }
            parent.insert(key.clone(), Some((cells.clone(), s)));
            if key == target {
                let path = rebuild_path(start, &parent, key, norm);
                return Ok(ReachabilityResult { verdict: Verdict::Reachable, path: Some(path), states_explored: parent.len() });
            }
            queue.push_back(key);
        }
    }
    Ok(ReachabilityResult { verdict: Verdict::Unreachable, path: None, states_explored: parent.len() })
}

/// Expresses the canonical-frame slides in the frame of `start`, with ids of
/// `start`'s modules.
fn rebuild_path(
    start: &Configuration,
    parent: &FxHashMap<Vec<Cell>, Option<(Vec<Cell>, Slide)>>,
    goal: Vec<Cell>,
    normalize: bool,
) -> Vec<Slide> {
    let mut rev = Vec::new();
    let mut cur = goal;
    while let Some(Some((p, s))) = parent.get(&cur) {
        rev.push(s.clone());
        cur = p.clone();
    }
    rev.reverse();
    let mut conf = start.clone();
    let mut out = Vec::new();
    for s in rev {
        let (_, off) = canonical(conf.positions(), normalize);
        let from = s.start.add(off);
        let id = conf.module_at(from).expect("path replays");
        let slide = Slide { mover: id, start: from, steps: s.steps, kind: s.kind };
        conf.move_module(id, slide.end()).expect("path replays");
        out.push(slide);
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RobotCost {
    pub carry: usize,
    pub return_trip: usize,
    pub total: usize,
}

/// One-robot simulation of a monotone schedule: the robot carries each module
/// along its path and walks back, doubling the motion.
pub fn simulate_single_robot(initial: &Configuration, schedule: &Schedule) -> Result<RobotCost> {
    let mut ids = FxHashSet::default();
    if !schedule.moves.iter().all(|m| ids.insert(m.mover)) {
        return Err(Error::RequiresMonotone);
    }
    let mut config = initial.clone();
    let mut carry = 0;
    for m in &schedule.moves {
        if m.steps.is_empty() {
            continue;
        }
        let f = Field::new(&config, Some(m.start), schedule.k);
        if !f.accessible(m.start) || !f.accessible(m.end()) {
            return Err(Error::Malformed(format!("module {} not accessible for pick/place", m.mover)));
        }
        carry += m.steps.len();
        apply(&mut config, m)?;
    }
    Ok(RobotCost { carry, return_trip: carry, total: 2 * carry })
}

fn apply(config: &mut Configuration, m: &Move) -> Result<()> {
    crate::motion::apply_move(config, m)
}
