use loosecubes::feature_size::external_feature_size_at_least;
use loosecubes::fixtures::*;
use loosecubes::io::{parse_polycube, write_polycube};
use loosecubes::lattice::{is_connected, label_empty_space};
use loosecubes::motion::{Move, Schedule};
use loosecubes::verifier::verify_schedule;
use loosecubes::{Cell, Configuration, Dimension, ModuleId, UnitStep};

fn c(x: i32, y: i32, z: i32) -> Cell {
    Cell::new(x, y, z)
}

#[test]
fn square_fixture_geometry() {
    let t = generate(&FixtureSpec::HollowSquareCorners2d).unwrap();
    assert_eq!(t.len(), 20);
    let ring = t.cells().filter(|p| p.x == 0 || p.y == 0 || p.x == 4 || p.y == 4).count();
    assert_eq!(ring, 16);
    for p in [c(1, 1, 0), c(1, 3, 0), c(3, 1, 0), c(3, 3, 0)] {
        assert!(t.contains(p));
    }
}

#[test]
fn cube_fixture_geometry() {
    let t = generate(&FixtureSpec::HollowCubeCorners3d).unwrap();
    let shell = t.cells().filter(|p| [p.x, p.y, p.z].iter().any(|&v| v == 0 || v == 4)).count();
    assert_eq!(shell, 125 - 27);
    assert_eq!(t.len() - shell, 8);
}

#[test]
fn generators_keep_their_promises() {
    assert_eq!(generate(&FixtureSpec::SolidBox { dims: [2, 2, 2] }).unwrap().len(), 8);
    for seed in 0..5 {
        let t = generate(&FixtureSpec::RandomFeature2 { n: 40, seed }).unwrap();
        assert_eq!(t.len(), 40);
        assert!(is_connected(&t));
        assert!(external_feature_size_at_least(&t, 2).holds);
        assert_eq!(t, generate(&FixtureSpec::RandomFeature2 { n: 40, seed }).unwrap());
    }
    for dim in [Dimension::Two, Dimension::Three] {
        let t = generate(&FixtureSpec::RandomTree { dim, n: 30, seed: 4 }).unwrap();
        assert_eq!(t.len(), 30);
        assert!(is_connected(&t));
    }
    let p = generate(&FixtureSpec::BoxWithPillar { dims: [7, 7, 5], pillar: 1 }).unwrap();
    assert!(external_feature_size_at_least(&p, 2).holds);
    assert_eq!(label_empty_space(&p, 0).void_count(), 1);
    assert_eq!(generate(&FixtureSpec::Tower { height: 5 }).unwrap().len(), 5);
}

#[test]
fn impossible_parameters_fail() {
    assert!(generate(&FixtureSpec::BoxWithPillar { dims: [5, 5, 4], pillar: 1 }).is_err());
}

#[test]
fn frames_count_every_step() {
    let t = Configuration::new(Dimension::Three, [c(0, 0, 0), c(1, 0, 0)]).unwrap();
    let mut s = Schedule::new(2, "hand");
    s.moves.push(Move::new(ModuleId(1), c(1, 0, 0), vec![UnitStep::PZ, UnitStep::NX, UnitStep::PZ]));
    let frames = export_frames(&t, &s, 1).unwrap();
    assert_eq!(frames.len(), 4);
    assert_eq!(frames.iter().map(|f| f.0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    assert!(frames[0].1.same_cells(&t));
}

#[test]
fn frames_bracket_a_planned_run() {
    let t = generate(&FixtureSpec::RandomFeature2 { n: 16, seed: 1 }).unwrap();
    let plan = loosecubes::monotone::plan_monotone(&t).unwrap();
    let text = write_polycube(&t);
    let frames = export_frames(&t, &plan.schedule, 7).unwrap();
    assert_eq!(write_polycube(&frames[0].1), text);
    assert!(parse_polycube(&text, None).unwrap().same_cells(&frames[0].1));
    let r = verify_schedule(&t, &plan.schedule, 2, true, true);
    assert_eq!(frames.last().unwrap().1.cell_set(), r.final_config.cell_set());
    assert_eq!(frames.last().unwrap().0, plan.schedule.total_steps());
}

#[test]
fn monotone_boxes_grow_at_most_quadratically() {
    let mut pts = Vec::new();
    for k in 2..=4 {
        let t = generate(&FixtureSpec::SolidBox { dims: [k, k, k] }).unwrap();
        let row = measure(Planner::Monotone, &t).unwrap();
        pts.push((row.n as f64, row.steps as f64));
    }
    let slope = loglog_slope(&pts).unwrap();
    assert!(slope <= 2.3, "slope {slope}");
}

#[test]
fn line_extras_grow_at_most_linearly() {
    let mut pts = Vec::new();
    for n in [8, 16, 32, 64] {
        let t = generate(&FixtureSpec::Line { dim: Dimension::Three, n }).unwrap();
        let row = measure(Planner::Scaffold3d { reduced_u: true }, &t).unwrap();
        pts.push((n as f64, row.extra_modules as f64));
    }
    let slope = loglog_slope(&pts).unwrap();
    assert!(slope <= 1.2, "slope {slope}");
}

#[test]
fn single_module_row() {
    let rows = scaling_report(Planner::Monotone, &[1], 1, 0).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].n, 1);
    assert!(rows[0].moves <= 1);
    for n in 2..8 {
        assert_eq!(generate(&FixtureSpec::RandomFeature2 { n, seed: 0 }).unwrap().len(), n);
    }
}
