use loosecubes::feature_size::{check_condition_a, external_feature_size_at_least, violations_near};
use loosecubes::fixtures::{generate, FixtureSpec};
use loosecubes::io::{parse_polycube, parse_schedule, write_polycube, write_schedule};
use loosecubes::lattice::is_connected;
use loosecubes::motion::{enumerate_valid_slides, validate_move, Access, KCube, Move, Schedule, Witness};
use loosecubes::{Cell, Configuration, Dimension, ModuleId, UnitStep};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn cells_strategy(max: usize) -> impl Strategy<Value = BTreeSet<Cell>> {
    prop::collection::btree_set((0..4i32, 0..4i32, 0..3i32).prop_map(|(x, y, z)| Cell::new(x, y, z)), 1..max)
}

fn step_strategy() -> impl Strategy<Value = UnitStep> {
    prop::sample::select(Dimension::Three.steps().to_vec())
}

fn cube_is_clear(config: &Configuration, q: &KCube, mover: Cell) -> bool {
    q.cells(config.dim()).all(|c| c == mover || !config.contains(c))
}

proptest! {
    #[test]
    fn polycube_text_round_trips(cells in cells_strategy(20)) {
        let c = Configuration::new(Dimension::Three, cells).unwrap();
        prop_assert_eq!(parse_polycube(&write_polycube(&c), None).unwrap(), c);
    }

    #[test]
    fn schedule_text_round_trips(moves in prop::collection::vec((0u32..50, -5i32..5, -5i32..5, prop::collection::vec(step_strategy(), 0..6)), 0..10)) {
        let mut s = Schedule::new(2, "prop");
        for (id, x, y, steps) in moves {
            s.moves.push(Move::new(ModuleId(id), Cell::new(x, y, 0), steps));
        }
        s.counters.insert("steps".into(), s.total_steps() as i64);
        prop_assert_eq!(parse_schedule(&write_schedule(&s)).unwrap(), s);
    }

    #[test]
    fn witnesses_are_sound(cells in cells_strategy(10), k in 1..=3i32) {
        let c = Configuration::new(Dimension::Three, cells).unwrap();
        for (slide, w) in enumerate_valid_slides(&c, k) {
            match w {
                Witness::Straight(q) => {
                    prop_assert!(cube_is_clear(&c, &q, slide.start));
                    if k > 1 {
                        prop_assert!(q.contains(slide.start, Dimension::Three) && q.contains(slide.end(), Dimension::Three));
                    }
                }
                Witness::Corner { first, translation, second } => {
                    let mut q = first;
                    prop_assert!(cube_is_clear(&c, &q, slide.start));
                    for s in translation {
                        q = KCube::new(q.anchor.step(s), k);
                        prop_assert!(cube_is_clear(&c, &q, slide.start));
                    }
                    prop_assert_eq!(q, second);
                }
            }
            let mut next = c.clone();
            next.move_module(slide.mover, slide.end()).unwrap();
            if is_connected(&c) {
                prop_assert!(is_connected(&next));
            }
        }
    }

    #[test]
    fn looser_moves_are_valid_for_smaller_k(n in 2usize..10, seed in any::<u64>(), steps in prop::collection::vec(step_strategy(), 1..4)) {
        let c = generate(&FixtureSpec::RandomTree { dim: Dimension::Three, n, seed }).unwrap();
        for (id, start) in c.modules().collect::<Vec<_>>() {
            let mv = Move::new(id, start, steps.clone());
            let ok: Vec<bool> = (1..=3).map(|k| validate_move(&c, &mv, k, Access::Off).ok()).collect();
            prop_assert!(!ok[2] || ok[1]);
            prop_assert!(!ok[1] || ok[0]);
        }
    }

    #[test]
    fn local_check_agrees_after_one_move(n in 1usize..20, seed in any::<u64>()) {
        let c = generate(&FixtureSpec::RandomFeature2 { n, seed }).unwrap();
        for (slide, _) in enumerate_valid_slides(&c, 2).into_iter().take(6) {
            let mut next = c.clone();
            next.move_module(slide.mover, slide.end()).unwrap();
            let full = external_feature_size_at_least(&next, 2).holds;
            let local = violations_near(&next, &[slide.start, slide.end()], 3, 2).holds;
            prop_assert_eq!(full, local);
        }
    }

    #[test]
    fn condition_a_only_reports_empty_cells(cells in cells_strategy(15), k in 1..=3i32) {
        let c = Configuration::new(Dimension::Three, cells).unwrap();
        for v in check_condition_a(&c, k) {
            prop_assert!(!c.contains(v));
        }
    }
}
