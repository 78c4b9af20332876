use loosecubes::feature_size::external_feature_size_at_least;
use loosecubes::fixtures::{generate, FixtureSpec};
use loosecubes::lattice::label_empty_space;
use loosecubes::monotone::*;
use loosecubes::motion::apply_move;
use loosecubes::verifier::verify_schedule;
use loosecubes::{Cell, Configuration, Dimension, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

fn c(x: i32, y: i32, z: i32) -> Cell {
    Cell::new(x, y, z)
}

fn cfg(cells: impl IntoIterator<Item = Cell>) -> Configuration {
    Configuration::new(Dimension::Three, cells).unwrap()
}

fn boxed(a: i32, b: i32, h: i32) -> Vec<Cell> {
    let mut v = Vec::new();
    for x in 0..a {
        for y in 0..b {
            for z in 0..h {
                v.push(c(x, y, z));
            }
        }
    }
    v
}

fn shell(a: i32, b: i32, h: i32) -> Vec<Cell> {
    boxed(a, b, h)
        .into_iter()
        .filter(|p| p.x == 0 || p.y == 0 || p.z == 0 || p.x == a - 1 || p.y == b - 1 || p.z == h - 1)
        .collect()
}

fn node_of(h: &SliceGraph, cell: Cell) -> usize {
    h.nodes.iter().position(|s| s.cells.contains(&cell)).unwrap()
}

fn assert_plan_verifies(t: &Configuration) -> MonotonePlan {
    let plan = plan_monotone(t).unwrap();
    let r = verify_schedule(t, &plan.schedule, 2, true, true);
    assert!(r.ok, "{:?}", r.first_failure);
    assert_eq!(plan.schedule.moves.len(), t.len());
    let m0 = plan.m0;
    let line: BTreeSet<Cell> = (0..t.len() as i32).map(|i| m0.offset(0, 0, i)).collect();
    assert_eq!(r.final_config.cell_set(), line);
    plan
}

#[test]
fn flat_slab_is_one_node() {
    let h = build_slice_graph(&cfg(boxed(3, 3, 1)));
    assert_eq!(h.nodes.len(), 1);
    assert!(h.edges.is_empty());
}

#[test]
fn two_posts_on_a_bar() {
    let t = cfg([c(0, 0, 0), c(1, 0, 0), c(2, 0, 0), c(0, 0, 1), c(2, 0, 1)]);
    let h = build_slice_graph(&t);
    assert_eq!(h.nodes.len(), 3);
    assert_eq!(h.edges.len(), 2);
    assert_eq!(h.nodes.iter().filter(|s| s.z == 0).count(), 1);
    for i in (0..3).filter(|&i| h.nodes[i].z == 1) {
        assert!(h.is_locally_maximal(i));
        assert_eq!(h.degree(i), 1);
    }
}

#[test]
fn trapped_column_is_not_a_node() {
    let mut cells = shell(5, 5, 5);
    cells.extend([c(2, 2, 2), c(2, 2, 3)]);
    let t = cfg(cells);
    let h = build_slice_graph(&t);
    for s in &h.nodes {
        assert!(s.on_outer_surface);
        assert!(!s.cells.contains(&c(2, 2, 2)) && !s.cells.contains(&c(2, 2, 3)));
    }
    let covered: usize = h.nodes.iter().map(|s| s.cells.len()).sum();
    assert_eq!(covered, t.len() - 2);
}

#[test]
fn stacked_slices_select_the_bottom() {
    let t = cfg([c(0, 0, 0), c(1, 0, 0), c(0, 0, 1), c(1, 0, 1)]);
    let h = build_slice_graph(&t);
    assert_eq!(h.nodes[h.s0].z, 1);
    assert_eq!(h.nodes[select_slice(&h).unwrap()].z, 0);
}

#[test]
fn path_with_root_in_the_middle_selects_a_leaf() {
    let t = cfg([c(0, 0, 0), c(2, 0, 0), c(0, 0, 1), c(1, 0, 1), c(2, 0, 1)]);
    let h = build_slice_graph(&t);
    assert_eq!(h.nodes.len(), 3);
    let sel = select_slice(&h).unwrap();
    assert_ne!(sel, h.s0);
    assert_eq!(h.degree(sel), 1);
    assert_eq!(sel, node_of(&h, c(0, 0, 0)));
}

/// Union-find over the slice graph with one node dropped.
fn connected_after_removal(h: &SliceGraph, drop: usize) -> bool {
    let n = h.nodes.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(a, b) in &h.edges {
        if a != drop && b != drop {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    let roots: BTreeSet<usize> = (0..n).filter(|&i| i != drop).map(|i| find(&mut parent, i)).collect();
    roots.len() <= 1
}

#[test]
fn selection_keeps_slice_trees_connected() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut trees = 0;
    for _ in 0..400 {
        // Columns of random height on a random bar: tree-shaped slice graphs.
        let mut cells = BTreeSet::new();
        let len = rng.gen_range(3..9);
        for x in 0..len {
            cells.insert(c(x, 0, 0));
        }
        for x in (0..len).step_by(2) {
            let h = rng.gen_range(0..4);
            for z in 1..=h {
                cells.insert(c(x, 0, z));
                if rng.gen_bool(0.3) {
                    cells.insert(c(x, 1, z));
                }
            }
        }
        let t = cfg(cells);
        let h = build_slice_graph(&t);
        if h.nodes.len() < 5 || h.edges.len() + 1 != h.nodes.len() {
            continue;
        }
        trees += 1;
        let sel = select_slice(&h).unwrap();
        assert_ne!(sel, h.s0);
        assert!(connected_after_removal(&h, sel));
    }
    assert!(trees >= 50, "only {trees} trees generated");
}

#[test]
fn slab_top_is_red() {
    let t = cfg(boxed(3, 3, 2));
    let h = build_slice_graph(&t);
    let top = h.nodes.iter().find(|s| s.z == 1).unwrap();
    let col = color_slice(&t, top, true);
    assert!(col.colors.values().all(|&k| k == Color::Red));
}

#[test]
fn overhang_is_green() {
    let t = cfg([c(5, 5, 5)]);
    let h = build_slice_graph(&t);
    let col = color_slice(&t, &h.nodes[0], true);
    assert_eq!(col.colors[&c(5, 5, 5)], Color::Green);

    let t = cfg([c(1, 0, 0), c(1, 0, 1), c(1, 0, 2), c(0, 0, 2)]);
    let h = build_slice_graph(&t);
    let top = &h.nodes[h.s0];
    let col = color_slice(&t, top, true);
    assert_eq!(col.colors[&c(0, 0, 2)], Color::Green);
    assert_eq!(col.colors[&c(1, 0, 2)], Color::Red);
}

#[test]
fn closed_box_ceiling_colors() {
    let mut cells = shell(5, 5, 4);
    cells.push(c(2, 2, 2));
    let t = cfg(cells);
    let h = build_slice_graph(&t);
    let ceiling = &h.nodes[h.s0];
    assert_eq!(ceiling.z, 3);
    let col = color_slice(&t, ceiling, true);
    for (&p, &k) in &col.colors {
        let over_wall = p.x == 0 || p.y == 0 || p.x == 4 || p.y == 4;
        let expect = if over_wall {
            Color::Red
        } else if (p.x, p.y) == (2, 2) {
            Color::Orange
        } else {
            Color::Blue
        };
        assert_eq!(k, expect, "{p}");
    }
}

fn coloring(cells: &[(i32, i32, Color)]) -> SliceColoring {
    SliceColoring { colors: cells.iter().map(|&(x, y, k)| (c(x, y, 3), k)).collect() }
}

#[test]
fn side_by_side_gives_one_left_edge() {
    let d = build_slice_digraph(&coloring(&[(0, 0, Color::Red), (1, 0, Color::Red)]));
    assert_eq!(d.edges, BTreeSet::from([(c(1, 0, 3), c(0, 0, 3))]));
    assert!(d.reachable.is_empty());
}

/// Closure over edges listed by hand from the definitions.
fn closure(edges: &BTreeSet<(Cell, Cell)>, from: &[Cell]) -> BTreeSet<Cell> {
    let mut seen: BTreeSet<Cell> = from.iter().copied().collect();
    loop {
        let before = seen.len();
        for &(a, b) in edges {
            if seen.contains(&a) {
                seen.insert(b);
            }
        }
        if seen.len() == before {
            return seen;
        }
    }
}

#[test]
fn long_edge_over_a_bluish_run() {
    use Color::*;
    // y=1:  O  B  B  R
    // y=0:  B  B  B  R
    let col = coloring(&[
        (0, 1, Orange),
        (1, 1, Blue),
        (2, 1, Blue),
        (3, 1, Red),
        (0, 0, Blue),
        (1, 0, Blue),
        (2, 0, Blue),
        (3, 0, Red),
    ]);
    let d = build_slice_digraph(&col);
    assert!(d.edges.contains(&(c(1, 1, 3), c(3, 1, 3))));
    assert!(d.edges.contains(&(c(1, 0, 3), c(3, 0, 3))));
    let mut expect = BTreeSet::new();
    for &p in col.colors.keys() {
        if p.x > 0 {
            expect.insert((p, p.offset(-1, 0, 0)));
        }
        if p.y == 0 {
            expect.insert((p, p.offset(0, 1, 0)));
        }
    }
    expect.insert((c(1, 1, 3), c(3, 1, 3)));
    expect.insert((c(1, 0, 3), c(3, 0, 3)));
    assert_eq!(d.edges, expect);
    assert_eq!(d.reachable, closure(&expect, &[c(0, 1, 3)]));
    assert_eq!(d.reachable, BTreeSet::from([c(0, 1, 3)]));
}

#[test]
fn no_orange_means_nothing_reachable() {
    let col = coloring(&[(0, 0, Color::Blue), (1, 0, Color::Red), (0, 1, Color::Green)]);
    assert!(build_slice_digraph(&col).reachable.is_empty());
}

#[test]
fn strip_on_a_slab() {
    let mut cells = boxed(3, 3, 1);
    cells.extend((0..3).map(|y| c(1, y, 1)));
    let t = cfg(cells);
    let plan = assert_plan_verifies(&t);
    assert_eq!(plan.stats.slices, 2);
}

#[test]
fn free_standing_step_uses_distance_order() {
    let t = cfg([c(0, 0, 0), c(1, 0, 0), c(1, 0, 1)]);
    let h = build_slice_graph(&t);
    let bottom = &h.nodes[1 - h.s0];
    let order = full_order(bottom, None, None);
    assert_eq!(order, vec![c(0, 0, 0), c(1, 0, 0)]);
    assert_plan_verifies(&t);
}

#[test]
fn feature_size_holds_after_every_slice() {
    let t = generate(&FixtureSpec::RandomFeature2 { n: 40, seed: 11 }).unwrap();
    let plan = plan_monotone_with(&t, &MonotoneOptions { cadence: CheckCadence::Slice, ..Default::default() }).unwrap();
    let r = verify_schedule(&t, &plan.schedule, 2, true, true);
    assert!(r.ok);
    assert!(external_feature_size_at_least(&r.final_config, 2).holds);
}

#[test]
fn trivial_inputs() {
    let t = cfg([c(0, 0, 0)]);
    let plan = assert_plan_verifies(&t);
    assert_eq!(plan.schedule.total_steps(), 0);

    let t = cfg(boxed(2, 2, 2));
    let plan = assert_plan_verifies(&t);
    let ids: BTreeSet<u32> = plan.schedule.moves.iter().map(|m| m.mover.0).collect();
    assert_eq!(ids.len(), 8);
}

fn voids_along(t: &Configuration, plan: &MonotonePlan) -> Vec<usize> {
    let mut config = t.clone();
    let mut out = vec![label_empty_space(&config, 0).void_count()];
    for mv in &plan.schedule.moves {
        apply_move(&mut config, mv).unwrap();
        out.push(label_empty_space(&config, 0).void_count());
    }
    out
}

#[test]
fn closed_box_opens_its_void() {
    let t = cfg(shell(5, 5, 4));
    assert_eq!(label_empty_space(&t, 0).void_count(), 1);
    let plan = assert_plan_verifies(&t);
    assert_eq!(plan.stats.voids_opened, 1);
    let voids = voids_along(&t, &plan);
    let open = voids.iter().position(|&v| v == 0).unwrap();
    assert!(open < plan.schedule.moves.len());
    assert!(voids[open..].iter().all(|&v| v == 0));
}

#[test]
fn pillar_box_uses_partial_deconstruction() {
    let t = generate(&FixtureSpec::BoxWithPillar { dims: [7, 7, 5], pillar: 1 }).unwrap();
    let plan = assert_plan_verifies(&t);
    assert!(plan.stats.partial >= 1);
    assert_eq!(plan.stats.lemma_failures, 0);
    let voids = voids_along(&t, &plan);
    assert_eq!(voids[0], 1);
    assert_eq!(*voids.last().unwrap(), 0);
}

#[test]
fn rejects_ineligible_input() {
    assert!(matches!(plan_monotone(&cfg([c(0, 0, 0), c(2, 0, 0)])), Err(Error::DisconnectedInput)));
    let gap = cfg([c(0, 0, 0), c(1, 0, 0), c(2, 0, 0), c(0, 0, 1), c(2, 0, 1)]);
    assert!(matches!(plan_monotone(&gap), Err(Error::IneligibleInput(_))));
    let flat = Configuration::new(Dimension::Two, [c(0, 0, 0)]).unwrap();
    assert!(matches!(plan_monotone(&flat), Err(Error::IneligibleInput(_))));
}

#[test]
fn partial_removal_lemmas_on_a_ceiling() {
    let mut cells = shell(8, 8, 4);
    cells.extend([c(3, 3, 2), c(4, 3, 2), c(3, 4, 2), c(4, 4, 2)]);
    let t = cfg(cells);
    let h = build_slice_graph(&t);
    let ceiling = &h.nodes[h.s0];
    let col = color_slice(&t, ceiling, true);
    let d = build_slice_digraph(&col);
    let counts: BTreeMap<Color, usize> = col.colors.values().fold(BTreeMap::new(), |mut m, &k| {
        *m.entry(k).or_default() += 1;
        m
    });
    assert_eq!(counts[&Color::Orange], 4);
    assert_eq!(counts[&Color::Blue], 32);
    let f = partial_lemma_failures(&col, &d);
    assert!(f.is_empty(), "{f:?}");
}
