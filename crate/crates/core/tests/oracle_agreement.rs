use cellpath::oracle::{brute_force, brute_force_paths};
use cellpath::{build_database, dominates, moa_star, CellCoord, GoalRegion, GridMap, Query};
use proptest::prelude::*;

/// A small random map plus a goal and start drawn from its free cells.
fn instance() -> impl Strategy<Value = (GridMap, GoalRegion, CellCoord)> {
    (any::<u64>(), 1usize..=3, 1usize..=5, 0.0f64..0.4, 0u64..6, any::<bool>(), any::<prop::sample::Index>(), any::<prop::sample::Index>())
        .prop_map(|(seed, rows, cols, density, max_cost, cut, g, s)| {
            let map = GridMap::random(seed, rows, cols, density, max_cost)
                .unwrap()
                .with_corner_cut(cut);
            let free: Vec<CellCoord> = map.free_cells().collect();
            let goal = GoalRegion::single(free[g.index(free.len())]);
            let start = free[s.index(free.len())];
            (map, goal, start)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn database_matches_oracle((map, goal, s) in instance()) {
        let db = build_database(&map, &goal).unwrap();
        let q = Query::new(&db, &map).unwrap();
        let truth = brute_force(&map, s, &goal, 20).unwrap();
        prop_assert_eq!(q.full(s).unwrap(), truth);
    }

    #[test]
    fn moa_star_matches_oracle((map, goal, s) in instance()) {
        let (front, paths) = moa_star(&map, s, &goal).unwrap();
        let (truth, truth_paths) = brute_force_paths(&map, s, &goal, 20).unwrap();
        prop_assert_eq!(front, truth.front);
        prop_assert_eq!(paths, truth_paths);
    }

    #[test]
    fn enumerated_paths_are_valid_and_optimal((map, goal, s) in instance()) {
        let db = build_database(&map, &goal).unwrap();
        let q = Query::new(&db, &map).unwrap();
        let front = q.pareto_front_at(s).unwrap();
        let (paths, truncated) = q.enumerate_paths(s, Some(50)).unwrap();
        prop_assert!(!truncated || paths.len() == 50);
        for (p, v) in &paths {
            prop_assert!(p.is_valid(&map, &goal));
            prop_assert_eq!(p.cost(&map).unwrap(), *v);
            prop_assert!(front.contains(v));
            prop_assert!(front.iter().all(|w| !dominates(w, v)));
        }
    }
}
