use antlgp::antcluster::{
    read_snapshot_csv, run, transition_distribution, write_snapshot_csv, ColonyConfig, ColonyState, DataItem,
    PheromoneParams, ThresholdParams, MOORE_OFFSETS,
};
use antlgp::grid::{GridCoord, ToroidalGrid};
use antlgp::rng::rng_from_seed;
use proptest::prelude::*;

fn items(n: usize, seed: u64) -> Vec<DataItem> {
    use rand::Rng;
    let mut rng = rng_from_seed(seed);
    (0..n).map(|i| DataItem::new(i as u64 * 3 + 1, vec![rng.gen(), rng.gen()])).collect()
}

fn small(w: usize, h: usize, ants: usize, steps: u64, seed: u64) -> ColonyConfig {
    ColonyConfig {
        width: w,
        height: h,
        n_ants: ants,
        thresholds: ThresholdParams { k1: 0.1, k2: 0.3, exponent: 2 },
        max_steps: steps,
        snapshot_steps: vec![0, steps / 2, steps],
        seed,
        ..ColonyConfig::daily()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transitions_sum_to_one_and_follow_the_field(
        field in proptest::collection::vec(0.0f64..50.0, 8),
        rot in 0usize..8,
        beta in 0.1f64..5.0,
    ) {
        let p = PheromoneParams { sensitivity: beta, ..Default::default() };
        let centre = GridCoord::new(2, 2);
        let mut g = ToroidalGrid::new(5, 5).unwrap();
        let mut r = ToroidalGrid::new(5, 5).unwrap();
        for (k, (dx, dy)) in MOORE_OFFSETS.iter().enumerate() {
            g.set_pheromone(g.shifted(centre, *dx, *dy), field[k]);
            r.set_pheromone(r.shifted(centre, *dx, *dy), field[(k + rot) % 8]);
        }
        let a = transition_distribution(&g, centre, &p);
        let b = transition_distribution(&r, centre, &p);
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 0..8 {
            prop_assert!(a[k] > 0.0);
            prop_assert!((b[k] - a[(k + rot) % 8]).abs() < 1e-15);
        }
    }

    #[test]
    fn every_step_conserves_items(w in 2usize..7, h in 2usize..7, ants in 1usize..5, seed in any::<u64>()) {
        let n = (w * h / 2).max(1);
        let mut rng = rng_from_seed(seed);
        let mut s = ColonyState::new(small(w, h, ants, 1, seed), items(n, seed), &mut rng).unwrap();
        for _ in 0..200 {
            s.step(&mut rng);
            prop_assert!(s.check_conservation().is_ok());
            prop_assert_eq!(s.grid.item_count() + s.carried_count(), n);
        }
        s.force_drop().unwrap();
        prop_assert_eq!(s.grid.item_count(), n);
    }

    #[test]
    fn runs_are_reproducible(seed in any::<u64>()) {
        let cfg = small(8, 8, 3, 300, seed);
        let a = run(&cfg, items(20, seed)).unwrap();
        let b = run(&cfg, items(20, seed)).unwrap();
        prop_assert_eq!(&a.snapshots, &b.snapshots);
        prop_assert_eq!(a.state, b.state);
    }
}

#[test]
fn snapshot_files_reload() {
    let out = run(&small(10, 10, 4, 500, 3), items(30, 3)).unwrap();
    assert_eq!(out.snapshots.len(), 3);
    assert_eq!(out.snapshots[2].cells.len(), 30);
    for s in &out.snapshots {
        let mut buf = Vec::new();
        write_snapshot_csv(s, &mut buf).unwrap();
        assert_eq!(&read_snapshot_csv(buf.as_slice()).unwrap(), s);
    }
}

#[test]
fn overfull_grid_is_rejected() {
    let err = run(&small(3, 3, 1, 10, 0), items(10, 0)).unwrap_err();
    assert!(!err.is_io());
}
