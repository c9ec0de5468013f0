mod common;

use common::*;
use logratio::geometry::{logratio_distances_via, total_variance_via};
use logratio::transforms::invert_alr_system;
use logratio::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 2usize..8, 2usize..7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_ignores_row_scale((seed, n, j) in instance(), scale in 1e-3f64..1e6) {
        let mut rng = rng(seed);
        let raw = random_raw(&mut rng, n, j);
        let a = close(&RawTable::unlabelled(raw.clone()), 0.0).unwrap();
        let b = close(&RawTable::unlabelled(raw * scale), 0.0).unwrap();
        prop_assert!((a.values() - b.values()).amax() < 1e-14);
        for i in 0..n {
            prop_assert!((a.values().row(i).sum() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn alr_fast_and_system_routes_agree((seed, _n, j) in instance()) {
        let mut rng = rng(seed);
        let x = random_composition(&mut rng, 2, j);
        let reference = (seed as usize) % j;
        let p = alr_pattern(&labels(j), reference).unwrap();
        let y: Vec<f64> = apply_pattern(&x.log(), &p).unwrap().values.row(0).iter().copied().collect();
        let fast = invert_alr(&y, reference).unwrap();
        let system = invert_alr_system(&y, &p).unwrap();
        prop_assert!((fast - system).amax() < 1e-14);
    }

    #[test]
    fn distances_are_a_metric_and_routes_agree((seed, n, j) in instance()) {
        let mut rng = rng(seed);
        let x = random_composition(&mut rng, n, j);
        let c = random_weights(&mut rng, j, WeightAxis::Parts);
        let d = logratio_distances(&x, &c, true).unwrap();
        let lr = logratio_distances_via(&x, &c, true, Route::Lr).unwrap();
        prop_assert!((&d.values - &lr.values).amax() < 1e-12);
        for a in 0..n {
            prop_assert_eq!(d.get(a, a), 0.0);
            for b in 0..n {
                prop_assert_eq!(d.get(a, b), d.get(b, a));
                for k in 0..n {
                    prop_assert!(d.get(a, b) <= d.get(a, k) + d.get(k, b) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn total_variance_routes_and_definition_agree((seed, n, j) in instance()) {
        let mut rng = rng(seed);
        let x = random_composition(&mut rng, n, j);
        let r = random_weights(&mut rng, n, WeightAxis::Samples);
        let c = random_weights(&mut rng, j, WeightAxis::Parts);
        let oracle = pairwise_total_variance(x.values(), r.as_slice(), c.as_slice());
        prop_assert!((total_variance(&x, &r, &c).unwrap() - oracle).abs() < 1e-12);
        prop_assert!((total_variance_via(&x, &r, &c, Route::Lr).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn ward_total_height_is_total_variance((seed, n, j) in instance()) {
        let mut rng = rng(seed);
        let x = random_composition(&mut rng, n, j);
        let r = random_weights(&mut rng, n, WeightAxis::Samples);
        let c = random_weights(&mut rng, j, WeightAxis::Parts);
        let d = logratio_distances(&x, &c, true).unwrap();
        let tree = ward_cluster(&ClusterInput::new(d, r.clone()).unwrap()).unwrap();
        prop_assert!(tree.heights_nondecreasing());
        let tv = total_variance(&x, &r, &c).unwrap();
        prop_assert!((tree.merges().last().unwrap().height - tv).abs() < 1e-9);
    }

    #[test]
    fn weighted_amalgamation_ends_at_total_variance((seed, n, j) in instance()) {
        let mut rng = rng(seed);
        let x = random_composition(&mut rng, n, j);
        let r = random_weights(&mut rng, n, WeightAxis::Samples);
        let c = random_weights(&mut rng, j, WeightAxis::Parts);
        let tree = amalgamation_cluster(&x, &r, &c, true).unwrap();
        let tv = total_variance(&x, &r, &c).unwrap();
        prop_assert!((tree.merges().last().unwrap().height - tv).abs() < 1e-9);
    }

    #[test]
    fn clustering_ignores_row_scale((seed, n, j) in instance(), scale in 1e-3f64..1e3) {
        let mut rng = rng(seed);
        let raw = random_raw(&mut rng, n, j);
        let mut scaled = raw.clone();
        for i in 0..n {
            let mut row = scaled.row_mut(i);
            row *= scale * (i + 1) as f64;
        }
        let a = close(&RawTable::unlabelled(raw), 0.0).unwrap();
        let b = close(&RawTable::unlabelled(scaled), 0.0).unwrap();
        let r = WeightVector::uniform(n, WeightAxis::Samples);
        let c = WeightVector::uniform(j, WeightAxis::Parts);
        let ward = |x: &CompositionMatrix| {
            ward_cluster(&ClusterInput::new(logratio_distances(x, &c, true).unwrap(), r.clone()).unwrap()).unwrap()
        };
        prop_assert!(same_tree(&ward(&a), &ward(&b), 1e-12));
        for weighted in [true, false] {
            let ta = amalgamation_cluster(&a, &r, &c, weighted).unwrap();
            let tb = amalgamation_cluster(&b, &r, &c, weighted).unwrap();
            prop_assert!(same_tree(&ta, &tb, 1e-12));
        }
    }

    #[test]
    fn tree_formats_round_trip((seed, _n, j) in instance()) {
        let mut rng = rng(seed);
        let tree = random_tree(&mut rng, &labels(j));
        let json = tree_export(&tree, TreeFormat::MergeListJson);
        prop_assert_eq!(&tree_import(&json, TreeFormat::MergeListJson).unwrap(), &tree);
        let nested = tree_export(&tree, TreeFormat::Parenthesized);
        prop_assert_eq!(tree_import(&nested, TreeFormat::Parenthesized).unwrap().clusters(), tree.clusters());
    }

    #[test]
    fn lra_is_deterministic_and_sign_fixed((seed, n, j) in instance()) {
        let mut rng = rng(seed);
        let x = random_composition(&mut rng, n.max(3), j.max(3));
        let r = WeightVector::uniform(x.nrows(), WeightAxis::Samples);
        let c = marginal_weights(&x);
        let a = lra_fit(&x, &r, &c).unwrap();
        prop_assert_eq!(&a, &lra_fit(&x, &r, &c).unwrap());
        for k in 0..a.rank() {
            let v = a.col_contribution.column(k);
            let big = v.iter().copied().fold(0.0f64, |m, z| if z.abs() > m.abs() { z } else { m });
            prop_assert!(big > 0.0);
        }
        let pct: f64 = a.explained_pct.sum();
        prop_assert!((pct - 100.0).abs() < 1e-9);
    }
}

#[test]
fn five_point_ward_matches_oracle() {
    let points = DMatrix::from_row_slice(5, 2, &[0.0, 0.0, 1.0, 0.2, 5.0, 5.0, 5.5, 4.0, 2.5, 2.5]);
    let n = points.nrows();
    let d = DMatrix::from_fn(n, n, |a, b| (points.row(a) - points.row(b)).norm());
    let names: Vec<String> = (0..n).map(|i| format!("o{i}")).collect();
    let input = ClusterInput::new(
        DistanceMatrix {
            values: d,
            labels: names.clone(),
        },
        WeightVector::uniform(n, WeightAxis::Samples),
    )
    .unwrap();
    let tree = ward_cluster(&input).unwrap();
    let oracle = ward_oracle(&points, &[0.2; 5], &names);
    assert!(same_tree(&tree, &oracle, 1e-12), "{tree:?}\n{oracle:?}");
}

#[test]
fn amalgamation_can_raise_variance() {
    // Summing the two small parts moves weight onto a direction that varies
    // more, so the best first merge has a negative height.
    let x = CompositionMatrix::from_rows(&[vec![0.6, 0.05, 0.35], vec![0.05, 0.05, 0.9]]).unwrap();
    let r = WeightVector::uniform(2, WeightAxis::Samples);
    let c = WeightVector::uniform(3, WeightAxis::Parts);
    let tree = amalgamation_cluster(&x, &r, &c, true).unwrap();
    let first = tree.merges()[0];
    assert_eq!((first.left, first.right), (1, 2));
    let merged = DMatrix::from_row_slice(2, 2, &[0.6, 0.4, 0.05, 0.95]);
    let after = pairwise_total_variance(&merged, r.as_slice(), &[1.0 / 3.0, 2.0 / 3.0]);
    let base = pairwise_total_variance(x.values(), r.as_slice(), c.as_slice());
    assert!(after > base);
    assert!((first.height - (base - after)).abs() < 1e-12);
    assert!(tree.merges()[1].height > 0.0);
}
