use panelkit::dataset::{lag_name, log_name, OutlierRule, PanelDataset};
use proptest::prelude::*;

/// Rows `(entity, year, a, b)`; cells may be missing and years may have gaps.
type Rows = Vec<(usize, i32, Option<f64>, Option<f64>)>;

fn panel_rows() -> impl Strategy<Value = Rows> {
    let cell = prop::option::weighted(0.85, 0.1f64..100.0);
    prop::collection::btree_map((0usize..5, 2000i32..2010), (cell.clone(), cell), 3..40)
        .prop_map(|m| m.into_iter().map(|((e, y), (a, b))| (e, y, a, b)).collect())
}

fn build(rows: &Rows) -> PanelDataset {
    rows.iter()
        .fold(PanelDataset::builder(["a", "b"]), |b, &(e, y, a, v)| b.row_opt(&format!("E{e}"), y, [a, v]))
        .build()
        .unwrap()
}

proptest! {
    #[test]
    fn lag_reads_only_the_previous_calendar_year(rows in panel_rows(), k in 1u32..3) {
        let ds = build(&rows).add_lags(&["a"], k).unwrap();
        let lag = ds.values(&lag_name("a", k)).unwrap();
        for r in 0..ds.n_rows() {
            let want = rows
                .iter()
                .find(|(e, y, _, _)| format!("E{e}") == ds.entity(r) && *y == ds.year(r) - k as i32)
                .and_then(|row| row.2);
            prop_assert_eq!(lag[r], want);
        }
    }

    #[test]
    fn log_then_exp_is_identity(rows in panel_rows()) {
        let ds = build(&rows).log_transform(&["a", "b"]).unwrap();
        for v in ["a", "b"] {
            let raw = ds.values(v).unwrap();
            for (l, x) in ds.values(&log_name(v)).unwrap().iter().zip(raw) {
                prop_assert_eq!(l.is_some(), x.is_some());
                if let (Some(l), Some(x)) = (l, x) {
                    prop_assert!((l.exp() - x).abs() <= 1e-12 * x);
                }
            }
        }
    }

    #[test]
    fn describe_ignores_row_order(rows in panel_rows()) {
        let mut reversed = rows.clone();
        reversed.reverse();
        let (a, b) = (build(&rows).describe(), build(&reversed).describe());
        for (x, y) in a.columns.iter().zip(&b.columns) {
            prop_assert_eq!(x.count, y.count);
            for (p, q) in [(x.mean, y.mean), (x.median, y.median), (x.std_dev, y.std_dev), (x.skewness, y.skewness)] {
                prop_assert_eq!(p.is_some(), q.is_some());
                if let (Some(p), Some(q)) = (p, q) {
                    prop_assert!((p - q).abs() <= 1e-9 * (1.0 + p.abs()));
                }
            }
        }
    }

    #[test]
    fn correlation_is_symmetric_with_unit_diagonal(rows in panel_rows()) {
        let c = build(&rows).correlation_matrix(&["a", "b"]).unwrap();
        prop_assert_eq!(c.get("a", "a"), Some(1.0));
        prop_assert_eq!(c.get("b", "b"), Some(1.0));
        prop_assert_eq!(c.get("a", "b"), c.get("b", "a"));
        if let Some(r) = c.get("a", "b") {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        }
    }

    #[test]
    fn outlier_removal_keeps_a_subset_and_logs_every_drop(rows in panel_rows(), k in 0.5f64..3.0) {
        let ds = build(&rows);
        for rule in [OutlierRule::Iqr { k }, OutlierRule::Zscore { k }] {
            let (kept, log) = ds.remove_outliers(&["a", "b"], rule).unwrap();
            prop_assert_eq!(kept.n_rows() + log.len(), ds.n_rows());
            for r in 0..kept.n_rows() {
                let orig = ds.row_of(kept.entity(r), kept.year(r));
                prop_assert!(orig.is_some());
                prop_assert_eq!(kept.values("a").unwrap()[r], ds.values("a").unwrap()[orig.unwrap()]);
            }
            for e in &log {
                prop_assert!(e.value < e.lower || e.value > e.upper);
                prop_assert!(kept.row_of(&e.entity, e.year).is_none());
            }
        }
    }
}
