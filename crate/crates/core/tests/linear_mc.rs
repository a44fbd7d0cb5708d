use panelkit::inference::{CoefTest, Reference};
use panelkit::linear::{self, ClusterCorrection, Effects, ModelSpec};
use panelkit::synth::StaticPanel;

fn fe(regs: &[&str]) -> ModelSpec {
    ModelSpec::new("y", regs, Effects::Fixed)
}

fn rate(hits: usize, n: usize) -> f64 {
    hits as f64 / n as f64
}

#[test]
fn fixed_effects_cover_truth() {
    let dgp = StaticPanel::default();
    let seeds = 500;
    let mut hits = 0;
    for s in 0..seeds {
        let fit = linear::fit(&fe(&["x1", "x2"]), &dgp.generate(s)).unwrap();
        let ok = [("x1", 0.5), ("x2", -1.0)]
            .iter()
            .all(|(n, b)| ((fit.coefficient(n).unwrap() - b) / fit.std_error(n).unwrap()).abs() <= 3.0);
        hits += usize::from(ok);
    }
    assert!(rate(hits, seeds as usize) >= 0.99, "{hits}/{seeds}");
}

#[test]
fn exact_recovery_without_noise() {
    let dgp = StaticPanel {
        betas: vec![2.0],
        sigma: 0.0,
        effect_loading: 0.7,
        ..Default::default()
    };
    let fit = linear::fit(&fe(&["x1"]), &dgp.generate(4)).unwrap();
    assert!((fit.coefficient("x1").unwrap() - 2.0).abs() < 1e-10);
}

#[test]
fn robust_close_to_classical_under_iid_errors() {
    let seeds = 200;
    let mut ratio = 0.0;
    for s in 0..seeds {
        let fit = linear::fit(&fe(&["x1", "x2"]), &StaticPanel::default().generate(1000 + s)).unwrap();
        let rob = fit.cluster_robust(ClusterCorrection::SmallSample).unwrap();
        ratio += rob.std_error("x1").unwrap() / fit.std_error("x1").unwrap();
    }
    let mean = ratio / seeds as f64;
    assert!((mean - 1.0).abs() <= 0.15, "mean robust/classical {mean}");
}

#[test]
fn robust_larger_under_serial_correlation() {
    let dgp = StaticPanel {
        error_rho: 0.8,
        regressor_rho: 0.8,
        sigma: 1.0,
        ..Default::default()
    };
    let seeds = 200;
    let mut larger = 0;
    for s in 0..seeds {
        let fit = linear::fit(&fe(&["x1", "x2"]), &dgp.generate(2000 + s)).unwrap();
        let rob = fit.cluster_robust(ClusterCorrection::SmallSample).unwrap();
        larger += usize::from(rob.std_error("x1").unwrap() > fit.std_error("x1").unwrap());
    }
    assert!(rate(larger, seeds as usize) >= 0.95, "{larger}/{seeds}");
}

#[test]
fn wald_size_and_power() {
    let dgp = StaticPanel {
        betas: vec![0.5, 0.0, 0.0],
        sigma: 1.0,
        ..Default::default()
    };
    let seeds = 500;
    let (mut size, mut power) = (0, 0);
    for s in 0..seeds {
        let fit = linear::fit(&fe(&["x1", "x2", "x3"]), &dgp.generate(3000 + s)).unwrap();
        size += usize::from(fit.wald_joint(&["x2", "x3"]).unwrap().p_value < 0.05);
        power += usize::from(fit.wald_joint(&["x1", "x2"]).unwrap().p_value < 0.01);
    }
    let size = rate(size, seeds as usize);
    assert!((0.03..=0.07).contains(&size), "size {size}");
    assert!(rate(power, seeds as usize) >= 0.99);
}

#[test]
fn hausman_detects_correlated_effects() {
    let seeds = 200;
    let mut fixed = 0;
    let mut null_rejections = 0;
    for s in 0..seeds {
        let corr = StaticPanel {
            effect_loading: 1.0,
            sigma: 1.0,
            ..Default::default()
        }
        .generate(4000 + s);
        let spec = fe(&["x1", "x2"]);
        let h = linear::hausman(
            &linear::fit(&spec, &corr).unwrap(),
            &linear::fit(&spec.with_effects(Effects::Random), &corr).unwrap(),
        )
        .unwrap();
        fixed += usize::from(h.preferred == Effects::Fixed);

        let unc = StaticPanel { sigma: 1.0, ..Default::default() }.generate(5000 + s);
        let h = linear::hausman(
            &linear::fit(&spec, &unc).unwrap(),
            &linear::fit(&spec.with_effects(Effects::Random), &unc).unwrap(),
        )
        .unwrap();
        null_rejections += usize::from(h.p_value < 0.05);
    }
    assert!(rate(fixed, seeds as usize) >= 0.90, "{fixed}/{seeds}");
    let size = rate(null_rejections, seeds as usize);
    assert!((0.02..=0.08).contains(&size), "size {size}");
}

#[test]
fn shifting_the_dependent_changes_nothing_under_fixed_effects() {
    let ds = StaticPanel { sigma: 0.5, ..Default::default() }.generate(6);
    let shifted = {
        let y: Vec<Option<f64>> = ds.values("y").unwrap().iter().map(|v| v.map(|v| v + 100.0)).collect();
        let x1 = ds.values("x1").unwrap().to_vec();
        let x2 = ds.values("x2").unwrap().to_vec();
        let mut b = panelkit::dataset::PanelDataset::builder(["y", "x1", "x2"]);
        for r in 0..ds.n_rows() {
            b = b.row_opt(ds.entity(r), ds.year(r), [y[r], x1[r], x2[r]]);
        }
        b.build().unwrap()
    };
    let a = linear::fit(&fe(&["x1", "x2"]), &ds).unwrap();
    let b = linear::fit(&fe(&["x1", "x2"]), &shifted).unwrap();
    for n in ["x1", "x2"] {
        assert!((a.coefficient(n).unwrap() - b.coefficient(n).unwrap()).abs() < 1e-9);
        assert!((a.std_error(n).unwrap() - b.std_error(n).unwrap()).abs() < 1e-9);
    }
    assert!((a.metrics.r_squared.unwrap() - b.metrics.r_squared.unwrap()).abs() < 1e-9);
}

#[test]
fn adjusted_r2_never_exceeds_r2() {
    for s in 0..50 {
        let fit = linear::fit(&fe(&["x1", "x2"]), &StaticPanel { sigma: 2.0, ..Default::default() }.generate(s)).unwrap();
        let m = fit.fit_metrics();
        assert!(m.r_squared.unwrap() <= 1.0);
        assert!(m.adj_r_squared.unwrap() <= m.r_squared.unwrap());
    }
}

#[test]
fn coefficient_test_edge_cases() {
    let zero = CoefTest::compute("b", 0.0, 4.0, Reference::StudentT { df: 30.0 });
    assert_eq!((zero.statistic, zero.p_value), (Some(0.0), Some(1.0)));
    let edge = CoefTest::compute("b", 1.96, 1.0, Reference::StudentT { df: 1e7 });
    assert!((edge.p_value.unwrap() - 0.05).abs() < 1e-3);
    let degenerate = CoefTest::compute("b", 1.0, 0.0, Reference::Normal);
    assert_eq!((degenerate.se, degenerate.p_value, degenerate.stars), (None, None, ""));
}
