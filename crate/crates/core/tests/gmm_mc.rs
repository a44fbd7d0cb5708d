use panelkit::dataset::PanelDataset;
use panelkit::gmm::{fit_system_gmm, GmmFit, GmmSpec};
use panelkit::synth::DynamicPanel;

fn fit(ds: &PanelDataset) -> GmmFit {
    fit_system_gmm(&GmmSpec::new("y", &["x"]), ds).unwrap()
}

fn rate(hits: usize, n: usize) -> f64 {
    hits as f64 / n as f64
}

/// Rebuilds `ds` with every value passed through `f(column, value)` and
/// every entity code through `code`.
fn rebuild(ds: &PanelDataset, code: impl Fn(&str) -> String, f: impl Fn(&str, f64) -> f64) -> PanelDataset {
    let y = ds.values("y").unwrap();
    let x = ds.values("x").unwrap();
    let mut b = PanelDataset::builder(["y", "x"]);
    for r in 0..ds.n_rows() {
        b = b.row(&code(ds.entity(r)), ds.year(r), [f("y", y[r].unwrap()), f("x", x[r].unwrap())]);
    }
    b.build().unwrap()
}

#[test]
fn persistence_estimate_concentrates() {
    let seeds = 200;
    let inside = (0..seeds)
        .filter(|&s| (0.4..=0.6).contains(&fit(&DynamicPanel::default().generate(100 + s)).persistence()))
        .count();
    assert!(rate(inside, seeds as usize) >= 0.95, "{inside}/{seeds}");
}

#[test]
fn zero_persistence_covered() {
    let dgp = DynamicPanel { rho: 0.0, ..Default::default() };
    let seeds = 200;
    let mut hits = 0;
    let mut ar1 = 0;
    for s in 0..seeds {
        let f = fit(&dgp.generate(300 + s));
        hits += usize::from((f.persistence() / f.std_error("y(t-1)").unwrap()).abs() <= 3.0);
        // i.i.d. level errors: differenced errors are MA(1)
        ar1 += usize::from(f.ar_test(1).unwrap().p_value < 0.05);
    }
    assert!(rate(hits, seeds as usize) >= 0.95, "{hits}/{seeds}");
    assert!(rate(ar1, seeds as usize) >= 0.80, "{ar1}/{seeds}");
}

#[test]
fn sargan_p_values_uniform_under_valid_instruments() {
    let seeds = 200;
    let mut p: Vec<f64> = (0..seeds)
        .map(|s| fit(&DynamicPanel::default().generate(500 + s)).sargan.unwrap().p_value)
        .collect();
    p.sort_by(f64::total_cmp);
    let n = p.len() as f64;
    let d = p
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / n - v).max(v - i as f64 / n))
        .fold(0.0, f64::max);
    // asymptotic 1% critical value of the Kolmogorov distribution
    let critical = 1.6276 / n.sqrt();
    assert!(d < critical, "KS D = {d:.4}, critical {critical:.4}");
}

#[test]
fn sargan_rejects_invalid_lagged_instruments() {
    let dgp = DynamicPanel { error_rho: 0.5, ..Default::default() };
    let seeds = 200;
    let rejections = (0..seeds)
        .filter(|&s| fit(&dgp.generate(700 + s)).sargan.unwrap().p_value < 0.05)
        .count();
    assert!(rate(rejections, seeds as usize) >= 0.5, "{rejections}/{seeds}");
}

#[test]
fn wald_size_and_power() {
    let null = DynamicPanel { rho: 0.0, beta: 0.0, ..Default::default() };
    let seeds = 500;
    let (mut size, mut power) = (0, 0);
    for s in 0..seeds {
        let f = fit(&null.generate(900 + s));
        size += usize::from(f.wald.unwrap().p_value < 0.05);
        let g = fit(&DynamicPanel::default().generate(1500 + s));
        power += usize::from(g.wald_joint(&["y(t-1)", "x"]).unwrap().p_value < 0.01);
    }
    let size = rate(size, seeds as usize);
    assert!((0.02..=0.08).contains(&size), "size {size}");
    assert!(rate(power, seeds as usize) >= 0.99);
}

#[test]
fn rescaling_a_regressor() {
    let ds = DynamicPanel::default().generate(21);
    let c = 10.0;
    let scaled = rebuild(&ds, str::to_owned, |col, v| if col == "x" { v * c } else { v });
    let (a, b) = (fit(&ds), fit(&scaled));
    assert!((a.coefficient("x").unwrap() / c - b.coefficient("x").unwrap()).abs() < 1e-8);
    let z = |f: &GmmFit| f.z_tests().into_iter().find(|t| t.name == "x").unwrap().statistic.unwrap();
    assert!((z(&a) - z(&b)).abs() < 1e-8);
    assert!((a.sargan.unwrap().statistic - b.sargan.unwrap().statistic).abs() < 1e-8);
    for k in [1, 2] {
        assert!((a.ar_test(k).unwrap().z - b.ar_test(k).unwrap().z).abs() < 1e-8);
    }
}

#[test]
fn entity_order_irrelevant() {
    let ds = DynamicPanel { n_entities: 60, ..Default::default() }.generate(22);
    // reversing the codes reverses the stored entity order
    let renamed = rebuild(
        &ds,
        |c| {
            let i: usize = c[1..].parse().unwrap();
            format!("E{:03}", 999 - i)
        },
        |_, v| v,
    );
    let (a, b) = (fit(&ds), fit(&renamed));
    for (x, y) in a.coefficients.iter().zip(b.coefficients.iter()) {
        assert!((x - y).abs() < 1e-9);
    }
    assert!((a.sargan.unwrap().statistic - b.sargan.unwrap().statistic).abs() < 1e-8);
}
