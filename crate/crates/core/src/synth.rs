//! Synthetic panel generators used by the examples, tests and the CLI demo.

use rand_distr::{Distribution, StandardNormal};

use crate::dataset::PanelDataset;
use crate::rng;

fn normal(r: &mut rng::StreamRng) -> f64 {
    StandardNormal.sample(r)
}

fn entity_code(i: usize) -> String {
    format!("E{i:03}")
}

/// Static panel `y = sum_j beta_j x_j + alpha_i + sigma * e`.
///
/// Regressors are standard normal plus `effect_loading * alpha_i`, so a
/// non-zero loading correlates the entity effect with the regressors.
#[derive(Debug, Clone)]
pub struct StaticPanel {
    pub n_entities: usize,
    pub n_years: usize,
    pub betas: Vec<f64>,
    pub sigma: f64,
    pub effect_sd: f64,
    pub effect_loading: f64,
    /// AR(1) coefficient of the idiosyncratic error within an entity.
    pub error_rho: f64,
    /// AR(1) coefficient of the regressors within an entity.
    pub regressor_rho: f64,
}

impl Default for StaticPanel {
    fn default() -> Self {
        StaticPanel {
            n_entities: 50,
            n_years: 10,
            betas: vec![0.5, -1.0],
            sigma: 0.1,
            effect_sd: 1.0,
            effect_loading: 0.0,
            error_rho: 0.0,
            regressor_rho: 0.0,
        }
    }
}

impl StaticPanel {
    /// Columns `y`, `x1`, `x2`, ...; years start at 2000.
    pub fn generate(&self, seed: u64) -> PanelDataset {
        let mut r = rng::stream(seed);
        let k = self.betas.len();
        let mut names = vec!["y".to_owned()];
        names.extend((1..=k).map(|j| format!("x{j}")));
        let mut b = PanelDataset::builder(names);
        let stationary = |rho: f64| (1.0 - rho * rho).sqrt();
        for i in 0..self.n_entities {
            let alpha = self.effect_sd * normal(&mut r);
            let mut x: Vec<f64> = (0..k).map(|_| normal(&mut r)).collect();
            let mut e = normal(&mut r);
            for t in 0..self.n_years {
                if t > 0 {
                    for xj in &mut x {
                        *xj = self.regressor_rho * *xj + stationary(self.regressor_rho) * normal(&mut r);
                    }
                    e = self.error_rho * e + stationary(self.error_rho) * normal(&mut r);
                }
                let xs: Vec<f64> = x.iter().map(|v| v + self.effect_loading * alpha).collect();
                let y = xs.iter().zip(&self.betas).map(|(a, b)| a * b).sum::<f64>()
                    + alpha
                    + self.sigma * e;
                let mut row = vec![y];
                row.extend(xs);
                b = b.row(&entity_code(i), 2000 + t as i32, row);
            }
        }
        b.build().expect("well-formed synthetic panel")
    }
}

/// Dynamic panel `y_it = rho y_i,t-1 + beta x_it + eta_i + e_it` with
/// `x_it` i.i.d. standard normal. A burn-in makes the initial conditions
/// mean-stationary, which the level moments of System GMM require.
#[derive(Debug, Clone)]
pub struct DynamicPanel {
    pub n_entities: usize,
    pub n_years: usize,
    pub rho: f64,
    pub beta: f64,
    pub sigma_eps: f64,
    pub sigma_eta: f64,
    pub burn_in: usize,
    /// AR(1) coefficient of `e_it`. Non-zero values make lagged levels of
    /// `y` invalid instruments.
    pub error_rho: f64,
}

impl Default for DynamicPanel {
    fn default() -> Self {
        DynamicPanel {
            n_entities: 200,
            n_years: 10,
            rho: 0.5,
            beta: 0.3,
            sigma_eps: 1.0,
            sigma_eta: 1.0,
            burn_in: 50,
            error_rho: 0.0,
        }
    }
}

impl DynamicPanel {
    /// Columns `y` and `x`; years start at 2000.
    pub fn generate(&self, seed: u64) -> PanelDataset {
        let mut r = rng::stream(seed);
        let mut b = PanelDataset::builder(["y", "x"]);
        let innovation = self.sigma_eps * (1.0 - self.error_rho * self.error_rho).sqrt();
        for i in 0..self.n_entities {
            let eta = self.sigma_eta * normal(&mut r);
            let mut y = eta / (1.0 - self.rho);
            let mut e = 0.0;
            for t in 0..self.burn_in + self.n_years {
                e = self.error_rho * e + innovation * normal(&mut r);
                let x = normal(&mut r);
                y = self.rho * y + self.beta * x + eta + e;
                if t >= self.burn_in {
                    b = b.row(&entity_code(i), 2000 + (t - self.burn_in) as i32, [y, x]);
                }
            }
        }
        b.build().expect("well-formed synthetic panel")
    }
}

/// Country codes used by the demo panel and its group definitions.
pub const DEMO_GROUPS: [(&str, &[&str]); 4] = [
    ("G7", &["CAN", "DEU", "FRA", "GBR", "ITA", "JPN", "USA"]),
    ("BRICS", &["BRA", "CHN", "IND", "RUS", "ZAF"]),
    (
        "EU15",
        &["AUT", "BEL", "DEU", "DNK", "ESP", "FIN", "FRA", "GBR", "GRC", "IRL", "ITA", "NLD", "PRT", "SWE"],
    ),
    (
        "OECD",
        &[
            "AUS", "AUT", "BEL", "CAN", "CHE", "CHL", "DEU", "DNK", "ESP", "FIN", "FRA", "GBR", "GRC",
            "IRL", "ITA", "JPN", "KOR", "MEX", "NLD", "NOR", "NZL", "PRT", "SWE", "USA",
        ],
    ),
];

/// All distinct demo entities (32 countries).
pub fn demo_entities() -> Vec<&'static str> {
    let mut all: Vec<&str> = DEMO_GROUPS.iter().flat_map(|(_, c)| c.iter().copied()).collect();
    all.push("ISL");
    all.push("POL");
    all.push("TUR");
    all.sort_unstable();
    all.dedup();
    all
}

/// A 32-country, 2000-2022 macro panel with the investment-study column
/// names. Investment is persistent, responds to lagged growth, and has a
/// non-linear tax/unemployment interaction.
pub fn demo_panel(seed: u64) -> PanelDataset {
    let mut r = rng::stream(seed);
    let names = [
        "GFCF_Ratio", "GDP_Growth", "UnEmpl_Rate", "TAX", "CPI", "EPU_Index", "Gini_Index", "FDI", "HDI",
    ];
    let mut b = PanelDataset::builder(names);
    for code in demo_entities() {
        let level = 0.21 + 0.03 * normal(&mut r);
        let tax_base = 20.0 + 6.0 * normal(&mut r);
        let unemp_base = 7.0 + 2.5 * normal(&mut r).abs();
        let gini = (0.34 + 0.06 * normal(&mut r)).clamp(0.24, 0.58);
        let hdi = (0.86 + 0.07 * normal(&mut r)).clamp(0.5, 0.97);
        let mut gfcf = level;
        let mut growth_prev = 2.5;
        let mut unemp = unemp_base;
        for year in 2000..=2022 {
            let shock = if year == 2009 { -5.0 } else { 0.0 };
            let growth = 2.5 + shock + 0.3 * (growth_prev - 2.5) + 2.5 * normal(&mut r);
            unemp = (unemp_base + 0.6 * (unemp - unemp_base) - 0.2 * (growth - 2.5) + 0.5 * normal(&mut r)).max(1.9);
            let tax = tax_base + 0.8 * normal(&mut r);
            let cpi = 2.5 + 1.5 * normal(&mut r);
            let epu = 4.8 + 0.45 * normal(&mut r);
            let fdi = 3.0 + 4.0 * normal(&mut r);
            let nonlinear = if tax > 22.0 && unemp > 8.0 { -0.015 } else { 0.005 };
            gfcf = (0.3 * level + 0.7 * gfcf + 0.002 * growth_prev + nonlinear + 0.006 * normal(&mut r))
                .clamp(0.06, 0.5);
            let gini_t = gini + 0.004 * normal(&mut r);
            let hdi_t = (hdi + 0.002 * f64::from(year - 2000) + 0.002 * normal(&mut r)).min(0.99);
            b = b.row(code, year, [gfcf, growth, unemp, tax, cpi, epu, gini_t, fdi, hdi_t]);
            growth_prev = growth;
        }
    }
    b.build().expect("well-formed demo panel")
}
