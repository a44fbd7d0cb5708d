//! The analysis steps behind each subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use panelkit::dataset::{self, lag_name, log_name, CsvSchema, PanelDataset};
use panelkit::forest::{design_from_panel, fit_forest};
use panelkit::gmm::{fit_system_gmm, GmmRegressor, GmmSpec, LagRange, Treatment};
use panelkit::linear::{self, ClusterCorrection, Effects, LinearFit, ModelSpec};
use panelkit::report::{self, Block, Provenance, Setting};
use panelkit::rng;
use panelkit::synth;
use panelkit::vimp::{self, TestData};

use crate::config::{EffectsChoice, RunConfig};

/// Which stages a subcommand runs.
#[derive(Debug, Clone, Copy, Default)]
pub struct Stages {
    pub describe: bool,
    pub correlation: bool,
    pub linear: bool,
    pub gmm: bool,
    pub forest: bool,
    pub importance: bool,
}

pub struct Prepared {
    pub ds: PanelDataset,
    pub dependent: String,
    pub regressors: Vec<String>,
}

fn seed_for(master: u64, path: &str) -> u64 {
    rng::derive(master, rng::name_tag(path))
}

/// Loads the data and applies log transforms and the outlier rule.
pub fn prepare(cfg: &RunConfig, seed: u64, out: &Path) -> Result<Prepared> {
    let raw = if cfg.data.demo {
        synth::demo_panel(seed_for(seed, "demo"))
    } else {
        let path = cfg.data.input.as_ref().expect("validated");
        let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let schema = CsvSchema {
            entity_column: cfg.data.entity_column.clone(),
            year_column: cfg.data.year_column.clone(),
        };
        let ds = dataset::read_csv(file, &schema, &BTreeMap::new())
            .with_context(|| format!("reading {}", path.display()))?;
        for w in ds.parse_warnings() {
            println!("warning: {w:?}");
        }
        ds
    };

    let mut missing: Vec<String> = std::iter::once(&cfg.data.dependent)
        .chain(&cfg.data.regressors)
        .filter(|c| !raw.has_column(c))
        .map(|c| format!("unknown column `{c}`"))
        .collect();
    for (g, members) in &cfg.groups {
        let found = members.iter().filter(|m| raw.entities().contains(m)).count();
        if found == 0 {
            missing.push(format!("group `{g}` matches no entity in the data"));
        }
    }
    if !missing.is_empty() {
        bail!(crate::ConfigError(missing));
    }
    for (g, members) in &cfg.groups {
        for m in members.iter().filter(|m| !raw.entities().contains(m)) {
            println!("warning: group {g}: entity {m} not in data");
        }
    }

    let rename = |v: &String| {
        if cfg.data.log.contains(v) {
            log_name(v)
        } else {
            v.clone()
        }
    };
    let ds = if cfg.data.log.is_empty() {
        raw
    } else {
        raw.log_transform(&cfg.data.log)?
    };
    let dependent = rename(&cfg.data.dependent);
    let regressors: Vec<String> = cfg.data.regressors.iter().map(rename).collect();
    let mut vars = vec![dependent.clone()];
    vars.extend(regressors.iter().cloned());
    let (ds, removed) = ds.remove_outliers(&vars, cfg.data.outliers)?;
    if !removed.is_empty() {
        std::fs::create_dir_all(out)?;
        dataset::write_removal_log(&out.join("outliers.csv"), &removed)?;
        println!("outliers: removed {} rows, see outliers.csv", removed.len());
    }
    Ok(Prepared {
        ds: ds.add_lags(&[dependent.as_str()], 1)?,
        dependent,
        regressors,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn features(p: &Prepared, setting: Setting) -> Vec<String> {
    let mut f = Vec::new();
    if setting == Setting::Dynamic {
        f.push(lag_name(&p.dependent, 1));
    }
    f.extend(p.regressors.iter().cloned());
    f
}

struct HausmanRow {
    group: String,
    setting: Setting,
    test: linear::HausmanTest,
}

fn fit_linear(
    cfg: &RunConfig,
    p: &Prepared,
    ds: &PanelDataset,
    setting: Setting,
) -> Result<(LinearFit, Option<linear::HausmanTest>)> {
    let regs = features(p, setting);
    let regs: Vec<&str> = regs.iter().map(String::as_str).collect();
    let spec = ModelSpec::new(p.dependent.clone(), &regs, Effects::Fixed).with_time_dummies(cfg.linear.time_dummies);
    let robust = |fit: LinearFit| -> Result<LinearFit> {
        if !cfg.linear.cluster {
            return Ok(fit);
        }
        let c = if cfg.linear.small_sample {
            ClusterCorrection::SmallSample
        } else {
            ClusterCorrection::None
        };
        Ok(fit.cluster_robust(c)?)
    };
    let single = |e| -> Result<LinearFit> { robust(linear::fit(&spec.with_effects(e), ds)?) };
    Ok(match cfg.linear.effects {
        EffectsChoice::Fixed => (single(Effects::Fixed)?, None),
        EffectsChoice::Random => (single(Effects::Random)?, None),
        EffectsChoice::Pooled => (single(Effects::Pooled)?, None),
        EffectsChoice::Hausman => {
            let fe = linear::fit(&spec, ds)?;
            match linear::fit(&spec.with_effects(Effects::Random), ds) {
                Ok(re) => {
                    let h = linear::hausman(&fe, &re)?;
                    let chosen = if h.preferred == Effects::Random { re } else { fe };
                    (robust(chosen)?, Some(h))
                }
                Err(e) => {
                    println!("warning: random effects failed ({e}); using fixed effects");
                    (robust(fe)?, None)
                }
            }
        }
    })
}

fn gmm_spec(cfg: &RunConfig, p: &Prepared) -> GmmSpec {
    let lags = LagRange {
        min_lag: cfg.gmm.min_lag,
        max_lag: cfg.gmm.max_lag,
    };
    GmmSpec {
        dependent: p.dependent.clone(),
        regressors: p
            .regressors
            .iter()
            .zip(&cfg.data.regressors)
            .map(|(name, orig)| GmmRegressor {
                name: name.clone(),
                treatment: if cfg.gmm.endogenous.contains(orig) {
                    Treatment::Endogenous { lags }
                } else {
                    Treatment::Exogenous
                },
            })
            .collect(),
        dependent_lags: lags,
        include_time_dummies: cfg.gmm.time_dummies,
        collapse: cfg.gmm.collapse,
        ..GmmSpec::new(p.dependent.clone(), &[])
    }
}

/// Runs the selected stages and writes every artifact under `out`.
pub fn run(cfg: &RunConfig, stages: Stages) -> Result<()> {
    let seed = cfg.seed.expect("validated");
    let out = cfg.out.clone();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let p = prepare(cfg, seed, &out)?;
    let fingerprint = p.ds.fingerprint();
    let mut vars = vec![p.dependent.clone()];
    vars.extend(p.regressors.iter().cloned());

    if stages.describe {
        write(&out.join("tables/descriptive.csv"), &p.ds.describe_columns(&vars)?.to_csv())?;
    }
    if stages.correlation {
        write(&out.join("tables/correlation.csv"), &p.ds.correlation_matrix(&vars)?.to_csv())?;
    }

    let mut blocks: Vec<Block> = Vec::new();
    let mut hausman_rows = Vec::new();
    let mut failures = 0usize;
    let mut fail = |what: String, e: &dyn std::fmt::Display| {
        failures += 1;
        println!("warning: {what}: {e}");
    };
    for (group, members) in &cfg.groups {
        let ds = p.ds.select_entities(members);
        if stages.linear {
            for setting in Setting::ALL {
                match fit_linear(cfg, &p, &ds, setting) {
                    Ok((fit, h)) => {
                        blocks.push(Block::from_linear(group, setting, &fingerprint, &fit));
                        if let Some(test) = h {
                            hausman_rows.push(HausmanRow {
                                group: group.clone(),
                                setting,
                                test,
                            });
                        }
                    }
                    Err(e) => fail(format!("{group} {setting} linear"), &e),
                }
            }
        }
        if stages.gmm {
            match fit_system_gmm(&gmm_spec(cfg, &p), &ds) {
                Ok(fit) => {
                    for w in &fit.warnings {
                        println!("warning: {group} gmm: {w}");
                    }
                    blocks.push(Block::from_gmm(group, &fingerprint, &fit));
                }
                Err(e) => fail(format!("{group} gmm"), &e),
            }
        }
        if stages.forest {
            for setting in Setting::ALL {
                let tag = format!("{group}/{setting}");
                match forest_block(cfg, &p, &ds, group, setting, &fingerprint, seed, &tag, stages.importance) {
                    Ok(b) => blocks.push(b),
                    Err(e) => fail(format!("{group} {setting} forest"), &e),
                }
            }
        }
    }

    if !hausman_rows.is_empty() {
        let mut s = String::from("group,setting,statistic,df,p_value,preferred,nonpsd\n");
        for h in &hausman_rows {
            s.push_str(&format!(
                "{},{},{},{},{},{:?},{}\n",
                h.group,
                h.setting,
                report::fmt4(h.test.statistic),
                h.test.df,
                report::fmt4(h.test.p_value),
                h.test.preferred,
                h.test.nonpsd
            ));
        }
        write(&out.join("tables/hausman.csv"), &s)?;
    }

    let provenance = Provenance {
        seed,
        config_hash: cfg.hash(),
        dataset_fingerprint: fingerprint,
    };
    if stages.linear || stages.gmm || stages.forest {
        let rep = report::build_report(blocks, provenance.clone())?;
        for path in report::emit_tables(&rep, &out)? {
            println!("wrote {}", path.display());
        }
        if stages.importance {
            for path in report::emit_figures(&rep, &out)? {
                println!("wrote {}", path.display());
            }
        }
    }
    let m = report::write_manifest(&out, &provenance)?;
    println!("wrote {} (artifact hash {})", out.join(report::MANIFEST_FILE).display(), m.artifact_hash);
    if failures > 0 {
        println!("{failures} fit(s) failed; their cells are marked absent");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn forest_block(
    cfg: &RunConfig,
    p: &Prepared,
    ds: &PanelDataset,
    group: &str,
    setting: Setting,
    fingerprint: &str,
    seed: u64,
    tag: &str,
    test: bool,
) -> Result<Block> {
    let feats = features(p, setting);
    let design = design_from_panel(ds, &p.dependent, &feats)?;
    let forest = fit_forest(
        &design.features,
        &design.target,
        &cfg.forest.forest_config(seed_for(seed, &format!("{tag}/forest"))),
    )?;
    let metrics = forest.metrics(&design.features, &design.target, feats.len())?;
    let oob = forest.oob_score(&design.features, &design.target).ok();
    let importance = vimp::permutation_importance(
        &forest,
        &design.features,
        &design.target,
        cfg.forest.n_repeats,
        cfg.forest.eval,
        seed_for(seed, &format!("{tag}/importance")),
    )?;
    let decisions = if test {
        let data = TestData::new(&design.features, &design.target).with_groups(&design.groups);
        let all = vimp::rfvimptest_all(
            data,
            &feats,
            &cfg.importance,
            seed_for(seed, &format!("{tag}/test")),
            cfg.workers,
        )?;
        let path = cfg
            .out
            .join("importance")
            .join(format!("decisions_{group}_{setting}.csv"));
        write(&path, &vimp::decisions_to_csv(&all))?;
        let mut ok = BTreeMap::new();
        for (k, v) in all {
            match v {
                Ok(d) => {
                    ok.insert(k, d);
                }
                Err(e) => println!("warning: {group} {setting} test of {k}: {e}"),
            }
        }
        Some(ok)
    } else {
        None
    };
    Ok(Block::from_forest(
        group,
        setting,
        fingerprint,
        &metrics,
        oob.as_ref(),
        &importance,
        decisions.as_ref(),
    ))
}
