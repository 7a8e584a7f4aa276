//! End-to-end federated experiments.
//!
//! load -> drop incomplete rows -> derive `thalach_ratio` -> discretize ->
//! split -> chi-square selection on the training split -> partition ->
//! optional per-client randomized response -> local CBA -> merge ->
//! evaluation on the untouched test split.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::cba::{build_classifier, ClientModel, ModelSchema, RuleModel, WireModel};
use crate::config::ExperimentConfig;
use crate::dataset::{
    self, discretize, hypertension_schema, load_csv, AttributeSchema, BinningRegistry,
    CategoricalDataset, DatasetStats, FeatureTest,
};
use crate::ducba::{AggregatorRegistry, MergedModel};
use crate::metrics::EvaluationReport;
use crate::mining::mine_cars;
use crate::privacy::{perturb_dataset, RRConfig};
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Cleaned, derived and discretized dataset.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub dataset: CategoricalDataset,
    pub dropped_rows: usize,
}

/// Column layout for `path`: the hypertension layout when the header
/// matches it, else every non-target column as categorical.
fn schema_for(path: &Path, target: &str) -> Result<Vec<AttributeSchema>> {
    let known = hypertension_schema();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::config(path.display().to_string(), format!("{other:?}")),
        })?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut names: Vec<&str> = header
        .iter()
        .map(String::as_str)
        .filter(|h| *h != target)
        .collect();
    let mut known_names: Vec<&str> = known.iter().map(|a| a.name.as_str()).collect();
    names.sort_unstable();
    known_names.sort_unstable();
    if names == known_names {
        Ok(known)
    } else {
        Ok(header
            .iter()
            .filter(|h| *h != target)
            .map(AttributeSchema::categorical)
            .collect())
    }
}

pub fn load_and_preprocess(cfg: &ExperimentConfig) -> Result<Preprocessed> {
    let path = cfg.data_path()?;
    let schema = schema_for(path, &cfg.target)?;
    let loaded = load_csv(path, &schema, &cfg.target)?;
    let mut ds = loaded.dataset;
    if cfg.derive_thalach_ratio
        && ds.attribute_index("thalach").is_some()
        && ds.attribute_index("age").is_some()
    {
        ds = ds.derive_thalach_ratio()?;
    }
    let ds = discretize(&ds, &cfg.discretization, &BinningRegistry::default())?;
    Ok(Preprocessed {
        dataset: ds,
        dropped_rows: loaded.dropped_rows,
    })
}

/// Client partitions and test split sharing one selected schema.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub parts: Vec<CategoricalDataset>,
    pub test: CategoricalDataset,
    pub schema: ModelSchema,
    pub positive: u16,
    pub feature_tests: Vec<FeatureTest>,
    pub dropped_features: Vec<String>,
    pub dropped_rows: usize,
    pub stats: DatasetStats,
}

pub fn prepare(
    cfg: &ExperimentConfig,
    pre: &Preprocessed,
    split_stream: Stream,
) -> Result<Prepared> {
    let ds = &pre.dataset;
    if ds.class_domain.len() != 2 {
        return Err(Error::config(
            "data.target",
            format!(
                "expected a binary target, found classes {:?}",
                ds.class_domain
            ),
        ));
    }
    let positive = ds
        .class_domain
        .iter()
        .position(|c| *c == cfg.positive_class)
        .ok_or_else(|| {
            Error::config(
                "data.positive_class",
                format!("`{}` not among {:?}", cfg.positive_class, ds.class_domain),
            )
        })? as u16;

    let partition = dataset::split::split_with_stream(ds, &cfg.split, split_stream)?;
    let train = CategoricalDataset::concat(&partition.parts)?;
    let selection = dataset::select_features(&train, cfg.alpha)?;
    let keep: Vec<String> = selection
        .dataset
        .schema
        .iter()
        .map(|a| a.name.clone())
        .collect();
    if keep.is_empty() {
        warn!("feature selection removed every attribute; clients will only learn defaults");
    }
    let parts: Vec<CategoricalDataset> = partition.parts.iter().map(|p| p.project(&keep)).collect();
    let test = partition.test.project(&keep);
    Ok(Prepared {
        schema: ModelSchema::of(&test),
        parts,
        test,
        positive,
        feature_tests: selection.tests,
        dropped_features: selection.dropped,
        dropped_rows: pre.dropped_rows,
        stats: ds.stats(),
    })
}

/// Mines, builds and packages one client's model.
pub fn train_client(
    id: usize,
    data: &CategoricalDataset,
    cfg: &ExperimentConfig,
) -> Result<ClientModel> {
    let rules = mine_cars(data, &cfg.mining)?;
    if rules.is_empty() {
        warn!("client {id} produced no rules; sending a default-only model");
    }
    let model = build_classifier(rules, data, cfg.prune)?;
    Ok(ClientModel {
        model,
        train_count: data.len() as u64,
        client_id: id,
    })
}

/// Local models for every client, in client order. With `epsilon`, each
/// client first perturbs its own partition using its own random stream.
pub fn train_clients(
    prepared: &Prepared,
    cfg: &ExperimentConfig,
    epsilon: Option<f64>,
) -> Result<Vec<ClientModel>> {
    let rr = epsilon
        .map(|e| {
            let rr = RRConfig {
                epsilon: e,
                perturb_label: cfg.perturb_label,
            };
            rr.validate().map(|_| rr)
        })
        .transpose()?;
    prepared
        .parts
        .par_iter()
        .enumerate()
        .map(|(id, part)| {
            let local = match &rr {
                Some(rr) => {
                    let mut stream = rng::stream(
                        cfg.split.seed,
                        Stream::Perturb {
                            epsilon: rr.epsilon,
                            client: id,
                        },
                    );
                    perturb_dataset(part, rr, &mut stream)?
                }
                None => part.clone(),
            };
            train_client(id, &local, cfg)
        })
        .collect()
}

pub fn evaluate(
    model: &RuleModel,
    test: &CategoricalDataset,
    positive: u16,
    cfg: &ExperimentConfig,
) -> Result<EvaluationReport> {
    let rows = test.rows()?;
    let scored: Vec<(bool, bool, f64)> = rows
        .iter()
        .zip(&test.labels)
        .map(|(row, &truth)| {
            let (label, score) = model.positive_score(row, positive);
            (truth == positive, label == positive, score)
        })
        .collect();
    EvaluationReport::evaluate(&scored, &cfg.negative_name, &cfg.positive_name)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub epsilon: Option<f64>,
    pub clients: Vec<ClientModel>,
    pub merged: MergedModel,
    pub report: EvaluationReport,
}

pub fn run_prepared(
    prepared: &Prepared,
    cfg: &ExperimentConfig,
    epsilon: Option<f64>,
) -> Result<RunOutcome> {
    let registry = AggregatorRegistry::default();
    let aggregator = registry.get(&cfg.merge_strategy)?;
    let clients = train_clients(prepared, cfg, epsilon)?;
    let merged = aggregator.merge(&clients)?;
    let report = evaluate(&merged.model, &prepared.test, prepared.positive, cfg)?;
    info!(
        "epsilon {}: {} merged rules, accuracy {:.4}",
        epsilon.map_or("none".into(), |e| e.to_string()),
        merged.model.rules.len(),
        report.accuracy
    );
    Ok(RunOutcome {
        epsilon,
        clients,
        merged,
        report,
    })
}

fn run_dir_name(epsilon: Option<f64>) -> String {
    match epsilon {
        Some(e) => format!("run-eps-{e}"),
        None => "run-baseline".into(),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct PreprocessingSummary<'a> {
    stats: &'a DatasetStats,
    dropped_rows: usize,
    dropped_features: &'a [String],
    feature_tests: &'a [FeatureTest],
    test_size: usize,
    client_sizes: Vec<usize>,
}

/// Writes client models, merged model, provenance, reports and ROC points
/// into `dir`.
pub fn persist_run(
    dir: &Path,
    prepared: &Prepared,
    cfg: &ExperimentConfig,
    outcome: &RunOutcome,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for c in &outcome.clients {
        let wire = WireModel::from_model(&c.model, &prepared.schema, c.train_count);
        write(
            &dir.join(format!("client-{}.rules", c.client_id)),
            wire.to_text()?,
        )?;
    }
    let merged = WireModel::from_model(
        &outcome.merged.model,
        &prepared.schema,
        outcome.merged.total_train_count,
    );
    write(&dir.join("merged.rules"), merged.to_text()?)?;
    write(
        &dir.join("merged.provenance"),
        outcome.merged.provenance_text(),
    )?;
    write(
        &dir.join("report.json"),
        serde_json::to_string_pretty(&outcome.report)?,
    )?;
    write(&dir.join("report.csv"), outcome.report.to_csv())?;
    write(&dir.join("roc.csv"), outcome.report.roc_csv())?;
    write(
        &dir.join("schema.json"),
        serde_json::to_string_pretty(&prepared.schema)?,
    )?;
    write(&dir.join("config.txt"), cfg.to_text())?;
    let summary = PreprocessingSummary {
        stats: &prepared.stats,
        dropped_rows: prepared.dropped_rows,
        dropped_features: &prepared.dropped_features,
        feature_tests: &prepared.feature_tests,
        test_size: prepared.test.len(),
        client_sizes: prepared.parts.iter().map(|p| p.len()).collect(),
    };
    write(
        &dir.join("preprocessing.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(())
}

/// One experiment; `epsilon` of `None` trains on clean client data.
/// Artifacts land in `<output.dir>/run-baseline` or `<output.dir>/run-eps-<ε>`.
pub fn run_single(cfg: &ExperimentConfig, epsilon: Option<f64>) -> Result<RunOutcome> {
    cfg.validate()?;
    let pre = load_and_preprocess(cfg)?;
    let stream = match epsilon {
        Some(e) if cfg.reseed_split => Stream::SplitFor { epsilon: e },
        _ => Stream::Split,
    };
    let prepared = prepare(cfg, &pre, stream)?;
    let outcome = run_prepared(&prepared, cfg, epsilon)?;
    persist_run(
        &cfg.output_dir.join(run_dir_name(epsilon)),
        &prepared,
        cfg,
        &outcome,
    )?;
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub baseline: EvaluationReport,
    pub per_epsilon: Vec<SweepPoint>,
}

impl SweepResult {
    /// Long format `epsilon,metric,class,value` over the grid runs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,metric,class,value\n");
        for p in &self.per_epsilon {
            for (metric, class, value) in p.report.flat_rows() {
                out.push_str(&format!("{},{metric},{class},{value}\n", p.epsilon));
            }
        }
        out
    }

    pub fn accuracies(&self) -> Vec<(f64, f64)> {
        self.per_epsilon
            .iter()
            .map(|p| (p.epsilon, p.report.accuracy))
            .collect()
    }
}

/// Baseline plus one run per grid ε. Unless `sweep.reseed_split` is set,
/// every run shares the same partition and test split.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    if cfg.epsilon_grid.is_empty() {
        return Err(Error::config("sweep.grid", "empty grid"));
    }
    let pre = load_and_preprocess(cfg)?;
    let shared = prepare(cfg, &pre, Stream::Split)?;

    let mut jobs: Vec<Option<f64>> = vec![None];
    jobs.extend(cfg.epsilon_grid.iter().map(|&e| Some(e)));
    let results: Vec<(Option<Prepared>, RunOutcome)> = jobs
        .par_iter()
        .map(|&eps| match eps {
            Some(e) if cfg.reseed_split => {
                let p = prepare(cfg, &pre, Stream::SplitFor { epsilon: e })?;
                let o = run_prepared(&p, cfg, eps)?;
                Ok((Some(p), o))
            }
            _ => Ok((None, run_prepared(&shared, cfg, eps)?)),
        })
        .collect::<Result<_>>()?;

    let root: PathBuf = cfg.output_dir.clone();
    for (own, outcome) in &results {
        let prepared = own.as_ref().unwrap_or(&shared);
        persist_run(
            &root.join(run_dir_name(outcome.epsilon)),
            prepared,
            cfg,
            outcome,
        )?;
    }

    let mut iter = results.into_iter();
    let baseline = iter.next().expect("baseline run").1.report;
    let per_epsilon = iter
        .map(|(_, o)| SweepPoint {
            epsilon: o.epsilon.expect("grid run"),
            report: o.report,
        })
        .collect();
    let sweep = SweepResult {
        baseline,
        per_epsilon,
    };
    write(&root.join("sweep.csv"), sweep.to_csv())?;
    write(
        &root.join("sweep.json"),
        serde_json::to_string_pretty(&sweep)?,
    )?;
    Ok(sweep)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}
