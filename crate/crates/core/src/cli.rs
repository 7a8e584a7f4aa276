//! `fedcba` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::cba::WireModel;
use crate::config::ExperimentConfig;
use crate::dataset::feature_p_values;
use crate::fedsim::{load_and_preprocess, run_single, run_sweep};
use crate::synth::{self, SynthSpec};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "fedcba",
    version,
    about = "Federated CBA rule learning with duCBA merging and randomized response"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print record and class counts, imbalance ratio and per-attribute
    /// chi-square p-values.
    Inspect(Settings),
    /// Run one federated experiment.
    Run(Settings),
    /// Run the baseline plus every epsilon in the sweep grid.
    Sweep(Settings),
    /// Pretty-print a serialized rule model.
    ShowModel { path: PathBuf },
    /// Write a synthetic dataset with the hypertension CSV layout.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SynthSpec::default().seed)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct Settings {
    /// Experiment config file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` assignment applied after the config file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Alias for `data.path`.
    #[arg(long)]
    data: Option<String>,
    /// Alias for `output.dir`.
    #[arg(long)]
    out: Option<String>,
    /// Alias for `split.seed`.
    #[arg(long)]
    seed: Option<String>,
    /// Alias for `split.clients`.
    #[arg(long)]
    clients: Option<String>,
    /// Alias for `mining.min_support`.
    #[arg(long)]
    min_support: Option<String>,
    /// Alias for `mining.min_confidence`.
    #[arg(long)]
    min_confidence: Option<String>,
    /// Alias for `rr.epsilon`.
    #[arg(long)]
    epsilon: Option<String>,
    /// Alias for `sweep.grid`.
    #[arg(long)]
    sweep_grid: Option<String>,
}

impl Settings {
    fn resolve(&self, require_config: bool) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path).map_err(|e| match e {
                Error::Io { path, source } => Error::config(
                    path.display().to_string(),
                    format!("cannot read config: {source}"),
                ),
                other => other,
            })?,
            None if require_config => {
                return Err(Error::config("--config", "a config file is required"));
            }
            None => ExperimentConfig::default(),
        };
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        let aliases = [
            ("data.path", &self.data),
            ("output.dir", &self.out),
            ("split.seed", &self.seed),
            ("split.clients", &self.clients),
            ("mining.min_support", &self.min_support),
            ("mining.min_confidence", &self.min_confidence),
            ("rr.epsilon", &self.epsilon),
            ("sweep.grid", &self.sweep_grid),
        ];
        for (key, value) in aliases {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn inspect(cfg: &ExperimentConfig) -> Result<String> {
    let pre = load_and_preprocess(cfg)?;
    let stats = pre.dataset.stats();
    let mut out = String::new();
    writeln!(out, "records:          {}", stats.record_count).unwrap();
    writeln!(out, "dropped rows:     {}", pre.dropped_rows).unwrap();
    for (class, count) in &stats.class_counts {
        writeln!(out, "class {class:<10} {count}").unwrap();
    }
    writeln!(out, "imbalance ratio:  {:.4}", stats.imbalance_ratio).unwrap();
    writeln!(out).unwrap();
    writeln!(
        out,
        "{:<16} {:>12} {:>4} {:>12}  selected(alpha={})",
        "attribute", "chi2", "dof", "p-value", cfg.alpha
    )
    .unwrap();
    for t in feature_p_values(&pre.dataset)? {
        writeln!(
            out,
            "{:<16} {:>12.4} {:>4} {:>12.4e}  {}",
            t.attribute,
            t.test.statistic,
            t.test.dof,
            t.test.p_value,
            if t.test.p_value <= cfg.alpha {
                "yes"
            } else {
                "no"
            }
        )
        .unwrap();
    }
    Ok(out)
}

fn dispatch(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Inspect(s) => inspect(&s.resolve(false)?),
        Command::Run(s) => {
            let cfg = s.resolve(true)?;
            let outcome = run_single(&cfg, cfg.rr.map(|r| r.epsilon))?;
            let mut out = outcome.report.render_table(2);
            writeln!(
                out,
                "\nAUC {:.4} (pairwise {:.4}); {} merged rules; artifacts in {}",
                outcome.report.auc,
                outcome.report.auc_pairwise,
                outcome.merged.model.rules.len(),
                cfg.output_dir.display()
            )
            .unwrap();
            Ok(out)
        }
        Command::Sweep(s) => {
            let cfg = s.resolve(true)?;
            let sweep = run_sweep(&cfg)?;
            let mut out = String::new();
            writeln!(
                out,
                "{:>10} {:>9} {:>9} {:>9}",
                "epsilon", "accuracy", "f1(neg)", "f1(pos)"
            )
            .unwrap();
            let mut row = |label: String, r: &crate::metrics::EvaluationReport| {
                writeln!(
                    out,
                    "{label:>10} {:>9.4} {:>9.4} {:>9.4}",
                    r.accuracy, r.per_class[0].f1, r.per_class[1].f1
                )
                .unwrap();
            };
            row("baseline".into(), &sweep.baseline);
            for p in &sweep.per_epsilon {
                row(format!("{}", p.epsilon), &p.report);
            }
            writeln!(
                out,
                "\nwrote {}",
                cfg.output_dir.join("sweep.csv").display()
            )
            .unwrap();
            Ok(out)
        }
        Command::ShowModel { path } => {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            Ok(WireModel::parse(&text)?.render())
        }
        Command::Generate { out, seed } => {
            synth::write_csv(
                &out,
                &SynthSpec {
                    seed,
                    ..SynthSpec::default()
                },
            )?;
            Ok(format!("wrote {}\n", out.display()))
        }
    }
}

/// Runs the CLI and returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) if e.is_usage() => {
            eprintln!("error: {e}");
            eprintln!("usage: fedcba <inspect|run|sweep|show-model|generate> [--config FILE] [--override KEY=VALUE]...");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
