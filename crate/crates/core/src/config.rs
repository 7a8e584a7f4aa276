//! Experiment configuration.
//!
//! Plain `key = value` lines; `#` starts a comment. Keys are dot-separated
//! field paths and every key has a default, so an empty file is valid once
//! `data.path` is supplied somewhere:
//!
//! ```text
//! data.path                 = hypertension.csv
//! data.target               = target
//! data.positive_class       = 1
//! data.positive_name        = Hypertension
//! data.negative_name        = No Hypertension
//! data.derive_thalach_ratio = true
//! output.dir                = out
//! split.seed                = 42
//! split.train_fraction      = 0.8
//! split.clients             = 3
//! select.alpha              = 0.05
//! discretize.default        = quantile:4
//! discretize.trestbps       = cuts:-inf,120,140,inf
//! mining.min_support        = 0.02
//! mining.min_confidence     = 0.5
//! mining.max_antecedent_len = unbounded
//! cba.prune                 = true
//! merge.strategy            = ducba
//! rr.epsilon                = none
//! rr.perturb_label          = false
//! sweep.grid                = 0.1,0.5,1,2,3,5
//! sweep.reseed_split        = false
//! ```
//!
//! Overrides given on the command line go through the same setter, so
//! `--override split.seed=7` and editing the file are indistinguishable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dataset::{BinPlan, DiscretizationPlan, SplitSpec};
use crate::mining::{Fraction, MiningParams};
use crate::privacy::RRConfig;
use crate::{Error, Result};

pub const DEFAULT_GRID: [f64; 6] = [0.1, 0.5, 1.0, 2.0, 3.0, 5.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data_path: Option<PathBuf>,
    pub target: String,
    pub positive_class: String,
    pub positive_name: String,
    pub negative_name: String,
    pub derive_thalach_ratio: bool,
    pub output_dir: PathBuf,
    pub split: SplitSpec,
    pub alpha: f64,
    pub discretization: DiscretizationPlan,
    pub mining: MiningParams,
    pub prune: bool,
    pub merge_strategy: String,
    pub rr: Option<RRConfig>,
    pub perturb_label: bool,
    pub epsilon_grid: Vec<f64>,
    pub reseed_split: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data_path: None,
            target: "target".into(),
            positive_class: "1".into(),
            positive_name: "Hypertension".into(),
            negative_name: "No Hypertension".into(),
            derive_thalach_ratio: true,
            output_dir: PathBuf::from("out"),
            split: SplitSpec {
                train_fraction: 0.8,
                client_count: 3,
                seed: 42,
            },
            alpha: 0.05,
            discretization: DiscretizationPlan::uniform(BinPlan::quantile(4)),
            mining: MiningParams {
                min_support: Fraction::new(2, 100),
                min_confidence: Fraction::new(5, 10),
                max_antecedent_len: None,
            },
            prune: true,
            merge_strategy: "ducba".into(),
            rr: None,
            perturb_label: false,
            epsilon_grid: DEFAULT_GRID.to_vec(),
            reseed_split: false,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{v}`")))
}

fn parse_grid(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|s| parse_num::<f64>(key, s.trim()))
        .collect()
}

fn fmt_grid(grid: &[f64]) -> String {
    grid.iter()
        .map(|e| format!("{e}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", i + 1), "expected `key = value`")
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Applies `key=value`.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "override must be `key=value`"))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data.path" => self.data_path = Some(PathBuf::from(value)),
            "data.target" => self.target = value.to_string(),
            "data.positive_class" => self.positive_class = value.to_string(),
            "data.positive_name" => self.positive_name = value.to_string(),
            "data.negative_name" => self.negative_name = value.to_string(),
            "data.derive_thalach_ratio" => self.derive_thalach_ratio = parse_bool(key, value)?,
            "output.dir" => self.output_dir = PathBuf::from(value),
            "split.seed" => self.split.seed = parse_num(key, value)?,
            "split.train_fraction" => self.split.train_fraction = parse_num(key, value)?,
            "split.clients" => self.split.client_count = parse_num(key, value)?,
            "select.alpha" => self.alpha = parse_num(key, value)?,
            "discretize.default" => {
                self.discretization.default =
                    Some(value.parse().map_err(|e| Error::config(key, e))?)
            }
            "mining.min_support" => self.mining.min_support = parse_num(key, value)?,
            "mining.min_confidence" => self.mining.min_confidence = parse_num(key, value)?,
            "mining.max_antecedent_len" => {
                self.mining.max_antecedent_len = match value {
                    "unbounded" | "none" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "cba.prune" => self.prune = parse_bool(key, value)?,
            "merge.strategy" => self.merge_strategy = value.to_string(),
            "rr.epsilon" => {
                self.rr = match value {
                    "none" | "off" => None,
                    v => Some(RRConfig {
                        epsilon: parse_num(key, v)?,
                        perturb_label: self.perturb_label,
                    }),
                }
            }
            "rr.perturb_label" => {
                self.perturb_label = parse_bool(key, value)?;
                if let Some(rr) = &mut self.rr {
                    rr.perturb_label = self.perturb_label;
                }
            }
            "sweep.grid" => self.epsilon_grid = parse_grid(key, value)?,
            "sweep.reseed_split" => self.reseed_split = parse_bool(key, value)?,
            _ => {
                if let Some(attr) = key.strip_prefix("discretize.") {
                    let plan: BinPlan = value.parse().map_err(|e| Error::config(key, e))?;
                    self.discretization
                        .per_attribute
                        .insert(attr.to_string(), plan);
                } else {
                    return Err(Error::config(key, "unknown key"));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        self.mining.validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(
                "select.alpha",
                format!("{} not in (0, 1)", self.alpha),
            ));
        }
        if let Some(rr) = &self.rr {
            rr.validate()?;
        }
        if self
            .epsilon_grid
            .iter()
            .any(|&e| e.is_nan() || e <= 0.0 || e.is_infinite())
        {
            return Err(Error::config(
                "sweep.grid",
                "every epsilon must be positive and finite",
            ));
        }
        if self.epsilon_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "sweep.grid",
                "grid must be strictly increasing",
            ));
        }
        Ok(())
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data_path
            .as_deref()
            .ok_or_else(|| Error::config("data.path", "no dataset configured"))
    }

    /// Canonical text form listing every key.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv(
            "data.path",
            self.data_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        kv("data.target", self.target.clone());
        kv("data.positive_class", self.positive_class.clone());
        kv("data.positive_name", self.positive_name.clone());
        kv("data.negative_name", self.negative_name.clone());
        kv(
            "data.derive_thalach_ratio",
            self.derive_thalach_ratio.to_string(),
        );
        kv("output.dir", self.output_dir.display().to_string());
        kv("split.seed", self.split.seed.to_string());
        kv(
            "split.train_fraction",
            format!("{}", self.split.train_fraction),
        );
        kv("split.clients", self.split.client_count.to_string());
        kv("select.alpha", format!("{}", self.alpha));
        if let Some(d) = &self.discretization.default {
            kv("discretize.default", d.to_string());
        }
        for (attr, plan) in &self.discretization.per_attribute {
            kv(&format!("discretize.{attr}"), plan.to_string());
        }
        kv(
            "mining.min_support",
            format!(
                "{}/{}",
                self.mining.min_support.num, self.mining.min_support.den
            ),
        );
        kv(
            "mining.min_confidence",
            format!(
                "{}/{}",
                self.mining.min_confidence.num, self.mining.min_confidence.den
            ),
        );
        kv(
            "mining.max_antecedent_len",
            self.mining
                .max_antecedent_len
                .map_or("unbounded".into(), |n| n.to_string()),
        );
        kv("cba.prune", self.prune.to_string());
        kv("merge.strategy", self.merge_strategy.clone());
        kv(
            "rr.epsilon",
            self.rr.map_or("none".into(), |r| format!("{}", r.epsilon)),
        );
        kv("rr.perturb_label", self.perturb_label.to_string());
        kv("sweep.grid", fmt_grid(&self.epsilon_grid));
        kv("sweep.reseed_split", self.reseed_split.to_string());
        out
    }
}
