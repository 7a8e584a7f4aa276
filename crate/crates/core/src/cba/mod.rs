//! CBA rule-list classifiers: ranking, database-coverage pruning and
//! first-match prediction.

mod wire;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::dataset::CategoricalDataset;
use crate::mining::ClassAssociationRule;
use crate::Result;

pub use wire::{ModelSchema, WireModel, WireRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleModel {
    pub rules: Vec<ClassAssociationRule>,
    pub default_class: u16,
    /// Share of the default class among records no rule covers.
    pub default_confidence: f64,
}

/// What a client ships to the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientModel {
    pub model: RuleModel,
    pub train_count: u64,
    pub client_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: u16,
    /// Confidence of the firing rule, or the default confidence.
    pub score: f64,
    /// Index of the firing rule; `None` on the default path.
    pub rule: Option<usize>,
}

/// Precedence: higher confidence, then higher support, then earlier order.
pub fn rule_precedence(a: &ClassAssociationRule, b: &ClassAssociationRule) -> Ordering {
    b.confidence
        .total_cmp(&a.confidence)
        .then(b.support.total_cmp(&a.support))
        .then(a.order.cmp(&b.order))
}

pub fn rank_rules(mut rules: Vec<ClassAssociationRule>) -> Vec<ClassAssociationRule> {
    rules.sort_by(rule_precedence);
    rules
}

/// Majority class of `counts`; ties go to the class with more records in
/// `global`, then to the earlier class.
fn majority(counts: &[u64], global: &[u64]) -> u16 {
    (0..counts.len())
        .max_by(|&a, &b| {
            counts[a]
                .cmp(&counts[b])
                .then(global[a].cmp(&global[b]))
                .then(b.cmp(&a))
        })
        .unwrap_or(0) as u16
}

/// Builds a classifier from rules mined on `train`.
///
/// With `prune`, walks the ranked rules and keeps a rule only if it
/// correctly classifies at least one record no earlier kept rule covered;
/// every record it matches then counts as covered. The default class is the
/// majority among records left uncovered (global majority when none are).
pub fn build_classifier(
    rules: Vec<ClassAssociationRule>,
    train: &CategoricalDataset,
    prune: bool,
) -> Result<RuleModel> {
    let ranked = rank_rules(rules);
    let rows = train.rows()?;
    let classes = train.class_domain.len().max(1);

    let mut global = vec![0u64; classes];
    for &l in &train.labels {
        global[l as usize] += 1;
    }

    let mut covered = vec![false; rows.len()];
    let rules = if prune {
        let mut kept = Vec::new();
        let mut remaining = rows.len();
        for rule in ranked {
            if remaining == 0 {
                break;
            }
            let hits: Vec<usize> = (0..rows.len())
                .filter(|&r| !covered[r] && rule.matches(&rows[r]))
                .collect();
            let correct = hits.iter().any(|&r| train.labels[r] == rule.label);
            if correct {
                for &r in &hits {
                    covered[r] = true;
                }
                remaining -= hits.len();
                kept.push(rule);
            }
        }
        kept
    } else {
        for (r, row) in rows.iter().enumerate() {
            covered[r] = ranked.iter().any(|rule| rule.matches(row));
        }
        ranked
    };

    let mut uncovered = vec![0u64; classes];
    for (r, &l) in train.labels.iter().enumerate() {
        if !covered[r] {
            uncovered[l as usize] += 1;
        }
    }
    let left: u64 = uncovered.iter().sum();
    let (default_class, default_confidence) = if left > 0 {
        let c = majority(&uncovered, &global);
        (c, uncovered[c as usize] as f64 / left as f64)
    } else {
        let c = majority(&global, &global);
        let n: u64 = global.iter().sum();
        let conf = if n > 0 {
            global[c as usize] as f64 / n as f64
        } else {
            0.0
        };
        (c, conf)
    };

    Ok(RuleModel {
        rules,
        default_class,
        default_confidence,
    })
}

impl RuleModel {
    /// A model with no rules that always predicts `default_class`.
    pub fn default_only(default_class: u16, default_confidence: f64) -> Self {
        Self {
            rules: Vec::new(),
            default_class,
            default_confidence,
        }
    }

    /// First matching rule wins; values absent from every rule simply match
    /// nothing.
    pub fn classify(&self, record: &[u16]) -> Prediction {
        match self.rules.iter().position(|r| r.matches(record)) {
            Some(i) => Prediction {
                label: self.rules[i].label,
                score: self.rules[i].confidence,
                rule: Some(i),
            },
            None => Prediction {
                label: self.default_class,
                score: self.default_confidence,
                rule: None,
            },
        }
    }

    /// Score for `positive`: the confidence behind the prediction when it
    /// is `positive`, its complement otherwise.
    pub fn positive_score(&self, record: &[u16], positive: u16) -> (u16, f64) {
        let p = self.classify(record);
        let score = if p.label == positive {
            p.score
        } else {
            1.0 - p.score
        };
        (p.label, score)
    }
}

pub fn classify(model: &RuleModel, record: &[u16]) -> Prediction {
    model.classify(record)
}
