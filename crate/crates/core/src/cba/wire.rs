//! Line-oriented rule-model text format shared by clients and server:
//!
//! ```text
//! conf<TAB>supp<TAB>order<TAB>label<TAB>attr=val,attr=val
//! ...
//! DEFAULT<TAB>label<TAB>confidence<TAB>train_count
//! ```
//!
//! Reals use Rust's shortest round-trip formatting, so parsing a written
//! model reproduces every value bit for bit.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::RuleModel;
use crate::dataset::CategoricalDataset;
use crate::mining::{ClassAssociationRule, Item};
use crate::{Error, Result};

/// Attribute and class vocabularies needed to translate codes to names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSchema {
    pub attributes: Vec<(String, Vec<String>)>,
    pub classes: Vec<String>,
}

impl ModelSchema {
    pub fn of(ds: &CategoricalDataset) -> Self {
        Self {
            attributes: ds
                .schema
                .iter()
                .map(|a| (a.name.clone(), a.domain.clone()))
                .collect(),
            classes: ds.class_domain.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireRule {
    pub confidence: f64,
    pub support: f64,
    pub order: usize,
    pub label: String,
    pub items: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireModel {
    pub rules: Vec<WireRule>,
    pub default_label: String,
    pub default_confidence: f64,
    pub train_count: u64,
}

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::ModelParse {
        line,
        reason: reason.into(),
    }
}

fn check_token(s: &str, what: &str) -> Result<()> {
    if s.is_empty() || s.contains(['\t', '\n', ',', '=']) {
        return Err(parse_err(
            0,
            format!("{what} `{s}` cannot be written in the rule format"),
        ));
    }
    Ok(())
}

impl WireModel {
    pub fn from_model(model: &RuleModel, schema: &ModelSchema, train_count: u64) -> Self {
        let rules = model
            .rules
            .iter()
            .map(|r| WireRule {
                confidence: r.confidence,
                support: r.support,
                order: r.order,
                label: schema.classes[r.label as usize].clone(),
                items: r
                    .antecedent
                    .iter()
                    .map(|it| {
                        let (name, domain) = &schema.attributes[it.attr as usize];
                        (name.clone(), domain[it.value as usize].clone())
                    })
                    .collect(),
            })
            .collect();
        Self {
            rules,
            default_label: schema.classes[model.default_class as usize].clone(),
            default_confidence: model.default_confidence,
            train_count,
        }
    }

    pub fn to_model(&self, schema: &ModelSchema) -> Result<RuleModel> {
        let class = |label: &str, line: usize| {
            schema
                .classes
                .iter()
                .position(|c| c == label)
                .map(|i| i as u16)
                .ok_or_else(|| parse_err(line, format!("unknown class `{label}`")))
        };
        let mut rules = Vec::with_capacity(self.rules.len());
        for (i, r) in self.rules.iter().enumerate() {
            let line = i + 1;
            let mut antecedent = r
                .items
                .iter()
                .map(|(name, value)| {
                    let attr = schema
                        .attributes
                        .iter()
                        .position(|(n, _)| n == name)
                        .ok_or_else(|| parse_err(line, format!("unknown attribute `{name}`")))?;
                    let code = schema.attributes[attr]
                        .1
                        .iter()
                        .position(|v| v == value)
                        .ok_or_else(|| {
                            parse_err(line, format!("unknown value `{name}={value}`"))
                        })?;
                    Ok(Item::new(attr, code as u16))
                })
                .collect::<Result<Vec<_>>>()?;
            antecedent.sort();
            rules.push(ClassAssociationRule {
                antecedent,
                label: class(&r.label, line)?,
                support: r.support,
                confidence: r.confidence,
                order: r.order,
                counts: None,
            });
        }
        Ok(RuleModel {
            rules,
            default_class: class(&self.default_label, self.rules.len() + 1)?,
            default_confidence: self.default_confidence,
        })
    }

    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.rules {
            check_token(&r.label, "label")?;
            let items = r
                .items
                .iter()
                .map(|(a, v)| {
                    check_token(a, "attribute")?;
                    check_token(v, "value")?;
                    Ok(format!("{a}={v}"))
                })
                .collect::<Result<Vec<_>>>()?
                .join(",");
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.confidence, r.support, r.order, r.label, items
            )
            .unwrap();
        }
        check_token(&self.default_label, "label")?;
        writeln!(
            out,
            "DEFAULT\t{}\t{}\t{}",
            self.default_label, self.default_confidence, self.train_count
        )
        .unwrap();
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        let mut footer = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            if raw.trim().is_empty() {
                continue;
            }
            if footer.is_some() {
                return Err(parse_err(line, "content after DEFAULT footer"));
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            let real = |s: &str, what: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(line, format!("bad {what} `{s}`")))
            };
            if fields[0] == "DEFAULT" {
                if fields.len() != 4 {
                    return Err(parse_err(line, "DEFAULT line needs 4 fields"));
                }
                let train_count = fields[3]
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad train count `{}`", fields[3])))?;
                footer = Some((
                    fields[1].to_string(),
                    real(fields[2], "confidence")?,
                    train_count,
                ));
                continue;
            }
            if fields.len() != 5 {
                return Err(parse_err(
                    line,
                    format!("expected 5 tab-separated fields, got {}", fields.len()),
                ));
            }
            let items = fields[4]
                .split(',')
                .map(|kv| {
                    kv.split_once('=')
                        .filter(|(a, v)| !a.is_empty() && !v.is_empty())
                        .map(|(a, v)| (a.to_string(), v.to_string()))
                        .ok_or_else(|| parse_err(line, format!("bad item `{kv}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            rules.push(WireRule {
                confidence: real(fields[0], "confidence")?,
                support: real(fields[1], "support")?,
                order: fields[2]
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad order `{}`", fields[2])))?,
                label: fields[3].to_string(),
                items,
            });
        }
        let (default_label, default_confidence, train_count) =
            footer.ok_or_else(|| parse_err(text.lines().count(), "missing DEFAULT footer"))?;
        Ok(Self {
            rules,
            default_label,
            default_confidence,
            train_count,
        })
    }

    /// Human-readable listing.
    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{} rules, trained on {} records",
            self.rules.len(),
            self.train_count
        )
        .unwrap();
        let width = self.rules.len().to_string().len();
        for (i, r) in self.rules.iter().enumerate() {
            let cond = r
                .items
                .iter()
                .map(|(a, v)| format!("{a} = {v}"))
                .collect::<Vec<_>>()
                .join(" AND ");
            writeln!(
                out,
                "{:>width$}. IF {cond} THEN {}  (conf {:.4}, supp {:.4}, order {})",
                i + 1,
                r.label,
                r.confidence,
                r.support,
                r.order
            )
            .unwrap();
        }
        writeln!(
            out,
            "{:>width$}  ELSE {}  (conf {:.4})",
            "", self.default_label, self.default_confidence
        )
        .unwrap();
        out
    }
}
