use std::collections::BTreeMap;
use std::fmt;

use super::{AttributeKind, CategoricalDataset, Column};
use crate::{Error, Result};

/// Turns a numeric column into half-open bins `[e_i, e_{i+1})`.
pub trait BinningStrategy: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Strictly increasing bin edges for `values`.
    fn edges(&self, attribute: &str, values: &[f64]) -> Result<Vec<f64>>;
}

/// Equal-frequency bins. Inner edges sit at the order statistics
/// `x[floor(i * n / k)]`; duplicate edges from tied values collapse, so a
/// tie-heavy column can end up with fewer than `k` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualFrequency {
    pub bins: usize,
}

impl BinningStrategy for EqualFrequency {
    fn name(&self) -> &'static str {
        "quantile"
    }

    fn edges(&self, attribute: &str, values: &[f64]) -> Result<Vec<f64>> {
        if self.bins < 2 {
            return Err(Error::Discretization {
                attribute: attribute.to_string(),
                reason: format!("quantile count {} < 2", self.bins),
            });
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut edges = vec![f64::NEG_INFINITY];
        if let Some(&min) = sorted.first() {
            for i in 1..self.bins {
                let cut = sorted[i * n / self.bins];
                if cut > min && cut > *edges.last().unwrap() {
                    edges.push(cut);
                }
            }
        }
        edges.push(f64::INFINITY);
        Ok(edges)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitCuts {
    pub edges: Vec<f64>,
}

impl BinningStrategy for ExplicitCuts {
    fn name(&self) -> &'static str {
        "cuts"
    }

    fn edges(&self, attribute: &str, _values: &[f64]) -> Result<Vec<f64>> {
        let bad = |reason: &str| Error::Discretization {
            attribute: attribute.to_string(),
            reason: reason.to_string(),
        };
        if self.edges.len() < 2 {
            return Err(bad("need at least two edges"));
        }
        if self.edges.iter().any(|e| e.is_nan()) {
            return Err(bad("NaN edge"));
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("edges must be strictly increasing"));
        }
        Ok(self.edges.clone())
    }
}

type Factory = fn(&str) -> std::result::Result<Box<dyn BinningStrategy>, String>;

/// Binning strategies addressable by name from configuration, e.g.
/// `quantile:4` or `cuts:-inf,120,140,inf`.
pub struct BinningRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

impl Default for BinningRegistry {
    fn default() -> Self {
        let mut r = Self {
            factories: BTreeMap::new(),
        };
        r.register("quantile", |params| {
            let bins = params
                .trim()
                .parse()
                .map_err(|_| format!("bad quantile count `{params}`"))?;
            Ok(Box::new(EqualFrequency { bins }))
        });
        r.register("cuts", |params| {
            let edges = params
                .split(',')
                .map(|s| parse_edge(s.trim()))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok(Box::new(ExplicitCuts { edges }))
        });
        r
    }
}

fn parse_edge(s: &str) -> std::result::Result<f64, String> {
    match s {
        "-inf" => Ok(f64::NEG_INFINITY),
        "inf" | "+inf" => Ok(f64::INFINITY),
        _ => s.parse().map_err(|_| format!("bad edge `{s}`")),
    }
}

impl BinningRegistry {
    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, attribute: &str, plan: &BinPlan) -> Result<Box<dyn BinningStrategy>> {
        let factory =
            self.factories
                .get(plan.strategy.as_str())
                .ok_or_else(|| Error::UnknownStrategy {
                    kind: "binning",
                    name: plan.strategy.clone(),
                    available: self.names().join(", "),
                })?;
        factory(&plan.params).map_err(|reason| Error::Discretization {
            attribute: attribute.to_string(),
            reason,
        })
    }
}

/// A strategy name plus its parameter string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinPlan {
    pub strategy: String,
    pub params: String,
}

impl BinPlan {
    pub fn quantile(bins: usize) -> Self {
        Self {
            strategy: "quantile".into(),
            params: bins.to_string(),
        }
    }

    pub fn cuts(edges: &[f64]) -> Self {
        Self {
            strategy: "cuts".into(),
            params: edges
                .iter()
                .map(|e| format!("{e}"))
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

impl std::str::FromStr for BinPlan {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (strategy, params) = s
            .split_once(':')
            .ok_or_else(|| format!("expected `strategy:params`, got `{s}`"))?;
        Ok(Self {
            strategy: strategy.trim().to_string(),
            params: params.trim().to_string(),
        })
    }
}

impl fmt::Display for BinPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.strategy, self.params)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscretizationPlan {
    pub default: Option<BinPlan>,
    pub per_attribute: BTreeMap<String, BinPlan>,
}

impl DiscretizationPlan {
    pub fn uniform(plan: BinPlan) -> Self {
        Self {
            default: Some(plan),
            per_attribute: BTreeMap::new(),
        }
    }

    pub fn plan_for(&self, attribute: &str) -> Option<&BinPlan> {
        self.per_attribute.get(attribute).or(self.default.as_ref())
    }
}

fn bin_of(edges: &[f64], v: f64) -> Option<u16> {
    if v < edges[0] || v >= *edges.last().unwrap() {
        return None;
    }
    // number of inner edges <= v
    let idx = edges[1..].partition_point(|&e| e <= v);
    Some(idx as u16)
}

/// Replaces every numeric column with bin codes labelled `b0, b1, ...`.
pub fn discretize(
    ds: &CategoricalDataset,
    plan: &DiscretizationPlan,
    registry: &BinningRegistry,
) -> Result<CategoricalDataset> {
    let mut out = ds.clone();
    for (a, attr) in ds.schema.iter().enumerate() {
        let Column::Numeric(values) = &ds.columns[a] else {
            continue;
        };
        let bin_plan = plan
            .plan_for(&attr.name)
            .ok_or_else(|| Error::Discretization {
                attribute: attr.name.clone(),
                reason: "no discretization plan entry".into(),
            })?;
        let strategy = registry.build(&attr.name, bin_plan)?;
        let edges = strategy.edges(&attr.name, values)?;
        let codes = values
            .iter()
            .enumerate()
            .map(|(row, &v)| {
                bin_of(&edges, v).ok_or(Error::OutsideBins {
                    attribute: attr.name.clone(),
                    row,
                    value: v,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let out_attr = &mut out.schema[a];
        out_attr.kind = AttributeKind::Categorical;
        out_attr.domain = (0..edges.len() - 1).map(|i| format!("b{i}")).collect();
        out_attr.edges = Some(edges);
        out.columns[a] = Column::Categorical(codes);
    }
    out.validate()?;
    Ok(out)
}
