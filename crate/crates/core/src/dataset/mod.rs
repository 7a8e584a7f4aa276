//! Tabular data: ingestion, cleaning, discretization, feature selection and
//! partitioning.

mod chisq;
mod discretize;
mod load;
mod select;
pub(crate) mod split;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use chisq::{chi_square_p_value, chi_square_statistic, contingency_table, ChiSquare};
pub use discretize::{
    discretize, BinPlan, BinningRegistry, BinningStrategy, DiscretizationPlan, EqualFrequency,
    ExplicitCuts,
};
pub use load::{hypertension_schema, load_csv, Loaded, HYPERTENSION_TARGET};
pub use select::{feature_p_values, select_features, FeatureTest, Selection};
pub use split::{split_and_partition, Partition, SplitSpec};

/// Name of the derived heart-rate reserve column.
pub const THALACH_RATIO: &str = "thalach_ratio";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    /// Category labels; the code of a value is its index here.
    pub domain: Vec<String>,
    /// Bin boundaries `[e0, e1, ..., em]` for discretized numeric columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<f64>>,
}

impl AttributeSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Numeric,
            domain: Vec::new(),
            edges: None,
        }
    }

    pub fn categorical(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Categorical,
            domain: Vec::new(),
            edges: None,
        }
    }

    pub fn with_domain<S: Into<String>>(mut self, domain: impl IntoIterator<Item = S>) -> Self {
        self.domain = domain.into_iter().map(Into::into).collect();
        self
    }

    pub fn code_of(&self, label: &str) -> Option<u16> {
        self.domain
            .iter()
            .position(|d| d == label)
            .map(|i| i as u16)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<u16>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(v) => Column::Categorical(rows.iter().map(|&r| v[r]).collect()),
        }
    }
}

/// A column-major table of attribute values plus one class label per record.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalDataset {
    pub schema: Vec<AttributeSchema>,
    pub columns: Vec<Column>,
    pub labels: Vec<u16>,
    pub class_domain: Vec<String>,
    pub target_name: String,
}

impl CategoricalDataset {
    /// Builds a fully categorical dataset from row-major codes.
    pub fn from_rows(
        schema: Vec<AttributeSchema>,
        rows: &[Vec<u16>],
        labels: Vec<u16>,
        class_domain: Vec<String>,
    ) -> Result<Self> {
        let columns = (0..schema.len())
            .map(|a| Column::Categorical(rows.iter().map(|r| r[a]).collect()))
            .collect();
        let ds = Self {
            schema,
            columns,
            labels,
            class_domain,
            target_name: "class".to_string(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|a| a.name == name)
    }

    pub fn is_categorical(&self) -> bool {
        self.columns
            .iter()
            .all(|c| matches!(c, Column::Categorical(_)))
    }

    /// Checks the structural invariants: unique names, rectangular columns,
    /// every code inside its domain.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for a in &self.schema {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::config(
                    "schema",
                    format!("duplicate attribute {}", a.name),
                ));
            }
        }
        if self.schema.len() != self.columns.len() {
            return Err(Error::config("schema", "column count differs from schema"));
        }
        for (attr, col) in self.schema.iter().zip(&self.columns) {
            if col.len() != self.labels.len() {
                return Err(Error::config(
                    &attr.name,
                    "column length differs from label count",
                ));
            }
            if let Column::Categorical(codes) = col {
                if attr.domain.is_empty() && !codes.is_empty() {
                    return Err(Error::config(&attr.name, "empty domain"));
                }
                if let Some(&bad) = codes.iter().find(|&&c| c as usize >= attr.domain.len()) {
                    return Err(Error::config(
                        &attr.name,
                        format!("code {bad} outside domain"),
                    ));
                }
            }
        }
        if let Some(&bad) = self
            .labels
            .iter()
            .find(|&&c| c as usize >= self.class_domain.len())
        {
            return Err(Error::config(
                &self.target_name,
                format!("class code {bad} outside domain"),
            ));
        }
        Ok(())
    }

    pub fn categorical_column(&self, attr: usize) -> Result<&[u16]> {
        match &self.columns[attr] {
            Column::Categorical(v) => Ok(v),
            Column::Numeric(_) => Err(Error::NotCategorical(self.schema[attr].name.clone())),
        }
    }

    pub fn numeric_column(&self, attr: usize) -> Option<&[f64]> {
        match &self.columns[attr] {
            Column::Numeric(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    /// Row-major view of a fully categorical dataset.
    pub fn rows(&self) -> Result<Vec<Vec<u16>>> {
        let cols = (0..self.schema.len())
            .map(|a| self.categorical_column(a))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..self.len())
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            class_domain: self.class_domain.clone(),
            target_name: self.target_name.clone(),
        }
    }

    /// Keeps only the named attributes, in their current order.
    pub fn project(&self, keep: &[String]) -> Self {
        let idx: Vec<usize> = self
            .schema
            .iter()
            .enumerate()
            .filter(|(_, a)| keep.contains(&a.name))
            .map(|(i, _)| i)
            .collect();
        Self {
            schema: idx.iter().map(|&i| self.schema[i].clone()).collect(),
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
            labels: self.labels.clone(),
            class_domain: self.class_domain.clone(),
            target_name: self.target_name.clone(),
        }
    }

    /// Concatenates datasets sharing one schema.
    pub fn concat(parts: &[CategoricalDataset]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyDataset)?;
        let mut out = first.clone();
        for part in &parts[1..] {
            if part.schema != first.schema || part.class_domain != first.class_domain {
                return Err(Error::config("concat", "schemas differ"));
            }
            for (dst, src) in out.columns.iter_mut().zip(&part.columns) {
                match (dst, src) {
                    (Column::Numeric(d), Column::Numeric(s)) => d.extend_from_slice(s),
                    (Column::Categorical(d), Column::Categorical(s)) => d.extend_from_slice(s),
                    _ => return Err(Error::config("concat", "column kinds differ")),
                }
            }
            out.labels.extend_from_slice(&part.labels);
        }
        Ok(out)
    }

    pub fn stats(&self) -> DatasetStats {
        let mut class_counts = BTreeMap::new();
        for label in &self.class_domain {
            class_counts.insert(label.clone(), 0usize);
        }
        for &l in &self.labels {
            *class_counts
                .get_mut(&self.class_domain[l as usize])
                .expect("label in domain") += 1;
        }
        let present: Vec<usize> = class_counts.values().copied().filter(|&c| c > 0).collect();
        let imbalance_ratio = match (present.iter().max(), present.iter().min()) {
            (Some(&max), Some(&min)) => max as f64 / min as f64,
            _ => 1.0,
        };
        DatasetStats {
            record_count: self.len(),
            class_counts,
            imbalance_ratio,
        }
    }

    /// Adds `thalach_ratio = thalach / (220 - age)` in place of `thalach`.
    pub fn derive_thalach_ratio(&self) -> Result<Self> {
        let thalach_idx = self
            .attribute_index("thalach")
            .ok_or_else(|| Error::MissingAttribute("thalach".into()))?;
        let age_idx = self
            .attribute_index("age")
            .ok_or_else(|| Error::MissingAttribute("age".into()))?;
        let thalach = self
            .numeric_column(thalach_idx)
            .ok_or_else(|| Error::MissingAttribute("numeric thalach".into()))?;
        let age = self
            .numeric_column(age_idx)
            .ok_or_else(|| Error::MissingAttribute("numeric age".into()))?;

        let mut ratio = Vec::with_capacity(self.len());
        for (row, (&t, &a)) in thalach.iter().zip(age).enumerate() {
            let reserve = 220.0 - a;
            if reserve <= 0.0 {
                return Err(Error::DegenerateAge { row, age: a });
            }
            ratio.push(t / reserve);
        }

        let mut out = self.clone();
        out.schema[thalach_idx] = AttributeSchema::numeric(THALACH_RATIO);
        out.columns[thalach_idx] = Column::Numeric(ratio);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub record_count: usize,
    pub class_counts: BTreeMap<String, usize>,
    /// Majority over minority class count.
    pub imbalance_ratio: f64,
}
