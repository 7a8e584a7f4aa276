use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use log::{debug, warn};

use super::{AttributeKind, AttributeSchema, CategoricalDataset, Column};
use crate::{Error, Result};

pub const HYPERTENSION_TARGET: &str = "target";

/// Column layout of the hypertension CSV.
pub fn hypertension_schema() -> Vec<AttributeSchema> {
    use AttributeSchema as A;
    vec![
        A::numeric("age"),
        A::categorical("sex"),
        A::categorical("cp"),
        A::numeric("trestbps"),
        A::numeric("chol"),
        A::categorical("fbs"),
        A::categorical("restecg"),
        A::numeric("thalach"),
        A::categorical("exang"),
        A::numeric("oldpeak"),
        A::categorical("slope"),
        A::categorical("ca"),
        A::categorical("thal"),
    ]
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: CategoricalDataset,
    /// Rows discarded for empty or unparseable cells.
    pub dropped_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty()
        || c.eq_ignore_ascii_case("na")
        || c.eq_ignore_ascii_case("nan")
        || c.eq_ignore_ascii_case("null")
        || c == "?"
}

/// Orders category labels numerically when both parse as numbers, else
/// lexically, so that `"2" < "10"`.
fn label_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.partial_cmp(&y).unwrap_or(Ordering::Equal).then(a.cmp(b)),
        _ => a.cmp(b),
    }
}

fn sorted_domain(values: BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = values.into_iter().collect();
    v.sort_by(|a, b| label_order(a, b));
    v
}

/// Normalizes numeric-looking category labels so `1` and `1.0` coincide.
fn normalize_label(cell: &str) -> String {
    let c = cell.trim();
    match c.parse::<f64>() {
        Ok(x) if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 => format!("{}", x as i64),
        _ => c.to_string(),
    }
}

enum Raw {
    Num(f64),
    Cat(String),
}

/// Reads a header-first, comma-delimited CSV. The header must contain
/// exactly the schema names plus `target_name`, in any order. Rows with a
/// missing or unparseable cell are dropped and counted.
pub fn load_csv(
    path: impl AsRef<Path>,
    schema: &[AttributeSchema],
    target_name: &str,
) -> Result<Loaded> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);

    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut expected: BTreeSet<&str> = schema.iter().map(|a| a.name.as_str()).collect();
    expected.insert(target_name);
    let present: BTreeSet<&str> = header.iter().map(String::as_str).collect();
    let missing: Vec<String> = expected
        .difference(&present)
        .map(|s| s.to_string())
        .collect();
    let unexpected: Vec<String> = present
        .difference(&expected)
        .map(|s| s.to_string())
        .collect();
    if !missing.is_empty() || !unexpected.is_empty() || header.len() != expected.len() {
        return Err(Error::HeaderMismatch {
            missing,
            unexpected,
        });
    }

    let position: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    let attr_pos: Vec<usize> = schema.iter().map(|a| position[a.name.as_str()]).collect();
    let target_pos = position[target_name];

    let mut raw_rows: Vec<(Vec<Raw>, String)> = Vec::new();
    let mut dropped = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parsed = (|| {
            if record.len() != header.len() {
                return None;
            }
            let mut values = Vec::with_capacity(schema.len());
            for (attr, &pos) in schema.iter().zip(&attr_pos) {
                let cell = &record[pos];
                if is_missing(cell) {
                    return None;
                }
                values.push(match attr.kind {
                    AttributeKind::Numeric => {
                        let x: f64 = cell.trim().parse().ok()?;
                        if !x.is_finite() {
                            return None;
                        }
                        Raw::Num(x)
                    }
                    AttributeKind::Categorical => {
                        let label = normalize_label(cell);
                        if !attr.domain.is_empty() && !attr.domain.contains(&label) {
                            return None;
                        }
                        Raw::Cat(label)
                    }
                });
            }
            let target = &record[target_pos];
            if is_missing(target) {
                return None;
            }
            Some((values, normalize_label(target)))
        })();
        match parsed {
            Some(row) => raw_rows.push(row),
            None => {
                debug!("dropping row {} of {}", line + 2, path.display());
                dropped += 1;
            }
        }
    }

    if raw_rows.is_empty() {
        return Err(Error::NoUsableRows(path.to_path_buf(), dropped));
    }
    if dropped > 0 {
        warn!("{}: dropped {dropped} incomplete rows", path.display());
    }

    let mut out_schema = schema.to_vec();
    for (a, attr) in out_schema.iter_mut().enumerate() {
        if attr.kind == AttributeKind::Categorical && attr.domain.is_empty() {
            let values: BTreeSet<String> = raw_rows
                .iter()
                .map(|(v, _)| match &v[a] {
                    Raw::Cat(s) => s.clone(),
                    Raw::Num(_) => unreachable!(),
                })
                .collect();
            attr.domain = sorted_domain(values);
        }
    }
    let class_domain = sorted_domain(raw_rows.iter().map(|(_, t)| t.clone()).collect());

    let columns = out_schema
        .iter()
        .enumerate()
        .map(|(a, attr)| match attr.kind {
            AttributeKind::Numeric => Column::Numeric(
                raw_rows
                    .iter()
                    .map(|(v, _)| match v[a] {
                        Raw::Num(x) => x,
                        Raw::Cat(_) => unreachable!(),
                    })
                    .collect(),
            ),
            AttributeKind::Categorical => {
                let index: HashMap<&str, u16> = attr
                    .domain
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (d.as_str(), i as u16))
                    .collect();
                Column::Categorical(
                    raw_rows
                        .iter()
                        .map(|(v, _)| match &v[a] {
                            Raw::Cat(s) => index[s.as_str()],
                            Raw::Num(_) => unreachable!(),
                        })
                        .collect(),
                )
            }
        })
        .collect();
    let labels = raw_rows
        .iter()
        .map(|(_, t)| class_domain.iter().position(|c| c == t).unwrap() as u16)
        .collect();

    let dataset = CategoricalDataset {
        schema: out_schema,
        columns,
        labels,
        class_domain,
        target_name: target_name.to_string(),
    };
    dataset.validate()?;
    Ok(Loaded {
        dataset,
        dropped_rows: dropped,
    })
}
