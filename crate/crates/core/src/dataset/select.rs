use serde::Serialize;

use super::{chi_square_statistic, contingency_table, CategoricalDataset, ChiSquare};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureTest {
    pub attribute: String,
    pub test: ChiSquare,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub dataset: CategoricalDataset,
    pub dropped: Vec<String>,
    pub tests: Vec<FeatureTest>,
}

/// Chi-square test of every attribute against the class.
///
/// Levels (or classes) that never occur are removed from the table first.
/// An attribute left with a single level carries no information and is
/// reported with statistic 0 and p-value 1.
pub fn feature_p_values(ds: &CategoricalDataset) -> Result<Vec<FeatureTest>> {
    (0..ds.schema.len())
        .map(|a| {
            let full = contingency_table(ds, a)?;
            let live_cols: Vec<usize> = (0..ds.class_domain.len())
                .filter(|&j| full.iter().any(|r| r[j] > 0))
                .collect();
            let table: Vec<Vec<u64>> = full
                .iter()
                .filter(|r| r.iter().any(|&x| x > 0))
                .map(|r| live_cols.iter().map(|&j| r[j]).collect())
                .collect();
            let test = if table.len() < 2 || live_cols.len() < 2 {
                ChiSquare {
                    statistic: 0.0,
                    dof: 0,
                    p_value: 1.0,
                }
            } else {
                chi_square_statistic(&table)?
            };
            Ok(FeatureTest {
                attribute: ds.schema[a].name.clone(),
                test,
            })
        })
        .collect()
}

/// Drops every attribute whose p-value against the class exceeds `alpha`.
pub fn select_features(ds: &CategoricalDataset, alpha: f64) -> Result<Selection> {
    let tests = feature_p_values(ds)?;
    let (keep, dropped): (Vec<&FeatureTest>, Vec<&FeatureTest>) =
        tests.iter().partition(|t| t.test.p_value <= alpha);
    let keep: Vec<String> = keep.into_iter().map(|t| t.attribute.clone()).collect();
    let dropped = dropped.into_iter().map(|t| t.attribute.clone()).collect();
    Ok(Selection {
        dataset: ds.project(&keep),
        dropped,
        tests,
    })
}
