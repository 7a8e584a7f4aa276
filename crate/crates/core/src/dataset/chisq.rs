use serde::Serialize;

use super::CategoricalDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson's test of independence on an `r x c` table of counts, without
/// continuity correction.
pub fn chi_square_statistic(table: &[Vec<u64>]) -> Result<ChiSquare> {
    let rows = table.len();
    if rows < 2 {
        return Err(Error::Contingency(format!("{rows} rows, need at least 2")));
    }
    let cols = table[0].len();
    if cols < 2 {
        return Err(Error::Contingency(format!(
            "{cols} columns, need at least 2"
        )));
    }
    if table.iter().any(|r| r.len() != cols) {
        return Err(Error::Contingency("ragged table".into()));
    }

    let row_totals: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_totals: Vec<u64> = (0..cols)
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    if let Some(i) = row_totals.iter().position(|&t| t == 0) {
        return Err(Error::Contingency(format!("row {i} has zero marginal")));
    }
    if let Some(j) = col_totals.iter().position(|&t| t == 0) {
        return Err(Error::Contingency(format!("column {j} has zero marginal")));
    }
    let grand: f64 = row_totals.iter().sum::<u64>() as f64;

    let mut statistic = 0.0;
    for (row, &rt) in table.iter().zip(&row_totals) {
        for (&observed, &ct) in row.iter().zip(&col_totals) {
            let expected = rt as f64 * ct as f64 / grand;
            let d = observed as f64 - expected;
            statistic += d * d / expected;
        }
    }
    let dof = (rows - 1) * (cols - 1);
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: chi_square_p_value(statistic, dof),
    })
}

/// Upper tail `P[X >= statistic]` of the chi-square distribution.
pub fn chi_square_p_value(statistic: f64, dof: usize) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    gamma_q(dof as f64 / 2.0, statistic / 2.0)
}

/// Counts of (attribute level, class) pairs.
pub fn contingency_table(ds: &CategoricalDataset, attr: usize) -> Result<Vec<Vec<u64>>> {
    let codes = ds.categorical_column(attr)?;
    let mut table = vec![vec![0u64; ds.class_domain.len()]; ds.schema[attr].domain.len()];
    for (&v, &c) in codes.iter().zip(&ds.labels) {
        table[v as usize][c as usize] += 1;
    }
    Ok(table)
}

const EPS: f64 = 1e-15;
const MAX_ITER: usize = 10_000;

fn ln_gamma(x: f64) -> f64 {
    // Lanczos, g = 7, n = 9
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let sum = COEF[1..]
        .iter()
        .enumerate()
        .fold(COEF[0], |acc, (i, &c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// Regularized upper incomplete gamma `Q(a, x)`.
fn gamma_q(a: f64, x: f64) -> f64 {
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    // modified Lentz
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}
