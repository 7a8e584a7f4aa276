//! k-ary randomized response.
//!
//! A value from a domain of size `k` is reported truthfully with probability
//! `p = e^ε / (e^ε + k - 1)` and otherwise replaced by one of the `k - 1`
//! other values, each with probability `q = 1 / (e^ε + k - 1)`. Since
//! `p / q = e^ε`, every report satisfies ε-local differential privacy for
//! that attribute. Each attribute of a record spends the full ε.

use rand::Rng;

use crate::dataset::{CategoricalDataset, Column};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RRConfig {
    pub epsilon: f64,
    pub perturb_label: bool,
}

impl RRConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        let cfg = Self {
            epsilon,
            perturb_label: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 || self.epsilon.is_infinite() {
            return Err(Error::InvalidPrivacy(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RRChannel {
    pub domain_size: usize,
    pub epsilon: f64,
    pub keep_prob: f64,
    pub flip_prob: f64,
}

impl RRChannel {
    pub fn new(domain_size: usize, epsilon: f64) -> Result<Self> {
        if domain_size < 2 {
            return Err(Error::InvalidPrivacy(format!(
                "randomized response needs at least 2 categories, got {domain_size}"
            )));
        }
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::InvalidPrivacy(format!("bad epsilon {epsilon}")));
        }
        // divide through by e^ε so large budgets do not overflow
        let others = (domain_size - 1) as f64;
        let damp = (-epsilon).exp();
        let denom = 1.0 + others * damp;
        Ok(Self {
            domain_size,
            epsilon,
            keep_prob: 1.0 / denom,
            flip_prob: damp / denom,
        })
    }

    /// `Pr[report = y | truth = x]`.
    pub fn prob(&self, truth: usize, report: usize) -> f64 {
        if truth == report {
            self.keep_prob
        } else {
            self.flip_prob
        }
    }

    /// Full `k x k` transition matrix, rows indexed by the true value.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.domain_size)
            .map(|x| (0..self.domain_size).map(|y| self.prob(x, y)).collect())
            .collect()
    }

    pub fn perturb<R: Rng + ?Sized>(&self, truth: u16, rng: &mut R) -> u16 {
        debug_assert!((truth as usize) < self.domain_size);
        if rng.gen::<f64>() < self.keep_prob {
            truth
        } else {
            let other = rng.gen_range(0..self.domain_size - 1) as u16;
            if other >= truth {
                other + 1
            } else {
                other
            }
        }
    }
}

pub fn perturb_value<R: Rng + ?Sized>(channel: &RRChannel, truth: u16, rng: &mut R) -> u16 {
    channel.perturb(truth, rng)
}

/// Perturbs every cell, record by record and attribute by attribute in
/// schema order (then the label when enabled). Attributes with a single
/// category pass through unchanged.
pub fn perturb_dataset<R: Rng + ?Sized>(
    ds: &CategoricalDataset,
    cfg: &RRConfig,
    rng: &mut R,
) -> Result<CategoricalDataset> {
    cfg.validate()?;
    let channels: Vec<Option<RRChannel>> = ds
        .schema
        .iter()
        .map(|a| {
            if a.domain.len() >= 2 {
                RRChannel::new(a.domain.len(), cfg.epsilon).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let label_channel = if cfg.perturb_label && ds.class_domain.len() >= 2 {
        Some(RRChannel::new(ds.class_domain.len(), cfg.epsilon)?)
    } else {
        None
    };

    let mut columns: Vec<Vec<u16>> = (0..ds.schema.len())
        .map(|a| ds.categorical_column(a).map(|c| c.to_vec()))
        .collect::<Result<_>>()?;
    let mut labels = ds.labels.clone();
    for r in 0..ds.len() {
        for (col, ch) in columns.iter_mut().zip(&channels) {
            if let Some(ch) = ch {
                col[r] = ch.perturb(col[r], rng);
            }
        }
        if let Some(ch) = &label_channel {
            labels[r] = ch.perturb(labels[r], rng);
        }
    }

    let mut out = ds.clone();
    out.columns = columns.into_iter().map(Column::Categorical).collect();
    out.labels = labels;
    Ok(out)
}

/// Unbiased estimate of the true counts behind randomized-response output:
/// `n * (observed(v) / n - q) / (p - q)`. Estimates can be negative.
pub fn estimate_true_frequency(observed: &[u64], channel: &RRChannel, n: u64) -> Result<Vec<f64>> {
    if observed.len() != channel.domain_size {
        return Err(Error::InvalidPrivacy(format!(
            "{} observed counts for a domain of {}",
            observed.len(),
            channel.domain_size
        )));
    }
    if n == 0 || observed.iter().sum::<u64>() != n {
        return Err(Error::InvalidPrivacy(
            "observed counts must sum to n > 0".into(),
        ));
    }
    let observed: Vec<f64> = observed.iter().map(|&o| o as f64).collect();
    debias(&observed, channel)
}

/// Real-valued form of [`estimate_true_frequency`]; `n` is the sum of
/// `observed`.
pub fn debias(observed: &[f64], channel: &RRChannel) -> Result<Vec<f64>> {
    let spread = channel.keep_prob - channel.flip_prob;
    if spread.abs() < f64::EPSILON {
        return Err(Error::DegenerateChannel);
    }
    let n: f64 = observed.iter().sum();
    Ok(observed
        .iter()
        .map(|&o| n * (o / n - channel.flip_prob) / spread)
        .collect())
}
