use rand::seq::SliceRandom;

use super::CategoricalDataset;
use crate::rng::{self, Stream};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub client_count: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidSplit(format!(
                "train fraction {} not in (0, 1)",
                self.train_fraction
            )));
        }
        if self.client_count == 0 {
            return Err(Error::InvalidSplit("client count must be positive".into()));
        }
        Ok(())
    }

    /// Number of training records for a dataset of `n`.
    pub fn train_size(&self, n: usize) -> usize {
        ((self.train_fraction * n as f64) + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone)]
pub struct Partition {
    pub parts: Vec<CategoricalDataset>,
    pub test: CategoricalDataset,
    /// Source row indices of each client part.
    pub part_rows: Vec<Vec<usize>>,
    pub test_rows: Vec<usize>,
}

/// Shuffles with the split stream of `spec.seed`, takes the leading
/// `floor(train_fraction * n)` records for training and cuts them block-wise
/// into `client_count` parts; the first `train % client_count` parts get
/// one extra record.
pub fn split_and_partition(ds: &CategoricalDataset, spec: &SplitSpec) -> Result<Partition> {
    split_with_stream(ds, spec, Stream::Split)
}

pub(crate) fn split_with_stream(
    ds: &CategoricalDataset,
    spec: &SplitSpec,
    stream: Stream,
) -> Result<Partition> {
    spec.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = ds.len();
    let train = spec.train_size(n);
    let base = train / spec.client_count;
    if base == 0 {
        return Err(Error::InvalidSplit(format!(
            "{train} training records cannot fill {} client parts",
            spec.client_count
        )));
    }
    let extra = train % spec.client_count;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(spec.seed, stream));

    let mut part_rows = Vec::with_capacity(spec.client_count);
    let mut start = 0;
    for i in 0..spec.client_count {
        let len = base + usize::from(i < extra);
        part_rows.push(order[start..start + len].to_vec());
        start += len;
    }
    let test_rows = order[train..].to_vec();

    Ok(Partition {
        parts: part_rows.iter().map(|rows| ds.select_rows(rows)).collect(),
        test: ds.select_rows(&test_rows),
        part_rows,
        test_rows,
    })
}
