//! Class association rule mining.
//!
//! Level-wise Apriori over "rule items" `(antecedent, class)`. An antecedent
//! survives a level when at least one class reaches minimum support with it;
//! since `count(A ∪ {c}) <= count(B ∪ {c})` for every `B ⊆ A`, that property
//! is anti-monotone and candidates with a failing subset are pruned before
//! counting.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::CategoricalDataset;
use crate::{Error, Result};

/// `attribute = value`, both as codes into the dataset schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Item {
    pub attr: u16,
    pub value: u16,
}

impl Item {
    pub fn new(attr: usize, value: u16) -> Self {
        Self {
            attr: attr as u16,
            value,
        }
    }
}

/// Exact counts behind a mined rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleCounts {
    /// Records matching antecedent and label.
    pub rule: u64,
    /// Records matching the antecedent.
    pub antecedent: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAssociationRule {
    /// Sorted by attribute; attributes are distinct.
    pub antecedent: Vec<Item>,
    pub label: u16,
    pub support: f64,
    pub confidence: f64,
    pub order: usize,
    /// Present on locally mined rules, absent after merging.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<RuleCounts>,
}

impl ClassAssociationRule {
    pub fn matches(&self, record: &[u16]) -> bool {
        self.antecedent
            .iter()
            .all(|it| record.get(it.attr as usize) == Some(&it.value))
    }
}

/// A non-negative rational threshold compared exactly against counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let g = gcd(num, den);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    /// The exact decimal value of `x`'s shortest round-trip representation,
    /// so `0.02` means 2/100 and not the nearest binary double.
    pub fn from_f64(x: f64) -> Result<Self> {
        format!("{x}").parse()
    }

    /// `count / total >= self`, evaluated in integers.
    pub fn admits(&self, count: u64, total: u64) -> bool {
        count as u128 * self.den as u128 >= self.num as u128 * total as u128
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("`{s}` is not a plain decimal fraction"));
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let num = n.trim().parse().map_err(|_| bad())?;
            let den: u64 = d.trim().parse().map_err(|_| bad())?;
            if den == 0 {
                return Err(bad());
            }
            return Ok(Self::new(num, den));
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty()
            || !int.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
            || frac.len() > 18
        {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac_v: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|x| x.checked_add(frac_v))
            .ok_or_else(bad)?;
        Ok(Self::new(num, den))
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MiningParams {
    pub min_support: Fraction,
    pub min_confidence: Fraction,
    /// `None` means unbounded.
    pub max_antecedent_len: Option<usize>,
}

impl MiningParams {
    pub fn new(min_support: f64, min_confidence: f64) -> Result<Self> {
        let p = Self {
            min_support: Fraction::from_f64(min_support)?,
            min_confidence: Fraction::from_f64(min_confidence)?,
            max_antecedent_len: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("min_support", self.min_support),
            ("min_confidence", self.min_confidence),
        ] {
            if f.num == 0 || f.num > f.den {
                return Err(Error::InvalidParams(format!("{name} = {f} not in (0, 1]")));
            }
        }
        if self.max_antecedent_len == Some(0) {
            return Err(Error::InvalidParams(
                "max_antecedent_len must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Fixed-width record set.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> u64 {
        self.0.iter().map(|w| w.count_ones() as u64).sum()
    }

    fn count_and(&self, other: &Bits) -> u64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum()
    }
}

struct Frequent {
    items: Vec<Item>,
    cover: Bits,
}

/// Mines every rule `A -> c` with `count(A ∪ c) / n >= min_support`,
/// `count(A ∪ c) / count(A) >= min_confidence` and `1 <= |A| <= max_len`.
///
/// Rules come out level by level, antecedents in lexicographic
/// `(attribute, value)` order and labels in class-domain order; `order` is
/// the position in that sequence.
pub fn mine_cars(
    ds: &CategoricalDataset,
    params: &MiningParams,
) -> Result<Vec<ClassAssociationRule>> {
    params.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = ds.len();
    let total = n as u64;

    let mut class_bits: Vec<Bits> = (0..ds.class_domain.len()).map(|_| Bits::empty(n)).collect();
    for (r, &c) in ds.labels.iter().enumerate() {
        class_bits[c as usize].set(r);
    }

    let mut level: Vec<Frequent> = Vec::new();
    for (a, attr) in ds.schema.iter().enumerate() {
        let codes = ds.categorical_column(a)?;
        let mut covers: Vec<Bits> = (0..attr.domain.len()).map(|_| Bits::empty(n)).collect();
        for (r, &v) in codes.iter().enumerate() {
            covers[v as usize].set(r);
        }
        for (v, cover) in covers.into_iter().enumerate() {
            level.push(Frequent {
                items: vec![Item::new(a, v as u16)],
                cover,
            });
        }
    }

    let max_len = params.max_antecedent_len.unwrap_or(usize::MAX);
    let mut rules = Vec::new();
    let mut len = 1;
    loop {
        // count and filter this level, emitting rules as we go
        let mut kept = Vec::with_capacity(level.len());
        for cand in level {
            let ante = cand.cover.count();
            let class_counts: Vec<u64> =
                class_bits.iter().map(|b| cand.cover.count_and(b)).collect();
            if !class_counts
                .iter()
                .any(|&c| params.min_support.admits(c, total))
            {
                continue;
            }
            for (label, &count) in class_counts.iter().enumerate() {
                if params.min_support.admits(count, total)
                    && params.min_confidence.admits(count, ante)
                {
                    rules.push(ClassAssociationRule {
                        antecedent: cand.items.clone(),
                        label: label as u16,
                        support: count as f64 / total as f64,
                        confidence: count as f64 / ante as f64,
                        order: rules.len(),
                        counts: Some(RuleCounts {
                            rule: count,
                            antecedent: ante,
                            total,
                        }),
                    });
                }
            }
            kept.push(cand);
        }
        if kept.is_empty() || len >= max_len {
            break;
        }
        level = next_level(&kept);
        len += 1;
        if level.is_empty() {
            break;
        }
    }
    Ok(rules)
}

/// Joins frequent antecedents sharing all but their last item, then drops
/// candidates with an infrequent subset.
fn next_level(kept: &[Frequent]) -> Vec<Frequent> {
    let known: HashSet<&[Item]> = kept.iter().map(|f| f.items.as_slice()).collect();
    let k = kept[0].items.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < kept.len() {
        // block of antecedents sharing the same (k-1)-prefix
        let prefix = &kept[i].items[..k - 1];
        let mut j = i;
        while j < kept.len() && &kept[j].items[..k - 1] == prefix {
            j += 1;
        }
        for x in i..j {
            for y in x + 1..j {
                let last_x = kept[x].items[k - 1];
                let last_y = kept[y].items[k - 1];
                if last_x.attr >= last_y.attr {
                    continue;
                }
                let mut items = kept[x].items.clone();
                items.push(last_y);
                let all_subsets_known = (0..k - 1).all(|skip| {
                    let sub: Vec<Item> = items
                        .iter()
                        .enumerate()
                        .filter(|&(p, _)| p != skip)
                        .map(|(_, it)| *it)
                        .collect();
                    known.contains(sub.as_slice())
                });
                if !all_subsets_known {
                    continue;
                }
                let cover = kept[x].cover.and(&kept[y].cover);
                debug_assert!(cover.count() <= kept[x].cover.count().min(kept[y].cover.count()));
                out.push(Frequent { items, cover });
            }
        }
        i = j;
    }
    out
}
