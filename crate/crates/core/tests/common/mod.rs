#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use fedcba::cba::{ClientModel, RuleModel};
use fedcba::dataset::{AttributeSchema, CategoricalDataset};
use fedcba::mining::{ClassAssociationRule, Fraction, Item};
use fedcba::synth::{self, SynthSpec};
use rand::Rng;

/// Random fully categorical dataset with at most `max_items` distinct
/// (attribute, value) items.
pub fn random_dataset<R: Rng>(
    rng: &mut R,
    max_items: usize,
    max_rows: usize,
) -> CategoricalDataset {
    let mut domains = Vec::new();
    let mut items = 0;
    loop {
        let k = rng.gen_range(1..=4usize);
        if items + k > max_items || domains.len() == 5 {
            break;
        }
        items += k;
        domains.push(k);
    }
    if domains.is_empty() {
        domains.push(1);
    }
    let classes = rng.gen_range(2..=3usize);
    let n = rng.gen_range(1..=max_rows);
    // skew values so some itemsets are frequent
    let rows: Vec<Vec<u16>> = (0..n)
        .map(|_| {
            domains
                .iter()
                .map(|&k| {
                    if rng.gen_bool(0.5) {
                        0
                    } else {
                        rng.gen_range(0..k) as u16
                    }
                })
                .collect()
        })
        .collect();
    let labels: Vec<u16> = rows
        .iter()
        .map(|r| {
            if rng.gen_bool(0.6) {
                (r[0] as usize % classes) as u16
            } else {
                rng.gen_range(0..classes) as u16
            }
        })
        .collect();
    let schema = domains
        .iter()
        .enumerate()
        .map(|(a, &k)| {
            AttributeSchema::categorical(format!("a{a}"))
                .with_domain((0..k).map(|v| format!("v{v}")))
        })
        .collect();
    let class_domain = (0..classes).map(|c| format!("c{c}")).collect();
    CategoricalDataset::from_rows(schema, &rows, labels, class_domain).unwrap()
}

/// `(antecedent, label, rule count, antecedent count)`.
pub type CountedRule = (Vec<Item>, u16, u64, u64);

/// Every rule over every attribute-distinct item subset, by direct counting.
pub fn brute_force_cars(
    ds: &CategoricalDataset,
    min_support: Fraction,
    min_confidence: Fraction,
) -> BTreeSet<CountedRule> {
    let rows = ds.rows().unwrap();
    let n = rows.len() as u64;
    let items: Vec<Item> = ds
        .schema
        .iter()
        .enumerate()
        .flat_map(|(a, s)| (0..s.domain.len()).map(move |v| Item::new(a, v as u16)))
        .collect();
    assert!(items.len() <= 16);
    let mut out = BTreeSet::new();
    for mask in 1u32..(1 << items.len()) {
        let ante: Vec<Item> = (0..items.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| items[i])
            .collect();
        let attrs: BTreeSet<u16> = ante.iter().map(|i| i.attr).collect();
        if attrs.len() != ante.len() {
            continue;
        }
        let matching: Vec<usize> = (0..rows.len())
            .filter(|&r| ante.iter().all(|it| rows[r][it.attr as usize] == it.value))
            .collect();
        let a_count = matching.len() as u64;
        if a_count == 0 {
            continue;
        }
        for c in 0..ds.class_domain.len() as u16 {
            let r_count = matching.iter().filter(|&&r| ds.labels[r] == c).count() as u64;
            let supp_ok = r_count * min_support.den >= min_support.num * n;
            let conf_ok = r_count * min_confidence.den >= min_confidence.num * a_count;
            if supp_ok && conf_ok {
                out.insert((ante.clone(), c, r_count, a_count));
            }
        }
    }
    out
}

pub fn rule(
    items: &[(usize, u16)],
    label: u16,
    support: f64,
    confidence: f64,
    order: usize,
) -> ClassAssociationRule {
    ClassAssociationRule {
        antecedent: items.iter().map(|&(a, v)| Item::new(a, v)).collect(),
        label,
        support,
        confidence,
        order,
        counts: None,
    }
}

/// Random client models drawing antecedents from a small shared pool so
/// identical and conflicting rules are common.
pub fn random_clients<R: Rng>(
    rng: &mut R,
    max_clients: usize,
    max_rules: usize,
    equal_n: bool,
) -> Vec<ClientModel> {
    let pool: Vec<Vec<(usize, u16)>> = vec![
        vec![(0, 0)],
        vec![(0, 1)],
        vec![(1, 0)],
        vec![(0, 0), (1, 0)],
        vec![(0, 1), (1, 1)],
        vec![(2, 0)],
        vec![(1, 1), (2, 1)],
    ];
    let grid = [0.05, 0.1, 0.2, 0.25, 0.3];
    let clients = rng.gen_range(1..=max_clients);
    let shared_n = rng.gen_range(1..=500u64);
    (0..clients)
        .map(|id| {
            let mut seen = BTreeSet::new();
            let mut rules = Vec::new();
            for order in 0..rng.gen_range(0..=max_rules) {
                let ante = &pool[rng.gen_range(0..pool.len())];
                let label = rng.gen_range(0..2u16);
                if !seen.insert((ante.clone(), label)) {
                    continue;
                }
                let s = grid[rng.gen_range(0..grid.len())];
                let c = if rng.gen_bool(0.3) {
                    1.0
                } else {
                    rng.gen_range(50..=99) as f64 / 100.0
                };
                rules.push(rule(ante, label, s, c, order));
            }
            ClientModel {
                model: RuleModel {
                    rules,
                    default_class: rng.gen_range(0..2),
                    default_confidence: rng.gen_range(50..=100) as f64 / 100.0,
                },
                train_count: if equal_n {
                    shared_n
                } else {
                    rng.gen_range(1..=500)
                },
                client_id: id,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct NaiveRule {
    pub antecedent: Vec<Item>,
    pub label: u16,
    pub support: f64,
    pub confidence: f64,
    pub arrival: usize,
    pub clients: BTreeSet<usize>,
}

/// Straight-line merge: group, average, resolve conflicts, rank, vote.
pub fn naive_merge(clients: &[ClientModel]) -> (Vec<NaiveRule>, u16, f64) {
    let mut all = Vec::new();
    let mut arrival = 0;
    for c in clients {
        for r in &c.model.rules {
            all.push((arrival, c.client_id, c.train_count, r.clone()));
            arrival += 1;
        }
    }
    let mut keys: Vec<(Vec<Item>, u16)> = Vec::new();
    for (_, _, _, r) in &all {
        let k = (r.antecedent.clone(), r.label);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let groups: Vec<NaiveRule> = keys
        .into_iter()
        .map(|(ante, label)| {
            let members: Vec<_> = all
                .iter()
                .filter(|(_, _, _, r)| r.antecedent == ante && r.label == label)
                .collect();
            let n: f64 = members.iter().map(|m| m.2 as f64).sum();
            // a lone contributor keeps its values; means stay inside the
            // input range despite rounding
            let mean = |f: fn(&ClassAssociationRule) -> f64| -> f64 {
                if members.len() == 1 {
                    return f(&members[0].3);
                }
                let m = members.iter().map(|m| m.2 as f64 * f(&m.3)).sum::<f64>() / n;
                let lo = members
                    .iter()
                    .map(|m| f(&m.3))
                    .fold(f64::INFINITY, f64::min);
                let hi = members
                    .iter()
                    .map(|m| f(&m.3))
                    .fold(f64::NEG_INFINITY, f64::max);
                m.clamp(lo, hi)
            };
            let s = mean(|r| r.support);
            let c = mean(|r| r.confidence);
            NaiveRule {
                antecedent: ante,
                label,
                support: s,
                confidence: c,
                arrival: members.iter().map(|m| m.0).min().unwrap(),
                clients: members.iter().map(|m| m.1).collect(),
            }
        })
        .collect();
    let mut survivors: Vec<NaiveRule> = groups
        .iter()
        .filter(|g| {
            groups.iter().all(|o| {
                o.antecedent != g.antecedent
                    || o.label == g.label
                    || g.support > o.support
                    || (g.support == o.support && g.arrival < o.arrival)
            })
        })
        .cloned()
        .collect();
    survivors.sort_by(|a, b| {
        b.confidence
            .partial_cmp(&a.confidence)
            .unwrap()
            .then(b.support.partial_cmp(&a.support).unwrap())
            .then(a.arrival.cmp(&b.arrival))
    });

    let mut votes: BTreeMap<u16, u64> = BTreeMap::new();
    for c in clients {
        *votes.entry(c.model.default_class).or_default() += c.train_count;
    }
    let best = *votes.values().max().unwrap();
    let class = *votes.iter().find(|(_, &w)| w == best).unwrap().0;
    let voters: Vec<_> = clients
        .iter()
        .filter(|c| c.model.default_class == class)
        .collect();
    let w: f64 = voters.iter().map(|c| c.train_count as f64).sum();
    let confs = voters.iter().map(|c| c.model.default_confidence);
    let conf = if voters.len() == 1 {
        voters[0].model.default_confidence
    } else {
        let m = voters
            .iter()
            .map(|c| c.train_count as f64 * c.model.default_confidence)
            .sum::<f64>()
            / w;
        m.clamp(
            confs.clone().fold(f64::INFINITY, f64::min),
            confs.fold(f64::NEG_INFINITY, f64::max),
        )
    };
    (survivors, class, conf)
}

/// Synthetic hypertension-shaped CSV, written once per test binary.
pub fn synthetic_csv() -> &'static Path {
    static PATH: OnceLock<PathBuf> = OnceLock::new();
    PATH.get_or_init(|| {
        let dir = std::env::temp_dir().join(format!("fedcba-fixture-{}", std::process::id()));
        let path = dir.join("hypertension.csv");
        synth::write_csv(&path, &SynthSpec::default()).unwrap();
        path
    })
}

/// The real dataset when `HYPERTENSION_CSV` points at it, else the synthetic one.
pub fn hypertension_csv() -> PathBuf {
    match std::env::var_os("HYPERTENSION_CSV") {
        Some(p) => PathBuf::from(p),
        None => synthetic_csv().to_path_buf(),
    }
}

pub fn approx(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
