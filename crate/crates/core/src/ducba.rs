//! Server-side aggregation of client rule models.
//!
//! Aggregators are registered by name so experiments can pick one from
//! configuration (`merge.strategy`). The built-in `ducba` strategy:
//!
//! 1. Rules with the same antecedent and label are fused; support and
//!    confidence become the means weighted by the contributing clients'
//!    training counts `n_i`, and the fused rule keeps the earliest arrival.
//! 2. Among fused rules with the same antecedent but different labels, the
//!    one with higher support survives; equal support goes to the earlier
//!    arrival.
//! 3. Survivors are ranked. The default class is the one whose voting
//!    clients hold the most training records.
//!
//! Arrival order is client position in the input list, then rule position
//! in that client's transmitted list.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::cba::{rank_rules, ClientModel, RuleModel};
use crate::mining::{ClassAssociationRule, Item};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MergedModel {
    pub model: RuleModel,
    /// Contributing client ids, aligned with `model.rules`.
    pub provenance: Vec<BTreeSet<usize>>,
    pub total_train_count: u64,
}

impl MergedModel {
    /// Sidecar listing `line<TAB>client,client` with 1-based rule lines.
    pub fn provenance_text(&self) -> String {
        let mut out = String::new();
        for (i, clients) in self.provenance.iter().enumerate() {
            let ids: Vec<String> = clients.iter().map(usize::to_string).collect();
            writeln!(out, "{}\t{}", i + 1, ids.join(",")).unwrap();
        }
        out
    }
}

pub trait Aggregator: Send + Sync {
    fn name(&self) -> &'static str;

    fn merge(&self, clients: &[ClientModel]) -> Result<MergedModel>;
}

/// Which records the support average is normalized over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportBasis {
    /// Clients that sent the rule.
    Contributing,
    /// Every client; a rule missing from a client counts as support 0 there.
    AllClients,
}

#[derive(Debug, Clone, Copy)]
pub struct DuCba {
    pub support_basis: SupportBasis,
}

impl Default for DuCba {
    fn default() -> Self {
        Self {
            support_basis: SupportBasis::Contributing,
        }
    }
}

struct Group {
    antecedent: Vec<Item>,
    label: u16,
    arrival: usize,
    members: Vec<(u64, f64, f64)>,
    clients: BTreeSet<usize>,
}

fn weighted_mean(values: impl Iterator<Item = (u64, f64)> + Clone, denominator: u64) -> f64 {
    let sum: f64 = values.map(|(n, x)| n as f64 * x).sum();
    sum / denominator as f64
}

fn clamp_to(values: impl Iterator<Item = f64> + Clone, x: f64) -> f64 {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.fold(f64::NEG_INFINITY, f64::max);
    x.clamp(lo, hi)
}

impl Aggregator for DuCba {
    fn name(&self) -> &'static str {
        match self.support_basis {
            SupportBasis::Contributing => "ducba",
            SupportBasis::AllClients => "ducba-global",
        }
    }

    fn merge(&self, clients: &[ClientModel]) -> Result<MergedModel> {
        if clients.is_empty() {
            return Err(Error::NoClients);
        }
        let total: u64 = clients.iter().map(|c| c.train_count).sum();

        // step 1: fuse identical rules
        let mut groups: Vec<Group> = Vec::new();
        let mut index: HashMap<(&[Item], u16), usize> = HashMap::new();
        let mut arrival = 0;
        for client in clients {
            for rule in &client.model.rules {
                let key = (rule.antecedent.as_slice(), rule.label);
                let g = *index.entry(key).or_insert_with(|| {
                    groups.push(Group {
                        antecedent: rule.antecedent.clone(),
                        label: rule.label,
                        arrival,
                        members: Vec::new(),
                        clients: BTreeSet::new(),
                    });
                    groups.len() - 1
                });
                groups[g]
                    .members
                    .push((client.train_count, rule.support, rule.confidence));
                groups[g].clients.insert(client.client_id);
                arrival += 1;
            }
        }

        let fused: Vec<(ClassAssociationRule, BTreeSet<usize>)> = groups
            .into_iter()
            .map(|g| {
                let (support, confidence) =
                    if g.members.len() == 1 && self.support_basis == SupportBasis::Contributing {
                        (g.members[0].1, g.members[0].2)
                    } else {
                        let n_contrib: u64 = g.members.iter().map(|m| m.0).sum();
                        let supports = g.members.iter().map(|m| (m.0, m.1));
                        let confs = g.members.iter().map(|m| (m.0, m.2));
                        let support = match self.support_basis {
                            SupportBasis::Contributing => clamp_to(
                                g.members.iter().map(|m| m.1),
                                weighted_mean(supports, n_contrib),
                            ),
                            SupportBasis::AllClients => weighted_mean(supports, total),
                        };
                        let confidence = clamp_to(
                            g.members.iter().map(|m| m.2),
                            weighted_mean(confs, n_contrib),
                        );
                        (support, confidence)
                    };
                (
                    ClassAssociationRule {
                        antecedent: g.antecedent,
                        label: g.label,
                        support,
                        confidence,
                        order: g.arrival,
                        counts: None,
                    },
                    g.clients,
                )
            })
            .collect();

        // step 2: one label per antecedent
        let mut best: BTreeMap<Vec<Item>, usize> = BTreeMap::new();
        for (i, (rule, _)) in fused.iter().enumerate() {
            best.entry(rule.antecedent.clone())
                .and_modify(|cur| {
                    let incumbent = &fused[*cur].0;
                    let wins = rule.support > incumbent.support
                        || (rule.support == incumbent.support && rule.order < incumbent.order);
                    if wins {
                        *cur = i;
                    }
                })
                .or_insert(i);
        }
        let mut survivors: Vec<(ClassAssociationRule, BTreeSet<usize>)> = {
            let keep: BTreeSet<usize> = best.into_values().collect();
            fused
                .into_iter()
                .enumerate()
                .filter(|(i, _)| keep.contains(i))
                .map(|(_, x)| x)
                .collect()
        };

        // step 3: rank, keeping provenance aligned
        let ranked = rank_rules(survivors.iter().map(|(r, _)| r.clone()).collect());
        let mut by_order: HashMap<usize, BTreeSet<usize>> =
            survivors.drain(..).map(|(r, c)| (r.order, c)).collect();
        let provenance = ranked
            .iter()
            .map(|r| {
                by_order
                    .remove(&r.order)
                    .expect("provenance for every survivor")
            })
            .collect();

        let (default_class, default_confidence) = merge_defaults(clients);
        Ok(MergedModel {
            model: RuleModel {
                rules: ranked,
                default_class,
                default_confidence,
            },
            provenance,
            total_train_count: total,
        })
    }
}

/// Class backed by the most training records among clients voting for it
/// (lower class code on ties), with the `n`-weighted mean default
/// confidence of those voters.
fn merge_defaults(clients: &[ClientModel]) -> (u16, f64) {
    let mut votes: BTreeMap<u16, u64> = BTreeMap::new();
    for c in clients {
        *votes.entry(c.model.default_class).or_default() += c.train_count;
    }
    let (&class, &weight) = votes
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .expect("at least one client");
    let voters: Vec<&ClientModel> = clients
        .iter()
        .filter(|c| c.model.default_class == class)
        .collect();
    let confidence = if voters.len() == 1 {
        voters[0].model.default_confidence
    } else if weight == 0 {
        voters
            .iter()
            .map(|c| c.model.default_confidence)
            .sum::<f64>()
            / voters.len() as f64
    } else {
        clamp_to(
            voters.iter().map(|c| c.model.default_confidence),
            weighted_mean(
                voters
                    .iter()
                    .map(|c| (c.train_count, c.model.default_confidence)),
                weight,
            ),
        )
    };
    (class, confidence)
}

/// Aggregation strategies selectable by name.
pub struct AggregatorRegistry {
    strategies: BTreeMap<&'static str, Box<dyn Aggregator>>,
}

impl Default for AggregatorRegistry {
    fn default() -> Self {
        let mut r = Self {
            strategies: BTreeMap::new(),
        };
        r.register(Box::new(DuCba::default()));
        r.register(Box::new(DuCba {
            support_basis: SupportBasis::AllClients,
        }));
        r
    }
}

impl AggregatorRegistry {
    pub fn register(&mut self, strategy: Box<dyn Aggregator>) {
        self.strategies.insert(strategy.name(), strategy);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.strategies.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Aggregator> {
        self.strategies
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "aggregation",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }
}

/// Merges with the default duCBA strategy.
pub fn merge(clients: &[ClientModel]) -> Result<MergedModel> {
    DuCba::default().merge(clients)
}
