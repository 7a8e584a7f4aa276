//! Binary classification metrics: confusion matrix, per-class and macro
//! precision/recall/F1, accuracy, ROC curve and AUC.

use std::fmt::Write as _;

use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Counts from `(actually positive, predicted positive)` pairs.
pub fn confusion(predictions: &[(bool, bool)]) -> Result<ConfusionMatrix> {
    if predictions.is_empty() {
        return Err(Error::Metrics("no predictions".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for &(truth, pred) in predictions {
        match (truth, pred) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Names of metrics whose denominator was zero; they are reported as 0.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<&'static str>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prf1 {
    /// Negative class first, then positive.
    pub per_class: Vec<ClassMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn class_metrics(class: &str, tp: u64, fp: u64, fn_: u64) -> ClassMetrics {
    let mut undefined = Vec::new();
    let precision = ratio(tp, tp + fp).unwrap_or_else(|| {
        undefined.push("precision");
        0.0
    });
    let recall = ratio(tp, tp + fn_).unwrap_or_else(|| {
        undefined.push("recall");
        0.0
    });
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        undefined.push("f1");
        0.0
    };
    ClassMetrics {
        class: class.to_string(),
        precision,
        recall,
        f1,
        support: tp + fn_,
        undefined,
    }
}

/// Per-class metrics treat each class in turn as the positive one.
pub fn prf1(cm: &ConfusionMatrix, negative_name: &str, positive_name: &str) -> Prf1 {
    let neg = class_metrics(negative_name, cm.tn, cm.fn_, cm.fp);
    let pos = class_metrics(positive_name, cm.tp, cm.fp, cm.fn_);
    let macro_avg = Averages {
        precision: (neg.precision + pos.precision) / 2.0,
        recall: (neg.recall + pos.recall) / 2.0,
        f1: (neg.f1 + pos.f1) / 2.0,
    };
    let accuracy = ratio(cm.tp + cm.tn, cm.total()).unwrap_or(0.0);
    Prf1 {
        per_class: vec![neg, pos],
        macro_avg,
        accuracy,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Roc {
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    /// Trapezoidal area under `points`.
    pub auc: f64,
    /// Probability that a random positive outscores a random negative,
    /// ties counting one half.
    pub auc_pairwise: f64,
}

/// ROC over every distinct score threshold, from `(actually positive,
/// positive-class score)` pairs.
pub fn roc_auc(scored: &[(bool, f64)]) -> Result<Roc> {
    let positives = scored.iter().filter(|s| s.0).count() as u64;
    let negatives = scored.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Metrics("ROC needs both classes".into()));
    }
    if scored.iter().any(|s| s.1.is_nan()) {
        return Err(Error::Metrics("NaN score".into()));
    }

    let mut sorted = scored.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].1;
        while i < sorted.len() && sorted[i].1 == score {
            if sorted[i].0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }

    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();

    Ok(Roc {
        points,
        auc,
        auc_pairwise: pairwise_auc(&sorted, positives, negatives),
    })
}

/// Mann-Whitney form: for each positive, negatives scored strictly lower
/// plus half the tied ones. `sorted` is in descending score order.
fn pairwise_auc(sorted: &[(bool, f64)], positives: u64, negatives: u64) -> f64 {
    let mut wins = 0.0f64;
    let mut negatives_above = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].1;
        let (mut p, mut n) = (0u64, 0u64);
        while i < sorted.len() && sorted[i].1 == score {
            if sorted[i].0 {
                p += 1;
            } else {
                n += 1;
            }
            i += 1;
        }
        let below = negatives - negatives_above - n;
        wins += p as f64 * (below as f64 + 0.5 * n as f64);
        negatives_above += n;
    }
    wins / (positives as f64 * negatives as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    pub accuracy: f64,
    pub auc: f64,
    pub auc_pairwise: f64,
    pub roc_points: Vec<(f64, f64)>,
}

impl EvaluationReport {
    /// `scored` holds `(actually positive, predicted positive, positive
    /// score)`.
    pub fn evaluate(
        scored: &[(bool, bool, f64)],
        negative_name: &str,
        positive_name: &str,
    ) -> Result<Self> {
        let cm = confusion(&scored.iter().map(|s| (s.0, s.1)).collect::<Vec<_>>())?;
        let m = prf1(&cm, negative_name, positive_name);
        let roc = roc_auc(&scored.iter().map(|s| (s.0, s.2)).collect::<Vec<_>>())?;
        Ok(Self {
            confusion: cm,
            per_class: m.per_class,
            macro_avg: m.macro_avg,
            accuracy: m.accuracy,
            auc: roc.auc,
            auc_pairwise: roc.auc_pairwise,
            roc_points: roc.points,
        })
    }

    pub fn class(&self, name: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|c| c.class == name)
    }

    /// `(metric, class, value)` rows.
    pub fn flat_rows(&self) -> Vec<(&'static str, String, f64)> {
        let mut rows = Vec::new();
        for c in &self.per_class {
            rows.push(("precision", c.class.clone(), c.precision));
            rows.push(("recall", c.class.clone(), c.recall));
            rows.push(("f1", c.class.clone(), c.f1));
        }
        rows.push(("precision", "macro".into(), self.macro_avg.precision));
        rows.push(("recall", "macro".into(), self.macro_avg.recall));
        rows.push(("f1", "macro".into(), self.macro_avg.f1));
        rows.push(("accuracy", "all".into(), self.accuracy));
        rows.push(("auc", "all".into(), self.auc));
        rows.push(("auc_pairwise", "all".into(), self.auc_pairwise));
        rows.push(("tp", "all".into(), self.confusion.tp as f64));
        rows.push(("fp", "all".into(), self.confusion.fp as f64));
        rows.push(("tn", "all".into(), self.confusion.tn as f64));
        rows.push(("fn", "all".into(), self.confusion.fn_ as f64));
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,class,value\n");
        for (metric, class, value) in self.flat_rows() {
            writeln!(out, "{metric},{class},{value}").unwrap();
        }
        out
    }

    pub fn roc_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (x, y) in &self.roc_points {
            writeln!(out, "{x},{y}").unwrap();
        }
        out
    }

    /// Class / Precision / Recall / F1-Score / Accuracy table in
    /// percentages, rounded half-up to `decimals` places.
    pub fn table(&self, decimals: u32) -> Vec<TableRow> {
        let pct = |x: f64| round_half_up(100.0 * x, decimals);
        let mut rows: Vec<TableRow> = self
            .per_class
            .iter()
            .map(|c| TableRow {
                label: c.class.clone(),
                precision: pct(c.precision),
                recall: pct(c.recall),
                f1: pct(c.f1),
                accuracy: pct(self.accuracy),
            })
            .collect();
        rows.push(TableRow {
            label: "Macro Average".into(),
            precision: pct(self.macro_avg.precision),
            recall: pct(self.macro_avg.recall),
            f1: pct(self.macro_avg.f1),
            accuracy: pct(self.accuracy),
        });
        rows
    }

    pub fn render_table(&self, decimals: u32) -> String {
        let rows = self.table(decimals);
        let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
        let d = decimals as usize;
        let mut out = format!(
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}\n",
            "Class", "Precision", "Recall", "F1-Score", "Accuracy"
        );
        for r in rows {
            writeln!(
                out,
                "{:<width$}  {:>9.d$}  {:>9.d$}  {:>9.d$}  {:>9.d$}",
                r.label, r.precision, r.recall, r.f1, r.accuracy
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

/// Rounds half away from zero at `decimals` places, tolerating the binary
/// representation error of values like `97.5`.
pub fn round_half_up(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let scaled = x * scale;
    let nudged = scaled + scaled.signum() * 1e-9 * scaled.abs().max(1.0);
    (nudged.abs() + 0.5).floor().copysign(x) / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_counts() -> ConfusionMatrix {
        ConfusionMatrix {
            tp: 2799,
            fp: 114,
            tn: 2284,
            fn_: 15,
        }
    }

    #[test]
    fn confusion_counts() {
        let cm = confusion(&[
            (true, true),
            (true, false),
            (false, true),
            (false, false),
            (false, false),
        ])
        .unwrap();
        assert_eq!((cm.tp, cm.fn_, cm.fp, cm.tn), (1, 1, 1, 2));
        assert!(confusion(&[]).is_err());
    }

    #[test]
    fn perfect_predictions_and_label_swap() {
        let perfect = [(true, true), (false, false), (true, true), (false, false)];
        let cm = confusion(&perfect).unwrap();
        assert_eq!((cm.fp, cm.fn_), (0, 0));
        let swapped: Vec<_> = perfect.iter().map(|&(t, p)| (t, !p)).collect();
        let sw = confusion(&swapped).unwrap();
        assert_eq!((sw.fn_, sw.tp, sw.fp, sw.tn), (cm.tp, cm.fn_, cm.tn, cm.fp));
        let m = prf1(&cm, "neg", "pos");
        assert_eq!(m.accuracy, 1.0);
        for c in &m.per_class {
            assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn reference_confusion_metrics() {
        let m = prf1(&reference_counts(), "No Hypertension", "Hypertension");
        assert!((m.accuracy - 5083.0 / 5212.0).abs() < 1e-15);
        assert!((m.accuracy - 0.9752).abs() < 1e-4);
        let pos = &m.per_class[1];
        assert!((pos.precision - 0.9609).abs() < 1e-4);
        assert!((pos.recall - 0.9947).abs() < 1e-4);
    }

    #[test]
    fn zero_denominator_is_flagged() {
        let cm = ConfusionMatrix {
            tp: 0,
            fp: 0,
            tn: 5,
            fn_: 3,
        };
        let m = prf1(&cm, "neg", "pos");
        let pos = &m.per_class[1];
        assert_eq!(pos.precision, 0.0);
        assert!(pos.undefined.contains(&"precision"));
        assert!(pos.undefined.contains(&"f1"));
    }

    #[test]
    fn small_auc_cases() {
        let r = roc_auc(&[(true, 0.9), (true, 0.4), (false, 0.3)]).unwrap();
        assert_eq!(r.auc, 1.0);
        let r = roc_auc(&[(true, 0.2), (false, 0.8)]).unwrap();
        assert_eq!(r.auc, 0.0);
        let r = roc_auc(&[(true, 0.5), (false, 0.5), (true, 0.5), (false, 0.5)]).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.auc_pairwise, 0.5);
        assert!(roc_auc(&[(true, 0.1), (true, 0.2)]).is_err());
    }

    #[test]
    fn roc_endpoints() {
        let r = roc_auc(&[(true, 0.9), (false, 0.7), (true, 0.6), (false, 0.1)]).unwrap();
        assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
        assert!((r.auc - 0.75).abs() < 1e-12);
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(round_half_up(97.5, 0), 98.0);
        assert_eq!(round_half_up(97.4999, 0), 97.0);
        assert_eq!(round_half_up(97.525, 2), 97.53);
        assert_eq!(round_half_up(0.125 * 100.0, 1), 12.5);
    }

    #[test]
    fn report_csv_layout() {
        let scored = [
            (true, true, 0.9),
            (false, false, 0.2),
            (true, false, 0.4),
            (false, false, 0.1),
        ];
        let r = EvaluationReport::evaluate(&scored, "No", "Yes").unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("metric,class,value\nprecision,No,"));
        assert!(csv.contains("accuracy,all,0.75\n"));
        assert!(r.roc_csv().starts_with("fpr,tpr\n0,0\n"));
    }

    fn scored_strategy() -> impl Strategy<Value = Vec<(bool, f64)>> {
        prop::collection::vec((any::<bool>(), 0u8..20), 2..120)
            .prop_map(|v| v.into_iter().map(|(b, s)| (b, s as f64 / 19.0)).collect())
            .prop_filter("both classes", |v: &Vec<(bool, f64)>| {
                v.iter().any(|s| s.0) && v.iter().any(|s| !s.0)
            })
    }

    proptest! {
        #[test]
        fn roc_is_monotone(scored in scored_strategy()) {
            let r = roc_auc(&scored).unwrap();
            for w in r.points.windows(2) {
                prop_assert!(w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
            }
            prop_assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
        }

        #[test]
        fn auc_invariant_under_monotone_transform(scored in scored_strategy()) {
            let base = roc_auc(&scored).unwrap().auc;
            let transformed: Vec<_> = scored.iter().map(|&(b, s)| (b, (3.0 * s).exp() - 7.0)).collect();
            prop_assert!((roc_auc(&transformed).unwrap().auc - base).abs() < 1e-12);
        }

        #[test]
        fn macro_f1_between_class_f1s(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500) {
            let m = prf1(&ConfusionMatrix { tp, fp, tn, fn_ }, "n", "p");
            let lo = m.per_class[0].f1.min(m.per_class[1].f1);
            let hi = m.per_class[0].f1.max(m.per_class[1].f1);
            prop_assert!(lo <= m.macro_avg.f1 + 1e-15 && m.macro_avg.f1 <= hi + 1e-15);
        }
    }
}
