//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criteria 1-3 run on the CSV named by `HYPERTENSION_CSV` when set, and on
//! the bundled synthetic stand-in otherwise.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use fedcba::config::ExperimentConfig;
use fedcba::dataset::{chi_square_p_value, chi_square_statistic};
use fedcba::ducba::merge;
use fedcba::fedsim::{run_single, run_sweep, spearman, SweepResult};
use fedcba::metrics::{roc_auc, ConfusionMatrix, EvaluationReport};
use fedcba::mining::{mine_cars, Fraction, MiningParams};
use fedcba::privacy::RRChannel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{approx, brute_force_cars, naive_merge, random_clients, random_dataset};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const BASELINE_TARGET: f64 = 0.97;
const BASELINE_BAND: f64 = 0.04;
const BASELINE_FLOOR: f64 = 0.90;
const RUNTIME_LIMIT: Duration = Duration::from_secs(120);
const RR_TARGET: f64 = 0.83;
const RR_BAND: f64 = 0.07;
const RR_MIN_DROP: f64 = 0.05;
const HIGH_EPS_GAP: f64 = 0.03;
const KEEP_RATE_TOL: f64 = 0.005;
const KEEP_RATE_DRAWS: usize = 200_000;
const LDP_REL_TOL: f64 = 1e-9;
const AUC_TOL: f64 = 1e-9;

struct Verdict {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn baseline_config(data: &Path, out: &Path, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        data_path: Some(data.to_path_buf()),
        output_dir: out.to_path_buf(),
        ..ExperimentConfig::default()
    };
    cfg.split.seed = seed;
    cfg.split.client_count = 3;
    cfg.split.train_fraction = 0.8;
    cfg.mining = MiningParams::new(0.02, 0.5).unwrap();
    cfg.rr = None;
    cfg
}

fn fmt_accs(xs: &[f64]) -> String {
    xs.iter()
        .map(|a| format!("{a:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn recall(report: &EvaluationReport, class: &str) -> f64 {
    report.class(class).expect("class present").recall
}

fn baseline(sweeps: &[SweepResult], runtime: Duration) -> Verdict {
    let accs: Vec<f64> = sweeps.iter().map(|s| s.baseline.accuracy).collect();
    let floor = accs.iter().all(|&a| a >= BASELINE_FLOOR);
    let band = accs
        .iter()
        .all(|&a| approx(a, BASELINE_TARGET, BASELINE_BAND));
    let fast = runtime < RUNTIME_LIMIT;
    Verdict {
        id: 1,
        title: "baseline reproduction",
        pass: floor && band && fast,
        detail: format!(
            "accuracy per seed [{}] (need >= {BASELINE_FLOOR}, {BASELINE_TARGET} +/- {BASELINE_BAND}); single run {:.1}s (limit {}s)",
            fmt_accs(&accs),
            runtime.as_secs_f64(),
            RUNTIME_LIMIT.as_secs()
        ),
    }
}

fn privacy_degradation(sweeps: &[SweepResult], cfg: &ExperimentConfig) -> Verdict {
    let at_one: Vec<&EvaluationReport> = sweeps
        .iter()
        .map(|s| {
            &s.per_epsilon
                .iter()
                .find(|p| p.epsilon == 1.0)
                .expect("epsilon 1 in grid")
                .report
        })
        .collect();
    let accs: Vec<f64> = at_one.iter().map(|r| r.accuracy).collect();
    let drops: Vec<f64> = sweeps
        .iter()
        .zip(&accs)
        .map(|(s, a)| s.baseline.accuracy - a)
        .collect();
    let asymmetric = at_one
        .iter()
        .filter(|r| recall(r, &cfg.negative_name) < recall(r, &cfg.positive_name))
        .count();
    let pass = drops.iter().all(|&d| d >= RR_MIN_DROP)
        && accs.iter().all(|&a| approx(a, RR_TARGET, RR_BAND))
        && asymmetric >= 4;
    Verdict {
        id: 2,
        title: "privacy degradation at epsilon 1",
        pass,
        detail: format!(
            "accuracy [{}] ({RR_TARGET} +/- {RR_BAND}); drop [{}] (need >= {RR_MIN_DROP}); recall(neg) < recall(pos) in {asymmetric}/5 (need 4)",
            fmt_accs(&accs),
            fmt_accs(&drops)
        ),
    }
}

fn sweep_trend(sweeps: &[SweepResult]) -> Verdict {
    let rhos: Vec<f64> = sweeps
        .iter()
        .map(|s| {
            let (e, a): (Vec<f64>, Vec<f64>) = s.accuracies().into_iter().unzip();
            spearman(&e, &a)
        })
        .collect();
    let positive = rhos.iter().filter(|&&r| r > 0.0).count();
    let gaps: Vec<f64> = sweeps
        .iter()
        .map(|s| {
            let top = s
                .per_epsilon
                .iter()
                .find(|p| p.epsilon == 5.0)
                .expect("epsilon 5 in grid");
            (top.report.accuracy - s.baseline.accuracy).abs()
        })
        .collect();
    let low_mean = sweeps
        .iter()
        .map(|s| {
            s.per_epsilon
                .iter()
                .find(|p| p.epsilon == 0.1)
                .unwrap()
                .report
                .accuracy
        })
        .sum::<f64>()
        / sweeps.len() as f64;
    let base_mean = sweeps.iter().map(|s| s.baseline.accuracy).sum::<f64>() / sweeps.len() as f64;
    let pass = positive >= 4 && gaps.iter().all(|&g| g <= HIGH_EPS_GAP) && low_mean < base_mean;
    Verdict {
        id: 3,
        title: "sweep trend",
        pass,
        detail: format!(
            "spearman [{}] positive in {positive}/5 (need 4); |acc(5) - baseline| [{}] (limit {HIGH_EPS_GAP}); mean acc at 0.1 {low_mean:.4} vs baseline {base_mean:.4}",
            fmt_accs(&rhos),
            fmt_accs(&gaps)
        ),
    }
}

fn krr() -> Verdict {
    let mut worst_rate = 0.0f64;
    let mut worst_ratio = 0.0f64;
    let mut worst_formula = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (eps, k) in [(0.5, 2usize), (1.0, 2), (1.0, 4), (2.0, 8)] {
        let ch = RRChannel::new(k, eps).unwrap();
        let expected = eps.exp() / (eps.exp() + k as f64 - 1.0);
        worst_formula = worst_formula.max((ch.keep_prob - expected).abs());
        let kept = (0..KEEP_RATE_DRAWS)
            .filter(|_| {
                let truth = rng.gen_range(0..k) as u16;
                ch.perturb(truth, &mut rng) == truth
            })
            .count();
        worst_rate = worst_rate.max((kept as f64 / KEEP_RATE_DRAWS as f64 - expected).abs());
        let m = ch.matrix();
        for col in 0..k {
            let vals: Vec<f64> = m.iter().map(|row| row[col]).collect();
            let hi = vals.iter().copied().fold(f64::MIN, f64::max);
            let lo = vals.iter().copied().fold(f64::MAX, f64::min);
            worst_ratio = worst_ratio.max(((hi / lo) / eps.exp() - 1.0).abs());
        }
    }
    Verdict {
        id: 4,
        title: "k-RR statistical correctness",
        pass: worst_rate <= KEEP_RATE_TOL && worst_ratio <= LDP_REL_TOL && worst_formula < 1e-12,
        detail: format!(
            "max |empirical keep - e^eps/(e^eps+k-1)| {worst_rate:.5} over {KEEP_RATE_DRAWS} draws (limit {KEEP_RATE_TOL}); max relative p/q error {worst_ratio:.2e} (limit {LDP_REL_TOL:.0e})"
        ),
    }
}

fn mining_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    let mut rules = 0;
    for _ in 0..50 {
        let ds = random_dataset(&mut rng, 12, 200);
        let params = MiningParams {
            min_support: Fraction::new(rng.gen_range(1..=25), 100),
            min_confidence: Fraction::new(rng.gen_range(1..=20), 20),
            max_antecedent_len: None,
        };
        let mined: BTreeSet<_> = mine_cars(&ds, &params)
            .unwrap()
            .into_iter()
            .map(|r| {
                let c = r.counts.unwrap();
                (r.antecedent, r.label, c.rule, c.antecedent)
            })
            .collect();
        let oracle = brute_force_cars(&ds, params.min_support, params.min_confidence);
        rules += oracle.len();
        mismatches += usize::from(mined != oracle);
    }
    Verdict {
        id: 5,
        title: "mining oracle",
        pass: mismatches == 0,
        detail: format!(
            "{mismatches}/50 datasets differ from brute-force enumeration ({rules} rules compared)"
        ),
    }
}

fn merge_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    for _ in 0..100 {
        let clients = random_clients(&mut rng, 4, 10, false);
        let merged = merge(&clients).unwrap();
        let (want, class, conf) = naive_merge(&clients);
        let same = merged.model.rules.len() == want.len()
            && merged
                .model
                .rules
                .iter()
                .zip(&merged.provenance)
                .zip(&want)
                .all(|((g, p), w)| {
                    g.antecedent == w.antecedent
                        && g.label == w.label
                        && g.order == w.arrival
                        && approx(g.support, w.support, 1e-12)
                        && approx(g.confidence, w.confidence, 1e-12)
                        && *p == w.clients
                })
            && merged.model.default_class == class
            && approx(merged.model.default_confidence, conf, 1e-12);
        mismatches += usize::from(!same);
    }
    let mut broken = 0;
    for _ in 0..100 {
        let mut one = random_clients(&mut rng, 1, 10, false);
        one.truncate(1);
        // CBA output never repeats an antecedent
        let mut seen = BTreeSet::new();
        one[0]
            .model
            .rules
            .retain(|r| seen.insert(r.antecedent.clone()));
        let merged = merge(&one).unwrap();
        let key = |r: &fedcba::mining::ClassAssociationRule| {
            (
                r.antecedent.clone(),
                r.label,
                r.support.to_bits(),
                r.confidence.to_bits(),
            )
        };
        let a: BTreeSet<_> = merged.model.rules.iter().map(key).collect();
        let b: BTreeSet<_> = one[0].model.rules.iter().map(key).collect();
        broken += usize::from(
            a != b || merged.model.default_confidence != one[0].model.default_confidence,
        );
    }
    Verdict {
        id: 6,
        title: "merge oracle",
        pass: mismatches == 0 && broken == 0,
        detail: format!("{mismatches}/100 instances differ from the naive reference; {broken}/100 single-client merges not exact"),
    }
}

fn metrics_golden() -> Verdict {
    let cm = ConfusionMatrix {
        tn: 2284,
        tp: 2799,
        fp: 114,
        fn_: 15,
    };
    let mut scored = Vec::new();
    scored.extend(std::iter::repeat_n((true, true, 0.9), cm.tp as usize));
    scored.extend(std::iter::repeat_n((false, true, 0.9), cm.fp as usize));
    scored.extend(std::iter::repeat_n((false, false, 0.1), cm.tn as usize));
    scored.extend(std::iter::repeat_n((true, false, 0.1), cm.fn_ as usize));
    let report = EvaluationReport::evaluate(&scored, "No Hypertension", "Hypertension").unwrap();
    let accuracy_pct = fedcba::metrics::round_half_up(100.0 * report.accuracy, 2);
    // precision / recall / F1 of the reference table; its accuracy column
    // (97) is checked at two decimals instead, since 97.52 rounds to 98
    let table2 = [
        ("No Hypertension", [99.0, 95.0, 97.0]),
        ("Hypertension", [96.0, 99.0, 98.0]),
        ("Macro Average", [98.0, 97.0, 98.0]),
    ];
    let rows = report.table(0);
    let shape_ok = rows.len() == 3
        && rows
            .iter()
            .zip(&table2)
            .all(|(r, (label, v))| r.label == *label && [r.precision, r.recall, r.f1] == *v)
        && report.table(2).iter().all(|r| r.accuracy == 97.52);
    let rendered = report.render_table(2);
    let format_ok = rendered.lines().skip(1).all(|l| {
        l.split_whitespace()
            .rev()
            .take(4)
            .all(|x| x.len() >= 4 && x.as_bytes()[x.len() - 3] == b'.')
    });

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..300);
        let levels = rng.gen_range(2..40);
        let mut pts: Vec<(bool, f64)> = (0..n)
            .map(|_| {
                (
                    rng.gen_bool(0.5),
                    rng.gen_range(0..levels) as f64 / levels as f64,
                )
            })
            .collect();
        pts[0].0 = true;
        pts[1].0 = false;
        let roc = roc_auc(&pts).unwrap();
        // independent pairwise count, ties counting one half
        let (mut wins, mut pairs) = (0.0, 0.0);
        for p in pts.iter().filter(|p| p.0) {
            for q in pts.iter().filter(|q| !q.0) {
                pairs += 1.0;
                wins += if p.1 > q.1 {
                    1.0
                } else if p.1 == q.1 {
                    0.5
                } else {
                    0.0
                };
            }
        }
        worst = worst
            .max((roc.auc - wins / pairs).abs())
            .max((roc.auc - roc.auc_pairwise).abs());
    }
    Verdict {
        id: 7,
        title: "metrics golden test",
        pass: accuracy_pct == 97.52 && shape_ok && format_ok && worst <= AUC_TOL,
        detail: format!(
            "accuracy {accuracy_pct:.2}% (want 97.52); rows match the reference precision/recall/F1 at integer rounding: {shape_ok}; two-decimal layout: {format_ok}; max |trapezoid - pairwise| AUC {worst:.1e} (limit {AUC_TOL:.0e})"
        ),
    }
}

fn chi_square() -> Verdict {
    let stat = chi_square_statistic(&[vec![10, 20], vec![30, 40]]).unwrap();
    let p = chi_square_p_value(3.841, 1);
    Verdict {
        id: 8,
        title: "chi-square",
        pass: approx(stat.statistic, 0.79365, 1e-4) && stat.dof == 1 && approx(p, 0.05, 5e-4),
        detail: format!("statistic {:.5} dof {} (want 0.79365 +/- 1e-4); p(3.841, 1) = {p:.5} (want 0.05 +/- 5e-4)", stat.statistic, stat.dof),
    }
}

fn determinism(data: &Path, work: &Path) -> Verdict {
    let conf = work.join("determinism.conf");
    std::fs::write(
        &conf,
        format!(
            "data.path = {}\noutput.dir = {}\n",
            data.display(),
            work.join("det-out").display()
        ),
    )
    .unwrap();
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let status = Command::new(env!("CARGO_BIN_EXE_fedcba"))
            .args(["sweep", "--config"])
            .arg(&conf)
            .output()
            .unwrap()
            .status;
        assert!(status.success(), "sweep invocation failed");
        let read = |f: &str| std::fs::read(work.join("det-out").join(f)).unwrap();
        snapshots.push((read("sweep.csv"), read("sweep.json")));
        std::fs::remove_dir_all(work.join("det-out")).unwrap();
    }
    let same = snapshots[0] == snapshots[1];
    Verdict {
        id: 9,
        title: "determinism",
        pass: same,
        detail: format!(
            "two sweep invocations: sweep.csv {} bytes, sweep.json {} bytes, identical: {same}",
            snapshots[0].0.len(),
            snapshots[0].1.len()
        ),
    }
}

fn main() {
    let data = common::hypertension_csv();
    let work = tempfile::tempdir().unwrap();
    let source = if std::env::var_os("HYPERTENSION_CSV").is_some() {
        "real"
    } else {
        "synthetic"
    };
    println!("acceptance suite on {source} data: {}", data.display());

    let started = Instant::now();
    let cfg = baseline_config(&data, &work.path().join("single"), SEEDS[0]);
    run_single(&cfg, None).unwrap();
    let runtime = started.elapsed();

    let sweeps: Vec<SweepResult> = SEEDS
        .iter()
        .map(|&seed| {
            let cfg = baseline_config(&data, &work.path().join(format!("sweep-{seed}")), seed);
            run_sweep(&cfg).unwrap()
        })
        .collect();

    let verdicts = [
        baseline(&sweeps, runtime),
        privacy_degradation(&sweeps, &cfg),
        sweep_trend(&sweeps),
        krr(),
        mining_oracle(),
        merge_oracle(),
        metrics_golden(),
        chi_square(),
        determinism(&data, work.path()),
    ];
    for v in &verdicts {
        println!(
            "{} [{}] {}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.id,
            v.title,
            v.detail
        );
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        verdicts.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
