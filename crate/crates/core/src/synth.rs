//! Synthetic stand-in for the hypertension CSV.
//!
//! Produces the same 14 columns with 26,083 rows (14,274 with `target = 1`,
//! 11,809 with `target = 0`). Records are noisy copies of a few dozen
//! patient prototypes whose clinical attributes depend on the class, the way
//! the public file repeats a small pool of patient profiles. `age` and `sex`
//! are drawn per record independently of the class.

use std::fmt::Write as _;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::{self, Stream};
use crate::{Error, Result};

pub const HEADER: &str =
    "age,sex,cp,trestbps,chol,fbs,restecg,thalach,exang,oldpeak,slope,ca,thal,target";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub positives: usize,
    pub negatives: usize,
    /// Distinct patient prototypes per class.
    pub prototypes_per_class: usize,
    /// Per-attribute probability of replacing a prototype value with a
    /// class-independent draw.
    pub attribute_noise: f64,
    /// Probability of flipping the record's class.
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            positives: 14_274,
            negatives: 11_809,
            prototypes_per_class: 24,
            attribute_noise: 0.04,
            label_noise: 0.02,
            seed: 2025,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Profile {
    cp: u8,
    trestbps: u32,
    chol: u32,
    fbs: u8,
    restecg: u8,
    thalach: u32,
    exang: u8,
    oldpeak: f64,
    slope: u8,
    ca: u8,
    thal: u8,
}

fn pick<R: Rng>(rng: &mut R, weights: &[f64]) -> u8 {
    WeightedIndex::new(weights)
        .expect("valid weights")
        .sample(rng) as u8
}

fn normal<R: Rng>(rng: &mut R, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
    (mean + sd * z).clamp(lo, hi)
}

/// Class-conditional draw; `None` draws from the pooled marginal.
fn draw_profile<R: Rng>(rng: &mut R, positive: Option<bool>) -> Profile {
    let positive = positive.unwrap_or_else(|| rng.gen_bool(0.5));
    if positive {
        Profile {
            cp: pick(rng, &[0.25, 0.25, 0.4, 0.1]),
            trestbps: normal(rng, 129.0, 16.0, 94.0, 200.0).round() as u32,
            chol: normal(rng, 242.0, 53.0, 126.0, 564.0).round() as u32,
            fbs: pick(rng, &[0.86, 0.14]),
            restecg: pick(rng, &[0.4, 0.58, 0.02]),
            thalach: normal(rng, 158.0, 19.0, 71.0, 202.0).round() as u32,
            exang: pick(rng, &[0.86, 0.14]),
            oldpeak: (normal(rng, 0.6, 0.8, 0.0, 6.2) * 10.0).round() / 10.0,
            slope: pick(rng, &[0.05, 0.3, 0.65]),
            ca: pick(rng, &[0.8, 0.1, 0.05, 0.03, 0.02]),
            thal: pick(rng, &[0.01, 0.05, 0.8, 0.14]),
        }
    } else {
        Profile {
            cp: pick(rng, &[0.75, 0.08, 0.12, 0.05]),
            trestbps: normal(rng, 134.0, 19.0, 94.0, 200.0).round() as u32,
            chol: normal(rng, 251.0, 49.0, 126.0, 564.0).round() as u32,
            fbs: pick(rng, &[0.84, 0.16]),
            restecg: pick(rng, &[0.57, 0.4, 0.03]),
            thalach: normal(rng, 139.0, 22.0, 71.0, 202.0).round() as u32,
            exang: pick(rng, &[0.45, 0.55]),
            oldpeak: (normal(rng, 1.6, 1.3, 0.0, 6.2) * 10.0).round() / 10.0,
            slope: pick(rng, &[0.09, 0.66, 0.25]),
            ca: pick(rng, &[0.33, 0.32, 0.2, 0.13, 0.02]),
            thal: pick(rng, &[0.01, 0.09, 0.26, 0.64]),
        }
    }
}

fn noisy_copy<R: Rng>(rng: &mut R, p: &Profile, noise: f64) -> Profile {
    let fresh = draw_profile(rng, None);
    let mut out = *p;
    macro_rules! maybe {
        ($($f:ident),*) => {$(
            if rng.gen_bool(noise) {
                out.$f = fresh.$f;
            }
        )*};
    }
    maybe!(cp, trestbps, chol, fbs, restecg, thalach, exang, oldpeak, slope, ca, thal);
    out
}

/// CSV text, header first.
pub fn generate(spec: &SynthSpec) -> String {
    let mut rng = rng::stream(spec.seed, Stream::Synth);
    let k = spec.prototypes_per_class.max(1);
    let pos_protos: Vec<Profile> = (0..k).map(|_| draw_profile(&mut rng, Some(true))).collect();
    let neg_protos: Vec<Profile> = (0..k)
        .map(|_| draw_profile(&mut rng, Some(false)))
        .collect();

    let mut labels: Vec<bool> = std::iter::repeat_n(true, spec.positives)
        .chain(std::iter::repeat_n(false, spec.negatives))
        .collect();
    labels.shuffle(&mut rng);

    let mut out = String::with_capacity(48 * labels.len());
    out.push_str(HEADER);
    out.push('\n');
    for &positive in &labels {
        // label noise: attributes come from a prototype of the other class
        let mislabeled = rng.gen_bool(spec.label_noise);
        let pool = if positive != mislabeled {
            &pos_protos
        } else {
            &neg_protos
        };
        let proto = pool[rng.gen_range(0..pool.len())];
        let p = noisy_copy(&mut rng, &proto, spec.attribute_noise);
        let age: u32 = rng.gen_range(29..=77);
        let sex: u8 = pick(&mut rng, &[0.32, 0.68]);
        writeln!(
            out,
            "{age},{sex},{},{},{},{},{},{},{},{:.1},{},{},{},{}",
            p.cp,
            p.trestbps,
            p.chol,
            p.fbs,
            p.restecg,
            p.thalach,
            p.exang,
            p.oldpeak,
            p.slope,
            p.ca,
            p.thal,
            u8::from(positive)
        )
        .unwrap();
    }
    out
}

pub fn write_csv(path: impl AsRef<Path>, spec: &SynthSpec) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, generate(spec)).map_err(|e| Error::io(path, e))
}
