use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::adversary::{AdvConfig, AttackOutcome, Class, Steganalyzer};
use crate::error::{Error, Result};
use crate::imageio::GrayImage;

/// Detection error: the mean of false-alarm and missed-detection rates.
pub fn compute_pe(p_fa: f64, p_md: f64) -> Result<f64> {
    for (name, v) in [("p_fa", p_fa), ("p_md", p_md)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
        }
    }
    Ok((p_fa + p_md) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionReport {
    /// Covers called stego.
    pub p_fa: f64,
    /// Stegos called cover.
    pub p_md: f64,
    pub p_e: f64,
    pub n_cover: usize,
    pub n_stego: usize,
}

impl DetectionReport {
    pub fn accuracy(&self) -> f64 {
        1.0 - self.p_e
    }
}

fn count_class<M: Steganalyzer + ?Sized>(model: &M, set: &[GrayImage], class: Class) -> Result<usize> {
    set.par_iter()
        .map(|img| model.classify(img).map(|c| usize::from(c == class)))
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().sum())
}

pub fn evaluate_classifier<M: Steganalyzer + ?Sized>(
    model: &M,
    covers: &[GrayImage],
    stegos: &[GrayImage],
) -> Result<DetectionReport> {
    if covers.is_empty() || stegos.is_empty() {
        return Err(Error::InvalidArgument("evaluation needs covers and stegos".into()));
    }
    let p_fa = count_class(model, covers, Class::Stego)? as f64 / covers.len() as f64;
    let p_md = count_class(model, stegos, Class::Cover)? as f64 / stegos.len() as f64;
    Ok(DetectionReport {
        p_fa,
        p_md,
        p_e: compute_pe(p_fa, p_md)?,
        n_cover: covers.len(),
        n_stego: stegos.len(),
    })
}

/// Intensities 0, dg, 2 dg, ... up to and including the first point at or
/// above `gamma_max`.
pub fn gamma_grid(cfg: &AdvConfig) -> Vec<f64> {
    (0..=cfg.steps() + 1).map(|k| k as f64 * cfg.delta_gamma).collect()
}

/// Percentage of all attempts that succeeded at intensity at most `gamma`,
/// for each point of `grid`.
pub fn gamma_cdf(outcomes: &[AttackOutcome], grid: &[f64]) -> Vec<(f64, f64)> {
    let mut used: Vec<f64> = outcomes.iter().filter_map(|o| o.gamma_used).collect();
    used.sort_by(f64::total_cmp);
    let total = outcomes.len().max(1) as f64;
    grid.iter()
        .map(|&g| {
            let n = used.partition_point(|&u| u <= g);
            (g, 100.0 * n as f64 / total)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackReport {
    pub total: usize,
    pub succeeded: usize,
    /// Percent.
    pub success_rate: f64,
    /// Successes per intensity step index (`gamma_used / delta_gamma`).
    pub gamma_histogram: BTreeMap<usize, usize>,
    pub min_seconds: f64,
    pub max_seconds: f64,
    pub mean_seconds: f64,
    /// Number of attacks per re-embedding count.
    pub reembed_counts: BTreeMap<usize, usize>,
}

impl AttackReport {
    /// `seconds[i]` is the wall time of `outcomes[i]`.
    pub fn new(outcomes: &[AttackOutcome], seconds: &[f64], delta_gamma: f64) -> Result<Self> {
        if outcomes.len() != seconds.len() {
            return Err(Error::LengthMismatch(format!(
                "{} outcomes with {} timings",
                outcomes.len(),
                seconds.len()
            )));
        }
        let succeeded = outcomes.iter().filter(|o| o.succeeded).count();
        let mut gamma_histogram = BTreeMap::new();
        let mut reembed_counts = BTreeMap::new();
        for o in outcomes {
            if let Some(g) = o.gamma_used {
                *gamma_histogram.entry((g / delta_gamma).round() as usize).or_insert(0) += 1;
            }
            *reembed_counts.entry(o.reembeds).or_insert(0) += 1;
        }
        let total = outcomes.len();
        let (min, max, sum) = seconds
            .iter()
            .fold((f64::INFINITY, 0.0f64, 0.0), |(lo, hi, s), &t| (lo.min(t), hi.max(t), s + t));
        Ok(Self {
            total,
            succeeded,
            success_rate: if total == 0 { 0.0 } else { 100.0 * succeeded as f64 / total as f64 },
            gamma_histogram,
            min_seconds: if total == 0 { 0.0 } else { min },
            max_seconds: max,
            mean_seconds: if total == 0 { 0.0 } else { sum / total as f64 },
            reembed_counts,
        })
    }
}

/// One-sided sign test: probability of at least `wins` successes in `trials`
/// fair coin flips.
pub fn sign_test_p(wins: usize, trials: usize) -> f64 {
    if wins == 0 {
        return 1.0;
    }
    let ln_half = (0.5f64).ln() * trials as f64;
    let mut ln_choose = 0.0; // ln C(trials, 0)
    let mut terms = Vec::with_capacity(trials + 1);
    for k in 0..=trials {
        if k > 0 {
            ln_choose += ((trials - k + 1) as f64).ln() - (k as f64).ln();
        }
        if k >= wins {
            terms.push(ln_choose + ln_half);
        }
    }
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()).exp().min(1.0)
}
