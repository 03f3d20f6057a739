//! Overlap scores of a predicted label map against ground truth.

use crate::image::LabelMap;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("label maps differ in size: {pred_w}x{pred_h} vs {truth_w}x{truth_h}")]
    DimensionMismatch {
        pred_w: usize,
        pred_h: usize,
        truth_w: usize,
        truth_h: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectMatch {
    pub pred_id: u32,
    pub truth_id: u32,
    pub iou: f64,
    pub dice: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    /// Sum of matched IoUs over the number of truth objects (1 if both maps are empty).
    pub mean_iou: f64,
    pub objects: Vec<ObjectMatch>,
    pub missed: usize,
    pub spurious: usize,
}

impl MetricsReport {
    pub fn matched(&self) -> usize {
        self.objects.len()
    }
}

/// Greedy one-to-one matching by descending IoU (ties: lower predicted id,
/// then lower truth id). Pairs that do not overlap are never matched.
pub fn evaluate(pred: &LabelMap, truth: &LabelMap) -> Result<MetricsReport, MetricsError> {
    if pred.width() != truth.width() || pred.height() != truth.height() {
        return Err(MetricsError::DimensionMismatch {
            pred_w: pred.width(),
            pred_h: pred.height(),
            truth_w: truth.width(),
            truth_h: truth.height(),
        });
    }
    let mut pred_area: BTreeMap<u32, u64> = BTreeMap::new();
    let mut truth_area: BTreeMap<u32, u64> = BTreeMap::new();
    let mut overlap: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
        if p > 0 {
            *pred_area.entry(p).or_default() += 1;
        }
        if t > 0 {
            *truth_area.entry(t).or_default() += 1;
        }
        if p > 0 && t > 0 {
            *overlap.entry((p, t)).or_default() += 1;
        }
    }
    let mut pairs: Vec<(u32, u32, u64, u64)> = overlap
        .iter()
        .map(|(&(p, t), &i)| (p, t, i, pred_area[&p] + truth_area[&t] - i))
        .collect();
    // iou_a > iou_b  <=>  i_a * u_b > i_b * u_a
    pairs.sort_by(|a, b| {
        (u128::from(b.2) * u128::from(a.3))
            .cmp(&(u128::from(a.2) * u128::from(b.3)))
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut used_pred = std::collections::HashSet::new();
    let mut used_truth = std::collections::HashSet::new();
    let mut objects = Vec::new();
    for (p, t, inter, union) in pairs {
        if used_pred.contains(&p) || used_truth.contains(&t) {
            continue;
        }
        used_pred.insert(p);
        used_truth.insert(t);
        let dice = 2.0 * inter as f64 / (pred_area[&p] + truth_area[&t]) as f64;
        objects.push(ObjectMatch {
            pred_id: p,
            truth_id: t,
            iou: inter as f64 / union as f64,
            dice,
        });
    }
    objects.sort_by_key(|m| m.truth_id);
    let mean_iou = if truth_area.is_empty() {
        if pred_area.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        objects.iter().map(|m| m.iou).sum::<f64>() / truth_area.len() as f64
    };
    Ok(MetricsReport {
        mean_iou,
        missed: truth_area.len() - objects.len(),
        spurious: pred_area.len() - objects.len(),
        objects,
    })
}

/// Fraction of foreground truth pixels covered by predicted objects that
/// mostly consist of foreground, i.e. whose share of foreground pixels is at
/// least `min_precision`. A single object swallowing the truth together with
/// a large surround covers nothing.
pub fn precise_recall(pred: &LabelMap, truth: &LabelMap, min_precision: f64) -> Result<f64, MetricsError> {
    if pred.width() != truth.width() || pred.height() != truth.height() {
        return Err(MetricsError::DimensionMismatch {
            pred_w: pred.width(),
            pred_h: pred.height(),
            truth_w: truth.width(),
            truth_h: truth.height(),
        });
    }
    let mut area: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    let mut truth_total = 0u64;
    for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
        truth_total += u64::from(t > 0);
        if p > 0 {
            let e = area.entry(p).or_default();
            e.0 += 1;
            e.1 += u64::from(t > 0);
        }
    }
    if truth_total == 0 {
        return Ok(1.0);
    }
    let covered: u64 = area
        .values()
        .filter(|&&(n, hit)| hit as f64 >= min_precision * n as f64)
        .map(|&(_, hit)| hit)
        .sum();
    Ok(covered as f64 / truth_total as f64)
}
