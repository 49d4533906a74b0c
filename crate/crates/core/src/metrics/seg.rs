use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{standardize_label, MetricError, SimilarityKernel};
use crate::labelmap::LabelMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegPair {
    pub pred: LabelMap,
    pub gt: LabelMap,
}

impl SegPair {
    pub fn new(pred: LabelMap, gt: LabelMap) -> Self {
        Self { pred, gt }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JaccardReport {
    /// Mean over ground-truth classes.
    pub mean: f64,
    pub per_class: BTreeMap<String, f64>,
}

fn check(batch: &[SegPair]) -> Result<(), MetricError> {
    if batch.is_empty() {
        return Err(MetricError::EmptyBatch);
    }
    for (item, p) in batch.iter().enumerate() {
        if p.pred.dims() != p.gt.dims() {
            return Err(MetricError::DimensionMismatch {
                item,
                pred: p.pred.dims(),
                gt: p.gt.dims(),
            });
        }
    }
    Ok(())
}

/// Standardized (pred, gt) label pairs of the non-ignored pixels of one item.
fn std_pixels(pair: &SegPair) -> Vec<(Option<String>, String)> {
    fn cached<'a>(memo: &mut BTreeMap<&'a str, String>, s: &'a str) -> String {
        memo.entry(s)
            .or_insert_with(|| standardize_label(s))
            .clone()
    }
    let mut memo = BTreeMap::new();
    let mut out = Vec::new();
    for (p, g) in pair.pred.pixels().zip(pair.gt.pixels()) {
        let Some(g) = g else { continue };
        let g = cached(&mut memo, g);
        out.push((p.map(|p| cached(&mut memo, p)), g));
    }
    out
}

/// Pixel co-occurrence counts `(pred, gt) -> n` over non-ignored pixels.
type Contingency = BTreeMap<(Option<String>, String), usize>;

fn contingency(pair: &SegPair) -> Contingency {
    let mut t = Contingency::new();
    for key in std_pixels(pair) {
        *t.entry(key).or_default() += 1;
    }
    t
}

fn prepare_kernel(
    tables: &[Contingency],
    kernel: &dyn SimilarityKernel,
) -> Result<(), MetricError> {
    let mut labels = BTreeSet::new();
    for t in tables {
        for (p, g) in t.keys() {
            if let Some(p) = p {
                labels.insert(p.as_str());
            }
            labels.insert(g.as_str());
        }
    }
    kernel.prepare(&labels.into_iter().collect::<Vec<_>>())
}

fn finish(inter: BTreeMap<String, f64>, union: &BTreeMap<String, f64>) -> JaccardReport {
    let per_class: BTreeMap<String, f64> = inter
        .into_iter()
        .map(|(c, i)| {
            let u = union[&c];
            (c, if u > 0.0 { i / u } else { 0.0 })
        })
        .collect();
    let mean = per_class.values().sum::<f64>() / per_class.len().max(1) as f64;
    JaccardReport { mean, per_class }
}

/// Jaccard index per ground-truth class, pooled over the batch and averaged
/// over classes. Hard mode counts exact label matches; soft mode credits each
/// ground-truth pixel with `kernel(pred, class)`.
pub fn segmentation_jaccard(
    batch: &[SegPair],
    mode: Mode,
    kernel: &dyn SimilarityKernel,
) -> Result<JaccardReport, MetricError> {
    check(batch)?;
    match mode {
        Mode::Hard => Ok(hard_jaccard(batch)),
        Mode::Soft => soft_jaccard(batch, kernel),
    }
}

fn hard_jaccard(batch: &[SegPair]) -> JaccardReport {
    let mut inter: BTreeMap<String, f64> = BTreeMap::new();
    let mut gt_px: BTreeMap<String, f64> = BTreeMap::new();
    let mut extra: BTreeMap<String, f64> = BTreeMap::new();
    for pair in batch {
        for (p, g) in std_pixels(pair) {
            *gt_px.entry(g.clone()).or_default() += 1.0;
            let hit = p.as_deref() == Some(g.as_str());
            *inter.entry(g).or_default() += hit as u8 as f64;
            if let (false, Some(p)) = (hit, p) {
                *extra.entry(p).or_default() += 1.0;
            }
        }
    }
    let union = gt_px
        .iter()
        .map(|(c, n)| (c.clone(), n + extra.get(c).copied().unwrap_or(0.0)))
        .collect();
    finish(inter, &union)
}

fn soft_jaccard(
    batch: &[SegPair],
    kernel: &dyn SimilarityKernel,
) -> Result<JaccardReport, MetricError> {
    let tables: Vec<Contingency> = batch.iter().map(contingency).collect();
    prepare_kernel(&tables, kernel)?;
    let mut inter: BTreeMap<String, f64> = BTreeMap::new();
    let mut union: BTreeMap<String, f64> = BTreeMap::new();
    let mut extra: BTreeMap<String, f64> = BTreeMap::new();
    for t in &tables {
        for ((p, g), &n) in t {
            *union.entry(g.clone()).or_default() += n as f64;
            let credit = match p {
                Some(p) => kernel.similarity(p, g)?,
                None => 0.0,
            };
            *inter.entry(g.clone()).or_default() += n as f64 * credit;
            if let Some(p) = p.as_ref().filter(|p| *p != g) {
                *extra.entry(p.clone()).or_default() += n as f64;
            }
        }
    }
    for (c, u) in union.iter_mut() {
        *u += extra.get(c).copied().unwrap_or(0.0);
    }
    Ok(finish(inter, &union))
}

/// Per item, the mean over its ground-truth classes of whether (hard) or how
/// closely (soft, best pixel) the class was predicted; averaged over items
/// that have at least one labeled pixel.
pub fn segmentation_recall(
    batch: &[SegPair],
    mode: Mode,
    kernel: &dyn SimilarityKernel,
) -> Result<f64, MetricError> {
    check(batch)?;
    let tables: Vec<Contingency> = batch.iter().map(contingency).collect();
    if mode == Mode::Soft {
        prepare_kernel(&tables, kernel)?;
    }
    let mut total = 0.0;
    let mut items = 0usize;
    for (pair, t) in batch.iter().zip(&tables) {
        let per_class: BTreeMap<String, f64> = match mode {
            Mode::Hard => {
                let mut found: BTreeMap<String, f64> = BTreeMap::new();
                for (p, g) in std_pixels(pair) {
                    let hit = p.as_deref() == Some(g.as_str());
                    let e = found.entry(g).or_default();
                    if hit {
                        *e = 1.0;
                    }
                }
                found
            }
            Mode::Soft => {
                let mut best: BTreeMap<String, f64> = BTreeMap::new();
                for (p, g) in t.keys() {
                    let s = match p {
                        Some(p) => kernel.similarity(p, g)?,
                        None => 0.0,
                    };
                    best.entry(g.clone())
                        .and_modify(|b| *b = b.max(s))
                        .or_insert(s);
                }
                best
            }
        };
        if per_class.is_empty() {
            continue;
        }
        total += per_class.values().sum::<f64>() / per_class.len() as f64;
        items += 1;
    }
    Ok(if items == 0 {
        0.0
    } else {
        total / items as f64
    })
}

/// Replaces every predicted label with the most similar of `gt_labels`
/// (ties go to the lexicographically smaller label).
pub fn remap_nearest(
    pred: &LabelMap,
    gt_labels: &[String],
    kernel: &dyn SimilarityKernel,
) -> Result<LabelMap, MetricError> {
    if gt_labels.is_empty() {
        return Err(MetricError::EmptyGtList);
    }
    let mut sorted: Vec<&str> = gt_labels.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let preds = pred.labels();
    let mut all = preds.clone();
    all.extend(&sorted);
    kernel.prepare(&all)?;
    let mut target: BTreeMap<&str, &str> = BTreeMap::new();
    for p in preds {
        let mut best: Option<(f64, &str)> = None;
        for &g in &sorted {
            let s = kernel.similarity(p, g)?;
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, g));
            }
        }
        target.insert(p, best.expect("gt list non-empty").1);
    }
    Ok(pred.map_labels(|l| target[l].to_string()))
}

/// Replaces every predicted label with the ground-truth label it overlaps
/// most (ties go to the lexicographically smaller label). Labels that only
/// cover ignored pixels are kept.
pub fn remap_overlap(pred: &LabelMap, gt: &LabelMap) -> Result<LabelMap, MetricError> {
    if pred.dims() != gt.dims() {
        return Err(MetricError::DimensionMismatch {
            item: 0,
            pred: pred.dims(),
            gt: gt.dims(),
        });
    }
    let mut co: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    for (p, g) in pred.pixels().zip(gt.pixels()) {
        if let (Some(p), Some(g)) = (p, g) {
            *co.entry(p).or_default().entry(g).or_default() += 1;
        }
    }
    let target: BTreeMap<&str, &str> = co
        .iter()
        .map(|(p, gs)| {
            // BTreeMap iterates in ascending label order, so the first maximum wins ties
            let (g, _) = gs.iter().fold(
                (None, 0),
                |(bg, bn), (g, n)| if *n > bn { (Some(*g), *n) } else { (bg, bn) },
            );
            (*p, g.expect("non-empty co-occurrence"))
        })
        .collect();
    Ok(pred.map_labels(|l| target.get(l).copied().unwrap_or(l).to_string()))
}
