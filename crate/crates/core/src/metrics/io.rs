//! Prediction and ground-truth files, and dataset-level reports.
//!
//! Classification: CSV with header `id,prediction,ground_truth`.
//! Segmentation: two directories of label-map PNGs (see [`crate::labelmap`]),
//! paired by file name.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::seg::{
    remap_nearest, remap_overlap, segmentation_jaccard, segmentation_recall, Mode, SegPair,
};
use super::{
    cluster_accuracy, semantic_iou, standardize_label, ExactKernel, MetricError, MetricReport,
    SimilarityKernel,
};
use crate::labelmap::LabelMap;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRow {
    pub id: String,
    pub prediction: String,
    pub ground_truth: String,
}

pub fn read_classification_csv(path: &Path) -> Result<Vec<ClassRow>, MetricError> {
    let parse = |message: String| MetricError::Parse {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| parse(e.to_string()))?;
    let headers = reader.headers().map_err(|e| parse(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "prediction", "ground_truth"] {
        return Err(parse(format!(
            "expected header id,prediction,ground_truth, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<ClassRow>().enumerate() {
        let row = rec.map_err(|e| parse(e.to_string()))?;
        if row.prediction.trim().is_empty() || row.ground_truth.trim().is_empty() {
            return Err(parse(format!("row {}: empty label", i + 2)));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Cluster accuracy, mean semantic similarity and mean semantic IoU.
pub fn evaluate_classification(
    rows: &[ClassRow],
    kernel: &dyn SimilarityKernel,
) -> Result<MetricReport, MetricError> {
    if rows.is_empty() {
        return Err(MetricError::EmptyBatch);
    }
    let pairs: Vec<(&str, &str)> = rows
        .iter()
        .map(|r| (r.prediction.as_str(), r.ground_truth.as_str()))
        .collect();
    let labels: BTreeSet<&str> = pairs.iter().flat_map(|(p, g)| [*p, *g]).collect();
    kernel.prepare(&labels.into_iter().collect::<Vec<_>>())?;
    let mut sim = 0.0;
    let mut iou = 0.0;
    for (p, g) in &pairs {
        sim += kernel.similarity(p, g)?;
        iou += semantic_iou(p, g);
    }
    let n = rows.len() as f64;
    let mut report = MetricReport {
        task: "classification".into(),
        ..MetricReport::default()
    };
    report
        .metrics
        .insert("cluster_accuracy".into(), cluster_accuracy(&pairs)?);
    report.metrics.insert("semantic_similarity".into(), sim / n);
    report.metrics.insert("semantic_iou".into(), iou / n);
    report.counts.insert("samples".into(), rows.len());
    let distinct: BTreeSet<String> = pairs.iter().map(|(p, _)| standardize_label(p)).collect();
    report
        .counts
        .insert("distinct_predictions".into(), distinct.len());
    Ok(report)
}

/// Pairs every `*.png` in `gt_dir` with the same file name in `pred_dir`.
pub fn read_segmentation_dirs(
    pred_dir: &Path,
    gt_dir: &Path,
) -> Result<Vec<(String, SegPair)>, MetricError> {
    let io = |e: std::io::Error| MetricError::Parse {
        path: gt_dir.display().to_string(),
        message: e.to_string(),
    };
    let mut names: Vec<String> = std::fs::read_dir(gt_dir)
        .map_err(io)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.to_ascii_lowercase().ends_with(".png"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(MetricError::Parse {
            path: gt_dir.display().to_string(),
            message: "no PNG label maps".into(),
        });
    }
    names
        .into_iter()
        .map(|n| {
            let gt = LabelMap::read(&gt_dir.join(&n))?;
            let pred_path = pred_dir.join(&n);
            if !pred_path.exists() {
                return Err(MetricError::Parse {
                    path: pred_path.display().to_string(),
                    message: "missing prediction for ground-truth map".into(),
                });
            }
            let pred = LabelMap::read(&pred_path)?;
            Ok((n, SegPair::new(pred, gt)))
        })
        .collect()
}

/// HJI, SJI, NJI, OJI, HR and SR. `kernel` drives the soft metrics and the
/// nearest-label remapping.
pub fn evaluate_segmentation(
    batch: &[SegPair],
    kernel: &dyn SimilarityKernel,
) -> Result<MetricReport, MetricError> {
    let hji = segmentation_jaccard(batch, Mode::Hard, &ExactKernel)?;
    let sji = segmentation_jaccard(batch, Mode::Soft, kernel)?;
    let nearest: Vec<SegPair> = batch
        .iter()
        .map(|p| {
            let gt_labels: Vec<String> = p.gt.labels().into_iter().map(str::to_string).collect();
            if gt_labels.is_empty() {
                return Ok(p.clone());
            }
            Ok(SegPair::new(
                remap_nearest(&p.pred, &gt_labels, kernel)?,
                p.gt.clone(),
            ))
        })
        .collect::<Result<_, MetricError>>()?;
    let nji = segmentation_jaccard(&nearest, Mode::Hard, &ExactKernel)?;
    let overlap: Vec<SegPair> = batch
        .iter()
        .map(|p| Ok(SegPair::new(remap_overlap(&p.pred, &p.gt)?, p.gt.clone())))
        .collect::<Result<_, MetricError>>()?;
    let oji = segmentation_jaccard(&overlap, Mode::Hard, &ExactKernel)?;
    let hr = segmentation_recall(batch, Mode::Hard, &ExactKernel)?;
    let sr = segmentation_recall(batch, Mode::Soft, kernel)?;

    let mut report = MetricReport {
        task: "segmentation".into(),
        ..MetricReport::default()
    };
    for (name, v) in [
        ("hji", hji.mean),
        ("sji", sji.mean),
        ("nji", nji.mean),
        ("oji", oji.mean),
        ("hr", hr),
        ("sr", sr),
    ] {
        report.metrics.insert(name.into(), v);
    }
    let mut per_class: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (name, r) in [("hji", &hji), ("sji", &sji), ("nji", &nji), ("oji", &oji)] {
        for (c, v) in &r.per_class {
            per_class
                .entry(c.clone())
                .or_default()
                .insert(name.into(), *v);
        }
    }
    report.per_class = per_class;
    report.counts.insert("images".into(), batch.len());
    report.counts.insert("classes".into(), hji.per_class.len());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_identity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(&path, "id,prediction,ground_truth\n1,cat,cat\n2,golden retriever,golden retriever\n3,\"a, b\",\"a, b\"\n").unwrap();
        let rows = read_classification_csv(&path).unwrap();
        assert_eq!(rows.len(), 3);
        let r = evaluate_classification(&rows, &ExactKernel).unwrap();
        for m in ["cluster_accuracy", "semantic_similarity", "semantic_iou"] {
            assert_eq!(r.metrics[m], 1.0, "{m}");
        }

        std::fs::write(&path, "id,pred,gt\n1,a,b\n").unwrap();
        assert!(matches!(
            read_classification_csv(&path),
            Err(MetricError::Parse { .. })
        ));
        std::fs::write(&path, "id,prediction,ground_truth\n1,,b\n").unwrap();
        assert!(matches!(
            read_classification_csv(&path),
            Err(MetricError::Parse { .. })
        ));
    }

    #[test]
    fn segmentation_identity() {
        let dir = tempfile::tempdir().unwrap();
        let (pd, gd) = (dir.path().join("pred"), dir.path().join("gt"));
        std::fs::create_dir_all(&pd).unwrap();
        std::fs::create_dir_all(&gd).unwrap();
        let m = LabelMap::from_fn(6, 4, |x, y| {
            Some(if x < 3 {
                "cat"
            } else if y < 2 {
                "sky"
            } else {
                "dog"
            })
        });
        for d in [&pd, &gd] {
            m.write(&d.join("a.png")).unwrap();
        }
        let batch: Vec<SegPair> = read_segmentation_dirs(&pd, &gd)
            .unwrap()
            .into_iter()
            .map(|(_, p)| p)
            .collect();
        let r = evaluate_segmentation(&batch, &ExactKernel).unwrap();
        for k in ["hji", "sji", "nji", "oji", "hr", "sr"] {
            assert_eq!(r.metrics[k], 1.0, "{k}");
        }
        m.write(&gd.join("b.png")).unwrap();
        assert!(matches!(
            read_segmentation_dirs(&pd, &gd),
            Err(MetricError::Parse { .. })
        ));
    }
}
