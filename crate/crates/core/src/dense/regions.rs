//! Labeling externally proposed regions, and candidate-vocabulary proposal.

use std::path::{Path, PathBuf};

use image::{GrayImage, RgbImage};
use serde::Deserialize;

use super::{encode_png, DenseError};
use crate::candidates::FilterConfig;
use crate::classify::{Classifier, ClassifyError, Prediction};
use crate::embedding::Embedding;
use crate::labelmap::LabelMap;
use crate::provider::{EmbeddingProvider, ImageRef};
use crate::store::CaptionIndex;

#[derive(Debug, Clone, PartialEq)]
pub enum RegionShape {
    /// `[x0, y0, x1, y1)` in pixels.
    BBox([u32; 4]),
    /// Non-zero pixels of a single-channel PNG.
    Mask(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: u64,
    pub shape: RegionShape,
    pub embedding: Option<Embedding>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionLine {
    id: u64,
    #[serde(default)]
    bbox: Option<[u32; 4]>,
    #[serde(default)]
    mask_path: Option<PathBuf>,
    #[serde(default)]
    embedding: Option<Vec<f32>>,
}

impl Region {
    /// Parses JSON lines. Relative mask paths resolve against `base`.
    pub fn parse_jsonl(text: &str, base: Option<&Path>) -> Result<Vec<Region>, DenseError> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| DenseError::Region {
                line: i + 1,
                message,
            };
            let raw: RegionLine = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            let shape = match (raw.bbox, raw.mask_path) {
                (Some(b), None) => {
                    if b[0] >= b[2] || b[1] >= b[3] {
                        return Err(err(format!("empty bbox {b:?}")));
                    }
                    RegionShape::BBox(b)
                }
                (None, Some(p)) => RegionShape::Mask(match base {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p,
                }),
                _ => return Err(err("exactly one of bbox or mask_path is required".into())),
            };
            let embedding = raw
                .embedding
                .map(|v| Embedding::new(v).map_err(|e| err(e.to_string())))
                .transpose()?;
            out.push(Region {
                id: raw.id,
                shape,
                embedding,
            });
        }
        Ok(out)
    }

    pub fn mask(&self, width: u32, height: u32) -> Result<GrayImage, DenseError> {
        match &self.shape {
            RegionShape::BBox([x0, y0, x1, y1]) => {
                if *x1 > width || *y1 > height {
                    return Err(DenseError::Region {
                        line: 0,
                        message: format!("region {} bbox exceeds {width}x{height}", self.id),
                    });
                }
                Ok(GrayImage::from_fn(width, height, |x, y| {
                    image::Luma([(x >= *x0 && x < *x1 && y >= *y0 && y < *y1) as u8 * 255])
                }))
            }
            RegionShape::Mask(path) => {
                let m = image::open(path)
                    .map_err(|e| DenseError::Image(format!("{}: {e}", path.display())))?
                    .to_luma8();
                if m.dimensions() != (width, height) {
                    return Err(DenseError::Region {
                        line: 0,
                        message: format!(
                            "mask {} is {:?}, image is {width}x{height}",
                            path.display(),
                            m.dimensions()
                        ),
                    });
                }
                Ok(m)
            }
        }
    }

    /// Crop of the region's bounding box. Pixels outside the mask are filled
    /// with the mean color of the pixels inside it.
    pub fn crop(&self, image: &RgbImage) -> Result<RgbImage, DenseError> {
        let mask = self.mask(image.width(), image.height())?;
        let inside: Vec<(u32, u32)> = mask
            .enumerate_pixels()
            .filter(|(_, _, p)| p.0[0] > 0)
            .map(|(x, y, _)| (x, y))
            .collect();
        if inside.is_empty() {
            return Err(DenseError::Region {
                line: 0,
                message: format!("region {} is empty", self.id),
            });
        }
        let x0 = inside.iter().map(|p| p.0).min().unwrap();
        let x1 = inside.iter().map(|p| p.0).max().unwrap() + 1;
        let y0 = inside.iter().map(|p| p.1).min().unwrap();
        let y1 = inside.iter().map(|p| p.1).max().unwrap() + 1;
        let mut sum = [0u64; 3];
        for &(x, y) in &inside {
            let px = image.get_pixel(x, y).0;
            for c in 0..3 {
                sum[c] += px[c] as u64;
            }
        }
        let n = inside.len() as u64;
        let fill = image::Rgb([(sum[0] / n) as u8, (sum[1] / n) as u8, (sum[2] / n) as u8]);
        Ok(RgbImage::from_fn(x1 - x0, y1 - y0, |x, y| {
            if mask.get_pixel(x0 + x, y0 + y).0[0] > 0 {
                *image.get_pixel(x0 + x, y0 + y)
            } else {
                fill
            }
        }))
    }
}

/// Fills in missing region embeddings by cropping `image`.
pub fn embed_regions(
    regions: &mut [Region],
    image: Option<&RgbImage>,
    provider: &dyn EmbeddingProvider,
) -> Result<(), DenseError> {
    let missing: Vec<usize> = (0..regions.len())
        .filter(|&i| regions[i].embedding.is_none())
        .collect();
    if missing.is_empty() {
        return Ok(());
    }
    let image = image.ok_or_else(|| {
        DenseError::Image("regions without embeddings need the source image".into())
    })?;
    let crops = missing
        .iter()
        .map(|&i| {
            regions[i]
                .crop(image)
                .and_then(|c| encode_png(&c))
                .map(ImageRef::Png)
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (i, e) in missing.into_iter().zip(provider.embed_images(&crops)?) {
        regions[i].embedding = Some(e);
    }
    Ok(())
}

/// Classifies each region independently, preserving input order.
pub fn label_regions(
    regions: &[Region],
    classifier: &Classifier<'_>,
) -> Result<Vec<(u64, Prediction)>, DenseError> {
    if regions.is_empty() {
        return Err(DenseError::EmptyRegions);
    }
    let embs = regions
        .iter()
        .map(|r| {
            r.embedding.clone().ok_or_else(|| DenseError::Region {
                line: 0,
                message: format!("region {} has no embedding", r.id),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let preds = classifier.classify_batch(&embs)?;
    Ok(regions.iter().map(|r| r.id).zip(preds).collect())
}

/// Paints each region's top-1 label; later regions overwrite earlier ones.
/// Unpainted pixels are ignore pixels.
pub fn paint_regions(
    regions: &[Region],
    labels: &[(u64, Prediction)],
    width: u32,
    height: u32,
) -> Result<LabelMap, DenseError> {
    let mut grid: Vec<Option<&str>> = vec![None; (width * height) as usize];
    for (region, (_, pred)) in regions.iter().zip(labels) {
        let mask = region.mask(width, height)?;
        for (x, y, p) in mask.enumerate_pixels() {
            if p.0[0] > 0 {
                grid[(y * width + x) as usize] = Some(pred.top1());
            }
        }
    }
    Ok(LabelMap::from_fn(
        width as usize,
        height as usize,
        |x, y| grid[y * width as usize + x],
    ))
}

/// Unscored candidate names for an image, for handing to an external
/// open-vocabulary segmenter.
pub fn propose_vocabulary(
    image: &Embedding,
    index: &CaptionIndex,
    k: usize,
    filter: &FilterConfig,
) -> Result<Vec<String>, DenseError> {
    let retrieved = index.retrieve_topk(image, k).map_err(ClassifyError::from)?;
    let names = crate::candidates::extract_candidates(retrieved.texts(), filter)
        .map_err(ClassifyError::from)?
        .names();
    if names.is_empty() {
        return Err(ClassifyError::NoCandidates.into());
    }
    Ok(names)
}
