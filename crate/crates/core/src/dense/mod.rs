//! Dense labeling. An image is covered by square-ish patches at several grid
//! scales, each scale shifted by half a cell. Patch embeddings are averaged
//! into a `2 * max_scale` square feature map and every cell is classified.

mod regions;

use image::RgbImage;
use serde::Serialize;
use thiserror::Error;

use crate::classify::{Classifier, ClassifyError, Prediction};
use crate::embedding::{l2_normalize, Embedding, EmbeddingError};
use crate::labelmap::LabelMap;
use crate::provider::{EmbeddingProvider, ImageRef, ProviderError};

pub use regions::{
    embed_regions, label_regions, paint_regions, propose_vocabulary, Region, RegionShape,
};

pub const DEFAULT_SCALES: [u32; 3] = [2, 4, 8];

#[derive(Debug, Error)]
pub enum DenseError {
    #[error("image is {width}x{height}; at least {min}x{min} is needed")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
    #[error("expected {expected} patch embeddings, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("no regions given")]
    EmptyRegions,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("region {line}: {message}")]
    Region { line: usize, message: String },
    #[error("image: {0}")]
    Image(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Grid scales. Every scale `n` contributes a sliding `n`-by-`n` grid at half-cell stride.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    scales: Vec<u32>,
    half_stride: bool,
}

impl GridSpec {
    pub fn new(scales: &[u32]) -> Result<Self, DenseError> {
        if scales.is_empty() || scales.contains(&0) {
            return Err(DenseError::InvalidGrid(
                "scales must be non-empty and positive".into(),
            ));
        }
        let mut scales = scales.to_vec();
        scales.sort_unstable();
        scales.dedup();
        Ok(Self {
            scales,
            half_stride: true,
        })
    }

    /// Single-scale grid whose patches tile the image without overlap.
    pub fn tiled(n: u32) -> Result<Self, DenseError> {
        Ok(Self {
            half_stride: false,
            ..Self::new(&[n])?
        })
    }

    pub fn scales(&self) -> &[u32] {
        &self.scales
    }

    /// Side of the square feature map.
    pub fn map_cells(&self) -> u32 {
        2 * self.scales.last().copied().unwrap_or(1)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::new(&DEFAULT_SCALES).unwrap()
    }
}

/// Pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Patch {
    pub scale: u32,
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Patch {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 as f64 <= x && x < self.x1 as f64 && self.y0 as f64 <= y && y < self.y1 as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatchPlan {
    pub width: u32,
    pub height: u32,
    pub map_cells: u32,
    pub patches: Vec<Patch>,
}

/// Window positions `[a, b)` along one axis of length `len` for scale `n`.
fn windows(len: u32, n: u32, half_stride: bool) -> Vec<(u32, u32)> {
    let len = len as u64;
    let n = n as u64;
    if half_stride {
        (0..2 * n - 1)
            .map(|i| ((i * len / (2 * n)) as u32, ((i + 2) * len / (2 * n)) as u32))
            .collect()
    } else {
        (0..n)
            .map(|i| ((i * len / n) as u32, ((i + 1) * len / n) as u32))
            .collect()
    }
}

/// Patches in scale-major, then row-major order.
pub fn plan_patches(width: u32, height: u32, spec: &GridSpec) -> Result<PatchPlan, DenseError> {
    let m = spec.map_cells();
    if width < m || height < m {
        return Err(DenseError::ImageTooSmall {
            width,
            height,
            min: m,
        });
    }
    let mut patches = Vec::new();
    for &n in &spec.scales {
        let xs = windows(width, n, spec.half_stride);
        for &(y0, y1) in &windows(height, n, spec.half_stride) {
            for &(x0, x1) in &xs {
                patches.push(Patch {
                    scale: n,
                    x0,
                    y0,
                    x1,
                    y1,
                });
            }
        }
    }
    Ok(PatchPlan {
        width,
        height,
        map_cells: m,
        patches,
    })
}

impl PatchPlan {
    /// Center of map cell `(row, col)` in pixel coordinates.
    pub fn cell_center(&self, row: u32, col: u32) -> (f64, f64) {
        let m = self.map_cells as f64;
        (
            (col as f64 + 0.5) * self.width as f64 / m,
            (row as f64 + 0.5) * self.height as f64 / m,
        )
    }

    /// Number of patches containing each cell center, row-major.
    pub fn coverage(&self) -> Vec<u32> {
        self.cell_patches().iter().map(|v| v.len() as u32).collect()
    }

    fn cell_patches(&self) -> Vec<Vec<usize>> {
        let m = self.map_cells;
        let mut out = Vec::with_capacity((m * m) as usize);
        for r in 0..m {
            for c in 0..m {
                let (x, y) = self.cell_center(r, c);
                out.push(
                    self.patches
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| p.contains(x, y))
                        .map(|(i, _)| i)
                        .collect(),
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseFeatureMap {
    pub map_cells: u32,
    /// Row-major, unit norm.
    pub cells: Vec<Embedding>,
    pub counts: Vec<u32>,
}

impl DenseFeatureMap {
    pub fn cell(&self, row: u32, col: u32) -> &Embedding {
        &self.cells[(row * self.map_cells + col) as usize]
    }

    pub fn count(&self, row: u32, col: u32) -> u32 {
        self.counts[(row * self.map_cells + col) as usize]
    }
}

/// Averages the embeddings of the patches covering each cell center, then
/// normalizes.
pub fn accumulate_features(
    plan: &PatchPlan,
    patch_embeddings: &[Embedding],
) -> Result<DenseFeatureMap, DenseError> {
    if plan.patches.len() != patch_embeddings.len() {
        return Err(DenseError::LengthMismatch {
            expected: plan.patches.len(),
            actual: patch_embeddings.len(),
        });
    }
    let dim = patch_embeddings.first().map_or(0, Embedding::dim);
    if let Some(bad) = patch_embeddings.iter().find(|e| e.dim() != dim) {
        return Err(EmbeddingError::DimensionMismatch {
            expected: dim,
            actual: bad.dim(),
        }
        .into());
    }
    let mut cells = Vec::new();
    let mut counts = Vec::new();
    for members in plan.cell_patches() {
        assert!(!members.is_empty(), "every cell center lies in some patch");
        let mut acc = vec![0f64; dim];
        for &i in &members {
            for (a, v) in acc.iter_mut().zip(patch_embeddings[i].as_slice()) {
                *a += *v as f64;
            }
        }
        let n = members.len() as f64;
        let mean = Embedding::new(acc.into_iter().map(|a| (a / n) as f32).collect())?;
        cells.push(l2_normalize(&mean)?);
        counts.push(members.len() as u32);
    }
    Ok(DenseFeatureMap {
        map_cells: plan.map_cells,
        cells,
        counts,
    })
}

/// Crops every planned patch out of `image` as PNG bytes.
pub fn crop_patches(image: &RgbImage, plan: &PatchPlan) -> Result<Vec<ImageRef>, DenseError> {
    plan.patches
        .iter()
        .map(|p| {
            let crop =
                image::imageops::crop_imm(image, p.x0, p.y0, p.x1 - p.x0, p.y1 - p.y0).to_image();
            encode_png(&crop).map(ImageRef::Png)
        })
        .collect()
}

pub fn encode_png(image: &RgbImage) -> Result<Vec<u8>, DenseError> {
    let mut out = std::io::Cursor::new(Vec::new());
    image
        .write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| DenseError::Image(e.to_string()))?;
    Ok(out.into_inner())
}

/// Embeds every patch of `image` with one provider batch and accumulates.
pub fn dense_features(
    image: &RgbImage,
    spec: &GridSpec,
    provider: &dyn EmbeddingProvider,
) -> Result<DenseFeatureMap, DenseError> {
    let plan = plan_patches(image.width(), image.height(), spec)?;
    let crops = crop_patches(image, &plan)?;
    let embs = provider.embed_images(&crops)?;
    accumulate_features(&plan, &embs)
}

/// Cell labels of a dense map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentationMap {
    /// `cells[row][col]`
    pub cells: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<Vec<Prediction>>,
}

impl SegmentationMap {
    pub fn map_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn label(&self, row: usize, col: usize) -> &str {
        &self.cells[row][col]
    }

    pub fn to_label_map(&self) -> LabelMap {
        LabelMap::from_rows(&self.cells)
    }

    /// Nearest-cell upsampling to image resolution.
    pub fn upsample(&self, width: usize, height: usize) -> LabelMap {
        self.to_label_map().resize_nearest(width, height)
    }
}

/// Classifies every cell of a feature map.
pub fn segment_features(
    features: &DenseFeatureMap,
    classifier: &Classifier<'_>,
    keep_predictions: bool,
) -> Result<SegmentationMap, DenseError> {
    let preds = classifier.classify_batch(&features.cells)?;
    let m = features.map_cells as usize;
    let cells = preds
        .chunks(m)
        .map(|row| row.iter().map(|p| p.top1().to_string()).collect())
        .collect();
    Ok(SegmentationMap {
        cells,
        predictions: keep_predictions.then_some(preds),
    })
}

/// Full dense pipeline on an image.
pub fn segment_dense(
    image: &RgbImage,
    classifier: &Classifier<'_>,
    spec: &GridSpec,
) -> Result<SegmentationMap, DenseError> {
    let features = dense_features(image, spec, classifier.provider())?;
    segment_features(&features, classifier, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn patch_counts_per_scale() {
        let plan = plan_patches(256, 256, &GridSpec::new(&[2]).unwrap()).unwrap();
        assert_eq!(plan.patches.len(), 9);
        assert!(plan
            .patches
            .iter()
            .all(|p| p.x1 - p.x0 == 128 && p.y1 - p.y0 == 128));
        let plan = plan_patches(256, 256, &GridSpec::default()).unwrap();
        assert_eq!(plan.patches.len(), 9 + 49 + 225);
        assert!(plan
            .patches
            .iter()
            .all(|p| p.x1 <= 256 && p.y1 <= 256 && p.x0 < p.x1 && p.y0 < p.y1));
        assert!(matches!(
            plan_patches(8, 8, &GridSpec::default()),
            Err(DenseError::ImageTooSmall { min: 16, .. })
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(&[]).is_err());
        assert!(GridSpec::new(&[0, 2]).is_err());
        let g = GridSpec::new(&[8, 2, 4, 4]).unwrap();
        assert_eq!(g.scales(), &[2, 4, 8]);
        assert_eq!(g.map_cells(), 16);
    }

    #[test]
    fn center_cell_coverage() {
        let plan = plan_patches(256, 256, &GridSpec::default()).unwrap();
        // cell (8, 8) has center (136, 136). Per axis, windows containing it:
        // n=2: i*64 <= 136 < (i+2)*64 -> i in {1, 2}
        // n=4: i*32 <= 136 < (i+2)*32 -> i in {3, 4}
        // n=8: i*16 <= 136 < (i+2)*16 -> i in {7, 8}
        assert_eq!(plan.coverage()[8 * 16 + 8], 3 * 4);
        // corner cell: one window per axis at every scale
        assert_eq!(plan.coverage()[0], 3);
    }

    fn e(v: &[f32]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    #[test]
    fn constant_input_constant_map() {
        let plan = plan_patches(64, 48, &GridSpec::default()).unwrap();
        let v = e(&[3.0, 4.0]);
        let map = accumulate_features(&plan, &vec![v; plan.patches.len()]).unwrap();
        assert!(map.cells.iter().all(|c| c.as_slice() == [0.6, 0.8]));
        assert!(matches!(
            accumulate_features(&plan, &[]),
            Err(DenseError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn tiled_grid_assigns_one_patch_per_cell() {
        let plan = plan_patches(40, 40, &GridSpec::tiled(4).unwrap()).unwrap();
        assert_eq!(plan.patches.len(), 16);
        let embs: Vec<Embedding> = (0..16)
            .map(|i| e(&[(i as f32 + 1.0).cos(), (i as f32 + 1.0).sin()]))
            .collect();
        let map = accumulate_features(&plan, &embs).unwrap();
        assert!(map.counts.iter().all(|&c| c == 1));
        for r in 0..8 {
            for c in 0..8 {
                let want = &embs[((r / 2) * 4 + c / 2) as usize];
                assert!(
                    crate::embedding::cosine_similarity(map.cell(r, c), want).unwrap() > 1.0 - 1e-6
                );
            }
        }
    }

    proptest! {
        #[test]
        fn double_counting(w in 16u32..200, h in 16u32..200, scales in prop::collection::btree_set(1u32..6, 1..3)) {
            let spec = GridSpec::new(&scales.into_iter().collect::<Vec<_>>()).unwrap();
            prop_assume!(w >= spec.map_cells() && h >= spec.map_cells());
            let plan = plan_patches(w, h, &spec).unwrap();
            let cov: u32 = plan.coverage().iter().sum();
            let mut per_patch = 0u32;
            for p in &plan.patches {
                for r in 0..plan.map_cells {
                    for c in 0..plan.map_cells {
                        let (x, y) = plan.cell_center(r, c);
                        per_patch += p.contains(x, y) as u32;
                    }
                }
            }
            prop_assert_eq!(cov, per_patch);
            prop_assert!(plan.coverage().iter().all(|&c| c > 0));
        }

        #[test]
        fn accumulation_ignores_patch_order(seed in 0u64..1000) {
            use rand::{seq::SliceRandom, Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let plan = plan_patches(32, 32, &GridSpec::new(&[2, 4]).unwrap()).unwrap();
            let embs: Vec<Embedding> = (0..plan.patches.len())
                .map(|_| e(&[rng.gen_range(0.1..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]))
                .collect();
            let a = accumulate_features(&plan, &embs).unwrap();
            let mut order: Vec<usize> = (0..embs.len()).collect();
            order.shuffle(&mut rng);
            let shuffled = PatchPlan { patches: order.iter().map(|&i| plan.patches[i]).collect(), ..plan.clone() };
            let embs2: Vec<Embedding> = order.iter().map(|&i| embs[i].clone()).collect();
            let b = accumulate_features(&shuffled, &embs2).unwrap();
            prop_assert_eq!(&a.counts, &b.counts);
            for (x, y) in a.cells.iter().zip(&b.cells) {
                for (p, q) in x.as_slice().iter().zip(y.as_slice()) {
                    prop_assert!((p - q).abs() < 1e-6);
                }
            }
        }
    }
}
