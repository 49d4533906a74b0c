//! On-disk index directory:
//!
//! ```text
//! meta.json         kind, dim, count, params, format version
//! embeddings.vfeb   caption embeddings
//! captions.txt      caption texts, one per line
//! centroids.vfeb    IVF coarse centroids (IVF indexes only)
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::index::{validate_ivf, IvfLists};
use super::{
    read_captions, vfeb, write_captions, CaptionIndex, CaptionStore, IndexKind, IvfParams,
    StoreError,
};

pub const INDEX_FORMAT_VERSION: u32 = 1;

const META: &str = "meta.json";
const EMBEDDINGS: &str = "embeddings.vfeb";
const CAPTIONS: &str = "captions.txt";
const CENTROIDS: &str = "centroids.vfeb";

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    format_version: u32,
    kind: IndexKind,
    dim: usize,
    count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<IvfParams>,
}

impl CaptionIndex {
    pub fn save(&self, dir: &Path) -> Result<(), StoreError> {
        fs::create_dir_all(dir)?;
        let store = self.store();
        vfeb::write_file(&dir.join(EMBEDDINGS), store.embeddings())?;
        write_captions(&dir.join(CAPTIONS), store.texts())?;
        if let Some(ivf) = self.ivf() {
            let m = vfeb::EmbeddingMatrix::new(store.dim(), ivf.centroids.clone())?;
            vfeb::write_file(&dir.join(CENTROIDS), &m)?;
        }
        let meta = Meta {
            format_version: INDEX_FORMAT_VERSION,
            kind: self.kind(),
            dim: store.dim(),
            count: store.len(),
            params: self.ivf_params(),
        };
        let json =
            serde_json::to_string_pretty(&meta).map_err(|e| StoreError::Format(e.to_string()))?;
        fs::write(dir.join(META), json)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, StoreError> {
        let raw = fs::read_to_string(dir.join(META))?;
        let value: serde_json::Value = serde_json::from_str(&raw)
            .map_err(|e| StoreError::Format(format!("meta.json: {e}")))?;
        // check the version before the rest of the schema so newer layouts
        // report a version error rather than a parse error
        let found = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| StoreError::Format("meta.json: missing format_version".into()))?;
        if found > INDEX_FORMAT_VERSION as u64 {
            return Err(StoreError::Version {
                found: found.min(u32::MAX as u64) as u32,
                supported: INDEX_FORMAT_VERSION,
            });
        }
        let meta: Meta = serde_json::from_value(value)
            .map_err(|e| StoreError::Format(format!("meta.json: {e}")))?;

        let embeddings = vfeb::read_file(&dir.join(EMBEDDINGS))?;
        let texts = read_captions(&dir.join(CAPTIONS))?;
        let store = CaptionStore::from_parts(texts, embeddings)?;
        if store.dim() != meta.dim || store.len() != meta.count {
            return Err(StoreError::Format(format!(
                "meta.json declares {}x{}, files hold {}x{}",
                meta.count,
                meta.dim,
                store.len(),
                store.dim()
            )));
        }
        if store.is_empty() {
            return Err(StoreError::EmptyStore);
        }
        let ivf = match meta.kind {
            IndexKind::ExactFlat => None,
            IndexKind::QuantizedIvf => {
                let params = meta
                    .params
                    .ok_or_else(|| StoreError::Format("IVF index without params".into()))?;
                validate_ivf(&params, store.len())?;
                let c = vfeb::read_file(&dir.join(CENTROIDS))?;
                if c.dim != store.dim() || c.count != params.n_lists {
                    return Err(StoreError::Format(
                        "centroid file does not match params".into(),
                    ));
                }
                Some(IvfLists::from_centroids(&store, params, c.data))
            }
        };
        Ok(CaptionIndex::from_loaded(store, ivf))
    }
}
