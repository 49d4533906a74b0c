//! Reader and writer for the VFEB binary embedding matrix.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "VFEB"
//! 4       4     version (u32, = 1)
//! 8       4     dim (u32)
//! 12      8     count (u64)
//! 20      1     dtype (u8, 0 = f32)
//! 21      7     reserved, zero
//! 28      ...   count * dim f32 values, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::StoreError;

pub const MAGIC: &[u8; 4] = b"VFEB";
pub const VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 0;
pub const HEADER_LEN: usize = 28;

/// A dense row-major `f32` matrix as stored in a VFEB file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub dim: usize,
    pub count: usize,
    pub data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self, StoreError> {
        if dim == 0 {
            return Err(StoreError::Format("dim must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(StoreError::Format(format!(
                "data length {} is not a multiple of dim {dim}",
                data.len()
            )));
        }
        Ok(Self {
            dim,
            count: data.len() / dim,
            data,
        })
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }
}

pub fn write_header<W: Write>(w: &mut W, dim: usize, count: usize) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    w.write_all(&(count as u64).to_le_bytes())?;
    w.write_all(&[DTYPE_F32])?;
    w.write_all(&[0u8; 7])
}

pub fn write_to<W: Write>(w: &mut W, m: &EmbeddingMatrix) -> std::io::Result<()> {
    write_header(w, m.dim, m.count)?;
    for v in &m.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_file(path: &Path, m: &EmbeddingMatrix) -> Result<(), StoreError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_to(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn read_from<R: Read>(r: &mut R) -> Result<EmbeddingMatrix, StoreError> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| StoreError::Format("truncated VFEB header".into()))?;
    if &header[0..4] != MAGIC {
        return Err(StoreError::Format(format!("bad magic {:?}", &header[0..4])));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(StoreError::Format(format!(
            "unsupported VFEB version {version}"
        )));
    }
    let dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(header[12..20].try_into().unwrap());
    let dtype = header[20];
    if dtype != DTYPE_F32 {
        return Err(StoreError::Format(format!("unsupported dtype {dtype}")));
    }
    if dim == 0 {
        return Err(StoreError::Format("dim must be positive".into()));
    }
    let total = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(dim))
        .ok_or_else(|| StoreError::Format("matrix size overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != total * 4 {
        return Err(StoreError::Format(format!(
            "expected {} payload bytes, found {}",
            total * 4,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(EmbeddingMatrix {
        dim,
        count: count as usize,
        data,
    })
}

pub fn read_file(path: &Path) -> Result<EmbeddingMatrix, StoreError> {
    let mut r = BufReader::new(File::open(path)?);
    read_from(&mut r)
}
