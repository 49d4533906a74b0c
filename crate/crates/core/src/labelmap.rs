//! Per-pixel string label maps and their on-disk form: an indexed PNG plus a
//! JSON table mapping palette index to label. Palette indices absent from the
//! table are "ignore" pixels.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabelMapError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("label map has {0} labels; indexed PNG holds at most 256")]
    TooManyLabels(usize),
    #[error("map is {actual:?}, expected {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
}

/// Index value marking an ignored pixel.
pub const IGNORE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    names: Vec<String>,
    data: Vec<u32>,
}

impl LabelMap {
    /// Builds a map from a row-major grid; `None` marks ignore pixels.
    pub fn from_fn<F, S>(width: usize, height: usize, mut f: F) -> Self
    where
        F: FnMut(usize, usize) -> Option<S>,
        S: AsRef<str>,
    {
        let mut names: Vec<String> = Vec::new();
        let mut lookup: BTreeMap<String, u32> = BTreeMap::new();
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let idx = match f(x, y) {
                    None => IGNORE,
                    Some(s) => {
                        let s = s.as_ref();
                        *lookup.entry(s.to_string()).or_insert_with(|| {
                            names.push(s.to_string());
                            (names.len() - 1) as u32
                        })
                    }
                };
                data.push(idx);
            }
        }
        Self {
            width,
            height,
            names,
            data,
        }
    }

    /// Map from rows of labels. Panics on ragged rows.
    pub fn from_rows<S: AsRef<str>>(rows: &[Vec<S>]) -> Self {
        let h = rows.len();
        let w = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == w), "ragged label rows");
        Self::from_fn(w, h, |x, y| Some(rows[y][x].as_ref()))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> Option<&str> {
        self.label_of(self.data[y * self.width + x])
    }

    /// Labels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = Option<&str>> + '_ {
        self.data.iter().map(|i| self.label_of(*i))
    }

    fn label_of(&self, i: u32) -> Option<&str> {
        if i == IGNORE {
            None
        } else {
            Some(self.names[i as usize].as_str())
        }
    }

    /// Distinct labels that occur, in first-seen order.
    pub fn labels(&self) -> Vec<&str> {
        let mut used = vec![false; self.names.len()];
        for &i in &self.data {
            if i != IGNORE {
                used[i as usize] = true;
            }
        }
        self.names
            .iter()
            .zip(used)
            .filter(|(_, u)| *u)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    /// Applies `f` to every label.
    pub fn map_labels<F: FnMut(&str) -> String>(&self, mut f: F) -> Self {
        let mapped: Vec<String> = self.names.iter().map(|n| f(n)).collect();
        Self::from_fn(self.width, self.height, |x, y| {
            let i = self.data[y * self.width + x];
            (i != IGNORE).then(|| mapped[i as usize].as_str())
        })
    }

    /// Nearest-neighbor resize.
    pub fn resize_nearest(&self, width: usize, height: usize) -> Self {
        Self::from_fn(width, height, |x, y| {
            let sx = (x * self.width / width).min(self.width - 1);
            let sy = (y * self.height / height).min(self.height - 1);
            self.get(sx, sy)
        })
    }

    /// Writes `<path>` as an 8-bit indexed PNG and the label table next to it
    /// with a `.json` extension.
    pub fn write(&self, png_path: &Path) -> Result<(), LabelMapError> {
        if self.names.len() > 255 {
            return Err(LabelMapError::TooManyLabels(self.names.len()));
        }
        let io = |source| LabelMapError::Io {
            path: png_path.into(),
            source,
        };
        let file = File::create(png_path).map_err(io)?;
        let mut enc =
            png::Encoder::new(BufWriter::new(file), self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Indexed);
        enc.set_depth(png::BitDepth::Eight);
        let mut palette: Vec<u8> = (0..self.names.len()).flat_map(palette_color).collect();
        palette.extend([0, 0, 0]);
        enc.set_palette(palette);
        let ignore_index = self.names.len() as u8;
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|&i| if i == IGNORE { ignore_index } else { i as u8 })
            .collect();
        let fmt = |e: png::EncodingError| LabelMapError::Format {
            path: png_path.into(),
            message: e.to_string(),
        };
        let mut w = enc.write_header().map_err(fmt)?;
        w.write_image_data(&bytes).map_err(fmt)?;
        w.finish().map_err(fmt)?;

        let table: BTreeMap<String, &str> = self
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (i.to_string(), n.as_str()))
            .collect();
        let json_path = table_path(png_path);
        let text = serde_json::to_string_pretty(&table).expect("label table serializes");
        std::fs::write(&json_path, text).map_err(|source| LabelMapError::Io {
            path: json_path,
            source,
        })
    }

    /// Reads an indexed or 8-bit grayscale PNG and its `.json` label table.
    pub fn read(png_path: &Path) -> Result<Self, LabelMapError> {
        let json_path = table_path(png_path);
        let text = std::fs::read_to_string(&json_path).map_err(|source| LabelMapError::Io {
            path: json_path.clone(),
            source,
        })?;
        let raw: BTreeMap<String, String> =
            serde_json::from_str(&text).map_err(|e| LabelMapError::Format {
                path: json_path.clone(),
                message: e.to_string(),
            })?;
        let mut table = BTreeMap::new();
        for (k, v) in raw {
            let idx: u8 = k.parse().map_err(|_| LabelMapError::Format {
                path: json_path.clone(),
                message: format!("palette index {k:?} is not in 0..=255"),
            })?;
            if v.is_empty() {
                return Err(LabelMapError::Format {
                    path: json_path.clone(),
                    message: format!("empty label for {k}"),
                });
            }
            table.insert(idx, v);
        }
        let (w, h, indices) = read_indices(png_path)?;
        Ok(Self::from_fn(w, h, |x, y| {
            table.get(&indices[y * w + x]).map(String::as_str)
        }))
    }
}

pub fn table_path(png_path: &Path) -> PathBuf {
    png_path.with_extension("json")
}

fn read_indices(path: &Path) -> Result<(usize, usize, Vec<u8>), LabelMapError> {
    let fmt = |message: String| LabelMapError::Format {
        path: path.into(),
        message,
    };
    let file = File::open(path).map_err(|source| LabelMapError::Io {
        path: path.into(),
        source,
    })?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(|e| fmt(e.to_string()))?;
    let info = reader.info();
    let (w, h) = (info.width as usize, info.height as usize);
    let (color, depth) = (info.color_type, info.bit_depth);
    if !matches!(color, png::ColorType::Indexed | png::ColorType::Grayscale) {
        return Err(fmt(format!(
            "expected an indexed or grayscale PNG, got {color:?}"
        )));
    }
    let bits = match depth {
        png::BitDepth::One => 1,
        png::BitDepth::Two => 2,
        png::BitDepth::Four => 4,
        png::BitDepth::Eight => 8,
        png::BitDepth::Sixteen => return Err(fmt("16-bit label maps are not supported".into())),
    };
    let mut buf = vec![0; reader.output_buffer_size()];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| fmt(e.to_string()))?;
    let stride = frame.line_size;
    let per_byte = 8 / bits;
    let mask = ((1u16 << bits) - 1) as u8;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &buf[y * stride..(y + 1) * stride];
        for x in 0..w {
            let byte = row[x / per_byte];
            let shift = 8 - bits * (x % per_byte + 1);
            out.push((byte >> shift) & mask);
        }
    }
    Ok((w, h, out))
}

/// Deterministic, well-separated display color for label `i`.
pub fn palette_color(i: usize) -> [u8; 3] {
    let hue = (i as f64 * 0.618_033_988_75).fract();
    let light = if i.is_multiple_of(2) { 0.85 } else { 0.6 };
    hsv_to_rgb(hue, 0.75, light)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let i = (h * 6.0).floor();
    let f = h * 6.0 - i;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - f * s), v * (1.0 - (1.0 - f) * s));
    let (r, g, b) = match i as i64 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [
        (r * 255.0).round() as u8,
        (g * 255.0).round() as u8,
        (b * 255.0).round() as u8,
    ]
}
