//! Dataset ingestion: scan a directory of PNGs, crop to scale-divisible
//! dimensions, compute the mean RGB, and persist a deterministic index.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imaging::{read_png, Image};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub path: PathBuf,
    /// Dimensions after cropping to a multiple of the scale.
    pub height: usize,
    pub width: usize,
    /// FNV-1a over the raw file bytes.
    pub hash: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHandle {
    pub scale: usize,
    pub mean_rgb: [f64; 3],
    pub entries: Vec<DatasetEntry>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

/// Scan `dir` for PNGs (sorted by filename). Unreadable files are skipped
/// with a warning; an empty result is fatal. When `cache_path` is set the
/// index file is written there.
pub fn ingest_dataset(
    dir: &Path,
    scale: usize,
    cache_path: Option<&Path>,
) -> Result<(DatasetHandle, Vec<String>)> {
    if scale == 0 {
        return Err(Error::InvalidArg("scale must be >= 1".to_string()));
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x.eq_ignore_ascii_case("png")).unwrap_or(false))
        .collect();
    paths.sort();

    let mut warnings = Vec::new();
    let mut entries = Vec::new();
    let mut sum = [0.0f64; 3];
    let mut pixel_count = 0usize;
    for path in paths {
        let cropped = match load_entry(&path, scale) {
            Ok(img) => img,
            Err(e) => {
                warnings.push(format!("skipping {}: {e}", path.display()));
                continue;
            }
        };
        let bytes = std::fs::read(&path)?;
        for px in cropped.data.chunks(3) {
            sum[0] += px[0];
            sum[1] += px[1];
            sum[2] += px[2];
        }
        pixel_count += cropped.height * cropped.width;
        entries.push(DatasetEntry {
            path: path.clone(),
            height: cropped.height,
            width: cropped.width,
            hash: fnv1a(&bytes),
        });
    }
    if entries.is_empty() {
        return Err(Error::Data(format!("no readable PNGs in {}", dir.display())));
    }
    let mean_rgb = [
        sum[0] / pixel_count as f64,
        sum[1] / pixel_count as f64,
        sum[2] / pixel_count as f64,
    ];
    let handle = DatasetHandle { scale, mean_rgb, entries };
    if let Some(cache) = cache_path {
        std::fs::write(cache, handle.index_text())?;
    }
    Ok((handle, warnings))
}

fn load_entry(path: &Path, scale: usize) -> Result<Image> {
    let img = read_png(path)?;
    if img.channels != 3 {
        return Err(Error::Data("dataset expects RGB PNGs".to_string()));
    }
    img.crop_to_multiple(scale)
}

impl DatasetHandle {
    /// Load all images, cropped to scale-divisible dimensions.
    pub fn load_images(&self) -> Result<Vec<Image>> {
        self.entries.iter().map(|e| load_entry(&e.path, self.scale)).collect()
    }

    pub fn index_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "tlsr-dataset-index v1").unwrap();
        writeln!(out, "scale {}", self.scale).unwrap();
        writeln!(
            out,
            "mean_rgb {:.17e} {:.17e} {:.17e}",
            self.mean_rgb[0], self.mean_rgb[1], self.mean_rgb[2]
        )
        .unwrap();
        for e in &self.entries {
            writeln!(out, "{} {} {} {:016x}", e.path.display(), e.height, e.width, e.hash).unwrap();
        }
        out
    }
}
