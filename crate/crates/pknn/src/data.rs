//! IDX dataset loading and pixel rescaling.
//!
//! IDX is the big-endian binary container both supported image sets
//! ship in: magic 0x00000803 for image files (count × rows × cols
//! unsigned bytes) and 0x00000801 for label files. Loaders expect
//! decompressed files. Raw bytes in [0, 255] are rescaled to [0, 127] by
//! truncating division so they satisfy the 8-bit input contract of the
//! activations.

use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// The label alphabet of the supported datasets.
pub const NUM_CLASSES: usize = 10;

/// Decoded image file: `count` images of `rows`×`cols` bytes, flattened
/// row-major.
#[derive(Clone, Debug)]
pub struct RawImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?
        .read_to_end(&mut bytes)?;
    Ok(bytes)
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    let s = bytes
        .get(at..at + 4)
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
            expected: (at + 4) as u64,
            actual: bytes.len() as u64,
        })?;
    Ok(u32::from_be_bytes([s[0], s[1], s[2], s[3]]))
}

/// Parses an IDX image file.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<RawImages> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::DataFormat {
            path: path.to_path_buf(),
            reason: format!("magic {magic:#010x}, expected {IMAGES_MAGIC:#010x} (images)"),
        });
    }
    let count = be_u32(&bytes, 4, path)? as usize;
    let rows = be_u32(&bytes, 8, path)? as usize;
    let cols = be_u32(&bytes, 12, path)? as usize;
    if count == 0 || rows == 0 || cols == 0 {
        return Err(Error::DataFormat {
            path: path.to_path_buf(),
            reason: format!("degenerate dimensions {count}x{rows}x{cols}"),
        });
    }
    let expected = 16 + count * rows * cols;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: expected as u64,
            actual: bytes.len() as u64,
        });
    }
    Ok(RawImages {
        count,
        rows,
        cols,
        pixels: bytes[16..].to_vec(),
    })
}

/// Parses an IDX label file; every label must fit the 10-class alphabet.
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::DataFormat {
            path: path.to_path_buf(),
            reason: format!("magic {magic:#010x}, expected {LABELS_MAGIC:#010x} (labels)"),
        });
    }
    let count = be_u32(&bytes, 4, path)? as usize;
    if count == 0 {
        return Err(Error::DataFormat {
            path: path.to_path_buf(),
            reason: "zero label count".into(),
        });
    }
    let expected = 8 + count;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: expected as u64,
            actual: bytes.len() as u64,
        });
    }
    let labels = bytes[8..].to_vec();
    if let Some(&bad) = labels.iter().find(|&&l| l as usize >= NUM_CLASSES) {
        return Err(Error::DataFormat {
            path: path.to_path_buf(),
            reason: format!("label {bad} outside the {NUM_CLASSES}-class alphabet"),
        });
    }
    Ok(labels)
}

/// Rescales raw bytes to [0, 127] by truncating division by 2; one image
/// per row.
pub fn rescale_pixels(raw: &RawImages) -> IntMatrix {
    let width = raw.rows * raw.cols;
    let data = raw.pixels.iter().map(|&p| (p / 2) as i32).collect();
    IntMatrix::from_vec(raw.count, width, data).expect("dimensions validated at load")
}

/// Features (one sample per row, entries in [0, 127]) plus labels.
#[derive(Clone, Debug)]
pub struct Dataset {
    features: IntMatrix,
    labels: Vec<usize>,
    source: Option<(PathBuf, PathBuf)>,
}

impl Dataset {
    pub fn new(features: IntMatrix, labels: Vec<usize>) -> Result<Dataset> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if features.rows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        Ok(Dataset {
            features,
            labels,
            source: None,
        })
    }

    /// Loads and rescales an IDX image/label file pair.
    pub fn from_idx_files(
        images_path: impl AsRef<Path>,
        labels_path: impl AsRef<Path>,
    ) -> Result<Dataset> {
        let images_path = images_path.as_ref();
        let labels_path = labels_path.as_ref();
        let raw = load_idx_images(images_path)?;
        let labels = load_idx_labels(labels_path)?;
        if raw.count != labels.len() {
            return Err(Error::DataFormat {
                path: labels_path.to_path_buf(),
                reason: format!("{} labels for {} images", labels.len(), raw.count),
            });
        }
        let features = rescale_pixels(&raw);
        let mut ds = Dataset::new(features, labels.into_iter().map(|l| l as usize).collect())?;
        ds.source = Some((images_path.to_path_buf(), labels_path.to_path_buf()));
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_width(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &IntMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Files this dataset was loaded from, if any.
    pub fn source(&self) -> Option<(&Path, &Path)> {
        self.source.as_ref().map(|(i, l)| (i.as_path(), l.as_path()))
    }

    /// Copies the given samples into a batch matrix and label vector.
    pub fn gather(&self, indices: &[usize]) -> Result<(IntMatrix, Vec<usize>)> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let width = self.feature_width();
        let mut data = Vec::with_capacity(indices.len() * width);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::IndexOutOfBounds(format!(
                    "sample {i} of {}",
                    self.len()
                )));
            }
            data.extend_from_slice(self.features.row(i));
            labels.push(self.labels[i]);
        }
        Ok((IntMatrix::from_vec(indices.len(), width, data)?, labels))
    }

    /// A dataset of the first `n` samples.
    pub fn head(&self, n: usize) -> Result<Dataset> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidArgument(format!(
                "head of {n} from {} samples",
                self.len()
            )));
        }
        let (features, labels) = self.gather(&(0..n).collect::<Vec<_>>())?;
        Dataset::new(features, labels)
    }
}
