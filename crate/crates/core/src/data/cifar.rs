//! CIFAR-10 binary batches: each record is one label byte followed by 3072
//! pixel bytes (1024 red, 1024 green, 1024 blue, each plane row-major 32x32).

use std::fs;
use std::path::Path;

use super::LabeledImageSet;
use crate::error::{Error, Result};
use crate::geometry::Image;

pub const RECORD_BYTES: usize = 1 + 3 * 32 * 32;
pub const TRAIN_FILES: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];
pub const TEST_FILE: &str = "test_batch.bin";

/// Parses one batch file already read into memory. `path` only labels errors.
pub fn parse_cifar_batch(bytes: &[u8], path: &Path) -> Result<LabeledImageSet> {
    let format_err = |record, reason: String| Error::Format {
        file: path.to_path_buf(),
        record,
        reason,
    };
    if !bytes.len().is_multiple_of(RECORD_BYTES) {
        let record = bytes.len() / RECORD_BYTES;
        return Err(format_err(
            record,
            format!("truncated: {} trailing bytes, records are {RECORD_BYTES}", bytes.len() % RECORD_BYTES),
        ));
    }
    let mut images = Vec::with_capacity(bytes.len() / RECORD_BYTES);
    let mut labels = Vec::with_capacity(images.capacity());
    for (i, rec) in bytes.chunks_exact(RECORD_BYTES).enumerate() {
        let label = rec[0];
        if label > 9 {
            return Err(format_err(i, format!("label byte {label} > 9")));
        }
        let data = rec[1..].iter().map(|&b| f32::from(b) / 255.0).collect();
        images.push(Image::new(3, 32, 32, data)?);
        labels.push(usize::from(label));
    }
    LabeledImageSet::new(images, labels, 10)
}

fn read_batch(path: &Path) -> Result<LabeledImageSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_cifar_batch(&bytes, path)
}

/// Loads the five training batches and the test batch from `dir`.
pub fn load_cifar10(dir: &Path) -> Result<(LabeledImageSet, LabeledImageSet)> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for name in TRAIN_FILES {
        let part = read_batch(&dir.join(name))?;
        images.extend(part.images);
        labels.extend(part.labels);
    }
    let train = LabeledImageSet::new(images, labels, 10)?;
    let test = read_batch(&dir.join(TEST_FILE))?;
    Ok((train, test))
}
