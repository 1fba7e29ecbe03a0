//! IDX-format dataset ingestion (MNIST layout).

use crate::error::{Error, Result};
use std::fs;
use std::path::Path;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Loaded image/label pairs; pixels kept as raw bytes, normalized on use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub images: Vec<u8>,
    pub labels: Vec<u8>,
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Dataset {
    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, idx: usize) -> &[u8] {
        let px = self.pixels_per_image();
        &self.images[idx * px..(idx + 1) * px]
    }

    /// Pixel bytes mapped linearly to [-1, 1].
    pub fn normalized_image(&self, idx: usize) -> Vec<f64> {
        self.image(idx)
            .iter()
            .map(|&b| b as f64 / 255.0 * 2.0 - 1.0)
            .collect()
    }
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    Ok(fs::read(path)?)
}

fn parse_images(path: &Path) -> Result<(Vec<u8>, usize, usize, usize)> {
    let bytes = read_file(path)?;
    if bytes.len() < 16 {
        return Err(Error::Truncated {
            path: path.display().to_string(),
            expected: 16,
            got: bytes.len(),
        });
    }
    let magic = be_u32(&bytes, 0);
    if magic != IMAGES_MAGIC {
        return Err(Error::BadMagic {
            expected: IMAGES_MAGIC,
            got: magic,
        });
    }
    let count = be_u32(&bytes, 4) as usize;
    let rows = be_u32(&bytes, 8) as usize;
    let cols = be_u32(&bytes, 12) as usize;
    let expected = 16 + count * rows * cols;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            path: path.display().to_string(),
            expected,
            got: bytes.len(),
        });
    }
    Ok((bytes[16..].to_vec(), count, rows, cols))
}

fn parse_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_file(path)?;
    if bytes.len() < 8 {
        return Err(Error::Truncated {
            path: path.display().to_string(),
            expected: 8,
            got: bytes.len(),
        });
    }
    let magic = be_u32(&bytes, 0);
    if magic != LABELS_MAGIC {
        return Err(Error::BadMagic {
            expected: LABELS_MAGIC,
            got: magic,
        });
    }
    let count = be_u32(&bytes, 4) as usize;
    let expected = 8 + count;
    if bytes.len() != expected {
        return Err(Error::Truncated {
            path: path.display().to_string(),
            expected,
            got: bytes.len(),
        });
    }
    Ok(bytes[8..].to_vec())
}

/// Load an images/labels IDX pair.
pub fn load_pair(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let (images, count, rows, cols) = parse_images(images_path)?;
    let labels = parse_labels(labels_path)?;
    if labels.len() != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: labels.len(),
        });
    }
    Ok(Dataset {
        images,
        labels,
        count,
        rows,
        cols,
    })
}

/// Load the canonical MNIST train/test pairs from a directory containing the
/// four standard IDX files.
pub fn load_mnist(dir: &Path) -> Result<(Dataset, Dataset)> {
    let train = load_pair(
        &dir.join("train-images-idx3-ubyte"),
        &dir.join("train-labels-idx1-ubyte"),
    )?;
    let test = load_pair(
        &dir.join("t10k-images-idx3-ubyte"),
        &dir.join("t10k-labels-idx1-ubyte"),
    )?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_images(path: &Path, magic: u32, count: u32, data: &[u8]) {
        let mut f = fs::File::create(path).unwrap();
        f.write_all(&magic.to_be_bytes()).unwrap();
        f.write_all(&count.to_be_bytes()).unwrap();
        f.write_all(&2u32.to_be_bytes()).unwrap();
        f.write_all(&2u32.to_be_bytes()).unwrap();
        f.write_all(data).unwrap();
    }

    fn write_labels(path: &Path, count: u32, data: &[u8]) {
        let mut f = fs::File::create(path).unwrap();
        f.write_all(&LABELS_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&count.to_be_bytes()).unwrap();
        f.write_all(data).unwrap();
    }

    #[test]
    fn roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("img");
        let lbl = dir.path().join("lbl");
        write_images(&img, IMAGES_MAGIC, 2, &[0u8; 8]);
        write_labels(&lbl, 2, &[7, 3]);
        let ds = load_pair(&img, &lbl).unwrap();
        assert_eq!(ds.count, 2);
        assert_eq!(ds.labels, vec![7, 3]);
        assert_eq!(ds.normalized_image(0), vec![-1.0; 4]);

        write_images(&img, 0xdeadbeef, 2, &[0u8; 8]);
        assert!(matches!(load_pair(&img, &lbl), Err(Error::BadMagic { .. })));

        write_images(&img, IMAGES_MAGIC, 3, &[0u8; 8]);
        assert!(matches!(load_pair(&img, &lbl), Err(Error::Truncated { .. })));

        write_images(&img, IMAGES_MAGIC, 2, &[0u8; 8]);
        write_labels(&lbl, 3, &[1, 2, 3]);
        assert!(matches!(load_pair(&img, &lbl), Err(Error::CountMismatch { .. })));
    }
}
