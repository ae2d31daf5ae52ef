//! IDX binary format (big-endian magic, u32 dimension sizes, raw u8 payload).

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};

use super::Dataset;
use crate::error::{Error, Result};

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

fn header(cur: &mut Cursor<&[u8]>, magic: u32, n_dims: usize) -> Result<Vec<usize>> {
    let got = cur
        .read_u32::<BigEndian>()
        .map_err(|_| Error::Format("IDX file shorter than its magic number".into()))?;
    if got != magic {
        return Err(Error::Format(format!(
            "bad IDX magic {got:#010x}, expected {magic:#010x}"
        )));
    }
    (0..n_dims)
        .map(|_| {
            cur.read_u32::<BigEndian>()
                .map(|v| v as usize)
                .map_err(|_| Error::Format("truncated IDX header".into()))
        })
        .collect()
}

fn payload(cur: &mut Cursor<&[u8]>, len: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; len];
    cur.read_exact(&mut buf)
        .map_err(|_| Error::Format(format!("truncated IDX payload, expected {len} bytes")))?;
    Ok(buf)
}

/// Returns (rows, cols, pixels scaled to [0, 1]).
pub fn read_idx_images(bytes: &[u8]) -> Result<(usize, usize, Vec<Vec<f64>>)> {
    let mut cur = Cursor::new(bytes);
    let dims = header(&mut cur, IDX_IMAGE_MAGIC, 3)?;
    let (n, rows, cols) = (dims[0], dims[1], dims[2]);
    let raw = payload(&mut cur, n * rows * cols)?;
    let images = raw
        .chunks_exact((rows * cols).max(1))
        .take(n)
        .map(|px| px.iter().map(|&b| f64::from(b) / 255.0).collect())
        .collect();
    Ok((rows, cols, images))
}

pub fn read_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(bytes);
    let dims = header(&mut cur, IDX_LABEL_MAGIC, 1)?;
    payload(&mut cur, dims[0])
}

pub fn load_mnist_idx(image_path: impl AsRef<Path>, label_path: impl AsRef<Path>) -> Result<Dataset> {
    let (_, _, images) = read_idx_images(&fs::read(image_path)?)?;
    let labels = read_idx_labels(&fs::read(label_path)?)?;
    if images.len() != labels.len() {
        return Err(Error::Format(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let labels: Vec<usize> = labels.into_iter().map(usize::from).collect();
    let n_classes = labels.iter().max().map_or(0, |m| m + 1).max(2);
    Dataset::new(images, labels, n_classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    pub(crate) fn image_bytes(n: u32, rows: u32, cols: u32, px: &[u8]) -> Vec<u8> {
        let mut b = IDX_IMAGE_MAGIC.to_be_bytes().to_vec();
        for d in [n, rows, cols] {
            b.extend(d.to_be_bytes());
        }
        b.extend_from_slice(px);
        b
    }

    pub(crate) fn label_bytes(labels: &[u8]) -> Vec<u8> {
        let mut b = IDX_LABEL_MAGIC.to_be_bytes().to_vec();
        b.extend((labels.len() as u32).to_be_bytes());
        b.extend_from_slice(labels);
        b
    }

    fn write(dir: &tempfile::TempDir, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::File::create(&p).unwrap().write_all(bytes).unwrap();
        p
    }

    #[test]
    fn scales_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let img = write(&dir, "img", &image_bytes(2, 2, 2, &[0, 255, 255, 0, 0, 0, 255, 255]));
        let lbl = write(&dir, "lbl", &label_bytes(&[3, 1]));
        let ds = load_mnist_idx(img, lbl).unwrap();
        assert_eq!(ds.features, vec![vec![0.0, 1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]]);
        assert_eq!(ds.labels, vec![3, 1]);
        assert_eq!(ds.n_classes, 4);
    }

    #[test]
    fn count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let img = write(&dir, "img", &image_bytes(2, 1, 1, &[0, 255]));
        let lbl = write(&dir, "lbl", &label_bytes(&[0, 1, 1]));
        assert!(load_mnist_idx(img, lbl).is_err());
    }

    #[test]
    fn wrong_magic() {
        let mut b = image_bytes(1, 1, 1, &[7]);
        b[3] = 0x01;
        assert!(read_idx_images(&b).is_err());
        assert!(read_idx_labels(&image_bytes(1, 1, 1, &[7])).is_err());
    }

    #[test]
    fn truncated_payload() {
        assert!(read_idx_images(&image_bytes(2, 2, 2, &[0, 1, 2])).is_err());
        assert!(read_idx_labels(&[0, 0, 8]).is_err());
    }
}
