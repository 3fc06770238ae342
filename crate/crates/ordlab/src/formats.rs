//! CIFAR-10 binary batches and MNIST IDX files.

use std::fs;
use std::path::Path;

use ordlab_core::data::{Dataset, Sample};
use ordlab_core::Tensor;

use crate::error::{Error, Result};

pub const CIFAR_RECORD: usize = 3073;
const CIFAR_PIXELS: usize = 3072;
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn to_byte(x: f32) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn pixels(bytes: &[u8]) -> Vec<f32> {
    bytes.iter().map(|&b| f32::from(b) / 255.0).collect()
}

pub fn decode_cifar10(bytes: &[u8], file: &str) -> Result<Vec<Sample>> {
    if bytes.is_empty() || !bytes.len().is_multiple_of(CIFAR_RECORD) {
        return Err(Error::format(
            file,
            format!(
                "length {} is not a positive multiple of {CIFAR_RECORD}",
                bytes.len()
            ),
        ));
    }
    bytes
        .chunks_exact(CIFAR_RECORD)
        .enumerate()
        .map(|(i, rec)| {
            let label = rec[0] as usize;
            if label >= 10 {
                return Err(Error::format(file, format!("record {i} has label byte {label}")));
            }
            Ok(Sample {
                image: Tensor::from_vec(&[3, 32, 32], pixels(&rec[1..]))?,
                label,
            })
        })
        .collect()
}

pub fn load_cifar10<P: AsRef<Path>>(paths: &[P]) -> Result<Dataset> {
    let mut samples = Vec::new();
    let mut names = Vec::new();
    for p in paths {
        let p = p.as_ref();
        samples.extend(decode_cifar10(&read(p)?, &p.display().to_string())?);
        names.push(p.display().to_string());
    }
    Ok(Dataset::new(samples, 10, format!("cifar10:{}", names.join(",")))?)
}

pub fn encode_cifar10(data: &Dataset) -> Result<Vec<u8>> {
    if data.image_shape() != [3, 32, 32] || data.num_classes() > 10 {
        return Err(Error::format(
            data.provenance(),
            format!(
                "CIFAR-10 records need 3x32x32 images and at most 10 classes, got {:?} and {}",
                data.image_shape(),
                data.num_classes()
            ),
        ));
    }
    let mut out = Vec::with_capacity(data.len() * CIFAR_RECORD);
    for s in data.samples() {
        out.push(s.label as u8);
        out.extend(s.image.data().iter().map(|&x| to_byte(x)));
    }
    debug_assert_eq!(out.len(), data.len() * (1 + CIFAR_PIXELS));
    Ok(out)
}

pub fn write_cifar10(path: &Path, data: &Dataset) -> Result<()> {
    write(path, &encode_cifar10(data)?)
}

fn be_u32(bytes: &[u8], at: usize, file: &str) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::format(file, "truncated header"))
}

/// Returns `(rows, cols, pixel bytes of every image)`.
pub fn decode_idx_images<'a>(bytes: &'a [u8], file: &str) -> Result<(usize, usize, Vec<&'a [u8]>)> {
    let magic = be_u32(bytes, 0, file)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::format(
            file,
            format!("image magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        ));
    }
    let count = be_u32(bytes, 4, file)? as usize;
    let rows = be_u32(bytes, 8, file)? as usize;
    let cols = be_u32(bytes, 12, file)? as usize;
    let size = rows * cols;
    let body = &bytes[16..];
    if size == 0 || body.len() != count * size {
        return Err(Error::format(
            file,
            format!(
                "{count} images of {rows}x{cols} need {} bytes, found {}",
                count * size,
                body.len()
            ),
        ));
    }
    Ok((rows, cols, body.chunks_exact(size).collect()))
}

pub fn decode_idx_labels<'a>(bytes: &'a [u8], file: &str) -> Result<&'a [u8]> {
    let magic = be_u32(bytes, 0, file)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::format(
            file,
            format!("label magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        ));
    }
    let count = be_u32(bytes, 4, file)? as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(Error::format(
            file,
            format!("{count} labels declared, {} bytes found", body.len()),
        ));
    }
    Ok(body)
}

pub fn decode_mnist(images: &[u8], labels: &[u8], image_file: &str, label_file: &str) -> Result<Dataset> {
    let (rows, cols, imgs) = decode_idx_images(images, image_file)?;
    let labels = decode_idx_labels(labels, label_file)?;
    if imgs.len() != labels.len() {
        return Err(Error::format(
            label_file,
            format!(
                "{} labels for {} images in {image_file}",
                labels.len(),
                imgs.len()
            ),
        ));
    }
    let samples = imgs
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (img, &label))| {
            if label >= 10 {
                return Err(Error::format(label_file, format!("label {i} is {label}")));
            }
            Ok(Sample {
                image: Tensor::from_vec(&[1, rows, cols], pixels(img))?,
                label: label as usize,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::new(samples, 10, format!("mnist:{image_file}"))?)
}

pub fn load_mnist_idx(image_path: &Path, label_path: &Path) -> Result<Dataset> {
    decode_mnist(
        &read(image_path)?,
        &read(label_path)?,
        &image_path.display().to_string(),
        &label_path.display().to_string(),
    )
}

/// IDX image and label files for single-channel images.
pub fn encode_mnist(data: &Dataset) -> Result<(Vec<u8>, Vec<u8>)> {
    let (rows, cols) = match data.image_shape() {
        [1, r, c] => (*r, *c),
        other => {
            return Err(Error::format(
                data.provenance(),
                format!("IDX images need shape [1, rows, cols], got {other:?}"),
            ))
        }
    };
    let n = data.len() as u32;
    let mut images = Vec::with_capacity(16 + data.len() * rows * cols);
    for v in [IDX_IMAGES_MAGIC, n, rows as u32, cols as u32] {
        images.extend(v.to_be_bytes());
    }
    let mut labels = Vec::with_capacity(8 + data.len());
    labels.extend(IDX_LABELS_MAGIC.to_be_bytes());
    labels.extend(n.to_be_bytes());
    for s in data.samples() {
        images.extend(s.image.data().iter().map(|&x| to_byte(x)));
        labels.push(s.label as u8);
    }
    Ok((images, labels))
}

pub fn write_mnist_idx(image_path: &Path, label_path: &Path, data: &Dataset) -> Result<()> {
    let (images, labels) = encode_mnist(data)?;
    write(image_path, &images)?;
    write(label_path, &labels)
}
