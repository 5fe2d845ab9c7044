//! IDX reading and writing, binary-class splits, and a synthetic 0/1 digit generator.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnn::{Image, IMAGE_SIDE};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

const PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

pub type Sample = (Image, u8);

/// Raw file contents, gunzipped when they start with the gzip magic.
pub fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::Idx(format!("{}: bad gzip stream: {e}", path.display())))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Idx("truncated header".into()))
}

/// Decodes an IDX3 image file into 28×28 byte images.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<Vec<u8>>> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::Idx(format!("image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    if rows != IMAGE_SIDE || cols != IMAGE_SIDE {
        return Err(Error::Idx(format!("images are {rows}×{cols}, expected 28×28")));
    }
    let body = &bytes[16..];
    if body.len() < count * PIXELS {
        return Err(Error::Idx(format!(
            "truncated image data: {} bytes for {count} images",
            body.len()
        )));
    }
    Ok(body.chunks_exact(PIXELS).take(count).map(<[u8]>::to_vec).collect())
}

/// Decodes an IDX1 label file.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::Idx(format!("label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::Idx(format!("truncated label data: {} of {count} labels", body.len())));
    }
    Ok(body[..count].to_vec())
}

pub fn encode_idx_images(images: &[Vec<u8>]) -> Result<Vec<u8>> {
    if let Some(bad) = images.iter().find(|i| i.len() != PIXELS) {
        return Err(Error::DimensionMismatch {
            expected: PIXELS,
            got: bad.len(),
        });
    }
    let mut out = Vec::with_capacity(16 + images.len() * PIXELS);
    for word in [IMAGE_MAGIC, images.len() as u32, IMAGE_SIDE as u32, IMAGE_SIDE as u32] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    for img in images {
        out.extend_from_slice(img);
    }
    Ok(out)
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Writes `bytes`, gzip-compressed when the path ends in `.gz`.
pub fn write_maybe_gz(path: &Path, bytes: &[u8]) -> Result<()> {
    let data = if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(bytes).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?
    } else {
        bytes.to_vec()
    };
    fs::write(path, data).map_err(|e| Error::io(path, e))
}

/// Standard training-file names inside `dir`, gzipped or raw.
pub fn find_mnist_files(dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let pick = |stem: &str| {
        [format!("{stem}.gz"), stem.to_owned()]
            .into_iter()
            .map(|n| dir.join(n))
            .find(|p| p.is_file())
            .ok_or_else(|| {
                Error::io(
                    dir.join(stem),
                    std::io::Error::new(std::io::ErrorKind::NotFound, "no such IDX file"),
                )
            })
    };
    Ok((pick("train-images-idx3-ubyte")?, pick("train-labels-idx1-ubyte")?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitOptions {
    /// Digit mapped to label 0 and digit mapped to label 1.
    pub classes: [u8; 2],
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Draw each split half from each class.
    pub balanced: bool,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            classes: [0, 1],
            n_train: 2000,
            n_test: 200,
            seed: 0,
            balanced: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub seed: u64,
}

/// `[count of label 0, count of label 1]`
pub fn class_counts(samples: &[Sample]) -> [usize; 2] {
    let ones = samples.iter().filter(|(_, y)| *y == 1).count();
    [samples.len() - ones, ones]
}

impl DatasetSplit {
    pub fn train_counts(&self) -> [usize; 2] {
        class_counts(&self.train)
    }

    pub fn test_counts(&self) -> [usize; 2] {
        class_counts(&self.test)
    }
}

/// Filters to the two classes, shuffles with the seed and cuts disjoint
/// train and test subsets.
pub fn split_dataset(images: &[Vec<u8>], labels: &[u8], opts: &SplitOptions) -> Result<DatasetSplit> {
    if images.len() != labels.len() {
        return Err(Error::Idx(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    if opts.classes[0] == opts.classes[1] {
        return Err(Error::InvalidArgument("the two classes must differ".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pools: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    let mut all = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if let Some(k) = opts.classes.iter().position(|&c| c == l) {
            pools[k].push(i);
            all.push(i);
        }
    }
    let requested = opts.n_train + opts.n_test;
    let (train, test) = if opts.balanced {
        let need = |n: usize| [n - n / 2, n / 2];
        let (tr, te) = (need(opts.n_train), need(opts.n_test));
        for k in 0..2 {
            let want = tr[k] + te[k];
            if pools[k].len() < want {
                return Err(Error::InsufficientSamples {
                    requested: want,
                    available: pools[k].len(),
                });
            }
            pools[k].shuffle(&mut rng);
        }
        let mut train: Vec<usize> = (0..2).flat_map(|k| pools[k][..tr[k]].to_vec()).collect();
        let mut test: Vec<usize> = (0..2).flat_map(|k| pools[k][tr[k]..tr[k] + te[k]].to_vec()).collect();
        train.shuffle(&mut rng);
        test.shuffle(&mut rng);
        (train, test)
    } else {
        if all.len() < requested {
            return Err(Error::InsufficientSamples {
                requested,
                available: all.len(),
            });
        }
        all.shuffle(&mut rng);
        (all[..opts.n_train].to_vec(), all[opts.n_train..requested].to_vec())
    };
    let to_samples = |idx: Vec<usize>| -> Result<Vec<Sample>> {
        idx.into_iter()
            .map(|i| {
                let y = (labels[i] == opts.classes[1]) as u8;
                Ok((Image::from_bytes(&images[i])?, y))
            })
            .collect()
    };
    Ok(DatasetSplit {
        train: to_samples(train)?,
        test: to_samples(test)?,
        seed: opts.seed,
    })
}

pub fn load_mnist_idx(image_path: &Path, label_path: &Path, opts: &SplitOptions) -> Result<DatasetSplit> {
    let images = parse_idx_images(&read_maybe_gz(image_path)?)?;
    let labels = parse_idx_labels(&read_maybe_gz(label_path)?)?;
    split_dataset(&images, &labels, opts)
}

/// Handwriting-like 0s (rings) and 1s (slanted strokes) with random size,
/// position, slant and stroke width. Labels alternate 0, 1, 0, …
pub fn synth_digits(count: usize, seed: u64) -> (Vec<Vec<u8>>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let label = (i % 2) as u8;
        images.push(if label == 0 {
            draw_zero(&mut rng)
        } else {
            draw_one(&mut rng)
        });
        labels.push(label);
    }
    (images, labels)
}

fn ink(dist: f64, half_width: f64) -> f64 {
    // one pixel of antialiasing past the stroke edge
    (half_width + 0.5 - dist).clamp(0.0, 1.0)
}

fn render<F: Fn(f64, f64) -> f64>(peak: f64, dist: F, half_width: f64) -> Vec<u8> {
    let mut out = vec![0u8; PIXELS];
    for r in 0..IMAGE_SIDE {
        for c in 0..IMAGE_SIDE {
            let v = ink(dist(c as f64 + 0.5, r as f64 + 0.5), half_width) * peak;
            out[r * IMAGE_SIDE + c] = (v * 255.0).round() as u8;
        }
    }
    out
}

fn draw_zero<R: Rng>(rng: &mut R) -> Vec<u8> {
    let cx = 14.0 + rng.gen_range(-2.0..2.0);
    let cy = 14.0 + rng.gen_range(-1.5..1.5);
    let a = rng.gen_range(4.5..7.5);
    let b = rng.gen_range(7.5..10.0);
    let hw = rng.gen_range(0.9..1.8);
    let peak = rng.gen_range(0.8..1.0);
    render(
        peak,
        |x, y| {
            let rho = (((x - cx) / a).powi(2) + ((y - cy) / b).powi(2)).sqrt();
            (rho - 1.0).abs() * a.min(b)
        },
        hw,
    )
}

fn draw_one<R: Rng>(rng: &mut R) -> Vec<u8> {
    let cx = 14.0 + rng.gen_range(-3.0..3.0);
    let cy = 14.0 + rng.gen_range(-1.5..1.5);
    let half = rng.gen_range(7.5..10.0);
    let slant = rng.gen_range(-0.35..0.35);
    let hw = rng.gen_range(0.9..1.8);
    let peak = rng.gen_range(0.8..1.0);
    let (x0, y0) = (cx - slant * half, cy - half);
    let (x1, y1) = (cx + slant * half, cy + half);
    render(
        peak,
        move |x, y| {
            let (dx, dy) = (x1 - x0, y1 - y0);
            let t = (((x - x0) * dx + (y - y0) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            ((x - x0 - t * dx).powi(2) + (y - y0 - t * dy).powi(2)).sqrt()
        },
        hw,
    )
}

/// Writes a synthetic set as `train-images-idx3-ubyte.gz` and
/// `train-labels-idx1-ubyte.gz` under `dir`.
pub fn write_synthetic_mnist(dir: &Path, count: usize, seed: u64) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (images, labels) = synth_digits(count, seed);
    let ip = dir.join("train-images-idx3-ubyte.gz");
    let lp = dir.join("train-labels-idx1-ubyte.gz");
    write_maybe_gz(&ip, &encode_idx_images(&images)?)?;
    write_maybe_gz(&lp, &encode_idx_labels(&labels))?;
    Ok((ip, lp))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idx_round_trip() {
        let (images, labels) = synth_digits(6, 1);
        let back = parse_idx_images(&encode_idx_images(&images).unwrap()).unwrap();
        assert_eq!(back, images);
        assert_eq!(parse_idx_labels(&encode_idx_labels(&labels)).unwrap(), labels);
    }

    #[test]
    fn idx_errors() {
        let mut bytes = encode_idx_labels(&[0, 1, 1]);
        assert!(matches!(parse_idx_images(&bytes), Err(Error::Idx(_))));
        bytes.pop();
        assert!(matches!(parse_idx_labels(&bytes), Err(Error::Idx(_))));
        assert!(parse_idx_labels(&[0, 0]).is_err());
        let (images, _) = synth_digits(2, 1);
        let mut img = encode_idx_images(&images).unwrap();
        img.truncate(img.len() - 1);
        assert!(parse_idx_images(&img).is_err());
    }

    #[test]
    fn split_sizes_and_errors() {
        let (images, labels) = synth_digits(40, 2);
        let opts = SplitOptions {
            n_train: 20,
            n_test: 10,
            seed: 5,
            ..SplitOptions::default()
        };
        let s = split_dataset(&images, &labels, &opts).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (20, 10));
        assert_eq!(s, split_dataset(&images, &labels, &opts).unwrap());
        let too_many = SplitOptions { n_train: 35, ..opts };
        assert!(matches!(
            split_dataset(&images, &labels, &too_many),
            Err(Error::InsufficientSamples { requested: 45, available: 40 })
        ));
        let balanced = SplitOptions { balanced: true, ..opts };
        let b = split_dataset(&images, &labels, &balanced).unwrap();
        assert_eq!(b.train_counts(), [10, 10]);
        assert_eq!(b.test_counts(), [5, 5]);
    }

    #[test]
    fn synthetic_images_have_ink() {
        let (images, labels) = synth_digits(10, 3);
        for (img, &y) in images.iter().zip(&labels) {
            let lit = img.iter().filter(|&&p| p > 128).count();
            assert!(lit > 20, "label {y}: {lit} lit pixels");
            assert_eq!(img[0], 0);
        }
    }
}
