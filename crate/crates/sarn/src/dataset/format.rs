//! Dataset container format and PPM export.
//!
//! Layout (little-endian): magic `SOCV`, version u16, image_size u16,
//! object_size u16, n_objects u8, n_images u32, seed u64, split tag u8,
//! then per image: six object records {color u8, shape u8, x u16, y u16},
//! raw RGB pixels, and 48 question records {color u8, qtype u8, answer u8}.
//! Every record length is implied by the header, so the decoder checks the
//! total file length against the header claim before touching the body, then
//! range-checks every field. Errors carry the offending byte offset.

use std::path::Path;

use super::vocab::{answer, qtype};
use super::{Dataset, DatasetConfig, ObjectSpec, QaSample, Question, Sample, SceneSpec, Split};
use crate::bytes::Reader;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SOCV";
const VERSION: u16 = 1;
const HEADER_LEN: u64 = 24;
const SCENE_BYTES: u64 = 6 * 6;
const QA_BYTES: u64 = 48 * 3;

fn image_record_bytes(image_size: u16) -> u64 {
    SCENE_BYTES + 3 * (image_size as u64) * (image_size as u64) + QA_BYTES
}

pub fn dataset_to_bytes(ds: &Dataset) -> Vec<u8> {
    let n = ds.samples.len();
    assert!(n <= u32::MAX as usize, "too many images for the container");
    let total = HEADER_LEN + n as u64 * image_record_bytes(ds.config.image_size);
    let mut out = Vec::with_capacity(total as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&ds.config.image_size.to_le_bytes());
    out.extend_from_slice(&ds.config.object_size.to_le_bytes());
    out.push(DatasetConfig::N_OBJECTS as u8);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&ds.config.seed.to_le_bytes());
    out.push(ds.split.tag());
    for sample in &ds.samples {
        for obj in &sample.scene.objects {
            out.push(obj.color);
            out.push(obj.shape);
            out.extend_from_slice(&obj.x.to_le_bytes());
            out.extend_from_slice(&obj.y.to_le_bytes());
        }
        debug_assert_eq!(
            sample.pixels.len(),
            3 * ds.config.image_size as usize * ds.config.image_size as usize
        );
        out.extend_from_slice(&sample.pixels);
        debug_assert_eq!(sample.qa.len(), DatasetConfig::QUESTIONS_PER_IMAGE);
        for qa in &sample.qa {
            out.push(qa.question.color);
            out.push(qa.question.qtype);
            out.push(qa.answer);
        }
    }
    debug_assert_eq!(out.len() as u64, total);
    out
}

pub fn write_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    std::fs::write(path, dataset_to_bytes(ds)).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    dataset_from_bytes(&bytes)
}

/// Decodes a dataset file. A file records the image count of its own split
/// only, so the returned config carries that count under `n_train` or
/// `n_test` according to the split tag and zero for the other.
pub fn dataset_from_bytes(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Reader::new(bytes);
    let magic = r.take(MAGIC.len(), "magic")?;
    if magic != MAGIC {
        return Err(Error::format(0, "bad magic, expected SOCV"));
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(Error::format(
            r.pos - 2,
            format!("unsupported version {}", version),
        ));
    }
    let image_size = r.u16("image size")?;
    let object_size = r.u16("object size")?;
    let n_objects = r.u8("object count")?;
    if n_objects as usize != DatasetConfig::N_OBJECTS {
        return Err(Error::format(
            r.pos - 1,
            format!("object count {} unsupported, expected 6", n_objects),
        ));
    }
    let n_images = r.u32("image count")?;
    let seed = r.u64("seed")?;
    let split_at = r.pos;
    let split = match r.u8("split tag")? {
        0 => Split::Train,
        1 => Split::Test,
        other => {
            return Err(Error::format(
                split_at,
                format!("split tag {} not 0 or 1", other),
            ))
        }
    };
    let config = DatasetConfig {
        image_size,
        object_size,
        n_train: if split == Split::Train { n_images } else { 0 },
        n_test: if split == Split::Test { n_images } else { 0 },
        seed,
    };
    config
        .validate()
        .map_err(|e| Error::format(6, format!("bad geometry in header: {}", e)))?;

    // Length check up front: nothing below allocates from header claims
    // until the claim is known to match the actual byte count.
    let expected = HEADER_LEN + n_images as u64 * image_record_bytes(image_size);
    if expected != r.len() as u64 {
        return Err(Error::format(
            r.pos,
            format!(
                "length mismatch: header implies {} bytes, file has {}",
                expected,
                r.len()
            ),
        ));
    }

    let lo = object_size;
    let hi = image_size - 1 - object_size;
    let mut samples = Vec::with_capacity(n_images as usize);
    for img in 0..n_images {
        let mut objects = [ObjectSpec { color: 0, shape: 0, x: 0, y: 0 }; 6];
        for (slot, obj) in objects.iter_mut().enumerate() {
            let at = r.pos;
            let color = r.u8("object color")?;
            let shape = r.u8("object shape")?;
            let x = r.u16("object x")?;
            let y = r.u16("object y")?;
            // Slot order is the color order; downstream lookups index
            // objects by color id and rely on it.
            if color as usize != slot {
                return Err(Error::format(
                    at,
                    format!("image {}: slot {} holds color {}", img, slot, color),
                ));
            }
            if shape > 1 {
                return Err(Error::format(
                    at + 1,
                    format!("image {}: shape {} not 0 or 1", img, shape),
                ));
            }
            if x < lo || x > hi || y < lo || y > hi {
                return Err(Error::format(
                    at + 2,
                    format!(
                        "image {}: center ({}, {}) outside [{}, {}]",
                        img, x, y, lo, hi
                    ),
                ));
            }
            *obj = ObjectSpec { color, shape, x, y };
        }
        let pixels = r
            .take(3 * image_size as usize * image_size as usize, "pixels")?
            .to_vec();
        let mut qa = Vec::with_capacity(DatasetConfig::QUESTIONS_PER_IMAGE);
        for rec in 0..DatasetConfig::QUESTIONS_PER_IMAGE {
            let at = r.pos;
            let color = r.u8("question color")?;
            let q = r.u8("question type")?;
            let a = r.u8("answer class")?;
            if color >= 6 {
                return Err(Error::format(
                    at,
                    format!("image {} question {}: color {} out of range", img, rec, color),
                ));
            }
            if q as usize >= qtype::COUNT {
                return Err(Error::format(
                    at + 1,
                    format!("image {} question {}: type {} out of range", img, rec, q),
                ));
            }
            if !answer::legal_for(q).contains(&a) {
                return Err(Error::format(
                    at + 2,
                    format!(
                        "image {} question {}: answer {} illegal for type {}",
                        img, rec, a, q
                    ),
                ));
            }
            qa.push(QaSample {
                question: Question { color, qtype: q },
                answer: a,
            });
        }
        samples.push(Sample {
            scene: SceneSpec { objects },
            pixels,
            qa,
        });
    }
    debug_assert_eq!(r.pos, bytes.len());
    Ok(Dataset {
        config,
        split,
        samples,
    })
}

/// Binary PPM (P6) encoding of one RGB image.
pub fn ppm_bytes(width: usize, height: usize, pixels: &[u8]) -> Result<Vec<u8>> {
    if pixels.len() != 3 * width * height {
        return Err(Error::InvalidArgument(format!(
            "pixel buffer holds {} bytes, {}x{} RGB needs {}",
            pixels.len(),
            width,
            height,
            3 * width * height
        )));
    }
    let mut out = format!("P6\n{} {}\n255\n", width, height).into_bytes();
    out.extend_from_slice(pixels);
    Ok(out)
}

pub fn write_ppm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    std::fs::write(path, ppm_bytes(width, height, pixels)?).map_err(|e| Error::io(path, e))
}
