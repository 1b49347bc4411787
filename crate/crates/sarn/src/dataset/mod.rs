//! Deterministic scene generator and question/answer corpus.
//!
//! Each image holds six colored objects (one per color, square or circle) on
//! a white background, plus 48 attached questions: for every color, three
//! non-relational and five relational question types over a shared 18-class
//! answer vocabulary. Everything is derived from a seed; regenerating with
//! the same [`DatasetConfig`] reproduces byte-identical files.

mod format;
mod oracle;
mod questions;
mod render;
mod scene;
pub mod vocab;

pub use format::{dataset_from_bytes, dataset_to_bytes, read_dataset, write_dataset, write_ppm};
pub use oracle::answer_oracle;
pub use questions::{encode_question, generate_questions, QUESTION_ENCODING_DIM};
pub use render::render_scene;
pub use scene::sample_scene;

use crate::error::{Error, Result};

/// Generation parameters; `image_size` and `object_size` are in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetConfig {
    pub image_size: u16,
    pub object_size: u16,
    pub n_train: u32,
    pub n_test: u32,
    pub seed: u64,
}

impl DatasetConfig {
    pub const N_OBJECTS: usize = 6;
    pub const QUESTIONS_PER_IMAGE: usize = 48;

    /// Rejects geometry where six non-overlapping objects cannot plausibly
    /// be placed: total object footprint must stay below the image area.
    pub fn validate(&self) -> Result<()> {
        if self.image_size == 0 || self.object_size == 0 {
            return Err(Error::InvalidArgument(
                "image_size and object_size must be positive".into(),
            ));
        }
        let side = 2 * self.object_size as u64 + 2;
        let footprint = 6 * side * side;
        let area = self.image_size as u64 * self.image_size as u64;
        if footprint >= area {
            return Err(Error::InvalidArgument(format!(
                "object_size {} too large for image_size {}: {} object pixels vs {} image pixels",
                self.object_size, self.image_size, footprint, area
            )));
        }
        if self.image_size <= 2 * self.object_size {
            return Err(Error::InvalidArgument(format!(
                "no interior positions: image_size {} <= 2*object_size {}",
                self.image_size,
                2 * self.object_size
            )));
        }
        Ok(())
    }
}

/// One object: color is implied by slot index at generation time but stored
/// explicitly so files are self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectSpec {
    pub color: u8,
    pub shape: u8,
    /// Center column in pixels.
    pub x: u16,
    /// Center row in pixels.
    pub y: u16,
}

/// A placed scene; index i holds the object with color i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneSpec {
    pub objects: [ObjectSpec; DatasetConfig::N_OBJECTS],
}

impl SceneSpec {
    /// Squared Euclidean distance between object centers i and j.
    pub fn dist2(&self, i: usize, j: usize) -> u64 {
        let a = &self.objects[i];
        let b = &self.objects[j];
        let dx = a.x as i64 - b.x as i64;
        let dy = a.y as i64 - b.y as i64;
        (dx * dx + dy * dy) as u64
    }
}

/// A question: which color is asked about, and what about it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Question {
    pub color: u8,
    pub qtype: u8,
}

/// A question with its ground-truth answer class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QaSample {
    pub question: Question,
    pub answer: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn tag(self) -> u8 {
        match self {
            Split::Train => 0,
            Split::Test => 1,
        }
    }
}

/// One rendered image with its scene layout and 48 QA pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub scene: SceneSpec,
    /// Row-major RGB, `3 * image_size * image_size` bytes.
    pub pixels: Vec<u8>,
    pub qa: Vec<QaSample>,
}

/// A full split held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub split: Split,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Generates the requested split. Train image i uses the seed stream i;
    /// test image j uses stream `n_train + j`, so the splits never share a
    /// scene no matter the counts.
    pub fn generate(config: &DatasetConfig, split: Split) -> Result<Dataset> {
        config.validate()?;
        let (count, base) = match split {
            Split::Train => (config.n_train, 0u64),
            Split::Test => (config.n_test, config.n_train as u64),
        };
        let mut samples = Vec::with_capacity(count as usize);
        for i in 0..count as u64 {
            let mut rng = crate::rng::Pcg32::new(config.seed, base + i);
            let scene = sample_scene(config, &mut rng)?;
            let pixels = render_scene(config, &scene);
            let questions = generate_questions();
            let qa = questions
                .iter()
                .map(|&question| QaSample {
                    question,
                    answer: answer_oracle(config, &scene, question),
                })
                .collect();
            samples.push(Sample { scene, pixels, qa });
        }
        Ok(Dataset {
            config: *config,
            split,
            samples,
        })
    }
}
