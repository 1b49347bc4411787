//! Interpretability artifacts: attention grids, relation-activation grids,
//! heatmap overlays, and a localization metric tying attention to scene
//! geometry.

mod report;

pub use report::{build_report, export_report, grid_csv, parse_grid_csv, AttentionReport};

use crate::dataset::{encode_question, Dataset, Question};
use crate::error::{Error, Result};
use crate::models::{
    encode_image, forward_from_objects, grid_side, image_tensor, ForwardTrace, ModelKind,
    ModelParams, QUESTION_DIM,
};
use crate::tensor::{Graph, Tensor, Var};

/// Square grid of activations, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    side: usize,
    data: Vec<f32>,
}

impl Grid {
    pub fn new(side: usize, data: Vec<f32>) -> Grid {
        assert_eq!(data.len(), side * side, "grid data must be side^2 values");
        Grid { side, data }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.side + col]
    }

    /// Flat index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.data.len() {
            if self.data[i] > self.data[best] {
                best = i;
            }
        }
        best
    }
}

/// Channel-summed relation activations. The pairing models differ in shape:
/// one sum per object for models that relate each object to a single
/// reference (or to nothing), one sum per ordered pair for the all-pairs
/// model, which additionally gets the per-anchor marginal (sums over the
/// pair's second element).
#[derive(Debug, Clone)]
pub enum GSum {
    PerObject(Grid),
    PerPair { pairs: Grid, anchors: Grid },
}

impl GSum {
    /// The object-resolution grid used for overlays: the grid itself, or the
    /// anchor marginal for the all-pairs model.
    pub fn object_grid(&self) -> &Grid {
        match self {
            GSum::PerObject(g) => g,
            GSum::PerPair { anchors, .. } => anchors,
        }
    }
}

fn single_forward(
    params: &ModelParams,
    image: &Tensor,
    question: Question,
) -> Result<(Graph, ForwardTrace)> {
    let mut g = Graph::new();
    let enc = encode_question(question);
    let trace = crate::models::forward(
        &mut g,
        params,
        params.config().kind,
        image,
        &enc,
    )?;
    Ok((g, trace))
}

fn attention_grid(g: &Graph, attention: Var, side: usize) -> Grid {
    Grid::new(side, g.value(attention).data().to_vec())
}

/// Channel sums of the relation module's output rows, accumulated in f64.
fn row_sums(g: &Graph, rows_var: Var) -> Vec<f32> {
    let t = g.value(rows_var);
    let (rows, cols) = (t.shape()[0], t.shape()[1]);
    let data = t.data();
    (0..rows)
        .map(|r| {
            data[r * cols..(r + 1) * cols]
                .iter()
                .map(|&v| v as f64)
                .sum::<f64>() as f32
        })
        .collect()
}

fn gsum_from_trace(g: &Graph, trace: &ForwardTrace, kind: ModelKind, side: usize) -> GSum {
    let sums = row_sums(g, trace.g_outputs);
    match kind {
        ModelKind::Sarn | ModelKind::Baseline => GSum::PerObject(Grid::new(side, sums)),
        ModelKind::Rn => {
            let n = trace.objects.n;
            let anchors: Vec<f32> = (0..n)
                .map(|i| sums[i * n..(i + 1) * n].iter().map(|&v| v as f64).sum::<f64>() as f32)
                .collect();
            GSum::PerPair {
                pairs: Grid::new(n, sums),
                anchors: Grid::new(side, anchors),
            }
        }
    }
}

/// Attention weights over the feature grid for one image/question pair.
pub fn attention_map(params: &ModelParams, image: &Tensor, question: Question) -> Result<Grid> {
    let kind = params.config().kind;
    if kind != ModelKind::Sarn {
        return Err(Error::UnsupportedModel(format!(
            "attention weights exist only for the sequential-attention model, not {}",
            kind.tag()
        )));
    }
    let (g, trace) = single_forward(params, image, question)?;
    let attention = trace.attention.expect("sequential-attention forward");
    Ok(attention_grid(&g, attention, grid_side(params.config().image_size)))
}

/// Channel-summed relation activations for one image/question pair.
pub fn gtheta_channel_sum(
    params: &ModelParams,
    image: &Tensor,
    question: Question,
) -> Result<GSum> {
    let (g, trace) = single_forward(params, image, question)?;
    let kind = params.config().kind;
    Ok(gsum_from_trace(&g, &trace, kind, grid_side(params.config().image_size)))
}

/// Nearest-neighbor upscale of `grid` to the image resolution, normalized to
/// [0, 1] by the grid maximum, alpha-blended over the image as a red heat
/// layer. An all-zero (or all-nonpositive) grid leaves the image untouched.
pub fn upscale_overlay(
    grid: &Grid,
    image_size: u16,
    pixels: &[u8],
    alpha: f32,
) -> Result<Vec<u8>> {
    let size = image_size as usize;
    if pixels.len() != 3 * size * size {
        return Err(Error::InvalidArgument(format!(
            "expected a square {size}x{size} RGB image ({} bytes), got {}",
            3 * size * size,
            pixels.len()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "blend alpha {alpha} outside [0, 1]"
        )));
    }
    let max = grid.data.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
    if max <= 0.0 {
        return Ok(pixels.to_vec());
    }

    let mut out = Vec::with_capacity(pixels.len());
    for y in 0..size {
        let row = y * grid.side / size;
        for x in 0..size {
            let col = x * grid.side / size;
            let w = (grid.get(row, col) / max).clamp(0.0, 1.0) * alpha;
            let base = 3 * (y * size + x);
            let heat = [255.0, 0.0, 0.0];
            for c in 0..3 {
                let v = pixels[base + c] as f32 * (1.0 - w) + heat[c] * w;
                out.push(v.round() as u8);
            }
        }
    }
    Ok(out)
}

/// Inclusive input-pixel interval feeding one feature cell along one axis.
/// Four stride-2 kernel-3 pad-1 layers compose to a stride of 16 and a
/// half-width of 15.
pub fn receptive_field(cell_index: usize, image_size: u16) -> (u16, u16) {
    let center = 16 * cell_index;
    let lo = center.saturating_sub(15);
    let hi = (center + 15).min(image_size as usize - 1);
    (lo as u16, hi.min(u16::MAX as usize) as u16)
}

/// Whether a flat grid cell's receptive field contains the pixel (x, y).
pub fn cell_covers(cell: usize, side: usize, image_size: u16, x: u16, y: u16) -> bool {
    let (row, col) = (cell / side, cell % side);
    let (y_lo, y_hi) = receptive_field(row, image_size);
    let (x_lo, x_hi) = receptive_field(col, image_size);
    (y_lo..=y_hi).contains(&y) && (x_lo..=x_hi).contains(&x)
}

/// Fraction of questions whose attention argmax cell's receptive field
/// contains the referenced object's center.
pub fn localization_score(params: &ModelParams, ds: &Dataset) -> Result<f64> {
    if params.config().kind != ModelKind::Sarn {
        return Err(Error::UnsupportedModel(format!(
            "localization is defined by attention weights, which {} has none of",
            params.config().kind.tag()
        )));
    }
    if ds.samples.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot score localization on an empty dataset".into(),
        ));
    }
    if params.config().image_size != ds.config.image_size {
        return Err(Error::InvalidArgument(format!(
            "model expects {} px images, dataset provides {} px",
            params.config().image_size,
            ds.config.image_size
        )));
    }
    let size = ds.config.image_size;
    let side = grid_side(size);

    let per_image: Vec<Result<(u64, u64)>> = {
        use rayon::prelude::*;
        ds.samples
            .par_iter()
            .map(|sample| {
                let image = image_tensor(size, &sample.pixels);
                let mut g = Graph::new();
                let objects = encode_image(&mut g, params, &image)?;
                let mark = g.mark();
                let mut hits = 0u64;
                let mut total = 0u64;
                for qa in &sample.qa {
                    let enc = encode_question(qa.question);
                    let q = g.input(Tensor::new(vec![1, QUESTION_DIM], enc.to_vec()));
                    let trace = forward_from_objects(&mut g, params, &objects, q)?;
                    let attention =
                        attention_grid(&g, trace.attention.expect("attention model"), side);
                    let reference = sample.scene.objects[qa.question.color as usize];
                    if cell_covers(attention.argmax(), side, size, reference.x, reference.y) {
                        hits += 1;
                    }
                    total += 1;
                    g.rewind(mark);
                }
                Ok((hits, total))
            })
            .collect()
    };

    let mut hits = 0u64;
    let mut total = 0u64;
    for item in per_image {
        let (h, t) = item?;
        hits += h;
        total += t;
    }
    Ok(hits as f64 / total as f64)
}
