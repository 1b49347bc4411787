//! The three architectures: attention-based relational model, all-pairs
//! relational model, and a no-pairing baseline, sharing one conv encoder.
//!
//! Everything is assembled on a [`Graph`] so one code path serves training,
//! evaluation, and introspection; forward passes expose their intermediates
//! (object set, attention weights, per-row relation outputs).

mod config;
mod params;

pub use config::{model_config_to_string, parse_model_config, ModelConfig};
pub use params::ModelParams;

use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor, Var};

/// Question vectors are a 6-way color one-hot plus an 8-way type one-hot.
pub const QUESTION_DIM: usize = crate::dataset::QUESTION_ENCODING_DIM;

const LN_EPS: f32 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Sarn,
    Rn,
    Baseline,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Sarn => "sarn",
            ModelKind::Rn => "rn",
            ModelKind::Baseline => "baseline",
        }
    }

    pub fn from_tag(tag: &str) -> Option<ModelKind> {
        match tag {
            "sarn" => Some(ModelKind::Sarn),
            "rn" => Some(ModelKind::Rn),
            "baseline" => Some(ModelKind::Baseline),
            _ => None,
        }
    }
}

/// Output side of one stride-2, k=3, padding-1 conv layer.
fn conv_out(side: usize) -> usize {
    (side - 1) / 2 + 1
}

/// Feature-grid side after the four conv layers.
pub fn grid_side(image_size: u16) -> usize {
    let mut s = image_size as usize;
    for _ in 0..4 {
        s = conv_out(s);
    }
    s
}

/// Objects per image for a given input side.
pub fn object_count(image_size: u16) -> usize {
    grid_side(image_size).pow(2)
}

/// Relation-module row evaluations one forward pass performs.
pub fn count_g_evaluations(kind: ModelKind, n: usize) -> usize {
    assert!(n >= 1, "object count must be positive");
    match kind {
        ModelKind::Sarn | ModelKind::Baseline => n,
        ModelKind::Rn => n * n,
    }
}

/// The encoded object set: `n` rows of `dim` features (conv channels plus
/// the two normalized grid coordinates).
#[derive(Clone, Copy)]
pub struct ObjectSet {
    pub objects: Var,
    pub n: usize,
    pub dim: usize,
}

/// Attention over objects and the induced reference vector.
pub struct ReferenceObject {
    /// `[n, 1]` nonnegative weights summing to 1.
    pub attention: Var,
    /// `[1, dim]` attention-weighted sum of the objects.
    pub ro: Var,
}

/// Relation-module output before and after aggregation.
pub struct RelateOut {
    /// `[rows, hidden]` per-row outputs, one row per evaluation.
    pub g_outputs: Var,
    /// `[1, hidden]` column sums of `g_outputs`.
    pub aggregate: Var,
    /// Row count actually evaluated, read back from the graph.
    pub g_rows: usize,
}

/// Everything a forward pass produces.
pub struct ForwardTrace {
    pub objects: ObjectSet,
    pub attention: Option<Var>,
    pub g_outputs: Var,
    pub g_rows: usize,
    pub aggregate: Var,
    pub logits: Var,
}

/// Converts raw RGB bytes (row-major, as stored in dataset files) to the
/// `[3, side, side]` float tensor the encoder consumes, scaled to [0, 1].
pub fn image_tensor(image_size: u16, pixels: &[u8]) -> Tensor {
    let side = image_size as usize;
    assert_eq!(pixels.len(), 3 * side * side, "pixel buffer size");
    let mut data = vec![0.0f32; 3 * side * side];
    for y in 0..side {
        for x in 0..side {
            for c in 0..3 {
                data[c * side * side + y * side + x] =
                    pixels[3 * (y * side + x) + c] as f32 / 255.0;
            }
        }
    }
    Tensor::new(vec![3, side, side], data)
}

/// Runs the conv encoder: four blocks of conv (k=3, stride 2, padding 1),
/// ReLU, then layer norm over channels at each spatial cell. The feature map
/// is flattened row-major to `n = d*d` objects and each object gets its
/// cell's (x, y) coordinates, normalized to [-1, 1], appended.
pub fn encode_image(g: &mut Graph, params: &ModelParams, image: &Tensor) -> Result<ObjectSet> {
    let shape = image.shape();
    if shape.len() != 3 || shape[0] != 3 || shape[1] != shape[2] {
        return Err(Error::InvalidArgument(format!(
            "encoder needs a square [3, s, s] image, got {:?}",
            shape
        )));
    }
    let mut side = shape[1];
    if side < 16 {
        return Err(Error::InvalidArgument(format!(
            "image side {} below the 16 px minimum",
            side
        )));
    }

    let mut x = g.input(image.clone());
    for l in 0..4 {
        let ids = &params.conv[l];
        x = g.conv2d(&params.set, x, ids.w, ids.b, 2, 1)?;
        x = g.relu(x);
        side = conv_out(side);
        let c = params.config().conv_channels[l];
        // Normalize over channels per cell: expose cells as rows, channels
        // as the trailing dimension.
        let cells = g.reshape(x, &[c, side * side]);
        let cells_t = g.transpose2(cells);
        let normed = g.layer_norm(&params.set, cells_t, ids.gamma, ids.beta, LN_EPS);
        let back = g.transpose2(normed);
        x = g.reshape(back, &[c, side, side]);
    }

    let d = side;
    let n = d * d;
    let c = params.config().conv_channels[3];
    let flat = g.reshape(x, &[c, n]);
    let feats = g.transpose2(flat);

    let mut coords = vec![0.0f32; n * 2];
    for row in 0..d {
        for col in 0..d {
            let norm = |i: usize| {
                if d == 1 {
                    0.0
                } else {
                    -1.0 + 2.0 * i as f32 / (d - 1) as f32
                }
            };
            coords[2 * (row * d + col)] = norm(col);
            coords[2 * (row * d + col) + 1] = norm(row);
        }
    }
    let coords = g.input(Tensor::new(vec![n, 2], coords));
    let objects = g.concat_cols(&[feats, coords]);
    Ok(ObjectSet {
        objects,
        n,
        dim: c + 2,
    })
}

/// Scores every object against the question with the shared attention MLP,
/// softmaxes the scores, and reduces the objects to one reference vector.
pub fn attend_reference(
    g: &mut Graph,
    params: &ModelParams,
    objects: &ObjectSet,
    q: Var,
) -> Result<ReferenceObject> {
    let attn = params.attn.as_ref().ok_or_else(|| {
        Error::InvalidState("this model kind has no attention module".into())
    })?;
    let qb = g.broadcast_rows(q, objects.n);
    let ain = g.concat_cols(&[objects.objects, qb]);
    let h1 = g.linear(&params.set, ain, attn[0].w, attn[0].b)?;
    let h1 = g.relu(h1);
    let h2 = g.linear(&params.set, h1, attn[1].w, attn[1].b)?;
    let h2 = g.relu(h2);
    let logits = g.linear(&params.set, h2, attn[2].w, attn[2].b)?;
    let attention = g.softmax(logits, 0);
    let row = g.transpose2(attention);
    let ro = g.matmul(row, objects.objects);
    Ok(ReferenceObject { attention, ro })
}

/// Three relation-MLP layers, ReLU after each, applied row-wise; rows are
/// summed into the aggregate.
fn relation_mlp(g: &mut Graph, params: &ModelParams, rows_in: Var) -> Result<RelateOut> {
    let mut h = rows_in;
    for fc in &params.rel {
        h = g.linear(&params.set, h, fc.w, fc.b)?;
        h = g.relu(h);
    }
    let aggregate = g.sum_rows(h);
    Ok(RelateOut {
        g_outputs: h,
        aggregate,
        g_rows: g.value(h).shape()[0],
    })
}

/// Relation over (object, reference, question) rows: n evaluations.
pub fn sarn_relate(
    g: &mut Graph,
    params: &ModelParams,
    objects: &ObjectSet,
    ro: Var,
    q: Var,
) -> Result<RelateOut> {
    let rob = g.broadcast_rows(ro, objects.n);
    let qb = g.broadcast_rows(q, objects.n);
    let gin = g.concat_cols(&[objects.objects, rob, qb]);
    relation_mlp(g, params, gin)
}

/// Relation over all ordered object pairs, self-pairs included: n²
/// evaluations.
pub fn rn_relate(
    g: &mut Graph,
    params: &ModelParams,
    objects: &ObjectSet,
    q: Var,
) -> Result<RelateOut> {
    let pairs = g.pair_concat(objects.objects);
    let qb = g.broadcast_rows(q, objects.n * objects.n);
    let gin = g.concat_cols(&[pairs, qb]);
    relation_mlp(g, params, gin)
}

/// Relation over single (object, question) rows: n evaluations.
pub fn baseline_relate(
    g: &mut Graph,
    params: &ModelParams,
    objects: &ObjectSet,
    q: Var,
) -> Result<RelateOut> {
    let qb = g.broadcast_rows(q, objects.n);
    let gin = g.concat_cols(&[objects.objects, qb]);
    relation_mlp(g, params, gin)
}

/// Answer MLP: two hidden layers with ReLU, linear output logits.
pub fn answer_head(g: &mut Graph, params: &ModelParams, aggregate: Var) -> Result<Var> {
    let h1 = g.linear(&params.set, aggregate, params.head[0].w, params.head[0].b)?;
    let h1 = g.relu(h1);
    let h2 = g.linear(&params.set, h1, params.head[1].w, params.head[1].b)?;
    let h2 = g.relu(h2);
    g.linear(&params.set, h2, params.head[2].w, params.head[2].b)
}

/// Attention (when present), relation, and head over an already-encoded
/// object set. Evaluation and introspection enter here directly so the conv
/// encoder can run once per image and serve all of its questions; the
/// numbers are identical to the single-shot path because the same graph ops
/// run on the same values.
pub fn forward_from_objects(
    g: &mut Graph,
    params: &ModelParams,
    objects: &ObjectSet,
    q: Var,
) -> Result<ForwardTrace> {
    let kind = params.config().kind;
    let (attention, relate) = match kind {
        ModelKind::Sarn => {
            let reference = attend_reference(g, params, objects, q)?;
            let relate = sarn_relate(g, params, objects, reference.ro, q)?;
            (Some(reference.attention), relate)
        }
        ModelKind::Rn => (None, rn_relate(g, params, objects, q)?),
        ModelKind::Baseline => (None, baseline_relate(g, params, objects, q)?),
    };
    let logits = answer_head(g, params, relate.aggregate)?;
    Ok(ForwardTrace {
        objects: ObjectSet { ..*objects },
        attention,
        g_outputs: relate.g_outputs,
        g_rows: relate.g_rows,
        aggregate: relate.aggregate,
        logits,
    })
}

/// Full forward pass for one image/question pair.
///
/// `kind` must match the parameters' configured kind; the mismatch is an
/// invalid-state error so callers cannot run one architecture with another's
/// weights.
pub fn forward(
    g: &mut Graph,
    params: &ModelParams,
    kind: ModelKind,
    image: &Tensor,
    question: &[f32],
) -> Result<ForwardTrace> {
    if params.config().kind != kind {
        return Err(Error::InvalidState(format!(
            "parameters are for kind {:?}, forward requested {:?}",
            params.config().kind,
            kind
        )));
    }
    if question.len() != QUESTION_DIM {
        return Err(Error::InvalidArgument(format!(
            "question vector has {} entries, need {}",
            question.len(),
            QUESTION_DIM
        )));
    }
    let q = g.input(Tensor::new(vec![1, QUESTION_DIM], question.to_vec()));
    let objects = encode_image(g, params, image)?;
    forward_from_objects(g, params, &objects, q)
}

/// Stacks single-sample forward logits for a batch of image/question pairs
/// into one `[B, n_answers]` tensor.
pub fn forward_batch(
    params: &ModelParams,
    items: &[(&Tensor, &[f32])],
) -> Result<Tensor> {
    let n_answers = params.config().n_answers;
    let mut data = Vec::with_capacity(items.len() * n_answers);
    for (image, question) in items {
        let mut g = Graph::new();
        let trace = forward(&mut g, params, params.config().kind, image, question)?;
        data.extend_from_slice(g.value(trace.logits).data());
    }
    Ok(Tensor::new(vec![items.len(), n_answers], data))
}
