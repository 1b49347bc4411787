//! Training loop, evaluation, model comparison, and the robustness grid.

mod eval;
mod robust;

pub use eval::{
    compare_models, evaluate, report_csv, AccuracyReport, ComparisonSummary, EvalOutcome,
};
pub use robust::{
    cache_key, robustness_csv, run_robustness_suite, train_cached, RobustnessCell,
    RobustnessGrid, RobustnessSpec, GRID_CONFIGS,
};

use std::path::Path;

use crate::dataset::{encode_question, Dataset};
use crate::error::{Error, Result};
use crate::models::{forward, image_tensor, ModelConfig, ModelKind, ModelParams};
use crate::rng::Pcg32;
use crate::tensor::{
    write_checkpoint, AdamConfig, AdamState, Checkpoint, GradBuffer, Graph, Tensor,
};

/// Gradient workers per batch. The batch is split into this many contiguous
/// chunks and the per-chunk gradient buffers are merged in chunk order, so
/// the reduced gradient is bit-identical no matter how many threads run.
const GRAD_CHUNKS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub lr: f32,
    pub batch_size: usize,
    pub epochs: usize,
    /// Seeds both parameter init (stream 0) and epoch shuffling (stream 1).
    pub seed: u64,
    /// Write an intermediate checkpoint every this many epochs; 0 disables
    /// intermediates (the final checkpoint is always written).
    pub checkpoint_every: usize,
}

impl TrainConfig {
    pub fn new(kind: ModelKind) -> TrainConfig {
        TrainConfig {
            kind,
            lr: 1e-4,
            batch_size: 64,
            epochs: 30,
            seed: 0,
            checkpoint_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidArgument("epochs must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} must be positive and finite",
                self.lr
            )));
        }
        Ok(())
    }
}

/// One training-log line: a train row carries the epoch's mean loss, a test
/// row additionally carries the accuracy report.
#[derive(Debug, Clone)]
pub struct LogRow {
    pub epoch: usize,
    pub split: &'static str,
    pub loss: f64,
    pub report: Option<AccuracyReport>,
}

pub struct TrainOutcome {
    pub params: ModelParams,
    pub adam: AdamState,
    pub log: Vec<LogRow>,
    pub final_report: AccuracyReport,
}

/// Snapshot of parameters plus optimizer moments (`<group>.m` / `<group>.v`).
pub fn training_checkpoint(params: &ModelParams, adam: &AdamState) -> Checkpoint {
    let mut ckpt = params.to_checkpoint(adam.steps());
    let extra: Vec<(String, Tensor)> = params
        .set
        .iter()
        .map(|(id, name, t)| {
            let (m, v) = adam.moments(id);
            let shape = t.shape().to_vec();
            vec![
                (format!("{}.m", name), Tensor::new(shape.clone(), m.to_vec())),
                (format!("{}.v", name), Tensor::new(shape, v.to_vec())),
            ]
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    ckpt.groups.extend(extra);
    ckpt
}

/// Trains `config.kind` from scratch on `train_ds`, evaluating on `test_ds`
/// after every epoch.
///
/// The unit of shuffling and batching is the (image, question) pair; each
/// sample contributes `cross_entropy / batch_len` to the batch gradient.
/// When `run_dir` is given, `train_log.csv` and `model.ckpt` (plus cadence
/// checkpoints) are written there. Everything is deterministic in
/// (config, dataset bytes).
pub fn train(
    config: &TrainConfig,
    train_ds: &Dataset,
    test_ds: &Dataset,
    run_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_ds.config.image_size != test_ds.config.image_size {
        return Err(Error::InvalidArgument(format!(
            "train images are {} px but test images are {} px",
            train_ds.config.image_size, test_ds.config.image_size
        )));
    }
    let model_config = ModelConfig::new(config.kind, train_ds.config.image_size);
    train_with_model_config(config, model_config, train_ds, test_ds, run_dir)
}

pub fn train_with_model_config(
    config: &TrainConfig,
    model_config: ModelConfig,
    train_ds: &Dataset,
    test_ds: &Dataset,
    run_dir: Option<&Path>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if model_config.image_size != train_ds.config.image_size {
        return Err(Error::InvalidArgument(format!(
            "model expects {} px images, dataset provides {} px",
            model_config.image_size, train_ds.config.image_size
        )));
    }
    if train_ds.samples.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }

    if let Some(dir) = run_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let mut params = ModelParams::new(model_config, config.seed)?;
    let mut adam = AdamState::new(
        AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        },
        &params.set,
    );
    let mut shuffle_rng = Pcg32::new(config.seed, 1);

    let mut order: Vec<(u32, u8)> = (0..train_ds.samples.len() as u32)
        .flat_map(|i| (0..train_ds.samples[i as usize].qa.len() as u8).map(move |q| (i, q)))
        .collect();

    let mut log = Vec::new();
    let mut final_report = None;
    for epoch in 1..=config.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut epoch_loss = 0.0f64;
        for batch in order.chunks(config.batch_size) {
            let chunk_len = batch.len().div_ceil(GRAD_CHUNKS);
            let inv_batch = 1.0 / batch.len() as f32;
            let chunk_results: Vec<Result<(GradBuffer, f64)>> = {
                use rayon::prelude::*;
                batch
                    .par_chunks(chunk_len)
                    .map(|chunk| {
                        let mut grads = GradBuffer::new(&params.set);
                        let mut loss_sum = 0.0f64;
                        for &(img, qi) in chunk {
                            let sample = &train_ds.samples[img as usize];
                            let qa = sample.qa[qi as usize];
                            let question = encode_question(qa.question);
                            let image =
                                image_tensor(train_ds.config.image_size, &sample.pixels);
                            let mut g = Graph::new();
                            let trace = forward(
                                &mut g,
                                &params,
                                config.kind,
                                &image,
                                &question,
                            )?;
                            let ce = g.cross_entropy(trace.logits, &[qa.answer as usize])?;
                            loss_sum += g.value(ce).item() as f64;
                            let loss = g.scale(ce, inv_batch);
                            g.backward(loss, &params.set, &mut grads)?;
                        }
                        Ok((grads, loss_sum))
                    })
                    .collect()
            };
            for result in chunk_results {
                let (grads, loss_sum) = result?;
                params.set.accumulate(&grads);
                epoch_loss += loss_sum;
            }
            adam.step(&mut params.set)?;
        }
        let train_loss = epoch_loss / order.len() as f64;
        log.push(LogRow {
            epoch,
            split: "train",
            loss: train_loss,
            report: None,
        });

        let eval = evaluate(&params, test_ds)?;
        log.push(LogRow {
            epoch,
            split: "test",
            loss: eval.mean_loss,
            report: Some(eval.report),
        });
        final_report = Some(eval.report);

        if let Some(dir) = run_dir {
            if config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 {
                let path = dir.join(format!("epoch{:04}.ckpt", epoch));
                write_checkpoint(&path, &training_checkpoint(&params, &adam))?;
            }
            // Keep the log on disk current so long runs can be watched.
            write_train_log(&dir.join("train_log.csv"), &log)?;
        }
    }

    if let Some(dir) = run_dir {
        write_checkpoint(&dir.join("model.ckpt"), &training_checkpoint(&params, &adam))?;
    }

    Ok(TrainOutcome {
        params,
        adam,
        log,
        final_report: final_report.expect("at least one epoch ran"),
    })
}

/// Training log CSV: one row per (epoch, split); train rows leave the
/// accuracy columns empty.
pub fn write_train_log(path: &Path, log: &[LogRow]) -> Result<()> {
    let mut out = String::from(
        "epoch,split,loss,overall,non_rel,rel,horizontal,vertical,shape,cl_col,cl_sh,fur_col,fur_sh,count\n",
    );
    for row in log {
        out.push_str(&format!("{},{},{:.6}", row.epoch, row.split, row.loss));
        match &row.report {
            Some(r) => {
                out.push_str(&format!(
                    ",{:.6},{:.6},{:.6}",
                    r.overall(),
                    r.non_relational(),
                    r.relational()
                ));
                for &q in &crate::dataset::vocab::qtype::REPORT_ORDER {
                    out.push_str(&format!(",{:.6}", r.per_type(q)));
                }
            }
            None => out.push_str(",,,,,,,,,,,"),
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
