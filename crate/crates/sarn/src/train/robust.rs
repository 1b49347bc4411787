use std::path::{Path, PathBuf};

use super::{evaluate, train, AccuracyReport, EvalOutcome, TrainConfig};
use crate::dataset::{Dataset, DatasetConfig, Split};
use crate::error::{Error, Result};
use crate::models::{ModelConfig, ModelKind, ModelParams};
use crate::tensor::read_checkpoint;

/// The image-size/object-size grid: the reference geometry first, then the
/// proportional pair and the fixed-object-size pair.
pub const GRID_CONFIGS: [(u16, u16); 5] = [(75, 5), (64, 4), (128, 8), (64, 5), (128, 5)];

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessSpec {
    /// (image_size, object_size) cells, each drawn from [`GRID_CONFIGS`].
    pub configs: Vec<(u16, u16)>,
    pub kinds: Vec<ModelKind>,
    pub n_train: u32,
    pub n_test: u32,
    pub data_seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f32,
    pub train_seed: u64,
}

impl RobustnessSpec {
    /// Full grid at reduced scale: 2000 training images, 30 epochs per cell.
    pub fn reduced() -> RobustnessSpec {
        RobustnessSpec {
            configs: GRID_CONFIGS.to_vec(),
            kinds: vec![ModelKind::Sarn, ModelKind::Rn, ModelKind::Baseline],
            n_train: 2000,
            n_test: 200,
            data_seed: 7,
            epochs: 30,
            batch_size: 64,
            lr: 1e-4,
            train_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.configs.is_empty() || self.kinds.is_empty() {
            return Err(Error::InvalidArgument(
                "robustness grid needs at least one configuration and one model kind".into(),
            ));
        }
        for &c in &self.configs {
            if !GRID_CONFIGS.contains(&c) {
                return Err(Error::InvalidArgument(format!(
                    "configuration {}_{} is not one of the grid cells {:?}",
                    c.0, c.1, GRID_CONFIGS
                )));
            }
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidArgument(
                "robustness grid needs non-empty train and test splits".into(),
            ));
        }
        Ok(())
    }

    fn train_config(&self, kind: ModelKind) -> TrainConfig {
        TrainConfig {
            kind,
            lr: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.train_seed,
            checkpoint_every: 0,
        }
    }

    fn dataset_config(&self, image_size: u16, object_size: u16) -> DatasetConfig {
        DatasetConfig {
            image_size,
            object_size,
            n_train: self.n_train,
            n_test: self.n_test,
            seed: self.data_seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RobustnessCell {
    pub image_size: u16,
    pub object_size: u16,
    pub kind: ModelKind,
    /// A failed sub-run keeps its error message; the suite carries on.
    pub outcome: std::result::Result<AccuracyReport, String>,
}

#[derive(Debug, Clone)]
pub struct RobustnessGrid {
    pub cells: Vec<RobustnessCell>,
}

/// Directory name identifying one (model, data, training) combination; every
/// behavior-affecting setting appears in it.
pub fn cache_key(kind: ModelKind, data: &DatasetConfig, train: &TrainConfig) -> String {
    format!(
        "{}-is{}-os{}-tr{}-te{}-ds{}-ep{}-bs{}-lr{}-ts{}",
        kind.tag(),
        data.image_size,
        data.object_size,
        data.n_train,
        data.n_test,
        data.seed,
        train.epochs,
        train.batch_size,
        train.lr,
        train.seed
    )
}

/// Trains under `cache_root/<cache_key>/`, or reuses the checkpoint already
/// there. Either way the test split is regenerated and the returned report is
/// freshly computed, so a stale or foreign checkpoint can only surface as an
/// honest load failure (which falls back to retraining), never as a silently
/// wrong number.
pub fn train_cached(
    train_config: &TrainConfig,
    data: &DatasetConfig,
    cache_root: &Path,
) -> Result<(ModelParams, EvalOutcome, PathBuf)> {
    data.validate()?;
    train_config.validate()?;
    let dir = cache_root.join(cache_key(train_config.kind, data, train_config));
    let test_ds = Dataset::generate(data, Split::Test)?;
    let model_config = ModelConfig::new(train_config.kind, data.image_size);

    let ckpt_path = dir.join("model.ckpt");
    if ckpt_path.exists() {
        if let Ok(params) = read_checkpoint(&ckpt_path)
            .and_then(|ckpt| ModelParams::from_checkpoint(model_config, &ckpt))
        {
            let eval = evaluate(&params, &test_ds)?;
            return Ok((params, eval, dir));
        }
    }

    let train_ds = Dataset::generate(data, Split::Train)?;
    let outcome = train(train_config, &train_ds, &test_ds, Some(&dir))?;
    let eval = evaluate(&outcome.params, &test_ds)?;
    let csv_path = dir.join("eval.csv");
    std::fs::write(&csv_path, super::eval::report_csv(&eval.report))
        .map_err(|e| Error::io(&csv_path, e))?;
    Ok((outcome.params, eval, dir))
}

/// Trains and evaluates every (configuration, kind) cell, reusing cached
/// checkpoints. Sub-run failures are recorded in their cells and skipped.
pub fn run_robustness_suite(spec: &RobustnessSpec, cache_root: &Path) -> Result<RobustnessGrid> {
    spec.validate()?;
    let mut cells = Vec::new();
    for &(image_size, object_size) in &spec.configs {
        for &kind in &spec.kinds {
            let data = spec.dataset_config(image_size, object_size);
            let outcome = train_cached(&spec.train_config(kind), &data, cache_root)
                .map(|(_, eval, _)| eval.report)
                .map_err(|e| e.to_string());
            cells.push(RobustnessCell {
                image_size,
                object_size,
                kind,
                outcome,
            });
        }
    }
    Ok(RobustnessGrid { cells })
}

/// Grid CSV: one column per geometry, three rows (non_rel, rel, total) per
/// model. Failed cells are left empty.
pub fn robustness_csv(grid: &RobustnessGrid) -> String {
    let mut configs: Vec<(u16, u16)> = Vec::new();
    let mut kinds: Vec<ModelKind> = Vec::new();
    for c in &grid.cells {
        if !configs.contains(&(c.image_size, c.object_size)) {
            configs.push((c.image_size, c.object_size));
        }
        if !kinds.contains(&c.kind) {
            kinds.push(c.kind);
        }
    }

    let mut out = String::from("model,metric");
    for &(is, os) in &configs {
        out.push_str(&format!(",{}_{}", is, os));
    }
    out.push('\n');

    type Metric = (&'static str, fn(&AccuracyReport) -> f64);
    const METRICS: [Metric; 3] = [
        ("non_rel", AccuracyReport::non_relational),
        ("rel", AccuracyReport::relational),
        ("total", AccuracyReport::overall),
    ];
    for &kind in &kinds {
        for (label, metric) in METRICS {
            out.push_str(kind.tag());
            out.push(',');
            out.push_str(label);
            for &(is, os) in &configs {
                out.push(',');
                let report = grid
                    .cells
                    .iter()
                    .find(|c| c.kind == kind && (c.image_size, c.object_size) == (is, os))
                    .and_then(|c| c.outcome.as_ref().ok());
                if let Some(r) = report {
                    out.push_str(&format!("{:.4}", metric(r)));
                }
            }
            out.push('\n');
        }
    }
    out
}
