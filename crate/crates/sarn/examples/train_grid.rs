//! Produces the cached reduced-scale training artifacts under `runs/`.
//!
//! Four runs: all three model kinds at 64 px / object size 4, plus the
//! attention model again at 128 px / object size 8. Each lands in a
//! directory named by its full configuration; rerunning skips runs whose
//! checkpoints already exist, so the integration suite can evaluate them
//! without retraining. `--probe` instead does a short smoke run and prints
//! the loss curve.

use std::path::PathBuf;
use std::time::Instant;

use sarn::dataset::{Dataset, DatasetConfig, Split};
use sarn::models::ModelKind;
use sarn::train::{train, train_cached, TrainConfig};

fn data_config(image_size: u16, object_size: u16, n_train: u32, n_test: u32) -> DatasetConfig {
    DatasetConfig {
        image_size,
        object_size,
        n_train,
        n_test,
        seed: 7,
    }
}

fn train_config(kind: ModelKind, epochs: usize) -> TrainConfig {
    TrainConfig {
        kind,
        lr: 1e-4,
        batch_size: 64,
        epochs,
        seed: 0,
        checkpoint_every: 0,
    }
}

fn probe(kind: ModelKind, lr: f32, epochs: usize, n_train: u32, batch: usize) {
    let data = data_config(64, 4, n_train, 50);
    let train_ds = Dataset::generate(&data, Split::Train).unwrap();
    let test_ds = Dataset::generate(&data, Split::Test).unwrap();
    let started = Instant::now();
    let outcome = train(
        &TrainConfig {
            lr,
            batch_size: batch,
            ..train_config(kind, epochs)
        },
        &train_ds,
        &test_ds,
        None,
    )
    .unwrap();
    eprintln!("probe finished in {:.1}s", started.elapsed().as_secs_f64());
    for row in &outcome.log {
        match &row.report {
            Some(r) => eprintln!(
                "epoch {:2} {}  loss {:.4}  overall {:.3}  non_rel {:.3}  rel {:.3}",
                row.epoch,
                row.split,
                row.loss,
                r.overall(),
                r.non_relational(),
                r.relational()
            ),
            None => eprintln!("epoch {:2} {} loss {:.4}", row.epoch, row.split, row.loss),
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--probe") {
        let flag = |name: &str| {
            args.iter()
                .position(|a| a == name)
                .and_then(|i| args.get(i + 1))
        };
        let lr = flag("--lr").map_or(1e-4, |v| v.parse().unwrap());
        let epochs = flag("--epochs").map_or(5, |v| v.parse().unwrap());
        let n_train = flag("--n-train").map_or(200, |v| v.parse().unwrap());
        let batch = flag("--batch").map_or(64, |v| v.parse().unwrap());
        let kind = match flag("--kind").map(String::as_str) {
            None | Some("sarn") => ModelKind::Sarn,
            Some("rn") => ModelKind::Rn,
            Some("baseline") => ModelKind::Baseline,
            Some(other) => panic!("unknown kind {other}"),
        };
        probe(kind, lr, epochs, n_train, batch);
        return;
    }

    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../runs");
    let runs = [
        (ModelKind::Sarn, 64u16, 4u16),
        (ModelKind::Baseline, 64, 4),
        (ModelKind::Rn, 64, 4),
        (ModelKind::Sarn, 128, 8),
    ];
    let mut failed = false;
    for (kind, image_size, object_size) in runs {
        let data = data_config(image_size, object_size, 2000, 200);
        let config = train_config(kind, 30);
        let started = Instant::now();
        eprintln!("=== {} at {}_{}", kind.tag(), image_size, object_size);
        match train_cached(&config, &data, &root) {
            Ok((_, eval, dir)) => eprintln!(
                "    done in {:.0}s  overall {:.4}  non_rel {:.4}  rel {:.4}  ({})",
                started.elapsed().as_secs_f64(),
                eval.report.overall(),
                eval.report.non_relational(),
                eval.report.relational(),
                dir.display()
            ),
            Err(e) => {
                failed = true;
                eprintln!("    FAILED after {:.0}s: {e}", started.elapsed().as_secs_f64());
            }
        }
    }
    std::process::exit(i32::from(failed));
}
