//! Release gates for the whole pipeline, one test per numbered criterion.
//!
//! Each test prints a single `criterion N: PASS/FAIL - detail` line (visible
//! under `--nocapture` or on failure) and then asserts. Criteria 1 through 4
//! and the structural half of 7 run on untrained parameters and together fit
//! a five-minute budget, which criterion 8 enforces by rerunning them under a
//! timer. Criteria 5 through 7 evaluate models trained at reduced scale; they
//! reuse checkpoints cached under `runs/` at the repository root and train
//! from scratch there when the cache is empty, which takes hours on one core.

mod common;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use sarn::dataset::{encode_question, Dataset, DatasetConfig, Question, Split};
use sarn::introspect::{
    attention_map, build_report, export_report, grid_csv, gtheta_channel_sum, localization_score,
    parse_grid_csv, Grid,
};
use sarn::models::{forward, image_tensor, ModelConfig, ModelKind, ModelParams};
use sarn::rng::Pcg32;
use sarn::tensor::{grad_check, GradBuffer, Graph, ParamSet, Tensor};
use sarn::train::{train, train_cached, EvalOutcome, RobustnessSpec, TrainConfig};
use sarn::Result;

use common::shadow::ShadowSarn;

/// Trained-model cells share one on-disk cache; serialize access so parallel
/// test threads never race on a half-written checkpoint directory.
static CACHE_LOCK: Mutex<()> = Mutex::new(());

fn lock_cache() -> std::sync::MutexGuard<'static, ()> {
    // A FAIL in one gate must not hide the others behind lock poisoning.
    CACHE_LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn pass_line(criterion: usize, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} - {detail}");
}

fn flatten(r: Result<(bool, String)>) -> (bool, String) {
    match r {
        Ok(x) => x,
        Err(e) => (false, format!("errored: {e}")),
    }
}

fn rand_tensor(shape: Vec<usize>, limit: f32, seed: u64) -> Tensor {
    let n: usize = shape.iter().product();
    let mut rng = Pcg32::new(seed, 0);
    Tensor::new(shape, (0..n).map(|_| rng.next_symmetric(limit)).collect())
}

/// Values with magnitude in [0.25, 1.25] and mixed signs, so a finite
/// difference step of 0.05 never crosses the relu kink.
fn rand_tensor_off_zero(shape: Vec<usize>, seed: u64) -> Tensor {
    let n: usize = shape.iter().product();
    let mut rng = Pcg32::new(seed, 0);
    let data = (0..n)
        .map(|_| {
            let v = 0.25 + rng.next_f32();
            if rng.next_u32() % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect();
    Tensor::new(shape, data)
}

// ---------------------------------------------------------------------------
// criterion 1: analytic gradients against central finite differences
// ---------------------------------------------------------------------------

/// Compares the analytic gradient of a scalar f32 graph against central
/// differences of `eval`, an exact f64 mirror of the same function. Every
/// coordinate of every group is probed; the mirror's f64 arithmetic keeps the
/// difference quotient far below the comparison tolerance.
fn fd_against_f64(
    ps: &ParamSet,
    build: impl Fn(&ParamSet, &mut Graph) -> Result<sarn::tensor::Var>,
    eval: impl Fn(&[Vec<f64>]) -> f64,
) -> Result<f32> {
    let mut g = Graph::new();
    let loss = build(ps, &mut g)?;
    let mut buf = GradBuffer::new(ps);
    g.backward(loss, ps, &mut buf)?;

    let ids: Vec<_> = ps.iter().map(|(id, _, t)| (id, t.numel())).collect();
    let mut vals: Vec<Vec<f64>> = ps
        .iter()
        .map(|(_, _, t)| t.data().iter().map(|&v| v as f64).collect())
        .collect();
    let h = 1e-5f64;
    let mut worst = 0.0f64;
    for (gi, &(id, numel)) in ids.iter().enumerate() {
        let analytic = buf.get(id).expect("dense gradients");
        for c in 0..numel {
            let orig = vals[gi][c];
            vals[gi][c] = orig + h;
            let up = eval(&vals);
            vals[gi][c] = orig - h;
            let down = eval(&vals);
            vals[gi][c] = orig;
            let fd = (up - down) / (2.0 * h);
            let a = analytic[c] as f64;
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1e-4));
        }
    }
    Ok(worst as f32)
}

fn mask_dot(out: &[f64], mask: &Tensor) -> f64 {
    out.iter().zip(mask.data()).map(|(&o, &m)| o * m as f64).sum()
}

fn layer_norm_f64_check() -> Result<f32> {
    let mut ps = ParamSet::new();
    let x = ps.add("x", rand_tensor(vec![2, 4], 1.5, 40));
    let mut gamma_rng = Pcg32::new(41, 0);
    let gamma_data: Vec<f32> = (0..4).map(|_| 1.0 + gamma_rng.next_symmetric(0.3)).collect();
    let gamma = ps.add("gamma", Tensor::new(vec![4], gamma_data));
    let beta = ps.add("beta", rand_tensor(vec![4], 0.2, 42));
    let mask = rand_tensor(vec![2, 4], 0.3, 43);
    let eps = 1e-5f32 as f64;
    fd_against_f64(
        &ps,
        |p, g| {
            let xv = g.param(p, x);
            let y = g.layer_norm(p, xv, gamma, beta, 1e-5);
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        },
        |vals| {
            let (xs, gs, bs) = (&vals[0], &vals[1], &vals[2]);
            let d = 4;
            let mut out = vec![0.0; xs.len()];
            for r in 0..xs.len() / d {
                let row = &xs[r * d..(r + 1) * d];
                let mean = row.iter().sum::<f64>() / d as f64;
                let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
                let rstd = 1.0 / (var + eps).sqrt();
                for i in 0..d {
                    out[r * d + i] = (row[i] - mean) * rstd * gs[i] + bs[i];
                }
            }
            mask_dot(&out, &mask)
        },
    )
}

fn softmax_f64_check(axis: usize) -> Result<f32> {
    let (shape, seed_x, seed_m) = if axis == 0 {
        (vec![6, 2], 50, 51)
    } else {
        (vec![2, 6], 55, 56)
    };
    let (rows, cols) = (shape[0], shape[1]);
    let mut ps = ParamSet::new();
    let x = ps.add("x", rand_tensor(shape, 1.0, seed_x));
    let mask = rand_tensor(vec![rows, cols], 0.3, seed_m);
    fd_against_f64(
        &ps,
        |p, g| {
            let xv = g.param(p, x);
            let y = g.softmax(xv, axis);
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        },
        |vals| {
            let xs = &vals[0];
            let mut out = vec![0.0; xs.len()];
            // Lanes run along `axis`; the other dimension indexes the lanes.
            let (lanes, lane_len, lane_stride, elem_stride) = if axis == 0 {
                (cols, rows, 1, cols)
            } else {
                (rows, cols, cols, 1)
            };
            for lane in 0..lanes {
                let at = |i: usize| lane * lane_stride + i * elem_stride;
                let max = (0..lane_len).map(|i| xs[at(i)]).fold(f64::MIN, f64::max);
                let sum: f64 = (0..lane_len).map(|i| (xs[at(i)] - max).exp()).sum();
                for i in 0..lane_len {
                    out[at(i)] = (xs[at(i)] - max).exp() / sum;
                }
            }
            mask_dot(&out, &mask)
        },
    )
}

fn cross_entropy_f64_check() -> Result<f32> {
    let mut ps = ParamSet::new();
    let x = ps.add("logits", rand_tensor(vec![3, 6], 1.0, 60));
    let targets = [1usize, 4, 2];
    fd_against_f64(
        &ps,
        |p, g| {
            let xv = g.param(p, x);
            g.cross_entropy(xv, &targets)
        },
        |vals| {
            let xs = &vals[0];
            let cols = 6;
            let mut total = 0.0;
            for (r, &t) in targets.iter().enumerate() {
                let row = &xs[r * cols..(r + 1) * cols];
                let max = row.iter().cloned().fold(f64::MIN, f64::max);
                let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
                total += lse - row[t];
            }
            total / targets.len() as f64
        },
    )
}

/// Worst relative error per operator, checked through `grad_check`. Each
/// case routes the operator's output through a fixed random mask (an input,
/// not a parameter) into a scalar, so every output element carries a
/// distinct weight and index mix-ups cannot cancel.
fn operator_checks() -> Result<Vec<(&'static str, f32)>> {
    let mut out: Vec<(&'static str, f32)> = Vec::new();

    // conv2d: kernel 3, stride 2, padding 1, exactly as the encoder uses it.
    {
        let mut ps = ParamSet::new();
        let x = ps.add("x", rand_tensor(vec![3, 6, 6], 1.0, 10));
        let w = ps.add("w", rand_tensor(vec![4, 3, 3, 3], 0.5, 11));
        let b = ps.add("b", rand_tensor(vec![4], 0.5, 12));
        let mask = rand_tensor(vec![4, 3, 3], 0.5, 13);
        let err = grad_check(&mut ps, 0.25, 1, |p, g| {
            let xv = g.param(p, x);
            let y = g.conv2d(p, xv, w, b, 2, 1)?;
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        })?;
        out.push(("conv2d", err));
    }

    // linear: y = x W^T + b.
    {
        let mut ps = ParamSet::new();
        let x = ps.add("x", rand_tensor(vec![2, 5], 1.0, 20));
        let w = ps.add("w", rand_tensor(vec![3, 5], 0.5, 21));
        let b = ps.add("b", rand_tensor(vec![3], 0.5, 22));
        let mask = rand_tensor(vec![2, 3], 0.5, 23);
        let err = grad_check(&mut ps, 0.25, 2, |p, g| {
            let xv = g.param(p, x);
            let y = g.linear(p, xv, w, b)?;
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        })?;
        out.push(("linear", err));
    }

    // relu: inputs bounded away from zero so the kink is never crossed.
    {
        let mut ps = ParamSet::new();
        let x = ps.add("x", rand_tensor_off_zero(vec![4, 4], 30));
        let mask = rand_tensor(vec![4, 4], 0.5, 31);
        let err = grad_check(&mut ps, 0.05, 3, |p, g| {
            let xv = g.param(p, x);
            let y = g.relu(xv);
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        })?;
        out.push(("relu", err));
    }

    // The normalizing operators couple every output to every input, so a
    // single-coordinate perturbation changes all outputs and the f32 rounding
    // no longer cancels between the two central-difference evaluations. The
    // difference quotient for these comes from an exact f64 mirror instead.
    out.push(("layer_norm", layer_norm_f64_check()?));
    out.push(("softmax_axis0", softmax_f64_check(0)?));
    out.push(("softmax_axis1", softmax_f64_check(1)?));
    out.push(("cross_entropy", cross_entropy_f64_check()?));

    // matmul: both factors are parameters, so both input gradients are hit.
    {
        let mut ps = ParamSet::new();
        let a = ps.add("a", rand_tensor(vec![3, 4], 1.0, 70));
        let b = ps.add("b", rand_tensor(vec![4, 2], 1.0, 71));
        let mask = rand_tensor(vec![3, 2], 0.5, 72);
        let err = grad_check(&mut ps, 0.25, 8, |p, g| {
            let av = g.param(p, a);
            let bv = g.param(p, b);
            let y = g.matmul(av, bv);
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        })?;
        out.push(("matmul", err));
    }

    // mul: elementwise product of two parameters.
    {
        let mut ps = ParamSet::new();
        let a = ps.add("a", rand_tensor(vec![3, 4], 1.0, 80));
        let b = ps.add("b", rand_tensor(vec![3, 4], 1.0, 81));
        let mask = rand_tensor(vec![3, 4], 0.5, 82);
        let err = grad_check(&mut ps, 0.25, 9, |p, g| {
            let av = g.param(p, a);
            let bv = g.param(p, b);
            let y = g.mul(av, bv);
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        })?;
        out.push(("mul", err));
    }

    // scale.
    {
        let mut ps = ParamSet::new();
        let x = ps.add("x", rand_tensor(vec![3, 3], 1.0, 90));
        let mask = rand_tensor(vec![3, 3], 0.5, 91);
        let err = grad_check(&mut ps, 0.25, 10, |p, g| {
            let xv = g.param(p, x);
            let y = g.scale(xv, 0.7);
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        })?;
        out.push(("scale", err));
    }

    // transpose2.
    {
        let mut ps = ParamSet::new();
        let x = ps.add("x", rand_tensor(vec![3, 5], 1.0, 100));
        let mask = rand_tensor(vec![5, 3], 0.5, 101);
        let err = grad_check(&mut ps, 0.25, 11, |p, g| {
            let xv = g.param(p, x);
            let y = g.transpose2(xv);
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        })?;
        out.push(("transpose2", err));
    }

    // reshape.
    {
        let mut ps = ParamSet::new();
        let x = ps.add("x", rand_tensor(vec![3, 4], 1.0, 110));
        let mask = rand_tensor(vec![2, 6], 0.5, 111);
        let err = grad_check(&mut ps, 0.25, 12, |p, g| {
            let xv = g.param(p, x);
            let y = g.reshape(xv, &[2, 6]);
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        })?;
        out.push(("reshape", err));
    }

    // concat_cols with three differently sized pieces.
    {
        let mut ps = ParamSet::new();
        let a = ps.add("a", rand_tensor(vec![2, 3], 1.0, 120));
        let b = ps.add("b", rand_tensor(vec![2, 4], 1.0, 121));
        let c = ps.add("c", rand_tensor(vec![2, 2], 1.0, 122));
        let mask = rand_tensor(vec![2, 9], 0.5, 123);
        let err = grad_check(&mut ps, 0.25, 13, |p, g| {
            let av = g.param(p, a);
            let bv = g.param(p, b);
            let cv = g.param(p, c);
            let y = g.concat_cols(&[av, bv, cv]);
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        })?;
        out.push(("concat_cols", err));
    }

    // broadcast_rows.
    {
        let mut ps = ParamSet::new();
        let x = ps.add("x", rand_tensor(vec![1, 6], 1.0, 130));
        let mask = rand_tensor(vec![5, 6], 0.5, 131);
        let err = grad_check(&mut ps, 0.25, 14, |p, g| {
            let xv = g.param(p, x);
            let y = g.broadcast_rows(xv, 5);
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        })?;
        out.push(("broadcast_rows", err));
    }

    // sum_rows.
    {
        let mut ps = ParamSet::new();
        let x = ps.add("x", rand_tensor(vec![6, 3], 1.0, 140));
        let mask = rand_tensor(vec![1, 3], 0.5, 141);
        let err = grad_check(&mut ps, 0.25, 15, |p, g| {
            let xv = g.param(p, x);
            let y = g.sum_rows(xv);
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        })?;
        out.push(("sum_rows", err));
    }

    // sum_all.
    {
        let mut ps = ParamSet::new();
        let x = ps.add("x", rand_tensor(vec![4, 3], 1.0, 150));
        let err = grad_check(&mut ps, 0.25, 16, |p, g| {
            let xv = g.param(p, x);
            Ok(g.sum_all(xv))
        })?;
        out.push(("sum_all", err));
    }

    // pair_concat: every ordered row pair, concatenated.
    {
        let mut ps = ParamSet::new();
        let x = ps.add("x", rand_tensor(vec![4, 5], 1.0, 160));
        let mask = rand_tensor(vec![16, 10], 0.5, 161);
        let err = grad_check(&mut ps, 0.25, 17, |p, g| {
            let xv = g.param(p, x);
            let y = g.pair_concat(xv);
            let m = g.input(mask.clone());
            let prod = g.mul(y, m);
            Ok(g.sum_all(prod))
        })?;
        out.push(("pair_concat", err));
    }

    Ok(out)
}

/// Full single-sample loss check: analytic gradients from the f32 graph
/// against central differences of an independent all-f64 reimplementation of
/// the same forward pass. The f64 side makes the difference quotient exact
/// enough to resolve even near-zero gradient coordinates, which f32
/// evaluation noise would swamp.
fn full_loss_check() -> Result<(f32, f64, f64)> {
    let data_cfg = DatasetConfig {
        image_size: 32,
        object_size: 2,
        n_train: 0,
        n_test: 1,
        seed: 3,
    };
    let ds = Dataset::generate(&data_cfg, Split::Test)?;
    let sample = &ds.samples[0];
    let qa = sample.qa[5];
    let qvec = encode_question(qa.question);
    let params = ModelParams::new(ModelConfig::new(ModelKind::Sarn, 32), 41)?;
    let image = image_tensor(32, &sample.pixels);

    let mut g = Graph::new();
    let trace = forward(&mut g, &params, ModelKind::Sarn, &image, &qvec)?;
    let loss = g.cross_entropy(trace.logits, &[qa.answer as usize])?;
    let lib_loss = g.value(loss).item() as f64;
    let mut grads = GradBuffer::new(&params.set);
    g.backward(loss, &params.set, &mut grads)?;

    let mut shadow = ShadowSarn::from_params(&params);
    let shadow_loss = shadow.loss(&sample.pixels, &qvec, qa.answer as usize);
    let loss_gap = (shadow_loss - lib_loss).abs() / lib_loss.abs().max(1e-4);

    let h = 1e-5f64;
    let mut worst = 0.0f64;
    let mut worst_at: (String, usize, f64, f64) = (String::new(), 0, 0.0, 0.0);
    let mut probed = 0usize;
    let mut skipped = 0usize;
    let names: Vec<(String, usize, Vec<f32>)> = params
        .set
        .iter()
        .map(|(id, name, t)| {
            (
                name.to_string(),
                t.numel(),
                grads.get(id).expect("dense gradients").to_vec(),
            )
        })
        .collect();
    for (gi, (name, numel, analytic)) in names.iter().enumerate() {
        let coords: Vec<usize> = if *numel <= 30 {
            (0..*numel).collect()
        } else {
            let mut rng = Pcg32::new(1234, gi as u64);
            let mut seen = std::collections::HashSet::new();
            let mut picks = Vec::new();
            while picks.len() < 30 {
                let c = rng.next_below(*numel as u32) as usize;
                if seen.insert(c) {
                    picks.push(c);
                }
            }
            picks
        };
        for c in coords {
            let mut eval_at = |v: f64, shadow: &mut ShadowSarn| {
                shadow.group_mut(name)[c] = v;
                shadow.loss(&sample.pixels, &qvec, qa.answer as usize)
            };
            let orig = shadow.group_mut(name)[c];
            let up = eval_at(orig + h, &mut shadow);
            let down = eval_at(orig - h, &mut shadow);
            let up2 = eval_at(orig + 2.0 * h, &mut shadow);
            let down2 = eval_at(orig - 2.0 * h, &mut shadow);
            shadow.group_mut(name)[c] = orig;
            probed += 1;

            // Three stencils around the same point agree to O(h * f'') when
            // the loss is locally smooth; a relu kink inside the probe window
            // makes them disagree by the slope jump. Kink-adjacent
            // coordinates have no well-defined difference quotient, so they
            // are skipped (and counted, to bound how many may drop out).
            let s1 = (up - down) / (2.0 * h);
            let s2 = (up2 - shadow_loss) / (2.0 * h);
            let s3 = (shadow_loss - down2) / (2.0 * h);
            let spread = s1.max(s2).max(s3) - s1.min(s2).min(s3);
            let scale = s1.abs().max(s2.abs()).max(s3.abs()).max(1e-4);
            if spread > (5e-3 * scale).max(1e-3) {
                skipped += 1;
                continue;
            }

            // Floor the denominator at 1e-3: coordinates below it are
            // compared absolutely at the 1e-6 level, which is where f32
            // backward rounding lives. The attention score bias is the
            // canonical case: its true gradient is exactly zero because a
            // shared shift cancels in the softmax, and the analytic side can
            // only produce a rounding residue there.
            let a = analytic[c] as f64;
            let denom = a.abs().max(s1.abs()).max(1e-3);
            let rel = (a - s1).abs() / denom;
            if rel > worst {
                worst = rel;
                worst_at = (name.clone(), c, a, s1);
            }
        }
    }
    eprintln!(
        "full loss: probed {probed} coords, skipped {skipped} kink-adjacent, worst at {} [{}] analytic {:.6e} fd {:.6e}",
        worst_at.0, worst_at.1, worst_at.2, worst_at.3
    );
    if skipped * 20 > probed {
        return Err(sarn::Error::InvalidState(format!(
            "{skipped} of {probed} probed coordinates sat next to a relu kink; the check needs \
             at least 95 percent smooth coverage"
        )));
    }
    Ok((worst as f32, loss_gap, lib_loss))
}

fn run_criterion_1() -> Result<(bool, String)> {
    let t0 = Instant::now();
    let per_op = operator_checks()?;
    for (name, err) in &per_op {
        eprintln!("  op {name}: rel err {err:.3e}");
    }
    let worst_op = per_op
        .iter()
        .cloned()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let ops_ok = per_op.iter().all(|&(_, e)| e < 1e-4);
    let (full_err, loss_gap, _) = full_loss_check()?;
    let full_ok = full_err < 1e-3 && loss_gap < 1e-4;
    let secs = t0.elapsed().as_secs_f64();
    let ok = ops_ok && full_ok;
    Ok((
        ok,
        format!(
            "worst operator rel err {:.2e} ({}, {} ops, tol 1e-4), full loss rel err {:.2e} \
             (tol 1e-3, f64 reimplementation agrees within {:.2e}), {:.1}s",
            worst_op.1,
            worst_op.0,
            per_op.len(),
            full_err,
            loss_gap,
            secs
        ),
    ))
}

// ---------------------------------------------------------------------------
// criterion 2: generated answers against the sort-based oracle
// ---------------------------------------------------------------------------

fn run_criterion_2() -> Result<(bool, String)> {
    let t0 = Instant::now();
    let cfg = DatasetConfig {
        image_size: 75,
        object_size: 5,
        n_train: 500,
        n_test: 0,
        seed: 2026,
    };
    let ds = Dataset::generate(&cfg, Split::Train)?;
    let mut total = 0u32;
    let mut mismatches = 0u32;
    for sample in &ds.samples {
        if sample.qa.len() != DatasetConfig::QUESTIONS_PER_IMAGE {
            return Ok((
                false,
                format!("sample has {} questions, expected {}", sample.qa.len(), DatasetConfig::QUESTIONS_PER_IMAGE),
            ));
        }
        for qa in &sample.qa {
            total += 1;
            let expect = common::sorted_distance_answer(&cfg, &sample.scene, qa.question);
            if expect != qa.answer {
                mismatches += 1;
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let ok = ds.samples.len() == 500 && total == 24_000 && mismatches == 0 && secs < 60.0;
    Ok((
        ok,
        format!(
            "{}/{} answers agree across {} scenes in {:.1}s (budget 60s)",
            total - mismatches,
            total,
            ds.samples.len(),
            secs
        ),
    ))
}

// ---------------------------------------------------------------------------
// criterion 3: relation-module call counts
// ---------------------------------------------------------------------------

fn run_criterion_3() -> Result<(bool, String)> {
    let question = encode_question(Question { color: 1, qtype: 4 });
    let mut lines = Vec::new();
    let mut ok = true;
    for &(size, n) in &[(64u16, 16usize), (75, 25), (128, 64)] {
        for &kind in &[ModelKind::Sarn, ModelKind::Rn, ModelKind::Baseline] {
            let params = ModelParams::new(ModelConfig::new(kind, size), 5)?;
            let side = size as usize;
            let mut rng = Pcg32::new(size as u64, 9);
            let image = Tensor::new(
                vec![3, side, side],
                (0..3 * side * side).map(|_| rng.next_f32()).collect(),
            );
            let mut g = Graph::new();
            let trace = forward(&mut g, &params, kind, &image, &question)?;
            let expect = if kind == ModelKind::Rn { n * n } else { n };
            if trace.g_rows != expect {
                ok = false;
                lines.push(format!(
                    "{:?} at n={} ran {} relation rows, expected {}",
                    kind, n, trace.g_rows, expect
                ));
            }
        }
    }
    if ok {
        Ok((
            true,
            "relation rows exactly n for single-reference and no-pairing models, n^2 for \
             all-pairs, at n in {16, 25, 64}"
                .to_string(),
        ))
    } else {
        Ok((false, lines.join("; ")))
    }
}

// ---------------------------------------------------------------------------
// criterion 4: byte-identical regeneration and retraining
// ---------------------------------------------------------------------------

fn run_criterion_4() -> Result<(bool, String)> {
    let dir = tempfile::tempdir().expect("create temp dir");
    let cfg = DatasetConfig {
        image_size: 32,
        object_size: 2,
        n_train: 4,
        n_test: 2,
        seed: 3,
    };

    let mut data_ok = true;
    for (split, name) in [(Split::Train, "train"), (Split::Test, "test")] {
        let a = dir.path().join(format!("{name}_a.socv"));
        let b = dir.path().join(format!("{name}_b.socv"));
        sarn::dataset::write_dataset(&a, &Dataset::generate(&cfg, split)?)?;
        sarn::dataset::write_dataset(&b, &Dataset::generate(&cfg, split)?)?;
        let ba = std::fs::read(&a).expect("read dataset file");
        let bb = std::fs::read(&b).expect("read dataset file");
        data_ok &= ba == bb && !ba.is_empty();
    }

    let train_ds = Dataset::generate(&cfg, Split::Train)?;
    let test_ds = Dataset::generate(&cfg, Split::Test)?;
    let tc = TrainConfig {
        kind: ModelKind::Sarn,
        lr: 1e-3,
        batch_size: 8,
        epochs: 2,
        seed: 0,
        checkpoint_every: 0,
    };
    let run_a = dir.path().join("run_a");
    let run_b = dir.path().join("run_b");
    train(&tc, &train_ds, &test_ds, Some(&run_a))?;
    train(&tc, &train_ds, &test_ds, Some(&run_b))?;
    let mut ckpt_ok = true;
    for name in ["model.ckpt", "train_log.csv"] {
        let pa = run_a.join(name);
        let pb = run_b.join(name);
        let ba = std::fs::read(&pa).expect("read run file");
        let bb = std::fs::read(&pb).expect("read run file");
        ckpt_ok &= ba == bb && !ba.is_empty();
    }

    let ok = data_ok && ckpt_ok;
    Ok((
        ok,
        format!(
            "dataset files byte-identical: {}, checkpoint and log byte-identical \
             across two training runs: {}",
            data_ok, ckpt_ok
        ),
    ))
}

// ---------------------------------------------------------------------------
// criteria 5 and 6: reduced-scale accuracy gates on cached trained models
// ---------------------------------------------------------------------------

fn cache_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("..").join("..").join("runs")
}

fn reduced_data(image_size: u16, object_size: u16) -> DatasetConfig {
    let spec = RobustnessSpec::reduced();
    DatasetConfig {
        image_size,
        object_size,
        n_train: spec.n_train,
        n_test: spec.n_test,
        seed: spec.data_seed,
    }
}

/// Trains or loads one reduced-scale cell. Every cell shares the training
/// settings of the reduced grid, so all models in criteria 5 and 6 are
/// trained identically and the command-line grid reuses the same cache.
fn reduced_cell(
    kind: ModelKind,
    image_size: u16,
    object_size: u16,
) -> Result<(ModelParams, EvalOutcome)> {
    let spec = RobustnessSpec::reduced();
    let tc = TrainConfig {
        kind,
        lr: spec.lr,
        batch_size: spec.batch_size,
        epochs: spec.epochs,
        seed: spec.train_seed,
        checkpoint_every: 0,
    };
    let (params, eval, _dir) = train_cached(&tc, &reduced_data(image_size, object_size), &cache_root())?;
    Ok((params, eval))
}

fn run_criterion_5() -> Result<(bool, String)> {
    let (_, sarn_eval) = reduced_cell(ModelKind::Sarn, 64, 4)?;
    let (_, base_eval) = reduced_cell(ModelKind::Baseline, 64, 4)?;
    let non_rel = sarn_eval.report.non_relational();
    let rel = sarn_eval.report.relational();
    let base_rel = base_eval.report.relational();
    let ok = non_rel >= 0.95 && rel - base_rel >= 0.03;
    Ok((
        ok,
        format!(
            "non-relational {:.4} (needs >= 0.95), relational {:.4} vs no-pairing {:.4} \
             (margin {:+.4}, needs >= 0.03)",
            non_rel,
            rel,
            base_rel,
            rel - base_rel
        ),
    ))
}

fn run_criterion_6() -> Result<(bool, String)> {
    let (_, sarn64) = reduced_cell(ModelKind::Sarn, 64, 4)?;
    let (_, rn64) = reduced_cell(ModelKind::Rn, 64, 4)?;
    let (_, sarn128) = reduced_cell(ModelKind::Sarn, 128, 8)?;
    let s64 = sarn64.report.relational();
    let r64 = rn64.report.relational();
    let s128 = sarn128.report.relational();
    let ok = s64 >= r64 - 0.01 && s128 >= s64 - 0.02;
    Ok((
        ok,
        format!(
            "relational {:.4} vs all-pairs {:.4} (gap {:+.4}, floor -0.01); \
             at 128px/64 objects {:.4} vs {:.4} (gap {:+.4}, floor -0.02)",
            s64,
            r64,
            s64 - r64,
            s128,
            s64,
            s128 - s64
        ),
    ))
}

// ---------------------------------------------------------------------------
// criterion 7: attention localization, plus structural introspection checks
// ---------------------------------------------------------------------------

fn grids_close(a: &Grid, b: &Grid, tol: f32) -> bool {
    a.side() == b.side()
        && a.data()
            .iter()
            .zip(b.data())
            .all(|(&x, &y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
}

/// Checks that hold for any attention model, trained or not: attention rows
/// normalize to one, every exported quantity recomputes to the same value,
/// and the export writes the full file set for each model family.
fn structural_checks(params: &ModelParams, ds: &Dataset) -> Result<(bool, String)> {
    let size = ds.config.image_size;
    let sample = &ds.samples[0];
    let image = image_tensor(size, &sample.pixels);
    let mut problems: Vec<String> = Vec::new();

    for qa in sample.qa.iter().take(10) {
        let grid = attention_map(params, &image, qa.question)?;
        let sum: f64 = grid.data().iter().map(|&v| v as f64).sum();
        if (sum - 1.0).abs() > 1e-6 {
            problems.push(format!("attention sums to {sum:.8}, not 1"));
        }
    }

    let qa = sample.qa[0];
    let report = build_report(params, size, &sample.pixels, qa, 0.5)?;
    let report_attention = report.attention.as_ref().expect("attention model");
    let fresh_attention = attention_map(params, &image, qa.question)?;
    if !grids_close(report_attention, &fresh_attention, 1e-5) {
        problems.push("attention grid does not recompute within 1e-5".into());
    }

    let fresh_gsum = gtheta_channel_sum(params, &image, qa.question)?;
    if !grids_close(report.gsum.object_grid(), fresh_gsum.object_grid(), 1e-5) {
        problems.push("relation channel sums do not recompute within 1e-5".into());
    }

    // Recompute the channel sums from the raw per-row relation outputs in
    // f64, independently of the introspection helpers.
    {
        let qvec = encode_question(qa.question);
        let mut g = Graph::new();
        let trace = forward(&mut g, params, params.config().kind, &image, &qvec)?;
        let t = g.value(trace.g_outputs);
        let (rows, cols) = (t.shape()[0], t.shape()[1]);
        let manual: Vec<f32> = (0..rows)
            .map(|r| {
                t.data()[r * cols..(r + 1) * cols]
                    .iter()
                    .map(|&v| v as f64)
                    .sum::<f64>() as f32
            })
            .collect();
        let reported = report.gsum.object_grid().data();
        if manual.len() != reported.len()
            || manual
                .iter()
                .zip(reported)
                .any(|(&m, &r)| (m - r).abs() > 1e-5 * m.abs().max(r.abs()).max(1.0))
        {
            problems.push("raw relation rows do not reproduce the reported sums".into());
        }
    }

    let round_trip = parse_grid_csv(&grid_csv(report_attention))?;
    if !grids_close(report_attention, &round_trip, 1e-7) {
        problems.push("grid CSV round trip drifts".into());
    }

    let export_dir = tempfile::tempdir().expect("create temp dir");
    let expect_files = |paths: &[PathBuf], expect: &[&str], label: &str, problems: &mut Vec<String>| {
        let got: BTreeSet<String> = paths
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        let want: BTreeSet<String> = expect.iter().map(|s| s.to_string()).collect();
        if got != want {
            problems.push(format!("{label} export wrote {got:?}, expected {want:?}"));
        }
        for p in paths {
            if !p.is_file() {
                problems.push(format!("{label} export path {p:?} missing on disk"));
            }
        }
    };
    let written = export_report(&report, &export_dir.path().join("sarn"))?;
    expect_files(
        &written,
        &[
            "input.ppm",
            "attention_overlay.ppm",
            "gsum_overlay.ppm",
            "attention.csv",
            "gsum.csv",
            "summary.txt",
        ],
        "attention model",
        &mut problems,
    );

    for (kind, label, expect) in [
        (
            ModelKind::Rn,
            "all-pairs model",
            vec!["input.ppm", "gsum_overlay.ppm", "gsum.csv", "pairs.csv", "summary.txt"],
        ),
        (
            ModelKind::Baseline,
            "no-pairing model",
            vec!["input.ppm", "gsum_overlay.ppm", "gsum.csv", "summary.txt"],
        ),
    ] {
        let other = ModelParams::new(ModelConfig::new(kind, size), 23)?;
        let other_report = build_report(&other, size, &sample.pixels, qa, 0.5)?;
        let written = export_report(&other_report, &export_dir.path().join(kind.tag()))?;
        expect_files(&written, &expect, label, &mut problems);
    }

    if problems.is_empty() {
        Ok((
            true,
            "attention normalized, reported grids recompute within tolerance, export file \
             sets complete for all three model families"
                .to_string(),
        ))
    } else {
        Ok((false, problems.join("; ")))
    }
}

fn run_structural_untrained() -> Result<(bool, String)> {
    let cfg = DatasetConfig {
        image_size: 64,
        object_size: 4,
        n_train: 0,
        n_test: 2,
        seed: 7,
    };
    let ds = Dataset::generate(&cfg, Split::Test)?;
    let params = ModelParams::new(ModelConfig::new(ModelKind::Sarn, 64), 17)?;
    structural_checks(&params, &ds)
}

fn run_criterion_7() -> Result<(bool, String)> {
    let (params, _) = reduced_cell(ModelKind::Sarn, 64, 4)?;
    let test_ds = Dataset::generate(&reduced_data(64, 4), Split::Test)?;
    let score = localization_score(&params, &test_ds)?;
    let questions = test_ds.samples.len() * DatasetConfig::QUESTIONS_PER_IMAGE;
    let (structural_ok, structural_detail) = structural_checks(&params, &test_ds)?;
    let ok = (0.0..=1.0).contains(&score) && structural_ok;
    Ok((
        ok,
        format!(
            "localization score {:.4} over {} questions on the trained model; {}",
            score, questions, structural_detail
        ),
    ))
}

// ---------------------------------------------------------------------------
// the tests
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_gradient_correctness() {
    let (ok, detail) = flatten(run_criterion_1());
    pass_line(1, ok, &detail);
    assert!(ok, "criterion 1: {detail}");
}

#[test]
fn criterion_2_oracle_equivalence() {
    let (ok, detail) = flatten(run_criterion_2());
    pass_line(2, ok, &detail);
    assert!(ok, "criterion 2: {detail}");
}

#[test]
fn criterion_3_relation_call_counts() {
    let (ok, detail) = flatten(run_criterion_3());
    pass_line(3, ok, &detail);
    assert!(ok, "criterion 3: {detail}");
}

#[test]
fn criterion_4_determinism() {
    let (ok, detail) = flatten(run_criterion_4());
    pass_line(4, ok, &detail);
    assert!(ok, "criterion 4: {detail}");
}

#[test]
fn criterion_5_reduced_scale_learning() {
    let _guard = lock_cache();
    let (ok, detail) = flatten(run_criterion_5());
    pass_line(5, ok, &detail);
    assert!(ok, "criterion 5: {detail}");
}

#[test]
fn criterion_6_pairing_strategy_comparison() {
    let _guard = lock_cache();
    let (ok, detail) = flatten(run_criterion_6());
    pass_line(6, ok, &detail);
    assert!(ok, "criterion 6: {detail}");
}

#[test]
fn criterion_7_attention_localization() {
    let _guard = lock_cache();
    let (ok, detail) = flatten(run_criterion_7());
    pass_line(7, ok, &detail);
    assert!(ok, "criterion 7: {detail}");
}

#[test]
fn criterion_8_fast_suite_budget() {
    let t0 = Instant::now();
    let parts: Vec<(&str, (bool, String))> = vec![
        ("gradients", flatten(run_criterion_1())),
        ("oracle", flatten(run_criterion_2())),
        ("call counts", flatten(run_criterion_3())),
        ("determinism", flatten(run_criterion_4())),
        ("introspection structure", flatten(run_structural_untrained())),
    ];
    let secs = t0.elapsed().as_secs_f64();
    let failed: Vec<&str> = parts
        .iter()
        .filter(|(_, (ok, _))| !ok)
        .map(|(name, _)| *name)
        .collect();
    let ok = failed.is_empty() && secs < 300.0;
    let detail = if failed.is_empty() {
        format!(
            "checks 1 through 4 plus structural introspection reran on untrained \
             parameters in {:.1}s (budget 300s)",
            secs
        )
    } else {
        format!("failed parts: {} ({:.1}s)", failed.join(", "), secs)
    };
    pass_line(8, ok, &detail);
    assert!(ok, "criterion 8: {detail}");
    for (name, (_, d)) in parts {
        println!("  {name}: {d}");
    }
}
