use crate::dataset::vocab::qtype;
use crate::dataset::{encode_question, Dataset};
use crate::error::{Error, Result};
use crate::models::{encode_image, forward_from_objects, image_tensor, ModelParams, QUESTION_DIM};
use crate::tensor::{Graph, Tensor};

/// Integer correctness counters per question type. All accuracy figures are
/// derived from the counters on demand, so the count-weighted aggregation
/// identity holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AccuracyReport {
    counts: [u32; qtype::COUNT],
    correct: [u32; qtype::COUNT],
}

fn ratio(correct: u32, count: u32) -> f64 {
    if count == 0 {
        0.0
    } else {
        correct as f64 / count as f64
    }
}

impl AccuracyReport {
    pub fn new() -> AccuracyReport {
        AccuracyReport::default()
    }

    pub fn record(&mut self, qt: u8, is_correct: bool) {
        self.counts[qt as usize] += 1;
        self.correct[qt as usize] += u32::from(is_correct);
    }

    pub fn merge(&mut self, other: &AccuracyReport) {
        for t in 0..qtype::COUNT {
            self.counts[t] += other.counts[t];
            self.correct[t] += other.correct[t];
        }
    }

    pub fn count(&self, qt: u8) -> u32 {
        self.counts[qt as usize]
    }

    pub fn correct_count(&self, qt: u8) -> u32 {
        self.correct[qt as usize]
    }

    pub fn total_count(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn per_type(&self, qt: u8) -> f64 {
        ratio(self.correct[qt as usize], self.counts[qt as usize])
    }

    pub fn overall(&self) -> f64 {
        ratio(self.correct.iter().sum(), self.counts.iter().sum())
    }

    fn subset(&self, types: impl Iterator<Item = usize>) -> f64 {
        let mut correct = 0u32;
        let mut count = 0u32;
        for t in types {
            correct += self.correct[t];
            count += self.counts[t];
        }
        ratio(correct, count)
    }

    pub fn non_relational(&self) -> f64 {
        self.subset((0..qtype::COUNT).filter(|&t| !qtype::is_relational(t as u8)))
    }

    pub fn relational(&self) -> f64 {
        self.subset((0..qtype::COUNT).filter(|&t| qtype::is_relational(t as u8)))
    }
}

pub struct EvalOutcome {
    pub report: AccuracyReport,
    /// Mean cross-entropy over all questions, accumulated in f64.
    pub mean_loss: f64,
}

/// Lowest-index argmax plus the f64 negative log-likelihood of `target`.
fn prediction_and_nll(logits: &[f32], target: usize) -> (usize, f64) {
    let mut best = 0;
    for i in 1..logits.len() {
        if logits[i] > logits[best] {
            best = i;
        }
    }
    let max = logits[best] as f64;
    let mut sum = 0.0f64;
    for &l in logits {
        sum += (l as f64 - max).exp();
    }
    (best, max + sum.ln() - logits[target] as f64)
}

/// Accuracy per question type plus mean loss over a labeled dataset.
///
/// Each image is encoded once and its conv features are shared by all of its
/// questions; the per-question subgraph is rewound afterwards so memory stays
/// bounded. Images are sharded across threads and the integer counters merged
/// in image order.
pub fn evaluate(params: &ModelParams, ds: &Dataset) -> Result<EvalOutcome> {
    if ds.samples.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate an empty dataset".into()));
    }
    if params.config().image_size != ds.config.image_size {
        return Err(Error::InvalidArgument(format!(
            "model expects {} px images, dataset provides {} px",
            params.config().image_size,
            ds.config.image_size
        )));
    }
    let n_answers = params.config().n_answers;

    let per_image: Vec<Result<(AccuracyReport, f64)>> = {
        use rayon::prelude::*;
        ds.samples
            .par_iter()
            .map(|sample| {
                let image = image_tensor(ds.config.image_size, &sample.pixels);
                let mut g = Graph::new();
                let objects = encode_image(&mut g, params, &image)?;
                let mark = g.mark();
                let mut report = AccuracyReport::new();
                let mut loss = 0.0f64;
                for qa in &sample.qa {
                    if (qa.answer as usize) >= n_answers {
                        return Err(Error::InvalidArgument(format!(
                            "label {} out of range for a {}-answer model",
                            qa.answer, n_answers
                        )));
                    }
                    let enc = encode_question(qa.question);
                    let q = g.input(Tensor::new(vec![1, QUESTION_DIM], enc.to_vec()));
                    let trace = forward_from_objects(&mut g, params, &objects, q)?;
                    let logits = g.value(trace.logits).data();
                    let (pred, nll) = prediction_and_nll(logits, qa.answer as usize);
                    report.record(qa.question.qtype, pred == qa.answer as usize);
                    loss += nll;
                    g.rewind(mark);
                }
                Ok((report, loss))
            })
            .collect()
    };

    let mut report = AccuracyReport::new();
    let mut loss_sum = 0.0f64;
    let mut n_questions = 0u64;
    for item in per_image {
        let (r, l) = item?;
        n_questions += u64::from(r.total_count());
        report.merge(&r);
        loss_sum += l;
    }
    Ok(EvalOutcome {
        report,
        mean_loss: loss_sum / n_questions as f64,
    })
}

/// Two-line CSV: aggregate columns then the 8 per-type columns in report
/// order.
pub fn report_csv(report: &AccuracyReport) -> String {
    let mut out = String::from("overall,non_rel,rel");
    for &t in &qtype::REPORT_ORDER {
        out.push(',');
        out.push_str(qtype::report_label(t));
    }
    out.push('\n');
    out.push_str(&format!(
        "{:.6},{:.6},{:.6}",
        report.overall(),
        report.non_relational(),
        report.relational()
    ));
    for &t in &qtype::REPORT_ORDER {
        out.push_str(&format!(",{:.6}", report.per_type(t)));
    }
    out.push('\n');
    out
}

#[derive(Debug, Clone)]
pub struct ComparisonSummary {
    /// (label, report) ordered by relational accuracy, best first; ties keep
    /// the caller's order.
    pub ranked: Vec<(String, AccuracyReport)>,
    /// `gaps[i][t]` = per-type accuracy of `ranked[i]` minus `ranked[i+1]`,
    /// indexed by raw question type.
    pub gaps: Vec<[f64; qtype::COUNT]>,
}

/// Ranks models by relational accuracy and reports per-type deltas between
/// neighbours in the ranking.
pub fn compare_models(reports: &[(String, AccuracyReport)]) -> ComparisonSummary {
    let mut ranked = reports.to_vec();
    ranked.sort_by(|a, b| {
        b.1.relational()
            .partial_cmp(&a.1.relational())
            .expect("accuracies are finite")
    });
    let gaps = ranked
        .windows(2)
        .map(|w| {
            let mut delta = [0.0f64; qtype::COUNT];
            for (t, d) in delta.iter_mut().enumerate() {
                *d = w[0].1.per_type(t as u8) - w[1].1.per_type(t as u8);
            }
            delta
        })
        .collect();
    ComparisonSummary { ranked, gaps }
}

impl ComparisonSummary {
    pub fn to_text(&self) -> String {
        let mut out = String::from("model,overall,non_rel,rel");
        for &t in &qtype::REPORT_ORDER {
            out.push(',');
            out.push_str(qtype::report_label(t));
        }
        out.push('\n');
        for (i, (name, r)) in self.ranked.iter().enumerate() {
            out.push_str(&format!(
                "{},{:.4},{:.4},{:.4}",
                name,
                r.overall(),
                r.non_relational(),
                r.relational()
            ));
            for &t in &qtype::REPORT_ORDER {
                out.push_str(&format!(",{:.4}", r.per_type(t)));
            }
            out.push('\n');
            if i + 1 < self.ranked.len() {
                out.push_str("delta,,,");
                for &t in &qtype::REPORT_ORDER {
                    out.push_str(&format!(",{:+.4}", self.gaps[i][t as usize]));
                }
                out.push('\n');
            }
        }
        out
    }
}
