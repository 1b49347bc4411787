use std::path::{Path, PathBuf};

use super::{attention_grid, gsum_from_trace, single_forward, upscale_overlay, GSum, Grid};
use crate::dataset::vocab::{answer, qtype, COLOR_NAMES};
use crate::dataset::{write_ppm, QaSample, Question};
use crate::error::{Error, Result};
use crate::models::{grid_side, image_tensor, ModelParams};

/// Everything produced by inspecting one image/question pair: raw grids,
/// blended overlay images, and the prediction against the label.
#[derive(Debug, Clone)]
pub struct AttentionReport {
    pub question: Question,
    pub predicted: u8,
    pub label: u8,
    /// Present only for the sequential-attention model.
    pub attention: Option<Grid>,
    pub gsum: GSum,
    pub image_size: u16,
    pub pixels: Vec<u8>,
    pub attention_overlay: Option<Vec<u8>>,
    pub gsum_overlay: Vec<u8>,
}

/// Runs the model once and assembles the report. `alpha` is the overlay
/// blend strength.
pub fn build_report(
    params: &ModelParams,
    image_size: u16,
    pixels: &[u8],
    qa: QaSample,
    alpha: f32,
) -> Result<AttentionReport> {
    if params.config().image_size != image_size {
        return Err(Error::InvalidArgument(format!(
            "model expects {} px images, got {} px",
            params.config().image_size,
            image_size
        )));
    }
    let image = image_tensor(image_size, pixels);
    let (g, trace) = single_forward(params, &image, qa.question)?;
    let kind = params.config().kind;
    let side = grid_side(image_size);

    let logits = g.value(trace.logits).data();
    let mut predicted = 0;
    for i in 1..logits.len() {
        if logits[i] > logits[predicted] {
            predicted = i;
        }
    }

    let attention = trace.attention.map(|a| attention_grid(&g, a, side));
    let gsum = gsum_from_trace(&g, &trace, kind, side);
    let attention_overlay = attention
        .as_ref()
        .map(|grid| upscale_overlay(grid, image_size, pixels, alpha))
        .transpose()?;
    let gsum_overlay = upscale_overlay(gsum.object_grid(), image_size, pixels, alpha)?;

    Ok(AttentionReport {
        question: qa.question,
        predicted: predicted as u8,
        label: qa.answer,
        attention,
        gsum,
        image_size,
        pixels: pixels.to_vec(),
        attention_overlay,
        gsum_overlay,
    })
}

/// Grid serialized as CSV, row-major, nine significant digits: enough for an
/// exact f32 round-trip.
pub fn grid_csv(grid: &Grid) -> String {
    let mut out = String::new();
    for row in 0..grid.side() {
        for col in 0..grid.side() {
            if col > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.8e}", grid.get(row, col)));
        }
        out.push('\n');
    }
    out
}

pub fn parse_grid_csv(text: &str) -> Result<Grid> {
    let mut rows: Vec<Vec<f32>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row: Vec<f32> = line
            .split(',')
            .map(|v| {
                v.trim().parse::<f32>().map_err(|_| {
                    Error::InvalidArgument(format!("grid row {i}: bad float {v:?}"))
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    let side = rows.len();
    if rows.iter().any(|r| r.len() != side) {
        return Err(Error::InvalidArgument(format!(
            "grid is not square: {side} rows with widths {:?}",
            rows.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    Ok(Grid::new(side, rows.concat()))
}

fn summary_text(report: &AttentionReport) -> String {
    let q = report.question;
    let mut out = format!(
        "question: color={} type={}\npredicted: {}\nlabel: {}\n",
        COLOR_NAMES[q.color as usize],
        qtype::name(q.qtype),
        answer::name(report.predicted),
        answer::name(report.label),
    );
    if let GSum::PerPair { anchors, pairs } = &report.gsum {
        let n = pairs.side();
        let mut ranked: Vec<usize> = (0..anchors.data().len()).collect();
        ranked.sort_by(|&a, &b| {
            anchors.data()[b]
                .partial_cmp(&anchors.data()[a])
                .expect("finite activations")
                .then(a.cmp(&b))
        });
        out.push_str("top anchor objects by summed relation activation:\n");
        let side = anchors.side();
        for (rank, &cell) in ranked.iter().take(8.min(n)).enumerate() {
            out.push_str(&format!(
                "  {}. cell ({}, {}) sum {:.8e}\n",
                rank + 1,
                cell / side,
                cell % side,
                anchors.data()[cell]
            ));
        }
    }
    out
}

/// Writes the report as flat files and returns their paths: the input image
/// and overlay(s) as PPM, the grids as CSV, and a text summary. The
/// all-pairs model gets the pair matrix as an extra CSV.
pub fn export_report(report: &AttentionReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let size = report.image_size as usize;
    let mut written = Vec::new();
    let ppm = |name: &str, pixels: &[u8], written: &mut Vec<PathBuf>| -> Result<()> {
        let path = dir.join(name);
        write_ppm(&path, size, size, pixels)?;
        written.push(path);
        Ok(())
    };
    ppm("input.ppm", &report.pixels, &mut written)?;
    if let Some(overlay) = &report.attention_overlay {
        ppm("attention_overlay.ppm", overlay, &mut written)?;
    }
    ppm("gsum_overlay.ppm", &report.gsum_overlay, &mut written)?;

    let text = |name: &str, content: String, written: &mut Vec<PathBuf>| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };
    if let Some(grid) = &report.attention {
        text("attention.csv", grid_csv(grid), &mut written)?;
    }
    match &report.gsum {
        GSum::PerObject(grid) => text("gsum.csv", grid_csv(grid), &mut written)?,
        GSum::PerPair { pairs, anchors } => {
            text("gsum.csv", grid_csv(anchors), &mut written)?;
            text("pairs.csv", grid_csv(pairs), &mut written)?;
        }
    }
    text("summary.txt", summary_text(report), &mut written)?;
    Ok(written)
}
