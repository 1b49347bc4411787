//! An all-f64 reimplementation of the attention model's loss, built only
//! from the public parameter-group names and the documented layouts
//! (conv weights `[c_out, c_in, 3, 3]`, linear weights `[d_out, d_in]` with
//! `y = x W^T + b`, biased per-cell variance in the norm layers). It shares
//! no forward code with the library, so finite differences taken on it give
//! an independent reference for both the loss value and its gradients.

use std::collections::BTreeMap;

use sarn::models::ModelParams;

const LN_EPS: f64 = 1e-5_f32 as f64;

/// f64 copies of one model's parameters plus its geometry.
pub struct ShadowSarn {
    pub groups: BTreeMap<String, Vec<f64>>,
    image_size: usize,
    channels: [usize; 4],
    n_answers: usize,
}

fn matvec(w: &[f64], b: &[f64], x: &[f64], d_out: usize, d_in: usize) -> Vec<f64> {
    assert_eq!(w.len(), d_out * d_in);
    assert_eq!(x.len(), d_in);
    let mut y = Vec::with_capacity(d_out);
    for o in 0..d_out {
        let mut acc = b[o];
        for i in 0..d_in {
            acc += w[o * d_in + i] * x[i];
        }
        y.push(acc);
    }
    y
}

fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

impl ShadowSarn {
    pub fn from_params(params: &ModelParams) -> ShadowSarn {
        let mut groups = BTreeMap::new();
        for (_, name, tensor) in params.set.iter() {
            groups.insert(
                name.to_string(),
                tensor.data().iter().map(|&v| v as f64).collect(),
            );
        }
        assert!(
            groups.contains_key("attn.fc1.w"),
            "shadow only models the attention architecture"
        );
        ShadowSarn {
            groups,
            image_size: params.config().image_size as usize,
            channels: params.config().conv_channels,
            n_answers: params.config().n_answers,
        }
    }

    fn g(&self, name: &str) -> &[f64] {
        self.groups.get(name).unwrap_or_else(|| panic!("group {name}"))
    }

    pub fn group_mut(&mut self, name: &str) -> &mut Vec<f64> {
        self.groups.get_mut(name).unwrap_or_else(|| panic!("group {name}"))
    }

    /// Conv (k=3, stride 2, padding 1), ReLU, then per-cell normalization
    /// over channels. `x` is `[c_in, side, side]`; returns the output and its
    /// side length.
    fn conv_block(&self, layer: usize, x: &[f64], side: usize, c_in: usize) -> (Vec<f64>, usize) {
        let c_out = self.channels[layer];
        let w = self.g(&format!("cnn.conv{}.w", layer + 1));
        let b = self.g(&format!("cnn.conv{}.b", layer + 1));
        let out_side = (side - 1) / 2 + 1;
        let mut out = vec![0.0f64; c_out * out_side * out_side];
        for o in 0..c_out {
            for oy in 0..out_side {
                for ox in 0..out_side {
                    let mut acc = b[o];
                    for i in 0..c_in {
                        for ky in 0..3 {
                            let iy = (oy * 2 + ky) as isize - 1;
                            if iy < 0 || iy >= side as isize {
                                continue;
                            }
                            for kx in 0..3 {
                                let ix = (ox * 2 + kx) as isize - 1;
                                if ix < 0 || ix >= side as isize {
                                    continue;
                                }
                                acc += w[((o * c_in + i) * 3 + ky) * 3 + kx]
                                    * x[(i * side + iy as usize) * side + ix as usize];
                            }
                        }
                    }
                    out[(o * out_side + oy) * out_side + ox] = acc;
                }
            }
        }
        relu(&mut out);

        let gamma = self.g(&format!("cnn.ln{}.gamma", layer + 1));
        let beta = self.g(&format!("cnn.ln{}.beta", layer + 1));
        let cells = out_side * out_side;
        for cell in 0..cells {
            let mut mean = 0.0;
            for o in 0..c_out {
                mean += out[o * cells + cell];
            }
            mean /= c_out as f64;
            let mut var = 0.0;
            for o in 0..c_out {
                let c = out[o * cells + cell] - mean;
                var += c * c;
            }
            var /= c_out as f64;
            let rstd = 1.0 / (var + LN_EPS).sqrt();
            for o in 0..c_out {
                let v = &mut out[o * cells + cell];
                *v = (*v - mean) * rstd * gamma[o] + beta[o];
            }
        }
        (out, out_side)
    }

    fn mlp3(&self, prefix: &str, x: &[f64], relu_last: bool) -> Vec<f64> {
        let mut h = x.to_vec();
        for i in 1..=3 {
            let w = self.g(&format!("{prefix}.fc{i}.w"));
            let b = self.g(&format!("{prefix}.fc{i}.b"));
            let d_out = b.len();
            let d_in = w.len() / d_out;
            h = matvec(w, b, &h, d_out, d_in);
            if i < 3 || relu_last {
                relu(&mut h);
            }
        }
        h
    }

    /// Encodes the image to object rows (features plus the two coordinates).
    fn objects(&self, pixels: &[u8]) -> Vec<Vec<f64>> {
        let s = self.image_size;
        assert_eq!(pixels.len(), 3 * s * s);
        let mut x = vec![0.0f64; 3 * s * s];
        for y in 0..s {
            for xx in 0..s {
                for c in 0..3 {
                    x[(c * s + y) * s + xx] = pixels[3 * (y * s + xx) + c] as f64 / 255.0;
                }
            }
        }
        let mut side = s;
        let mut c_in = 3;
        for l in 0..4 {
            let (nx, nside) = self.conv_block(l, &x, side, c_in);
            x = nx;
            side = nside;
            c_in = self.channels[l];
        }
        let d = side;
        let c = self.channels[3];
        let cells = d * d;
        let mut rows = Vec::with_capacity(cells);
        for cell in 0..cells {
            let mut row: Vec<f64> = (0..c).map(|o| x[o * cells + cell]).collect();
            let (r, col) = (cell / d, cell % d);
            let norm = |i: usize| {
                if d == 1 {
                    0.0
                } else {
                    // Match the f32 arithmetic the encoder uses for the
                    // coordinate channels exactly.
                    (-1.0f32 + 2.0 * i as f32 / (d - 1) as f32) as f64
                }
            };
            row.push(norm(col));
            row.push(norm(r));
            rows.push(row);
        }
        rows
    }

    /// Attention weights, reference vector, relation sum, logits, loss.
    pub fn loss(&self, pixels: &[u8], question: &[f32], answer: usize) -> f64 {
        let logits = self.logits(pixels, question);
        assert!(answer < self.n_answers);
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|&v| (v - max).exp()).sum();
        max + sum.ln() - logits[answer]
    }

    pub fn logits(&self, pixels: &[u8], question: &[f32]) -> Vec<f64> {
        let objects = self.objects(pixels);
        let q: Vec<f64> = question.iter().map(|&v| v as f64).collect();
        let dim = objects[0].len();

        let mut scores = Vec::with_capacity(objects.len());
        for o in &objects {
            let mut x = o.clone();
            x.extend_from_slice(&q);
            scores.push(self.mlp3("attn", &x, false)[0]);
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut weights: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }

        let mut ro = vec![0.0f64; dim];
        for (w, o) in weights.iter().zip(&objects) {
            for (r, &v) in ro.iter_mut().zip(o) {
                *r += w * v;
            }
        }

        let hidden = self.g("rel.fc3.b").len();
        let mut aggregate = vec![0.0f64; hidden];
        for o in &objects {
            let mut x = o.clone();
            x.extend_from_slice(&ro);
            x.extend_from_slice(&q);
            let g_out = self.mlp3("rel", &x, true);
            for (a, v) in aggregate.iter_mut().zip(g_out) {
                *a += v;
            }
        }

        self.mlp3("head", &aggregate, false)
    }
}
