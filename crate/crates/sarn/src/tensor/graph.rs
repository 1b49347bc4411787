//! Tape-based computation graph.
//!
//! Operations execute eagerly and append one record per produced value, so a
//! [`Var`] is just an index into the tape. [`Graph::backward`] walks the tape
//! in reverse and adds parameter gradients into a [`GradBuffer`]; calling it
//! again without zeroing accumulates. A graph covers one batch and is dropped
//! afterwards, never reused.

use crate::error::{Error, Result};
use crate::tensor::kernels::{self, ConvDims};
use crate::tensor::{GradBuffer, ParamId, ParamSet, Tensor};

/// Handle to one value on the tape of the [`Graph`] that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Input,
    ReadParam {
        p: ParamId,
    },
    Conv2d {
        x: Var,
        w: ParamId,
        b: ParamId,
        dims: ConvDims,
        cols: Box<[f32]>,
    },
    Linear {
        x: Var,
        w: ParamId,
        b: ParamId,
        rows: usize,
        d_in: usize,
        d_out: usize,
    },
    Relu {
        x: Var,
    },
    LayerNorm {
        x: Var,
        gamma: ParamId,
        beta: ParamId,
        rows: usize,
        d: usize,
        mean: Box<[f32]>,
        rstd: Box<[f32]>,
    },
    Softmax {
        x: Var,
        outer: usize,
        n: usize,
        inner: usize,
    },
    CrossEntropy {
        logits: Var,
        targets: Box<[usize]>,
        probs: Box<[f32]>,
        batch: usize,
        classes: usize,
    },
    Matmul {
        a: Var,
        b: Var,
        m: usize,
        k: usize,
        n: usize,
    },
    Transpose2 {
        x: Var,
        rows: usize,
        cols: usize,
    },
    Reshape {
        x: Var,
    },
    ConcatCols {
        xs: Vec<(Var, usize)>,
        rows: usize,
    },
    BroadcastRows {
        x: Var,
        rows: usize,
        d: usize,
    },
    SumRows {
        x: Var,
        rows: usize,
        d: usize,
    },
    SumAll {
        x: Var,
    },
    PairConcat {
        x: Var,
        n: usize,
        d: usize,
    },
    Scale {
        x: Var,
        c: f32,
    },
    Mul {
        a: Var,
        b: Var,
    },
}

#[derive(Default)]
pub struct Graph {
    vals: Vec<Tensor>,
    ops: Vec<Op>,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.vals[v.0]
    }

    /// Current tape length; pairs with [`Graph::rewind`].
    pub fn mark(&self) -> usize {
        self.vals.len()
    }

    /// Drops every node recorded after `mark`, invalidating their handles.
    /// Handles issued before the mark stay valid, so an expensive shared
    /// prefix (an encoded image, say) can serve many short-lived suffixes
    /// without the tape growing.
    pub fn rewind(&mut self, mark: usize) {
        assert!(mark <= self.vals.len(), "rewind past the end of the tape");
        self.vals.truncate(mark);
        self.ops.truncate(mark);
    }

    fn push(&mut self, val: Tensor, op: Op) -> Var {
        self.vals.push(val);
        self.ops.push(op);
        Var(self.vals.len() - 1)
    }

    /// Registers a constant leaf; no gradient is retained for it.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Input)
    }

    /// Brings a parameter's current value onto the tape; backward adds the
    /// incoming gradient to that parameter's slot.
    pub fn param(&mut self, params: &ParamSet, p: ParamId) -> Var {
        self.push(params.get(p).clone(), Op::ReadParam { p })
    }

    pub fn conv2d(
        &mut self,
        params: &ParamSet,
        x: Var,
        w: ParamId,
        b: ParamId,
        stride: usize,
        padding: usize,
    ) -> Result<Var> {
        let xs = self.value(x).shape().to_vec();
        let ws = params.get(w).shape().to_vec();
        if xs.len() != 3 || ws.len() != 4 {
            return Err(Error::InvalidArgument(format!(
                "conv2d: need input [C,H,W] and weight [Co,Ci,k,k], got {:?} and {:?}",
                xs, ws
            )));
        }
        let (c_in, h, wd) = (xs[0], xs[1], xs[2]);
        let (c_out, wc_in, k, k2) = (ws[0], ws[1], ws[2], ws[3]);
        if wc_in != c_in {
            return Err(Error::InvalidArgument(format!(
                "conv2d: weight expects {} input channels, input has {}",
                wc_in, c_in
            )));
        }
        if k != k2 {
            return Err(Error::InvalidArgument(format!(
                "conv2d: kernel must be square, got {}x{}",
                k, k2
            )));
        }
        if stride == 0 || k == 0 || k > h + 2 * padding || k > wd + 2 * padding {
            return Err(Error::InvalidArgument(format!(
                "conv2d: kernel {}x{} with stride {} padding {} does not fit {}x{} input",
                k, k, stride, padding, h, wd
            )));
        }
        if params.get(b).shape() != [c_out] {
            return Err(Error::InvalidArgument(format!(
                "conv2d: bias shape {:?} does not match {} output channels",
                params.get(b).shape(),
                c_out
            )));
        }
        let dims = ConvDims::new(c_in, c_out, h, wd, k, stride, padding);
        let cells = dims.h_out * dims.w_out;
        let ckk = c_in * k * k;
        let mut cols = vec![0.0f32; ckk * cells];
        kernels::im2col(self.value(x).data(), &dims, &mut cols);
        let mut out = vec![0.0f32; c_out * cells];
        kernels::gemm(
            c_out,
            ckk,
            cells,
            params.get(w).data(),
            false,
            &cols,
            false,
            0.0,
            &mut out,
        );
        kernels::add_channel_bias(&mut out, params.get(b).data(), cells);
        let val = Tensor::new(vec![c_out, dims.h_out, dims.w_out], out);
        Ok(self.push(
            val,
            Op::Conv2d {
                x,
                w,
                b,
                dims,
                cols: cols.into_boxed_slice(),
            },
        ))
    }

    pub fn linear(&mut self, params: &ParamSet, x: Var, w: ParamId, b: ParamId) -> Result<Var> {
        let xs = self.value(x).shape().to_vec();
        let ws = params.get(w).shape().to_vec();
        if ws.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "linear: weight must be [Dout,Din], got {:?}",
                ws
            )));
        }
        let (d_out, d_in) = (ws[0], ws[1]);
        if xs.last() != Some(&d_in) {
            return Err(Error::InvalidArgument(format!(
                "linear: input {:?} does not end in Din={}",
                xs, d_in
            )));
        }
        if params.get(b).shape() != [d_out] {
            return Err(Error::InvalidArgument(format!(
                "linear: bias shape {:?} does not match Dout={}",
                params.get(b).shape(),
                d_out
            )));
        }
        let rows = self.value(x).numel() / d_in;
        let mut out = vec![0.0f32; rows * d_out];
        kernels::gemm(
            rows,
            d_in,
            d_out,
            self.value(x).data(),
            false,
            params.get(w).data(),
            true,
            0.0,
            &mut out,
        );
        let bias = params.get(b).data();
        for r in 0..rows {
            for (o, &bv) in out[r * d_out..(r + 1) * d_out].iter_mut().zip(bias) {
                *o += bv;
            }
        }
        let mut shape = xs;
        *shape.last_mut().unwrap() = d_out;
        Ok(self.push(
            Tensor::new(shape, out),
            Op::Linear {
                x,
                w,
                b,
                rows,
                d_in,
                d_out,
            },
        ))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let mut out = vec![0.0f32; t.numel()];
        kernels::relu_forward(t.data(), &mut out);
        let val = Tensor::new(t.shape().to_vec(), out);
        self.push(val, Op::Relu { x })
    }

    /// Normalizes over the last dimension, then applies the affine pair.
    pub fn layer_norm(
        &mut self,
        params: &ParamSet,
        x: Var,
        gamma: ParamId,
        beta: ParamId,
        eps: f32,
    ) -> Var {
        assert!(eps > 0.0, "layer_norm: eps must be positive");
        let t = self.value(x);
        let d = *t.shape().last().expect("layer_norm: input must have rank >= 1");
        assert_eq!(params.get(gamma).shape(), [d], "layer_norm: gamma shape");
        assert_eq!(params.get(beta).shape(), [d], "layer_norm: beta shape");
        let rows = t.numel() / d;
        let mut out = vec![0.0f32; t.numel()];
        let mut mean = vec![0.0f32; rows];
        let mut rstd = vec![0.0f32; rows];
        kernels::layer_norm_forward(
            t.data(),
            params.get(gamma).data(),
            params.get(beta).data(),
            eps,
            rows,
            d,
            &mut out,
            &mut mean,
            &mut rstd,
        );
        let val = Tensor::new(t.shape().to_vec(), out);
        self.push(
            val,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                rows,
                d,
                mean: mean.into_boxed_slice(),
                rstd: rstd.into_boxed_slice(),
            },
        )
    }

    pub fn softmax(&mut self, x: Var, axis: usize) -> Var {
        let t = self.value(x);
        let shape = t.shape();
        assert!(axis < shape.len(), "softmax: axis {} out of range", axis);
        let outer: usize = shape[..axis].iter().product();
        let n = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let mut out = vec![0.0f32; t.numel()];
        kernels::softmax_forward(t.data(), outer, n, inner, &mut out);
        let val = Tensor::new(shape.to_vec(), out);
        self.push(val, Op::Softmax { x, outer, n, inner })
    }

    /// Mean negative log-likelihood of `targets` under softmax of `logits`.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        let t = self.value(logits);
        let shape = t.shape().to_vec();
        if shape.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "cross_entropy: logits must be [B,K], got {:?}",
                shape
            )));
        }
        let (batch, classes) = (shape[0], shape[1]);
        if targets.len() != batch {
            return Err(Error::InvalidArgument(format!(
                "cross_entropy: {} targets for batch of {}",
                targets.len(),
                batch
            )));
        }
        if let Some(&bad) = targets.iter().find(|&&c| c >= classes) {
            return Err(Error::InvalidArgument(format!(
                "cross_entropy: target class {} out of range 0..{}",
                bad, classes
            )));
        }
        let mut probs = vec![0.0f32; batch * classes];
        let loss = kernels::cross_entropy_forward(t.data(), targets, batch, classes, &mut probs);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                targets: targets.to_vec().into_boxed_slice(),
                probs: probs.into_boxed_slice(),
                batch,
                classes,
            },
        ))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (asape, bshape) = (self.value(a).shape().to_vec(), self.value(b).shape().to_vec());
        assert!(
            asape.len() == 2 && bshape.len() == 2 && asape[1] == bshape[0],
            "matmul: incompatible shapes {:?} x {:?}",
            asape,
            bshape
        );
        let (m, k, n) = (asape[0], asape[1], bshape[1]);
        let mut out = vec![0.0f32; m * n];
        kernels::gemm(
            m,
            k,
            n,
            self.value(a).data(),
            false,
            self.value(b).data(),
            false,
            0.0,
            &mut out,
        );
        self.push(Tensor::new(vec![m, n], out), Op::Matmul { a, b, m, k, n })
    }

    pub fn transpose2(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let shape = t.shape();
        assert_eq!(shape.len(), 2, "transpose2: input must be rank 2");
        let (rows, cols) = (shape[0], shape[1]);
        let mut out = vec![0.0f32; rows * cols];
        kernels::transpose2(t.data(), rows, cols, &mut out);
        self.push(
            Tensor::new(vec![cols, rows], out),
            Op::Transpose2 { x, rows, cols },
        )
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Var {
        let t = self.value(x);
        let numel: usize = shape.iter().product();
        assert_eq!(numel, t.numel(), "reshape: element count must match");
        let val = Tensor::new(shape.to_vec(), t.data().to_vec());
        self.push(val, Op::Reshape { x })
    }

    /// Concatenates rank-2 inputs with equal row counts along columns.
    pub fn concat_cols(&mut self, xs: &[Var]) -> Var {
        assert!(!xs.is_empty(), "concat_cols: need at least one input");
        let rows = self.value(xs[0]).shape()[0];
        let mut widths = Vec::with_capacity(xs.len());
        for &v in xs {
            let s = self.value(v).shape();
            assert!(s.len() == 2 && s[0] == rows, "concat_cols: shape {:?}", s);
            widths.push(s[1]);
        }
        let total: usize = widths.iter().sum();
        let mut out = vec![0.0f32; rows * total];
        let mut off = 0;
        for (&v, &w) in xs.iter().zip(&widths) {
            let data = self.value(v).data();
            for r in 0..rows {
                out[r * total + off..r * total + off + w]
                    .copy_from_slice(&data[r * w..(r + 1) * w]);
            }
            off += w;
        }
        let recs: Vec<(Var, usize)> = xs.iter().copied().zip(widths).collect();
        self.push(
            Tensor::new(vec![rows, total], out),
            Op::ConcatCols { xs: recs, rows },
        )
    }

    /// Repeats a length-d vector (rank 1 or [1, d]) as `rows` identical rows.
    pub fn broadcast_rows(&mut self, x: Var, rows: usize) -> Var {
        let t = self.value(x);
        assert!(rows > 0, "broadcast_rows: rows must be positive");
        assert!(
            t.shape().len() == 1 || (t.shape().len() == 2 && t.shape()[0] == 1),
            "broadcast_rows: input must be a single row, got {:?}",
            t.shape()
        );
        let d = t.numel();
        let mut out = vec![0.0f32; rows * d];
        for r in 0..rows {
            out[r * d..(r + 1) * d].copy_from_slice(t.data());
        }
        self.push(Tensor::new(vec![rows, d], out), Op::BroadcastRows { x, rows, d })
    }

    /// Collapses `[rows, d]` to `[1, d]` by summing rows (f64 accumulation).
    pub fn sum_rows(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let shape = t.shape();
        assert_eq!(shape.len(), 2, "sum_rows: input must be rank 2");
        let (rows, d) = (shape[0], shape[1]);
        let mut out = vec![0.0f32; d];
        kernels::sum_rows(t.data(), rows, d, &mut out);
        self.push(Tensor::new(vec![1, d], out), Op::SumRows { x, rows, d })
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let total = kernels::sum_all(self.value(x).data());
        self.push(Tensor::scalar(total), Op::SumAll { x })
    }

    /// All ordered pairs of rows: `[n, d]` -> `[n*n, 2d]`, row i*n+j holding
    /// row i followed by row j (self-pairs included).
    pub fn pair_concat(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let shape = t.shape();
        assert_eq!(shape.len(), 2, "pair_concat: input must be rank 2");
        let (n, d) = (shape[0], shape[1]);
        let data = t.data();
        let mut out = vec![0.0f32; n * n * 2 * d];
        for i in 0..n {
            for j in 0..n {
                let row = &mut out[(i * n + j) * 2 * d..(i * n + j + 1) * 2 * d];
                row[..d].copy_from_slice(&data[i * d..(i + 1) * d]);
                row[d..].copy_from_slice(&data[j * d..(j + 1) * d]);
            }
        }
        self.push(Tensor::new(vec![n * n, 2 * d], out), Op::PairConcat { x, n, d })
    }

    pub fn scale(&mut self, x: Var, c: f32) -> Var {
        let t = self.value(x);
        let out: Vec<f32> = t.data().iter().map(|&v| v * c).collect();
        let val = Tensor::new(t.shape().to_vec(), out);
        self.push(val, Op::Scale { x, c })
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (ta, tb) = (self.value(a), self.value(b));
        assert_eq!(ta.shape(), tb.shape(), "mul: shapes must match");
        let out: Vec<f32> = ta.data().iter().zip(tb.data()).map(|(&x, &y)| x * y).collect();
        let val = Tensor::new(ta.shape().to_vec(), out);
        self.push(val, Op::Mul { a, b })
    }

    /// Accumulates d(loss)/d(param) into `grads` for every parameter the loss
    /// depends on. Repeated calls without zeroing add up.
    pub fn backward(&self, loss: Var, params: &ParamSet, grads: &mut GradBuffer) -> Result<()> {
        if self.value(loss).numel() != 1 {
            return Err(Error::InvalidArgument(format!(
                "backward: loss must be scalar, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut act: Vec<Option<Vec<f32>>> = vec![None; self.vals.len()];
        act[loss.0] = Some(vec![1.0]);

        for idx in (0..self.ops.len()).rev() {
            let Some(dy) = act[idx].take() else { continue };
            match &self.ops[idx] {
                Op::Input => {}
                Op::ReadParam { p } => {
                    for (g, &d) in grads.slot_mut(*p).iter_mut().zip(&dy) {
                        *g += d;
                    }
                }
                Op::Conv2d { x, w, b, dims, cols } => {
                    let cells = dims.h_out * dims.w_out;
                    let ckk = dims.c_in * dims.k * dims.k;
                    kernels::row_totals_acc(&dy, dims.c_out, cells, grads.slot_mut(*b));
                    kernels::gemm(
                        dims.c_out,
                        cells,
                        ckk,
                        &dy,
                        false,
                        cols,
                        true,
                        1.0,
                        grads.slot_mut(*w),
                    );
                    if !matches!(self.ops[x.0], Op::Input) {
                        let mut dcols = vec![0.0f32; ckk * cells];
                        kernels::gemm(
                            ckk,
                            dims.c_out,
                            cells,
                            params.get(*w).data(),
                            true,
                            &dy,
                            false,
                            0.0,
                            &mut dcols,
                        );
                        let dx = slot(&mut act, *x, dims.c_in * dims.h * dims.w);
                        kernels::col2im_accumulate(&dcols, dims, dx);
                    }
                }
                Op::Linear {
                    x,
                    w,
                    b,
                    rows,
                    d_in,
                    d_out,
                } => {
                    kernels::sum_rows_acc(&dy, *rows, *d_out, grads.slot_mut(*b));
                    kernels::gemm(
                        *d_out,
                        *rows,
                        *d_in,
                        &dy,
                        true,
                        self.value(*x).data(),
                        false,
                        1.0,
                        grads.slot_mut(*w),
                    );
                    if !matches!(self.ops[x.0], Op::Input) {
                        let dx = slot(&mut act, *x, rows * d_in);
                        kernels::gemm(
                            *rows,
                            *d_out,
                            *d_in,
                            &dy,
                            false,
                            params.get(*w).data(),
                            false,
                            1.0,
                            dx,
                        );
                    }
                }
                Op::Relu { x } => {
                    let numel = self.value(*x).numel();
                    let xdata = self.value(*x).data();
                    kernels::relu_backward(xdata, &dy, slot(&mut act, *x, numel));
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    rows,
                    d,
                    mean,
                    rstd,
                } => {
                    let xdata = self.value(*x).data();
                    // Two parameter slots can't be borrowed at once, so dgamma
                    // and dbeta go through temporaries.
                    let mut dgamma = vec![0.0f32; *d];
                    let mut dbeta = vec![0.0f32; *d];
                    let dx = slot(&mut act, *x, rows * d);
                    kernels::layer_norm_backward(
                        xdata,
                        params.get(*gamma).data(),
                        mean,
                        rstd,
                        &dy,
                        *rows,
                        *d,
                        dx,
                        &mut dgamma,
                        &mut dbeta,
                    );
                    for (g, &v) in grads.slot_mut(*gamma).iter_mut().zip(&dgamma) {
                        *g += v;
                    }
                    for (g, &v) in grads.slot_mut(*beta).iter_mut().zip(&dbeta) {
                        *g += v;
                    }
                }
                Op::Softmax { x, outer, n, inner } => {
                    let y = self.value(Var(idx)).data();
                    let numel = self.value(*x).numel();
                    kernels::softmax_backward(y, &dy, *outer, *n, *inner, slot(&mut act, *x, numel));
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    probs,
                    batch,
                    classes,
                } => {
                    let dlogits = slot(&mut act, *logits, batch * classes);
                    kernels::cross_entropy_backward(probs, targets, *batch, *classes, dy[0], dlogits);
                }
                Op::Matmul { a, b, m, k, n } => {
                    let da = slot(&mut act, *a, m * k);
                    kernels::gemm(*m, *n, *k, &dy, false, self.value(*b).data(), true, 1.0, da);
                    let db = slot(&mut act, *b, k * n);
                    kernels::gemm(*k, *m, *n, self.value(*a).data(), true, &dy, false, 1.0, db);
                }
                Op::Transpose2 { x, rows, cols } => {
                    let dx = slot(&mut act, *x, rows * cols);
                    for r in 0..*rows {
                        for c in 0..*cols {
                            dx[r * cols + c] += dy[c * rows + r];
                        }
                    }
                }
                Op::Reshape { x } => {
                    let numel = self.value(*x).numel();
                    for (g, &d) in slot(&mut act, *x, numel).iter_mut().zip(&dy) {
                        *g += d;
                    }
                }
                Op::ConcatCols { xs, rows } => {
                    let total: usize = xs.iter().map(|(_, w)| w).sum();
                    let mut off = 0;
                    for &(v, w) in xs {
                        let dx = slot(&mut act, v, rows * w);
                        for r in 0..*rows {
                            for j in 0..w {
                                dx[r * w + j] += dy[r * total + off + j];
                            }
                        }
                        off += w;
                    }
                }
                Op::BroadcastRows { x, rows, d } => {
                    kernels::sum_rows_acc(&dy, *rows, *d, slot(&mut act, *x, *d));
                }
                Op::SumRows { x, rows, d } => {
                    let dx = slot(&mut act, *x, rows * d);
                    for r in 0..*rows {
                        for j in 0..*d {
                            dx[r * d + j] += dy[j];
                        }
                    }
                }
                Op::SumAll { x } => {
                    let numel = self.value(*x).numel();
                    for g in slot(&mut act, *x, numel).iter_mut() {
                        *g += dy[0];
                    }
                }
                Op::PairConcat { x, n, d } => {
                    let dx = slot(&mut act, *x, n * d);
                    for i in 0..*n {
                        for j in 0..*n {
                            let row = &dy[(i * n + j) * 2 * d..(i * n + j + 1) * 2 * d];
                            for t in 0..*d {
                                dx[i * d + t] += row[t];
                                dx[j * d + t] += row[d + t];
                            }
                        }
                    }
                }
                Op::Scale { x, c } => {
                    let numel = self.value(*x).numel();
                    for (g, &v) in slot(&mut act, *x, numel).iter_mut().zip(&dy) {
                        *g += v * c;
                    }
                }
                Op::Mul { a, b } => {
                    let bdata = self.value(*b).data();
                    let da = slot(&mut act, *a, bdata.len());
                    for (g, (&d, &v)) in da.iter_mut().zip(dy.iter().zip(bdata)) {
                        *g += d * v;
                    }
                    let adata = self.value(*a).data();
                    let db = slot(&mut act, *b, adata.len());
                    for (g, (&d, &v)) in db.iter_mut().zip(dy.iter().zip(adata)) {
                        *g += d * v;
                    }
                }
            }
        }
        Ok(())
    }
}

fn slot(act: &mut [Option<Vec<f32>>], v: Var, numel: usize) -> &mut Vec<f32> {
    act[v.0].get_or_insert_with(|| vec![0.0; numel])
}
