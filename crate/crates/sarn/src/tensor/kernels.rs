//! Raw forward/backward kernels over flat row-major f32 slices.
//!
//! Matrix products go through `matrixmultiply::sgemm`; everything else is
//! explicit loops. Reductions accumulate in f64 before rounding back to f32.

/// c = alpha * op(a) @ op(b) + beta * c, all row-major.
///
/// `a_t`/`b_t` select a transposed view of the stored buffer: with `a_t`,
/// `a` is stored as `[k, m]` and read as its transpose.
#[allow(clippy::too_many_arguments)]
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f32],
    a_t: bool,
    b: &[f32],
    b_t: bool,
    beta: f32,
    c: &mut [f32],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Spatial geometry of one convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvDims {
    pub c_in: usize,
    pub c_out: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
    pub stride: usize,
    pub padding: usize,
    pub h_out: usize,
    pub w_out: usize,
}

impl ConvDims {
    pub fn new(
        c_in: usize,
        c_out: usize,
        h: usize,
        w: usize,
        k: usize,
        stride: usize,
        padding: usize,
    ) -> Self {
        let h_out = (h + 2 * padding - k) / stride + 1;
        let w_out = (w + 2 * padding - k) / stride + 1;
        ConvDims {
            c_in,
            c_out,
            h,
            w,
            k,
            stride,
            padding,
            h_out,
            w_out,
        }
    }
}

/// Unfolds `x: [c_in, h, w]` into `cols: [c_in*k*k, h_out*w_out]`.
pub fn im2col(x: &[f32], d: &ConvDims, cols: &mut [f32]) {
    let out_cells = d.h_out * d.w_out;
    debug_assert_eq!(cols.len(), d.c_in * d.k * d.k * out_cells);
    for c in 0..d.c_in {
        for ki in 0..d.k {
            for kj in 0..d.k {
                let row = (c * d.k + ki) * d.k + kj;
                let dst = &mut cols[row * out_cells..(row + 1) * out_cells];
                for oy in 0..d.h_out {
                    let iy = (oy * d.stride + ki) as isize - d.padding as isize;
                    let dst_row = &mut dst[oy * d.w_out..(oy + 1) * d.w_out];
                    if iy < 0 || iy >= d.h as isize {
                        dst_row.fill(0.0);
                        continue;
                    }
                    let src_row = &x[(c * d.h + iy as usize) * d.w..][..d.w];
                    for (ox, slot) in dst_row.iter_mut().enumerate() {
                        let ix = (ox * d.stride + kj) as isize - d.padding as isize;
                        *slot = if ix < 0 || ix >= d.w as isize {
                            0.0
                        } else {
                            src_row[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Scatter-adds `cols: [c_in*k*k, h_out*w_out]` back into `dx: [c_in, h, w]`.
pub fn col2im_accumulate(cols: &[f32], d: &ConvDims, dx: &mut [f32]) {
    let out_cells = d.h_out * d.w_out;
    for c in 0..d.c_in {
        for ki in 0..d.k {
            for kj in 0..d.k {
                let row = (c * d.k + ki) * d.k + kj;
                let src = &cols[row * out_cells..(row + 1) * out_cells];
                for oy in 0..d.h_out {
                    let iy = (oy * d.stride + ki) as isize - d.padding as isize;
                    if iy < 0 || iy >= d.h as isize {
                        continue;
                    }
                    let dst_row = &mut dx[(c * d.h + iy as usize) * d.w..][..d.w];
                    for ox in 0..d.w_out {
                        let ix = (ox * d.stride + kj) as isize - d.padding as isize;
                        if ix >= 0 && ix < d.w as isize {
                            dst_row[ix as usize] += src[oy * d.w_out + ox];
                        }
                    }
                }
            }
        }
    }
}

/// out[cell] += bias[channel], out laid out as [c_out, cells].
pub fn add_channel_bias(out: &mut [f32], bias: &[f32], cells: usize) {
    for (c, &b) in bias.iter().enumerate() {
        for v in &mut out[c * cells..(c + 1) * cells] {
            *v += b;
        }
    }
}

pub fn relu_forward(x: &[f32], out: &mut [f32]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o = v.max(0.0);
    }
}

/// Subgradient at zero is zero: mask is strict `x > 0`.
pub fn relu_backward(x: &[f32], dy: &[f32], dx: &mut [f32]) {
    for ((g, &v), &d) in dx.iter_mut().zip(x).zip(dy) {
        if v > 0.0 {
            *g += d;
        }
    }
}

/// Normalizes each row of `x: [rows, d]` to zero mean / unit variance, then
/// applies the affine (gamma, beta). Saves per-row mean and 1/std for backward.
#[allow(clippy::too_many_arguments)]
pub fn layer_norm_forward(
    x: &[f32],
    gamma: &[f32],
    beta: &[f32],
    eps: f32,
    rows: usize,
    d: usize,
    out: &mut [f32],
    mean: &mut [f32],
    rstd: &mut [f32],
) {
    for r in 0..rows {
        let row = &x[r * d..(r + 1) * d];
        let mut sum = 0.0f64;
        for &v in row {
            sum += v as f64;
        }
        let m = sum / d as f64;
        let mut var = 0.0f64;
        for &v in row {
            let c = v as f64 - m;
            var += c * c;
        }
        var /= d as f64;
        let rs = 1.0 / (var + eps as f64).sqrt();
        mean[r] = m as f32;
        rstd[r] = rs as f32;
        let out_row = &mut out[r * d..(r + 1) * d];
        for i in 0..d {
            let xhat = (row[i] - m as f32) * rs as f32;
            out_row[i] = xhat * gamma[i] + beta[i];
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn layer_norm_backward(
    x: &[f32],
    gamma: &[f32],
    mean: &[f32],
    rstd: &[f32],
    dy: &[f32],
    rows: usize,
    d: usize,
    dx: &mut [f32],
    dgamma: &mut [f32],
    dbeta: &mut [f32],
) {
    for r in 0..rows {
        let row = &x[r * d..(r + 1) * d];
        let dy_row = &dy[r * d..(r + 1) * d];
        let m = mean[r];
        let rs = rstd[r];
        let mut sum_dn = 0.0f64;
        let mut sum_dn_xhat = 0.0f64;
        for i in 0..d {
            let xhat = (row[i] - m) * rs;
            let dn = (dy_row[i] * gamma[i]) as f64;
            sum_dn += dn;
            sum_dn_xhat += dn * xhat as f64;
            dgamma[i] += dy_row[i] * xhat;
            dbeta[i] += dy_row[i];
        }
        let mean_dn = (sum_dn / d as f64) as f32;
        let mean_dn_xhat = (sum_dn_xhat / d as f64) as f32;
        let dx_row = &mut dx[r * d..(r + 1) * d];
        for i in 0..d {
            let xhat = (row[i] - m) * rs;
            let dn = dy_row[i] * gamma[i];
            dx_row[i] += rs * (dn - mean_dn - xhat * mean_dn_xhat);
        }
    }
}

/// Softmax along slices of length `n` with stride `inner`; `outer` independent
/// blocks each containing `inner` interleaved slices. Max-subtracted, f64 sums.
pub fn softmax_forward(x: &[f32], outer: usize, n: usize, inner: usize, out: &mut [f32]) {
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            let mut max = f32::NEG_INFINITY;
            for j in 0..n {
                max = max.max(x[base + j * inner]);
            }
            let mut sum = 0.0f64;
            for j in 0..n {
                let e = ((x[base + j * inner] - max) as f64).exp();
                out[base + j * inner] = e as f32;
                sum += e;
            }
            for j in 0..n {
                out[base + j * inner] = (out[base + j * inner] as f64 / sum) as f32;
            }
        }
    }
}

pub fn softmax_backward(y: &[f32], dy: &[f32], outer: usize, n: usize, inner: usize, dx: &mut [f32]) {
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            let mut dot = 0.0f64;
            for j in 0..n {
                dot += (y[base + j * inner] * dy[base + j * inner]) as f64;
            }
            for j in 0..n {
                let idx = base + j * inner;
                dx[idx] += y[idx] * (dy[idx] - dot as f32);
            }
        }
    }
}

/// Mean negative log softmax probability of the target classes.
/// Saves the softmax probabilities for backward.
pub fn cross_entropy_forward(
    logits: &[f32],
    targets: &[usize],
    batch: usize,
    classes: usize,
    probs: &mut [f32],
) -> f32 {
    let mut total = 0.0f64;
    for b in 0..batch {
        let row = &logits[b * classes..(b + 1) * classes];
        let max = row.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        let mut sum = 0.0f64;
        for (j, &v) in row.iter().enumerate() {
            let e = ((v - max) as f64).exp();
            probs[b * classes + j] = e as f32;
            sum += e;
        }
        for j in 0..classes {
            probs[b * classes + j] = (probs[b * classes + j] as f64 / sum) as f32;
        }
        let lse = max as f64 + sum.ln();
        total += lse - row[targets[b]] as f64;
    }
    (total / batch as f64) as f32
}

pub fn cross_entropy_backward(
    probs: &[f32],
    targets: &[usize],
    batch: usize,
    classes: usize,
    dloss: f32,
    dlogits: &mut [f32],
) {
    let scale = dloss / batch as f32;
    for b in 0..batch {
        for j in 0..classes {
            let idx = b * classes + j;
            let indicator = if j == targets[b] { 1.0 } else { 0.0 };
            dlogits[idx] += (probs[idx] - indicator) * scale;
        }
    }
}

/// Column sums of `x: [rows, d]` accumulated in f64.
pub fn sum_rows(x: &[f32], rows: usize, d: usize, out: &mut [f32]) {
    let mut acc = vec![0.0f64; d];
    for r in 0..rows {
        let row = &x[r * d..(r + 1) * d];
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v as f64;
        }
    }
    for (o, a) in out.iter_mut().zip(acc) {
        *o = a as f32;
    }
}

/// Column sums of `x: [rows, d]` added into `out` (f64 accumulation).
pub fn sum_rows_acc(x: &[f32], rows: usize, d: usize, out: &mut [f32]) {
    let mut acc = vec![0.0f64; d];
    for r in 0..rows {
        let row = &x[r * d..(r + 1) * d];
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v as f64;
        }
    }
    for (o, a) in out.iter_mut().zip(acc) {
        *o += a as f32;
    }
}

/// Row totals of `x: [rows, d]` added into `out[rows]` (f64 accumulation).
pub fn row_totals_acc(x: &[f32], rows: usize, d: usize, out: &mut [f32]) {
    for r in 0..rows {
        let mut acc = 0.0f64;
        for &v in &x[r * d..(r + 1) * d] {
            acc += v as f64;
        }
        out[r] += acc as f32;
    }
}

pub fn sum_all(x: &[f32]) -> f32 {
    let mut acc = 0.0f64;
    for &v in x {
        acc += v as f64;
    }
    acc as f32
}

pub fn transpose2(x: &[f32], rows: usize, cols: usize, out: &mut [f32]) {
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = x[r * cols + c];
        }
    }
}
