//! Forward and backward kernels for the primitive tensor operations.
//!
//! Convolutions and dense layers are lowered to matrix products; everything
//! else is a direct loop. Image tensors are laid out `[C, H, W]`.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `c = beta * c + a · b` where `a` is `m×k` and `b` is `k×n`, each given with
/// explicit row and column strides. `c` is dense row-major `m×n`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(c.len() >= m * n);
    if k == 0 {
        c.iter_mut().take(m * n).for_each(|v| *v *= beta);
        return;
    }
    assert!(a.len() > (m - 1) * rsa + (k - 1) * csa);
    assert!(b.len() > (k - 1) * rsb + (n - 1) * csb);
    // SAFETY: the asserts above keep every strided access inside the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn im2col(input: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    // Images here are tall and narrow (rows × selected features), so the
    // buffer is filled element by element rather than zeroed and row-copied.
    let hw = h * w;
    let mut col = Vec::with_capacity(c * 9 * hw);
    for ch in 0..c {
        let plane = &input[ch * hw..(ch + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                for y in 0..h {
                    let sy = y + ky;
                    if sy < 1 || sy > h {
                        col.extend(std::iter::repeat_n(0.0, w));
                        continue;
                    }
                    let src = &plane[(sy - 1) * w..sy * w];
                    for x in 0..w {
                        let sx = x + kx;
                        col.push(if sx < 1 || sx > w { 0.0 } else { src[sx - 1] });
                    }
                }
            }
        }
    }
    col
}

fn col2im(col: &[f64], c: usize, h: usize, w: usize) -> Vec<f64> {
    let hw = h * w;
    let mut out = vec![0.0; c * hw];
    for ch in 0..c {
        let plane = &mut out[ch * hw..(ch + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &col[((ch * 9) + ky * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    let src = &row[y * w..(y + 1) * w];
                    let (d, s) = match kx {
                        0 => (&mut dst[..w - 1], &src[1..]),
                        1 => (&mut dst[..], src),
                        _ => (&mut dst[1..], &src[..w - 1]),
                    };
                    for (a, b) in d.iter_mut().zip(s) {
                        *a += b;
                    }
                }
            }
        }
    }
    out
}

fn conv_dims(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<(usize, usize, usize, usize)> {
    let (c, h, w) = input.chw()?;
    let (o, kc) = match kernels.shape()[..] {
        [o, kc, 3, 3] => (o, kc),
        _ => {
            return Err(Error::Config(format!(
                "conv kernels must be [C_out, C_in, 3, 3], got {:?}",
                kernels.shape()
            )))
        }
    };
    if kc != c {
        return Err(Error::Config(format!(
            "conv kernels expect {kc} input channels, input has {c}"
        )));
    }
    if bias.shape() != [o] {
        return Err(Error::Config(format!(
            "conv bias must be [{o}], got {:?}",
            bias.shape()
        )));
    }
    Ok((c, h, w, o))
}

/// 3×3 stride-1 cross-correlation with one pixel of zero padding, so the
/// output keeps the input's spatial size.
pub fn conv2d_same(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (c, h, w, o) = conv_dims(input, kernels, bias)?;
    let hw = h * w;
    let col = im2col(input.data(), c, h, w);
    let mut out = vec![0.0; o * hw];
    for (oc, b) in bias.data().iter().enumerate() {
        out[oc * hw..(oc + 1) * hw].fill(*b);
    }
    gemm(o, c * 9, hw, kernels.data(), (c * 9, 1), &col, (hw, 1), 1.0, &mut out);
    Ok(Tensor::from_parts(vec![o, h, w], out))
}

/// Gradients of [`conv2d_same`] with respect to input, kernels and bias.
pub fn conv2d_same_backward(
    input: &Tensor,
    kernels: &Tensor,
    bias: &Tensor,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let (c, h, w, o) = conv_dims(input, kernels, bias)?;
    let hw = h * w;
    if grad_out.shape() != [o, h, w] {
        return Err(Error::Shape(format!(
            "conv output gradient must be [{o}, {h}, {w}], got {:?}",
            grad_out.shape()
        )));
    }
    let g = grad_out.data();
    let grad_bias: Vec<f64> = (0..o).map(|oc| g[oc * hw..(oc + 1) * hw].iter().sum()).collect();

    let col = im2col(input.data(), c, h, w);
    let ck = c * 9;
    let mut grad_k = vec![0.0; o * ck];
    gemm(o, hw, ck, g, (hw, 1), &col, (1, hw), 0.0, &mut grad_k);

    let mut grad_col = vec![0.0; ck * hw];
    gemm(ck, o, hw, kernels.data(), (1, ck), g, (hw, 1), 0.0, &mut grad_col);
    let grad_in = col2im(&grad_col, c, h, w);

    Ok((
        Tensor::from_parts(vec![c, h, w], grad_in),
        Tensor::from_parts(kernels.shape().to_vec(), grad_k),
        Tensor::from_parts(vec![o], grad_bias),
    ))
}

/// 2×2 average pooling with stride 2. Border windows that run off an odd edge
/// average only the cells that exist.
pub fn avg_pool2x2(input: &Tensor) -> Result<Tensor> {
    let (c, h, w) = input.chw()?;
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    let x = input.data();
    let mut out = vec![0.0; c * oh * ow];
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut sum = 0.0;
                let mut count = 0usize;
                for y in 2 * oy..(2 * oy + 2).min(h) {
                    for xx in 2 * ox..(2 * ox + 2).min(w) {
                        sum += x[(ch * h + y) * w + xx];
                        count += 1;
                    }
                }
                out[(ch * oh + oy) * ow + ox] = sum / count as f64;
            }
        }
    }
    Ok(Tensor::from_parts(vec![c, oh, ow], out))
}

pub fn avg_pool2x2_backward(input_shape: &[usize], grad_out: &Tensor) -> Result<Tensor> {
    let (c, h, w) = match input_shape[..] {
        [c, h, w] => (c, h, w),
        _ => return Err(Error::Shape(format!("expected [C, H, W], got {input_shape:?}"))),
    };
    let (oh, ow) = (h.div_ceil(2), w.div_ceil(2));
    if grad_out.shape() != [c, oh, ow] {
        return Err(Error::Shape(format!(
            "pool output gradient must be [{c}, {oh}, {ow}], got {:?}",
            grad_out.shape()
        )));
    }
    let g = grad_out.data();
    let mut grad = vec![0.0; c * h * w];
    for ch in 0..c {
        for oy in 0..oh {
            let ys = 2 * oy..(2 * oy + 2).min(h);
            for ox in 0..ow {
                let xs = 2 * ox..(2 * ox + 2).min(w);
                let share = g[(ch * oh + oy) * ow + ox] / (ys.len() * xs.len()) as f64;
                for y in ys.clone() {
                    for xx in xs.clone() {
                        grad[(ch * h + y) * w + xx] = share;
                    }
                }
            }
        }
    }
    Ok(Tensor::from_parts(vec![c, h, w], grad))
}

fn check_upsample_target(h: usize, w: usize, th: usize, tw: usize) -> Result<()> {
    let ok = |src: usize, dst: usize| dst == 2 * src || dst + 1 == 2 * src;
    if !ok(h, th) || !ok(w, tw) {
        return Err(Error::Config(format!(
            "cannot upsample {h}x{w} to {th}x{tw}; targets must be 2n or 2n-1"
        )));
    }
    Ok(())
}

/// Nearest-neighbour 2× upsampling to an explicit target size, the shape
/// inverse of [`avg_pool2x2`].
pub fn upsample_nearest2x(input: &Tensor, target_h: usize, target_w: usize) -> Result<Tensor> {
    let (c, h, w) = input.chw()?;
    check_upsample_target(h, w, target_h, target_w)?;
    let x = input.data();
    let mut out = vec![0.0; c * target_h * target_w];
    for ch in 0..c {
        for y in 0..target_h {
            let src = &x[(ch * h + y / 2) * w..][..w];
            let dst = &mut out[(ch * target_h + y) * target_w..][..target_w];
            for (xx, v) in dst.iter_mut().enumerate() {
                *v = src[xx / 2];
            }
        }
    }
    Ok(Tensor::from_parts(vec![c, target_h, target_w], out))
}

pub fn upsample_nearest2x_backward(input_shape: &[usize], grad_out: &Tensor) -> Result<Tensor> {
    let (c, h, w) = match input_shape[..] {
        [c, h, w] => (c, h, w),
        _ => return Err(Error::Shape(format!("expected [C, H, W], got {input_shape:?}"))),
    };
    let (gc, th, tw) = grad_out.chw()?;
    if gc != c {
        return Err(Error::Shape(format!("channel mismatch {gc} vs {c}")));
    }
    check_upsample_target(h, w, th, tw)?;
    let g = grad_out.data();
    let mut grad = vec![0.0; c * h * w];
    for ch in 0..c {
        for y in 0..th {
            let src = &g[(ch * th + y) * tw..][..tw];
            let dst = &mut grad[(ch * h + y / 2) * w..][..w];
            for (xx, v) in src.iter().enumerate() {
                dst[xx / 2] += v;
            }
        }
    }
    Ok(Tensor::from_parts(vec![c, h, w], grad))
}

fn dense_dims(x: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<(usize, usize, usize)> {
    let (b, i) = match x.shape()[..] {
        [b, i] => (b, i),
        [i] => (1, i),
        _ => return Err(Error::Shape(format!("dense input must be [B, I], got {:?}", x.shape()))),
    };
    let o = match weight.shape()[..] {
        [wi, o] if wi == i => o,
        _ => {
            return Err(Error::Shape(format!(
                "dense weight must be [{i}, O], got {:?}",
                weight.shape()
            )))
        }
    };
    if bias.shape() != [o] {
        return Err(Error::Shape(format!("dense bias must be [{o}], got {:?}", bias.shape())));
    }
    Ok((b, i, o))
}

/// `x · W + b` for a batch `x` of shape `[B, I]` and weights `[I, O]`.
pub fn dense(x: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (b, i, o) = dense_dims(x, weight, bias)?;
    let mut out = Vec::with_capacity(b * o);
    for _ in 0..b {
        out.extend_from_slice(bias.data());
    }
    gemm(b, i, o, x.data(), (i, 1), weight.data(), (o, 1), 1.0, &mut out);
    Ok(Tensor::from_parts(vec![b, o], out))
}

pub fn dense_backward(
    x: &Tensor,
    weight: &Tensor,
    bias: &Tensor,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let (b, i, o) = dense_dims(x, weight, bias)?;
    if grad_out.len() != b * o {
        return Err(Error::Shape(format!(
            "dense output gradient must hold {} values, got {}",
            b * o,
            grad_out.len()
        )));
    }
    let g = grad_out.data();
    let mut grad_x = vec![0.0; b * i];
    gemm(b, o, i, g, (o, 1), weight.data(), (1, o), 0.0, &mut grad_x);
    let mut grad_w = vec![0.0; i * o];
    gemm(i, b, o, x.data(), (1, i), g, (o, 1), 0.0, &mut grad_w);
    let mut grad_b = vec![0.0; o];
    for row in g.chunks_exact(o) {
        for (acc, v) in grad_b.iter_mut().zip(row) {
            *acc += v;
        }
    }
    Ok((
        Tensor::from_parts(x.shape().to_vec(), grad_x),
        Tensor::from_parts(weight.shape().to_vec(), grad_w),
        Tensor::from_parts(vec![o], grad_b),
    ))
}
