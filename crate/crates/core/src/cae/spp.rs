//! Spatial pyramid pooling and its decoder-side inverse.
//!
//! Level `l` splits an `h×w` map into `l×l` bins. Bin `(i, j)` covers rows
//! `[floor(i·h/l), ceil((i+1)·h/l))` and the analogous column range, so bins
//! are never empty and may overlap when the map is smaller than the level.
//! Latent layout is map-major, then level in configured order, then
//! row-major bins.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub fn bin_range(index: usize, level: usize, size: usize) -> Range<usize> {
    let start = index * size / level;
    let end = ((index + 1) * size).div_ceil(level);
    start..end
}

/// Number of bins one map contributes, `Σ l²`.
pub fn bins_per_map(levels: &[usize]) -> usize {
    levels.iter().map(|l| l * l).sum()
}

pub fn validate_levels(levels: &[usize]) -> Result<()> {
    if levels.is_empty() || levels.contains(&0) {
        return Err(Error::Config(format!(
            "pyramid levels must be a non-empty list of positive integers, got {levels:?}"
        )));
    }
    Ok(())
}

/// Mean computed relative to the first element, so a run of identical
/// values averages back to exactly that value.
fn shifted_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut first = None;
    let mut acc = 0.0;
    let mut count = 0usize;
    for v in values {
        let base = *first.get_or_insert(v);
        acc += v - base;
        count += 1;
    }
    first.map_or(0.0, |b| b + acc / count as f64)
}

pub fn spp_forward(maps: &Tensor, levels: &[usize]) -> Result<Tensor> {
    validate_levels(levels)?;
    let (c, h, w) = maps.chw()?;
    let x = maps.data();
    let mut out = Vec::with_capacity(c * bins_per_map(levels));
    for ch in 0..c {
        let plane = &x[ch * h * w..(ch + 1) * h * w];
        for &l in levels {
            for i in 0..l {
                let rows = bin_range(i, l, h);
                for j in 0..l {
                    let cols = bin_range(j, l, w);
                    let cells = rows.clone().flat_map(|y| cols.clone().map(move |xx| plane[y * w + xx]));
                    out.push(shifted_mean(cells));
                }
            }
        }
    }
    let n = out.len();
    Ok(Tensor::from_parts(vec![n], out))
}

/// Gradient of [`spp_forward`] with respect to its input maps.
pub fn spp_forward_backward(input_shape: &[usize], levels: &[usize], grad: &[f64]) -> Result<Tensor> {
    let (c, h, w) = match input_shape[..] {
        [c, h, w] => (c, h, w),
        _ => return Err(Error::Shape(format!("expected [C, H, W], got {input_shape:?}"))),
    };
    let per_map = bins_per_map(levels);
    if grad.len() != c * per_map {
        return Err(Error::Contract(format!(
            "pyramid gradient has {} values, expected {}",
            grad.len(),
            c * per_map
        )));
    }
    let mut out = vec![0.0; c * h * w];
    let mut k = 0;
    for ch in 0..c {
        let plane = &mut out[ch * h * w..(ch + 1) * h * w];
        for &l in levels {
            for i in 0..l {
                let rows = bin_range(i, l, h);
                for j in 0..l {
                    let cols = bin_range(j, l, w);
                    let share = grad[k] / (rows.len() * cols.len()) as f64;
                    k += 1;
                    for y in rows.clone() {
                        for xx in cols.clone() {
                            plane[y * w + xx] += share;
                        }
                    }
                }
            }
        }
    }
    Ok(Tensor::from_parts(input_shape.to_vec(), out))
}

/// For each pixel coordinate along one axis, the bins of a level containing it.
fn containing_bins(level: usize, size: usize) -> Vec<Vec<usize>> {
    let mut per_pixel = vec![Vec::new(); size];
    for b in 0..level {
        for p in bin_range(b, level, size) {
            per_pixel[p].push(b);
        }
    }
    per_pixel
}

fn check_latent(len: usize, levels: &[usize], maps: usize, h: usize, w: usize) -> Result<()> {
    validate_levels(levels)?;
    if maps == 0 || h == 0 || w == 0 {
        return Err(Error::Shape(format!("cannot expand into {maps}x{h}x{w} maps")));
    }
    let expected = maps * bins_per_map(levels);
    if len != expected {
        return Err(Error::Contract(format!(
            "latent has {len} values, {maps} maps over levels {levels:?} need {expected}"
        )));
    }
    Ok(())
}

/// Expands a latent vector back into `maps` feature maps of size `h×w`.
///
/// Per level, each pixel takes the mean of every bin whose window contains
/// it; the output map is the mean of those per-level expansions.
pub fn spp_inverse(latent: &[f64], levels: &[usize], maps: usize, h: usize, w: usize) -> Result<Tensor> {
    check_latent(latent.len(), levels, maps, h, w)?;
    let per_map = bins_per_map(levels);
    let row_bins: Vec<_> = levels.iter().map(|&l| containing_bins(l, h)).collect();
    let col_bins: Vec<_> = levels.iter().map(|&l| containing_bins(l, w)).collect();
    let mut out = vec![0.0; maps * h * w];
    for ch in 0..maps {
        let z = &latent[ch * per_map..(ch + 1) * per_map];
        for y in 0..h {
            for xx in 0..w {
                let mut offset = 0;
                let per_level = levels.iter().enumerate().map(|(li, &l)| {
                    let zl = &z[offset..offset + l * l];
                    offset += l * l;
                    let rows = &row_bins[li][y];
                    let cols = &col_bins[li][xx];
                    shifted_mean(rows.iter().flat_map(|&i| cols.iter().map(move |&j| zl[i * l + j])))
                });
                let expansions: Vec<f64> = per_level.collect();
                out[(ch * h + y) * w + xx] = shifted_mean(expansions.into_iter());
            }
        }
    }
    Ok(Tensor::from_parts(vec![maps, h, w], out))
}

/// Gradient of [`spp_inverse`] with respect to the latent vector.
pub fn spp_inverse_backward(levels: &[usize], maps: usize, h: usize, w: usize, grad_out: &Tensor) -> Result<Vec<f64>> {
    if grad_out.shape() != [maps, h, w] {
        return Err(Error::Shape(format!(
            "inverse pyramid gradient must be [{maps}, {h}, {w}], got {:?}",
            grad_out.shape()
        )));
    }
    validate_levels(levels)?;
    let per_map = bins_per_map(levels);
    let row_bins: Vec<_> = levels.iter().map(|&l| containing_bins(l, h)).collect();
    let col_bins: Vec<_> = levels.iter().map(|&l| containing_bins(l, w)).collect();
    let level_share = 1.0 / levels.len() as f64;
    let g = grad_out.data();
    let mut out = vec![0.0; maps * per_map];
    for ch in 0..maps {
        let z = &mut out[ch * per_map..(ch + 1) * per_map];
        for y in 0..h {
            for xx in 0..w {
                let gv = g[(ch * h + y) * w + xx] * level_share;
                let mut offset = 0;
                for (li, &l) in levels.iter().enumerate() {
                    let rows = &row_bins[li][y];
                    let cols = &col_bins[li][xx];
                    let share = gv / (rows.len() * cols.len()) as f64;
                    for &i in rows {
                        for &j in cols {
                            z[offset + i * l + j] += share;
                        }
                    }
                    offset += l * l;
                }
            }
        }
    }
    Ok(out)
}
