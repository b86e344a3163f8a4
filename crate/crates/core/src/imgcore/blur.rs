use super::raster::Raster;
use super::reflect101;
use crate::error::{Error, Result};

/// Sampled, normalized 1-D Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1D {
    sigma: f64,
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel1D {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// `2 * radius + 1` weights; index `radius` is the center tap.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Gaussian kernel truncated at `max(1, ceil(3σ))`, normalized to unit sum.
///
/// `σ = 0` gives the identity kernel `[1.0]`.
pub fn gaussian_kernel_1d(sigma: f64) -> Result<Kernel1D> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::domain(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(Kernel1D {
            sigma,
            radius: 0,
            weights: vec![1.0],
        });
    }
    let radius = ((3.0 * sigma).ceil() as usize).max(1);
    let denom = 2.0 * sigma * sigma;
    let half: Vec<f64> = (0..=radius)
        .map(|k| (-((k * k) as f64) / denom).exp())
        .collect();
    // sum from the tails inward so both halves accumulate identically
    let mut total = half[0];
    for w in half[1..].iter().rev() {
        total += 2.0 * w;
    }
    let mut weights = Vec::with_capacity(2 * radius + 1);
    weights.extend(half.iter().rev().map(|w| w / total));
    weights.extend(half[1..].iter().map(|w| w / total));
    Ok(Kernel1D {
        sigma,
        radius,
        weights,
    })
}

fn convolve_rows(plane: &[f64], width: usize, height: usize, kernel: &Kernel1D) -> Vec<f64> {
    let r = kernel.radius;
    let w = kernel.weights();
    let mut out = vec![0.0; plane.len()];
    let mut padded = vec![0.0; width + 2 * r];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for (i, p) in padded.iter_mut().enumerate() {
            *p = row[reflect101(i as isize - r as isize, width)];
        }
        let dst = &mut out[y * width..(y + 1) * width];
        for (x, d) in dst.iter_mut().enumerate() {
            let window = &padded[x..x + 2 * r + 1];
            *d = window.iter().zip(w).map(|(a, b)| a * b).sum();
        }
    }
    out
}

fn convolve_cols(plane: &[f64], width: usize, height: usize, kernel: &Kernel1D) -> Vec<f64> {
    let r = kernel.radius as isize;
    let w = kernel.weights();
    let mut out = vec![0.0; plane.len()];
    for y in 0..height {
        let dst = &mut out[y * width..(y + 1) * width];
        for (k, &wk) in w.iter().enumerate() {
            let sy = reflect101(y as isize + k as isize - r, height);
            let src = &plane[sy * width..(sy + 1) * width];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += wk * s;
            }
        }
    }
    out
}

/// Separable Gaussian blur (rows, then columns) with reflect-101 borders, per channel.
pub fn gaussian_blur(raster: &Raster, sigma: f64) -> Result<Raster> {
    let kernel = gaussian_kernel_1d(sigma)?;
    if kernel.radius == 0 {
        return Ok(raster.clone());
    }
    let (w, h, c) = (raster.width(), raster.height(), raster.channels());
    if c == 1 {
        let tmp = convolve_rows(raster.pixels(), w, h, &kernel);
        let out = convolve_cols(&tmp, w, h, &kernel);
        return Ok(Raster::from_parts_unchecked(w, h, 1, out));
    }
    let mut out = vec![0.0; w * h * c];
    for ch in 0..c {
        let plane: Vec<f64> = raster.pixels().iter().skip(ch).step_by(c).copied().collect();
        let tmp = convolve_rows(&plane, w, h, &kernel);
        let blurred = convolve_cols(&tmp, w, h, &kernel);
        for (i, v) in blurred.into_iter().enumerate() {
            out[i * c + ch] = v;
        }
    }
    Ok(Raster::from_parts_unchecked(w, h, c, out))
}
