use crate::error::{Error, Result};

/// An image with floating-point samples on the 0-255 scale.
///
/// Samples are row-major, channel-interleaved when `channels == 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::domain(format!("channels must be 1 or 3, got {channels}")));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::domain(format!(
                "pixel buffer has {} values, expected {}x{}x{}",
                pixels.len(),
                width,
                height,
                channels
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite pixel value {bad}")));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    /// Single-channel raster filled with `value`.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            channels: 1,
            pixels: vec![value; width * height],
        }
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        channels: usize,
        pixels: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(pixels.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }

    /// Rounds half away from zero and clamps to `[0, 255]`.
    pub fn quantize(v: f64) -> u8 {
        v.round().clamp(0.0, 255.0) as u8
    }

    /// Copy with every sample quantized to the 8-bit grid.
    pub fn quantized(&self) -> Raster {
        let pixels = self
            .pixels
            .iter()
            .map(|&v| f64::from(Self::quantize(v)))
            .collect();
        Self::from_parts_unchecked(self.width, self.height, self.channels, pixels)
    }

    /// Luma conversion (0.299 R + 0.587 G + 0.114 B, unrounded). Gray input is returned as is.
    pub fn to_grayscale(&self) -> Raster {
        if self.channels == 1 {
            return self.clone();
        }
        let pixels = self
            .pixels
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect();
        Self::from_parts_unchecked(self.width, self.height, 1, pixels)
    }

    /// Copies the `w` x `h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Raster> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::domain(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{} raster",
                self.width, self.height
            )));
        }
        let c = self.channels;
        let mut pixels = Vec::with_capacity(w * h * c);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * c;
            pixels.extend_from_slice(&self.pixels[start..start + w * c]);
        }
        Ok(Self::from_parts_unchecked(w, h, c, pixels))
    }

    /// Per-channel mean over all pixels.
    pub fn channel_means(&self) -> Vec<f64> {
        let n = (self.width * self.height) as f64;
        let mut sums = vec![0.0; self.channels];
        for px in self.pixels.chunks_exact(self.channels) {
            for (s, v) in sums.iter_mut().zip(px) {
                *s += v;
            }
        }
        sums.into_iter().map(|s| s / n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(Raster::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Raster::new(1, 1, 2, vec![0.0; 2]).is_err());
        assert!(Raster::new(1, 1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn grayscale_conversion() {
        let gray = Raster::new(2, 1, 1, vec![3.0, 4.0]).unwrap();
        assert_eq!(gray.to_grayscale(), gray);
        let rgb = Raster::new(2, 1, 3, vec![255.0, 255.0, 255.0, 100.0, 0.0, 0.0]).unwrap();
        let g = rgb.to_grayscale();
        assert_eq!(g.channels(), 1);
        assert!((g.pixels()[0] - 255.0).abs() < 1e-12);
        assert!((g.pixels()[1] - 29.9).abs() < 1e-12);
    }

    #[test]
    fn quantize_rounds_half_away_and_clamps() {
        assert_eq!(Raster::quantize(127.4), 127);
        assert_eq!(Raster::quantize(127.5), 128);
        assert_eq!(Raster::quantize(-3.0), 0);
        assert_eq!(Raster::quantize(300.0), 255);
    }

    #[test]
    fn crop_window() {
        let r = Raster::new(3, 2, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let c = r.crop(1, 0, 2, 2).unwrap();
        assert_eq!(c.pixels(), &[1.0, 2.0, 4.0, 5.0]);
        assert!(r.crop(2, 0, 2, 1).is_err());
    }
}
