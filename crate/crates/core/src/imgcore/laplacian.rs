use super::raster::Raster;
use super::reflect101;
use crate::error::{Error, Result};

/// 4-neighbour Laplacian `(0,1,0),(1,-4,1),(0,1,0)` with reflect-101 borders.
///
/// Returns the signed response as a single-channel raster.
pub fn laplacian(gray: &Raster) -> Result<Raster> {
    if gray.channels() != 1 {
        return Err(Error::domain(format!(
            "laplacian expects a single-channel raster, got {} channels",
            gray.channels()
        )));
    }
    let (w, h) = (gray.width(), gray.height());
    let px = gray.pixels();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let up = reflect101(y as isize - 1, h) * w;
        let down = reflect101(y as isize + 1, h) * w;
        let row = y * w;
        for x in 0..w {
            let left = reflect101(x as isize - 1, w);
            let right = reflect101(x as isize + 1, w);
            out[row + x] =
                px[up + x] + px[down + x] + px[row + left] + px[row + right] - 4.0 * px[row + x];
        }
    }
    Ok(Raster::from_parts_unchecked(w, h, 1, out))
}

/// Population variance of the Laplacian response; RGB input is converted to luma first.
pub fn laplacian_variance(raster: &Raster) -> Result<f64> {
    if raster.is_empty() {
        return Err(Error::domain("laplacian variance of an empty raster"));
    }
    let gray = raster.to_grayscale();
    let response = laplacian(&gray)?;
    let values = response.pixels();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(var.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn center_spike() -> Raster {
        let mut px = vec![0.0; 9];
        px[4] = 90.0;
        Raster::new(3, 3, 1, px).unwrap()
    }

    #[test]
    fn constant_has_zero_response() {
        let r = Raster::filled(5, 4, 42.0);
        assert!(laplacian(&r).unwrap().pixels().iter().all(|&v| v == 0.0));
        assert_eq!(laplacian_variance(&r).unwrap(), 0.0);
    }

    #[test]
    fn center_spike_by_hand() {
        let lap = laplacian(&center_spike()).unwrap();
        assert_eq!(
            lap.pixels(),
            &[0.0, 180.0, 0.0, 180.0, -360.0, 180.0, 0.0, 180.0, 0.0]
        );
        assert_eq!(laplacian_variance(&center_spike()).unwrap(), 27200.0);
    }

    #[test]
    fn affine_ramp_has_zero_interior_response() {
        let (w, h) = (8, 6);
        let px = (0..w * h)
            .map(|i| 3.0 * (i % w) as f64 + 2.0 * (i / w) as f64 + 1.0)
            .collect();
        let lap = laplacian(&Raster::new(w, h, 1, px).unwrap()).unwrap();
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                assert_eq!(lap.get(x, y, 0), 0.0);
            }
        }
    }

    #[test]
    fn rejects_rgb_and_empty() {
        let rgb = Raster::new(1, 1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(laplacian(&rgb).is_err());
        assert!(laplacian_variance(&rgb).is_ok());
        let empty = Raster::new(0, 0, 1, vec![]).unwrap();
        assert!(laplacian_variance(&empty).is_err());
    }
}
