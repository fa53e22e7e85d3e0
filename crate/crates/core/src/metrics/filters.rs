//! Sharpness and edge measures on interior pixels (no border padding).

use super::image::GrayImage;
use crate::error::{Error, Result};

fn require_3x3(img: &GrayImage, what: &str) -> Result<()> {
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::invalid(format!(
            "{what} needs at least 3x3 pixels, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// Population variance of the 4-neighbour Laplacian response over interior pixels.
pub fn laplacian_variance(img: &GrayImage) -> Result<f64> {
    require_3x3(img, "laplacian variance")?;
    let (w, h) = (img.width(), img.height());
    let d = img.data();
    let n = ((w - 2) * (h - 2)) as f64;

    let response = |x: usize, y: usize| {
        let c = y * w + x;
        d[c - w] + d[c + w] + d[c - 1] + d[c + 1] - 4.0 * d[c]
    };

    let mut sum = 0.0;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            sum += response(x, y);
        }
    }
    let mean = sum / n;
    let mut ss = 0.0;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let dv = response(x, y) - mean;
            ss += dv * dv;
        }
    }
    Ok(ss / n)
}

/// Sobel gradient magnitude at an interior pixel.
#[inline]
pub(crate) fn sobel_magnitude(img: &GrayImage, x: usize, y: usize) -> f64 {
    let w = img.width();
    let d = img.data();
    let c = y * w + x;
    let (tl, tc, tr) = (d[c - w - 1], d[c - w], d[c - w + 1]);
    let (ml, mr) = (d[c - 1], d[c + 1]);
    let (bl, bc, br) = (d[c + w - 1], d[c + w], d[c + w + 1]);
    let gx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
    let gy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
    (gx * gx + gy * gy).sqrt()
}

/// Fraction of interior pixels whose Sobel magnitude exceeds `grad_threshold`.
pub fn sobel_edge_density(img: &GrayImage, grad_threshold: f64) -> Result<f64> {
    require_3x3(img, "sobel edge density")?;
    if grad_threshold.is_nan() || grad_threshold < 0.0 {
        return Err(Error::invalid(format!(
            "gradient threshold must be non-negative, got {grad_threshold}"
        )));
    }
    let (w, h) = (img.width(), img.height());
    let mut above = 0usize;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            if sobel_magnitude(img, x, y) > grad_threshold {
                above += 1;
            }
        }
    }
    Ok(above as f64 / ((w - 2) * (h - 2)) as f64)
}
