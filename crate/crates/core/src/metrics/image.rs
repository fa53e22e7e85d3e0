use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major luminance raster in `[0, 255]` at `f64` precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0) {
            return Err(Error::invalid(format!("pixel value {v} outside [0, 255]")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn long_side(&self) -> usize {
        self.width.max(self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width)
    }
}

/// BT.601 luma of an interleaved 8-bit RGB buffer, without rounding.
pub fn to_grayscale(rgb: &[u8], width: usize, height: usize) -> Result<GrayImage> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("zero-sized RGB image"));
    }
    if rgb.len() != width * height * 3 {
        return Err(Error::invalid(format!(
            "RGB buffer length {} does not match {width}x{height}x3",
            rgb.len()
        )));
    }
    let data = rgb
        .chunks_exact(3)
        .map(|px| luma(px[0], px[1], px[2]))
        .collect();
    GrayImage::new(width, height, data)
}

#[inline]
pub(crate) fn luma(r: u8, g: u8, b: u8) -> f64 {
    // A gray input must map back to itself exactly; the weighted sum can be
    // one ulp off for some values.
    if r == g && g == b {
        return f64::from(r);
    }
    0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)
}

/// Area-average (box) resampling so that the long side is at most
/// `target_long_side`. Images already small enough are returned unchanged.
pub fn downsample(img: &GrayImage, target_long_side: usize) -> Result<GrayImage> {
    if target_long_side == 0 {
        return Err(Error::invalid("target long side must be positive"));
    }
    let (w, h) = (img.width, img.height);
    let long = w.max(h);
    if long <= target_long_side {
        return Ok(img.clone());
    }
    let scaled = |side: usize| -> usize {
        if side == long {
            target_long_side
        } else {
            let exact = side as f64 * target_long_side as f64 / long as f64;
            (exact.round() as usize).clamp(1, target_long_side)
        }
    };
    let (nw, nh) = (scaled(w), scaled(h));

    let xw = area_weights(w, nw);
    let yw = area_weights(h, nh);

    // Horizontal pass: h rows of nw samples.
    let mut tmp = Vec::with_capacity(h * nw);
    for row in img.rows() {
        for taps in &xw {
            tmp.push(weighted_mean(taps, |i| row[i]));
        }
    }
    // Vertical pass.
    let mut out = vec![0.0; nw * nh];
    for (oy, taps) in yw.iter().enumerate() {
        for ox in 0..nw {
            out[oy * nw + ox] = weighted_mean(taps, |i| tmp[i * nw + ox]);
        }
    }
    GrayImage::new(nw, nh, out)
}

/// Source taps and their fractional overlap for each output cell when
/// `src` samples are averaged down to `dst`.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    // In units of 1/dst source pixels, output cell o spans [o*src, (o+1)*src)
    // and source pixel i spans [i*dst, (i+1)*dst); overlaps are integers.
    (0..dst)
        .map(|o| {
            let lo = o * src;
            let hi = (o + 1) * src;
            (lo / dst..hi.div_ceil(dst))
                .filter_map(|i| {
                    let overlap = hi.min((i + 1) * dst).saturating_sub(lo.max(i * dst));
                    (overlap > 0).then(|| (i, overlap as f64 / src as f64))
                })
                .collect()
        })
        .collect()
}

#[inline]
fn weighted_mean(taps: &[(usize, f64)], sample: impl Fn(usize) -> f64) -> f64 {
    // Accumulate deviations from the first tap so a constant window
    // reproduces its value exactly.
    let base = sample(taps[0].0);
    let dev: f64 = taps.iter().map(|&(i, wt)| wt * (sample(i) - base)).sum();
    (base + dev).clamp(0.0, 255.0)
}
