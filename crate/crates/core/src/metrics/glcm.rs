//! Gray-level co-occurrence matrices and Haralick-style summaries.

use serde::{Deserialize, Serialize};

use super::image::GrayImage;
use crate::error::{Error, Result};

/// Image whose pixels are gray-level indices in `0..levels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedImage {
    width: usize,
    height: usize,
    levels: usize,
    data: Vec<u8>,
}

impl IndexedImage {
    pub fn new(width: usize, height: usize, levels: usize, data: Vec<u8>) -> Result<Self> {
        check_levels(levels)?;
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::invalid(format!(
                "indexed image {width}x{height} with {} samples",
                data.len()
            )));
        }
        if let Some(&v) = data.iter().find(|&&v| usize::from(v) >= levels) {
            return Err(Error::invalid(format!("level {v} out of range 0..{levels}")));
        }
        Ok(Self {
            width,
            height,
            levels,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

fn check_levels(levels: usize) -> Result<()> {
    if !(2..=256).contains(&levels) {
        return Err(Error::invalid(format!("levels must be in [2, 256], got {levels}")));
    }
    Ok(())
}

/// `floor(value / 256 * levels)`, clamped to the top bin.
pub fn quantize_levels(img: &GrayImage, levels: usize) -> Result<IndexedImage> {
    check_levels(levels)?;
    let scale = levels as f64 / 256.0;
    let top = (levels - 1) as f64;
    let data = img
        .data()
        .iter()
        .map(|&v| (v * scale).floor().clamp(0.0, top) as u8)
        .collect();
    IndexedImage::new(img.width(), img.height(), levels, data)
}

/// The four standard co-occurrence directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Deg0,
        Direction::Deg45,
        Direction::Deg90,
        Direction::Deg135,
    ];

    /// Pixel offset `(dx, dy)` at the given distance.
    pub fn offset(self, distance: usize) -> (isize, isize) {
        let d = distance as isize;
        match self {
            Direction::Deg0 => (d, 0),
            Direction::Deg45 => (d, d),
            Direction::Deg90 => (0, d),
            Direction::Deg135 => (-d, d),
        }
    }

    pub fn degrees(self) -> u32 {
        match self {
            Direction::Deg0 => 0,
            Direction::Deg45 => 45,
            Direction::Deg90 => 90,
            Direction::Deg135 => 135,
        }
    }
}

/// Square `levels x levels` matrix of joint probabilities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GlcmMatrix {
    levels: usize,
    data: Vec<f64>,
}

impl GlcmMatrix {
    pub fn from_probabilities(levels: usize, data: Vec<f64>) -> Result<Self> {
        if levels == 0 || data.len() != levels * levels {
            return Err(Error::invalid(format!(
                "co-occurrence matrix needs {levels}x{levels} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { levels, data })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.levels + j]
    }
}

/// Symmetric, normalized co-occurrence matrix for pixel pairs `(p, p + offset)`.
pub fn glcm(img: &IndexedImage, offset: (isize, isize)) -> Result<GlcmMatrix> {
    let (dx, dy) = offset;
    let (w, h) = (img.width as isize, img.height as isize);
    let (x0, x1) = (-dx.min(0), w - dx.max(0));
    let (y0, y1) = (-dy.min(0), h - dy.max(0));
    if x0 >= x1 || y0 >= y1 {
        return Err(Error::invalid(format!(
            "offset ({dx}, {dy}) leaves no valid pixel pairs in a {w}x{h} image"
        )));
    }

    let levels = img.levels;
    let mut counts = vec![0u64; levels * levels];
    for y in y0..y1 {
        for x in x0..x1 {
            let a = usize::from(img.get(x as usize, y as usize));
            let b = usize::from(img.get((x + dx) as usize, (y + dy) as usize));
            counts[a * levels + b] += 1;
            counts[b * levels + a] += 1;
        }
    }
    let total = (2 * ((x1 - x0) * (y1 - y0)) as u64) as f64;
    let data = counts.into_iter().map(|c| c as f64 / total).collect();
    Ok(GlcmMatrix { levels, data })
}

/// Texture summary of one co-occurrence matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlcmFeatures {
    pub contrast: f64,
    /// Natural-log entropy of the joint distribution.
    pub entropy: f64,
    pub correlation: f64,
    /// Set when a marginal has zero spread; `correlation` is then 0.
    pub degenerate: bool,
}

pub fn glcm_features(m: &GlcmMatrix) -> Result<GlcmFeatures> {
    let n = m.levels;
    let p = &m.data;
    if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::invalid(format!("matrix entry {v} is not a probability")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("matrix sums to {total}, expected 1")));
    }

    let mut row_marg = vec![0.0; n];
    let mut col_marg = vec![0.0; n];
    let mut contrast = 0.0;
    let mut entropy = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = p[i * n + j];
            if v > 0.0 {
                let d = i as f64 - j as f64;
                contrast += v * d * d;
                entropy -= v * v.ln();
                row_marg[i] += v;
                col_marg[j] += v;
            }
        }
    }

    // A marginal concentrated on one level has zero spread; detect it by
    // support rather than by a floating-point variance.
    let support = |marg: &[f64]| marg.iter().filter(|&&v| v > 0.0).count();
    let degenerate = support(&row_marg) <= 1 || support(&col_marg) <= 1;

    let correlation = if degenerate {
        0.0
    } else {
        let mean = |marg: &[f64]| marg.iter().enumerate().map(|(i, v)| i as f64 * v).sum::<f64>();
        let (mu_i, mu_j) = (mean(&row_marg), mean(&col_marg));
        let var = |marg: &[f64], mu: f64| {
            marg.iter()
                .enumerate()
                .map(|(i, v)| v * (i as f64 - mu).powi(2))
                .sum::<f64>()
        };
        let (var_i, var_j) = (var(&row_marg, mu_i), var(&col_marg, mu_j));
        let mut cov = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = p[i * n + j];
                if v > 0.0 {
                    cov += v * (i as f64 - mu_i) * (j as f64 - mu_j);
                }
            }
        }
        (cov / (var_i.sqrt() * var_j.sqrt())).clamp(-1.0, 1.0)
    };

    Ok(GlcmFeatures {
        contrast,
        entropy: entropy.max(0.0),
        correlation,
        degenerate,
    })
}

/// Per-direction features plus the direction-averaged `contrast + entropy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlcmScore {
    pub directions: [GlcmFeatures; 4],
    pub aggregate: f64,
}

pub fn glcm_score(img: &GrayImage, levels: usize, distance: usize) -> Result<GlcmScore> {
    if distance == 0 {
        return Err(Error::invalid("GLCM distance must be at least 1"));
    }
    let q = quantize_levels(img, levels)?;
    let mut directions = [GlcmFeatures {
        contrast: 0.0,
        entropy: 0.0,
        correlation: 0.0,
        degenerate: true,
    }; 4];
    for (slot, dir) in directions.iter_mut().zip(Direction::ALL) {
        *slot = glcm_features(&glcm(&q, dir.offset(distance))?)?;
    }
    let aggregate = directions
        .iter()
        .map(|f| f.contrast + f.entropy)
        .sum::<f64>()
        / 4.0;
    Ok(GlcmScore {
        directions,
        aggregate,
    })
}
