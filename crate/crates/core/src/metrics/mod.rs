//! Per-image low-level quality measures.
//!
//! Everything here is a pure function of its inputs. Sharpness measures run
//! at full resolution; texture and entropy run on a copy whose long side is
//! capped by [`MetricConfig::metric_long_side`].

mod entropy;
mod filters;
mod glcm;
mod image;

use serde::{Deserialize, Serialize};

pub use self::entropy::shannon_entropy;
pub use self::filters::{laplacian_variance, sobel_edge_density};
pub use self::glcm::{
    glcm, glcm_features, glcm_score, quantize_levels, Direction, GlcmFeatures, GlcmMatrix,
    GlcmScore, IndexedImage,
};
pub use self::image::{downsample, to_grayscale, GrayImage};
#[allow(unused_imports)]
pub(crate) use self::image::luma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub laplacian_var: f64,
    pub sobel_edge_density: f64,
    pub glcm: GlcmScore,
    pub shannon_entropy: f64,
    /// Filled in by the aesthetic scorer; absent means unscored.
    pub aesthetic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub metric_long_side: usize,
    pub glcm_levels: usize,
    pub glcm_distance: usize,
    pub sobel_grad_threshold: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            metric_long_side: 1024,
            glcm_levels: 32,
            glcm_distance: 1,
            sobel_grad_threshold: 50.0,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.metric_long_side < 3 {
            return Err(Error::invalid("metric_long_side must be at least 3"));
        }
        if !(2..=256).contains(&self.glcm_levels) {
            return Err(Error::invalid("glcm_levels must be in [2, 256]"));
        }
        if self.glcm_distance == 0 {
            return Err(Error::invalid("glcm_distance must be at least 1"));
        }
        if self.sobel_grad_threshold.is_nan() || self.sobel_grad_threshold < 0.0 {
            return Err(Error::invalid("sobel_grad_threshold must be non-negative"));
        }
        Ok(())
    }
}

pub fn compute_metrics(img: &GrayImage, cfg: &MetricConfig) -> Result<MetricVector> {
    cfg.validate()?;
    let laplacian_var = laplacian_variance(img)?;
    let sobel_edge_density = sobel_edge_density(img, cfg.sobel_grad_threshold)?;
    let small = downsample(img, cfg.metric_long_side)?;
    let glcm = glcm_score(&small, cfg.glcm_levels, cfg.glcm_distance)?;
    let shannon_entropy = shannon_entropy(&small);
    Ok(MetricVector {
        laplacian_var,
        sobel_edge_density,
        glcm,
        shannon_entropy,
        aesthetic: None,
    })
}
