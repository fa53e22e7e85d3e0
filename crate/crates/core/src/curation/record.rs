use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{MetricConfig, MetricVector};

/// One corpus image and its pipeline state.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    /// Corpus-relative path with `/` separators.
    pub path: String,
    pub width: u32,
    pub height: u32,
    pub metrics: Option<MetricVector>,
    pub caption: Option<String>,
    pub caption_len: Option<u32>,
    pub in_s: bool,
    pub in_sg: bool,
    pub in_se: bool,
    pub in_sa: bool,
    pub selected: bool,
}

impl ImageRecord {
    pub fn stub(path: impl Into<String>, width: u32, height: u32) -> Self {
        Self {
            path: path.into(),
            width,
            height,
            metrics: None,
            caption: None,
            caption_len: None,
            in_s: false,
            in_sg: false,
            in_se: false,
            in_sa: false,
            selected: false,
        }
    }

    pub fn avg_resolution(&self) -> f64 {
        (f64::from(self.width) + f64::from(self.height)) / 2.0
    }

    pub fn aesthetic(&self) -> Option<f64> {
        self.metrics.as_ref().and_then(|m| m.aesthetic)
    }

    pub fn clear_selection(&mut self) {
        self.in_s = false;
        self.in_sg = false;
        self.in_se = false;
        self.in_sa = false;
        self.selected = false;
    }

    /// `selected => in_sg && in_se && in_sa`, each subset within S.
    pub fn membership_consistent(&self) -> bool {
        (!self.selected || (self.in_sg && self.in_se && self.in_sa))
            && (!(self.in_sg || self.in_se || self.in_sa) || self.in_s)
    }
}

/// Scalar used to rank records for a subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKey {
    LaplacianVar,
    SobelEdgeDensity,
    GlcmAggregate,
    ShannonEntropy,
    Aesthetic,
}

impl MetricKey {
    pub fn value(self, record: &ImageRecord) -> Option<f64> {
        let m = record.metrics.as_ref()?;
        match self {
            MetricKey::LaplacianVar => Some(m.laplacian_var),
            MetricKey::SobelEdgeDensity => Some(m.sobel_edge_density),
            MetricKey::GlcmAggregate => Some(m.glcm.aggregate),
            MetricKey::ShannonEntropy => Some(m.shannon_entropy),
            MetricKey::Aesthetic => m.aesthetic,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MetricKey::LaplacianVar => "laplacian_var",
            MetricKey::SobelEdgeDensity => "sobel_edge_density",
            MetricKey::GlcmAggregate => "glcm_aggregate",
            MetricKey::ShannonEntropy => "shannon_entropy",
            MetricKey::Aesthetic => "aesthetic",
        }
    }
}

/// Thresholds and rank cut for subset construction.
///
/// `laplacian_min`, `sobel_grad_threshold` and `sobel_density_min` have no
/// published values; the defaults here are invented starting points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    pub laplacian_min: f64,
    pub sobel_density_min: f64,
    pub sobel_grad_threshold: f64,
    pub top_fraction: f64,
    pub min_avg_resolution: f64,
    pub metric_long_side: usize,
    pub glcm_levels: usize,
    pub glcm_distance: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            laplacian_min: 100.0,
            sobel_density_min: 0.05,
            sobel_grad_threshold: 50.0,
            top_fraction: 0.5,
            min_avg_resolution: 3000.0,
            metric_long_side: 1024,
            glcm_levels: 32,
            glcm_distance: 1,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "top_fraction must be in (0, 1], got {}",
                self.top_fraction
            )));
        }
        for (name, v) in [
            ("laplacian_min", self.laplacian_min),
            ("sobel_density_min", self.sobel_density_min),
            ("sobel_grad_threshold", self.sobel_grad_threshold),
            ("min_avg_resolution", self.min_avg_resolution),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be a finite value >= 0, got {v}")));
            }
        }
        self.metric_config().validate()
    }

    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            metric_long_side: self.metric_long_side,
            glcm_levels: self.glcm_levels,
            glcm_distance: self.glcm_distance,
            sobel_grad_threshold: self.sobel_grad_threshold,
        }
    }
}
