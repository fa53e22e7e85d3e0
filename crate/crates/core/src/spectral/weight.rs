use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strength (`lambda`) and steepness (`gamma`) of the high-frequency emphasis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreqRegConfig {
    pub lambda: f64,
    pub gamma: f64,
}

impl Default for FreqRegConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            gamma: 4.0,
        }
    }
}

impl FreqRegConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be > 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// Normalized distance of every bin from the spectrum center.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl RadialField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.width + v]
    }
}

/// `r(u, v)` in `[0, 1]`: distance to the center `(H/2, W/2)` divided by the
/// distance of the farthest grid corner.
pub fn radial_field(height: usize, width: usize) -> Result<RadialField> {
    if height < 2 || width < 2 {
        return Err(Error::invalid(format!(
            "radial field needs at least 2x2, got {height}x{width}"
        )));
    }
    let (cu, cv) = ((height / 2) as f64, (width / 2) as f64);
    let dist = |u: f64, v: f64| ((u - cu).powi(2) + (v - cv).powi(2)).sqrt();
    let (hm, wm) = ((height - 1) as f64, (width - 1) as f64);
    let r_max = [dist(0.0, 0.0), dist(0.0, wm), dist(hm, 0.0), dist(hm, wm)]
        .into_iter()
        .fold(0.0, f64::max);
    let mut data = Vec::with_capacity(height * width);
    for u in 0..height {
        for v in 0..width {
            data.push((dist(u as f64, v as f64) / r_max).min(1.0));
        }
    }
    Ok(RadialField {
        height,
        width,
        data,
    })
}

#[inline]
fn weight_unchecked(r: f64, cfg: &FreqRegConfig) -> f64 {
    // (e^{g r} - 1) / (e^g - 1); the second form avoids overflow for large g
    // and both give exactly 0 at r = 0 and exactly 1 at r = 1.
    let g = cfg.gamma;
    let ratio = if g <= 1.0 {
        (g * r).exp_m1() / g.exp_m1()
    } else {
        let tail = (-g).exp();
        ((g * (r - 1.0)).exp() - tail) / (1.0 - tail)
    };
    1.0 + cfg.lambda * ratio
}

/// Soft weight `w(r) = 1 + lambda * (exp(gamma r) - 1) / (exp(gamma) - 1)`.
pub fn soft_weight(r: f64, cfg: &FreqRegConfig) -> Result<f64> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::invalid(format!("radius {r} outside [0, 1]")));
    }
    Ok(weight_unchecked(r, cfg))
}

/// `w(r(u, v))` over a whole grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl WeightField {
    pub fn new(height: usize, width: usize, cfg: &FreqRegConfig) -> Result<Self> {
        cfg.validate()?;
        let radial = radial_field(height, width)?;
        let data = radial.data.iter().map(|&r| weight_unchecked(r, cfg)).collect();
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.width + v]
    }
}
