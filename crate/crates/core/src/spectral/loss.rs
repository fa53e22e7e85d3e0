use super::dft::{Dft2, Spectrum, Tensor2D};
use super::weight::{radial_field, FreqRegConfig, WeightField};
use crate::error::{Error, Result};

/// Soft-weighted spectral loss bound to one grid size.
///
/// `L = (1/HW) * sum |w(r) * (F(x) - F(y))|^2` with the orthonormal DFT `F`.
#[derive(Debug)]
pub struct FreqLoss {
    dft: Dft2,
    weight_sq: Vec<f64>,
}

impl FreqLoss {
    pub fn new(height: usize, width: usize, cfg: &FreqRegConfig) -> Result<Self> {
        let weights = WeightField::new(height, width, cfg)?;
        Ok(Self {
            dft: Dft2::new(height, width)?,
            weight_sq: weights.data().iter().map(|w| w * w).collect(),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.dft.shape()
    }

    fn residual_spectrum(&self, x: &Tensor2D, y: &Tensor2D) -> Result<Spectrum> {
        x.ensure_same_shape(y)?;
        // F(x) - F(y) = F(x - y).
        self.dft.forward(&x.sub(y)?)
    }

    fn loss_of(&self, d: &Spectrum) -> f64 {
        let n = d.data().len() as f64;
        d.data()
            .iter()
            .zip(&self.weight_sq)
            .map(|(c, w2)| w2 * c.norm_sqr())
            .sum::<f64>()
            / n
    }

    fn grad_of(&self, mut d: Spectrum) -> Result<Tensor2D> {
        let scale = 2.0 / d.data().len() as f64;
        for (c, w2) in d.data_mut().iter_mut().zip(&self.weight_sq) {
            *c *= w2 * scale;
        }
        self.dft.inverse(&d)
    }

    pub fn loss(&self, x: &Tensor2D, y: &Tensor2D) -> Result<f64> {
        Ok(self.loss_of(&self.residual_spectrum(x, y)?))
    }

    /// `dL/dx = (2/HW) * Re(F^-1(w^2 * (F(x) - F(y))))`.
    pub fn grad(&self, x: &Tensor2D, y: &Tensor2D) -> Result<Tensor2D> {
        self.grad_of(self.residual_spectrum(x, y)?)
    }

    pub fn loss_and_grad(&self, x: &Tensor2D, y: &Tensor2D) -> Result<(f64, Tensor2D)> {
        let d = self.residual_spectrum(x, y)?;
        let loss = self.loss_of(&d);
        Ok((loss, self.grad_of(d)?))
    }
}

pub fn freq_loss(x: &Tensor2D, y: &Tensor2D, cfg: &FreqRegConfig) -> Result<f64> {
    x.ensure_same_shape(y)?;
    FreqLoss::new(x.height(), x.width(), cfg)?.loss(x, y)
}

pub fn freq_loss_grad(x: &Tensor2D, y: &Tensor2D, cfg: &FreqRegConfig) -> Result<Tensor2D> {
    x.ensure_same_shape(y)?;
    FreqLoss::new(x.height(), x.width(), cfg)?.grad(x, y)
}

/// Validated radial band edges `0 = e0 < e1 < ... < ek = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandEdges(Vec<f64>);

impl BandEdges {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        let ok = edges.len() >= 2
            && edges[0] == 0.0
            && *edges.last().unwrap() == 1.0
            && edges.windows(2).all(|p| p[0] < p[1]);
        if !ok {
            return Err(Error::invalid(format!(
                "band edges must increase strictly from 0 to 1, got {edges:?}"
            )));
        }
        Ok(Self(edges))
    }

    /// `n` equal-width bands.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("at least one band is required"));
        }
        let mut e: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        e.push(1.0);
        Self::new(e)
    }

    pub fn edges(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Band index of `r`; bands are half-open except the last, which includes 1.
    pub fn band_of(&self, r: f64) -> usize {
        let n = self.len();
        self.0[1..n].iter().take_while(|&&e| r >= e).count()
    }
}

impl Default for BandEdges {
    fn default() -> Self {
        Self(vec![0.0, 0.25, 0.5, 1.0])
    }
}

/// Per-band assignment of every bin of a grid.
#[derive(Debug, Clone)]
pub struct BandMap {
    bands: BandEdges,
    index: Vec<usize>,
}

impl BandMap {
    pub fn new(height: usize, width: usize, bands: BandEdges) -> Result<Self> {
        let radial = radial_field(height, width)?;
        let index = radial.data().iter().map(|&r| bands.band_of(r)).collect();
        Ok(Self { bands, index })
    }

    pub fn bands(&self) -> &BandEdges {
        &self.bands
    }

    /// Sum of `|X|^2` per band.
    pub fn energy(&self, s: &Spectrum) -> Vec<f64> {
        let mut out = vec![0.0; self.bands.len()];
        for (c, &b) in s.data().iter().zip(&self.index) {
            out[b] += c.norm_sqr();
        }
        out
    }
}

/// Sum of `|X|^2` over each radial band of a centered spectrum.
pub fn radial_band_energy(s: &Spectrum, bands: &BandEdges) -> Result<Vec<f64>> {
    Ok(BandMap::new(s.height(), s.width(), bands.clone())?.energy(s))
}
