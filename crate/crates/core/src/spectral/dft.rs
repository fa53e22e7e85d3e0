use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real-valued `height x width` field, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor2D {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Tensor2D {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(Error::invalid(format!(
                "tensor {height}x{width} with {} values",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tensor contains non-finite values"));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for u in 0..height {
            for v in 0..width {
                data.push(f(u, v));
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.width + v]
    }

    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self {
            height,
            width,
            data,
        }
    }

    pub(crate) fn ensure_same_shape(&self, other: &Tensor2D) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::invalid(format!(
                "shape mismatch: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &Tensor2D) -> Result<Tensor2D> {
        self.ensure_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Self::from_raw(self.height, self.width, data))
    }

    pub fn mean_squared(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>() / self.data.len() as f64
    }
}

/// Complex frequency grid with the zero frequency at `(H/2, W/2)` (floor).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    height: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
        if height < 2 || width < 2 || data.len() != height * width {
            return Err(Error::invalid(format!(
                "spectrum {height}x{width} with {} bins",
                data.len()
            )));
        }
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

    pub fn center(&self) -> (usize, usize) {
        (self.height / 2, self.width / 2)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.data[u * self.width + v]
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Planned orthonormal 2-D DFT for one grid size.
///
/// Both directions carry a `1/sqrt(HW)` factor, so the transform is unitary.
pub struct Dft2 {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Dft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dft2")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish()
    }
}

impl Dft2 {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(Error::invalid(format!(
                "DFT grid must be at least 2x2, got {height}x{width}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
            scale: 1.0 / ((height * width) as f64).sqrt(),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let (h, w) = (self.height, self.width);
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        row.process(buf);
        let mut t = vec![Complex64::default(); h * w];
        for u in 0..h {
            for v in 0..w {
                t[v * h + u] = buf[u * w + v];
            }
        }
        col.process(&mut t);
        for v in 0..w {
            for u in 0..h {
                buf[u * w + v] = t[v * h + u] * self.scale;
            }
        }
    }

    #[inline]
    fn shifted(&self, u: usize, v: usize) -> usize {
        ((u + self.height / 2) % self.height) * self.width + (v + self.width / 2) % self.width
    }

    pub fn forward(&self, x: &Tensor2D) -> Result<Spectrum> {
        if x.shape() != self.shape() {
            return Err(Error::invalid(format!(
                "tensor {:?} does not match DFT plan {:?}",
                x.shape(),
                self.shape()
            )));
        }
        let mut buf: Vec<Complex64> = x.data().iter().map(|&r| Complex64::new(r, 0.0)).collect();
        self.transform(&mut buf, false);
        let mut out = vec![Complex64::default(); buf.len()];
        for u in 0..self.height {
            for v in 0..self.width {
                out[self.shifted(u, v)] = buf[u * self.width + v];
            }
        }
        Ok(Spectrum {
            height: self.height,
            width: self.width,
            data: out,
        })
    }

    /// Inverse transform keeping the complex result (natural ordering).
    pub fn inverse_complex(&self, s: &Spectrum) -> Result<Vec<Complex64>> {
        if (s.height, s.width) != self.shape() {
            return Err(Error::invalid(format!(
                "spectrum {}x{} does not match DFT plan {:?}",
                s.height,
                s.width,
                self.shape()
            )));
        }
        let mut buf = vec![Complex64::default(); s.data.len()];
        for u in 0..self.height {
            for v in 0..self.width {
                buf[u * self.width + v] = s.data[self.shifted(u, v)];
            }
        }
        self.transform(&mut buf, true);
        Ok(buf)
    }

    /// Inverse transform to a real field. Fails if the imaginary residue
    /// exceeds `1e-9` (relative to the field magnitude when that exceeds 1),
    /// i.e. the spectrum is not that of a real signal.
    pub fn inverse(&self, s: &Spectrum) -> Result<Tensor2D> {
        let buf = self.inverse_complex(s)?;
        let peak = buf.iter().fold(1.0f64, |m, c| m.max(c.re.abs()));
        let residue = buf.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        if residue > 1e-9 * peak {
            return Err(Error::Numerical {
                step: 0,
                message: format!("inverse DFT imaginary residue {residue:e} exceeds tolerance"),
            });
        }
        Ok(Tensor2D::from_raw(
            self.height,
            self.width,
            buf.into_iter().map(|c| c.re).collect(),
        ))
    }
}

/// Centered orthonormal 2-D DFT.
pub fn dft2(x: &Tensor2D) -> Result<Spectrum> {
    Dft2::new(x.height(), x.width())?.forward(x)
}

/// Inverse of [`dft2`], returning the real part.
pub fn idft2(s: &Spectrum) -> Result<Tensor2D> {
    Dft2::new(s.height(), s.width())?.inverse(s)
}


#[cfg(test)]
mod tests {
    use super::oracle::direct_dft2;
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(h: usize, w: usize, seed: u64) -> Tensor2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor2D::from_fn(h, w, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn constant_is_dc_only() {
        for &(h, w) in &[(4, 4), (5, 7), (6, 3)] {
            let c = 2.5;
            let s = dft2(&Tensor2D::from_fn(h, w, |_, _| c).unwrap()).unwrap();
            let (cu, cv) = s.center();
            for u in 0..h {
                for v in 0..w {
                    let z = s.get(u, v);
                    if (u, v) == (cu, cv) {
                        assert!((z.re - c * ((h * w) as f64).sqrt()).abs() < 1e-12);
                        assert!(z.im.abs() < 1e-12);
                    } else {
                        assert!(z.norm() < 1e-12, "bin ({u},{v}) = {z}");
                    }
                }
            }
        }
    }

    #[test]
    fn round_trip_recovers_input() {
        let x = random(16, 16, 1);
        let back = idft2(&dft2(&x).unwrap()).unwrap();
        let err = x.data().iter().zip(back.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "max error {err}");
    }

    #[test]
    fn horizontal_cosine_has_two_symmetric_bins() {
        let (h, w, k) = (8, 16, 3);
        let x = Tensor2D::from_fn(h, w, |_, n| {
            (2.0 * std::f64::consts::PI * k as f64 * n as f64 / w as f64).cos()
        })
        .unwrap();
        let s = dft2(&x).unwrap();
        let oracle = direct_dft2(h, w, x.data());
        let (cu, cv) = s.center();
        let mut nonzero = Vec::new();
        for u in 0..h {
            for v in 0..w {
                assert!((s.get(u, v) - oracle[u * w + v]).norm() < 1e-10);
                if s.get(u, v).norm() > 1e-9 {
                    nonzero.push((u, v));
                }
            }
        }
        assert_eq!(nonzero, vec![(cu, cv - k), (cu, cv + k)]);
    }

    #[test]
    fn fft_matches_direct_summation() {
        for &(h, w) in &[(8, 8), (5, 6), (7, 3)] {
            let x = random(h, w, (h * 31 + w) as u64);
            let s = dft2(&x).unwrap();
            let oracle = direct_dft2(h, w, x.data());
            for (a, b) in s.data().iter().zip(&oracle) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn small_grids_are_rejected() {
        let x = Tensor2D::zeros(1, 8);
        assert!(matches!(dft2(&x), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn non_hermitian_spectrum_is_flagged() {
        let mut data = vec![Complex64::default(); 16];
        data[1] = Complex64::new(1.0, 0.0);
        let s = Spectrum::new(4, 4, data).unwrap();
        assert!(idft2(&s).is_err());
    }

    proptest! {
        #[test]
        fn parseval_holds(h in 2usize..=64, w in 2usize..=64, seed in 0u64..1000) {
            let x = random(h, w, seed);
            let spatial: f64 = x.data().iter().map(|v| v * v).sum();
            let spectral = dft2(&x).unwrap().energy();
            prop_assert!((spatial - spectral).abs() < 1e-9 * spatial.max(1.0));
        }
    }
}
