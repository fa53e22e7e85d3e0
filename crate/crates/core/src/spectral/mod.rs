//! Orthonormal 2-D DFT, radial soft weighting and the weighted spectral loss.

mod dft;
mod loss;
mod weight;

pub use self::dft::{dft2, idft2, Dft2, Spectrum, Tensor2D};
pub use self::loss::{freq_loss, freq_loss_grad, radial_band_energy, BandEdges, BandMap, FreqLoss};
pub use self::weight::{radial_field, soft_weight, FreqRegConfig, RadialField, WeightField};

