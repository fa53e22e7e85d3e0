use crate::error::{Error, Result};
use crate::spectral::Tensor2D;

/// One point on the straight path between a clean sample and its noise.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub x0: Tensor2D,
    pub eps: Tensor2D,
    pub t: f64,
    pub z_t: Tensor2D,
}

impl FlowState {
    pub fn new(x0: Tensor2D, eps: Tensor2D, t: f64) -> Result<Self> {
        let z_t = forward_diffuse(&x0, &eps, t)?;
        Ok(Self { x0, eps, t, z_t })
    }

    pub fn velocity(&self) -> Tensor2D {
        // Shapes were checked in `new`.
        velocity_target(&self.x0, &self.eps).expect("shapes checked at construction")
    }
}

/// `z_t = (1 - t) x0 + t eps`.
pub fn forward_diffuse(x0: &Tensor2D, eps: &Tensor2D, t: f64) -> Result<Tensor2D> {
    x0.ensure_same_shape(eps)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid(format!("diffusion time must be in (0, 1), got {t}")));
    }
    let data = x0
        .data()
        .iter()
        .zip(eps.data())
        .map(|(x, e)| (1.0 - t) * x + t * e)
        .collect();
    Ok(Tensor2D::from_raw(x0.height(), x0.width(), data))
}

/// `v = eps - x0`, the constant velocity of the path.
pub fn velocity_target(x0: &Tensor2D, eps: &Tensor2D) -> Result<Tensor2D> {
    eps.sub(x0)
}
