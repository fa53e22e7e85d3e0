use serde::{Deserialize, Serialize};

use super::flow::FlowState;
use crate::error::{Error, Result};
use crate::spectral::{FreqLoss, Tensor2D};

pub const KERNEL_SIZE: usize = 5;
pub const KERNEL_LEN: usize = KERNEL_SIZE * KERNEL_SIZE;
pub const TIME_BINS: usize = 16;
pub const PARAM_COUNT: usize = KERNEL_LEN + TIME_BINS;

/// A single 5x5 convolution plus a per-time-bin bias: 41 parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorParams {
    pub kernel: [f64; KERNEL_LEN],
    pub bias: [f64; TIME_BINS],
}

impl Default for PredictorParams {
    fn default() -> Self {
        Self {
            kernel: [0.0; KERNEL_LEN],
            bias: [0.0; TIME_BINS],
        }
    }
}

impl PredictorParams {
    pub fn to_vec(&self) -> Vec<f64> {
        self.kernel.iter().chain(&self.bias).copied().collect()
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != PARAM_COUNT {
            return Err(Error::invalid(format!(
                "expected {PARAM_COUNT} parameters, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("parameters must be finite"));
        }
        let mut p = Self::default();
        p.kernel.copy_from_slice(&values[..KERNEL_LEN]);
        p.bias.copy_from_slice(&values[KERNEL_LEN..]);
        Ok(p)
    }

    /// `self -= lr * grad`.
    pub fn sgd_step(&mut self, grad: &PredictorParams, lr: f64) {
        for (p, g) in self.kernel.iter_mut().zip(&grad.kernel) {
            *p -= lr * g;
        }
        for (p, g) in self.bias.iter_mut().zip(&grad.bias) {
            *p -= lr * g;
        }
    }
}

/// Bias-table slot for time `t`.
pub fn time_bin(t: f64) -> usize {
    ((t.clamp(0.0, 1.0) * TIME_BINS as f64) as usize).min(TIME_BINS - 1)
}

const HALF: isize = (KERNEL_SIZE / 2) as isize;

/// `v_hat = conv5x5(z_t) + bias[bin(t)]` with zero padding, same size.
pub fn predict(params: &PredictorParams, z_t: &Tensor2D, t: f64) -> Tensor2D {
    let (h, w) = z_t.shape();
    let z = z_t.data();
    let b = params.bias[time_bin(t)];
    let mut out = vec![b; h * w];
    for ka in 0..KERNEL_SIZE {
        let da = ka as isize - HALF;
        for kb in 0..KERNEL_SIZE {
            let db = kb as isize - HALF;
            let k = params.kernel[ka * KERNEL_SIZE + kb];
            if k == 0.0 {
                continue;
            }
            let (i0, i1) = shifted_range(h, da);
            let (j0, j1) = shifted_range(w, db);
            if i0 >= i1 || j0 >= j1 {
                continue;
            }
            for i in i0..i1 {
                let src = ((i as isize + da) as usize) * w;
                let zs = &z[(src as isize + j0 as isize + db) as usize..(src as isize + j1 as isize + db) as usize];
                for (o, zv) in out[i * w + j0..i * w + j1].iter_mut().zip(zs) {
                    *o += k * zv;
                }
            }
        }
    }
    Tensor2D::from_raw(h, w, out)
}

/// Output indices `i` with `i + d` inside `0..n`.
#[inline]
fn shifted_range(n: usize, d: isize) -> (usize, usize) {
    let lo = (-d).max(0) as usize;
    let hi = (n as isize - d.max(0)).max(0) as usize;
    (lo.min(n), hi)
}

/// Loss weights and the optional spectral term.
pub struct Objective<'a> {
    pub lambda_freq: f64,
    /// `None` disables the spectral term entirely.
    pub freq: Option<&'a FreqLoss>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub diff: f64,
    pub freq: f64,
}

/// Batch-mean `L_diff + lambda_freq * L_freq` and its gradient in the parameters.
pub fn loss_and_grad(
    params: &PredictorParams,
    batch: &[FlowState],
    objective: &Objective<'_>,
) -> Result<(LossBreakdown, PredictorParams)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let inv_batch = 1.0 / batch.len() as f64;
    let mut diff_sum = 0.0;
    let mut freq_sum = 0.0;
    let mut grad = PredictorParams::default();

    for state in batch {
        let (h, w) = state.z_t.shape();
        let n = (h * w) as f64;
        let v = state.velocity();
        let v_hat = predict(params, &state.z_t, state.t);

        let resid = v_hat.sub(&v)?;
        diff_sum += resid.mean_squared();
        // dL/dv_hat for this sample, before the batch mean.
        let mut g: Vec<f64> = resid.data().iter().map(|r| 2.0 / n * r).collect();

        if let Some(fl) = objective.freq {
            let (lf, gf) = fl.loss_and_grad(&v_hat, &v)?;
            freq_sum += lf;
            for (gi, fi) in g.iter_mut().zip(gf.data()) {
                *gi += objective.lambda_freq * fi;
            }
        }

        accumulate_param_grad(&mut grad, &g, &state.z_t, state.t, inv_batch);
    }

    let diff = diff_sum * inv_batch;
    let freq = freq_sum * inv_batch;
    let total = if objective.freq.is_some() {
        diff + objective.lambda_freq * freq
    } else {
        diff
    };
    Ok((LossBreakdown { total, diff, freq }, grad))
}

/// Kernel gradient is the correlation of the output gradient with the input
/// windows; the bias gradient is the summed output gradient of its bin.
fn accumulate_param_grad(
    grad: &mut PredictorParams,
    g: &[f64],
    z_t: &Tensor2D,
    t: f64,
    scale: f64,
) {
    let (h, w) = z_t.shape();
    let z = z_t.data();
    for ka in 0..KERNEL_SIZE {
        let da = ka as isize - HALF;
        for kb in 0..KERNEL_SIZE {
            let db = kb as isize - HALF;
            let (i0, i1) = shifted_range(h, da);
            let (j0, j1) = shifted_range(w, db);
            if i0 >= i1 || j0 >= j1 {
                continue;
            }
            let mut acc = 0.0;
            for i in i0..i1 {
                let src = ((i as isize + da) as usize) * w;
                let zs = &z[(src as isize + j0 as isize + db) as usize..(src as isize + j1 as isize + db) as usize];
                acc += g[i * w + j0..i * w + j1]
                    .iter()
                    .zip(zs)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            }
            grad.kernel[ka * KERNEL_SIZE + kb] += scale * acc;
        }
    }
    grad.bias[time_bin(t)] += scale * g.iter().sum::<f64>();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::FreqRegConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(h: usize, w: usize, rng: &mut ChaCha8Rng) -> Tensor2D {
        Tensor2D::from_fn(h, w, |_, _| rng.gen_range(-1.0..1.0)).unwrap()
    }

    fn random_batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<FlowState> {
        (0..n)
            .map(|_| {
                let x0 = random_tensor(8, 8, rng);
                let eps = random_tensor(8, 8, rng);
                FlowState::new(x0, eps, rng.gen_range(0.01..0.99)).unwrap()
            })
            .collect()
    }

    // Direct zero-padded convolution.
    fn predict_oracle(p: &PredictorParams, z: &Tensor2D, t: f64) -> Vec<f64> {
        let (h, w) = z.shape();
        let mut out = vec![0.0; h * w];
        for i in 0..h as isize {
            for j in 0..w as isize {
                let mut acc = p.bias[time_bin(t)];
                for a in -2..=2isize {
                    for b in -2..=2isize {
                        let (y, x) = (i + a, j + b);
                        if y >= 0 && y < h as isize && x >= 0 && x < w as isize {
                            acc += p.kernel[((a + 2) * 5 + b + 2) as usize] * z.get(y as usize, x as usize);
                        }
                    }
                }
                out[(i as usize) * w + j as usize] = acc;
            }
        }
        out
    }

    #[test]
    fn parameter_count_is_41() {
        assert_eq!(PARAM_COUNT, 41);
        assert_eq!(PredictorParams::default().to_vec().len(), 41);
    }

    #[test]
    fn predict_matches_direct_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = PredictorParams::from_slice(&(0..41).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()).unwrap();
        for &(h, w) in &[(8, 8), (3, 7), (1, 1)] {
            let z = random_tensor(h, w, &mut rng);
            let got = predict(&p, &z, 0.42);
            for (a, b) in got.data().iter().zip(predict_oracle(&p, &z, 0.42)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_params_give_mean_square_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = random_batch(&mut rng, 4);
        let obj = Objective {
            lambda_freq: 0.0,
            freq: None,
        };
        let (loss, _) = loss_and_grad(&PredictorParams::default(), &batch, &obj).unwrap();
        let want = batch.iter().map(|s| s.velocity().mean_squared()).sum::<f64>() / 4.0;
        assert!((loss.diff - want).abs() < 1e-14);
        assert_eq!(loss.total, loss.diff);
    }

    #[test]
    fn zero_lambda_freq_leaves_total_equal_to_diff() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let batch = random_batch(&mut rng, 3);
        let fl = FreqLoss::new(8, 8, &FreqRegConfig::default()).unwrap();
        let p = PredictorParams::from_slice(&(0..41).map(|_| rng.gen_range(-0.1..0.1)).collect::<Vec<_>>()).unwrap();
        let with = Objective {
            lambda_freq: 0.0,
            freq: Some(&fl),
        };
        let without = Objective {
            lambda_freq: 0.0,
            freq: None,
        };
        let (a, ga) = loss_and_grad(&p, &batch, &with).unwrap();
        let (b, gb) = loss_and_grad(&p, &batch, &without).unwrap();
        assert_eq!(a.total, a.diff);
        assert_eq!(a.total, b.total);
        assert_eq!(ga, gb);
    }

    #[test]
    fn full_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fl = FreqLoss::new(8, 8, &FreqRegConfig { lambda: 1.0, gamma: 4.0 }).unwrap();
        let obj = Objective {
            lambda_freq: 0.5,
            freq: Some(&fl),
        };
        let batch = random_batch(&mut rng, 6);
        let theta: Vec<f64> = (0..41).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let p = PredictorParams::from_slice(&theta).unwrap();
        let (_, g) = loss_and_grad(&p, &batch, &obj).unwrap();
        let g = g.to_vec();
        let step = 1e-5;
        for k in 0..41 {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[k] += step;
            tm[k] -= step;
            let lp = loss_and_grad(&PredictorParams::from_slice(&tp).unwrap(), &batch, &obj).unwrap().0.total;
            let lm = loss_and_grad(&PredictorParams::from_slice(&tm).unwrap(), &batch, &obj).unwrap().0.total;
            let fd = (lp - lm) / (2.0 * step);
            if fd == 0.0 && g[k] == 0.0 {
                continue;
            }
            let rel = (fd - g[k]).abs() / fd.abs().max(g[k].abs());
            assert!(rel < 1e-5, "param {k}: fd {fd} analytic {}", g[k]);
        }
    }

    #[test]
    fn empty_batch_is_rejected() {
        let obj = Objective {
            lambda_freq: 0.0,
            freq: None,
        };
        assert!(loss_and_grad(&PredictorParams::default(), &[], &obj).is_err());
    }
}
