use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flow::FlowState;
use super::model::{loss_and_grad, predict, LossBreakdown, Objective, PredictorParams, KERNEL_LEN};
use super::texture::{gen_texture, TextureSpec};
use crate::dots::{BetaParams, TimeSampler, TimestepConvention};
use crate::error::{Error, Result};
use crate::spectral::{BandEdges, BandMap, Dft2, FreqLoss, FreqRegConfig, Tensor2D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lambda_freq: f64,
    pub freq_reg: FreqRegConfig,
    pub dots: BetaParams,
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub use_dots: bool,
    pub use_swfr: bool,
    pub image_size: usize,
    pub init_std: f64,
    /// Number of held-out textures used by [`band_error`].
    pub eval_size: usize,
    pub eval_times: Vec<f64>,
    pub band_edges: Vec<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda_freq: 0.5,
            freq_reg: FreqRegConfig::default(),
            dots: BetaParams::default(),
            steps: 2000,
            batch_size: 16,
            learning_rate: 1e-2,
            seed: 0,
            use_dots: true,
            use_swfr: true,
            image_size: 32,
            init_std: 0.02,
            eval_size: 32,
            eval_times: vec![0.1, 0.3, 0.5],
            band_edges: vec![0.0, 0.25, 0.5, 1.0],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.freq_reg.validate()?;
        self.dots.validate()?;
        if !(self.lambda_freq >= 0.0 && self.lambda_freq.is_finite()) {
            return Err(Error::invalid("lambda_freq must be >= 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.image_size < 4 {
            return Err(Error::invalid("image_size must be at least 4"));
        }
        if !(self.init_std >= 0.0 && self.init_std.is_finite()) {
            return Err(Error::invalid("init_std must be >= 0"));
        }
        if self.eval_times.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::invalid("eval_times must lie in (0, 1)"));
        }
        BandEdges::new(self.band_edges.clone())?;
        Ok(())
    }

    pub fn time_sampler(&self) -> TimeSampler {
        if self.use_dots {
            TimeSampler::Beta(self.dots)
        } else {
            TimeSampler::Uniform
        }
    }
}

// Independent random streams so that arms differing only in time sampling or
// loss see the same textures and noise.
const STREAM_INIT: u64 = 0;
const STREAM_DATA: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_TIME: u64 = 3;
const STREAM_EVAL: u64 = 4;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn gaussian_field<R: Rng>(rng: &mut R, n: usize) -> Tensor2D {
    let data = (0..n * n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Tensor2D::from_raw(n, n, data)
}

pub fn init_params(cfg: &TrainConfig) -> PredictorParams {
    let mut rng = stream(cfg.seed, STREAM_INIT);
    let mut p = PredictorParams::default();
    for k in p.kernel.iter_mut().take(KERNEL_LEN) {
        *k = cfg.init_std * rng.sample::<f64, _>(StandardNormal);
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLoss {
    pub step: usize,
    pub total: f64,
    pub diff: f64,
    pub freq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub convention: TimestepConvention,
    pub config: TrainConfig,
    pub params: PredictorParams,
    pub log: Vec<StepLoss>,
}

/// Plain SGD on the toy predictor.
pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let n = cfg.image_size;
    let freq = if cfg.use_swfr {
        Some(FreqLoss::new(n, n, &cfg.freq_reg)?)
    } else {
        None
    };
    let objective = Objective {
        lambda_freq: cfg.lambda_freq,
        freq: freq.as_ref(),
    };
    let sampler = cfg.time_sampler();
    let mut data_rng = stream(cfg.seed, STREAM_DATA);
    let mut noise_rng = stream(cfg.seed, STREAM_NOISE);
    let mut time_rng = stream(cfg.seed, STREAM_TIME);

    let mut params = init_params(cfg);
    let mut log = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let mut batch = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size {
            let spec = TextureSpec {
                size: n,
                seed: data_rng.gen(),
                ..Default::default()
            };
            let x0 = gen_texture(&spec)?.image;
            let eps = gaussian_field(&mut noise_rng, n);
            let t = sampler.sample(&mut time_rng);
            batch.push(FlowState::new(x0, eps, t)?);
        }
        let (loss, grad) = loss_and_grad(&params, &batch, &objective)?;
        let LossBreakdown { total, diff, freq } = loss;
        if !total.is_finite() || grad.to_vec().iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical {
                step,
                message: format!("non-finite loss {total}"),
            });
        }
        log.push(StepLoss {
            step,
            total,
            diff,
            freq,
        });
        params.sgd_step(&grad, cfg.learning_rate);
    }
    Ok(TrainOutcome {
        convention: TimestepConvention::DataAtZero,
        config: cfg.clone(),
        params,
        log,
    })
}

/// Held-out clean samples with fixed noise.
#[derive(Debug, Clone)]
pub struct EvalSet {
    pub samples: Vec<(Tensor2D, Tensor2D)>,
}

impl EvalSet {
    /// Textures are generated in parallel from independent per-item seeds.
    pub fn generate(seed: u64, count: usize, size: usize) -> Result<Self> {
        let mut rng = stream(seed, STREAM_EVAL);
        let seeds: Vec<(u64, u64)> = (0..count).map(|_| (rng.gen(), rng.gen())).collect();
        let samples = seeds
            .into_par_iter()
            .map(|(tex_seed, noise_seed)| {
                let x0 = gen_texture(&TextureSpec {
                    size,
                    seed: tex_seed,
                    ..Default::default()
                })?
                .image;
                let eps = gaussian_field(&mut ChaCha8Rng::seed_from_u64(noise_seed), size);
                Ok((x0, eps))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { samples })
    }
}

/// Residual energy of `v_hat - v` per radial band, in MSE units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandErrors {
    pub edges: Vec<f64>,
    pub per_band: Vec<f64>,
    /// Spatial mean squared error; equals the sum of `per_band`.
    pub total_mse: f64,
}

impl BandErrors {
    pub fn last(&self) -> f64 {
        *self.per_band.last().unwrap_or(&0.0)
    }

    pub fn first(&self) -> f64 {
        *self.per_band.first().unwrap_or(&0.0)
    }
}

/// Per-band spectral residual, averaged over samples and evaluation times.
///
/// With the orthonormal DFT, band energies divided by `HW` sum to the
/// spatial MSE.
pub fn band_error(
    params: &PredictorParams,
    eval: &EvalSet,
    bands: &BandEdges,
    times: &[f64],
) -> Result<BandErrors> {
    band_error_with(eval, bands, times, |z, t| predict(params, z, t))
}

pub(crate) fn band_error_with(
    eval: &EvalSet,
    bands: &BandEdges,
    times: &[f64],
    model: impl Fn(&Tensor2D, f64) -> Tensor2D,
) -> Result<BandErrors> {
    let Some((first, _)) = eval.samples.first() else {
        return Err(Error::invalid("empty evaluation set"));
    };
    if times.is_empty() {
        return Err(Error::invalid("no evaluation times"));
    }
    let (h, w) = first.shape();
    let dft = Dft2::new(h, w)?;
    let map = BandMap::new(h, w, bands.clone())?;
    let mut per_band = vec![0.0; bands.len()];
    let mut total_mse = 0.0;
    let mut count = 0.0;
    for (x0, eps) in &eval.samples {
        for &t in times {
            let state = FlowState::new(x0.clone(), eps.clone(), t)?;
            let resid = model(&state.z_t, t).sub(&state.velocity())?;
            total_mse += resid.mean_squared();
            for (acc, e) in per_band.iter_mut().zip(map.energy(&dft.forward(&resid)?)) {
                *acc += e / (h * w) as f64;
            }
            count += 1.0;
        }
    }
    Ok(BandErrors {
        edges: bands.edges().to_vec(),
        per_band: per_band.into_iter().map(|e| e / count).collect(),
        total_mse: total_mse / count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedComparison {
    pub seed: u64,
    pub baseline: BandErrors,
    pub fapt: BandErrors,
    /// FAPT high-band error strictly below baseline.
    pub high_band_win: bool,
    /// FAPT low-band error at most `1 + LOW_BAND_TOLERANCE` times baseline.
    pub low_band_within: bool,
    pub baseline_final_loss: f64,
    pub fapt_final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub convention: TimestepConvention,
    pub baseline_config: TrainConfig,
    pub fapt_config: TrainConfig,
    pub training_runs: usize,
    pub seeds: Vec<SeedComparison>,
    pub high_band_wins: usize,
    pub low_band_within: usize,
}

pub const LOW_BAND_TOLERANCE: f64 = 0.20;

/// Trains two arms per seed on identical data streams and compares their
/// per-band evaluation error. Seeds run in parallel; each run is sequential.
pub fn compare_arms(
    baseline: &TrainConfig,
    fapt: &TrainConfig,
    n_seeds: usize,
) -> Result<CompareReport> {
    if n_seeds == 0 {
        return Err(Error::invalid("n_seeds must be at least 1"));
    }
    baseline.validate()?;
    fapt.validate()?;
    if baseline.image_size != fapt.image_size || baseline.band_edges != fapt.band_edges {
        return Err(Error::invalid("both arms must share image size and band edges"));
    }
    let bands = BandEdges::new(fapt.band_edges.clone())?;
    let seeds = (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = fapt.seed.wrapping_add(i);
            let a_cfg = TrainConfig { seed, ..baseline.clone() };
            let b_cfg = TrainConfig { seed, ..fapt.clone() };
            let eval = EvalSet::generate(seed, fapt.eval_size, fapt.image_size)?;
            let a = train(&a_cfg)?;
            let b = train(&b_cfg)?;
            let ea = band_error(&a.params, &eval, &bands, &baseline.eval_times)?;
            let eb = band_error(&b.params, &eval, &bands, &fapt.eval_times)?;
            Ok(SeedComparison {
                seed,
                high_band_win: eb.last() < ea.last(),
                low_band_within: eb.first() <= (1.0 + LOW_BAND_TOLERANCE) * ea.first(),
                baseline_final_loss: a.log.last().map_or(f64::NAN, |l| l.total),
                fapt_final_loss: b.log.last().map_or(f64::NAN, |l| l.total),
                baseline: ea,
                fapt: eb,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompareReport {
        convention: TimestepConvention::DataAtZero,
        baseline_config: baseline.clone(),
        fapt_config: fapt.clone(),
        training_runs: 2 * n_seeds,
        high_band_wins: seeds.iter().filter(|s| s.high_band_win).count(),
        low_band_within: seeds.iter().filter(|s| s.low_band_within).count(),
        seeds,
    })
}

/// Baseline (uniform times, diffusion loss only) against DOTS + SWFR.
pub fn experiment_compare(cfg: &TrainConfig, n_seeds: usize) -> Result<CompareReport> {
    let baseline = TrainConfig {
        use_dots: false,
        use_swfr: false,
        ..cfg.clone()
    };
    let fapt = TrainConfig {
        use_dots: true,
        use_swfr: true,
        ..cfg.clone()
    };
    compare_arms(&baseline, &fapt, n_seeds)
}

impl CompareReport {
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let edges = &self.fapt_config.band_edges;
        let hi = edges.len().saturating_sub(2);
        let _ = writeln!(
            s,
            "seed      base_low    fapt_low    base_high   fapt_high   high_win  low_ok"
        );
        for r in &self.seeds {
            let _ = writeln!(
                s,
                "{:<8}  {:<10.6}  {:<10.6}  {:<10.6}  {:<10.6}  {:<8}  {}",
                r.seed,
                r.baseline.first(),
                r.fapt.first(),
                r.baseline.per_band[hi],
                r.fapt.per_band[hi],
                r.high_band_win,
                r.low_band_within
            );
        }
        let _ = writeln!(
            s,
            "high-band wins: {}/{}  low-band within {:.0}%: {}/{}  (training runs: {})",
            self.high_band_wins,
            self.seeds.len(),
            LOW_BAND_TOLERANCE * 100.0,
            self.low_band_within,
            self.seeds.len(),
            self.training_runs
        );
        s
    }
}
