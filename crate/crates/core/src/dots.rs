//! Detail-oriented timestep sampling: Beta density, CDF and sampler.
//!
//! Times live in `(0, 1)` with `t = 0` at the data end and `t = 1` at the
//! noise end, matching `z_t = (1 - t) x0 + t eps`. A Beta with `alpha < beta`
//! therefore concentrates training on the near-data steps.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for BetaParams {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 4.0,
        }
    }
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!(
                "Beta shape parameters must be positive, got ({}, {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Interior mode, defined when both shapes exceed 1.
    pub fn mode(&self) -> Option<f64> {
        (self.alpha > 1.0 && self.beta > 1.0)
            .then(|| (self.alpha - 1.0) / (self.alpha + self.beta - 2.0))
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }
}

/// Which end of `[0, 1]` is data and which is noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TimestepConvention {
    /// `t = 0` is clean data, `t = 1` is pure noise.
    #[default]
    #[serde(rename = "t0_data_t1_noise")]
    DataAtZero,
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the Gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::invalid(format!("ln_gamma needs x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x).
        return (PI / (PI * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(params: &BetaParams) -> f64 {
    ln_gamma_pos(params.alpha) + ln_gamma_pos(params.beta) - ln_gamma_pos(params.alpha + params.beta)
}

/// Beta density on the open interval.
pub fn beta_pdf(t: f64, params: &BetaParams) -> Result<f64> {
    params.validate()?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid(format!("beta_pdf needs t in (0, 1), got {t}")));
    }
    let BetaParams { alpha, beta } = *params;
    Ok(((alpha - 1.0) * t.ln() + (beta - 1.0) * (-t).ln_1p() - ln_beta(params)).exp())
}

/// Regularized incomplete beta `I_t(alpha, beta)`.
pub fn beta_cdf(t: f64, params: &BetaParams) -> Result<f64> {
    params.validate()?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("beta_cdf needs t in [0, 1], got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t == 1.0 {
        return Ok(1.0);
    }
    let BetaParams { alpha: a, beta: b } = *params;
    let front = (a * t.ln() + b * (-t).ln_1p() - ln_beta(params)).exp();
    // The continued fraction converges fast below the mean-ish switch point;
    // above it, use I_t(a, b) = 1 - I_{1-t}(b, a).
    let v = if t < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(t, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - t, b, a) / b
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Marsaglia-Tsang Gamma(shape, 1) variate.
fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    if shape < 1.0 {
        // Gamma(a) = Gamma(a + 1) * U^(1/a).
        let u: f64 = rng.gen();
        return sample_gamma(rng, shape + 1.0) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.gen();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

const T_EPS: f64 = 1e-12;

/// One Beta draw as the ratio `X / (X + Y)` of Gamma variates, kept inside
/// `[1e-12, 1 - 1e-12]`.
pub fn sample_beta<R: Rng + ?Sized>(rng: &mut R, params: &BetaParams) -> f64 {
    let x = sample_gamma(rng, params.alpha);
    let y = sample_gamma(rng, params.beta);
    let t = if x + y > 0.0 { x / (x + y) } else { 0.5 };
    t.clamp(T_EPS, 1.0 - T_EPS)
}

/// Source of training times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeSampler {
    Uniform,
    Beta(BetaParams),
}

impl TimeSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            TimeSampler::Uniform => {
                let u: f64 = rng.gen();
                u.clamp(T_EPS, 1.0 - T_EPS)
            }
            TimeSampler::Beta(p) => sample_beta(rng, p),
        }
    }
}

/// `min(floor(t * T), T - 1)`; index 0 is the data end.
pub fn map_to_discrete(t: f64, num_timesteps: usize) -> Result<usize> {
    if num_timesteps == 0 {
        return Err(Error::invalid("number of timesteps must be at least 1"));
    }
    let t = t.clamp(0.0, 1.0);
    Ok(((t * num_timesteps as f64).floor() as usize).min(num_timesteps - 1))
}

/// Counts of samples in `bins` equal-width bins over `[0, 1]`.
pub fn histogram(samples: &[f64], bins: usize) -> Result<Vec<u64>> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let mut counts = vec![0u64; bins];
    for &t in samples {
        counts[map_to_discrete(t, bins)?] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let n = panels + panels % 2;
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn ln_gamma_classical_values() {
        assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
        assert!((ln_gamma(6.0).unwrap() - 120f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5).unwrap() - PI.sqrt().ln()).abs() < 1e-14);
        // mpmath references (30 digits).
        let refs = [
            (50.0, 144.565_743_946_344_886),
            (3.7, 1.428_072_326_665_388_1),
            (0.7, 0.260_867_246_531_666_57),
        ];
        for (x, want) in refs {
            let got = ln_gamma(x).unwrap();
            assert!(((got - want) / want).abs() < 1e-12, "x={x}: {got} vs {want}");
        }
        // Factorials across the range.
        let mut fact: f64 = 1.0;
        for n in 1..40u32 {
            fact *= f64::from(n);
            let got = ln_gamma(f64::from(n) + 1.0).unwrap();
            assert!(((got - fact.ln()) / fact.ln().max(1.0)).abs() < 1e-12);
        }
        assert!(matches!(ln_gamma(0.0), Err(Error::InvalidInput(_))));
        assert!(ln_gamma(-1.5).is_err());
    }

    #[test]
    fn pdf_values() {
        let uniform = BetaParams::new(1.0, 1.0).unwrap();
        for t in [0.01, 0.3, 0.99] {
            assert!((beta_pdf(t, &uniform).unwrap() - 1.0).abs() < 1e-14);
        }
        let p = BetaParams::new(2.0, 4.0).unwrap();
        assert!((beta_pdf(0.25, &p).unwrap() - 2.109_375).abs() < 1e-12);
        assert!((20.0 * 0.25 * 0.75f64.powi(3) - 2.109_375).abs() < 1e-15);
        assert!(beta_pdf(0.0, &p).is_err());
        assert!(beta_pdf(1.0, &p).is_err());
    }

    #[test]
    fn pdf_normalizes() {
        for (a, b) in [(1.0, 1.0), (2.0, 4.0), (3.0, 4.0), (2.0, 5.0), (2.0, 3.0), (1.0, 4.0)] {
            let p = BetaParams::new(a, b).unwrap();
            let f = |t: f64| if t <= 0.0 || t >= 1.0 {
                // Endpoint limits of the density for these shapes.
                match (t <= 0.0, a == 1.0, b == 1.0) {
                    (true, true, _) => (-ln_beta(&p)).exp(),
                    (false, _, true) => (-ln_beta(&p)).exp(),
                    _ => 0.0,
                }
            } else {
                beta_pdf(t, &p).unwrap()
            };
            let total = simpson(f, 0.0, 1.0, 10_000);
            assert!((total - 1.0).abs() < 1e-6, "({a},{b}) integrates to {total}");
        }
    }

    #[test]
    fn cdf_endpoints_symmetry_and_references() {
        let p = BetaParams::new(2.0, 4.0).unwrap();
        assert_eq!(beta_cdf(0.0, &p).unwrap(), 0.0);
        assert_eq!(beta_cdf(1.0, &p).unwrap(), 1.0);
        for a in [0.5, 1.0, 2.0, 7.5] {
            let q = BetaParams::new(a, a).unwrap();
            assert!((beta_cdf(0.5, &q).unwrap() - 0.5).abs() < 1e-14);
        }
        assert!((beta_cdf(0.25, &p).unwrap() - 0.367_187_5).abs() < 1e-14);
        let q = BetaParams::new(3.0, 4.0).unwrap();
        assert!((beta_cdf(0.7, &q).unwrap() - 0.929_53).abs() < 1e-13);
        let q = BetaParams::new(0.5, 0.5).unwrap();
        assert!((beta_cdf(0.1, &q).unwrap() - 0.204_832_764_699_133_46).abs() < 1e-13);
        assert!(beta_cdf(1.1, &p).is_err());
    }

    #[test]
    fn cdf_matches_quadrature_and_is_monotone() {
        for (a, b) in [(2.0, 4.0), (3.0, 4.0), (2.0, 5.0), (2.0, 3.0)] {
            let p = BetaParams::new(a, b).unwrap();
            let mut prev = 0.0;
            for i in 1..100 {
                let t = i as f64 / 100.0;
                let c = beta_cdf(t, &p).unwrap();
                assert!(c >= prev, "cdf decreased at t={t}");
                prev = c;
                if i % 10 == 5 {
                    let quad = simpson(|s| if s <= 0.0 { 0.0 } else { beta_pdf(s, &p).unwrap() }, 0.0, t, 10_000);
                    assert!((c - quad).abs() < 1e-8, "({a},{b}) t={t}: {c} vs {quad}");
                }
            }
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let p = BetaParams::default();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| sample_beta(&mut rng, &p)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn sample_means_within_three_sigma() {
        let n = 100_000;
        for (a, b) in [(1.0, 1.0), (2.0, 4.0), (0.5, 0.8)] {
            let p = BetaParams::new(a, b).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mean = (0..n).map(|_| sample_beta(&mut rng, &p)).sum::<f64>() / n as f64;
            let sigma = (p.variance() / n as f64).sqrt();
            assert!((mean - p.mean()).abs() < 3.0 * sigma, "({a},{b}) mean {mean}");
        }
    }

    #[test]
    fn data_end_bias_when_alpha_below_beta() {
        let p = BetaParams::default();
        assert!(beta_cdf(0.5, &p).unwrap() > 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let below = (0..10_000).filter(|_| sample_beta(&mut rng, &p) < 0.5).count();
        assert!(below > 5_000);
    }

    #[test]
    fn discrete_mapping() {
        assert_eq!(map_to_discrete(0.999, 1000).unwrap(), 999);
        assert_eq!(map_to_discrete(1e-12, 1000).unwrap(), 0);
        assert_eq!(map_to_discrete(1.0, 10).unwrap(), 9);
        assert_eq!(map_to_discrete(0.5, 1).unwrap(), 0);
        assert!(map_to_discrete(0.5, 0).is_err());
    }

    #[test]
    fn uniform_times_fill_bins_evenly() {
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ts: Vec<f64> = (0..n).map(|_| TimeSampler::Uniform.sample(&mut rng)).collect();
        let counts = histogram(&ts, 10).unwrap();
        let expect = n as f64 / 10.0;
        let sigma = (n as f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!((c as f64 - expect).abs() < 3.0 * sigma, "{c}");
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(BetaParams::new(0.0, 1.0).is_err());
        assert!(BetaParams::new(1.0, f64::NAN).is_err());
        assert!(beta_pdf(0.5, &BetaParams { alpha: -1.0, beta: 2.0 }).is_err());
    }
}
