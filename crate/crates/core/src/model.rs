//! The 184-parameter toy model.
//!
//! A 30-state latent with an exponential-quadratic encoder, decoder and
//! classifier plus a free variational marginal. The encoder weights carry
//! multiplicative log-normal noise exp(√α·ε − α/2), whose per-weight
//! variances α are themselves parameters. Scalar inputs: bin j and latent i
//! enter as j/29 and i/29 on [0, 1].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::ConditionalTable;
use crate::mixture::N_BINS;

/// Latent alphabet size.
pub const N_LATENT: usize = 30;

/// Total scalar parameter count: 60 + 60 + 4 + 30 + 30.
pub const N_PARAMS: usize = 184;

pub fn bin_value(j: usize) -> f64 {
    j as f64 / (N_BINS - 1) as f64
}

pub fn latent_value(i: usize) -> f64 {
    i as f64 / (N_LATENT - 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModelParams {
    pub enc_w: [f64; N_LATENT],
    pub enc_b: [f64; N_LATENT],
    pub dec_w: [f64; N_LATENT],
    pub dec_b: [f64; N_LATENT],
    pub cls_w: [f64; 2],
    pub cls_b: [f64; 2],
    pub marginal_logits: [f64; N_LATENT],
    /// Log-normal noise variances for the encoder weights.
    pub alpha: [f64; N_LATENT],
}

/// One reparameterized draw of the encoder weight noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseDraw {
    pub eps: [f64; N_LATENT],
    /// exp(√α·ε − α/2), elementwise; unit mean for every α.
    pub multipliers: [f64; N_LATENT],
}

impl NoiseDraw {
    pub fn from_eps(alpha: &[f64; N_LATENT], eps: [f64; N_LATENT]) -> Self {
        let mut multipliers = [0.0; N_LATENT];
        for i in 0..N_LATENT {
            multipliers[i] = (alpha[i].sqrt() * eps[i] - alpha[i] / 2.0).exp();
        }
        NoiseDraw { eps, multipliers }
    }

    /// Identity draw: multipliers all one.
    pub fn identity() -> Self {
        NoiseDraw {
            eps: [0.0; N_LATENT],
            multipliers: [1.0; N_LATENT],
        }
    }

    pub fn from_multipliers(multipliers: [f64; N_LATENT]) -> Self {
        NoiseDraw {
            eps: [0.0; N_LATENT],
            multipliers,
        }
    }
}

/// Standard normal draws via Box-Muller on a ChaCha20 stream (fixed
/// algorithm, so draws are bit-reproducible across platforms).
fn standard_normals(rng: &mut ChaCha20Rng, out: &mut [f64]) {
    let mut i = 0;
    while i < out.len() {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        out[i] = r * t.cos();
        if i + 1 < out.len() {
            out[i + 1] = r * t.sin();
        }
        i += 2;
    }
}

/// Draws `m` reparameterized noise vectors, deterministic under `seed`.
pub fn sample_noise(alpha: &[f64; N_LATENT], m: usize, seed: u64) -> Vec<NoiseDraw> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(m);
    for _ in 0..m {
        let mut eps = [0.0; N_LATENT];
        standard_normals(&mut rng, &mut eps);
        draws.push(NoiseDraw::from_eps(alpha, eps));
    }
    draws
}

/// Small random weights (scale 0.1) and α = 1e-6, so noise has no noticeable
/// effect at initialization.
pub fn init_params(seed: u64) -> ToyModelParams {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut buf = [0.0f64; N_PARAMS];
    standard_normals(&mut rng, &mut buf);
    let mut k = 0;
    let mut take = |n: usize, scale: f64, buf: &[f64]| -> Vec<f64> {
        let v: Vec<f64> = buf[k..k + n].iter().map(|x| x * scale).collect();
        k += n;
        v
    };
    let enc_w: [f64; 30] = take(30, 0.1, &buf).try_into().unwrap();
    let enc_b: [f64; 30] = take(30, 0.1, &buf).try_into().unwrap();
    let dec_w: [f64; 30] = take(30, 0.1, &buf).try_into().unwrap();
    let dec_b: [f64; 30] = take(30, 0.1, &buf).try_into().unwrap();
    let cls_w: [f64; 2] = take(2, 0.1, &buf).try_into().unwrap();
    let cls_b: [f64; 2] = take(2, 0.1, &buf).try_into().unwrap();
    let marginal_logits: [f64; 30] = take(30, 0.1, &buf).try_into().unwrap();
    ToyModelParams {
        enc_w,
        enc_b,
        dec_w,
        dec_b,
        cls_w,
        cls_b,
        marginal_logits,
        alpha: [1e-6; N_LATENT],
    }
}

/// Stable softmax over `scores`, writing probabilities into `out`.
pub(crate) fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &s) in out.iter_mut().zip(scores) {
        let e = (s - max).exp();
        *o = e;
        total += e;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

impl ToyModelParams {
    pub fn validate(&self) -> Result<()> {
        for (i, &v) in self.pack().iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteParameter(i));
            }
        }
        for (i, &a) in self.alpha.iter().enumerate() {
            if !(a > 0.0) {
                return Err(Error::InvalidAlpha { index: i, value: a });
            }
        }
        Ok(())
    }

    /// q(z|x): rows are conditioning bins, each row a distribution over the
    /// 30 latent states. Scores −(w̃_i·v_x − b_i)² with w̃ = enc_w ⊙ noise.
    pub fn encoder_dist(&self, noise: Option<&NoiseDraw>) -> Result<ConditionalTable> {
        self.validate()?;
        let identity = NoiseDraw::identity();
        let noise = noise.unwrap_or(&identity);
        let mut probs = vec![0.0f64; N_BINS * N_LATENT];
        let mut scores = [0.0f64; N_LATENT];
        for j in 0..N_BINS {
            let v = bin_value(j);
            for i in 0..N_LATENT {
                let t = self.enc_w[i] * noise.multipliers[i] * v - self.enc_b[i];
                scores[i] = -(t * t);
            }
            softmax_into(&scores, &mut probs[j * N_LATENT..(j + 1) * N_LATENT]);
        }
        ConditionalTable::new(N_BINS, N_LATENT, probs)
    }

    /// q(x|z): rows are latent states, each row a distribution over bins.
    pub fn decoder_dist(&self) -> Result<ConditionalTable> {
        self.validate()?;
        let mut probs = vec![0.0f64; N_LATENT * N_BINS];
        let mut scores = [0.0f64; N_BINS];
        for i in 0..N_LATENT {
            for j in 0..N_BINS {
                let t = self.dec_w[i] * bin_value(j) - self.dec_b[i];
                scores[j] = -(t * t);
            }
            softmax_into(&scores, &mut probs[i * N_BINS..(i + 1) * N_BINS]);
        }
        ConditionalTable::new(N_LATENT, N_BINS, probs)
    }

    /// q(y|z): rows are latent states, each row a distribution over the two
    /// labels; one weight and bias per class.
    pub fn classifier_dist(&self) -> Result<ConditionalTable> {
        self.validate()?;
        let mut probs = vec![0.0f64; N_LATENT * 2];
        let mut scores = [0.0f64; 2];
        for i in 0..N_LATENT {
            let zeta = latent_value(i);
            for y in 0..2 {
                let t = self.cls_w[y] * zeta - self.cls_b[y];
                scores[y] = -(t * t);
            }
            softmax_into(&scores, &mut probs[i * 2..(i + 1) * 2]);
        }
        ConditionalTable::new(N_LATENT, 2, probs)
    }

    /// q(z) = softmax(marginal_logits).
    pub fn marginal_dist(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let mut out = vec![0.0f64; N_LATENT];
        softmax_into(&self.marginal_logits, &mut out);
        Ok(out)
    }

    /// Flat layout: enc_w, enc_b, dec_w, dec_b, cls_w, cls_b, logits, alpha.
    pub fn pack(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(N_PARAMS);
        v.extend_from_slice(&self.enc_w);
        v.extend_from_slice(&self.enc_b);
        v.extend_from_slice(&self.dec_w);
        v.extend_from_slice(&self.dec_b);
        v.extend_from_slice(&self.cls_w);
        v.extend_from_slice(&self.cls_b);
        v.extend_from_slice(&self.marginal_logits);
        v.extend_from_slice(&self.alpha);
        v
    }

    pub fn unpack(flat: &[f64]) -> Result<Self> {
        if flat.len() != N_PARAMS {
            return Err(Error::ShapeMismatch(format!(
                "expected {N_PARAMS} parameters, got {}",
                flat.len()
            )));
        }
        let arr30 = |s: &[f64]| -> [f64; 30] { s.try_into().unwrap() };
        Ok(ToyModelParams {
            enc_w: arr30(&flat[0..30]),
            enc_b: arr30(&flat[30..60]),
            dec_w: arr30(&flat[60..90]),
            dec_b: arr30(&flat[90..120]),
            cls_w: [flat[120], flat[121]],
            cls_b: [flat[122], flat[123]],
            marginal_logits: arr30(&flat[124..154]),
            alpha: arr30(&flat[154..184]),
        })
    }
}
