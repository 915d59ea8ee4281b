//! Exact per-example evaluation of the five functionals.
//!
//! Expectations over the latent are exact 30-term sums; only the encoder
//! weight noise θ̃ is Monte Carlo, averaged over a caller-supplied set of
//! draws (an empty slice means the deterministic identity draw). All values
//! are per-example means, so finite and infinite datasets compare directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{Dataset, N_BINS};
use crate::model::{sample_noise, NoiseDraw, ToyModelParams, N_LATENT};

/// Lagrange multipliers (ρ, δ, γ, σ) for R, D, C, S.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSetting {
    pub rho: f64,
    pub delta: f64,
    pub gamma: f64,
    pub sigma: f64,
}

impl MultiplierSetting {
    pub fn new(rho: f64, delta: f64, gamma: f64, sigma: f64) -> Result<Self> {
        let s = MultiplierSetting {
            rho,
            delta,
            gamma,
            sigma,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.rho, self.delta, self.gamma, self.sigma];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "multipliers must be finite and nonnegative, got {vals:?}"
            )));
        }
        if vals.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidInput(
                "at least one multiplier must be positive".into(),
            ));
        }
        Ok(())
    }

    /// J = ρR + δD + γC + σS. Keep this expression shape: points store the
    /// value bit-for-bit.
    pub fn objective(&self, r: f64, d: f64, c: f64, s: f64) -> f64 {
        self.rho * r + self.delta * d + self.gamma * c + self.sigma * s
    }
}

/// One evaluated state of the model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalPoint {
    pub r: f64,
    pub c: f64,
    pub d: f64,
    pub s: f64,
    pub v: f64,
    pub j: f64,
    pub setting: MultiplierSetting,
    pub noise_samples: usize,
    pub seed: u64,
}

impl FunctionalPoint {
    pub const CSV_HEADER: &'static str = "rho,delta,gamma,sigma,R,C,D,S,V,J,m,seed";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.setting.rho,
            self.setting.delta,
            self.setting.gamma,
            self.setting.sigma,
            self.r,
            self.c,
            self.d,
            self.s,
            self.v,
            self.j,
            self.noise_samples,
            self.seed
        )
    }

    pub fn recompute_j(&self) -> f64 {
        self.setting.objective(self.r, self.d, self.c, self.s)
    }
}

fn check_data(data: &Dataset) -> Result<()> {
    if data.weights.len() != N_BINS * 2 {
        return Err(Error::ShapeMismatch(format!(
            "dataset has {} weight cells, expected {}",
            data.weights.len(),
            N_BINS * 2
        )));
    }
    if data.weights.iter().all(|&w| w == 0.0) {
        return Err(Error::EmptyData);
    }
    Ok(())
}

/// Runs `f` once per draw (or once with the identity draw) and averages.
fn average_over_draws<F: FnMut(&NoiseDraw) -> Result<f64>>(
    draws: &[NoiseDraw],
    mut f: F,
) -> Result<f64> {
    if draws.is_empty() {
        return f(&NoiseDraw::identity());
    }
    let mut total = 0.0;
    for draw in draws {
        total += f(draw)?;
    }
    Ok(total / draws.len() as f64)
}

/// R = Σ_x p(x) E_θ̃ KL(q(z|x,θ̃) ‖ q(z)), per example.
pub fn rate(params: &ToyModelParams, data: &Dataset, draws: &[NoiseDraw]) -> Result<f64> {
    check_data(data)?;
    let marginal = params.marginal_dist()?;
    let ln_marginal: Vec<f64> = marginal.iter().map(|&p| p.ln()).collect();
    let wx = data.x_weights();
    average_over_draws(draws, |draw| {
        let enc = params.encoder_dist(Some(draw))?;
        let mut total = 0.0;
        for x in 0..N_BINS {
            if wx[x] == 0.0 {
                continue;
            }
            let row = enc.row(x);
            let mut kl = 0.0;
            for i in 0..N_LATENT {
                if row[i] > 0.0 {
                    kl += row[i] * (row[i].ln() - ln_marginal[i]);
                }
            }
            total += wx[x] * kl;
        }
        Ok(total)
    })
}

/// D = −Σ_x p(x) E_θ̃ Σ_z q(z|x,θ̃) log q(x|z), per example.
pub fn distortion(params: &ToyModelParams, data: &Dataset, draws: &[NoiseDraw]) -> Result<f64> {
    check_data(data)?;
    let dec = params.decoder_dist()?;
    let wx = data.x_weights();
    average_over_draws(draws, |draw| {
        let enc = params.encoder_dist(Some(draw))?;
        let mut total = 0.0;
        for x in 0..N_BINS {
            if wx[x] == 0.0 {
                continue;
            }
            let row = enc.row(x);
            let mut acc = 0.0;
            for i in 0..N_LATENT {
                if row[i] > 0.0 {
                    acc -= row[i] * dec.get(i, x).ln();
                }
            }
            total += wx[x] * acc;
        }
        Ok(total)
    })
}

/// C = −Σ_{x,y} p(x,y) E_θ̃ Σ_z q(z|x,θ̃) log q(y|z), per example.
pub fn classification_error(
    params: &ToyModelParams,
    data: &Dataset,
    draws: &[NoiseDraw],
) -> Result<f64> {
    check_data(data)?;
    let cls = params.classifier_dist()?;
    average_over_draws(draws, |draw| {
        let enc = params.encoder_dist(Some(draw))?;
        let mut total = 0.0;
        for x in 0..N_BINS {
            for y in 0..2 {
                let w = data.cell_weight(x, y);
                if w == 0.0 {
                    continue;
                }
                let row = enc.row(x);
                let mut acc = 0.0;
                for i in 0..N_LATENT {
                    if row[i] > 0.0 {
                        acc -= row[i] * cls.get(i, y).ln();
                    }
                }
                total += w * acc;
            }
        }
        Ok(total)
    })
}

/// S = Σ_i max(0, −½ log α_i): per-weight relative entropy of the
/// multiplicative log-normal noise against its unit-variance anchor, clamped
/// at zero componentwise.
pub fn entropy_s(params: &ToyModelParams) -> Result<f64> {
    let mut s = 0.0;
    for (i, &a) in params.alpha.iter().enumerate() {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidAlpha { index: i, value: a });
        }
        s += (-0.5 * a.ln()).max(0.0);
    }
    Ok(s)
}

/// V = Σ_x p(x) mean_θ̃ KL(q(z|x,θ̃) ‖ q̄(z|x)) with q̄ the draw-averaged
/// encoder, per example. Needs at least two draws to be meaningful.
pub fn volume(params: &ToyModelParams, data: &Dataset, draws: &[NoiseDraw]) -> Result<f64> {
    check_data(data)?;
    if draws.len() < 2 {
        return Err(Error::TooFewNoiseDraws(draws.len()));
    }
    let tables: Vec<_> = draws
        .iter()
        .map(|d| params.encoder_dist(Some(d)))
        .collect::<Result<_>>()?;
    let m = draws.len() as f64;
    let wx = data.x_weights();
    let mut total = 0.0;
    for x in 0..N_BINS {
        if wx[x] == 0.0 {
            continue;
        }
        let mut mixture = [0.0f64; N_LATENT];
        for t in &tables {
            for (acc, &p) in mixture.iter_mut().zip(t.row(x)) {
                *acc += p / m;
            }
        }
        let mut mean_kl = 0.0;
        for t in &tables {
            let row = t.row(x);
            let mut kl = 0.0;
            for i in 0..N_LATENT {
                if row[i] > 0.0 {
                    kl += row[i] * (row[i] / mixture[i]).ln();
                }
            }
            mean_kl += kl / m;
        }
        total += wx[x] * mean_kl;
    }
    Ok(total)
}

/// Evaluates all five functionals with shared noise draws (seeded) and
/// assembles J = ρR + δD + γC + σS. V is 0 when m < 2 (degenerate by
/// construction).
pub fn compute_point(
    params: &ToyModelParams,
    data: &Dataset,
    setting: &MultiplierSetting,
    m: usize,
    seed: u64,
) -> Result<FunctionalPoint> {
    setting.validate()?;
    params.validate()?;
    check_data(data)?;
    let draws = sample_noise(&params.alpha, m, seed);
    let r = rate(params, data, &draws)?;
    let d = distortion(params, data, &draws)?;
    let c = classification_error(params, data, &draws)?;
    let s = entropy_s(params)?;
    let v = if draws.len() >= 2 {
        volume(params, data, &draws)?
    } else {
        0.0
    };
    Ok(FunctionalPoint {
        r,
        c,
        d,
        s,
        v,
        j: setting.objective(r, d, c, s),
        setting: *setting,
        noise_samples: m,
        seed,
    })
}
