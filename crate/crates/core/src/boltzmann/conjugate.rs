//! Tempered conjugate Bayes: the likelihood raised to a power β keeps both
//! supported families in closed form, tracing the (U, S) frontier exactly.
//!
//! Generative mode models the input stream x; discriminative mode models the
//! target stream y given x (the conditional-likelihood variant).

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ConjugateFamily {
    /// Beta(a, b) prior on a Bernoulli success probability.
    BetaBernoulli { a: f64, b: f64 },
    /// Normal(mu0, tau0_sq) prior on the mean of a Normal(θ, obs_var)
    /// likelihood with known observation variance.
    GaussianKnownVariance {
        mu0: f64,
        tau0_sq: f64,
        obs_var: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceMode {
    Generative,
    Discriminative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PosteriorParams {
    Beta { a: f64, b: f64 },
    Gaussian { mean: f64, var: f64 },
}

/// Paired observations; generative mode reads `x`, discriminative mode `y`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairedData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PairedData {
    pub fn stream(&self, mode: InferenceMode) -> &[f64] {
        match mode {
            InferenceMode::Generative => &self.x,
            InferenceMode::Discriminative => &self.y,
        }
    }
}

impl ConjugateFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ConjugateFamily::BetaBernoulli { a, b } => {
                if !(a > 0.0 && b > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "Beta prior needs positive hyperparameters, got ({a}, {b})"
                    )));
                }
            }
            ConjugateFamily::GaussianKnownVariance {
                tau0_sq, obs_var, ..
            } => {
                if !(tau0_sq > 0.0 && obs_var > 0.0) {
                    return Err(Error::InvalidInput(
                        "Gaussian prior and observation variances must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// In-family posterior with the likelihood tempered to the power β.
/// β = 1 is the ordinary conjugate update; β = 0 returns the prior.
pub fn tempered_posterior(
    family: &ConjugateFamily,
    data: &[f64],
    beta: f64,
) -> Result<PosteriorParams> {
    family.validate()?;
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!("beta = {beta} must be >= 0")));
    }
    match *family {
        ConjugateFamily::BetaBernoulli { a, b } => {
            let mut ones = 0.0;
            for &v in data {
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "beta-bernoulli data must be 0/1, got {v}"
                    )));
                }
                ones += v;
            }
            let zeros = data.len() as f64 - ones;
            Ok(PosteriorParams::Beta {
                a: a + beta * ones,
                b: b + beta * zeros,
            })
        }
        ConjugateFamily::GaussianKnownVariance {
            mu0,
            tau0_sq,
            obs_var,
        } => {
            let n = data.len() as f64;
            let sum: f64 = data.iter().sum();
            let precision = 1.0 / tau0_sq + beta * n / obs_var;
            let mean = (mu0 / tau0_sq + beta * sum / obs_var) / precision;
            Ok(PosteriorParams::Gaussian {
                mean,
                var: 1.0 / precision,
            })
        }
    }
}

fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// S = KL(posterior ‖ prior), closed form in-family.
pub fn posterior_kl_to_prior(family: &ConjugateFamily, post: &PosteriorParams) -> Result<f64> {
    match (*family, *post) {
        (ConjugateFamily::BetaBernoulli { a: a0, b: b0 }, PosteriorParams::Beta { a, b }) => {
            Ok(ln_beta_fn(a0, b0) - ln_beta_fn(a, b)
                + (a - a0) * digamma(a)
                + (b - b0) * digamma(b)
                + (a0 - a + b0 - b) * digamma(a + b))
        }
        (
            ConjugateFamily::GaussianKnownVariance { mu0, tau0_sq, .. },
            PosteriorParams::Gaussian { mean, var },
        ) => Ok(0.5
            * (var / tau0_sq + (mean - mu0).powi(2) / tau0_sq - 1.0 + (tau0_sq / var).ln())),
        _ => Err(Error::ShapeMismatch(
            "posterior family does not match the prior family".into(),
        )),
    }
}

/// U = −⟨Σ_i log q(data_i | θ)⟩ under the posterior, closed form.
pub fn expected_energy(
    family: &ConjugateFamily,
    post: &PosteriorParams,
    data: &[f64],
) -> Result<f64> {
    match (*family, *post) {
        (ConjugateFamily::BetaBernoulli { .. }, PosteriorParams::Beta { a, b }) => {
            let ones: f64 = data.iter().sum();
            let zeros = data.len() as f64 - ones;
            // ⟨ln θ⟩ = ψ(a) − ψ(a+b), ⟨ln(1−θ)⟩ = ψ(b) − ψ(a+b)
            Ok(-(ones * (digamma(a) - digamma(a + b))
                + zeros * (digamma(b) - digamma(a + b))))
        }
        (
            ConjugateFamily::GaussianKnownVariance { obs_var, .. },
            PosteriorParams::Gaussian { mean, var },
        ) => {
            let n = data.len() as f64;
            let mut quad = 0.0;
            for &v in data {
                quad += (v - mean).powi(2) + var;
            }
            Ok(0.5 * n * (2.0 * std::f64::consts::PI * obs_var).ln() + quad / (2.0 * obs_var))
        }
        _ => Err(Error::ShapeMismatch(
            "posterior family does not match the prior family".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BayesPoint {
    pub beta: f64,
    /// S = KL(posterior_β ‖ prior).
    pub s: f64,
    /// U = −⟨Σ log q(data|θ)⟩ under posterior_β.
    pub u: f64,
}

/// Traces the (U, S) frontier over a β grid. As β grows the posterior
/// concentrates: S is nondecreasing and U nonincreasing.
pub fn bayes_frontier(
    family: &ConjugateFamily,
    data: &PairedData,
    betas: &[f64],
    mode: InferenceMode,
) -> Result<Vec<BayesPoint>> {
    let stream = data.stream(mode);
    if stream.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut out = Vec::with_capacity(betas.len());
    for &beta in betas {
        let post = tempered_posterior(family, stream, beta)?;
        out.push(BayesPoint {
            beta,
            s: posterior_kl_to_prior(family, &post)?,
            u: expected_energy(family, &post, stream)?,
        });
    }
    Ok(out)
}
