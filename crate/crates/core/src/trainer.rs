//! Differentiable objective J = ρR + δD + γC + σS, hand-derived gradients,
//! optimizers, and the train/eval protocol.
//!
//! Noise draws are fixed per step index (seed ⊕ step) so paired comparisons
//! across settings share randomness. α is optimised in log-space for
//! positivity; `gradient` reports the α-space gradient so finite differences
//! can check it directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{compute_point, entropy_s, FunctionalPoint, MultiplierSetting};
use crate::mixture::{infinite_dataset, sample_dataset, Dataset, MixtureSpec, N_BINS};
use crate::model::{
    bin_value, init_params, latent_value, sample_noise, NoiseDraw, ToyModelParams, N_LATENT,
    N_PARAMS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    /// Plain gradient descent; kept for the relaxation diagnostics.
    PlainGradient,
    /// Adam with the usual (0.9, 0.999, 1e-8) constants.
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSpec {
    Finite { n: usize, seed: u64 },
    Infinite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub setting: MultiplierSetting,
    pub steps: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub data: DataSpec,
    pub m_noise: usize,
    pub seed: u64,
    pub record_every: usize,
}

impl TrainConfig {
    /// Paper protocol defaults: 10,000 Adam steps at 1e-3 on infinite data
    /// with 8 noise draws.
    pub fn new(setting: MultiplierSetting) -> Self {
        TrainConfig {
            setting,
            steps: 10_000,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            data: DataSpec::Infinite,
            m_noise: 8,
            seed: 0,
            record_every: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.setting.validate()?;
        if self.steps == 0 {
            return Err(Error::InvalidInput("steps must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidInput("learning_rate must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub train: FunctionalPoint,
    pub eval: FunctionalPoint,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    /// Monte-Carlo J at every step (the optimized quantity).
    pub objective_history: Vec<f64>,
    /// Identity-noise J at every step. The Monte-Carlo history carries the
    /// per-step draw jitter by design, so convergence is judged on this
    /// deterministic path instead.
    pub deterministic_history: Vec<f64>,
}

impl Trajectory {
    pub const CSV_HEADER: &'static str =
        "step,train_R,train_C,train_D,train_S,train_V,train_J,eval_R,eval_C,eval_D,eval_S,eval_V,eval_J";

    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        for rec in &self.records {
            let t = &rec.train;
            let e = &rec.eval;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                rec.step, t.r, t.c, t.d, t.s, t.v, t.j, e.r, e.c, e.d, e.s, e.v, e.j
            ));
        }
        out
    }
}

pub struct TrainOutcome {
    pub params: ToyModelParams,
    pub trajectory: Trajectory,
}

/// Trailing-window convergence test: std of the last `window` objective
/// values below `rtol` of their mean magnitude.
pub fn converged(history: &[f64], window: usize, rtol: f64) -> bool {
    if history.is_empty() {
        return false;
    }
    let w = window.min(history.len());
    let tail = &history[history.len() - w..];
    let mean = tail.iter().sum::<f64>() / w as f64;
    let var = tail.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / w as f64;
    var.sqrt() <= rtol * mean.abs().max(1e-8)
}

const DIVERGENCE_LIMIT: f64 = 1e6;

/// Fused objective and α-space gradient for a fixed set of noise draws.
/// Expectations over z are exact 30-term sums; the gradient is the exact
/// derivative of the Monte-Carlo objective via reparameterization through α.
pub fn objective_and_gradient_with_draws(
    params: &ToyModelParams,
    data: &Dataset,
    setting: &MultiplierSetting,
    draws: &[NoiseDraw],
) -> Result<(f64, Vec<f64>)> {
    setting.validate()?;
    params.validate()?;
    if data.weights.iter().all(|&w| w == 0.0) {
        return Err(Error::EmptyData);
    }
    let identity = [NoiseDraw::identity()];
    // The identity fallback is a deterministic evaluation: its multipliers
    // are the constant 1, not a function of alpha, so the noise path is off.
    let noise_path = !draws.is_empty();
    let draws: &[NoiseDraw] = if draws.is_empty() { &identity } else { draws };
    let n_draws = draws.len() as f64;
    let (rho, delta, gamma, sigma) = (setting.rho, setting.delta, setting.gamma, setting.sigma);

    // fixed tables
    let marginal = params.marginal_dist()?;
    let ln_marginal: Vec<f64> = marginal.iter().map(|p| p.ln()).collect();
    let dec = params.decoder_dist()?;
    let ln_dec: Vec<f64> = dec.probs().iter().map(|p| p.ln()).collect();
    let cls = params.classifier_dist()?;
    let ln_cls: Vec<f64> = cls.probs().iter().map(|p| p.ln()).collect();

    let wx = data.x_weights();

    let mut grad = vec![0.0f64; N_PARAMS];
    // draw-averaged encoder mass: a[i][x] = mean_s wx[x] q_s(i|x)
    let mut mass = vec![0.0f64; N_LATENT * N_BINS];
    // label-split mass: b[y][i] = mean_s sum_x w(x,y) q_s(i|x)
    let mut label_mass = [[0.0f64; N_LATENT]; 2];
    let (mut r_acc, mut d_acc, mut c_acc) = (0.0f64, 0.0f64, 0.0f64);

    let mut scores = [0.0f64; N_LATENT];
    let mut lnq = [0.0f64; N_LATENT];
    let mut q = [0.0f64; N_LATENT];
    let mut t = [0.0f64; N_LATENT];
    let mut phi = [0.0f64; N_LATENT];

    for draw in draws {
        let mut g_mult = [0.0f64; N_LATENT];
        for x in 0..N_BINS {
            if wx[x] == 0.0 {
                continue;
            }
            let v = bin_value(x);
            let mut max = f64::NEG_INFINITY;
            for i in 0..N_LATENT {
                let wt = params.enc_w[i] * draw.multipliers[i];
                t[i] = wt * v - params.enc_b[i];
                scores[i] = -(t[i] * t[i]);
                if scores[i] > max {
                    max = scores[i];
                }
            }
            let mut total = 0.0;
            for i in 0..N_LATENT {
                q[i] = (scores[i] - max).exp();
                total += q[i];
            }
            let ln_total = total.ln();
            for i in 0..N_LATENT {
                q[i] /= total;
                lnq[i] = scores[i] - max - ln_total;
            }

            // per-x functional contributions and the softmax cotangent phi
            let w0 = data.cell_weight(x, 0);
            let w1 = data.cell_weight(x, 1);
            let mut r_x = 0.0;
            let mut d_x = 0.0;
            let mut c_x = 0.0;
            let mut phi_mean = 0.0;
            for i in 0..N_LATENT {
                let ln_ratio = lnq[i] - ln_marginal[i];
                let neg_ln_dec = -ln_dec[i * N_BINS + x];
                let neg_ln_c0 = -ln_cls[i * 2];
                let neg_ln_c1 = -ln_cls[i * 2 + 1];
                r_x += q[i] * ln_ratio;
                d_x += q[i] * neg_ln_dec;
                c_x += q[i] * (w0 * neg_ln_c0 + w1 * neg_ln_c1);
                phi[i] = rho * ln_ratio
                    + delta * neg_ln_dec
                    + gamma * (w0 * neg_ln_c0 + w1 * neg_ln_c1) / wx[x];
                phi_mean += q[i] * phi[i];
                mass[i * N_BINS + x] += wx[x] * q[i] / n_draws;
                label_mass[0][i] += w0 * q[i] / n_draws;
                label_mass[1][i] += w1 * q[i] / n_draws;
            }
            r_acc += wx[x] * r_x / n_draws;
            d_acc += wx[x] * d_x / n_draws;
            c_acc += c_x / n_draws;

            // encoder score gradient: wx · q_i (phi_i − ⟨phi⟩)
            for i in 0..N_LATENT {
                let dscore = wx[x] * q[i] * (phi[i] - phi_mean);
                let dt = -2.0 * t[i] * dscore;
                grad[i] += dt * v * draw.multipliers[i] / n_draws; // enc_w
                grad[N_LATENT + i] -= dt / n_draws; // enc_b
                g_mult[i] += dt * v * params.enc_w[i];
            }
        }
        // reparameterized noise path into alpha
        if noise_path {
            for i in 0..N_LATENT {
                let a = params.alpha[i];
                let dm_da = draw.multipliers[i] * (draw.eps[i] / (2.0 * a.sqrt()) - 0.5);
                grad[154 + i] += g_mult[i] * dm_da / n_draws;
            }
        }
    }

    // decoder gradient through its softmax rows
    for i in 0..N_LATENT {
        let row_mass: f64 = (0..N_BINS).map(|x| mass[i * N_BINS + x]).sum();
        for x in 0..N_BINS {
            let d_dscore = delta * (-mass[i * N_BINS + x] + row_mass * dec.get(i, x));
            let u = params.dec_w[i] * bin_value(x) - params.dec_b[i];
            grad[60 + i] += d_dscore * (-2.0 * u) * bin_value(x); // dec_w
            grad[90 + i] += d_dscore * (2.0 * u); // dec_b
        }
    }

    // classifier gradient
    for i in 0..N_LATENT {
        let total_i = label_mass[0][i] + label_mass[1][i];
        let zeta = latent_value(i);
        for y in 0..2 {
            let d_cscore = gamma * (-label_mass[y][i] + total_i * cls.get(i, y));
            let u = params.cls_w[y] * zeta - params.cls_b[y];
            grad[120 + y] += d_cscore * (-2.0 * u) * zeta; // cls_w
            grad[122 + y] += d_cscore * (2.0 * u); // cls_b
        }
    }

    // marginal gradient from the rate term: rho (pi_k − mean encoder mass)
    let total_mass: f64 = mass.iter().sum();
    for k in 0..N_LATENT {
        let enc_mass_k: f64 = (0..N_BINS).map(|x| mass[k * N_BINS + x]).sum();
        grad[124 + k] = rho * (marginal[k] * total_mass - enc_mass_k);
    }

    // entropy term: per-component clamp at alpha = 1
    let s = entropy_s(params)?;
    for i in 0..N_LATENT {
        if params.alpha[i] < 1.0 {
            grad[154 + i] += sigma * (-0.5 / params.alpha[i]);
        }
    }

    let j = rho * r_acc + delta * d_acc + gamma * c_acc + sigma * s;
    for (i, g) in grad.iter().enumerate() {
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient(i));
        }
    }
    Ok((j, grad))
}

/// J for `m` draws seeded by `seed` (common random numbers: the same seed
/// always regenerates the same ε stream).
pub fn objective(
    params: &ToyModelParams,
    data: &Dataset,
    setting: &MultiplierSetting,
    m: usize,
    seed: u64,
) -> Result<f64> {
    let draws = sample_noise(&params.alpha, m, seed);
    objective_and_gradient_with_draws(params, data, setting, &draws).map(|(j, _)| j)
}

/// Exact α-space gradient of the Monte-Carlo objective with fixed draws.
pub fn gradient(
    params: &ToyModelParams,
    data: &Dataset,
    setting: &MultiplierSetting,
    m: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let draws = sample_noise(&params.alpha, m, seed);
    objective_and_gradient_with_draws(params, data, setting, &draws).map(|(_, g)| g)
}

fn noise_seed(seed: u64, step: usize) -> u64 {
    seed ^ step as u64
}

/// Packs params with α in log-space for the optimizer.
fn to_opt_space(params: &ToyModelParams) -> Vec<f64> {
    let mut x = params.pack();
    for i in 154..184 {
        x[i] = x[i].ln();
    }
    x
}

fn from_opt_space(x: &[f64]) -> Result<ToyModelParams> {
    let mut flat = x.to_vec();
    for v in flat[154..184].iter_mut() {
        *v = v.exp();
    }
    ToyModelParams::unpack(&flat)
}

/// Runs the optimizer for `config.steps`, recording train and infinite-eval
/// points every `record_every` steps plus the endpoint.
pub fn train(spec: &MixtureSpec, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let train_data = match config.data {
        DataSpec::Finite { n, seed } => sample_dataset(spec, n, seed)?,
        DataSpec::Infinite => infinite_dataset(spec),
    };
    let eval_data = infinite_dataset(spec);

    let mut params = init_params(config.seed);
    let mut x = to_opt_space(&params);
    let mut adam_m = vec![0.0f64; N_PARAMS];
    let mut adam_v = vec![0.0f64; N_PARAMS];
    let (beta1, beta2, eps_adam): (f64, f64, f64) = (0.9, 0.999, 1e-8);

    let mut records = Vec::new();
    let mut history = Vec::with_capacity(config.steps);
    let mut det_history = Vec::with_capacity(config.steps);

    let mut last_good = params.clone();
    for step in 0..config.steps {
        let seed_t = noise_seed(config.seed, step);
        let draws = sample_noise(&params.alpha, config.m_noise, seed_t);
        let (j, g_alpha) = match objective_and_gradient_with_draws(
            &params,
            &train_data,
            &config.setting,
            &draws,
        ) {
            Ok(out) => out,
            // updates blew the parameters up before J itself tripped the guard
            Err(
                Error::NonFiniteParameter(_)
                | Error::InvalidAlpha { .. }
                | Error::NonFiniteGradient(_),
            ) => {
                return Err(Error::Diverged {
                    step,
                    value: f64::NAN,
                    last: Box::new(last_good),
                })
            }
            Err(e) => return Err(e),
        };
        if !j.is_finite() || j.abs() > DIVERGENCE_LIMIT {
            return Err(Error::Diverged {
                step,
                value: j,
                last: Box::new(last_good),
            });
        }
        last_good = params.clone();
        if step % config.record_every == 0 {
            records.push(TrajectoryRecord {
                step,
                train: compute_point(&params, &train_data, &config.setting, config.m_noise, seed_t)?,
                eval: compute_point(&params, &eval_data, &config.setting, config.m_noise, seed_t)?,
            });
        }
        history.push(j);
        let (j_det, _) =
            objective_and_gradient_with_draws(&params, &train_data, &config.setting, &[])?;
        det_history.push(j_det);

        // chain rule into log-alpha space
        let mut g = g_alpha;
        for i in 154..184 {
            g[i] *= params.alpha[i - 154];
        }
        match config.optimizer {
            OptimizerKind::PlainGradient => {
                for i in 0..N_PARAMS {
                    x[i] -= config.learning_rate * g[i];
                }
            }
            OptimizerKind::Adam => {
                let t = (step + 1) as f64;
                let bc1 = 1.0 - beta1.powf(t);
                let bc2 = 1.0 - beta2.powf(t);
                for i in 0..N_PARAMS {
                    adam_m[i] = beta1 * adam_m[i] + (1.0 - beta1) * g[i];
                    adam_v[i] = beta2 * adam_v[i] + (1.0 - beta2) * g[i] * g[i];
                    let m_hat = adam_m[i] / bc1;
                    let v_hat = adam_v[i] / bc2;
                    x[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + eps_adam);
                }
            }
        }
        params = from_opt_space(&x)?;
    }

    let seed_end = noise_seed(config.seed, config.steps);
    records.push(TrajectoryRecord {
        step: config.steps,
        train: compute_point(&params, &train_data, &config.setting, config.m_noise, seed_end)?,
        eval: compute_point(&params, &eval_data, &config.setting, config.m_noise, seed_end)?,
    });

    Ok(TrainOutcome {
        params,
        trajectory: Trajectory {
            records,
            objective_history: history,
            deterministic_history: det_history,
        },
    })
}

/// Train-vs-eval comparison for the overfitting protocol; per-example C and
/// D on the finite training set against the exact infinite expectation.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub train: FunctionalPoint,
    pub eval: FunctionalPoint,
    pub c_gap: f64,
    pub d_gap: f64,
}

pub fn evaluate_gap(
    params: &ToyModelParams,
    finite_data: &Dataset,
    spec: &MixtureSpec,
    setting: &MultiplierSetting,
    m: usize,
    seed: u64,
) -> Result<GapReport> {
    let eval_data = infinite_dataset(spec);
    let train = compute_point(params, finite_data, setting, m, seed)?;
    let eval = compute_point(params, &eval_data, setting, m, seed)?;
    Ok(GapReport {
        c_gap: eval.c - train.c,
        d_gap: eval.d - train.d,
        train,
        eval,
    })
}
