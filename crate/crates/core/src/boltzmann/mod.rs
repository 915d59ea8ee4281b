//! Exact equilibrium machinery on enumerable parameter grids: Boltzmann
//! posteriors, partition functions, the min-J identity, second-law Markov
//! relaxation with exact kernel-on-distribution iteration, and the
//! zeroth-law coupling check.

pub mod conjugate;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{classification_error, distortion, rate};
use crate::info::kahan_sum;
use crate::mixture::Dataset;
use crate::model::ToyModelParams;

/// One free parameter axis of an enumerable grid.
#[derive(Debug, Clone, Serialize)]
pub struct GridAxis {
    /// Index into the flat 184-parameter layout.
    pub param_index: usize,
    pub values: Vec<f64>,
}

/// Finite parameter grid with a prior and a per-state energy ρR + δD + γC.
#[derive(Debug, Clone, Serialize)]
pub struct ParamGrid {
    /// States per axis, row-major (last axis fastest).
    pub shape: Vec<usize>,
    pub prior: Vec<f64>,
    pub energy: Vec<f64>,
}

impl ParamGrid {
    pub fn from_energies(
        shape: Vec<usize>,
        prior: Option<Vec<f64>>,
        energy: Vec<f64>,
    ) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n == 0 || energy.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "energy has {} entries for shape {:?}",
                energy.len(),
                shape
            )));
        }
        let prior = match prior {
            Some(p) => {
                if p.len() != n {
                    return Err(Error::ShapeMismatch("prior length mismatch".into()));
                }
                if p.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(Error::InvalidDistribution(
                        "prior must be strictly positive".into(),
                    ));
                }
                let total = kahan_sum(p.iter().copied());
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidDistribution(format!(
                        "prior sums to {total}"
                    )));
                }
                p
            }
            None => vec![1.0 / n as f64; n],
        };
        if energy.iter().any(|e| e.is_nan()) {
            return Err(Error::InvalidInput("energy contains NaN".into()));
        }
        if energy.iter().all(|e| e.is_infinite()) {
            return Err(Error::AllEnergiesInfinite);
        }
        Ok(ParamGrid {
            shape,
            prior,
            energy,
        })
    }

    /// Grid over a low-dimensional slice of the toy model: the listed axes
    /// vary, every other parameter stays frozen at `base`. The energy is the
    /// deterministic (identity-noise) ρR + δD + γC at each state.
    pub fn from_model_slice(
        base: &ToyModelParams,
        data: &Dataset,
        weights: (f64, f64, f64),
        axes: &[GridAxis],
    ) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidInput("need at least one grid axis".into()));
        }
        let (rho, delta, gamma) = weights;
        let shape: Vec<usize> = axes.iter().map(|a| a.values.len()).collect();
        let n: usize = shape.iter().product();
        if n > 100_000 {
            return Err(Error::InvalidInput(format!(
                "grid has {n} states; keep it enumerable (<= 1e5)"
            )));
        }
        let mut flat = base.pack();
        let mut energy = Vec::with_capacity(n);
        for state in 0..n {
            let mut rem = state;
            for (axis, &card) in axes.iter().zip(&shape).rev() {
                flat[axis.param_index] = axis.values[rem % card];
                rem /= card;
            }
            let params = ToyModelParams::unpack(&flat)?;
            let mut e = 0.0;
            if rho != 0.0 {
                e += rho * rate(&params, data, &[])?;
            }
            if delta != 0.0 {
                e += delta * distortion(&params, data, &[])?;
            }
            if gamma != 0.0 {
                e += gamma * classification_error(&params, data, &[])?;
            }
            energy.push(e);
        }
        ParamGrid::from_energies(shape, None, energy)
    }

    pub fn n_states(&self) -> usize {
        self.energy.len()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PartitionReport {
    pub z: f64,
    pub log_z: f64,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidSigma(sigma));
    }
    Ok(())
}

/// log Z = logsumexp over log q(θ) − E(θ)/σ, accumulated in log-space.
pub fn partition_function(grid: &ParamGrid, sigma: f64) -> Result<PartitionReport> {
    check_sigma(sigma)?;
    let terms: Vec<f64> = grid
        .prior
        .iter()
        .zip(&grid.energy)
        .map(|(&q, &e)| q.ln() - e / sigma)
        .collect();
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::AllEnergiesInfinite);
    }
    let log_z = max + kahan_sum(terms.iter().map(|t| (t - max).exp())).ln();
    Ok(PartitionReport {
        z: log_z.exp(),
        log_z,
    })
}

/// p*(θ) = q(θ) exp(−E(θ)/σ) / Z.
pub fn boltzmann_posterior(grid: &ParamGrid, sigma: f64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let log_z = partition_function(grid, sigma)?.log_z;
    let mut p: Vec<f64> = grid
        .prior
        .iter()
        .zip(&grid.energy)
        .map(|(&q, &e)| (q.ln() - e / sigma - log_z).exp())
        .collect();
    let total = kahan_sum(p.iter().copied());
    for v in &mut p {
        *v /= total;
    }
    Ok(p)
}

/// J[p] = ⟨E⟩_p + σ KL(p‖q), the non-equilibrium objective on the grid.
pub fn nonequilibrium_objective(grid: &ParamGrid, sigma: f64, p: &[f64]) -> f64 {
    let mut terms = Vec::with_capacity(p.len());
    for ((&pi, &qi), &e) in p.iter().zip(&grid.prior).zip(&grid.energy) {
        if pi > 0.0 {
            terms.push(pi * e + sigma * pi * (pi / qi).ln());
        }
    }
    kahan_sum(terms)
}

fn kl_discrete(p: &[f64], q: &[f64]) -> f64 {
    let mut terms = Vec::with_capacity(p.len());
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi == 0.0 {
                return f64::INFINITY;
            }
            terms.push(pi * (pi / qi).ln());
        }
    }
    kahan_sum(terms)
}

#[derive(Debug, Clone, Serialize)]
pub struct MinJReport {
    pub sigma: f64,
    pub log_z: f64,
    /// J[p*] via the explicit energy/KL route.
    pub j_star: f64,
    /// J[p*] − (−σ log Z).
    pub identity_residual: f64,
    /// Per random p: (ΔJ = J[p] − J[p*], σ·KL(p‖p*)).
    pub delta_j_checks: Vec<(f64, f64)>,
}

impl MinJReport {
    pub fn max_delta_residual(&self) -> f64 {
        self.delta_j_checks
            .iter()
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Verifies min J = −σ log Z at p = p*, and ΔJ = σ KL(p‖p*) for `n_random`
/// random distributions.
pub fn check_min_j(grid: &ParamGrid, sigma: f64, n_random: usize, seed: u64) -> Result<MinJReport> {
    use rand::Rng;
    use rand::SeedableRng;
    check_sigma(sigma)?;
    let p_star = boltzmann_posterior(grid, sigma)?;
    let log_z = partition_function(grid, sigma)?.log_z;
    let j_star = nonequilibrium_objective(grid, sigma, &p_star);
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let n = grid.n_states();
    let mut delta_j_checks = Vec::with_capacity(n_random);
    for _ in 0..n_random {
        let mut p: Vec<f64> = (0..n)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = kahan_sum(p.iter().copied());
        for v in &mut p {
            *v /= total;
        }
        let dj = nonequilibrium_objective(grid, sigma, &p) - j_star;
        delta_j_checks.push((dj, sigma * kl_discrete(&p, &p_star)));
    }
    Ok(MinJReport {
        sigma,
        log_z,
        j_star,
        identity_residual: j_star - (-sigma * log_z),
        delta_j_checks,
    })
}

/// Metropolis kernel with uniform proposals over axis-adjacent neighbors;
/// out-of-range proposals stay put, keeping the proposal symmetric. The
/// stationary law is the Boltzmann posterior by detailed balance.
pub struct MetropolisKernel {
    /// Per state: (neighbor, transition probability).
    moves: Vec<Vec<(usize, f64)>>,
    /// Per state: self-loop probability.
    stay: Vec<f64>,
}

impl MetropolisKernel {
    pub fn new(grid: &ParamGrid, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let n = grid.n_states();
        let n_axes = grid.shape.len();
        // strides for the row-major state layout
        let mut strides = vec![1usize; n_axes];
        for a in (0..n_axes.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * grid.shape[a + 1];
        }
        let log_weight = |s: usize| grid.prior[s].ln() - grid.energy[s] / sigma;
        let proposal = 1.0 / (2.0 * n_axes as f64);
        let mut moves = vec![Vec::new(); n];
        let mut stay = vec![0.0f64; n];
        for s in 0..n {
            let mut out = 0.0;
            for a in 0..n_axes {
                let coord = (s / strides[a]) % grid.shape[a];
                for dir in [-1i64, 1] {
                    let nc = coord as i64 + dir;
                    if nc < 0 || nc >= grid.shape[a] as i64 {
                        continue; // proposal rejected at the boundary: stay
                    }
                    let t = (s as i64 + dir * strides[a] as i64) as usize;
                    let accept = (log_weight(t) - log_weight(s)).exp().min(1.0);
                    if accept > 0.0 {
                        moves[s].push((t, proposal * accept));
                        out += proposal * accept;
                    }
                }
            }
            stay[s] = 1.0 - out;
        }
        Ok(MetropolisKernel { moves, stay })
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0f64; p.len()];
        for (s, &mass) in p.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            out[s] += mass * self.stay[s];
            for &(t, prob) in &self.moves[s] {
                out[t] += mass * prob;
            }
        }
        out
    }

    /// max |p*(a)K(a→b) − p*(b)K(b→a)| over all pairs.
    pub fn detailed_balance_residual(&self, p_star: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (a, list) in self.moves.iter().enumerate() {
            for &(b, k_ab) in list {
                let k_ba = self.moves[b]
                    .iter()
                    .find(|(t, _)| *t == a)
                    .map(|(_, k)| *k)
                    .unwrap_or(0.0);
                worst = worst.max((p_star[a] * k_ab - p_star[b] * k_ba).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxTrajectory {
    pub sigma: f64,
    pub log_z: f64,
    /// KL(p_n ‖ p*) per step, including n = 0.
    pub kl: Vec<f64>,
    /// J_n = ⟨E⟩_{p_n} + σ KL(p_n‖q) per step.
    pub objective: Vec<f64>,
    /// Final distribution after the last step.
    pub p_final: Vec<f64>,
}

impl RelaxTrajectory {
    pub fn max_kl_increase(&self) -> f64 {
        self.kl
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Exact distribution evolution of the Metropolis chain: the full kernel is
/// applied to p_n each step (no sampling), so second-law monotonicity is a
/// hard assertion.
pub fn markov_relax(
    grid: &ParamGrid,
    sigma: f64,
    p0: &[f64],
    steps: usize,
) -> Result<RelaxTrajectory> {
    check_sigma(sigma)?;
    if p0.len() != grid.n_states() {
        return Err(Error::ShapeMismatch(format!(
            "p0 has {} entries for {} states",
            p0.len(),
            grid.n_states()
        )));
    }
    if p0.iter().any(|&x| !(x >= 0.0)) || (kahan_sum(p0.iter().copied()) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(
            "p0 must be a distribution over grid states".into(),
        ));
    }
    let kernel = MetropolisKernel::new(grid, sigma)?;
    let p_star = boltzmann_posterior(grid, sigma)?;
    let log_z = partition_function(grid, sigma)?.log_z;
    let mut p = p0.to_vec();
    let mut kl = Vec::with_capacity(steps + 1);
    let mut objective = Vec::with_capacity(steps + 1);
    kl.push(kl_discrete(&p, &p_star));
    objective.push(nonequilibrium_objective(grid, sigma, &p));
    for _ in 0..steps {
        p = kernel.apply(&p);
        kl.push(kl_discrete(&p, &p_star));
        objective.push(nonequilibrium_objective(grid, sigma, &p));
    }
    Ok(RelaxTrajectory {
        sigma,
        log_z,
        kl,
        objective,
        p_final: p,
    })
}

/// Fits the temperature of a distribution on the grid by matching its mean
/// energy to the Boltzmann family's, via bisection (mean energy is monotone
/// increasing in σ).
pub fn fit_sigma(grid: &ParamGrid, p: &[f64]) -> Result<f64> {
    let target: f64 = p
        .iter()
        .zip(&grid.energy)
        .map(|(&pi, &e)| pi * e)
        .sum();
    let mean_energy = |sigma: f64| -> Result<f64> {
        let b = boltzmann_posterior(grid, sigma)?;
        Ok(b.iter().zip(&grid.energy).map(|(&p, &e)| p * e).sum())
    };
    let (mut lo, mut hi) = (1e-9, 1e9);
    if target <= mean_energy(lo)? || target >= mean_energy(hi)? {
        return Err(Error::InvalidInput(format!(
            "mean energy {target} is outside the Boltzmann family's range"
        )));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt(); // geometric bisection over nine decades
        if mean_energy(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

/// Product grid with additive energies and product prior.
pub fn product_grid(a: &ParamGrid, b: &ParamGrid) -> ParamGrid {
    let mut shape = a.shape.clone();
    shape.extend(&b.shape);
    let mut prior = Vec::with_capacity(a.n_states() * b.n_states());
    let mut energy = Vec::with_capacity(a.n_states() * b.n_states());
    for i in 0..a.n_states() {
        for j in 0..b.n_states() {
            prior.push(a.prior[i] * b.prior[j]);
            energy.push(a.energy[i] + b.energy[j]);
        }
    }
    ParamGrid::from_energies(shape, Some(prior), energy).expect("product grid is valid")
}

#[derive(Debug, Clone, Serialize)]
pub struct ZerothLawReport {
    pub sigma_shared: f64,
    pub sigma_fit_a: f64,
    pub sigma_fit_b: f64,
    /// |σ_A − σ_B| / σ_shared.
    pub relative_disagreement: f64,
    pub final_kl_to_joint_equilibrium: f64,
}

/// Couples two grids, relaxes the joint system from the product prior under
/// the shared temperature, marginalizes, and fits each subsystem's effective
/// temperature. At equilibrium both subsystems report the shared σ.
pub fn zeroth_law_check(
    a: &ParamGrid,
    b: &ParamGrid,
    sigma: f64,
    steps: usize,
) -> Result<ZerothLawReport> {
    let joint = product_grid(a, b);
    let relax = markov_relax(&joint, sigma, &joint.prior, steps)?;
    let nb = b.n_states();
    let mut p_a = vec![0.0f64; a.n_states()];
    let mut p_b = vec![0.0f64; nb];
    for (s, &mass) in relax.p_final.iter().enumerate() {
        p_a[s / nb] += mass;
        p_b[s % nb] += mass;
    }
    let sigma_fit_a = fit_sigma(a, &p_a)?;
    let sigma_fit_b = fit_sigma(b, &p_b)?;
    Ok(ZerothLawReport {
        sigma_shared: sigma,
        sigma_fit_a,
        sigma_fit_b,
        relative_disagreement: (sigma_fit_a - sigma_fit_b).abs() / sigma,
        final_kl_to_joint_equilibrium: *relax.kl.last().unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_state() -> ParamGrid {
        ParamGrid::from_energies(vec![2], None, vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn two_state_closed_forms() {
        let grid = two_state();
        let z = partition_function(&grid, 1.0).unwrap();
        let e1 = (-1.0f64).exp();
        assert_abs_diff_eq!(z.z, 0.5 * (1.0 + e1), epsilon = 1e-15);
        let p = boltzmann_posterior(&grid, 1.0).unwrap();
        assert_abs_diff_eq!(p[0], 1.0 / (1.0 + e1), epsilon = 1e-12);
        assert_abs_diff_eq!(p[1], e1 / (1.0 + e1), epsilon = 1e-12);
    }

    #[test]
    fn constant_energy_recovers_the_prior() {
        let grid =
            ParamGrid::from_energies(vec![4], Some(vec![0.1, 0.2, 0.3, 0.4]), vec![2.5; 4])
                .unwrap();
        let p = boltzmann_posterior(&grid, 0.7).unwrap();
        for (a, b) in p.iter().zip(&grid.prior) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        // log Z = −E/σ for constant energy
        let z = partition_function(&grid, 0.7).unwrap();
        assert_abs_diff_eq!(z.log_z, -2.5 / 0.7, epsilon = 1e-12);
    }

    #[test]
    fn infinite_temperature_recovers_the_prior() {
        let grid = ParamGrid::from_energies(
            vec![3],
            Some(vec![0.5, 0.3, 0.2]),
            vec![0.0, 1.0, 3.0],
        )
        .unwrap();
        let p = boltzmann_posterior(&grid, 1e6).unwrap();
        let tv: f64 = p
            .iter()
            .zip(&grid.prior)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 1e-4, "total variation {tv}");
        let z = partition_function(&grid, 1e8).unwrap();
        assert_abs_diff_eq!(z.z, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn all_infinite_energies_error() {
        assert!(matches!(
            ParamGrid::from_energies(vec![2], None, vec![f64::INFINITY; 2]),
            Err(Error::AllEnergiesInfinite)
        ));
    }

    #[test]
    fn min_j_identity_on_the_two_state_grid() {
        let grid = two_state();
        let report = check_min_j(&grid, 1.0, 10, 3).unwrap();
        assert!(report.identity_residual.abs() < 1e-12);
        for &(dj, sigma_kl) in &report.delta_j_checks {
            assert!((dj - sigma_kl).abs() < 1e-12);
            assert!(dj >= -1e-12); // p* is the minimizer
        }
        // p = prior: ΔJ = σ KL(q ‖ p*) ≥ 0
        let p_star = boltzmann_posterior(&grid, 1.0).unwrap();
        let dj = nonequilibrium_objective(&grid, 1.0, &grid.prior) - report.j_star;
        assert_abs_diff_eq!(dj, kl_discrete(&grid.prior, &p_star), epsilon = 1e-14);
    }

    #[test]
    fn equilibrium_start_stays_at_zero_kl() {
        let grid = two_state();
        let p_star = boltzmann_posterior(&grid, 0.5).unwrap();
        let relax = markov_relax(&grid, 0.5, &p_star, 50).unwrap();
        for &kl in &relax.kl {
            assert!(kl.abs() < 1e-13);
        }
    }

    #[test]
    fn detailed_balance_is_exact() {
        let grid = ParamGrid::from_energies(
            vec![8, 8],
            None,
            (0..64)
                .map(|i| ((i % 8) as f64 - 3.5).powi(2) * 0.2 + ((i / 8) as f64) * 0.1)
                .collect(),
        )
        .unwrap();
        let kernel = MetropolisKernel::new(&grid, 0.7).unwrap();
        let p_star = boltzmann_posterior(&grid, 0.7).unwrap();
        assert!(kernel.detailed_balance_residual(&p_star) < 1e-14);
    }

    #[test]
    fn relaxation_from_a_point_mass_decreases_kl_strictly() {
        // 1D double-well-ish energy; start at the highest-energy state
        let energies: Vec<f64> = (0..20)
            .map(|i| {
                let x = i as f64 / 19.0 * 2.0 - 1.0;
                2.0 * (x * x - 0.4).powi(2) + 0.3 * x
            })
            .collect();
        let worst = energies
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let grid = ParamGrid::from_energies(vec![20], None, energies).unwrap();
        let mut p0 = vec![0.0; 20];
        p0[worst] = 1.0;
        let relax = markov_relax(&grid, 0.3, &p0, 100).unwrap();
        for w in relax.kl.windows(2) {
            assert!(w[1] < w[0] + 1e-12, "KL must not increase: {w:?}");
        }
        assert!(relax.kl[100] < relax.kl[0]);
    }

    #[test]
    fn objective_decreases_to_minus_sigma_log_z() {
        let energies: Vec<f64> = (0..25)
            .map(|i| 0.1 * (i as f64 - 12.0).powi(2) / 12.0)
            .collect();
        let grid = ParamGrid::from_energies(vec![25], None, energies).unwrap();
        let sigma = 0.8;
        let relax = markov_relax(&grid, sigma, &grid.prior, 2000).unwrap();
        // J_0 = ⟨E⟩_q exactly (KL(q‖q) = 0)
        let mean_e: f64 = grid
            .prior
            .iter()
            .zip(&grid.energy)
            .map(|(&q, &e)| q * e)
            .sum();
        assert_abs_diff_eq!(relax.objective[0], mean_e, epsilon = 1e-12);
        assert!(relax.max_kl_increase() <= 1e-12);
        let j_inf = -sigma * relax.log_z;
        assert!((relax.objective.last().unwrap() - j_inf).abs() < 1e-8);
        // J_n = −σ log Z + σ KL(p_n‖p*) at every step
        for (j, kl) in relax.objective.iter().zip(&relax.kl) {
            assert_abs_diff_eq!(*j, j_inf + sigma * kl, epsilon = 1e-10);
        }
    }

    #[test]
    fn sigma_fit_recovers_the_boltzmann_temperature() {
        let energies: Vec<f64> = (0..30).map(|i| (i as f64) * 0.15).collect();
        let grid = ParamGrid::from_energies(vec![30], None, energies).unwrap();
        for sigma in [0.3, 1.0, 4.0] {
            let p = boltzmann_posterior(&grid, sigma).unwrap();
            let fit = fit_sigma(&grid, &p).unwrap();
            assert!(
                (fit - sigma).abs() / sigma < 1e-6,
                "fit {fit} for sigma {sigma}"
            );
        }
    }

    #[test]
    fn coupled_subsystems_acquire_a_common_temperature() {
        let e_a: Vec<f64> = (0..24)
            .map(|i| 0.3 * ((i as f64 / 23.0) * 2.0 - 1.0).powi(2))
            .collect();
        let e_b: Vec<f64> = (0..18).map(|i| 0.12 * (i as f64)).collect();
        let a = ParamGrid::from_energies(vec![24], None, e_a).unwrap();
        let b = ParamGrid::from_energies(vec![18], None, e_b).unwrap();
        let report = zeroth_law_check(&a, &b, 0.5, 4000).unwrap();
        assert!(
            report.relative_disagreement < 0.01,
            "sigma_a {} vs sigma_b {}",
            report.sigma_fit_a,
            report.sigma_fit_b
        );
        assert!(report.final_kl_to_joint_equilibrium < 1e-10);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let grid = two_state();
        assert!(matches!(
            boltzmann_posterior(&grid, 0.0),
            Err(Error::InvalidSigma(_))
        ));
        assert!(markov_relax(&grid, 1.0, &[0.5, 0.4], 10).is_err());
        assert!(markov_relax(&grid, 1.0, &[0.5, 0.5, 0.0], 10).is_err());
    }
}
