//! Subcommand implementations.

use std::fs;
use std::path::Path;

use serde::Serialize;

use ratefront_core::boltzmann::{
    self, conjugate, GridAxis, MetropolisKernel, ParamGrid,
};
use ratefront_core::frontier::{
    maxwell_relations, sweep as run_sweep, zoo_settings, FrontierGeometry, FrontierSet,
};
use ratefront_core::functionals::FunctionalPoint;
use ratefront_core::info::{check_upper_bound, TinyWorld};
use ratefront_core::mixture::{
    infinite_dataset, sample_dataset, solve_mixture_params, MixtureSpec, N_BINS,
};
use ratefront_core::model::{ToyModelParams, N_LATENT, N_PARAMS};
use ratefront_core::trainer::{train as run_train, TrainOutcome};

use crate::config::{
    BayesRunConfig, BoltzmannRunConfig, GridSource, MaxwellRunConfig, SweepRunConfig,
    TrainRunConfig, ZooRunConfig,
};
use crate::output::{ensure_dir, fnv1a_hex, join, write_csv, write_json};
use crate::Failure;

fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

// ---------------------------------------------------------------------------
// calibrate / gen-data / verify-world
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CalibrateReport {
    target_rate: f64,
    achieved_rate: f64,
    spec: MixtureSpec,
}

pub fn calibrate(target_rate: f64, out: Option<std::path::PathBuf>) -> Result<(), Failure> {
    let spec = solve_mixture_params(target_rate)?;
    let report = CalibrateReport {
        target_rate,
        achieved_rate: spec.rate_nats(),
        spec,
    };
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(path) = out {
        fs::write(path, text)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct GenDataConfigEcho {
    target_rate: f64,
    n: usize,
    seed: u64,
    infinite: bool,
}

pub fn gen_data(
    out_dir: &Path,
    target_rate: f64,
    n: usize,
    seed: u64,
    infinite: bool,
) -> Result<(), Failure> {
    ensure_dir(out_dir)?;
    let spec = solve_mixture_params(target_rate)?;
    let config = GenDataConfigEcho {
        target_rate,
        n,
        seed,
        infinite,
    };
    let data = if infinite {
        infinite_dataset(&spec)
    } else {
        sample_dataset(&spec, n, seed)?
    };
    #[derive(Serialize)]
    struct DataDoc<'a> {
        spec: &'a MixtureSpec,
        data: &'a ratefront_core::mixture::Dataset,
    }
    write_json(
        &join(out_dir, "data.json"),
        &config,
        &DataDoc {
            spec: &spec,
            data: &data,
        },
    )?;
    if !infinite {
        let body = data
            .to_csv()
            .splitn(2, '\n')
            .nth(1)
            .unwrap_or_default()
            .to_string();
        write_csv(&join(out_dir, "data.csv"), &config, "x_bin,y", &body)?;
    }
    println!(
        "wrote {} ({} mode)",
        out_dir.display(),
        if infinite { "infinite" } else { "finite" }
    );
    Ok(())
}

pub fn verify_world(out_dir: &Path, seed: u64, worlds: usize) -> Result<(), Failure> {
    ensure_dir(out_dir)?;
    #[derive(Serialize)]
    struct WorldResult {
        world_seed: u64,
        passed: bool,
        failed_checks: Vec<(String, f64)>,
    }
    #[derive(Serialize)]
    struct VerifyReport {
        worlds: usize,
        tolerance: f64,
        results: Vec<WorldResult>,
    }
    #[derive(Serialize)]
    struct Echo {
        seed: u64,
        worlds: usize,
    }
    let tol = 1e-9;
    let mut results = Vec::with_capacity(worlds);
    let mut all_ok = true;
    for k in 0..worlds {
        let world_seed = seed.wrapping_add(k as u64);
        let world = TinyWorld::random(world_seed);
        let report = check_upper_bound(&world)?;
        let failed: Vec<(String, f64)> = report
            .checks(tol)
            .into_iter()
            .filter(|c| !c.passed)
            .map(|c| (c.name, c.value))
            .collect();
        let passed = failed.is_empty();
        all_ok &= passed;
        println!(
            "world {k} (seed {world_seed}): {}",
            if passed {
                "ok".to_string()
            } else {
                format!("FAILED {failed:?}")
            }
        );
        results.push(WorldResult {
            world_seed,
            passed,
            failed_checks: failed,
        });
    }
    write_json(
        &join(out_dir, "verify_report.json"),
        &Echo { seed, worlds },
        &VerifyReport {
            worlds,
            tolerance: tol,
            results,
        },
    )?;
    if all_ok {
        println!("all {worlds} worlds passed every identity check");
        Ok(())
    } else {
        Err(Failure::Numerical(
            "identity checks failed on at least one world".into(),
        ))
    }
}

// ---------------------------------------------------------------------------
// train / zoo
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Checkpoint<'a> {
    spec_hash: String,
    seed: u64,
    params: &'a ToyModelParams,
}

fn write_checkpoint(
    path: &Path,
    config: &impl Serialize,
    spec: &MixtureSpec,
    seed: u64,
    params: &ToyModelParams,
) -> Result<(), Failure> {
    let spec_hash = fnv1a_hex(serde_json::to_string(spec)?.as_bytes());
    write_json(
        path,
        config,
        &Checkpoint {
            spec_hash,
            seed,
            params,
        },
    )
}

fn run_one_training(
    config: &TrainRunConfig,
) -> Result<(MixtureSpec, TrainOutcome), Failure> {
    let spec = solve_mixture_params(config.target_rate)?;
    let outcome = run_train(&spec, &config.to_train_config())?;
    Ok((spec, outcome))
}

pub fn train(out_dir: &Path, config_path: &Path) -> Result<(), Failure> {
    let config: TrainRunConfig = load_config(config_path)?;
    ensure_dir(out_dir)?;
    let (spec, outcome) = run_one_training(&config)?;
    write_csv(
        &join(out_dir, "trajectory.csv"),
        &config,
        ratefront_core::trainer::Trajectory::CSV_HEADER,
        &outcome.trajectory.to_csv_rows(),
    )?;
    let final_point = &outcome.trajectory.records.last().unwrap().eval;
    write_csv(
        &join(out_dir, "final_point.csv"),
        &config,
        FunctionalPoint::CSV_HEADER,
        &format!("{}\n", final_point.to_csv_row()),
    )?;
    write_checkpoint(
        &join(out_dir, "final_params.json"),
        &config,
        &spec,
        config.seed,
        &outcome.params,
    )?;
    println!(
        "trained {} steps: J = {:.6} (R {:.4}, C {:.4}, D {:.4}, S {:.4})",
        config.steps, final_point.j, final_point.r, final_point.c, final_point.d, final_point.s
    );
    Ok(())
}

/// Distribution tables needed to redraw the figure panels for one setting.
#[derive(Serialize)]
struct ZooTables {
    /// q(z|x), row per x.
    q_z_given_x: Vec<Vec<f64>>,
    /// q(x|z), row per z.
    q_x_given_z: Vec<Vec<f64>>,
    /// q(x'|x) = Σ_z q(z|x) q(x'|z), row per x.
    q_xprime_given_x: Vec<Vec<f64>>,
    /// learned marginal q(z).
    q_z: Vec<f64>,
    /// true data marginal p(x).
    p_x: Vec<f64>,
    /// generative marginal g(x) = Σ_z q(z) q(x|z).
    g_x: Vec<f64>,
    /// reconstruction marginal d(x) = Σ_{x'} p(x') q(x|x').
    d_x: Vec<f64>,
    /// encoder-induced marginal e(z) = Σ_x p(x) q(z|x).
    e_z: Vec<f64>,
    /// class-conditioned induced marginals e(z|y=0), e(z|y=1).
    e_z_class0: Vec<f64>,
    e_z_class1: Vec<f64>,
}

fn zoo_tables(params: &ToyModelParams, spec: &MixtureSpec) -> Result<ZooTables, Failure> {
    let enc = params.encoder_dist(None)?;
    let dec = params.decoder_dist()?;
    let q_z = params.marginal_dist()?;
    let data = infinite_dataset(spec);
    let p_x = data.x_weights().to_vec();

    let mut q_z_given_x = Vec::with_capacity(N_BINS);
    let mut q_x_given_z = Vec::with_capacity(N_LATENT);
    let mut q_xprime_given_x = Vec::with_capacity(N_BINS);
    for x in 0..N_BINS {
        q_z_given_x.push(enc.row(x).to_vec());
        let mut row = vec![0.0f64; N_BINS];
        for z in 0..N_LATENT {
            for (xp, slot) in row.iter_mut().enumerate() {
                *slot += enc.get(x, z) * dec.get(z, xp);
            }
        }
        q_xprime_given_x.push(row);
    }
    for z in 0..N_LATENT {
        q_x_given_z.push(dec.row(z).to_vec());
    }

    let mut g_x = vec![0.0f64; N_BINS];
    for z in 0..N_LATENT {
        for (x, slot) in g_x.iter_mut().enumerate() {
            *slot += q_z[z] * dec.get(z, x);
        }
    }
    let mut d_x = vec![0.0f64; N_BINS];
    for xp in 0..N_BINS {
        for (x, slot) in d_x.iter_mut().enumerate() {
            *slot += p_x[xp] * q_xprime_given_x[xp][x];
        }
    }
    let mut e_z = vec![0.0f64; N_LATENT];
    let mut e_z_class = [vec![0.0f64; N_LATENT], vec![0.0f64; N_LATENT]];
    let mut p_y = [0.0f64; 2];
    for x in 0..N_BINS {
        for y in 0..2 {
            p_y[y] += data.cell_weight(x, y);
        }
    }
    for x in 0..N_BINS {
        for z in 0..N_LATENT {
            e_z[z] += p_x[x] * enc.get(x, z);
            for y in 0..2 {
                e_z_class[y][z] += data.cell_weight(x, y) / p_y[y] * enc.get(x, z);
            }
        }
    }
    let [e_z_class0, e_z_class1] = e_z_class;
    Ok(ZooTables {
        q_z_given_x,
        q_x_given_z,
        q_xprime_given_x,
        q_z,
        p_x,
        g_x,
        d_x,
        e_z,
        e_z_class0,
        e_z_class1,
    })
}

pub fn zoo(out_dir: &Path, config_path: &Path) -> Result<(), Failure> {
    let config: ZooRunConfig = load_config(config_path)?;
    ensure_dir(out_dir)?;
    let spec = solve_mixture_params(config.target_rate)?;
    let mut summary_rows = String::new();
    let mut diverged_settings = Vec::new();
    for (name, setting) in zoo_settings() {
        let run = TrainRunConfig {
            target_rate: config.target_rate,
            setting,
            steps: config.steps,
            learning_rate: config.learning_rate,
            optimizer: config.optimizer,
            data: config.data,
            m_noise: config.m_noise,
            seed: config.seed,
            record_every: config.record_every,
        };
        match run_train(&spec, &run.to_train_config()) {
            Ok(outcome) => {
                write_csv(
                    &join(out_dir, &format!("{name}_trajectory.csv")),
                    &run,
                    ratefront_core::trainer::Trajectory::CSV_HEADER,
                    &outcome.trajectory.to_csv_rows(),
                )?;
                let final_point = &outcome.trajectory.records.last().unwrap().eval;
                write_csv(
                    &join(out_dir, &format!("{name}_final.csv")),
                    &run,
                    FunctionalPoint::CSV_HEADER,
                    &format!("{}\n", final_point.to_csv_row()),
                )?;
                let tables = zoo_tables(&outcome.params, &spec)?;
                write_json(&join(out_dir, &format!("{name}_tables.json")), &run, &tables)?;
                write_checkpoint(
                    &join(out_dir, &format!("{name}_params.json")),
                    &run,
                    &spec,
                    config.seed,
                    &outcome.params,
                )?;
                summary_rows.push_str(&format!("{name},{}\n", final_point.to_csv_row()));
                println!("{name}: J = {:.6}", final_point.j);
            }
            Err(ratefront_core::Error::Diverged { step, value, .. }) => {
                println!("{name}: DIVERGED at step {step} (J = {value})");
                diverged_settings.push(name.to_string());
            }
            Err(e) => return Err(e.into()),
        }
    }
    write_csv(
        &join(out_dir, "zoo_summary.csv"),
        &config,
        &format!("name,{}", FunctionalPoint::CSV_HEADER),
        &summary_rows,
    )?;
    if diverged_settings.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "settings diverged: {diverged_settings:?}"
        )))
    }
}

// ---------------------------------------------------------------------------
// sweep / maxwell
// ---------------------------------------------------------------------------

fn execute_sweep(
    out_dir: &Path,
    config: &SweepRunConfig,
) -> Result<(MixtureSpec, FrontierSet), Failure> {
    let spec = solve_mixture_params(config.target_rate)?;
    let grid = config.grid.expand().map_err(Failure::Validation)?;
    let base = TrainRunConfig {
        target_rate: config.target_rate,
        setting: grid[0],
        steps: config.steps,
        learning_rate: config.learning_rate,
        optimizer: config.optimizer,
        data: config.data,
        m_noise: config.m_noise,
        seed: config.seed,
        record_every: config.record_every,
    }
    .to_train_config();
    let set = run_sweep(&spec, &grid, &base)?;
    write_csv(
        &join(out_dir, "frontier.csv"),
        config,
        FrontierSet::CSV_HEADER,
        &set.to_csv(),
    )?;
    if config.save_checkpoints {
        let mut index = Vec::new();
        for (i, point) in set.points.iter().enumerate() {
            if let Some(params) = &point.params {
                let file = format!("checkpoint_{i:03}.json");
                write_checkpoint(&join(out_dir, &file), config, &spec, config.seed, params)?;
                index.push(file);
            }
        }
        #[derive(Serialize)]
        struct Index {
            checkpoints: Vec<String>,
        }
        write_json(
            &join(out_dir, "checkpoints.json"),
            config,
            &Index { checkpoints: index },
        )?;
    }
    Ok((spec, set))
}

pub fn sweep(out_dir: &Path, config_path: &Path) -> Result<(), Failure> {
    let config: SweepRunConfig = load_config(config_path)?;
    ensure_dir(out_dir)?;
    let (_, set) = execute_sweep(out_dir, &config)?;
    let converged = set.converged_indices().len();
    println!(
        "swept {} settings ({} converged); frontier.csv written to {}",
        set.points.len(),
        converged,
        out_dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct RelationSummary {
    id: String,
    conclusive_points: usize,
    inconclusive_points: usize,
    median_residual: Option<f64>,
    checks: Vec<ratefront_core::frontier::RelationCheck>,
}

#[derive(Serialize)]
struct MaxwellReport {
    relations: Vec<RelationSummary>,
    capacity: Vec<ratefront_core::frontier::CapacityReport>,
}

fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(xs[xs.len() / 2])
}

pub fn maxwell(out_dir: &Path, config_path: &Path) -> Result<(), Failure> {
    let config: MaxwellRunConfig = load_config(config_path)?;
    ensure_dir(out_dir)?;
    let (_, set) = execute_sweep(out_dir, &config.sweep)?;
    let geo = FrontierGeometry::new(&set, config.k_neighbors)?;
    let selected: Vec<_> = maxwell_relations()
        .into_iter()
        .filter(|r| config.relations.is_empty() || config.relations.iter().any(|id| id == r.id))
        .collect();
    if selected.is_empty() {
        return Err(Failure::Validation(format!(
            "no known relation ids in {:?}",
            config.relations
        )));
    }
    let mut relations = Vec::new();
    for relation in &selected {
        let mut checks = Vec::new();
        let mut residuals = Vec::new();
        for &i in geo.point_indices() {
            let check = geo.maxwell_check(i, relation)?;
            if check.conclusive {
                residuals.push(check.residual);
            }
            checks.push(check);
        }
        relations.push(RelationSummary {
            id: relation.id.to_string(),
            conclusive_points: residuals.len(),
            inconclusive_points: checks.len() - residuals.len(),
            median_residual: median(residuals),
            checks,
        });
    }
    let mut capacity = Vec::new();
    if let Some(cap) = &config.capacity {
        for &i in geo.point_indices() {
            if let Ok(report) = geo.capacity(i, cap.d_band) {
                capacity.push(report);
            }
        }
    }
    for r in &relations {
        println!(
            "{}: median residual {:?} over {} conclusive points ({} inconclusive)",
            r.id, r.median_residual, r.conclusive_points, r.inconclusive_points
        );
    }
    write_json(
        &join(out_dir, "maxwell_report.json"),
        &config,
        &MaxwellReport {
            relations,
            capacity,
        },
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// boltzmann / bayes
// ---------------------------------------------------------------------------

fn build_grid(source: &GridSource) -> Result<ParamGrid, Failure> {
    match source {
        GridSource::ModelSlice {
            target_rate,
            axes,
            rho,
            delta,
            gamma,
            base_seed,
        } => {
            for axis in axes {
                if axis.param_index >= N_PARAMS {
                    return Err(Failure::Validation(format!(
                        "param_index {} out of range (< {N_PARAMS})",
                        axis.param_index
                    )));
                }
            }
            let spec = solve_mixture_params(*target_rate)?;
            let data = infinite_dataset(&spec);
            let base = ratefront_core::model::init_params(*base_seed);
            let grid_axes: Vec<GridAxis> = axes
                .iter()
                .map(|a| GridAxis {
                    param_index: a.param_index,
                    values: a.values(),
                })
                .collect();
            Ok(ParamGrid::from_model_slice(
                &base,
                &data,
                (*rho, *delta, *gamma),
                &grid_axes,
            )?)
        }
        GridSource::Energies {
            shape,
            energy,
            prior,
        } => Ok(ParamGrid::from_energies(
            shape.clone(),
            prior.clone(),
            energy.clone(),
        )?),
    }
}

#[derive(Serialize)]
struct BoltzmannReport {
    n_states: usize,
    sigma: f64,
    z: f64,
    log_z: f64,
    min_j: f64,
    min_j_identity_residual: f64,
    max_delta_j_residual: f64,
    detailed_balance_residual: f64,
    relax_steps: usize,
    final_kl: f64,
    max_kl_increase: f64,
    j_start: f64,
    j_end: f64,
}

pub fn boltzmann(out_dir: &Path, config_path: &Path) -> Result<(), Failure> {
    let config: BoltzmannRunConfig = load_config(config_path)?;
    ensure_dir(out_dir)?;
    let grid = build_grid(&config.grid)?;
    let partition = boltzmann::partition_function(&grid, config.sigma)?;
    let min_j = boltzmann::check_min_j(&grid, config.sigma, config.n_random, config.seed)?;
    let kernel = MetropolisKernel::new(&grid, config.sigma)?;
    let p_star = boltzmann::boltzmann_posterior(&grid, config.sigma)?;
    let relax = boltzmann::markov_relax(&grid, config.sigma, &grid.prior, config.relax_steps)?;

    let mut rows = String::new();
    for (step, (kl, j)) in relax.kl.iter().zip(&relax.objective).enumerate() {
        rows.push_str(&format!("{step},{kl},{j}\n"));
    }
    write_csv(&join(out_dir, "relaxation.csv"), &config, "step,kl,J", &rows)?;

    let report = BoltzmannReport {
        n_states: grid.n_states(),
        sigma: config.sigma,
        z: partition.z,
        log_z: partition.log_z,
        min_j: min_j.j_star,
        min_j_identity_residual: min_j.identity_residual,
        max_delta_j_residual: min_j.max_delta_residual(),
        detailed_balance_residual: kernel.detailed_balance_residual(&p_star),
        relax_steps: config.relax_steps,
        final_kl: *relax.kl.last().unwrap(),
        max_kl_increase: relax.max_kl_increase(),
        j_start: relax.objective[0],
        j_end: *relax.objective.last().unwrap(),
    };
    println!(
        "log Z = {:.9}; min-J residual {:.3e}; final KL {:.3e}",
        report.log_z, report.min_j_identity_residual, report.final_kl
    );
    write_json(&join(out_dir, "boltzmann_report.json"), &config, &report)?;
    Ok(())
}

pub fn bayes(out_dir: &Path, config_path: &Path) -> Result<(), Failure> {
    let config: BayesRunConfig = load_config(config_path)?;
    ensure_dir(out_dir)?;
    let curve = conjugate::bayes_frontier(
        &config.prior,
        &config.data,
        &config.betas,
        config.mode,
    )?;
    let stream = config.data.stream(config.mode);
    let mut posteriors = Vec::with_capacity(config.betas.len());
    for &beta in &config.betas {
        posteriors.push(conjugate::tempered_posterior(&config.prior, stream, beta)?);
    }
    let mut rows = String::new();
    for p in &curve {
        rows.push_str(&format!("{},{},{}\n", p.beta, p.s, p.u));
    }
    write_csv(&join(out_dir, "bayes_curve.csv"), &config, "beta,S,U", &rows)?;
    #[derive(Serialize)]
    struct CurveDoc {
        curve: Vec<conjugate::BayesPoint>,
        posteriors: Vec<conjugate::PosteriorParams>,
    }
    write_json(
        &join(out_dir, "bayes_report.json"),
        &config,
        &CurveDoc { curve, posteriors },
    )?;
    println!("bayes curve written to {}", out_dir.display());
    Ok(())
}
