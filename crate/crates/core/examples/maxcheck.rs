use ratefront_core::frontier::{main_text_relation, maxwell_relations, sweep, FrontierGeometry};
use ratefront_core::functionals::MultiplierSetting;
use ratefront_core::mixture::solve_mixture_params;
use ratefront_core::trainer::TrainConfig;

fn main() {
    let spec = solve_mixture_params(0.5).unwrap();
    let gammas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let deltas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let sigmas = [0.005, 0.01, 0.02, 0.05, 0.1];
    let mut grid = Vec::new();
    for &g in &gammas { for &d in &deltas { for &s in &sigmas {
        grid.push(MultiplierSetting { rho: 1.0, delta: d, gamma: g, sigma: s });
    }}}
    let mut base = TrainConfig::new(grid[0]);
    base.steps = 30_000;
    base.record_every = 30_000;
    base.seed = 1;
    let t0 = std::time::Instant::now();
    let set = sweep(&spec, &grid, &base).unwrap();
    println!("sweep took {:.1?}; {} converged of {}", t0.elapsed(), set.converged_indices().len(), set.points.len());
    let geo = FrontierGeometry::new(&set, 20).unwrap();
    let relation = main_text_relation();
    let mut residuals = vec![];
    let mut inconclusive = 0;
    for &i in geo.point_indices() {
        let c = geo.maxwell_check(i, &relation).unwrap();
        if c.conclusive { residuals.push(c.residual); } else { inconclusive += 1; }
    }
    residuals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    println!("main-text relation: conclusive {}, inconclusive {}", residuals.len(), inconclusive);
    if !residuals.is_empty() {
        let q = |f: f64| residuals[((residuals.len() - 1) as f64 * f) as usize];
        println!("residual quantiles: 0%={:.4} 25%={:.4} 50%={:.4} 75%={:.4} 100%={:.4}", q(0.0), q(0.25), q(0.5), q(0.75), q(1.0));
    }
    // fitted vs multiplier-implied partials diagnostic
    let mut agree = 0usize;
    let mut total = 0usize;
    for &i in geo.point_indices() {
        if let Ok(est) = geo.partials(i) {
            if let Some(implied) = est.multiplier_implied {
                total += 3;
                for (hat, imp) in [(est.gamma_hat, implied[0]), (est.delta_hat, implied[1]), (est.sigma_hat, implied[2])] {
                    if (hat - imp).abs() / imp.abs().max(1e-12) < 0.25 { agree += 1; }
                }
            }
        }
    }
    println!("partials within 25% of multiplier-implied: {agree}/{total}");
    for r in maxwell_relations() {
        let mut res = vec![];
        for &i in geo.point_indices() {
            let c = geo.maxwell_check(i, &r).unwrap();
            if c.conclusive { res.push(c.residual); }
        }
        res.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = if res.is_empty() { f64::NAN } else { res[res.len()/2] };
        println!("{}: median {:.4} over {}", r.id, med, res.len());
    }
}
