use ratefront_core::functionals::MultiplierSetting;
use ratefront_core::mixture::solve_mixture_params;
use ratefront_core::trainer::{train, TrainConfig};

fn main() {
    let spec = solve_mixture_params(0.5).unwrap();
    for (lr, steps) in [(1e-3, 30_000usize), (5e-4, 35_000)] {
        for (g, d, s) in [(1.0, 1.0, 0.01), (4.0, 4.0, 0.1), (2.0, 0.5, 0.02), (0.5, 2.0, 0.1)] {
            let setting = MultiplierSetting { rho: 1.0, delta: d, gamma: g, sigma: s };
            let mut config = TrainConfig::new(setting);
            config.steps = steps;
            config.learning_rate = lr;
            config.record_every = steps;
            config.seed = 1;
            let out = train(&spec, &config).unwrap();
            let h = &out.trajectory.deterministic_history;
            let tail = &h[h.len() - 500..];
            let mean = tail.iter().sum::<f64>() / 500.0;
            let std = (tail.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 500.0).sqrt();
            println!("lr={lr} steps={steps} g={g} d={d} s={s}: rel std {:.2e}", std / mean.abs());
        }
    }
}
