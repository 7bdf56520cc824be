use meanfield_core::{rng, simulate, BuiltinModel, SimulationConfig};

fn sample_variance(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[test]
fn bank_terminal_variance_over_many_seeds() {
    let model = BuiltinModel::bank().spec().unwrap();
    let target = 3f64.exp();
    let seeds = 100;
    let variances: Vec<f64> = (0..seeds)
        .map(|j| {
            let config = SimulationConfig::new(200, 1e-4, 1.0, rng::replication_seed(7, 200, j)).unwrap();
            sample_variance(&simulate(&model, &config).unwrap().terminal.positions)
        })
        .collect();
    let mean = variances.iter().sum::<f64>() / seeds as f64;
    assert!((mean / target - 1.0).abs() < 0.02, "mean variance {mean}");
    // A single run scatters by roughly 17% around e³, so only most runs land within 15%.
    let inside = variances.iter().filter(|v| (*v / target - 1.0).abs() <= 0.15).count();
    assert!(inside >= 40, "{inside} of {seeds} runs within 15%");
}

#[test]
fn driftless_tanh_time_change_concentrates_at_horizon() {
    let model = BuiltinModel::tanh_vol(0.0).spec().unwrap();
    let taus: Vec<f64> = (0..100)
        .map(|j| {
            let config = SimulationConfig::new(1000, 1e-3, 1.0, rng::replication_seed(8, 1000, j)).unwrap();
            simulate(&model, &config).unwrap().terminal.tau
        })
        .collect();
    let mean = taus.iter().sum::<f64>() / taus.len() as f64;
    let mean_abs = taus.iter().map(|t| (t - 1.0).abs()).sum::<f64>() / taus.len() as f64;
    assert!((mean - 1.0).abs() < 0.01, "mean tau_N {mean}");
    assert!(mean_abs <= 0.05, "mean |tau_N - 1| = {mean_abs}");
    assert!(taus.iter().all(|t| (0.25..=2.25).contains(t)));
}
