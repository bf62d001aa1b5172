//! Closed-loop simulation: exact propagation of the state density on the
//! grid, and Monte Carlo paths of the continuous model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{policy_responses, NoiseParams, Policy, RowBuffer, StateGrid};
use crate::scenario::Scenario;

/// Probability vectors for days `start_day..=T`.
#[derive(Debug, Clone)]
pub struct DensityTrajectory {
    pub start_day: usize,
    pub p: Vec<Vec<f64>>,
    /// € m⁻² over the remaining horizon.
    pub expected_cost: f64,
}

impl DensityTrajectory {
    pub fn terminal(&self) -> &[f64] {
        self.p.last().expect("trajectory holds at least the start density")
    }
}

pub fn point_mass(n: usize, cell: usize) -> Vec<f64> {
    let mut p = vec![0.0; n];
    p[cell] = 1.0;
    p
}

fn check_start(scenario: &Scenario, start_day: usize) -> Result<()> {
    if start_day >= scenario.horizon() {
        return Err(Error::Validation(format!(
            "start day {start_day} outside horizon of {} days",
            scenario.horizon()
        )));
    }
    Ok(())
}

pub fn propagate_density(
    scenario: &Scenario,
    policy: &Policy,
    noise: &NoiseParams,
    p0: &[f64],
    start_day: usize,
) -> Result<DensityTrajectory> {
    noise.validate()?;
    check_start(scenario, start_day)?;
    let grid = &scenario.grid;
    if p0.len() != grid.len() {
        return Err(Error::Dimension(format!(
            "initial density has {} cells, grid has {}",
            p0.len(),
            grid.len()
        )));
    }
    let responses = policy_responses(scenario, policy)?;
    let mut buf = RowBuffer::new();
    let mut p = vec![p0.to_vec()];
    let mut expected_cost = 0.0;
    for row in &responses[start_day..] {
        let cur = p.last().unwrap();
        let mut next = vec![0.0; grid.len()];
        for (i, (&mass, r)) in cur.iter().zip(row).enumerate() {
            if mass == 0.0 {
                continue;
            }
            expected_cost += mass * r.cost * noise.dt;
            buf.fill(grid, i, r.growth.rate(grid.x(i)), noise);
            let scale = mass / buf.total();
            for (dst, w) in next[buf.start()..].iter_mut().zip(buf.weights()) {
                *dst += scale * w;
            }
        }
        p.push(next);
    }
    Ok(DensityTrajectory {
        start_day,
        p,
        expected_cost,
    })
}

/// Sampled paths; `paths[r]` holds the weight on days `start_day..=T`.
#[derive(Debug, Clone)]
pub struct McTrajectories {
    pub start_day: usize,
    pub paths: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
    /// Steps where the sample left the grid range and was clamped.
    pub clamped_steps: usize,
}

impl McTrajectories {
    pub fn final_weights(&self) -> Vec<f64> {
        self.paths.iter().map(|p| *p.last().unwrap()).collect()
    }

    pub fn total_steps(&self) -> usize {
        self.paths.iter().map(|p| p.len() - 1).sum()
    }
}

/// Euler–Maruyama paths under `policy` looked up at the nearest cell.
/// Run `r` draws from its own ChaCha stream, so results do not depend on
/// the number of threads.
#[allow(clippy::too_many_arguments)]
pub fn simulate_mc(
    scenario: &Scenario,
    policy: &Policy,
    noise: &NoiseParams,
    x0: f64,
    start_day: usize,
    n_runs: usize,
    seed: u64,
) -> Result<McTrajectories> {
    noise.validate()?;
    check_start(scenario, start_day)?;
    if n_runs == 0 {
        return Err(Error::Validation("need at least one Monte Carlo run".into()));
    }
    let grid = &scenario.grid;
    if !(x0.is_finite() && x0 >= grid.x_min() && x0 <= grid.x_max()) {
        return Err(Error::Validation(format!("initial weight {x0} outside the grid range")));
    }
    let responses = policy_responses(scenario, policy)?;
    let sd = (noise.sigma2 * noise.dt).sqrt();
    let runs: Vec<(Vec<f64>, f64, usize)> = (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(run as u64);
            let mut x = x0;
            let mut path = Vec::with_capacity(responses.len() - start_day + 1);
            path.push(x);
            let (mut cost, mut clamped) = (0.0, 0);
            for row in &responses[start_day..] {
                let r = &row[grid.nearest_cell(x)];
                cost += r.cost * noise.dt;
                let xi: f64 = StandardNormal.sample(&mut rng);
                let next = x + r.growth.rate(x) * noise.dt + sd * x * xi;
                let bounded = next.clamp(grid.x_min(), grid.x_max());
                if bounded != next {
                    clamped += 1;
                }
                x = bounded;
                path.push(x);
            }
            (path, cost, clamped)
        })
        .collect();

    let mut out = McTrajectories {
        start_day,
        paths: Vec::with_capacity(n_runs),
        costs: Vec::with_capacity(n_runs),
        clamped_steps: 0,
    };
    for (path, cost, clamped) in runs {
        out.paths.push(path);
        out.costs.push(cost);
        out.clamped_steps += clamped;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestStats {
    /// Mean harvest weight, kg m⁻².
    pub mean: f64,
    pub std: f64,
    pub p_in_band: f64,
    pub expected_revenue: f64,
    pub expected_cost: f64,
    pub expected_net: f64,
}

pub enum HarvestSource<'a> {
    Density(&'a DensityTrajectory),
    MonteCarlo(&'a McTrajectories),
}

pub fn harvest_stats(source: HarvestSource<'_>, scenario: &Scenario) -> HarvestStats {
    let rev = &scenario.revenue;
    let (weighted, expected_cost): (Vec<(f64, f64)>, f64) = match source {
        HarvestSource::Density(d) => (
            d.terminal()
                .iter()
                .enumerate()
                .map(|(i, &p)| (scenario.grid.x(i), p))
                .collect(),
            d.expected_cost,
        ),
        HarvestSource::MonteCarlo(mc) => {
            let w = 1.0 / mc.paths.len() as f64;
            (
                mc.final_weights().into_iter().map(|x| (x, w)).collect(),
                mc.costs.iter().sum::<f64>() * w,
            )
        }
    };
    let mean: f64 = weighted.iter().map(|(x, p)| p * x).sum();
    let var: f64 = weighted.iter().map(|(x, p)| p * (x - mean).powi(2)).sum();
    let p_in_band = weighted.iter().filter(|(x, _)| rev.in_band(*x)).map(|(_, p)| p).sum();
    let expected_revenue = weighted.iter().map(|(x, p)| p * rev.revenue(*x)).sum();
    HarvestStats {
        mean,
        std: var.max(0.0).sqrt(),
        p_in_band,
        expected_revenue,
        expected_cost,
        expected_net: expected_revenue - expected_cost,
    }
}

/// Sample counts per grid cell, each sample assigned to its nearest cell.
pub fn histogram(grid: &StateGrid, samples: &[f64]) -> Vec<usize> {
    let mut counts = vec![0; grid.len()];
    for &x in samples {
        counts[grid.nearest_cell(x)] += 1;
    }
    counts
}

/// Kolmogorov–Smirnov distance between a grid density and samples binned
/// to their nearest cell.
pub fn ks_distance(grid: &StateGrid, density: &[f64], samples: &[f64]) -> f64 {
    let counts = histogram(grid, samples);
    let n = samples.len() as f64;
    let (mut fd, mut fs, mut worst) = (0.0, 0.0, 0.0f64);
    for (p, c) in density.iter().zip(&counts) {
        fd += p;
        fs += *c as f64 / n;
        worst = worst.max((fd - fs).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{Setpoints, StateGrid};
    use crate::weather::{synthesize_weather, WeatherProfile};

    fn toy(horizon: usize) -> Scenario {
        let day = synthesize_weather(&WeatherProfile::early_spring()).unwrap();
        let mut s = Scenario::repeated_day(&day, horizon, StateGrid::standard(200).unwrap()).unwrap();
        s.x0 = 0.05;
        s
    }

    #[test]
    fn density_mass_is_conserved() {
        let s = toy(10);
        let policy = Policy::constant(10, 200, Setpoints::new(16.0, 8.0));
        let d = propagate_density(&s, &policy, &s.noise, &point_mass(200, s.x0_cell()), 2).unwrap();
        assert_eq!(d.p.len(), 9);
        for p in &d.p {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let daily = s.response(0, Setpoints::new(16.0, 8.0)).unwrap().cost;
        assert!((d.expected_cost - 8.0 * daily).abs() < 1e-12);
    }

    #[test]
    fn mc_is_reproducible_and_thread_independent() {
        let s = toy(6);
        let policy = Policy::constant(6, 200, Setpoints::new(15.0, 7.0));
        let a = simulate_mc(&s, &policy, &s.noise, 0.05, 0, 64, 7).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_mc(&s, &policy, &s.noise, 0.05, 0, 64, 7).unwrap());
        assert_eq!(a.paths, b.paths);
        let c = simulate_mc(&s, &policy, &s.noise, 0.05, 0, 64, 8).unwrap();
        assert_ne!(a.paths, c.paths);
        // The first runs do not depend on how many runs are requested.
        let d = simulate_mc(&s, &policy, &s.noise, 0.05, 0, 10, 7).unwrap();
        assert_eq!(&a.paths[..10], &d.paths[..]);
    }

    #[test]
    fn harvest_stats_of_point_mass() {
        let s = toy(3);
        let cell = s.grid.nearest_cell(0.32);
        let d = DensityTrajectory {
            start_day: 3,
            p: vec![point_mass(200, cell)],
            expected_cost: 0.5,
        };
        let h = harvest_stats(HarvestSource::Density(&d), &s);
        assert!((h.mean - s.grid.x(cell)).abs() < 1e-15);
        assert!(h.std < 1e-9);
        assert_eq!(h.p_in_band, 1.0);
        assert!((h.expected_net - (20.0 * s.grid.x(cell) - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn ks_of_identical_distributions() {
        let grid = StateGrid::standard(10).unwrap();
        let samples: Vec<f64> = (0..10).map(|i| grid.x(i)).collect();
        assert!(ks_distance(&grid, &[0.1; 10], &samples) < 1e-12);
        assert!((ks_distance(&grid, &point_mass(10, 0), &[grid.x(9)]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = toy(4);
        let policy = Policy::constant(4, 200, Setpoints::new(15.0, 7.0));
        assert!(simulate_mc(&s, &policy, &s.noise, 0.05, 4, 10, 1).is_err());
        assert!(simulate_mc(&s, &policy, &s.noise, 0.0, 0, 10, 1).is_err());
        assert!(propagate_density(&s, &policy, &s.noise, &[1.0], 0).is_err());
    }
}
