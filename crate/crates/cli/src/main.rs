mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use greenhouse_sdp::controllers::{
    best_static_over_starts, design_dynamic_deterministic, design_dynamic_stochastic, design_static_stochastic,
    optimal_start, ControllerKind,
};
use greenhouse_sdp::harness::{run_comparison, run_sweep, SweepParameter};
use greenhouse_sdp::mdp::{Policy, Setpoints};
use greenhouse_sdp::sim::{
    harvest_stats, histogram, ks_distance, point_mass, propagate_density, simulate_mc, HarvestSource,
};
use greenhouse_sdp::weather::{
    classify_hours, load_weather, synthesize_weather, write_weather, WeatherDay, WeatherProfile,
};
use greenhouse_sdp::{Error, Scenario};
use serde_json::json;

use config::{ScenarioConfig, G_PER_KG};
use output::{write_comparison, write_density, write_histogram, write_json, write_matrix, write_sweep, HarvestOut};

#[derive(Parser)]
#[command(name = "greenhouse-sdp", version, about = "Optimal day/night temperature setpoints for greenhouse lettuce")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON; omitted fields take nominal values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of grid cells.
    #[arg(long)]
    grid_n: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the optimal feedback policy and write its heat-map matrices.
    Solve(Common),
    /// Propagate the harvest density and Monte Carlo paths under one controller.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Overrides the config controller.
        #[arg(long)]
        controller: Option<ControllerKind>,
        /// Overrides the config number of Monte Carlo runs.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Compare the three controllers.
    Compare(Common),
    /// Sensitivity sweep over one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Overrides the config sweep parameter.
        #[arg(long)]
        parameter: Option<SweepParameter>,
    },
    /// Inspect or synthesize weather files.
    #[command(subcommand)]
    Weather(WeatherCommand),
}

#[derive(Subcommand)]
enum WeatherCommand {
    /// Print per-day statistics of a weather CSV.
    Inspect { file: PathBuf },
    /// Write a synthetic weather CSV.
    Synth {
        /// `day79`, `day5` or `day187`.
        #[arg(long, conflicts_with = "profile")]
        preset: Option<String>,
        /// JSON file with a weather profile.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Number of identical days to write.
        #[arg(long, default_value_t = 1)]
        days: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flags override config fields, which override the nominal defaults.
fn load(common: &Common) -> Result<(ScenarioConfig, Scenario)> {
    let mut config = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(n) = common.grid_n {
        config.grid.n = n;
    }
    let scenario = config.scenario()?;
    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("cannot create output directory {}", common.out.display()))?;
    Ok((config, scenario))
}

fn meta(command: &str, config: &ScenarioConfig, s: &Scenario) -> serde_json::Value {
    let cell = s.x0_cell();
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "horizon": s.horizon(),
        "grid": {
            "n": s.grid.len(),
            "x_min_g": s.grid.x_min() * G_PER_KG,
            "x_max_g": s.grid.x_max() * G_PER_KG,
        },
        "sigma2": s.noise.sigma2,
        "dt": s.noise.dt,
        "deterministic_sigma2": s.deterministic_sigma2,
        "x0_g": s.x0 * G_PER_KG,
        "x0_cell": cell,
        "snap_distance_g": (s.grid.x(cell) - s.x0).abs() * G_PER_KG,
        "start_day": s.start_day,
        "seed": config.seed,
        "config": config,
    })
}

fn cmd_solve(common: &Common) -> Result<()> {
    let (config, s) = load(common)?;
    let sol = design_dynamic_stochastic(&s)?;
    let t = s.horizon();
    let out = &common.out;
    write_matrix(&out.join("policy_day.csv"), &s.grid, t, |k, i| sol.policy.get(k, i).day)?;
    write_matrix(&out.join("policy_night.csv"), &s.grid, t, |k, i| sol.policy.get(k, i).night)?;
    write_matrix(&out.join("growth.csv"), &s.grid, t, |k, i| sol.growth.rates[k][i] * G_PER_KG)?;
    write_matrix(&out.join("value.csv"), &s.grid, t + 1, |k, i| sol.values.get(k, i))?;
    let cell = s.x0_cell();
    let start = s.start_day.unwrap_or_else(|| optimal_start(&sol.values, cell));
    let mut m = meta("solve", &config, &s);
    m["optimal_start_day"] = json!(start);
    m["value_at_start"] = json!(sol.values.get(start, cell));
    write_json(&out.join("meta.json"), &m)
}

struct Designed {
    policy: Policy,
    start_day: usize,
    value: f64,
    control: Option<Setpoints>,
}

fn design(s: &Scenario, kind: ControllerKind) -> Result<Designed> {
    let cell = s.x0_cell();
    Ok(match kind {
        ControllerKind::DynamicStochastic => {
            let sol = design_dynamic_stochastic(s)?;
            let k = s.start_day.unwrap_or_else(|| optimal_start(&sol.values, cell));
            Designed {
                value: sol.values.get(k, cell),
                policy: sol.policy,
                start_day: k,
                control: None,
            }
        }
        ControllerKind::DynamicDeterministic => {
            let det = design_dynamic_deterministic(s)?;
            let k = s.start_day.unwrap_or_else(|| optimal_start(&det.evaluated, cell));
            Designed {
                value: det.evaluated.get(k, cell),
                policy: det.design.policy,
                start_day: k,
                control: None,
            }
        }
        ControllerKind::StaticStochastic => {
            let d = match s.start_day {
                Some(k) => design_static_stochastic(s, k, cell)?,
                None => best_static_over_starts(s, cell)?,
            };
            Designed {
                policy: d.policy(s),
                start_day: d.start_day,
                value: d.value,
                control: Some(d.control),
            }
        }
    })
}

fn cmd_simulate(common: &Common, controller: Option<ControllerKind>, runs: Option<usize>) -> Result<()> {
    let (mut config, s) = load(common)?;
    if let Some(kind) = controller {
        config.controller = kind;
    }
    if let Some(n) = runs {
        config.mc_runs = n;
    }
    let d = design(&s, config.controller)?;
    let density = propagate_density(&s, &d.policy, &s.noise, &point_mass(s.grid.len(), s.x0_cell()), d.start_day)?;
    let mc = simulate_mc(&s, &d.policy, &s.noise, s.x0, d.start_day, config.mc_runs, config.seed)?;
    let finals = mc.final_weights();
    let out = &common.out;
    write_density(&out.join("density.csv"), &s.grid, d.start_day, &density.p)?;
    write_histogram(&out.join("mc_histogram.csv"), &s.grid, &histogram(&s.grid, &finals))?;
    write_json(
        &out.join("harvest_stats.json"),
        &json!({
            "controller": config.controller,
            "start_day": d.start_day,
            "value": d.value,
            "u_day": d.control.map(|u| u.day),
            "u_night": d.control.map(|u| u.night),
            "density": HarvestOut::from(&harvest_stats(HarvestSource::Density(&density), &s)),
            "monte_carlo": HarvestOut::from(&harvest_stats(HarvestSource::MonteCarlo(&mc), &s)),
            "ks_distance": ks_distance(&s.grid, density.terminal(), &finals),
            "mc_runs": config.mc_runs,
            "mc_clamped_steps": mc.clamped_steps,
            "mc_total_steps": mc.total_steps(),
        }),
    )?;
    write_json(&out.join("meta.json"), &meta("simulate", &config, &s))
}

fn cmd_compare(common: &Common) -> Result<()> {
    let (config, s) = load(common)?;
    let c = run_comparison(&s)?;
    write_comparison(&common.out, &c)?;
    write_json(&common.out.join("meta.json"), &meta("compare", &config, &s))
}

fn cmd_sweep(common: &Common, parameter: Option<SweepParameter>) -> Result<()> {
    let (config, s) = load(common)?;
    let spec = config.sweep_spec(parameter)?;
    let result = run_sweep(&spec, &s)?;
    write_sweep(&common.out, &result)?;
    let mut m = meta("sweep", &config, &s);
    m["sweep_parameter"] = json!(spec.parameter);
    write_json(&common.out.join("meta.json"), &m)
}

fn cmd_inspect(file: &Path) -> Result<()> {
    let days = load_weather(file)?;
    println!("day,mean_temp,mean_radiation,day_hours");
    for (k, day) in days.iter().enumerate() {
        println!(
            "{k},{},{},{}",
            output::num(day.mean_temp()),
            output::num(day.mean_radiation()),
            classify_hours(day).n_day()
        );
    }
    Ok(())
}

fn cmd_synth(preset: Option<&str>, profile: Option<&Path>, days: usize, out: &Path) -> Result<()> {
    let profile = match (preset, profile) {
        (Some(name), _) => WeatherProfile::preset(name)
            .ok_or_else(|| Error::Validation(format!("unknown weather preset `{name}`")))?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Validation(format!("cannot read profile {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(Error::from)?
        }
        (None, None) => return Err(Error::Validation("give --preset or --profile".into()).into()),
    };
    if days == 0 {
        return Err(Error::Validation("--days must be at least 1".into()).into());
    }
    let day: WeatherDay = synthesize_weather(&profile)?;
    let file = std::fs::File::create(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_weather(std::io::BufWriter::new(file), &vec![day; days])?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Solve(common) => cmd_solve(common),
        Command::Simulate { common, controller, runs } => cmd_simulate(common, *controller, *runs),
        Command::Compare(common) => cmd_compare(common),
        Command::Sweep { common, parameter } => cmd_sweep(common, *parameter),
        Command::Weather(WeatherCommand::Inspect { file }) => cmd_inspect(file),
        Command::Weather(WeatherCommand::Synth {
            preset,
            profile,
            days,
            out,
        }) => cmd_synth(preset.as_deref(), profile.as_deref(), *days, out),
    }
}

/// 1 for bad input, 2 for failures while computing or writing.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return if e.is_validation() { 1 } else { 2 };
        }
        if cause.is::<serde_json::Error>() {
            return 1;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
