//! JSON scenario configuration. Weights are given in g m⁻² here and
//! converted to kg m⁻² when the scenario is built.

use std::path::{Path, PathBuf};

use greenhouse_sdp::controllers::ControllerKind;
use greenhouse_sdp::crop::CropParams;
use greenhouse_sdp::economics::{EconParams, RevenueParams};
use greenhouse_sdp::harness::{SweepParameter, SweepSpec};
use greenhouse_sdp::mdp::{ControlBox, NoiseParams, StateGrid};
use greenhouse_sdp::scenario::DETERMINISTIC_SIGMA2;
use greenhouse_sdp::weather::{load_weather, synthesize_weather, WeatherDay, WeatherProfile};
use greenhouse_sdp::{Error, Scenario};
use serde::{Deserialize, Serialize};

pub const G_PER_KG: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WeatherSource {
    /// One of `day79`, `day5`, `day187`.
    Preset(String),
    Profile(WeatherProfile),
    File(WeatherFile),
}

impl Default for WeatherSource {
    fn default() -> Self {
        WeatherSource::Preset("day79".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeatherFile {
    pub path: PathBuf,
    /// First day to use, 0-based.
    #[serde(default)]
    pub day: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub x_min_g: f64,
    pub x_max_g: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            x_min_g: 5.0,
            x_max_g: 400.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RevenueConfig {
    pub x_target_g: f64,
    pub margin_g: f64,
    pub c_dryfrac: f64,
    pub c_price: f64,
}

impl Default for RevenueConfig {
    fn default() -> Self {
        let r = RevenueParams::default();
        Self {
            x_target_g: r.x_target * G_PER_KG,
            margin_g: r.margin * G_PER_KG,
            c_dryfrac: r.c_dryfrac,
            c_price: r.c_price,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    /// Boundary units: g m⁻² for margin and start weight.
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub controllers: Option<Vec<ControllerKind>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub weather: WeatherSource,
    /// Repeat the first weather day over the horizon.
    pub repeated_day: bool,
    pub horizon: usize,
    pub grid: GridConfig,
    pub controls: ControlBox,
    pub noise: NoiseParams,
    pub deterministic_sigma2: f64,
    pub crop: CropParams,
    pub econ: EconParams,
    pub revenue: RevenueConfig,
    pub x0_g: f64,
    pub start_day: Option<usize>,
    pub seed: u64,
    pub mc_runs: usize,
    pub controller: ControllerKind,
    pub sweep: Option<SweepConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            weather: WeatherSource::default(),
            repeated_day: true,
            horizon: 40,
            grid: GridConfig::default(),
            controls: ControlBox::default(),
            noise: NoiseParams::default(),
            deterministic_sigma2: DETERMINISTIC_SIGMA2,
            crop: CropParams::default(),
            econ: EconParams::default(),
            revenue: RevenueConfig::default(),
            x0_g: 5.0,
            start_day: None,
            seed: 0,
            mc_runs: 10_000,
            controller: ControllerKind::DynamicStochastic,
            sweep: None,
        }
    }
}

impl ScenarioConfig {
    /// Relative weather file paths resolve against `base`.
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: ScenarioConfig = serde_json::from_str(&text)?;
        if let WeatherSource::File(file) = &mut config.weather {
            if file.path.is_relative() {
                if let Some(dir) = path.parent() {
                    file.path = dir.join(&file.path);
                }
            }
        }
        Ok(config)
    }

    pub fn weather_days(&self) -> Result<Vec<WeatherDay>, Error> {
        if self.horizon == 0 {
            return Err(Error::Validation("horizon must be at least one day".into()));
        }
        let days = match &self.weather {
            WeatherSource::Preset(name) => {
                let profile = WeatherProfile::preset(name)
                    .ok_or_else(|| Error::Validation(format!("unknown weather preset `{name}`")))?;
                vec![synthesize_weather(&profile)?]
            }
            WeatherSource::Profile(profile) => vec![synthesize_weather(profile)?],
            WeatherSource::File(file) => {
                let all = load_weather(&file.path)?;
                if file.day >= all.len() {
                    return Err(Error::Validation(format!(
                        "weather day {} not in file with {} days",
                        file.day,
                        all.len()
                    )));
                }
                all[file.day..].to_vec()
            }
        };
        if self.repeated_day {
            return Ok(vec![days[0].clone(); self.horizon]);
        }
        if days.len() < self.horizon {
            return Err(Error::Validation(format!(
                "weather covers {} days, horizon needs {} (set repeated_day to reuse one day)",
                days.len(),
                self.horizon
            )));
        }
        Ok(days[..self.horizon].to_vec())
    }

    pub fn scenario(&self) -> Result<Scenario, Error> {
        let grid = StateGrid::new(self.grid.x_min_g / G_PER_KG, self.grid.x_max_g / G_PER_KG, self.grid.n)?;
        let revenue = RevenueParams {
            x_target: self.revenue.x_target_g / G_PER_KG,
            margin: self.revenue.margin_g / G_PER_KG,
            c_dryfrac: self.revenue.c_dryfrac,
            c_price: self.revenue.c_price,
        };
        let mut s = Scenario::new(
            self.crop.clone(),
            self.econ.clone(),
            revenue,
            grid,
            self.controls.clone(),
            self.noise,
            &self.weather_days()?,
        )?;
        if !(self.deterministic_sigma2 > 0.0 && self.deterministic_sigma2.is_finite()) {
            return Err(Error::Validation("deterministic_sigma2 must be positive".into()));
        }
        s.deterministic_sigma2 = self.deterministic_sigma2;
        let x0 = self.x0_g / G_PER_KG;
        if !(x0 >= s.grid.x_min() && x0 <= s.grid.x_max()) {
            return Err(Error::Validation(format!("x0_g {} outside the grid range", self.x0_g)));
        }
        s.x0 = x0;
        if let Some(k) = self.start_day {
            if k >= s.horizon() {
                return Err(Error::Validation(format!("start_day {k} outside horizon {}", s.horizon())));
            }
        }
        s.start_day = self.start_day;
        Ok(s)
    }

    /// Sweep spec in internal units; `parameter` overrides the config's.
    pub fn sweep_spec(&self, parameter: Option<SweepParameter>) -> Result<SweepSpec, Error> {
        let cfg = self.sweep.as_ref();
        let parameter = parameter
            .or(cfg.map(|c| c.parameter))
            .ok_or_else(|| Error::Validation("no sweep parameter given".into()))?;
        let mut spec = SweepSpec::default_for(parameter);
        if let Some(cfg) = cfg.filter(|c| c.parameter == parameter) {
            if let Some(values) = &cfg.values {
                let scale = if parameter.is_weight() { G_PER_KG } else { 1.0 };
                spec.values = values.iter().map(|v| v / scale).collect();
            }
            if let Some(controllers) = &cfg.controllers {
                spec.controllers = controllers.clone();
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}
