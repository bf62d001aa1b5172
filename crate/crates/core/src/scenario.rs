//! Everything the solver needs for one production round: parameters, grid,
//! control box, true noise level, and the weather of each day.

use crate::crop::{CropParams, GrowthCoeffs};
use crate::economics::{EconParams, RevenueParams};
use crate::error::{Error, Result};
use crate::mdp::{ControlBox, NoiseParams, Setpoints, StateGrid};
use crate::weather::{day_summary, realized_temps, DaySummary, WeatherDay};

/// Design noise of the dynamic deterministic controller.
pub const DETERMINISTIC_SIGMA2: f64 = 2e-6;

#[derive(Debug, Clone)]
pub struct DayForcing {
    pub weather: WeatherDay,
    pub summary: DaySummary,
}

/// Growth and heating cost of one setpoint pair on one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlResponse {
    pub growth: GrowthCoeffs,
    /// € m⁻² day⁻¹.
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub crop: CropParams,
    pub econ: EconParams,
    pub revenue: RevenueParams,
    pub grid: StateGrid,
    pub controls: ControlBox,
    /// Noise of the plant; controllers are evaluated against this.
    pub noise: NoiseParams,
    pub deterministic_sigma2: f64,
    /// Initial weight, kg m⁻².
    pub x0: f64,
    /// Fixed starting day; `None` picks the best start per controller.
    pub start_day: Option<usize>,
    forcings: Vec<DayForcing>,
    day_index: Vec<usize>,
}

impl Scenario {
    /// `weather` holds one entry per day of the horizon.
    pub fn new(
        crop: CropParams,
        econ: EconParams,
        revenue: RevenueParams,
        grid: StateGrid,
        controls: ControlBox,
        noise: NoiseParams,
        weather: &[WeatherDay],
    ) -> Result<Self> {
        crop.validate()?;
        econ.validate()?;
        revenue.validate()?;
        controls.validate()?;
        noise.validate()?;
        if weather.is_empty() {
            return Err(Error::Validation("horizon must be at least one day".into()));
        }
        let mut forcings: Vec<DayForcing> = Vec::new();
        let mut day_index = Vec::with_capacity(weather.len());
        for day in weather {
            let idx = match forcings.iter().position(|f| f.weather.same_bits(day)) {
                Some(idx) => idx,
                None => {
                    forcings.push(DayForcing {
                        weather: day.clone(),
                        summary: day_summary(day, econ.c_tau_cover),
                    });
                    forcings.len() - 1
                }
            };
            day_index.push(idx);
        }
        let x0 = grid.x_min();
        Ok(Self {
            crop,
            econ,
            revenue,
            grid,
            controls,
            noise,
            deterministic_sigma2: DETERMINISTIC_SIGMA2,
            x0,
            start_day: None,
            forcings,
            day_index,
        })
    }

    /// Default parameters with the same weather day repeated `horizon` times.
    pub fn repeated_day(day: &WeatherDay, horizon: usize, grid: StateGrid) -> Result<Self> {
        Self::new(
            CropParams::default(),
            EconParams::default(),
            RevenueParams::default(),
            grid,
            ControlBox::default(),
            NoiseParams::default(),
            &vec![day.clone(); horizon],
        )
    }

    pub fn horizon(&self) -> usize {
        self.day_index.len()
    }

    pub fn forcing(&self, k: usize) -> &DayForcing {
        &self.forcings[self.day_index[k]]
    }

    /// Index of the distinct weather day used on day `k`.
    pub fn weather_id(&self, k: usize) -> usize {
        self.day_index[k]
    }

    pub fn distinct_days(&self) -> usize {
        self.forcings.len()
    }

    pub fn forcing_by_id(&self, id: usize) -> &DayForcing {
        &self.forcings[id]
    }

    pub fn with_noise(&self, noise: NoiseParams) -> Self {
        Self { noise, ..self.clone() }
    }

    pub fn x0_cell(&self) -> usize {
        self.grid.nearest_cell(self.x0)
    }

    pub fn response_on(&self, forcing: &DayForcing, u: Setpoints) -> Result<ControlResponse> {
        let (t_day, t_night) = realized_temps(&forcing.weather, &forcing.summary.mask, u.day, u.night);
        let growth = self.crop.growth_coeffs(&forcing.summary, t_day, t_night)?;
        let cost = self
            .econ
            .daily_heating_cost(u.day, u.night, &forcing.weather, &forcing.summary.mask);
        Ok(ControlResponse { growth, cost })
    }

    pub fn response(&self, k: usize, u: Setpoints) -> Result<ControlResponse> {
        self.response_on(self.forcing(k), u)
    }

    /// Terminal revenue on every grid cell.
    pub fn terminal_values(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| self.revenue.revenue(self.grid.x(i)))
            .collect()
    }
}
