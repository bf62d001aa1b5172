//! Heating cost from an hourly greenhouse energy balance, and harvest revenue.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weather::{DayNightMask, HourlyWeather, WeatherDay};

const KELVIN: f64 = 273.15;
/// |u - temp_out| below this is treated as the radiative singularity.
const RADIATIVE_SINGULARITY: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconParams {
    /// Cover transmissivity for global radiation.
    pub c_tau_cover: f64,
    /// Fraction of indoor radiation converted to sensible heat.
    pub c_sens: f64,
    /// Gross energy price, € GJ⁻¹.
    pub c_pgj: f64,
    /// Heater efficiency.
    pub c_eff: f64,
    /// Volumetric heat capacity of greenhouse air, J m⁻³ K⁻¹.
    pub rho_cp: f64,
    /// Cladding area per unit floor area.
    pub c_as: f64,
    /// Energy screen factor applied at night.
    pub c_sc: f64,
    /// Ventilation rate while heating, s⁻¹.
    pub c_navg: f64,
    /// Mean greenhouse height, m.
    pub c_h: f64,
    /// Inside heat transfer coefficient (radiative + convective), W m⁻² K⁻¹.
    pub c_alpha_heat: f64,
    /// Thermal emissivity of the cover.
    pub c_emis: f64,
    /// Stefan–Boltzmann constant.
    pub c_sigma_sb: f64,
    /// Upper bound on the radiative exchange coefficient.
    pub alpha_cap: f64,
}

impl Default for EconParams {
    fn default() -> Self {
        Self {
            c_tau_cover: 0.7,
            c_sens: 0.3,
            c_pgj: 11.0,
            c_eff: 0.90,
            rho_cp: 1206.0,
            c_as: 1.12,
            c_sc: 0.6,
            c_navg: 0.25 / 3600.0,
            c_h: 6.0,
            c_alpha_heat: 4.9 + 2.98,
            c_emis: 0.90,
            c_sigma_sb: 5.67e-8,
            alpha_cap: 100.0,
        }
    }
}

impl EconParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("c_tau_cover", self.c_tau_cover),
            ("c_sens", self.c_sens),
            ("c_pgj", self.c_pgj),
            ("c_eff", self.c_eff),
            ("rho_cp", self.rho_cp),
            ("c_as", self.c_as),
            ("c_sc", self.c_sc),
            ("c_navg", self.c_navg),
            ("c_h", self.c_h),
            ("c_alpha_heat", self.c_alpha_heat),
            ("c_emis", self.c_emis),
            ("c_sigma_sb", self.c_sigma_sb),
            ("alpha_cap", self.alpha_cap),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("economic parameter {name} must be positive")));
            }
        }
        Ok(())
    }

    /// Price of one W·h of heat delivered per m², €.
    pub fn c_l(&self) -> f64 {
        3.6e-6 * self.c_pgj / self.c_eff
    }

    /// Outside convective heat transfer of the roof.
    pub fn external_coeff(&self, wind: f64) -> f64 {
        if wind > 4.0 {
            2.5 * wind.powf(0.8)
        } else {
            2.8 + 1.2 * wind
        }
    }

    /// Radiative exchange between cover and sky, capped at `alpha_cap`.
    pub fn radiative_coeff(&self, u: f64, temp_out: f64, temp_sky: f64) -> f64 {
        let gap = u - temp_out;
        if gap.abs() < RADIATIVE_SINGULARITY {
            return self.alpha_cap;
        }
        let mean_k = 0.5 * u + 0.5 * temp_out + KELVIN;
        let alpha = 4.0 * self.c_emis * self.c_sigma_sb * mean_k.powi(3) * ((u - temp_sky) / gap).abs();
        alpha.min(self.alpha_cap)
    }

    /// Ventilation plus transmission loss per kelvin, W m⁻² K⁻¹.
    pub fn heat_loss_coeff(&self, u: f64, hour: &HourlyWeather, is_day: bool) -> f64 {
        let vent = if is_day { 1.0 } else { 0.2 } * self.c_navg * self.c_h;
        let screen = if is_day { 1.0 } else { self.c_sc };
        let outer = self.radiative_coeff(u, hour.temp_out, hour.temp_sky) + self.external_coeff(hour.wind);
        self.rho_cp * vent + self.c_as * screen / (1.0 / self.c_alpha_heat + 1.0 / outer)
    }

    /// Heating demand of one hour at setpoint `u`, W m⁻² (never negative).
    pub fn hourly_heat_demand(&self, u: f64, hour: &HourlyWeather, is_day: bool) -> f64 {
        let solar = hour.radiation_out * self.c_tau_cover * self.c_sens;
        (self.heat_loss_coeff(u, hour, is_day) * (u - hour.temp_out) - solar).max(0.0)
    }

    /// Heating cost of one day, € m⁻² day⁻¹.
    pub fn daily_heating_cost(&self, u_day: f64, u_night: f64, day: &WeatherDay, mask: &DayNightMask) -> f64 {
        let demand: f64 = day
            .hours()
            .iter()
            .zip(&mask.is_day)
            .map(|(h, &is_day)| {
                let u = if is_day { u_day } else { u_night };
                self.hourly_heat_demand(u, h, is_day)
            })
            .sum();
        self.c_l() * demand
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RevenueParams {
    /// Target harvest dry weight, kg m⁻².
    pub x_target: f64,
    /// Half-width of the accepted harvest band, kg m⁻².
    pub margin: f64,
    /// Fresh to dry weight ratio.
    pub c_dryfrac: f64,
    /// Price of fresh weight, € kg⁻¹.
    pub c_price: f64,
}

impl Default for RevenueParams {
    fn default() -> Self {
        Self {
            x_target: 0.320,
            margin: 0.015,
            c_dryfrac: 20.0,
            c_price: 1.0,
        }
    }
}

impl RevenueParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0) {
            return Err(Error::Validation("harvest margin must be positive".into()));
        }
        if !(self.x_target - self.margin > 0.0) {
            return Err(Error::Validation("x_target - margin must be positive".into()));
        }
        if !(self.c_dryfrac > 0.0 && self.c_price > 0.0) {
            return Err(Error::Validation("c_dryfrac and c_price must be positive".into()));
        }
        Ok(())
    }

    pub fn in_band(&self, x: f64) -> bool {
        x >= self.x_target - self.margin && x <= self.x_target + self.margin
    }

    /// Harvest revenue J(x), € m⁻². Zero outside the closed band.
    pub fn revenue(&self, x: f64) -> f64 {
        if self.in_band(x) {
            self.c_dryfrac * self.c_price * x
        } else {
            0.0
        }
    }
}
