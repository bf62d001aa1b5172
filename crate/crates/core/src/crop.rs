//! Single-state lettuce dry-weight model: canopy photosynthesis with
//! photorespiration and CO₂ transport limits, and Q10 maintenance respiration.
//!
//! Rates are in kg m⁻² s⁻¹ unless noted; [`GrowthCoeffs::rate`] gives the
//! daily growth in kg m⁻² day⁻¹.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weather::{realized_temps, DaySummary, WeatherDay, HOURS_PER_DAY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CropParams {
    /// Assimilate to dry matter conversion.
    pub c_beta: f64,
    /// Yield factor of photosynthesis.
    pub c_yield: f64,
    /// Seconds per day.
    pub c_day: f64,
    /// Canopy extinction coefficient.
    pub c_k: f64,
    /// Shoot leaf area ratio, m² kg⁻¹.
    pub c_lars: f64,
    /// Root to total dry weight ratio.
    pub c_tau_resp: f64,
    /// CO₂ compensation point at the photosynthesis reference temperature, kg m⁻³.
    pub c_gamma: f64,
    pub c_q10: f64,
    /// Q10 exponent scale, °C⁻¹.
    pub c_aresp: f64,
    pub c_reftemp_photo: f64,
    pub c_reftemp_resp: f64,
    /// Ambient CO₂ density, kg m⁻³.
    pub c_co2: f64,
    /// PAR fraction of global radiation.
    pub c_par: f64,
    /// Light use efficiency, kg J⁻¹.
    pub c_lue: f64,
    /// Boundary layer conductance.
    pub c_bnd: f64,
    /// Stomatal conductance.
    pub c_stm: f64,
    pub c_car2: f64,
    pub c_car1: f64,
    pub c_car0: f64,
    /// Shoot maintenance respiration, s⁻¹.
    pub c_sresp: f64,
    /// Root maintenance respiration, s⁻¹.
    pub c_rresp: f64,
}

impl Default for CropParams {
    fn default() -> Self {
        Self {
            c_beta: 0.80,
            c_yield: 0.68,
            c_day: 86_400.0,
            c_k: 0.90,
            c_lars: 62.5,
            c_tau_resp: 0.07,
            c_gamma: 7.32e-5,
            c_q10: 2.0,
            c_aresp: 0.10,
            c_reftemp_photo: 20.0,
            c_reftemp_resp: 25.0,
            c_co2: 7.20e-4,
            c_par: 0.50,
            c_lue: 17e-9,
            c_bnd: 0.004,
            c_stm: 0.007,
            c_car2: -5.11e-6,
            c_car1: 2.3e-4,
            c_car0: -6.29e-4,
            c_sresp: 3.47e-7,
            c_rresp: 1.16e-7,
        }
    }
}

/// Daily growth for fixed controls on a fixed day, as a function of weight:
/// `f(x) = photo * (1 - exp(-kappa x)) - resp * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthCoeffs {
    /// Gross assimilation at full light interception, kg m⁻² day⁻¹.
    pub photo: f64,
    /// Respiration per unit weight, day⁻¹.
    pub resp: f64,
    /// Light interception coefficient, m² kg⁻¹.
    pub kappa: f64,
}

impl GrowthCoeffs {
    pub fn rate(&self, x: f64) -> f64 {
        self.photo * (1.0 - (-self.kappa * x).exp()) - self.resp * x
    }
}

impl CropParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c_beta", self.c_beta),
            ("c_yield", self.c_yield),
            ("c_day", self.c_day),
            ("c_k", self.c_k),
            ("c_lars", self.c_lars),
            ("c_gamma", self.c_gamma),
            ("c_q10", self.c_q10),
            ("c_co2", self.c_co2),
            ("c_par", self.c_par),
            ("c_lue", self.c_lue),
            ("c_bnd", self.c_bnd),
            ("c_stm", self.c_stm),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("crop parameter {name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.c_tau_resp) {
            return Err(Error::Validation("c_tau_resp must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Combined shoot/root maintenance respiration coefficient, s⁻¹.
    pub fn c_resp(&self) -> f64 {
        self.c_sresp * (1.0 - self.c_tau_resp) + self.c_rresp * self.c_tau_resp
    }

    /// Light interception coefficient of the canopy, m² kg⁻¹.
    pub fn kappa(&self) -> f64 {
        self.c_k * self.c_lars * (1.0 - self.c_tau_resp)
    }

    /// CO₂ compensation point Γ(T), kg m⁻³.
    pub fn co2_compensation(&self, temp: f64) -> f64 {
        self.c_gamma * self.c_q10.powf(self.c_aresp * (temp - self.c_reftemp_photo))
    }

    /// Light use efficiency ε(T) reduced by photorespiration, kg J⁻¹.
    pub fn light_use_efficiency(&self, temp: f64) -> f64 {
        let gamma = self.co2_compensation(temp);
        self.c_lue * (self.c_co2 - gamma) / (self.c_co2 + 2.0 * gamma)
    }

    pub fn carboxylation_conductance(&self, temp: f64) -> f64 {
        self.c_car2 * temp * temp + self.c_car1 * temp + self.c_car0
    }

    /// Leaf conductance to CO₂ as three resistances in series.
    pub fn co2_conductance(&self, temp: f64) -> Result<f64> {
        let car = self.carboxylation_conductance(temp);
        if !(car > 0.0) {
            return Err(Error::Domain {
                temperature: temp,
                conductance: car,
            });
        }
        Ok(1.0 / (1.0 / self.c_bnd + 1.0 / self.c_stm + 1.0 / car))
    }

    /// Light- and CO₂-limited maximum canopy assimilation.
    pub fn phot_max(&self, temp: f64, gamma: f64) -> Result<f64> {
        let sigma = self.co2_conductance(temp)?;
        let light = self.light_use_efficiency(temp) * self.c_par * gamma;
        let co2 = sigma * (self.c_co2 - self.co2_compensation(temp));
        if light == 0.0 {
            return Ok(0.0);
        }
        Ok(light * co2 / (light + co2))
    }

    pub fn interception(&self, x: f64) -> f64 {
        1.0 - (-self.kappa() * x).exp()
    }

    pub fn photosynthesis(&self, x: f64, temp: f64, gamma: f64) -> Result<f64> {
        Ok(self.phot_max(temp, gamma)? * self.interception(x))
    }

    pub fn respiration_factor(&self, temp: f64) -> f64 {
        self.c_resp() * self.c_q10.powf(self.c_aresp * (temp - self.c_reftemp_resp))
    }

    pub fn respiration(&self, x: f64, temp: f64) -> f64 {
        x * self.respiration_factor(temp)
    }

    /// Growth coefficients for a day with the given radiation summary and
    /// realized day/night temperatures. Classes without hours contribute nothing.
    pub fn growth_coeffs(&self, summary: &DaySummary, t_day: f64, t_night: f64) -> Result<GrowthCoeffs> {
        let mut phot = 0.0;
        let mut resp = 0.0;
        for (n, temp, gamma) in [
            (summary.n_day_hours, t_day, summary.gamma_day),
            (summary.n_night_hours, t_night, summary.gamma_night),
        ] {
            if n == 0 {
                continue;
            }
            let w = n as f64 / HOURS_PER_DAY as f64;
            phot += w * self.phot_max(temp, gamma)?;
            resp += w * self.respiration_factor(temp);
        }
        let scale = self.c_day * self.c_beta;
        Ok(GrowthCoeffs {
            photo: scale * self.c_yield * phot,
            resp: scale * resp,
            kappa: self.kappa(),
        })
    }

    /// Daily growth rate f(x, u_day, u_night), kg m⁻² day⁻¹.
    pub fn daily_growth(
        &self,
        x: f64,
        u_day: f64,
        u_night: f64,
        day: &WeatherDay,
        summary: &DaySummary,
    ) -> Result<f64> {
        let (t_day, t_night) = realized_temps(day, &summary.mask, u_day, u_night);
        Ok(self.growth_coeffs(summary, t_day, t_night)?.rate(x))
    }
}
