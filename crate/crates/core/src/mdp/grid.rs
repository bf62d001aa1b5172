use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid over crop dry weight, kg m⁻². Cells are indexed from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
}

impl StateGrid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation(format!("grid needs at least 2 cells, got {n}")));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_min > 0.0 && x_max > x_min) {
            return Err(Error::Validation(format!(
                "grid range [{x_min}, {x_max}] must satisfy 0 < x_min < x_max"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n,
            dx: (x_max - x_min) / (n - 1) as f64,
        })
    }

    /// 5..400 g m⁻² with `n` cells.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(0.005, 0.400, n)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn nearest_cell(&self, x: f64) -> usize {
        let pos = ((x - self.x_min) / self.dx).round();
        if pos.is_nan() || pos <= 0.0 {
            0
        } else {
            (pos as usize).min(self.n - 1)
        }
    }
}

/// Day and night temperature setpoints, °C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setpoints {
    pub day: f64,
    pub night: f64,
}

impl Setpoints {
    pub fn new(day: f64, night: f64) -> Self {
        Self { day, night }
    }

    pub(crate) fn key(&self) -> (u64, u64) {
        (self.day.to_bits(), self.night.to_bits())
    }
}

/// Admissible setpoints and the lattice used to search them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlBox {
    pub day_range: [f64; 2],
    pub night_range: [f64; 2],
    pub day_step: f64,
    pub night_step: f64,
    /// Golden-section polish of each lattice winner.
    pub refine: bool,
}

impl Default for ControlBox {
    fn default() -> Self {
        Self {
            day_range: [5.0, 20.0],
            night_range: [5.0, 10.0],
            day_step: 0.25,
            night_step: 0.25,
            refine: false,
        }
    }
}

impl ControlBox {
    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi], step) in [
            ("day", self.day_range, self.day_step),
            ("night", self.night_range, self.night_step),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Validation(format!("{name} range [{lo}, {hi}] is empty")));
            }
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::Validation(format!("{name} step must be positive")));
            }
        }
        Ok(())
    }

    /// A box holding exactly one setpoint pair.
    pub fn singleton(control: Setpoints) -> Self {
        Self {
            day_range: [control.day, control.day],
            night_range: [control.night, control.night],
            ..Self::default()
        }
    }

    pub fn contains(&self, u: Setpoints) -> bool {
        u.day >= self.day_range[0]
            && u.day <= self.day_range[1]
            && u.night >= self.night_range[0]
            && u.night <= self.night_range[1]
    }

    pub fn day_values(&self) -> Vec<f64> {
        axis(self.day_range, self.day_step)
    }

    pub fn night_values(&self) -> Vec<f64> {
        axis(self.night_range, self.night_step)
    }

    /// Candidate setpoints, ascending in day temperature then night temperature.
    pub fn lattice(&self) -> Vec<Setpoints> {
        let nights = self.night_values();
        self.day_values()
            .into_iter()
            .flat_map(|d| nights.iter().map(move |&n| Setpoints::new(d, n)))
            .collect()
    }
}

fn axis([lo, hi]: [f64; 2], step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|j| (lo + j as f64 * step).min(hi)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    /// Relative variance rate of the crop state, day⁻¹.
    pub sigma2: f64,
    /// Step length, days.
    pub dt: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { sigma2: 1e-4, dt: 1.0 }
    }
}

impl NoiseParams {
    pub fn with_sigma2(sigma2: f64) -> Self {
        Self { sigma2, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Validation(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Validation("dt must be positive".into()));
        }
        Ok(())
    }
}
