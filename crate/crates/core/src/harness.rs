//! Controller comparison and one-parameter sensitivity sweeps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::controllers::{
    best_static_over_starts, design_dynamic_deterministic, design_dynamic_stochastic, optimal_start, static_search,
    ControllerKind, DeterministicDesign, StaticDesign,
};
use crate::error::{Error, Result};
use crate::mdp::{Policy, Setpoints, Solution};
use crate::scenario::Scenario;
use crate::sim::{harvest_stats, point_mass, propagate_density, HarvestSource, HarvestStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerOutcome {
    pub kind: ControllerKind,
    pub start_day: usize,
    /// Expected net revenue from the start, € m⁻².
    pub value: f64,
    pub harvest: HarvestStats,
    /// Setpoints of the static controller.
    pub control: Option<Setpoints>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub x0: f64,
    pub cell: usize,
    /// Distance from `x0` to the grid point it was snapped to, kg m⁻².
    pub snap_distance: f64,
    pub sigma2: f64,
    pub outcomes: Vec<ControllerOutcome>,
    /// Dynamic stochastic value over static value.
    pub static_value_ratio: f64,
    /// Static harvest std over dynamic stochastic harvest std.
    pub static_std_ratio: f64,
    pub deterministic_value_ratio: f64,
    pub deterministic_std_ratio: f64,
}

impl Comparison {
    pub fn outcome(&self, kind: ControllerKind) -> &ControllerOutcome {
        self.outcomes.iter().find(|o| o.kind == kind).expect("all controllers compared")
    }
}

/// Controller designs that do not depend on the start.
#[derive(Debug, Clone, Default)]
struct Designs {
    stochastic: Option<Solution>,
    deterministic: Option<DeterministicDesign>,
    statics: Vec<StaticDesign>,
}

impl Designs {
    fn stochastic(&mut self, s: &Scenario) -> Result<&Solution> {
        if self.stochastic.is_none() {
            self.stochastic = Some(design_dynamic_stochastic(s)?);
        }
        Ok(self.stochastic.as_ref().unwrap())
    }

    fn deterministic(&mut self, s: &Scenario) -> Result<&DeterministicDesign> {
        if self.deterministic.is_none() {
            self.deterministic = Some(design_dynamic_deterministic(s)?);
        }
        Ok(self.deterministic.as_ref().unwrap())
    }
}

/// Evaluate one controller from `cell`, at `start` or at its own best start.
fn assess(
    s: &Scenario,
    designs: &mut Designs,
    kind: ControllerKind,
    cell: usize,
    start: Option<usize>,
) -> Result<ControllerOutcome> {
    if let Some(k) = start {
        if k >= s.horizon() {
            return Err(Error::Validation(format!("start day {k} outside horizon of {} days", s.horizon())));
        }
    }
    let (k, value, policy, control): (usize, f64, Policy, Option<Setpoints>) = match kind {
        ControllerKind::DynamicStochastic => {
            let sol = designs.stochastic(s)?;
            let k = start.unwrap_or_else(|| optimal_start(&sol.values, cell));
            (k, sol.values.get(k, cell), sol.policy.clone(), None)
        }
        ControllerKind::DynamicDeterministic => {
            let det = designs.deterministic(s)?;
            let k = start.unwrap_or_else(|| optimal_start(&det.evaluated, cell));
            (k, det.evaluated.get(k, cell), det.design.policy.clone(), None)
        }
        ControllerKind::StaticStochastic => {
            let cached = designs
                .statics
                .iter()
                .find(|d| d.cell == cell && start.map_or(false, |k| d.start_day == k))
                .copied();
            let d = match (cached, start) {
                (Some(d), _) => d,
                (None, Some(k)) => static_search(s, &[(k, cell)])?[0],
                (None, None) => best_static_over_starts(s, cell)?,
            };
            (d.start_day, d.value, d.policy(s), Some(d.control))
        }
    };
    let density = propagate_density(s, &policy, &s.noise, &point_mass(s.grid.len(), cell), k)?;
    Ok(ControllerOutcome {
        kind,
        start_day: k,
        value,
        harvest: harvest_stats(HarvestSource::Density(&density), s),
        control,
    })
}

/// All three controllers from the scenario's initial weight, each at its own
/// best start unless the scenario fixes the start day.
pub fn run_comparison(scenario: &Scenario) -> Result<Comparison> {
    let cell = scenario.x0_cell();
    let mut designs = Designs::default();
    let outcomes = ControllerKind::ALL
        .iter()
        .map(|&kind| assess(scenario, &mut designs, kind, cell, scenario.start_day))
        .collect::<Result<Vec<_>>>()?;
    let [sto, det, sta] = [&outcomes[0], &outcomes[1], &outcomes[2]];
    Ok(Comparison {
        x0: scenario.x0,
        cell,
        snap_distance: (scenario.grid.x(cell) - scenario.x0).abs(),
        sigma2: scenario.noise.sigma2,
        static_value_ratio: sto.value / sta.value,
        static_std_ratio: sta.harvest.std / sto.harvest.std,
        deterministic_value_ratio: sto.value / det.value,
        deterministic_std_ratio: det.harvest.std / sto.harvest.std,
        outcomes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Sigma2,
    Margin,
    StartDay,
    StartWeight,
}

impl SweepParameter {
    pub const ALL: [SweepParameter; 4] = [
        SweepParameter::Sigma2,
        SweepParameter::Margin,
        SweepParameter::StartDay,
        SweepParameter::StartWeight,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Sigma2 => "sigma2",
            SweepParameter::Margin => "margin",
            SweepParameter::StartDay => "start_day",
            SweepParameter::StartWeight => "start_weight",
        }
    }

    /// Default values in internal units (kg m⁻² for margin and weight).
    pub fn default_values(&self) -> Vec<f64> {
        match self {
            SweepParameter::Sigma2 => vec![1e-6, 1e-5, 1e-4, 5e-4, 1e-3],
            SweepParameter::Margin => vec![0.005, 0.015, 0.05, 0.1, 0.2, 0.3],
            SweepParameter::StartDay => (0..=10).map(f64::from).collect(),
            SweepParameter::StartWeight => vec![0.005, 0.01, 0.02, 0.04, 0.08],
        }
    }

    /// True when values are weights, shown in g m⁻² at the boundary.
    pub fn is_weight(&self) -> bool {
        matches!(self, SweepParameter::Margin | SweepParameter::StartWeight)
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParameter::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown sweep parameter `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub controllers: Vec<ControllerKind>,
}

impl SweepSpec {
    pub fn default_for(parameter: SweepParameter) -> Self {
        Self {
            parameter,
            values: parameter.default_values(),
            controllers: ControllerKind::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Validation("sweep needs at least one value".into()));
        }
        if self.controllers.is_empty() {
            return Err(Error::Validation("sweep needs at least one controller".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("sweep values must be finite".into()));
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Validation("sweep values must be strictly monotone".into()));
        }
        if self.parameter == SweepParameter::StartDay
            && self.values.iter().any(|v| *v < 0.0 || v.fract() != 0.0)
        {
            return Err(Error::Validation("start days must be non-negative integers".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub controller: ControllerKind,
    /// € m⁻²; `None` when the cell failed.
    pub performance: Option<f64>,
    pub start_day: Option<usize>,
    pub harvest: Option<HarvestStats>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn rows_for(&self, value: f64) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.value == value)
    }
}

fn row_from(value: f64, controller: ControllerKind, outcome: std::result::Result<ControllerOutcome, String>) -> SweepRow {
    match outcome {
        Ok(o) => SweepRow {
            value,
            controller,
            performance: Some(o.value),
            start_day: Some(o.start_day),
            harvest: Some(o.harvest),
            error: None,
        },
        Err(e) => SweepRow {
            value,
            controller,
            performance: None,
            start_day: None,
            harvest: None,
            error: Some(e),
        },
    }
}

/// Sweep one parameter of `base`, redesigning the controllers per value where
/// the parameter changes them. Failures become error rows.
pub fn run_sweep(spec: &SweepSpec, base: &Scenario) -> Result<SweepResult> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.values.len() * spec.controllers.len());
    match spec.parameter {
        SweepParameter::Sigma2 | SweepParameter::Margin => {
            for &value in &spec.values {
                let mut s = base.clone();
                let valid = if spec.parameter == SweepParameter::Sigma2 {
                    s.noise.sigma2 = value;
                    s.noise.validate()
                } else {
                    s.revenue.margin = value;
                    s.revenue.validate()
                };
                let cell = s.x0_cell();
                let mut designs = Designs::default();
                for &kind in &spec.controllers {
                    let outcome = match &valid {
                        Ok(()) => assess(&s, &mut designs, kind, cell, None).map_err(|e| e.to_string()),
                        Err(e) => Err(e.to_string()),
                    };
                    rows.push(row_from(value, kind, outcome));
                }
            }
        }
        SweepParameter::StartDay | SweepParameter::StartWeight => {
            let mut designs = Designs::default();
            let grid = &base.grid;
            // Start weights use a fixed start: the scenario's, or the best
            // start of the dynamic stochastic controller from the nominal x0.
            let fixed_day = match (spec.parameter, base.start_day) {
                (SweepParameter::StartWeight, Some(k)) => Some(k),
                (SweepParameter::StartWeight, None) => {
                    Some(optimal_start(&designs.stochastic(base)?.values, base.x0_cell()))
                }
                _ => None,
            };
            let queries: Vec<Result<(usize, usize)>> = spec
                .values
                .iter()
                .map(|&v| match spec.parameter {
                    SweepParameter::StartDay if (v as usize) < base.horizon() => Ok((v as usize, base.x0_cell())),
                    SweepParameter::StartDay => Err(Error::Validation(format!(
                        "start day {v} outside horizon of {} days",
                        base.horizon()
                    ))),
                    _ if v >= grid.x_min() && v <= grid.x_max() => Ok((fixed_day.unwrap(), grid.nearest_cell(v))),
                    _ => Err(Error::Validation(format!("start weight {v} outside the grid range"))),
                })
                .collect();
            if spec.controllers.contains(&ControllerKind::StaticStochastic) {
                let valid: Vec<_> = queries.iter().filter_map(|q| q.as_ref().ok().copied()).collect();
                if !valid.is_empty() {
                    // Leave the cache empty on failure; each row then reports its own error.
                    designs.statics = static_search(base, &valid).unwrap_or_default();
                }
            }
            for (&value, query) in spec.values.iter().zip(&queries) {
                for &kind in &spec.controllers {
                    let outcome = match query {
                        Ok((k, cell)) => assess(base, &mut designs, kind, *cell, Some(*k)).map_err(|e| e.to_string()),
                        Err(e) => Err(e.to_string()),
                    };
                    rows.push(row_from(value, kind, outcome));
                }
            }
        }
    }
    Ok(SweepResult {
        parameter: spec.parameter,
        rows,
    })
}
