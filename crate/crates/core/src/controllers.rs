//! The three controllers of the comparison: dynamic stochastic (optimal
//! feedback under the true noise), dynamic deterministic (feedback designed
//! for almost no noise) and static stochastic (one setpoint pair for the
//! whole round, chosen for expected value under the true noise).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{
    backward_induction, evaluate_policy, evaluate_responses, NoiseParams, Policy, Setpoints, Solution, ValueTable,
    TIE_EPS,
};
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    DynamicStochastic,
    DynamicDeterministic,
    StaticStochastic,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [
        ControllerKind::DynamicStochastic,
        ControllerKind::DynamicDeterministic,
        ControllerKind::StaticStochastic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::DynamicStochastic => "dynamic_stochastic",
            ControllerKind::DynamicDeterministic => "dynamic_deterministic",
            ControllerKind::StaticStochastic => "static_stochastic",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ControllerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown controller `{s}`")))
    }
}

/// Noise levels a controller is designed for and evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec {
    pub kind: ControllerKind,
    pub design_sigma2: f64,
    pub eval_sigma2: f64,
}

impl ControllerSpec {
    pub fn for_scenario(kind: ControllerKind, scenario: &Scenario) -> Self {
        let truth = scenario.noise.sigma2;
        let design_sigma2 = match kind {
            ControllerKind::DynamicDeterministic => scenario.deterministic_sigma2,
            _ => truth,
        };
        Self {
            kind,
            design_sigma2,
            eval_sigma2: truth,
        }
    }
}

pub fn design_dynamic_stochastic(scenario: &Scenario) -> Result<Solution> {
    backward_induction(scenario, &scenario.noise)
}

#[derive(Debug, Clone)]
pub struct DeterministicDesign {
    /// Solution under the design noise.
    pub design: Solution,
    /// Value of the designed policy under the scenario's true noise.
    pub evaluated: ValueTable,
}

pub fn design_dynamic_deterministic(scenario: &Scenario) -> Result<DeterministicDesign> {
    let design_noise = NoiseParams {
        sigma2: scenario.deterministic_sigma2,
        ..scenario.noise
    };
    let design = backward_induction(scenario, &design_noise)?;
    let evaluated = evaluate_policy(scenario, &design.policy, &scenario.noise)?;
    Ok(DeterministicDesign { design, evaluated })
}

/// Best constant setpoints for one (start day, start cell).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticDesign {
    pub control: Setpoints,
    pub start_day: usize,
    pub cell: usize,
    /// Expected net revenue from that start under the true noise.
    pub value: f64,
}

impl StaticDesign {
    pub fn policy(&self, scenario: &Scenario) -> Policy {
        Policy::constant(scenario.horizon(), scenario.grid.len(), self.control)
    }
}

/// Evaluate every admissible constant pair of the lattice once and return,
/// for each `(start_day, cell)` query, the pair with the highest value.
/// Ties go to the earlier lattice pair.
pub fn static_search(scenario: &Scenario, queries: &[(usize, usize)]) -> Result<Vec<StaticDesign>> {
    for &(k, i) in queries {
        if k >= scenario.horizon() || i >= scenario.grid.len() {
            return Err(Error::Dimension(format!("static query ({k}, {i}) outside the value table")));
        }
    }
    let lattice = scenario.controls.lattice();
    let terminal = scenario.terminal_values();
    let n = scenario.grid.len();
    let scored: Vec<Option<Vec<f64>>> = lattice
        .par_iter()
        .map(|&u| {
            let responses = (0..scenario.horizon())
                .map(|k| scenario.response(k, u).map(|r| vec![r; n]))
                .collect::<Result<Vec<_>>>()
                .ok()?;
            let table = evaluate_responses(scenario, &responses, &scenario.noise, terminal.clone());
            Some(queries.iter().map(|&(k, i)| table.get(k, i)).collect())
        })
        .collect();

    queries
        .iter()
        .enumerate()
        .map(|(q, &(start_day, cell))| {
            let mut best: Option<StaticDesign> = None;
            for (u, values) in lattice.iter().zip(&scored) {
                let Some(values) = values else { continue };
                let value = values[q];
                if best.map_or(true, |b| value > b.value + TIE_EPS) {
                    best = Some(StaticDesign {
                        control: *u,
                        start_day,
                        cell,
                        value,
                    });
                }
            }
            best.ok_or(Error::NoAdmissibleControl { day: start_day, cell })
        })
        .collect()
}

pub fn design_static_stochastic(scenario: &Scenario, start_day: usize, cell: usize) -> Result<StaticDesign> {
    Ok(static_search(scenario, &[(start_day, cell)])?[0])
}

/// Static design at the start day that gives the highest value from `cell`.
pub fn best_static_over_starts(scenario: &Scenario, cell: usize) -> Result<StaticDesign> {
    let queries: Vec<_> = (0..scenario.horizon()).map(|k| (k, cell)).collect();
    let designs = static_search(scenario, &queries)?;
    Ok(designs
        .into_iter()
        .reduce(|best, d| if d.value > best.value + TIE_EPS { d } else { best })
        .expect("horizon is at least one day"))
}

/// Starting day with the highest value at `cell`; the earliest on ties.
pub fn optimal_start(values: &ValueTable, cell: usize) -> usize {
    let mut best = 0;
    for k in 1..values.horizon() {
        if values.get(k, cell) > values.get(best, cell) + TIE_EPS {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economics::RevenueParams;
    use crate::mdp::{ControlBox, StateGrid};
    use crate::weather::{synthesize_weather, WeatherProfile};

    fn toy() -> Scenario {
        let day = synthesize_weather(&WeatherProfile::early_spring()).unwrap();
        let mut s = Scenario::repeated_day(&day, 8, StateGrid::standard(80).unwrap()).unwrap();
        s.controls = ControlBox {
            day_step: 5.0,
            night_step: 2.5,
            ..ControlBox::default()
        };
        s.revenue = RevenueParams {
            x_target: 0.08,
            margin: 0.015,
            ..RevenueParams::default()
        };
        s.x0 = 0.03;
        s
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ControllerKind::ALL {
            assert_eq!(k.name().parse::<ControllerKind>().unwrap(), k);
        }
        assert!("pid".parse::<ControllerKind>().is_err());
    }

    #[test]
    fn deterministic_spec_uses_reduced_noise() {
        let s = toy();
        let spec = ControllerSpec::for_scenario(ControllerKind::DynamicDeterministic, &s);
        assert_eq!(spec.design_sigma2, 2e-6);
        assert_eq!(spec.eval_sigma2, 1e-4);
    }

    #[test]
    fn deterministic_with_true_design_noise_is_stochastic() {
        let mut s = toy();
        s.deterministic_sigma2 = s.noise.sigma2;
        let det = design_dynamic_deterministic(&s).unwrap();
        let sto = design_dynamic_stochastic(&s).unwrap();
        assert_eq!(det.design.policy, sto.policy);
        for (a, b) in det.evaluated.values.iter().flatten().zip(sto.values.values.iter().flatten()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn static_singleton_box() {
        let mut s = toy();
        s.controls = ControlBox::singleton(Setpoints::new(14.0, 6.0));
        let d = design_static_stochastic(&s, 0, s.x0_cell()).unwrap();
        assert_eq!(d.control, Setpoints::new(14.0, 6.0));
    }

    #[test]
    fn static_value_matches_policy_evaluation_and_is_dominated() {
        let s = toy();
        let cell = s.x0_cell();
        let sto = design_dynamic_stochastic(&s).unwrap();
        for k in [0, 3] {
            let d = design_static_stochastic(&s, k, cell).unwrap();
            let eval = evaluate_policy(&s, &d.policy(&s), &s.noise).unwrap();
            assert!((eval.get(k, cell) - d.value).abs() < 1e-12);
            assert!(d.value <= sto.values.get(k, cell) + 1e-9);
            // Exhaustive check against every lattice pair.
            for u in s.controls.lattice() {
                let v = evaluate_policy(&s, &Policy::constant(8, 80, u), &s.noise).unwrap();
                assert!(v.get(k, cell) <= d.value + TIE_EPS);
            }
        }
    }

    #[test]
    fn multi_query_search_matches_single_queries() {
        let s = toy();
        let cell = s.x0_cell();
        let queries = [(0, cell), (2, cell), (5, cell + 7)];
        let batch = static_search(&s, &queries).unwrap();
        for (d, &(k, i)) in batch.iter().zip(&queries) {
            assert_eq!(*d, design_static_stochastic(&s, k, i).unwrap());
        }
        let best = best_static_over_starts(&s, cell).unwrap();
        for k in 0..s.horizon() {
            assert!(design_static_stochastic(&s, k, cell).unwrap().value <= best.value + TIE_EPS);
        }
        assert!(static_search(&s, &[(8, 0)]).is_err());
    }

    #[test]
    fn optimal_start_ties_and_argmax() {
        let flat = ValueTable {
            values: vec![vec![1.0; 3]; 5],
        };
        assert_eq!(optimal_start(&flat, 0), 0);
        let mut rising = flat.clone();
        rising.values[2][1] = 3.0;
        rising.values[3][1] = 3.0;
        assert_eq!(optimal_start(&rising, 1), 2);
        // Terminal row is not a starting day.
        rising.values[4][1] = 9.0;
        assert_eq!(optimal_start(&rising, 1), 2);
    }

    #[test]
    fn policies_respect_control_box() {
        let s = toy();
        let sto = design_dynamic_stochastic(&s).unwrap();
        let det = design_dynamic_deterministic(&s).unwrap();
        for u in sto.policy.controls.iter().chain(&det.design.policy.controls).flatten() {
            assert!(s.controls.contains(*u));
        }
    }
}
