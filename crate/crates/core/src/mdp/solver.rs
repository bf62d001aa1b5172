//! Backward induction over the discretized state and fixed-policy evaluation.

use std::collections::HashMap;

use rayon::prelude::*;

use super::grid::{NoiseParams, Setpoints};
use super::kernel::RowBuffer;
use crate::error::{Error, Result};
use crate::scenario::{ControlResponse, DayForcing, Scenario};

/// Score differences at or below this are ties; the earlier lattice
/// candidate (lower day, then lower night setpoint) wins.
pub const TIE_EPS: f64 = 1e-12;

const GOLDEN_ITERS: usize = 24;

/// Setpoints per day `k` and cell `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub controls: Vec<Vec<Setpoints>>,
}

impl Policy {
    pub fn constant(horizon: usize, n: usize, u: Setpoints) -> Self {
        Self {
            controls: vec![vec![u; n]; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    pub fn get(&self, k: usize, i: usize) -> Setpoints {
        self.controls[k][i]
    }
}

/// Expected net revenue to go, € m⁻², for `k = 0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub values: Vec<Vec<f64>>,
}

impl ValueTable {
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[k][i]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k]
    }
}

/// Growth rate under the optimal policy, kg m⁻² day⁻¹, for `k = 0..T-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthTable {
    pub rates: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub values: ValueTable,
    pub policy: Policy,
    pub growth: GrowthTable,
}

/// Optimal values, controls and growth rates of one day.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub values: Vec<f64>,
    pub controls: Vec<Setpoints>,
    pub growth: Vec<f64>,
}

/// Admissible lattice controls of one weather day, in lattice order.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    controls: Vec<Setpoints>,
    responses: Vec<ControlResponse>,
}

impl CandidateSet {
    pub fn build(scenario: &Scenario, forcing: &DayForcing) -> Self {
        let mut controls = Vec::new();
        let mut responses = Vec::new();
        for u in scenario.controls.lattice() {
            // Controls outside the crop model's domain are not admissible.
            if let Ok(r) = scenario.response_on(forcing, u) {
                controls.push(u);
                responses.push(r);
            }
        }
        Self { controls, responses }
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }
}

/// One step of the discrete Bellman recursion for day `k`.
pub fn bellman_step(scenario: &Scenario, noise: &NoiseParams, k: usize, v_next: &[f64]) -> Result<StepResult> {
    let cands = CandidateSet::build(scenario, scenario.forcing(k));
    step_with(scenario, noise, k, v_next, &cands)
}

fn step_with(
    scenario: &Scenario,
    noise: &NoiseParams,
    k: usize,
    v_next: &[f64],
    cands: &CandidateSet,
) -> Result<StepResult> {
    let grid = &scenario.grid;
    if v_next.len() != grid.len() {
        return Err(Error::Dimension(format!(
            "value row has {} entries, grid has {}",
            v_next.len(),
            grid.len()
        )));
    }
    let forcing = scenario.forcing(k);
    let cells: Vec<(f64, Setpoints, f64)> = (0..grid.len())
        .into_par_iter()
        .map_init(RowBuffer::new, |buf, i| {
            let x = grid.x(i);
            let mut best: Option<(f64, usize)> = None;
            for (c, r) in cands.responses.iter().enumerate() {
                buf.fill(grid, i, r.growth.rate(x), noise);
                let score = buf.expect(v_next) - r.cost * noise.dt;
                if best.map_or(true, |(b, _)| score > b + TIE_EPS) {
                    best = Some((score, c));
                }
            }
            let (score, c) = best.ok_or(Error::NoAdmissibleControl { day: k, cell: i })?;
            let (u, r) = (cands.controls[c], cands.responses[c]);
            if scenario.controls.refine {
                if let Some((s, u, r)) = refine(scenario, noise, forcing, i, v_next, buf, u, score) {
                    return Ok((s, u, r.growth.rate(x)));
                }
            }
            Ok((score, u, r.growth.rate(x)))
        })
        .collect::<Result<_>>()?;

    let mut out = StepResult {
        values: Vec::with_capacity(cells.len()),
        controls: Vec::with_capacity(cells.len()),
        growth: Vec::with_capacity(cells.len()),
    };
    for (v, u, g) in cells {
        out.values.push(v);
        out.controls.push(u);
        out.growth.push(g);
    }
    Ok(out)
}

fn score_of(
    scenario: &Scenario,
    noise: &NoiseParams,
    forcing: &DayForcing,
    i: usize,
    v_next: &[f64],
    buf: &mut RowBuffer,
    u: Setpoints,
) -> Option<(f64, ControlResponse)> {
    let r = scenario.response_on(forcing, u).ok()?;
    buf.fill(&scenario.grid, i, r.growth.rate(scenario.grid.x(i)), noise);
    Some((buf.expect(v_next) - r.cost * noise.dt, r))
}

/// Golden-section search on one axis of the neighbourhood of a lattice
/// winner, day setpoint first, then night. Returns an improvement only.
#[allow(clippy::too_many_arguments)]
fn refine(
    scenario: &Scenario,
    noise: &NoiseParams,
    forcing: &DayForcing,
    i: usize,
    v_next: &[f64],
    buf: &mut RowBuffer,
    start: Setpoints,
    start_score: f64,
) -> Option<(f64, Setpoints, ControlResponse)> {
    let boxc = &scenario.controls;
    let mut u = start;
    let mut best: Option<(f64, Setpoints, ControlResponse)> = None;
    let mut best_score = start_score;
    for axis in 0..2 {
        let (centre, step, [lo, hi]) = if axis == 0 {
            (u.day, boxc.day_step, boxc.day_range)
        } else {
            (u.night, boxc.night_step, boxc.night_range)
        };
        let base = u;
        let set = move |v: f64| {
            if axis == 0 {
                Setpoints::new(v, base.night)
            } else {
                Setpoints::new(base.day, v)
            }
        };
        let mut a = (centre - step).max(lo);
        let mut b = (centre + step).min(hi);
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let eval = |v: f64, buf: &mut RowBuffer| {
            score_of(scenario, noise, forcing, i, v_next, buf, set(v)).map_or(f64::NEG_INFINITY, |(s, _)| s)
        };
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (eval(c, buf), eval(d, buf));
        for _ in 0..GOLDEN_ITERS {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = eval(c, buf);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = eval(d, buf);
            }
        }
        let v = if fc >= fd { c } else { d };
        if let Some((s, r)) = score_of(scenario, noise, forcing, i, v_next, buf, set(v)) {
            if s > best_score + TIE_EPS {
                best_score = s;
                u = set(v);
                best = Some((s, u, r));
            }
        }
    }
    best
}

/// Optimal values, policy and growth for every day, from the terminal
/// revenue backwards under noise level `noise`.
pub fn backward_induction(scenario: &Scenario, noise: &NoiseParams) -> Result<Solution> {
    noise.validate()?;
    let horizon = scenario.horizon();
    let mut cache: Vec<Option<CandidateSet>> = vec![None; scenario.distinct_days()];

    let mut values = vec![Vec::new(); horizon + 1];
    let mut controls = vec![Vec::new(); horizon];
    let mut growth = vec![Vec::new(); horizon];
    values[horizon] = scenario.terminal_values();
    for k in (0..horizon).rev() {
        let id = scenario.weather_id(k);
        let cands = cache[id].get_or_insert_with(|| CandidateSet::build(scenario, scenario.forcing_by_id(id)));
        let step = step_with(scenario, noise, k, &values[k + 1], cands)?;
        values[k] = step.values;
        controls[k] = step.controls;
        growth[k] = step.growth;
    }
    Ok(Solution {
        values: ValueTable { values },
        policy: Policy { controls },
        growth: GrowthTable { rates: growth },
    })
}

/// Growth and cost of a policy at every (day, cell).
pub fn policy_responses(scenario: &Scenario, policy: &Policy) -> Result<Vec<Vec<ControlResponse>>> {
    check_policy(scenario, policy)?;
    let mut cache: HashMap<(usize, (u64, u64)), ControlResponse> = HashMap::new();
    policy
        .controls
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let id = scenario.weather_id(k);
            row.iter()
                .map(|u| {
                    if let Some(r) = cache.get(&(id, u.key())) {
                        return Ok(*r);
                    }
                    let r = scenario.response(k, *u)?;
                    cache.insert((id, u.key()), r);
                    Ok(r)
                })
                .collect()
        })
        .collect()
}

fn check_policy(scenario: &Scenario, policy: &Policy) -> Result<()> {
    if policy.horizon() != scenario.horizon() {
        return Err(Error::Dimension(format!(
            "policy covers {} days, horizon is {}",
            policy.horizon(),
            scenario.horizon()
        )));
    }
    if let Some(row) = policy.controls.iter().find(|r| r.len() != scenario.grid.len()) {
        return Err(Error::Dimension(format!(
            "policy row has {} cells, grid has {}",
            row.len(),
            scenario.grid.len()
        )));
    }
    Ok(())
}

/// Value of a fixed policy when the plant has noise level `noise`.
pub fn evaluate_policy(scenario: &Scenario, policy: &Policy, noise: &NoiseParams) -> Result<ValueTable> {
    noise.validate()?;
    let responses = policy_responses(scenario, policy)?;
    Ok(evaluate_responses(scenario, &responses, noise, scenario.terminal_values()))
}

pub(crate) fn evaluate_responses(
    scenario: &Scenario,
    responses: &[Vec<ControlResponse>],
    noise: &NoiseParams,
    terminal: Vec<f64>,
) -> ValueTable {
    let grid = &scenario.grid;
    let horizon = responses.len();
    let mut values = vec![Vec::new(); horizon + 1];
    values[horizon] = terminal;
    for k in (0..horizon).rev() {
        let next = &values[k + 1];
        let row = &responses[k];
        let current: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map_init(RowBuffer::new, |buf, i| {
                let r = &row[i];
                buf.fill(grid, i, r.growth.rate(grid.x(i)), noise);
                buf.expect(next) - r.cost * noise.dt
            })
            .collect();
        values[k] = current;
    }
    ValueTable { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::economics::RevenueParams;
    use crate::mdp::{ControlBox, StateGrid};
    use crate::weather::{synthesize_weather, HourlyWeather, WeatherDay, WeatherProfile};

    fn small_box() -> ControlBox {
        ControlBox {
            day_range: [5.0, 20.0],
            night_range: [5.0, 10.0],
            day_step: 3.75,
            night_step: 1.25,
            refine: false,
        }
    }

    fn toy(n: usize, horizon: usize) -> Scenario {
        let day = synthesize_weather(&WeatherProfile::early_spring()).unwrap();
        let mut s = Scenario::repeated_day(&day, horizon, StateGrid::standard(n).unwrap()).unwrap();
        s.controls = small_box();
        // Keep the target reachable within a short horizon.
        s.revenue = RevenueParams {
            x_target: 0.12,
            margin: 0.02,
            ..RevenueParams::default()
        };
        s
    }

    /// Dense Gaussian row sampled with a direct exponential at every cell.
    fn dense_row(s: &Scenario, noise: &NoiseParams, i: usize, drift: f64) -> Vec<f64> {
        let x = s.grid.x(i);
        let mean = x + drift * noise.dt;
        let var = noise.sigma2 * x * x * noise.dt;
        let raw: Vec<f64> = (0..s.grid.len())
            .map(|j| (-(s.grid.x(j) - mean).powi(2) / (2.0 * var)).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        if total == 0.0 {
            let mut point = vec![0.0; s.grid.len()];
            point[s.grid.nearest_cell(mean)] = 1.0;
            return point;
        }
        raw.iter().map(|w| w / total).collect()
    }

    #[test]
    fn step_matches_exhaustive_enumeration() {
        let s = toy(60, 6);
        let noise = NoiseParams::default();
        assert_eq!(s.controls.lattice().len(), 25);
        let v_next: Vec<f64> = (0..60).map(|j| s.revenue.revenue(s.grid.x(j)) + 0.01 * j as f64).collect();
        let step = bellman_step(&s, &noise, 0, &v_next).unwrap();
        for i in 0..60 {
            let x = s.grid.x(i);
            let best = s
                .controls
                .lattice()
                .into_iter()
                .map(|u| {
                    let r = s.response(0, u).unwrap();
                    let row = dense_row(&s, &noise, i, r.growth.rate(x));
                    row.iter().zip(&v_next).map(|(p, v)| p * v).sum::<f64>() - r.cost
                })
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((step.values[i] - best).abs() < 1e-12, "cell {i}: {} vs {best}", step.values[i]);
        }
    }

    #[test]
    fn constant_continuation_prefers_lowest_setpoints() {
        let warm = WeatherDay::new(vec![
            HourlyWeather {
                radiation_out: 300.0,
                temp_out: 25.0,
                temp_sky: 15.0,
                wind: 2.0
            };
            24
        ])
        .unwrap();
        let s = Scenario::repeated_day(&warm, 1, StateGrid::standard(40).unwrap()).unwrap();
        let noise = NoiseParams::default();
        let step = bellman_step(&s, &noise, 0, &vec![2.5; 40]).unwrap();
        assert!(step.values.iter().all(|&v| (v - 2.5).abs() < 1e-12));
        assert!(step.controls.iter().all(|&u| u == Setpoints::new(5.0, 5.0)));
    }

    #[test]
    fn singleton_box_fixes_policy() {
        let mut s = toy(30, 3);
        s.controls = ControlBox::singleton(Setpoints::new(12.0, 6.0));
        let sol = backward_induction(&s, &NoiseParams::default()).unwrap();
        assert!(sol.policy.controls.iter().flatten().all(|&u| u == Setpoints::new(12.0, 6.0)));
    }

    #[test]
    fn one_day_horizon_unrolls() {
        let s = toy(40, 1);
        let noise = NoiseParams::default();
        let sol = backward_induction(&s, &noise).unwrap();
        let terminal = s.terminal_values();
        assert_eq!(sol.values.row(1), terminal.as_slice());
        let step = bellman_step(&s, &noise, 0, &terminal).unwrap();
        assert_eq!(sol.values.row(0), step.values.as_slice());
    }

    #[test]
    fn evaluator_reproduces_solver() {
        let s = toy(60, 6);
        let noise = NoiseParams::default();
        let sol = backward_induction(&s, &noise).unwrap();
        let eval = evaluate_policy(&s, &sol.policy, &noise).unwrap();
        for (a, b) in sol.values.values.iter().flatten().zip(eval.values.iter().flatten()) {
            assert!((a - b).abs() < 1e-10);
        }
        for k in 0..6 {
            for i in 0..60 {
                let f = s.forcing(k);
                let u = sol.policy.get(k, i);
                let direct = s.crop.daily_growth(s.grid.x(i), u.day, u.night, &f.weather, &f.summary).unwrap();
                assert!((sol.growth.rates[k][i] - direct).abs() <= 1e-12 * direct.abs().max(1e-6));
            }
        }
    }

    #[test]
    fn optimal_policy_dominates_fixed_policies() {
        let s = toy(60, 6);
        for sigma2 in [1e-4, 1e-3] {
            let noise = NoiseParams::with_sigma2(sigma2);
            let opt = backward_induction(&s, &noise).unwrap();
            let mismatched = backward_induction(&s, &NoiseParams::with_sigma2(2e-6)).unwrap();
            for policy in [
                mismatched.policy,
                Policy::constant(6, 60, Setpoints::new(5.0, 5.0)),
                Policy::constant(6, 60, Setpoints::new(20.0, 10.0)),
            ] {
                let eval = evaluate_policy(&s, &policy, &noise).unwrap();
                for (a, b) in eval.values.iter().flatten().zip(opt.values.values.iter().flatten()) {
                    assert!(*a <= b + 1e-9);
                }
            }
        }
    }

    #[test]
    fn zero_revenue_leaves_only_costs() {
        let mut s = toy(30, 4);
        s.revenue.x_target = 10.0;
        s.revenue.margin = 0.01;
        let noise = NoiseParams::default();
        let eval = evaluate_policy(&s, &Policy::constant(4, 30, Setpoints::new(18.0, 9.0)), &noise).unwrap();
        let daily = s.response(0, Setpoints::new(18.0, 9.0)).unwrap().cost;
        for k in 0..=4 {
            for &v in eval.row(k) {
                assert!(v <= 0.0);
                assert!((v + daily * (4 - k) as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_revenue_is_invariant() {
        let warm = WeatherDay::new(vec![
            HourlyWeather {
                radiation_out: 300.0,
                temp_out: 25.0,
                temp_sky: 15.0,
                wind: 2.0
            };
            24
        ])
        .unwrap();
        let s = Scenario::repeated_day(&warm, 5, StateGrid::standard(30).unwrap()).unwrap();
        let flat = vec![1.0; 30];
        let noise = NoiseParams::default();
        let responses = policy_responses(&s, &Policy::constant(5, 30, Setpoints::new(5.0, 5.0))).unwrap();
        let table = evaluate_responses(&s, &responses, &noise, flat);
        assert!(table.values.iter().flatten().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let s = toy(30, 4);
        let bad = Policy::constant(3, 30, Setpoints::new(5.0, 5.0));
        assert!(matches!(
            evaluate_policy(&s, &bad, &NoiseParams::default()),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            bellman_step(&s, &NoiseParams::default(), 0, &[0.0; 10]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn no_admissible_control_is_reported() {
        // Outdoor temperature above the carboxylation window makes every control fail.
        let hot = WeatherDay::new(vec![
            HourlyWeather {
                radiation_out: 300.0,
                temp_out: 45.0,
                temp_sky: 35.0,
                wind: 2.0
            };
            24
        ])
        .unwrap();
        let s = Scenario::repeated_day(&hot, 2, StateGrid::standard(10).unwrap()).unwrap();
        match backward_induction(&s, &NoiseParams::default()) {
            Err(Error::NoAdmissibleControl { day, cell }) => assert_eq!((day, cell), (1, 0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn refinement_never_loses_value() {
        let mut s = toy(40, 4);
        let noise = NoiseParams::default();
        let lattice = backward_induction(&s, &noise).unwrap();
        s.controls.refine = true;
        let refined = backward_induction(&s, &noise).unwrap();
        for (a, b) in refined.values.values.iter().flatten().zip(lattice.values.values.iter().flatten()) {
            assert!(*a >= b - 1e-9);
        }
        assert!(refined.policy.controls.iter().flatten().all(|&u| s.controls.contains(u)));
    }

    #[test]
    fn solver_is_deterministic() {
        let s = toy(50, 5);
        let noise = NoiseParams::default();
        let a = backward_induction(&s, &noise).unwrap();
        let b = backward_induction(&s, &noise).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.policy, b.policy);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| backward_induction(&s, &noise).unwrap());
        assert_eq!(a.values, c.values);
    }
}
