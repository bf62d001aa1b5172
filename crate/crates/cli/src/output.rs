//! File writers. Numbers use the shortest representation that reads back to
//! the same `f64`, with a decimal point and no grouping.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use greenhouse_sdp::controllers::ControllerKind;
use greenhouse_sdp::harness::{Comparison, SweepResult};
use greenhouse_sdp::mdp::StateGrid;
use greenhouse_sdp::sim::HarvestStats;
use serde::Serialize;

use crate::config::G_PER_KG;

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// One row per grid cell: weight in g m⁻², then `columns[k][i]` for each day `k`.
pub fn write_matrix<F>(path: &Path, grid: &StateGrid, n_cols: usize, cell: F) -> Result<()>
where
    F: Fn(usize, usize) -> f64,
{
    let mut w = create(path)?;
    write!(w, "x_g")?;
    for k in 0..n_cols {
        write!(w, ",day_{k}")?;
    }
    writeln!(w)?;
    for i in 0..grid.len() {
        write!(w, "{}", num(grid.x(i) * G_PER_KG))?;
        for k in 0..n_cols {
            write!(w, ",{}", num(cell(k, i)))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per day, one column per grid cell.
pub fn write_density(path: &Path, grid: &StateGrid, start_day: usize, p: &[Vec<f64>]) -> Result<()> {
    let mut w = create(path)?;
    write!(w, "day")?;
    for i in 0..grid.len() {
        write!(w, ",{}", num(grid.x(i) * G_PER_KG))?;
    }
    writeln!(w)?;
    for (offset, row) in p.iter().enumerate() {
        write!(w, "{}", start_day + offset)?;
        for v in row {
            write!(w, ",{}", num(*v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram(path: &Path, grid: &StateGrid, counts: &[usize]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "x_g,count")?;
    for (i, c) in counts.iter().enumerate() {
        writeln!(w, "{},{c}", num(grid.x(i) * G_PER_KG))?;
    }
    w.flush()?;
    Ok(())
}

/// Harvest statistics with weights in g m⁻².
#[derive(Debug, Clone, Serialize)]
pub struct HarvestOut {
    pub mean_g: f64,
    pub std_g: f64,
    pub p_in_band: f64,
    pub expected_revenue: f64,
    pub expected_cost: f64,
    pub expected_net: f64,
}

impl From<&HarvestStats> for HarvestOut {
    fn from(h: &HarvestStats) -> Self {
        Self {
            mean_g: h.mean * G_PER_KG,
            std_g: h.std * G_PER_KG,
            p_in_band: h.p_in_band,
            expected_revenue: h.expected_revenue,
            expected_cost: h.expected_cost,
            expected_net: h.expected_net,
        }
    }
}

#[derive(Debug, Serialize)]
struct OutcomeOut {
    controller: ControllerKind,
    start_day: usize,
    value: f64,
    harvest: HarvestOut,
    u_day: Option<f64>,
    u_night: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ComparisonOut {
    x0_g: f64,
    x0_cell: usize,
    snap_distance_g: f64,
    sigma2: f64,
    controllers: Vec<OutcomeOut>,
    static_value_ratio: f64,
    static_std_ratio: f64,
    deterministic_value_ratio: f64,
    deterministic_std_ratio: f64,
}

pub const COMPARISON_HEADER: &str = "controller,start_day,value,harvest_mean_g,harvest_std_g,p_in_band,\
expected_revenue,expected_cost,expected_net,u_day,u_night";

pub fn write_comparison(dir: &Path, c: &Comparison) -> Result<()> {
    let controllers: Vec<OutcomeOut> = c
        .outcomes
        .iter()
        .map(|o| OutcomeOut {
            controller: o.kind,
            start_day: o.start_day,
            value: o.value,
            harvest: (&o.harvest).into(),
            u_day: o.control.map(|u| u.day),
            u_night: o.control.map(|u| u.night),
        })
        .collect();

    let mut w = create(&dir.join("comparison.csv"))?;
    writeln!(w, "{COMPARISON_HEADER}")?;
    for o in &controllers {
        let h = &o.harvest;
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            o.controller,
            o.start_day,
            num(o.value),
            num(h.mean_g),
            num(h.std_g),
            num(h.p_in_band),
            num(h.expected_revenue),
            num(h.expected_cost),
            num(h.expected_net),
            opt(o.u_day),
            opt(o.u_night)
        )?;
    }
    w.flush()?;

    write_json(
        &dir.join("comparison.json"),
        &ComparisonOut {
            x0_g: c.x0 * G_PER_KG,
            x0_cell: c.cell,
            snap_distance_g: c.snap_distance * G_PER_KG,
            sigma2: c.sigma2,
            controllers,
            static_value_ratio: c.static_value_ratio,
            static_std_ratio: c.static_std_ratio,
            deterministic_value_ratio: c.deterministic_value_ratio,
            deterministic_std_ratio: c.deterministic_std_ratio,
        },
    )
}

pub const SWEEP_HEADER: &str =
    "parameter,value,controller,performance,start_day,harvest_mean_g,harvest_std_g,p_in_band,error";

#[derive(Debug, Serialize)]
struct SweepRowOut {
    value: f64,
    controller: ControllerKind,
    performance: Option<f64>,
    start_day: Option<usize>,
    harvest: Option<HarvestOut>,
    error: Option<String>,
}

/// Writes `sweep.csv` and `sweep.json`; weight-valued parameters in g m⁻².
pub fn write_sweep(dir: &Path, result: &SweepResult) -> Result<()> {
    let scale = if result.parameter.is_weight() { G_PER_KG } else { 1.0 };
    let rows: Vec<SweepRowOut> = result
        .rows
        .iter()
        .map(|r| SweepRowOut {
            value: r.value * scale,
            controller: r.controller,
            performance: r.performance,
            start_day: r.start_day,
            harvest: r.harvest.as_ref().map(HarvestOut::from),
            error: r.error.clone(),
        })
        .collect();

    let mut w = create(&dir.join("sweep.csv"))?;
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in &rows {
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        // Errors go last and are quoted; embedded quotes are doubled.
        let error = r
            .error
            .as_ref()
            .map(|e| format!("\"{}\"", e.replace('"', "\"\"")))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            result.parameter,
            num(r.value),
            r.controller,
            opt(r.performance),
            r.start_day.map(|k| k.to_string()).unwrap_or_default(),
            opt(r.harvest.as_ref().map(|h| h.mean_g)),
            opt(r.harvest.as_ref().map(|h| h.std_g)),
            opt(r.harvest.as_ref().map(|h| h.p_in_band)),
            error
        )?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct SweepOut<'a> {
        parameter: String,
        rows: &'a [SweepRowOut],
    }
    write_json(
        &dir.join("sweep.json"),
        &SweepOut {
            parameter: result.parameter.to_string(),
            rows: &rows,
        },
    )
}
