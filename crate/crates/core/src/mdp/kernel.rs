//! Gaussian transition rows on the state grid.
//!
//! From cell `i` with drift `f`, the next state is normal with mean
//! `x_i + f dt` and standard deviation `sigma x_i sqrt(dt)`. The density is
//! sampled at the grid points and normalized over the grid, so mass that
//! would fall outside `[x_min, x_max]` is spread proportionally over the
//! remaining cells.
//!
//! Weights are computed relative to the grid point nearest the mean, which
//! therefore always carries weight 1; the row cannot underflow to zero. The
//! row is truncated where the relative weight drops below `TAIL`
//! (about 9 standard deviations).

use super::grid::{NoiseParams, StateGrid};

const TAIL: f64 = 1e-18;
/// Recompute weights directly every this many recurrence steps.
const REANCHOR: usize = 32;
/// Grid spacing in standard deviations beyond which the row is a point mass.
const MAX_STEP: f64 = 1e100;

/// Normalized transition probabilities to cells `start..start + probs.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    pub start: usize,
    pub probs: Vec<f64>,
}

impl TransitionRow {
    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut dense = vec![0.0; n];
        dense[self.start..self.start + self.probs.len()].copy_from_slice(&self.probs);
        dense
    }

    pub fn mean(&self, grid: &StateGrid) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, p)| p * grid.x(self.start + j))
            .sum()
    }
}

/// Unnormalized weights, reusable across calls to avoid allocation.
#[derive(Debug, Default, Clone)]
pub struct RowBuffer {
    weights: Vec<f64>,
    start: usize,
    sum: f64,
}

impl RowBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.sum
    }

    /// Fill with the row for cell `i` under `drift` (kg m⁻² day⁻¹).
    pub fn fill(&mut self, grid: &StateGrid, i: usize, drift: f64, noise: &NoiseParams) {
        let x = grid.x(i);
        let mean = x + drift * noise.dt;
        let sd = x * (noise.sigma2 * noise.dt).sqrt();
        self.weights.clear();

        let centre = grid.nearest_cell(mean);
        let step = grid.dx() / sd;
        if !(sd > 0.0) || !(step < MAX_STEP) || !mean.is_finite() {
            self.start = centre;
            self.weights.push(1.0);
            self.sum = 1.0;
            return;
        }

        let z = |j: usize| (grid.x(j) - mean) / sd;
        let zc = z(centre);
        let zc2 = zc * zc;

        // Downward from the centre, stored reversed then flipped.
        let mut count = 0;
        if centre > 0 {
            let mut j = centre;
            let mut w = 1.0;
            // ratio w(j-1)/w(j) = exp(step z_j - step²/2), shrinking by exp(-step²) per step
            let mut ratio = (step * zc - 0.5 * step * step).exp();
            let shrink = (-step * step).exp();
            while j > 0 {
                j -= 1;
                count += 1;
                if count % REANCHOR == 0 {
                    let zj = z(j);
                    w = (-0.5 * (zj * zj - zc2)).exp();
                    ratio = (step * zj - 0.5 * step * step).exp();
                } else {
                    w *= ratio;
                    ratio *= shrink;
                }
                if w < TAIL {
                    break;
                }
                self.weights.push(w);
            }
        }
        let below = self.weights.len();
        self.weights.reverse();
        self.start = centre - below;
        self.weights.push(1.0);

        if centre + 1 < grid.len() {
            let mut j = centre;
            let mut w = 1.0;
            let mut ratio = (-step * zc - 0.5 * step * step).exp();
            let shrink = (-step * step).exp();
            count = 0;
            while j + 1 < grid.len() {
                j += 1;
                count += 1;
                if count % REANCHOR == 0 {
                    let zj = z(j);
                    w = (-0.5 * (zj * zj - zc2)).exp();
                    ratio = (-step * zj - 0.5 * step * step).exp();
                } else {
                    w *= ratio;
                    ratio *= shrink;
                }
                if w < TAIL {
                    break;
                }
                self.weights.push(w);
            }
        }
        self.sum = self.weights.iter().sum();
    }

    /// Expectation of `values` (indexed by cell) under the filled row.
    pub fn expect(&self, values: &[f64]) -> f64 {
        let slice = &values[self.start..self.start + self.weights.len()];
        let acc: f64 = self.weights.iter().zip(slice).map(|(w, v)| w * v).sum();
        acc / self.sum
    }

    pub fn to_row(&self) -> TransitionRow {
        TransitionRow {
            start: self.start,
            probs: self.weights.iter().map(|w| w / self.sum).collect(),
        }
    }
}

pub fn transition_row(grid: &StateGrid, i: usize, drift: f64, noise: &NoiseParams) -> TransitionRow {
    let mut buf = RowBuffer::new();
    buf.fill(grid, i, drift, noise);
    buf.to_row()
}
