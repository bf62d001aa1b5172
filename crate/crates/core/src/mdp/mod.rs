//! Discretized Markov decision process: state grid, Gaussian transition
//! kernel, backward induction and policy evaluation.

mod grid;
mod kernel;
mod solver;

pub use grid::{ControlBox, NoiseParams, Setpoints, StateGrid};
pub use kernel::{transition_row, RowBuffer, TransitionRow};
pub use solver::{
    backward_induction, bellman_step, evaluate_policy, policy_responses, CandidateSet, GrowthTable, Policy,
    Solution, StepResult, ValueTable, TIE_EPS,
};
pub(crate) use solver::evaluate_responses;
