//! Stochastic dynamic programming for greenhouse lettuce temperature setpoints.
//!
//! The crop state is the structural dry weight of the canopy (kg m⁻²). Each
//! day the grower picks a day and a night temperature setpoint; the crop
//! grows according to a photosynthesis and respiration model, heating costs
//! follow from a static heat balance of the greenhouse, and the crop earns
//! revenue at harvest only if its weight lies in the marketable band.

pub mod controllers;
pub mod crop;
pub mod economics;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod scenario;
pub mod sim;
pub mod weather;

pub use error::{Error, Result};
pub use scenario::Scenario;
