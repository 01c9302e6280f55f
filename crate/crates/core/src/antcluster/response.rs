//! Response-threshold and pheromone transition functions.

use crate::error::{Error, Result};

/// Threshold constants of the pick and drop response functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams {
    /// Pick threshold constant.
    pub k1: f64,
    /// Drop threshold constant.
    pub k2: f64,
    /// Response steepness.
    pub exponent: u32,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        ThresholdParams { k1: 0.1, k2: 0.3, exponent: 2 }
    }
}

impl ThresholdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1 > 0.0) || !(self.k2 > 0.0) {
            return Err(Error::validation("threshold constants k1 and k2 must be > 0"));
        }
        if self.exponent == 0 {
            return Err(Error::validation("threshold exponent must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PheromoneParams {
    /// Amount laid per ant per step (doubled when laden).
    pub deposit: f64,
    /// Fraction of pheromone lost per step.
    pub evaporation: f64,
    /// Exponent of the transition weight.
    pub sensitivity: f64,
    /// Saturation of the transition weight.
    pub saturation: f64,
}

impl Default for PheromoneParams {
    fn default() -> Self {
        PheromoneParams { deposit: 1.0, evaporation: 0.01, sensitivity: 3.5, saturation: 0.2 }
    }
}

impl PheromoneParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.deposit > 0.0) {
            return Err(Error::validation("pheromone deposit must be > 0"));
        }
        if !(self.evaporation > 0.0 && self.evaporation < 1.0) {
            return Err(Error::validation("evaporation rate must be in (0, 1)"));
        }
        if !(self.sensitivity > 0.0) {
            return Err(Error::validation("pheromone sensitivity must be > 0"));
        }
        if !(self.saturation >= 0.0) {
            return Err(Error::validation("pheromone saturation must be >= 0"));
        }
        Ok(())
    }

    /// Transition weight `(1 + σ / (1 + δσ))^β` of a cell holding `σ`.
    #[inline]
    pub fn weight(&self, sigma: f64) -> f64 {
        (1.0 + sigma / (1.0 + self.saturation * sigma)).powf(self.sensitivity)
    }
}

/// Probability that an unladen ant picks up the item under it. Falls as the
/// neighborhood gets denser and more similar.
pub fn pick_probability(density: f64, similarity: f64, p: &ThresholdParams) -> f64 {
    let k = p.k1;
    ((k / (k + density)) * (k / (k + similarity))).powi(p.exponent as i32)
}

/// Probability that a laden ant drops its item on an empty cell. Rises as the
/// neighborhood gets denser and more similar; zero if either stimulus is.
pub fn drop_probability(density: f64, similarity: f64, p: &ThresholdParams) -> f64 {
    let k = p.k2;
    ((density / (k + density)) * (similarity / (k + similarity))).powi(p.exponent as i32)
}
