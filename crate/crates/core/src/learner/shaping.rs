use super::{ActionFeatures, FeatureMap, LinearQ};
use crate::{Error, Result};

/// Potential-based shaping built from learned source value functions:
/// Φ(s, a) is the sum of the source Q-functions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShapingState {
    potentials: Vec<Vec<f64>>,
    summed: Vec<f64>,
}

impl ShapingState {
    pub fn new(dim: usize) -> Self {
        ShapingState {
            potentials: Vec::new(),
            summed: vec![0.0; dim],
        }
    }

    pub fn potentials(&self) -> &[Vec<f64>] {
        &self.potentials
    }

    /// Elementwise sum of every potential's weights.
    pub fn summed_potential(&self) -> &[f64] {
        &self.summed
    }

    pub fn len(&self) -> usize {
        self.potentials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potentials.is_empty()
    }

    /// Freezes a copy of `learned` as one more potential.
    pub fn add_source_potential<F: FeatureMap>(&mut self, learned: &LinearQ<F>) -> Result<()> {
        if learned.theta.len() != self.summed.len() {
            return Err(Error::config(format!(
                "potential has {} weights, shaping state expects {}",
                learned.theta.len(),
                self.summed.len()
            )));
        }
        for (s, w) in self.summed.iter_mut().zip(&learned.theta) {
            *s += w;
        }
        self.potentials.push(learned.theta.clone());
        Ok(())
    }

    pub fn potential(&self, features: &ActionFeatures, a: usize) -> f64 {
        features.value(&self.summed, a)
    }
}
