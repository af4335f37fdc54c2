use std::sync::Arc;

use crate::tilecoder::SparseFeatures;

/// Active feature indices of φ(s, a) for every action of one state, stored
/// back to back.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ActionFeatures {
    idx: Vec<usize>,
    ends: Vec<usize>,
}

impl ActionFeatures {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.idx.clear();
        self.ends.clear();
    }

    pub fn push(&mut self, i: usize) {
        self.idx.push(i);
    }

    pub fn extend(&mut self, it: impl IntoIterator<Item = usize>) {
        self.idx.extend(it);
    }

    /// Closes the feature list of the current action.
    pub fn finish_action(&mut self) {
        self.ends.push(self.idx.len());
    }

    pub fn num_actions(&self) -> usize {
        self.ends.len()
    }

    pub fn action(&self, a: usize) -> &[usize] {
        let start = if a == 0 { 0 } else { self.ends[a - 1] };
        &self.idx[start..self.ends[a]]
    }

    pub fn value(&self, weights: &[f64], a: usize) -> f64 {
        self.action(a).iter().map(|&i| weights[i]).sum()
    }

    pub fn values(&self, weights: &[f64]) -> Vec<f64> {
        (0..self.num_actions())
            .map(|a| self.value(weights, a))
            .collect()
    }
}

/// Maps an observation to the active features of every action.
pub trait FeatureMap: Send + Sync {
    type Obs;

    /// Length of the weight vector.
    fn dim(&self) -> usize;

    fn num_actions(&self) -> usize;

    /// Overwrites `out` with one feature list per action.
    fn encode(&self, obs: &Self::Obs, out: &mut ActionFeatures);
}

/// Linear action-value function Q(s, a) = θ · φ(s, a).
#[derive(Debug)]
pub struct LinearQ<F> {
    pub theta: Vec<f64>,
    features: Arc<F>,
}

impl<F> Clone for LinearQ<F> {
    fn clone(&self) -> Self {
        LinearQ {
            theta: self.theta.clone(),
            features: Arc::clone(&self.features),
        }
    }
}

impl<F: FeatureMap> LinearQ<F> {
    /// All-zero weights.
    pub fn new(features: Arc<F>) -> Self {
        let theta = vec![0.0; features.dim()];
        LinearQ { theta, features }
    }

    /// Panics if `theta` does not match the feature dimension.
    pub fn with_theta(features: Arc<F>, theta: Vec<f64>) -> Self {
        assert_eq!(theta.len(), features.dim(), "weight vector length");
        LinearQ { theta, features }
    }

    pub fn features(&self) -> &Arc<F> {
        &self.features
    }

    pub fn num_actions(&self) -> usize {
        self.features.num_actions()
    }

    pub fn encode(&self, obs: &F::Obs) -> ActionFeatures {
        let mut out = ActionFeatures::new();
        self.features.encode(obs, &mut out);
        out
    }

    pub fn q_values(&self, obs: &F::Obs) -> Vec<f64> {
        self.encode(obs).values(&self.theta)
    }

    pub fn reset(&mut self) {
        self.theta.iter_mut().for_each(|w| *w = 0.0);
    }
}

/// One weight per (state, action): Q is a lookup table stored in θ.
#[derive(Clone, Debug)]
pub struct OneHot {
    pub states: usize,
    pub actions: usize,
}

impl FeatureMap for OneHot {
    type Obs = usize;

    fn dim(&self) -> usize {
        self.states * self.actions
    }

    fn num_actions(&self) -> usize {
        self.actions
    }

    fn encode(&self, &s: &usize, out: &mut ActionFeatures) {
        assert!(s < self.states, "state {s} out of range");
        out.clear();
        for a in 0..self.actions {
            out.push(s * self.actions + a);
            out.finish_action();
        }
    }
}

/// Action-independent state features, copied once per action into
/// separate weight blocks: φ(s, a) = φ(s) shifted by `a * dim(φ)`.
#[derive(Clone, Debug)]
pub struct ActionTiled {
    pub state_dim: usize,
    pub actions: usize,
}

impl FeatureMap for ActionTiled {
    type Obs = SparseFeatures;

    fn dim(&self) -> usize {
        self.state_dim * self.actions
    }

    fn num_actions(&self) -> usize {
        self.actions
    }

    fn encode(&self, obs: &SparseFeatures, out: &mut ActionFeatures) {
        assert_eq!(obs.len(), self.state_dim, "state feature length");
        out.clear();
        for a in 0..self.actions {
            let base = a * self.state_dim;
            out.extend(obs.active().iter().map(|&i| base + i));
            out.finish_action();
        }
    }
}
