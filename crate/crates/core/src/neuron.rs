//! Leaky integrate-and-fire neuron with current-based delta synapses.
//!
//! One timestep: exact exponential leak `u *= exp(-1/tau_v)`, then the sum of
//! weights of the synapses that spiked this step is added. If `u` exceeds the
//! threshold of 1 the neuron fires once and `u` drops by 1; any residual above
//! the threshold carries over to the next step.

use crate::error::{Error, Result};
use crate::resource::ResourceFunctionConfig;

pub const THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifState {
    pub u: f64,
    tau_v: f64,
    decay: f64,
}

impl LifState {
    pub fn new(tau_v: f64) -> Result<Self> {
        if !(tau_v.is_finite() && tau_v > 0.0) {
            return Err(Error::Config(format!(
                "tau_v must be positive, got {tau_v}"
            )));
        }
        Ok(Self {
            u: 0.0,
            tau_v,
            decay: (-1.0 / tau_v).exp(),
        })
    }

    pub fn tau_v(&self) -> f64 {
        self.tau_v
    }

    /// Per-step multiplicative leak, `exp(-1/tau_v)`.
    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn step(&mut self, input_sum: f64) -> Result<bool> {
        if !input_sum.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite synaptic input {input_sum}"
            )));
        }
        Ok(self.step_unchecked(input_sum))
    }

    #[inline]
    pub(crate) fn step_unchecked(&mut self, input_sum: f64) -> bool {
        let (u, fired) = lif_update(self.u, self.decay, input_sum);
        self.u = u;
        fired
    }
}

/// The pure update rule: returns the new potential and whether it fired.
#[inline]
pub fn lif_update(u: f64, decay: f64, input_sum: f64) -> (f64, bool) {
    let next = u * decay + input_sum;
    if next > THRESHOLD {
        (next - THRESHOLD, true)
    } else {
        (next, false)
    }
}

/// Functional form of [`LifState::step`].
pub fn lif_step(state: LifState, input_sum: f64) -> Result<(LifState, bool)> {
    let mut next = state;
    let fired = next.step(input_sum)?;
    Ok((next, fired))
}

/// Resources and the weights derived from them, one entry per input.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseArray {
    resources: Vec<f64>,
    weights: Vec<f64>,
}

impl SynapseArray {
    pub fn from_resources(resources: Vec<f64>, f: &ResourceFunctionConfig) -> Self {
        let weights = resources.iter().map(|&r| f.weight(r)).collect();
        Self { resources, weights }
    }

    pub fn len(&self) -> usize {
        self.resources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resources.is_empty()
    }

    pub fn resources(&self) -> &[f64] {
        &self.resources
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Adds `delta` to the resource of each listed input and re-derives
    /// those weights.
    pub fn adjust(&mut self, inputs: &[u16], delta: f64, f: &ResourceFunctionConfig) {
        for &i in inputs {
            let i = i as usize;
            self.resources[i] += delta;
            self.weights[i] = f.weight(self.resources[i]);
        }
    }

    pub fn set_resource(&mut self, i: usize, value: f64, f: &ResourceFunctionConfig) {
        self.resources[i] = value;
        self.weights[i] = f.weight(value);
    }

    pub fn rederive(&mut self, f: &ResourceFunctionConfig) {
        for (w, &r) in self.weights.iter_mut().zip(&self.resources) {
            *w = f.weight(r);
        }
    }
}

#[inline]
pub fn weighted_input(synapses: &SynapseArray, active: &[u16]) -> f64 {
    let w = synapses.weights();
    active.iter().map(|&i| w[i as usize]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resource::ResourceKind;
    use proptest::prelude::*;

    fn linear() -> ResourceFunctionConfig {
        ResourceFunctionConfig::new(ResourceKind::Linear, -1.0, 1.0).unwrap()
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let s = LifState::new(5.0).unwrap();
        let (s, fired) = lif_step(s, 0.0).unwrap();
        assert_eq!(s.u, 0.0);
        assert!(!fired);
    }

    #[test]
    fn fires_and_subtracts_one() {
        let (u, fired) = lif_update(0.5, 0.8, 0.7);
        assert!(fired);
        assert!((u - 0.1).abs() < 1e-12);

        let s = LifState::new(5.0).unwrap();
        let (s, fired) = lif_step(s, 1.2).unwrap();
        assert!(fired);
        assert!((s.u - 0.2).abs() < 1e-12);
    }

    #[test]
    fn exactly_threshold_does_not_fire() {
        let (u, fired) = lif_update(0.0, 0.9, 1.0);
        assert!(!fired);
        assert_eq!(u, 1.0);
    }

    #[test]
    fn large_drive_fires_once_and_carries_residual() {
        let (u, fired) = lif_update(0.0, 0.9, 2.5);
        assert!(fired);
        assert_eq!(u, 1.5);
    }

    #[test]
    fn negative_potential_is_not_clamped() {
        let (u, fired) = lif_update(0.2, 0.5, -0.6);
        assert!(!fired);
        assert!((u + 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(LifState::new(0.0).is_err());
        assert!(LifState::new(-1.0).is_err());
        let s = LifState::new(3.0).unwrap();
        assert!(matches!(lif_step(s, f64::NAN), Err(Error::Numeric(_))));
        assert!(matches!(lif_step(s, f64::INFINITY), Err(Error::Numeric(_))));
    }

    #[test]
    fn weighted_input_examples() {
        let f = linear();
        let mut syn = SynapseArray::from_resources(vec![0.1; 784], &f);
        assert_eq!(weighted_input(&syn, &[]), 0.0);
        let twelve: Vec<u16> = (0..12).collect();
        assert!((weighted_input(&syn, &twelve) - 1.2).abs() < 1e-12);
        syn.set_resource(7, 0.3, &f);
        assert_eq!(weighted_input(&syn, &[7]), 0.3);
    }

    #[test]
    fn adjust_keeps_weights_consistent() {
        let f = linear();
        let mut syn = SynapseArray::from_resources(vec![0.0; 4], &f);
        syn.adjust(&[1, 3], 1.5, &f);
        assert_eq!(syn.resources(), &[0.0, 1.5, 0.0, 1.5]);
        assert_eq!(syn.weights(), &[0.0, 1.0, 0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn leak_only_decay_is_exact(u0 in -0.99f64..0.99, tau in 0.5f64..100.0, k in 1usize..60) {
            let mut s = LifState::new(tau).unwrap();
            s.u = u0;
            for _ in 0..k {
                prop_assert!(!s.step(0.0).unwrap());
            }
            let expected = u0 * (-(k as f64) / tau).exp();
            let rel = if expected == 0.0 { s.u.abs() } else { ((s.u - expected) / expected).abs() };
            prop_assert!(rel < 1e-9, "rel err {}", rel);
        }

        #[test]
        fn at_most_one_fire_and_below_threshold(
            u0 in -2.0f64..1.0, tau in 0.5f64..50.0, inputs in proptest::collection::vec(-1.0f64..0.99, 1..30)
        ) {
            // drives below 1 cannot push a sub-threshold potential past 2
            let mut s = LifState::new(tau).unwrap();
            s.u = u0;
            for x in inputs {
                s.step(x).unwrap();
                prop_assert!(s.u <= THRESHOLD);
            }
        }

        #[test]
        fn input_sum_is_additive(
            weights in proptest::collection::vec(-1.0f64..1.0, 784),
            mask in proptest::collection::vec(0u8..3, 784),
        ) {
            let syn = SynapseArray::from_resources(weights, &linear());
            let a: Vec<u16> = (0..784u16).filter(|&i| mask[i as usize] == 1).collect();
            let b: Vec<u16> = (0..784u16).filter(|&i| mask[i as usize] == 2).collect();
            let mut ab: Vec<u16> = a.iter().chain(&b).copied().collect();
            ab.sort_unstable();
            let lhs = weighted_input(&syn, &ab);
            let rhs = weighted_input(&syn, &a) + weighted_input(&syn, &b);
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}
