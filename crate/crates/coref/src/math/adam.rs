//! Adam optimizer with bias correction.

use crate::error::{Error, Result};
use crate::math::params::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second-moment accumulators per parameter, in store order.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    pub step: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(store: &ParamStore, hyper: AdamHyper) -> Self {
        let m = store.iter().map(|(_, p)| vec![0.0; p.len()]).collect();
        let v = store.iter().map(|(_, p)| vec![0.0; p.len()]).collect();
        Self {
            m,
            v,
            step: 0,
            hyper,
        }
    }

    /// One Adam update. `grads` is in store order; `None` entries mean the
    /// parameter received no gradient this step (treated as zero: the
    /// parameter is left untouched).
    pub fn step(&mut self, store: &mut ParamStore, grads: &[Option<Vec<f64>>]) -> Result<()> {
        for ((name, p), g) in store.iter().zip(grads) {
            if let Some(g) = g {
                assert_eq!(g.len(), p.len(), "gradient shape mismatch for {name}");
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteGradient(name.to_string()));
                }
            }
        }
        self.step += 1;
        let t = self.step as f64;
        let h = self.hyper;
        let bc1 = 1.0 - h.beta1.powf(t);
        let bc2 = 1.0 - h.beta2.powf(t);
        for (i, (_, p)) in store.iter_mut().enumerate() {
            let Some(g) = &grads[i] else { continue };
            let m = &mut self.m[i];
            let v = &mut self.v[i];
            for j in 0..p.values.len() {
                m[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
                v[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p.values[j] -= h.learning_rate * m_hat / (v_hat.sqrt() + h.epsilon);
            }
        }
        Ok(())
    }
}
