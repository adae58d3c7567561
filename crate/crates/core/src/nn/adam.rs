use serde::{Deserialize, Serialize};

use super::{GradientSet, ParamSet, Tensor};
use crate::error::{Error, Result};

/// Hyperparameters for [`AdamState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub base_lr: f64,
    /// Multiplier applied once every `decay_every` steps.
    pub decay_factor: f64,
    pub decay_every: u64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            base_lr: 5e-4,
            decay_factor: 0.9,
            decay_every: 2000,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.base_lr > 0.0
            && self.decay_factor > 0.0
            && self.decay_factor <= 1.0
            && self.decay_every >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam settings: {self:?}")))
        }
    }

    /// Stepwise-decayed learning rate at (1-based) step `t`.
    pub fn lr_at(&self, t: u64) -> f64 {
        let drops = (t / self.decay_every) as i32;
        self.base_lr * self.decay_factor.powi(drops)
    }
}

/// Adam moments for one parameter set, aligned to its `ParamSet` order.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new<P: ParamSet + ?Sized>(params: &P, config: AdamConfig) -> Self {
        let zeros: Vec<Tensor> = params
            .tensors()
            .into_iter()
            .map(|t| Tensor::zeros(t.shape()))
            .collect();
        Self {
            config,
            first_moment: zeros.clone(),
            second_moment: zeros,
            step_count: 0,
        }
    }

    /// One bias-corrected Adam update. Non-finite gradients abort before any
    /// parameter is touched.
    pub fn step<P: ParamSet + ?Sized>(&mut self, params: &mut P, grads: &GradientSet) -> Result<()> {
        grads.check_mirrors(params)?;
        if self.first_moment.len() != grads.tensors.len() {
            return Err(Error::invalid("optimizer state does not match parameter set"));
        }
        for (i, g) in grads.tensors.iter().enumerate() {
            if !g.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite gradient in parameter tensor {} at step {}",
                    params.names()[i],
                    self.step_count + 1
                )));
            }
        }

        self.step_count += 1;
        let t = self.step_count;
        let AdamConfig {
            beta1,
            beta2,
            epsilon,
            ..
        } = self.config;
        let lr = self.config.lr_at(t);
        let bc1 = 1.0 - beta1.powi(t as i32);
        let bc2 = 1.0 - beta2.powi(t as i32);

        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(&grads.tensors)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for (((pv, &gv), mv), vv) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mv = beta1 * *mv + (1.0 - beta1) * gv;
                *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
                let m_hat = *mv / bc1;
                let v_hat = *vv / bc2;
                *pv -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
