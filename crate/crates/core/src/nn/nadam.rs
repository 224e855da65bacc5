//! Nesterov-accelerated Adam with Dozat's momentum schedule (the variant
//! shipped by Keras): `μₜ = β₁(1 − ½·0.96^{t·ψ})` warms the momentum up, the
//! first moment is bias-corrected with the running product of the schedule,
//! and the update mixes the corrected gradient with the look-ahead moment.

use super::{Gradients, NeuralNet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NadamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// `ψ` in the momentum schedule.
    pub schedule_decay: f64,
}

impl Default for NadamConfig {
    fn default() -> Self {
        NadamConfig {
            learning_rate: 0.002,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            schedule_decay: 0.004,
        }
    }
}

impl NadamConfig {
    pub fn with_learning_rate(mut self, lr: f64) -> Self {
        self.learning_rate = lr;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::arg("learning rate must be positive"));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::arg("beta1 and beta2 must lie in (0,1)"));
        }
        if !(self.epsilon > 0.0) || !(self.schedule_decay >= 0.0) {
            return Err(Error::arg("epsilon must be positive, schedule decay non-negative"));
        }
        Ok(())
    }
}

/// Per-parameter moments plus the step counter and momentum-schedule product.
#[derive(Clone, Debug, PartialEq)]
pub struct NadamState {
    first: Vec<f64>,
    second: Vec<f64>,
    step: u64,
    schedule_product: f64,
}

impl NadamState {
    pub fn new(net: &NeuralNet) -> Self {
        let n = net.num_params();
        NadamState {
            first: vec![0.0; n],
            second: vec![0.0; n],
            step: 0,
            schedule_product: 1.0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Scalar core shared with tests: updates `params` in place.
    pub fn update<'a>(
        &mut self,
        params: impl Iterator<Item = &'a mut f64>,
        grads: impl Iterator<Item = &'a f64>,
        cfg: &NadamConfig,
    ) {
        self.step += 1;
        let t = self.step as f64;
        let mu_t = cfg.beta1 * (1.0 - 0.5 * 0.96f64.powf(t * cfg.schedule_decay));
        let mu_next = cfg.beta1 * (1.0 - 0.5 * 0.96f64.powf((t + 1.0) * cfg.schedule_decay));
        let prod_t = self.schedule_product * mu_t;
        let prod_next = prod_t * mu_next;
        self.schedule_product = prod_t;
        let v_corr = 1.0 - cfg.beta2.powf(t);

        for (((p, &g), m), v) in params
            .zip(grads)
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let g_hat = g / (1.0 - prod_t);
            let m_hat = *m / (1.0 - prod_next);
            let v_hat = *v / v_corr;
            let m_bar = (1.0 - mu_t) * g_hat + mu_next * m_hat;
            *p -= cfg.learning_rate * m_bar / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// One Nadam update of every weight and threshold of `net`.
pub fn nadam_step(
    net: &mut NeuralNet,
    grads: &Gradients,
    cfg: &NadamConfig,
    state: &mut NadamState,
) -> Result<()> {
    if state.first.len() != net.num_params() {
        return Err(Error::arg("optimizer state does not match the network"));
    }
    state.update(net.params_mut(), grads.iter(), cfg);
    Ok(())
}
