//! Adam with L2-coupled weight decay.

use serde::{Deserialize, Serialize};

use crate::tensor::ParamSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Added to the gradient as `weight_decay · θ` before the moment updates.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Adam {
    cfg: AdamConfig,
    step: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig, params: &ParamSet) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|(_, t)| vec![0.0; t.numel()]).collect();
        Adam {
            cfg,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    /// One update of every parameter accepted by `trainable`; parameters
    /// without a gradient are left alone. Gradients are not cleared.
    pub fn step(&mut self, params: &mut ParamSet, trainable: impl Fn(&str) -> bool) {
        self.step += 1;
        let c = &self.cfg;
        let bc1 = 1.0 - c.beta1.powi(self.step);
        let bc2 = 1.0 - c.beta2.powi(self.step);
        for (i, (name, t)) in params.iter_mut().enumerate() {
            if !trainable(name) {
                continue;
            }
            let Some(grad) = t.grad().map(|g| g.to_vec()) else {
                continue;
            };
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (j, x) in t.data_mut().iter_mut().enumerate() {
                let g = grad[j] + c.weight_decay * *x;
                m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
                v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                *x -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autograd::Trace;
    use crate::tensor::Tensor;

    #[test]
    fn first_step_moves_by_lr() {
        let mut ps = ParamSet::new();
        ps.insert("x", Tensor::row(vec![1.0])).unwrap();
        let mut tr = Trace::new();
        let x = tr.param(&ps, "x").unwrap();
        let loss = tr.mul(x, x).unwrap();
        tr.backward(loss, &mut ps).unwrap();
        let cfg = AdamConfig {
            lr: 1e-3,
            weight_decay: 0.0,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(cfg, &ps);
        adam.step(&mut ps, |_| true);
        let x = ps.get("x").unwrap().data()[0];
        assert!((x - 0.999).abs() < 1e-9, "{x}");
    }

    #[test]
    fn frozen_params_do_not_move() {
        let mut ps = ParamSet::new();
        ps.insert("a", Tensor::row(vec![1.0])).unwrap();
        ps.insert("b", Tensor::row(vec![1.0])).unwrap();
        let mut tr = Trace::new();
        let a = tr.param(&ps, "a").unwrap();
        let b = tr.param(&ps, "b").unwrap();
        let loss = tr.mul(a, b).unwrap();
        tr.backward(loss, &mut ps).unwrap();
        let mut adam = Adam::new(AdamConfig::default(), &ps);
        adam.step(&mut ps, |n| n == "a");
        assert_ne!(ps.get("a").unwrap().data()[0], 1.0);
        assert_eq!(ps.get("b").unwrap().data()[0], 1.0);
    }
}
