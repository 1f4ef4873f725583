use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::params::{Gradients, ParamStore};
use crate::nn::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lr >= 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("bad optimizer settings {self:?}")))
        }
    }
}

/// First and second moment estimates, one vector per parameter array.
/// Non-trainable arrays keep empty moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(config: AdamConfig, store: &ParamStore<T>) -> Result<Self> {
        config.validate()?;
        let zeros = |a: &crate::nn::ParamArray<T>| if a.trainable { vec![T::zero(); a.len()] } else { Vec::new() };
        Ok(Self {
            config,
            t: 0,
            m: store.arrays().iter().map(zeros).collect(),
            v: store.arrays().iter().map(zeros).collect(),
        })
    }

    /// One update of every trainable array. Non-finite gradients abort the
    /// step before anything is modified.
    pub fn step(&mut self, store: &mut ParamStore<T>, grads: &Gradients<T>) -> Result<()> {
        if grads.values.len() != store.len() || self.m.len() != store.len() {
            return Err(Error::InvalidInput("gradients do not match parameters".into()));
        }
        for (array, g) in store.arrays().iter().zip(&grads.values) {
            if array.trainable && g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of {}", array.name)));
            }
        }
        self.t += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
        let (ob1, ob2) = (T::of(1.0 - c.beta1), T::of(1.0 - c.beta2));
        for (k, array) in store.arrays_mut().iter_mut().enumerate() {
            if !array.trainable {
                continue;
            }
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], &grads.values[k]);
            for i in 0..array.values.len() {
                m[i] = b1 * m[i] + ob1 * g[i];
                v[i] = b2 * v[i] + ob2 * g[i] * g[i];
                let m_hat = m[i].f64() / bc1;
                let v_hat = v[i].f64() / bc2;
                let update = c.lr * m_hat / (v_hat.sqrt() + c.eps);
                array.values[i] -= T::of(update);
            }
        }
        store.bump_generation();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ParamArray;

    fn store() -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.insert(ParamArray::new("w", vec![3], vec![1.0, -2.0, 0.5], true).unwrap()).unwrap();
        s.insert(ParamArray::new("r", vec![1], vec![7.0], false).unwrap()).unwrap();
        s
    }

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        let mut s = store();
        let mut adam = AdamState::new(AdamConfig::with_lr(0.01), &s).unwrap();
        let mut g = Gradients::zeros_like(&s);
        g.values[0] = vec![3.0, -0.2, 0.0];
        g.values[1] = vec![5.0];
        adam.step(&mut s, &g).unwrap();
        let w = s.values("w").unwrap();
        assert!((w[0] - (1.0 - 0.01)).abs() < 1e-8);
        assert!((w[1] - (-2.0 + 0.01)).abs() < 1e-8);
        assert_eq!(w[2], 0.5);
        assert_eq!(s.values("r").unwrap(), &[7.0]);
        assert_eq!(s.generation(), 1);
    }

    #[test]
    fn zero_lr_advances_counter_only() {
        let mut s = store();
        let mut adam = AdamState::new(AdamConfig::with_lr(0.0), &s).unwrap();
        let mut g = Gradients::zeros_like(&s);
        g.values[0] = vec![1.0, 1.0, 1.0];
        adam.step(&mut s, &g).unwrap();
        assert_eq!(adam.t, 1);
        assert_eq!(s.values("w").unwrap(), &[1.0, -2.0, 0.5]);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut s = store();
        let mut adam = AdamState::new(AdamConfig::default(), &s).unwrap();
        let mut g = Gradients::zeros_like(&s);
        g.values[0][1] = f64::NAN;
        assert!(matches!(adam.step(&mut s, &g), Err(Error::NonFinite(_))));
        assert_eq!(adam.t, 0);
        assert_eq!(s.values("w").unwrap(), &[1.0, -2.0, 0.5]);
    }
}
