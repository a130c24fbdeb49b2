use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bias-corrected Adam over a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        AdamState {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn with_defaults(n_params: usize) -> Self {
        Self::new(n_params, 1e-3, 0.9, 0.999, 1e-8)
    }

    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::domain(format!(
                "Adam state holds {} moments, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut a = AdamState::with_defaults(3);
        let mut p = vec![1.0, -2.0, 0.5];
        a.update(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
        assert_eq!(a.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut a = AdamState::with_defaults(4);
        let g = [0.3, -7.0, 1e-3, -2.5];
        let mut p = vec![0.0; 4];
        a.update(&mut p, &g).unwrap();
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
        for (pi, gi) in p.iter().zip(g) {
            let want = -1e-3 * gi.signum();
            assert!((pi - want).abs() < 1e-3 * 1e-8 / gi.abs() + 1e-18, "{pi} vs {want}");
        }
    }

    #[test]
    fn zero_learning_rate_is_inert() {
        let mut a = AdamState::new(2, 0.0, 0.9, 0.999, 1e-8);
        let mut p = vec![1.0, 2.0];
        for _ in 0..5 {
            a.update(&mut p, &[0.4, -0.1]).unwrap();
        }
        assert_eq!(p, vec![1.0, 2.0]);
    }

    #[test]
    fn shape_mismatch() {
        let mut a = AdamState::with_defaults(2);
        assert!(a.update(&mut [0.0; 3], &[0.0; 3]).is_err());
    }
}
