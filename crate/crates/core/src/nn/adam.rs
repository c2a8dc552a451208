//! Adam optimizer state and update.

pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update of `params` along `grad` (descent).
    pub fn update(&mut self, params: &mut [f64], grad: &[f64], hp: AdamParams) {
        debug_assert_eq!(params.len(), grad.len());
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - hp.beta1.powi(t);
        let bc2 = 1.0 - hp.beta2.powi(t);
        let step_size = hp.learning_rate / bc1;
        let inv_sqrt_bc2 = 1.0 / bc2.sqrt();
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = hp.beta1 * *m + (1.0 - hp.beta1) * g;
            *v = hp.beta2 * *v + (1.0 - hp.beta2) * g * g;
            *p -= step_size * *m / ((*v).sqrt() * inv_sqrt_bc2 + ADAM_EPSILON);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HP: AdamParams = AdamParams {
        learning_rate: 1e-3,
        beta1: 0.9,
        beta2: 0.999,
    };

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut s = AdamState::new(3);
        let mut p = vec![0.5, -1.0, 2.0];
        let before = p.clone();
        for _ in 0..10 {
            s.update(&mut p, &[0.0; 3], HP);
        }
        assert_eq!(p, before);
        assert_eq!(s.step_count(), 10);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // bias correction makes the first step ±lr regardless of gradient scale
        let mut s = AdamState::new(2);
        let mut p = vec![0.0, 0.0];
        s.update(&mut p, &[3.0, -1e-3], HP);
        assert!((p[0] + 1e-3).abs() < 1e-9);
        assert!((p[1] - 1e-3).abs() < 1e-7);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut s = AdamState::new(1);
        let mut p = vec![4.0];
        let hp = AdamParams {
            learning_rate: 0.05,
            ..HP
        };
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.0)];
            s.update(&mut p, &g, hp);
        }
        assert!((p[0] - 1.0).abs() < 1e-3);
    }
}
