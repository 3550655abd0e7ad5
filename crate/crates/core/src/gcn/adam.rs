//! Adam optimizer with bias-corrected first and second moments.

use crate::gcn::{GcnParams, Gradients};

/// Per-parameter moment estimates and the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: GcnParams,
    v: GcnParams,
    step: u64,
}

impl AdamState {
    pub fn new() -> Self {
        Self {
            m: GcnParams::zeros(),
            v: GcnParams::zeros(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One full-batch update of every parameter.
    pub fn update(
        &mut self,
        params: &mut GcnParams,
        grads: &Gradients,
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    ) {
        self.step += 1;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        let apply = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
        };
        for ((p, &g), (m, v)) in params
            .w1
            .iter_mut()
            .zip(&grads.w1)
            .zip(self.m.w1.iter_mut().zip(self.v.w1.iter_mut()))
        {
            apply(p, g, m, v);
        }
        for ((p, &g), (m, v)) in params
            .b1
            .iter_mut()
            .zip(&grads.b1)
            .zip(self.m.b1.iter_mut().zip(self.v.b1.iter_mut()))
        {
            apply(p, g, m, v);
        }
        for ((p, &g), (m, v)) in params
            .w2
            .iter_mut()
            .zip(&grads.w2)
            .zip(self.m.w2.iter_mut().zip(self.v.w2.iter_mut()))
        {
            apply(p, g, m, v);
        }
        apply(&mut params.b2, grads.b2, &mut self.m.b2, &mut self.v.b2);
    }
}

impl Default for AdamState {
    fn default() -> Self {
        Self::new()
    }
}
