use super::{NnError, Param, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Steps taken so far; the next update uses `t + 1`.
    pub t: u64,
}

impl Default for Adam {
    fn default() -> Self {
        Self { lr: 0.01, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0 }
    }
}

impl Adam {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }

    /// Advances the step counter; call once per batch before updating params.
    pub fn begin_step(&mut self) {
        self.t += 1;
    }

    pub fn update(&self, p: &mut Param) -> Result<()> {
        adam_step(p, self.lr, self.beta1, self.beta2, self.eps, self.t)
    }
}

/// Bias-corrected Adam update of `p` using its accumulated gradient.
pub fn adam_step(p: &mut Param, lr: f64, beta1: f64, beta2: f64, eps: f64, t: u64) -> Result<()> {
    let n = p.value.len();
    if p.grad.len() != n || p.m.len() != n || p.v.len() != n {
        return Err(NnError::ShapeMismatch { op: "adam", expected: vec![n], got: vec![p.grad.len(), p.m.len(), p.v.len()] });
    }
    let t = t.max(1) as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for i in 0..n {
        let g = p.grad[i];
        p.m[i] = beta1 * p.m[i] + (1.0 - beta1) * g;
        p.v[i] = beta2 * p.v[i] + (1.0 - beta2) * g * g;
        let mhat = p.m[i] / c1;
        let vhat = p.v[i] / c2;
        p.value[i] -= lr * mhat / (vhat.sqrt() + eps);
    }
    Ok(())
}
