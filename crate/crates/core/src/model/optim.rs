use super::encoder::Gradients;
use super::tensor::{Scalar, Tensor};

/// Cosine decay from `base_lr` at step 0 towards 0 at `total_steps`.
pub fn cosine_lr(base_lr: f64, step: usize, total_steps: usize) -> f64 {
    if total_steps == 0 {
        return base_lr;
    }
    let progress = (step as f64 / total_steps as f64).min(1.0);
    0.5 * base_lr * (1.0 + (std::f64::consts::PI * progress).cos())
}

/// SGD with heavy-ball momentum: `v = mu * v + g + wd * p`, `p -= lr * v`.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Vec<Vec<T>>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(momentum: f64, weight_decay: f64) -> Self {
        Self {
            momentum,
            weight_decay,
            velocity: Vec::new(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut Tensor<T>>, grads: &Gradients<T>, lr: f64) {
        if self.velocity.is_empty() {
            self.velocity = grads.iter().map(|g| vec![T::ZERO; g.len()]).collect();
        }
        let mu = T::from_f64(self.momentum);
        let wd = T::from_f64(self.weight_decay);
        let lr = T::from_f64(lr);
        for ((p, g), v) in params.into_iter().zip(grads).zip(&mut self.velocity) {
            for ((pv, &gv), vv) in p.data.iter_mut().zip(&g.data).zip(v.iter_mut()) {
                let mut d = gv;
                if self.weight_decay != 0.0 {
                    d += wd * *pv;
                }
                *vv = mu * *vv + d;
                *pv -= lr * *vv;
            }
        }
    }
}
