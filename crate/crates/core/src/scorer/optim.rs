use super::{Gradients, ScorerError, ScoringModel, TrainConfig};

/// Linear warmup from 0 to `peak_lr`, then linear decay to 0 at `total_steps`.
pub fn lr_at(step: u64, config: &TrainConfig) -> Result<f64, ScorerError> {
    let (warmup, total) = (config.warmup_steps, config.total_steps);
    if step > total {
        return Err(ScorerError::StepOutOfRange { step, total });
    }
    let lr = if step < warmup {
        config.peak_lr * step as f64 / warmup as f64
    } else if total == warmup {
        config.peak_lr
    } else {
        config.peak_lr * (total - step) as f64 / (total - warmup) as f64
    };
    Ok(lr)
}

/// Adam with bias correction; beta1 0.9, beta2 0.999, eps 1e-8, no weight decay.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(model: &ScoringModel) -> Self {
        let n = model.w_txt.len() + model.w_img.len() + 1;
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn step(&mut self, model: &mut ScoringModel, grads: &Gradients, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let params = model
            .w_txt
            .iter_mut()
            .chain(model.w_img.iter_mut())
            .chain(std::iter::once(&mut model.log_t));
        let grads = grads
            .w_txt
            .iter()
            .chain(&grads.w_img)
            .chain(std::iter::once(&grads.log_t));
        for (((p, g), m), v) in params.zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
