use crate::error::{Error, Result};
use crate::tensor::{ParamId, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction. Moment buffers mirror the registered parameter
/// set exactly; the step counter increases by one per update.
#[derive(Debug, Clone)]
pub struct AdamState {
    cfg: AdamConfig,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    steps: u64,
}

impl AdamState {
    pub fn new(cfg: AdamConfig, params: &ParamSet) -> Self {
        let m: Vec<Vec<f32>> = params.iter().map(|(_, _, t)| vec![0.0; t.numel()]).collect();
        let v = m.clone();
        AdamState { cfg, m, v, steps: 0 }
    }

    /// Restores state saved by [`AdamState::moments`]; buffer lengths must
    /// match the parameter set.
    pub fn from_moments(
        cfg: AdamConfig,
        params: &ParamSet,
        moments: Vec<(Vec<f32>, Vec<f32>)>,
        steps: u64,
    ) -> Result<Self> {
        if moments.len() != params.len() {
            return Err(Error::InvalidState(format!(
                "adam restore: {} moment pairs for {} parameter groups",
                moments.len(),
                params.len()
            )));
        }
        let mut m = Vec::with_capacity(moments.len());
        let mut v = Vec::with_capacity(moments.len());
        for ((mi, vi), (_, name, t)) in moments.into_iter().zip(params.iter()) {
            if mi.len() != t.numel() || vi.len() != t.numel() {
                return Err(Error::InvalidState(format!(
                    "adam restore: moment size mismatch for group {:?}",
                    name
                )));
            }
            m.push(mi);
            v.push(vi);
        }
        Ok(AdamState { cfg, m, v, steps })
    }

    pub fn config(&self) -> AdamConfig {
        self.cfg
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// First and second moment buffers for one parameter group.
    pub fn moments(&self, id: ParamId) -> (&[f32], &[f32]) {
        (&self.m[id.0], &self.v[id.0])
    }

    /// Applies one update from the accumulated `grad` fields, then zeroes
    /// them. Every registered parameter must have a gradient.
    pub fn step(&mut self, params: &mut ParamSet) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::InvalidState(format!(
                "adam: optimizer tracks {} groups, parameter set has {}",
                self.m.len(),
                params.len()
            )));
        }
        for (id, name, t) in params.iter() {
            match &t.grad {
                Some(g) if g.len() == t.numel() => {}
                Some(_) => {
                    return Err(Error::InvalidState(format!(
                        "adam: gradient shape mismatch for group {:?}",
                        name
                    )))
                }
                None => {
                    return Err(Error::InvalidState(format!(
                        "adam: missing gradient for group {:?}",
                        name
                    )))
                }
            }
            let _ = id;
        }

        self.steps += 1;
        let bc1 = 1.0 - (self.cfg.beta1 as f64).powi(self.steps as i32);
        let bc2 = 1.0 - (self.cfg.beta2 as f64).powi(self.steps as i32);
        let (b1, b2) = (self.cfg.beta1, self.cfg.beta2);

        for (i, (m, v)) in self.m.iter_mut().zip(&mut self.v).enumerate() {
            let t = params.get_mut(ParamId(i));
            let (data, grad) = t.data_and_grad_mut();
            let grad = grad.as_mut().unwrap();
            for j in 0..data.len() {
                let g = grad[j];
                m[j] = b1 * m[j] + (1.0 - b1) * g;
                v[j] = b2 * v[j] + (1.0 - b2) * g * g;
                let m_hat = m[j] as f64 / bc1;
                let v_hat = v[j] as f64 / bc2;
                data[j] -= (self.cfg.lr as f64 * m_hat / (v_hat.sqrt() + self.cfg.eps as f64)) as f32;
            }
            grad.fill(0.0);
        }
        Ok(())
    }
}
