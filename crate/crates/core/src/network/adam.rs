//! Adam optimizer over the network parameter container.

use serde::{Deserialize, Serialize};

use super::{Architecture, Gradients, NetworkParams};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            alpha: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators shaped like the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: NetworkParams,
    v: NetworkParams,
    step: u64,
}

impl AdamState {
    pub fn new(arch: &Architecture) -> Self {
        AdamState {
            m: NetworkParams::zeros(arch),
            v: NetworkParams::zeros(arch),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut NetworkParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &AdamConfig,
) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);

    let mut p = params.slices_mut();
    let g = grads.slices();
    let mut m = state.m.slices_mut();
    let mut v = state.v.slices_mut();
    for i in 0..p.len() {
        let (ps, gs, ms, vs) = (&mut p[i], g[i], &mut m[i], &mut v[i]);
        debug_assert_eq!(ps.len(), gs.len());
        for idx in 0..ps.len() {
            ms[idx] = cfg.beta1 * ms[idx] + (1.0 - cfg.beta1) * gs[idx];
            vs[idx] = cfg.beta2 * vs[idx] + (1.0 - cfg.beta2) * gs[idx] * gs[idx];
            let m_hat = ms[idx] / bc1;
            let v_hat = vs[idx] / bc2;
            ps[idx] -= cfg.alpha * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}
