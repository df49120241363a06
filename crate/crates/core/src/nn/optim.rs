use super::{expect_dims, NnError, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Per-parameter first/second moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl AdamState {
    pub fn new<'a>(config: AdamConfig, params: impl IntoIterator<Item = &'a Tensor>) -> Result<Self> {
        let mut first = Vec::new();
        for p in params {
            first.push(Tensor::zeros(p.dims())?);
        }
        let second = first.clone();
        Ok(AdamState { config, step: 0, first, second })
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update applied in place.
pub fn adam_step(params: &mut [&mut Tensor], grads: &[&Tensor], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first.len() {
        return Err(NnError::ShapeMismatch {
            what: "adam parameter count",
            expected: vec![state.first.len()],
            got: vec![params.len(), grads.len()],
        });
    }
    for ((p, g), m) in params.iter().zip(grads).zip(&state.first) {
        expect_dims("adam gradient", g.dims(), p.dims())?;
        expect_dims("adam moment", m.dims(), p.dims())?;
    }
    state.step += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let t = state.step as i32;
    let c1 = (1.0 - (beta1 as f64).powi(t)) as f32;
    let c2 = (1.0 - (beta2 as f64).powi(t)) as f32;
    for (i, p) in params.iter_mut().enumerate() {
        let g = grads[i].data();
        let m = state.first[i].data_mut();
        let v = state.second[i].data_mut();
        for (((pv, &gv), mv), vv) in p.data_mut().iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *mv = beta1 * *mv + (1.0 - beta1) * gv;
            *vv = beta2 * *vv + (1.0 - beta2) * gv * gv;
            let m_hat = *mv / c1;
            let v_hat = *vv / c2;
            *pv -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grads_leave_params() {
        let mut p = Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let before = p.clone();
        let g = Tensor::zeros(&[3]).unwrap();
        let mut st = AdamState::new(AdamConfig::default(), [&p]).unwrap();
        adam_step(&mut [&mut p], &[&g], &mut st).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.step(), 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
        for g in [0.5f32, 3.0, 1e-3] {
            let mut p = Tensor::from_vec(&[1], vec![1.0]).unwrap();
            let grad = Tensor::from_vec(&[1], vec![g]).unwrap();
            let mut st = AdamState::new(AdamConfig::default(), [&p]).unwrap();
            adam_step(&mut [&mut p], &[&grad], &mut st).unwrap();
            let expected = 1.0 - 1e-3 * g / (g + 1e-8);
            assert!((p.data()[0] - expected).abs() < 1e-6, "g={g}");
        }
    }

    #[test]
    fn deterministic_from_same_state() {
        let p0 = Tensor::from_vec(&[2], vec![0.3, -0.1]).unwrap();
        let g = Tensor::from_vec(&[2], vec![0.2, 0.7]).unwrap();
        let st0 = AdamState::new(AdamConfig::default(), [&p0]).unwrap();
        let run = || {
            let mut p = p0.clone();
            let mut st = st0.clone();
            adam_step(&mut [&mut p], &[&g], &mut st).unwrap();
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = Tensor::zeros(&[2]).unwrap();
        let g = Tensor::zeros(&[3]).unwrap();
        let mut st = AdamState::new(AdamConfig::default(), [&p]).unwrap();
        assert!(adam_step(&mut [&mut p], &[&g], &mut st).is_err());
    }
}
