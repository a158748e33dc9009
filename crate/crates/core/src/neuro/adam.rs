use crate::error::{Error, Result};
use crate::neuro::graph::{Gradients, ParamStore};
use crate::neuro::scalar::Scalar;
use crate::neuro::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Tensor<T>,
    pub v: Tensor<T>,
    pub t: u64,
    pub config: AdamConfig,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(shape: &[usize], config: AdamConfig) -> Self {
        Self {
            m: Tensor::zeros(shape),
            v: Tensor::zeros(shape),
            t: 0,
            config,
        }
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step<T: Scalar>(param: &mut Tensor<T>, grad: &[T], state: &mut AdamState<T>) -> Result<()> {
    if param.len() != grad.len() || state.m.len() != param.len() {
        return Err(Error::dim(
            "adam step",
            param.len(),
            format!("grad {} / state {}", grad.len(), state.m.len()),
        ));
    }
    state.t += 1;
    let c = state.config;
    let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
    let bc1 = T::one() - T::lit(c.beta1.powi(state.t as i32));
    let bc2 = T::one() - T::lit(c.beta2.powi(state.t as i32));
    let (lr, eps) = (T::lit(c.lr), T::lit(c.eps));
    let (m, v) = (state.m.data_mut(), state.v.data_mut());
    for (k, p) in param.data_mut().iter_mut().enumerate() {
        let g = grad[k];
        m[k] = b1 * m[k] + (T::one() - b1) * g;
        v[k] = b2 * v[k] + (T::one() - b2) * g * g;
        let m_hat = m[k] / bc1;
        let v_hat = v[k] / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Adam over every tensor of a parameter store.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    states: Vec<AdamState<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(store: &ParamStore<T>, config: AdamConfig) -> Self {
        Self {
            states: store.iter().map(|(_, t)| AdamState::new(t.shape(), config)).collect(),
        }
    }

    pub fn step(&mut self, store: &mut ParamStore<T>, grads: &Gradients<T>) -> Result<()> {
        for ((p, g), s) in store.tensors_mut().zip(&grads.params).zip(&mut self.states) {
            adam_step(p, g, s)?;
        }
        Ok(())
    }
}
