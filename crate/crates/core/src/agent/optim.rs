//! First-order optimizers over flat parameter vectors.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::InvalidInput(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam<S> {
    pub lr: S,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
    m: Vec<S>,
    v: Vec<S>,
    t: i32,
}

impl<S: Scalar> Adam<S> {
    pub fn new(lr: S, n: usize) -> Self {
        Self {
            lr,
            beta1: S::lit(0.9),
            beta2: S::lit(0.999),
            eps: S::lit(1e-8),
            m: vec![S::zero(); n],
            v: vec![S::zero(); n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [S], grads: &[S]) {
        debug_assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let c1 = S::one() - self.beta1.powi(self.t);
        let c2 = S::one() - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (S::one() - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (S::one() - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] = params[i] - self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer<S> {
    Sgd { lr: S },
    Adam(Adam<S>),
}

impl<S: Scalar> Optimizer<S> {
    pub fn new(kind: OptimizerKind, lr: S, n: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(lr, n)),
        }
    }

    pub fn step(&mut self, params: &mut [S], grads: &[S]) {
        match self {
            Optimizer::Sgd { lr } => {
                for (p, &g) in params.iter_mut().zip(grads) {
                    *p = *p - *lr * g;
                }
            }
            Optimizer::Adam(adam) => adam.step(params, grads),
        }
    }
}
