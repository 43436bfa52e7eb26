//! Small fully connected network with hand-written reverse mode.
//!
//! Parameters live in one flat vector, layer by layer: the weight matrix
//! (row-major, `outputs x inputs`) followed by the bias.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
}

impl Activation {
    fn apply<S: Scalar>(self, z: S) -> S {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activated output.
    fn derivative_from_output<S: Scalar>(self, a: S) -> S {
        match self {
            Activation::Identity => S::one(),
            Activation::Tanh => S::one() - a * a,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Activation::Identity),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidInput(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<S> {
    sizes: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<S>,
}

/// Per-layer inputs and activated outputs of a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<S> {
    inputs: Vec<Vec<S>>,
    outputs: Vec<Vec<S>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Backward<S> {
    /// Gradient w.r.t. the flat parameter vector.
    pub params: Vec<S>,
    /// Gradient w.r.t. the network input.
    pub input: Vec<S>,
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl<S: Scalar> Mlp<S> {
    /// All-zero network. `activations` has one entry per layer.
    pub fn zeros(sizes: &[usize], activations: &[Activation]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidInput(format!("invalid layer sizes {sizes:?}")));
        }
        if activations.len() != sizes.len() - 1 {
            return Err(Error::InvalidInput(format!(
                "{} activations for {} layers",
                activations.len(),
                sizes.len() - 1
            )));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            activations: activations.to_vec(),
            params: vec![S::zero(); param_count(sizes)],
        })
    }

    /// Glorot-uniform weights, zero biases; the last layer's weights are
    /// multiplied by `output_gain`.
    pub fn glorot<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        output_gain: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let layers = sizes.len().saturating_sub(1);
        let mut activations = vec![hidden; layers];
        if let Some(last) = activations.last_mut() {
            *last = output;
        }
        let mut net = Self::zeros(sizes, &activations)?;
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            let gain = if l + 1 == layers { output_gain } else { 1.0 };
            for p in &mut net.params[offset..offset + n_in * n_out] {
                *p = S::lit(gain * rng.random_range(-limit..=limit));
            }
            offset += n_in * n_out + n_out;
        }
        Ok(net)
    }

    pub fn from_parts(sizes: Vec<usize>, activations: Vec<Activation>, params: Vec<S>) -> Result<Self> {
        let mut net = Self::zeros(&sizes, &activations)?;
        if params.len() != net.params.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("network parameters must be finite".into()));
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn params(&self) -> &[S] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [S] {
        &mut self.params
    }

    pub fn input_size(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.sizes.last().expect("at least two sizes")
    }

    fn layer_offsets(&self, l: usize) -> (usize, usize, usize, usize) {
        let offset: usize = self.sizes[..l + 1]
            .windows(2)
            .map(|w| w[1] * w[0] + w[1])
            .sum();
        let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
        (offset, offset + n_in * n_out, n_in, n_out)
    }

    pub fn forward(&self, input: &[S]) -> Result<(Vec<S>, ForwardCache<S>)> {
        if input.len() != self.input_size() {
            return Err(Error::InvalidInput(format!(
                "network expects {} inputs, got {}",
                self.input_size(),
                input.len()
            )));
        }
        let layers = self.activations.len();
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(layers),
            outputs: Vec::with_capacity(layers),
        };
        let mut x = input.to_vec();
        for l in 0..layers {
            let (w0, b0, n_in, n_out) = self.layer_offsets(l);
            let act = self.activations[l];
            let w = &self.params[w0..w0 + n_in * n_out];
            let bias = &self.params[b0..b0 + n_out];
            let y: Vec<S> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    let z = row.iter().zip(&x).fold(bias[o], |acc, (&wi, &xi)| acc + wi * xi);
                    act.apply(z)
                })
                .collect();
            cache.inputs.push(std::mem::replace(&mut x, y.clone()));
            cache.outputs.push(y);
        }
        Ok((x, cache))
    }

    /// Convenience forward without the cache.
    pub fn eval(&self, input: &[S]) -> Result<Vec<S>> {
        Ok(self.forward(input)?.0)
    }

    pub fn backward(&self, cache: &ForwardCache<S>, output_grad: &[S]) -> Result<Backward<S>> {
        let layers = self.activations.len();
        if cache.inputs.len() != layers || output_grad.len() != self.output_size() {
            return Err(Error::InvalidInput("backward: cache or gradient shape mismatch".into()));
        }
        let mut grads = vec![S::zero(); self.params.len()];
        let mut g = output_grad.to_vec();
        for l in (0..layers).rev() {
            let (w0, b0, n_in, n_out) = self.layer_offsets(l);
            let act = self.activations[l];
            let x = &cache.inputs[l];
            let a = &cache.outputs[l];
            if x.len() != n_in || a.len() != n_out {
                return Err(Error::InvalidInput("backward: cache does not match network".into()));
            }
            let gz: Vec<S> = (0..n_out)
                .map(|o| g[o] * act.derivative_from_output(a[o]))
                .collect();
            let mut g_in = vec![S::zero(); n_in];
            for o in 0..n_out {
                grads[b0 + o] = gz[o];
                let row = w0 + o * n_in;
                for i in 0..n_in {
                    grads[row + i] = gz[o] * x[i];
                    g_in[i] = g_in[i] + self.params[row + i] * gz[o];
                }
            }
            g = g_in;
        }
        Ok(Backward {
            params: grads,
            input: g,
        })
    }
}
