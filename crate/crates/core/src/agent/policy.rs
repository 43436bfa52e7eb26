//! Gaussian policy with a tanh squash onto the hour's feasible offsets.

use rand::Rng;
use rand_distr::StandardNormal;

use super::mlp::Mlp;
use crate::error::{Error, Result};
use crate::num::Scalar;

/// Actor: `z ~ N(action_scale * net(s), exp(log_std)^2)`, then squashed.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy<S> {
    pub mean: Mlp<S>,
    pub log_std: S,
    /// Multiplies the network output, so the mean is in percent units.
    pub action_scale: S,
}

/// Saturating map `a = c + h tanh((z - c) / h)` onto `[lo, hi]`, with
/// `c` the midpoint and `h` the half-width. Near `c` it is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squash<S> {
    pub lo: S,
    pub hi: S,
}

impl<S: Scalar> Squash<S> {
    pub fn new(lo: S, hi: S) -> Self {
        Self { lo, hi }
    }

    fn centre(&self) -> S {
        (self.lo + self.hi) / S::lit(2.0)
    }

    fn half_width(&self) -> S {
        (self.hi - self.lo) / S::lit(2.0)
    }

    fn degenerate(&self) -> bool {
        self.half_width() <= S::lit(1e-12)
    }

    pub fn apply(&self, z: S) -> S {
        if self.degenerate() {
            return self.centre();
        }
        let (c, h) = (self.centre(), self.half_width());
        (c + h * ((z - c) / h).tanh()).max(self.lo).min(self.hi)
    }

    /// `log |da/dz|`; zero for a degenerate interval.
    pub fn log_abs_det(&self, z: S) -> S {
        if self.degenerate() {
            return S::zero();
        }
        let u = ((z - self.centre()) / self.half_width()).abs();
        // log(1 - tanh(u)^2) = 2 (log 2 - u - log(1 + exp(-2u)))
        S::lit(2.0) * (S::lit(std::f64::consts::LN_2) - u - (-S::lit(2.0) * u).exp().ln_1p())
    }
}

/// `log N(z; mean, exp(log_std)^2)`.
pub fn gaussian_log_density<S: Scalar>(z: S, mean: S, log_std: S) -> S {
    let std = log_std.exp();
    let u = (z - mean) / std;
    -S::lit(0.5) * u * u - log_std - S::lit(0.5) * S::lit((2.0 * std::f64::consts::PI).ln())
}

/// One-step TD error `r + gamma V(s') [non-terminal] - V(s)`.
pub fn td_advantage<S: Scalar>(reward: S, v_s: S, v_next: S, gamma: S, terminal: bool) -> S {
    let bootstrap = if terminal { S::zero() } else { gamma * v_next };
    reward + bootstrap - v_s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample<S> {
    /// Unsquashed Gaussian draw.
    pub pre_squash: S,
    /// Offset inside the feasible interval.
    pub action: S,
    /// Log-density of `action`, including the squash correction.
    pub log_prob: S,
    pub mean: S,
    pub std: S,
}

/// Gradient of `log N(z; mu(s), sigma)` w.r.t. the policy parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGradient<S> {
    pub mean_params: Vec<S>,
    pub log_std: S,
}

impl<S: Scalar> GaussianPolicy<S> {
    pub fn new(mean: Mlp<S>, log_std: S, action_scale: S) -> Result<Self> {
        if mean.output_size() != 1 {
            return Err(Error::InvalidInput("policy mean network must have one output".into()));
        }
        if !log_std.is_finite() || action_scale.is_nan() || action_scale <= S::zero() {
            return Err(Error::InvalidInput("invalid log_std or action scale".into()));
        }
        Ok(Self {
            mean,
            log_std,
            action_scale,
        })
    }

    pub fn std(&self) -> S {
        self.log_std.exp()
    }

    pub fn mean_of(&self, features: &[S]) -> Result<S> {
        Ok(self.action_scale * self.mean.eval(features)?[0])
    }

    /// Zero-noise action `squash(mu(s))`.
    pub fn deterministic_action(&self, features: &[S], squash: Squash<S>) -> Result<S> {
        Ok(squash.apply(self.mean_of(features)?))
    }

    /// Log-density of a pre-squash value together with its parameter gradient.
    pub fn log_prob_gradient(&self, features: &[S], z: S) -> Result<(S, PolicyGradient<S>)> {
        let (out, cache) = self.mean.forward(features)?;
        let mu = self.action_scale * out[0];
        let std = self.std();
        let u = (z - mu) / std;
        let dlogp_dmu = u / std;
        let back = self.mean.backward(&cache, &[dlogp_dmu * self.action_scale])?;
        Ok((
            gaussian_log_density(z, mu, self.log_std),
            PolicyGradient {
                mean_params: back.params,
                log_std: u * u - S::one(),
            },
        ))
    }
}

pub fn sample_action<S: Scalar, R: Rng + ?Sized>(
    policy: &GaussianPolicy<S>,
    features: &[S],
    squash: Squash<S>,
    rng: &mut R,
) -> Result<ActionSample<S>> {
    let mean = policy.mean_of(features)?;
    let std = policy.std();
    let eps: f64 = rng.sample(StandardNormal);
    let z = mean + std * S::lit(eps);
    let action = squash.apply(z);
    let log_prob = gaussian_log_density(z, mean, policy.log_std) - squash.log_abs_det(z);
    Ok(ActionSample {
        pre_squash: z,
        action,
        log_prob,
        mean,
        std,
    })
}
