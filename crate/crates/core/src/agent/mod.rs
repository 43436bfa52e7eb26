//! One-step TD advantage actor-critic that learns to spoof the reported
//! battery state of charge.
//!
//! Each hour the agent observes `s_k = {b_k, c_k, d_k, p^L_k, p^P_k}` (actual
//! SoC, current-hour cost/difference terms and powers), samples an offset,
//! and receives `r_k = 1000 x` the plant's cost over that hour. Actor and
//! critic are updated online after every step.

pub mod io;
pub mod mlp;
pub mod optim;
pub mod policy;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dispatch::build_cost_diff;
use crate::error::{Error, Result};
use crate::plant::{run_simulation, Attacker, HourContext, MicrogridEnv};
use crate::scenario::{hourly_window, Scenario};
use crate::threat::{apply_fdi, AttackBounds, FdiAction};
use crate::ControllerConfig;

use mlp::{Activation, Mlp};
use optim::{Optimizer, OptimizerKind};
use policy::{sample_action, td_advantage, GaussianPolicy, Squash};

/// Reward multiplier applied to the hourly dollar cost.
pub const REWARD_PER_DOLLAR: f64 = 1000.0;

pub const STATE_DIM: usize = 5;

/// Random sub-streams derived from the run seed.
pub mod streams {
    pub const NETWORK_INIT: u64 = 1;
    pub const TRAINING: u64 = 2;
    pub const EVALUATION: u64 = 3;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    /// Actual state of charge, percent.
    pub soc: f64,
    pub c: f64,
    pub d: f64,
    pub load_kw: f64,
    pub solar_kw: f64,
}

impl AgentState {
    pub fn from_context(ctx: &HourContext<'_>) -> Self {
        Self {
            soc: ctx.soc,
            c: ctx.c,
            d: ctx.d,
            load_kw: ctx.load_kw,
            solar_kw: ctx.solar_kw,
        }
    }
}

/// Multipliers turning an [`AgentState`] into network inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateScales {
    pub soc: f64,
    pub cost: f64,
    pub diff: f64,
    pub power: f64,
}

impl Default for StateScales {
    fn default() -> Self {
        Self {
            soc: 0.01,
            cost: 1.0,
            diff: 1.0,
            power: 0.1,
        }
    }
}

impl StateScales {
    /// `c` and `d` are scaled by the inverse of their largest magnitude over
    /// the first `hours` hours of the scenario.
    pub fn from_scenario(scenario: &Scenario, config: &ControllerConfig, hours: usize) -> Result<Self> {
        let one = ControllerConfig {
            horizon: 1,
            ..*config
        };
        let (mut max_c, mut max_d) = (0.0f64, 0.0f64);
        for k in 0..hours {
            let w = hourly_window(scenario, k % scenario.hours(), 1, config.b_max)?;
            let cd = build_cost_diff(&w, &one)?;
            max_c = max_c.max(cd.c[0].abs());
            max_d = max_d.max(cd.d[0].abs());
        }
        let inv = |m: f64| if m > 0.0 { 1.0 / m } else { 1.0 };
        Ok(Self {
            cost: inv(max_c),
            diff: inv(max_d),
            ..Self::default()
        })
    }

    pub fn features(&self, s: &AgentState) -> [f64; STATE_DIM] {
        [
            s.soc * self.soc,
            s.c * self.cost,
            s.d * self.diff,
            s.load_kw * self.power,
            s.solar_kw * self.power,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub state: AgentState,
    pub features: [f64; STATE_DIM],
    /// Feasible offsets for this hour.
    pub squash: Squash<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub next: Observation,
    pub terminal: bool,
}

/// Episodic environment the actor-critic trains against.
pub trait AttackEnv {
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Observation>;
    fn step(&mut self, action: f64) -> Result<StepOutcome>;
    /// Plant cost of the episode so far in dollars, when the environment has one.
    fn episode_cost(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSoc {
    Fixed(f64),
    /// Uniform over the controller band, drawn per episode.
    Uniform,
}

/// The microgrid closed loop seen from the attacker's side.
pub struct MicrogridAttackEnv<'a> {
    scenario: &'a Scenario,
    config: ControllerConfig,
    bounds: AttackBounds<f64>,
    scales: StateScales,
    steps: usize,
    init: InitSoc,
    env: Option<MicrogridEnv<'a>>,
}

impl<'a> MicrogridAttackEnv<'a> {
    pub fn new(
        scenario: &'a Scenario,
        config: &ControllerConfig,
        bounds: AttackBounds<f64>,
        scales: StateScales,
        steps: usize,
        init: InitSoc,
    ) -> Result<Self> {
        config.validate()?;
        if steps == 0 {
            return Err(Error::InvalidInput("episodes need at least one step".into()));
        }
        Ok(Self {
            scenario,
            config: *config,
            bounds,
            scales,
            steps,
            init,
            env: None,
        })
    }

    fn observe(&mut self) -> Result<Observation> {
        let env = self.env.as_mut().expect("reset before observing");
        let ctx = env.context()?;
        let state = AgentState::from_context(&ctx);
        let (lo, hi) = self.bounds.feasible_interval(state.soc, &self.config);
        Ok(Observation {
            state,
            features: self.scales.features(&state),
            squash: Squash::new(lo, hi),
        })
    }
}

impl AttackEnv for MicrogridAttackEnv<'_> {
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<Observation> {
        let soc = match self.init {
            InitSoc::Fixed(b) => b,
            InitSoc::Uniform => rng.random_range(self.config.b_min..=self.config.b_max),
        };
        self.env = Some(
            MicrogridEnv::new(self.scenario, &self.config, soc, self.steps)?.record_trace(false),
        );
        self.observe()
    }

    fn step(&mut self, action: f64) -> Result<StepOutcome> {
        let env = self
            .env
            .as_mut()
            .ok_or_else(|| Error::InvalidInput("step before reset".into()))?;
        let soc = env.soc();
        let reported = apply_fdi(soc, FdiAction::new(action), &self.bounds, &self.config);
        let out = env.advance(reported)?;
        let terminal = env.is_done();
        let next = self.observe()?;
        Ok(StepOutcome {
            reward: REWARD_PER_DOLLAR * out.cost,
            next,
            terminal,
        })
    }

    fn episode_cost(&self) -> Option<f64> {
        self.env.as_ref().map(|e| e.total_cost())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: AgentState,
    pub features: [f64; STATE_DIM],
    pub action: FdiAction<f64>,
    /// Gaussian draw before squashing.
    pub pre_squash: f64,
    pub log_prob: f64,
    pub reward: f64,
    pub next_state: AgentState,
    pub next_features: [f64; STATE_DIM],
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub episodes: usize,
    /// Hourly steps per episode.
    pub steps: usize,
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub bounds: AttackBounds<f64>,
    pub init_soc: InitSoc,
    pub hidden: Vec<usize>,
    pub log_std_init: f64,
    pub action_scale: f64,
    /// Rewards are multiplied by this before entering the TD error; the
    /// learning curve keeps the unscaled values.
    pub reward_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            steps: 48,
            gamma: 0.99,
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: 7,
            bounds: AttackBounds::full_range(),
            init_soc: InitSoc::Uniform,
            hidden: vec![64, 64],
            log_std_init: 5f64.ln(),
            action_scale: 10.0,
            reward_scale: 1e-3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma > 0.0
            && self.gamma <= 1.0
            && self.actor_lr > 0.0
            && self.critic_lr > 0.0
            && self.steps >= 1
            && self.action_scale > 0.0
            && self.reward_scale > 0.0
            && self.log_std_init.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid training config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub delta: f64,
    pub critic_loss: f64,
    pub actor_loss: f64,
}

/// Gradients of the surrogate loss
/// `-log N(z; mu(s), sigma) * delta + (target - V(s))^2`
/// with `delta` and `target` held constant.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateGradients {
    pub delta: f64,
    pub target: f64,
    /// Mean-network parameters followed by `log_std`.
    pub actor: Vec<f64>,
    pub critic: Vec<f64>,
}

/// Actor, critic and their optimizers.
#[derive(Debug, Clone)]
pub struct Learner {
    pub policy: GaussianPolicy<f64>,
    pub critic: Mlp<f64>,
    actor_opt: Optimizer<f64>,
    critic_opt: Optimizer<f64>,
    pub gamma: f64,
    pub reward_scale: f64,
}

impl Learner {
    pub fn new(
        policy: GaussianPolicy<f64>,
        critic: Mlp<f64>,
        optimizer: OptimizerKind,
        actor_lr: f64,
        critic_lr: f64,
        gamma: f64,
        reward_scale: f64,
    ) -> Result<Self> {
        if critic.output_size() != 1 || critic.input_size() != policy.mean.input_size() {
            return Err(Error::InvalidInput("critic and actor input/output sizes disagree".into()));
        }
        Ok(Self {
            actor_opt: Optimizer::new(optimizer, actor_lr, policy.mean.params().len() + 1),
            critic_opt: Optimizer::new(optimizer, critic_lr, critic.params().len()),
            policy,
            critic,
            gamma,
            reward_scale,
        })
    }

    /// Fresh networks per the training config.
    pub fn from_config(config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(streams::NETWORK_INIT);
        let mut sizes = vec![STATE_DIM];
        sizes.extend(&config.hidden);
        sizes.push(1);
        let mean = Mlp::glorot(&sizes, Activation::Tanh, Activation::Identity, 0.1, &mut rng)?;
        let critic = Mlp::glorot(&sizes, Activation::Tanh, Activation::Identity, 1.0, &mut rng)?;
        let policy = GaussianPolicy::new(mean, config.log_std_init, config.action_scale)?;
        Self::new(
            policy,
            critic,
            config.optimizer,
            config.actor_lr,
            config.critic_lr,
            config.gamma,
            config.reward_scale,
        )
    }

    pub fn value(&self, features: &[f64]) -> Result<f64> {
        Ok(self.critic.eval(features)?[0])
    }

    /// TD error of a transition under the current critic.
    pub fn td_error(&self, tr: &Transition) -> Result<(f64, f64)> {
        let v_s = self.value(&tr.features)?;
        let v_next = self.value(&tr.next_features)?;
        let delta = td_advantage(tr.reward * self.reward_scale, v_s, v_next, self.gamma, tr.terminal);
        Ok((delta, delta + v_s))
    }

    /// Surrogate loss with `delta` and `target` frozen; its parameter gradient
    /// is what [`Learner::update`] follows.
    pub fn surrogate_loss(&self, tr: &Transition, delta: f64, target: f64) -> Result<f64> {
        let mu = self.policy.mean_of(&tr.features)?;
        let logp = policy::gaussian_log_density(tr.pre_squash, mu, self.policy.log_std);
        let v = self.value(&tr.features)?;
        Ok(-logp * delta + (target - v).powi(2))
    }

    pub fn gradients(&self, tr: &Transition) -> Result<UpdateGradients> {
        let (delta, target) = self.td_error(tr)?;
        self.gradients_with(tr, delta, target)
    }

    pub fn gradients_with(&self, tr: &Transition, delta: f64, target: f64) -> Result<UpdateGradients> {
        let (_, pg) = self.policy.log_prob_gradient(&tr.features, tr.pre_squash)?;
        let mut actor: Vec<f64> = pg.mean_params.iter().map(|g| -delta * g).collect();
        actor.push(-delta * pg.log_std);

        let (v, cache) = self.critic.forward(&tr.features)?;
        let critic = self
            .critic
            .backward(&cache, &[-2.0 * (target - v[0])])?
            .params;
        Ok(UpdateGradients {
            delta,
            target,
            actor,
            critic,
        })
    }

    /// One online actor-critic update.
    pub fn update(&mut self, tr: &Transition) -> Result<StepLosses> {
        let grads = self.gradients(tr)?;
        let losses = StepLosses {
            delta: grads.delta,
            critic_loss: grads.delta * grads.delta,
            actor_loss: -tr.log_prob * grads.delta,
        };
        if !(losses.delta.is_finite() && losses.actor_loss.is_finite()) {
            return Err(Error::NonFinite(format!(
                "delta {} actor loss {} (reward {}, state {:?})",
                losses.delta, losses.actor_loss, tr.reward, tr.state
            )));
        }
        if grads.actor.iter().chain(&grads.critic).any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient".into()));
        }

        let mut actor_params = self.policy.mean.params().to_vec();
        actor_params.push(self.policy.log_std);
        self.actor_opt.step(&mut actor_params, &grads.actor);
        self.policy.log_std = actor_params.pop().expect("log_std slot");
        self.policy.mean.params_mut().copy_from_slice(&actor_params);
        self.critic_opt.step(self.critic.params_mut(), &grads.critic);
        Ok(losses)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Cumulative (unscaled) reward per episode.
    pub curve: Vec<f64>,
    /// Largest `|sum r - 1000 cost| / |1000 cost|` over episodes.
    pub ledger_max_rel_err: f64,
}

/// Relative tolerance of the per-episode reward ledger check.
pub const LEDGER_TOLERANCE: f64 = 1e-6;

/// Runs `episodes` episodes with one update per step.
pub fn train_on<E: AttackEnv>(
    env: &mut E,
    learner: &mut Learner,
    episodes: usize,
    seed: u64,
) -> Result<TrainReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(streams::TRAINING);
    let mut curve = Vec::with_capacity(episodes);
    let mut ledger_max: f64 = 0.0;
    for episode in 0..episodes {
        let mut obs = env.reset(&mut rng)?;
        let mut cumulative = 0.0;
        loop {
            let sample = sample_action(&learner.policy, &obs.features, obs.squash, &mut rng)?;
            let out = env.step(sample.action)?;
            cumulative += out.reward;
            let tr = Transition {
                state: obs.state,
                features: obs.features,
                action: FdiAction::new(sample.action),
                pre_squash: sample.pre_squash,
                log_prob: sample.log_prob,
                reward: out.reward,
                next_state: out.next.state,
                next_features: out.next.features,
                terminal: out.terminal,
            };
            learner.update(&tr)?;
            obs = out.next;
            if out.terminal {
                break;
            }
        }
        if let Some(cost) = env.episode_cost() {
            let scaled = REWARD_PER_DOLLAR * cost;
            let err = (cumulative - scaled).abs();
            let rel = if scaled == 0.0 { err } else { err / scaled.abs() };
            if rel > LEDGER_TOLERANCE {
                return Err(Error::Ledger {
                    episode,
                    rewards: cumulative,
                    scaled_cost: scaled,
                });
            }
            ledger_max = ledger_max.max(rel);
        }
        curve.push(cumulative);
    }
    Ok(TrainReport {
        curve,
        ledger_max_rel_err: ledger_max,
    })
}

/// A trained attacker ready for evaluation or saving.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedAgent {
    pub policy: GaussianPolicy<f64>,
    pub critic: Mlp<f64>,
    pub scales: StateScales,
    pub bounds: AttackBounds<f64>,
}

/// Trains an attacker against the microgrid built from `scenario`.
pub fn train(
    scenario: &Scenario,
    plant: &ControllerConfig,
    config: &TrainConfig,
) -> Result<(TrainedAgent, TrainReport)> {
    config.validate()?;
    let scales = StateScales::from_scenario(scenario, plant, config.steps)?;
    let mut env = MicrogridAttackEnv::new(
        scenario,
        plant,
        config.bounds,
        scales,
        config.steps,
        config.init_soc,
    )?;
    let mut learner = Learner::from_config(config)?;
    let report = train_on(&mut env, &mut learner, config.episodes, config.seed)?;
    Ok((
        TrainedAgent {
            policy: learner.policy,
            critic: learner.critic,
            scales,
            bounds: config.bounds,
        },
        report,
    ))
}

/// Attacker driven by a trained policy.
pub struct PolicyAttacker<'a> {
    pub agent: &'a TrainedAgent,
    pub config: ControllerConfig,
    pub rng: ChaCha8Rng,
    pub stochastic: bool,
}

impl Attacker for PolicyAttacker<'_> {
    fn report(&mut self, ctx: &HourContext<'_>) -> Result<f64> {
        let state = AgentState::from_context(ctx);
        let features = self.agent.scales.features(&state);
        let (lo, hi) = self.agent.bounds.feasible_interval(ctx.soc, &self.config);
        let squash = Squash::new(lo, hi);
        let a = if self.stochastic {
            sample_action(&self.agent.policy, &features, squash, &mut self.rng)?.action
        } else {
            self.agent.policy.deterministic_action(&features, squash)?
        };
        Ok(apply_fdi(ctx.soc, FdiAction::new(a), &self.agent.bounds, &self.config))
    }
}

/// One row of an attack evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub init_soc: f64,
    /// `none` or the agent's attack mode.
    pub attack_mode: String,
    pub cost: f64,
    pub cost_increase_pct: f64,
    pub avg_charge: f64,
    pub avg_reported: f64,
}

impl ReportRow {
    pub const CSV_HEADER: &'static str =
        "init_soc,attack_mode,cost,cost_increase_pct,avg_charge,avg_reported";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.init_soc,
            self.attack_mode,
            self.cost,
            self.cost_increase_pct,
            self.avg_charge,
            self.avg_reported
        )
    }
}

pub fn cost_increase_pct(attacked: f64, baseline: f64) -> f64 {
    if attacked == baseline {
        0.0
    } else {
        100.0 * (attacked - baseline) / baseline.abs()
    }
}

/// For each initial SoC: the deterministic no-attack run, then the mean over
/// `runs` stochastic policy rollouts.
pub fn evaluate(
    agent: &TrainedAgent,
    scenario: &Scenario,
    plant: &ControllerConfig,
    init_socs: &[f64],
    runs: usize,
    seed: u64,
) -> Result<Vec<ReportRow>> {
    if runs == 0 {
        return Err(Error::InvalidInput("runs must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(2 * init_socs.len());
    for (cell, &init) in init_socs.iter().enumerate() {
        let base = run_simulation(scenario, plant, init, None)?;
        rows.push(ReportRow {
            init_soc: init,
            attack_mode: "none".into(),
            cost: base.total_cost,
            cost_increase_pct: 0.0,
            avg_charge: base.avg_soc,
            avg_reported: base.avg_reported_soc,
        });

        let results: Vec<Result<(f64, f64, f64)>> = (0..runs)
            .into_par_iter()
            .map(|run| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(streams::EVALUATION + ((cell as u64) << 32) + ((run as u64) << 8));
                let mut attacker = PolicyAttacker {
                    agent,
                    config: *plant,
                    rng,
                    stochastic: true,
                };
                let r = run_simulation(scenario, plant, init, Some(&mut attacker))?;
                Ok((r.total_cost, r.avg_soc, r.avg_reported_soc))
            })
            .collect();
        let (mut cost, mut charge, mut reported) = (0.0, 0.0, 0.0);
        for r in results {
            let (c, a, rep) = r?;
            cost += c;
            charge += a;
            reported += rep;
        }
        let n = runs as f64;
        let cost = cost / n;
        rows.push(ReportRow {
            init_soc: init,
            attack_mode: agent.bounds.mode.name().into(),
            cost,
            cost_increase_pct: cost_increase_pct(cost, base.total_cost),
            avg_charge: charge / n,
            avg_reported: reported / n,
        });
    }
    Ok(rows)
}
