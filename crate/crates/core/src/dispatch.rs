//! Hourly battery dispatch controller.
//!
//! Each step the controller receives a forecast window, folds it into per-step
//! cost and SoC-rate terms, and solves the binary dispatch problem
//!
//! ```text
//! min  sum_t (1 - y_t) c_t
//! s.t. b_0 = b,  b_t = b_{t-1} + y_t d_t dt,  b_min <= b_t <= b_max,  y_t in {0, 1}
//! ```
//!
//! exactly by depth-first branch-and-bound. Among equal-cost optima the plan
//! with fewer ON commands wins, then the lexicographically smallest command
//! string.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::scenario::StateWindow;

/// SoC feasibility tolerance in percent.
pub const SOC_TOLERANCE: f64 = 1e-9;

/// Largest horizon the enumeration oracle accepts.
pub const MAX_ENUMERATION_HORIZON: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig<S> {
    /// Number of steps in the forecast window.
    pub horizon: usize,
    /// Step length in hours.
    pub step_hours: S,
    pub b_min: S,
    pub b_max: S,
    /// Battery energy per SoC percentage point (kWh / %).
    pub omega: S,
}

impl<S: Scalar> Default for ControllerConfig<S> {
    fn default() -> Self {
        Self {
            horizon: 24,
            step_hours: S::one(),
            b_min: S::lit(75.0),
            b_max: S::lit(100.0),
            omega: S::lit(0.2),
        }
    }
}

impl<S: Scalar> ControllerConfig<S> {
    /// Config for a battery of the given capacity in kWh.
    pub fn with_capacity_kwh(capacity_kwh: S) -> Self {
        Self {
            omega: capacity_kwh / S::lit(100.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.horizon >= 1
            && self.step_hours > S::zero()
            && self.b_min >= S::zero()
            && self.b_min < self.b_max
            && self.b_max <= S::lit(100.0)
            && self.omega > S::zero()
            && self.omega.is_finite()
            && self.step_hours.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid controller config {self:?}")))
        }
    }

    pub fn check_soc(&self, soc: S) -> Result<()> {
        let tol = S::lit(SOC_TOLERANCE);
        if soc.is_finite() && soc >= self.b_min - tol && soc <= self.b_max + tol {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                what: "state of charge",
                value: soc.to_f64_lossy(),
                lo: self.b_min.to_f64_lossy(),
                hi: self.b_max.to_f64_lossy(),
            })
        }
    }

    fn soc_feasible(&self, soc: S) -> bool {
        let tol = S::lit(SOC_TOLERANCE);
        soc >= self.b_min - tol && soc <= self.b_max + tol
    }
}

/// Per-step cost terms `c` (price x power) and SoC-rate terms `d` (%/h).
#[derive(Debug, Clone, PartialEq)]
pub struct CostDiff<S> {
    pub c: Vec<S>,
    pub d: Vec<S>,
}

impl<S: Scalar> CostDiff<S> {
    pub fn new(c: Vec<S>, d: Vec<S>) -> Result<Self> {
        if c.len() != d.len() {
            return Err(Error::InvalidInput(format!(
                "cost and difference lengths differ: {} vs {}",
                c.len(),
                d.len()
            )));
        }
        if c.iter().chain(d.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("cost/difference terms must be finite".into()));
        }
        Ok(Self { c, d })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlPlan<S> {
    /// Battery commands, `true` = ON.
    pub battery: Vec<bool>,
    /// Grid commands, always the complement of `battery`.
    pub grid: Vec<bool>,
    /// Predicted SoC after each step.
    pub soc: Vec<S>,
    pub objective: S,
}

impl<S: Scalar> ControlPlan<S> {
    pub fn on_count(&self) -> usize {
        self.battery.iter().filter(|&&y| y).count()
    }

    /// Checks the dispatch constraints against `cd` and initial SoC `b0`.
    pub fn is_feasible(&self, cd: &CostDiff<S>, b0: S, config: &ControllerConfig<S>) -> bool {
        let n = cd.len();
        if self.battery.len() != n || self.grid.len() != n || self.soc.len() != n {
            return false;
        }
        let mut b = b0;
        let mut obj = S::zero();
        for t in 0..n {
            if self.battery[t] == self.grid[t] {
                return false;
            }
            if self.battery[t] {
                b = b + cd.d[t] * config.step_hours;
            } else {
                obj = obj + cd.c[t];
            }
            if b != self.soc[t] || !config.soc_feasible(b) {
                return false;
            }
        }
        obj == self.objective
    }
}

/// Cost and difference sets from a forecast window.
pub fn build_cost_diff<S: Scalar>(
    window: &StateWindow<S>,
    config: &ControllerConfig<S>,
) -> Result<CostDiff<S>> {
    window.check_lengths()?;
    if window.len() != config.horizon {
        return Err(Error::InvalidInput(format!(
            "window length {} does not match horizon {}",
            window.len(),
            config.horizon
        )));
    }
    let mut c = Vec::with_capacity(window.len());
    let mut d = Vec::with_capacity(window.len());
    for t in 0..window.len() {
        let e = window.solar_kw[t] - window.load_kw[t];
        let price = if e >= S::zero() {
            window.sell_price[t]
        } else {
            window.buy_price[t]
        };
        c.push(-(price * e));
        d.push(e / config.omega);
    }
    Ok(CostDiff { c, d })
}

/// Total order used to pick among optimal plans.
fn plan_order<S: Scalar>(a: (S, usize, &[bool]), b: (S, usize, &[bool])) -> Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(Ordering::Equal)
        .then(a.1.cmp(&b.1))
        .then_with(|| a.2.cmp(b.2))
}

fn check_inputs<S: Scalar>(cd: &CostDiff<S>, b: S, config: &ControllerConfig<S>) -> Result<()> {
    config.validate()?;
    if cd.len() != config.horizon {
        return Err(Error::InvalidInput(format!(
            "cost/difference length {} does not match horizon {}",
            cd.len(),
            config.horizon
        )));
    }
    config.check_soc(b)
}

fn plan_from_commands<S: Scalar>(
    battery: Vec<bool>,
    cd: &CostDiff<S>,
    b0: S,
    config: &ControllerConfig<S>,
) -> ControlPlan<S> {
    let mut b = b0;
    let mut objective = S::zero();
    let mut soc = Vec::with_capacity(battery.len());
    for (t, &on) in battery.iter().enumerate() {
        if on {
            b = b + cd.d[t] * config.step_hours;
        } else {
            objective = objective + cd.c[t];
        }
        soc.push(b);
    }
    ControlPlan {
        grid: battery.iter().map(|&y| !y).collect(),
        battery,
        soc,
        objective,
    }
}

struct Incumbent<S> {
    objective: S,
    ons: usize,
    commands: Vec<bool>,
}

struct BranchAndBound<'a, S> {
    cd: &'a CostDiff<S>,
    config: &'a ControllerConfig<S>,
    /// `suffix_neg[t] = sum_{u >= t} min(0, c_u)`.
    suffix_neg: Vec<S>,
    /// Upper bound on accumulated rounding in a partial objective.
    slack: S,
    commands: Vec<bool>,
    best: Option<Incumbent<S>>,
}

impl<S: Scalar> BranchAndBound<'_, S> {
    fn search(&mut self, t: usize, soc: S, cost: S, ons: usize) {
        let horizon = self.cd.len();
        if t == horizon {
            let better = match &self.best {
                None => true,
                Some(best) => {
                    plan_order(
                        (cost, ons, &self.commands),
                        (best.objective, best.ons, &best.commands),
                    ) == Ordering::Less
                }
            };
            if better {
                self.best = Some(Incumbent {
                    objective: cost,
                    ons,
                    commands: self.commands.clone(),
                });
            }
            return;
        }

        if let Some(best) = &self.best {
            let lower = cost + self.suffix_neg[t] - self.slack;
            if lower > best.objective {
                return;
            }
            // No leaf below can be strictly cheaper, so only the tie-break
            // could still favour it, and ON counts never decrease.
            if lower >= best.objective && ons > best.ons {
                return;
            }
        }

        let c = self.cd.c[t];
        let next_on = soc + self.cd.d[t] * self.config.step_hours;
        let on_feasible = self.config.soc_feasible(next_on);
        let try_on_first = c > S::zero();

        for &on in if try_on_first { &[true, false] } else { &[false, true] } {
            self.commands.push(on);
            if on {
                if on_feasible {
                    self.search(t + 1, next_on, cost, ons + 1);
                }
            } else {
                self.search(t + 1, soc, cost + c, ons);
            }
            self.commands.pop();
        }
    }
}

/// Exact minimum-cost plan by branch-and-bound.
pub fn solve_dispatch<S: Scalar>(
    cd: &CostDiff<S>,
    b: S,
    config: &ControllerConfig<S>,
) -> Result<ControlPlan<S>> {
    check_inputs(cd, b, config)?;
    let horizon = cd.len();
    let mut suffix_neg = vec![S::zero(); horizon + 1];
    for t in (0..horizon).rev() {
        suffix_neg[t] = suffix_neg[t + 1] + cd.c[t].min(S::zero());
    }
    let abs_sum = cd.c.iter().fold(S::zero(), |acc, c| acc + c.abs());
    let slack = S::lit(4.0) * S::count(horizon + 2) * S::epsilon() * abs_sum;

    let mut bb = BranchAndBound {
        cd,
        config,
        suffix_neg,
        slack,
        commands: Vec::with_capacity(horizon),
        best: None,
    };
    bb.search(0, b, S::zero(), 0);
    // The all-OFF plan is always feasible, so an incumbent exists.
    let best = bb.best.expect("all-OFF plan is feasible");
    Ok(plan_from_commands(best.commands, cd, b, config))
}

/// Exhaustive reference solver over all `2^T` command strings.
pub fn enumerate_dispatch<S: Scalar>(
    cd: &CostDiff<S>,
    b: S,
    config: &ControllerConfig<S>,
) -> Result<ControlPlan<S>> {
    if config.horizon > MAX_ENUMERATION_HORIZON {
        return Err(Error::GuardExceeded {
            what: "enumeration horizon",
            size: config.horizon as f64,
            limit: MAX_ENUMERATION_HORIZON as f64,
        });
    }
    check_inputs(cd, b, config)?;
    let horizon = cd.len();
    let mut best: Option<(S, usize, Vec<bool>)> = None;
    for mask in 0u32..(1u32 << horizon) {
        // Bit (T-1-t) holds y_t so that masks count up in lexicographic order.
        let commands: Vec<bool> = (0..horizon)
            .map(|t| mask >> (horizon - 1 - t) & 1 == 1)
            .collect();
        let plan = plan_from_commands(commands, cd, b, config);
        if !plan.soc.iter().all(|&s| config.soc_feasible(s)) {
            continue;
        }
        let ons = plan.on_count();
        let replace = match &best {
            None => true,
            Some((obj, n, cmd)) => {
                plan_order((plan.objective, ons, &plan.battery), (*obj, *n, cmd)) == Ordering::Less
            }
        };
        if replace {
            best = Some((plan.objective, ons, plan.battery));
        }
    }
    let (_, _, commands) = best.expect("all-OFF plan is feasible");
    Ok(plan_from_commands(commands, cd, b, config))
}

/// One controller invocation: the first command of the optimal plan.
pub fn control_step<S: Scalar>(
    window: &StateWindow<S>,
    config: &ControllerConfig<S>,
) -> Result<(bool, ControlPlan<S>)> {
    let cd = build_cost_diff(window, config)?;
    let plan = solve_dispatch(&cd, window.soc, config)?;
    Ok((plan.battery[0], plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn worked_window() -> StateWindow<f64> {
        StateWindow {
            solar_kw: vec![160.0, 140.0, 100.0, 0.0],
            load_kw: vec![100.0, 120.0, 170.0, 250.0],
            buy_price: vec![3.0, 3.0, 2.0, 2.0],
            sell_price: vec![1.0, 1.0, 1.0, 1.0],
            soc: 75.0,
        }
    }

    fn cfg(horizon: usize, omega: f64) -> ControllerConfig<f64> {
        ControllerConfig {
            horizon,
            omega,
            ..Default::default()
        }
    }

    #[test]
    fn worked_cost_diff_example() {
        let cd = build_cost_diff(&worked_window(), &cfg(4, 10.0)).unwrap();
        assert_eq!(cd.c, vec![-60.0, -20.0, 140.0, 500.0]);
        assert_eq!(cd.d, vec![6.0, 2.0, -7.0, -25.0]);
    }

    #[test]
    fn balanced_window_uses_surplus_branch() {
        let mut w = worked_window();
        w.solar_kw = w.load_kw.clone();
        let cd = build_cost_diff(&w, &cfg(4, 10.0)).unwrap();
        assert!(cd.c.iter().all(|&c| c == 0.0));
        assert!(cd.d.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn single_step_deficit() {
        let w = StateWindow {
            solar_kw: vec![0.0],
            load_kw: vec![5.0],
            buy_price: vec![10.0],
            sell_price: vec![1.0],
            soc: 80.0,
        };
        let cd = build_cost_diff(&w, &cfg(1, 2.0)).unwrap();
        assert_eq!(cd.c, vec![50.0]);
        assert_eq!(cd.d, vec![-2.5]);
    }

    #[test]
    fn window_length_must_match_horizon() {
        assert!(build_cost_diff(&worked_window(), &cfg(3, 10.0)).is_err());
    }

    #[test]
    fn worked_dispatch_example() {
        let config = cfg(4, 10.0);
        let cd = CostDiff::new(vec![-60.0, -20.0, 140.0, 500.0], vec![6.0, 2.0, -7.0, -25.0]).unwrap();
        let plan = solve_dispatch(&cd, 75.0, &config).unwrap();
        assert_eq!(plan.battery, vec![true, true, true, false]);
        assert_eq!(plan.grid, vec![false, false, false, true]);
        assert_eq!(plan.soc, vec![81.0, 83.0, 76.0, 76.0]);
        assert_eq!(plan.objective, 500.0);
        assert_eq!(enumerate_dispatch(&cd, 75.0, &config).unwrap(), plan);

        let (cmd, _) = control_step(&worked_window(), &config).unwrap();
        assert!(cmd);
    }

    #[test]
    fn zero_terms_tie_break_all_off() {
        let config = cfg(24, 0.2);
        let cd = CostDiff::new(vec![0.0; 24], vec![0.0; 24]).unwrap();
        let plan = solve_dispatch(&cd, 80.0, &config).unwrap();
        assert_eq!(plan.objective, 0.0);
        assert!(plan.battery.iter().all(|&y| !y));
    }

    #[test]
    fn full_battery_cannot_charge() {
        let config = cfg(1, 0.2);
        let cd = CostDiff::new(vec![10.0], vec![1.0]).unwrap();
        let plan = solve_dispatch(&cd, 100.0, &config).unwrap();
        assert_eq!(plan.battery, vec![false]);
        assert_eq!(plan.objective, 10.0);
    }

    #[test]
    fn selling_beats_idling() {
        let config = cfg(1, 0.2);
        let cd = CostDiff::new(vec![-5.0], vec![1.0]).unwrap();
        let plan = enumerate_dispatch(&cd, 80.0, &config).unwrap();
        assert_eq!(plan.battery, vec![false]);
        assert_eq!(plan.objective, -5.0);
    }

    #[test]
    fn enumeration_guard() {
        let config = cfg(21, 0.2);
        let cd = CostDiff::new(vec![0.0; 21], vec![0.0; 21]).unwrap();
        assert!(matches!(
            enumerate_dispatch(&cd, 80.0, &config),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn soc_outside_band_rejected() {
        let config = cfg(1, 0.2);
        let cd = CostDiff::new(vec![1.0], vec![1.0]).unwrap();
        assert!(solve_dispatch(&cd, 74.0, &config).is_err());
        assert!(solve_dispatch(&cd, 100.5, &config).is_err());
    }

    #[test]
    fn all_surplus_full_battery_sells() {
        let config = cfg(24, 0.2);
        let w = StateWindow {
            solar_kw: vec![3.0; 24],
            load_kw: vec![1.0; 24],
            buy_price: vec![9.4; 24],
            sell_price: vec![5.0; 24],
            soc: 100.0,
        };
        let (cmd, plan) = control_step(&w, &config).unwrap();
        assert!(!cmd);
        assert!(plan.battery.iter().all(|&y| !y));
    }

    #[test]
    fn zero_window_commands_off() {
        let config = cfg(24, 0.2);
        let w = StateWindow {
            solar_kw: vec![0.0; 24],
            load_kw: vec![0.0; 24],
            buy_price: vec![9.4; 24],
            sell_price: vec![5.0; 24],
            soc: 85.0,
        };
        assert!(!control_step(&w, &config).unwrap().0);
    }

    #[test]
    fn generic_over_f32() {
        let config: ControllerConfig<f32> = ControllerConfig {
            horizon: 4,
            omega: 10.0,
            ..Default::default()
        };
        let cd = CostDiff::new(vec![-60.0f32, -20.0, 140.0, 500.0], vec![6.0, 2.0, -7.0, -25.0]).unwrap();
        let plan = solve_dispatch(&cd, 75.0f32, &config).unwrap();
        assert_eq!(plan.battery, vec![true, true, true, false]);
        assert_eq!(plan.objective, 500.0f32);
    }

    fn random_instance(rng: &mut ChaCha8Rng) -> (CostDiff<f64>, f64, ControllerConfig<f64>) {
        let horizon = rng.random_range(1..=12);
        let c = (0..horizon).map(|_| rng.random_range(-100.0..=100.0)).collect();
        let d = (0..horizon).map(|_| rng.random_range(-10.0..=10.0)).collect();
        let b = rng.random_range(75.0..=100.0);
        (CostDiff::new(c, d).unwrap(), b, cfg(horizon, 0.2))
    }

    #[test]
    fn solver_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..500 {
            let (cd, b, config) = random_instance(&mut rng);
            let fast = solve_dispatch(&cd, b, &config).unwrap();
            let slow = enumerate_dispatch(&cd, b, &config).unwrap();
            assert_eq!(fast.objective.to_bits(), slow.objective.to_bits());
            assert_eq!(fast, slow);
            assert!(fast.is_feasible(&cd, b, &config));
        }
    }

    proptest! {
        #[test]
        fn branch_consistency(
            load in proptest::collection::vec(0.0f64..10.0, 1..24),
            solar_scale in 0.0f64..2.0,
            omega in 0.05f64..2.0,
        ) {
            let n = load.len();
            let solar: Vec<f64> = load.iter().enumerate().map(|(i, l)| {
                if i % 3 == 0 { *l } else { l * solar_scale }
            }).collect();
            let w = StateWindow {
                load_kw: load, solar_kw: solar,
                buy_price: vec![9.4; n], sell_price: vec![5.0; n], soc: 80.0,
            };
            let config = cfg(n, omega);
            let cd = build_cost_diff(&w, &config).unwrap();
            for t in 0..n {
                let e = w.solar_kw[t] - w.load_kw[t];
                prop_assert_eq!(cd.c[t] == 0.0, e == 0.0);
                if e != 0.0 {
                    prop_assert_eq!(cd.c[t] > 0.0, e < 0.0);
                }
                prop_assert!((cd.d[t] * omega - e).abs() <= 1e-12 * (1.0 + e.abs()));
            }
        }

        #[test]
        fn objective_bounds(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (cd, b, mut config) = random_instance(&mut rng);
            // Exercise the full 24-step horizon as well.
            if seed % 2 == 0 {
                let c: Vec<f64> = (0..24).map(|_| rng.random_range(-100.0..=100.0)).collect();
                let d: Vec<f64> = (0..24).map(|_| rng.random_range(-10.0..=10.0)).collect();
                config.horizon = 24;
                let cd24 = CostDiff::new(c, d).unwrap();
                let plan = solve_dispatch(&cd24, b, &config).unwrap();
                prop_assert!(plan.is_feasible(&cd24, b, &config));
                let all_off = plan_from_commands(vec![false; 24], &cd24, b, &config);
                prop_assert!(plan.objective <= all_off.objective);
                return Ok(());
            }
            let plan = solve_dispatch(&cd, b, &config).unwrap();
            let upper: f64 = cd.c.iter().sum();
            let lower: f64 = cd.c.iter().map(|c| c.min(0.0)).sum();
            prop_assert!(plan.objective <= upper + 1e-9);
            prop_assert!(plan.objective >= lower - 1e-9);
            prop_assert_eq!(solve_dispatch(&cd, b, &config).unwrap(), plan);
        }
    }
}
