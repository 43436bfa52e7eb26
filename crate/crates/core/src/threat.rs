//! False data injection on the reported battery state of charge, and
//! exhaustive reference attacks for the attacker/controller bilevel problem.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::dispatch::{self, build_cost_diff, solve_dispatch};
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::plant::{run_simulation_for, Attacker, HourContext, MicrogridEnv, SimResult};
use crate::scenario::{Scenario, StateWindow};

/// Default oracle grid spacing, percent.
pub const DEFAULT_GRID_STEP: f64 = 0.5;

/// Limit on the number of action sequences the horizon oracle may visit.
pub const HORIZON_SEARCH_LIMIT: f64 = 1e6;

const GRID_HIT_TOLERANCE: f64 = 1e-9;

/// Minimum number of independent subtrees handed to the thread pool.
const PARALLEL_FRONTIER: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackMode {
    /// Any offset keeping the reported SoC inside the controller band.
    FullRange,
    /// Offset limited to +/-5% of the actual SoC.
    Relative5Pct,
    /// Offset limited to `[a_min, a_max]`.
    Absolute,
}

impl AttackMode {
    pub fn name(self) -> &'static str {
        match self {
            AttackMode::FullRange => "full",
            AttackMode::Relative5Pct => "pct5",
            AttackMode::Absolute => "abs",
        }
    }
}

impl fmt::Display for AttackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(AttackMode::FullRange),
            "pct5" => Ok(AttackMode::Relative5Pct),
            "abs" => Ok(AttackMode::Absolute),
            other => Err(Error::InvalidInput(format!(
                "unknown attack mode `{other}` (expected full, pct5 or abs)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackBounds<S> {
    pub a_min: S,
    pub a_max: S,
    pub mode: AttackMode,
}

impl<S: Scalar> AttackBounds<S> {
    pub fn full_range() -> Self {
        Self {
            a_min: S::lit(-100.0),
            a_max: S::lit(100.0),
            mode: AttackMode::FullRange,
        }
    }

    pub fn relative_5pct() -> Self {
        Self {
            a_min: S::lit(-100.0),
            a_max: S::lit(100.0),
            mode: AttackMode::Relative5Pct,
        }
    }

    pub fn absolute(a_min: S, a_max: S) -> Result<Self> {
        if !(a_min <= S::zero() && S::zero() <= a_max) {
            return Err(Error::InvalidInput(format!(
                "attack bounds must satisfy a_min <= 0 <= a_max, got [{a_min}, {a_max}]"
            )));
        }
        Ok(Self {
            a_min,
            a_max,
            mode: AttackMode::Absolute,
        })
    }

    pub fn for_mode(mode: AttackMode) -> Self {
        match mode {
            AttackMode::FullRange => Self::full_range(),
            AttackMode::Relative5Pct => Self::relative_5pct(),
            AttackMode::Absolute => Self::absolute(S::zero(), S::zero()).expect("zero bounds"),
        }
    }

    /// Offsets `[lo, hi]` allowed when the actual SoC is `b`. Always contains 0
    /// for `b` inside the band.
    pub fn feasible_interval(&self, b: S, config: &dispatch::ControllerConfig<S>) -> (S, S) {
        let mut lo = self.a_min.max(config.b_min - b);
        let mut hi = self.a_max.min(config.b_max - b);
        if self.mode == AttackMode::Relative5Pct {
            let r = S::lit(0.05) * b.abs();
            lo = lo.max(-r);
            hi = hi.min(r);
        }
        (lo.min(S::zero()), hi.max(S::zero()))
    }

    /// Widest offset interval over any SoC in the band.
    fn max_width(&self, config: &dispatch::ControllerConfig<S>) -> S {
        let mut w = (self.a_max - self.a_min).min(config.b_max - config.b_min);
        if self.mode == AttackMode::Relative5Pct {
            w = w.min(S::lit(0.1) * config.b_max);
        }
        w
    }
}

/// Signed offset added to the reported SoC, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdiAction<S> {
    pub offset: S,
}

impl<S: Scalar> FdiAction<S> {
    pub fn new(offset: S) -> Self {
        Self { offset }
    }

    pub fn none() -> Self {
        Self { offset: S::zero() }
    }
}

/// Reported SoC `b + a`, with the offset clamped to the bounds and the result
/// clamped into the controller band.
pub fn apply_fdi<S: Scalar>(
    b: S,
    action: FdiAction<S>,
    bounds: &AttackBounds<S>,
    config: &dispatch::ControllerConfig<S>,
) -> S {
    let (lo, hi) = bounds.feasible_interval(b, config);
    let a = if action.offset.is_finite() {
        action.offset.max(lo).min(hi)
    } else {
        S::zero()
    };
    (b + a).max(config.b_min).min(config.b_max)
}

/// Candidate offsets for actual SoC `b`: `lo, lo + step, ...`, the interval
/// end, and `0`, ascending and deduplicated.
pub fn attack_grid<S: Scalar>(
    b: S,
    bounds: &AttackBounds<S>,
    config: &dispatch::ControllerConfig<S>,
    grid_step: S,
) -> Result<Vec<S>> {
    if !(grid_step > S::zero() && grid_step.is_finite()) {
        return Err(Error::InvalidInput(format!("grid step must be positive, got {grid_step}")));
    }
    let tol = S::lit(GRID_HIT_TOLERANCE);
    let (lo, hi) = bounds.feasible_interval(b, config);
    let mut points = Vec::new();
    let mut i = 0usize;
    loop {
        let p = lo + S::count(i) * grid_step;
        if p > hi + tol {
            break;
        }
        points.push(p.min(hi));
        i += 1;
    }
    if points.last().is_none_or(|&p| p < hi - tol) {
        points.push(hi);
    }
    if !points.iter().any(|p| p.abs() <= tol) {
        points.push(S::zero());
    }
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    points.dedup_by(|a, b| (*a - *b).abs() <= tol);
    Ok(points)
}

/// Per-step bilevel reference: the offset on the grid whose induced
/// controller optimum is largest. Ties go to the smaller `|a|`, then smaller `a`.
pub fn oracle_attack_step<S: Scalar>(
    window: &StateWindow<S>,
    bounds: &AttackBounds<S>,
    config: &dispatch::ControllerConfig<S>,
    grid_step: S,
) -> Result<(S, S)> {
    let cd = build_cost_diff(window, config)?;
    let b = window.soc;
    let mut best: Option<(S, S)> = None;
    for a in attack_grid(b, bounds, config, grid_step)? {
        let reported = apply_fdi(b, FdiAction::new(a), bounds, config);
        let obj = solve_dispatch(&cd, reported, config)?.objective;
        let better = match best {
            None => true,
            Some((best_a, best_obj)) => {
                obj > best_obj
                    || (obj == best_obj
                        && (a.abs() < best_a.abs() || (a.abs() == best_a.abs() && a < best_a)))
            }
        };
        if better {
            best = Some((a, obj));
        }
    }
    Ok(best.expect("grid contains 0"))
}

/// Attacker applying the step oracle to the true window every hour.
#[derive(Debug, Clone)]
pub struct GreedyOracleAttacker {
    pub config: crate::ControllerConfig,
    pub bounds: AttackBounds<f64>,
    pub grid_step: f64,
    /// Effective offsets applied so far.
    pub offsets: Vec<f64>,
}

impl GreedyOracleAttacker {
    pub fn new(config: crate::ControllerConfig, bounds: AttackBounds<f64>, grid_step: f64) -> Self {
        Self {
            config,
            bounds,
            grid_step,
            offsets: Vec::new(),
        }
    }
}

impl Attacker for GreedyOracleAttacker {
    fn report(&mut self, ctx: &HourContext<'_>) -> Result<f64> {
        let (a, _) = oracle_attack_step(ctx.window, &self.bounds, &self.config, self.grid_step)?;
        let reported = apply_fdi(ctx.soc, FdiAction::new(a), &self.bounds, &self.config);
        self.offsets.push(reported - ctx.soc);
        Ok(reported)
    }
}

/// Attacker replaying a fixed offset sequence (clamped each hour).
#[derive(Debug, Clone)]
pub struct ReplayAttacker {
    pub offsets: Vec<f64>,
    pub bounds: AttackBounds<f64>,
    pub config: crate::ControllerConfig,
}

impl Attacker for ReplayAttacker {
    fn report(&mut self, ctx: &HourContext<'_>) -> Result<f64> {
        let a = self.offsets.get(ctx.hour).copied().unwrap_or(0.0);
        Ok(apply_fdi(ctx.soc, FdiAction::new(a), &self.bounds, &self.config))
    }
}

/// One row of an oracle report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleHour {
    pub hour: usize,
    pub offset: f64,
    pub reported: f64,
    pub actual: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleAttack {
    pub offsets: Vec<f64>,
    pub total_cost: f64,
    pub result: SimResult,
}

impl OracleAttack {
    pub fn hours(&self) -> Vec<OracleHour> {
        (0..self.offsets.len())
            .map(|h| OracleHour {
                hour: h,
                offset: self.offsets[h],
                reported: self.result.reported[h],
                actual: self.result.hour_start_soc[h],
                cost: self.result.hourly_costs[h],
            })
            .collect()
    }

    /// Oracle report CSV: `hour,a_b,b_reported,b_actual,hourly_cost`.
    pub fn write_report<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "hour,a_b,b_reported,b_actual,hourly_cost")?;
        for r in self.hours() {
            writeln!(out, "{},{},{},{},{}", r.hour, r.offset, r.reported, r.actual, r.cost)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Full run where every hour uses the step oracle against the true window.
pub fn greedy_attack(
    scenario: &Scenario,
    config: &crate::ControllerConfig,
    init_soc: f64,
    bounds: &AttackBounds<f64>,
    grid_step: f64,
    hours: usize,
) -> Result<OracleAttack> {
    let mut attacker = GreedyOracleAttacker::new(*config, *bounds, grid_step);
    let result = run_simulation_for(scenario, config, init_soc, hours, Some(&mut attacker))?;
    Ok(OracleAttack {
        offsets: attacker.offsets,
        total_cost: result.total_cost,
        result,
    })
}

/// Upper bound on the per-hour grid size for any SoC in the band.
pub fn max_grid_points(
    bounds: &AttackBounds<f64>,
    config: &crate::ControllerConfig,
    grid_step: f64,
) -> Result<usize> {
    // Sample the band finely and add the endpoints; grid sizes are piecewise
    // constant in b, so this finds the maximum in practice.
    let mut best = 0;
    let samples = 2500;
    for i in 0..=samples {
        let b = config.b_min + (config.b_max - config.b_min) * i as f64 / samples as f64;
        best = best.max(attack_grid(b, bounds, config, grid_step)?.len());
    }
    let analytic = (bounds.max_width(config) / grid_step).floor() as usize + 3;
    Ok(best.min(analytic))
}

struct HorizonSearch<'c> {
    bounds: AttackBounds<f64>,
    config: &'c crate::ControllerConfig,
    grid_step: f64,
    hours: usize,
}

struct Best {
    cost: f64,
    offsets: Vec<f64>,
}

impl HorizonSearch<'_> {
    fn dfs(&self, env: &MicrogridEnv<'_>, prefix: &mut Vec<f64>, best: &mut Option<Best>) -> Result<()> {
        if env.hour() == self.hours {
            if best.as_ref().is_none_or(|b| env.total_cost() > b.cost) {
                *best = Some(Best {
                    cost: env.total_cost(),
                    offsets: prefix.clone(),
                });
            }
            return Ok(());
        }
        let soc = env.soc();
        for a in attack_grid(soc, &self.bounds, self.config, self.grid_step)? {
            let mut child = env.clone();
            child.advance(apply_fdi(soc, FdiAction::new(a), &self.bounds, self.config))?;
            prefix.push(a);
            self.dfs(&child, prefix, best)?;
            prefix.pop();
        }
        Ok(())
    }
}

/// Exhaustive search over offset sequences on the per-hour grids, maximising
/// the realised plant cost of the first `hours` hours.
pub fn oracle_attack_horizon(
    scenario: &Scenario,
    config: &crate::ControllerConfig,
    init_soc: f64,
    bounds: &AttackBounds<f64>,
    grid_step: f64,
    hours: usize,
) -> Result<OracleAttack> {
    if hours == 0 || hours > scenario.hours() {
        return Err(Error::OutOfRange {
            what: "oracle hours",
            value: hours as f64,
            lo: 1.0,
            hi: scenario.hours() as f64,
        });
    }
    let per_hour = max_grid_points(bounds, config, grid_step)?;
    let size = (per_hour as f64).powi(hours as i32);
    if size > HORIZON_SEARCH_LIMIT {
        return Err(Error::GuardExceeded {
            what: "horizon oracle sequences (grid points ^ hours)",
            size,
            limit: HORIZON_SEARCH_LIMIT,
        });
    }

    let search = HorizonSearch {
        bounds: *bounds,
        config,
        grid_step,
        hours,
    };
    let root = MicrogridEnv::new(scenario, config, init_soc, hours)?.record_trace(false);
    // Expand the first levels serially so there is enough independent work;
    // subtrees are reduced in grid order so the result does not depend on
    // scheduling.
    let mut frontier = vec![(root, Vec::new())];
    while frontier.len() < PARALLEL_FRONTIER && frontier[0].0.hour() < hours {
        let mut next = Vec::new();
        for (env, prefix) in frontier {
            let soc = env.soc();
            for a in attack_grid(soc, bounds, config, grid_step)? {
                let mut child = env.clone();
                child.advance(apply_fdi(soc, FdiAction::new(a), bounds, config))?;
                let mut p = prefix.clone();
                p.push(a);
                next.push((child, p));
            }
        }
        frontier = next;
    }
    let subtrees: Vec<Result<Option<Best>>> = frontier
        .into_par_iter()
        .map(|(env, mut prefix)| {
            let mut best = None;
            search.dfs(&env, &mut prefix, &mut best)?;
            Ok(best)
        })
        .collect();
    let mut best: Option<Best> = None;
    for sub in subtrees {
        if let Some(b) = sub? {
            if best.as_ref().is_none_or(|cur| b.cost > cur.cost) {
                best = Some(b);
            }
        }
    }
    let best = best.expect("non-empty grid");

    let mut replay = ReplayAttacker {
        offsets: best.offsets.clone(),
        bounds: *bounds,
        config: *config,
    };
    let result = run_simulation_for(scenario, config, init_soc, hours, Some(&mut replay))?;
    Ok(OracleAttack {
        offsets: best.offsets,
        total_cost: result.total_cost,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::enumerate_dispatch;
    use crate::plant::run_simulation_for;
    use crate::scenario::synth_scenario;
    use proptest::prelude::*;

    type Config = crate::ControllerConfig;

    #[test]
    fn zero_offset_is_identity() {
        let config = Config::default();
        for bounds in [AttackBounds::full_range(), AttackBounds::relative_5pct()] {
            assert_eq!(apply_fdi(83.2, FdiAction::none(), &bounds, &config), 83.2);
        }
    }

    #[test]
    fn full_range_clamps_to_band() {
        let config = Config::default();
        assert_eq!(apply_fdi(80.0, FdiAction::new(-20.0), &AttackBounds::full_range(), &config), 75.0);
        assert_eq!(apply_fdi(80.0, FdiAction::new(30.0), &AttackBounds::full_range(), &config), 100.0);
    }

    #[test]
    fn relative_mode_clamps_offset() {
        let config = Config::default();
        let b = AttackBounds::relative_5pct();
        assert_eq!(b.feasible_interval(80.0, &config), (-4.0, 4.0));
        assert_eq!(apply_fdi(80.0, FdiAction::new(-10.0), &b, &config), 76.0);
        assert_eq!(b.feasible_interval(98.0, &config), (-4.9, 2.0));
    }

    #[test]
    fn absolute_bounds_validated() {
        assert!(AttackBounds::absolute(1.0, 5.0).is_err());
        assert!(AttackBounds::absolute(-5.0, 5.0).is_ok());
        assert_eq!("pct5".parse::<AttackMode>().unwrap(), AttackMode::Relative5Pct);
        assert!("bogus".parse::<AttackMode>().is_err());
    }

    #[test]
    fn grid_contents() {
        let config = Config::default();
        let g = attack_grid(80.0, &AttackBounds::full_range(), &config, 0.5).unwrap();
        assert_eq!(g.len(), 51);
        assert_eq!(g[0], -5.0);
        assert_eq!(*g.last().unwrap(), 20.0);
        let g = attack_grid(80.0, &AttackBounds::full_range(), &config, 7.0).unwrap();
        assert_eq!(g, vec![-5.0, 0.0, 2.0, 9.0, 16.0, 20.0]);
        assert!(attack_grid(80.0, &AttackBounds::full_range(), &config, 0.0).is_err());
        let ab = AttackBounds::absolute(-5.0, 5.0).unwrap();
        assert_eq!(attack_grid(90.0, &ab, &config, 5.0).unwrap(), vec![-5.0, 0.0, 5.0]);
    }

    fn worked_window(soc: f64) -> StateWindow<f64> {
        StateWindow {
            solar_kw: vec![160.0, 140.0, 100.0, 0.0],
            load_kw: vec![100.0, 120.0, 170.0, 250.0],
            buy_price: vec![3.0, 3.0, 2.0, 2.0],
            sell_price: vec![1.0, 1.0, 1.0, 1.0],
            soc,
        }
    }

    fn worked_config() -> Config {
        Config {
            horizon: 4,
            omega: 10.0,
            ..Default::default()
        }
    }

    #[test]
    fn worked_window_step_oracle() {
        let config = worked_config();
        let window = worked_window(90.0);
        let cd = build_cost_diff(&window, &config).unwrap();
        // Independent sweep: every integer report in the band through the
        // enumeration solver.
        let mut sweep_max = f64::MIN;
        let mut argmax = f64::NAN;
        for r in 75..=100 {
            let obj = enumerate_dispatch(&cd, r as f64, &config).unwrap().objective;
            if obj > sweep_max {
                sweep_max = obj;
                argmax = r as f64;
            }
        }
        let unattacked = enumerate_dispatch(&cd, 90.0, &config).unwrap().objective;
        assert_eq!(unattacked, 420.0);
        assert_eq!(sweep_max, 500.0);
        assert_eq!(argmax, 75.0);

        let (a, obj) = oracle_attack_step(&window, &AttackBounds::full_range(), &config, 1.0).unwrap();
        assert_eq!(obj, sweep_max);
        assert_eq!(a, -15.0);
    }

    #[test]
    fn surplus_window_cannot_be_exploited() {
        let config = Config::default();
        let window = StateWindow {
            solar_kw: vec![4.0; 24],
            load_kw: vec![1.0; 24],
            buy_price: vec![9.4; 24],
            sell_price: vec![5.0; 24],
            soc: 100.0,
        };
        let cd = build_cost_diff(&window, &config).unwrap();
        let unattacked = solve_dispatch(&cd, 100.0, &config).unwrap().objective;
        let (_, obj) = oracle_attack_step(&window, &AttackBounds::full_range(), &config, 0.5).unwrap();
        assert_eq!(obj, unattacked);
        assert_eq!(obj, cd.c.iter().sum::<f64>());
    }

    #[test]
    fn step_oracle_dominates_no_attack() {
        let sc = synth_scenario(5, 2).unwrap();
        let config = Config::default();
        for h in [0, 9, 15, 18, 30] {
            let w = crate::scenario::hourly_window(&sc, h, 24, 88.0).unwrap();
            let cd = build_cost_diff(&w, &config).unwrap();
            let base = solve_dispatch(&cd, 88.0, &config).unwrap().objective;
            let (_, obj) = oracle_attack_step(&w, &AttackBounds::full_range(), &config, 0.5).unwrap();
            assert!(obj >= base);
            let (_, wide1) = oracle_attack_step(&w, &AttackBounds::absolute(-10.0, 10.0).unwrap(), &config, 0.5).unwrap();
            let (_, narrow1) = oracle_attack_step(&w, &AttackBounds::absolute(-4.0, 4.0).unwrap(), &config, 0.5).unwrap();
            assert!(wide1 >= narrow1);
        }
    }

    #[test]
    fn singleton_bounds_give_no_attack_cost() {
        let sc = synth_scenario(7, 2).unwrap();
        let config = Config::default();
        let zero = AttackBounds::absolute(0.0, 0.0).unwrap();
        let base = run_simulation_for(&sc, &config, 90.0, 6, None).unwrap();
        let h = oracle_attack_horizon(&sc, &config, 90.0, &zero, 0.5, 6).unwrap();
        assert_eq!(h.total_cost, base.total_cost);
        assert!(h.offsets.iter().all(|&a| a == 0.0));
        let g = greedy_attack(&sc, &config, 90.0, &zero, 0.5, 6).unwrap();
        assert_eq!(g.total_cost, base.total_cost);
    }

    #[test]
    fn horizon_guard() {
        let sc = synth_scenario(7, 2).unwrap();
        let err = oracle_attack_horizon(&sc, &Config::default(), 90.0, &AttackBounds::full_range(), 0.5, 8)
            .unwrap_err();
        assert!(matches!(err, Error::GuardExceeded { .. }));
        assert!(err.to_string().contains("1000000"));
    }

    /// Brute force over index tuples, simulating each sequence from scratch.
    fn brute_force(
        sc: &Scenario,
        config: &Config,
        init: f64,
        bounds: &AttackBounds<f64>,
        step: f64,
        hours: usize,
    ) -> f64 {
        let width = max_grid_points(bounds, config, step).unwrap();
        let mut best = f64::MIN;
        let total = width.pow(hours as u32);
        for code in 0..total {
            let idx: Vec<usize> = (0..hours).map(|k| code / width.pow(k as u32) % width).collect();
            let mut valid = true;
            let mut attacker = |ctx: &HourContext<'_>| {
                let grid = attack_grid(ctx.soc, bounds, config, step).unwrap();
                match grid.get(idx[ctx.hour]) {
                    Some(&a) => apply_fdi(ctx.soc, FdiAction::new(a), bounds, config),
                    None => {
                        valid = false;
                        ctx.soc
                    }
                }
            };
            let res = run_simulation_for(sc, config, init, hours, Some(&mut attacker)).unwrap();
            if valid {
                best = best.max(res.total_cost);
            }
        }
        best
    }

    #[test]
    fn horizon_oracle_matches_brute_force() {
        let sc = synth_scenario(7, 2).unwrap();
        let config = Config::default();
        let bounds = AttackBounds::absolute(-5.0, 5.0).unwrap();
        let h = oracle_attack_horizon(&sc, &config, 90.0, &bounds, 5.0, 4).unwrap();
        let reference = brute_force(&sc, &config, 90.0, &bounds, 5.0, 4);
        assert_eq!(h.total_cost, reference);
        let base = run_simulation_for(&sc, &config, 90.0, 4, None).unwrap();
        assert!(h.total_cost >= base.total_cost);

        let fixed = [-5.0, 5.0, -5.0, 5.0];
        let mut replay = ReplayAttacker {
            offsets: fixed.to_vec(),
            bounds,
            config,
        };
        let manual = run_simulation_for(&sc, &config, 90.0, 4, Some(&mut replay)).unwrap();
        assert!(h.total_cost >= manual.total_cost);
    }

    #[test]
    fn oracle_report_rows() {
        let sc = synth_scenario(7, 2).unwrap();
        let config = Config::default();
        let g = greedy_attack(&sc, &config, 85.0, &AttackBounds::full_range(), 0.5, 5).unwrap();
        let rows = g.hours();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].actual, 85.0);
        for r in &rows {
            assert!((r.reported - r.actual - r.offset).abs() < 1e-9);
        }
        let mut buf = Vec::new();
        g.write_report(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("hour,a_b,b_reported,b_actual,hourly_cost\n"));
    }

    proptest! {
        #[test]
        fn fdi_output_respects_constraints(b in 75.0f64..=100.0, a in -200.0f64..200.0, pct in any::<bool>()) {
            let config = Config::default();
            let bounds = if pct { AttackBounds::relative_5pct() } else { AttackBounds::full_range() };
            let r = apply_fdi(b, FdiAction::new(a), &bounds, &config);
            prop_assert!((75.0..=100.0).contains(&r));
            if pct {
                prop_assert!((r - b).abs() <= 0.05 * b + 1e-9);
            }
        }

        #[test]
        fn widening_bounds_never_hurts(seed in 0u64..6, h in 0usize..48, b in 75u32..=100, k in 0u32..10) {
            // Integer SoC and integer bounds with unit steps give nested grids.
            let sc = synth_scenario(seed, 2).unwrap();
            let config = Config::default();
            let win = crate::scenario::hourly_window(&sc, h, 24, b as f64).unwrap();
            let k = k as f64;
            let narrow = AttackBounds::absolute(-k, k).unwrap();
            let wide = AttackBounds::absolute(-k - 3.0, k + 3.0).unwrap();
            let (_, lo) = oracle_attack_step(&win, &narrow, &config, 1.0).unwrap();
            let (_, hi) = oracle_attack_step(&win, &wide, &config, 1.0).unwrap();
            prop_assert!(hi >= lo);
        }
    }
}
