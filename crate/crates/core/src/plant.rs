//! Minute-resolution microgrid plant and the hourly control loop.
//!
//! Battery/grid routing per minute:
//!
//! | command | solar >= load            | solar < load                  |
//! |---------|--------------------------|-------------------------------|
//! | ON      | charge, overflow sold    | discharge, shortfall bought   |
//! | OFF     | sell surplus             | buy deficit                   |
//!
//! The battery management system keeps SoC inside the controller band; any
//! energy that does not fit is routed to the grid at the current price.

use std::io::Write;

use crate::dispatch::{build_cost_diff, control_step, CostDiff};
use crate::error::Result;
use crate::scenario::{Scenario, StateWindow, MINUTES_PER_HOUR};
use crate::ControllerConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    /// State of charge in percent.
    pub soc: f64,
    /// kWh per SoC percentage point.
    pub omega: f64,
    pub b_min: f64,
    pub b_max: f64,
}

impl BatteryState {
    pub fn new(soc: f64, config: &ControllerConfig) -> Result<Self> {
        config.validate()?;
        config.check_soc(soc)?;
        Ok(Self {
            soc: soc.clamp(config.b_min, config.b_max),
            omega: config.omega,
            b_min: config.b_min,
            b_max: config.b_max,
        })
    }

    pub fn energy_kwh(&self) -> f64 {
        self.soc * self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinuteRecord {
    pub minute: usize,
    pub load_kw: f64,
    pub solar_kw: f64,
    pub command: bool,
    pub soc_after: f64,
    /// Net grid exchange, positive when buying.
    pub grid_kw: f64,
    /// Dollars.
    pub cost_delta: f64,
}

/// Advances the battery by one minute. Prices are in cents/kWh, the cost
/// delta in dollars.
pub fn step_minute(
    state: BatteryState,
    load_kw: f64,
    solar_kw: f64,
    command: bool,
    buy: f64,
    sell: f64,
) -> (BatteryState, MinuteRecord) {
    let e = solar_kw - load_kw;
    let energy = e / MINUTES_PER_HOUR as f64;
    let mut next = state;
    // Energy bought (> 0) or sold (< 0) this minute, in kWh.
    let grid_kwh;
    if !command {
        grid_kwh = -energy;
    } else if energy >= 0.0 {
        let room = ((state.b_max - state.soc) * state.omega).max(0.0);
        let stored = energy.min(room);
        next.soc = state.soc + stored / state.omega;
        grid_kwh = -(energy - stored);
    } else {
        let available = ((state.soc - state.b_min) * state.omega).max(0.0);
        let drawn = (-energy).min(available);
        next.soc = state.soc - drawn / state.omega;
        grid_kwh = -energy - drawn;
    }
    next.soc = next.soc.clamp(state.b_min, state.b_max);

    let cost_delta = if grid_kwh > 0.0 {
        grid_kwh * buy / 100.0
    } else {
        grid_kwh * sell / 100.0
    };
    let record = MinuteRecord {
        minute: 0,
        load_kw,
        solar_kw,
        command,
        soc_after: next.soc,
        grid_kw: grid_kwh * MINUTES_PER_HOUR as f64,
        cost_delta,
    };
    (next, record)
}

/// Read-only view of the plant handed to an attacker at the top of each hour.
#[derive(Debug, Clone, Copy)]
pub struct HourContext<'a> {
    /// Step index within the run.
    pub hour: usize,
    /// Hour of the scenario (wrapped).
    pub scenario_hour: usize,
    /// Actual state of charge.
    pub soc: f64,
    /// True forecast window (carrying the actual SoC).
    pub window: &'a StateWindow<f64>,
    pub cost_diff: &'a CostDiff<f64>,
    /// Current-hour cost and difference terms.
    pub c: f64,
    pub d: f64,
    pub load_kw: f64,
    pub solar_kw: f64,
}

/// Source of the SoC value reported to the controller.
pub trait Attacker {
    fn report(&mut self, ctx: &HourContext<'_>) -> Result<f64>;
}

impl<F> Attacker for F
where
    F: FnMut(&HourContext<'_>) -> f64,
{
    fn report(&mut self, ctx: &HourContext<'_>) -> Result<f64> {
        Ok(self(ctx))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourOutcome {
    pub reported: f64,
    pub command: bool,
    /// Dollars.
    pub cost: f64,
    pub soc_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub trace: Vec<MinuteRecord>,
    pub hourly_costs: Vec<f64>,
    pub total_cost: f64,
    pub avg_soc: f64,
    pub avg_reported_soc: f64,
    pub commands: Vec<bool>,
    pub reported: Vec<f64>,
    /// Actual SoC at the top of each hour.
    pub hour_start_soc: Vec<f64>,
}

impl SimResult {
    /// One-line summary, e.g. `Score: $2.74. Avg Batt Charge: 79.301%`.
    pub fn summary(&self) -> String {
        format!(
            "Score: ${}. Avg Batt Charge: {:.3}%",
            format_dollars(self.total_cost),
            self.avg_soc
        )
    }

    pub fn write_trace<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "minute,load_kw,solar_kw,command,soc,grid_kw,cost_delta")?;
        for r in &self.trace {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.minute,
                r.load_kw,
                r.solar_kw,
                u8::from(r.command),
                r.soc_after,
                r.grid_kw,
                r.cost_delta
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Two-decimal dollar figure without a negative zero.
pub fn format_dollars(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Steppable closed loop of controller and plant, one hour per step.
#[derive(Debug, Clone)]
pub struct MicrogridEnv<'a> {
    scenario: &'a Scenario,
    config: ControllerConfig,
    hours: usize,
    force_off: bool,
    record_trace: bool,
    battery: BatteryState,
    hour: usize,
    trace: Vec<MinuteRecord>,
    hourly_costs: Vec<f64>,
    commands: Vec<bool>,
    reported: Vec<f64>,
    hour_start_soc: Vec<f64>,
    total_cost: f64,
    soc_sum: f64,
    current: Option<(StateWindow<f64>, CostDiff<f64>)>,
}

impl<'a> MicrogridEnv<'a> {
    pub fn new(
        scenario: &'a Scenario,
        config: &ControllerConfig,
        init_soc: f64,
        hours: usize,
    ) -> Result<Self> {
        let battery = BatteryState::new(init_soc, config)?;
        Ok(Self {
            scenario,
            config: *config,
            hours,
            force_off: false,
            record_trace: true,
            battery,
            hour: 0,
            trace: Vec::new(),
            hourly_costs: Vec::with_capacity(hours),
            commands: Vec::with_capacity(hours),
            reported: Vec::with_capacity(hours),
            hour_start_soc: Vec::with_capacity(hours),
            total_cost: 0.0,
            soc_sum: 0.0,
            current: None,
        })
    }

    /// Every command forced OFF, the controller is bypassed.
    pub fn force_off(mut self, on: bool) -> Self {
        self.force_off = on;
        self
    }

    /// Skips storing minute records (totals are still kept).
    pub fn record_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    pub fn is_done(&self) -> bool {
        self.hour >= self.hours
    }

    pub fn hour(&self) -> usize {
        self.hour
    }

    pub fn hours(&self) -> usize {
        self.hours
    }

    pub fn soc(&self) -> f64 {
        self.battery.soc
    }

    pub fn total_cost(&self) -> f64 {
        self.total_cost
    }

    pub fn hourly_costs(&self) -> &[f64] {
        &self.hourly_costs
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    fn scenario_hour(&self) -> usize {
        self.hour % self.scenario.hours()
    }

    fn ensure_current(&mut self) -> Result<()> {
        if self.current.is_none() {
            let h = self.scenario_hour();
            let p = self.scenario.hourly();
            let hours = p.hours();
            let pick = |xs: &[f64]| -> Vec<f64> {
                (0..self.config.horizon).map(|i| xs[(h + i) % hours]).collect()
            };
            let window = StateWindow {
                load_kw: pick(&p.load_kw),
                solar_kw: pick(&p.solar_kw),
                buy_price: pick(&p.buy_price),
                sell_price: pick(&p.sell_price),
                soc: self.battery.soc,
            };
            let cd = build_cost_diff(&window, &self.config)?;
            self.current = Some((window, cd));
        }
        Ok(())
    }

    /// Context for the current hour. Valid after the last step as well, where
    /// it describes the hour following the run.
    pub fn context(&mut self) -> Result<HourContext<'_>> {
        self.ensure_current()?;
        let (window, cd) = self.current.as_ref().expect("window cached");
        Ok(HourContext {
            hour: self.hour,
            scenario_hour: self.hour % self.scenario.hours(),
            soc: self.battery.soc,
            window,
            cost_diff: cd,
            c: cd.c[0],
            d: cd.d[0],
            load_kw: window.load_kw[0],
            solar_kw: window.solar_kw[0],
        })
    }

    /// Runs the controller on the reported SoC and the plant for one hour.
    pub fn advance(&mut self, reported: f64) -> Result<HourOutcome> {
        if self.is_done() {
            return Err(crate::Error::InvalidInput("simulation already finished".into()));
        }
        self.ensure_current()?;
        let command = if self.force_off {
            false
        } else {
            let (window, _) = self.current.as_ref().expect("window cached");
            let spoofed = window.with_soc(reported);
            control_step(&spoofed, &self.config)?.0
        };

        self.hour_start_soc.push(self.battery.soc);
        let base = self.scenario_hour() * MINUTES_PER_HOUR;
        let mut hour_cost = 0.0;
        for m in 0..MINUTES_PER_HOUR {
            let idx = base + m;
            let (next, mut rec) = step_minute(
                self.battery,
                self.scenario.load_kw()[idx],
                self.scenario.solar_kw()[idx],
                command,
                self.scenario.buy_price()[idx],
                self.scenario.sell_price()[idx],
            );
            rec.minute = self.hour * MINUTES_PER_HOUR + m;
            self.battery = next;
            hour_cost += rec.cost_delta;
            self.total_cost += rec.cost_delta;
            self.soc_sum += rec.soc_after;
            if self.record_trace {
                self.trace.push(rec);
            }
        }
        self.hourly_costs.push(hour_cost);
        self.commands.push(command);
        self.reported.push(reported);
        self.hour += 1;
        self.current = None;
        Ok(HourOutcome {
            reported,
            command,
            cost: hour_cost,
            soc_after: self.battery.soc,
        })
    }

    /// One hour with the attacker (if any) choosing the reported SoC.
    pub fn step_with<'b>(&mut self, attacker: Option<&mut (dyn Attacker + 'b)>) -> Result<HourOutcome> {
        let reported = match attacker {
            Some(a) => {
                let ctx = self.context()?;
                a.report(&ctx)?
            }
            None => self.battery.soc,
        };
        self.advance(reported)
    }

    pub fn into_result(self) -> SimResult {
        let steps = self.hourly_costs.len();
        let minutes = (steps * MINUTES_PER_HOUR).max(1) as f64;
        let avg_reported = if steps == 0 {
            0.0
        } else {
            self.reported.iter().sum::<f64>() / steps as f64
        };
        SimResult {
            trace: self.trace,
            total_cost: self.total_cost,
            avg_soc: self.soc_sum / minutes,
            avg_reported_soc: avg_reported,
            hourly_costs: self.hourly_costs,
            commands: self.commands,
            reported: self.reported,
            hour_start_soc: self.hour_start_soc,
        }
    }
}

/// Closed-loop run over every hour of the scenario.
pub fn run_simulation(
    scenario: &Scenario,
    config: &ControllerConfig,
    init_soc: f64,
    attacker: Option<&mut dyn Attacker>,
) -> Result<SimResult> {
    run_simulation_for(scenario, config, init_soc, scenario.hours(), attacker)
}

/// Closed-loop run over `hours` steps, wrapping past the end of the scenario.
pub fn run_simulation_for(
    scenario: &Scenario,
    config: &ControllerConfig,
    init_soc: f64,
    hours: usize,
    mut attacker: Option<&mut dyn Attacker>,
) -> Result<SimResult> {
    let mut env = MicrogridEnv::new(scenario, config, init_soc, hours)?;
    while !env.is_done() {
        env.step_with(attacker.as_deref_mut())?;
    }
    Ok(env.into_result())
}

/// Same loop with every hourly command forced OFF.
pub fn baseline_all_off(
    scenario: &Scenario,
    config: &ControllerConfig,
    init_soc: f64,
) -> Result<SimResult> {
    let mut env = MicrogridEnv::new(scenario, config, init_soc, scenario.hours())?.force_off(true);
    while !env.is_done() {
        env.step_with(None)?;
    }
    Ok(env.into_result())
}
