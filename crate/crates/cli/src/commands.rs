use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Parser;

use mgpt_core::agent::io::{write_curve, write_report};
use mgpt_core::agent::optim::OptimizerKind;
use mgpt_core::agent::{evaluate, train, InitSoc, TrainConfig, TrainedAgent};
use mgpt_core::plant::{baseline_all_off, run_simulation};
use mgpt_core::scenario::{
    load_scenario_dir, save_scenario, scenario_files, synth_scenario, Scenario, TouSchedule,
};
use mgpt_core::threat::{greedy_attack, oracle_attack_horizon, AttackBounds};
use mgpt_core::ControllerConfig;

use crate::manifest::{manifest_path, RunManifest};
use crate::{
    AttackArgs, BoundsArgs, Cli, Command, ModeArg, OptimizerArg, OracleArgs, OracleMode, PlantArgs,
    RerunArgs, ScenarioArgs, SimulateArgs, SynthArgs, TrainArgs,
};

/// Seed and length of the bundled synthetic scenario.
const BUNDLED_SEED: u64 = 7;
const BUNDLED_DAYS: usize = 2;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Attack(a) => cmd_attack(&a),
        Command::Oracle(a) => cmd_oracle(&a),
        Command::Rerun(a) => cmd_rerun(&a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

impl ScenarioArgs {
    fn tou(&self) -> TouSchedule {
        TouSchedule {
            off_peak: self.off_peak,
            mid_peak: self.mid_peak,
            on_peak: self.on_peak,
            sell: self.sell,
        }
    }

    fn load(&self, m: &mut RunManifest) -> Result<Scenario> {
        let tou = self.tou();
        tou.validate()?;
        let scenario = match &self.scenario {
            Some(dir) => {
                let (load, solar) = scenario_files(dir);
                m.input(&load)?.input(&solar)?;
                m.param("scenario", dir.display());
                load_scenario_dir(dir, &tou)
                    .with_context(|| format!("loading scenario from {}", dir.display()))?
            }
            None => {
                let s = synth_scenario(BUNDLED_SEED, BUNDLED_DAYS)?;
                Scenario::with_tariff(s.load_kw().to_vec(), s.solar_kw().to_vec(), &tou)?
            }
        };
        m.param("off-peak", self.off_peak)
            .param("mid-peak", self.mid_peak)
            .param("on-peak", self.on_peak)
            .param("sell", self.sell);
        Ok(scenario)
    }
}

impl PlantArgs {
    fn config(&self, m: &mut RunManifest) -> Result<ControllerConfig> {
        let config = ControllerConfig {
            horizon: self.horizon,
            ..ControllerConfig::with_capacity_kwh(self.capacity_kwh)
        };
        config.validate()?;
        m.param("capacity-kwh", self.capacity_kwh).param("T", self.horizon);
        Ok(config)
    }
}

impl BoundsArgs {
    fn bounds(&self, m: &mut RunManifest) -> Result<AttackBounds<f64>> {
        let bounds = match self.attack_mode {
            ModeArg::Full => AttackBounds::full_range(),
            ModeArg::Pct5 => AttackBounds::relative_5pct(),
            ModeArg::Abs => {
                let (Some(lo), Some(hi)) = (self.a_min, self.a_max) else {
                    bail!("--attack-mode abs needs --a-min and --a-max");
                };
                AttackBounds::absolute(lo, hi)?
            }
        };
        m.param("attack-mode", bounds.mode);
        if self.attack_mode == ModeArg::Abs {
            m.param("a-min", bounds.a_min).param("a-max", bounds.a_max);
        }
        Ok(bounds)
    }
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let mut m = RunManifest::new("synth", Some(a.seed));
    m.param("seed", a.seed).param("days", a.days).param("out", a.out.display());
    let scenario = synth_scenario(a.seed, a.days as usize)?;
    save_scenario(&scenario, &a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    m.write(&manifest_path(&a.out))?;
    println!(
        "wrote {} minutes to {}",
        scenario.minutes(),
        a.out.display()
    );
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut m = RunManifest::new("simulate", None);
    let scenario = a.scenario.load(&mut m)?;
    let config = a.plant.config(&mut m)?;
    m.param("init-soc", a.init_soc)
        .param("force-off", a.force_off)
        .param("out", a.out.display());
    let result = if a.force_off {
        baseline_all_off(&scenario, &config, a.init_soc)?
    } else {
        run_simulation(&scenario, &config, a.init_soc, None)?
    };
    result.write_trace(create(&a.out)?)?;
    m.write(&manifest_path(&a.out))?;
    println!("{}", result.summary());
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let mut m = RunManifest::new("train", Some(a.seed));
    let scenario = a.scenario.load(&mut m)?;
    let config = a.plant.config(&mut m)?;
    let bounds = a.bounds.bounds(&mut m)?;
    m.param("episodes", a.episodes)
        .param("steps", a.steps)
        .param("seed", a.seed)
        .param("gamma", a.gamma)
        .param("actor-lr", a.actor_lr)
        .param("critic-lr", a.critic_lr)
        .param(
            "optimizer",
            match a.optimizer {
                OptimizerArg::Adam => "adam",
                OptimizerArg::Sgd => "sgd",
            },
        );
    if let Some(b) = a.init_soc {
        m.param("init-soc", b);
    }
    m.param("out", a.out.display()).param("curve", a.curve.display());

    let tc = TrainConfig {
        episodes: a.episodes,
        steps: a.steps,
        gamma: a.gamma,
        actor_lr: a.actor_lr,
        critic_lr: a.critic_lr,
        optimizer: match a.optimizer {
            OptimizerArg::Adam => OptimizerKind::Adam,
            OptimizerArg::Sgd => OptimizerKind::Sgd,
        },
        seed: a.seed,
        bounds,
        init_soc: a.init_soc.map_or(InitSoc::Uniform, InitSoc::Fixed),
        ..TrainConfig::default()
    };
    let (agent, report) = train(&scenario, &config, &tc).context("training aborted")?;
    agent.save(&a.out).with_context(|| format!("cannot write {}", a.out.display()))?;
    write_curve(&report.curve, create(&a.curve)?)?;
    m.write(&manifest_path(&a.out))?;

    let c = &report.curve;
    let w = c.len().min(50);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len().max(1) as f64;
    println!(
        "trained {} episodes: first-{w} mean reward {:.1}, last-{w} mean reward {:.1}",
        c.len(),
        mean(&c[..w]),
        mean(&c[c.len() - w..])
    );
    Ok(())
}

fn cmd_attack(a: &AttackArgs) -> Result<()> {
    let mut m = RunManifest::new("attack", Some(a.seed));
    m.input(&a.agent)?;
    m.param("agent", a.agent.display());
    let agent = TrainedAgent::load(&a.agent)
        .with_context(|| format!("loading agent {}", a.agent.display()))?;
    let scenario = a.scenario.load(&mut m)?;
    let config = a.plant.config(&mut m)?;
    if a.init_soc.is_empty() {
        bail!("--init-soc needs at least one value");
    }
    let list: Vec<String> = a.init_soc.iter().map(f64::to_string).collect();
    m.param("init-soc", list.join(","))
        .param("runs", a.runs)
        .param("seed", a.seed)
        .param("out", a.out.display());

    let rows = evaluate(&agent, &scenario, &config, &a.init_soc, a.runs, a.seed)?;
    write_report(&rows, create(&a.out)?)?;
    m.write(&manifest_path(&a.out))?;
    println!("{:>8} {:>6} {:>9} {:>9} {:>10} {:>12}", "init_soc", "mode", "cost", "increase", "avg_charge", "avg_reported");
    for r in &rows {
        println!(
            "{:>8} {:>6} {:>9.3} {:>8.1}% {:>10.3} {:>12.3}",
            r.init_soc, r.attack_mode, r.cost, r.cost_increase_pct, r.avg_charge, r.avg_reported
        );
    }
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> Result<()> {
    let mut m = RunManifest::new("oracle", None);
    let scenario = a.scenario.load(&mut m)?;
    let config = a.plant.config(&mut m)?;
    let bounds = a.bounds.bounds(&mut m)?;
    m.param(
        "mode",
        match a.mode {
            OracleMode::Greedy => "greedy",
            OracleMode::Exact => "exact",
        },
    )
    .param("grid", a.grid)
    .param("hours", a.hours)
    .param("init-soc", a.init_soc)
    .param("out", a.out.display());
    if !(a.grid > 0.0 && a.grid.is_finite()) {
        bail!("--grid must be a positive spacing, got {}", a.grid);
    }

    let attack = match a.mode {
        OracleMode::Greedy => greedy_attack(&scenario, &config, a.init_soc, &bounds, a.grid, a.hours)?,
        OracleMode::Exact => oracle_attack_horizon(&scenario, &config, a.init_soc, &bounds, a.grid, a.hours)?,
    };
    let none = mgpt_core::plant::run_simulation_for(&scenario, &config, a.init_soc, a.hours, None)?;
    attack.write_report(create(&a.out)?)?;
    m.write(&manifest_path(&a.out))?;
    println!(
        "oracle cost ${:.4} over {} hours (no attack ${:.4})",
        attack.total_cost, a.hours, none.total_cost
    );
    Ok(())
}

fn cmd_rerun(a: &RerunArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.manifest)
        .with_context(|| format!("reading {}", a.manifest.display()))?;
    let m = RunManifest::parse(&text)?;
    if m.command == "rerun" {
        bail!("a manifest cannot re-run another re-run");
    }
    if m.version != crate::manifest::VERSION {
        eprintln!(
            "warning: manifest written by version {}, running {}",
            m.version,
            crate::manifest::VERSION
        );
    }
    m.verify_inputs()?;
    let cli = Cli::try_parse_from(m.argv()).context("manifest parameters no longer parse")?;
    run(cli.command)
}
