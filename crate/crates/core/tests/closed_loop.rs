use mgpt_core::agent::{evaluate, train, TrainConfig, TrainedAgent};
use mgpt_core::dispatch::{enumerate_dispatch, solve_dispatch};
use mgpt_core::plant::run_simulation_for;
use mgpt_core::scenario::{load_scenario_dir, save_scenario, synth_scenario, TouSchedule};
use mgpt_core::threat::{greedy_attack, oracle_attack_horizon, AttackBounds};
use mgpt_core::{ControllerConfig, ControllerConfig32, CostDiff, CostDiff32};

#[test]
fn saved_scenario_simulates_identically() {
    let sc = synth_scenario(11, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_scenario(&sc, dir.path()).unwrap();
    let back = load_scenario_dir(dir.path(), &TouSchedule::default()).unwrap();
    let config = ControllerConfig::default();
    let a = run_simulation_for(&sc, &config, 85.0, 24, None).unwrap();
    let b = run_simulation_for(&back, &config, 85.0, 24, None).unwrap();
    assert_eq!(a, b);
}

#[test]
fn horizon_oracle_dominates_greedy_and_no_attack() {
    let sc = synth_scenario(7, 2).unwrap();
    let config = ControllerConfig::default();
    let bounds = AttackBounds::full_range();
    for (start, hours) in [(80.0, 5), (95.0, 4)] {
        let none = run_simulation_for(&sc, &config, start, hours, None).unwrap();
        let greedy = greedy_attack(&sc, &config, start, &bounds, 5.0, hours).unwrap();
        let exact = oracle_attack_horizon(&sc, &config, start, &bounds, 5.0, hours).unwrap();
        assert!(exact.total_cost >= greedy.total_cost);
        assert!(exact.total_cost >= none.total_cost);
        assert_eq!(exact.offsets.len(), hours);
    }
}

#[test]
fn f32_and_f64_solvers_agree_on_integer_instances() {
    let c = vec![-60.0, -20.0, 140.0, 500.0, 30.0, -10.0];
    let d = vec![6.0, 2.0, -7.0, -25.0, -3.0, 4.0];
    let cfg64 = ControllerConfig {
        horizon: 6,
        ..ControllerConfig::default()
    };
    let cfg32 = ControllerConfig32 {
        horizon: 6,
        ..ControllerConfig32::default()
    };
    for b0 in [75.0, 80.0, 90.0, 100.0] {
        let p64 = solve_dispatch(&CostDiff::new(c.clone(), d.clone()).unwrap(), b0, &cfg64).unwrap();
        let cd32 = CostDiff32::new(c.iter().map(|&x| x as f32).collect(), d.iter().map(|&x| x as f32).collect()).unwrap();
        let p32 = solve_dispatch(&cd32, b0 as f32, &cfg32).unwrap();
        assert_eq!(p64.battery, p32.battery);
        assert_eq!(p64.objective as f32, p32.objective);
        assert_eq!(p32, enumerate_dispatch(&cd32, b0 as f32, &cfg32).unwrap());
    }
}

#[test]
fn saved_agent_evaluates_identically() {
    let sc = synth_scenario(7, 2).unwrap();
    let config = ControllerConfig::default();
    let tc = TrainConfig {
        episodes: 3,
        steps: 12,
        hidden: vec![8],
        ..TrainConfig::default()
    };
    let (agent, _) = train(&sc, &config, &tc).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("agent.txt");
    agent.save(&path).unwrap();
    let loaded = TrainedAgent::load(&path).unwrap();
    let a = evaluate(&agent, &sc, &config, &[80.0], 3, 5).unwrap();
    let b = evaluate(&loaded, &sc, &config, &[80.0], 3, 5).unwrap();
    assert_eq!(a, b);
}
