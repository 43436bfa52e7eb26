//! Red-teaming toolkit for an hourly microgrid battery controller.
//!
//! * [`scenario`]: minute-resolution load, solar and tariff data, hourly forecast windows.
//! * [`dispatch`]: the controller, an exact binary dispatch solver plus an enumeration oracle.
//! * [`plant`]: minute-level battery/grid simulation and the hourly control loop.
//! * [`threat`]: false data injection on the reported state of charge and exhaustive
//!   reference attacks.
//! * [`agent`]: one-step TD advantage actor-critic that learns spoofing attacks.
//!
//! The numeric core is generic over [`Scalar`]; the aliases below fix it to
//! `f64`, which is what the simulation and training paths use.

pub mod agent;
pub mod dispatch;
pub mod error;
pub mod num;
pub mod plant;
pub mod scenario;
pub mod threat;

pub use error::{Error, Result};
pub use num::Scalar;

pub type ControllerConfig = dispatch::ControllerConfig<f64>;
pub type CostDiff = dispatch::CostDiff<f64>;
pub type ControlPlan = dispatch::ControlPlan<f64>;
pub type StateWindow = scenario::StateWindow<f64>;
pub type AttackBounds = threat::AttackBounds<f64>;
pub type FdiAction = threat::FdiAction<f64>;
pub type Mlp = agent::mlp::Mlp<f64>;
pub type GaussianPolicy = agent::policy::GaussianPolicy<f64>;

pub type ControllerConfig32 = dispatch::ControllerConfig<f32>;
pub type CostDiff32 = dispatch::CostDiff<f32>;
pub type ControlPlan32 = dispatch::ControlPlan<f32>;
pub type StateWindow32 = scenario::StateWindow<f32>;
pub type Mlp32 = agent::mlp::Mlp<f32>;
