//! Plain-text agent files and learning-curve CSVs.
//!
//! ```text
//! mgpt-agent v1
//! bounds mode=full a_min=-100 a_max=100
//! scales soc=0.01 cost=0.004 diff=0.03 power=0.1
//! policy log_std=1.6 action_scale=10
//! actor sizes=5,64,64,1 activations=tanh,tanh,identity
//! <actor parameters, space separated>
//! critic sizes=5,64,64,1 activations=tanh,tanh,identity
//! <critic parameters>
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so save/load is exact.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use super::mlp::{Activation, Mlp};
use super::policy::GaussianPolicy;
use super::{StateScales, TrainedAgent};
use crate::error::{Error, Result};
use crate::threat::{AttackBounds, AttackMode};

pub const AGENT_MAGIC: &str = "mgpt-agent v1";

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn write_net(out: &mut String, name: &str, net: &Mlp<f64>) {
    let _ = writeln!(
        out,
        "{name} sizes={} activations={}",
        join(net.sizes()),
        join(net.activations())
    );
    let params: Vec<String> = net.params().iter().map(|p| p.to_string()).collect();
    let _ = writeln!(out, "{}", params.join(" "));
}

impl TrainedAgent {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{AGENT_MAGIC}");
        let b = &self.bounds;
        let _ = writeln!(out, "bounds mode={} a_min={} a_max={}", b.mode, b.a_min, b.a_max);
        let s = &self.scales;
        let _ = writeln!(
            out,
            "scales soc={} cost={} diff={} power={}",
            s.soc, s.cost, s.diff, s.power
        );
        let _ = writeln!(
            out,
            "policy log_std={} action_scale={}",
            self.policy.log_std, self.policy.action_scale
        );
        write_net(&mut out, "actor", &self.policy.mean);
        write_net(&mut out, "critic", &self.critic);
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::AgentFormat(msg.into())
}

/// `tag k=v k=v` line into its key/value map.
fn fields<'a>(line: Option<&'a str>, tag: &str) -> Result<HashMap<&'a str, &'a str>> {
    let line = line.ok_or_else(|| bad(format!("missing `{tag}` line")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(bad(format!("expected `{tag}` line, found `{line}`")));
    }
    parts
        .map(|kv| {
            kv.split_once('=')
                .ok_or_else(|| bad(format!("malformed field `{kv}` in `{tag}` line")))
        })
        .collect()
}

fn get<T: FromStr>(map: &HashMap<&str, &str>, key: &str) -> Result<T> {
    let raw = map.get(key).ok_or_else(|| bad(format!("missing field `{key}`")))?;
    raw.parse().map_err(|_| bad(format!("bad value `{raw}` for `{key}`")))
}

fn list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|x| x.parse().map_err(|_| bad(format!("bad {what} entry `{x}`"))))
        .collect()
}

fn read_net<'a>(lines: &mut impl Iterator<Item = &'a str>, tag: &str) -> Result<Mlp<f64>> {
    let head = fields(lines.next(), tag)?;
    let sizes: Vec<usize> = list(head.get("sizes").copied().unwrap_or(""), "size")?;
    let acts: Vec<Activation> = list(head.get("activations").copied().unwrap_or(""), "activation")?;
    let params = lines
        .next()
        .ok_or_else(|| bad(format!("missing {tag} parameters")))?
        .split_whitespace()
        .map(|p| p.parse::<f64>().map_err(|_| bad(format!("bad {tag} parameter `{p}`"))))
        .collect::<Result<Vec<_>>>()?;
    Mlp::from_parts(sizes, acts, params).map_err(|e| bad(format!("{tag}: {e}")))
}

impl FromStr for TrainedAgent {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some(AGENT_MAGIC) {
            return Err(bad(format!("not an agent file (expected `{AGENT_MAGIC}` header)")));
        }
        let b = fields(lines.next(), "bounds")?;
        let mode: AttackMode = get(&b, "mode")?;
        let bounds: AttackBounds<f64> = AttackBounds {
            a_min: get(&b, "a_min")?,
            a_max: get(&b, "a_max")?,
            mode,
        };
        if bounds.a_min.is_nan() || bounds.a_max.is_nan() || bounds.a_min > bounds.a_max {
            return Err(bad("a_min exceeds a_max"));
        }
        let s = fields(lines.next(), "scales")?;
        let scales = StateScales {
            soc: get(&s, "soc")?,
            cost: get(&s, "cost")?,
            diff: get(&s, "diff")?,
            power: get(&s, "power")?,
        };
        let p = fields(lines.next(), "policy")?;
        let log_std: f64 = get(&p, "log_std")?;
        let action_scale: f64 = get(&p, "action_scale")?;
        let actor = read_net(&mut lines, "actor")?;
        let critic = read_net(&mut lines, "critic")?;
        if critic.output_size() != 1 || critic.input_size() != actor.input_size() {
            return Err(bad("critic shape does not match actor"));
        }
        if actor.input_size() != super::STATE_DIM {
            return Err(bad(format!("networks must take {} inputs", super::STATE_DIM)));
        }
        if let Some(extra) = lines.next() {
            return Err(bad(format!("trailing content `{extra}`")));
        }
        Ok(TrainedAgent {
            policy: GaussianPolicy::new(actor, log_std, action_scale)?,
            critic,
            scales,
            bounds,
        })
    }
}

/// `episode,cumulative_reward` rows.
pub fn write_curve<W: Write>(curve: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "episode,cumulative_reward")?;
    for (i, r) in curve.iter().enumerate() {
        writeln!(out, "{i},{r}")?;
    }
    Ok(())
}

pub fn write_report<W: Write>(rows: &[super::ReportRow], mut out: W) -> Result<()> {
    writeln!(out, "{}", super::ReportRow::CSV_HEADER)?;
    for row in rows {
        writeln!(out, "{}", row.csv_line())?;
    }
    Ok(())
}
