//! Decimal-text agent checkpoints with a shape header.
//!
//! The format captures the four networks, action bounds, and the
//! hyperparameters needed to rebuild an agent for evaluation; optimizer
//! moments and replay contents are not persisted. Values use the shortest
//! decimal form that parses back to the identical f64, so round-trips are
//! exact.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use super::ddpg::{DdpgAgent, DdpgConfig};
use super::mlp::{Layer, Mlp, OutputActivation};
use super::train::DualAgents;
use super::RlError;

const HEADER: &str = "powerarb agent-checkpoint v1";

fn write_vec(out: &mut String, label: &str, values: &[f64]) {
    out.push_str(label);
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

fn net_to_text(out: &mut String, name: &str, net: &Mlp) {
    let _ = writeln!(out, "net {name}");
    let _ = writeln!(out, "layers {}", net.layers.len());
    match &net.output {
        OutputActivation::Linear => out.push_str("output linear\n"),
        OutputActivation::BoundedSquash { low, high } => {
            out.push_str("output squash\n");
            write_vec(out, "low", low);
            write_vec(out, "high", high);
        }
    }
    for layer in &net.layers {
        let _ = writeln!(out, "layer {} {}", layer.in_dim, layer.out_dim);
        write_vec(out, "w", &layer.w);
        write_vec(out, "b", &layer.b);
    }
}

pub fn agent_to_text(agent: &DdpgAgent) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "obs_dim {}", agent.obs_dim());
    write_vec(&mut out, "action_low", &agent.action_low);
    write_vec(&mut out, "action_high", &agent.action_high);
    let c = &agent.cfg;
    let _ = writeln!(
        out,
        "config actor_lr {} critic_lr {} tau {} gamma {} replay {} batch {} noise {} {} {} hidden {} {} reward_scale {}",
        c.actor_lr,
        c.critic_lr,
        c.tau,
        c.gamma,
        c.replay_capacity,
        c.batch_size,
        c.noise_std_initial,
        c.noise_std_final,
        c.noise_decay_fraction,
        c.hidden.0,
        c.hidden.1,
        c.reward_scale
    );
    net_to_text(&mut out, "actor", &agent.actor);
    net_to_text(&mut out, "critic", &agent.critic);
    net_to_text(&mut out, "target_actor", &agent.target_actor);
    net_to_text(&mut out, "target_critic", &agent.target_critic);
    out.push_str("end\n");
    out
}

/// Concatenated checkpoint text of a dual-agent pair, used for artifact
/// checksums.
pub fn agent_to_text_pair(agents: &DualAgents) -> String {
    format!("{}{}", agent_to_text(&agents.da), agent_to_text(&agents.bm))
}

pub fn save_agent(agent: &DdpgAgent, path: &Path) -> Result<(), RlError> {
    let text = agent_to_text(agent);
    let mut f = std::fs::File::create(path)
        .map_err(|e| RlError::Io { path: path.display().to_string(), source: e })?;
    f.write_all(text.as_bytes())
        .map_err(|e| RlError::Io { path: path.display().to_string(), source: e })
}

struct Parser<I: Iterator<Item = String>> {
    lines: I,
}

impl<I: Iterator<Item = String>> Parser<I> {
    fn next_line(&mut self) -> Result<String, RlError> {
        self.lines
            .next()
            .ok_or_else(|| RlError::MalformedCheckpoint { reason: "unexpected end of file".into() })
    }

    fn parse_vec(&mut self, label: &str) -> Result<Vec<f64>, RlError> {
        let line = self.next_line()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(label) {
            return Err(RlError::MalformedCheckpoint { reason: format!("expected `{label}` line") });
        }
        parts
            .map(|p| {
                p.parse::<f64>().map_err(|_| RlError::MalformedCheckpoint {
                    reason: format!("bad float `{p}` in `{label}`"),
                })
            })
            .collect()
    }

    fn parse_net(&mut self, name: &str) -> Result<Mlp, RlError> {
        let bad = |reason: String| RlError::MalformedCheckpoint { reason };
        let line = self.next_line()?;
        if line.trim() != format!("net {name}") {
            return Err(bad(format!("expected `net {name}`, got `{line}`")));
        }
        let line = self.next_line()?;
        let n_layers: usize = line
            .strip_prefix("layers ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("bad layers line".into()))?;
        let line = self.next_line()?;
        let output = match line.trim() {
            "output linear" => OutputActivation::Linear,
            "output squash" => {
                let low = self.parse_vec("low")?;
                let high = self.parse_vec("high")?;
                OutputActivation::BoundedSquash { low, high }
            }
            other => return Err(bad(format!("unknown output `{other}`"))),
        };
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let line = self.next_line()?;
            let dims: Vec<usize> = line
                .strip_prefix("layer ")
                .map(|s| s.split_whitespace().filter_map(|p| p.parse().ok()).collect())
                .ok_or_else(|| bad("bad layer line".into()))?;
            if dims.len() != 2 {
                return Err(bad("layer line needs in/out dims".into()));
            }
            let (in_dim, out_dim) = (dims[0], dims[1]);
            let w = self.parse_vec("w")?;
            let b = self.parse_vec("b")?;
            if w.len() != in_dim * out_dim || b.len() != out_dim {
                return Err(bad(format!("layer {in_dim}x{out_dim} has wrong parameter counts")));
            }
            layers.push(Layer { in_dim, out_dim, w, b });
        }
        Ok(Mlp { layers, output })
    }
}

pub fn agent_from_text(text: &str) -> Result<DdpgAgent, RlError> {
    let bad = |reason: &str| RlError::MalformedCheckpoint { reason: reason.into() };
    let mut parser = Parser { lines: text.lines().map(|s| s.to_string()) };
    if parser.next_line()?.trim() != HEADER {
        return Err(bad("unknown header"));
    }
    let obs_dim: usize = parser
        .next_line()?
        .strip_prefix("obs_dim ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| bad("bad obs_dim"))?;
    let low = parser.parse_vec("action_low")?;
    let high = parser.parse_vec("action_high")?;
    let config_line = parser.next_line()?;
    let tokens: Vec<&str> = config_line.split_whitespace().collect();
    let field = |key: &str| -> Result<f64, RlError> {
        tokens
            .iter()
            .position(|t| *t == key)
            .and_then(|i| tokens.get(i + 1))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(&format!("missing config field {key}")))
    };
    let noise_pos = tokens
        .iter()
        .position(|t| *t == "noise")
        .ok_or_else(|| bad("missing noise fields"))?;
    let hidden_pos = tokens
        .iter()
        .position(|t| *t == "hidden")
        .ok_or_else(|| bad("missing hidden fields"))?;
    let parse_at = |i: usize| -> Result<f64, RlError> {
        tokens
            .get(i)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad numeric field"))
    };
    let cfg = DdpgConfig {
        actor_lr: field("actor_lr")?,
        critic_lr: field("critic_lr")?,
        tau: field("tau")?,
        gamma: field("gamma")?,
        replay_capacity: field("replay")? as usize,
        batch_size: field("batch")? as usize,
        noise_std_initial: parse_at(noise_pos + 1)?,
        noise_std_final: parse_at(noise_pos + 2)?,
        noise_decay_fraction: parse_at(noise_pos + 3)?,
        hidden: (parse_at(hidden_pos + 1)? as usize, parse_at(hidden_pos + 2)? as usize),
        reward_scale: field("reward_scale")?,
    };
    let actor = parser.parse_net("actor")?;
    let critic = parser.parse_net("critic")?;
    let target_actor = parser.parse_net("target_actor")?;
    let target_critic = parser.parse_net("target_critic")?;
    if parser.next_line()?.trim() != "end" {
        return Err(bad("missing end marker"));
    }
    DdpgAgent::from_networks(obs_dim, low, high, cfg, actor, critic, target_actor, target_critic)
}

pub fn load_agent(path: &Path) -> Result<DdpgAgent, RlError> {
    let file = std::fs::File::open(path)
        .map_err(|e| RlError::Io { path: path.display().to_string(), source: e })?;
    let mut text = String::new();
    std::io::BufReader::new(file)
        .read_to_string(&mut text)
        .map_err(|e| RlError::Io { path: path.display().to_string(), source: e })?;
    agent_from_text(&text)
}

pub fn save_dual_agents(agents: &DualAgents, dir: &Path, prefix: &str) -> Result<(), RlError> {
    save_agent(&agents.da, &dir.join(format!("{prefix}_da_agent.txt")))?;
    save_agent(&agents.bm, &dir.join(format!("{prefix}_bm_agent.txt")))
}

pub fn load_dual_agents(dir: &Path, prefix: &str) -> Result<DualAgents, RlError> {
    Ok(DualAgents {
        da: load_agent(&dir.join(format!("{prefix}_da_agent.txt")))?,
        bm: load_agent(&dir.join(format!("{prefix}_bm_agent.txt")))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let agent = DdpgAgent::new(
            5,
            vec![20.0, -200.0],
            vec![200.0, 200.0],
            DdpgConfig::default(),
            99,
        )
        .unwrap();
        let text = agent_to_text(&agent);
        let restored = agent_from_text(&text).unwrap();
        assert_eq!(agent.actor, restored.actor);
        assert_eq!(agent.critic, restored.critic);
        assert_eq!(agent.target_actor, restored.target_actor);
        assert_eq!(agent.target_critic, restored.target_critic);
        // Serialize again: byte-identical.
        assert_eq!(text, agent_to_text(&restored));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let agent =
            DdpgAgent::new(3, vec![-1.0], vec![1.0], DdpgConfig::default(), 4).unwrap();
        let path = dir.path().join("agent.txt");
        save_agent(&agent, &path).unwrap();
        let restored = load_agent(&path).unwrap();
        assert_eq!(agent.actor, restored.actor);
    }

    #[test]
    fn malformed_rejected() {
        assert!(matches!(
            agent_from_text("not a checkpoint"),
            Err(RlError::MalformedCheckpoint { .. })
        ));
    }
}
