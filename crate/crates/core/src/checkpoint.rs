//! Bit-exact text checkpoints.
//!
//! ```text
//! qensemble-checkpoint v1
//! meta <key> <value>
//! block <name> <len>
//! <f64 bit patterns as 16-digit hex, up to 8 per line>
//! end
//! ```
//!
//! Floats are stored as their IEEE-754 bit patterns, so a save/load round
//! trip reproduces every weight exactly, including NaN payloads and signed zeros.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ddqn::DdqnAgent;
use crate::error::{contract, Error, Result};
use crate::model::QFunction;

pub const CHECKPOINT_HEADER: &str = "qensemble-checkpoint v1";
const WORDS_PER_LINE: usize = 8;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub blocks: Vec<(String, Vec<f64>)>,
}

impl Checkpoint {
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("checkpoint lacks `{key}`")))
    }

    fn parse_meta<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Config(format!("checkpoint `{key}` is malformed")))
    }

    pub fn block(&self, name: &str) -> Result<&[f64]> {
        self.blocks
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
            .ok_or_else(|| Error::Config(format!("checkpoint lacks block `{name}`")))
    }

    pub fn push_blocks<'a>(&mut self, prefix: &str, blocks: impl IntoIterator<Item = &'a [f64]>) {
        for (i, b) in blocks.into_iter().enumerate() {
            self.blocks.push((format!("{prefix}.{i}"), b.to_vec()));
        }
    }

    /// Copies `prefix.0`, `prefix.1`, … into `dst`, which must match in count and shape.
    pub fn restore_blocks(&self, prefix: &str, dst: Vec<&mut [f64]>) -> Result<()> {
        let found = self
            .blocks
            .iter()
            .filter(|(n, _)| n.strip_prefix(prefix).is_some_and(|r| r.starts_with('.')))
            .count();
        if found != dst.len() {
            return contract(format!(
                "checkpoint has {found} `{prefix}` blocks, model has {}",
                dst.len()
            ));
        }
        for (i, d) in dst.into_iter().enumerate() {
            let src = self.block(&format!("{prefix}.{i}"))?;
            if src.len() != d.len() {
                return contract(format!(
                    "block {prefix}.{i} has {} values, model expects {}",
                    src.len(),
                    d.len()
                ));
            }
            d.copy_from_slice(src);
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{CHECKPOINT_HEADER}\n");
        for (k, v) in &self.meta {
            writeln!(out, "meta {k} {v}").unwrap();
        }
        for (name, values) in &self.blocks {
            writeln!(out, "block {name} {}", values.len()).unwrap();
            for chunk in values.chunks(WORDS_PER_LINE) {
                let words: Vec<String> = chunk.iter().map(|v| format!("{:016x}", v.to_bits())).collect();
                writeln!(out, "{}", words.join(" ")).unwrap();
            }
        }
        out.push_str("end\n");
        out
    }
}

impl FromStr for Checkpoint {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let perr = |line: usize, message: &str| Error::Parse {
            line,
            message: message.to_string(),
        };
        match lines.next() {
            Some((_, h)) if h == CHECKPOINT_HEADER => {}
            _ => return Err(perr(1, "missing checkpoint header")),
        }
        let mut ck = Checkpoint::default();
        let mut pending: Option<(String, usize, Vec<f64>)> = None;
        let mut ended = false;
        for (ln, line) in lines {
            if ended {
                if line.is_empty() {
                    continue;
                }
                return Err(perr(ln, "content after `end`"));
            }
            if let Some((name, len, mut vals)) = pending.take() {
                for w in line.split_whitespace() {
                    let bits = u64::from_str_radix(w, 16).map_err(|_| perr(ln, "bad hex word"))?;
                    vals.push(f64::from_bits(bits));
                }
                if vals.len() > len {
                    return Err(perr(ln, "block longer than declared"));
                }
                if vals.len() < len {
                    pending = Some((name, len, vals));
                } else {
                    ck.blocks.push((name, vals));
                }
                continue;
            }
            let mut toks = line.splitn(3, ' ');
            match (toks.next(), toks.next(), toks.next()) {
                (Some("meta"), Some(k), Some(v)) => {
                    ck.meta.insert(k.to_string(), v.to_string());
                }
                (Some("block"), Some(name), Some(len)) => {
                    let len: usize = len.parse().map_err(|_| perr(ln, "bad block length"))?;
                    if len == 0 {
                        ck.blocks.push((name.to_string(), Vec::new()));
                    } else {
                        pending = Some((name.to_string(), len, Vec::with_capacity(len)));
                    }
                }
                (Some("end"), None, None) => ended = true,
                _ => return Err(perr(ln, "unrecognised line")),
            }
        }
        if pending.is_some() {
            return Err(perr(text.lines().count(), "truncated block"));
        }
        if !ended {
            return Err(perr(text.lines().count(), "missing `end`"));
        }
        Ok(ck)
    }
}

/// Captures networks, optimiser moments, exploration state and the
/// behaviour RNG position of an agent.
pub fn agent_checkpoint<Q: QFunction>(agent: &DdqnAgent<Q>) -> Checkpoint {
    let mut ck = Checkpoint::default();
    ck.set("updates", agent.updates);
    ck.set("epsilon", format!("{:016x}", agent.epsilon.to_bits()));
    ck.set("adam_steps", agent.adam.step_count);
    let seed: String = agent.rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
    ck.set("rng_seed", seed);
    ck.set("rng_stream", agent.rng.get_stream());
    ck.set("rng_word_pos", agent.rng.get_word_pos());
    ck.push_blocks("online", agent.online.param_blocks());
    ck.push_blocks("target", agent.target.param_blocks());
    ck.push_blocks("adam_m", agent.adam.first_moment.iter().map(Vec::as_slice));
    ck.push_blocks("adam_v", agent.adam.second_moment.iter().map(Vec::as_slice));
    ck
}

/// Inverse of [`agent_checkpoint`] for an agent of the same architecture.
pub fn restore_agent<Q: QFunction>(ck: &Checkpoint, agent: &mut DdqnAgent<Q>) -> Result<()> {
    ck.restore_blocks("online", agent.online.param_blocks_mut())?;
    ck.restore_blocks("target", agent.target.param_blocks_mut())?;
    ck.restore_blocks(
        "adam_m",
        agent.adam.first_moment.iter_mut().map(Vec::as_mut_slice).collect(),
    )?;
    ck.restore_blocks(
        "adam_v",
        agent.adam.second_moment.iter_mut().map(Vec::as_mut_slice).collect(),
    )?;
    agent.updates = ck.parse_meta("updates")?;
    agent.adam.step_count = ck.parse_meta("adam_steps")?;
    let eps = u64::from_str_radix(ck.get("epsilon")?, 16)
        .map_err(|_| Error::Config("checkpoint epsilon is malformed".into()))?;
    agent.epsilon = f64::from_bits(eps);
    let hex = ck.get("rng_seed")?;
    if hex.len() != 64 {
        return Err(Error::Config("checkpoint rng seed is malformed".into()));
    }
    let mut seed = [0u8; 32];
    for (i, b) in seed.iter_mut().enumerate() {
        *b = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
            .map_err(|_| Error::Config("checkpoint rng seed is malformed".into()))?;
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(ck.parse_meta("rng_stream")?);
    rng.set_word_pos(ck.parse_meta("rng_word_pos")?);
    agent.rng = rng;
    Ok(())
}
