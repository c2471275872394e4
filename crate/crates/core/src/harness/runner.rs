use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{AgentKind, ExperimentConfig};
use super::metrics::{MetricsRecord, MetricsWriter, MovingAverages, MOVING_WINDOW};
use crate::checkpoint::{agent_checkpoint, Checkpoint};
use crate::ddqn::{random_episode, run_episode, DdqnAgent, ReplayBuffer};
use crate::env::{Action, Platformer, WorldSpec, OBSERVATION_LEN};
use crate::error::{Error, Result};
use crate::model::AgentModel;

pub const METRICS_FILE: &str = "metrics.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const SNAPSHOT_FILE: &str = "config.toml";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const ABORT_CHECKPOINT_FILE: &str = "checkpoint-abort.txt";

/// Seeds for the independent random streams of a run, all drawn from the
/// config seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSeeds {
    pub model: u64,
    pub behaviour: u64,
    pub replay: u64,
}

impl RunSeeds {
    pub fn derive(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            model: rng.gen(),
            behaviour: rng.gen(),
            replay: rng.gen(),
        }
    }
}

pub fn load_world(config: &ExperimentConfig) -> Result<WorldSpec> {
    let mut world = match &config.world {
        Some(p) => WorldSpec::load(p).map_err(|e| Error::Config(format!("world {}: {e}", p.display())))?,
        None => WorldSpec::default_world(),
    };
    world.max_steps = config.max_steps;
    Ok(world)
}

pub fn build_model(config: &ExperimentConfig, seed: u64) -> Result<AgentModel> {
    let (k, l, depth) = (config.effective_chips(), config.qubits, config.layers);
    match config.agent {
        AgentKind::Classical => AgentModel::classical(OBSERVATION_LEN, Action::COUNT, k, l, depth, seed),
        AgentKind::SingleChip | AgentKind::MultiChip => {
            AgentModel::quantum(OBSERVATION_LEN, Action::COUNT, k, l, depth, seed)
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub records: Vec<MetricsRecord>,
    pub num_params: usize,
}

fn model_checkpoint(agent: &DdqnAgent<AgentModel>, config: &ExperimentConfig, episodes: usize) -> Checkpoint {
    let mut ck = agent_checkpoint(agent);
    ck.set("agent", config.agent);
    ck.set("chips", config.effective_chips());
    ck.set("qubits", config.qubits);
    ck.set("layers", config.layers);
    ck.set("episodes", episodes);
    if let AgentModel::Quantum(m) = &agent.online {
        let seeds: Vec<String> = m.chip_seeds.iter().map(u64::to_string).collect();
        ck.set("chip_seeds", seeds.join(","));
    }
    ck
}

/// Trains one agent and writes `metrics.csv`, `timing.csv`, the config
/// snapshot and a final checkpoint into `config.out_dir`. A numeric failure
/// writes `checkpoint-abort.txt` before the error is returned.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    run_experiment_with(config, |_| {})
}

/// As [`run_experiment`], calling `progress` after every episode.
pub fn run_experiment_with(config: &ExperimentConfig, mut progress: impl FnMut(&MetricsRecord)) -> Result<RunOutcome> {
    config.validate()?;
    let config = config.normalized();
    let world = load_world(&config)?;
    let dir = config.out_dir.clone();
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join(SNAPSHOT_FILE), config.to_toml())?;

    let seeds = RunSeeds::derive(config.train.seed);
    let model = build_model(&config, seeds.model)?;
    let num_params = model.num_params();
    let mut agent = DdqnAgent::new(model, config.train.clone(), seeds.behaviour)?;
    let mut buffer = ReplayBuffer::new(config.train.replay_capacity, seeds.replay)?;
    let mut env = Platformer::new(world);

    let mut metrics = MetricsWriter::create(dir.join(METRICS_FILE))?;
    let mut timing = std::fs::File::create(dir.join(TIMING_FILE))?;
    writeln!(timing, "episode,seconds")?;
    let mut averages = MovingAverages::new(MOVING_WINDOW);
    let mut records = Vec::with_capacity(config.train.max_episodes);
    let start = Instant::now();

    for episode in 0..config.train.max_episodes {
        let stats = match run_episode(
            &mut agent,
            &mut env,
            &mut buffer,
            config.train.seed.wrapping_add(episode as u64),
        ) {
            Ok(s) => s,
            Err(e @ Error::Numeric(_)) => {
                model_checkpoint(&agent, &config, episode).save(dir.join(ABORT_CHECKPOINT_FILE))?;
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        let (reward_ma100, loss_ma100) = averages.push(stats.reward, stats.mean_loss);
        let record = MetricsRecord {
            episode,
            reward: stats.reward,
            reward_ma100,
            loss: stats.mean_loss,
            loss_ma100,
            epsilon: agent.epsilon,
            steps: stats.steps,
        };
        metrics.write(&record)?;
        writeln!(timing, "{episode},{:.3}", start.elapsed().as_secs_f64())?;
        progress(&record);
        records.push(record);
        let done = episode + 1;
        if config.checkpoint_every > 0 && done % config.checkpoint_every == 0 {
            model_checkpoint(&agent, &config, done).save(dir.join(format!("checkpoint-ep{done}.txt")))?;
        }
    }
    model_checkpoint(&agent, &config, records.len()).save(dir.join(CHECKPOINT_FILE))?;
    Ok(RunOutcome {
        out_dir: dir,
        records,
        num_params,
    })
}

/// Episode rewards of the uniform random policy on the configured world.
pub fn random_policy_rewards(config: &ExperimentConfig, episodes: usize, seed: u64) -> Result<Vec<f64>> {
    let mut env = Platformer::new(load_world(config)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..episodes)
        .map(|e| random_episode(&mut env, e as u64, &mut rng))
        .collect()
}

pub fn snapshot_path(dir: impl AsRef<Path>) -> PathBuf {
    dir.as_ref().join(SNAPSHOT_FILE)
}
