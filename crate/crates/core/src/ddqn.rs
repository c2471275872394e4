//! Double DQN: replay buffer, epsilon-greedy behaviour and the training step.
//!
//! The target for a transition `(s, a, r, s', done)` is
//! `y = r + γ·Q_target(s', argmax_a' Q_online(s', a'))`, or `y = r` when the
//! episode ended. The loss is the batch mean of `(Q_online(s, a) − y)²`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{Action, Observation, Platformer, TabularEnv};
use crate::error::{contract, Error, Result};
use crate::features::{Featurize, SparseFeatures};
use crate::model::{QFunction, QValues, SampleGrad};
use crate::nn::{adam_step, AdamState};

#[derive(Clone, Debug, PartialEq)]
pub struct Transition<S> {
    pub state: S,
    pub action: usize,
    pub reward: f64,
    pub next_state: S,
    pub done: bool,
}

/// Fixed-capacity ring of transitions with its own sampling stream.
#[derive(Clone, Debug)]
pub struct ReplayBuffer<S> {
    capacity: usize,
    items: Vec<Transition<S>>,
    next: usize,
    rng: ChaCha8Rng,
}

impl<S> ReplayBuffer<S> {
    pub fn new(capacity: usize, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return contract("replay capacity must be positive");
        }
        Ok(Self {
            capacity,
            items: Vec::new(),
            next: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends, overwriting the oldest entry once full.
    pub fn push(&mut self, t: Transition<S>) -> Result<()> {
        if !t.reward.is_finite() {
            return Err(Error::Numeric(format!("non-finite reward {}", t.reward)));
        }
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
        Ok(())
    }

    /// `n` distinct transitions, uniformly at random.
    pub fn sample(&mut self, n: usize) -> Result<Vec<&Transition<S>>> {
        if n > self.items.len() {
            return contract(format!("cannot sample {n} from a buffer of {}", self.items.len()));
        }
        let picks = index::sample(&mut self.rng, self.items.len(), n);
        Ok(picks.into_iter().map(|i| &self.items[i]).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epsilon_start: f64,
    /// Multiplicative decay applied after every training update.
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub target_sync_every: u64,
    pub burn_in: usize,
    pub replay_capacity: usize,
    pub max_episodes: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            learning_rate: 0.00025,
            batch_size: 32,
            epsilon_start: 1.0,
            epsilon_decay: 0.99999999,
            epsilon_min: 0.1,
            target_sync_every: 10_000,
            burn_in: 1_000,
            replay_capacity: 100_000,
            max_episodes: 500,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) {
            return bad(format!("epsilon_start {} outside [0, 1]", self.epsilon_start));
        }
        if !(0.0..=self.epsilon_start).contains(&self.epsilon_min) {
            return bad(format!("epsilon_min {} outside [0, epsilon_start]", self.epsilon_min));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return bad(format!("epsilon_decay {} outside (0, 1]", self.epsilon_decay));
        }
        if self.target_sync_every == 0 {
            return bad("target_sync_every must be positive".into());
        }
        if self.replay_capacity < self.batch_size.max(self.burn_in) {
            return bad("replay capacity is smaller than the batch size or burn-in".into());
        }
        if self.max_episodes == 0 {
            return bad("max_episodes must be positive".into());
        }
        Ok(())
    }
}

/// A random action with probability `epsilon`, otherwise `None`.
fn explore(epsilon: f64, num_actions: usize, rng: &mut impl Rng) -> Option<usize> {
    (rng.gen::<f64>() < epsilon).then(|| rng.gen_range(0..num_actions))
}

/// Epsilon-greedy choice; the greedy branch breaks ties toward the lowest index.
pub fn select_action(q: &QValues, epsilon: f64, rng: &mut impl Rng) -> Result<usize> {
    if q.0.is_empty() {
        return contract("no action values to choose from");
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return contract(format!("epsilon {epsilon} outside [0, 1]"));
    }
    Ok(explore(epsilon, q.0.len(), rng).unwrap_or_else(|| q.argmax().expect("non-empty")))
}

fn target_value<Q: QFunction>(
    next: &SparseFeatures,
    reward: f64,
    done: bool,
    online: &Q,
    target: &Q,
    gamma: f64,
) -> Result<f64> {
    if done {
        return Ok(reward);
    }
    let a = online
        .q_values(next)?
        .argmax()
        .ok_or_else(|| Error::Contract("empty action space".into()))?;
    let q = target.q_values(next)?;
    Ok(reward + gamma * q.0[a])
}

/// Double-Q regression targets for a batch.
pub fn ddqn_target<S, Q>(batch: &[&Transition<S>], online: &Q, target: &Q, gamma: f64) -> Result<Vec<f64>>
where
    S: Featurize + Sync,
    Q: QFunction,
{
    if online.num_actions() != target.num_actions() {
        return contract("online and target networks disagree on the action count");
    }
    batch
        .par_iter()
        .map(|t| target_value(&t.next_state.features(), t.reward, t.done, online, target, gamma))
        .collect()
}

/// Online and target networks plus optimiser and exploration state.
#[derive(Clone, Debug)]
pub struct DdqnAgent<Q> {
    pub online: Q,
    pub target: Q,
    pub config: TrainConfig,
    pub adam: AdamState,
    pub epsilon: f64,
    /// Completed training updates.
    pub updates: u64,
    pub rng: ChaCha8Rng,
}

impl<Q: QFunction> DdqnAgent<Q> {
    pub fn new(online: Q, config: TrainConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let adam = AdamState::new(online.param_blocks().iter().map(|b| b.len()));
        Ok(Self {
            target: online.clone(),
            online,
            epsilon: config.epsilon_start,
            config,
            adam,
            updates: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// Epsilon-greedy action under the online network. The network is only
    /// evaluated on the greedy branch.
    pub fn act(&mut self, state: &impl Featurize) -> Result<usize> {
        let n = self.online.num_actions();
        match explore(self.epsilon, n, &mut self.rng) {
            Some(a) => Ok(a),
            None => self
                .online
                .q_values(&state.features())?
                .argmax()
                .ok_or_else(|| Error::Contract("empty action space".into())),
        }
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }
}

/// One gradient update on a sampled batch. Returns `Ok(None)` without
/// touching anything while the buffer holds fewer than
/// `max(batch_size, burn_in)` transitions.
pub fn train_step<S, Q>(agent: &mut DdqnAgent<Q>, buffer: &mut ReplayBuffer<S>) -> Result<Option<f64>>
where
    S: Featurize + Sync,
    Q: QFunction,
{
    let cfg = &agent.config;
    if buffer.len() < cfg.batch_size.max(cfg.burn_in) {
        return Ok(None);
    }
    let batch = buffer.sample(cfg.batch_size)?;
    let n_actions = agent.online.num_actions();
    if let Some(t) = batch.iter().find(|t| t.action >= n_actions) {
        return contract(format!("stored action {} outside 0..{n_actions}", t.action));
    }
    let (online, target, gamma) = (&agent.online, &agent.target, cfg.gamma);
    let evaluated: Vec<(SparseFeatures, f64, SampleGrad)> = batch
        .par_iter()
        .map(|t| {
            let s = t.state.features();
            let y = target_value(&t.next_state.features(), t.reward, t.done, online, target, gamma)?;
            let mut unit = vec![0.0; n_actions];
            unit[t.action] = 1.0;
            let g = online.sample_grad(&s, &unit)?;
            Ok((s, y, g))
        })
        .collect::<Result<_>>()?;

    let b = batch.len() as f64;
    let mut grads = online.zero_grads();
    let mut loss = 0.0;
    for (t, (s, y, g)) in batch.iter().zip(&evaluated) {
        let err = g.q_values[t.action] - y;
        loss += err * err / b;
        online.fold_sample(s, g, 2.0 * err / b, &mut grads);
    }
    if !loss.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite loss after {} updates",
            agent.updates
        )));
    }
    let lr = cfg.learning_rate;
    adam_step(&mut agent.online.param_blocks_mut(), &grads, &mut agent.adam, lr)?;
    agent.epsilon = (agent.epsilon * agent.config.epsilon_decay).max(agent.config.epsilon_min);
    agent.updates += 1;
    if agent.updates.is_multiple_of(agent.config.target_sync_every) {
        agent.sync_target();
    }
    Ok(Some(loss))
}

/// Episodic environment with a discrete action space.
pub trait Environment {
    type State: Featurize + Clone + Send + Sync;
    fn num_actions(&self) -> usize;
    fn reset(&mut self, seed: u64) -> Self::State;
    /// `(next_state, reward, done)`.
    fn step(&mut self, action: usize) -> Result<(Self::State, f64, bool)>;
}

impl Environment for Platformer {
    type State = Observation;

    fn num_actions(&self) -> usize {
        Action::COUNT
    }

    fn reset(&mut self, seed: u64) -> Observation {
        Platformer::reset(self, seed)
    }

    fn step(&mut self, action: usize) -> Result<(Observation, f64, bool)> {
        let r = Platformer::step(self, Action::from_index(action)?)?;
        Ok((r.observation, r.reward, r.done))
    }
}

impl Environment for TabularEnv {
    type State = SparseFeatures;

    fn num_actions(&self) -> usize {
        self.mdp.num_actions
    }

    fn reset(&mut self, seed: u64) -> SparseFeatures {
        let s = TabularEnv::reset(self, &mut ChaCha8Rng::seed_from_u64(seed));
        self.encode(s)
    }

    fn step(&mut self, action: usize) -> Result<(SparseFeatures, f64, bool)> {
        let (s, r, done) = TabularEnv::step(self, action)?;
        Ok((self.encode(s), r, done))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeStats {
    pub reward: f64,
    pub steps: usize,
    /// Mean loss over the episode's training updates, if there were any.
    pub mean_loss: Option<f64>,
}

/// Plays one episode, storing every transition and running one training
/// step after each environment step.
pub fn run_episode<E, Q>(
    agent: &mut DdqnAgent<Q>,
    env: &mut E,
    buffer: &mut ReplayBuffer<E::State>,
    seed: u64,
) -> Result<EpisodeStats>
where
    E: Environment,
    Q: QFunction,
{
    if env.num_actions() != agent.online.num_actions() {
        return contract("environment and agent disagree on the action count");
    }
    let mut state = env.reset(seed);
    let (mut reward, mut steps, mut loss_sum, mut losses) = (0.0, 0, 0.0, 0usize);
    loop {
        let action = agent.act(&state)?;
        let (next, r, done) = env.step(action)?;
        reward += r;
        steps += 1;
        buffer.push(Transition {
            state,
            action,
            reward: r,
            next_state: next.clone(),
            done,
        })?;
        if let Some(l) = train_step(agent, buffer)? {
            loss_sum += l;
            losses += 1;
        }
        if done {
            break;
        }
        state = next;
    }
    Ok(EpisodeStats {
        reward,
        steps,
        mean_loss: (losses > 0).then(|| loss_sum / losses as f64),
    })
}

/// Total reward of one episode under the uniform random policy.
pub fn random_episode<E: Environment>(env: &mut E, seed: u64, rng: &mut impl Rng) -> Result<f64> {
    env.reset(seed);
    let mut total = 0.0;
    loop {
        let (_, r, done) = env.step(rng.gen_range(0..env.num_actions()))?;
        total += r;
        if done {
            return Ok(total);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_tabular_mdp, value_iteration};
    use crate::model::TabularQ;
    use crate::nn::{Activation, DenseLayer};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn greedy_and_tie_break() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_action(&QValues(vec![0.1, 0.9]), 0.0, &mut rng).unwrap(), 1);
        assert_eq!(select_action(&QValues(vec![0.5, 0.5]), 0.0, &mut rng).unwrap(), 0);
        assert!(select_action(&QValues(vec![]), 0.0, &mut rng).is_err());
        assert!(select_action(&QValues(vec![1.0]), 1.5, &mut rng).is_err());
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = QValues(vec![0.0, 10.0, 0.0, 0.0]);
        let mut counts = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            counts[select_action(&q, 1.0, &mut rng).unwrap()] += 1;
        }
        let p = 0.25;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    /// Returns fixed action values and counts how often it is queried.
    #[derive(Clone)]
    struct Probe {
        q: Vec<f64>,
        calls: Arc<AtomicUsize>,
        layer: DenseLayer,
    }

    impl Probe {
        fn new(q: Vec<f64>) -> Self {
            Self {
                layer: DenseLayer::identity(1, Activation::Linear),
                q,
                calls: Arc::new(AtomicUsize::new(0)),
            }
        }
    }

    impl QFunction for Probe {
        fn input_dim(&self) -> usize {
            1
        }
        fn num_actions(&self) -> usize {
            self.q.len()
        }
        fn q_values(&self, _: &SparseFeatures) -> Result<QValues> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(QValues(self.q.clone()))
        }
        fn input_layer(&self) -> &DenseLayer {
            &self.layer
        }
        fn sample_grad(&self, _: &SparseFeatures, _: &[f64]) -> Result<SampleGrad> {
            unimplemented!()
        }
        fn param_blocks(&self) -> Vec<&[f64]> {
            vec![]
        }
        fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
            vec![]
        }
    }

    fn tr(reward: f64, done: bool) -> Transition<SparseFeatures> {
        Transition {
            state: SparseFeatures::one_hot(1, 0),
            action: 0,
            reward,
            next_state: SparseFeatures::one_hot(1, 0),
            done,
        }
    }

    #[test]
    fn selection_online_evaluation_target() {
        // Online prefers action 1; the target's own argmax (action 0) must not be used.
        let online = Probe::new(vec![0.0, 5.0]);
        let target = Probe::new(vec![100.0, 2.0]);
        let t = tr(1.0, false);
        let y = ddqn_target(&[&t], &online, &target, 0.9).unwrap();
        assert!((y[0] - 2.8).abs() < 1e-12);
        assert_eq!(online.calls.load(Ordering::SeqCst), 1);
        assert_eq!(target.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn terminal_target_is_reward() {
        let online = Probe::new(vec![0.0, 5.0]);
        let target = Probe::new(vec![100.0, 2.0]);
        let t = tr(-5.0, true);
        assert_eq!(ddqn_target(&[&t], &online, &target, 0.9).unwrap(), vec![-5.0]);
        assert_eq!(
            online.calls.load(Ordering::SeqCst) + target.calls.load(Ordering::SeqCst),
            0
        );
    }

    #[test]
    fn replay_ring_and_sampling() {
        let mut buf = ReplayBuffer::new(3, 0).unwrap();
        for r in 0..5 {
            buf.push(tr(r as f64, false)).unwrap();
        }
        assert_eq!(buf.len(), 3);
        let mut rewards: Vec<f64> = buf.sample(3).unwrap().iter().map(|t| t.reward).collect();
        rewards.sort_by(f64::total_cmp);
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
        assert!(buf.sample(4).is_err());
        assert!(buf.push(tr(f64::NAN, false)).is_err());
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 4,
            burn_in: 8,
            target_sync_every: 5,
            replay_capacity: 100,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn no_update_before_burn_in() {
        let mut agent = DdqnAgent::new(TabularQ::zeros(1, 2), small_config(), 0).unwrap();
        let mut buf = ReplayBuffer::new(100, 0).unwrap();
        for _ in 0..7 {
            buf.push(tr(1.0, true)).unwrap();
        }
        let before = agent.online.clone();
        assert_eq!(train_step(&mut agent, &mut buf).unwrap(), None);
        assert_eq!(agent.online, before);
        assert_eq!(agent.updates, 0);
    }

    #[test]
    fn target_copied_on_sync() {
        let mut agent = DdqnAgent::new(TabularQ::zeros(1, 2), small_config(), 0).unwrap();
        let mut buf = ReplayBuffer::new(100, 0).unwrap();
        for _ in 0..8 {
            buf.push(tr(1.0, false)).unwrap();
        }
        for i in 1..=5 {
            train_step(&mut agent, &mut buf).unwrap().unwrap();
            if i < 5 {
                assert_ne!(agent.target.table, agent.online.table);
            }
        }
        let bits = |q: &TabularQ| {
            q.table
                .weights
                .iter()
                .chain(&q.table.bias)
                .map(|w| w.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&agent.target), bits(&agent.online));
    }

    #[test]
    fn single_fixed_target_loss_vanishes() {
        let cfg = TrainConfig {
            batch_size: 1,
            burn_in: 1,
            learning_rate: 0.05,
            ..small_config()
        };
        let mut agent = DdqnAgent::new(TabularQ::zeros(1, 1), cfg, 0).unwrap();
        let mut buf = ReplayBuffer::new(100, 0).unwrap();
        buf.push(tr(1.0, true)).unwrap();
        let losses: Vec<f64> = (0..800)
            .map(|_| train_step(&mut agent, &mut buf).unwrap().unwrap())
            .collect();
        // Adam's momentum overshoots, so the loss rings; its envelope must shrink.
        let peaks: Vec<f64> = losses
            .chunks(50)
            .map(|w| w.iter().copied().fold(0.0, f64::max))
            .collect();
        assert!(peaks.windows(2).all(|w| w[1] < w[0] || w[1] == 0.0), "{peaks:?}");
        assert!(losses[799] < 1e-8, "{}", losses[799]);
    }

    #[test]
    fn chain_converges_to_value_iteration() {
        let mdp = make_tabular_mdp("chain3").unwrap();
        let q_star = value_iteration(&mdp, 0.9, 1e-12).unwrap();
        let cfg = TrainConfig {
            batch_size: 6,
            burn_in: 6,
            learning_rate: 0.01,
            target_sync_every: 20,
            replay_capacity: 6,
            ..TrainConfig::default()
        };
        let mut agent = DdqnAgent::new(TabularQ::zeros(3, 2), cfg, 0).unwrap();
        let mut buf = ReplayBuffer::new(6, 0).unwrap();
        for s in 0..3 {
            for a in 0..2 {
                let o = mdp.table[s][a];
                buf.push(Transition {
                    state: SparseFeatures::one_hot(3, s),
                    action: a,
                    reward: o.reward,
                    next_state: SparseFeatures::one_hot(3, o.next),
                    done: o.done,
                })
                .unwrap();
            }
        }
        for _ in 0..20_000 {
            train_step(&mut agent, &mut buf).unwrap();
        }
        for s in 0..3 {
            for a in 0..2 {
                assert!(
                    (agent.online.get(s, a) - q_star[s][a]).abs() < 1e-3,
                    "Q({s},{a}) = {}",
                    agent.online.get(s, a)
                );
            }
        }
    }

    #[test]
    fn episodes_are_reproducible() {
        let run = || {
            let cfg = small_config();
            let mut agent = DdqnAgent::new(TabularQ::zeros(4, 4), cfg.clone(), 3).unwrap();
            let mut env = TabularEnv::new(make_tabular_mdp("grid4").unwrap(), 20);
            let mut buf = ReplayBuffer::new(cfg.replay_capacity, 4).unwrap();
            (0..30)
                .map(|e| run_episode(&mut agent, &mut env, &mut buf, e).unwrap().reward)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
