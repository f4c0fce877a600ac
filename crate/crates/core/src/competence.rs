//! Goal-conditioned learning and execution: pseudo-rewards, tabular
//! temporal-difference learning, subgoal chains with enabledness, competence
//! and information-gain signals, and an extrinsic evaluation harness.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arbitration::goal_key;
use crate::grounding::{self, Goal, GroundingError};
use crate::perception::{self, ObservationId, PerceptionError, SensorModel};
use crate::purposes::{EncodingSpace, Purpose};
use crate::world::{self, ActionId, Domain, History, HistoryEntry, HistoryKind, StateId, WorldError, ROW_SUM_TOLERANCE};

#[derive(Debug, Error, PartialEq)]
pub enum CompetenceError {
    #[error("goal `{0}` is unreachable within the timeout from some initial state")]
    Unsolvable(String),
    #[error("subgoal {0} timed out")]
    SubgoalTimeout(usize),
    #[error("distribution sums to {0}, not 1")]
    UnnormalizedDistribution(f64),
    #[error("posterior puts mass on `{0}` outside the prior support")]
    SupportViolation(String),
    #[error("policy has no row for observation `{observation}` under goal `{goal}`")]
    MissingPolicyRow { observation: ObservationId, goal: String },
    #[error("malformed task: {0}")]
    BadTask(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
}

/// How the goal-conditioned reward is produced. Only the membership
/// indicator is defined; the enum leaves room for shaped variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardSpec {
    Indicator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalConditionedTask {
    pub domain: String,
    pub goal: Goal,
    pub reward: RewardSpec,
    pub gamma: f64,
    /// Trial timeout in steps; unrelated to the softmax temperature.
    pub timeout: usize,
    pub success_threshold: f64,
}

impl GoalConditionedTask {
    pub fn new(domain: &str, goal: Goal, timeout: usize) -> Result<Self, CompetenceError> {
        let task = GoalConditionedTask {
            domain: domain.to_owned(),
            goal,
            reward: RewardSpec::Indicator,
            gamma: 0.95,
            timeout,
            success_threshold: 0.5,
        };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<(), CompetenceError> {
        if self.timeout < 1 {
            return Err(CompetenceError::BadTask("timeout must be >= 1".to_owned()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(CompetenceError::BadTask(format!(
                "gamma {} outside (0, 1]",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// The membership indicator on the goal's observation set.
pub fn pseudo_reward(observation: &str, goal: &Goal) -> f64 {
    if goal.points.contains(observation) {
        1.0
    } else {
        0.0
    }
}

fn validate_rows<K: Ord + std::fmt::Debug, V: Ord>(
    table: &BTreeMap<K, BTreeMap<V, f64>>,
) -> Result<(), CompetenceError> {
    for (key, row) in table {
        let sum: f64 = row.values().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(CompetenceError::BadTask(format!(
                "policy row {key:?} sums to {sum}"
            )));
        }
    }
    Ok(())
}

/// High-level policy: chooses the next subgoal given the current observation
/// and the pursued final goal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GoalSelectorPolicy {
    /// (observation, final-goal key) -> distribution over subgoal keys.
    #[serde(with = "crate::world::pair_key_map")]
    pub table: BTreeMap<(ObservationId, String), BTreeMap<String, f64>>,
}

impl GoalSelectorPolicy {
    pub fn validate(&self) -> Result<(), CompetenceError> {
        validate_rows(&self.table)
    }
}

/// Low-level policy: chooses an action given the current observation and the
/// active subgoal.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ActionPolicy {
    /// (observation, goal key) -> distribution over actions.
    #[serde(with = "crate::world::pair_key_map")]
    pub table: BTreeMap<(ObservationId, String), BTreeMap<ActionId, f64>>,
}

impl ActionPolicy {
    pub fn validate(&self) -> Result<(), CompetenceError> {
        validate_rows(&self.table)
    }

    pub fn sample<R: Rng>(
        &self,
        observation: &str,
        goal: &str,
        rng: &mut R,
    ) -> Result<ActionId, CompetenceError> {
        let row = self
            .table
            .get(&(observation.to_owned(), goal.to_owned()))
            .ok_or_else(|| CompetenceError::MissingPolicyRow {
                observation: observation.to_owned(),
                goal: goal.to_owned(),
            })?;
        let mut draw: f64 = rng.gen();
        let mut last = None;
        for (a, p) in row.iter().filter(|(_, p)| **p > 0.0) {
            draw -= p;
            last = Some(a);
            if draw <= 0.0 {
                return Ok(a.clone());
            }
        }
        last.cloned().ok_or_else(|| CompetenceError::MissingPolicyRow {
            observation: observation.to_owned(),
            goal: goal.to_owned(),
        })
    }

    /// Uniform rows over every action for every observation the sensor can
    /// emit; the untrained baseline.
    pub fn uniform(domain: &Domain, sensor: &SensorModel, goal: &Goal) -> Result<Self, CompetenceError> {
        let key = goal_key(goal);
        let observations = perception::observe_set(sensor, &domain.states)?;
        let p = 1.0 / domain.actions.len() as f64;
        let mut table = BTreeMap::new();
        for o in observations {
            table.insert(
                (o, key.clone()),
                domain.actions.iter().map(|a| (a.clone(), p)).collect(),
            );
        }
        Ok(ActionPolicy { table })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub episodes: usize,
    pub epsilon: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig { episodes: 4000, epsilon: 0.3, learning_rate: 1.0, seed: 0 }
    }
}

/// One-step off-policy temporal-difference learning on the pseudo-reward with
/// epsilon-greedy exploration. Returns the greedy policy as point-mass rows.
/// Fails fast when some initial state cannot reach the goal within the
/// timeout.
pub fn learn_policy(
    task: &GoalConditionedTask,
    domain: &Domain,
    sensor: &SensorModel,
    cfg: &LearnerConfig,
) -> Result<ActionPolicy, CompetenceError> {
    task.validate()?;
    let sg = grounding::state_goal(&task.goal, sensor)?;
    let targets: BTreeSet<StateId> = sg.states.intersection(&domain.states).cloned().collect();
    for s0 in &domain.initial_states {
        let cone = world::reachable(domain, &BTreeSet::from([s0.clone()]), task.timeout)?;
        if cone.is_disjoint(&targets) {
            return Err(CompetenceError::Unsolvable(goal_key(&task.goal)));
        }
    }

    let actions: Vec<&ActionId> = domain.actions.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q: BTreeMap<(ObservationId, ActionId), f64> = BTreeMap::new();
    let starts: Vec<&StateId> = domain.initial_states.iter().collect();
    for episode in 0..cfg.episodes {
        let mut state = starts[episode % starts.len()].clone();
        for _ in 0..task.timeout {
            let obs = perception::observe(sensor, &state, &mut rng)?;
            if pseudo_reward(&obs, &task.goal) > task.success_threshold {
                break;
            }
            let action = if rng.gen_bool(cfg.epsilon) {
                actions[rng.gen_range(0..actions.len())].clone()
            } else {
                greedy_action(&q, &obs, &actions)
            };
            let next = world::step(domain, &state, &action, &mut rng)?;
            let next_obs = perception::observe(sensor, &next, &mut rng)?;
            let reward = pseudo_reward(&next_obs, &task.goal);
            let future = if reward > task.success_threshold {
                0.0
            } else {
                actions
                    .iter()
                    .map(|a| q.get(&(next_obs.clone(), (*a).clone())).copied().unwrap_or(0.0))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let entry = q.entry((obs, action)).or_insert(0.0);
            *entry += cfg.learning_rate * (reward + task.gamma * future - *entry);
            state = next;
        }
    }

    let key = goal_key(&task.goal);
    let observations = perception::observe_set(sensor, &domain.states)?;
    let mut table = BTreeMap::new();
    for o in observations {
        let best = greedy_action(&q, &o, &actions);
        table.insert((o, key.clone()), BTreeMap::from([(best, 1.0)]));
    }
    Ok(ActionPolicy { table })
}

fn greedy_action(
    q: &BTreeMap<(ObservationId, ActionId), f64>,
    obs: &str,
    actions: &[&ActionId],
) -> ActionId {
    let mut best: Option<(&ActionId, f64)> = None;
    for a in actions {
        let v = q.get(&(obs.to_owned(), (*a).clone())).copied().unwrap_or(0.0);
        best = match best {
            None => Some((a, v)),
            Some((ba, bv)) => {
                // Ties break toward the ascending action id; actions arrive
                // sorted, so strictly-greater keeps the first maximiser.
                if v > bv {
                    Some((a, v))
                } else {
                    Some((ba, bv))
                }
            }
        };
    }
    best.expect("action set nonempty").0.clone()
}

/// Runs the policy on one goal from `start`, for at most `timeout` steps.
/// Returns success, steps taken, and the observation-action trace.
#[allow(clippy::too_many_arguments)]
pub fn rollout<R: Rng>(
    policy: &ActionPolicy,
    goal: &Goal,
    domain: &Domain,
    sensor: &SensorModel,
    start: &str,
    timeout: usize,
    threshold: f64,
    rng: &mut R,
) -> Result<(bool, usize, History), CompetenceError> {
    let key = goal_key(goal);
    let mut state = start.to_owned();
    let mut entries = Vec::new();
    let mut steps = 0;
    let success = loop {
        let obs = perception::observe(sensor, &state, rng)?;
        entries.push(HistoryEntry::Observation(obs.clone()));
        if pseudo_reward(&obs, goal) > threshold {
            break true;
        }
        if steps == timeout {
            break false;
        }
        let action = policy.sample(&obs, &key, rng)?;
        entries.push(HistoryEntry::Action(action.clone()));
        state = world::step(domain, &state, &action, rng)?;
        steps += 1;
    };
    let history = History::new(HistoryKind::ObservationAction, entries, None)?;
    Ok((success, steps, history))
}

/// True iff some action sequence of length at most `timeout` reaches the
/// subgoal's state goal from `state` with nonzero probability.
pub fn enabled(
    subgoal: &Goal,
    state: &str,
    domain: &Domain,
    sensor: &SensorModel,
    timeout: usize,
) -> Result<bool, CompetenceError> {
    let sg = grounding::state_goal(subgoal, sensor)?;
    let cone = world::reachable(domain, &BTreeSet::from([state.to_owned()]), timeout)?;
    Ok(!cone.is_disjoint(&sg.states))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutcome {
    pub history: History,
    pub success: bool,
    /// Per executed link: (start step, steps spent).
    pub windows: Vec<(usize, usize)>,
    /// Goal keys in execution order.
    pub order: Vec<String>,
    /// State at each link's completion, final goal last.
    pub link_states: Vec<StateId>,
}

/// Executes a subgoal chain then the final goal. The selector may reorder
/// pending subgoals: at each boundary, if it has a row for the current
/// observation under the final goal and samples a pending subgoal's key, that
/// subgoal runs next; otherwise the earliest pending one does. Per-link
/// timeouts arrive as one entry per chain link plus one for the final goal.
#[allow(clippy::too_many_arguments)]
pub fn execute_chain<R: Rng>(
    chain: &[Goal],
    final_goal: &Goal,
    selector: &GoalSelectorPolicy,
    policy: &ActionPolicy,
    domain: &Domain,
    sensor: &SensorModel,
    start: &str,
    timeouts: &[usize],
    threshold: f64,
    rng: &mut R,
) -> Result<ChainOutcome, CompetenceError> {
    if timeouts.len() != chain.len() + 1 {
        return Err(CompetenceError::BadTask(format!(
            "expected {} timeouts, got {}",
            chain.len() + 1,
            timeouts.len()
        )));
    }
    selector.validate()?;
    let final_key = goal_key(final_goal);
    let mut pending: Vec<usize> = (0..chain.len()).collect();
    let mut state = start.to_owned();
    let mut entries: Vec<HistoryEntry> = Vec::new();
    let mut windows = Vec::new();
    let mut order = Vec::new();
    let mut link_states = Vec::new();
    let mut clock = 0;

    while !pending.is_empty() {
        let obs = perception::observe(sensor, &state, rng)?;
        let pick = sample_selector(selector, &obs, &final_key, chain, &pending, rng)
            .unwrap_or(pending[0]);
        pending.retain(|j| *j != pick);
        let link = &chain[pick];
        let (steps, next) = run_link(
            link, policy, domain, sensor, &state, timeouts[pick], threshold, rng, &mut entries,
        )
        .map_err(|e| match e {
            CompetenceError::SubgoalTimeout(_) => CompetenceError::SubgoalTimeout(pick),
            other => other,
        })?;
        windows.push((clock, steps));
        order.push(goal_key(link));
        link_states.push(next.clone());
        clock += steps;
        state = next;
    }

    let (steps, end) = run_link(
        final_goal,
        policy,
        domain,
        sensor,
        &state,
        timeouts[chain.len()],
        threshold,
        rng,
        &mut entries,
    )
    .map_err(|e| match e {
        CompetenceError::SubgoalTimeout(_) => CompetenceError::SubgoalTimeout(chain.len()),
        other => other,
    })?;
    windows.push((clock, steps));
    order.push(final_key);
    link_states.push(end.clone());
    entries.push(HistoryEntry::Observation(perception::observe(sensor, &end, rng)?));

    let history = History::new(HistoryKind::ObservationAction, entries, None)?;
    Ok(ChainOutcome { history, success: true, windows, order, link_states })
}

fn sample_selector<R: Rng>(
    selector: &GoalSelectorPolicy,
    obs: &str,
    final_key: &str,
    chain: &[Goal],
    pending: &[usize],
    rng: &mut R,
) -> Option<usize> {
    let row = selector.table.get(&(obs.to_owned(), final_key.to_owned()))?;
    let mut draw: f64 = rng.gen();
    let mut sampled = None;
    for (key, p) in row.iter().filter(|(_, p)| **p > 0.0) {
        draw -= p;
        sampled = Some(key);
        if draw <= 0.0 {
            break;
        }
    }
    let key = sampled?;
    pending.iter().copied().find(|j| goal_key(&chain[*j]) == *key)
}

#[allow(clippy::too_many_arguments)]
fn run_link<R: Rng>(
    goal: &Goal,
    policy: &ActionPolicy,
    domain: &Domain,
    sensor: &SensorModel,
    start: &str,
    timeout: usize,
    threshold: f64,
    rng: &mut R,
    entries: &mut Vec<HistoryEntry>,
) -> Result<(usize, StateId), CompetenceError> {
    let key = goal_key(goal);
    let mut state = start.to_owned();
    let mut steps = 0;
    loop {
        let obs = perception::observe(sensor, &state, rng)?;
        // The terminal observation is left for the caller so that link
        // boundaries do not duplicate entries.
        if pseudo_reward(&obs, goal) > threshold {
            return Ok((steps, state));
        }
        if steps == timeout {
            return Err(CompetenceError::SubgoalTimeout(usize::MAX));
        }
        let action = policy.sample(&obs, &key, rng)?;
        entries.push(HistoryEntry::Observation(obs));
        entries.push(HistoryEntry::Action(action.clone()));
        state = world::step(domain, &state, &action, rng)?;
        steps += 1;
    }
}

/// Sliding-window success statistics per goal key.
#[derive(Debug, Clone, PartialEq)]
pub struct CompetenceTracker {
    pub window: usize,
    outcomes: BTreeMap<String, Vec<bool>>,
}

impl CompetenceTracker {
    pub fn new(window: usize) -> Self {
        CompetenceTracker { window: window.max(1), outcomes: BTreeMap::new() }
    }

    pub fn record(&mut self, goal: &str, success: bool) {
        self.outcomes.entry(goal.to_owned()).or_default().push(success);
    }

    fn window_rate(&self, goal: &str, back: usize) -> f64 {
        let Some(outcomes) = self.outcomes.get(goal) else { return 0.0 };
        let end = outcomes.len().saturating_sub(back * self.window);
        let start = end.saturating_sub(self.window);
        if end == start {
            return 0.0;
        }
        let hits = outcomes[start..end].iter().filter(|b| **b).count();
        hits as f64 / (end - start) as f64
    }

    /// Success rate over the most recent window; in [0, 1].
    pub fn competence(&self, goal: &str) -> f64 {
        self.window_rate(goal, 0)
    }

    /// Most recent window rate minus the preceding window rate; in [-1, 1].
    pub fn delta(&self, goal: &str) -> f64 {
        self.window_rate(goal, 0) - self.window_rate(goal, 1)
    }
}

/// Expected competence improvement under a distribution over goal keys.
pub fn competence_gain(
    tracker: &CompetenceTracker,
    goal_distribution: &BTreeMap<String, f64>,
) -> Result<f64, CompetenceError> {
    let sum: f64 = goal_distribution.values().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(CompetenceError::UnnormalizedDistribution(sum));
    }
    Ok(goal_distribution
        .iter()
        .map(|(g, p)| p * tracker.delta(g))
        .sum())
}

/// A finite hypothesis set over world models with prior and posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub prior: BTreeMap<String, f64>,
    pub posterior: BTreeMap<String, f64>,
}

impl BeliefState {
    pub fn validate(&self) -> Result<(), CompetenceError> {
        for table in [&self.prior, &self.posterior] {
            let sum: f64 = table.values().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(CompetenceError::UnnormalizedDistribution(sum));
            }
        }
        Ok(())
    }
}

/// KL divergence of posterior from prior, in nats. Nonnegative; zero exactly
/// when the two agree.
pub fn information_gain(belief: &BeliefState) -> Result<f64, CompetenceError> {
    belief.validate()?;
    let mut kl = 0.0;
    for (model, post) in &belief.posterior {
        if *post == 0.0 {
            continue;
        }
        let prior = belief.prior.get(model).copied().unwrap_or(0.0);
        if prior <= 0.0 {
            return Err(CompetenceError::SupportViolation(model.clone()));
        }
        kl += post * (post / prior).ln();
    }
    // Rounding can push the sum a hair below zero.
    Ok(kl.max(0.0))
}

/// Monte-Carlo estimate of the expected discounted goal-conditioned return
/// under a distribution over externally assigned goals. The return of one
/// episode is gamma^t when the goal is reached at step t, else 0.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_extrinsic<R: Rng>(
    policy: &ActionPolicy,
    goal_sampler: &[(Goal, f64)],
    domain: &Domain,
    sensor: &SensorModel,
    gamma: f64,
    timeout: usize,
    threshold: f64,
    episodes: usize,
    rng: &mut R,
) -> Result<f64, CompetenceError> {
    let sum: f64 = goal_sampler.iter().map(|(_, p)| p).sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(CompetenceError::UnnormalizedDistribution(sum));
    }
    let starts: Vec<&StateId> = domain.initial_states.iter().collect();
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut draw: f64 = rng.gen();
        let mut goal = &goal_sampler[goal_sampler.len() - 1].0;
        for (g, p) in goal_sampler {
            draw -= p;
            if draw <= 0.0 {
                goal = g;
                break;
            }
        }
        let start = starts[rng.gen_range(0..starts.len())];
        let (success, steps, _) =
            rollout(policy, goal, domain, sensor, start, timeout, threshold, rng)?;
        if success {
            total += gamma.powi(steps as i32);
        }
    }
    Ok(total / episodes as f64)
}

/// Heuristic signal for how far the active encoding point sits from a
/// purpose's support. Members score their utility. Non-members score 0 in
/// unstructured spaces; when the space declares product axes and point ids
/// join axis values with `|`, they score the negated, normalized component
/// mismatch to the nearest support point.
pub fn encoding_utility_signal(purpose: &Purpose, space: &EncodingSpace, active: &str) -> f64 {
    if purpose.support.contains(active) {
        return purpose.utility.table.get(active).copied().unwrap_or(0.0);
    }
    let Some(dims) = &space.dims else { return 0.0 };
    let k = dims.len().max(1);
    let active_parts: Vec<&str> = active.split('|').collect();
    let mut best = f64::NEG_INFINITY;
    for p in &purpose.support {
        let parts: Vec<&str> = p.split('|').collect();
        let mismatch = active_parts
            .iter()
            .zip(&parts)
            .filter(|(a, b)| a != b)
            .count()
            + active_parts.len().abs_diff(parts.len());
        best = best.max(-(mismatch as f64) / k as f64);
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}
