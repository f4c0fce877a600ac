//! Actual-causality checks on an alignment model: existence of the causal
//! chain (AC1), counterfactual dependence of the outcome on the robot's
//! intervention (AC2), and minimality of the intervention's cost (AC3).
//!
//! The counterfactual regime do(not G) is a designated baseline policy,
//! idle self-loops by default, since the complement of a goal intervention
//! is otherwise underdetermined.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::{plan_link, preimage_of, AlignmentError, AlignmentModel, Intention};
use crate::grounding::{Goal, GroundingError};
use crate::perception::{self, PerceptionError, SensorRow};
use crate::world::{Domain, History, HistoryEntry, StateId, Transition, WorldError};

const PROBABILITY_TOLERANCE: f64 = 1e-9;
/// Enumeration gives up beyond this many visited trajectory-tree nodes.
const MAX_ENUMERATION_NODES: usize = 1_000_000;
const MONTE_CARLO_EPISODES: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum CausalityError {
    #[error("model is incomplete: {0}")]
    IncompleteModel(String),
    #[error("horizon {horizon} is shorter than the chain timeout {required}")]
    HorizonTooShort { horizon: usize, required: usize },
    #[error("executed trace did not succeed")]
    TraceDidNotSucceed,
    #[error("history has no usable entries")]
    EmptyTrace,
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
}

/// The counterfactual regime substituted for goal pursuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Baseline {
    /// Self-loop in place for the whole horizon.
    Idle,
    /// Uniformly random action each step.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub do_goal: Goal,
    pub baseline: Baseline,
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ac2Method {
    Deterministic,
    Enumeration,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ac2Outcome {
    pub holds: bool,
    /// P(Y | do(G)).
    pub p_do: f64,
    /// P(Y | do(not G)).
    pub p_baseline: f64,
    pub method: Ac2Method,
    /// Combined standard error in Monte-Carlo mode.
    pub standard_error: Option<f64>,
    /// Whether Y already held at some intermediate step of a do(G) run;
    /// reported, not judged (deterministic mode only).
    pub y_any_step: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ac3Outcome {
    pub holds: bool,
    pub executed_cost: f64,
    pub minimal_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalVerdict {
    pub ac1: bool,
    pub ac2: Ac2Outcome,
    pub ac3: Ac3Outcome,
    /// Always the conjunction of the three.
    pub overall: bool,
}

fn intention_and_goal(model: &AlignmentModel) -> Result<(Intention, Goal), CausalityError> {
    let intention = model
        .intention
        .clone()
        .ok_or_else(|| CausalityError::IncompleteModel("no intention".to_owned()))?;
    let goal = model.goal_in(&intention.domain, &intention)?;
    Ok((intention, goal))
}

/// The outcome event Y: the state satisfies the human's ground-truth state
/// goal for the intended domain.
fn y_holds(model: &AlignmentModel, d: &str, state: &str) -> bool {
    model
        .star_states
        .get(d)
        .map(|star| star.contains(state))
        .unwrap_or(false)
}

/// AC1: the compound chain from the pursued goal through the robot's state
/// grounding and the human's sensor and encoder lands inside the purpose.
pub fn ac1_existence(model: &AlignmentModel) -> Result<bool, CausalityError> {
    let (intention, goal) = intention_and_goal(model)?;
    let d = &intention.domain;
    let domain = model
        .domains
        .get(d)
        .ok_or_else(|| CausalityError::IncompleteModel(format!("unknown domain `{d}`")))?;
    if goal.points.is_empty() {
        return Ok(false);
    }
    let s_omega = preimage_of(&model.robot_sensor, &goal.points, &domain.states)?;
    if s_omega.is_empty() {
        return Ok(false);
    }
    let o_omega = perception::observe_set(&model.human_sensor, &s_omega)?;
    let encoder = model.human_encoders.get(d).ok_or_else(|| {
        CausalityError::IncompleteModel(format!("no human encoder for domain `{d}`"))
    })?;
    for o in &o_omega {
        match encoder.encode(o) {
            Ok(e) if model.human_purpose.support.contains(e) => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Enumerates the horizon-step trajectory tree under `policy_row` and
/// accumulates the probability that Y holds at the end. Returns None when
/// the tree exceeds the node budget.
fn enumerate_probability(
    model: &AlignmentModel,
    domain: &Domain,
    d: &str,
    act: &Regime<'_>,
    horizon: usize,
) -> Result<Option<f64>, CausalityError> {
    let initial = &domain.initial_states;
    let w0 = 1.0 / initial.len() as f64;
    let mut nodes = 0usize;
    let mut p = 0.0;
    // Depth-first over (state, depth, weight).
    let mut stack: Vec<(StateId, usize, f64)> =
        initial.iter().map(|s| (s.clone(), 0, w0)).collect();
    let mut mass = 0.0;
    while let Some((state, depth, weight)) = stack.pop() {
        nodes += 1;
        if nodes > MAX_ENUMERATION_NODES {
            return Ok(None);
        }
        if depth == horizon {
            mass += weight;
            if y_holds(model, d, &state) {
                p += weight;
            }
            continue;
        }
        for (action, pa) in act(&state)? {
            if pa == 0.0 {
                continue;
            }
            if action == IDLE_VIRTUAL {
                stack.push((state.clone(), depth + 1, weight * pa));
                continue;
            }
            match domain.row(&state, &action)? {
                Transition::Deterministic(next) => {
                    stack.push((next.clone(), depth + 1, weight * pa));
                }
                Transition::Stochastic(row) => {
                    for (next, pt) in row {
                        if *pt > 0.0 {
                            stack.push((next.clone(), depth + 1, weight * pa * pt));
                        }
                    }
                }
            }
        }
    }
    debug_assert!((mass - 1.0).abs() < PROBABILITY_TOLERANCE);
    Ok(Some(p))
}

/// Action distribution of the do(G) regime: the learned policy when present,
/// otherwise a shortest-path planner step (deterministic domains only). At
/// the goal, idle.
fn do_regime<'a>(
    model: &'a AlignmentModel,
    domain: &'a Domain,
    targets: &'a BTreeSet<StateId>,
    dist: &'a BTreeMap<StateId, usize>,
    goal: &'a Goal,
) -> impl Fn(&StateId) -> Result<BTreeMap<String, f64>, CausalityError> + 'a {
    move |state: &StateId| {
        if targets.contains(state) {
            return idle_row(domain, state);
        }
        if let Some(policy) = &model.policy {
            let obs = match model.robot_sensor.row(state)? {
                SensorRow::Deterministic(o) => o.clone(),
                SensorRow::Stochastic(_) => {
                    return Err(CausalityError::IncompleteModel(
                        "stochastic robot sensor in the do regime".to_owned(),
                    ))
                }
            };
            let key = crate::arbitration::goal_key(goal);
            return policy
                .table
                .get(&(obs.clone(), key.clone()))
                .cloned()
                .ok_or(CausalityError::IncompleteModel(format!(
                    "policy has no row for ({obs}, {key})"
                )));
        }
        // Planner step: the first action strictly decreasing the distance.
        let here = dist.get(state).copied();
        for a in &domain.actions {
            if let Transition::Deterministic(next) = domain.row(state, a)? {
                let nd = dist.get(next).copied();
                match (here, nd) {
                    (Some(h), Some(n)) if n < h => {
                        return Ok(BTreeMap::from([(a.clone(), 1.0)]));
                    }
                    (None, Some(_)) => {
                        return Ok(BTreeMap::from([(a.clone(), 1.0)]));
                    }
                    _ => {}
                }
            } else {
                return Err(CausalityError::IncompleteModel(
                    "stochastic pursuit requires an explicit policy".to_owned(),
                ));
            }
        }
        idle_row(domain, state)
    }
}

/// Idle means staying put: a self-loop action when one exists, otherwise no
/// transition is taken (modeled as a probability-one virtual stay).
fn idle_row(domain: &Domain, state: &StateId) -> Result<BTreeMap<String, f64>, CausalityError> {
    for a in &domain.actions {
        if let Transition::Deterministic(next) = domain.row(state, a)? {
            if next == state {
                return Ok(BTreeMap::from([(a.clone(), 1.0)]));
            }
        }
    }
    Ok(BTreeMap::from([(IDLE_VIRTUAL.to_owned(), 1.0)]))
}

const IDLE_VIRTUAL: &str = "__idle__";

/// A per-state action distribution, the common shape of both regimes.
type Regime<'a> = dyn Fn(&StateId) -> Result<BTreeMap<String, f64>, CausalityError> + 'a;

fn baseline_regime<'a>(
    domain: &'a Domain,
    baseline: Baseline,
) -> impl Fn(&StateId) -> Result<BTreeMap<String, f64>, CausalityError> + 'a {
    move |state: &StateId| match baseline {
        Baseline::Idle => idle_row(domain, state),
        Baseline::Random => {
            let p = 1.0 / domain.actions.len() as f64;
            Ok(domain.actions.iter().map(|a| (a.clone(), p)).collect())
        }
    }
}

/// Steps through `act`, treating the virtual idle action as staying put.
fn follow<R: Rng>(
    domain: &Domain,
    state: &StateId,
    action: &str,
    rng: &mut R,
) -> Result<StateId, CausalityError> {
    if action == IDLE_VIRTUAL {
        Ok(state.clone())
    } else {
        Ok(crate::world::step(domain, state, action, rng)?)
    }
}

/// AC2: the outcome depends counterfactually on pursuing the goal.
pub fn ac2_counterfactual<R: Rng>(
    model: &AlignmentModel,
    spec: &InterventionSpec,
    rng: &mut R,
) -> Result<Ac2Outcome, CausalityError> {
    if spec.horizon < model.chain_timeout {
        return Err(CausalityError::HorizonTooShort {
            horizon: spec.horizon,
            required: model.chain_timeout,
        });
    }
    let goal = &spec.do_goal;
    let d = goal.domain.clone();
    let domain = model
        .domains
        .get(&d)
        .ok_or_else(|| CausalityError::IncompleteModel(format!("unknown domain `{}`", d)))?;
    let targets = preimage_of(&model.robot_sensor, &goal.points, &domain.states)?;
    let dist = crate::world::distance_to(domain, &targets);

    let deterministic =
        domain.is_deterministic() && model.policy.is_none() && spec.baseline == Baseline::Idle;
    if deterministic {
        // Entailment: Y under pursuit from every start, not-Y under idle.
        let mut do_hits = 0usize;
        let mut base_hits = 0usize;
        let mut y_any_step = false;
        for start in &domain.initial_states {
            if let Some(terminal) =
                plan_link(domain, &model.robot_sensor, goal, start, spec.horizon)?
            {
                if y_holds(model, &d, &terminal) {
                    do_hits += 1;
                }
            }
            // Intermediate Y along the planned path, for the report only.
            let mut state = start.clone();
            for _ in 0..spec.horizon {
                if y_holds(model, &d, &state) {
                    y_any_step = true;
                }
                if targets.contains(&state) {
                    break;
                }
                let regime = do_regime(model, domain, &targets, &dist, goal);
                let row = regime(&state)?;
                let action = row.keys().next().expect("nonempty").clone();
                state = follow(domain, &state, &action, rng)?;
            }
            if y_holds(model, &d, start) {
                base_hits += 1;
            }
        }
        let n = domain.initial_states.len() as f64;
        let p_do = do_hits as f64 / n;
        let p_baseline = base_hits as f64 / n;
        return Ok(Ac2Outcome {
            holds: do_hits == domain.initial_states.len() && base_hits == 0,
            p_do,
            p_baseline,
            method: Ac2Method::Deterministic,
            standard_error: None,
            y_any_step: Some(y_any_step),
        });
    }

    let do_act = do_regime(model, domain, &targets, &dist, goal);
    let base_act = baseline_regime(domain, spec.baseline);
    let exact_do = enumerate_probability(model, domain, &d, &do_act, spec.horizon)?;
    let exact_base = enumerate_probability(model, domain, &d, &base_act, spec.horizon)?;
    if let (Some(p_do), Some(p_baseline)) = (exact_do, exact_base) {
        return Ok(Ac2Outcome {
            holds: p_do > p_baseline + PROBABILITY_TOLERANCE,
            p_do,
            p_baseline,
            method: Ac2Method::Enumeration,
            standard_error: None,
            y_any_step: None,
        });
    }

    // Monte-Carlo fallback with a 3-standard-error margin.
    let mut do_hits = 0usize;
    let mut base_hits = 0usize;
    for _ in 0..MONTE_CARLO_EPISODES {
        if sample_mc(model, domain, &d, &do_act, spec.horizon, rng)? {
            do_hits += 1;
        }
        if sample_mc(model, domain, &d, &base_act, spec.horizon, rng)? {
            base_hits += 1;
        }
    }
    let n = MONTE_CARLO_EPISODES as f64;
    let p_do = do_hits as f64 / n;
    let p_baseline = base_hits as f64 / n;
    let se = (p_do * (1.0 - p_do) / n + p_baseline * (1.0 - p_baseline) / n).sqrt();
    Ok(Ac2Outcome {
        holds: p_do - p_baseline > 3.0 * se,
        p_do,
        p_baseline,
        method: Ac2Method::MonteCarlo,
        standard_error: Some(se),
        y_any_step: None,
    })
}

/// Monte-Carlo trajectory honoring the virtual idle action.
fn sample_mc<R: Rng>(
    model: &AlignmentModel,
    domain: &Domain,
    d: &str,
    act: &Regime<'_>,
    horizon: usize,
    rng: &mut R,
) -> Result<bool, CausalityError> {
    let initial: Vec<&StateId> = domain.initial_states.iter().collect();
    let mut state = initial[rng.gen_range(0..initial.len())].clone();
    for _ in 0..horizon {
        let row = act(&state)?;
        let mut pick = rng.gen::<f64>();
        let mut action = row.keys().next_back().expect("nonempty").clone();
        for (a, pa) in &row {
            pick -= pa;
            if pick <= 0.0 {
                action = a.clone();
                break;
            }
        }
        state = follow(domain, &state, &action, rng)?;
    }
    Ok(y_holds(model, d, &state))
}

/// Per-action cost table; actions absent from the table cost 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub per_action: BTreeMap<String, f64>,
}

impl CostTable {
    fn cost(&self, action: &str) -> f64 {
        self.per_action.get(action).copied().unwrap_or(1.0)
    }
}

/// Minimal cost from `start` to any target under the cost table: uniform
/// costs use breadth-first search semantics, general costs Dijkstra; both
/// fall out of the same priority-free relaxation on these small models.
fn minimal_cost(
    domain: &Domain,
    start: &StateId,
    targets: &BTreeSet<StateId>,
    costs: &CostTable,
) -> Option<f64> {
    // Bellman-Ford style relaxation; |S| rounds suffice for deterministic
    // shortest paths, stochastic rows use expected single-step successors.
    let mut value: BTreeMap<&StateId, f64> = BTreeMap::new();
    for t in targets {
        value.insert(t, 0.0);
    }
    // Deterministic paths settle within |S| rounds; stochastic expected
    // costs contract toward the fixed point, so iterate to quiescence.
    for _ in 0..10_000 {
        let mut changed = false;
        for s in &domain.states {
            if targets.contains(s) {
                continue;
            }
            for a in &domain.actions {
                let Ok(row) = domain.row(s, a) else { continue };
                let next_value = match row {
                    Transition::Deterministic(t) => value.get(t).copied(),
                    Transition::Stochastic(dist) => {
                        let mut acc = 0.0;
                        let mut total = true;
                        for (t, p) in dist {
                            match value.get(t) {
                                Some(v) => acc += p * v,
                                None => {
                                    if *p > 0.0 {
                                        total = false;
                                    }
                                }
                            }
                        }
                        total.then_some(acc)
                    }
                };
                if let Some(v) = next_value {
                    let candidate = costs.cost(a) + v;
                    let slot = value.get(s).copied();
                    if slot.map(|cur| candidate < cur - 1e-12).unwrap_or(true) {
                        value.insert(s, candidate);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    value.get(start).copied()
}

/// AC3: the executed trace's cost matches the minimal achievable cost.
pub fn ac3_minimality(
    model: &AlignmentModel,
    executed: &History,
    costs: &CostTable,
) -> Result<Ac3Outcome, CausalityError> {
    let (intention, goal) = intention_and_goal(model)?;
    let d = &intention.domain;
    let domain = model
        .domains
        .get(d)
        .ok_or_else(|| CausalityError::IncompleteModel(format!("unknown domain `{d}`")))?;
    let targets = preimage_of(&model.robot_sensor, &goal.points, &domain.states)?;

    // Trace success and endpoints, for state or observation traces.
    let mut start_states: BTreeSet<StateId> = BTreeSet::new();
    let mut succeeded = false;
    let mut executed_cost = 0.0;
    for entry in &executed.entries {
        match entry {
            HistoryEntry::State(s) => {
                if start_states.is_empty() {
                    start_states.insert(s.clone());
                }
                succeeded = targets.contains(s);
            }
            HistoryEntry::Observation(o) => {
                if start_states.is_empty() {
                    start_states =
                        perception::preimage(&model.robot_sensor, o, Some(&domain.states))?;
                }
                succeeded = goal.points.contains(o);
            }
            HistoryEntry::Action(a) => executed_cost += costs.cost(a),
        }
    }
    if start_states.is_empty() {
        return Err(CausalityError::EmptyTrace);
    }
    if !succeeded {
        return Err(CausalityError::TraceDidNotSucceed);
    }
    // Observation starts are multivalued; the trace is judged against the
    // best start consistent with it.
    let minimal = start_states
        .iter()
        .filter_map(|s| minimal_cost(domain, s, &targets, costs))
        .fold(f64::INFINITY, f64::min);
    if !minimal.is_finite() {
        return Err(CausalityError::TraceDidNotSucceed);
    }
    Ok(Ac3Outcome {
        holds: (executed_cost - minimal).abs() <= 1e-9,
        executed_cost,
        minimal_cost: minimal,
    })
}

/// Plans a pursuit of the intended goal from the lowest initial state and
/// returns it as a state-action history, for feeding AC3.
pub fn pursue_trace(model: &AlignmentModel) -> Result<History, CausalityError> {
    let (intention, goal) = intention_and_goal(model)?;
    let d = &intention.domain;
    let domain = model
        .domains
        .get(d)
        .ok_or_else(|| CausalityError::IncompleteModel(format!("unknown domain `{d}`")))?;
    let targets = preimage_of(&model.robot_sensor, &goal.points, &domain.states)?;
    let dist = crate::world::distance_to(domain, &targets);
    let mut state = domain
        .initial_states
        .iter()
        .next()
        .ok_or_else(|| CausalityError::IncompleteModel("no initial state".to_owned()))?
        .clone();
    let mut entries = vec![HistoryEntry::State(state.clone())];
    for _ in 0..domain.states.len() {
        if targets.contains(&state) {
            break;
        }
        let here = dist.get(&state).copied();
        let mut stepped = false;
        for a in &domain.actions {
            let Transition::Deterministic(next) = domain.row(&state, a)? else {
                return Err(CausalityError::IncompleteModel(
                    "stochastic pursuit requires an explicit policy".to_owned(),
                ));
            };
            let nd = dist.get(next).copied();
            let better = match (here, nd) {
                (Some(h), Some(n)) => n < h,
                (None, Some(_)) => true,
                _ => false,
            };
            if better {
                entries.push(HistoryEntry::Action(a.clone()));
                state = next.clone();
                entries.push(HistoryEntry::State(state.clone()));
                stepped = true;
                break;
            }
        }
        if !stepped {
            return Err(CausalityError::TraceDidNotSucceed);
        }
    }
    if !targets.contains(&state) {
        return Err(CausalityError::TraceDidNotSucceed);
    }
    Ok(History::new(crate::world::HistoryKind::StateAction, entries, None)?)
}

/// Runs all three checks; `overall` is their conjunction by construction.
pub fn causal_verdict<R: Rng>(
    model: &AlignmentModel,
    spec: &InterventionSpec,
    executed: &History,
    costs: &CostTable,
    rng: &mut R,
) -> Result<CausalVerdict, CausalityError> {
    let ac1 = ac1_existence(model)?;
    let ac2 = ac2_counterfactual(model, spec, rng)?;
    let ac3 = ac3_minimality(model, executed, costs)?;
    let overall = ac1 && ac2.holds && ac3.holds;
    Ok(CausalVerdict { ac1, ac2, ac3, overall })
}
