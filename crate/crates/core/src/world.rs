//! Finite domains: state spaces, action sets, transition tables, histories.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type StateId = String;
pub type ActionId = String;

/// Absolute tolerance for probability-row normalization checks.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("unknown state `{0}`")]
    UnknownState(StateId),
    #[error("unknown action `{0}`")]
    UnknownAction(ActionId),
    #[error("transition row for ({state}, {action}) is malformed: {reason}")]
    MalformedRow {
        state: StateId,
        action: ActionId,
        reason: String,
    },
    #[error("transition table is missing an entry for ({0}, {1})")]
    MissingRow(StateId, ActionId),
    #[error("domain `{0}` has no initial states")]
    NoInitialStates(String),
    #[error("history entries do not alternate as required by kind {0:?}")]
    BadAlternation(HistoryKind),
    #[error("history window must satisfy start >= 0 and duration >= 1")]
    BadWindow,
}

/// One row of the transition table: a single successor or a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Transition {
    Deterministic(StateId),
    Stochastic(BTreeMap<StateId, f64>),
}

impl Transition {
    /// States with nonzero probability under this row.
    pub fn support(&self) -> Vec<&StateId> {
        match self {
            Transition::Deterministic(s) => vec![s],
            Transition::Stochastic(row) => {
                row.iter().filter(|(_, p)| **p > 0.0).map(|(s, _)| s).collect()
            }
        }
    }
}

/// Serde adapter for pair-keyed maps: JSON has no tuple keys, so the table
/// serializes as a nested map, first key then second key.
pub mod pair_key_map {
    use serde::de::DeserializeOwned;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<V: Serialize, S: Serializer>(
        map: &BTreeMap<(String, String), V>,
        ser: S,
    ) -> Result<S::Ok, S::Error> {
        let mut nested: BTreeMap<&String, BTreeMap<&String, &V>> = BTreeMap::new();
        for ((a, b), v) in map {
            nested.entry(a).or_default().insert(b, v);
        }
        nested.serialize(ser)
    }

    pub fn deserialize<'de, V: DeserializeOwned, D: Deserializer<'de>>(
        de: D,
    ) -> Result<BTreeMap<(String, String), V>, D::Error> {
        let nested: BTreeMap<String, BTreeMap<String, V>> = Deserialize::deserialize(de)?;
        let mut map = BTreeMap::new();
        for (a, inner) in nested {
            for (b, v) in inner {
                map.insert((a.clone(), b), v);
            }
        }
        Ok(map)
    }
}

/// A finite domain: states, the robot action set, and a total transition table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub id: String,
    pub states: BTreeSet<StateId>,
    pub actions: BTreeSet<ActionId>,
    /// Keyed by (state, action); total over states x actions.
    #[serde(with = "pair_key_map")]
    pub transition: BTreeMap<(StateId, ActionId), Transition>,
    pub initial_states: BTreeSet<StateId>,
}

impl Domain {
    pub fn new(
        id: impl Into<String>,
        states: impl IntoIterator<Item = StateId>,
        actions: impl IntoIterator<Item = ActionId>,
        transition: BTreeMap<(StateId, ActionId), Transition>,
        initial_states: impl IntoIterator<Item = StateId>,
    ) -> Result<Self, WorldError> {
        let domain = Domain {
            id: id.into(),
            states: states.into_iter().collect(),
            actions: actions.into_iter().collect(),
            transition,
            initial_states: initial_states.into_iter().collect(),
        };
        domain.validate()?;
        Ok(domain)
    }

    /// Checks totality, closure of successors, row normalization, and that
    /// initial states are a nonempty subset of the state set.
    pub fn validate(&self) -> Result<(), WorldError> {
        if self.initial_states.is_empty() {
            return Err(WorldError::NoInitialStates(self.id.clone()));
        }
        for s in &self.initial_states {
            if !self.states.contains(s) {
                return Err(WorldError::UnknownState(s.clone()));
            }
        }
        for s in &self.states {
            for a in &self.actions {
                let row = self
                    .transition
                    .get(&(s.clone(), a.clone()))
                    .ok_or_else(|| WorldError::MissingRow(s.clone(), a.clone()))?;
                self.validate_row(s, a, row)?;
            }
        }
        for (s, a) in self.transition.keys() {
            if !self.states.contains(s) {
                return Err(WorldError::UnknownState(s.clone()));
            }
            if !self.actions.contains(a) {
                return Err(WorldError::UnknownAction(a.clone()));
            }
        }
        Ok(())
    }

    fn validate_row(&self, s: &StateId, a: &ActionId, row: &Transition) -> Result<(), WorldError> {
        match row {
            Transition::Deterministic(next) => {
                if !self.states.contains(next) {
                    return Err(WorldError::MalformedRow {
                        state: s.clone(),
                        action: a.clone(),
                        reason: format!("successor `{next}` is not a domain state"),
                    });
                }
            }
            Transition::Stochastic(dist) => {
                let mut sum = 0.0;
                for (next, p) in dist {
                    if !self.states.contains(next) {
                        return Err(WorldError::MalformedRow {
                            state: s.clone(),
                            action: a.clone(),
                            reason: format!("successor `{next}` is not a domain state"),
                        });
                    }
                    if !(0.0..=1.0).contains(p) {
                        return Err(WorldError::MalformedRow {
                            state: s.clone(),
                            action: a.clone(),
                            reason: format!("probability {p} outside [0, 1]"),
                        });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(WorldError::MalformedRow {
                        state: s.clone(),
                        action: a.clone(),
                        reason: format!("row sums to {sum}, expected 1"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn row(&self, state: &str, action: &str) -> Result<&Transition, WorldError> {
        if !self.states.contains(state) {
            return Err(WorldError::UnknownState(state.to_owned()));
        }
        if !self.actions.contains(action) {
            return Err(WorldError::UnknownAction(action.to_owned()));
        }
        self.transition
            .get(&(state.to_owned(), action.to_owned()))
            .ok_or_else(|| WorldError::MissingRow(state.to_owned(), action.to_owned()))
    }

    /// True if every transition row is deterministic (or a point mass).
    pub fn is_deterministic(&self) -> bool {
        self.transition.values().all(|t| match t {
            Transition::Deterministic(_) => true,
            Transition::Stochastic(row) => row.values().filter(|p| **p > 0.0).count() <= 1,
        })
    }
}

/// Applies one action. Deterministic rows return the table value; stochastic
/// rows sample with the row's probabilities from `rng`.
pub fn step<R: Rng>(
    domain: &Domain,
    state: &str,
    action: &str,
    rng: &mut R,
) -> Result<StateId, WorldError> {
    match domain.row(state, action)? {
        Transition::Deterministic(next) => Ok(next.clone()),
        Transition::Stochastic(dist) => {
            let mut draw: f64 = rng.gen();
            let mut last = None;
            for (next, p) in dist.iter().filter(|(_, p)| **p > 0.0) {
                draw -= p;
                last = Some(next);
                if draw <= 0.0 {
                    return Ok(next.clone());
                }
            }
            // Rounding can leave a sliver of mass; fall back to the last
            // nonzero entry.
            last.cloned().ok_or_else(|| WorldError::MalformedRow {
                state: state.to_owned(),
                action: action.to_owned(),
                reason: "row has no nonzero entry".to_owned(),
            })
        }
    }
}

/// States reachable with nonzero probability by action sequences of length
/// at most `horizon`. Horizon 0 returns `from` unchanged.
pub fn reachable(
    domain: &Domain,
    from: &BTreeSet<StateId>,
    horizon: usize,
) -> Result<BTreeSet<StateId>, WorldError> {
    for s in from {
        if !domain.states.contains(s) {
            return Err(WorldError::UnknownState(s.clone()));
        }
    }
    let mut seen = from.clone();
    let mut frontier: VecDeque<(StateId, usize)> = from.iter().map(|s| (s.clone(), 0)).collect();
    while let Some((s, depth)) = frontier.pop_front() {
        if depth == horizon {
            continue;
        }
        for a in &domain.actions {
            let row = domain.row(&s, a)?;
            for next in row.support() {
                if seen.insert(next.clone()) {
                    frontier.push_back((next.clone(), depth + 1));
                }
            }
        }
    }
    Ok(seen)
}

/// Per-state BFS distance (in steps) to the nearest member of `targets`,
/// counting any nonzero-probability edge. States that cannot reach a target
/// are absent from the map.
pub fn distance_to(domain: &Domain, targets: &BTreeSet<StateId>) -> BTreeMap<StateId, usize> {
    // Reverse adjacency over nonzero edges.
    let mut reverse: BTreeMap<&StateId, BTreeSet<&StateId>> = BTreeMap::new();
    for ((s, _), row) in &domain.transition {
        for next in row.support() {
            reverse.entry(next).or_default().insert(s);
        }
    }
    let mut dist: BTreeMap<StateId, usize> = BTreeMap::new();
    let mut queue: VecDeque<StateId> = VecDeque::new();
    for t in targets {
        if domain.states.contains(t) {
            dist.insert(t.clone(), 0);
            queue.push_back(t.clone());
        }
    }
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        if let Some(preds) = reverse.get(&s) {
            for p in preds.clone() {
                if !dist.contains_key(p) {
                    dist.insert(p.clone(), d + 1);
                    queue.push_back(p.clone());
                }
            }
        }
    }
    dist
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HistoryKind {
    StateAction,
    ObservationAction,
    StateOnly,
    ObservationOnly,
    ActionOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HistoryEntry {
    State(StateId),
    Observation(String),
    Action(ActionId),
}

/// A typed alternating trace, optionally carrying a subgoal episode window
/// (start step, duration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub kind: HistoryKind,
    pub entries: Vec<HistoryEntry>,
    pub window: Option<(usize, usize)>,
}

impl History {
    pub fn new(
        kind: HistoryKind,
        entries: Vec<HistoryEntry>,
        window: Option<(usize, usize)>,
    ) -> Result<Self, WorldError> {
        if let Some((_, duration)) = window {
            if duration < 1 {
                return Err(WorldError::BadWindow);
            }
        }
        let history = History { kind, entries, window };
        history.check_alternation()?;
        Ok(history)
    }

    fn check_alternation(&self) -> Result<(), WorldError> {
        let ok = match self.kind {
            HistoryKind::StateOnly => self
                .entries
                .iter()
                .all(|e| matches!(e, HistoryEntry::State(_))),
            HistoryKind::ObservationOnly => self
                .entries
                .iter()
                .all(|e| matches!(e, HistoryEntry::Observation(_))),
            HistoryKind::ActionOnly => self
                .entries
                .iter()
                .all(|e| matches!(e, HistoryEntry::Action(_))),
            HistoryKind::StateAction => self.entries.iter().enumerate().all(|(i, e)| {
                if i % 2 == 0 {
                    matches!(e, HistoryEntry::State(_))
                } else {
                    matches!(e, HistoryEntry::Action(_))
                }
            }),
            HistoryKind::ObservationAction => self.entries.iter().enumerate().all(|(i, e)| {
                if i % 2 == 0 {
                    matches!(e, HistoryEntry::Observation(_))
                } else {
                    matches!(e, HistoryEntry::Action(_))
                }
            }),
        };
        if ok {
            Ok(())
        } else {
            Err(WorldError::BadAlternation(self.kind))
        }
    }

    /// Actions in order of appearance.
    pub fn actions(&self) -> Vec<&ActionId> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                HistoryEntry::Action(a) => Some(a),
                _ => None,
            })
            .collect()
    }

    /// States in order of appearance.
    pub fn states(&self) -> Vec<&StateId> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                HistoryEntry::State(s) => Some(s),
                _ => None,
            })
            .collect()
    }
}
