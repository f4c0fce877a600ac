//! Decision procedures for the alignment cases.
//!
//! Each case is checked two ways. Semantic mode evaluates the numbered
//! set-inclusion conditions exactly. Operational mode simulates the robot's
//! pursuit from every initial state, pushes each terminal state through the
//! human pipeline, and tests the case's membership clause on the outcome.
//! [`equivalence_audit`] cross-validates the two on random models.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::competence::{self, ActionPolicy, CompetenceError};
use crate::grounding::{self, Goal, GroundingError};
use crate::perception::{self, ObservationId, PerceptionError, SensorModel, SensorRow};
use crate::purposes::{
    AlignmentMap, EncodingPointId, EncodingSpace, ObservationEncoder, Polarity, Purpose,
    PurposeError, PurposeId,
};
use crate::world::{self, Domain, StateId, Transition, WorldError};

#[derive(Debug, Error, PartialEq)]
pub enum AlignmentError {
    #[error("model is incomplete: {0}")]
    IncompleteModel(String),
    #[error("intention point `{0}` is outside the intended purpose's support")]
    PointOutsideSupport(EncodingPointId),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Purpose(#[from] PurposeError),
    #[error(transparent)]
    Competence(#[from] CompetenceError),
}

/// The robot's committed choice: which purpose, which support point, where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intention {
    pub purpose: PurposeId,
    pub point: EncodingPointId,
    pub domain: String,
}

/// A complete two-agent model with frozen ground-truth sets.
///
/// The starred sets record what the human pipeline grounded to at model
/// construction time; later perturbations of sensors or encoders deliberately
/// do not refresh them, so both checking modes judge the perturbed model
/// against the original intent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentModel {
    pub domains: BTreeMap<String, Domain>,
    pub human_space: EncodingSpace,
    pub human_sensor: SensorModel,
    /// Per-domain human encoders over `human_space`.
    pub human_encoders: BTreeMap<String, ObservationEncoder>,
    pub human_purpose: Purpose,
    pub human_proscriptive: Option<Purpose>,
    pub robot_space: EncodingSpace,
    pub robot_sensor: SensorModel,
    pub robot_encoders: BTreeMap<String, ObservationEncoder>,
    pub robot_purpose: Purpose,
    pub map: AlignmentMap,
    pub intention: Option<Intention>,
    /// The goal the robot actually pursues in the intended domain; defaults
    /// to the grounding of the intention point when absent.
    pub pursued_goal: Option<Goal>,
    /// Instrumental subgoal chain, pursued before the final goal.
    pub chain: Vec<Goal>,
    /// Per-link pursuit timeout in steps.
    pub chain_timeout: usize,
    /// Learned pursuit policy; when absent, pursuit plans shortest paths on
    /// the model directly.
    pub policy: Option<ActionPolicy>,
    /// Utility threshold for the variable-utility case.
    pub threshold: Option<f64>,
    pub star_goal: BTreeMap<String, BTreeSet<ObservationId>>,
    pub star_states: BTreeMap<String, BTreeSet<StateId>>,
    pub star_prosc_goal: BTreeMap<String, BTreeSet<ObservationId>>,
    pub star_prosc_states: BTreeMap<String, BTreeSet<StateId>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlignmentCase {
    Extrinsic,
    VariableUtilityThreshold(f64),
    VariableUtilityMax,
    Intrinsic,
    Instrumental,
    InstrumentalProscriptive,
    MultiDomainAll,
    MultiDomainAny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckMode {
    Semantic,
    Operational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub index: usize,
    pub label: String,
    pub holds: bool,
    pub witnesses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentVerdict {
    pub aligned: bool,
    pub mode: CheckMode,
    pub case: AlignmentCase,
    pub per_condition: Vec<ConditionResult>,
    pub notes: Vec<String>,
}

fn misaligned_note(mode: CheckMode, case: AlignmentCase, note: &str) -> AlignmentVerdict {
    AlignmentVerdict {
        aligned: false,
        mode,
        case,
        per_condition: Vec::new(),
        notes: vec![note.to_owned()],
    }
}

impl AlignmentModel {
    fn domain(&self, id: &str) -> Result<&Domain, AlignmentError> {
        self.domains
            .get(id)
            .ok_or_else(|| AlignmentError::IncompleteModel(format!("unknown domain `{id}`")))
    }

    fn robot_encoder(&self, d: &str) -> Result<&ObservationEncoder, AlignmentError> {
        self.robot_encoders.get(d).ok_or_else(|| {
            AlignmentError::IncompleteModel(format!("no robot encoder for domain `{d}`"))
        })
    }

    fn human_encoder(&self, d: &str) -> Result<&ObservationEncoder, AlignmentError> {
        self.human_encoders.get(d).ok_or_else(|| {
            AlignmentError::IncompleteModel(format!("no human encoder for domain `{d}`"))
        })
    }

    fn star<'a>(
        table: &'a BTreeMap<String, BTreeSet<String>>,
        d: &str,
    ) -> std::borrow::Cow<'a, BTreeSet<String>> {
        table
            .get(d)
            .map(std::borrow::Cow::Borrowed)
            .unwrap_or_else(|| std::borrow::Cow::Owned(BTreeSet::new()))
    }

    /// The goal pursued in domain `d`: the explicitly chosen goal when `d` is
    /// the intended domain, otherwise the grounding of the intention point.
    pub(crate) fn goal_in(&self, d: &str, intention: &Intention) -> Result<Goal, AlignmentError> {
        if d == intention.domain {
            if let Some(goal) = &self.pursued_goal {
                return Ok(goal.clone());
            }
        }
        Ok(grounding::ground_point(
            &self.robot_purpose,
            &intention.point,
            self.robot_encoder(d)?,
        )?)
    }

    /// All human encodings a state can produce (one per sensor-support
    /// observation).
    fn human_readings(
        &self,
        d: &str,
        state: &str,
    ) -> Result<Vec<(ObservationId, EncodingPointId)>, AlignmentError> {
        let encoder = self.human_encoder(d)?;
        let row = self.human_sensor.row(state)?;
        let mut out = Vec::new();
        for o in row.support() {
            out.push((o.clone(), encoder.encode(o)?.clone()));
        }
        Ok(out)
    }

    /// Warns when a purpose could be fulfilled without the robot acting: some
    /// initial state already sits in the starred state goal.
    fn external_fulfilment_note(&self, d: &str) -> Option<String> {
        let domain = self.domains.get(d)?;
        let star = self.star_states.get(d)?;
        let idle: Vec<&StateId> =
            domain.initial_states.iter().filter(|s| star.contains(*s)).collect();
        if idle.is_empty() {
            None
        } else {
            Some(format!(
                "external fulfilment: {} initial state(s) of `{d}` already satisfy the ground-truth state goal",
                idle.len()
            ))
        }
    }
}

fn witness_list(items: impl IntoIterator<Item = String>) -> Vec<String> {
    items.into_iter().take(8).collect()
}

/// Union of single-observation preimages, restricted to one domain's states.
pub(crate) fn preimage_of(
    sensor: &SensorModel,
    points: &BTreeSet<ObservationId>,
    within: &BTreeSet<StateId>,
) -> Result<BTreeSet<StateId>, PerceptionError> {
    let mut out = BTreeSet::new();
    for o in points {
        out.extend(perception::preimage(sensor, o, Some(within))?);
    }
    Ok(out)
}

fn domains_for<'a>(
    model: &'a AlignmentModel,
    case: &AlignmentCase,
    intention: &'a Intention,
) -> Result<Vec<&'a str>, AlignmentError> {
    match case {
        AlignmentCase::MultiDomainAll | AlignmentCase::MultiDomainAny => {
            let ds: Vec<&str> = model
                .robot_purpose
                .intended_domains
                .iter()
                .map(String::as_str)
                .collect();
            if ds.is_empty() {
                return Err(AlignmentError::IncompleteModel(
                    "multi-domain case with no intended domains".to_owned(),
                ));
            }
            Ok(ds)
        }
        _ => Ok(vec![intention.domain.as_str()]),
    }
}

fn utility_clause_holds(
    model: &AlignmentModel,
    case: &AlignmentCase,
    point: &str,
) -> (bool, String) {
    let support = &model.human_purpose.support;
    match case {
        AlignmentCase::VariableUtilityThreshold(theta) => {
            let u = model.human_purpose.utility.table.get(point).copied().unwrap_or(0.0);
            (u > *theta, format!("utility({point}) = {u} vs threshold {theta}"))
        }
        AlignmentCase::VariableUtilityMax => {
            let max = support
                .iter()
                .map(|p| model.human_purpose.utility.table.get(p).copied().unwrap_or(0.0))
                .fold(f64::NEG_INFINITY, f64::max);
            let u = model.human_purpose.utility.table.get(point).copied().unwrap_or(0.0);
            (u == max, format!("utility({point}) = {u} vs max {max}"))
        }
        _ => (
            support.contains(point),
            format!("membership of {point} in the purpose support"),
        ),
    }
}

fn intention_of(model: &AlignmentModel) -> Result<Option<&Intention>, AlignmentError> {
    let Some(intention) = &model.intention else { return Ok(None) };
    if !model.robot_purpose.intention_flag {
        return Ok(None);
    }
    if !model.robot_purpose.support.contains(&intention.point) {
        return Err(AlignmentError::PointOutsideSupport(intention.point.clone()));
    }
    Ok(Some(intention))
}

// --- semantic mode -------------------------------------------------------

/// Evaluates the theorem conditions for one domain. Returns the condition
/// list; alignment for the domain is their conjunction.
fn semantic_domain(
    model: &AlignmentModel,
    case: &AlignmentCase,
    intention: &Intention,
    d: &str,
) -> Result<Vec<ConditionResult>, AlignmentError> {
    let domain = model.domain(d)?;
    let goal = model.goal_in(d, intention)?;
    let mut out = Vec::new();

    // Condition 1: the pursued goal is a nonempty part of the intention
    // point's grounding.
    let decoded = model
        .robot_encoder(d)?
        .decode(&model.robot_space, &intention.point)?;
    let stray: Vec<String> =
        goal.points.difference(&decoded).map(|o| format!("goal point {o}")).collect();
    out.push(ConditionResult {
        index: 1,
        label: format!("[{d}] goal grounds the intention point"),
        holds: !goal.points.is_empty() && stray.is_empty(),
        witnesses: if goal.points.is_empty() {
            vec!["goal is empty".to_owned()]
        } else {
            witness_list(stray)
        },
    });

    // Instrumental chain: every launch state enables the next subgoal.
    if matches!(
        case,
        AlignmentCase::Instrumental | AlignmentCase::InstrumentalProscriptive
    ) {
        let mut holds = true;
        let mut witnesses = Vec::new();
        let mut launch: BTreeSet<StateId> = domain.initial_states.clone();
        let mut links: Vec<&Goal> = model.chain.iter().collect();
        links.push(&goal);
        for (j, link) in links.iter().enumerate() {
            for s in &launch {
                if !competence::enabled(link, s, domain, &model.robot_sensor, model.chain_timeout)?
                {
                    holds = false;
                    witnesses.push(format!("link {j} not enabled from {s}"));
                }
            }
            let sg = grounding::state_goal(link, &model.robot_sensor)?;
            launch = sg.states.intersection(&domain.states).cloned().collect();
        }
        out.push(ConditionResult {
            index: 2,
            label: format!("[{d}] subgoal chain enabledness"),
            holds,
            witnesses: witness_list(witnesses),
        });
    }

    // Condition 2: the robot state goal is a nonempty subset of the starred
    // state goal.
    let sg = grounding::state_goal(&goal, &model.robot_sensor)?;
    let s_omega: BTreeSet<StateId> = sg.states.intersection(&domain.states).cloned().collect();
    let star_states = AlignmentModel::star(&model.star_states, d);
    let escaped: Vec<String> = s_omega
        .difference(&star_states)
        .map(|s| format!("state {s}"))
        .collect();
    out.push(ConditionResult {
        index: 2,
        label: format!("[{d}] robot state goal within ground truth"),
        holds: !s_omega.is_empty() && escaped.is_empty(),
        witnesses: if s_omega.is_empty() {
            vec!["state goal is empty".to_owned()]
        } else {
            witness_list(escaped)
        },
    });

    // Condition 3: the human's view of those states stays inside the starred
    // goal.
    let o_omega = perception::observe_set(&model.human_sensor, &s_omega)?;
    let star_goal = AlignmentModel::star(&model.star_goal, d);
    let misseen: Vec<String> = o_omega
        .difference(&star_goal)
        .map(|o| format!("observation {o}"))
        .collect();
    out.push(ConditionResult {
        index: 3,
        label: format!("[{d}] human image within ground-truth goal"),
        holds: misseen.is_empty(),
        witnesses: witness_list(misseen),
    });

    // Condition 4: the human encodings land where the case demands.
    let encoder = model.human_encoder(d)?;
    let mut e_omega = BTreeSet::new();
    for o in &o_omega {
        e_omega.insert(encoder.encode(o)?.clone());
    }
    let mut holds = true;
    let mut witnesses = Vec::new();
    for e in &e_omega {
        let (ok, detail) = utility_clause_holds(model, case, e);
        if !ok {
            holds = false;
            witnesses.push(detail);
        }
    }
    out.push(ConditionResult {
        index: 4,
        label: format!("[{d}] human encodings satisfy the purpose clause"),
        holds,
        witnesses: witness_list(witnesses),
    });

    // Condition 5 (proscriptive): no stage collapses into the forbidden sets,
    // and the outcome never touches the proscriptive support.
    if matches!(case, AlignmentCase::InstrumentalProscriptive) {
        let prosc = model.human_proscriptive.as_ref().ok_or_else(|| {
            AlignmentError::IncompleteModel("proscriptive case without a proscriptive purpose".to_owned())
        })?;
        let xi_states = AlignmentModel::star(&model.star_prosc_states, d);
        let xi_goal = AlignmentModel::star(&model.star_prosc_goal, d);
        let mut holds = true;
        let mut witnesses = Vec::new();
        for (j, link) in model.chain.iter().enumerate() {
            let link_sg = grounding::state_goal(link, &model.robot_sensor)?;
            let s_j: BTreeSet<StateId> =
                link_sg.states.intersection(&domain.states).cloned().collect();
            if s_j.is_subset(&xi_states) {
                holds = false;
                witnesses.push(format!("subgoal {j} states collapse into the forbidden state set"));
            }
            let o_j = perception::observe_set(&model.human_sensor, &s_j)?;
            if o_j.is_subset(&xi_goal) {
                holds = false;
                witnesses.push(format!("subgoal {j} image collapses into the forbidden goal"));
            }
        }
        for e in &e_omega {
            if prosc.support.contains(e) {
                holds = false;
                witnesses.push(format!("outcome point {e} lies in the proscriptive support"));
            }
        }
        out.push(ConditionResult {
            index: 5,
            label: format!("[{d}] proscriptive exclusions"),
            holds,
            witnesses: witness_list(witnesses),
        });
    }

    Ok(out)
}

/// Intrinsic semantic check: every point-grounding of the human purpose must
/// be zero-shot coverable by the robot's own grounding of that point.
fn semantic_intrinsic(
    model: &AlignmentModel,
    d: &str,
) -> Result<Vec<ConditionResult>, AlignmentError> {
    let domain = model.domain(d)?;
    let human_encoder = model.human_encoder(d)?;
    let robot_encoder = model.robot_encoder(d)?;
    let mut out = Vec::new();
    for (k, p) in model.human_purpose.support.iter().enumerate() {
        let robot_points: BTreeSet<EncodingPointId> = model
            .map
            .inverse(p)
            .intersection(&model.robot_purpose.support)
            .cloned()
            .collect();
        let goal_points: BTreeSet<ObservationId> = robot_encoder
            .table
            .iter()
            .filter(|(_, e)| robot_points.contains(e.as_str()))
            .map(|(o, _)| o.clone())
            .collect();
        let star_goal = human_encoder.decode(&model.human_space, p)?;
        let star_states = preimage_of(&model.human_sensor, &star_goal, &domain.states)?;
        let s_omega = preimage_of(&model.robot_sensor, &goal_points, &domain.states)?;
        let o_omega = perception::observe_set(&model.human_sensor, &s_omega)?;
        let mut e_omega = BTreeSet::new();
        for o in &o_omega {
            e_omega.insert(human_encoder.encode(o)?.clone());
        }
        let holds = !goal_points.is_empty()
            && !s_omega.is_empty()
            && s_omega.is_subset(&star_states)
            && o_omega.is_subset(&star_goal)
            && e_omega.iter().all(|e| e == p);
        out.push(ConditionResult {
            index: k + 1,
            label: format!("[{d}] point {p} robot-groundable and aligned"),
            holds,
            witnesses: if holds {
                Vec::new()
            } else if goal_points.is_empty() {
                vec![format!("point {p} has no robot grounding")]
            } else {
                witness_list(
                    s_omega
                        .difference(&star_states)
                        .map(|s| format!("state {s}"))
                        .chain(e_omega.iter().filter(|e| *e != p).map(|e| format!("encodes to {e}"))),
                )
            },
        });
    }
    Ok(out)
}

/// Evaluates the theorem conditions for `case`.
pub fn check_conditions(
    model: &AlignmentModel,
    case: &AlignmentCase,
) -> Result<AlignmentVerdict, AlignmentError> {
    let Some(intention) = intention_of(model)? else {
        return Ok(misaligned_note(
            CheckMode::Semantic,
            *case,
            "no robot intention formed",
        ));
    };
    let ds = domains_for(model, case, intention)?;
    let mut per_condition = Vec::new();
    let mut per_domain_ok = Vec::new();
    for d in &ds {
        let conditions = if matches!(case, AlignmentCase::Intrinsic) {
            semantic_intrinsic(model, d)?
        } else {
            semantic_domain(model, case, intention, d)?
        };
        per_domain_ok.push(conditions.iter().all(|c| c.holds));
        per_condition.extend(conditions);
    }
    let aligned = match case {
        AlignmentCase::MultiDomainAny => per_domain_ok.iter().any(|ok| *ok),
        _ => per_domain_ok.iter().all(|ok| *ok),
    };
    let mut notes = Vec::new();
    for d in &ds {
        if let Some(n) = model.external_fulfilment_note(d) {
            notes.push(n);
        }
    }
    Ok(AlignmentVerdict { aligned, mode: CheckMode::Semantic, case: *case, per_condition, notes })
}

// --- operational mode ----------------------------------------------------

struct Pursuit {
    /// Terminal state of each chain link, final goal last.
    link_states: Vec<StateId>,
    terminal: StateId,
}

/// Deterministic shortest-path pursuit of one goal.
pub(crate) fn plan_link(
    domain: &Domain,
    robot_sensor: &SensorModel,
    goal: &Goal,
    start: &StateId,
    timeout: usize,
) -> Result<Option<StateId>, AlignmentError> {
    let targets = preimage_of(robot_sensor, &goal.points, &domain.states)?;
    if targets.is_empty() {
        return Ok(None);
    }
    let dist = world::distance_to(domain, &targets);
    let mut state = start.clone();
    for _ in 0..=timeout {
        if targets.contains(&state) {
            return Ok(Some(state));
        }
        let Some(_) = dist.get(&state) else { return Ok(None) };
        let mut best: Option<(&StateId, usize)> = None;
        for a in &domain.actions {
            let next = match domain.row(&state, a)? {
                Transition::Deterministic(t) => t,
                Transition::Stochastic(_) => {
                    return Err(AlignmentError::IncompleteModel(
                        "stochastic pursuit requires an explicit policy".to_owned(),
                    ))
                }
            };
            if let Some(nd) = dist.get(next) {
                if best.map(|(_, bd)| *nd < bd).unwrap_or(true) {
                    best = Some((next, *nd));
                }
            }
        }
        match best {
            Some((next, _)) => state = next.clone(),
            None => return Ok(None),
        }
    }
    Ok(if targets.contains(&state) { Some(state) } else { None })
}

fn run_pursuit<R: Rng>(
    model: &AlignmentModel,
    d: &str,
    goal: &Goal,
    start: &StateId,
    rng: &mut R,
) -> Result<Option<Pursuit>, AlignmentError> {
    let domain = model.domain(d)?;
    if let Some(policy) = &model.policy {
        let timeouts: Vec<usize> = vec![model.chain_timeout; model.chain.len() + 1];
        match competence::execute_chain(
            &model.chain,
            goal,
            &competence::GoalSelectorPolicy::default(),
            policy,
            domain,
            &model.robot_sensor,
            start,
            &timeouts,
            0.5,
            rng,
        ) {
            Ok(outcome) => {
                let terminal = outcome
                    .link_states
                    .last()
                    .cloned()
                    .unwrap_or_else(|| start.clone());
                Ok(Some(Pursuit { link_states: outcome.link_states, terminal }))
            }
            Err(CompetenceError::SubgoalTimeout(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    } else {
        let mut state = start.clone();
        let mut link_states = Vec::new();
        for link in model.chain.iter().chain([goal]) {
            match plan_link(domain, &model.robot_sensor, link, &state, model.chain_timeout)? {
                Some(end) => {
                    link_states.push(end.clone());
                    state = end;
                }
                None => return Ok(None),
            }
        }
        Ok(Some(Pursuit { terminal: state, link_states }))
    }
}

/// Tests the definition clause on one realized terminal state; also checks
/// intermediate link states for the proscriptive case. Returns failure
/// descriptions (empty = clause satisfied).
fn outcome_clause(
    model: &AlignmentModel,
    case: &AlignmentCase,
    d: &str,
    pursuit: &Pursuit,
) -> Result<Vec<String>, AlignmentError> {
    let mut failures = Vec::new();
    for (o, e) in model.human_readings(d, &pursuit.terminal)? {
        let (ok, detail) = utility_clause_holds(model, case, &e);
        if !ok {
            failures.push(format!("terminal {} observed as {o}: {detail}", pursuit.terminal));
        }
    }
    if matches!(case, AlignmentCase::InstrumentalProscriptive) {
        let prosc = model.human_proscriptive.as_ref().ok_or_else(|| {
            AlignmentError::IncompleteModel("proscriptive case without a proscriptive purpose".to_owned())
        })?;
        for (j, s) in pursuit.link_states.iter().enumerate() {
            for (_, e) in model.human_readings(d, s)? {
                if prosc.support.contains(&e) {
                    failures.push(format!("link {j} realized forbidden point {e} at {s}"));
                }
            }
        }
    }
    Ok(failures)
}

fn operational_domain<R: Rng>(
    model: &AlignmentModel,
    case: &AlignmentCase,
    intention: &Intention,
    d: &str,
    rng: &mut R,
) -> Result<ConditionResult, AlignmentError> {
    let domain = model.domain(d)?;
    let goal = model.goal_in(d, intention)?;
    if goal.points.is_empty() {
        return Ok(ConditionResult {
            index: 1,
            label: format!("[{d}] pursuit outcome"),
            holds: false,
            witnesses: vec!["pursued goal is empty".to_owned()],
        });
    }
    let mut witnesses = Vec::new();
    for start in &domain.initial_states {
        match run_pursuit(model, d, &goal, start, rng)? {
            Some(pursuit) => witnesses.extend(outcome_clause(model, case, d, &pursuit)?),
            None => witnesses.push(format!("pursuit failed from {start}")),
        }
    }
    Ok(ConditionResult {
        index: 1,
        label: format!("[{d}] pursuit outcome"),
        holds: witnesses.is_empty(),
        witnesses: witness_list(witnesses),
    })
}

fn operational_intrinsic<R: Rng>(
    model: &AlignmentModel,
    d: &str,
    rng: &mut R,
) -> Result<Vec<ConditionResult>, AlignmentError> {
    let domain = model.domain(d)?;
    let robot_encoder = model.robot_encoder(d)?;
    let mut out = Vec::new();
    for (k, p) in model.human_purpose.support.iter().enumerate() {
        let robot_points: BTreeSet<EncodingPointId> = model
            .map
            .inverse(p)
            .intersection(&model.robot_purpose.support)
            .cloned()
            .collect();
        let points: BTreeSet<ObservationId> = robot_encoder
            .table
            .iter()
            .filter(|(_, e)| robot_points.contains(e.as_str()))
            .map(|(o, _)| o.clone())
            .collect();
        let mut witnesses = Vec::new();
        if points.is_empty() {
            witnesses.push(format!("point {p} has no robot grounding"));
        } else {
            let goal = Goal {
                owner: crate::perception::Agent::Robot,
                purpose: format!("{}@{p}", model.robot_purpose.id),
                domain: d.to_owned(),
                points,
                source: grounding::GoalSource::WholePurpose,
                utility_per_point: BTreeMap::new(),
                intention_flag: true,
                ungroundable: false,
            };
            for start in &domain.initial_states {
                match run_pursuit(model, d, &goal, start, rng)? {
                    Some(pursuit) => {
                        for (o, e) in model.human_readings(d, &pursuit.terminal)? {
                            if &e != p {
                                witnesses.push(format!(
                                    "terminal {} observed as {o} encodes to {e}, wanted {p}",
                                    pursuit.terminal
                                ));
                            }
                        }
                    }
                    None => witnesses.push(format!("pursuit of {p} failed from {start}")),
                }
            }
        }
        out.push(ConditionResult {
            index: k + 1,
            label: format!("[{d}] zero-shot production of {p}"),
            holds: witnesses.is_empty(),
            witnesses: witness_list(witnesses),
        });
    }
    Ok(out)
}

/// Evaluates the definition operationally by simulating pursuit.
pub fn check_definition<R: Rng>(
    model: &AlignmentModel,
    case: &AlignmentCase,
    rng: &mut R,
) -> Result<AlignmentVerdict, AlignmentError> {
    let Some(intention) = intention_of(model)? else {
        return Ok(misaligned_note(
            CheckMode::Operational,
            *case,
            "no robot intention formed",
        ));
    };
    let ds = domains_for(model, case, intention)?;
    let mut per_condition = Vec::new();
    let mut per_domain_ok = Vec::new();
    for d in &ds {
        let conditions = if matches!(case, AlignmentCase::Intrinsic) {
            operational_intrinsic(model, d, rng)?
        } else {
            vec![operational_domain(model, case, intention, d, rng)?]
        };
        per_domain_ok.push(conditions.iter().all(|c| c.holds));
        per_condition.extend(conditions);
    }
    let aligned = match case {
        AlignmentCase::MultiDomainAny => per_domain_ok.iter().any(|ok| *ok),
        _ => per_domain_ok.iter().all(|ok| *ok),
    };
    let mut notes = Vec::new();
    for d in &ds {
        if let Some(n) = model.external_fulfilment_note(d) {
            notes.push(n);
        }
    }
    Ok(AlignmentVerdict {
        aligned,
        mode: CheckMode::Operational,
        case: *case,
        per_condition,
        notes,
    })
}

// --- random model generation and the audit -------------------------------

/// Ways to break an otherwise-aligned extrinsic model, one per theorem
/// condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Dilute the pursued goal with an off-point observation (condition 1).
    GoalDilution,
    /// Alias a bad state's robot observation onto the goal (condition 2).
    RobotSensorAlias,
    /// Point the human sensor of a goal state at a bad observation
    /// (condition 3).
    HumanSensorBreak,
    /// Re-encode a goal observation outside the purpose (condition 4).
    HumanEncoderBreak,
}

pub const MUTATIONS: [Mutation; 4] = [
    Mutation::GoalDilution,
    Mutation::RobotSensorAlias,
    Mutation::HumanSensorBreak,
    Mutation::HumanEncoderBreak,
];

/// What the generator may inject into a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Injection {
    None,
    Mutate(Mutation),
    NoIntention,
    /// Instrumental: a subgoal no state can realize.
    UnreachableSubgoal,
    /// Proscriptive: a subgoal living entirely inside the forbidden region.
    ForbiddenSubgoal,
    /// Intrinsic: one purpose point loses its robot grounding.
    UngroundablePoint,
}

struct SideSpec {
    domain_id: String,
    n_states: usize,
    n_obs: usize,
}

/// Builds one domain's mirrored human/robot tables into the model under
/// construction. The robot pipeline mirrors the human pipeline exactly, so
/// the clean model is aligned for every support point.
fn build_side<R: Rng>(
    model: &mut AlignmentModel,
    spec: &SideSpec,
    n_points: usize,
    has_xi: bool,
    rng: &mut R,
) {
    let d = &spec.domain_id;
    let sid = |i: usize| format!("{d}.s{i}");
    let hob = |j: usize| format!("{d}.oh{j}");
    let rob = |j: usize| format!("{d}.ro{j}");
    // Point index per observation: every point gets at least one observation,
    // the xi point (when present) exactly one.
    let total_points = n_points + usize::from(has_xi);
    let obs_point: Vec<usize> = (0..spec.n_obs)
        .map(|j| {
            if j < total_points {
                j
            } else {
                rng.gen_range(0..n_points)
            }
        })
        .collect();
    // State to observation index: every observation gets at least one state.
    let state_obs: Vec<usize> = (0..spec.n_states)
        .map(|i| if i < spec.n_obs { i } else { rng.gen_range(0..spec.n_obs) })
        .collect();

    let point_name = |k: usize| {
        if has_xi && k == n_points {
            "exi".to_owned()
        } else {
            format!("e{k}")
        }
    };
    let robot_point_name = |k: usize| {
        if has_xi && k == n_points {
            "mxi".to_owned()
        } else {
            format!("m{k}")
        }
    };

    for (i, &j) in state_obs.iter().enumerate() {
        model
            .human_sensor
            .map
            .insert(sid(i), SensorRow::Deterministic(hob(j)));
        model
            .robot_sensor
            .map
            .insert(sid(i), SensorRow::Deterministic(rob(j)));
    }
    for j in 0..spec.n_obs {
        model.human_sensor.observations.insert(hob(j));
        model.robot_sensor.observations.insert(rob(j));
    }
    let human_encoder = ObservationEncoder {
        owner: perception::Agent::Human,
        space: model.human_space.id.clone(),
        domain: d.clone(),
        table: (0..spec.n_obs).map(|j| (hob(j), point_name(obs_point[j]))).collect(),
    };
    let robot_encoder = ObservationEncoder {
        owner: perception::Agent::Robot,
        space: model.robot_space.id.clone(),
        domain: d.clone(),
        table: (0..spec.n_obs).map(|j| (rob(j), robot_point_name(obs_point[j]))).collect(),
    };

    // Transitions: two noise actions plus one capability action per purpose
    // point, jumping to that point's first state.
    let states: Vec<StateId> = (0..spec.n_states).map(sid).collect();
    let mut actions: Vec<String> = vec!["act0".to_owned(), "act1".to_owned()];
    let mut transition = BTreeMap::new();
    for s in &states {
        for a in ["act0", "act1"] {
            transition.insert(
                (s.clone(), a.to_owned()),
                Transition::Deterministic(sid(rng.gen_range(0..spec.n_states))),
            );
        }
    }
    for k in 0..total_points {
        // First state whose observation encodes to point k.
        let Some(target) = (0..spec.n_states).find(|i| obs_point[state_obs[*i]] == k) else {
            continue;
        };
        let a = format!("cap{k}");
        actions.push(a.clone());
        for s in &states {
            transition.insert((s.clone(), a.clone()), Transition::Deterministic(sid(target)));
        }
    }
    let domain = Domain {
        id: d.clone(),
        states: states.iter().cloned().collect(),
        actions: actions.into_iter().collect(),
        transition,
        initial_states: states.iter().cloned().collect(),
    };

    // Frozen ground truth from the clean human pipeline.
    let star_goal: BTreeSet<ObservationId> = human_encoder
        .table
        .iter()
        .filter(|(_, e)| model.human_purpose.support.contains(e.as_str()))
        .map(|(o, _)| o.clone())
        .collect();
    let star_states: BTreeSet<StateId> = states
        .iter()
        .filter(|s| match &model.human_sensor.map[*s] {
            SensorRow::Deterministic(o) => star_goal.contains(o),
            SensorRow::Stochastic(_) => false,
        })
        .cloned()
        .collect();
    let (xi_goal, xi_states) = if has_xi {
        let g: BTreeSet<ObservationId> = human_encoder
            .table
            .iter()
            .filter(|(_, e)| e.as_str() == "exi")
            .map(|(o, _)| o.clone())
            .collect();
        let s: BTreeSet<StateId> = states
            .iter()
            .filter(|s| match &model.human_sensor.map[*s] {
                SensorRow::Deterministic(o) => g.contains(o),
                SensorRow::Stochastic(_) => false,
            })
            .cloned()
            .collect();
        (g, s)
    } else {
        (BTreeSet::new(), BTreeSet::new())
    };

    model.human_sensor.covered_domains.insert(d.clone());
    model.robot_sensor.covered_domains.insert(d.clone());
    model.human_encoders.insert(d.clone(), human_encoder);
    model.robot_encoders.insert(d.clone(), robot_encoder);
    model.star_goal.insert(d.clone(), star_goal);
    model.star_states.insert(d.clone(), star_states);
    model.star_prosc_goal.insert(d.clone(), xi_goal);
    model.star_prosc_states.insert(d.clone(), xi_states);
    model.domains.insert(d.clone(), domain);
}

/// Applies one condition-breaking mutation to the intended domain. The
/// starred sets stay frozen, so both modes judge the mutant against the
/// original intent.
pub fn apply_mutation<R: Rng>(
    model: &mut AlignmentModel,
    mutation: Mutation,
    rng: &mut R,
) -> Result<(), AlignmentError> {
    let intention = model
        .intention
        .clone()
        .ok_or_else(|| AlignmentError::IncompleteModel("mutation needs an intention".to_owned()))?;
    let d = intention.domain.clone();
    let domain_states = model.domain(&d)?.states.clone();
    let goal = model.goal_in(&d, &intention)?;
    let star_states = model.star_states.get(&d).cloned().unwrap_or_default();
    let xi_states = model.star_prosc_states.get(&d).cloned().unwrap_or_default();
    // Bad states: outside both the prescriptive and proscriptive ground
    // truth.
    let bad_states: Vec<StateId> = domain_states
        .iter()
        .filter(|s| !star_states.contains(*s) && !xi_states.contains(*s))
        .cloned()
        .collect();
    let bad_state = bad_states
        .first()
        .ok_or_else(|| AlignmentError::IncompleteModel("no bad region to mutate with".to_owned()))?
        .clone();
    let goal_states = preimage_of(&model.robot_sensor, &goal.points, &domain_states)?;
    if goal_states.is_empty() {
        return Err(AlignmentError::IncompleteModel("goal has no states".to_owned()));
    }

    match mutation {
        Mutation::GoalDilution => {
            let bad_obs = match model.robot_sensor.row(&bad_state)? {
                SensorRow::Deterministic(o) => o.clone(),
                SensorRow::Stochastic(_) => unreachable!("generated sensors are deterministic"),
            };
            let mut diluted = goal.clone();
            diluted.points.insert(bad_obs);
            model.pursued_goal = Some(diluted);
        }
        Mutation::RobotSensorAlias => {
            let goal_obs = goal.points.iter().next().expect("goal nonempty").clone();
            model
                .robot_sensor
                .map
                .insert(bad_state, SensorRow::Deterministic(goal_obs));
        }
        // The human-side breaks hit every goal state so that whichever goal
        // state a pursuit realizes, the defect is visible.
        Mutation::HumanSensorBreak => {
            let bad_obs = match model.human_sensor.row(&bad_state)? {
                SensorRow::Deterministic(o) => o.clone(),
                SensorRow::Stochastic(_) => unreachable!("generated sensors are deterministic"),
            };
            for s in &goal_states {
                model
                    .human_sensor
                    .map
                    .insert(s.clone(), SensorRow::Deterministic(bad_obs.clone()));
            }
        }
        Mutation::HumanEncoderBreak => {
            let mut goal_obs = BTreeSet::new();
            for s in &goal_states {
                match model.human_sensor.row(s)? {
                    SensorRow::Deterministic(o) => {
                        goal_obs.insert(o.clone());
                    }
                    SensorRow::Stochastic(_) => {
                        unreachable!("generated sensors are deterministic")
                    }
                }
            }
            let bad_point = model
                .human_space
                .points
                .iter()
                .find(|p| {
                    !model.human_purpose.support.contains(*p)
                        && model
                            .human_proscriptive
                            .as_ref()
                            .map(|x| !x.support.contains(*p))
                            .unwrap_or(true)
                })
                .ok_or_else(|| {
                    AlignmentError::IncompleteModel("no off-support point".to_owned())
                })?
                .clone();
            let encoder = model.human_encoders.get_mut(&d).expect("encoder exists");
            for o in goal_obs {
                encoder.table.insert(o, bad_point.clone());
            }
        }
    }
    let _ = rng;
    Ok(())
}

/// Generates a random small model for `case`. Roughly half the models are
/// clean (aligned by construction); the rest carry one injected defect.
pub fn generate_model(case: &AlignmentCase, seed: u64) -> AlignmentModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let has_xi = matches!(case, AlignmentCase::InstrumentalProscriptive);
    let multi = matches!(case, AlignmentCase::MultiDomainAll | AlignmentCase::MultiDomainAny);
    let n_points = rng.gen_range(3..=5 - usize::from(has_xi));
    let n_support = rng.gen_range(1..=n_points - 1);
    let support_points: Vec<String> = (0..n_support).map(|k| format!("e{k}")).collect();

    let human_points: BTreeSet<String> = (0..n_points)
        .map(|k| format!("e{k}"))
        .chain(has_xi.then(|| "exi".to_owned()))
        .collect();
    let robot_points: BTreeSet<String> = (0..n_points)
        .map(|k| format!("m{k}"))
        .chain(has_xi.then(|| "mxi".to_owned()))
        .collect();
    let human_space = EncodingSpace {
        id: "Eh".to_owned(),
        owner: perception::Agent::Human,
        points: human_points.clone(),
        dims: None,
    };
    let robot_space = EncodingSpace {
        id: "Ec".to_owned(),
        owner: perception::Agent::Robot,
        points: robot_points.clone(),
        dims: None,
    };
    let utilities: BTreeMap<String, f64> = human_points
        .iter()
        .map(|p| {
            let u = if p == "exi" {
                -1.0
            } else if support_points.contains(p) {
                match case {
                    AlignmentCase::VariableUtilityThreshold(_)
                    | AlignmentCase::VariableUtilityMax => {
                        (rng.gen_range(1..=5) as f64) / 5.0
                    }
                    _ => 1.0,
                }
            } else {
                0.0
            };
            (p.clone(), u)
        })
        .collect();
    let human_purpose = Purpose {
        id: "ph".to_owned(),
        owner: perception::Agent::Human,
        space: "Eh".to_owned(),
        kind: crate::purposes::PurposeKind::Human,
        polarity: Polarity::Prescriptive,
        support: support_points.iter().cloned().collect(),
        utility: crate::purposes::UtilityFunction {
            space: "Eh".to_owned(),
            table: utilities.iter().filter(|(p, _)| *p != "exi").map(|(p, u)| (p.clone(), *u)).collect(),
        },
        priority: 1.0,
        intention_flag: true,
        intended_domains: BTreeSet::new(),
        ground_truth: true,
    };
    let human_proscriptive = has_xi.then(|| Purpose {
        id: "ph_xi".to_owned(),
        owner: perception::Agent::Human,
        space: "Eh".to_owned(),
        kind: crate::purposes::PurposeKind::Human,
        polarity: Polarity::Proscriptive,
        support: BTreeSet::from(["exi".to_owned()]),
        utility: crate::purposes::UtilityFunction {
            space: "Eh".to_owned(),
            table: human_points
                .iter()
                .map(|p| (p.clone(), if p == "exi" { -1.0 } else { 0.0 }))
                .collect(),
        },
        priority: -50.0,
        intention_flag: true,
        intended_domains: BTreeSet::new(),
        ground_truth: true,
    });

    let map = AlignmentMap {
        human_space: "Eh".to_owned(),
        robot_space: "Ec".to_owned(),
        table: robot_points
            .iter()
            .map(|m| {
                let h = if m == "mxi" {
                    "exi".to_owned()
                } else {
                    format!("e{}", &m[1..])
                };
                (m.clone(), h)
            })
            .collect(),
    };

    let domain_ids: Vec<String> = if multi {
        vec!["d0".to_owned(), "d1".to_owned()]
    } else {
        vec!["d".to_owned()]
    };
    let robot_purpose = Purpose {
        id: "pc".to_owned(),
        owner: perception::Agent::Robot,
        space: "Ec".to_owned(),
        kind: crate::purposes::PurposeKind::Mission,
        polarity: Polarity::Prescriptive,
        support: support_points.iter().map(|p| format!("m{}", &p[1..])).collect(),
        utility: crate::purposes::UtilityFunction {
            space: "Ec".to_owned(),
            table: robot_points
                .iter()
                .map(|m| {
                    let u = if m == "mxi" {
                        0.0
                    } else {
                        utilities[&format!("e{}", &m[1..])]
                    };
                    (m.clone(), u)
                })
                .collect(),
        },
        priority: 1.0,
        intention_flag: true,
        intended_domains: domain_ids.iter().cloned().collect(),
        ground_truth: false,
    };

    let mut model = AlignmentModel {
        domains: BTreeMap::new(),
        human_space,
        human_sensor: SensorModel {
            owner: perception::Agent::Human,
            observations: BTreeSet::new(),
            map: BTreeMap::new(),
            covered_domains: BTreeSet::new(),
        },
        human_encoders: BTreeMap::new(),
        human_purpose,
        human_proscriptive,
        robot_space,
        robot_sensor: SensorModel {
            owner: perception::Agent::Robot,
            observations: BTreeSet::new(),
            map: BTreeMap::new(),
            covered_domains: BTreeSet::new(),
        },
        robot_encoders: BTreeMap::new(),
        robot_purpose,
        map,
        intention: None,
        pursued_goal: None,
        chain: Vec::new(),
        chain_timeout: 0,
        policy: None,
        threshold: None,
        star_goal: BTreeMap::new(),
        star_states: BTreeMap::new(),
        star_prosc_goal: BTreeMap::new(),
        star_prosc_states: BTreeMap::new(),
    };

    let total_points = n_points + usize::from(has_xi);
    for d in &domain_ids {
        let n_obs = rng.gen_range(total_points..=7.min(total_points + 3));
        let n_states = rng.gen_range(n_obs..=(if multi { 6 } else { 10 }).max(n_obs));
        build_side(
            &mut model,
            &SideSpec { domain_id: d.clone(), n_states, n_obs },
            n_points,
            has_xi,
            &mut rng,
        );
    }
    model.chain_timeout = model.domains.values().map(|d| d.states.len()).max().unwrap_or(1);

    // Intention: a random mission support point, executed in the first
    // domain.
    let support: Vec<&String> = model.robot_purpose.support.iter().collect();
    let point = support[rng.gen_range(0..support.len())].clone();
    let intended = domain_ids[0].clone();
    model.intention = Some(Intention {
        purpose: "pc".to_owned(),
        point: point.clone(),
        domain: intended.clone(),
    });
    model.pursued_goal = grounding::ground_point(
        &model.robot_purpose,
        &point,
        &model.robot_encoders[&intended],
    )
    .ok();

    if matches!(
        case,
        AlignmentCase::Instrumental | AlignmentCase::InstrumentalProscriptive
    ) {
        let n_links = rng.gen_range(1..=3);
        for _ in 0..n_links {
            let p = support[rng.gen_range(0..support.len())];
            if let Ok(sub) = grounding::ground_point(
                &model.robot_purpose,
                p,
                &model.robot_encoders[&intended],
            ) {
                model.chain.push(sub);
            }
        }
    }
    if let AlignmentCase::VariableUtilityThreshold(theta) = case {
        model.threshold = Some(*theta);
    }

    // Inject a defect into roughly half the models.
    let injection = pick_injection(case, &mut rng);
    inject(&mut model, injection, &domain_ids, &mut rng);
    if multi {
        // Each extra domain may independently carry a defect, exercised by
        // retargeting the intention per domain during checks.
        if rng.gen_bool(0.4) {
            let saved = model.intention.clone();
            model.intention = Some(Intention {
                purpose: "pc".to_owned(),
                point: point.clone(),
                domain: domain_ids[1].clone(),
            });
            // Goal dilution would leak a second-domain goal into
            // pursued_goal, which belongs to the first domain; use the
            // sensor and encoder breaks only.
            let pool = [
                Mutation::RobotSensorAlias,
                Mutation::HumanSensorBreak,
                Mutation::HumanEncoderBreak,
            ];
            let mutation = pool[rng.gen_range(0..pool.len())];
            let saved_goal = model.pursued_goal.take();
            let _ = apply_mutation(&mut model, mutation, &mut rng);
            model.pursued_goal = saved_goal;
            model.intention = saved;
        }
    }
    model
}

fn pick_injection<R: Rng>(case: &AlignmentCase, rng: &mut R) -> Injection {
    if rng.gen_bool(0.45) {
        return Injection::None;
    }
    let mut pool: Vec<Injection> = MUTATIONS.iter().map(|m| Injection::Mutate(*m)).collect();
    pool.push(Injection::NoIntention);
    match case {
        // With a chain in front, a single aliased or diluted-in state may be
        // routed around rather than realized; keep only the total breaks.
        AlignmentCase::Instrumental => {
            pool = vec![
                Injection::Mutate(Mutation::HumanSensorBreak),
                Injection::Mutate(Mutation::HumanEncoderBreak),
                Injection::NoIntention,
                Injection::UnreachableSubgoal,
            ];
        }
        AlignmentCase::InstrumentalProscriptive => {
            pool = vec![
                Injection::Mutate(Mutation::HumanSensorBreak),
                Injection::Mutate(Mutation::HumanEncoderBreak),
                Injection::NoIntention,
                Injection::UnreachableSubgoal,
                Injection::ForbiddenSubgoal,
                Injection::ForbiddenSubgoal,
            ];
        }
        AlignmentCase::Intrinsic => {
            // Pipeline mutations target the pursued point; the intrinsic
            // check quantifies over all points, so grounding loss is the
            // representative defect.
            return if rng.gen_bool(0.5) {
                Injection::UngroundablePoint
            } else {
                Injection::NoIntention
            };
        }
        _ => {}
    }
    pool[rng.gen_range(0..pool.len())]
}

fn inject<R: Rng>(
    model: &mut AlignmentModel,
    injection: Injection,
    domain_ids: &[String],
    rng: &mut R,
) {
    match injection {
        Injection::None => {}
        Injection::Mutate(m) => {
            let _ = apply_mutation(model, m, rng);
        }
        Injection::NoIntention => {
            model.intention = None;
        }
        Injection::UnreachableSubgoal => {
            let d = &domain_ids[0];
            let ghost = format!("{d}.ro_ghost");
            model.robot_sensor.observations.insert(ghost.clone());
            let mut sub = model.pursued_goal.clone().expect("goal exists");
            sub.points = BTreeSet::from([ghost]);
            sub.purpose = "ghost".to_owned();
            let at = rng.gen_range(0..=model.chain.len());
            model.chain.insert(at, sub);
        }
        Injection::ForbiddenSubgoal => {
            let d = &domain_ids[0];
            let xi_states = model.star_prosc_states.get(d).cloned().unwrap_or_default();
            if xi_states.is_empty() {
                return;
            }
            let points: BTreeSet<ObservationId> = xi_states
                .iter()
                .filter_map(|s| match model.robot_sensor.map.get(s) {
                    Some(SensorRow::Deterministic(o)) => Some(o.clone()),
                    _ => None,
                })
                .collect();
            let mut sub = model.pursued_goal.clone().expect("goal exists");
            sub.points = points;
            sub.purpose = "xi_sub".to_owned();
            let at = rng.gen_range(0..=model.chain.len());
            model.chain.insert(at, sub);
        }
        Injection::UngroundablePoint => {
            let d = &domain_ids[0];
            let p = model
                .human_purpose
                .support
                .iter()
                .next()
                .expect("support nonempty")
                .clone();
            let m = format!("m{}", &p[1..]);
            let off = model
                .robot_space
                .points
                .iter()
                .find(|q| !model.robot_purpose.support.contains(*q))
                .cloned()
                .unwrap_or_else(|| m.clone());
            if off == m {
                return;
            }
            let encoder = model.robot_encoders.get_mut(d).expect("encoder exists");
            for e in encoder.table.values_mut() {
                if *e == m {
                    *e = off.clone();
                }
            }
            // Keep the pursued goal consistent if it pointed at the now
            // ungroundable point.
            if let Some(i) = &model.intention {
                if i.point == m {
                    if let Some(goal) = &mut model.pursued_goal {
                        goal.points.clear();
                        goal.ungroundable = true;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub seed: u64,
    pub semantic: bool,
    pub operational: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub case: AlignmentCase,
    pub total: usize,
    pub agreements: usize,
    pub aligned_count: usize,
    pub disagreements: Vec<Disagreement>,
}

/// Cross-validates the two checking modes on `count` generated models.
pub fn equivalence_audit(case: &AlignmentCase, count: usize, base_seed: u64) -> AuditReport {
    let mut report = AuditReport {
        case: *case,
        total: count,
        agreements: 0,
        aligned_count: 0,
        disagreements: Vec::new(),
    };
    for i in 0..count {
        let seed = base_seed.wrapping_add(i as u64);
        let model = generate_model(case, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
        let semantic = check_conditions(&model, case).map(|v| v.aligned);
        let operational = check_definition(&model, case, &mut rng).map(|v| v.aligned);
        match (semantic, operational) {
            (Ok(s), Ok(o)) if s == o => {
                report.agreements += 1;
                if s {
                    report.aligned_count += 1;
                }
            }
            (Ok(s), Ok(o)) => report.disagreements.push(Disagreement {
                seed,
                semantic: s,
                operational: o,
            }),
            // Checker errors count as disagreement so the audit surfaces
            // them.
            _ => report.disagreements.push(Disagreement {
                seed,
                semantic: false,
                operational: false,
            }),
        }
    }
    report
}

/// Generates until the clean model is verified aligned in both modes.
pub fn generate_aligned_extrinsic(seed: u64) -> AlignmentModel {
    let case = AlignmentCase::Extrinsic;
    let mut s = seed;
    loop {
        let model = generate_model(&case, s);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let sem = check_conditions(&model, &case).map(|v| v.aligned).unwrap_or(false);
        let op = check_definition(&model, &case, &mut rng)
            .map(|v| v.aligned)
            .unwrap_or(false);
        if sem && op {
            return model;
        }
        s = s.wrapping_add(0x5851_f42d_4c95_7f2d);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aligned_extrinsic(seed: u64) -> AlignmentModel {
        generate_aligned_extrinsic(seed)
    }

    #[test]
    fn clean_models_align_in_both_modes() {
        for seed in 0..20 {
            let model = aligned_extrinsic(seed);
            let sem = check_conditions(&model, &AlignmentCase::Extrinsic).unwrap();
            assert!(sem.aligned, "seed {seed}");
            assert!(sem.per_condition.iter().all(|c| c.holds));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let op = check_definition(&model, &AlignmentCase::Extrinsic, &mut rng).unwrap();
            assert!(op.aligned, "seed {seed}");
        }
    }

    #[test]
    fn human_sensor_perturbation_fails_condition_3_with_witness() {
        let mut model = aligned_extrinsic(7);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        apply_mutation(&mut model, Mutation::HumanSensorBreak, &mut rng).unwrap();
        let verdict = check_conditions(&model, &AlignmentCase::Extrinsic).unwrap();
        assert!(!verdict.aligned);
        let failing: Vec<&ConditionResult> =
            verdict.per_condition.iter().filter(|c| !c.holds).collect();
        assert_eq!(failing.first().map(|c| c.index), Some(3));
        assert!(!failing[0].witnesses.is_empty());
    }

    #[test]
    fn each_mutation_breaks_its_condition_semantically() {
        for (mutation, index) in [
            (Mutation::GoalDilution, 1),
            (Mutation::RobotSensorAlias, 2),
            (Mutation::HumanSensorBreak, 3),
            (Mutation::HumanEncoderBreak, 4),
        ] {
            let mut model = aligned_extrinsic(11);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            apply_mutation(&mut model, mutation, &mut rng).unwrap();
            let verdict = check_conditions(&model, &AlignmentCase::Extrinsic).unwrap();
            assert!(!verdict.aligned, "{mutation:?}");
            let first_fail = verdict.per_condition.iter().find(|c| !c.holds).unwrap();
            assert_eq!(first_fail.index, index, "{mutation:?}");
        }
    }

    #[test]
    fn each_mutation_flips_the_operational_verdict() {
        for mutation in MUTATIONS {
            let mut model = aligned_extrinsic(13);
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            apply_mutation(&mut model, mutation, &mut rng).unwrap();
            let verdict =
                check_definition(&model, &AlignmentCase::Extrinsic, &mut rng).unwrap();
            assert!(!verdict.aligned, "{mutation:?}");
        }
    }

    #[test]
    fn intention_point_outside_support_errors() {
        let mut model = aligned_extrinsic(3);
        if let Some(i) = &mut model.intention {
            i.point = "m_nonexistent".to_owned();
        }
        assert_eq!(
            check_conditions(&model, &AlignmentCase::Extrinsic).unwrap_err(),
            AlignmentError::PointOutsideSupport("m_nonexistent".to_owned())
        );
    }

    #[test]
    fn missing_intention_is_misaligned_with_note() {
        let mut model = aligned_extrinsic(5);
        model.intention = None;
        let sem = check_conditions(&model, &AlignmentCase::Extrinsic).unwrap();
        assert!(!sem.aligned);
        assert!(sem.notes.iter().any(|n| n.contains("no robot intention")));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let op = check_definition(&model, &AlignmentCase::Extrinsic, &mut rng).unwrap();
        assert!(!op.aligned);
    }

    #[test]
    fn audits_agree_on_every_case() {
        let cases = [
            AlignmentCase::Extrinsic,
            AlignmentCase::VariableUtilityThreshold(0.5),
            AlignmentCase::VariableUtilityMax,
            AlignmentCase::Intrinsic,
            AlignmentCase::Instrumental,
            AlignmentCase::InstrumentalProscriptive,
            AlignmentCase::MultiDomainAll,
            AlignmentCase::MultiDomainAny,
        ];
        for case in cases {
            let report = equivalence_audit(&case, 120, 100);
            assert!(
                report.disagreements.is_empty(),
                "{case:?}: {:?}",
                report.disagreements
            );
            assert!(report.aligned_count > 0, "{case:?} produced no aligned models");
            assert!(
                report.aligned_count < report.total,
                "{case:?} produced no misaligned models"
            );
        }
    }

    #[test]
    fn broken_checker_is_detected_by_audit_harness() {
        // Simulate skipping condition 4: a model broken only in condition 4
        // must disagree with an operational check.
        let mut model = aligned_extrinsic(17);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        apply_mutation(&mut model, Mutation::HumanEncoderBreak, &mut rng).unwrap();
        let sem = check_conditions(&model, &AlignmentCase::Extrinsic).unwrap();
        let skipped: bool = sem
            .per_condition
            .iter()
            .filter(|c| c.index != 4)
            .all(|c| c.holds);
        let op = check_definition(&model, &AlignmentCase::Extrinsic, &mut rng).unwrap();
        assert_ne!(skipped, op.aligned);
    }

    #[test]
    fn enlarging_ground_truth_is_monotone() {
        for seed in 0..30 {
            let case = AlignmentCase::Extrinsic;
            let model = generate_model(&case, seed);
            let before = check_conditions(&model, &case).unwrap().aligned;
            let mut enlarged = model.clone();
            for (d, domain) in &model.domains {
                enlarged
                    .star_states
                    .entry(d.clone())
                    .or_default()
                    .extend(domain.states.iter().cloned());
                enlarged
                    .star_goal
                    .entry(d.clone())
                    .or_default()
                    .extend(model.human_sensor.observations.iter().cloned());
            }
            let after = check_conditions(&enlarged, &case).unwrap().aligned;
            assert!(!before || after, "seed {seed} flipped aligned to misaligned");
        }
    }

    #[test]
    fn all_domains_aligned_implies_any() {
        for seed in 200..260 {
            let model = generate_model(&AlignmentCase::MultiDomainAll, seed);
            let all = check_conditions(&model, &AlignmentCase::MultiDomainAll)
                .unwrap()
                .aligned;
            let any = check_conditions(&model, &AlignmentCase::MultiDomainAny)
                .unwrap()
                .aligned;
            assert!(!all || any, "seed {seed}");
        }
    }

    #[test]
    fn max_alignment_implies_every_lower_threshold() {
        for seed in 300..360 {
            let model = generate_model(&AlignmentCase::VariableUtilityMax, seed);
            if !check_conditions(&model, &AlignmentCase::VariableUtilityMax)
                .unwrap()
                .aligned
            {
                continue;
            }
            let max = model
                .human_purpose
                .support
                .iter()
                .map(|p| model.human_purpose.utility.table[p])
                .fold(f64::NEG_INFINITY, f64::max);
            for theta in [0.0, max / 2.0, max - 1e-9] {
                let v = check_conditions(
                    &model,
                    &AlignmentCase::VariableUtilityThreshold(theta),
                )
                .unwrap();
                assert!(v.aligned, "seed {seed}, theta {theta}");
            }
        }
    }

    #[test]
    fn dropping_proscriptive_purpose_keeps_instrumental_alignment() {
        let mut found = 0;
        for seed in 400..520 {
            let model = generate_model(&AlignmentCase::InstrumentalProscriptive, seed);
            if !check_conditions(&model, &AlignmentCase::InstrumentalProscriptive)
                .unwrap()
                .aligned
            {
                continue;
            }
            found += 1;
            let mut plain = model.clone();
            plain.human_proscriptive = None;
            let v = check_conditions(&plain, &AlignmentCase::Instrumental).unwrap();
            assert!(v.aligned, "seed {seed}");
        }
        assert!(found > 5, "too few aligned proscriptive models: {found}");
    }

    #[test]
    fn policy_driven_pursuit_matches_planner_pursuit() {
        // Equip a clean model with a planner-equivalent learned policy and
        // check the verdict is unchanged.
        let model = aligned_extrinsic(23);
        let case = AlignmentCase::Extrinsic;
        let intention = model.intention.clone().unwrap();
        let d = intention.domain.clone();
        let goal = model.goal_in(&d, &intention).unwrap();
        let domain = &model.domains[&d];
        let targets = preimage_of(&model.robot_sensor, &goal.points, &domain.states).unwrap();
        let dist = world::distance_to(domain, &targets);
        let key = crate::arbitration::goal_key(&goal);
        let mut table = BTreeMap::new();
        for s in &domain.states {
            let obs = match model.robot_sensor.row(s).unwrap() {
                SensorRow::Deterministic(o) => o.clone(),
                SensorRow::Stochastic(_) => unreachable!(),
            };
            let mut best: Option<(&String, usize)> = None;
            for a in &domain.actions {
                if let Transition::Deterministic(t) = domain.row(s, a).unwrap() {
                    if let Some(nd) = dist.get(t) {
                        if best.map(|(_, bd)| *nd < bd).unwrap_or(true) {
                            best = Some((a, *nd));
                        }
                    }
                }
            }
            if let Some((a, _)) = best {
                table
                    .entry((obs, key.clone()))
                    .or_insert_with(|| BTreeMap::from([(a.clone(), 1.0)]));
            }
        }
        let mut with_policy = model.clone();
        with_policy.policy = Some(ActionPolicy { table });
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let planner = check_definition(&model, &case, &mut rng).unwrap();
        let policied = check_definition(&with_policy, &case, &mut rng).unwrap();
        assert_eq!(planner.aligned, policied.aligned);
        assert!(planner.aligned);
    }
}
