//! Scenario files, the home-robot scenario generator, trial execution with
//! phase scripting, and report emission.
//!
//! Scenario files are UTF-8 JSON with `"schema": 1`. Reports serialize with
//! stable field and key order so fixed seeds give byte-identical output.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::AlignmentModel;
use crate::grounding::{self, Goal};
use crate::perception::{Agent, SensorModel, SensorRow};
use crate::purposes::{AlignmentMap, EncodingSpace, ObservationEncoder, Polarity, Purpose,
    PurposeKind, UtilityFunction};
use crate::world::{Domain, StateId, Transition};

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FORMAT_VERSION: u32 = 1;
/// Hard cap on steps per trial.
const TRIAL_STEP_CAP: usize = 500;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error in `{element}`: {reason}")]
    Validation { element: String, reason: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("trial {trial}: {reason}")]
    Trial { trial: usize, reason: String },
}

/// An encoder valid under one context tag (day, night); `None` matches any
/// context. Contexts act as distinct motivational spaces compiled to
/// separate encoder tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedEncoder {
    pub tag: Option<String>,
    pub encoder: ObservationEncoder,
}

/// A contiguous block of trials with priority overrides and purpose-set
/// edits. Only priorities and the active purpose set change across phases;
/// utility tables are immutable by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    /// 1-based inclusive trial range.
    pub first_trial: usize,
    pub last_trial: usize,
    #[serde(default)]
    pub priority_overrides: BTreeMap<String, f64>,
    #[serde(default)]
    pub add_purposes: Vec<String>,
    #[serde(default)]
    pub remove_purposes: Vec<String>,
}

/// Between trials the robot redeploys to a fixed position while persistent
/// state axes carry over. State ids follow the `position|resource`
/// convention; the reset substitutes the position part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReset {
    pub position: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub schema: u32,
    pub id: String,
    #[serde(default)]
    pub domains: Vec<Domain>,
    #[serde(default)]
    pub sensors: Vec<SensorModel>,
    #[serde(default)]
    pub spaces: Vec<EncodingSpace>,
    #[serde(default)]
    pub encoders: Vec<TaggedEncoder>,
    #[serde(default)]
    pub maps: Vec<AlignmentMap>,
    #[serde(default)]
    pub purposes: Vec<Purpose>,
    /// Purposes active from trial 1 before any phase edits.
    #[serde(default)]
    pub initial_purposes: Vec<String>,
    #[serde(default)]
    pub phases: Vec<Phase>,
    /// Per-trial context tags.
    #[serde(default)]
    pub schedule: Vec<String>,
    #[serde(default)]
    pub trial_reset: Option<TrialReset>,
    /// Optional full two-agent model for alignment and causality commands.
    #[serde(default)]
    pub model: Option<AlignmentModel>,
    #[serde(default)]
    pub seed: u64,
}

fn invalid(element: &str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation { element: element.to_owned(), reason: reason.into() }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid("schema", format!("unsupported schema {}", self.schema)));
        }
        for domain in &self.domains {
            domain
                .validate()
                .map_err(|e| invalid(&domain.id, e.to_string()))?;
        }
        for sensor in &self.sensors {
            sensor
                .validate()
                .map_err(|e| invalid("sensor", e.to_string()))?;
        }
        let space_ids: BTreeSet<&str> = self.spaces.iter().map(|s| s.id.as_str()).collect();
        let domain_ids: BTreeSet<&str> = self.domains.iter().map(|d| d.id.as_str()).collect();
        for te in &self.encoders {
            let e = &te.encoder;
            if !space_ids.contains(e.space.as_str()) {
                return Err(invalid(&e.space, "encoder references unknown space"));
            }
            if !domain_ids.contains(e.domain.as_str()) {
                return Err(invalid(&e.domain, "encoder references unknown domain"));
            }
            let space = self.spaces.iter().find(|s| s.id == e.space).expect("checked");
            for point in e.table.values() {
                if !space.points.contains(point) {
                    return Err(invalid(
                        &e.space,
                        format!("encoder maps to unknown point `{point}`"),
                    ));
                }
            }
        }
        let purpose_ids: BTreeSet<&str> = self.purposes.iter().map(|p| p.id.as_str()).collect();
        for p in &self.purposes {
            if p.support.is_empty() {
                return Err(invalid(&p.id, "purpose has empty support"));
            }
            if !space_ids.contains(p.space.as_str()) && !self.spaces.is_empty() {
                return Err(invalid(&p.id, format!("unknown space `{}`", p.space)));
            }
            if !p.priority.is_finite() {
                return Err(invalid(&p.id, "priority is not finite"));
            }
        }
        for id in &self.initial_purposes {
            if !purpose_ids.contains(id.as_str()) {
                return Err(invalid(id, "initial purpose is not defined"));
            }
        }
        // Phases must partition the schedule in order.
        if !self.schedule.is_empty() {
            let mut expected = 1;
            for phase in &self.phases {
                if phase.first_trial != expected || phase.last_trial < phase.first_trial {
                    return Err(invalid(
                        "phases",
                        format!(
                            "phase range {}..={} does not continue the partition at {expected}",
                            phase.first_trial, phase.last_trial
                        ),
                    ));
                }
                expected = phase.last_trial + 1;
            }
            if expected != self.schedule.len() + 1 {
                return Err(invalid(
                    "phases",
                    format!(
                        "phases cover trials 1..{} but the schedule has {}",
                        expected - 1,
                        self.schedule.len()
                    ),
                ));
            }
        }
        for phase in &self.phases {
            for id in phase
                .priority_overrides
                .keys()
                .chain(&phase.add_purposes)
                .chain(&phase.remove_purposes)
            {
                if !purpose_ids.contains(id.as_str()) {
                    return Err(invalid(id, "phase references unknown purpose"));
                }
            }
        }
        Ok(())
    }
}

pub fn spec_to_string(spec: &ScenarioSpec) -> String {
    serde_json::to_string_pretty(spec).expect("spec serializes")
}

pub fn load_scenario(path: &std::path::Path) -> Result<ScenarioSpec, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(e.to_string()))?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let spec: ScenarioSpec =
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

// --- the home-robot scenario ---------------------------------------------

/// Generator constants (the narrative gives no geometry, so these are
/// declared here):
/// - 7x7 grid, human at (3, 1), charger at (6, 6), dock at (0, 0);
/// - battery 0..=10 folded into the state as `x{X}y{Y}|{B}`;
/// - every movement costs 1 battery (floored at 0), arriving at or staying
///   on the charger refills to 10;
/// - `near` means Chebyshev distance <= 1 from the human;
/// - 8 trials tagged day, day, night, night, day, day, night, night;
/// - phase 1 (trials 1-4): closeness priority 10, energy 2;
/// - phase 2 (trials 5-8): closeness 5, energy 2, plus a proscriptive
///   night-proximity purpose at priority -50;
/// - between trials the robot redeploys to the dock, battery carries over.
pub const GRID: usize = 7;
pub const HUMAN: (usize, usize) = (3, 1);
pub const CHARGER: (usize, usize) = (6, 6);
pub const BATTERY_MAX: usize = 10;

fn state_id(x: usize, y: usize, b: usize) -> String {
    format!("x{x}y{y}|{b}")
}

fn obs_id(state: &str) -> String {
    format!("o:{state}")
}

fn near_human(x: usize, y: usize) -> bool {
    x.abs_diff(HUMAN.0) <= 1 && y.abs_diff(HUMAN.1) <= 1
}

pub fn build_home_robot_scenario() -> ScenarioSpec {
    let mut states = BTreeSet::new();
    let mut transition = BTreeMap::new();
    // east < north < south < stay < west alphabetically; the planner breaks
    // ties in that order.
    let actions = ["east", "north", "south", "stay", "west"];
    let moved = |x: usize, y: usize, a: &str| -> (usize, usize) {
        match a {
            "east" => ((x + 1).min(GRID - 1), y),
            "west" => (x.saturating_sub(1), y),
            "south" => (x, (y + 1).min(GRID - 1)),
            "north" => (x, y.saturating_sub(1)),
            _ => (x, y),
        }
    };
    for x in 0..GRID {
        for y in 0..GRID {
            for b in 0..=BATTERY_MAX {
                let s = state_id(x, y, b);
                states.insert(s.clone());
                for a in actions {
                    let (nx, ny) = moved(x, y, a);
                    let nb = if (nx, ny) == CHARGER {
                        BATTERY_MAX
                    } else if a == "stay" {
                        b
                    } else {
                        b.saturating_sub(1)
                    };
                    transition.insert(
                        (s.clone(), a.to_owned()),
                        Transition::Deterministic(state_id(nx, ny, nb)),
                    );
                }
            }
        }
    }
    let domain = Domain {
        id: "home".to_owned(),
        states: states.clone(),
        actions: actions.iter().map(|a| a.to_string()).collect(),
        transition,
        initial_states: BTreeSet::from([state_id(0, 0, BATTERY_MAX)]),
    };
    let sensor = SensorModel {
        owner: Agent::Robot,
        observations: states.iter().map(|s| obs_id(s)).collect(),
        map: states
            .iter()
            .map(|s| (s.clone(), SensorRow::Deterministic(obs_id(s))))
            .collect(),
        covered_domains: BTreeSet::from(["home".to_owned()]),
    };

    let spaces = vec![
        EncodingSpace {
            id: "closeness".to_owned(),
            owner: Agent::Robot,
            points: BTreeSet::from(["near".to_owned(), "far".to_owned()]),
            dims: None,
        },
        EncodingSpace {
            id: "energy".to_owned(),
            owner: Agent::Robot,
            points: BTreeSet::from(["charging".to_owned(), "ok".to_owned(), "low".to_owned()]),
            dims: None,
        },
        EncodingSpace {
            id: "night-proximity".to_owned(),
            owner: Agent::Robot,
            points: BTreeSet::from(["nearH".to_owned(), "farH".to_owned()]),
            dims: None,
        },
    ];

    let mut closeness_day = BTreeMap::new();
    let mut closeness_night = BTreeMap::new();
    let mut energy_table = BTreeMap::new();
    let mut prox_day = BTreeMap::new();
    let mut prox_night = BTreeMap::new();
    for x in 0..GRID {
        for y in 0..GRID {
            for b in 0..=BATTERY_MAX {
                let o = obs_id(&state_id(x, y, b));
                let near = near_human(x, y);
                closeness_day.insert(o.clone(), if near { "near" } else { "far" }.to_owned());
                closeness_night.insert(o.clone(), "far".to_owned());
                let e = if (x, y) == CHARGER {
                    "charging"
                } else if b >= 4 {
                    "ok"
                } else {
                    "low"
                };
                energy_table.insert(o.clone(), e.to_owned());
                prox_day.insert(o.clone(), "farH".to_owned());
                prox_night.insert(o, if near { "nearH" } else { "farH" }.to_owned());
            }
        }
    }
    let encoder = |space: &str, table: BTreeMap<String, String>| ObservationEncoder {
        owner: Agent::Robot,
        space: space.to_owned(),
        domain: "home".to_owned(),
        table,
    };
    let encoders = vec![
        TaggedEncoder { tag: Some("day".to_owned()), encoder: encoder("closeness", closeness_day) },
        TaggedEncoder {
            tag: Some("night".to_owned()),
            encoder: encoder("closeness", closeness_night),
        },
        TaggedEncoder { tag: None, encoder: encoder("energy", energy_table) },
        TaggedEncoder { tag: Some("day".to_owned()), encoder: encoder("night-proximity", prox_day) },
        TaggedEncoder {
            tag: Some("night".to_owned()),
            encoder: encoder("night-proximity", prox_night),
        },
    ];

    let purposes = vec![
        Purpose {
            id: "closeness".to_owned(),
            owner: Agent::Robot,
            space: "closeness".to_owned(),
            kind: PurposeKind::Mission,
            polarity: Polarity::Prescriptive,
            support: BTreeSet::from(["near".to_owned()]),
            utility: UtilityFunction {
                space: "closeness".to_owned(),
                table: BTreeMap::from([("near".to_owned(), 1.0), ("far".to_owned(), 0.0)]),
            },
            priority: 10.0,
            intention_flag: true,
            intended_domains: BTreeSet::from(["home".to_owned()]),
            ground_truth: false,
        },
        Purpose {
            id: "energy".to_owned(),
            owner: Agent::Robot,
            space: "energy".to_owned(),
            kind: PurposeKind::Need,
            polarity: Polarity::Prescriptive,
            support: BTreeSet::from(["charging".to_owned()]),
            utility: UtilityFunction {
                space: "energy".to_owned(),
                table: BTreeMap::from([
                    ("charging".to_owned(), 1.0),
                    ("ok".to_owned(), 0.0),
                    ("low".to_owned(), 0.0),
                ]),
            },
            priority: 2.0,
            intention_flag: true,
            intended_domains: BTreeSet::from(["home".to_owned()]),
            ground_truth: false,
        },
        Purpose {
            id: "night-proximity".to_owned(),
            owner: Agent::Robot,
            space: "night-proximity".to_owned(),
            kind: PurposeKind::Mission,
            polarity: Polarity::Proscriptive,
            support: BTreeSet::from(["nearH".to_owned()]),
            utility: UtilityFunction {
                space: "night-proximity".to_owned(),
                table: BTreeMap::from([("nearH".to_owned(), -1.0), ("farH".to_owned(), 0.0)]),
            },
            priority: -50.0,
            intention_flag: true,
            intended_domains: BTreeSet::from(["home".to_owned()]),
            ground_truth: false,
        },
    ];

    ScenarioSpec {
        schema: SCHEMA_VERSION,
        id: "home-robot".to_owned(),
        domains: vec![domain],
        sensors: vec![sensor],
        spaces,
        encoders,
        maps: Vec::new(),
        purposes,
        initial_purposes: vec!["closeness".to_owned(), "energy".to_owned()],
        phases: vec![
            Phase {
                first_trial: 1,
                last_trial: 4,
                priority_overrides: BTreeMap::from([
                    ("closeness".to_owned(), 10.0),
                    ("energy".to_owned(), 2.0),
                ]),
                add_purposes: Vec::new(),
                remove_purposes: Vec::new(),
            },
            Phase {
                first_trial: 5,
                last_trial: 8,
                priority_overrides: BTreeMap::from([
                    ("closeness".to_owned(), 5.0),
                    ("energy".to_owned(), 2.0),
                ]),
                add_purposes: vec!["night-proximity".to_owned()],
                remove_purposes: Vec::new(),
            },
        ],
        schedule: ["day", "day", "night", "night", "day", "day", "night", "night"]
            .iter()
            .map(|t| t.to_string())
            .collect(),
        trial_reset: Some(TrialReset { position: "x0y0".to_owned() }),
        model: None,
        seed: 0,
    }
}

// --- trial execution -----------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub tag: String,
    pub phase: usize,
    /// Arbitration outcome: the pursued purpose.
    pub chosen_purpose: String,
    pub start_state: StateId,
    pub end_state: StateId,
    pub steps: usize,
    pub trace: Vec<StateId>,
    pub actions: Vec<String>,
    pub reached_goal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub format_version: u32,
    pub scenario: String,
    pub schema: u32,
    pub seed: u64,
    pub trials: Vec<TrialRecord>,
    /// Alignment or causality verdict summaries recorded at phase
    /// boundaries, when the scenario carries a model.
    pub checks: Vec<String>,
    pub learning_curves: BTreeMap<String, Vec<f64>>,
    pub notes: Vec<String>,
}

fn find_encoder<'a>(
    spec: &'a ScenarioSpec,
    space: &str,
    domain: &str,
    tag: &str,
) -> Option<&'a ObservationEncoder> {
    spec.encoders
        .iter()
        .filter(|te| te.encoder.space == space && te.encoder.domain == domain)
        .find(|te| te.tag.as_deref() == Some(tag))
        .or_else(|| {
            spec.encoders
                .iter()
                .filter(|te| te.encoder.space == space && te.encoder.domain == domain)
                .find(|te| te.tag.is_none())
        })
        .map(|te| &te.encoder)
}

/// Reverse breadth-first distances to `targets` through states outside
/// `avoid`.
fn distances_avoiding(
    domain: &Domain,
    targets: &BTreeSet<StateId>,
    avoid: &BTreeSet<StateId>,
) -> BTreeMap<StateId, usize> {
    let mut dist: BTreeMap<StateId, usize> = targets.iter().map(|t| (t.clone(), 0)).collect();
    let mut frontier: BTreeSet<StateId> = targets.clone();
    let mut k = 0;
    while !frontier.is_empty() {
        k += 1;
        let mut next = BTreeSet::new();
        for s in &domain.states {
            if dist.contains_key(s) || avoid.contains(s) {
                continue;
            }
            'actions: for a in &domain.actions {
                if let Ok(Transition::Deterministic(t)) = domain.row(s, a) {
                    if frontier.contains(t) {
                        next.insert(s.clone());
                        break 'actions;
                    }
                }
            }
        }
        for s in &next {
            dist.insert(s.clone(), k);
        }
        frontier = next;
    }
    dist
}

fn run_one_trial(
    domain: &Domain,
    start: &StateId,
    targets: &BTreeSet<StateId>,
    avoid: &BTreeSet<StateId>,
) -> Result<(Vec<StateId>, Vec<String>, bool), ScenarioError> {
    let dist = distances_avoiding(domain, targets, avoid);
    let mut trace = vec![start.clone()];
    let mut actions = Vec::new();
    let mut state = start.clone();
    for _ in 0..TRIAL_STEP_CAP {
        if targets.contains(&state) {
            return Ok((trace, actions, true));
        }
        let Some(here) = dist.get(&state) else {
            return Ok((trace, actions, false));
        };
        let mut stepped = false;
        for a in &domain.actions {
            if let Ok(Transition::Deterministic(t)) = domain.row(&state, a) {
                if !avoid.contains(t) && dist.get(t).map(|d| d < here).unwrap_or(false) {
                    actions.push(a.clone());
                    state = t.clone();
                    trace.push(state.clone());
                    stepped = true;
                    break;
                }
            }
        }
        if !stepped {
            return Ok((trace, actions, false));
        }
    }
    Ok((trace, actions, targets.contains(&state)))
}

pub fn run_trials<R: Rng>(
    spec: &ScenarioSpec,
    _rng: &mut R,
) -> Result<ReportDocument, ScenarioError> {
    let mut report = ReportDocument {
        format_version: REPORT_FORMAT_VERSION,
        scenario: spec.id.clone(),
        schema: spec.schema,
        seed: spec.seed,
        trials: Vec::new(),
        checks: Vec::new(),
        learning_curves: BTreeMap::new(),
        notes: Vec::new(),
    };
    if spec.schedule.is_empty() {
        return Ok(report);
    }
    let domain = spec
        .domains
        .first()
        .ok_or_else(|| invalid("domains", "schedule without a domain"))?;
    let sensor = spec
        .sensors
        .iter()
        .find(|s| s.owner == Agent::Robot)
        .or_else(|| spec.sensors.first())
        .ok_or_else(|| invalid("sensors", "schedule without a sensor"))?;
    let by_id: BTreeMap<&str, &Purpose> =
        spec.purposes.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut active: BTreeSet<String> = spec.initial_purposes.iter().cloned().collect();
    let mut state = domain
        .initial_states
        .iter()
        .next()
        .ok_or_else(|| invalid(&domain.id, "no initial state"))?
        .clone();
    let mut applied_phase = usize::MAX;

    for (i, tag) in spec.schedule.iter().enumerate() {
        let trial = i + 1;
        let (phase_index, phase) = spec
            .phases
            .iter()
            .enumerate()
            .find(|(_, p)| p.first_trial <= trial && trial <= p.last_trial)
            .ok_or_else(|| ScenarioError::Trial {
                trial,
                reason: "no phase covers this trial".to_owned(),
            })?;
        if applied_phase != phase_index {
            for id in &phase.add_purposes {
                active.insert(id.clone());
            }
            for id in &phase.remove_purposes {
                active.remove(id);
            }
            applied_phase = phase_index;
        }
        let priority = |p: &Purpose| {
            phase
                .priority_overrides
                .get(&p.id)
                .copied()
                .unwrap_or(p.priority)
        };

        // Ground the active purposes in this context; empty groundings drop
        // out (a night mission on a day-only encoder, for example).
        let mut candidates: Vec<(&Purpose, Goal)> = Vec::new();
        let mut avoid = BTreeSet::new();
        for id in &active {
            let p = by_id[id.as_str()];
            let Some(encoder) = find_encoder(spec, &p.space, &domain.id, tag) else {
                continue;
            };
            let goal = grounding::ground_purpose(p, encoder).map_err(|e| ScenarioError::Trial {
                trial,
                reason: e.to_string(),
            })?;
            if goal.points.is_empty() {
                continue;
            }
            match p.polarity {
                Polarity::Prescriptive => candidates.push((p, goal)),
                Polarity::Proscriptive => {
                    let sg = grounding::state_goal(&goal, sensor).map_err(|e| {
                        ScenarioError::Trial { trial, reason: e.to_string() }
                    })?;
                    avoid.extend(sg.states.intersection(&domain.states).cloned());
                }
            }
        }
        // Proscriptive dominance: warn when a forbidden purpose is not at
        // least ten times any prescriptive priority.
        let max_prescriptive = candidates
            .iter()
            .map(|(p, _)| priority(p).abs())
            .fold(0.0_f64, f64::max);
        for id in &active {
            let p = by_id[id.as_str()];
            if p.polarity == Polarity::Proscriptive
                && priority(p).abs() < 10.0 * max_prescriptive
            {
                report.notes.push(format!(
                    "trial {trial}: proscriptive `{}` priority {} below 10x prescriptive max {}",
                    p.id,
                    priority(p),
                    max_prescriptive
                ));
            }
        }
        // Motivational arbitration: maximize priority-weighted utility of
        // the best goal point; ties break on purpose id.
        let chosen = candidates
            .iter()
            .max_by(|(pa, ga), (pb, gb)| {
                let score = |p: &Purpose, g: &Goal| {
                    let best = g
                        .utility_per_point
                        .values()
                        .fold(f64::NEG_INFINITY, |m, u| m.max(*u));
                    priority(p) * best
                };
                score(pa, ga)
                    .partial_cmp(&score(pb, gb))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| pb.id.cmp(&pa.id))
            })
            .ok_or_else(|| ScenarioError::Trial {
                trial,
                reason: "no groundable prescriptive purpose".to_owned(),
            })?;
        let (purpose, goal) = chosen;
        let sg = grounding::state_goal(goal, sensor)
            .map_err(|e| ScenarioError::Trial { trial, reason: e.to_string() })?;
        let targets: BTreeSet<StateId> = sg
            .states
            .intersection(&domain.states)
            .filter(|s| !avoid.contains(*s))
            .cloned()
            .collect();
        let (trace, actions, reached) = run_one_trial(domain, &state, &targets, &avoid)?;
        let end = trace.last().expect("trace nonempty").clone();
        report.trials.push(TrialRecord {
            index: trial,
            tag: tag.clone(),
            phase: phase_index + 1,
            chosen_purpose: purpose.id.clone(),
            start_state: state.clone(),
            end_state: end.clone(),
            steps: actions.len(),
            trace,
            actions,
            reached_goal: reached,
        });
        // Redeploy, carrying the persistent axis of the state id.
        state = match &spec.trial_reset {
            Some(reset) => {
                let carry = end.split('|').nth(1).unwrap_or("");
                let next = if carry.is_empty() {
                    reset.position.clone()
                } else {
                    format!("{}|{carry}", reset.position)
                };
                if !domain.states.contains(&next) {
                    return Err(ScenarioError::Trial {
                        trial,
                        reason: format!("reset state `{next}` is not a domain state"),
                    });
                }
                next
            }
            None => end,
        };
    }
    Ok(report)
}

// --- report emission -----------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

pub fn render_report(report: &ReportDocument, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut out = String::new();
            out.push_str(&format!(
                "scenario {} (schema {}, seed {})\n",
                report.scenario, report.schema, report.seed
            ));
            for t in &report.trials {
                out.push_str(&format!(
                    "trial {:>2} [{} / phase {}] pursued {:<16} {} -> {} in {} steps{}\n",
                    t.index,
                    t.tag,
                    t.phase,
                    t.chosen_purpose,
                    t.start_state,
                    t.end_state,
                    t.steps,
                    if t.reached_goal { "" } else { " (goal not reached)" },
                ));
            }
            for c in &report.checks {
                out.push_str(&format!("check: {c}\n"));
            }
            for n in &report.notes {
                out.push_str(&format!("note: {n}\n"));
            }
            out
        }
    }
}

pub fn emit_report(
    report: &ReportDocument,
    path: &std::path::Path,
    format: ReportFormat,
) -> Result<(), ScenarioError> {
    std::fs::write(path, render_report(report, format))
        .map_err(|e| ScenarioError::Io(e.to_string()))
}
