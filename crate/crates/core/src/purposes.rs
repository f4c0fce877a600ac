//! Encoding spaces, utility functions, purposes, encoders, alignment maps,
//! and the motivational space.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::{Agent, ObservationId};

pub type EncodingPointId = String;
pub type PurposeId = String;

#[derive(Debug, Error, PartialEq)]
pub enum PurposeError {
    #[error("utility support mixes positive and negative values; split into separate prescriptive and proscriptive purposes")]
    MixedSignSupport,
    #[error("utility function is zero everywhere; a purpose needs a nonempty support")]
    EmptySupport,
    #[error("utility table does not cover point `{0}`")]
    UtilityNotTotal(EncodingPointId),
    #[error("no robot encoding point maps into the human purpose support")]
    EmptyMission,
    #[error("unknown observation `{0}`")]
    UnknownObservation(ObservationId),
    #[error("unknown encoding point `{0}`")]
    UnknownEncodingPoint(EncodingPointId),
    #[error("point does not decompose into one component per space")]
    DimensionMismatch,
    #[error("intention flag set but no intended domains given")]
    NoIntendedDomains,
    #[error("utility value for `{0}` is not finite")]
    NonFiniteUtility(EncodingPointId),
}

/// A finite encoding space owned by one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpace {
    pub id: String,
    pub owner: Agent,
    pub points: BTreeSet<EncodingPointId>,
    /// Named axes when the space is a product; each axis lists its values.
    pub dims: Option<Vec<(String, Vec<String>)>>,
}

/// A total utility table over one encoding space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityFunction {
    pub space: String,
    pub table: BTreeMap<EncodingPointId, f64>,
}

impl UtilityFunction {
    pub fn value(&self, point: &str) -> Result<f64, PurposeError> {
        self.table
            .get(point)
            .copied()
            .ok_or_else(|| PurposeError::UtilityNotTotal(point.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PurposeKind {
    /// Hardwired robot purpose.
    Need,
    /// Robot purpose derived from a human purpose through an alignment map.
    Mission,
    /// A purpose held by the human.
    Human,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarity {
    Prescriptive,
    Proscriptive,
}

/// The utility-supported subset of an encoding space, with arbitration and
/// intention metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Purpose {
    pub id: PurposeId,
    pub owner: Agent,
    pub space: String,
    pub kind: PurposeKind,
    pub polarity: Polarity,
    /// Exactly the nonzero-utility points.
    pub support: BTreeSet<EncodingPointId>,
    pub utility: UtilityFunction,
    pub priority: f64,
    pub intention_flag: bool,
    pub intended_domains: BTreeSet<String>,
    /// Marks an idealized (starred) element used as the reference side of
    /// alignment checks.
    pub ground_truth: bool,
}

/// Metadata bundle for [`purpose_from_utility`].
#[derive(Debug, Clone)]
pub struct PurposeMeta {
    pub id: PurposeId,
    pub owner: Agent,
    pub kind: PurposeKind,
    pub priority: f64,
    pub intention_flag: bool,
    pub intended_domains: BTreeSet<String>,
    pub ground_truth: bool,
}

/// Builds a purpose as the nonzero support of `utility`, inferring polarity
/// from the sign pattern. Mixed-sign supports are rejected: the framework
/// treats prescriptive and proscriptive purposes as separate objects.
pub fn purpose_from_utility(
    space: &EncodingSpace,
    utility: UtilityFunction,
    meta: PurposeMeta,
) -> Result<Purpose, PurposeError> {
    let mut support = BTreeSet::new();
    let mut any_positive = false;
    let mut any_negative = false;
    for point in &space.points {
        let value = utility.value(point)?;
        if !value.is_finite() {
            return Err(PurposeError::NonFiniteUtility(point.clone()));
        }
        if value != 0.0 {
            support.insert(point.clone());
            if value > 0.0 {
                any_positive = true;
            } else {
                any_negative = true;
            }
        }
    }
    if support.is_empty() {
        return Err(PurposeError::EmptySupport);
    }
    if any_positive && any_negative {
        return Err(PurposeError::MixedSignSupport);
    }
    if meta.intention_flag && meta.intended_domains.is_empty() {
        return Err(PurposeError::NoIntendedDomains);
    }
    Ok(Purpose {
        id: meta.id,
        owner: meta.owner,
        space: space.id.clone(),
        kind: meta.kind,
        polarity: if any_negative {
            Polarity::Proscriptive
        } else {
            Polarity::Prescriptive
        },
        support,
        utility,
        priority: meta.priority,
        intention_flag: meta.intention_flag,
        intended_domains: meta.intended_domains,
        ground_truth: meta.ground_truth,
    })
}

/// A per-purpose, per-domain map from observations to encoding points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationEncoder {
    pub owner: Agent,
    pub space: String,
    pub domain: String,
    pub table: BTreeMap<ObservationId, EncodingPointId>,
}

impl ObservationEncoder {
    /// The table value for `observation`.
    pub fn encode(&self, observation: &str) -> Result<&EncodingPointId, PurposeError> {
        self.table
            .get(observation)
            .ok_or_else(|| PurposeError::UnknownObservation(observation.to_owned()))
    }

    /// Exact preimage of `point` under the table; possibly empty.
    pub fn decode(
        &self,
        space: &EncodingSpace,
        point: &str,
    ) -> Result<BTreeSet<ObservationId>, PurposeError> {
        if !space.points.contains(point) {
            return Err(PurposeError::UnknownEncodingPoint(point.to_owned()));
        }
        Ok(self
            .table
            .iter()
            .filter(|(_, e)| e.as_str() == point)
            .map(|(o, _)| o.clone())
            .collect())
    }
}

/// A robot-to-human encoding-space map with its derived multivalued inverse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentMap {
    pub human_space: String,
    pub robot_space: String,
    /// robot point -> human point; total over the robot space.
    pub table: BTreeMap<EncodingPointId, EncodingPointId>,
}

impl AlignmentMap {
    pub fn image(&self, robot_point: &str) -> Result<&EncodingPointId, PurposeError> {
        self.table
            .get(robot_point)
            .ok_or_else(|| PurposeError::UnknownEncodingPoint(robot_point.to_owned()))
    }

    /// Robot points mapping to `human_point` (the inverse alignment map).
    pub fn inverse(&self, human_point: &str) -> BTreeSet<EncodingPointId> {
        self.table
            .iter()
            .filter(|(_, h)| h.as_str() == human_point)
            .map(|(m, _)| m.clone())
            .collect()
    }
}

/// Derives a robot mission from a human purpose: the support is the preimage
/// of the human support under `map`, and each mission point inherits the
/// utility of its image. Priority, intention flag, and intended domains come
/// from the caller (the user assigns them), never from the human purpose.
pub fn derive_mission(
    human_purpose: &Purpose,
    map: &AlignmentMap,
    robot_space: &EncodingSpace,
    priority: f64,
    intention_flag: bool,
    intended_domains: BTreeSet<String>,
    mission_id: PurposeId,
) -> Result<Purpose, PurposeError> {
    debug_assert_eq!(map.human_space, human_purpose.space);
    debug_assert_eq!(map.robot_space, robot_space.id);
    let mut table = BTreeMap::new();
    let mut support = BTreeSet::new();
    for m in &robot_space.points {
        let image = map.image(m)?;
        let value = if human_purpose.support.contains(image) {
            human_purpose.utility.value(image)?
        } else {
            0.0
        };
        if value != 0.0 {
            support.insert(m.clone());
        }
        table.insert(m.clone(), value);
    }
    if support.is_empty() {
        return Err(PurposeError::EmptyMission);
    }
    if intention_flag && intended_domains.is_empty() {
        return Err(PurposeError::NoIntendedDomains);
    }
    Ok(Purpose {
        id: mission_id,
        owner: Agent::Robot,
        space: robot_space.id.clone(),
        kind: PurposeKind::Mission,
        polarity: human_purpose.polarity,
        support,
        utility: UtilityFunction { space: robot_space.id.clone(), table },
        priority,
        intention_flag,
        intended_domains,
        ground_truth: false,
    })
}

/// The Cartesian product of a robot's purpose encoding spaces with a
/// priority-weighted composite utility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotivationalSpace {
    pub robot: String,
    /// Ordered component spaces with their per-component priority and
    /// utility.
    pub components: Vec<MotivationalComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotivationalComponent {
    pub space: String,
    pub priority: f64,
    pub utility: UtilityFunction,
}

impl MotivationalSpace {
    /// The weighted sum `sum_i alpha_i * u_i(e_i)` over one product point
    /// given as one encoding point per component, in component order.
    pub fn composite_utility(&self, point: &[EncodingPointId]) -> Result<f64, PurposeError> {
        if point.len() != self.components.len() {
            return Err(PurposeError::DimensionMismatch);
        }
        let mut total = 0.0;
        for (component, e) in self.components.iter().zip(point) {
            total += component.priority * component.utility.value(e)?;
        }
        Ok(total)
    }
}

/// Filters to the purposes currently pursued (intention flag set).
pub fn intention_set<'a>(purposes: impl IntoIterator<Item = &'a Purpose>) -> Vec<&'a Purpose> {
    purposes.into_iter().filter(|p| p.intention_flag).collect()
}
