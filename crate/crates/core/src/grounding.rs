//! Grounding of purposes into domain-specific goals and state goals.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::{self, Agent, ObservationId, SensorModel};
use crate::purposes::{EncodingPointId, ObservationEncoder, Purpose, PurposeId};
use crate::world::StateId;

#[derive(Debug, Error, PartialEq)]
pub enum GroundingError {
    #[error("point `{0}` is outside the purpose support")]
    PointOutsideSupport(EncodingPointId),
    #[error("goal observation `{0}` is unknown to the sensor")]
    UnknownObservation(ObservationId),
    #[error("two goals share the purpose/domain key ({0}, {1})")]
    DuplicateGoalKey(PurposeId, String),
}

/// What a goal grounds: one support point, or the whole support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoalSource {
    Point(EncodingPointId),
    WholePurpose,
}

/// A purpose's observation-level grounding in one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub owner: Agent,
    pub purpose: PurposeId,
    pub domain: String,
    pub points: BTreeSet<ObservationId>,
    pub source: GoalSource,
    /// Utility inherited from the purpose through the encoder.
    pub utility_per_point: BTreeMap<ObservationId, f64>,
    pub intention_flag: bool,
    /// Set when the grounding came out empty; empty goals are data, not
    /// errors.
    pub ungroundable: bool,
}

/// A goal pushed down to the state level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateGoal {
    pub owner: Agent,
    pub purpose: PurposeId,
    pub domain: String,
    pub states: BTreeSet<StateId>,
}

/// Grounds a single support point: the goal is the encoder preimage of
/// `point`.
pub fn ground_point(
    purpose: &Purpose,
    point: &str,
    encoder: &ObservationEncoder,
) -> Result<Goal, GroundingError> {
    if !purpose.support.contains(point) {
        return Err(GroundingError::PointOutsideSupport(point.to_owned()));
    }
    let points: BTreeSet<ObservationId> = encoder
        .table
        .iter()
        .filter(|(_, e)| e.as_str() == point)
        .map(|(o, _)| o.clone())
        .collect();
    let value = purpose.utility.table.get(point).copied().unwrap_or(0.0);
    let utility_per_point = points.iter().map(|o| (o.clone(), value)).collect();
    Ok(Goal {
        owner: purpose.owner,
        purpose: purpose.id.clone(),
        domain: encoder.domain.clone(),
        ungroundable: points.is_empty(),
        points,
        source: GoalSource::Point(point.to_owned()),
        utility_per_point,
        intention_flag: purpose.intention_flag,
    })
}

/// Grounds the whole support: the goal is every observation encoding into the
/// support.
pub fn ground_purpose(purpose: &Purpose, encoder: &ObservationEncoder) -> Result<Goal, GroundingError> {
    let points: BTreeSet<ObservationId> = encoder
        .table
        .iter()
        .filter(|(_, e)| purpose.support.contains(e.as_str()))
        .map(|(o, _)| o.clone())
        .collect();
    let utility_per_point = points
        .iter()
        .map(|o| {
            let e = &encoder.table[o];
            (o.clone(), purpose.utility.table.get(e).copied().unwrap_or(0.0))
        })
        .collect();
    Ok(Goal {
        owner: purpose.owner,
        purpose: purpose.id.clone(),
        domain: encoder.domain.clone(),
        ungroundable: points.is_empty(),
        points,
        source: GoalSource::WholePurpose,
        utility_per_point,
        intention_flag: purpose.intention_flag,
    })
}

/// Pushes a goal down to states: the union of sensor preimages of its points.
pub fn state_goal(goal: &Goal, sensor: &SensorModel) -> Result<StateGoal, GroundingError> {
    let mut states = BTreeSet::new();
    for o in &goal.points {
        let pre = perception::preimage(sensor, o, None)
            .map_err(|_| GroundingError::UnknownObservation(o.clone()))?;
        states.extend(pre);
    }
    Ok(StateGoal {
        owner: goal.owner,
        purpose: goal.purpose.clone(),
        domain: goal.domain.clone(),
        states,
    })
}

/// Goals partitioned over the (purpose, domain) grid, with by-purpose and
/// by-domain views.
#[derive(Debug, Clone, Default)]
pub struct GoalIndex {
    pub by_purpose: BTreeMap<PurposeId, Vec<Goal>>,
    pub by_domain: BTreeMap<String, Vec<Goal>>,
    pub total: Vec<Goal>,
}

/// Indexes goals by purpose and by domain. Each (purpose, domain) cell may
/// hold at most one goal.
pub fn goal_index(goals: impl IntoIterator<Item = Goal>) -> Result<GoalIndex, GroundingError> {
    let mut index = GoalIndex::default();
    let mut seen = BTreeSet::new();
    for goal in goals {
        let key = (goal.purpose.clone(), goal.domain.clone());
        if !seen.insert(key.clone()) {
            return Err(GroundingError::DuplicateGoalKey(key.0, key.1));
        }
        index
            .by_purpose
            .entry(goal.purpose.clone())
            .or_default()
            .push(goal.clone());
        index
            .by_domain
            .entry(goal.domain.clone())
            .or_default()
            .push(goal.clone());
        index.total.push(goal);
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::SensorRow;
    use crate::purposes::{purpose_from_utility, EncodingSpace, PurposeKind, PurposeMeta, UtilityFunction};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mk_purpose(points: &[(&str, f64)]) -> Purpose {
        let space = EncodingSpace {
            id: "e".to_owned(),
            owner: Agent::Human,
            points: points.iter().map(|(p, _)| p.to_string()).collect(),
            dims: None,
        };
        purpose_from_utility(
            &space,
            UtilityFunction {
                space: "e".to_owned(),
                table: points.iter().map(|(p, u)| (p.to_string(), *u)).collect(),
            },
            PurposeMeta {
                id: "p".to_owned(),
                owner: Agent::Human,
                kind: PurposeKind::Human,
                priority: 1.0,
                intention_flag: false,
                intended_domains: BTreeSet::new(),
                ground_truth: false,
            },
        )
        .unwrap()
    }

    fn mk_encoder(pairs: &[(&str, &str)]) -> ObservationEncoder {
        ObservationEncoder {
            owner: Agent::Human,
            space: "e".to_owned(),
            domain: "d".to_owned(),
            table: pairs.iter().map(|(o, e)| (o.to_string(), e.to_string())).collect(),
        }
    }

    fn mk_sensor(pairs: &[(&str, &str)]) -> SensorModel {
        SensorModel {
            owner: Agent::Human,
            observations: pairs.iter().map(|(_, o)| o.to_string()).collect(),
            map: pairs
                .iter()
                .map(|(s, o)| (s.to_string(), SensorRow::Deterministic(o.to_string())))
                .collect(),
            covered_domains: BTreeSet::from(["d".to_owned()]),
        }
    }

    #[test]
    fn ground_point_is_preimage() {
        let purpose = mk_purpose(&[("e1", 1.0), ("e2", 0.5)]);
        let encoder = mk_encoder(&[("o1", "e2"), ("o2", "e2"), ("o3", "e1")]);
        let goal = ground_point(&purpose, "e2", &encoder).unwrap();
        assert_eq!(goal.points, BTreeSet::from(["o1".to_owned(), "o2".to_owned()]));
        assert!(!goal.ungroundable);
        assert_eq!(goal.utility_per_point["o1"], 0.5);
        assert_eq!(goal.source, GoalSource::Point("e2".to_owned()));
    }

    #[test]
    fn empty_grounding_is_flagged_not_error() {
        let purpose = mk_purpose(&[("e1", 1.0), ("e2", 0.5)]);
        let encoder = mk_encoder(&[("o1", "e1")]);
        let goal = ground_point(&purpose, "e2", &encoder).unwrap();
        assert!(goal.points.is_empty());
        assert!(goal.ungroundable);
    }

    #[test]
    fn point_outside_support_is_error() {
        let purpose = mk_purpose(&[("e1", 1.0), ("e2", 0.0)]);
        let encoder = mk_encoder(&[("o1", "e1")]);
        assert_eq!(
            ground_point(&purpose, "e2", &encoder),
            Err(GroundingError::PointOutsideSupport("e2".to_owned()))
        );
    }

    #[test]
    fn ground_purpose_membership_filter() {
        let purpose = mk_purpose(&[("e1", 1.0), ("e2", 1.0), ("e3", 0.0)]);
        let encoder = mk_encoder(&[("o1", "e1"), ("o2", "e3")]);
        let goal = ground_purpose(&purpose, &encoder).unwrap();
        assert_eq!(goal.points, BTreeSet::from(["o1".to_owned()]));
        assert_eq!(goal.source, GoalSource::WholePurpose);
    }

    #[test]
    fn ground_purpose_saturation() {
        let purpose = mk_purpose(&[("e1", 1.0), ("e2", 2.0)]);
        let encoder = mk_encoder(&[("o1", "e1"), ("o2", "e2"), ("o3", "e1")]);
        let goal = ground_purpose(&purpose, &encoder).unwrap();
        let all: BTreeSet<String> = encoder.table.keys().cloned().collect();
        assert_eq!(goal.points, all);
    }

    #[test]
    fn state_goal_is_preimage_union() {
        let purpose = mk_purpose(&[("e1", 1.0)]);
        let encoder = mk_encoder(&[("o1", "e1"), ("o2", "e1")]);
        let goal = ground_point(&purpose, "e1", &encoder).unwrap();
        let sensor = mk_sensor(&[("s1", "o1"), ("s2", "o1"), ("s3", "o2")]);
        let sg = state_goal(&goal, &sensor).unwrap();
        assert_eq!(
            sg.states,
            BTreeSet::from(["s1".to_owned(), "s2".to_owned(), "s3".to_owned()])
        );
        let empty = Goal { points: BTreeSet::new(), ..goal };
        assert!(state_goal(&empty, &sensor).unwrap().states.is_empty());
    }

    #[test]
    fn random_models_match_scan_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..200 {
            let n_obs = rng.gen_range(1..8);
            let n_pts = rng.gen_range(1..5);
            let points: Vec<String> = (0..n_pts).map(|i| format!("e{i}")).collect();
            let table: BTreeMap<String, f64> = points
                .iter()
                .map(|p| (p.clone(), if rng.gen_bool(0.6) { rng.gen_range(1..4) as f64 } else { 0.0 }))
                .collect();
            if table.values().all(|v| *v == 0.0) {
                continue;
            }
            let space = EncodingSpace {
                id: "e".to_owned(),
                owner: Agent::Human,
                points: points.iter().cloned().collect(),
                dims: None,
            };
            let purpose = purpose_from_utility(
                &space,
                UtilityFunction { space: "e".to_owned(), table },
                PurposeMeta {
                    id: "p".to_owned(),
                    owner: Agent::Human,
                    kind: PurposeKind::Human,
                    priority: 1.0,
                    intention_flag: rng.gen_bool(0.5),
                    intended_domains: BTreeSet::from(["d".to_owned()]),
                    ground_truth: false,
                },
            )
            .unwrap();
            let encoder = ObservationEncoder {
                owner: Agent::Human,
                space: "e".to_owned(),
                domain: "d".to_owned(),
                table: (0..n_obs)
                    .map(|i| (format!("o{i}"), points[rng.gen_range(0..n_pts)].clone()))
                    .collect(),
            };
            let sensor = SensorModel {
                owner: Agent::Human,
                observations: (0..n_obs).map(|i| format!("o{i}")).collect(),
                map: (0..10)
                    .map(|i| {
                        (
                            format!("s{i}"),
                            SensorRow::Deterministic(format!("o{}", rng.gen_range(0..n_obs))),
                        )
                    })
                    .collect(),
                covered_domains: BTreeSet::from(["d".to_owned()]),
            };

            // Whole-purpose grounding vs observation scan.
            let wp = ground_purpose(&purpose, &encoder).unwrap();
            let wp_oracle: BTreeSet<String> = encoder
                .table
                .iter()
                .filter(|(_, e)| purpose.support.contains(e.as_str()))
                .map(|(o, _)| o.clone())
                .collect();
            assert_eq!(wp.points, wp_oracle, "trial {trial}");
            assert_eq!(wp.intention_flag, purpose.intention_flag);
            for o in &wp.points {
                let e = &encoder.table[o];
                assert_eq!(wp.utility_per_point[o], purpose.utility.table[e]);
            }

            // Point grounding round trip and fused-scan state goal.
            for p in &purpose.support {
                let goal = ground_point(&purpose, p, &encoder).unwrap();
                for o in &goal.points {
                    assert_eq!(&encoder.table[o], p);
                    assert_eq!(goal.utility_per_point[o], purpose.utility.table[p]);
                }
                let sg = state_goal(&goal, &sensor).unwrap();
                let fused: BTreeSet<String> = sensor
                    .map
                    .iter()
                    .filter(|(_, row)| match row {
                        SensorRow::Deterministic(o) => encoder.table.get(o).map(String::as_str) == Some(p.as_str()),
                        SensorRow::Stochastic(_) => unreachable!(),
                    })
                    .map(|(s, _)| s.clone())
                    .collect();
                assert_eq!(sg.states, fused, "trial {trial}");
            }
        }
    }

    #[test]
    fn goal_index_views() {
        let purpose = mk_purpose(&[("e1", 1.0)]);
        let mk_goal = |pid: &str, d: &str| {
            let mut g = ground_purpose(&purpose, &mk_encoder(&[("o1", "e1")])).unwrap();
            g.purpose = pid.to_owned();
            g.domain = d.to_owned();
            g
        };
        let single = goal_index([mk_goal("p1", "d1")]).unwrap();
        assert_eq!(single.total.len(), 1);
        assert_eq!(single.by_purpose["p1"].len(), 1);
        assert_eq!(single.by_domain["d1"].len(), 1);

        let grid = goal_index([
            mk_goal("p1", "d1"),
            mk_goal("p1", "d2"),
            mk_goal("p2", "d1"),
            mk_goal("p2", "d2"),
        ])
        .unwrap();
        assert_eq!(grid.by_purpose["p1"].len(), 2);
        assert_eq!(grid.by_purpose["p2"].len(), 2);
        assert_eq!(grid.by_domain["d1"].len(), 2);
        assert_eq!(grid.total.len(), 4);

        let dup = goal_index([mk_goal("p1", "d1"), mk_goal("p1", "d1")]);
        assert_eq!(
            dup.unwrap_err(),
            GroundingError::DuplicateGoalKey("p1".to_owned(), "d1".to_owned())
        );
    }

    #[test]
    fn goal_index_matches_grouping_oracle() {
        let purpose = mk_purpose(&[("e1", 1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut goals = Vec::new();
        let mut used = BTreeSet::new();
        while goals.len() < 10 {
            let pid = format!("p{}", rng.gen_range(0..5));
            let d = format!("d{}", rng.gen_range(0..4));
            if used.insert((pid.clone(), d.clone())) {
                let mut g = ground_purpose(&purpose, &mk_encoder(&[("o1", "e1")])).unwrap();
                g.purpose = pid;
                g.domain = d;
                goals.push(g);
            }
        }
        let index = goal_index(goals.clone()).unwrap();
        for (pid, cell) in &index.by_purpose {
            let oracle: Vec<&Goal> = goals.iter().filter(|g| &g.purpose == pid).collect();
            assert_eq!(cell.len(), oracle.len());
        }
        for (d, cell) in &index.by_domain {
            let oracle: Vec<&Goal> = goals.iter().filter(|g| &g.domain == d).collect();
            assert_eq!(cell.len(), oracle.len());
        }
        assert_eq!(index.total.len(), goals.len());
    }
}
