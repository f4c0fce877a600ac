//! Agent sensory layers: state-to-observation maps and their multivalued
//! inverses.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{StateId, ROW_SUM_TOLERANCE};

pub type ObservationId = String;

/// The two agent roles of the framework.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Agent {
    Human,
    Robot,
}

#[derive(Debug, Error, PartialEq)]
pub enum PerceptionError {
    #[error("state `{0}` is not covered by the sensor")]
    UncoveredState(StateId),
    #[error("unknown observation `{0}`")]
    UnknownObservation(ObservationId),
    #[error("sensor row for `{state}` is malformed: {reason}")]
    MalformedRow { state: StateId, reason: String },
}

/// One sensor row: a single observation or a distribution over observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SensorRow {
    Deterministic(ObservationId),
    Stochastic(BTreeMap<ObservationId, f64>),
}

impl SensorRow {
    /// Observations with nonzero probability. The membership test is an exact
    /// comparison against zero: rows are authored, not estimated.
    pub fn support(&self) -> Vec<&ObservationId> {
        match self {
            SensorRow::Deterministic(o) => vec![o],
            SensorRow::Stochastic(row) => {
                row.iter().filter(|(_, p)| **p > 0.0).map(|(o, _)| o).collect()
            }
        }
    }
}

/// A state-observation map for one agent. One sensor covers all of the
/// agent's domains; `covered_domains` records which domains' states the map
/// is total over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub owner: Agent,
    pub observations: BTreeSet<ObservationId>,
    pub map: BTreeMap<StateId, SensorRow>,
    pub covered_domains: BTreeSet<String>,
}

impl SensorModel {
    pub fn validate(&self) -> Result<(), PerceptionError> {
        for (state, row) in &self.map {
            match row {
                SensorRow::Deterministic(o) => {
                    if !self.observations.contains(o) {
                        return Err(PerceptionError::MalformedRow {
                            state: state.clone(),
                            reason: format!("observation `{o}` not in observation set"),
                        });
                    }
                }
                SensorRow::Stochastic(dist) => {
                    let mut sum = 0.0;
                    for (o, p) in dist {
                        if !self.observations.contains(o) {
                            return Err(PerceptionError::MalformedRow {
                                state: state.clone(),
                                reason: format!("observation `{o}` not in observation set"),
                            });
                        }
                        if !(0.0..=1.0).contains(p) {
                            return Err(PerceptionError::MalformedRow {
                                state: state.clone(),
                                reason: format!("probability {p} outside [0, 1]"),
                            });
                        }
                        sum += p;
                    }
                    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                        return Err(PerceptionError::MalformedRow {
                            state: state.clone(),
                            reason: format!("row sums to {sum}, expected 1"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn row(&self, state: &str) -> Result<&SensorRow, PerceptionError> {
        self.map
            .get(state)
            .ok_or_else(|| PerceptionError::UncoveredState(state.to_owned()))
    }

    /// The deterministic observation of `state`, for sensors known to have a
    /// single-valued row there.
    pub fn observe_deterministic(&self, state: &str) -> Result<&ObservationId, PerceptionError> {
        match self.row(state)? {
            SensorRow::Deterministic(o) => Ok(o),
            SensorRow::Stochastic(dist) => {
                let mut support = dist.iter().filter(|(_, p)| **p > 0.0);
                match (support.next(), support.next()) {
                    (Some((o, _)), None) => Ok(o),
                    _ => Err(PerceptionError::MalformedRow {
                        state: state.to_owned(),
                        reason: "stochastic row where a deterministic observation was required"
                            .to_owned(),
                    }),
                }
            }
        }
    }
}

/// Senses a state, sampling from stochastic rows with `rng`.
pub fn observe<R: Rng>(
    sensor: &SensorModel,
    state: &str,
    rng: &mut R,
) -> Result<ObservationId, PerceptionError> {
    match sensor.row(state)? {
        SensorRow::Deterministic(o) => Ok(o.clone()),
        SensorRow::Stochastic(dist) => {
            let mut draw: f64 = rng.gen();
            let mut last = None;
            for (o, p) in dist.iter().filter(|(_, p)| **p > 0.0) {
                draw -= p;
                last = Some(o);
                if draw <= 0.0 {
                    return Ok(o.clone());
                }
            }
            last.cloned().ok_or_else(|| PerceptionError::MalformedRow {
                state: state.to_owned(),
                reason: "row has no nonzero entry".to_owned(),
            })
        }
    }
}

/// States that emit `observation` with nonzero probability, optionally
/// restricted by a domain-membership predicate supplied as a set of state ids.
pub fn preimage(
    sensor: &SensorModel,
    observation: &str,
    domain_filter: Option<&BTreeSet<StateId>>,
) -> Result<BTreeSet<StateId>, PerceptionError> {
    if !sensor.observations.contains(observation) {
        return Err(PerceptionError::UnknownObservation(observation.to_owned()));
    }
    let mut states = BTreeSet::new();
    for (state, row) in &sensor.map {
        if let Some(filter) = domain_filter {
            if !filter.contains(state) {
                continue;
            }
        }
        if row.support().iter().any(|o| o.as_str() == observation) {
            states.insert(state.clone());
        }
    }
    Ok(states)
}

/// Union of observation supports over a set of states.
pub fn observe_set(
    sensor: &SensorModel,
    states: &BTreeSet<StateId>,
) -> Result<BTreeSet<ObservationId>, PerceptionError> {
    let mut out = BTreeSet::new();
    for s in states {
        for o in sensor.row(s)?.support() {
            out.insert(o.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn det_sensor(pairs: &[(&str, &str)]) -> SensorModel {
        let sensor = SensorModel {
            owner: Agent::Robot,
            observations: pairs.iter().map(|(_, o)| o.to_string()).collect(),
            map: pairs
                .iter()
                .map(|(s, o)| (s.to_string(), SensorRow::Deterministic(o.to_string())))
                .collect(),
            covered_domains: BTreeSet::from(["d".to_owned()]),
        };
        sensor.validate().unwrap();
        sensor
    }

    #[test]
    fn observe_lookup_and_identity() {
        let sensor = det_sensor(&[("s1", "o1"), ("s2", "o_s2")]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(observe(&sensor, "s1", &mut rng).unwrap(), "o1");
        assert_eq!(observe(&sensor, "s2", &mut rng).unwrap(), "o_s2");
        assert_eq!(
            observe(&sensor, "s9", &mut rng),
            Err(PerceptionError::UncoveredState("s9".to_owned()))
        );
    }

    #[test]
    fn observe_stochastic_frequency() {
        let sensor = SensorModel {
            owner: Agent::Human,
            observations: BTreeSet::from(["o1".to_owned(), "o2".to_owned()]),
            map: BTreeMap::from([(
                "s1".to_owned(),
                SensorRow::Stochastic(BTreeMap::from([
                    ("o1".to_owned(), 0.5),
                    ("o2".to_owned(), 0.5),
                ])),
            )]),
            covered_domains: BTreeSet::from(["d".to_owned()]),
        };
        sensor.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| observe(&sensor, "s1", &mut rng).unwrap() == "o1")
            .count();
        let freq = hits as f64 / n as f64;
        assert!((0.48..=0.52).contains(&freq), "freq {freq}");
    }

    #[test]
    fn preimage_by_definition() {
        let sensor = det_sensor(&[("s1", "o1"), ("s2", "o1"), ("s3", "o2")]);
        let got = preimage(&sensor, "o1", None).unwrap();
        assert_eq!(got, BTreeSet::from(["s1".to_owned(), "s2".to_owned()]));
    }

    #[test]
    fn preimage_of_unemitted_observation_is_empty() {
        let mut sensor = det_sensor(&[("s1", "o1")]);
        sensor.observations.insert("o_never".to_owned());
        assert!(preimage(&sensor, "o_never", None).unwrap().is_empty());
        assert_eq!(
            preimage(&sensor, "o_unknown", None),
            Err(PerceptionError::UnknownObservation("o_unknown".to_owned()))
        );
    }

    #[test]
    fn stochastic_preimage_matches_row_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let observations: BTreeSet<ObservationId> =
            (0..4).map(|i| format!("o{i}")).collect();
        let mut map = BTreeMap::new();
        for i in 0..10 {
            let mut dist = BTreeMap::new();
            let a = format!("o{}", rng.gen_range(0..4));
            let b = format!("o{}", rng.gen_range(0..4));
            if a == b {
                dist.insert(a, 1.0);
            } else {
                dist.insert(a, 0.6);
                dist.insert(b, 0.4);
            }
            map.insert(format!("s{i}"), SensorRow::Stochastic(dist));
        }
        let sensor = SensorModel {
            owner: Agent::Robot,
            observations,
            map,
            covered_domains: BTreeSet::from(["d".to_owned()]),
        };
        sensor.validate().unwrap();
        for o in &sensor.observations {
            let oracle: BTreeSet<StateId> = sensor
                .map
                .iter()
                .filter(|(_, row)| match row {
                    SensorRow::Deterministic(x) => x == o,
                    SensorRow::Stochastic(d) => d.get(o).copied().unwrap_or(0.0) > 0.0,
                })
                .map(|(s, _)| s.clone())
                .collect();
            assert_eq!(preimage(&sensor, o, None).unwrap(), oracle);
        }
    }

    #[test]
    fn observe_set_union() {
        let sensor = det_sensor(&[("s1", "o1"), ("s2", "o1"), ("s3", "o2")]);
        assert!(observe_set(&sensor, &BTreeSet::new()).unwrap().is_empty());
        let got = observe_set(
            &sensor,
            &BTreeSet::from(["s1".to_owned(), "s3".to_owned()]),
        )
        .unwrap();
        assert_eq!(got, BTreeSet::from(["o1".to_owned(), "o2".to_owned()]));
    }

    #[test]
    fn observe_set_matches_elementwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pairs: Vec<(String, String)> = (0..12)
            .map(|i| (format!("s{i}"), format!("o{}", rng.gen_range(0..5))))
            .collect();
        let sensor = det_sensor(
            &pairs
                .iter()
                .map(|(s, o)| (s.as_str(), o.as_str()))
                .collect::<Vec<_>>(),
        );
        let states: BTreeSet<StateId> = pairs.iter().map(|(s, _)| s.clone()).collect();
        let oracle: BTreeSet<ObservationId> = states
            .iter()
            .flat_map(|s| sensor.map[s].support().into_iter().cloned())
            .collect();
        assert_eq!(observe_set(&sensor, &states).unwrap(), oracle);
    }

    #[test]
    fn galois_round_trip_and_partition() {
        let sensor = det_sensor(&[("s1", "o1"), ("s2", "o1"), ("s3", "o2"), ("s4", "o2")]);
        // o in observe_set(preimage(o)) for every emitted observation.
        for o in &sensor.observations {
            let pre = preimage(&sensor, o, None).unwrap();
            if !pre.is_empty() {
                assert!(observe_set(&sensor, &pre).unwrap().contains(o));
            }
        }
        // Deterministic preimages partition the covered states.
        let mut seen: BTreeSet<StateId> = BTreeSet::new();
        for o in &sensor.observations {
            let pre = preimage(&sensor, o, None).unwrap();
            assert!(seen.is_disjoint(&pre));
            seen.extend(pre);
        }
        assert_eq!(seen.len(), sensor.map.len());
    }

    #[test]
    fn domain_filter_restricts_preimage() {
        let sensor = det_sensor(&[("s1", "o1"), ("s2", "o1"), ("s3", "o1")]);
        let filter = BTreeSet::from(["s1".to_owned(), "s3".to_owned()]);
        let got = preimage(&sensor, "o1", Some(&filter)).unwrap();
        let unfiltered = preimage(&sensor, "o1", None).unwrap();
        let expected: BTreeSet<StateId> =
            unfiltered.intersection(&filter).cloned().collect();
        assert_eq!(got, expected);
    }
}
