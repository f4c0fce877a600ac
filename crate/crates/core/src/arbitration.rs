//! Arbitration rules over intended purposes: strict hierarchy, urgency
//! weighting, softmax sampling, and motivational-space greedy selection.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::Goal;
use crate::purposes::{EncodingPointId, MotivationalSpace, Polarity, Purpose, PurposeId};

#[derive(Debug, Error, PartialEq)]
pub enum ArbitrationError {
    #[error("no intended purposes to arbitrate over")]
    EmptyIntentionSet,
    #[error("urgency utility for `{0}` is {1}; must lie strictly in (0,1)")]
    UtilityOutOfRange(PurposeId, f64),
    #[error("no active encoding point recorded for purpose `{0}`")]
    MissingReadout(PurposeId),
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("no candidate goals to arbitrate over")]
    EmptyCandidateSet,
    #[error("candidate goal `{0}` has no predicted motivational point")]
    UnpredictableCandidate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArbitrationRule {
    Hierarchical,
    Urgency,
    Softmax,
    Motivational,
}

/// Ties always break toward the ascending purpose or goal id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArbitrationConfig {
    pub rule: ArbitrationRule,
    /// Softmax temperature; unrelated to trial timeouts.
    pub temperature: f64,
    pub seed: u64,
    /// Required margin factor between proscriptive and prescriptive
    /// priority magnitudes.
    pub proscriptive_factor: f64,
}

impl Default for ArbitrationConfig {
    fn default() -> Self {
        ArbitrationConfig {
            rule: ArbitrationRule::Hierarchical,
            temperature: 1.0,
            seed: 0,
            proscriptive_factor: 10.0,
        }
    }
}

/// Per-purpose snapshot of the currently active encoding point and its
/// utility, used by the urgency and softmax rules.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MotivationReadout {
    pub active_point: BTreeMap<PurposeId, EncodingPointId>,
    /// Current utility per purpose, assumed in (0,1).
    pub utility: BTreeMap<PurposeId, f64>,
}

impl MotivationReadout {
    fn urgency_utility(&self, purpose: &Purpose) -> Result<f64, ArbitrationError> {
        let u = self
            .utility
            .get(&purpose.id)
            .copied()
            .ok_or_else(|| ArbitrationError::MissingReadout(purpose.id.clone()))?;
        if !(u > 0.0 && u < 1.0) {
            return Err(ArbitrationError::UtilityOutOfRange(purpose.id.clone(), u));
        }
        Ok(u)
    }
}

fn selectable<'a>(intended: &'a [&'a Purpose]) -> Vec<&'a Purpose> {
    // Proscriptive purposes constrain behaviour; they never win positive
    // selection.
    intended
        .iter()
        .copied()
        .filter(|p| p.polarity == Polarity::Prescriptive)
        .collect()
}

fn argmax_by_score<'a>(
    purposes: &[&'a Purpose],
    mut score: impl FnMut(&Purpose) -> f64,
) -> Option<&'a Purpose> {
    let mut best: Option<(&Purpose, f64)> = None;
    for p in purposes {
        let s = score(p);
        best = match best {
            None => Some((p, s)),
            Some((bp, bs)) => {
                if s > bs || (s == bs && p.id < bp.id) {
                    Some((p, s))
                } else {
                    Some((bp, bs))
                }
            }
        };
    }
    best.map(|(p, _)| p)
}

/// Strict hierarchy: the highest-priority prescriptive intended purpose wins.
pub fn select_hierarchical<'a>(
    intended: &'a [&'a Purpose],
    _cfg: &ArbitrationConfig,
) -> Result<&'a Purpose, ArbitrationError> {
    let pool = selectable(intended);
    argmax_by_score(&pool, |p| p.priority).ok_or(ArbitrationError::EmptyIntentionSet)
}

/// Urgency weighting: argmax of `alpha_i * (1 - u_i)`.
pub fn select_urgency<'a>(
    intended: &'a [&'a Purpose],
    readout: &MotivationReadout,
    _cfg: &ArbitrationConfig,
) -> Result<&'a Purpose, ArbitrationError> {
    let pool = selectable(intended);
    if pool.is_empty() {
        return Err(ArbitrationError::EmptyIntentionSet);
    }
    let mut scores = BTreeMap::new();
    for p in &pool {
        scores.insert(p.id.clone(), p.priority * (1.0 - readout.urgency_utility(p)?));
    }
    Ok(argmax_by_score(&pool, |p| scores[&p.id]).expect("pool nonempty"))
}

/// Softmax over urgency scores: `P(i) ∝ exp(alpha_i (1 - u_i) / temperature)`,
/// computed with a max shift so large scores cannot overflow.
pub fn softmax_distribution(
    intended: &[&Purpose],
    readout: &MotivationReadout,
    cfg: &ArbitrationConfig,
) -> Result<BTreeMap<PurposeId, f64>, ArbitrationError> {
    // NaN fails this check too.
    if cfg.temperature.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(ArbitrationError::BadTemperature(cfg.temperature));
    }
    let pool = selectable(intended);
    if pool.is_empty() {
        return Err(ArbitrationError::EmptyIntentionSet);
    }
    let mut scores = BTreeMap::new();
    for p in &pool {
        scores.insert(
            p.id.clone(),
            p.priority * (1.0 - readout.urgency_utility(p)?) / cfg.temperature,
        );
    }
    let max = scores.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut dist: BTreeMap<PurposeId, f64> =
        scores.iter().map(|(id, s)| (id.clone(), (s - max).exp())).collect();
    let z: f64 = dist.values().sum();
    for v in dist.values_mut() {
        *v /= z;
    }
    Ok(dist)
}

/// Samples one purpose id from a softmax distribution.
pub fn sample_softmax<R: Rng>(
    dist: &BTreeMap<PurposeId, f64>,
    rng: &mut R,
) -> Option<PurposeId> {
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = None;
    for (id, p) in dist {
        acc += p;
        last = Some(id);
        if draw < acc {
            return Some(id.clone());
        }
    }
    last.cloned()
}

/// A stable key for a goal inside one arbitration round.
pub fn goal_key(goal: &Goal) -> String {
    format!("{}/{}", goal.purpose, goal.domain)
}

/// Motivational-space greedy rule: for each candidate goal, predict the
/// motivational point reached once the goal is achieved (one-step lookahead
/// supplied by the caller's world model) and pick the candidate with the
/// highest composite utility.
pub fn select_motivational<'a>(
    mspace: &MotivationalSpace,
    candidates: &'a [Goal],
    predict: impl Fn(&Goal) -> Option<Vec<EncodingPointId>>,
) -> Result<&'a Goal, ArbitrationError> {
    if candidates.is_empty() {
        return Err(ArbitrationError::EmptyCandidateSet);
    }
    let mut best: Option<(&Goal, f64)> = None;
    for goal in candidates {
        let point = predict(goal)
            .ok_or_else(|| ArbitrationError::UnpredictableCandidate(goal_key(goal)))?;
        let value = mspace
            .composite_utility(&point)
            .map_err(|_| ArbitrationError::UnpredictableCandidate(goal_key(goal)))?;
        best = match best {
            None => Some((goal, value)),
            Some((bg, bv)) => {
                if value > bv || (value == bv && goal_key(goal) < goal_key(bg)) {
                    Some((goal, value))
                } else {
                    Some((bg, bv))
                }
            }
        };
    }
    Ok(best.expect("candidates nonempty").0)
}

/// Checks the proscriptive dominance convention: every proscriptive priority
/// magnitude should exceed the largest prescriptive magnitude by
/// `cfg.proscriptive_factor`. Returns a warning line per violation.
pub fn validate_proscriptive_dominance(
    purposes: &[&Purpose],
    cfg: &ArbitrationConfig,
) -> Vec<String> {
    let max_prescriptive = purposes
        .iter()
        .filter(|p| p.polarity == Polarity::Prescriptive)
        .map(|p| p.priority.abs())
        .fold(0.0_f64, f64::max);
    let mut warnings = Vec::new();
    for p in purposes {
        if p.polarity == Polarity::Proscriptive
            && p.priority.abs() < cfg.proscriptive_factor * max_prescriptive
        {
            warnings.push(format!(
                "proscriptive purpose `{}` has |priority| {} below {} x max prescriptive {}",
                p.id,
                p.priority.abs(),
                cfg.proscriptive_factor,
                max_prescriptive
            ));
        }
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grounding::GoalSource;
    use crate::perception::Agent;
    use crate::purposes::{MotivationalComponent, PurposeKind, UtilityFunction};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn purpose(id: &str, priority: f64, polarity: Polarity) -> Purpose {
        Purpose {
            id: id.to_owned(),
            owner: Agent::Robot,
            space: "e".to_owned(),
            kind: PurposeKind::Need,
            polarity,
            support: BTreeSet::from(["e1".to_owned()]),
            utility: UtilityFunction {
                space: "e".to_owned(),
                table: BTreeMap::from([(
                    "e1".to_owned(),
                    if polarity == Polarity::Proscriptive { -1.0 } else { 1.0 },
                )]),
            },
            priority,
            intention_flag: true,
            intended_domains: BTreeSet::from(["d".to_owned()]),
            ground_truth: false,
        }
    }

    fn readout(pairs: &[(&str, f64)]) -> MotivationReadout {
        MotivationReadout {
            active_point: BTreeMap::new(),
            utility: pairs.iter().map(|(id, u)| (id.to_string(), *u)).collect(),
        }
    }

    #[test]
    fn hierarchical_picks_high_priority() {
        // Priorities 10 vs 2: the closeness-style purpose dominates.
        let a = purpose("closeness", 10.0, Polarity::Prescriptive);
        let b = purpose("energy", 2.0, Polarity::Prescriptive);
        let intended = [&a, &b];
        let cfg = ArbitrationConfig::default();
        assert_eq!(select_hierarchical(&intended, &cfg).unwrap().id, "closeness");
    }

    #[test]
    fn hierarchical_tie_breaks_ascending_id() {
        let a = purpose("p2", 5.0, Polarity::Prescriptive);
        let b = purpose("p1", 5.0, Polarity::Prescriptive);
        let intended = [&a, &b];
        let cfg = ArbitrationConfig::default();
        assert_eq!(select_hierarchical(&intended, &cfg).unwrap().id, "p1");
    }

    #[test]
    fn hierarchical_matches_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = ArbitrationConfig::default();
        for _ in 0..50 {
            let purposes: Vec<Purpose> = (0..10)
                .map(|i| {
                    purpose(
                        &format!("p{i}"),
                        rng.gen_range(0..20) as f64,
                        Polarity::Prescriptive,
                    )
                })
                .collect();
            let refs: Vec<&Purpose> = purposes.iter().collect();
            let got = select_hierarchical(&refs, &cfg).unwrap();
            let oracle = purposes
                .iter()
                .map(|p| (p.priority, std::cmp::Reverse(p.id.clone())))
                .max_by(|a, b| a.partial_cmp(b).unwrap())
                .unwrap();
            assert_eq!(got.priority, oracle.0);
            assert_eq!(got.id, oracle.1 .0);
        }
    }

    #[test]
    fn urgency_reverses_priority_when_sated() {
        // Scores: 10 * (1 - 0.99) = 0.1 vs 2 * (1 - 0.1) = 1.8.
        let a = purpose("p1", 10.0, Polarity::Prescriptive);
        let b = purpose("p2", 2.0, Polarity::Prescriptive);
        let intended = [&a, &b];
        let cfg = ArbitrationConfig::default();
        let r = readout(&[("p1", 0.99), ("p2", 0.1)]);
        assert_eq!(select_urgency(&intended, &r, &cfg).unwrap().id, "p2");
    }

    #[test]
    fn urgency_dominance_under_equal_utilities() {
        let a = purpose("p1", 7.0, Polarity::Prescriptive);
        let b = purpose("p2", 3.0, Polarity::Prescriptive);
        let intended = [&a, &b];
        let cfg = ArbitrationConfig::default();
        let r = readout(&[("p1", 0.4), ("p2", 0.4)]);
        assert_eq!(select_urgency(&intended, &r, &cfg).unwrap().id, "p1");
        // Equal utilities reduce the rule to the hierarchical choice.
        assert_eq!(
            select_urgency(&intended, &r, &cfg).unwrap().id,
            select_hierarchical(&intended, &cfg).unwrap().id
        );
    }

    #[test]
    fn urgency_matches_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let cfg = ArbitrationConfig::default();
        for _ in 0..50 {
            let purposes: Vec<Purpose> = (0..8)
                .map(|i| {
                    purpose(&format!("p{i}"), rng.gen_range(1..20) as f64, Polarity::Prescriptive)
                })
                .collect();
            let r = MotivationReadout {
                active_point: BTreeMap::new(),
                utility: purposes
                    .iter()
                    .map(|p| (p.id.clone(), rng.gen_range(0.01..0.99)))
                    .collect(),
            };
            let refs: Vec<&Purpose> = purposes.iter().collect();
            let got = select_urgency(&refs, &r, &cfg).unwrap();
            let oracle = purposes
                .iter()
                .max_by(|a, b| {
                    let sa = a.priority * (1.0 - r.utility[&a.id]);
                    let sb = b.priority * (1.0 - r.utility[&b.id]);
                    sa.partial_cmp(&sb)
                        .unwrap()
                        .then(b.id.cmp(&a.id))
                })
                .unwrap();
            assert_eq!(got.id, oracle.id);
        }
    }

    #[test]
    fn urgency_rejects_out_of_range_utility() {
        let a = purpose("p1", 1.0, Polarity::Prescriptive);
        let intended = [&a];
        let cfg = ArbitrationConfig::default();
        let r = readout(&[("p1", 1.0)]);
        assert_eq!(
            select_urgency(&intended, &r, &cfg).unwrap_err(),
            ArbitrationError::UtilityOutOfRange("p1".to_owned(), 1.0)
        );
    }

    #[test]
    fn softmax_symmetry_and_direct_value() {
        let a = purpose("p1", 2.0, Polarity::Prescriptive);
        let b = purpose("p2", 2.0, Polarity::Prescriptive);
        let intended = [&a, &b];
        let cfg = ArbitrationConfig::default();
        let r = readout(&[("p1", 0.5), ("p2", 0.5)]);
        let dist = softmax_distribution(&intended, &r, &cfg).unwrap();
        assert!((dist["p1"] - 0.5).abs() < 1e-12);
        assert!((dist["p2"] - 0.5).abs() < 1e-12);

        // Scores 1 and 0 at temperature 1: (e/(e+1), 1/(e+1)).
        let c = purpose("q1", 2.0, Polarity::Prescriptive);
        let d = purpose("q2", 2.0, Polarity::Prescriptive);
        let intended = [&c, &d];
        let r = readout(&[("q1", 0.5), ("q2", 1.0 - 1e-12)]);
        let dist = softmax_distribution(&intended, &r, &cfg).unwrap();
        let e = std::f64::consts::E;
        assert!((dist["q1"] - e / (e + 1.0)).abs() < 1e-6);
        assert!((dist["q2"] - 1.0 / (e + 1.0)).abs() < 1e-6);
        let total: f64 = dist.values().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cold_softmax_concentrates_on_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let purposes: Vec<Purpose> = (0..5)
            .map(|i| purpose(&format!("p{i}"), rng.gen_range(1..30) as f64, Polarity::Prescriptive))
            .collect();
        let r = MotivationReadout {
            active_point: BTreeMap::new(),
            utility: purposes
                .iter()
                .map(|p| (p.id.clone(), rng.gen_range(0.05..0.95)))
                .collect(),
        };
        let refs: Vec<&Purpose> = purposes.iter().collect();
        let cfg = ArbitrationConfig { temperature: 0.01, ..Default::default() };
        let dist = softmax_distribution(&refs, &r, &cfg).unwrap();
        let top = purposes
            .iter()
            .max_by(|a, b| {
                let sa = a.priority * (1.0 - r.utility[&a.id]);
                let sb = b.priority * (1.0 - r.utility[&b.id]);
                sa.partial_cmp(&sb).unwrap()
            })
            .unwrap();
        let mut hits = 0;
        let mut sample_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..10_000 {
            if sample_softmax(&dist, &mut sample_rng).as_deref() == Some(top.id.as_str()) {
                hits += 1;
            }
        }
        assert!(hits as f64 / 10_000.0 >= 0.99, "hits {hits}");
    }

    #[test]
    fn hot_softmax_flattens() {
        let a = purpose("p1", 2.0, Polarity::Prescriptive);
        let b = purpose("p2", 1.0, Polarity::Prescriptive);
        let intended = [&a, &b];
        let r = readout(&[("p1", 0.1), ("p2", 0.9)]);
        let cfg = ArbitrationConfig { temperature: 1e6, ..Default::default() };
        let dist = softmax_distribution(&intended, &r, &cfg).unwrap();
        let max = dist.values().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = dist.values().cloned().fold(f64::INFINITY, f64::min);
        assert!(max - min < 1e-6);
        for p in dist.values() {
            assert!(*p > 0.0 && *p < 1.0);
        }
    }

    #[test]
    fn softmax_max_shift_survives_huge_scores() {
        let a = purpose("p1", 1e6, Polarity::Prescriptive);
        let b = purpose("p2", 1.0, Polarity::Prescriptive);
        let intended = [&a, &b];
        let r = readout(&[("p1", 0.5), ("p2", 0.5)]);
        let cfg = ArbitrationConfig { temperature: 1e-3, ..Default::default() };
        let dist = softmax_distribution(&intended, &r, &cfg).unwrap();
        assert!(dist.values().all(|p| p.is_finite()));
        let total: f64 = dist.values().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    fn goal(purpose: &str) -> Goal {
        Goal {
            owner: Agent::Robot,
            purpose: purpose.to_owned(),
            domain: "d".to_owned(),
            points: BTreeSet::from(["o1".to_owned()]),
            source: GoalSource::WholePurpose,
            utility_per_point: BTreeMap::from([("o1".to_owned(), 1.0)]),
            intention_flag: true,
            ungroundable: false,
        }
    }

    fn mspace(priorities: &[f64]) -> MotivationalSpace {
        MotivationalSpace {
            robot: "c".to_owned(),
            components: priorities
                .iter()
                .enumerate()
                .map(|(i, alpha)| MotivationalComponent {
                    space: format!("sp{i}"),
                    priority: *alpha,
                    utility: UtilityFunction {
                        space: format!("sp{i}"),
                        table: BTreeMap::from([
                            (format!("lo{i}"), 0.0),
                            (format!("hi{i}"), 1.0),
                        ]),
                    },
                })
                .collect(),
        }
    }

    #[test]
    fn motivational_weighted_dominance() {
        // Raising component 1 by 1 under alpha = (10, 2) beats raising
        // component 2 by 1.
        let ms = mspace(&[10.0, 2.0]);
        let candidates = [goal("raise1"), goal("raise2")];
        let pick = select_motivational(&ms, &candidates, |g| {
            Some(if g.purpose == "raise1" {
                vec!["hi0".to_owned(), "lo1".to_owned()]
            } else {
                vec!["lo0".to_owned(), "hi1".to_owned()]
            })
        })
        .unwrap();
        assert_eq!(pick.purpose, "raise1");
    }

    #[test]
    fn motivational_tie_breaks_by_goal_key() {
        let ms = mspace(&[1.0]);
        let candidates = [goal("b"), goal("a")];
        let pick =
            select_motivational(&ms, &candidates, |_| Some(vec!["hi0".to_owned()])).unwrap();
        assert_eq!(pick.purpose, "a");
    }

    #[test]
    fn motivational_matches_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..40 {
            let ms = mspace(&[rng.gen_range(0.5..9.5), rng.gen_range(0.5..9.5)]);
            let candidates: Vec<Goal> = (0..6).map(|i| goal(&format!("g{i}"))).collect();
            let predictions: BTreeMap<String, Vec<String>> = candidates
                .iter()
                .map(|g| {
                    (
                        g.purpose.clone(),
                        vec![
                            if rng.gen_bool(0.5) { "hi0" } else { "lo0" }.to_owned(),
                            if rng.gen_bool(0.5) { "hi1" } else { "lo1" }.to_owned(),
                        ],
                    )
                })
                .collect();
            let pick = select_motivational(&ms, &candidates, |g| {
                predictions.get(&g.purpose).cloned()
            })
            .unwrap();
            let oracle = candidates
                .iter()
                .max_by(|a, b| {
                    let va = ms.composite_utility(&predictions[&a.purpose]).unwrap();
                    let vb = ms.composite_utility(&predictions[&b.purpose]).unwrap();
                    va.partial_cmp(&vb).unwrap().then(goal_key(b).cmp(&goal_key(a)))
                })
                .unwrap();
            assert_eq!(goal_key(pick), goal_key(oracle));
        }
    }

    #[test]
    fn motivational_rejects_unpredictable() {
        let ms = mspace(&[1.0]);
        let candidates = [goal("g")];
        let err = select_motivational(&ms, &candidates, |_| None).unwrap_err();
        assert_eq!(err, ArbitrationError::UnpredictableCandidate("g/d".to_owned()));
    }

    #[test]
    fn priority_rescaling_leaves_selection_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let cfg = ArbitrationConfig::default();
        for _ in 0..30 {
            let purposes: Vec<Purpose> = (0..6)
                .map(|i| {
                    purpose(&format!("p{i}"), rng.gen_range(1..15) as f64, Polarity::Prescriptive)
                })
                .collect();
            let r = MotivationReadout {
                active_point: BTreeMap::new(),
                utility: purposes
                    .iter()
                    .map(|p| (p.id.clone(), rng.gen_range(0.05..0.95)))
                    .collect(),
            };
            let k = rng.gen_range(0.1..50.0);
            let scaled: Vec<Purpose> = purposes
                .iter()
                .map(|p| Purpose { priority: p.priority * k, ..p.clone() })
                .collect();
            let refs: Vec<&Purpose> = purposes.iter().collect();
            let scaled_refs: Vec<&Purpose> = scaled.iter().collect();
            assert_eq!(
                select_hierarchical(&refs, &cfg).unwrap().id,
                select_hierarchical(&scaled_refs, &cfg).unwrap().id
            );
            assert_eq!(
                select_urgency(&refs, &r, &cfg).unwrap().id,
                select_urgency(&scaled_refs, &r, &cfg).unwrap().id
            );
        }
    }

    #[test]
    fn proscriptive_never_wins_and_dominance_warns() {
        let a = purpose("avoid", -3.0, Polarity::Proscriptive);
        let b = purpose("seek", 2.0, Polarity::Prescriptive);
        let intended = [&a, &b];
        let cfg = ArbitrationConfig::default();
        assert_eq!(select_hierarchical(&intended, &cfg).unwrap().id, "seek");

        // |−3| < 10 × 2 warns; |−50| ≥ 10 × 2 passes.
        assert_eq!(validate_proscriptive_dominance(&intended, &cfg).len(), 1);
        let strong = purpose("avoid", -50.0, Polarity::Proscriptive);
        let ok = [&strong, &b];
        assert!(validate_proscriptive_dominance(&ok, &cfg).is_empty());
    }

    #[test]
    fn only_proscriptive_purposes_is_empty_selection() {
        let a = purpose("avoid", -50.0, Polarity::Proscriptive);
        let intended = [&a];
        let cfg = ArbitrationConfig::default();
        assert_eq!(
            select_hierarchical(&intended, &cfg).unwrap_err(),
            ArbitrationError::EmptyIntentionSet
        );
    }
}
