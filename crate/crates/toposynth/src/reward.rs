//! Reward formulas and constants.
//!
//! Total step reward is the sum of a validity term (0 or a penalty for
//! rejected actions), a per-step similarity term from the discriminator,
//! and a domain term granted only when the episode ends: a structural
//! penalty, a flat simulation-invalid bonus, or the full simulation-valid
//! bonus plus weighted per-specification scores and a success bonus when
//! every constraint is met.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimResult;

/// What a single performance specification asks of its measured value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Hit `target` within the allowed error `bound`.
    Match { bound: f64 },
    Minimize,
    Maximize,
}

/// One entry of the performance specification set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfSpec {
    pub key: String,
    pub objective: Objective,
    pub target: f64,
    #[serde(default)]
    pub unit: String,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    15.0
}

impl PerfSpec {
    /// Whether a measured value satisfies the raw constraint.
    pub fn met(&self, v: f64) -> bool {
        match self.objective {
            Objective::Match { bound } => (v - self.target).abs() <= bound,
            Objective::Minimize => v <= self.target,
            Objective::Maximize => v >= self.target,
        }
    }
}

/// Reward constants; defaults are the published schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConstants {
    pub invalid_action: f64,
    pub similarity: f64,
    pub struct_invalid_terminal: f64,
    pub sim_invalid_bonus: f64,
    pub sim_valid_bonus: f64,
    pub success_bonus: f64,
    pub clamp_lo: f64,
    pub clamp_hi: f64,
    /// Use the unamended match branch `1 - (v-p)/e` (no absolute value).
    pub literal_match_branch: bool,
    /// Use the unamended minimize branch `(v-p)/(v-3p)` past the pole.
    pub literal_minimize_branch: bool,
}

impl Default for RewardConstants {
    fn default() -> Self {
        RewardConstants {
            invalid_action: -2.0,
            similarity: 1.0,
            struct_invalid_terminal: -2.0,
            sim_invalid_bonus: 3.0,
            sim_valid_bonus: 30.0,
            success_bonus: 10.0,
            clamp_lo: -1.0,
            clamp_hi: 1.0,
            literal_match_branch: false,
            literal_minimize_branch: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("measured value for {0} is not finite")]
    NonFiniteMeasurement(String),
}

/// Per-specification score, clamped to the configured range.
pub fn spec_reward(v: f64, spec: &PerfSpec, consts: &RewardConstants) -> Result<f64, RewardError> {
    if !v.is_finite() {
        return Err(RewardError::NonFiniteMeasurement(spec.key.clone()));
    }
    let p = spec.target;
    let raw = match spec.objective {
        Objective::Match { bound } => {
            if consts.literal_match_branch {
                1.0 - (v - p) / bound
            } else {
                1.0 - (v - p).abs() / bound
            }
        }
        Objective::Minimize => {
            if consts.literal_minimize_branch {
                (v - p) / (v - 3.0 * p)
            } else if v < 3.0 * p {
                (v - p) / (v - 3.0 * p)
            } else {
                -1.0
            }
        }
        Objective::Maximize => (v - p) / (v + p),
    };
    Ok(raw.clamp(consts.clamp_lo, consts.clamp_hi))
}

/// Domain reward at episode end. `structurally_valid` gates everything:
/// incomplete structures take the flat penalty and nothing else. Missing
/// measurement keys score as a full negative clamp and fail the success
/// check.
pub fn aggregate_domain_reward(
    structurally_valid: bool,
    result: &SimResult,
    specs: &[PerfSpec],
    consts: &RewardConstants,
) -> f64 {
    if !structurally_valid {
        return consts.struct_invalid_terminal;
    }
    if !result.sim_valid {
        return consts.sim_invalid_bonus;
    }
    let mut total = consts.sim_valid_bonus;
    let mut all_met = true;
    for spec in specs {
        match result.measurement(&spec.key) {
            Some(v) => {
                let r = spec_reward(v, spec, consts).unwrap_or(consts.clamp_lo);
                total += spec.weight * r;
                all_met &= spec.met(v);
            }
            None => {
                total += spec.weight * consts.clamp_lo;
                all_met = false;
            }
        }
    }
    if all_met {
        total += consts.success_bonus;
    }
    total
}

/// Map a discriminator probability to the per-step similarity reward.
pub fn similarity_reward(prob_expert_like: f64, consts: &RewardConstants) -> f64 {
    if prob_expert_like >= 0.5 {
        consts.similarity
    } else {
        -consts.similarity
    }
}

/// Sum of the three reward families for one step; absent terms contribute
/// zero.
pub fn total_step_reward(
    action_applied: bool,
    similarity: Option<f64>,
    domain: Option<f64>,
    consts: &RewardConstants,
) -> f64 {
    let validity = if action_applied { 0.0 } else { consts.invalid_action };
    validity + similarity.unwrap_or(0.0) + domain.unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SimResult;

    fn consts() -> RewardConstants {
        RewardConstants::default()
    }

    fn spec(objective: Objective, target: f64) -> PerfSpec {
        PerfSpec {
            key: "x".into(),
            objective,
            target,
            unit: String::new(),
            weight: 15.0,
        }
    }

    #[test]
    fn branch_values() {
        let c = consts();
        let m = spec(Objective::Match { bound: 0.5 }, 2.0);
        assert_eq!(spec_reward(2.0, &m, &c).unwrap(), 1.0);
        let mn = spec(Objective::Minimize, 2.0);
        assert_eq!(spec_reward(2.0, &mn, &c).unwrap(), 0.0);
        let mx = spec(Objective::Maximize, 2.0);
        assert_eq!(spec_reward(2.0, &mx, &c).unwrap(), 0.0);
        assert_eq!(spec_reward(6.0, &mx, &c).unwrap(), 0.5);
        // minimize at v = 2p clamps to -1: (p)/(-p)
        assert_eq!(spec_reward(4.0, &mn, &c).unwrap(), -1.0);
        // and stays clamped past the amended cutoff
        assert_eq!(spec_reward(7.0, &mn, &c).unwrap(), -1.0);
    }

    #[test]
    fn non_finite_rejected() {
        let c = consts();
        let m = spec(Objective::Maximize, 2.0);
        assert!(matches!(
            spec_reward(f64::NAN, &m, &c),
            Err(RewardError::NonFiniteMeasurement(_))
        ));
    }

    #[test]
    fn match_branch_monotone_in_error() {
        let c = consts();
        let m = spec(Objective::Match { bound: 1.0 }, 10.0);
        let mut prev = spec_reward(10.0, &m, &c).unwrap();
        assert_eq!(prev, 1.0);
        for i in 1..=20 {
            let v = 10.0 + 0.1 * i as f64;
            let r = spec_reward(v, &m, &c).unwrap();
            assert!(r < prev || (r == -1.0 && prev == -1.0));
            let r_neg = spec_reward(10.0 - 0.1 * i as f64, &m, &c).unwrap();
            assert_eq!(r, r_neg, "symmetric around the target");
            prev = r;
        }
    }

    #[test]
    fn minimize_monotone_before_clamp() {
        let c = consts();
        let mn = spec(Objective::Minimize, 5.0);
        let mut prev = f64::INFINITY;
        let mut v = 0.0;
        while v < 15.0 {
            let r = spec_reward(v, &mn, &c).unwrap();
            assert!(r <= prev);
            prev = r;
            v += 0.25;
        }
        assert_eq!(spec_reward(0.0, &mn, &c).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn maximize_bounded_open_interval() {
        let c = consts();
        let mx = spec(Objective::Maximize, 3.0);
        for v in [0.01, 0.5, 3.0, 10.0, 1e9] {
            let r = spec_reward(v, &mx, &c).unwrap();
            assert!(r > -1.0 && r < 1.0);
        }
    }

    #[test]
    fn domain_reward_branches() {
        let c = consts();
        let specs = vec![spec(Objective::Match { bound: 0.5 }, 2.0)];
        let ok = SimResult::valid([("x".to_string(), 2.0)]);
        assert_eq!(
            aggregate_domain_reward(false, &ok, &specs, &c),
            c.struct_invalid_terminal
        );
        let bad = SimResult::invalid("no oscillation");
        assert_eq!(aggregate_domain_reward(true, &bad, &specs, &c), 3.0);
        // Spec met exactly: 30 + 15*1 + 10
        assert_eq!(aggregate_domain_reward(true, &ok, &specs, &c), 55.0);
        // One spec met, one far off: 30 + 15*1 + 15*(-1), no success bonus.
        let two = vec![
            spec(Objective::Match { bound: 0.5 }, 2.0),
            PerfSpec {
                key: "y".into(),
                objective: Objective::Minimize,
                target: 1.0,
                unit: String::new(),
                weight: 15.0,
            },
        ];
        let res = SimResult::valid([("x".to_string(), 2.0), ("y".to_string(), 100.0)]);
        assert_eq!(aggregate_domain_reward(true, &res, &two, &c), 30.0);
    }

    #[test]
    fn domain_reward_spec_order_invariant() {
        let c = consts();
        let a = spec(Objective::Match { bound: 1.0 }, 2.0);
        let b = PerfSpec {
            key: "y".into(),
            objective: Objective::Maximize,
            target: 4.0,
            unit: String::new(),
            weight: 7.0,
        };
        let res = SimResult::valid([("x".to_string(), 2.5), ("y".to_string(), 9.0)]);
        let fwd = aggregate_domain_reward(true, &res, &[a.clone(), b.clone()], &c);
        let rev = aggregate_domain_reward(true, &res, &[b, a], &c);
        assert!((fwd - rev).abs() < 1e-15);
    }

    #[test]
    fn single_spec_meeting_terminal_scores_at_least_forty() {
        let c = consts();
        let specs = vec![spec(Objective::Match { bound: 0.5 }, 2.0)];
        for v in [1.5, 1.75, 2.0, 2.25, 2.5] {
            let res = SimResult::valid([("x".to_string(), v)]);
            assert!(aggregate_domain_reward(true, &res, &specs, &c) >= 40.0);
        }
    }

    #[test]
    fn step_reward_composition() {
        let c = consts();
        assert_eq!(total_step_reward(true, Some(1.0), None, &c), 1.0);
        assert_eq!(total_step_reward(false, Some(-1.0), None, &c), -3.0);
        assert_eq!(total_step_reward(true, Some(1.0), Some(55.0), &c), 56.0);
        assert_eq!(similarity_reward(0.5, &c), 1.0);
        assert_eq!(similarity_reward(0.49, &c), -1.0);
    }
}
