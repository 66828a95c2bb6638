use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::StorageError;
use crate::conversation::{ProsodyParams, StrategyRef};
use crate::emotion::EmotionResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    System,
}

impl Role {
    /// Prefix marking this role's text in the dialogue buffer.
    pub fn prefix(self) -> &'static str {
        match self {
            Role::User => "U: ",
            Role::System => "S: ",
        }
    }

    /// Text appended to the dialogue buffer for one utterance.
    pub fn buffer_line(self, text: &str) -> String {
        format!("{}{}\n", self.prefix(), text)
    }
}

/// One persisted utterance. User turns carry the recognized emotion; system
/// turns carry the strategy and prosody used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub session_id: String,
    pub turn_index: u64,
    pub role: Role,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion: Option<EmotionResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prosody: Option<ProsodyParams>,
    pub timestamp_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_ref: Option<String>,
}

impl TurnRecord {
    pub fn validate(&self) -> Result<(), StorageError> {
        let bad = |m: &str| Err(StorageError::InvalidRecord(format!("turn {}: {m}", self.turn_index)));
        match self.role {
            Role::User => {
                if self.emotion.is_none() {
                    return bad("user turn without emotion");
                }
                if self.strategy.is_some() || self.prosody.is_some() {
                    return bad("user turn with strategy or prosody");
                }
            }
            Role::System => {
                if self.emotion.is_some() {
                    return bad("system turn with emotion");
                }
                if self.strategy.is_none() || self.prosody.is_none() {
                    return bad("system turn without strategy or prosody");
                }
            }
        }
        Ok(())
    }

    /// Checks that `records` form a gapless sequence starting at 0.
    pub fn validate_sequence(records: &[TurnRecord]) -> Result<(), StorageError> {
        for (i, r) in records.iter().enumerate() {
            if r.turn_index != i as u64 {
                return Err(StorageError::InvalidRecord(format!(
                    "expected turn {i}, found {}",
                    r.turn_index
                )));
            }
            r.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub turn_index: u64,
    pub timestamp_ms: u64,
    pub emotion: EmotionResult,
}

/// One point per user turn, in turn order.
pub fn emotion_trajectory(records: &[TurnRecord]) -> Vec<TrajectoryPoint> {
    let mut points: Vec<TrajectoryPoint> = records
        .iter()
        .filter(|r| r.role == Role::User)
        .filter_map(|r| {
            r.emotion.clone().map(|emotion| TrajectoryPoint {
                turn_index: r.turn_index,
                timestamp_ms: r.timestamp_ms,
                emotion,
            })
        })
        .collect();
    points.sort_by_key(|p| p.turn_index);
    points
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Open,
    Completed,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub text: String,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionPlan {
    pub session_id: String,
    pub plan_id: String,
    pub description: String,
    pub steps: Vec<PlanStep>,
    pub status: PlanStatus,
}

impl ActionPlan {
    pub fn new(
        session_id: impl Into<String>,
        plan_id: impl Into<String>,
        description: impl Into<String>,
        steps: impl IntoIterator<Item = String>,
    ) -> Result<Self, StorageError> {
        let steps: Vec<PlanStep> = steps
            .into_iter()
            .map(|text| PlanStep { text, done: false })
            .collect();
        if steps.is_empty() {
            return Err(StorageError::InvalidPlan("a plan needs at least one step".into()));
        }
        Ok(Self {
            session_id: session_id.into(),
            plan_id: plan_id.into(),
            description: description.into(),
            steps,
            status: PlanStatus::Open,
        })
    }

    pub fn is_open(&self) -> bool {
        self.status == PlanStatus::Open
    }

    /// Marks a step done or not done and recomputes the status. Abandoned
    /// plans stay abandoned.
    pub fn set_step(&mut self, index: usize, done: bool) -> Result<(), StorageError> {
        let step = self
            .steps
            .get_mut(index)
            .ok_or_else(|| StorageError::InvalidPlan(format!("no step {index}")))?;
        step.done = done;
        if self.status != PlanStatus::Abandoned {
            self.status = if self.steps.iter().all(|s| s.done) {
                PlanStatus::Completed
            } else {
                PlanStatus::Open
            };
        }
        Ok(())
    }

    pub fn abandon(&mut self) {
        self.status = PlanStatus::Abandoned;
    }

    pub fn validate(&self) -> Result<(), StorageError> {
        let all_done = !self.steps.is_empty() && self.steps.iter().all(|s| s.done);
        match self.status {
            PlanStatus::Completed if !all_done => {
                Err(StorageError::InvalidPlan("completed plan with unfinished steps".into()))
            }
            PlanStatus::Open if all_done => {
                Err(StorageError::InvalidPlan("open plan with every step done".into()))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conversation::StrategyId;
    use alloc::string::ToString;
    use alloc::vec;

    fn user(i: u64) -> TurnRecord {
        TurnRecord {
            session_id: "s".into(),
            turn_index: i,
            role: Role::User,
            text: "I always fail".into(),
            emotion: Some(EmotionResult::from_logits(vec![0.0; 5]).unwrap()),
            strategy: None,
            prosody: None,
            timestamp_ms: i * 10,
            audio_ref: None,
        }
    }

    fn system(i: u64) -> TurnRecord {
        TurnRecord {
            session_id: "s".into(),
            turn_index: i,
            role: Role::System,
            text: "I can handle this".into(),
            emotion: None,
            strategy: Some(StrategyRef {
                id: StrategyId::SmallTalk,
                step: 0,
            }),
            prosody: Some(ProsodyParams::NEUTRAL),
            timestamp_ms: i * 10,
            audio_ref: Some("ab".repeat(32)),
        }
    }

    #[test]
    fn trajectory_filters_user_turns() {
        let records = [user(0), system(1), user(2), system(3)];
        let t = emotion_trajectory(&records);
        assert_eq!(t.iter().map(|p| p.turn_index).collect::<Vec<_>>(), [0, 2]);
        assert!(emotion_trajectory(&[]).is_empty());
    }

    #[test]
    fn role_conditional_fields() {
        assert!(user(0).validate().is_ok());
        assert!(system(1).validate().is_ok());
        let mut bad = user(0);
        bad.prosody = Some(ProsodyParams::NEUTRAL);
        assert!(bad.validate().is_err());
        assert!(TurnRecord::validate_sequence(&[user(0), system(2)]).is_err());
    }

    #[test]
    fn record_json_omits_absent_fields() {
        let json = serde_json::to_string(&user(0)).unwrap();
        assert!(!json.contains("audio_ref"));
        assert!(!json.contains("prosody"));
        let back: TurnRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, user(0));
    }

    #[test]
    fn plan_completes_when_all_steps_done() {
        let mut p = ActionPlan::new("s", "p1", "sleep earlier", ["dim lights".to_string(), "no phone".to_string()]).unwrap();
        p.set_step(0, true).unwrap();
        assert!(p.is_open());
        p.set_step(1, true).unwrap();
        assert_eq!(p.status, PlanStatus::Completed);
        p.set_step(1, false).unwrap();
        assert!(p.is_open());
        assert!(p.validate().is_ok());
        p.abandon();
        assert!(p.validate().is_ok());
    }
}
