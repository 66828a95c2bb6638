use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::response::PronounPerson;
use super::ConversationError;
use crate::emotion::{EmotionLabel, EmotionResult};

/// Dominant-label confidence needed for the direct routes.
pub const CONFIDENCE_THRESHOLD: f64 = 0.5;
/// Negative probability mass that sends a low-confidence turn to Socratic
/// questioning.
pub const NEGATIVE_MASS_THRESHOLD: f64 = 0.5;

pub const SLOT_NAMES: [&str; 3] = ["user_name", "topic", "reframed_text"];

const SHIPPED_STRATEGIES: &str = include_str!("../../data/strategies.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyId {
    ImmediateReframe,
    CognitiveRestructuring,
    ActionPlan,
    AffirmationSupport,
    SmallTalk,
}

impl StrategyId {
    pub const ALL: [StrategyId; 5] = [
        StrategyId::ImmediateReframe,
        StrategyId::CognitiveRestructuring,
        StrategyId::ActionPlan,
        StrategyId::AffirmationSupport,
        StrategyId::SmallTalk,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::ImmediateReframe => "immediate_reframe",
            StrategyId::CognitiveRestructuring => "cognitive_restructuring",
            StrategyId::ActionPlan => "action_plan",
            StrategyId::AffirmationSupport => "affirmation_support",
            StrategyId::SmallTalk => "small_talk",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A strategy id together with the step that was (or will be) used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyRef {
    pub id: StrategyId,
    pub step: usize,
}

/// One entry of the strategy table file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub steps: usize,
    pub pronoun_person: PronounPerson,
    #[serde(default = "default_true")]
    pub positive_affect: bool,
    pub templates: Vec<String>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotDefaults {
    pub user_name: String,
    pub topic: String,
    pub reframed_text: String,
}

#[derive(Deserialize, Serialize)]
struct TableFile {
    #[serde(flatten)]
    strategies: BTreeMap<String, StrategySpec>,
    defaults: SlotDefaults,
}

/// Strategy id to script templates. Templates of a multi-step strategy are
/// its ordered steps; the cognitive-restructuring steps form the Socratic
/// question sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TableFile", into = "TableFile")]
pub struct StrategyTable {
    strategies: BTreeMap<StrategyId, StrategySpec>,
    defaults: SlotDefaults,
}

impl TryFrom<TableFile> for StrategyTable {
    type Error = ConversationError;

    fn try_from(file: TableFile) -> Result<Self, Self::Error> {
        let invalid = ConversationError::InvalidStrategyTable;
        let mut strategies = BTreeMap::new();
        for (name, spec) in file.strategies {
            let id = StrategyId::ALL
                .into_iter()
                .find(|id| id.as_str() == name)
                .ok_or_else(|| invalid(format!("unknown strategy `{name}`")))?;
            if spec.templates.is_empty() {
                return Err(invalid(format!("`{name}` has no templates")));
            }
            if spec.steps != spec.templates.len() {
                return Err(invalid(format!(
                    "`{name}` declares {} steps but has {} templates",
                    spec.steps,
                    spec.templates.len()
                )));
            }
            for t in &spec.templates {
                check_slots(t).map_err(|slot| {
                    invalid(format!("`{name}` template uses unknown slot `{{{slot}}}`"))
                })?;
                if t.contains('\n') {
                    return Err(invalid(format!("`{name}` template spans several lines")));
                }
            }
            strategies.insert(id, spec);
        }
        for id in StrategyId::ALL {
            if !strategies.contains_key(&id) {
                return Err(invalid(format!("missing strategy `{id}`")));
            }
        }
        Ok(StrategyTable {
            strategies,
            defaults: file.defaults,
        })
    }
}

impl From<StrategyTable> for TableFile {
    fn from(table: StrategyTable) -> Self {
        TableFile {
            strategies: table
                .strategies
                .into_iter()
                .map(|(id, spec)| (id.as_str().to_string(), spec))
                .collect(),
            defaults: table.defaults,
        }
    }
}

/// Returns the first slot name not in [`SLOT_NAMES`].
fn check_slots(template: &str) -> Result<(), String> {
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| String::from("<unterminated>"))?;
        let slot = &after[..close];
        if !SLOT_NAMES.contains(&slot) {
            return Err(slot.to_string());
        }
        rest = &after[close + 1..];
    }
    Ok(())
}

impl StrategyTable {
    pub fn english() -> Self {
        Self::from_json(SHIPPED_STRATEGIES).expect("shipped strategy table is valid")
    }

    pub fn from_json(json: &str) -> Result<Self, ConversationError> {
        serde_json::from_str(json)
            .map_err(|e| ConversationError::InvalidStrategyTable(format!("{e}")))
    }

    pub fn spec(&self, id: StrategyId) -> &StrategySpec {
        &self.strategies[&id]
    }

    pub fn defaults(&self) -> &SlotDefaults {
        &self.defaults
    }

    pub fn strategy(&self, id: StrategyId, step: usize) -> DialogStrategy {
        let spec = self.spec(id);
        DialogStrategy {
            id,
            step_index: step % spec.steps,
            script_templates: spec.templates.clone(),
            pronoun_person: spec.pronoun_person,
            positive_affect: spec.positive_affect,
        }
    }
}

/// Values substituted into template slots. Missing values fall back to the
/// table defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotValues {
    pub user_name: Option<String>,
    pub topic: Option<String>,
    pub reframed_text: Option<String>,
}

/// A selected strategy positioned at its current step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogStrategy {
    pub id: StrategyId,
    pub step_index: usize,
    pub script_templates: Vec<String>,
    pub pronoun_person: PronounPerson,
    pub positive_affect: bool,
}

impl DialogStrategy {
    pub fn steps(&self) -> usize {
        self.script_templates.len()
    }

    pub fn current_template(&self) -> &str {
        &self.script_templates[self.step_index]
    }

    pub fn reference(&self) -> StrategyRef {
        StrategyRef {
            id: self.id,
            step: self.step_index,
        }
    }

    /// Fills the current template. Slot values are flattened onto one line.
    pub fn render(&self, slots: &SlotValues, defaults: &SlotDefaults) -> String {
        let pick = |value: &Option<String>, default: &str| -> String {
            let raw = value.as_deref().filter(|v| !v.trim().is_empty()).unwrap_or(default);
            raw.split_whitespace().collect::<Vec<_>>().join(" ")
        };
        self.current_template()
            .replace("{user_name}", &pick(&slots.user_name, &defaults.user_name))
            .replace("{topic}", &pick(&slots.topic, &defaults.topic))
            .replace("{reframed_text}", &pick(&slots.reframed_text, &defaults.reframed_text))
    }
}

/// Strategies used so far in a session, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyHistory {
    uses: Vec<StrategyRef>,
}

impl StrategyHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, used: StrategyRef) {
        self.uses.push(used);
    }

    pub fn uses(&self) -> &[StrategyRef] {
        &self.uses
    }

    pub fn last_step(&self, id: StrategyId) -> Option<usize> {
        self.uses.iter().rev().find(|u| u.id == id).map(|u| u.step)
    }

    /// Step the next use of `id` should take: one past the last recorded
    /// step, wrapping at `steps`.
    pub fn next_step(&self, id: StrategyId, steps: usize) -> usize {
        match self.last_step(id) {
            Some(step) => (step + 1) % steps.max(1),
            None => 0,
        }
    }
}

/// Routing rules, first match wins:
///
/// 1. anger or anxiety dominant with confidence >= 0.5: immediate reframe
/// 2. sadness or shame/regret dominant with confidence >= 0.5: affirmation
/// 3. confidence < 0.5 and negative mass >= 0.5: cognitive restructuring,
///    resuming after the last Socratic step used
/// 4. neutral dominant with an open action plan: action plan
/// 5. otherwise: small talk
pub fn select_strategy(
    emotion: &EmotionResult,
    history: &StrategyHistory,
    open_plan: bool,
    table: &StrategyTable,
) -> DialogStrategy {
    let id = route(emotion, open_plan);
    let steps = table.spec(id).steps;
    table.strategy(id, history.next_step(id, steps))
}

fn route(emotion: &EmotionResult, open_plan: bool) -> StrategyId {
    let confident = emotion.confidence() >= CONFIDENCE_THRESHOLD;
    match emotion.dominant() {
        EmotionLabel::Anger | EmotionLabel::Anxiety if confident => StrategyId::ImmediateReframe,
        EmotionLabel::Sadness | EmotionLabel::ShameRegret if confident => {
            StrategyId::AffirmationSupport
        }
        _ if !confident && emotion.negative_mass() >= NEGATIVE_MASS_THRESHOLD => {
            StrategyId::CognitiveRestructuring
        }
        EmotionLabel::Neutral if open_plan => StrategyId::ActionPlan,
        _ => StrategyId::SmallTalk,
    }
}
