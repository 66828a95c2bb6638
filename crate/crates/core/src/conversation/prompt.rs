use alloc::format;
use alloc::string::String;

use super::response::{LanguageModel, ResponseConstraints};
use super::strategy::{DialogStrategy, SlotValues, SlotDefaults};
use super::ConversationError;
use crate::adapter::AdapterError;
use crate::lexicon::Lexicon;
use crate::storage::DEFAULT_CAPACITY;

/// Longest dialogue context accepted into a prompt, in characters.
pub const MAX_CONTEXT_CHARS: usize = DEFAULT_CAPACITY;

const PERSONA: &str = "You are the user's inner voice, answering in their own cloned voice. \
Follow positive psychology: bring encouragement, empathy and understanding to every reply and build rapport.";

const SCRIPT_MARKER: &str = "SCRIPT: ";

/// Assembles the language-model prompt. Sections, in order: persona,
/// strategy and step, the rendered script line, the dialogue context, and
/// one directive per constraint.
pub fn build_prompt(
    strategy: &DialogStrategy,
    context: &str,
    slots: &SlotValues,
    defaults: &SlotDefaults,
    constraints: &ResponseConstraints,
    absolutes: &Lexicon,
) -> Result<String, ConversationError> {
    let len = context.chars().count();
    if len > MAX_CONTEXT_CHARS {
        return Err(ConversationError::ContextOverflow { len });
    }
    let script = strategy.render(slots, defaults);
    let context = if context.trim().is_empty() {
        "(no earlier dialogue)"
    } else {
        context.trim_end()
    };

    let mut prompt = format!(
        "SYSTEM: {PERSONA}\nSTRATEGY: {} (step {} of {})\n{SCRIPT_MARKER}{script}\nCONTEXT:\n{context}\nCONSTRAINTS:\n- Reply in at most {} characters.\n- {}\n",
        strategy.id,
        strategy.step_index + 1,
        strategy.steps(),
        constraints.max_chars,
        constraints.pronoun_person.directive(),
    );
    if constraints.forbid_absolutes {
        prompt.push_str("- Do not use absolute terms such as: ");
        prompt.push_str(&absolutes.entries().join(", "));
        prompt.push_str(".\n");
    }
    if constraints.require_positive_affect {
        prompt.push_str("- Keep the tone positive: use more encouraging words than negative ones.\n");
    }
    Ok(prompt)
}

/// The rendered script line of a prompt built by [`build_prompt`].
pub fn extract_script(prompt: &str) -> Option<&str> {
    prompt
        .lines()
        .find_map(|line| line.strip_prefix(SCRIPT_MARKER))
        .map(str::trim)
}

/// Reference language model: answers with the script line of the prompt,
/// which is constraint-clean by construction.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptEchoModel;

impl LanguageModel for ScriptEchoModel {
    fn complete(&self, prompt: &str) -> Result<String, AdapterError> {
        extract_script(prompt)
            .map(String::from)
            .ok_or_else(|| AdapterError::protocol("script-echo", "prompt has no script line"))
    }
}
