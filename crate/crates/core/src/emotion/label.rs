use core::fmt;

use serde::{Deserialize, Serialize};

/// Emotion categories in their fixed index order. The first four are the
/// negative states the recognizer targets; `Neutral` is the fallback for
/// turns that carry none of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmotionLabel {
    Anxiety,
    Sadness,
    ShameRegret,
    Anger,
    Neutral,
}

impl EmotionLabel {
    pub const COUNT: usize = 5;

    pub const ALL: [EmotionLabel; Self::COUNT] = [
        EmotionLabel::Anxiety,
        EmotionLabel::Sadness,
        EmotionLabel::ShameRegret,
        EmotionLabel::Anger,
        EmotionLabel::Neutral,
    ];

    pub const NEGATIVE: [EmotionLabel; 4] = [
        EmotionLabel::Anxiety,
        EmotionLabel::Sadness,
        EmotionLabel::ShameRegret,
        EmotionLabel::Anger,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Anxiety => "anxiety",
            EmotionLabel::Sadness => "sadness",
            EmotionLabel::ShameRegret => "shame_regret",
            EmotionLabel::Anger => "anger",
            EmotionLabel::Neutral => "neutral",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.as_str() == name)
    }

    pub fn is_negative(self) -> bool {
        self != EmotionLabel::Neutral
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_order_is_fixed() {
        for (i, label) in EmotionLabel::ALL.iter().enumerate() {
            assert_eq!(label.index(), i);
            assert_eq!(EmotionLabel::from_index(i), Some(*label));
            assert_eq!(EmotionLabel::parse(label.as_str()), Some(*label));
        }
        assert_eq!(EmotionLabel::from_index(5), None);
        assert!(!EmotionLabel::Neutral.is_negative());
    }
}
