use alloc::collections::BTreeMap;
use alloc::format;

use serde::{Deserialize, Serialize};

use super::ConversationError;
use crate::emotion::{EmotionLabel, EmotionResult};

const SHIPPED_PROSODY: &str = include_str!("../../data/prosody.json");

/// Vocal delivery of a response: pitch shift in semitones, gain in dB and a
/// speaking-rate multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProsodyParams {
    pub pitch_shift: f64,
    pub volume_gain: f64,
    pub rate: f64,
}

impl ProsodyParams {
    pub const PITCH_RANGE: (f64, f64) = (-4.0, 4.0);
    pub const GAIN_RANGE: (f64, f64) = (-6.0, 6.0);
    pub const RATE_RANGE: (f64, f64) = (0.8, 1.2);

    pub const NEUTRAL: ProsodyParams = ProsodyParams {
        pitch_shift: 0.0,
        volume_gain: 0.0,
        rate: 1.0,
    };

    pub fn new(pitch_shift: f64, volume_gain: f64, rate: f64) -> Result<Self, ConversationError> {
        let p = Self {
            pitch_shift,
            volume_gain,
            rate,
        };
        if !p.is_valid() {
            return Err(ConversationError::InvalidProsody(format!(
                "({pitch_shift}, {volume_gain}, {rate}) is outside the allowed intervals"
            )));
        }
        Ok(p)
    }

    pub fn is_valid(&self) -> bool {
        let within = |v: f64, (lo, hi): (f64, f64)| v.is_finite() && (lo..=hi).contains(&v);
        within(self.pitch_shift, Self::PITCH_RANGE)
            && within(self.volume_gain, Self::GAIN_RANGE)
            && within(self.rate, Self::RATE_RANGE)
    }

    pub fn clamped(self) -> Self {
        let clamp = |v: f64, (lo, hi): (f64, f64), fallback: f64| {
            if v.is_finite() {
                v.clamp(lo, hi)
            } else {
                fallback
            }
        };
        Self {
            pitch_shift: clamp(self.pitch_shift, Self::PITCH_RANGE, 0.0),
            volume_gain: clamp(self.volume_gain, Self::GAIN_RANGE, 0.0),
            rate: clamp(self.rate, Self::RATE_RANGE, 1.0),
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::NEUTRAL
    }
}

/// Target prosody per label. File form: `{"anger": [pitch, gain, rate], ...}`
/// with all five labels present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<EmotionLabel, [f64; 3]>", into = "BTreeMap<EmotionLabel, [f64; 3]>")]
pub struct ProsodyTable {
    targets: [ProsodyParams; EmotionLabel::COUNT],
}

impl TryFrom<BTreeMap<EmotionLabel, [f64; 3]>> for ProsodyTable {
    type Error = ConversationError;

    fn try_from(map: BTreeMap<EmotionLabel, [f64; 3]>) -> Result<Self, Self::Error> {
        let mut targets = [ProsodyParams::NEUTRAL; EmotionLabel::COUNT];
        for label in EmotionLabel::ALL {
            let [p, g, r] = *map.get(&label).ok_or_else(|| {
                ConversationError::InvalidProsody(format!("no entry for `{label}`"))
            })?;
            targets[label.index()] = ProsodyParams::new(p, g, r)?;
        }
        Ok(Self { targets })
    }
}

impl From<ProsodyTable> for BTreeMap<EmotionLabel, [f64; 3]> {
    fn from(t: ProsodyTable) -> Self {
        EmotionLabel::ALL
            .iter()
            .map(|&l| {
                let p = t.targets[l.index()];
                (l, [p.pitch_shift, p.volume_gain, p.rate])
            })
            .collect()
    }
}

impl ProsodyTable {
    pub fn english() -> Self {
        Self::from_json(SHIPPED_PROSODY).expect("shipped prosody table is valid")
    }

    pub fn from_json(json: &str) -> Result<Self, ConversationError> {
        serde_json::from_str(json).map_err(|e| ConversationError::InvalidProsody(format!("{e}")))
    }

    pub fn target(&self, label: EmotionLabel) -> ProsodyParams {
        self.targets[label.index()]
    }

    pub fn neutral(&self) -> ProsodyParams {
        self.target(EmotionLabel::Neutral)
    }
}

/// Blends from the neutral prosody toward the dominant label's target by
/// the classifier confidence, then clamps into the allowed intervals.
pub fn prosody_for_emotion(emotion: &EmotionResult, table: &ProsodyTable) -> ProsodyParams {
    let neutral = table.neutral();
    if emotion.dominant() == EmotionLabel::Neutral {
        return neutral;
    }
    let target = table.target(emotion.dominant());
    let c = emotion.confidence().clamp(0.0, 1.0);
    // Written as a two-sided weighted sum so that c == 1 lands on the
    // target exactly.
    let blend = |n: f64, t: f64| n * (1.0 - c) + t * c;
    ProsodyParams {
        pitch_shift: blend(neutral.pitch_shift, target.pitch_shift),
        volume_gain: blend(neutral.volume_gain, target.volume_gain),
        rate: blend(neutral.rate, target.rate),
    }
    .clamped()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn anger(confidence: f64) -> EmotionResult {
        let rest = (1.0 - confidence) / 4.0;
        EmotionResult::from_probabilities([rest, rest, rest, confidence, rest], vec![0.0; 5])
            .unwrap()
    }

    #[test]
    fn neutral_is_fixed_point() {
        let e = EmotionResult::from_probabilities([0.1, 0.1, 0.1, 0.1, 0.6], vec![0.0; 5]).unwrap();
        assert_eq!(prosody_for_emotion(&e, &ProsodyTable::english()), ProsodyParams::NEUTRAL);
    }

    #[test]
    fn anger_endpoint() {
        let p = prosody_for_emotion(&anger(1.0), &ProsodyTable::english());
        assert_eq!(p, ProsodyParams::new(-1.5, -3.0, 0.88).unwrap());
    }

    #[test]
    fn anger_half_confidence_interpolates() {
        let p = prosody_for_emotion(&anger(0.5), &ProsodyTable::english());
        assert!((p.pitch_shift + 0.75).abs() < 1e-12);
        assert!((p.volume_gain + 1.5).abs() < 1e-12);
        assert!((p.rate - 0.94).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(ProsodyParams::new(5.0, 0.0, 1.0).is_err());
        assert!(ProsodyParams::new(0.0, 0.0, 1.3).is_err());
        let c = ProsodyParams {
            pitch_shift: -9.0,
            volume_gain: 7.0,
            rate: f64::NAN,
        }
        .clamped();
        assert_eq!(c, ProsodyParams::new(-4.0, 6.0, 1.0).unwrap());
    }
}
