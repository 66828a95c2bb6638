use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::EmotionError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Audio,
    Text,
    Fused,
}

/// A finite, fixed-length feature vector tagged with the modality it came
/// from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
    modality: Modality,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, modality: Modality) -> Result<Self, EmotionError> {
        if values.is_empty() {
            return Err(EmotionError::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmotionError::NonFiniteInput);
        }
        Ok(Self { values, modality })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }
}

/// Describes a feature backend. Reference extractors have no endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterDescriptor {
    pub name: String,
    pub feature_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

/// Concatenation fusion: audio values first, then text values.
pub fn fuse(audio: &FeatureVector, text: &FeatureVector) -> Result<FeatureVector, EmotionError> {
    if audio.modality != Modality::Audio {
        return Err(EmotionError::ModalityMismatch {
            expected: Modality::Audio,
            found: audio.modality,
        });
    }
    if text.modality != Modality::Text {
        return Err(EmotionError::ModalityMismatch {
            expected: Modality::Text,
            found: text.modality,
        });
    }
    let mut values = Vec::with_capacity(audio.dimension() + text.dimension());
    values.extend_from_slice(&audio.values);
    values.extend_from_slice(&text.values);
    Ok(FeatureVector {
        values,
        modality: Modality::Fused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn fuse_concatenates_audio_first() {
        let a = FeatureVector::new((0..8).map(f64::from).collect(), Modality::Audio).unwrap();
        let t = FeatureVector::new(vec![0.5; 6], Modality::Text).unwrap();
        let f = fuse(&a, &t).unwrap();
        assert_eq!(f.dimension(), 14);
        assert_eq!(f.modality(), Modality::Fused);
        assert_eq!(&f.values()[..8], a.values());
        assert_eq!(&f.values()[8..], t.values());
    }

    #[test]
    fn fuse_rejects_wrong_modalities() {
        let a = FeatureVector::new(vec![1.0; 8], Modality::Audio).unwrap();
        assert_eq!(
            fuse(&a, &a),
            Err(EmotionError::ModalityMismatch {
                expected: Modality::Text,
                found: Modality::Audio
            })
        );
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            FeatureVector::new(vec![f64::INFINITY], Modality::Text),
            Err(EmotionError::NonFiniteInput)
        );
    }
}
