use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::features::{FeatureVector, Modality};
use super::label::EmotionLabel;
use super::EmotionError;
use crate::math;

/// Logits are clamped to `[-LOGIT_CLAMP, LOGIT_CLAMP]` before exponentiation.
pub const LOGIT_CLAMP: f64 = 1e4;

const REFERENCE_HEAD: &str = include_str!("../../data/reference_head.json");

/// Numerically stable softmax: clamp, subtract the maximum, exponentiate,
/// normalize.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>, EmotionError> {
    if logits.is_empty() {
        return Err(EmotionError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(EmotionError::NonFiniteInput);
    }
    let clamped: Vec<f64> = logits
        .iter()
        .map(|v| v.clamp(-LOGIT_CLAMP, LOGIT_CLAMP))
        .collect();
    let max = clamped.iter().cloned().fold(f64::MIN, f64::max);
    let exps: Vec<f64> = clamped.iter().map(|v| math::exp(v - max)).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Fully connected layer mapping a fused feature vector to one logit per
/// [`EmotionLabel`].
///
/// JSON form: `{"dims": [5, D], "weights": [[...D], ...5 rows], "bias": [...5]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HeadFile", into = "HeadFile")]
pub struct ClassifierHead {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct HeadFile {
    dims: [usize; 2],
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl TryFrom<HeadFile> for ClassifierHead {
    type Error = EmotionError;

    fn try_from(file: HeadFile) -> Result<Self, Self::Error> {
        let head = ClassifierHead::new(file.weights, file.bias)?;
        if file.dims != [EmotionLabel::COUNT, head.input_dim()] {
            return Err(EmotionError::InvalidHead(format!(
                "declared dims {:?} do not match weights {}x{}",
                file.dims,
                EmotionLabel::COUNT,
                head.input_dim()
            )));
        }
        Ok(head)
    }
}

impl From<ClassifierHead> for HeadFile {
    fn from(head: ClassifierHead) -> Self {
        HeadFile {
            dims: [EmotionLabel::COUNT, head.input_dim()],
            weights: head.weights,
            bias: head.bias,
        }
    }
}

impl ClassifierHead {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self, EmotionError> {
        if weights.len() != EmotionLabel::COUNT || bias.len() != EmotionLabel::COUNT {
            return Err(EmotionError::InvalidHead(format!(
                "expected {} rows, got {} weight rows and {} biases",
                EmotionLabel::COUNT,
                weights.len(),
                bias.len()
            )));
        }
        let dim = weights[0].len();
        if dim == 0 || weights.iter().any(|row| row.len() != dim) {
            return Err(EmotionError::InvalidHead("ragged or empty weight rows".into()));
        }
        if weights.iter().flatten().chain(&bias).any(|v| !v.is_finite()) {
            return Err(EmotionError::InvalidHead("non-finite parameter".into()));
        }
        Ok(Self { weights, bias })
    }

    /// The frozen 5x14 head for the reference extractors (8 audio + 6 text
    /// features).
    pub fn reference() -> Self {
        serde_json::from_str(REFERENCE_HEAD).expect("shipped reference head is valid")
    }

    pub fn from_json(json: &str) -> Result<Self, EmotionError> {
        serde_json::from_str(json).map_err(|e| EmotionError::InvalidHead(format!("{e}")))
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn logits(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

/// Probability distribution over [`EmotionLabel`]s with its argmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ResultFile", into = "ResultFile")]
pub struct EmotionResult {
    probabilities: [f64; EmotionLabel::COUNT],
    dominant: EmotionLabel,
    confidence: f64,
    logits: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ResultFile {
    probabilities: BTreeMap<EmotionLabel, f64>,
    dominant: EmotionLabel,
    confidence: f64,
    logits: Vec<f64>,
}

impl From<EmotionResult> for ResultFile {
    fn from(r: EmotionResult) -> Self {
        ResultFile {
            probabilities: EmotionLabel::ALL
                .iter()
                .map(|&l| (l, r.probabilities[l.index()]))
                .collect(),
            dominant: r.dominant,
            confidence: r.confidence,
            logits: r.logits,
        }
    }
}

impl TryFrom<ResultFile> for EmotionResult {
    type Error = EmotionError;

    fn try_from(file: ResultFile) -> Result<Self, Self::Error> {
        let mut probs = [0.0; EmotionLabel::COUNT];
        for label in EmotionLabel::ALL {
            probs[label.index()] = *file.probabilities.get(&label).ok_or(
                EmotionError::DimensionMismatch {
                    expected: EmotionLabel::COUNT,
                    found: file.probabilities.len(),
                },
            )?;
        }
        let result = EmotionResult::from_probabilities(probs, file.logits)?;
        if result.dominant != file.dominant {
            return Err(EmotionError::InvalidHead("dominant is not the argmax".into()));
        }
        Ok(result)
    }
}

impl EmotionResult {
    pub fn from_logits(logits: Vec<f64>) -> Result<Self, EmotionError> {
        if logits.len() != EmotionLabel::COUNT {
            return Err(EmotionError::DimensionMismatch {
                expected: EmotionLabel::COUNT,
                found: logits.len(),
            });
        }
        let p = softmax(&logits)?;
        let mut probs = [0.0; EmotionLabel::COUNT];
        probs.copy_from_slice(&p);
        Self::from_probabilities(probs, logits)
    }

    /// Builds a result from an explicit distribution; it must be finite,
    /// non-negative and sum to one within 1e-9.
    pub fn from_probabilities(
        probabilities: [f64; EmotionLabel::COUNT],
        logits: Vec<f64>,
    ) -> Result<Self, EmotionError> {
        if probabilities
            .iter()
            .any(|p| !p.is_finite() || !(0.0..=1.0).contains(p))
        {
            return Err(EmotionError::NonFiniteInput);
        }
        let sum: f64 = probabilities.iter().sum();
        if math::abs(sum - 1.0) > 1e-9 {
            return Err(EmotionError::InvalidHead(format!(
                "probabilities sum to {sum}"
            )));
        }
        // Strict comparison keeps the lowest index on ties.
        let mut best = 0;
        for i in 1..EmotionLabel::COUNT {
            if probabilities[i] > probabilities[best] {
                best = i;
            }
        }
        let dominant = EmotionLabel::ALL[best];
        Ok(Self {
            probabilities,
            dominant,
            confidence: probabilities[best],
            logits,
        })
    }

    pub fn probability(&self, label: EmotionLabel) -> f64 {
        self.probabilities[label.index()]
    }

    pub fn probabilities(&self) -> &[f64; EmotionLabel::COUNT] {
        &self.probabilities
    }

    pub fn dominant(&self) -> EmotionLabel {
        self.dominant
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// Total probability of the four negative categories.
    pub fn negative_mass(&self) -> f64 {
        EmotionLabel::NEGATIVE
            .iter()
            .map(|l| self.probabilities[l.index()])
            .sum()
    }
}

pub fn classify(fused: &FeatureVector, head: &ClassifierHead) -> Result<EmotionResult, EmotionError> {
    if fused.modality() != Modality::Fused {
        return Err(EmotionError::ModalityMismatch {
            expected: Modality::Fused,
            found: fused.modality(),
        });
    }
    if fused.dimension() != head.input_dim() {
        return Err(EmotionError::DimensionMismatch {
            expected: head.input_dim(),
            found: fused.dimension(),
        });
    }
    EmotionResult::from_logits(head.logits(fused.values()))
}
