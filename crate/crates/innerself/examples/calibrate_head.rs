//! Fits the reference classifier head on synthetic speech and writes it as
//! JSON.
//!
//! cargo run --release -p innerself --example calibrate_head [-- <out.json>]
//!
//! The head is a diagonal linear discriminant: features are standardized,
//! each class gets weights mu_c / var and bias -|mu_c|^2 / (2 var), and the
//! standardization is folded back into the weights. A small grid over an
//! overall temperature and a text-feature weight picks the setting with the
//! best held-out log-likelihood.

use std::path::PathBuf;

use innerself::synthetic::{render_speech, VoiceStyle};
use innerself_core::conversation::Lexicons;
use innerself_core::emotion::{
    classify, extract_audio_features, extract_text_features, fuse, ClassifierHead, EmotionLabel,
    AUDIO_FEATURE_DIM,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const TRAIN_PER_CLASS: usize = 40;
const TEST_PER_CLASS: usize = 15;
const SECONDS: f64 = 3.0;

fn sentences(label: EmotionLabel) -> &'static [&'static str] {
    match label {
        EmotionLabel::Anger => &[
            "I am so angry, nothing ever goes right for me!",
            "This is unfair and I hate how they treated me!",
            "I am furious that no one listens to me at work.",
            "Everything is a mess and I am mad about it!",
            "I always get blamed and it makes me so angry.",
            "They ruined my plans again and I am irritated.",
        ],
        EmotionLabel::Anxiety => &[
            "I am worried I will fail and I can never catch up.",
            "I feel nervous and tense about the interview tomorrow.",
            "What if everything goes wrong, I am so scared?",
            "I can't stop worrying that I will be late again.",
            "I panic every time I think about the deadline.",
            "I feel uneasy and restless, what if I fail?",
        ],
        EmotionLabel::Sadness => &[
            "I feel so alone and sad these days.",
            "I am tired and empty and I miss my old friends.",
            "Everything feels pointless and I just want to cry.",
            "I am heartbroken since she moved away.",
            "I feel lonely and hopeless in the evenings.",
            "I am unhappy and exhausted all the time.",
        ],
        EmotionLabel::ShameRegret => &[
            "I regret what I said and I feel ashamed.",
            "I am so embarrassed about my mistake at the meeting.",
            "I feel guilty for letting my family down.",
            "I am sorry, I was stupid and foolish yesterday.",
            "I feel humiliated and I regret sending that message.",
            "I am ashamed that I did not help my friend.",
        ],
        EmotionLabel::Neutral => &[
            "Today I went for a walk and cooked dinner.",
            "I read a book in the afternoon and then did some shopping.",
            "The weather was mild so I worked in the garden.",
            "I had a meeting at ten and lunch with a colleague.",
            "I cleaned the kitchen and called my sister.",
            "I took the bus to town and bought some bread.",
        ],
    }
}

struct Sample {
    x: Vec<f64>,
    y: usize,
}

fn sample(label: EmotionLabel, rng: &mut StdRng, lex: &Lexicons) -> Sample {
    let style = VoiceStyle::preset(label).perturbed(rng);
    let clip = render_speech(&style, SECONDS, rng.gen());
    let pool = sentences(label);
    let text = pool[rng.gen_range(0..pool.len())];
    let audio = extract_audio_features(&clip).expect("rendered speech is valid");
    let words = extract_text_features(text, &lex.valence, &lex.absolutes).expect("non-empty text");
    Sample {
        x: fuse(&audio, &words).expect("dimensions match").values().to_vec(),
        y: label.index(),
    }
}

fn dataset(n: usize, rng: &mut StdRng, lex: &Lexicons) -> Vec<Sample> {
    EmotionLabel::ALL
        .iter()
        .flat_map(|&l| (0..n).map(move |_| l))
        .collect::<Vec<_>>()
        .into_iter()
        .map(|l| sample(l, rng, lex))
        .collect()
}

fn fit(train: &[Sample], temperature: f64, text_weight: f64) -> ClassifierHead {
    let d = train[0].x.len();
    let k = EmotionLabel::COUNT;
    let n = train.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| train.iter().map(|s| s.x[j]).sum::<f64>() / n).collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| {
            let v = train.iter().map(|s| (s.x[j] - mean[j]).powi(2)).sum::<f64>() / n;
            v.sqrt().max(1e-9)
        })
        .collect();
    let z = |s: &Sample, j: usize| (s.x[j] - mean[j]) / sd[j];

    let mut mu = vec![vec![0.0; d]; k];
    let mut counts = vec![0.0; k];
    for s in train {
        counts[s.y] += 1.0;
        for j in 0..d {
            mu[s.y][j] += z(s, j);
        }
    }
    for c in 0..k {
        mu[c].iter_mut().for_each(|m| *m /= counts[c]);
    }
    let var: Vec<f64> = (0..d)
        .map(|j| {
            let ss: f64 = train.iter().map(|s| (z(s, j) - mu[s.y][j]).powi(2)).sum();
            (ss / n).max(1e-3)
        })
        .collect();

    let mut weights = vec![vec![0.0; d]; k];
    let mut bias = vec![0.0; k];
    for c in 0..k {
        for j in 0..d {
            let group = if j < AUDIO_FEATURE_DIM { 1.0 } else { text_weight };
            let w = temperature * group * mu[c][j] / var[j];
            bias[c] -= temperature * group * mu[c][j] * mu[c][j] / (2.0 * var[j]);
            // Fold the standardization back in.
            weights[c][j] = w / sd[j];
            bias[c] -= w * mean[j] / sd[j];
        }
    }
    ClassifierHead::new(weights, bias).expect("finite parameters")
}

fn score(head: &ClassifierHead, data: &[Sample]) -> (f64, f64) {
    let mut correct = 0usize;
    let mut loglik = 0.0;
    for s in data {
        let fused = innerself_core::emotion::FeatureVector::new(s.x.clone(), innerself_core::emotion::Modality::Fused)
            .expect("finite");
        let r = classify(&fused, head).expect("valid head");
        if r.dominant().index() == s.y {
            correct += 1;
        }
        loglik += r.probabilities()[s.y].max(1e-300).ln();
    }
    (correct as f64 / data.len() as f64, loglik / data.len() as f64)
}

fn main() -> anyhow::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/reference_head.json")
    });
    let lex = Lexicons::english();
    let mut rng = StdRng::seed_from_u64(0x1225_5e1f);
    let train = dataset(TRAIN_PER_CLASS, &mut rng, &lex);
    let test = dataset(TEST_PER_CLASS, &mut rng, &lex);

    let mut best: Option<(f64, f64, f64, f64)> = None;
    for &t in &[0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0] {
        for &w in &[0.5, 1.0, 2.0] {
            let head = fit(&train, t, w);
            let (acc, ll) = score(&head, &test);
            println!("temperature {t:<5} text weight {w:<4} accuracy {acc:.3} log-likelihood {ll:.4}");
            if best.map_or(true, |b| ll > b.3) {
                best = Some((t, w, acc, ll));
            }
        }
    }
    let (t, w, acc, ll) = best.expect("grid is not empty");
    println!("chose temperature {t}, text weight {w}: accuracy {acc:.3}, log-likelihood {ll:.4}");
    let head = fit(&train, t, w);
    std::fs::write(&out, serde_json::to_string_pretty(&head)? + "\n")?;
    println!("wrote {}", out.display());
    Ok(())
}
