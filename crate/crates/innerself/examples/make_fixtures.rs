//! Regenerates the WAV + transcript fixtures under `fixtures/`.
//!
//! cargo run -p innerself --example make_fixtures [-- <dir>]

use std::path::PathBuf;

use innerself::synthetic::{render_speech, VoiceStyle};
use innerself::wav;
use innerself_core::emotion::EmotionLabel;
use innerself_core::AudioClip;

const UTTERANCE_SECONDS: f64 = 4.0;
const ENROLL_SECONDS: f64 = 5.0;

fn main() -> anyhow::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&dir)?;

    let utterances = [
        ("angry_loud", EmotionLabel::Anger, "I am so angry and frustrated, nothing works and this is unfair!"),
        ("anxious_fast", EmotionLabel::Anxiety, "I am worried and nervous that I will fail the exam tomorrow."),
        ("sad_soft", EmotionLabel::Sadness, "I feel so alone and tired, and the evenings seem empty lately."),
        ("shame_quiet", EmotionLabel::ShameRegret, "I regret what I said to my friend and I feel ashamed."),
        ("neutral_calm", EmotionLabel::Neutral, "Today I went for a walk and then cooked dinner at home."),
    ];
    for (i, (name, label, text)) in utterances.iter().enumerate() {
        let clip = render_speech(&VoiceStyle::preset(*label), UTTERANCE_SECONDS, 100 + i as u64);
        write(&dir, name, &clip, Some(text))?;
    }

    let enrollment = [
        "The morning light came through the window while I made some tea.",
        "We walked along the river and watched the boats drift slowly past.",
        "My neighbor grows tomatoes in small pots on her sunny balcony outside.",
    ];
    for (i, text) in enrollment.iter().enumerate() {
        let clip = render_speech(&VoiceStyle::reading(), ENROLL_SECONDS, 200 + i as u64);
        write(&dir, &format!("enroll_{}", i + 1), &clip, Some(text))?;
    }

    write(&dir, "silence", &AudioClip::silence(16_000, 16_000)?, None)?;
    Ok(())
}

fn write(dir: &std::path::Path, name: &str, clip: &AudioClip, text: Option<&str>) -> anyhow::Result<()> {
    wav::write_wav(&dir.join(format!("{name}.wav")), clip)?;
    if let Some(t) = text {
        std::fs::write(dir.join(format!("{name}.txt")), format!("{t}\n"))?;
    }
    println!("wrote {name}");
    Ok(())
}
