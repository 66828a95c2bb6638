//! Core algorithms for InnerSelf, a conversational pipeline that listens to a
//! user, recognizes their emotional state, answers with positive self-talk and
//! speaks the answer back in a clone of the user's own voice.
//!
//! This crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, the network or a clock lives in the `innerself` crate.
//!
//! Module map:
//!
//! - [`emotion`]: acoustic and lexical features, fusion, the linear head and
//!   softmax producing an [`emotion::EmotionResult`].
//! - [`conversation`]: strategy routing, absolute-term reframing, prompt
//!   construction, response validation with bounded regeneration, and the
//!   emotion to prosody mapping.
//! - [`voice`]: enrollment checks, mel spectrograms, and the reference speaker
//!   encoder, synthesizer and vocoder, plus prosody rendering.
//! - [`storage`]: the fixed-capacity FIFO dialogue buffer, chunk encoding and
//!   the session record types.
//!
//! Neural backends plug in through the adapter traits ([`emotion::SpeechToText`],
//! [`conversation::LanguageModel`], [`voice::SpeakerEncoder`],
//! [`voice::Synthesizer`], [`voice::Vocoder`]). Every trait ships with a
//! deterministic reference implementation so the whole pipeline runs offline.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod adapter;
pub mod audio;
pub mod conversation;
pub mod dsp;
pub mod emotion;
pub mod lexicon;
pub mod storage;
pub mod voice;

mod math;

pub use adapter::AdapterError;
pub use audio::{AudioClip, AudioError, CANONICAL_SAMPLE_RATE};
