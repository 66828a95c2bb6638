//! Session export for clinicians and the matching import.

use innerself_core::storage::{emotion_trajectory, ActionPlan, TrajectoryPoint, TurnRecord};
use serde::{Deserialize, Serialize};

use crate::session::{open_session, Session};
use crate::store::{SessionMeta, Store, StoreError};

pub const EXPORT_SCHEMA: &str = "innerself-export/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportDocument {
    pub schema: String,
    pub session: SessionMeta,
    pub has_voice_profile: bool,
    pub turns: Vec<TurnRecord>,
    pub trajectory: Vec<TrajectoryPoint>,
    pub plans: Vec<ActionPlan>,
}

/// Builds the export document. Audio references are dropped unless
/// `include_audio` is set; the audio files themselves are never embedded.
pub fn export_session(store: &dyn Store, session_id: &str, include_audio: bool) -> Result<ExportDocument, StoreError> {
    let session = store.session_meta(session_id)?;
    let mut turns = store.turns(session_id)?;
    if !include_audio {
        for t in &mut turns {
            t.audio_ref = None;
        }
    }
    Ok(ExportDocument {
        schema: EXPORT_SCHEMA.to_string(),
        has_voice_profile: store.load_profile(session_id)?.is_some(),
        trajectory: emotion_trajectory(&turns),
        plans: store.load_plans(session_id)?,
        session,
        turns,
    })
}

/// Recreates an exported session in `store`. Buffer and chunks are rebuilt
/// from the turn log, so the imported session reconstructs to the same
/// transcript as the original. The voice profile is not part of an export.
pub fn import_session(store: &dyn Store, doc: &ExportDocument) -> Result<Session, StoreError> {
    if doc.schema != EXPORT_SCHEMA {
        return Err(StoreError::Corrupt(format!("unsupported export schema `{}`", doc.schema)));
    }
    TurnRecord::validate_sequence(&doc.turns)?;
    if let Some(t) = doc.turns.iter().find(|t| t.session_id != doc.session.session_id) {
        return Err(StoreError::Corrupt(format!(
            "turn {} belongs to session `{}`",
            t.turn_index, t.session_id
        )));
    }
    for p in &doc.plans {
        p.validate()?;
    }
    let id = &doc.session.session_id;
    store.create_session(&doc.session)?;
    store.append_turns(id, &doc.turns)?;
    store.save_plans(id, &doc.plans)?;
    open_session(store, id)
}
