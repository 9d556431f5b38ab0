//! Versioned JSON checkpoints. Every checkpoint is an envelope
//! `{version, kind, payload}` so files can be inspected and rejected
//! cheaply before deserializing the payload.

use crate::error::{Error, Result};
use crate::rbfnet::RbfNetModel;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Format version written by this build; bumped on incompatible payload
/// layout changes.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Envelope kind for a serialized [`RbfNetModel`].
pub const KIND_RBFNET: &str = "rbfnet_model";

#[derive(Debug, Serialize, Deserialize)]
struct Envelope {
    version: u32,
    kind: String,
    payload: serde_json::Value,
}

/// Serializes `value` into an envelope string with the given kind.
pub fn to_envelope_string<T: Serialize>(kind: &str, value: &T) -> Result<String> {
    let payload = serde_json::to_value(value)
        .map_err(|e| Error::Data(format!("checkpoint serialization failed: {}", e)))?;
    let env = Envelope { version: CHECKPOINT_VERSION, kind: kind.to_string(), payload };
    serde_json::to_string(&env)
        .map_err(|e| Error::Data(format!("checkpoint serialization failed: {}", e)))
}

/// Parses an envelope string, checking version and kind before touching
/// the payload.
pub fn from_envelope_str<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T> {
    let env: Envelope = serde_json::from_str(text)
        .map_err(|e| Error::InputFormat(format!("not a checkpoint envelope: {}", e)))?;
    if env.version != CHECKPOINT_VERSION {
        return Err(Error::Validation(format!(
            "checkpoint version {} unsupported (this build reads version {})",
            env.version, CHECKPOINT_VERSION
        )));
    }
    if env.kind != kind {
        return Err(Error::Validation(format!(
            "checkpoint kind {:?} does not match expected {:?}",
            env.kind, kind
        )));
    }
    serde_json::from_value(env.payload)
        .map_err(|e| Error::InputFormat(format!("checkpoint payload malformed: {}", e)))
}

/// Writes a model checkpoint to `path`.
pub fn save_model(model: &RbfNetModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_envelope_string(KIND_RBFNET, model)?)?;
    Ok(())
}

/// Reads a model checkpoint from `path`.
pub fn load_model(path: &Path) -> Result<RbfNetModel> {
    from_envelope_str(KIND_RBFNET, &std::fs::read_to_string(path)?)
}

/// Human-readable summary of a checkpoint file without assuming its kind.
#[derive(Debug, Clone, Serialize)]
pub struct CheckpointInfo {
    pub version: u32,
    pub kind: String,
    pub target_id: Option<String>,
    pub horizon: Option<usize>,
    pub prototypes: Option<usize>,
    pub head_updates: Option<u64>,
}

/// Inspects a checkpoint file: envelope header plus, for model
/// checkpoints, a few payload fields.
pub fn inspect(path: &Path) -> Result<CheckpointInfo> {
    let text = std::fs::read_to_string(path)?;
    let env: Envelope = serde_json::from_str(&text)
        .map_err(|e| Error::InputFormat(format!("not a checkpoint envelope: {}", e)))?;
    let mut info = CheckpointInfo {
        version: env.version,
        kind: env.kind.clone(),
        target_id: None,
        horizon: None,
        prototypes: None,
        head_updates: None,
    };
    if env.kind == KIND_RBFNET && env.version == CHECKPOINT_VERSION {
        let model: RbfNetModel = serde_json::from_value(env.payload)
            .map_err(|e| Error::InputFormat(format!("checkpoint payload malformed: {}", e)))?;
        info.target_id = Some(model.target_id.clone());
        info.horizon = Some(model.horizon);
        info.prototypes = Some(model.prototypes.prototypes.len());
        info.head_updates = Some(model.head.n_updates);
    }
    Ok(info)
}
