use crate::model::Std;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const STD_FORMAT: &str = "std/1";

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("unsupported format `{0}`, expected `std/1`")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    std: Std,
}

pub fn export_json(std: &Std) -> String {
    serde_json::to_string_pretty(&Envelope {
        format: STD_FORMAT.into(),
        std: std.clone(),
    })
    .expect("Std serializes")
}

pub fn import_json(text: &str) -> Result<Std, JsonError> {
    let env: Envelope = serde_json::from_str(text)?;
    if env.format != STD_FORMAT {
        return Err(JsonError::Format(env.format));
    }
    Ok(env.std)
}
