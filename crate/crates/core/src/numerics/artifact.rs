//! Function artifact files: a versioned, checksummed text envelope around
//! the JSON form of a [`FunctionValue`]. Layout in `docs/function-artifact.md`.

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::FunctionValue;

pub const ARTIFACT_MAGIC: &str = "FDF-FUNCTION";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("not a function artifact (missing `{ARTIFACT_MAGIC}` header)")]
    NotAnArtifact,
    #[error("unsupported artifact version {found} (this engine reads version {ARTIFACT_VERSION})")]
    VersionMismatch { found: String },
    #[error("corrupt artifact: checksum mismatch (recorded {recorded}, computed {computed})")]
    ChecksumMismatch { recorded: String, computed: String },
    #[error("corrupt artifact: {0}")]
    Corrupt(String),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `FDF-FUNCTION 1\nsha256 <hex of body>\n<body>` where the body is the
/// pretty-printed JSON of the function followed by a newline. Floats are
/// written in shortest round-trip form, so [`load_function`] restores every
/// bit.
pub fn save_function(f: &FunctionValue) -> Vec<u8> {
    let mut body = serde_json::to_string_pretty(f).expect("function values always serialize");
    body.push('\n');
    let mut out = format!(
        "{ARTIFACT_MAGIC} {ARTIFACT_VERSION}\nsha256 {}\n",
        sha256_hex(body.as_bytes())
    )
    .into_bytes();
    out.extend_from_slice(body.as_bytes());
    out
}

pub fn load_function(bytes: &[u8]) -> Result<FunctionValue, ArtifactError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ArtifactError::Corrupt("not UTF-8".into()))?;
    let (header, rest) = text.split_once('\n').ok_or(ArtifactError::NotAnArtifact)?;
    let version = header
        .strip_prefix(ARTIFACT_MAGIC)
        .and_then(|v| v.strip_prefix(' '))
        .ok_or(ArtifactError::NotAnArtifact)?;
    if version != ARTIFACT_VERSION.to_string() {
        return Err(ArtifactError::VersionMismatch {
            found: version.to_string(),
        });
    }
    let (sum_line, body) = rest
        .split_once('\n')
        .ok_or_else(|| ArtifactError::Corrupt("missing checksum line".into()))?;
    let recorded = sum_line
        .strip_prefix("sha256 ")
        .ok_or_else(|| ArtifactError::Corrupt("malformed checksum line".into()))?;
    let computed = sha256_hex(body.as_bytes());
    if recorded != computed {
        return Err(ArtifactError::ChecksumMismatch {
            recorded: recorded.to_string(),
            computed,
        });
    }
    let f: FunctionValue = serde_json::from_str(body).map_err(|e| ArtifactError::Corrupt(e.to_string()))?;
    f.check().map_err(|e| ArtifactError::Corrupt(e.to_string()))?;
    Ok(f)
}
