use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::Override;
use crate::typing::TypeTag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Where a diagnostic points: a box, optionally narrowed to one of its ports.
///
/// Document-level problems (syntax errors, bad version) use an empty box id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Locus {
    pub box_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port: Option<String>,
}

impl Locus {
    pub fn document() -> Self {
        Self {
            box_id: String::new(),
            port: None,
        }
    }

    pub fn of_box(box_id: impl Into<String>) -> Self {
        Self {
            box_id: box_id.into(),
            port: None,
        }
    }

    pub fn of_port(box_id: impl Into<String>, port: impl Into<String>) -> Self {
        Self {
            box_id: box_id.into(),
            port: Some(port.into()),
        }
    }

    pub fn is_document(&self) -> bool {
        self.box_id.is_empty()
    }
}

impl fmt::Display for Locus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.port, self.is_document()) {
            (_, true) => f.write_str("<document>"),
            (Some(p), false) => write!(f, "{}.{}", self.box_id, p),
            (None, false) => f.write_str(&self.box_id),
        }
    }
}

/// Override that would silence a typing warning: the two implicit types and,
/// when both are carried by a data output port, the anchors to write into
/// the pipeline's `overrides` list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestedOverride {
    pub left: TypeTag,
    pub right: TypeTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Override>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub locus: Locus,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggested_override: Option<SuggestedOverride>,
}

impl Diagnostic {
    pub fn error(code: &str, locus: Locus, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            code: code.to_string(),
            locus,
            message: message.into(),
            suggested_override: None,
        }
    }

    pub fn warning(code: &str, locus: Locus, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            code: code.to_string(),
            locus,
            message: message.into(),
            suggested_override: None,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}] {}: {}", self.severity, self.code, self.locus, self.message)?;
        if let Some(s) = &self.suggested_override {
            match &s.anchors {
                Some(anchors) => write!(f, "\n  suggested override: {anchors}")?,
                None => write!(f, "\n  suggested override: {} = {}", s.left, s.right)?,
            }
        }
        Ok(())
    }
}

pub fn count(diags: &[Diagnostic], severity: Severity) -> usize {
    diags.iter().filter(|d| d.severity == severity).count()
}
