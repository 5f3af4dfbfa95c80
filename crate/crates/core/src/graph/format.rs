//! Pipeline file format: a strict JSON document (see `docs/pipeline-format.md`).

use thiserror::Error;

use super::{structural_errors, PipelineGraph, StructuralError};
use crate::diagnostics::{Diagnostic, Locus};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid pipeline: {}", first_message(.0))]
    Invalid(Vec<StructuralError>),
}

fn first_message(errors: &[StructuralError]) -> String {
    match errors {
        [] => String::new(),
        [only] => only.to_string(),
        [first, rest @ ..] => format!("{first} (and {} more)", rest.len()),
    }
}

impl ParseError {
    pub fn to_diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            ParseError::Syntax { .. } => {
                vec![Diagnostic::error("E-syntax", Locus::document(), self.to_string())]
            }
            ParseError::Invalid(errors) => errors.iter().map(|e| e.to_diagnostic()).collect(),
        }
    }

    pub fn structural(&self) -> &[StructuralError] {
        match self {
            ParseError::Invalid(errors) => errors,
            ParseError::Syntax { .. } => &[],
        }
    }
}

/// Reads the document without checking structural invariants.
pub fn parse_document(text: &str) -> Result<PipelineGraph, ParseError> {
    serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })
}

// serde_json appends " at line X column Y" to its messages.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}

/// Reads the document and checks every structural invariant.
pub fn parse_pipeline(text: &str) -> Result<PipelineGraph, ParseError> {
    let graph = parse_document(text)?;
    let errors = structural_errors(&graph);
    if errors.is_empty() {
        Ok(graph)
    } else {
        Err(ParseError::Invalid(errors))
    }
}

/// Canonical text of a graph: pretty-printed JSON with a trailing newline.
pub fn serialize_pipeline(graph: &PipelineGraph) -> String {
    let mut text = serde_json::to_string_pretty(graph).expect("pipeline graphs always serialize");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    const EMPTY: &str = r#"{"version": "1", "name": "empty", "boxes": [], "edges": [], "overrides": []}"#;

    #[test]
    fn empty_graph_is_valid() {
        let g = parse_pipeline(EMPTY).unwrap();
        assert!(g.boxes.is_empty() && g.edges.is_empty());
        assert_eq!(
            serialize_pipeline(&g),
            "{\n  \"version\": \"1\",\n  \"name\": \"empty\",\n  \"boxes\": [],\n  \"edges\": [],\n  \"overrides\": []\n}\n"
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"version": "1", "name": "x", "boxes": [], "edges": [], "overrides": [], "extra": 1}"#;
        let err = parse_document(text).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, .. }), "{err}");
        assert!(err.to_string().contains("extra"));
    }

    #[test]
    fn missing_required_field() {
        let text = r#"{"version": "1", "name": "x", "edges": []}"#;
        assert!(parse_document(text).unwrap_err().to_string().contains("boxes"));
        let minimal = parse_document(r#"{"version": "1", "name": "x", "boxes": []}"#).unwrap();
        assert!(minimal.edges.is_empty() && minimal.overrides.is_empty());
    }

    #[test]
    fn syntax_error_reports_position() {
        let text = "{\n  \"version\": \"1\",\n  \"name\": oops\n}";
        match parse_document(text).unwrap_err() {
            ParseError::Syntax { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_port_reference_is_a_syntax_error() {
        let text = r#"{"version": "1", "name": "x", "boxes": [],
            "edges": [{"from": "nodot", "to": "a.b"}], "overrides": []}"#;
        assert!(matches!(
            parse_document(text).unwrap_err(),
            ParseError::Syntax { line: 2, .. }
        ));
    }

    #[test]
    fn layout_sidecar_is_preserved() {
        let text = r#"{"version": "1", "name": "x", "boxes": [], "edges": [], "overrides": [],
            "layout": {"b": {"x": 10, "y": 20.5}}}"#;
        let g = parse_pipeline(text).unwrap();
        assert_eq!(parse_pipeline(&serialize_pipeline(&g)).unwrap(), g);
    }
}
