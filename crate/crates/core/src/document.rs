//! Model document: the on-disk and on-the-wire form of a [`DecisionModel`].
//!
//! A document is pretty-printed JSON with a fixed key order. Judgments are
//! written symbolically (`eq` / `gt` / `lt`), one entry per unordered pair,
//! oriented by declaration order and listed context by context, so two
//! serializations of the same model are byte-identical and diff cleanly.
//!
//! ```json
//! {
//!   "format_version": "1",
//!   "name": "example",
//!   "theta": 3.0,
//!   "nodes": [
//!     { "id": "goal", "label": "Goal", "level": "goal", "parent": null },
//!     { "id": "cost", "label": "Cost", "level": "criterion", "parent": "goal" }
//!   ],
//!   "alternatives": [ { "id": "a", "label": "A" }, { "id": "b", "label": "B" } ],
//!   "judgments": [ { "context": "cost", "i": "a", "j": "b", "value": "gt" } ]
//! }
//! ```

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DecisionModel, Level, ModelBuilder, ModelError, TernaryValue};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentNode {
    pub id: String,
    pub label: String,
    pub level: String,
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentAlternative {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentJudgment {
    pub context: String,
    pub i: String,
    pub j: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub format_version: String,
    pub name: String,
    pub theta: f64,
    pub nodes: Vec<DocumentNode>,
    pub alternatives: Vec<DocumentAlternative>,
    #[serde(default)]
    pub judgments: Vec<DocumentJudgment>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocumentError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported format_version `{found}`; this build reads version {FORMAT_VERSION}. Re-export the model with a matching tool version or update `format_version` after checking the schema")]
    UnsupportedVersion { found: String },
    #[error("{locus}: {message}")]
    Field { locus: String, message: String },
    #[error("{locus}: {source}")]
    Model {
        locus: String,
        #[source]
        source: ModelError,
    },
}

impl DocumentError {
    pub fn code(&self) -> &'static str {
        match self {
            DocumentError::Syntax { .. } => "syntax",
            DocumentError::UnsupportedVersion { .. } => "unsupported_version",
            DocumentError::Field { .. } => "invalid_field",
            DocumentError::Model { source, .. } => source.code(),
        }
    }

    /// Human locus: `line:column` for syntax errors, a field path otherwise.
    pub fn locus(&self) -> String {
        match self {
            DocumentError::Syntax { line, column, .. } => format!("line {line}, column {column}"),
            DocumentError::UnsupportedVersion { .. } => "format_version".to_owned(),
            DocumentError::Field { locus, .. } | DocumentError::Model { locus, .. } => locus.clone(),
        }
    }

    fn field(locus: impl fmt::Display, message: impl Into<String>) -> Self {
        DocumentError::Field {
            locus: locus.to_string(),
            message: message.into(),
        }
    }

    fn model(locus: impl fmt::Display, source: ModelError) -> Self {
        DocumentError::Model {
            locus: locus.to_string(),
            source,
        }
    }
}

impl From<serde_json::Error> for DocumentError {
    fn from(e: serde_json::Error) -> Self {
        let message = e.to_string();
        // serde_json appends " at line L column C"; the position is kept separately.
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_owned(),
            None => message,
        };
        DocumentError::Syntax {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

impl ModelDocument {
    pub fn from_model(model: &DecisionModel) -> Self {
        let nodes = model
            .nodes()
            .iter()
            .filter(|n| n.level != Level::Alternative)
            .map(|n| DocumentNode {
                id: n.id.to_string(),
                label: n.label.clone(),
                level: n.level.as_str().to_owned(),
                parent: n.parent.as_ref().map(ToString::to_string),
            })
            .collect();
        let alternatives = model
            .alternatives()
            .iter()
            .map(|id| DocumentAlternative {
                id: id.to_string(),
                label: model.label(id.as_str()).unwrap_or_default().to_owned(),
            })
            .collect();
        let judgments = model
            .contexts()
            .iter()
            .flat_map(|ctx| {
                model
                    .judgments_in(ctx.id.as_str())
                    .expect("context from model")
                    .into_iter()
                    .map(move |(i, j, v)| DocumentJudgment {
                        context: ctx.id.to_string(),
                        i: i.to_string(),
                        j: j.to_string(),
                        value: v.code().to_owned(),
                    })
            })
            .collect();
        ModelDocument {
            format_version: FORMAT_VERSION.to_owned(),
            name: model.name().to_owned(),
            theta: model.theta().get(),
            nodes,
            alternatives,
            judgments,
        }
    }

    /// Text form; always ends with a newline.
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }

    /// Reads a document, checking syntax and `format_version` but not semantics.
    pub fn from_text(text: &str) -> Result<Self, DocumentError> {
        #[derive(Deserialize)]
        struct Probe {
            format_version: Option<serde_json::Value>,
        }
        let probe: Probe = serde_json::from_str(text)?;
        match probe.format_version {
            None => return Err(DocumentError::field("format_version", "missing field")),
            Some(serde_json::Value::String(v)) if v == FORMAT_VERSION => {}
            Some(serde_json::Value::String(v)) => return Err(DocumentError::UnsupportedVersion { found: v }),
            Some(other) => {
                return Err(DocumentError::field(
                    "format_version",
                    format!("expected a string, found {other}"),
                ))
            }
        }
        Ok(serde_json::from_str(text)?)
    }

    /// Converts to a model, enforcing minimum counts when `strict`.
    pub fn to_model(&self, strict: bool) -> Result<DecisionModel, DocumentError> {
        if self.format_version != FORMAT_VERSION {
            return Err(DocumentError::UnsupportedVersion {
                found: self.format_version.clone(),
            });
        }
        if !(self.theta.is_finite() && self.theta > 1.0) {
            return Err(DocumentError::model("theta", ModelError::InvalidTheta(self.theta)));
        }

        let mut ids = HashSet::new();
        let mut builder = ModelBuilder::new(self.name.clone()).theta(self.theta);
        for (k, n) in self.nodes.iter().enumerate() {
            if n.id.is_empty() {
                return Err(DocumentError::field(format!("nodes[{k}].id"), "must not be empty"));
            }
            if !ids.insert(n.id.as_str()) {
                return Err(DocumentError::model(
                    format!("nodes[{k}].id"),
                    ModelError::DuplicateNode(n.id.as_str().into()),
                ));
            }
            let level = match Level::parse(&n.level) {
                Some(Level::Alternative) | None => {
                    return Err(DocumentError::field(
                        format!("nodes[{k}].level"),
                        format!(
                            "`{}` is not one of \"goal\", \"criterion\", \"subcriterion\" (alternatives go in `alternatives`)",
                            n.level
                        ),
                    ))
                }
                Some(level) => level,
            };
            builder = builder.node(n.id.as_str(), n.label.clone(), level, n.parent.as_deref());
        }
        for (k, a) in self.alternatives.iter().enumerate() {
            if a.id.is_empty() {
                return Err(DocumentError::field(
                    format!("alternatives[{k}].id"),
                    "must not be empty",
                ));
            }
            if !ids.insert(a.id.as_str()) {
                return Err(DocumentError::model(
                    format!("alternatives[{k}].id"),
                    ModelError::DuplicateNode(a.id.as_str().into()),
                ));
            }
            builder = builder.alternative(a.id.as_str(), a.label.clone());
        }

        let built = if strict {
            builder.build()
        } else {
            builder.build_lenient()
        };
        let mut model = built.map_err(|e| {
            let locus = e
                .locus()
                .and_then(|id| self.nodes.iter().position(|n| n.id == id.as_str()))
                .map(|k| format!("nodes[{k}]"))
                .unwrap_or_else(|| match &e {
                    ModelError::TooFewAlternatives(_) => "alternatives".to_owned(),
                    _ => "nodes".to_owned(),
                });
            DocumentError::model(locus, e)
        })?;

        let mut seen = HashSet::new();
        for (k, jd) in self.judgments.iter().enumerate() {
            let value = TernaryValue::from_code(&jd.value).ok_or_else(|| {
                DocumentError::field(
                    format!("judgments[{k}].value"),
                    format!("`{}` is not one of \"eq\", \"gt\", \"lt\"", jd.value),
                )
            })?;
            for (field, id) in [("context", &jd.context), ("i", &jd.i), ("j", &jd.j)] {
                if model.node(id).is_none() {
                    return Err(DocumentError::model(
                        format!("judgments[{k}].{field}"),
                        ModelError::UnknownNode(id.as_str().into()),
                    ));
                }
            }
            let key = if jd.i <= jd.j {
                (jd.context.as_str(), jd.i.as_str(), jd.j.as_str())
            } else {
                (jd.context.as_str(), jd.j.as_str(), jd.i.as_str())
            };
            if !seen.insert(key) {
                return Err(DocumentError::field(
                    format!("judgments[{k}]"),
                    format!("pair ({}, {}) in `{}` is judged more than once", jd.i, jd.j, jd.context),
                ));
            }
            model
                .set_judgment(&jd.context, &jd.i, &jd.j, value)
                .map_err(|e| DocumentError::model(format!("judgments[{k}]"), e))?;
        }
        Ok(model)
    }
}

/// Deterministic text form of a model.
pub fn serialize(model: &DecisionModel) -> String {
    ModelDocument::from_model(model).to_text()
}

/// Parses and fully validates the structure of a model document
/// (judgments may still be incomplete).
pub fn parse(text: &str) -> Result<DecisionModel, DocumentError> {
    ModelDocument::from_text(text)?.to_model(true)
}

/// Like [`parse`] but accepts models below the minimum criterion and
/// alternative counts, so [`DecisionModel::validate`] can report them.
pub fn parse_lenient(text: &str) -> Result<DecisionModel, DocumentError> {
    ModelDocument::from_text(text)?.to_model(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
  "format_version": "1",
  "name": "small",
  "theta": 3.0,
  "nodes": [
    { "id": "g", "label": "Goal", "level": "goal", "parent": null },
    { "id": "a", "label": "A", "level": "criterion", "parent": "g" },
    { "id": "b", "label": "B", "level": "criterion", "parent": "g" }
  ],
  "alternatives": [ { "id": "x", "label": "X" }, { "id": "y", "label": "Y" } ],
  "judgments": [
    { "context": "g", "i": "b", "j": "a", "value": "lt" },
    { "context": "a", "i": "x", "j": "y", "value": "eq" }
  ]
}"#;

    #[test]
    fn parses_and_normalizes_orientation() {
        let m = parse(SMALL).unwrap();
        assert_eq!(m.contexts().len(), 3);
        assert_eq!(m.judgment("g", "a", "b").unwrap(), Some(TernaryValue::MoreImportant));
        let text = serialize(&m);
        assert!(text.contains(r#""i": "a","#));
        assert_eq!(serialize(&parse(&text).unwrap()), text);
    }

    #[test]
    fn bad_value_names_the_field() {
        let text = SMALL.replace(r#""value": "eq""#, r#""value": "maybe""#);
        let err = parse(&text).unwrap_err();
        assert_eq!(err.code(), "invalid_field");
        assert_eq!(err.locus(), "judgments[1].value");
        assert!(err.to_string().contains("maybe"));
    }

    #[test]
    fn duplicate_id_is_named() {
        let text = SMALL.replace(r#""id": "b", "label": "B""#, r#""id": "a", "label": "B""#);
        let err = parse(&text).unwrap_err();
        assert_eq!(err.code(), "duplicate_node");
        assert_eq!(err.locus(), "nodes[2].id");
        assert!(err.to_string().contains("`a`"));
    }

    #[test]
    fn version_mismatch_is_rejected_with_hint() {
        let text = SMALL.replace(r#""format_version": "1""#, r#""format_version": "2""#);
        let err = parse(&text).unwrap_err();
        assert_eq!(err.code(), "unsupported_version");
        assert!(err.to_string().contains("reads version 1"));
    }

    #[test]
    fn syntax_error_has_line_and_column() {
        let err = parse("{\n  \"format_version\": \"1\",\n  oops\n}").unwrap_err();
        match err {
            DocumentError::Syntax { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semantic_errors() {
        let theta = SMALL.replace(r#""theta": 3.0"#, r#""theta": 0.5"#);
        assert_eq!(parse(&theta).unwrap_err().code(), "invalid_theta");

        let unknown = SMALL.replace(r#""i": "x", "j": "y""#, r#""i": "x", "j": "zz""#);
        let err = parse(&unknown).unwrap_err();
        assert_eq!(err.code(), "unknown_node");
        assert_eq!(err.locus(), "judgments[1].j");

        let twice = SMALL.replace(
            r#""value": "eq" }"#,
            r#""value": "eq" },
    { "context": "a", "i": "y", "j": "x", "value": "eq" }"#,
        );
        assert_eq!(parse(&twice).unwrap_err().locus(), "judgments[2]");

        let extra = SMALL.replace(r#""name": "small","#, r#""name": "small", "colour": 1,"#);
        assert_eq!(parse(&extra).unwrap_err().code(), "syntax");
    }

    #[test]
    fn empty_judgments_round_trip() {
        let text = SMALL.replace(
            &SMALL[SMALL.find("\"judgments\"").unwrap()..SMALL.rfind('}').unwrap()],
            "\"judgments\": []\n",
        );
        let m = parse(&text).unwrap();
        assert_eq!(m.judgment_count(), 0);
        let out = serialize(&m);
        assert_eq!(parse(&out).unwrap(), m);
        assert_eq!(serialize(&parse(&out).unwrap()), out);
    }

    #[test]
    fn lenient_parse_accepts_single_alternative() {
        let text = SMALL.replace(r#", { "id": "y", "label": "Y" }"#, "");
        let text = text.replace(
            r#",
    { "context": "a", "i": "x", "j": "y", "value": "eq" }"#,
            "",
        );
        assert_eq!(parse(&text).unwrap_err().code(), "too_few_alternatives");
        let m = parse_lenient(&text).unwrap();
        assert!(!m.validate().is_empty());
    }
}
