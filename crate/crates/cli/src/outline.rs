//! Indented hierarchy outlines for `tahp new`.
//!
//! ```text
//! # comments and blank lines are ignored
//! infosec: Information Security Evaluation
//!   management: Management
//!     policy: Security policy
//!   culture: Culture
//! alternatives
//!   confidentiality: Confidentiality
//!   Integrity
//! ```
//!
//! The first top-level line is the goal; everything indented under it forms
//! the criteria tree. A top-level `alternatives` line lists the alternatives.
//! Items are `id: Label` or a bare label, whose id is derived from it.

use tahp_core::{DecisionModel, Level, ModelBuilder, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub struct OutlineError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for OutlineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug)]
pub enum Error {
    Outline(OutlineError),
    Model(ModelError),
}

fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.trim().chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    out.trim_end_matches('-').to_owned()
}

fn item(text: &str) -> (String, String) {
    match text.split_once(':') {
        Some((id, label)) if !id.trim().is_empty() && !id.trim().contains(' ') => {
            let label = label.trim();
            let label = if label.is_empty() { id.trim() } else { label };
            (id.trim().to_owned(), label.to_owned())
        }
        _ => (slug(text), text.trim().to_owned()),
    }
}

pub fn parse(name: &str, theta: f64, text: &str) -> Result<DecisionModel, Error> {
    let err = |line: usize, message: &str| {
        Error::Outline(OutlineError {
            line,
            message: message.to_owned(),
        })
    };
    let mut builder = ModelBuilder::new(name).theta(theta);
    // Open ancestors as (indent, id).
    let mut stack: Vec<(usize, String)> = Vec::new();
    let mut in_alternatives = false;
    let mut seen_goal = false;

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let content = raw.trim_end();
        if content.trim().is_empty() || content.trim_start().starts_with('#') {
            continue;
        }
        if content.contains('\t') {
            return Err(err(line_no, "indent with spaces, not tabs"));
        }
        let indent = content.len() - content.trim_start().len();
        let text = content.trim();

        if indent == 0 {
            stack.clear();
            if text.trim_end_matches(':').eq_ignore_ascii_case("alternatives") {
                in_alternatives = true;
                continue;
            }
            if seen_goal {
                return Err(err(line_no, "only one goal line is allowed at the top level"));
            }
            in_alternatives = false;
            seen_goal = true;
            let (id, label) = item(text);
            builder = builder.goal(id.as_str(), label);
            stack.push((0, id));
            continue;
        }

        let (id, label) = item(text);
        if id.is_empty() {
            return Err(err(line_no, "item needs an id or a label"));
        }
        if in_alternatives {
            builder = builder.alternative(id, label);
            continue;
        }
        if stack.is_empty() {
            return Err(err(line_no, "indented item before any goal line"));
        }
        while stack.last().is_some_and(|(i, _)| *i >= indent) {
            stack.pop();
        }
        let Some((_, parent)) = stack.last().cloned() else {
            return Err(err(line_no, "indentation does not match any parent"));
        };
        let level = if stack.len() == 1 {
            Level::Criterion
        } else {
            Level::SubCriterion
        };
        builder = builder.node(id.as_str(), label, level, Some(parent.as_str()));
        stack.push((indent, id));
    }
    if !seen_goal {
        return Err(err(1, "outline has no goal line"));
    }
    builder.build().map_err(Error::Model)
}
