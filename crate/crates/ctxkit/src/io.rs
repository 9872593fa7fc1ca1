//! Model documents: parsing, validation, and canonical serialization.
//!
//! Two input syntaxes are accepted and autodetected: a JSON document (first
//! non-whitespace byte `{`) and a line-oriented text form. Output is always
//! canonical pretty JSON with sorted keys, so re-emitting a document is
//! byte-stable.
//!
//! The text form, `#` starting comments:
//!
//! ```text
//! measurement a1: 0 1
//! measurement b1: 0 1
//! context a1 b1: 0,0 0,1 1,1
//! ```
//!
//! A `context` line lists measurements, then the possible outcome tuples
//! aligned with the measurement order as written. Everything is reordered
//! canonically during validation.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_model, EmpiricalModel};
use crate::scenario::{build_scenario, CtxIdx, Scenario, Section};

/// Version tag written to and required from every JSON document.
pub const FORMAT_VERSION: u32 = 1;

/// The serialized form of a model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub measurements: Vec<String>,
    pub outcomes: BTreeMap<String, Vec<String>>,
    pub contexts: Vec<Vec<String>>,
    /// Keyed by canonical context key (sorted members, comma-joined); values
    /// are possible outcome tuples, comma-joined in member order.
    pub support: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

/// A parsed and validated model plus its document metadata.
#[derive(Debug)]
pub struct ParsedModel {
    pub model: EmpiricalModel,
    pub metadata: BTreeMap<String, String>,
}

const KNOWN_FIELDS: &[&str] = &[
    "format_version",
    "measurements",
    "outcomes",
    "contexts",
    "support",
    "metadata",
];

/// Parses a document from text, autodetecting the syntax.
pub fn parse_document(text: &str, strict: bool) -> Result<ModelDocument> {
    if text.trim_start().starts_with('{') {
        parse_json_document(text, strict)
    } else {
        parse_text_document(text)
    }
}

fn parse_json_document(text: &str, strict: bool) -> Result<ModelDocument> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        col: e.column(),
        msg: e.to_string(),
    })?;
    if strict {
        if let Some(object) = value.as_object() {
            for key in object.keys() {
                if !KNOWN_FIELDS.contains(&key.as_str()) {
                    return Err(Error::UnknownField { field: key.clone() });
                }
            }
        }
    }
    let document: ModelDocument =
        serde_json::from_value(value).map_err(|e| Error::Syntax {
            line: 0,
            col: 0,
            msg: e.to_string(),
        })?;
    if document.format_version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: document.format_version,
            expected: FORMAT_VERSION,
        });
    }
    Ok(document)
}

fn parse_text_document(text: &str) -> Result<ModelDocument> {
    let mut measurements = Vec::new();
    let mut outcomes = BTreeMap::new();
    let mut contexts: Vec<Vec<String>> = Vec::new();
    let mut support: BTreeMap<String, Vec<String>> = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (head, tail) = content.split_once(':').ok_or(Error::Syntax {
            line,
            col: raw.len(),
            msg: "expected `measurement <id>: ...` or `context <ids>: ...`".into(),
        })?;
        let mut head_words = head.split_whitespace();
        let keyword = head_words.next().unwrap_or("");
        let names: Vec<String> = head_words.map(str::to_string).collect();
        let items: Vec<String> = tail.split_whitespace().map(str::to_string).collect();
        match keyword {
            "measurement" => {
                if names.len() != 1 {
                    return Err(Error::Syntax {
                        line,
                        col: 1,
                        msg: "measurement lines declare exactly one identifier".into(),
                    });
                }
                if items.is_empty() {
                    return Err(Error::Syntax {
                        line,
                        col: raw.len(),
                        msg: format!("measurement {} declares no outcomes", names[0]),
                    });
                }
                if outcomes.insert(names[0].clone(), items).is_some() {
                    return Err(Error::Syntax {
                        line,
                        col: 1,
                        msg: format!("measurement {} declared twice", names[0]),
                    });
                }
                measurements.push(names[0].clone());
            }
            "context" => {
                if names.is_empty() {
                    return Err(Error::Syntax {
                        line,
                        col: 1,
                        msg: "context lines list at least one measurement".into(),
                    });
                }
                if items.is_empty() {
                    return Err(Error::Syntax {
                        line,
                        col: raw.len(),
                        msg: "context declares no possible outcome tuples".into(),
                    });
                }
                let key = {
                    let mut k = names.clone();
                    k.sort();
                    k.join(",")
                };
                let entry = support.entry(key).or_default();
                for tuple in items {
                    let parts: Vec<&str> = tuple.split(',').collect();
                    if parts.len() != names.len() {
                        return Err(Error::Syntax {
                            line,
                            col: 1,
                            msg: format!(
                                "tuple {tuple} has {} entries for {} measurements",
                                parts.len(),
                                names.len()
                            ),
                        });
                    }
                    // Realign the tuple with the sorted member order.
                    let mut labelled: Vec<(&String, &str)> =
                        names.iter().zip(parts).collect();
                    labelled.sort();
                    let canonical = labelled
                        .into_iter()
                        .map(|(_, v)| v)
                        .collect::<Vec<_>>()
                        .join(",");
                    entry.push(canonical);
                }
                contexts.push(names);
            }
            other => {
                return Err(Error::Syntax {
                    line,
                    col: 1,
                    msg: format!("unknown directive {other}"),
                });
            }
        }
    }
    Ok(ModelDocument {
        format_version: FORMAT_VERSION,
        measurements,
        outcomes,
        contexts,
        support,
        metadata: BTreeMap::new(),
    })
}

/// Builds the scenario and model described by a document.
pub fn model_from_document(document: &ModelDocument) -> Result<ParsedModel> {
    let scenario = build_scenario(
        &document.measurements,
        &document.outcomes,
        &document.contexts,
    )?;
    let mut support: Vec<Vec<Section>> = vec![Vec::new(); scenario.n_contexts()];
    for (key, tuples) in &document.support {
        let members: Vec<&str> = key.split(',').collect();
        let resolved = scenario
            .resolve_subset(&members)
            .map_err(|e| e.at_location(format!("support.{key}")))?;
        let ctx = scenario
            .context_index(&resolved)
            .ok_or_else(|| Error::NotSubcover {
                context: key.clone(),
            })
            .map_err(|e| e.at_location(format!("support.{key}")))?;
        if scenario.context_key(ctx) != *key {
            // The members exist but the key is not in canonical order.
            return Err(Error::NotSubcover {
                context: key.clone(),
            }
            .at_location(format!("support.{key}")));
        }
        for tuple in tuples {
            let labels: Vec<&str> = tuple.split(',').collect();
            let event_error = || {
                Error::SectionOutsideEvents {
                    context: key.clone(),
                    section: tuple.clone(),
                }
                .at_location(format!("support.{key}"))
            };
            if labels.len() != resolved.len() {
                return Err(event_error());
            }
            let mut values = Vec::with_capacity(labels.len());
            for (&m, label) in resolved.iter().zip(&labels) {
                match scenario.outcome_index(m, label) {
                    Some(o) => values.push(o),
                    None => return Err(event_error()),
                }
            }
            support[ctx].push(Section::new(resolved.clone(), values));
        }
    }
    let model = build_model(scenario, support)?;
    Ok(ParsedModel {
        model,
        metadata: document.metadata.clone(),
    })
}

/// Parses text (either syntax) straight into a validated model.
pub fn parse_model(text: &str, strict: bool) -> Result<ParsedModel> {
    model_from_document(&parse_document(text, strict)?)
}

/// Parses a section argument of the form `m1,m2=o1,o2`.
///
/// The left side must name a cover context in its canonical member order,
/// so an argument is never silently reinterpreted under a reordering. The
/// parsed section is an event of the context but need not be supported;
/// callers decide how to treat unsupported sections.
pub fn parse_section_arg(scenario: &Scenario, arg: &str) -> Result<(CtxIdx, Section)> {
    let syntax = |msg: String| Error::SectionSyntax {
        arg: arg.to_string(),
        msg,
    };
    let (lhs, rhs) = arg
        .split_once('=')
        .ok_or_else(|| syntax("expected measurements=outcomes".to_string()))?;
    let names: Vec<&str> = lhs.split(',').map(str::trim).collect();
    let labels: Vec<&str> = rhs.split(',').map(str::trim).collect();
    if labels.len() != names.len() {
        return Err(syntax(format!(
            "{} measurements but {} outcomes",
            names.len(),
            labels.len()
        )));
    }
    let resolved = scenario.resolve_subset(&names)?;
    let ctx = scenario
        .context_index(&resolved)
        .ok_or_else(|| Error::NotSubcover {
            context: lhs.to_string(),
        })?;
    let canonical: Vec<&str> = scenario.contexts()[ctx]
        .iter()
        .map(|&m| scenario.measurements()[m as usize].as_str())
        .collect();
    if names != canonical {
        return Err(syntax(format!(
            "measurements must be listed in canonical order {}",
            scenario.context_key(ctx)
        )));
    }
    let mut values = Vec::with_capacity(labels.len());
    for (&m, label) in resolved.iter().zip(&labels) {
        match scenario.outcome_index(m, label) {
            Some(o) => values.push(o),
            None => {
                return Err(syntax(format!(
                    "{label} is not an outcome of {}",
                    scenario.measurements()[m as usize]
                )));
            }
        }
    }
    Ok((ctx, Section::new(resolved, values)))
}

/// Serializes a model back into document form.
pub fn document_from_model(
    model: &EmpiricalModel,
    metadata: BTreeMap<String, String>,
) -> ModelDocument {
    let scenario: &Arc<Scenario> = model.scenario();
    let name_of = |m: u32| scenario.measurements()[m as usize].clone();
    ModelDocument {
        format_version: FORMAT_VERSION,
        measurements: scenario.measurements().to_vec(),
        outcomes: scenario
            .measurements()
            .iter()
            .enumerate()
            .map(|(m, name)| (name.clone(), scenario.outcomes(m as u32).to_vec()))
            .collect(),
        contexts: scenario
            .contexts()
            .iter()
            .map(|members| members.iter().map(|&m| name_of(m)).collect())
            .collect(),
        support: (0..scenario.n_contexts())
            .map(|c| {
                (
                    scenario.context_key(c),
                    model
                        .support(c)
                        .iter()
                        .map(|s| s.render_values(scenario))
                        .collect(),
                )
            })
            .collect(),
        metadata,
    }
}

/// Canonical pretty JSON rendering; all maps are ordered, so the output is
/// byte-stable for a given document.
pub fn render_json(document: &ModelDocument) -> String {
    let mut text = serde_json::to_string_pretty(document).expect("document serializes");
    text.push('\n');
    text
}

/// Convenience: serialize a model with metadata to canonical JSON.
pub fn model_to_json(model: &EmpiricalModel, metadata: BTreeMap<String, String>) -> String {
    render_json(&document_from_model(model, metadata))
}
