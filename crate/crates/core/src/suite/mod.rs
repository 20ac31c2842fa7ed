//! Factorial experiments: items built from labeled regions whose text varies
//! by condition, expanded into sentences and measured over region spans.

mod expand;
mod experiment;

use thiserror::Error;

pub use expand::{expand, intervener_length, measure, ConditionSentence, RegionSpan};
pub use experiment::{
    AnalysisKind, AnalysisRequest, Condition, Experiment, Factor, FactorRole, Item, ItemId, MeasurementSpec, Pattern,
    RegionContent, RegionTemplate,
};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("malformed experiment file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid experiment{}: {message}", coords(.item, .condition))]
    Validation { item: Option<String>, condition: Option<String>, message: String },
    #[error("item {item}, condition {condition}: {message}")]
    Measure { item: String, condition: String, message: String },
}

fn coords(item: &Option<String>, condition: &Option<String>) -> String {
    match (item, condition) {
        (Some(i), Some(c)) => format!(" (item {i}, condition {c})"),
        (Some(i), None) => format!(" (item {i})"),
        (None, Some(c)) => format!(" (condition {c})"),
        (None, None) => String::new(),
    }
}
