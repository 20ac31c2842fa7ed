//! Interpolated modified Kneser-Ney n-gram language model.
//!
//! Corpus lines are whitespace-tokenized; punctuation must already be split
//! into separate tokens. Each line is padded with `order - 1` copies of `<s>`
//! and one `</s>`, and `<s>` is never predicted.

mod arpa;
mod counts;
mod mkn;
mod model;
pub mod vocab;

use thiserror::Error;

pub use arpa::{export_arpa, import_arpa, MISSING_UNK_LOG10};
pub use counts::{build_counts, tokenize_corpus, CountTable};
pub use mkn::{estimate_mkn, Discounts, FALLBACK_DISCOUNT};
pub use model::{Entry, NGramModel};
pub use vocab::Vocabulary;

#[derive(Debug, Error)]
pub enum NgramError {
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("ARPA parse error at line {line}: {message}")]
    Arpa { line: usize, message: String },
}

/// Counts and estimates a model in one step.
pub fn train(lines: &[Vec<String>], order: usize, min_count: u64) -> Result<NGramModel, NgramError> {
    Ok(estimate_mkn(&build_counts(lines, order, min_count)?))
}
