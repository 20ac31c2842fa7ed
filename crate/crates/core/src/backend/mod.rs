//! Word-level scoring backends.
//!
//! Every backend returns one [`SurprisalProfile`] per input sentence, in bits,
//! with exactly one value per whitespace-separated word. Backends that
//! tokenize more finely must sum sub-token surprisals per word before
//! replying.

mod builtin;
mod external;
pub mod protocol;

use thiserror::Error;

use crate::profile::SurprisalProfile;

pub use builtin::{NgramBackend, OracleTable, UniformBackend};
pub use external::{spawn_external, ExternalBackend, ExternalConfig};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("empty batch: at least one sentence is required")]
    EmptyBatch,
    #[error("request {id}: sentence has no words")]
    EmptySentence { id: u64 },
    #[error("failed to start adapter `{command}`: {source}")]
    Spawn { command: String, source: std::io::Error },
    #[error("adapter handshake failed: {0}")]
    Handshake(String),
    #[error("adapter speaks protocol {got}, harness expects {expected}")]
    VersionMismatch { expected: u32, got: u32 },
    #[error("timed out after {secs:.1} s waiting for {what}")]
    Timeout { what: String, secs: f64 },
    #[error("protocol violation{}: {message}", fmt_id(*.id))]
    Protocol { id: Option<u64>, message: String },
    #[error("backend `{name}` is not deterministic: {detail}")]
    Nondeterministic { name: String, detail: String },
    #[error("oracle table, request {id}: {message}")]
    Oracle { id: u64, message: String },
    #[error("invalid oracle table: {0}")]
    OracleTable(String),
    #[error("adapter I/O error: {0}")]
    Io(#[from] std::io::Error),
}

fn fmt_id(id: Option<u64>) -> String {
    id.map(|i| format!(" in reply to request {i}")).unwrap_or_default()
}

/// A scoring session.
pub trait Backend {
    fn name(&self) -> &str;

    /// Whether identical inputs are guaranteed bit-identical (or, for external
    /// adapters, declared and verified to agree within 1e-9) outputs.
    fn deterministic(&self) -> bool;

    /// Scores sentences; profiles come back in input order.
    fn score_batch(&mut self, sentences: &[Vec<String>]) -> Result<Vec<SurprisalProfile>, BackendError>;
}

/// Backends that can score from shared references, and therefore from many
/// threads at once.
pub trait SentenceScorer: Send + Sync {
    fn name(&self) -> &str;

    /// `id` is only used to label errors.
    fn score(&self, id: u64, words: &[String]) -> Result<SurprisalProfile, BackendError>;
}

impl<T: SentenceScorer> Backend for T {
    fn name(&self) -> &str {
        SentenceScorer::name(self)
    }

    fn deterministic(&self) -> bool {
        true
    }

    fn score_batch(&mut self, sentences: &[Vec<String>]) -> Result<Vec<SurprisalProfile>, BackendError> {
        score_shared(self, sentences)
    }
}

/// Scores a batch through a shared scorer.
pub fn score_shared<S: SentenceScorer + ?Sized>(
    scorer: &S,
    sentences: &[Vec<String>],
) -> Result<Vec<SurprisalProfile>, BackendError> {
    if sentences.is_empty() {
        return Err(BackendError::EmptyBatch);
    }
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.is_empty() {
                return Err(BackendError::EmptySentence { id: i as u64 });
            }
            scorer.score(i as u64, s)
        })
        .collect()
}

/// Scores `words` twice and checks the results agree within `tolerance`.
pub fn verify_determinism(backend: &mut dyn Backend, words: &[String], tolerance: f64) -> Result<(), BackendError> {
    let batch = [words.to_vec(), words.to_vec()];
    let out = backend.score_batch(&batch)?;
    let (a, b) = (&out[0], &out[1]);
    let mut worst: f64 = 0.0;
    for (x, y) in a.bits.iter().zip(&b.bits) {
        worst = worst.max((x - y).abs());
    }
    if let (Some(x), Some(y)) = (a.eos_bits, b.eos_bits) {
        worst = worst.max((x - y).abs());
    }
    if worst > tolerance || a.eos_bits.is_some() != b.eos_bits.is_some() {
        return Err(BackendError::Nondeterministic {
            name: backend.name().to_string(),
            detail: format!("double-scoring differed by {worst} bits (tolerance {tolerance})"),
        });
    }
    Ok(())
}
