use serde::{Deserialize, Serialize};

/// Per-word surprisals (bits) for one sentence under one backend.
///
/// `eos_bits` is the surprisal of the end-of-sentence event after the last
/// word. It is model-internal and never part of a region unless a measurement
/// asks for it explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurprisalProfile {
    pub words: Vec<String>,
    pub bits: Vec<f64>,
    pub eos_bits: Option<f64>,
    pub backend: String,
}

impl SurprisalProfile {
    /// Sum of word surprisals, in word order, excluding the terminal event.
    pub fn word_total(&self) -> f64 {
        self.bits.iter().sum()
    }

    /// Sum of word surprisals plus the terminal event when present.
    ///
    /// This is `-log2 p(sentence)` for backends that score the terminal event.
    pub fn total(&self) -> f64 {
        self.word_total() + self.eos_bits.unwrap_or(0.0)
    }

    /// Checks the structural invariants: matching lengths, finite, non-negative.
    pub fn validate(&self) -> Result<(), String> {
        if self.words.len() != self.bits.len() {
            return Err(format!("{} words but {} surprisal values", self.words.len(), self.bits.len()));
        }
        for (i, b) in self.bits.iter().enumerate() {
            if !b.is_finite() || *b < 0.0 {
                return Err(format!("surprisal {b} at word {i} is not a finite value >= 0"));
            }
        }
        if let Some(e) = self.eos_bits {
            if !e.is_finite() || e < 0.0 {
                return Err(format!("terminal surprisal {e} is not a finite value >= 0"));
            }
        }
        Ok(())
    }
}
