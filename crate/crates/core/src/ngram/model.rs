use std::collections::HashMap;

use super::mkn::Discounts;
use super::vocab::{Vocabulary, BOS_ID, EOS_ID};
use crate::profile::SurprisalProfile;

/// One stored n-gram: its conditional log2 probability and, when it also
/// serves as a context, the log2 backoff weight applied to unseen
/// continuations.
///
/// Contexts made only of `<s>` padding are never predicted; their
/// `log2_prob` is negative infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub log2_prob: f64,
    pub log2_backoff: f64,
}

/// An immutable backoff-form n-gram model. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    vocab: Vocabulary,
    tables: Vec<HashMap<Vec<u32>, Entry>>,
    discounts: Option<Vec<Discounts>>,
}

impl NGramModel {
    pub(crate) fn from_parts(
        order: usize,
        vocab: Vocabulary,
        tables: Vec<HashMap<Vec<u32>, Entry>>,
        discounts: Option<Vec<Discounts>>,
    ) -> Self {
        debug_assert_eq!(tables.len(), order);
        NGramModel { order, vocab, tables, discounts }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Discounts used at estimation time, lowest order first. `None` for
    /// models loaded from ARPA.
    pub fn discounts(&self) -> Option<&[Discounts]> {
        self.discounts.as_deref()
    }

    /// Number of stored entries per order, lowest first.
    pub fn ngram_counts(&self) -> Vec<usize> {
        self.tables.iter().map(HashMap::len).collect()
    }

    /// Stored entries of order `k` (1-based).
    pub fn entries(&self, k: usize) -> impl Iterator<Item = (&[u32], &Entry)> {
        self.tables[k - 1].iter().map(|(g, e)| (g.as_slice(), e))
    }

    pub fn entry(&self, gram: &[u32]) -> Option<&Entry> {
        if gram.is_empty() || gram.len() > self.order {
            return None;
        }
        self.tables[gram.len() - 1].get(gram)
    }

    /// `log2 p(word | history)`, using at most the last `order - 1` ids of
    /// `history`. Walks from the longest stored n-gram down, adding the backoff
    /// weights of each context that had to be abandoned.
    pub fn log2_prob(&self, history: &[u32], word: u32) -> f64 {
        let max_ctx = (self.order - 1).min(history.len());
        let mut backoff = 0.0;
        let mut key = Vec::with_capacity(max_ctx + 1);
        for len in (0..=max_ctx).rev() {
            let ctx = &history[history.len() - len..];
            key.clear();
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(e) = self.tables[len].get(key.as_slice()) {
                return e.log2_prob + backoff;
            }
            if len > 0 {
                if let Some(c) = self.tables[len - 1].get(ctx) {
                    backoff += c.log2_backoff;
                }
            }
        }
        f64::NEG_INFINITY
    }

    /// Maps words to ids (out-of-vocabulary words become `<unk>`) and prepends
    /// `order - 1` sentence-start tokens.
    fn padded_ids(&self, words: &[impl AsRef<str>]) -> Vec<u32> {
        let mut ids = Vec::with_capacity(self.order - 1 + words.len());
        ids.extend(std::iter::repeat_n(BOS_ID, self.order - 1));
        ids.extend(words.iter().map(|w| self.vocab.id_or_unk(w.as_ref())));
        ids
    }

    /// `log2 p(words </s>)`, accumulated word by word in sentence order.
    pub fn sentence_log2_prob(&self, words: &[impl AsRef<str>]) -> f64 {
        let ids = self.padded_ids(words);
        let start = self.order - 1;
        let mut total = 0.0;
        for i in start..ids.len() {
            total += self.log2_prob(&ids[..i], ids[i]);
        }
        total + self.log2_prob(&ids, EOS_ID)
    }

    /// Per-word surprisal in bits, plus the terminal `</s>` surprisal.
    pub fn score_words(&self, words: &[impl AsRef<str>]) -> SurprisalProfile {
        let ids = self.padded_ids(words);
        let start = self.order - 1;
        let bits = (start..ids.len()).map(|i| 0.0 - self.log2_prob(&ids[..i], ids[i])).collect();
        SurprisalProfile {
            words: words.iter().map(|w| w.as_ref().to_string()).collect(),
            bits,
            eos_bits: Some(0.0 - self.log2_prob(&ids, EOS_ID)),
            backend: format!("ngram-{}", self.order),
        }
    }
}
