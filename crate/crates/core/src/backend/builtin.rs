use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BackendError, SentenceScorer};
use crate::ngram::{vocab::EOS, NGramModel};
use crate::profile::SurprisalProfile;

/// Assigns probability `1/|V|` to every word and to the terminal event.
#[derive(Debug, Clone)]
pub struct UniformBackend {
    vocab_size: u64,
    name: String,
}

impl UniformBackend {
    pub fn new(vocab_size: u64) -> Result<Self, BackendError> {
        if vocab_size == 0 {
            return Err(BackendError::Handshake("uniform backend needs |V| >= 1".into()));
        }
        Ok(UniformBackend { vocab_size, name: format!("uniform-{vocab_size}") })
    }
}

impl SentenceScorer for UniformBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, _id: u64, words: &[String]) -> Result<SurprisalProfile, BackendError> {
        let bits = (self.vocab_size as f64).log2();
        Ok(SurprisalProfile {
            words: words.to_vec(),
            bits: vec![bits; words.len()],
            eos_bits: Some(bits),
            backend: self.name.clone(),
        })
    }
}

/// The built-in n-gram model as a backend.
#[derive(Debug, Clone)]
pub struct NgramBackend {
    model: Arc<NGramModel>,
}

impl NgramBackend {
    pub fn new(model: Arc<NGramModel>) -> Self {
        NgramBackend { model }
    }

    pub fn model(&self) -> &NGramModel {
        &self.model
    }
}

impl SentenceScorer for NgramBackend {
    fn name(&self) -> &str {
        "ngram"
    }

    fn score(&self, _id: u64, words: &[String]) -> Result<SurprisalProfile, BackendError> {
        Ok(self.model.score_words(words))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct OracleFile {
    #[serde(default = "default_oracle_name")]
    name: String,
    distributions: Vec<OracleRow>,
}

fn default_oracle_name() -> String {
    "oracle".into()
}

#[derive(Debug, Serialize, Deserialize)]
struct OracleRow {
    context: Vec<String>,
    next: HashMap<String, f64>,
}

/// Explicit conditional distributions keyed by the full preceding word
/// sequence. A test double: every word of every scored sentence must be
/// covered. The terminal event is optional; it is looked up as `</s>` after
/// the complete sentence and left unset when the table has no entry for it.
#[derive(Debug, Clone, Default)]
pub struct OracleTable {
    name: String,
    table: HashMap<Vec<String>, HashMap<String, f64>>,
}

impl OracleTable {
    pub fn new(name: impl Into<String>) -> Self {
        OracleTable { name: name.into(), table: HashMap::new() }
    }

    /// Sets `p(word | context)`. Replaces any previous value for the pair.
    pub fn insert(&mut self, context: &[String], word: &str, prob: f64) {
        self.table.entry(context.to_vec()).or_default().insert(word.to_string(), prob);
    }

    pub fn get(&self, context: &[String], word: &str) -> Option<f64> {
        self.table.get(context).and_then(|d| d.get(word)).copied()
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Every probability in (0, 1], every distribution summing to at most 1.
    pub fn validate(&self) -> Result<(), BackendError> {
        for (ctx, dist) in &self.table {
            let mut sum = 0.0;
            for (w, &p) in dist {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(BackendError::OracleTable(format!("p({w:?} | {ctx:?}) = {p} is outside (0, 1]")));
                }
                sum += p;
            }
            if sum > 1.0 + 1e-9 {
                return Err(BackendError::OracleTable(format!("distribution after {ctx:?} sums to {sum} > 1")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        let file: OracleFile = serde_json::from_str(text).map_err(|e| BackendError::OracleTable(e.to_string()))?;
        let mut t = OracleTable::new(file.name);
        for row in file.distributions {
            let dist = t.table.entry(row.context).or_default();
            dist.extend(row.next);
        }
        t.validate()?;
        Ok(t)
    }

    /// Serializes with contexts sorted, so equal tables give equal bytes.
    pub fn to_json(&self) -> String {
        let mut rows: Vec<OracleRow> =
            self.table.iter().map(|(c, d)| OracleRow { context: c.clone(), next: d.clone() }).collect();
        rows.sort_by(|a, b| a.context.cmp(&b.context));
        let rows: Vec<serde_json::Value> = rows
            .into_iter()
            .map(|r| {
                let next: std::collections::BTreeMap<_, _> = r.next.into_iter().collect();
                serde_json::json!({ "context": r.context, "next": next })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({ "name": self.name, "distributions": rows }))
            .expect("oracle table serializes")
    }
}

impl SentenceScorer for OracleTable {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, id: u64, words: &[String]) -> Result<SurprisalProfile, BackendError> {
        let mut bits = Vec::with_capacity(words.len());
        for i in 0..words.len() {
            let ctx = &words[..i];
            let dist = self
                .table
                .get(ctx)
                .ok_or_else(|| BackendError::Oracle { id, message: format!("no distribution for context {ctx:?}") })?;
            let p = dist.get(&words[i]).ok_or_else(|| BackendError::Oracle {
                id,
                message: format!("word {:?} missing from the distribution after {ctx:?}", words[i]),
            })?;
            bits.push(0.0 - p.log2());
        }
        let eos_bits = self.get(words, EOS).map(|p| 0.0 - p.log2());
        Ok(SurprisalProfile { words: words.to_vec(), bits, eos_bits, backend: self.name.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{score_shared, verify_determinism, Backend};
    use crate::ngram;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn uniform_is_log2_v() {
        let mut b = UniformBackend::new(8).unwrap();
        let out = b.score_batch(&[words("a b c"), words("d")]).unwrap();
        assert_eq!(out[0].bits, vec![3.0; 3]);
        assert_eq!(out[1].eos_bits, Some(3.0));
        // (words + 1) * log2 |V| when the terminal event is included
        assert_eq!(out[0].total(), 4.0 * 3.0);
        assert!(UniformBackend::new(0).is_err());
    }

    #[test]
    fn oracle_quarter_probabilities() {
        let s = words("w x y z");
        let mut t = OracleTable::new("t");
        for i in 0..s.len() {
            t.insert(&s[..i], &s[i], 0.25);
        }
        let p = t.score(0, &s).unwrap();
        assert_eq!(p.bits, vec![2.0; 4]);
        assert_eq!(p.eos_bits, None);
        t.insert(&s, EOS, 0.5);
        assert_eq!(t.score(0, &s).unwrap().eos_bits, Some(1.0));
    }

    #[test]
    fn oracle_lookup_outside_table_is_error() {
        let mut t = OracleTable::new("t");
        t.insert(&[], "a", 0.5);
        let e = score_shared(&t, &[words("a"), words("a b")]).unwrap_err();
        match e {
            BackendError::Oracle { id, .. } => assert_eq!(id, 1),
            other => panic!("{other}"),
        }
        assert!(t.score(0, &words("c")).is_err());
    }

    #[test]
    fn oracle_validation_and_json() {
        let mut t = OracleTable::new("t");
        t.insert(&[], "a", 0.7);
        t.insert(&[], "b", 0.4);
        assert!(t.validate().is_err());
        let mut ok = OracleTable::new("ok");
        ok.insert(&[], "a", 0.5);
        ok.insert(&words("a"), "b", 1.0);
        let back = OracleTable::from_json(&ok.to_json()).unwrap();
        assert_eq!(back.to_json(), ok.to_json());
        assert_eq!(back.get(&words("a"), "b"), Some(1.0));
        assert!(OracleTable::from_json(r#"{"distributions":[{"context":[],"next":{"a":1.5}}]}"#).is_err());
    }

    #[test]
    fn ngram_backend_delegates() {
        let corpus = ngram::tokenize_corpus("a b c\nc b a\nb b");
        let model = Arc::new(ngram::train(&corpus, 3, 1).unwrap());
        let mut b = NgramBackend::new(model.clone());
        let batch = vec![words("a b"), words("c x a")];
        let out = b.score_batch(&batch).unwrap();
        for (p, s) in out.iter().zip(&batch) {
            let direct = model.score_words(s);
            assert_eq!(p.bits, direct.bits);
            assert_eq!(p.eos_bits, direct.eos_bits);
        }
        verify_determinism(&mut b, &batch[1], 0.0).unwrap();
    }

    #[test]
    fn empty_inputs_rejected() {
        let mut b = UniformBackend::new(2).unwrap();
        assert!(matches!(b.score_batch(&[]), Err(BackendError::EmptyBatch)));
        assert!(matches!(b.score_batch(&[words("a"), vec![]]), Err(BackendError::EmptySentence { id: 1 })));
    }
}
