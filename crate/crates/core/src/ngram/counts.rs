use std::collections::HashMap;

use super::vocab::{Vocabulary, BOS_ID, EOS_ID};
use super::NgramError;

/// Raw and Kneser-Ney adjusted n-gram counts for orders `1..=order`.
///
/// Only n-grams that end at a predicted position are counted (the padding
/// `<s>` tokens are context, never events). At the highest order the adjusted
/// count is the raw count; below it, the adjusted count of `g` is the number
/// of distinct tokens observed immediately before `g`.
#[derive(Debug, Clone)]
pub struct CountTable {
    order: usize,
    vocab: Vocabulary,
    raw: Vec<HashMap<Vec<u32>, u64>>,
    adjusted: Vec<HashMap<Vec<u32>, u64>>,
}

/// Splits a corpus into whitespace-tokenized lines, dropping blank lines.
pub fn tokenize_corpus(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .filter(|l| !l.is_empty())
        .collect()
}

/// Counts every k-gram (k <= order) of a corpus.
///
/// Tokens seen fewer than `min_count` times become `<unk>`. Each line is padded
/// with `order - 1` leading `<s>` and one trailing `</s>`. Empty lines are skipped.
pub fn build_counts(lines: &[Vec<String>], order: usize, min_count: u64) -> Result<CountTable, NgramError> {
    if order == 0 {
        return Err(NgramError::ZeroOrder);
    }
    let lines: Vec<&Vec<String>> = lines.iter().filter(|l| !l.is_empty()).collect();
    if lines.is_empty() {
        return Err(NgramError::EmptyCorpus);
    }

    let mut freqs: HashMap<&str, u64> = HashMap::new();
    for line in &lines {
        for tok in line.iter() {
            *freqs.entry(tok.as_str()).or_default() += 1;
        }
    }
    let vocab = Vocabulary::from_counts(&freqs, min_count.max(1));

    let mut raw: Vec<HashMap<Vec<u32>, u64>> = vec![HashMap::new(); order];
    let mut padded = Vec::new();
    for line in &lines {
        padded.clear();
        padded.extend(std::iter::repeat_n(BOS_ID, order - 1));
        padded.extend(line.iter().map(|t| vocab.id_or_unk(t)));
        padded.push(EOS_ID);
        for end in (order - 1)..padded.len() {
            for k in 1..=order {
                let gram = &padded[end + 1 - k..=end];
                *raw[k - 1].entry(gram.to_vec()).or_default() += 1;
            }
        }
    }

    let mut adjusted = Vec::with_capacity(order);
    for k in 1..order {
        let mut cont: HashMap<Vec<u32>, u64> = HashMap::with_capacity(raw[k - 1].len());
        for longer in raw[k].keys() {
            *cont.entry(longer[1..].to_vec()).or_default() += 1;
        }
        adjusted.push(cont);
    }
    adjusted.push(raw[order - 1].clone());

    Ok(CountTable { order, vocab, raw, adjusted })
}

impl CountTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Raw occurrence count of `gram` (any order up to the model order).
    pub fn raw(&self, gram: &[u32]) -> u64 {
        self.table(&self.raw, gram)
    }

    /// Count used for estimation: raw at the highest order, continuation below.
    pub fn adjusted(&self, gram: &[u32]) -> u64 {
        self.table(&self.adjusted, gram)
    }

    fn table(&self, tables: &[HashMap<Vec<u32>, u64>], gram: &[u32]) -> u64 {
        if gram.is_empty() || gram.len() > self.order {
            return 0;
        }
        tables[gram.len() - 1].get(gram).copied().unwrap_or(0)
    }

    /// All adjusted k-gram counts for one order (`k` in `1..=order`).
    pub fn adjusted_order(&self, k: usize) -> &HashMap<Vec<u32>, u64> {
        &self.adjusted[k - 1]
    }

    /// Number of distinct k-grams per order, lowest order first.
    pub fn ngram_totals(&self) -> Vec<usize> {
        self.raw.iter().map(HashMap::len).collect()
    }

    /// `[n1, n2, n3, n4]`: how many k-grams have adjusted count exactly 1..4.
    pub fn counts_of_counts(&self, k: usize) -> [u64; 4] {
        let mut n = [0u64; 4];
        for &c in self.adjusted[k - 1].values() {
            if (1..=4).contains(&c) {
                n[c as usize - 1] += 1;
            }
        }
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &[&str]) -> Vec<Vec<String>> {
        tokenize_corpus(&lines.join("\n"))
    }

    #[test]
    fn bigram_counts_by_enumeration() {
        let t = build_counts(&corpus(&["a b", "a c"]), 2, 1).unwrap();
        let v = t.vocab();
        let (a, b) = (v.id("a").unwrap(), v.id("b").unwrap());
        assert_eq!(t.adjusted(&[BOS_ID, a]), 2);
        assert_eq!(t.adjusted(&[a, b]), 1);
        assert_eq!(t.adjusted(&[b, EOS_ID]), 1);
    }

    #[test]
    fn continuation_count_is_distinct_predecessors() {
        let t = build_counts(&corpus(&["a b", "a c"]), 2, 1).unwrap();
        let v = t.vocab();
        // "a" is preceded only by <s>, twice
        assert_eq!(t.raw(&[v.id("a").unwrap()]), 2);
        assert_eq!(t.adjusted(&[v.id("a").unwrap()]), 1);
        // </s> follows b and c
        assert_eq!(t.adjusted(&[EOS_ID]), 2);
    }

    #[test]
    fn rejects_empty_corpus_and_zero_order() {
        assert!(matches!(build_counts(&[], 3, 1), Err(NgramError::EmptyCorpus)));
        assert!(matches!(build_counts(&[vec![]], 3, 1), Err(NgramError::EmptyCorpus)));
        assert!(matches!(build_counts(&corpus(&["a"]), 0, 1), Err(NgramError::ZeroOrder)));
    }

    #[test]
    fn rare_tokens_become_unk() {
        let t = build_counts(&corpus(&["a a b"]), 1, 2).unwrap();
        assert_eq!(t.vocab().id("b"), None);
        assert_eq!(t.raw(&[super::super::vocab::UNK_ID]), 1);
        assert_eq!(t.raw(&[t.vocab().id("a").unwrap()]), 2);
    }

    #[test]
    fn counts_of_counts_recomputable() {
        let t = build_counts(&corpus(&["a b", "a c", "b a", "a b"]), 2, 1).unwrap();
        for k in 1..=2 {
            let n = t.counts_of_counts(k);
            for (i, expect) in n.iter().enumerate() {
                let direct = t.adjusted_order(k).values().filter(|&&c| c == i as u64 + 1).count() as u64;
                assert_eq!(direct, *expect);
            }
        }
    }

    #[test]
    fn lower_order_never_exceeds_raw() {
        let t = build_counts(&corpus(&["a b a b", "b b a", "c a b"]), 3, 1).unwrap();
        for k in 1..3 {
            for (g, &c) in t.adjusted_order(k) {
                assert!(c <= t.raw(g));
            }
        }
    }
}
