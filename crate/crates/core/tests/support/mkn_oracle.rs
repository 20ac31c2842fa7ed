//! Brute-force interpolated modified Kneser-Ney, evaluated straight from the
//! padded corpus on every query. Slow by construction; only for tiny corpora.

use std::collections::{BTreeMap, BTreeSet};

pub struct BruteForceMkn {
    order: usize,
    sentences: Vec<Vec<String>>,
    predictable: Vec<String>,
}

impl BruteForceMkn {
    pub fn new(lines: &[&str], order: usize) -> Self {
        let mut sentences = Vec::new();
        let mut words = BTreeSet::new();
        for l in lines {
            let toks: Vec<String> = l.split_whitespace().map(String::from).collect();
            if toks.is_empty() {
                continue;
            }
            words.extend(toks.iter().cloned());
            let mut s = vec!["<s>".to_string(); order - 1];
            s.extend(toks);
            s.push("</s>".to_string());
            sentences.push(s);
        }
        let mut predictable: Vec<String> = vec!["</s>".into(), "<unk>".into()];
        predictable.extend(words.into_iter().filter(|w| w != "</s>" && w != "<unk>" && w != "<s>"));
        BruteForceMkn { order, sentences, predictable }
    }

    pub fn predictable(&self) -> &[String] {
        &self.predictable
    }

    /// Occurrences of `gram` ending at a predicted (non-padding) position,
    /// paired with the token before each occurrence.
    fn occurrences(&self, gram: &[String]) -> Vec<Option<String>> {
        let k = gram.len();
        let mut out = Vec::new();
        for s in &self.sentences {
            for end in (self.order - 1)..s.len() {
                if end + 1 < k {
                    continue;
                }
                let start = end + 1 - k;
                if s[start..=end] == *gram {
                    out.push(if start > 0 { Some(s[start - 1].clone()) } else { None });
                }
            }
        }
        out
    }

    fn count(&self, gram: &[String]) -> u64 {
        let occ = self.occurrences(gram);
        if gram.len() == self.order {
            occ.len() as u64
        } else {
            occ.into_iter().flatten().collect::<BTreeSet<_>>().len() as u64
        }
    }

    fn distinct_grams(&self, k: usize) -> BTreeSet<Vec<String>> {
        let mut set = BTreeSet::new();
        for s in &self.sentences {
            for end in (self.order - 1)..s.len() {
                if end + 1 >= k {
                    set.insert(s[end + 1 - k..=end].to_vec());
                }
            }
        }
        set
    }

    /// (D1, D2, D3+) for order k, with the 0.75 fallback.
    pub fn discounts(&self, k: usize) -> (f64, f64, f64) {
        let mut coc: BTreeMap<u64, f64> = BTreeMap::new();
        for g in self.distinct_grams(k) {
            *coc.entry(self.count(&g)).or_default() += 1.0;
        }
        let n = |i: u64| coc.get(&i).copied().unwrap_or(0.0);
        let (n1, n2, n3, n4) = (n(1), n(2), n(3), n(4));
        if n1 == 0.0 || n2 == 0.0 || n3 == 0.0 || n4 == 0.0 {
            return (0.75, 0.75, 0.75);
        }
        let y = n1 / (n1 + 2.0 * n2);
        let d = (1.0 - 2.0 * y * n2 / n1, 2.0 - 3.0 * y * n3 / n2, 3.0 - 4.0 * y * n4 / n3);
        let ok = d.0 > 0.0 && d.0 <= 1.0 && d.1 > 0.0 && d.1 <= 2.0 && d.2 > 0.0 && d.2 <= 3.0;
        if ok {
            d
        } else {
            (0.75, 0.75, 0.75)
        }
    }

    pub fn uses_fallback(&self, k: usize) -> bool {
        self.discounts(k) == (0.75, 0.75, 0.75)
    }

    /// p(word | context); only the last `order - 1` context tokens matter.
    pub fn prob(&self, context: &[String], word: &str) -> f64 {
        let keep = context.len().min(self.order - 1);
        let ctx = &context[context.len() - keep..];
        let lower = if ctx.is_empty() { 1.0 / self.predictable.len() as f64 } else { self.prob(&ctx[1..], word) };
        let k = ctx.len() + 1;
        let (d1, d2, d3) = self.discounts(k);
        let disc = |c: u64| match c {
            0 => 0.0,
            1 => d1,
            2 => d2,
            _ => d3,
        };
        let mut total = 0.0;
        let mut removed = 0.0;
        let mut own = 0.0;
        for x in &self.predictable {
            let mut g = ctx.to_vec();
            g.push(x.clone());
            let c = self.count(&g) as f64;
            let kept = (c - disc(c as u64)).max(0.0);
            total += c;
            removed += c - kept;
            if x == word {
                own = kept;
            }
        }
        if total == 0.0 {
            return lower;
        }
        own / total + removed / total * lower
    }

    /// Every context of length `order - 1` seen in the padded corpus.
    pub fn observed_contexts(&self) -> BTreeSet<Vec<String>> {
        let mut set = BTreeSet::new();
        for s in &self.sentences {
            for end in (self.order - 1)..s.len() {
                set.insert(s[end + 1 - self.order..end].to_vec());
            }
        }
        set
    }
}
