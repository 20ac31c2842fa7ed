use std::collections::HashMap;

use super::counts::CountTable;
use super::model::{Entry, NGramModel};
use super::vocab::BOS_ID;

/// Absolute discount applied at an order whose counts-of-counts cannot
/// support the modified Kneser-Ney estimates.
pub const FALLBACK_DISCOUNT: f64 = 0.75;

/// Per-order discounts for adjusted counts of 1, 2 and 3 or more.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discounts {
    pub d1: f64,
    pub d2: f64,
    pub d3plus: f64,
    /// True when the fixed [`FALLBACK_DISCOUNT`] replaced the estimates.
    pub fallback: bool,
}

impl Discounts {
    /// Estimates discounts from counts-of-counts `[n1, n2, n3, n4]`:
    ///
    /// ```text
    /// Y   = n1 / (n1 + 2 n2)
    /// D1  = 1 - 2 Y n2 / n1
    /// D2  = 2 - 3 Y n3 / n2
    /// D3+ = 3 - 4 Y n4 / n3
    /// ```
    ///
    /// Falls back to [`FALLBACK_DISCOUNT`] for all three when any of n1..n4 is
    /// zero or an estimate leaves `(0, k]` for its count class `k`.
    pub fn from_counts_of_counts(n: [u64; 4]) -> Self {
        let fallback =
            Discounts { d1: FALLBACK_DISCOUNT, d2: FALLBACK_DISCOUNT, d3plus: FALLBACK_DISCOUNT, fallback: true };
        if n.contains(&0) {
            return fallback;
        }
        let [n1, n2, n3, n4] = n.map(|x| x as f64);
        let y = n1 / (n1 + 2.0 * n2);
        let d1 = 1.0 - 2.0 * y * n2 / n1;
        let d2 = 2.0 - 3.0 * y * n3 / n2;
        let d3plus = 3.0 - 4.0 * y * n4 / n3;
        let in_range = |d: f64, k: f64| d > 0.0 && d <= k;
        if !(in_range(d1, 1.0) && in_range(d2, 2.0) && in_range(d3plus, 3.0)) {
            return fallback;
        }
        Discounts { d1, d2, d3plus, fallback: false }
    }

    pub fn for_count(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3plus,
        }
    }

    /// Mass removed from a count: `count - max(count - D, 0)`.
    fn removed(&self, count: u64) -> f64 {
        let c = count as f64;
        c - (c - self.for_count(count)).max(0.0)
    }
}

#[derive(Default)]
struct ContextStats {
    total: u64,
    removed: f64,
}

/// Estimates an interpolated modified Kneser-Ney model:
///
/// `p(w|c) = max(n(c w) - D, 0) / n(c .) + gamma(c) p(w|c')`
///
/// where `c'` drops the oldest context token, `gamma(c)` is the removed mass
/// divided by `n(c .)`, and the recursion ends in a uniform distribution over
/// the predictable vocabulary. Contexts with no observed continuation pass the
/// lower-order distribution through unchanged.
pub fn estimate_mkn(counts: &CountTable) -> NGramModel {
    let order = counts.order();
    let vocab = counts.vocab().clone();
    let uniform = 1.0 / vocab.predictable_len() as f64;

    let discounts: Vec<Discounts> =
        (1..=order).map(|k| Discounts::from_counts_of_counts(counts.counts_of_counts(k))).collect();

    let mut tables: Vec<HashMap<Vec<u32>, Entry>> = Vec::with_capacity(order);
    let mut lower_probs: HashMap<Vec<u32>, f64> = HashMap::new();

    for k in 1..=order {
        let disc = discounts[k - 1];
        let grams = counts.adjusted_order(k);

        let mut contexts: HashMap<&[u32], ContextStats> = HashMap::new();
        for (gram, &c) in grams {
            let s = contexts.entry(&gram[..k - 1]).or_default();
            s.total += c;
            s.removed += disc.removed(c);
        }

        let mut probs: HashMap<Vec<u32>, f64> = HashMap::with_capacity(grams.len());
        for (gram, &c) in grams {
            let stats = &contexts[&gram[..k - 1]];
            let total = stats.total as f64;
            let gamma = stats.removed / total;
            let lower = if k == 1 { uniform } else { lower_probs[&gram[1..]] };
            let p = (c as f64 - disc.for_count(c)).max(0.0) / total + gamma * lower;
            probs.insert(gram.clone(), p);
        }

        let mut table: HashMap<Vec<u32>, Entry> =
            probs.iter().map(|(g, &p)| (g.clone(), Entry { log2_prob: p.log2(), log2_backoff: 0.0 })).collect();

        if k == 1 {
            // predictable tokens never seen as events (typically <unk>) still
            // receive the interpolated uniform share
            let gamma = contexts.get(&[][..]).map(|s| s.removed / s.total as f64).unwrap_or(1.0);
            for id in vocab.predictable_ids() {
                table.entry(vec![id]).or_insert_with(|| {
                    let p = gamma * uniform;
                    probs.insert(vec![id], p);
                    Entry { log2_prob: p.log2(), log2_backoff: 0.0 }
                });
            }
        } else {
            // attach gamma(c) as the backoff weight of context c
            let parent = &mut tables[k - 2];
            for (ctx, stats) in &contexts {
                let gamma = stats.removed / stats.total as f64;
                let entry = parent.entry(ctx.to_vec()).or_insert_with(|| {
                    debug_assert!(ctx.iter().all(|&t| t == BOS_ID));
                    Entry { log2_prob: f64::NEG_INFINITY, log2_backoff: 0.0 }
                });
                entry.log2_backoff = gamma.log2();
            }
        }

        tables.push(table);
        lower_probs = probs;
    }

    NGramModel::from_parts(order, vocab, tables, Some(discounts))
}
