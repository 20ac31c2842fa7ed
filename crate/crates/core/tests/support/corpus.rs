//! Seeded synthetic corpora for the larger model tests.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUBJECTS: &[&str] = &[
    "the lion",
    "the businessman",
    "your friend",
    "my brother",
    "the librarian",
    "the family",
    "a visitor",
    "the patron",
    "alex",
    "the committee",
    "her cousin",
    "the painter",
];
const VERBS: &[&str] = &[
    "devoured", "showed", "gave", "placed", "bought", "said", "knew", "saw", "sent", "built", "painted", "fetched",
    "found", "wanted",
];
const OBJECTS: &[&str] = &[
    "a gazelle",
    "the presentation",
    "the book",
    "a painting",
    "the letter",
    "a high price",
    "the house",
    "some bread",
    "the report",
    "a gift",
    "the shelf",
    "the news",
];
const TAILS: &[&str] = &[
    "at sunrise",
    "to the visitors",
    "yesterday",
    "on the wrong shelf",
    "last year",
    "at the party",
    "during the picnic",
    "to sam",
    "at auction",
    "in the morning",
    "",
];
const EMBED: &[&str] = &["i know that", "we heard that", "she said", "i wonder whether", "they know what", ""];

/// About `tokens` whitespace tokens of template sentences, one per line.
pub fn synthetic_corpus(tokens: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |xs: &[&'static str]| xs[rng.random_range(0..xs.len())];
    let mut lines = Vec::new();
    let mut n = 0;
    while n < tokens {
        let parts = [pick(EMBED), pick(SUBJECTS), pick(VERBS), pick(OBJECTS), pick(TAILS), "."];
        let line: Vec<String> = parts.iter().flat_map(|p| p.split_whitespace()).map(String::from).collect();
        n += line.len();
        lines.push(line);
    }
    lines
}

/// Tiny corpora, each at most 30 tokens, for brute-force comparisons.
pub const TOY_CORPORA: &[&[&str]] = &[
    &["a b", "a c", "b a"],
    &["the cat sat", "the cat ran", "the dog sat", "a cat sat ."],
    &["x x x x", "x y x y", "y y x", "x x y", "y"],
    &["a b", "a b", "a b", "a b", "a c", "a c", "a c", "a d", "a d", "b c", "c d", "d"],
    &["we saw it .", "it saw us .", "we saw us .", "us saw it .", "we ran ."],
];
