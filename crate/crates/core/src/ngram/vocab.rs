use std::collections::{BTreeSet, HashMap};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub const BOS_ID: u32 = 0;
pub const EOS_ID: u32 = 1;
pub const UNK_ID: u32 = 2;

/// Dense token <-> id mapping. Ids 0, 1, 2 are always `<s>`, `</s>`, `<unk>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    min_count: u64,
}

impl Vocabulary {
    fn with_reserved(min_count: u64) -> Self {
        let mut v = Vocabulary { tokens: Vec::new(), ids: HashMap::new(), min_count };
        for t in [BOS, EOS, UNK] {
            v.insert(t);
        }
        v
    }

    /// Builds a vocabulary from token frequencies. Tokens seen fewer than
    /// `min_count` times are left out (they will map to `<unk>`). Non-reserved
    /// tokens get ids in lexicographic order so the mapping is reproducible.
    pub fn from_counts(freqs: &HashMap<&str, u64>, min_count: u64) -> Self {
        let mut v = Self::with_reserved(min_count);
        let kept: BTreeSet<&str> =
            freqs.iter().filter(|(t, c)| **c >= min_count && ![BOS, EOS, UNK].contains(*t)).map(|(t, _)| *t).collect();
        for t in kept {
            v.insert(t);
        }
        v
    }

    /// Builds a vocabulary from an explicit token list (ARPA import). The
    /// reserved tokens are added if missing.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut v = Self::with_reserved(1);
        for t in tokens {
            v.insert(t);
        }
        v
    }

    fn insert(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of tokens that can be predicted, i.e. everything except `<s>`.
    pub fn predictable_len(&self) -> usize {
        self.tokens.len() - 1
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    /// Id of `token`, or the `<unk>` id for out-of-vocabulary tokens. A literal
    /// `<s>` in the input is also treated as unknown: it is never predicted.
    pub fn id_or_unk(&self, token: &str) -> u32 {
        match self.ids.get(token) {
            Some(&BOS_ID) | None => UNK_ID,
            Some(&id) => id,
        }
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    /// Ids of every predictable token (all but `<s>`).
    pub fn predictable_ids(&self) -> impl Iterator<Item = u32> {
        (0..self.tokens.len() as u32).filter(|&i| i != BOS_ID)
    }
}
