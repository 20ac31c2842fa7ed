//! ARPA text serialization.
//!
//! Files store log10 probabilities and backoff weights; the in-memory model
//! is log2. Values are written with the shortest representation that parses
//! back to the same `f64`, so export/import is lossless up to the base change.

use std::collections::HashMap;
use std::f64::consts::LOG10_2;
use std::fmt::Write as _;

use super::model::{Entry, NGramModel};
use super::vocab::{Vocabulary, BOS, BOS_ID, UNK};
use super::NgramError;

/// log10 probability written for events that never occur (`<s>` as a word).
const LOG10_ZERO: f64 = -99.0;
/// log10 probability given to `<unk>` when an ARPA file does not list it.
pub const MISSING_UNK_LOG10: f64 = -100.0;

fn to_log10(log2: f64) -> f64 {
    if log2 == f64::NEG_INFINITY {
        LOG10_ZERO
    } else {
        log2 * LOG10_2
    }
}

fn to_log2(log10: f64) -> f64 {
    log10 / LOG10_2
}

pub fn export_arpa(model: &NGramModel) -> String {
    let vocab = model.vocab();
    let order = model.order();
    let mut out = String::new();
    out.push_str("\\data\\\n");
    for (k, n) in model.ngram_counts().iter().enumerate() {
        let _ = writeln!(out, "ngram {}={}", k + 1, n);
    }

    for k in 1..=order {
        let _ = write!(out, "\n\\{k}-grams:\n");
        let mut rows: Vec<(Vec<&str>, &Entry)> =
            model.entries(k).map(|(g, e)| (g.iter().map(|&id| vocab.token(id)).collect(), e)).collect();
        if k == 1 {
            rows.sort_by_key(|(g, _)| vocab.id(g[0]));
        } else {
            rows.sort_by(|a, b| a.0.cmp(&b.0));
        }
        for (gram, e) in rows {
            let _ = write!(out, "{}\t{}", to_log10(e.log2_prob), gram.join(" "));
            if k < order && e.log2_backoff != 0.0 {
                let _ = write!(out, "\t{}", to_log10(e.log2_backoff));
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

fn err(line: usize, message: impl Into<String>) -> NgramError {
    NgramError::Arpa { line, message: message.into() }
}

fn parse_f64(field: &str, line: usize) -> Result<f64, NgramError> {
    field.parse::<f64>().map_err(|_| err(line, format!("non-numeric field {field:?}")))
}

struct RawEntry<'a> {
    log10_prob: f64,
    tokens: Vec<&'a str>,
    log10_backoff: f64,
    line: usize,
}

pub fn import_arpa(text: &str) -> Result<NGramModel, NgramError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    // header
    loop {
        match lines.next() {
            Some((_, "\\data\\")) => break,
            Some((_, "")) => continue,
            Some((n, other)) => return Err(err(n, format!("expected \\data\\, found {other:?}"))),
            None => return Err(err(0, "missing \\data\\ header")),
        }
    }
    let mut declared: Vec<usize> = Vec::new();
    let mut pending: Option<(usize, &str)> = None;
    for (n, line) in lines.by_ref() {
        if line.is_empty() {
            if declared.is_empty() {
                continue;
            }
            break;
        }
        let Some(spec) = line.strip_prefix("ngram ") else {
            pending = Some((n, line));
            break;
        };
        let (k, count) = spec.split_once('=').ok_or_else(|| err(n, format!("malformed count line {line:?}")))?;
        let k: usize = k.trim().parse().map_err(|_| err(n, format!("bad order in {line:?}")))?;
        let count: usize = count.trim().parse().map_err(|_| err(n, format!("bad count in {line:?}")))?;
        if k != declared.len() + 1 {
            return Err(err(n, format!("expected ngram {}=..., found {line:?}", declared.len() + 1)));
        }
        declared.push(count);
    }
    if declared.is_empty() {
        return Err(err(0, "header declares no n-gram orders"));
    }
    let order = declared.len();

    // sections
    let mut sections: Vec<Vec<RawEntry>> = Vec::with_capacity(order);
    let mut current: Option<usize> = None;
    let mut ended = false;
    let mut section_start = 0;
    let close = |k: usize, entries: &[RawEntry], start: usize| -> Result<(), NgramError> {
        if entries.len() != declared[k - 1] {
            return Err(err(
                start,
                format!(
                    "section \\{k}-grams: declares {} entries in the header but contains {}",
                    declared[k - 1],
                    entries.len()
                ),
            ));
        }
        Ok(())
    };
    for (n, line) in pending.into_iter().chain(lines) {
        if line.is_empty() {
            continue;
        }
        if line == "\\end\\" {
            if let Some(k) = current {
                close(k, &sections[k - 1], section_start)?;
            }
            ended = true;
            break;
        }
        if let Some(k) = line.strip_prefix('\\').and_then(|s| s.strip_suffix("-grams:")) {
            let k: usize = k.parse().map_err(|_| err(n, format!("bad section header {line:?}")))?;
            if let Some(prev) = current {
                close(prev, &sections[prev - 1], section_start)?;
            }
            if k != sections.len() + 1 || k > order {
                return Err(err(n, format!("unexpected section {line:?}")));
            }
            sections.push(Vec::new());
            current = Some(k);
            section_start = n;
            continue;
        }
        let Some(k) = current else {
            return Err(err(n, format!("entry outside any n-gram section: {line:?}")));
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != k + 1 && fields.len() != k + 2 {
            return Err(err(
                n,
                format!("\\{k}-grams: entry has {} fields, expected {} or {}", fields.len(), k + 1, k + 2),
            ));
        }
        let log10_prob = parse_f64(fields[0], n)?;
        let log10_backoff = match fields.get(k + 1) {
            Some(f) => parse_f64(f, n)?,
            None => 0.0,
        };
        sections[k - 1].push(RawEntry { log10_prob, tokens: fields[1..=k].to_vec(), log10_backoff, line: n });
    }
    if !ended {
        return Err(err(text.lines().count(), "missing \\end\\ marker"));
    }
    if sections.len() != order {
        return Err(err(
            text.lines().count(),
            format!("header declares {order} orders but {} sections are present", sections.len()),
        ));
    }

    let has_unk = sections[0].iter().any(|e| e.tokens[0] == UNK);
    if !has_unk {
        sections[0].push(RawEntry { log10_prob: MISSING_UNK_LOG10, tokens: vec![UNK], log10_backoff: 0.0, line: 0 });
    }
    if !sections[0].iter().any(|e| e.tokens[0] == BOS) {
        sections[0].push(RawEntry { log10_prob: LOG10_ZERO, tokens: vec![BOS], log10_backoff: 0.0, line: 0 });
    }
    let vocab = Vocabulary::from_tokens(sections[0].iter().map(|e| e.tokens[0]));

    let mut tables: Vec<HashMap<Vec<u32>, Entry>> = Vec::with_capacity(order);
    for (k, section) in sections.iter().enumerate() {
        let mut table = HashMap::with_capacity(section.len());
        for e in section {
            let mut ids = Vec::with_capacity(k + 1);
            for t in &e.tokens {
                ids.push(
                    vocab
                        .id(t)
                        .ok_or_else(|| err(e.line, format!("token {t:?} does not appear among the unigrams")))?,
                );
            }
            let log2_prob = if *ids.last().unwrap() == BOS_ID && e.log10_prob <= LOG10_ZERO {
                f64::NEG_INFINITY
            } else {
                to_log2(e.log10_prob)
            };
            let entry = Entry { log2_prob, log2_backoff: to_log2(e.log10_backoff) };
            if table.insert(ids, entry).is_some() {
                return Err(err(e.line, format!("duplicate n-gram {:?}", e.tokens.join(" "))));
            }
        }
        tables.push(table);
    }

    Ok(NGramModel::from_parts(order, vocab, tables, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::{build_counts, estimate_mkn, tokenize_corpus};

    #[test]
    fn unigram_only_base_conversion() {
        let text = "\\data\\\nngram 1=2\n\n\\1-grams:\n-0.5\t</s>\n-0.25\thello\n\n\\end\\\n";
        let m = import_arpa(text).unwrap();
        let p = m.score_words(&["hello"]);
        assert!((p.bits[0] - 0.25 / LOG10_2).abs() < 1e-12);
        assert!((p.eos_bits.unwrap() - 0.5 / LOG10_2).abs() < 1e-12);
        // <unk> was not listed
        let oov = m.score_words(&["nope"]);
        assert!((oov.bits[0] - (-MISSING_UNK_LOG10) / LOG10_2).abs() < 1e-9);
        assert!(oov.bits[0].is_finite());
    }

    #[test]
    fn count_mismatch_names_section() {
        let text = "\\data\\\nngram 1=3\nngram 2=5\n\n\\1-grams:\n-1\t<s>\t-0.5\n-0.5\ta\t-0.2\n-0.4\t</s>\n\n\\2-grams:\n-0.1\t<s> a\n-0.3\ta </s>\n-0.2\ta a\n-0.9\t<s> </s>\n\n\\end\\\n";
        let e = import_arpa(text).unwrap_err().to_string();
        assert!(e.contains("\\2-grams:"), "{e}");
        assert!(e.contains("declares 5"), "{e}");
    }

    #[test]
    fn non_numeric_field_reports_line() {
        let text = "\\data\\\nngram 1=1\n\n\\1-grams:\nabc\t</s>\n\\end\\\n";
        match import_arpa(text) {
            Err(NgramError::Arpa { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("non-numeric"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_header() {
        assert!(import_arpa("hello\n").is_err());
        assert!(import_arpa("\\data\\\nngram x=1\n").is_err());
        assert!(import_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\n-1\t</s>\n").is_err());
    }

    #[test]
    fn round_trip_preserves_surprisal() {
        let corpus = tokenize_corpus("a b c\nb c a\nc a b b\na a a\nb");
        let m = estimate_mkn(&build_counts(&corpus, 3, 1).unwrap());
        let back = import_arpa(&export_arpa(&m)).unwrap();
        assert_eq!(back.order(), 3);
        for s in [vec!["a", "b"], vec!["c", "c", "x", "a"], vec!["b"]] {
            let (p, q) = (m.score_words(&s), back.score_words(&s));
            for (x, y) in p.bits.iter().zip(&q.bits) {
                assert!((x - y).abs() < 1e-9);
            }
            assert!((p.eos_bits.unwrap() - q.eos_bits.unwrap()).abs() < 1e-9);
        }
        // export is stable
        assert_eq!(export_arpa(&back), export_arpa(&m));
    }
}
