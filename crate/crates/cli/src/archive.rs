//! Raw surprisal archives: gzip-compressed TSV, one row per word plus one per
//! terminal event, with a JSON manifest next to it.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use filler_gap_core::suite::{ConditionSentence, Experiment};
use filler_gap_core::SurprisalProfile;
use flate2::read::GzDecoder;
use flate2::{Compression, GzBuilder};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fmt::{num, parse_num};

pub const COLUMNS: [&str; 7] = ["item", "condition", "position", "region", "word", "bits", "terminal"];

/// Terminal rows carry this in the `word` and `region` columns.
pub const TERMINAL: &str = "</s>";

/// Gzip bytes of the archive. The gzip header carries no timestamp or file
/// name, so equal inputs give equal bytes.
pub fn archive_bytes(
    experiment: &Experiment,
    sentences: &[ConditionSentence],
    profiles: &[SurprisalProfile],
) -> Result<Vec<u8>> {
    let mut tsv = COLUMNS.join("\t");
    tsv.push('\n');
    for (s, p) in sentences.iter().zip(profiles) {
        let item = &experiment.items[s.item].id.0;
        let cond = experiment.condition_label(&s.condition);
        if p.words != s.words {
            bail!("item {item}, condition {cond}: profile words do not match the sentence");
        }
        for span in &s.spans {
            for i in span.start..span.end {
                tsv.push_str(&format!("{item}\t{cond}\t{i}\t{}\t{}\t{}\t0\n", span.label, s.words[i], num(p.bits[i])));
            }
        }
        if let Some(eos) = p.eos_bits {
            tsv.push_str(&format!("{item}\t{cond}\t{}\t{TERMINAL}\t{TERMINAL}\t{}\t1\n", s.words.len(), num(eos)));
        }
    }
    let mut enc = GzBuilder::new().mtime(0).write(Vec::new(), Compression::default());
    enc.write_all(tsv.as_bytes())?;
    Ok(enc.finish()?)
}

pub fn decompress(bytes: &[u8]) -> Result<String> {
    let mut text = String::new();
    GzDecoder::new(bytes).read_to_string(&mut text).context("archive is not valid gzip text")?;
    Ok(text)
}

/// Word rows `(position, word, bits)` and the terminal value of one sentence.
type SentenceRows = (Vec<(usize, String, f64)>, Option<f64>);

/// Profiles in expansion order, checked word by word against `sentences`.
pub fn read_profiles(
    bytes: &[u8],
    experiment: &Experiment,
    sentences: &[ConditionSentence],
    backend: &str,
) -> Result<Vec<SurprisalProfile>> {
    let text = decompress(bytes)?;
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).unwrap_or_default();
    if header != COLUMNS.join("\t") {
        bail!("archive header is {header:?}, expected {:?}", COLUMNS.join("\t"));
    }
    let mut rows: BTreeMap<(String, String), SentenceRows> = BTreeMap::new();
    for (n, line) in lines {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != COLUMNS.len() {
            bail!("archive line {}: {} fields, expected {}", n + 1, f.len(), COLUMNS.len());
        }
        let bits = parse_num(f[5]).ok_or_else(|| anyhow!("archive line {}: bad bits {:?}", n + 1, f[5]))?;
        let entry = rows.entry((f[0].to_string(), f[1].to_string())).or_default();
        match f[6] {
            "1" => entry.1 = Some(bits),
            "0" => {
                let pos: usize = f[2].parse().with_context(|| format!("archive line {}: bad position", n + 1))?;
                entry.0.push((pos, f[4].to_string(), bits));
            }
            other => bail!("archive line {}: terminal flag {other:?}", n + 1),
        }
    }
    let mut out = Vec::with_capacity(sentences.len());
    for s in sentences {
        let item = experiment.items[s.item].id.0.clone();
        let cond = experiment.condition_label(&s.condition);
        let (mut words, eos) = rows
            .remove(&(item.clone(), cond.clone()))
            .ok_or_else(|| anyhow!("archive has no rows for item {item}, condition {cond}"))?;
        words.sort_by_key(|w| w.0);
        let ok = words.len() == s.words.len()
            && words.iter().enumerate().all(|(i, (pos, w, _))| *pos == i && *w == s.words[i]);
        if !ok {
            bail!("archive rows for item {item}, condition {cond} do not match the experiment's sentence");
        }
        out.push(SurprisalProfile {
            words: s.words.clone(),
            bits: words.into_iter().map(|w| w.2).collect(),
            eos_bits: eos,
            backend: backend.to_string(),
        });
    }
    if let Some(((item, cond), _)) = rows.into_iter().next() {
        bail!("archive has rows for item {item}, condition {cond}, which the experiment does not define");
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub experiment_path: PathBuf,
    /// Backend descriptor as given on the command line.
    pub backend: String,
    /// Name the backend reported for itself.
    pub backend_name: String,
    pub deterministic: bool,
    pub harness_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// SHA-256 of the experiment file, the archive, and any model file.
    pub digests: BTreeMap<String, String>,
    /// Files the digests refer to, by the same keys.
    pub files: BTreeMap<String, PathBuf>,
}

pub fn manifest_path(archive: &Path) -> PathBuf {
    let mut s = archive.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

impl Manifest {
    /// Names of inputs whose current digest differs from the recorded one.
    pub fn stale_inputs(&self) -> Vec<String> {
        let mut stale = Vec::new();
        for (key, want) in &self.digests {
            let now = self.files.get(key).and_then(|p| sha256_file(p).ok());
            if now.as_deref() != Some(want.as_str()) {
                let path = self.files.get(key).map(|p| p.display().to_string()).unwrap_or_default();
                stale.push(format!("{key} ({path})"));
            }
        }
        stale
    }
}
