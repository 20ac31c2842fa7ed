//! Backend descriptors from the command line and batch scoring over them.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use filler_gap_core::backend::{
    score_shared, spawn_external, Backend, BackendError, ExternalBackend, ExternalConfig, NgramBackend, OracleTable,
    SentenceScorer, UniformBackend,
};
use filler_gap_core::ngram::import_arpa;
use filler_gap_core::SurprisalProfile;

#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    /// ARPA model file.
    Ngram(PathBuf),
    /// Uniform distribution over a vocabulary of the given size.
    Uniform(u64),
    /// JSON oracle table.
    Oracle(PathBuf),
    /// External adapter command line.
    Exec(Vec<String>),
}

impl FromStr for BackendSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| anyhow!("backend {s:?} should be ngram:PATH, uniform:V, oracle:PATH or exec:CMD"))?;
        match kind {
            "ngram" => Ok(BackendSpec::Ngram(arg.into())),
            "oracle" => Ok(BackendSpec::Oracle(arg.into())),
            "uniform" => {
                let v: u64 = arg.parse().with_context(|| format!("uniform vocabulary size {arg:?}"))?;
                if v == 0 {
                    bail!("uniform vocabulary size must be at least 1");
                }
                Ok(BackendSpec::Uniform(v))
            }
            "exec" => {
                let argv = shlex::split(arg).ok_or_else(|| anyhow!("cannot split command {arg:?}"))?;
                if argv.is_empty() {
                    bail!("exec backend needs a command");
                }
                Ok(BackendSpec::Exec(argv))
            }
            other => bail!("unknown backend kind {other:?}; expected ngram, uniform, oracle or exec"),
        }
    }
}

impl BackendSpec {
    pub fn descriptor(&self) -> String {
        match self {
            BackendSpec::Ngram(p) => format!("ngram:{}", p.display()),
            BackendSpec::Uniform(v) => format!("uniform:{v}"),
            BackendSpec::Oracle(p) => format!("oracle:{}", p.display()),
            BackendSpec::Exec(argv) => {
                format!("exec:{}", shlex::try_join(argv.iter().map(String::as_str)).unwrap_or_default())
            }
        }
    }

    /// Model file whose digest belongs in a run manifest.
    pub fn model_file(&self) -> Option<&Path> {
        match self {
            BackendSpec::Ngram(p) | BackendSpec::Oracle(p) => Some(p),
            _ => None,
        }
    }

    pub fn open(&self) -> Result<OpenBackend> {
        Ok(match self {
            BackendSpec::Ngram(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let model = import_arpa(&text).with_context(|| format!("loading ARPA model {}", p.display()))?;
                OpenBackend::Shared(Box::new(NgramBackend::new(Arc::new(model))))
            }
            BackendSpec::Uniform(v) => OpenBackend::Shared(Box::new(UniformBackend::new(*v)?)),
            BackendSpec::Oracle(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let table = OracleTable::from_json(&text).with_context(|| format!("loading {}", p.display()))?;
                OpenBackend::Shared(Box::new(table))
            }
            BackendSpec::Exec(argv) => {
                OpenBackend::External(spawn_external(&argv[0], &argv[1..], ExternalConfig::default())?)
            }
        })
    }
}

pub enum OpenBackend {
    /// Built-in backends, scored from several threads.
    Shared(Box<dyn SentenceScorer>),
    External(ExternalBackend),
}

/// A scoring failure and the index of the sentence it concerns, if known.
#[derive(Debug)]
pub struct ScoreFailure {
    pub index: Option<usize>,
    pub error: BackendError,
}

impl OpenBackend {
    pub fn name(&self) -> &str {
        match self {
            OpenBackend::Shared(s) => s.name(),
            OpenBackend::External(e) => e.name(),
        }
    }

    pub fn deterministic(&self) -> bool {
        match self {
            OpenBackend::Shared(_) => true,
            OpenBackend::External(e) => e.deterministic(),
        }
    }

    /// Scores every sentence; profiles come back in input order.
    pub fn score_all(
        &mut self,
        sentences: &[Vec<String>],
        threads: usize,
    ) -> Result<Vec<SurprisalProfile>, ScoreFailure> {
        match self {
            OpenBackend::Shared(s) => score_parallel(s.as_ref(), sentences, threads),
            OpenBackend::External(e) => {
                let first = e.next_request_id();
                e.score_batch(sentences).map_err(|error| {
                    let id = match &error {
                        BackendError::Protocol { id: Some(id), .. } => Some(*id),
                        BackendError::EmptySentence { id } => Some(*id),
                        _ => None,
                    };
                    let index =
                        id.and_then(|id| id.checked_sub(first)).map(|i| i as usize).filter(|&i| i < sentences.len());
                    ScoreFailure { index, error }
                })
            }
        }
    }
}

impl Backend for OpenBackend {
    fn name(&self) -> &str {
        OpenBackend::name(self)
    }

    fn deterministic(&self) -> bool {
        OpenBackend::deterministic(self)
    }

    fn score_batch(&mut self, sentences: &[Vec<String>]) -> Result<Vec<SurprisalProfile>, BackendError> {
        match self {
            OpenBackend::Shared(s) => score_shared(s.as_ref(), sentences),
            OpenBackend::External(e) => e.score_batch(sentences),
        }
    }
}

fn score_parallel(
    scorer: &dyn SentenceScorer,
    sentences: &[Vec<String>],
    threads: usize,
) -> Result<Vec<SurprisalProfile>, ScoreFailure> {
    if sentences.is_empty() {
        return Err(ScoreFailure { index: None, error: BackendError::EmptyBatch });
    }
    let threads = threads.clamp(1, sentences.len());
    let chunk = sentences.len().div_ceil(threads);
    let score_one = |i: usize, words: &Vec<String>| {
        if words.is_empty() {
            return Err(ScoreFailure { index: Some(i), error: BackendError::EmptySentence { id: i as u64 } });
        }
        scorer.score(i as u64, words).map_err(|error| ScoreFailure { index: Some(i), error })
    };
    std::thread::scope(|scope| {
        let handles: Vec<_> = sentences
            .chunks(chunk)
            .enumerate()
            .map(|(c, part)| {
                scope.spawn(move || {
                    part.iter().enumerate().map(|(j, w)| score_one(c * chunk + j, w)).collect::<Result<Vec<_>, _>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(sentences.len());
        for h in handles {
            out.extend(h.join().expect("scoring thread panicked")?);
        }
        Ok(out)
    })
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_descriptors() {
        assert_eq!("uniform:8".parse::<BackendSpec>().unwrap(), BackendSpec::Uniform(8));
        assert_eq!("ngram:m.arpa".parse::<BackendSpec>().unwrap(), BackendSpec::Ngram("m.arpa".into()));
        assert_eq!(
            "exec:python3 'my adapter.py' --x".parse::<BackendSpec>().unwrap(),
            BackendSpec::Exec(vec!["python3".into(), "my adapter.py".into(), "--x".into()])
        );
        assert_eq!(
            "exec:python3 'my adapter.py'".parse::<BackendSpec>().unwrap().descriptor(),
            "exec:python3 'my adapter.py'"
        );
        for bad in ["uniform:0", "uniform:x", "gpt:foo", "ngram", "exec:"] {
            assert!(bad.parse::<BackendSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn parallel_scoring_keeps_order() {
        let u = UniformBackend::new(4).unwrap();
        let sentences: Vec<Vec<String>> = (1..50).map(|n| vec!["w".to_string(); n]).collect();
        let out = score_parallel(&u, &sentences, 7).unwrap();
        for (p, s) in out.iter().zip(&sentences) {
            assert_eq!(p.words.len(), s.len());
        }
        let mut with_empty = sentences.clone();
        with_empty[33].clear();
        assert_eq!(score_parallel(&u, &with_empty, 4).unwrap_err().index, Some(33));
    }
}
