use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{check_reply, self_test_words, Reply, Request, PROTOCOL_VERSION};
use super::{Backend, BackendError};
use crate::profile::SurprisalProfile;

#[derive(Debug, Clone)]
pub struct ExternalConfig {
    /// Limit for the hello exchange plus the self-test scoring.
    pub handshake_timeout: Duration,
    /// Limit for each reply during normal scoring.
    pub reply_timeout: Duration,
    /// Tolerance for the double-scoring check of adapters that declare
    /// themselves deterministic.
    pub determinism_tolerance: f64,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        ExternalConfig {
            handshake_timeout: Duration::from_secs(30),
            reply_timeout: Duration::from_secs(600),
            determinism_tolerance: 1e-9,
        }
    }
}

/// A scoring adapter running as a child process.
pub struct ExternalBackend {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    name: String,
    deterministic: bool,
    config: ExternalConfig,
}

/// Starts `program args...`, performs the hello exchange, and scores the
/// protocol self-test sentence. Adapters declaring `deterministic: true` score
/// it twice and must agree within the configured tolerance.
pub fn spawn_external(program: &str, args: &[String], config: ExternalConfig) -> Result<ExternalBackend, BackendError> {
    let command = std::iter::once(program.to_string()).chain(args.iter().cloned()).collect::<Vec<_>>().join(" ");
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|source| BackendError::Spawn { command: command.clone(), source })?;
    let stdin = child.stdin.take().expect("stdin is piped");
    let stdout = child.stdout.take().expect("stdout is piped");

    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });

    let mut backend =
        ExternalBackend { child, stdin, lines: rx, next_id: 0, name: command, deterministic: false, config };
    backend.handshake()?;
    Ok(backend)
}

impl ExternalBackend {
    /// Id the next scored sentence will carry; the i-th sentence of the next
    /// batch gets `next_request_id() + i`.
    pub fn next_request_id(&self) -> u64 {
        self.next_id
    }

    fn send(&mut self, request: &Request) -> Result<(), BackendError> {
        let line = serde_json::to_string(request).expect("request serializes");
        writeln!(self.stdin, "{line}")?;
        self.stdin.flush()?;
        Ok(())
    }

    fn recv(&mut self, deadline: Instant, what: &str) -> Result<Reply, BackendError> {
        let wait = deadline.saturating_duration_since(Instant::now());
        let line = match self.lines.recv_timeout(wait) {
            Ok(line) => line?,
            Err(RecvTimeoutError::Timeout) => {
                return Err(BackendError::Timeout { what: what.to_string(), secs: (wait.as_secs_f64()).max(0.0) })
            }
            Err(RecvTimeoutError::Disconnected) => {
                let status = self.child.try_wait().ok().flatten();
                return Err(BackendError::Protocol {
                    id: None,
                    message: format!(
                        "adapter closed stdout while waiting for {what}{}",
                        status.map(|s| format!(" ({s})")).unwrap_or_default()
                    ),
                });
            }
        };
        serde_json::from_str(&line).map_err(|e| BackendError::Protocol {
            id: None,
            message: format!("unparseable line on stdout {line:?}: {e}"),
        })
    }

    fn handshake(&mut self) -> Result<(), BackendError> {
        let deadline = Instant::now() + self.config.handshake_timeout;
        self.send(&Request::Hello { protocol: PROTOCOL_VERSION })
            .map_err(|e| BackendError::Handshake(format!("could not send hello: {e}")))?;
        match self.recv(deadline, "the adapter's hello")? {
            Reply::Hello { protocol, name, deterministic } => {
                if protocol != PROTOCOL_VERSION {
                    return Err(BackendError::VersionMismatch { expected: PROTOCOL_VERSION, got: protocol });
                }
                self.name = name;
                self.deterministic = deterministic;
            }
            other => {
                return Err(BackendError::Handshake(format!("expected a hello reply, got {other:?}")));
            }
        }

        let words = self_test_words();
        let copies = if self.deterministic { 2 } else { 1 };
        let batch = vec![words; copies];
        let out = self.score_until(&batch, deadline, "the self-test reply")?;
        if self.deterministic {
            let worst = out[0]
                .bits
                .iter()
                .zip(&out[1].bits)
                .chain(std::iter::once((&out[0].eos_bits.unwrap_or(0.0), &out[1].eos_bits.unwrap_or(0.0))))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if worst > self.config.determinism_tolerance {
                return Err(BackendError::Nondeterministic {
                    name: self.name.clone(),
                    detail: format!("declared deterministic but double-scoring the self-test differed by {worst} bits"),
                });
            }
        }
        Ok(())
    }

    fn score_until(
        &mut self,
        sentences: &[Vec<String>],
        deadline: Instant,
        what: &str,
    ) -> Result<Vec<SurprisalProfile>, BackendError> {
        if sentences.is_empty() {
            return Err(BackendError::EmptyBatch);
        }
        let first = self.next_id;
        let mut pending: HashMap<u64, usize> = HashMap::with_capacity(sentences.len());
        for (i, words) in sentences.iter().enumerate() {
            let id = first + i as u64;
            if words.is_empty() {
                return Err(BackendError::EmptySentence { id });
            }
            pending.insert(id, i);
        }
        // the reader thread drains stdout continuously, so writing every
        // request before reading cannot deadlock
        for (i, words) in sentences.iter().enumerate() {
            self.send(&Request::Score { id: first + i as u64, words: words.clone() })?;
        }
        self.next_id += sentences.len() as u64;

        let mut out: Vec<Option<SurprisalProfile>> = vec![None; sentences.len()];
        while !pending.is_empty() {
            match self.recv(deadline, what)? {
                Reply::Surprisals { id, bits, eos_bits } => {
                    let i = pending.remove(&id).ok_or_else(|| BackendError::Protocol {
                        id: Some(id),
                        message: "reply to an unknown or already answered request".into(),
                    })?;
                    check_reply(id, sentences[i].len(), &bits, eos_bits)?;
                    out[i] = Some(SurprisalProfile {
                        words: sentences[i].clone(),
                        bits,
                        eos_bits: Some(eos_bits),
                        backend: self.name.clone(),
                    });
                }
                other => {
                    return Err(BackendError::Protocol {
                        id: None,
                        message: format!("expected surprisals, got {other:?}"),
                    })
                }
            }
        }
        Ok(out.into_iter().map(|p| p.expect("every request answered")).collect())
    }
}

impl Backend for ExternalBackend {
    fn name(&self) -> &str {
        &self.name
    }

    fn deterministic(&self) -> bool {
        self.deterministic
    }

    fn score_batch(&mut self, sentences: &[Vec<String>]) -> Result<Vec<SurprisalProfile>, BackendError> {
        let deadline = Instant::now() + self.config.reply_timeout;
        self.score_until(sentences, deadline, "surprisal replies")
    }
}

impl Drop for ExternalBackend {
    fn drop(&mut self) {
        let _ = self.send(&Request::Shutdown);
        let deadline = Instant::now() + Duration::from_secs(2);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
