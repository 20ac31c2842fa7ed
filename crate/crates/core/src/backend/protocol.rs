//! Newline-delimited JSON protocol between the harness and scoring adapters.
//!
//! ```text
//! -> {"type":"hello","protocol":1}
//! <- {"type":"hello","protocol":1,"name":"...","deterministic":true}
//! -> {"type":"score","id":0,"words":["I","know","what"]}
//! <- {"type":"surprisals","id":0,"bits":[3.1,2.0,7.5],"eos_bits":1.2}
//! -> {"type":"shutdown"}
//! ```
//!
//! Adapters may answer pipelined requests in any order; replies are matched by
//! id. Anything else an adapter prints on stdout is a protocol violation, so
//! diagnostics belong on stderr.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError};

pub const PROTOCOL_VERSION: u32 = 1;

/// Sentence every adapter must score during the handshake.
pub const SELF_TEST_WORDS: &[&str] = &["I", "know", "what", "the", "lion", "devoured", "at", "sunrise", "."];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Request {
    Hello { protocol: u32 },
    Score { id: u64, words: Vec<String> },
    Shutdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Reply {
    Hello { protocol: u32, name: String, deterministic: bool },
    Surprisals { id: u64, bits: Vec<f64>, eos_bits: f64 },
}

pub fn self_test_words() -> Vec<String> {
    SELF_TEST_WORDS.iter().map(|w| w.to_string()).collect()
}

/// Checks one surprisal reply against the request it answers.
pub fn check_reply(id: u64, n_words: usize, bits: &[f64], eos_bits: f64) -> Result<(), BackendError> {
    let violation = |message: String| BackendError::Protocol { id: Some(id), message };
    if bits.len() != n_words {
        return Err(violation(format!("{} surprisal values for {} words", bits.len(), n_words)));
    }
    for (i, b) in bits.iter().chain(std::iter::once(&eos_bits)).enumerate() {
        if !b.is_finite() {
            return Err(violation(format!("non-finite surprisal at position {i}")));
        }
        if *b < 0.0 {
            return Err(violation(format!("negative surprisal {b} at position {i} (implies a probability above 1)")));
        }
    }
    Ok(())
}

/// Runs the adapter side of the protocol for a built-in backend until
/// `shutdown` or end of input.
pub fn serve<B: Backend + ?Sized>(
    backend: &mut B,
    input: impl BufRead,
    mut output: impl Write,
) -> Result<(), BackendError> {
    let send = |reply: &Reply, out: &mut dyn Write| -> Result<(), BackendError> {
        let line = serde_json::to_string(reply).expect("reply serializes");
        writeln!(out, "{line}")?;
        out.flush()?;
        Ok(())
    };
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = serde_json::from_str(&line)
            .map_err(|e| BackendError::Protocol { id: None, message: format!("bad request {line:?}: {e}") })?;
        match request {
            Request::Hello { protocol } => {
                if protocol != PROTOCOL_VERSION {
                    return Err(BackendError::VersionMismatch { expected: PROTOCOL_VERSION, got: protocol });
                }
                let hello = Reply::Hello {
                    protocol: PROTOCOL_VERSION,
                    name: backend.name().to_string(),
                    deterministic: backend.deterministic(),
                };
                send(&hello, &mut output)?;
            }
            Request::Score { id, words } => {
                let profile = backend
                    .score_batch(std::slice::from_ref(&words))
                    .map_err(|e| BackendError::Protocol { id: Some(id), message: e.to_string() })?
                    .remove(0);
                let reply = Reply::Surprisals { id, bits: profile.bits, eos_bits: profile.eos_bits.unwrap_or(0.0) };
                send(&reply, &mut output)?;
            }
            Request::Shutdown => break,
        }
    }
    Ok(())
}
