//! Measuring filler-gap licensing in language models.
//!
//! The crate is organised around four pieces:
//!
//! - [`ngram`]: an interpolated modified Kneser-Ney n-gram model with ARPA
//!   import/export, used as the no-dependency baseline.
//! - [`backend`]: a uniform word-level scoring contract over built-in models
//!   and external subprocess scorers speaking a newline-delimited JSON protocol.
//! - [`suite`]: factorial experiment files, their expansion into region-aligned
//!   condition sentences, and region measurements.
//! - [`stats`]: the 2x2 wh-licensing interaction, REML random-intercept
//!   regression, within-item confidence intervals, slope and island contrasts.
//!
//! Surprisal is always in bits.

pub mod analysis;
pub mod backend;
pub mod ngram;
pub mod profile;
pub mod stats;
pub mod suite;

pub use profile::SurprisalProfile;
