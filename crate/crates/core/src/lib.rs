//! Tone-reservation PAPR reduction for OFDM.
//!
//! Two reducers are provided: a minimax-peak baseline ([`sota`]) and a
//! sparse reducer ([`sparse_fp`]) that meets a target PAPR while leaving
//! as many reserved tones unused as it can. [`montecarlo`] runs seeded
//! campaigns over random data symbols and summarizes them as empirical
//! CDFs and active-tone histograms. [`oracle`] holds brute-force
//! references used by the tests and by [`selfcheck`].

// NaN must fail the positivity checks, so they are written as !(x > 0.0)
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod conic;
pub mod error;
pub mod montecarlo;
pub mod oracle;
pub mod selfcheck;
pub mod signal;
pub mod sota;
pub mod sparse_fp;

pub use error::{Error, Result};
