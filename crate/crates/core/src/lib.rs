//! Ideal attribution mechanisms over binary language-model ledgers.
//!
//! The crate models a provider's interaction log as an append-only
//! [`Ledger`](attribution::Ledger) of prompt/response transcripts over `{0,1}`,
//! decides which response substrings are attributable to it through
//! [selection rules](attribution::SelectionRule), and implements watermarking
//! schemes whose verifiers are meant to track those ideal decisions:
//!
//! - [`watermark`]: pseudorandom-code embedding, undetectable for any model
//!   and robust with respect to the potential-bounded block rule;
//! - [`unforgeable`]: signature-chained blocks whose verifier is sandwiched
//!   between a prefix-locked robust attribution and an upper envelope.
//!
//! The [`games`] module runs the adversarial experiments that check each
//! guarantee empirically (or exhibit where it fails) and produces
//! deterministic [`GameReport`](games::GameReport)s.

pub mod attribution;
pub mod bits;
pub mod cli;
pub mod config;
pub mod games;
pub mod model;
pub mod prc;
pub mod predicate;
pub mod rng;
pub mod unforgeable;
pub mod watermark;

pub use bits::{bits, BitError, BitString};
pub use model::{LanguageModel, Model};
pub use predicate::Predicate;
