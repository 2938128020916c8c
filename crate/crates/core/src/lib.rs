//! Core algorithms for studying why bilingual speakers code-switch.
//!
//! The crate is `no_std` (it needs `alloc`) and performs no IO. It covers the
//! whole pipeline as pure functions over in-memory data:
//!
//! * [`chat`] parses CHAT-style transcripts into [`Transcript`]s,
//! * [`langid`] tags unmarked tokens with a character n-gram model,
//! * [`switches`] finds language-change points and cuts context windows,
//! * [`schema`] and [`annotation`] hold the 11 motivation labels and the
//!   agreement statistics over annotator records,
//! * [`nb`] is the per-label multinomial Naive Bayes classifier,
//! * [`translate`] re-targets Spanish-English instances to Hindi-English,
//! * [`eval`] implements splits, grid search, seed variance and reports.
//!
//! File formats, HTTP clients, the annotation server and the CLI live in the
//! `csmotive` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod annotation;
pub mod chat;
pub mod eval;
pub mod lang;
pub mod langid;
pub mod nb;
pub mod romanize;
pub mod schema;
pub mod switches;
pub mod text;
pub mod transcript;
pub mod translate;

pub use lang::LangTag;
pub use schema::{LabelKey, LabelSchema, LabelSet};
pub use switches::SwitchInstance;

pub use transcript::{Token, Transcript, Utterance};
