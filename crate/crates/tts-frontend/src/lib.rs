//! English text-to-speech front-end: text normalization (TN), prosody
//! word / prosody phrase prediction (PWPP) and grapheme-to-phoneme (G2P)
//! conversion built around a shared trainable sequence-model core, producing
//! phoneme-level rows (word, phoneme, prosody, part of speech) from raw
//! text.
//!
//! The library is the primary interface; each major capability has a
//! runnable example:
//!
//! ```bash
//! cargo run --example tokenize_spans      # tokens + BIES span codec
//! cargo run --example verbalize_numbers   # category verbalizers
//! cargo run --example tn_rules_hotwords   # pre/post rules and hotwords
//! cargo run --example crf_tagging         # masked CRF training + decoding
//! cargo run --example beam_search_g2p     # OOV phonemizer + beam sweep
//! cargo run --example prosody_levels      # hierarchical prosody tagging
//! cargo run --example homograph_resolution# POS + polyphone pronunciation updates
//! cargo run --example full_frontend       # raw text -> normative rows
//! ```
//!
//! A thin `tts-frontend` binary wraps the same calls behind `frontend`,
//! `normalize`, `g2p`, `train <task>` and `eval <task>` subcommands.

pub mod align;
pub mod core;
pub mod error;
pub mod g2p;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod pwpp;
pub mod tn;

pub use error::{Error, Result};
