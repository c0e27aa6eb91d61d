//! Ingestion of the per-token TN corpus format:
//! `<token> <tab> <class> <tab> <verbalization>` lines with `<eos>` sentence
//! separators. `PLAIN` and `PUNCT` tokens carry no span; `<self>` (or the
//! corpus' silence marker) means the token verbalizes as itself.

use crate::core::inventory::CategoryInventory;
use crate::core::span::{LabelScheme, SpanTag};
use crate::core::token::{tokenize, Token};
use crate::error::{Error, Result};
use crate::models::train::TagExample;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct TnSentence {
    /// Space-joined corpus tokens.
    pub text: String,
    /// Tokenizer output over `text` (corpus tokens may split further).
    pub tokens: Vec<Token>,
    pub spans: Vec<SpanTag>,
    /// Gold verbalization per span, aligned with `spans`.
    pub span_verbalizations: Vec<String>,
    /// The full expected normalized sentence.
    pub reference: String,
}

pub fn parse_tn_corpus(
    text: &str,
    path: &str,
    inventory: &CategoryInventory,
) -> Result<Vec<TnSentence>> {
    let mut sentences = Vec::new();
    // (token text, class, verbalization, line number)
    let mut items: Vec<(String, String, String, usize)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        if line.split('\t').next() == Some("<eos>") {
            if !items.is_empty() {
                sentences.push(build_sentence(&items, path, inventory)?);
                items.clear();
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno + 1,
                msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
            });
        }
        items.push((
            fields[0].trim().to_string(),
            fields[1].trim().to_string(),
            fields[2].trim().to_string(),
            lineno + 1,
        ));
    }
    if !items.is_empty() {
        sentences.push(build_sentence(&items, path, inventory)?);
    }
    Ok(sentences)
}

fn build_sentence(
    items: &[(String, String, String, usize)],
    path: &str,
    inventory: &CategoryInventory,
) -> Result<TnSentence> {
    let text = items
        .iter()
        .map(|(t, _, _, _)| t.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let tokens = tokenize(&text);

    // Character range of each corpus item inside `text`.
    let mut ranges = Vec::with_capacity(items.len());
    let mut at = 0;
    for (i, (t, _, _, _)) in items.iter().enumerate() {
        if i > 0 {
            at += 1; // joining space
        }
        let len = t.chars().count();
        ranges.push((at, at + len));
        at += len;
    }

    let mut spans = Vec::new();
    let mut verbalizations = Vec::new();
    let mut reference_parts = Vec::new();
    for ((token_text, class, verb, lineno), (start, end)) in items.iter().zip(&ranges) {
        let is_self = verb == "<self>" || verb == "sil";
        if class == "PLAIN" || class == "PUNCT" {
            reference_parts.push(token_text.clone());
            continue;
        }
        if !inventory.contains(class) {
            return Err(Error::Parse {
                path: path.to_string(),
                line: *lineno,
                msg: format!("unknown TN class `{class}`"),
            });
        }
        let first = tokens.iter().position(|t| t.start >= *start && t.end <= *end);
        let last = tokens.iter().rposition(|t| t.start >= *start && t.end <= *end);
        let (Some(first), Some(last)) = (first, last) else {
            return Err(Error::Parse {
                path: path.to_string(),
                line: *lineno,
                msg: format!("token `{token_text}` produced no tokens"),
            });
        };
        spans.push(SpanTag::new(class.clone(), first, last + 1));
        let words = if is_self {
            token_text.clone()
        } else {
            verb.clone()
        };
        verbalizations.push(words.clone());
        reference_parts.push(words);
    }
    // Reference joins the spoken parts on the tokenizer granularity: spans
    // contribute their verbalization, everything else its own tokens.
    let reference = {
        let mut parts: Vec<String> = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            if let Some(si) = spans.iter().position(|s| s.start == i) {
                if !verbalizations[si].is_empty() {
                    parts.push(verbalizations[si].clone());
                }
                i = spans[si].end;
            } else {
                parts.push(tokens[i].text.clone());
                i += 1;
            }
        }
        parts.join(" ")
    };
    Ok(TnSentence {
        text,
        tokens,
        spans,
        span_verbalizations: verbalizations,
        reference,
    })
}

pub fn load_tn_corpus(
    path: impl AsRef<Path>,
    inventory: &CategoryInventory,
) -> Result<Vec<TnSentence>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_tn_corpus(&text, &path.display().to_string(), inventory)
}

/// Tagging examples (word texts + BIES label ids) for training.
pub fn to_tag_examples(sentences: &[TnSentence], scheme: &LabelScheme) -> Result<Vec<TagExample>> {
    sentences
        .iter()
        .map(|s| {
            Ok(TagExample {
                words: s.tokens.iter().map(|t| t.text.clone()).collect(),
                labels: scheme.encode(s.tokens.len(), &s.spans)?,
            })
        })
        .collect()
}
