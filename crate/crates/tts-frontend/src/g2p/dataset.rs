//! G2P training data: CMUdict-format word/pronunciation pairs with a
//! deterministic seeded train/dev/test split, the POS span corpus, and the
//! polyphone classification corpus.

use crate::core::inventory::{CategoryInventory, PhonemeInventory};
use crate::core::span::SpanTag;
use crate::error::{Error, Result};
use crate::g2p::homograph::HomographTable;
use crate::g2p::lexicon::map_stress;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct G2pPair {
    pub word: String,
    pub phonemes: Vec<String>,
}

/// Parse CMUdict-format pairs. Variant lines (`WORD(2)`) are skipped: the
/// phonemizer trains on one target per spelling.
pub fn parse_g2p_pairs(
    text: &str,
    path: &str,
    inventory: &PhonemeInventory,
    keep_stress: bool,
) -> Result<Vec<G2pPair>> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with(";;;") {
            continue;
        }
        let mut parts = line.split_whitespace();
        let head = parts.next().expect("non-empty");
        if head.contains('(') {
            continue;
        }
        let mut phonemes = Vec::new();
        for symbol in parts {
            let mapped = map_stress(symbol, keep_stress);
            if inventory.id(&mapped).is_none() {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno + 1,
                    msg: format!("phoneme `{symbol}` is not in the inventory"),
                });
            }
            phonemes.push(mapped);
        }
        if phonemes.is_empty() {
            return Err(Error::Parse {
                path: path.to_string(),
                line: lineno + 1,
                msg: format!("word `{head}` has no phonemes"),
            });
        }
        pairs.push(G2pPair {
            word: head.to_lowercase(),
            phonemes,
        });
    }
    Ok(pairs)
}

pub fn load_g2p_pairs(
    path: impl AsRef<Path>,
    inventory: &PhonemeInventory,
    keep_stress: bool,
) -> Result<Vec<G2pPair>> {
    let path = path.as_ref();
    parse_g2p_pairs(
        &fs::read_to_string(path)?,
        &path.display().to_string(),
        inventory,
        keep_stress,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// Deterministic split by seeded word hash: 80/10/10.
pub fn split_of(word: &str, seed: u64) -> Split {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(word.as_bytes());
    let digest = h.finalize();
    let bucket = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes")) % 100;
    match bucket {
        0..=79 => Split::Train,
        80..=89 => Split::Dev,
        _ => Split::Test,
    }
}

pub fn split_pairs(pairs: &[G2pPair], seed: u64) -> (Vec<G2pPair>, Vec<G2pPair>, Vec<G2pPair>) {
    let mut train = Vec::new();
    let mut dev = Vec::new();
    let mut test = Vec::new();
    for p in pairs {
        match split_of(&p.word, seed) {
            Split::Train => train.push(p.clone()),
            Split::Dev => dev.push(p.clone()),
            Split::Test => test.push(p.clone()),
        }
    }
    (train, dev, test)
}

/// A POS-annotated sentence: word texts plus category spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosSentence {
    pub words: Vec<String>,
    pub spans: Vec<SpanTag>,
}

/// Parse the inline POS format: `word/TAG` items, with `[multi word]/TAG`
/// for spans covering several words.
pub fn parse_pos_corpus(
    text: &str,
    path: &str,
    inventory: &CategoryInventory,
) -> Result<Vec<PosSentence>> {
    let mut sentences = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_string(),
            line: lineno + 1,
            msg,
        };
        let mut words: Vec<String> = Vec::new();
        let mut spans = Vec::new();
        let mut items = line.split_whitespace().peekable();
        while let Some(item) = items.next() {
            if let Some(rest) = item.strip_prefix('[') {
                // Collect words until the closing "]/TAG".
                let mut group = vec![rest.to_string()];
                let tag0;
                loop {
                    let last = group.last_mut().expect("non-empty group");
                    if let Some(at) = last.find("]/") {
                        let tag = last[at + 2..].to_string();
                        *last = last[..at].to_string();
                        tag0 = tag;
                        break;
                    }
                    let next = items
                        .next()
                        .ok_or_else(|| err("unterminated [..]/TAG group".into()))?;
                    group.push(next.to_string());
                }
                if !inventory.contains(&tag0) {
                    return Err(err(format!("unknown POS tag `{tag0}`")));
                }
                let start = words.len();
                words.extend(group.iter().cloned());
                spans.push(SpanTag::new(tag0, start, words.len()));
            } else {
                let (word, tag) = item
                    .rsplit_once('/')
                    .ok_or_else(|| err(format!("item `{item}` has no /TAG")))?;
                if !inventory.contains(tag) {
                    return Err(err(format!("unknown POS tag `{tag}`")));
                }
                spans.push(SpanTag::new(tag, words.len(), words.len() + 1));
                words.push(word.to_string());
            }
        }
        if !words.is_empty() {
            sentences.push(PosSentence { words, spans });
        }
    }
    Ok(sentences)
}

pub fn load_pos_corpus(
    path: impl AsRef<Path>,
    inventory: &CategoryInventory,
) -> Result<Vec<PosSentence>> {
    let path = path.as_ref();
    parse_pos_corpus(
        &fs::read_to_string(path)?,
        &path.display().to_string(),
        inventory,
    )
}

/// A sentence with gold per-word phonemes for evaluating the full G2P
/// module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct G2pEvalSentence {
    pub words: Vec<String>,
    pub gold: Vec<Vec<String>>,
}

/// Parse `sentence <tab> PH PH | PH ...` lines: one gold phoneme group per
/// word, groups separated by `|`.
pub fn parse_g2p_eval(
    text: &str,
    path: &str,
    inventory: &PhonemeInventory,
) -> Result<Vec<G2pEvalSentence>> {
    let mut sentences = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_string(),
            line: lineno + 1,
            msg,
        };
        let (sentence, phonemes) = line
            .split_once('\t')
            .ok_or_else(|| err("expected sentence <tab> phonemes".into()))?;
        let words: Vec<String> = sentence.split_whitespace().map(String::from).collect();
        let gold: Vec<Vec<String>> = phonemes
            .split('|')
            .map(|group| group.split_whitespace().map(String::from).collect())
            .collect();
        if words.len() != gold.len() {
            return Err(err(format!(
                "{} words but {} phoneme groups",
                words.len(),
                gold.len()
            )));
        }
        for group in &gold {
            if group.is_empty() {
                return Err(err("empty phoneme group".into()));
            }
            for p in group {
                if inventory.id(p).is_none() {
                    return Err(err(format!("phoneme `{p}` is not in the inventory")));
                }
            }
        }
        sentences.push(G2pEvalSentence { words, gold });
    }
    Ok(sentences)
}

pub fn load_g2p_eval(
    path: impl AsRef<Path>,
    inventory: &PhonemeInventory,
) -> Result<Vec<G2pEvalSentence>> {
    let path = path.as_ref();
    parse_g2p_eval(
        &fs::read_to_string(path)?,
        &path.display().to_string(),
        inventory,
    )
}

/// One polyphone classification example: the sentence, the target word
/// index, and the gold class (index into the word's polyphone class list).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyphoneExample {
    pub words: Vec<String>,
    pub target: usize,
    pub class: usize,
}

/// Parse `TARGET_IDX <tab> LABEL <tab> sentence` lines; the label resolves
/// through the homograph table's class list for the target word.
pub fn parse_polyphone_corpus(
    text: &str,
    path: &str,
    table: &HomographTable,
) -> Result<Vec<PolyphoneExample>> {
    let mut examples = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_string(),
            line: lineno + 1,
            msg,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(err(format!(
                "expected 3 tab-separated fields, got {}",
                fields.len()
            )));
        }
        let target: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| err(format!("bad target index `{}`", fields[0])))?;
        let label = fields[1].trim();
        let words: Vec<String> = fields[2].split_whitespace().map(String::from).collect();
        if target >= words.len() {
            return Err(err(format!(
                "target index {target} out of range for {} words",
                words.len()
            )));
        }
        let word = &words[target];
        let class = table
            .poly_class_index(word, label)
            .ok_or_else(|| err(format!("`{word}` has no polyphone class `{label}`")))?;
        examples.push(PolyphoneExample {
            words,
            target,
            class,
        });
    }
    Ok(examples)
}

pub fn load_polyphone_corpus(
    path: impl AsRef<Path>,
    table: &HomographTable,
) -> Result<Vec<PolyphoneExample>> {
    let path = path.as_ref();
    parse_polyphone_corpus(
        &fs::read_to_string(path)?,
        &path.display().to_string(),
        table,
    )
}
