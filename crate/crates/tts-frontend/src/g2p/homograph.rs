//! Homograph table: which lexicon variant a word takes per POS category,
//! and its ordered polyphone classes for same-POS disambiguation.
//!
//! File format, one word per line:
//! `WORD <tab> POS=CAT:variant,... <tab> POLY=label:variant,...`
//! Either section may be omitted; every referenced variant must exist in
//! the lexicon.

use crate::error::{Error, Result};
use crate::g2p::lexicon::Lexicon;
use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

/// One polyphone class: a human-readable label naming the pronunciation and
/// the lexicon variant it selects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyClass {
    pub label: String,
    pub variant: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HomographEntry {
    /// POS category -> lexicon variant.
    pub pos_split: BTreeMap<String, usize>,
    /// Ordered polyphone classes; the classifier predicts an index into
    /// this list.
    pub poly_split: Vec<PolyClass>,
}

#[derive(Debug, Clone, Default)]
pub struct HomographTable {
    entries: HashMap<String, HomographEntry>,
}

impl HomographTable {
    pub fn new() -> Self {
        HomographTable::default()
    }

    pub fn parse(text: &str, path: &str, lexicon: &Lexicon) -> Result<Self> {
        let mut table = HomographTable::new();
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
            let mut fields = line.split('\t');
            let word = fields
                .next()
                .ok_or_else(|| err("missing word".into()))?
                .trim()
                .to_lowercase();
            let variants = lexicon
                .lookup(&word)
                .ok_or_else(|| err(format!("word `{word}` is not in the lexicon")))?
                .len();
            let mut entry = HomographEntry::default();
            for field in fields {
                let field = field.trim();
                if field.is_empty() {
                    continue;
                }
                if let Some(body) = field.strip_prefix("POS=") {
                    for piece in body.split(',').filter(|p| !p.trim().is_empty()) {
                        let (cat, var) = piece
                            .split_once(':')
                            .ok_or_else(|| err(format!("bad POS piece `{piece}`")))?;
                        let var: usize = var
                            .trim()
                            .parse()
                            .map_err(|_| err(format!("bad variant in `{piece}`")))?;
                        if var >= variants {
                            return Err(err(format!(
                                "variant {var} does not exist for `{word}` ({variants} entries)"
                            )));
                        }
                        entry.pos_split.insert(cat.trim().to_string(), var);
                    }
                } else if let Some(body) = field.strip_prefix("POLY=") {
                    for piece in body.split(',').filter(|p| !p.trim().is_empty()) {
                        let (label, var) = piece
                            .split_once(':')
                            .ok_or_else(|| err(format!("bad POLY piece `{piece}`")))?;
                        let var: usize = var
                            .trim()
                            .parse()
                            .map_err(|_| err(format!("bad variant in `{piece}`")))?;
                        if var >= variants {
                            return Err(err(format!(
                                "variant {var} does not exist for `{word}` ({variants} entries)"
                            )));
                        }
                        entry.poly_split.push(PolyClass {
                            label: label.trim().to_string(),
                            variant: var,
                        });
                    }
                } else {
                    return Err(err(format!("unknown section `{field}`")));
                }
            }
            if entry.pos_split.is_empty() && entry.poly_split.is_empty() {
                return Err(err(format!("`{word}` declares no POS or POLY section")));
            }
            table.entries.insert(word, entry);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>, lexicon: &Lexicon) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(
            &fs::read_to_string(path)?,
            &path.display().to_string(),
            lexicon,
        )
    }

    pub fn get(&self, word: &str) -> Option<&HomographEntry> {
        self.entries.get(&word.to_lowercase())
    }

    /// Words with a polyphone split, sorted (determines nothing at runtime,
    /// handy for reports).
    pub fn polyphone_words(&self) -> Vec<&str> {
        let mut w: Vec<&str> = self
            .entries
            .iter()
            .filter(|(_, e)| !e.poly_split.is_empty())
            .map(|(k, _)| k.as_str())
            .collect();
        w.sort();
        w
    }

    /// Largest polyphone class count over all words (the classifier width).
    pub fn max_poly_classes(&self) -> usize {
        self.entries
            .values()
            .map(|e| e.poly_split.len())
            .max()
            .unwrap_or(0)
    }

    /// Index of a polyphone label within a word's class list.
    pub fn poly_class_index(&self, word: &str, label: &str) -> Option<usize> {
        self.get(word)?
            .poly_split
            .iter()
            .position(|c| c.label == label)
    }
}
