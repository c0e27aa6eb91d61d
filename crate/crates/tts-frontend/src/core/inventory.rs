//! Symbol inventories: tagging categories, phonemes and input characters.
//!
//! All inventories load from plain UTF-8 text files so they can be revised
//! without touching code. Category inventories use `key = value` lines,
//! symbol inventories use one symbol per line. Lines starting with `#`
//! (other than a lone `#` symbol) are comments.

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fs;
use std::path::Path;

fn is_comment(line: &str) -> bool {
    line.starts_with('#') && line.trim() != "#"
}

/// A named, ordered set of tagging categories plus the single "other" label.
#[derive(Debug, Clone)]
pub struct CategoryInventory {
    name: String,
    categories: Vec<String>,
    other: String,
    index: HashMap<String, usize>,
}

impl CategoryInventory {
    pub fn new(
        name: impl Into<String>,
        categories: Vec<String>,
        other: impl Into<String>,
    ) -> Result<Self> {
        let name = name.into();
        let other = other.into();
        let mut index = HashMap::new();
        for (i, c) in categories.iter().enumerate() {
            if c == &other || index.insert(c.clone(), i).is_some() {
                return Err(Error::DuplicateSymbol(c.clone(), name));
            }
        }
        Ok(CategoryInventory {
            name,
            categories,
            other,
            index,
        })
    }

    /// Parse the `key = value` format. Recognized keys: `name`, `other`,
    /// `category` (repeatable) and `categories` (comma-separated).
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut name = String::new();
        let mut other = "O".to_string();
        let mut categories = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || is_comment(line) {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: lineno + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let value = value.trim();
            match key.trim() {
                "name" => name = value.to_string(),
                "other" => other = value.to_string(),
                "category" => categories.push(value.to_string()),
                "categories" => categories
                    .extend(value.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty())),
                k => {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: lineno + 1,
                        msg: format!("unknown key `{k}`"),
                    })
                }
            }
        }
        CategoryInventory::new(name, categories, other)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Load and verify the category count (19 for TN, 24 for POS).
    pub fn load_expecting(path: impl AsRef<Path>, expected: usize) -> Result<Self> {
        let inv = Self::load(path)?;
        if inv.len() != expected {
            return Err(Error::InventorySize {
                name: inv.name.clone(),
                expected,
                got: inv.len(),
            });
        }
        Ok(inv)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn other_label(&self) -> &str {
        &self.other
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    pub fn contains(&self, category: &str) -> bool {
        self.index.contains_key(category)
    }

    pub fn position(&self, category: &str) -> Option<usize> {
        self.index.get(category).copied()
    }

    /// Total tag count under BIES encoding: categories × 4 + 1.
    pub fn label_count(&self) -> usize {
        self.categories.len() * 4 + 1
    }

    /// Hash of the canonical content, for checkpoint compatibility checks.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.other.as_bytes());
        for c in &self.categories {
            h.update(b"\n");
            h.update(c.as_bytes());
        }
        hex_string(&h.finalize())
    }
}

/// The phoneme symbol set the G2P decoder emits, plus sequence markers.
///
/// The begin/end/padding markers live outside the content symbol range: ids
/// `0..len()` are content, `len()..len()+3` are the markers.
#[derive(Debug, Clone)]
pub struct PhonemeInventory {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

pub const BOS_SYMBOL: &str = "<s>";
pub const EOS_SYMBOL: &str = "</s>";
pub const PAD_SYMBOL: &str = "<pad>";

impl PhonemeInventory {
    pub fn new(symbols: Vec<String>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, s) in symbols.iter().enumerate() {
            if [BOS_SYMBOL, EOS_SYMBOL, PAD_SYMBOL].contains(&s.as_str())
                || index.insert(s.clone(), i).is_some()
            {
                return Err(Error::DuplicateSymbol(s.clone(), "phonemes".into()));
            }
        }
        Ok(PhonemeInventory { symbols, index })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let symbols = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !is_comment(l))
            .map(String::from)
            .collect();
        Self::new(symbols)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Load and verify the content symbol count (73 in the shipped file).
    pub fn load_expecting(path: impl AsRef<Path>, expected: usize) -> Result<Self> {
        let inv = Self::load(path)?;
        if inv.len() != expected {
            return Err(Error::InventorySize {
                name: "phonemes".into(),
                expected,
                got: inv.len(),
            });
        }
        Ok(inv)
    }

    /// Number of content symbols (excludes the three markers).
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Content symbols plus begin/end/padding markers.
    pub fn total_symbols(&self) -> usize {
        self.symbols.len() + 3
    }

    pub fn bos_id(&self) -> usize {
        self.symbols.len()
    }

    pub fn eos_id(&self) -> usize {
        self.symbols.len() + 1
    }

    pub fn pad_id(&self) -> usize {
        self.symbols.len() + 2
    }

    pub fn id(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    pub fn symbol(&self, id: usize) -> Option<&str> {
        if id < self.symbols.len() {
            Some(&self.symbols[id])
        } else if id == self.bos_id() {
            Some(BOS_SYMBOL)
        } else if id == self.eos_id() {
            Some(EOS_SYMBOL)
        } else if id == self.pad_id() {
            Some(PAD_SYMBOL)
        } else {
            None
        }
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn ids(&self, symbols: &[String]) -> Option<Vec<usize>> {
        symbols.iter().map(|s| self.id(s)).collect()
    }

    pub fn content_hash(&self) -> String {
        hash_lines(self.symbols.iter().map(String::as_str))
    }
}

/// The character set accepted by the G2P character encoder.
#[derive(Debug, Clone)]
pub struct CharInventory {
    symbols: Vec<char>,
    index: HashMap<char, usize>,
}

impl CharInventory {
    pub fn new(symbols: Vec<char>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, &c) in symbols.iter().enumerate() {
            if index.insert(c, i).is_some() {
                return Err(Error::DuplicateSymbol(c.to_string(), "chars".into()));
            }
        }
        Ok(CharInventory { symbols, index })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut symbols = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || is_comment(line) {
                continue;
            }
            let mut chars = line.chars();
            let c = chars.next().expect("non-empty line");
            if chars.next().is_some() {
                return Err(Error::Config(format!(
                    "char inventory line `{line}` has more than one character"
                )));
            }
            symbols.push(c);
        }
        Self::new(symbols)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn load_expecting(path: impl AsRef<Path>, expected: usize) -> Result<Self> {
        let inv = Self::load(path)?;
        if inv.len() != expected {
            return Err(Error::InventorySize {
                name: "chars".into(),
                expected,
                got: inv.len(),
            });
        }
        Ok(inv)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn id(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    /// Map a word to character ids, dropping characters outside the
    /// inventory. Returns the ids and the dropped characters.
    pub fn encode_lossy(&self, word: &str) -> (Vec<usize>, Vec<char>) {
        let mut ids = Vec::new();
        let mut dropped = Vec::new();
        for c in word.chars() {
            match self.id(c) {
                Some(i) => ids.push(i),
                None => dropped.push(c),
            }
        }
        (ids, dropped)
    }

    pub fn content_hash(&self) -> String {
        let joined: String = self.symbols.iter().collect();
        let mut h = Sha256::new();
        h.update(joined.as_bytes());
        hex_string(&h.finalize())
    }
}

fn hash_lines<'a>(lines: impl Iterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    for (i, l) in lines.enumerate() {
        if i > 0 {
            h.update(b"\n");
        }
        h.update(l.as_bytes());
    }
    hex_string(&h.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_parse_and_counts() {
        let inv = CategoryInventory::parse(
            "name = TN\nother = O\ncategory = CARDINAL\ncategory = DIGIT\n",
            "test",
        )
        .unwrap();
        assert_eq!(inv.len(), 2);
        assert_eq!(inv.label_count(), 9);
        assert!(inv.contains("CARDINAL"));
        assert!(!inv.contains("O"));
    }

    #[test]
    fn duplicate_category_rejected() {
        assert!(CategoryInventory::new("X", vec!["A".into(), "A".into()], "O").is_err());
    }

    #[test]
    fn other_label_cannot_be_a_category() {
        assert!(CategoryInventory::new("X", vec!["O".into()], "O").is_err());
    }

    #[test]
    fn phoneme_markers_are_disjoint() {
        let inv = PhonemeInventory::new(vec!["AA".into(), "B".into()]).unwrap();
        assert_eq!(inv.len(), 2);
        assert_eq!(inv.total_symbols(), 5);
        assert_eq!(inv.bos_id(), 2);
        assert_eq!(inv.eos_id(), 3);
        assert_eq!(inv.pad_id(), 4);
        assert_eq!(inv.symbol(3), Some(EOS_SYMBOL));
        assert_eq!(inv.id("AA"), Some(0));
    }

    #[test]
    fn char_inventory_lossy_encoding() {
        let inv = CharInventory::parse("a\nb\nc\n").unwrap();
        let (ids, dropped) = inv.encode_lossy("cab!");
        assert_eq!(ids, vec![2, 0, 1]);
        assert_eq!(dropped, vec!['!']);
    }

    #[test]
    fn lone_hash_is_a_symbol_not_a_comment() {
        let inv = CharInventory::parse("# comment line\na\n#\n").unwrap();
        assert_eq!(inv.symbols(), &['a', '#']);
    }

    #[test]
    fn hashes_are_stable_and_content_sensitive() {
        let a = PhonemeInventory::parse("AA\nB\n").unwrap();
        let b = PhonemeInventory::parse("# comment\nAA\nB\n").unwrap();
        let c = PhonemeInventory::parse("AA\nC\n").unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a.content_hash(), c.content_hash());
    }
}
