//! Pronunciation lexicon in CMUdict text conventions: `WORD  PH PH PH`,
//! variants as `WORD(2)`, comments starting with `;;;`. Lookup is exact and
//! case-insensitive; entry order within a word follows file order, first
//! entry being the default. Stress digits in the file are stripped at load
//! by default (`AH0 -> AH`); with `keep_stress` the unstressed form maps to
//! the bare symbol and stressed forms keep their digit (`AH0 -> AH`,
//! `OW1 -> OW1`).

use crate::core::inventory::PhonemeInventory;
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fs;
use std::path::Path;

/// One pronunciation of a word; `variant` is its 0-based position among the
/// word's entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pronunciation {
    pub phonemes: Vec<String>,
    pub variant: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, Vec<Pronunciation>>,
}

/// Map a raw lexicon symbol into the inventory under the stress policy.
pub fn map_stress(symbol: &str, keep_stress: bool) -> String {
    let (head, digit) = match symbol.char_indices().last() {
        Some((i, c)) if c.is_ascii_digit() => (&symbol[..i], Some(c)),
        _ => (symbol, None),
    };
    match digit {
        None => symbol.to_string(),
        Some('0') => head.to_string(),
        Some(d) if keep_stress => format!("{head}{d}"),
        Some(_) => head.to_string(),
    }
}

impl Lexicon {
    pub fn new() -> Self {
        Lexicon::default()
    }

    pub fn parse(
        text: &str,
        path: &str,
        inventory: &PhonemeInventory,
        keep_stress: bool,
    ) -> Result<Self> {
        let mut lex = Lexicon::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with(";;;") {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().expect("non-empty line");
            let word = match head.split_once('(') {
                Some((w, _)) => w,
                None => head,
            };
            if word.is_empty() {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno + 1,
                    msg: "empty word".to_string(),
                });
            }
            let mut phonemes = Vec::new();
            for symbol in parts {
                let mapped = map_stress(symbol, keep_stress);
                if inventory.id(&mapped).is_none() {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: lineno + 1,
                        msg: format!("phoneme `{symbol}` (as `{mapped}`) is not in the inventory"),
                    });
                }
                phonemes.push(mapped);
            }
            if phonemes.is_empty() {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno + 1,
                    msg: format!("word `{word}` has no phonemes"),
                });
            }
            let slot = lex.entries.entry(word.to_lowercase()).or_default();
            let variant = slot.len();
            slot.push(Pronunciation { phonemes, variant });
        }
        Ok(lex)
    }

    pub fn load(
        path: impl AsRef<Path>,
        inventory: &PhonemeInventory,
        keep_stress: bool,
    ) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(
            &fs::read_to_string(path)?,
            &path.display().to_string(),
            inventory,
            keep_stress,
        )
    }

    /// Exact, case-insensitive lookup. Not-found is `None`, never an error.
    pub fn lookup(&self, word: &str) -> Option<&[Pronunciation]> {
        self.entries.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Words in sorted order (deterministic iteration for tooling).
    pub fn words(&self) -> Vec<&str> {
        let mut w: Vec<&str> = self.entries.keys().map(String::as_str).collect();
        w.sort();
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv() -> PhonemeInventory {
        PhonemeInventory::new(
            ["HH", "EH", "L", "OW", "OW1", "IY", "D"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn parses_variants_in_file_order() {
        let text = ";;; comment\nHELLO  HH EH0 L OW1\nLEAD  L IY1 D\nLEAD(2)  L EH1 D\n";
        let lex = Lexicon::parse(text, "dict", &inv(), false).unwrap();
        assert_eq!(lex.len(), 2);
        let hello = lex.lookup("hello").unwrap();
        assert_eq!(hello[0].phonemes, vec!["HH", "EH", "L", "OW"]);
        let lead = lex.lookup("LEAD").unwrap();
        assert_eq!(lead.len(), 2);
        assert_eq!(lead[0].phonemes, vec!["L", "IY", "D"]);
        assert_eq!(lead[0].variant, 0);
        assert_eq!(lead[1].phonemes, vec!["L", "EH", "D"]);
        assert_eq!(lead[1].variant, 1);
        assert!(lex.lookup("zzzzxq").is_none());
    }

    #[test]
    fn stress_mapping_modes() {
        assert_eq!(map_stress("AH0", false), "AH");
        assert_eq!(map_stress("OW1", false), "OW");
        assert_eq!(map_stress("OW1", true), "OW1");
        assert_eq!(map_stress("AH0", true), "AH");
        assert_eq!(map_stress("HH", true), "HH");
        let text = "GLOW  G L OW1\n";
        // "G" not in the inventory: load fails with the line number.
        let err = Lexicon::parse(text, "d", &inv(), false).unwrap_err();
        assert!(err.to_string().contains("d:1"));
        // With stress kept, OW1 must be in the inventory (it is).
        let ok = Lexicon::parse("HEY  HH EH0 OW1\n", "d", &inv(), true).unwrap();
        assert_eq!(
            ok.lookup("hey").unwrap()[0].phonemes,
            vec!["HH", "EH", "OW1"]
        );
    }

    #[test]
    fn rejects_empty_pronunciations() {
        assert!(Lexicon::parse("WORD\n", "d", &inv(), false).is_err());
    }
}
