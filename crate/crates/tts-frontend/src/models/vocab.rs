//! Word vocabulary for the tagging encoder. Id 0 is the unknown word.

use std::collections::HashMap;

pub const UNK: &str = "<unk>";

#[derive(Debug, Clone)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Build from corpus words: lowercased, deduplicated, sorted, so the
    /// same corpus always yields the same vocabulary.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set: Vec<String> = words
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        set.sort();
        set.dedup();
        let mut all = Vec::with_capacity(set.len() + 1);
        all.push(UNK.to_string());
        all.extend(set);
        Self::from_list(all)
    }

    /// Rebuild from a stored word list (index 0 must be the unknown word).
    pub fn from_list(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocab { words, index }
    }

    pub fn id(&self, word: &str) -> usize {
        self.index
            .get(&word.to_lowercase())
            .copied()
            .unwrap_or(0)
    }

    pub fn ids(&self, words: &[impl AsRef<str>]) -> Vec<usize> {
        words.iter().map(|w| self.id(w.as_ref())).collect()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}
