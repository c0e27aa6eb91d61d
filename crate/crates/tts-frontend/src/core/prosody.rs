//! Prosody break levels after a word, from none (#0) up to intonation
//! phrase (#3).

use crate::error::{Error, Result};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProsodyLevel {
    /// No break.
    None,
    /// Prosody word boundary (#1).
    Word,
    /// Prosody phrase boundary (#2).
    Phrase,
    /// Intonation phrase boundary (#3).
    Intonation,
}

impl ProsodyLevel {
    pub const ALL: [ProsodyLevel; 4] = [
        ProsodyLevel::None,
        ProsodyLevel::Word,
        ProsodyLevel::Phrase,
        ProsodyLevel::Intonation,
    ];

    pub fn index(self) -> usize {
        match self {
            ProsodyLevel::None => 0,
            ProsodyLevel::Word => 1,
            ProsodyLevel::Phrase => 2,
            ProsodyLevel::Intonation => 3,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL.get(i).copied().ok_or(Error::UnknownProsodyLevel(i))
    }
}

impl fmt::Display for ProsodyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.index())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_low_to_high() {
        assert!(ProsodyLevel::None < ProsodyLevel::Word);
        assert!(ProsodyLevel::Word < ProsodyLevel::Phrase);
        assert!(ProsodyLevel::Phrase < ProsodyLevel::Intonation);
    }

    #[test]
    fn display_and_index_round_trip() {
        for (i, l) in ProsodyLevel::ALL.iter().enumerate() {
            assert_eq!(l.index(), i);
            assert_eq!(ProsodyLevel::from_index(i).unwrap(), *l);
            assert_eq!(l.to_string(), format!("#{i}"));
        }
        assert!(ProsodyLevel::from_index(4).is_err());
    }
}
