//! Fusion of the prosody and pronunciation outputs into the normative
//! label: one row per phoneme carrying word, prosody, POS and provenance
//! features. A word's prosody level sits on its final phoneme (the break
//! happens after the word).

use crate::core::prosody::ProsodyLevel;
use crate::error::{Error, Result};
use crate::g2p::{Provenance, WordPhonemes};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormativeRow {
    pub word_idx: usize,
    pub word: String,
    pub phoneme: String,
    pub ph_idx: usize,
    pub prosody: ProsodyLevel,
    pub pos: String,
    pub provenance: Provenance,
}

/// Build the rows for one sentence. All inputs are per-word and must agree
/// on the word count; a word with no phonemes is an error (the caller
/// decides whether to skip the sentence).
pub fn build_normative_label(
    words: &[WordPhonemes],
    prosody: &[ProsodyLevel],
    pos: &[String],
) -> Result<Vec<NormativeRow>> {
    if words.len() != prosody.len() {
        return Err(Error::LengthMismatch(words.len(), prosody.len()));
    }
    if words.len() != pos.len() {
        return Err(Error::LengthMismatch(words.len(), pos.len()));
    }
    let mut rows = Vec::new();
    for (i, word) in words.iter().enumerate() {
        if word.phonemes.is_empty() {
            return Err(Error::EmptyPhonemes(word.word.clone()));
        }
        let last = word.phonemes.len() - 1;
        for (j, phoneme) in word.phonemes.iter().enumerate() {
            rows.push(NormativeRow {
                word_idx: i,
                word: word.word.clone(),
                phoneme: phoneme.clone(),
                ph_idx: j,
                prosody: if j == last { prosody[i] } else { ProsodyLevel::None },
                pos: pos[i].clone(),
                provenance: word.provenance,
            });
        }
    }
    Ok(rows)
}

pub const TSV_HEADER: &str = "word_idx\tword\tphoneme\tph_idx\tprosody\tpos\tprovenance";

/// One TSV line per row, matching [`TSV_HEADER`].
pub fn row_to_tsv(row: &NormativeRow) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
        row.word_idx, row.word, row.phoneme, row.ph_idx, row.prosody, row.pos, row.provenance
    )
}
