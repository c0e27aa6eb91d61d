//! Hierarchical prosody prediction: one binary tagger per prosody level over
//! a shared encoder, merged by highest-level-wins, plus the traditional
//! 4-class tagger used as the comparison baseline.

use crate::core::prosody::ProsodyLevel;
use crate::error::{Error, Result};
use crate::models::checkpoint::{tagger_from_checkpoint, tagger_to_checkpoint, Checkpoint};
use crate::models::crf::{crf_viterbi, CrfValues, TransitionMask};
use crate::models::encoder::{encode, EncoderConfig};
use crate::models::params::{Init, Params};
use crate::models::train::{
    crf_arrays, emissions_from, init_crf_head, tagger_item_loss, train_tagger, TagExample,
    TaggerModel, TrainConfig, Trainer,
};
use crate::models::vocab::Vocab;
use std::fs;
use std::path::Path;

pub const LEVELS: [usize; 3] = [1, 2, 3];

/// Per-word binary decisions for the three levels and their merge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProsodyPrediction {
    pub binaries: [Vec<bool>; 3],
    pub merged: Vec<ProsodyLevel>,
}

/// Merge the three binary taggings: a word's level is the highest level
/// whose tagger fired, or #0 when none did.
pub fn merge_levels(
    level1: &[bool],
    level2: &[bool],
    level3: &[bool],
) -> Result<Vec<ProsodyLevel>> {
    if level1.len() != level2.len() || level2.len() != level3.len() {
        return Err(Error::LengthMismatch(level1.len(), level3.len()));
    }
    Ok((0..level1.len())
        .map(|i| {
            if level3[i] {
                ProsodyLevel::Intonation
            } else if level2[i] {
                ProsodyLevel::Phrase
            } else if level1[i] {
                ProsodyLevel::Word
            } else {
                ProsodyLevel::None
            }
        })
        .collect())
}

/// Expand merged labels back into the three binary tasks under the
/// containment rule: a level-3 boundary is a positive for all three.
pub fn derive_binaries(merged: &[ProsodyLevel]) -> [Vec<bool>; 3] {
    let at = |level: usize| -> Vec<bool> {
        merged.iter().map(|m| m.index() >= level).collect()
    };
    [at(1), at(2), at(3)]
}

/// Sequence-tagging F1 at one level: positives are words whose merged level
/// reaches it. Both sides empty counts as perfect agreement.
pub fn pwpp_f1(pred: &[ProsodyLevel], gold: &[ProsodyLevel], level: usize) -> Result<f64> {
    if !LEVELS.contains(&level) {
        return Err(Error::UnknownProsodyLevel(level));
    }
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch(pred.len(), gold.len()));
    }
    let mut tp = 0usize;
    let mut pred_pos = 0usize;
    let mut gold_pos = 0usize;
    for (p, g) in pred.iter().zip(gold) {
        let p = p.index() >= level;
        let g = g.index() >= level;
        pred_pos += p as usize;
        gold_pos += g as usize;
        tp += (p && g) as usize;
    }
    if pred_pos == 0 && gold_pos == 0 {
        return Ok(1.0);
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / pred_pos as f64;
    let recall = tp as f64 / gold_pos as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Three binary CRF heads over one shared encoder.
#[derive(Debug, Clone)]
pub struct HierProsodyModel {
    pub vocab: Vocab,
    pub encoder: EncoderConfig,
    pub params: Params,
}

fn level_prefix(level: usize) -> String {
    format!("level{level}.")
}

impl HierProsodyModel {
    pub fn new(vocab: Vocab, encoder: EncoderConfig, seed: u64) -> Self {
        let mut params = Params::new();
        let mut init = Init::new(seed);
        encoder.init(&mut params, &mut init, "enc.", vocab.len());
        for level in LEVELS {
            init_crf_head(&mut params, &mut init, &level_prefix(level), encoder.output_dim(), 2);
        }
        HierProsodyModel {
            vocab,
            encoder,
            params,
        }
    }

    /// Binary boundary decisions after each word at one level.
    pub fn predict_level(&self, words: &[impl AsRef<str>], level: usize) -> Result<Vec<bool>> {
        if !LEVELS.contains(&level) {
            return Err(Error::UnknownProsodyLevel(level));
        }
        if words.is_empty() {
            return Ok(Vec::new());
        }
        let ids = self.vocab.ids(words);
        let enc = encode(&self.encoder, &self.params, "enc.", &ids)?;
        let prefix = level_prefix(level);
        let emissions = emissions_from(&self.params, &prefix, &enc);
        let (trans, start, end) = crf_arrays(&self.params, &prefix);
        let mask = TransitionMask::allow_all(2);
        let (labels, _) = crf_viterbi(&emissions, &CrfValues::new(&trans, &start, &end, &mask))?;
        Ok(labels.into_iter().map(|l| l == 1).collect())
    }

    /// All three levels merged; `force_final` pins the sentence-final word
    /// to #3 (an intonation phrase ends where the sentence does).
    pub fn predict(&self, words: &[impl AsRef<str>], force_final: bool) -> Result<ProsodyPrediction> {
        let binaries = [
            self.predict_level(words, 1)?,
            self.predict_level(words, 2)?,
            self.predict_level(words, 3)?,
        ];
        let mut merged = merge_levels(&binaries[0], &binaries[1], &binaries[2])?;
        if force_final {
            if let Some(last) = merged.last_mut() {
                *last = ProsodyLevel::Intonation;
            }
        }
        Ok(ProsodyPrediction { binaries, merged })
    }

    /// Joint training: per sentence the three level losses are summed.
    pub fn train(
        &mut self,
        data: &[ProsodySentence],
        cfg: &TrainConfig,
        stop: Option<&dyn Fn(&HierProsodyModel) -> bool>,
    ) -> Result<Vec<f64>> {
        cfg.validate()?;
        if data.is_empty() {
            return Err(Error::EmptySequence);
        }
        let token_ids: Vec<Vec<usize>> = data.iter().map(|s| self.vocab.ids(&s.words)).collect();
        let binaries: Vec<[Vec<usize>; 3]> = data
            .iter()
            .map(|s| {
                let b = derive_binaries(&s.merged);
                [
                    b[0].iter().map(|&x| x as usize).collect(),
                    b[1].iter().map(|&x| x as usize).collect(),
                    b[2].iter().map(|&x| x as usize).collect(),
                ]
            })
            .collect();
        let mask = TransitionMask::allow_all(2);
        let mut trainer = Trainer::new(cfg);
        for _ in 0..cfg.epochs {
            {
                let HierProsodyModel {
                    ref mut params,
                    ref encoder,
                    ..
                } = *self;
                trainer.epoch(params, data.len(), |ctx, i| {
                    let mut loss: Option<crate::models::tape::Var<'_>> = None;
                    for level in LEVELS {
                        let l = tagger_item_loss(
                            ctx,
                            encoder,
                            "enc.",
                            &level_prefix(level),
                            &mask,
                            &token_ids[i],
                            &binaries[i][level - 1],
                        )?;
                        loss = Some(match loss {
                            Some(acc) => acc.add(l),
                            None => l,
                        });
                    }
                    Ok(loss.expect("three levels"))
                })?;
            }
            if let Some(f) = stop {
                if f(self) {
                    break;
                }
            }
        }
        Ok(trainer.history)
    }

    /// Fraction of sentences whose merged prediction matches gold exactly.
    pub fn sequence_accuracy(&self, data: &[ProsodySentence], force_final: bool) -> f64 {
        let correct = data
            .iter()
            .filter(|s| {
                self.predict(&s.words, force_final)
                    .map(|p| p.merged == s.merged)
                    .unwrap_or(false)
            })
            .count();
        correct as f64 / data.len().max(1) as f64
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.meta.insert("task".into(), "pwpp".into());
        ck.meta.insert("embed_dim".into(), self.encoder.embed_dim.to_string());
        ck.meta
            .insert("bank_width_max".into(), self.encoder.bank_width_max.to_string());
        ck.meta
            .insert("bank_channels".into(), self.encoder.bank_channels.to_string());
        ck.meta.insert("hidden".into(), self.encoder.hidden.to_string());
        ck.meta.insert("vocab".into(), self.vocab.words().join("\n"));
        ck.params = self.params.clone();
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.meta_str("task")? != "pwpp" {
            return Err(Error::Checkpoint {
                path: String::new(),
                msg: format!("checkpoint holds task `{}`, expected `pwpp`", ck.meta_str("task")?),
            });
        }
        Ok(HierProsodyModel {
            vocab: Vocab::from_list(
                ck.meta_str("vocab")?.split('\n').map(String::from).collect(),
            ),
            encoder: EncoderConfig {
                embed_dim: ck.meta_usize("embed_dim")?,
                bank_width_max: ck.meta_usize("bank_width_max")?,
                bank_channels: ck.meta_usize("bank_channels")?,
                hidden: ck.meta_usize("hidden")?,
            },
            params: ck.params.clone(),
        })
    }
}

/// The traditional single-head 4-class tagger (#0..#3) used as the baseline.
#[derive(Debug, Clone)]
pub struct BaselineProsodyModel {
    pub model: TaggerModel,
}

impl BaselineProsodyModel {
    pub fn new(vocab: Vocab, encoder: EncoderConfig, seed: u64) -> Self {
        BaselineProsodyModel {
            model: TaggerModel::new(vocab, encoder, TransitionMask::allow_all(4), seed),
        }
    }

    pub fn label_count(&self) -> usize {
        self.model.label_count()
    }

    pub fn predict(&self, words: &[impl AsRef<str>]) -> Result<Vec<ProsodyLevel>> {
        if words.is_empty() {
            return Ok(Vec::new());
        }
        let (labels, _) = self.model.predict(words)?;
        labels.into_iter().map(ProsodyLevel::from_index).collect()
    }

    pub fn train(
        &mut self,
        data: &[ProsodySentence],
        cfg: &TrainConfig,
        stop: Option<&dyn Fn(&TaggerModel) -> bool>,
    ) -> Result<Vec<f64>> {
        let examples: Vec<TagExample> = data
            .iter()
            .map(|s| TagExample {
                words: s.words.clone(),
                labels: s.merged.iter().map(|m| m.index()).collect(),
            })
            .collect();
        train_tagger(&mut self.model, &examples, cfg, stop)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        tagger_to_checkpoint(&self.model, "pwpp_baseline")
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        Ok(BaselineProsodyModel {
            model: tagger_from_checkpoint(ck, "pwpp_baseline", TransitionMask::allow_all(4))?,
        })
    }
}

/// One prosody-annotated sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProsodySentence {
    pub words: Vec<String>,
    pub merged: Vec<ProsodyLevel>,
}

/// Parse the inline corpus format: one sentence per line, `word#1 word#3`
/// markers, no marker meaning #0.
pub fn parse_prosody_corpus(text: &str, path: &str) -> Result<Vec<ProsodySentence>> {
    let mut sentences = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut words = Vec::new();
        let mut merged = Vec::new();
        for item in line.split_whitespace() {
            let (word, level) = match item.rsplit_once('#') {
                Some((w, l)) if !w.is_empty() => {
                    let level: usize = l.parse().map_err(|_| Error::Parse {
                        path: path.to_string(),
                        line: lineno + 1,
                        msg: format!("bad prosody marker `#{l}`"),
                    })?;
                    (w, level)
                }
                _ => (item, 0),
            };
            words.push(word.to_string());
            merged.push(ProsodyLevel::from_index(level).map_err(|_| Error::Parse {
                path: path.to_string(),
                line: lineno + 1,
                msg: format!("prosody level #{level} out of range"),
            })?);
        }
        if !words.is_empty() {
            sentences.push(ProsodySentence { words, merged });
        }
    }
    Ok(sentences)
}

pub fn load_prosody_corpus(path: impl AsRef<Path>) -> Result<Vec<ProsodySentence>> {
    let path = path.as_ref();
    parse_prosody_corpus(&fs::read_to_string(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_takes_the_highest_level() {
        let merged = merge_levels(&[true], &[false], &[true]).unwrap();
        assert_eq!(merged, vec![ProsodyLevel::Intonation]);
        let merged = merge_levels(&[false], &[false], &[false]).unwrap();
        assert_eq!(merged, vec![ProsodyLevel::None]);
        let merged = merge_levels(&[true], &[false], &[false]).unwrap();
        assert_eq!(merged, vec![ProsodyLevel::Word]);
        assert!(merge_levels(&[true], &[], &[true]).is_err());
    }

    #[test]
    fn remerging_derived_binaries_is_identity() {
        let merged = vec![
            ProsodyLevel::None,
            ProsodyLevel::Word,
            ProsodyLevel::Phrase,
            ProsodyLevel::Intonation,
        ];
        let b = derive_binaries(&merged);
        assert_eq!(merge_levels(&b[0], &b[1], &b[2]).unwrap(), merged);
        // Containment.
        for i in 0..merged.len() {
            assert!(!b[2][i] || b[1][i]);
            assert!(!b[1][i] || b[0][i]);
        }
    }

    #[test]
    fn f1_definitions() {
        use ProsodyLevel::*;
        let gold = vec![None, Word, Word, None];
        assert_eq!(pwpp_f1(&gold, &gold, 1).unwrap(), 1.0);
        let none = vec![None, None, None, None];
        assert_eq!(pwpp_f1(&none, &gold, 1).unwrap(), 0.0);
        // pred positives {1,2}, gold positives {2,3}: P = R = 0.5.
        let pred = vec![None, Word, Word, None];
        let gold = vec![None, None, Word, Word];
        let f1 = pwpp_f1(&pred, &gold, 1).unwrap();
        assert!((f1 - 0.5).abs() < 1e-12);
        // Both empty at a level counts as agreement.
        assert_eq!(pwpp_f1(&none, &none, 3).unwrap(), 1.0);
        assert!(pwpp_f1(&pred, &gold[..2].to_vec(), 1).is_err());
        assert!(pwpp_f1(&pred, &gold, 4).is_err());
    }

    #[test]
    fn corpus_parsing() {
        let text = "hello#3\ni have#1 three d v ds#3\n\n# comment\nthe lead#2 pipe#3\n";
        let sents = parse_prosody_corpus(text, "p").unwrap();
        assert_eq!(sents.len(), 3);
        assert_eq!(sents[0].words, vec!["hello"]);
        assert_eq!(sents[0].merged, vec![ProsodyLevel::Intonation]);
        assert_eq!(sents[1].words, vec!["i", "have", "three", "d", "v", "ds"]);
        assert_eq!(sents[1].merged[1], ProsodyLevel::Word);
        assert_eq!(sents[1].merged[2], ProsodyLevel::None);
        assert!(parse_prosody_corpus("word#9\n", "p").is_err());
        assert!(parse_prosody_corpus("word#x\n", "p").is_err());
    }

    #[test]
    fn prediction_shape_contract() {
        let vocab = Vocab::from_words(["a", "b", "c"]);
        let enc = EncoderConfig {
            embed_dim: 6,
            bank_width_max: 2,
            bank_channels: 3,
            hidden: 5,
        };
        let model = HierProsodyModel::new(vocab, enc, 9);
        assert!(model.predict_level(&["a"], 5).is_err());
        let empty: Vec<&str> = Vec::new();
        assert!(model.predict(&empty, true).unwrap().merged.is_empty());
        for n in 1..6 {
            let words: Vec<&str> = std::iter::repeat_n("a", n).collect();
            let p = model.predict(&words, true).unwrap();
            assert_eq!(p.merged.len(), n);
            assert_eq!(p.merged.last(), Some(&ProsodyLevel::Intonation));
            for b in &p.binaries {
                assert_eq!(b.len(), n);
            }
        }
    }

    #[test]
    fn hierarchical_model_overfits_and_round_trips() {
        let corpus = "the cat#1 sat#3\na dog#2 ran#3\nthe dog#1 sat here#3\n";
        let data = parse_prosody_corpus(corpus, "p").unwrap();
        let vocab = Vocab::from_words(data.iter().flat_map(|s| s.words.iter()));
        let enc = EncoderConfig {
            embed_dim: 8,
            bank_width_max: 2,
            bank_channels: 4,
            hidden: 8,
        };
        let mut model = HierProsodyModel::new(vocab, enc, 2);
        let cfg = TrainConfig {
            learning_rate: 0.05,
            weight_decay: 0.0,
            epochs: 150,
            batch_size: 2,
            ..TrainConfig::default()
        };
        let check = data.clone();
        model
            .train(
                &data,
                &cfg,
                Some(&move |m: &HierProsodyModel| m.sequence_accuracy(&check, false) == 1.0),
            )
            .unwrap();
        assert_eq!(model.sequence_accuracy(&data, false), 1.0);

        let ck = model.to_checkpoint();
        let back = HierProsodyModel::from_checkpoint(&ck).unwrap();
        assert_eq!(back.sequence_accuracy(&data, false), 1.0);
        assert_eq!(ck.to_bytes(), back.to_checkpoint().to_bytes());
    }
}
