//! Grapheme-to-phoneme conversion: lexicon lookup first, the seq2seq
//! phonemizer for out-of-vocabulary words, then homograph updates from the
//! POS tagger and the polyphone classifier (polyphone last, polyphone wins).

pub mod dataset;
pub mod homograph;
pub mod lexicon;

use crate::core::inventory::{CategoryInventory, CharInventory, PhonemeInventory};
use crate::core::span::LabelScheme;
use crate::error::{Error, Result};
use crate::models::checkpoint::{tagger_from_checkpoint, tagger_to_checkpoint, Checkpoint};
use crate::models::crf::TransitionMask;
use crate::models::encoder::{encode, EncoderConfig};
use crate::models::params::{Init, Params};
use crate::models::seq2seq::Seq2SeqModel;
use crate::models::train::{train_tagger, TagExample, TaggerModel, TrainConfig, Trainer};
use crate::models::vocab::Vocab;
use dataset::{PolyphoneExample, PosSentence};
use homograph::HomographTable;
use lexicon::Lexicon;
use ndarray::Ix1;

pub const POS_INVENTORY_HASH_KEY: &str = "pos_categories";
pub const CHAR_INVENTORY_HASH_KEY: &str = "chars";
pub const PHONEME_INVENTORY_HASH_KEY: &str = "phonemes";

/// Which path produced a word's pronunciation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Lexicon,
    Oov,
    PosUpdated,
    PolyphoneUpdated,
    /// Letter-name fallback after every other path failed.
    Fallback,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::Lexicon => "lexicon",
            Provenance::Oov => "oov",
            Provenance::PosUpdated => "pos-updated",
            Provenance::PolyphoneUpdated => "polyphone-updated",
            Provenance::Fallback => "fallback",
        })
    }
}

/// One word's resolved pronunciation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPhonemes {
    pub word: String,
    pub phonemes: Vec<String>,
    pub provenance: Provenance,
    /// Lexicon variant chosen, when the word came from the lexicon.
    pub variant: Option<usize>,
}

/// POS tagging head: BIES CRF over the 24 POS categories (97 labels), with
/// spans collapsed to one category per word.
#[derive(Debug, Clone)]
pub struct PosTagger {
    pub model: TaggerModel,
    pub scheme: LabelScheme,
    /// Category assigned to words no span covers.
    pub default_category: String,
}

impl PosTagger {
    pub fn new(
        vocab: Vocab,
        encoder: EncoderConfig,
        inventory: CategoryInventory,
        seed: u64,
    ) -> Self {
        let scheme = LabelScheme::new(inventory);
        let mask = TransitionMask::bies(&scheme);
        PosTagger {
            model: TaggerModel::new(vocab, encoder, mask, seed),
            scheme,
            default_category: "NOUN".to_string(),
        }
    }

    /// One POS category per word.
    pub fn pos_tag(&self, words: &[impl AsRef<str>]) -> Result<Vec<String>> {
        if words.is_empty() {
            return Ok(Vec::new());
        }
        let (labels, _) = self.model.predict(words)?;
        let spans = self.scheme.decode(&labels)?;
        let mut tags = vec![self.default_category.clone(); words.len()];
        for span in spans {
            for t in tags.iter_mut().take(span.end).skip(span.start) {
                *t = span.category.clone();
            }
        }
        Ok(tags)
    }

    pub fn train(
        &mut self,
        data: &[PosSentence],
        cfg: &TrainConfig,
        stop: Option<&dyn Fn(&TaggerModel) -> bool>,
    ) -> Result<Vec<f64>> {
        let examples = self.to_examples(data)?;
        train_tagger(&mut self.model, &examples, cfg, stop)
    }

    pub fn to_examples(&self, data: &[PosSentence]) -> Result<Vec<TagExample>> {
        data.iter()
            .map(|s| {
                Ok(TagExample {
                    words: s.words.clone(),
                    labels: self.scheme.encode(s.words.len(), &s.spans)?,
                })
            })
            .collect()
    }

    /// Fraction of sentences with every word's category correct.
    pub fn sentence_accuracy(&self, data: &[PosSentence]) -> f64 {
        let correct = data
            .iter()
            .filter(|s| {
                let gold: Vec<&str> = {
                    let mut g = vec![self.default_category.as_str(); s.words.len()];
                    for span in &s.spans {
                        for slot in g.iter_mut().take(span.end).skip(span.start) {
                            *slot = &span.category;
                        }
                    }
                    g
                };
                self.pos_tag(&s.words)
                    .map(|tags| tags.iter().map(String::as_str).eq(gold.iter().copied()))
                    .unwrap_or(false)
            })
            .count();
        correct as f64 / data.len().max(1) as f64
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = tagger_to_checkpoint(&self.model, "pos");
        ck.inventory_hashes.insert(
            POS_INVENTORY_HASH_KEY.into(),
            self.scheme.inventory().content_hash(),
        );
        ck.meta
            .insert("default_category".into(), self.default_category.clone());
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint, inventory: CategoryInventory) -> Result<Self> {
        ck.verify_inventory(POS_INVENTORY_HASH_KEY, &inventory.content_hash())?;
        let scheme = LabelScheme::new(inventory);
        let model = tagger_from_checkpoint(ck, "pos", TransitionMask::bies(&scheme))?;
        Ok(PosTagger {
            model,
            scheme,
            default_category: ck.meta_str("default_category")?.to_string(),
        })
    }
}

/// Polyphone classifier: the shared encoder's state at the target word
/// position through a softmax over variant classes.
#[derive(Debug, Clone)]
pub struct PolyphoneModel {
    pub vocab: Vocab,
    pub encoder: EncoderConfig,
    pub max_classes: usize,
    pub params: Params,
}

impl PolyphoneModel {
    pub fn new(vocab: Vocab, encoder: EncoderConfig, max_classes: usize, seed: u64) -> Self {
        assert!(max_classes >= 1);
        let mut params = Params::new();
        let mut init = Init::new(seed);
        encoder.init(&mut params, &mut init, "enc.", vocab.len());
        params.insert("cls.w", init.xavier(encoder.output_dim(), max_classes));
        params.insert("cls.b", init.zeros1(max_classes));
        PolyphoneModel {
            vocab,
            encoder,
            max_classes,
            params,
        }
    }

    /// Class logits for one word position.
    fn logits(&self, words: &[impl AsRef<str>], target: usize) -> Result<Vec<f64>> {
        let ids = self.vocab.ids(words);
        let enc = encode(&self.encoder, &self.params, "enc.", &ids)?;
        let w = self
            .params
            .get("cls.w")
            .view()
            .into_dimensionality::<ndarray::Ix2>()
            .expect("2-d");
        let b = self
            .params
            .get("cls.b")
            .view()
            .into_dimensionality::<Ix1>()
            .expect("1-d");
        let row = enc.row(target);
        Ok((0..self.max_classes)
            .map(|c| row.dot(&w.column(c)) + b[c])
            .collect())
    }

    /// Argmax over the word's first `n_variants` classes; ties break to the
    /// lowest class id. Single-variant words are always class 0.
    pub fn classify(
        &self,
        words: &[impl AsRef<str>],
        target: usize,
        n_variants: usize,
    ) -> Result<usize> {
        if target >= words.len() {
            return Err(Error::LengthMismatch(target, words.len()));
        }
        let n = n_variants.min(self.max_classes).max(1);
        if n == 1 {
            return Ok(0);
        }
        let logits = self.logits(words, target)?;
        let mut best = 0;
        for c in 1..n {
            if logits[c] > logits[best] {
                best = c;
            }
        }
        Ok(best)
    }

    pub fn train(
        &mut self,
        data: &[PolyphoneExample],
        cfg: &TrainConfig,
        stop: Option<&dyn Fn(&PolyphoneModel) -> bool>,
    ) -> Result<Vec<f64>> {
        cfg.validate()?;
        if data.is_empty() {
            return Err(Error::EmptySequence);
        }
        let token_ids: Vec<Vec<usize>> = data.iter().map(|e| self.vocab.ids(&e.words)).collect();
        let mut trainer = Trainer::new(cfg);
        for _ in 0..cfg.epochs {
            {
                let PolyphoneModel {
                    ref mut params,
                    ref encoder,
                    max_classes,
                    ..
                } = *self;
                trainer.epoch(params, data.len(), |ctx, i| {
                    let ex = &data[i];
                    let enc = encoder.forward(ctx, "enc.", &token_ids[i]);
                    let logits = enc
                        .matmul(ctx.p("cls.w"))
                        .add_rowvec(ctx.p("cls.b"))
                        .log_softmax_rows();
                    debug_assert!(ex.class < max_classes);
                    Ok(logits.pick(ex.target, ex.class).neg())
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

    pub fn accuracy(&self, data: &[PolyphoneExample], table: &HomographTable) -> f64 {
        let correct = data
            .iter()
            .filter(|e| {
                let n = table
                    .get(&e.words[e.target])
                    .map(|h| h.poly_split.len())
                    .unwrap_or(1);
                self.classify(&e.words, e.target, n)
                    .map(|c| c == e.class)
                    .unwrap_or(false)
            })
            .count();
        correct as f64 / data.len().max(1) as f64
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.meta.insert("task".into(), "polyphone".into());
        ck.meta.insert("embed_dim".into(), self.encoder.embed_dim.to_string());
        ck.meta
            .insert("bank_width_max".into(), self.encoder.bank_width_max.to_string());
        ck.meta
            .insert("bank_channels".into(), self.encoder.bank_channels.to_string());
        ck.meta.insert("hidden".into(), self.encoder.hidden.to_string());
        ck.meta.insert("max_classes".into(), self.max_classes.to_string());
        ck.meta.insert("vocab".into(), self.vocab.words().join("\n"));
        ck.params = self.params.clone();
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        if ck.meta_str("task")? != "polyphone" {
            return Err(Error::Checkpoint {
                path: String::new(),
                msg: format!(
                    "checkpoint holds task `{}`, expected `polyphone`",
                    ck.meta_str("task")?
                ),
            });
        }
        Ok(PolyphoneModel {
            vocab: Vocab::from_list(
                ck.meta_str("vocab")?.split('\n').map(String::from).collect(),
            ),
            encoder: EncoderConfig {
                embed_dim: ck.meta_usize("embed_dim")?,
                bank_width_max: ck.meta_usize("bank_width_max")?,
                bank_channels: ck.meta_usize("bank_channels")?,
                hidden: ck.meta_usize("hidden")?,
            },
            max_classes: ck.meta_usize("max_classes")?,
            params: ck.params.clone(),
        })
    }
}

/// Checkpoint wrappers for the OOV phonemizer, with inventory hashes.
pub fn seq2seq_to_checkpoint(model: &Seq2SeqModel) -> Checkpoint {
    let mut ck = Checkpoint::new();
    ck.meta.insert("task".into(), "g2poov".into());
    ck.meta.insert("model_dim".into(), model.cfg.model_dim.to_string());
    ck.meta.insert("heads".into(), model.cfg.heads.to_string());
    ck.meta.insert("enc_layers".into(), model.cfg.enc_layers.to_string());
    ck.meta.insert("dec_layers".into(), model.cfg.dec_layers.to_string());
    ck.meta.insert("ffn_dim".into(), model.cfg.ffn_dim.to_string());
    if let Some(cap) = model.cfg.max_len_override {
        ck.meta.insert("max_len_override".into(), cap.to_string());
    }
    ck.inventory_hashes.insert(
        CHAR_INVENTORY_HASH_KEY.into(),
        model.chars.content_hash(),
    );
    ck.inventory_hashes.insert(
        PHONEME_INVENTORY_HASH_KEY.into(),
        model.phonemes.content_hash(),
    );
    ck.params = model.params.clone();
    ck
}

pub fn seq2seq_from_checkpoint(
    ck: &Checkpoint,
    chars: CharInventory,
    phonemes: PhonemeInventory,
) -> Result<Seq2SeqModel> {
    if ck.meta_str("task")? != "g2poov" {
        return Err(Error::Checkpoint {
            path: String::new(),
            msg: format!(
                "checkpoint holds task `{}`, expected `g2poov`",
                ck.meta_str("task")?
            ),
        });
    }
    ck.verify_inventory(CHAR_INVENTORY_HASH_KEY, &chars.content_hash())?;
    ck.verify_inventory(PHONEME_INVENTORY_HASH_KEY, &phonemes.content_hash())?;
    Ok(Seq2SeqModel {
        cfg: crate::models::seq2seq::Seq2SeqConfig {
            model_dim: ck.meta_usize("model_dim")?,
            heads: ck.meta_usize("heads")?,
            enc_layers: ck.meta_usize("enc_layers")?,
            dec_layers: ck.meta_usize("dec_layers")?,
            ffn_dim: ck.meta_usize("ffn_dim")?,
            max_len_override: ck.meta.get("max_len_override").and_then(|v| v.parse().ok()),
        },
        chars,
        phonemes,
        params: ck.params.clone(),
    })
}

/// Encode training pairs as (char ids, phoneme ids); words whose characters
/// or phonemes fall outside the inventories are rejected.
pub fn pairs_to_ids(
    pairs: &[dataset::G2pPair],
    chars: &CharInventory,
    phonemes: &PhonemeInventory,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    pairs
        .iter()
        .map(|p| {
            let (ids, dropped) = chars.encode_lossy(&p.word);
            if !dropped.is_empty() || ids.is_empty() {
                return Err(Error::EmptyWord(format!(
                    " (word `{}` has characters outside the inventory)",
                    p.word
                )));
            }
            let ph = phonemes
                .ids(&p.phonemes)
                .ok_or_else(|| Error::EmptyWord(format!(" (bad phonemes for `{}`)", p.word)))?;
            Ok((ids, ph))
        })
        .collect()
}

/// Phonemize one out-of-vocabulary word: lowercase, drop characters outside
/// the inventory (with a diagnostic), take the best beam hypothesis.
pub fn g2p_oov(
    word: &str,
    model: &Seq2SeqModel,
    beam: usize,
) -> Result<(Vec<String>, Vec<String>)> {
    let mut diagnostics = Vec::new();
    let lower = word.to_lowercase();
    let (ids, dropped) = model.chars.encode_lossy(&lower);
    if !dropped.is_empty() {
        diagnostics.push(format!(
            "`{word}`: dropped characters outside the inventory: {}",
            dropped.iter().collect::<String>()
        ));
    }
    if ids.is_empty() {
        return Err(Error::EmptyWord(format!(
            " (`{word}` reduced to nothing after character filtering)"
        )));
    }
    let hyps = model.beam_decode(&ids, beam.max(1))?;
    let best = &hyps[0].0;
    let phonemes = best
        .iter()
        .map(|&id| model.phonemes.symbol(id).expect("content id").to_string())
        .collect();
    Ok((phonemes, diagnostics))
}

/// Everything the resolver may consult; heads are optional so ablations and
/// partially-trained pipelines run with the same code path.
pub struct Resolver<'a> {
    pub lexicon: &'a Lexicon,
    pub homographs: &'a HomographTable,
    pub oov: Option<&'a Seq2SeqModel>,
    pub pos: Option<&'a PosTagger>,
    pub polyphone: Option<&'a PolyphoneModel>,
    pub beam: usize,
}

impl<'a> Resolver<'a> {
    /// Resolve a whole sentence. Every word gets exactly one provenance:
    /// lexicon words take their default variant, OOV words go through the
    /// phonemizer, then POS-split homographs are re-selected by the POS
    /// tags, and polyphone-split homographs by the classifier (last, wins).
    /// Failures on one word never abort the sentence: the word falls back
    /// to letter names with a diagnostic.
    pub fn resolve(&self, words: &[String]) -> Result<(Vec<WordPhonemes>, Vec<String>)> {
        let mut diagnostics = Vec::new();
        let pos_tags: Option<Vec<String>> = match self.pos {
            Some(tagger) if !words.is_empty() => Some(tagger.pos_tag(words)?),
            _ => None,
        };
        let mut out = Vec::with_capacity(words.len());
        for (i, word) in words.iter().enumerate() {
            let mut resolved = match self.lexicon.lookup(word) {
                Some(entries) => WordPhonemes {
                    word: word.clone(),
                    phonemes: entries[0].phonemes.clone(),
                    provenance: Provenance::Lexicon,
                    variant: Some(0),
                },
                None => match self.oov {
                    Some(model) => match g2p_oov(word, model, self.beam) {
                        Ok((phonemes, diags)) => {
                            diagnostics.extend(diags);
                            WordPhonemes {
                                word: word.clone(),
                                phonemes,
                                provenance: Provenance::Oov,
                                variant: None,
                            }
                        }
                        Err(e) => {
                            diagnostics.push(format!("`{word}`: {e}; using letter names"));
                            self.letter_fallback(word)
                        }
                    },
                    None => {
                        diagnostics.push(format!(
                            "`{word}`: not in lexicon and no phonemizer loaded; using letter names"
                        ));
                        self.letter_fallback(word)
                    }
                },
            };
            // Homograph updates only apply to lexicon words (the table
            // invariant ties variants to lexicon entries).
            if resolved.variant.is_some() {
                if let Some(entry) = self.homographs.get(word) {
                    let lex_entries = self.lexicon.lookup(word).expect("homographs are lexicon words");
                    if let (Some(tags), false) = (&pos_tags, entry.pos_split.is_empty()) {
                        if let Some(&variant) = entry.pos_split.get(&tags[i]) {
                            resolved.phonemes = lex_entries[variant].phonemes.clone();
                            resolved.variant = Some(variant);
                            resolved.provenance = Provenance::PosUpdated;
                        }
                    }
                    if let (Some(poly), false) = (self.polyphone, entry.poly_split.is_empty()) {
                        let class = poly.classify(words, i, entry.poly_split.len())?;
                        let variant = entry.poly_split[class].variant;
                        resolved.phonemes = lex_entries[variant].phonemes.clone();
                        resolved.variant = Some(variant);
                        resolved.provenance = Provenance::PolyphoneUpdated;
                    }
                }
            }
            out.push(resolved);
        }
        Ok((out, diagnostics))
    }

    fn letter_fallback(&self, word: &str) -> WordPhonemes {
        let mut phonemes = Vec::new();
        for c in word.to_lowercase().chars().filter(|c| c.is_alphanumeric()) {
            if let Some(entries) = self.lexicon.lookup(&c.to_string()) {
                phonemes.extend(entries[0].phonemes.iter().cloned());
            }
        }
        WordPhonemes {
            word: word.to_string(),
            phonemes,
            provenance: Provenance::Fallback,
            variant: None,
        }
    }
}

/// Word error rate: fraction of words whose predicted phoneme sequence does
/// not exactly match the reference.
pub fn g2p_wer(pred: &[Vec<String>], gold: &[Vec<String>]) -> Result<f64> {
    crate::metrics::wer(pred, gold)
}
