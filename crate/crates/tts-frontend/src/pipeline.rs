//! End-to-end orchestration: configuration, resource/model loading, the
//! raw-text-to-normative-rows pipeline, per-task training entry points and
//! the evaluation harnesses (SER, per-level F1, WER, beam sweep, ablation).

use crate::align::{build_normative_label, NormativeRow};
use crate::core::inventory::{CategoryInventory, CharInventory, PhonemeInventory};
use crate::core::prosody::ProsodyLevel;
use crate::error::{Error, Result};
use crate::g2p::dataset::{
    load_g2p_eval, load_g2p_pairs, load_polyphone_corpus, load_pos_corpus, split_pairs,
    G2pEvalSentence, G2pPair,
};
use crate::g2p::homograph::HomographTable;
use crate::g2p::lexicon::Lexicon;
use crate::g2p::{
    g2p_oov, pairs_to_ids, seq2seq_from_checkpoint, seq2seq_to_checkpoint, PolyphoneModel,
    PosTagger, Resolver, WordPhonemes,
};
use crate::metrics::{ser, wer};
use crate::models::checkpoint::Checkpoint;
use crate::models::seq2seq::Seq2SeqModel;
use crate::models::train::{train_seq2seq, TrainConfig};
use crate::models::vocab::Vocab;
use crate::pwpp::{load_prosody_corpus, pwpp_f1, HierProsodyModel};
use crate::tn::dataset::{load_tn_corpus, to_tag_examples};
use crate::tn::rules::TnRuleSet;
use crate::tn::verbalize::VerbalizeOptions;
use crate::tn::{normalize, NormalizeOutcome, TnTagger};
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const TN_CATEGORY_COUNT: usize = 19;
pub const POS_CATEGORY_COUNT: usize = 24;
pub const PHONEME_COUNT: usize = 73;
pub const CHAR_COUNT: usize = 61;

#[derive(Debug, Clone, Deserialize)]
pub struct InventoryPaths {
    pub tn_categories: PathBuf,
    pub pos_categories: PathBuf,
    pub phonemes: PathBuf,
    pub chars: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ResourcePaths {
    pub lexicon: PathBuf,
    pub rules: Option<PathBuf>,
    pub hotwords: Option<PathBuf>,
    pub homographs: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct ModelPaths {
    pub tn: Option<PathBuf>,
    pub pwpp: Option<PathBuf>,
    pub pos: Option<PathBuf>,
    pub polyphone: Option<PathBuf>,
    pub g2poov: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default)]
pub struct PipelineFlags {
    /// Keep stress digits from the lexicon (off: `OW1 -> OW`).
    pub keep_stress: bool,
    /// Force the sentence-final word to prosody #3.
    pub force_final_intonation: bool,
    /// British "and" in cardinals.
    pub and_convention: bool,
}

impl Default for PipelineFlags {
    fn default() -> Self {
        PipelineFlags {
            keep_stress: false,
            force_final_intonation: true,
            and_convention: true,
        }
    }
}

fn default_beam() -> usize {
    3
}

#[derive(Debug, Clone, Deserialize)]
pub struct PipelineConfig {
    pub inventories: InventoryPaths,
    pub resources: ResourcePaths,
    #[serde(default)]
    pub models: ModelPaths,
    #[serde(default)]
    pub flags: PipelineFlags,
    #[serde(default = "default_beam")]
    pub beam: usize,
    #[serde(default)]
    pub train: TrainConfig,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    /// Parse a TOML config; relative paths resolve against the file's
    /// directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        resolve(&base, &mut cfg.inventories.tn_categories);
        resolve(&base, &mut cfg.inventories.pos_categories);
        resolve(&base, &mut cfg.inventories.phonemes);
        resolve(&base, &mut cfg.inventories.chars);
        resolve(&base, &mut cfg.resources.lexicon);
        for p in [
            &mut cfg.resources.rules,
            &mut cfg.resources.hotwords,
            &mut cfg.resources.homographs,
        ]
        .into_iter()
        .flatten()
        {
            resolve(&base, p);
        }
        for p in [
            &mut cfg.models.tn,
            &mut cfg.models.pwpp,
            &mut cfg.models.pos,
            &mut cfg.models.polyphone,
            &mut cfg.models.g2poov,
        ]
        .into_iter()
        .flatten()
        {
            resolve(&base, p);
        }
        cfg.train.validate()?;
        if cfg.beam == 0 {
            return Err(Error::Config("beam size must be >= 1".into()));
        }
        Ok(cfg)
    }

    fn check_exists(&self) -> Result<()> {
        let mut required = vec![
            &self.inventories.tn_categories,
            &self.inventories.pos_categories,
            &self.inventories.phonemes,
            &self.inventories.chars,
            &self.resources.lexicon,
        ];
        required.extend(self.resources.rules.iter());
        required.extend(self.resources.hotwords.iter());
        required.extend(self.resources.homographs.iter());
        required.extend(self.models.tn.iter());
        required.extend(self.models.pwpp.iter());
        required.extend(self.models.pos.iter());
        required.extend(self.models.polyphone.iter());
        required.extend(self.models.g2poov.iter());
        for p in required {
            if !p.exists() {
                return Err(Error::MissingFile(p.clone()));
            }
        }
        Ok(())
    }
}

/// All loaded resources and whatever task models are available. Everything
/// is immutable after load; lines can be processed concurrently.
pub struct Frontend {
    pub tn_inventory: CategoryInventory,
    pub pos_inventory: CategoryInventory,
    pub phonemes: PhonemeInventory,
    pub chars: CharInventory,
    pub lexicon: Lexicon,
    pub rules: TnRuleSet,
    pub homographs: HomographTable,
    pub flags: PipelineFlags,
    pub beam: usize,
    pub tn: Option<TnTagger>,
    pub pwpp: Option<HierProsodyModel>,
    pub pos: Option<PosTagger>,
    pub polyphone: Option<PolyphoneModel>,
    pub g2poov: Option<Seq2SeqModel>,
}

impl Frontend {
    /// Load inventories, lexicon, rules and any configured checkpoints.
    /// Every referenced file must exist; checkpoint inventory hashes must
    /// match the loaded inventories.
    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        cfg.check_exists()?;
        let tn_inventory =
            CategoryInventory::load_expecting(&cfg.inventories.tn_categories, TN_CATEGORY_COUNT)?;
        let pos_inventory =
            CategoryInventory::load_expecting(&cfg.inventories.pos_categories, POS_CATEGORY_COUNT)?;
        let phonemes = PhonemeInventory::load_expecting(&cfg.inventories.phonemes, PHONEME_COUNT)?;
        let chars = CharInventory::load_expecting(&cfg.inventories.chars, CHAR_COUNT)?;
        let lexicon = Lexicon::load(&cfg.resources.lexicon, &phonemes, cfg.flags.keep_stress)?;
        let mut rules = TnRuleSet::new();
        if let Some(p) = &cfg.resources.rules {
            rules.load_rules(p)?;
        }
        if let Some(p) = &cfg.resources.hotwords {
            rules.load_hotwords(p)?;
        }
        let homographs = match &cfg.resources.homographs {
            Some(p) => HomographTable::load(p, &lexicon)?,
            None => HomographTable::new(),
        };
        let mut frontend = Frontend {
            tn_inventory,
            pos_inventory,
            phonemes,
            chars,
            lexicon,
            rules,
            homographs,
            flags: cfg.flags,
            beam: cfg.beam,
            tn: None,
            pwpp: None,
            pos: None,
            polyphone: None,
            g2poov: None,
        };
        if let Some(p) = &cfg.models.tn {
            frontend.tn = Some(TnTagger::from_checkpoint(
                &Checkpoint::load(p)?,
                frontend.tn_inventory.clone(),
            )?);
        }
        if let Some(p) = &cfg.models.pwpp {
            frontend.pwpp = Some(HierProsodyModel::from_checkpoint(&Checkpoint::load(p)?)?);
        }
        if let Some(p) = &cfg.models.pos {
            frontend.pos = Some(PosTagger::from_checkpoint(
                &Checkpoint::load(p)?,
                frontend.pos_inventory.clone(),
            )?);
        }
        if let Some(p) = &cfg.models.polyphone {
            frontend.polyphone = Some(PolyphoneModel::from_checkpoint(&Checkpoint::load(p)?)?);
        }
        if let Some(p) = &cfg.models.g2poov {
            frontend.g2poov = Some(seq2seq_from_checkpoint(
                &Checkpoint::load(p)?,
                frontend.chars.clone(),
                frontend.phonemes.clone(),
            )?);
        }
        Ok(frontend)
    }

    /// Load `{tn,pwpp,pos,polyphone,g2poov}.bin` from a directory, skipping
    /// files that do not exist.
    pub fn load_models_dir(&mut self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let p = dir.join("tn.bin");
        if p.exists() {
            self.tn = Some(TnTagger::from_checkpoint(
                &Checkpoint::load(&p)?,
                self.tn_inventory.clone(),
            )?);
        }
        let p = dir.join("pwpp.bin");
        if p.exists() {
            self.pwpp = Some(HierProsodyModel::from_checkpoint(&Checkpoint::load(&p)?)?);
        }
        let p = dir.join("pos.bin");
        if p.exists() {
            self.pos = Some(PosTagger::from_checkpoint(
                &Checkpoint::load(&p)?,
                self.pos_inventory.clone(),
            )?);
        }
        let p = dir.join("polyphone.bin");
        if p.exists() {
            self.polyphone = Some(PolyphoneModel::from_checkpoint(&Checkpoint::load(&p)?)?);
        }
        let p = dir.join("g2poov.bin");
        if p.exists() {
            self.g2poov = Some(seq2seq_from_checkpoint(
                &Checkpoint::load(&p)?,
                self.chars.clone(),
                self.phonemes.clone(),
            )?);
        }
        Ok(())
    }

    pub fn verbalize_options(&self) -> VerbalizeOptions {
        VerbalizeOptions {
            and_convention: self.flags.and_convention,
        }
    }

    /// TN only: raw line to the normalized sentence.
    pub fn normalize_line(&self, line: &str) -> Result<NormalizeOutcome> {
        let tagger = self.tn.as_ref().ok_or(Error::ModelNotLoaded("tn".into()))?;
        normalize(line, tagger, &self.rules, &self.verbalize_options())
    }

    /// The words the downstream stages speak: normalized tokens that carry
    /// at least one alphanumeric character (bare punctuation is silent).
    pub fn speakable_words(outcome: &NormalizeOutcome) -> Vec<String> {
        outcome
            .words
            .iter()
            .filter(|w| w.chars().any(|c| c.is_alphanumeric()))
            .map(|w| w.to_lowercase())
            .collect()
    }

    fn resolver(&self) -> Resolver<'_> {
        Resolver {
            lexicon: &self.lexicon,
            homographs: &self.homographs,
            oov: self.g2poov.as_ref(),
            pos: self.pos.as_ref(),
            polyphone: self.polyphone.as_ref(),
            beam: self.beam,
        }
    }

    /// G2P on an already-normalized word sequence.
    pub fn g2p_words(&self, words: &[String]) -> Result<(Vec<WordPhonemes>, Vec<String>)> {
        self.resolver().resolve(words)
    }

    /// The full pipeline for one raw line: normalize, predict prosody and
    /// POS on the normalized words, resolve pronunciations, and align into
    /// normative rows. Diagnostics collect everything non-fatal.
    pub fn frontend_line(&self, line: &str) -> Result<(Vec<NormativeRow>, Vec<String>)> {
        let pwpp = self
            .pwpp
            .as_ref()
            .ok_or(Error::ModelNotLoaded("pwpp".into()))?;
        let pos = self.pos.as_ref().ok_or(Error::ModelNotLoaded("pos".into()))?;
        let outcome = self.normalize_line(line)?;
        let mut diagnostics = outcome.diagnostics.clone();
        let words = Self::speakable_words(&outcome);
        if words.is_empty() {
            return Ok((Vec::new(), diagnostics));
        }
        let prosody = pwpp.predict(&words, self.flags.force_final_intonation)?;
        let pos_tags = pos.pos_tag(&words)?;
        let (resolved, g2p_diags) = self.g2p_words(&words)?;
        diagnostics.extend(g2p_diags);
        let rows = build_normative_label(&resolved, &prosody.merged, &pos_tags)?;
        Ok((rows, diagnostics))
    }
}

/// Train one task from its corpus file and return the checkpoint.
/// `init_from` continues from an existing checkpoint (sequential
/// fine-tuning keeps updating the same shared encoder weights).
pub fn train_task(
    task: &str,
    corpus: &Path,
    cfg: &PipelineConfig,
    init_from: Option<&Path>,
) -> Result<(Checkpoint, Vec<f64>)> {
    let train_cfg = &cfg.train;
    match task {
        "tn" => {
            let inventory = CategoryInventory::load_expecting(
                &cfg.inventories.tn_categories,
                TN_CATEGORY_COUNT,
            )?;
            let sentences = load_tn_corpus(corpus, &inventory)?;
            let mut tagger = match init_from {
                Some(p) => TnTagger::from_checkpoint(&Checkpoint::load(p)?, inventory.clone())?,
                None => {
                    let vocab = Vocab::from_words(
                        sentences
                            .iter()
                            .flat_map(|s| s.tokens.iter().map(|t| t.text.clone())),
                    );
                    TnTagger::new(
                        vocab,
                        train_cfg.encoder_config(),
                        inventory.clone(),
                        train_cfg.seed,
                    )
                }
            };
            let examples = to_tag_examples(&sentences, &tagger.scheme)?;
            let check = examples.clone();
            let history = tagger.train(
                &examples,
                train_cfg,
                Some(&move |m| m.sequence_accuracy(&check) == 1.0),
            )?;
            Ok((tagger.to_checkpoint(), history))
        }
        "pwpp" => {
            let data = load_prosody_corpus(corpus)?;
            let mut model = match init_from {
                Some(p) => HierProsodyModel::from_checkpoint(&Checkpoint::load(p)?)?,
                None => {
                    let vocab =
                        Vocab::from_words(data.iter().flat_map(|s| s.words.iter().cloned()));
                    HierProsodyModel::new(vocab, train_cfg.encoder_config(), train_cfg.seed)
                }
            };
            let check = data.clone();
            let history = model.train(
                &data,
                train_cfg,
                Some(&move |m| m.sequence_accuracy(&check, false) == 1.0),
            )?;
            Ok((model.to_checkpoint(), history))
        }
        "pos" => {
            let inventory = CategoryInventory::load_expecting(
                &cfg.inventories.pos_categories,
                POS_CATEGORY_COUNT,
            )?;
            let data = load_pos_corpus(corpus, &inventory)?;
            let mut tagger = match init_from {
                Some(p) => PosTagger::from_checkpoint(&Checkpoint::load(p)?, inventory.clone())?,
                None => {
                    let vocab =
                        Vocab::from_words(data.iter().flat_map(|s| s.words.iter().cloned()));
                    PosTagger::new(
                        vocab,
                        train_cfg.encoder_config(),
                        inventory.clone(),
                        train_cfg.seed,
                    )
                }
            };
            // Stop once every gold label sequence decodes exactly (which
            // implies per-word category accuracy).
            let check = tagger.to_examples(&data)?;
            let history = tagger.train(
                &data,
                train_cfg,
                Some(&move |m| m.sequence_accuracy(&check) == 1.0),
            )?;
            Ok((tagger.to_checkpoint(), history))
        }
        "polyphone" => {
            let phonemes =
                PhonemeInventory::load_expecting(&cfg.inventories.phonemes, PHONEME_COUNT)?;
            let lexicon = Lexicon::load(&cfg.resources.lexicon, &phonemes, cfg.flags.keep_stress)?;
            let homographs = match &cfg.resources.homographs {
                Some(p) => HomographTable::load(p, &lexicon)?,
                None => HomographTable::new(),
            };
            let data = load_polyphone_corpus(corpus, &homographs)?;
            let mut model = match init_from {
                Some(p) => PolyphoneModel::from_checkpoint(&Checkpoint::load(p)?)?,
                None => {
                    let vocab =
                        Vocab::from_words(data.iter().flat_map(|e| e.words.iter().cloned()));
                    PolyphoneModel::new(
                        vocab,
                        train_cfg.encoder_config(),
                        homographs.max_poly_classes().max(2),
                        train_cfg.seed,
                    )
                }
            };
            let check = data.clone();
            let table = homographs.clone();
            let history = model.train(
                &data,
                train_cfg,
                Some(&move |m| m.accuracy(&check, &table) == 1.0),
            )?;
            Ok((model.to_checkpoint(), history))
        }
        "g2poov" => {
            let phonemes =
                PhonemeInventory::load_expecting(&cfg.inventories.phonemes, PHONEME_COUNT)?;
            let chars = CharInventory::load_expecting(&cfg.inventories.chars, CHAR_COUNT)?;
            let pairs = load_g2p_pairs(corpus, &phonemes, cfg.flags.keep_stress)?;
            let data = pairs_to_ids(&pairs, &chars, &phonemes)?;
            let mut model = match init_from {
                Some(p) => {
                    seq2seq_from_checkpoint(&Checkpoint::load(p)?, chars, phonemes)?
                }
                None => Seq2SeqModel::new(
                    train_cfg.seq2seq_config(),
                    chars,
                    phonemes,
                    train_cfg.seed,
                ),
            };
            let check = data.clone();
            let exact = move |m: &Seq2SeqModel| {
                check.iter().all(|(x, y)| {
                    m.beam_decode(x, 1).map(|h| &h[0].0 == y).unwrap_or(false)
                })
            };
            let history = train_seq2seq(&mut model, &data, train_cfg, Some(&exact))?;
            Ok((seq2seq_to_checkpoint(&model), history))
        }
        other => Err(Error::Config(format!(
            "unknown task `{other}` (expected tn, pwpp, pos, polyphone or g2poov)"
        ))),
    }
}

/// One metric row of an evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub name: String,
    pub value: f64,
}

/// Evaluate a task checkpoint on a corpus. TN reports SER, PWPP per-level
/// F1, POS and Polyphone sentence/target accuracy, G2POOV word error rate
/// (`sweep` reports one row per beam size in {1, 2, 3, 5, 10}).
pub fn eval_task(
    task: &str,
    corpus: &Path,
    checkpoint: Option<&Path>,
    cfg: &PipelineConfig,
    sweep: bool,
    beam: usize,
) -> Result<Vec<MetricRow>> {
    let need_ckpt = || -> Result<Checkpoint> {
        let p = checkpoint.ok_or_else(|| {
            Error::Config(format!("eval {task} requires --checkpoint"))
        })?;
        Checkpoint::load(p)
    };
    match task {
        "tn" => {
            let inventory = CategoryInventory::load_expecting(
                &cfg.inventories.tn_categories,
                TN_CATEGORY_COUNT,
            )?;
            let tagger = TnTagger::from_checkpoint(&need_ckpt()?, inventory.clone())?;
            let sentences = load_tn_corpus(corpus, &inventory)?;
            let mut rules = TnRuleSet::new();
            if let Some(p) = &cfg.resources.rules {
                rules.load_rules(p)?;
            }
            if let Some(p) = &cfg.resources.hotwords {
                rules.load_hotwords(p)?;
            }
            let opts = VerbalizeOptions {
                and_convention: cfg.flags.and_convention,
            };
            let mut pred = Vec::new();
            let mut refs = Vec::new();
            for s in &sentences {
                pred.push(normalize(&s.text, &tagger, &rules, &opts)?.text());
                refs.push(s.reference.clone());
            }
            Ok(vec![MetricRow {
                name: "ser".into(),
                value: ser(&pred, &refs)?,
            }])
        }
        "pwpp" => {
            let model = HierProsodyModel::from_checkpoint(&need_ckpt()?)?;
            let data = load_prosody_corpus(corpus)?;
            let mut pred_all = Vec::new();
            let mut gold_all = Vec::new();
            for s in &data {
                pred_all.extend(model.predict(&s.words, false)?.merged);
                gold_all.extend(s.merged.iter().copied());
            }
            let mut rows = Vec::new();
            for level in crate::pwpp::LEVELS {
                rows.push(MetricRow {
                    name: format!("f1_level{level}"),
                    value: pwpp_f1(&pred_all, &gold_all, level)?,
                });
            }
            Ok(rows)
        }
        "pos" => {
            let inventory = CategoryInventory::load_expecting(
                &cfg.inventories.pos_categories,
                POS_CATEGORY_COUNT,
            )?;
            let tagger = PosTagger::from_checkpoint(&need_ckpt()?, inventory.clone())?;
            let data = load_pos_corpus(corpus, &inventory)?;
            Ok(vec![MetricRow {
                name: "sentence_accuracy".into(),
                value: tagger.sentence_accuracy(&data),
            }])
        }
        "polyphone" => {
            let phonemes =
                PhonemeInventory::load_expecting(&cfg.inventories.phonemes, PHONEME_COUNT)?;
            let lexicon = Lexicon::load(&cfg.resources.lexicon, &phonemes, cfg.flags.keep_stress)?;
            let homographs = match &cfg.resources.homographs {
                Some(p) => HomographTable::load(p, &lexicon)?,
                None => HomographTable::new(),
            };
            let model = PolyphoneModel::from_checkpoint(&need_ckpt()?)?;
            let data = load_polyphone_corpus(corpus, &homographs)?;
            Ok(vec![MetricRow {
                name: "accuracy".into(),
                value: model.accuracy(&data, &homographs),
            }])
        }
        "g2poov" => {
            let phonemes =
                PhonemeInventory::load_expecting(&cfg.inventories.phonemes, PHONEME_COUNT)?;
            let chars = CharInventory::load_expecting(&cfg.inventories.chars, CHAR_COUNT)?;
            let model = seq2seq_from_checkpoint(&need_ckpt()?, chars, phonemes.clone())?;
            let pairs = load_g2p_pairs(corpus, &phonemes, cfg.flags.keep_stress)?;
            // The held-out portion of the seeded word-hash split.
            let (_, _, test) = split_pairs(&pairs, cfg.train.seed);
            let eval_set = if test.is_empty() { pairs } else { test };
            if sweep {
                beam_sweep(&model, &eval_set, &[1, 2, 3, 5, 10])
            } else {
                let w = phonemizer_wer(&model, &eval_set, beam)?;
                Ok(vec![MetricRow {
                    name: format!("wer_beam{beam}"),
                    value: w,
                }])
            }
        }
        other => Err(Error::Config(format!("unknown eval task `{other}`"))),
    }
}

/// WER of the phonemizer on word/pronunciation pairs at one beam size.
pub fn phonemizer_wer(model: &Seq2SeqModel, pairs: &[G2pPair], beam: usize) -> Result<f64> {
    let mut pred = Vec::with_capacity(pairs.len());
    let mut gold = Vec::with_capacity(pairs.len());
    for p in pairs {
        let (phonemes, _) = g2p_oov(&p.word, model, beam)?;
        pred.push(phonemes);
        gold.push(p.phonemes.clone());
    }
    wer(&pred, &gold)
}

/// Per-beam-size WER report, mirroring the beam-size study structure.
pub fn beam_sweep(
    model: &Seq2SeqModel,
    pairs: &[G2pPair],
    beams: &[usize],
) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    for &k in beams {
        rows.push(MetricRow {
            name: format!("wer_beam{k}"),
            value: phonemizer_wer(model, pairs, k)?,
        });
    }
    Ok(rows)
}

/// One ablation stage: which heads are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AblationStage {
    pub name: &'static str,
    pub use_oov: bool,
    pub use_pos: bool,
    pub use_polyphone: bool,
}

pub const ABLATION_STAGES: [AblationStage; 4] = [
    AblationStage {
        name: "lexicon",
        use_oov: false,
        use_pos: false,
        use_polyphone: false,
    },
    AblationStage {
        name: "lexicon+g2poov",
        use_oov: true,
        use_pos: false,
        use_polyphone: false,
    },
    AblationStage {
        name: "lexicon+g2poov+pos",
        use_oov: true,
        use_pos: true,
        use_polyphone: false,
    },
    AblationStage {
        name: "lexicon+g2poov+pos+polyphone",
        use_oov: true,
        use_pos: true,
        use_polyphone: true,
    },
];

/// Run the staged ablation over an evaluation set: WER of the lexicon
/// route alone, then adding the phonemizer, the POS update and the
/// polyphone update.
pub fn g2p_ablation(
    lexicon: &Lexicon,
    homographs: &HomographTable,
    oov: Option<&Seq2SeqModel>,
    pos: Option<&PosTagger>,
    polyphone: Option<&PolyphoneModel>,
    beam: usize,
    eval: &[G2pEvalSentence],
) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    for stage in ABLATION_STAGES {
        let resolver = Resolver {
            lexicon,
            homographs,
            oov: if stage.use_oov { oov } else { None },
            pos: if stage.use_pos { pos } else { None },
            polyphone: if stage.use_polyphone { polyphone } else { None },
            beam,
        };
        let mut pred = Vec::new();
        let mut gold = Vec::new();
        for sentence in eval {
            let (resolved, _) = resolver.resolve(&sentence.words)?;
            for (w, g) in resolved.into_iter().zip(&sentence.gold) {
                pred.push(w.phonemes);
                gold.push(g.clone());
            }
        }
        rows.push(MetricRow {
            name: stage.name.into(),
            value: wer(&pred, &gold)?,
        });
    }
    Ok(rows)
}

/// Convenience for the ablation harness: load the evaluation corpus with
/// the configured phoneme inventory.
pub fn load_ablation_corpus(cfg: &PipelineConfig, path: &Path) -> Result<Vec<G2pEvalSentence>> {
    let phonemes = PhonemeInventory::load_expecting(&cfg.inventories.phonemes, PHONEME_COUNT)?;
    load_g2p_eval(path, &phonemes)
}

/// Render normative rows for a batch of lines as the TSV block format: one
/// header, blocks separated by blank lines.
pub fn rows_to_tsv(blocks: &[Vec<NormativeRow>]) -> String {
    let mut out = String::new();
    out.push_str(crate::align::TSV_HEADER);
    out.push('\n');
    for (i, rows) in blocks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for row in rows {
            out.push_str(&crate::align::row_to_tsv(row));
            out.push('\n');
        }
    }
    out
}

/// Sentence-level prosody view used by reports: `word#level` rendering.
pub fn prosody_inline(words: &[String], merged: &[ProsodyLevel]) -> String {
    words
        .iter()
        .zip(merged)
        .map(|(w, m)| {
            if *m == ProsodyLevel::None {
                w.clone()
            } else {
                format!("{w}{m}")
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Train-config override hook used by the binary's flags.
pub fn apply_train_overrides(
    cfg: &mut PipelineConfig,
    seed: Option<u64>,
    epochs: Option<usize>,
    lr: Option<f64>,
    batch: Option<usize>,
) {
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    if let Some(e) = epochs {
        cfg.train.epochs = e;
    }
    if let Some(l) = lr {
        cfg.train.learning_rate = l;
    }
    if let Some(b) = batch {
        cfg.train.batch_size = b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
    }

    #[test]
    fn toy_config_loads_and_resolves_paths() {
        let cfg = PipelineConfig::load(data_dir().join("config/toy.toml")).unwrap();
        assert!(cfg.inventories.phonemes.is_absolute() || cfg.inventories.phonemes.exists());
        assert_eq!(cfg.beam, 3);
        assert!(cfg.flags.and_convention);
        assert_eq!(cfg.train.hidden, 12);
        let frontend = Frontend::from_config(&cfg).unwrap();
        assert_eq!(frontend.tn_inventory.len(), TN_CATEGORY_COUNT);
        assert_eq!(frontend.tn_inventory.label_count(), 77);
        assert_eq!(frontend.pos_inventory.len(), POS_CATEGORY_COUNT);
        assert_eq!(frontend.pos_inventory.label_count(), 97);
        assert_eq!(frontend.phonemes.len(), PHONEME_COUNT);
        assert_eq!(frontend.chars.len(), CHAR_COUNT);
        assert!(frontend.lexicon.len() > 100);
        assert!(frontend.tn.is_none());
    }

    #[test]
    fn missing_files_are_reported() {
        let mut cfg = PipelineConfig::load(data_dir().join("config/toy.toml")).unwrap();
        cfg.resources.lexicon = PathBuf::from("/nonexistent/lexicon.dict");
        match Frontend::from_config(&cfg) {
            Err(Error::MissingFile(p)) => assert!(p.to_string_lossy().contains("nonexistent")),
            Err(other) => panic!("expected MissingFile, got {other:?}"),
            Ok(_) => panic!("expected MissingFile, got a loaded frontend"),
        }
    }

    #[test]
    fn bundled_fixture_corpora_parse() {
        let cfg = PipelineConfig::load(data_dir().join("config/toy.toml")).unwrap();
        let frontend = Frontend::from_config(&cfg).unwrap();
        let corpora = data_dir().join("corpora");

        let tn = load_tn_corpus(corpora.join("tn_toy.tsv"), &frontend.tn_inventory).unwrap();
        assert!(tn.len() >= 10);
        let pwpp = load_prosody_corpus(corpora.join("pwpp_toy.txt")).unwrap();
        assert!(pwpp.len() >= 10);
        let pos = load_pos_corpus(corpora.join("pos_toy.txt"), &frontend.pos_inventory).unwrap();
        assert!(pos.len() >= 10);
        let poly =
            load_polyphone_corpus(corpora.join("polyphone_toy.tsv"), &frontend.homographs)
                .unwrap();
        assert_eq!(poly.len(), 9);
        let toy_pairs =
            load_g2p_pairs(corpora.join("g2poov_toy.dict"), &frontend.phonemes, false).unwrap();
        assert_eq!(toy_pairs.len(), 20);
        let sweep_pairs =
            load_g2p_pairs(corpora.join("g2poov.dict"), &frontend.phonemes, false).unwrap();
        assert_eq!(sweep_pairs.len(), 60);
        let eval = load_g2p_eval(corpora.join("g2p_eval.tsv"), &frontend.phonemes).unwrap();
        assert_eq!(eval.len(), 14);
        // Every eval word is either in the lexicon or one of the two OOVs.
        for s in &eval {
            for w in &s.words {
                assert!(
                    frontend.lexicon.contains(w) || w == "zoin" || w == "marlup",
                    "eval word `{w}` unexpectedly out of lexicon"
                );
            }
        }
    }

    #[test]
    fn normative_tsv_block_format() {
        use crate::g2p::{Provenance, WordPhonemes};
        let rows = build_normative_label(
            &[WordPhonemes {
                word: "hi".into(),
                phonemes: vec!["HH".into(), "AY".into()],
                provenance: Provenance::Lexicon,
                variant: Some(0),
            }],
            &[ProsodyLevel::Intonation],
            &["INTJ".into()],
        )
        .unwrap();
        let tsv = rows_to_tsv(&[rows.clone(), rows]);
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines[0], crate::align::TSV_HEADER);
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[3], "");
    }
}
