//! Text normalization: a BIES span tagger over the TN categories combined
//! with pre-handle rule corrections and post-handle verbalization.

pub mod dataset;
pub mod numbers;
pub mod rules;
pub mod verbalize;

use crate::core::inventory::CategoryInventory;
use crate::core::span::{LabelScheme, SpanTag};
use crate::core::token::{tokenize, Token};
use crate::error::Result;
use crate::models::checkpoint::{tagger_from_checkpoint, tagger_to_checkpoint, Checkpoint};
use crate::models::crf::TransitionMask;
use crate::models::encoder::EncoderConfig;
use crate::models::train::{train_tagger, TagExample, TaggerModel, TrainConfig};
use crate::models::vocab::Vocab;
use rules::{pre_handle, span_source_text, RuleAction, TnRuleSet};
use verbalize::{verbalize, verbalize_builtin, Verbalization, VerbalizeOptions};

pub const INVENTORY_HASH_KEY: &str = "tn_categories";

/// The TN span classifier: shared encoder plus a masked CRF over the
/// 19-category BIES scheme (77 labels).
#[derive(Debug, Clone)]
pub struct TnTagger {
    pub model: TaggerModel,
    pub scheme: LabelScheme,
}

impl TnTagger {
    pub fn new(vocab: Vocab, encoder: EncoderConfig, inventory: CategoryInventory, seed: u64) -> Self {
        let scheme = LabelScheme::new(inventory);
        let mask = TransitionMask::bies(&scheme);
        TnTagger {
            model: TaggerModel::new(vocab, encoder, mask, seed),
            scheme,
        }
    }

    /// Tag a tokenized sentence: encode, Viterbi over the label scheme,
    /// decode back to spans. An empty sentence has no spans.
    pub fn tag(&self, tokens: &[Token]) -> Result<Vec<SpanTag>> {
        if tokens.is_empty() {
            return Ok(Vec::new());
        }
        let words: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        let (labels, _) = self.model.predict(&words)?;
        self.scheme.decode(&labels)
    }

    pub fn train(
        &mut self,
        data: &[TagExample],
        cfg: &TrainConfig,
        stop: Option<&dyn Fn(&TaggerModel) -> bool>,
    ) -> Result<Vec<f64>> {
        train_tagger(&mut self.model, data, cfg, stop)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = tagger_to_checkpoint(&self.model, "tn");
        ck.inventory_hashes.insert(
            INVENTORY_HASH_KEY.into(),
            self.scheme.inventory().content_hash(),
        );
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint, inventory: CategoryInventory) -> Result<Self> {
        ck.verify_inventory(INVENTORY_HASH_KEY, &inventory.content_hash())?;
        let scheme = LabelScheme::new(inventory);
        let model = tagger_from_checkpoint(ck, "tn", TransitionMask::bies(&scheme))?;
        Ok(TnTagger { model, scheme })
    }
}

/// One replacement the normalizer made: which source span, as what category,
/// into which spoken words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replacement {
    pub original: String,
    pub category: String,
    pub words: String,
    pub token_start: usize,
    pub token_end: usize,
}

/// A normalized sentence plus the provenance of every replacement.
#[derive(Debug, Clone, Default)]
pub struct NormalizeOutcome {
    /// Output words in order (replacement words are split on spaces).
    pub words: Vec<String>,
    pub replacements: Vec<Replacement>,
    pub diagnostics: Vec<String>,
}

impl NormalizeOutcome {
    pub fn text(&self) -> String {
        self.words.join(" ")
    }
}

/// Verbalize one corrected span: hotword-pinned words win, then the first
/// matching post-handle rule, then the built-in category grammar (with its
/// verbatim fallback).
fn verbalize_span(
    source: &str,
    category: &str,
    pinned: Option<&str>,
    rules: &TnRuleSet,
    opts: &VerbalizeOptions,
) -> Verbalization {
    if let Some(words) = pinned {
        return Verbalization {
            text: words.to_string(),
            used_fallback: false,
            note: None,
        };
    }
    if let Some(rule) = rules.post_rule_for(source, category) {
        match &rule.action {
            RuleAction::Say(words) => {
                return Verbalization {
                    text: words.clone(),
                    used_fallback: false,
                    note: None,
                }
            }
            RuleAction::As(other_category) => {
                if let Ok(words) = verbalize_builtin(source, other_category, opts) {
                    return Verbalization {
                        text: words,
                        used_fallback: false,
                        note: None,
                    };
                }
                // Fall through to the span's own grammar on failure.
            }
            RuleAction::SetCategory(_) => {}
        }
    }
    verbalize(source, category, opts)
}

/// The full hybrid normalizer: tokenize, tag with the model, correct with
/// pre-handle rules and hotwords, verbalize each span, and splice the spoken
/// words back between the untouched tokens (original casing preserved).
pub fn normalize(
    text: &str,
    tagger: &TnTagger,
    rules: &TnRuleSet,
    opts: &VerbalizeOptions,
) -> Result<NormalizeOutcome> {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return Ok(NormalizeOutcome::default());
    }
    let spans = tagger.tag(&tokens)?;
    normalize_with_spans(&tokens, &spans, rules, opts)
}

/// Normalization once spans are known (also used with gold spans in tests
/// and fixtures).
pub fn normalize_with_spans(
    tokens: &[Token],
    spans: &[SpanTag],
    rules: &TnRuleSet,
    opts: &VerbalizeOptions,
) -> Result<NormalizeOutcome> {
    let corrected = pre_handle(tokens, spans, rules);
    let mut outcome = NormalizeOutcome::default();
    let mut i = 0;
    while i < tokens.len() {
        if let Some(c) = corrected.iter().find(|c| c.span.start == i) {
            let source = span_source_text(tokens, &c.span);
            let v = verbalize_span(
                &source,
                &c.span.category,
                c.pinned_words.as_deref(),
                rules,
                opts,
            );
            if let Some(note) = &v.note {
                outcome
                    .diagnostics
                    .push(format!("`{source}` ({}): {note}", c.span.category));
            }
            outcome
                .words
                .extend(v.text.split_whitespace().map(String::from));
            outcome.replacements.push(Replacement {
                original: source,
                category: c.span.category.clone(),
                words: v.text,
                token_start: c.span.start,
                token_end: c.span.end,
            });
            i = c.span.end;
        } else {
            outcome.words.push(tokens[i].text.clone());
            i += 1;
        }
    }
    Ok(outcome)
}
