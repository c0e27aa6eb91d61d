//! Declarative TN correction rules and hotwords, loaded from plain text so
//! bad cases are fixable without recompiling.
//!
//! Rule file: one rule per line, `PRIORITY<TAB>PRE|POST<TAB>PATTERN<TAB>ACTION`.
//! Patterns are `;`-separated clauses over a span: `cat=NAME` matches its
//! current category, `text=REGEX` its source text, `prev=REGEX` / `next=REGEX`
//! the neighbouring token (regexes must match the whole string). Pre-handle
//! actions rewrite the category (`cat=NAME`); post-handle actions replace the
//! verbalization (`say:words` literally, `as:NAME` via another category's
//! grammar). Lower priority numbers win; file order breaks ties.
//!
//! Hotword file: `SURFACE<TAB>CATEGORY<TAB>WORDS`, matched case-insensitively
//! against single tokens, beating every model prediction and rule.

use crate::core::span::SpanTag;
use crate::core::token::Token;
use crate::error::{Error, Result};
use regex::Regex;
use std::collections::HashMap;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Pre,
    Post,
}

#[derive(Debug, Clone)]
pub struct RulePattern {
    pub category: Option<String>,
    pub text: Option<Regex>,
    pub prev: Option<Regex>,
    pub next: Option<Regex>,
}

#[derive(Debug, Clone)]
pub enum RuleAction {
    /// Pre-handle: override the span's category.
    SetCategory(String),
    /// Post-handle: emit these words for the span.
    Say(String),
    /// Post-handle: verbalize through another category's grammar.
    As(String),
}

#[derive(Debug, Clone)]
pub struct TnRule {
    pub priority: i64,
    pub kind: RuleKind,
    pub pattern: RulePattern,
    pub action: RuleAction,
    file_order: usize,
}

#[derive(Debug, Clone)]
pub struct HotwordEntry {
    pub surface: String,
    pub category: String,
    pub words: String,
}

/// All loaded rules plus the hotword table, frozen after load.
#[derive(Debug, Clone, Default)]
pub struct TnRuleSet {
    pre: Vec<TnRule>,
    post: Vec<TnRule>,
    hotwords: HashMap<String, HotwordEntry>,
}

fn full_match(re: &Regex, text: &str) -> bool {
    re.find(text)
        .is_some_and(|m| m.start() == 0 && m.end() == text.len())
}

fn parse_pattern(raw: &str, path: &str, line: usize) -> Result<RulePattern> {
    let mut pattern = RulePattern {
        category: None,
        text: None,
        prev: None,
        next: None,
    };
    for clause in raw.split(';') {
        let clause = clause.trim();
        if clause.is_empty() {
            continue;
        }
        let (key, value) = clause.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_string(),
            line,
            msg: format!("pattern clause `{clause}` is not key=value"),
        })?;
        let compile = |v: &str| {
            Regex::new(v).map_err(|e| Error::Parse {
                path: path.to_string(),
                line,
                msg: format!("bad regex `{v}`: {e}"),
            })
        };
        match key.trim() {
            "cat" => pattern.category = Some(value.trim().to_string()),
            "text" => pattern.text = Some(compile(value.trim())?),
            "prev" => pattern.prev = Some(compile(value.trim())?),
            "next" => pattern.next = Some(compile(value.trim())?),
            k => {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line,
                    msg: format!("unknown pattern key `{k}`"),
                })
            }
        }
    }
    Ok(pattern)
}

fn parse_action(raw: &str, kind: RuleKind, path: &str, line: usize) -> Result<RuleAction> {
    let raw = raw.trim();
    match kind {
        RuleKind::Pre => match raw.split_once('=') {
            Some(("cat", v)) => Ok(RuleAction::SetCategory(v.trim().to_string())),
            _ => Err(Error::Parse {
                path: path.to_string(),
                line,
                msg: format!("pre-handle action must be `cat=NAME`, got `{raw}`"),
            }),
        },
        RuleKind::Post => {
            if let Some(words) = raw.strip_prefix("say:") {
                Ok(RuleAction::Say(words.trim().to_string()))
            } else if let Some(cat) = raw.strip_prefix("as:") {
                Ok(RuleAction::As(cat.trim().to_string()))
            } else {
                Err(Error::Parse {
                    path: path.to_string(),
                    line,
                    msg: format!("post-handle action must be `say:...` or `as:NAME`, got `{raw}`"),
                })
            }
        }
    }
}

impl TnRuleSet {
    pub fn new() -> Self {
        TnRuleSet::default()
    }

    pub fn parse_rules(&mut self, text: &str, path: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno + 1,
                    msg: format!("expected 4 tab-separated fields, got {}", fields.len()),
                });
            }
            let priority: i64 = fields[0].trim().parse().map_err(|_| Error::Parse {
                path: path.to_string(),
                line: lineno + 1,
                msg: format!("bad priority `{}`", fields[0]),
            })?;
            let kind = match fields[1].trim() {
                "PRE" => RuleKind::Pre,
                "POST" => RuleKind::Post,
                other => {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: lineno + 1,
                        msg: format!("rule kind must be PRE or POST, got `{other}`"),
                    })
                }
            };
            let pattern = parse_pattern(fields[2], path, lineno + 1)?;
            let action = parse_action(fields[3], kind, path, lineno + 1)?;
            let rule = TnRule {
                priority,
                kind,
                pattern,
                action,
                file_order: lineno,
            };
            match kind {
                RuleKind::Pre => self.pre.push(rule),
                RuleKind::Post => self.post.push(rule),
            }
        }
        self.pre
            .sort_by_key(|r| (r.priority, r.file_order));
        self.post
            .sort_by_key(|r| (r.priority, r.file_order));
        Ok(())
    }

    pub fn parse_hotwords(&mut self, text: &str, path: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno + 1,
                    msg: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let entry = HotwordEntry {
                surface: fields[0].trim().to_string(),
                category: fields[1].trim().to_string(),
                words: fields[2].trim().to_string(),
            };
            self.hotwords
                .insert(entry.surface.to_lowercase(), entry);
        }
        Ok(())
    }

    pub fn load_rules(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        self.parse_rules(&text, &path.display().to_string())
    }

    pub fn load_hotwords(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        self.parse_hotwords(&text, &path.display().to_string())
    }

    pub fn pre_rules(&self) -> &[TnRule] {
        &self.pre
    }

    pub fn post_rules(&self) -> &[TnRule] {
        &self.post
    }

    pub fn hotword(&self, token_text: &str) -> Option<&HotwordEntry> {
        self.hotwords.get(&token_text.to_lowercase())
    }

    /// First post-handle rule matching a span, by (priority, file order).
    pub fn post_rule_for(&self, span_text: &str, category: &str) -> Option<&TnRule> {
        self.post
            .iter()
            .find(|r| pattern_matches(&r.pattern, span_text, category, "", ""))
    }
}

fn pattern_matches(
    pattern: &RulePattern,
    span_text: &str,
    category: &str,
    prev: &str,
    next: &str,
) -> bool {
    if let Some(cat) = &pattern.category {
        if cat != category {
            return false;
        }
    }
    if let Some(re) = &pattern.text {
        if !full_match(re, span_text) {
            return false;
        }
    }
    if let Some(re) = &pattern.prev {
        if !full_match(re, prev) {
            return false;
        }
    }
    if let Some(re) = &pattern.next {
        if !full_match(re, next) {
            return false;
        }
    }
    true
}

/// One span after pre-handling: its (possibly corrected) category plus a
/// pinned verbalization when a hotword claimed it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectedSpan {
    pub span: SpanTag,
    pub pinned_words: Option<String>,
}

/// Apply hotwords and pre-handle rules to model spans.
///
/// Hotwords run first and always win: a token matching a hotword surface
/// becomes its own one-token span with the verbalization pinned, splitting
/// any model span that covered it (the remainder keeps its category). Then
/// the first matching pre-handle rule per span (by priority, then file
/// order) rewrites its category. Token boundaries are never merged.
pub fn pre_handle(tokens: &[Token], spans: &[SpanTag], rules: &TnRuleSet) -> Vec<CorrectedSpan> {
    let hot: Vec<Option<&HotwordEntry>> =
        tokens.iter().map(|t| rules.hotword(&t.text)).collect();
    let mut corrected: Vec<CorrectedSpan> = Vec::new();
    for span in spans {
        // Carve hotword tokens out of the span.
        let mut at = span.start;
        for i in span.start..span.end {
            if hot[i].is_none() {
                continue;
            }
            if i > at {
                corrected.push(CorrectedSpan {
                    span: SpanTag::new(span.category.clone(), at, i),
                    pinned_words: None,
                });
            }
            at = i + 1;
        }
        if at < span.end {
            corrected.push(CorrectedSpan {
                span: SpanTag::new(span.category.clone(), at, span.end),
                pinned_words: None,
            });
        }
    }
    for (i, hw) in hot.iter().enumerate() {
        if let Some(hw) = hw {
            corrected.push(CorrectedSpan {
                span: SpanTag::new(hw.category.clone(), i, i + 1),
                pinned_words: Some(hw.words.clone()),
            });
        }
    }
    corrected.sort_by_key(|c| c.span.start);

    // Pre-handle rules (skipping hotword-pinned spans).
    for c in corrected.iter_mut() {
        if c.pinned_words.is_some() {
            continue;
        }
        let text = span_source_text(tokens, &c.span);
        let prev = if c.span.start > 0 {
            tokens[c.span.start - 1].text.as_str()
        } else {
            ""
        };
        let next = tokens
            .get(c.span.end)
            .map(|t| t.text.as_str())
            .unwrap_or("");
        if let Some(rule) = rules
            .pre
            .iter()
            .find(|r| pattern_matches(&r.pattern, &text, &c.span.category, prev, next))
        {
            if let RuleAction::SetCategory(cat) = &rule.action {
                c.span.category = cat.clone();
            }
        }
    }
    corrected
}

/// The source text a span covers, token texts joined by the original gap
/// (single space when tokens were separated, nothing when adjacent).
pub fn span_source_text(tokens: &[Token], span: &SpanTag) -> String {
    let mut out = String::new();
    for i in span.start..span.end.min(tokens.len()) {
        if i > span.start {
            if tokens[i].start > tokens[i - 1].end {
                out.push(' ');
            }
        }
        out.push_str(&tokens[i].text);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::token::tokenize;

    fn rule_set(rules: &str, hotwords: &str) -> TnRuleSet {
        let mut rs = TnRuleSet::new();
        rs.parse_rules(rules, "rules").unwrap();
        rs.parse_hotwords(hotwords, "hotwords").unwrap();
        rs
    }

    #[test]
    fn empty_rule_set_passes_spans_through() {
        let tokens = tokenize("call 911");
        let spans = vec![SpanTag::new("CARDINAL", 1, 2)];
        let out = pre_handle(&tokens, &spans, &TnRuleSet::new());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].span, spans[0]);
        assert!(out[0].pinned_words.is_none());
    }

    #[test]
    fn pre_rule_corrects_911_after_call() {
        let rs = rule_set(
            "10\tPRE\tcat=CARDINAL;text=^\\d{3}$;prev=^call$\tcat=TELEPHONE\n",
            "",
        );
        let tokens = tokenize("call 911");
        let spans = vec![SpanTag::new("CARDINAL", 1, 2)];
        let out = pre_handle(&tokens, &spans, &rs);
        assert_eq!(out[0].span.category, "TELEPHONE");

        // Without the context word the rule does not fire.
        let tokens = tokenize("number 911");
        let out = pre_handle(&tokens, &spans, &rs);
        assert_eq!(out[0].span.category, "CARDINAL");
    }

    #[test]
    fn priority_orders_rules() {
        let rs = rule_set(
            "20\tPRE\tcat=CARDINAL\tcat=DIGIT\n5\tPRE\tcat=CARDINAL\tcat=TELEPHONE\n",
            "",
        );
        let tokens = tokenize("911");
        let out = pre_handle(&tokens, &[SpanTag::new("CARDINAL", 0, 1)], &rs);
        assert_eq!(out[0].span.category, "TELEPHONE");
    }

    #[test]
    fn hotword_beats_model_category_and_creates_spans() {
        let rs = rule_set("", "iPhone\tVERBATIM\ti phone\n");
        let tokens = tokenize("my iphone broke");
        // Model tagged it LETTERS; the hotword overrides.
        let out = pre_handle(&tokens, &[SpanTag::new("LETTERS", 1, 2)], &rs);
        assert_eq!(out[0].span.category, "VERBATIM");
        assert_eq!(out[0].pinned_words.as_deref(), Some("i phone"));

        // Uncovered token: the hotword creates the span.
        let out = pre_handle(&tokens, &[], &rs);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].span, SpanTag::new("VERBATIM", 1, 2));
    }

    #[test]
    fn hotword_splits_a_covering_multi_token_span() {
        let rs = rule_set("", "iPhone\tVERBATIM\ti phone\n");
        let tokens = tokenize("my iphone broke");
        let out = pre_handle(&tokens, &[SpanTag::new("MEASURE", 0, 3)], &rs);
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].span, SpanTag::new("MEASURE", 0, 1));
        assert_eq!(out[1].span, SpanTag::new("VERBATIM", 1, 2));
        assert_eq!(out[1].pinned_words.as_deref(), Some("i phone"));
        assert_eq!(out[2].span, SpanTag::new("MEASURE", 2, 3));
    }

    #[test]
    fn post_rules_match_text_and_category() {
        let rs = rule_set("30\tPOST\tcat=SCORE;text=^0-0$\tsay:nil nil\n", "");
        assert!(rs.post_rule_for("0-0", "SCORE").is_some());
        assert!(rs.post_rule_for("1-0", "SCORE").is_none());
        assert!(rs.post_rule_for("0-0", "MATH").is_none());
    }

    #[test]
    fn malformed_lines_error_with_line_numbers() {
        let mut rs = TnRuleSet::new();
        let err = rs
            .parse_rules("10\tPRE\tcat=CARDINAL\n", "rules.tsv")
            .unwrap_err();
        assert!(err.to_string().contains("rules.tsv:1"));
        let err = rs
            .parse_rules("x\tPRE\tcat=A\tcat=B\n", "rules.tsv")
            .unwrap_err();
        assert!(err.to_string().contains("bad priority"));
        let err = rs
            .parse_rules("1\tMID\tcat=A\tcat=B\n", "rules.tsv")
            .unwrap_err();
        assert!(err.to_string().contains("PRE or POST"));
        let err = rs
            .parse_rules("1\tPRE\ttext=([\tcat=B\n", "rules.tsv")
            .unwrap_err();
        assert!(err.to_string().contains("bad regex"));
    }

    #[test]
    fn span_source_text_preserves_gaps() {
        let tokens = tokenize("it costs $5.");
        // "$", "5" are adjacent in the source; "costs" and "$" are not.
        assert_eq!(span_source_text(&tokens, &SpanTag::new("MONEY", 2, 4)), "$5");
        assert_eq!(
            span_source_text(&tokens, &SpanTag::new("X", 1, 4)),
            "costs $5"
        );
    }
}
