//! BIES span encoding: categorized token spans to positional tag ids and back.
//!
//! Label id layout for a `C`-category inventory: id 0 is `O`, and category
//! `c` owns ids `1+4c..=4+4c` as `B-cat`, `I-cat`, `E-cat`, `S-cat`. Total
//! label count is `4C + 1`.

use crate::core::inventory::CategoryInventory;
use crate::error::{Error, Result};

/// A categorized token span; `end` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanTag {
    pub category: String,
    pub start: usize,
    pub end: usize,
}

impl SpanTag {
    pub fn new(category: impl Into<String>, start: usize, end: usize) -> Self {
        SpanTag {
            category: category.into(),
            start,
            end,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// BIES positional kind of a non-`O` label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Begin,
    Inside,
    End,
    Single,
}

/// The BIES label scheme over a category inventory.
#[derive(Debug, Clone)]
pub struct LabelScheme {
    inventory: CategoryInventory,
}

impl LabelScheme {
    pub fn new(inventory: CategoryInventory) -> Self {
        LabelScheme { inventory }
    }

    pub fn inventory(&self) -> &CategoryInventory {
        &self.inventory
    }

    pub fn label_count(&self) -> usize {
        self.inventory.label_count()
    }

    pub const O: usize = 0;

    fn id_of(&self, category_idx: usize, pos: Position) -> usize {
        let k = match pos {
            Position::Begin => 0,
            Position::Inside => 1,
            Position::End => 2,
            Position::Single => 3,
        };
        1 + 4 * category_idx + k
    }

    /// Category index and position of a non-`O` label id.
    pub fn split(&self, id: usize) -> Option<(usize, Position)> {
        if id == Self::O || id >= self.label_count() {
            return None;
        }
        let cat = (id - 1) / 4;
        let pos = match (id - 1) % 4 {
            0 => Position::Begin,
            1 => Position::Inside,
            2 => Position::End,
            _ => Position::Single,
        };
        Some((cat, pos))
    }

    pub fn label_name(&self, id: usize) -> String {
        match self.split(id) {
            None => self.inventory.other_label().to_string(),
            Some((c, pos)) => {
                let prefix = match pos {
                    Position::Begin => "B",
                    Position::Inside => "I",
                    Position::End => "E",
                    Position::Single => "S",
                };
                format!("{}-{}", prefix, self.inventory.categories()[c])
            }
        }
    }

    /// Encode spans over `n_tokens` tokens as one tag id per token.
    pub fn encode(&self, n_tokens: usize, spans: &[SpanTag]) -> Result<Vec<usize>> {
        let mut tags = vec![Self::O; n_tokens];
        let mut covered = vec![false; n_tokens];
        for span in spans {
            let cat = self
                .inventory
                .position(&span.category)
                .ok_or_else(|| {
                    Error::UnknownCategory(span.category.clone(), self.inventory.name().to_string())
                })?;
            if span.start >= span.end || span.end > n_tokens {
                return Err(Error::SpanOutOfRange(span.start, span.end, n_tokens));
            }
            for i in span.start..span.end {
                if covered[i] {
                    return Err(Error::OverlappingSpans(i));
                }
                covered[i] = true;
            }
            if span.len() == 1 {
                tags[span.start] = self.id_of(cat, Position::Single);
            } else {
                tags[span.start] = self.id_of(cat, Position::Begin);
                for t in tags.iter_mut().take(span.end - 1).skip(span.start + 1) {
                    *t = self.id_of(cat, Position::Inside);
                }
                tags[span.end - 1] = self.id_of(cat, Position::End);
            }
        }
        Ok(tags)
    }

    /// Decode tag ids back to spans. Ill-formed sequences are repaired, never
    /// rejected: an `I`/`E` without a matching open span of the same category
    /// becomes a single-token span, and a span left open at a boundary is
    /// closed at the tokens seen so far.
    pub fn decode(&self, tags: &[usize]) -> Result<Vec<SpanTag>> {
        let cats = self.inventory.categories();
        let mut spans: Vec<SpanTag> = Vec::new();
        // (category index, start)
        let mut open: Option<(usize, usize)> = None;
        for (i, &id) in tags.iter().enumerate() {
            if id >= self.label_count() {
                return Err(Error::LabelOutOfRange(id, self.label_count()));
            }
            match self.split(id) {
                None => {
                    if let Some((c, s)) = open.take() {
                        spans.push(SpanTag::new(cats[c].clone(), s, i));
                    }
                }
                Some((c, Position::Begin)) => {
                    if let Some((pc, s)) = open.take() {
                        spans.push(SpanTag::new(cats[pc].clone(), s, i));
                    }
                    open = Some((c, i));
                }
                Some((c, Position::Inside)) => match open {
                    Some((oc, _)) if oc == c => {}
                    _ => {
                        if let Some((pc, s)) = open.take() {
                            spans.push(SpanTag::new(cats[pc].clone(), s, i));
                        }
                        spans.push(SpanTag::new(cats[c].clone(), i, i + 1));
                    }
                },
                Some((c, Position::End)) => match open.take() {
                    Some((oc, s)) if oc == c => {
                        spans.push(SpanTag::new(cats[c].clone(), s, i + 1));
                    }
                    other => {
                        if let Some((pc, s)) = other {
                            spans.push(SpanTag::new(cats[pc].clone(), s, i));
                        }
                        spans.push(SpanTag::new(cats[c].clone(), i, i + 1));
                    }
                },
                Some((c, Position::Single)) => {
                    if let Some((pc, s)) = open.take() {
                        spans.push(SpanTag::new(cats[pc].clone(), s, i));
                    }
                    spans.push(SpanTag::new(cats[c].clone(), i, i + 1));
                }
            }
        }
        if let Some((c, s)) = open {
            spans.push(SpanTag::new(cats[c].clone(), s, tags.len()));
        }
        Ok(spans)
    }

    /// Whether label `to` may follow label `from` under BIES validity.
    pub fn transition_allowed(&self, from: usize, to: usize) -> bool {
        match (self.split(from), self.split(to)) {
            // From O, E-x or S-x: only O, B-* or S-*.
            (None, t) | (Some((_, Position::End)), t) | (Some((_, Position::Single)), t) => {
                matches!(t, None | Some((_, Position::Begin)) | Some((_, Position::Single)))
            }
            // From B-x or I-x: only I-x or E-x of the same category.
            (Some((c, Position::Begin)), t) | (Some((c, Position::Inside)), t) => {
                matches!(t, Some((tc, Position::Inside)) | Some((tc, Position::End)) if tc == c)
            }
        }
    }

    /// Whether a path may start with this label.
    pub fn start_allowed(&self, id: usize) -> bool {
        matches!(
            self.split(id),
            None | Some((_, Position::Begin)) | Some((_, Position::Single))
        )
    }

    /// Whether a path may end with this label.
    pub fn end_allowed(&self, id: usize) -> bool {
        matches!(
            self.split(id),
            None | Some((_, Position::End)) | Some((_, Position::Single))
        )
    }
}
