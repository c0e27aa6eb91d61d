//! Property tests over the public API: tokenizer laws, span codec round
//! trips, verbalizer totality, prosody merge laws and decoder ordering.

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tts_frontend::core::inventory::CategoryInventory;
use tts_frontend::core::span::{LabelScheme, SpanTag};
use tts_frontend::core::token::tokenize;
use tts_frontend::pwpp::{derive_binaries, merge_levels, pwpp_f1};
use tts_frontend::tn::numbers;
use tts_frontend::tn::verbalize::{verbalize, VerbalizeOptions};

fn scheme(categories: usize) -> LabelScheme {
    LabelScheme::new(
        CategoryInventory::new(
            "P",
            (0..categories).map(|i| format!("C{i}")).collect(),
            "O",
        )
        .unwrap(),
    )
}

/// Random non-overlapping spans over `n` tokens.
fn arbitrary_spans(n: usize, categories: usize, seed: u64) -> Vec<SpanTag> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spans = Vec::new();
    let mut at = 0;
    while at < n {
        if rng.random_range(0..3) == 0 {
            let len = rng.random_range(1..=(n - at).min(4));
            let cat = rng.random_range(0..categories);
            spans.push(SpanTag::new(format!("C{cat}"), at, at + len));
            at += len;
        } else {
            at += 1;
        }
    }
    spans
}

proptest! {
    #[test]
    fn tokens_reconstruct_the_source(text in ".{0,60}") {
        let chars: Vec<char> = text.chars().collect();
        let tokens = tokenize(&text);
        let mut prev_end = 0;
        for t in &tokens {
            // Slices match, tokens are ordered and disjoint, gaps are
            // whitespace only.
            prop_assert!(t.start >= prev_end);
            let slice: String = chars[t.start..t.end].iter().collect();
            prop_assert_eq!(&slice, &t.text);
            prop_assert!(chars[prev_end..t.start].iter().all(|c| c.is_whitespace()));
            prev_end = t.end;
        }
        prop_assert!(chars[prev_end..].iter().all(|c| c.is_whitespace()));
    }

    #[test]
    fn tokenize_is_idempotent_on_space_normalized_text(text in ".{0,60}") {
        let texts: Vec<String> = tokenize(&text).into_iter().map(|t| t.text).collect();
        let rejoined = texts.join(" ");
        let again: Vec<String> = tokenize(&rejoined).into_iter().map(|t| t.text).collect();
        prop_assert_eq!(texts, again);
    }

    #[test]
    fn span_codec_round_trips(n in 1usize..20, cats in 1usize..5, seed in 0u64..500) {
        let scheme = scheme(cats);
        let spans = arbitrary_spans(n, cats, seed);
        let tags = scheme.encode(n, &spans).unwrap();
        prop_assert_eq!(tags.len(), n);
        prop_assert_eq!(scheme.decode(&tags).unwrap(), spans);
    }

    #[test]
    fn decode_repairs_any_label_sequence(tags in prop::collection::vec(0usize..9, 1..15)) {
        // 2 categories -> 9 labels; arbitrary (often ill-formed) sequences
        // must decode to valid, ordered, non-overlapping spans.
        let scheme = scheme(2);
        let spans = scheme.decode(&tags).unwrap();
        let mut prev_end = 0;
        for s in &spans {
            prop_assert!(s.start >= prev_end);
            prop_assert!(s.end > s.start);
            prop_assert!(s.end <= tags.len());
            prev_end = s.end;
        }
    }

    #[test]
    fn verbalizers_are_total_and_lowercase(
        text in ".{0,24}",
        category in prop::sample::select(vec![
            "CARDINAL", "DIGIT", "ORDINAL", "DATE", "TIME", "MONEY", "DECIMAL",
            "MEASURE", "FRACTION", "ELECTRONIC", "ADDRESS", "TELEPHONE",
            "LETTERS", "LETTERSS", "VERBATIM", "MATH", "SCORE", "PLAIN", "PUNCT",
        ]),
    ) {
        let out = verbalize(&text, category, &VerbalizeOptions::default());
        for word in out.text.split_whitespace() {
            prop_assert!(
                word.chars().all(|c| c.is_ascii_lowercase() || c == '\''),
                "bad output word `{}` for {} on {:?}", word, category, text
            );
        }
    }

    #[test]
    fn merge_is_monotone_and_remerge_is_identity(
        bits in prop::collection::vec((any::<bool>(), any::<bool>(), any::<bool>()), 0..12),
        flip_level in 0usize..3,
        flip_pos in 0usize..12,
    ) {
        let l1: Vec<bool> = bits.iter().map(|b| b.0).collect();
        let l2: Vec<bool> = bits.iter().map(|b| b.1).collect();
        let l3: Vec<bool> = bits.iter().map(|b| b.2).collect();
        let merged = merge_levels(&l1, &l2, &l3).unwrap();

        // Monotonicity: flipping any 0 to 1 never lowers the merged level.
        if flip_pos < bits.len() {
            let mut levels = [l1.clone(), l2.clone(), l3.clone()];
            if !levels[flip_level][flip_pos] {
                levels[flip_level][flip_pos] = true;
                let flipped = merge_levels(&levels[0], &levels[1], &levels[2]).unwrap();
                for i in 0..bits.len() {
                    prop_assert!(flipped[i] >= merged[i]);
                }
            }
        }

        // Re-merge of derived binaries is the identity, and the derived
        // binaries are contained level by level.
        let derived = derive_binaries(&merged);
        prop_assert_eq!(merge_levels(&derived[0], &derived[1], &derived[2]).unwrap(), merged.clone());
        for i in 0..bits.len() {
            prop_assert!(!derived[2][i] || derived[1][i]);
            prop_assert!(!derived[1][i] || derived[0][i]);
        }

        // Self-F1 is 1 at every level with positives.
        for level in 1..=3 {
            if merged.iter().any(|m| m.index() >= level) {
                prop_assert_eq!(pwpp_f1(&merged, &merged, level).unwrap(), 1.0);
            }
        }
    }
}

#[test]
fn cardinal_matches_recursive_oracle_on_random_large_integers() {
    // Independent recursive definition of British-style long-form numbers.
    fn oracle(n: u64) -> String {
        const ONES: [&str; 20] = [
            "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
            "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
            "seventeen", "eighteen", "nineteen",
        ];
        const TENS: [&str; 10] = [
            "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty",
            "ninety",
        ];
        if n < 20 {
            return ONES[n as usize].to_string();
        }
        if n < 100 {
            let t = TENS[(n / 10) as usize];
            return if n % 10 == 0 {
                t.to_string()
            } else {
                format!("{t} {}", ONES[(n % 10) as usize])
            };
        }
        if n < 1000 {
            let head = format!("{} hundred", ONES[(n / 100) as usize]);
            return if n % 100 == 0 {
                head
            } else {
                format!("{head} and {}", oracle(n % 100))
            };
        }
        for (scale, word) in [
            (1_000_000_000_000u64, "trillion"),
            (1_000_000_000, "billion"),
            (1_000_000, "million"),
            (1_000, "thousand"),
        ] {
            if n >= scale {
                let head = format!("{} {word}", oracle(n / scale));
                let rest = n % scale;
                return if rest == 0 {
                    head
                } else if rest < 100 {
                    format!("{head} and {}", oracle(rest))
                } else {
                    format!("{head} {}", oracle(rest))
                };
            }
        }
        unreachable!("n < 10^15");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let n: u64 = rng.random_range(0..1_000_000_000_000_000);
        assert_eq!(
            numbers::cardinal_value(n, true).unwrap(),
            oracle(n),
            "mismatch at {n}"
        );
    }
}
