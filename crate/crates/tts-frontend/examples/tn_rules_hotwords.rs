//! The rule layer around the TN model: pre-handle rules correct
//! misclassified categories by context, post-handle rules pin specific
//! readings, and hotwords beat everything. No trained model needed here --
//! the spans stand in for model predictions.

use tts_frontend::core::span::SpanTag;
use tts_frontend::core::token::tokenize;
use tts_frontend::tn::normalize_with_spans;
use tts_frontend::tn::rules::TnRuleSet;
use tts_frontend::tn::verbalize::VerbalizeOptions;

fn main() {
    let mut rules = TnRuleSet::new();
    rules
        .parse_rules(
            "10\tPRE\tcat=CARDINAL;text=^\\d{3}$;prev=^(call|dial)$\tcat=TELEPHONE\n\
             30\tPOST\tcat=SCORE;text=^0-0$\tsay:nil nil\n",
            "inline",
        )
        .unwrap();
    rules
        .parse_hotwords("iPhone\tVERBATIM\ti phone\n", "inline")
        .unwrap();
    let opts = VerbalizeOptions::default();

    // The model says CARDINAL; after "call" the pre-handle rule flips it.
    let tokens = tokenize("call 911");
    let spans = vec![SpanTag::new("CARDINAL", 1, 2)];
    let with_rule = normalize_with_spans(&tokens, &spans, &rules, &opts).unwrap();
    let without = normalize_with_spans(&tokens, &spans, &TnRuleSet::new(), &opts).unwrap();
    println!("call 911");
    println!("  model category alone: {}", without.text());
    println!("  with the pre-handle rule: {}", with_rule.text());

    // Post-handle rules pin a reading without recompiling anything.
    let tokens = tokenize("the match ended 0-0");
    let spans = vec![SpanTag::new("SCORE", 3, 6)];
    let out = normalize_with_spans(&tokens, &spans, &rules, &opts).unwrap();
    println!("\nthe match ended 0-0\n  post-handle rule: {}", out.text());

    // Hotwords create spans on their own and override model categories.
    let tokens = tokenize("my iPhone broke");
    let out = normalize_with_spans(&tokens, &[], &rules, &opts).unwrap();
    println!("\nmy iPhone broke\n  hotword: {}", out.text());
    for r in &out.replacements {
        println!("  replaced {:?} as {} -> {:?}", r.original, r.category, r.words);
    }
}
