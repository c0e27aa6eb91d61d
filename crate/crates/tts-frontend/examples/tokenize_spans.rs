//! Tokenization and the BIES span codec: how categorized spans over tokens
//! become per-token tag ids and come back, including repair of ill-formed
//! model output.

use tts_frontend::core::inventory::CategoryInventory;
use tts_frontend::core::span::{LabelScheme, SpanTag};
use tts_frontend::core::token::tokenize;

fn main() {
    let text = "it costs $5.";
    println!("input: {text:?}");
    for t in tokenize(text) {
        println!("  token {:>2}..{:<2} {:?}", t.start, t.end, t.text);
    }

    let inventory = CategoryInventory::new(
        "DEMO",
        vec!["MONEY".into(), "CARDINAL".into()],
        "O",
    )
    .unwrap();
    let scheme = LabelScheme::new(inventory);
    println!("\nlabel space: {} tags (2 categories x BIES + O)", scheme.label_count());

    let tokens = tokenize(text);
    let spans = vec![SpanTag::new("MONEY", 2, 4)];
    let tags = scheme.encode(tokens.len(), &spans).unwrap();
    println!("encoded spans over {} tokens:", tokens.len());
    for (t, &id) in tokens.iter().zip(&tags) {
        println!("  {:<6} -> {}", t.text, scheme.label_name(id));
    }
    assert_eq!(scheme.decode(&tags).unwrap(), spans);
    println!("decode(encode(spans)) round-trips.");

    // Ill-formed sequences (orphan I, unterminated B) repair instead of
    // failing: decoding must always accept raw model output.
    let broken = vec![2, 0, 1]; // I-MONEY, O, B-MONEY
    let repaired = scheme.decode(&broken).unwrap();
    println!("\nrepairing I-MONEY O B-MONEY:");
    for s in repaired {
        println!("  span {:?} {}..{}", s.category, s.start, s.end);
    }
}
