//! The category verbalizers: the same span text reads differently by
//! category, and every category is total (unparseable spans fall back to a
//! verbatim character reading with a diagnostic).

use tts_frontend::tn::verbalize::{verbalize, VerbalizeOptions};

fn main() {
    let opts = VerbalizeOptions::default();
    let cases = [
        ("911", "CARDINAL"),
        ("911", "TELEPHONE"),
        ("911", "DIGIT"),
        ("dvds", "LETTERSS"),
        ("dvd", "LETTERS"),
        ("42", "CARDINAL"),
        ("3rd", "ORDINAL"),
        ("1984", "DATE"),
        ("2016-05-09", "DATE"),
        ("3:30 pm", "TIME"),
        ("$5.50", "MONEY"),
        ("3.14", "DECIMAL"),
        ("5 km", "MEASURE"),
        ("60 km/h", "MEASURE"),
        ("1 1/2", "FRACTION"),
        ("a@b.org", "ELECTRONIC"),
        ("I-95", "ADDRESS"),
        ("3-1", "SCORE"),
        ("2+2=4", "MATH"),
        ("R2-D2", "VERBATIM"),
    ];
    for (text, category) in cases {
        let out = verbalize(text, category, &opts);
        println!("{category:>10}  {text:<12} -> {}", out.text);
    }

    // Totality: garbage never crashes, it falls back with a note.
    let out = verbalize("~~weird~~", "MEASURE", &opts);
    println!("\nfallback: {:?} (note: {})", out.text, out.note.unwrap());

    // The "and" convention is a flag.
    let us = VerbalizeOptions {
        and_convention: false,
    };
    println!(
        "\n911 as CARDINAL, with and without the \"and\" convention:\n  {}\n  {}",
        verbalize("911", "CARDINAL", &opts).text,
        verbalize("911", "CARDINAL", &us).text,
    );
}
