//! Number-to-words: cardinals, ordinals, serial digits and years.
//!
//! Output is always lowercase words (plus apostrophes); "forty two", never
//! "forty-two". Cardinals default to the British "and" after hundreds
//! ("nine hundred and eleven"), switchable off per call.

use crate::error::{Error, Result};

const ONES: [&str; 20] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen",
];

const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

const SCALES: [&str; 5] = ["", "thousand", "million", "billion", "trillion"];

/// Magnitude limit: values at or above 10^15 are rejected.
pub const CARDINAL_LIMIT: u64 = 1_000_000_000_000_000;

fn verbalize_error(text: &str, msg: &str) -> Error {
    Error::Verbalize {
        text: text.to_string(),
        category: "CARDINAL".to_string(),
        msg: msg.to_string(),
    }
}

/// Words for 1..=99 (0 handled by callers).
fn tens_ones(n: u64) -> String {
    debug_assert!(n > 0 && n < 100);
    if n < 20 {
        ONES[n as usize].to_string()
    } else if n % 10 == 0 {
        TENS[(n / 10) as usize].to_string()
    } else {
        format!("{} {}", TENS[(n / 10) as usize], ONES[(n % 10) as usize])
    }
}

/// Words for 1..=999.
fn under_thousand(n: u64, and_convention: bool) -> String {
    debug_assert!(n > 0 && n < 1000);
    let hundreds = n / 100;
    let rest = n % 100;
    if hundreds == 0 {
        return tens_ones(rest);
    }
    let mut out = format!("{} hundred", ONES[hundreds as usize]);
    if rest > 0 {
        out.push_str(if and_convention { " and " } else { " " });
        out.push_str(&tens_ones(rest));
    }
    out
}

/// A non-negative integer value in long-form English.
pub fn cardinal_value(n: u64, and_convention: bool) -> Result<String> {
    if n >= CARDINAL_LIMIT {
        return Err(verbalize_error(&n.to_string(), "magnitude out of range"));
    }
    if n == 0 {
        return Ok("zero".to_string());
    }
    // Split into thousand-chunks, most significant first.
    let mut chunks = Vec::new();
    let mut rest = n;
    while rest > 0 {
        chunks.push(rest % 1000);
        rest /= 1000;
    }
    let mut parts: Vec<String> = Vec::new();
    for (i, &chunk) in chunks.iter().enumerate().rev() {
        if chunk == 0 {
            continue;
        }
        let words = under_thousand(chunk, and_convention);
        if i == 0 {
            // Units chunk below one hundred after larger chunks takes "and".
            if !parts.is_empty() && chunk < 100 && and_convention {
                parts.push(format!("and {words}"));
            } else {
                parts.push(words);
            }
        } else {
            parts.push(format!("{words} {}", SCALES[i]));
        }
    }
    Ok(parts.join(" "))
}

/// Parse an optionally signed digit string (commas between digit groups are
/// tolerated) and verbalize it as a cardinal.
pub fn cardinal(text: &str, and_convention: bool) -> Result<String> {
    let trimmed = text.trim();
    let (negative, digits) = match trimmed.strip_prefix('-').or(trimmed.strip_prefix('−')) {
        Some(rest) => (true, rest),
        None => (false, trimmed.strip_prefix('+').unwrap_or(trimmed)),
    };
    let cleaned: String = digits.chars().filter(|&c| c != ',').collect();
    if cleaned.is_empty() || !cleaned.chars().all(|c| c.is_ascii_digit()) {
        return Err(verbalize_error(text, "not a plain integer"));
    }
    let value: u64 = cleaned
        .parse()
        .map_err(|_| verbalize_error(text, "magnitude out of range"))?;
    let words = cardinal_value(value, and_convention)?;
    Ok(if negative && value > 0 {
        format!("minus {words}")
    } else {
        words
    })
}

/// Serial digit reading: one word per digit. The lone digit "0" reads
/// "zero"; zeros inside longer strings read "o" ("007" -> "o o seven").
pub fn digits(text: &str) -> Result<String> {
    let trimmed = text.trim();
    if trimmed.is_empty() || !trimmed.chars().all(|c| c.is_ascii_digit()) {
        return Err(Error::Verbalize {
            text: text.to_string(),
            category: "DIGIT".to_string(),
            msg: "not a digit string".to_string(),
        });
    }
    if trimmed == "0" {
        return Ok("zero".to_string());
    }
    Ok(trimmed
        .chars()
        .map(|c| {
            let d = c.to_digit(10).expect("digit") as usize;
            if d == 0 {
                "o"
            } else {
                ONES[d]
            }
        })
        .collect::<Vec<_>>()
        .join(" "))
}

/// Turn the final word of a cardinal into its ordinal form.
fn ordinalize_last_word(words: &str) -> String {
    let mut parts: Vec<&str> = words.split(' ').collect();
    let last = parts.pop().expect("non-empty words");
    let ord = match last {
        "one" => "first".to_string(),
        "two" => "second".to_string(),
        "three" => "third".to_string(),
        "five" => "fifth".to_string(),
        "eight" => "eighth".to_string(),
        "nine" => "ninth".to_string(),
        "twelve" => "twelfth".to_string(),
        w if w.ends_with('y') => format!("{}ieth", &w[..w.len() - 1]),
        w => format!("{w}th"),
    };
    parts.push(&ord);
    parts.join(" ")
}

/// Ordinal words from a digit string with an optional st/nd/rd/th suffix.
pub fn ordinal(text: &str, and_convention: bool) -> Result<String> {
    let trimmed = text.trim().to_lowercase();
    let digits_part = trimmed
        .strip_suffix("st")
        .or(trimmed.strip_suffix("nd"))
        .or(trimmed.strip_suffix("rd"))
        .or(trimmed.strip_suffix("th"))
        .unwrap_or(&trimmed);
    let words = cardinal(digits_part, and_convention).map_err(|_| Error::Verbalize {
        text: text.to_string(),
        category: "ORDINAL".to_string(),
        msg: "not an ordinal".to_string(),
    })?;
    Ok(ordinalize_last_word(&words))
}

/// Year reading: "1984" -> "nineteen eighty four", "1901" -> "nineteen o
/// one", "2000" -> "two thousand", "2016" -> "twenty sixteen".
pub fn year(value: u64, and_convention: bool) -> Result<String> {
    if value == 0 || value > 9999 {
        return cardinal_value(value, and_convention);
    }
    if value < 1000 {
        return cardinal_value(value, and_convention);
    }
    let high = value / 100;
    let low = value % 100;
    if low == 0 {
        if high % 10 == 0 {
            // 2000, 3000: plain cardinal.
            return cardinal_value(value, and_convention);
        }
        return Ok(format!("{} hundred", tens_ones(high)));
    }
    if high % 10 == 0 && low < 10 {
        // 2001..=2009 and friends read as cardinals ("two thousand and one").
        return cardinal_value(value, and_convention);
    }
    if low < 10 {
        return Ok(format!("{} o {}", tens_ones(high), ONES[low as usize]));
    }
    Ok(format!("{} {}", tens_ones(high), tens_ones(low)))
}
