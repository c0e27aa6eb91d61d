//! Per-category verbalizers turning a tagged span into spoken words.
//!
//! Every verbalizer is total through [`verbalize`]: a span its category
//! grammar cannot parse falls back to a character-by-character verbatim
//! reading and carries a diagnostic note. Output is lowercase words and
//! apostrophes only.

use crate::error::{Error, Result};
use crate::tn::numbers;

#[derive(Debug, Clone, Copy)]
pub struct VerbalizeOptions {
    /// British "and" after hundreds ("nine hundred and eleven").
    pub and_convention: bool,
}

impl Default for VerbalizeOptions {
    fn default() -> Self {
        VerbalizeOptions {
            and_convention: true,
        }
    }
}

/// Result of verbalizing one span. `text` may be empty when even the
/// fallback found nothing speakable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verbalization {
    pub text: String,
    pub used_fallback: bool,
    pub note: Option<String>,
}

fn fail(text: &str, category: &str, msg: &str) -> Error {
    Error::Verbalize {
        text: text.to_string(),
        category: category.to_string(),
        msg: msg.to_string(),
    }
}

/// Dispatch to the category grammar; errors mean "use the fallback".
pub fn verbalize_builtin(text: &str, category: &str, opts: &VerbalizeOptions) -> Result<String> {
    let and = opts.and_convention;
    match category {
        "CARDINAL" => numbers::cardinal(text, and),
        "DIGIT" => numbers::digits(text),
        "ORDINAL" => numbers::ordinal(text, and),
        "DATE" => date(text, and),
        "TIME" => time(text, and),
        "MONEY" => money(text, and),
        "DECIMAL" => decimal(text, and),
        "MEASURE" => measure(text, and),
        "FRACTION" => fraction(text, and),
        "ELECTRONIC" => electronic(text),
        "ADDRESS" => address(text, and),
        "TELEPHONE" => telephone(text),
        "LETTERS" => letters(text),
        "LETTERSS" => letterss(text),
        "VERBATIM" => Ok(verbatim(text).0),
        "MATH" => math(text, and),
        "SCORE" => score(text, and),
        "PLAIN" => plain(text),
        _ => Err(fail(text, category, "no grammar for this category")),
    }
}

/// Total verbalization: grammar result, or the verbatim fallback plus a
/// diagnostic.
pub fn verbalize(text: &str, category: &str, opts: &VerbalizeOptions) -> Verbalization {
    match verbalize_builtin(text, category, opts) {
        Ok(words) => Verbalization {
            text: words,
            used_fallback: false,
            note: None,
        },
        Err(e) => {
            let (words, drop_note) = verbatim(text);
            let mut note = format!("fell back to verbatim: {e}");
            if let Some(d) = drop_note {
                note.push_str(&format!(" ({d})"));
            }
            Verbalization {
                text: words,
                used_fallback: true,
                note: Some(note),
            }
        }
    }
}

const MONTHS: [&str; 12] = [
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

fn month_from_name(name: &str) -> Option<usize> {
    let lower = name.to_lowercase();
    MONTHS.iter().position(|m| {
        *m == lower || (lower.len() >= 3 && m.starts_with(&lower) && lower.len() <= m.len())
    })
}

fn day_words(day: u64, and: bool) -> Result<String> {
    if day == 0 || day > 31 {
        return Err(fail(&day.to_string(), "DATE", "day out of range"));
    }
    numbers::ordinal(&day.to_string(), and)
}

fn date(text: &str, and: bool) -> Result<String> {
    let t = text.trim();
    let parse_u64 = |s: &str| s.parse::<u64>().ok();
    // Plain year.
    if t.len() == 4 && t.chars().all(|c| c.is_ascii_digit()) {
        return numbers::year(parse_u64(t).expect("digits"), and);
    }
    // ISO 2016-05-09 or US 5/9/2016.
    for sep in ['-', '/'] {
        let parts: Vec<&str> = t.split(sep).collect();
        if parts.len() == 3 && parts.iter().all(|p| p.chars().all(|c| c.is_ascii_digit())) {
            let nums: Vec<u64> = parts.iter().filter_map(|p| parse_u64(p)).collect();
            if nums.len() != 3 {
                break;
            }
            let (y, m, d) = if parts[0].len() == 4 {
                (nums[0], nums[1], nums[2])
            } else {
                (nums[2], nums[0], nums[1])
            };
            if m == 0 || m > 12 {
                return Err(fail(text, "DATE", "month out of range"));
            }
            return Ok(format!(
                "the {} of {} {}",
                day_words(d, and)?,
                MONTHS[(m - 1) as usize],
                numbers::year(y, and)?
            ));
        }
    }
    // "may 5", "may 5 2016", "5 may 2016" (commas tolerated).
    let cleaned = t.replace(',', " ");
    let words: Vec<&str> = cleaned.split_whitespace().collect();
    match words.as_slice() {
        [m, d] if month_from_name(m).is_some() => {
            let day = parse_u64(d).ok_or_else(|| fail(text, "DATE", "bad day"))?;
            Ok(format!(
                "{} {}",
                MONTHS[month_from_name(m).expect("checked")],
                day_words(day, and)?
            ))
        }
        [m, d, y] if month_from_name(m).is_some() => {
            let day = parse_u64(d).ok_or_else(|| fail(text, "DATE", "bad day"))?;
            let yr = parse_u64(y).ok_or_else(|| fail(text, "DATE", "bad year"))?;
            Ok(format!(
                "{} {} {}",
                MONTHS[month_from_name(m).expect("checked")],
                day_words(day, and)?,
                numbers::year(yr, and)?
            ))
        }
        [d, m] if month_from_name(m).is_some() => {
            let day = parse_u64(d).ok_or_else(|| fail(text, "DATE", "bad day"))?;
            Ok(format!(
                "the {} of {}",
                day_words(day, and)?,
                MONTHS[month_from_name(m).expect("checked")]
            ))
        }
        [d, m, y] if month_from_name(m).is_some() => {
            let day = parse_u64(d).ok_or_else(|| fail(text, "DATE", "bad day"))?;
            let yr = parse_u64(y).ok_or_else(|| fail(text, "DATE", "bad year"))?;
            Ok(format!(
                "the {} of {} {}",
                day_words(day, and)?,
                MONTHS[month_from_name(m).expect("checked")],
                numbers::year(yr, and)?
            ))
        }
        _ => Err(fail(text, "DATE", "unrecognized date shape")),
    }
}

fn time(text: &str, and: bool) -> Result<String> {
    let t = text.trim().to_lowercase();
    let (clock, suffix) = match t.find(|c: char| c == 'a' || c == 'p') {
        Some(at) => {
            let (head, tail) = t.split_at(at);
            let suffix = match tail.trim_start_matches(|c: char| !c.is_ascii_alphanumeric()) {
                s if s.starts_with("am") || s.starts_with("a.m") => "a m",
                s if s.starts_with("pm") || s.starts_with("p.m") => "p m",
                _ => return Err(fail(text, "TIME", "bad meridiem suffix")),
            };
            (head.trim().to_string(), Some(suffix))
        }
        None => (t.clone(), None),
    };
    let parts: Vec<&str> = clock.split(':').collect();
    if parts.len() != 2 || !parts.iter().all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_digit())) {
        return Err(fail(text, "TIME", "expected H:MM"));
    }
    let hours: u64 = parts[0].parse().expect("digits");
    let minutes: u64 = parts[1].parse().expect("digits");
    if hours > 23 || minutes > 59 {
        return Err(fail(text, "TIME", "out of range"));
    }
    let h = numbers::cardinal_value(hours, and)?;
    let m = if minutes == 0 {
        "o'clock".to_string()
    } else if minutes < 10 {
        format!("o {}", numbers::cardinal_value(minutes, and)?)
    } else {
        numbers::cardinal_value(minutes, and)?
    };
    Ok(match suffix {
        Some(s) => format!("{h} {m} {s}"),
        None => format!("{h} {m}"),
    })
}

struct Currency {
    unit: (&'static str, &'static str),
    sub: Option<(&'static str, &'static str)>,
}

fn currency_of(symbol: char) -> Option<Currency> {
    match symbol {
        '$' => Some(Currency {
            unit: ("dollar", "dollars"),
            sub: Some(("cent", "cents")),
        }),
        '£' => Some(Currency {
            unit: ("pound", "pounds"),
            sub: Some(("penny", "pence")),
        }),
        '€' => Some(Currency {
            unit: ("euro", "euros"),
            sub: Some(("cent", "cents")),
        }),
        '¥' => Some(Currency {
            unit: ("yen", "yen"),
            sub: None,
        }),
        _ => None,
    }
}

fn money(text: &str, and: bool) -> Result<String> {
    let t = text.trim();
    let mut chars = t.chars();
    let symbol = chars.next().ok_or_else(|| fail(text, "MONEY", "empty"))?;
    let currency = currency_of(symbol).ok_or_else(|| fail(text, "MONEY", "unknown currency"))?;
    let rest = chars.as_str().trim();
    // "$5 million" style quantities.
    let mut pieces = rest.split_whitespace();
    let amount = pieces.next().ok_or_else(|| fail(text, "MONEY", "no amount"))?;
    let scale = pieces.next();
    if pieces.next().is_some() {
        return Err(fail(text, "MONEY", "trailing content"));
    }
    if let Some(scale) = scale {
        let scale = scale.to_lowercase();
        if !["hundred", "thousand", "million", "billion", "trillion"].contains(&scale.as_str()) {
            return Err(fail(text, "MONEY", "unknown scale word"));
        }
        let amount_words = if amount.contains('.') {
            decimal(amount, and)?
        } else {
            numbers::cardinal(amount, and)?
        };
        return Ok(format!("{amount_words} {scale} {}", currency.unit.1));
    }
    let (int_part, frac_part) = match amount.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (amount, None),
    };
    let int_clean: String = int_part.chars().filter(|&c| c != ',').collect();
    if int_clean.is_empty() || !int_clean.chars().all(|c| c.is_ascii_digit()) {
        return Err(fail(text, "MONEY", "bad amount"));
    }
    let int_value: u64 = int_clean
        .parse()
        .map_err(|_| fail(text, "MONEY", "amount out of range"))?;
    let unit = if int_value == 1 {
        currency.unit.0
    } else {
        currency.unit.1
    };
    let mut out = format!("{} {unit}", numbers::cardinal_value(int_value, and)?);
    if let Some(frac) = frac_part {
        if frac.is_empty() || frac.len() > 2 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(fail(text, "MONEY", "bad fractional amount"));
        }
        let sub_value: u64 = frac.parse::<u64>().expect("digits") * if frac.len() == 1 { 10 } else { 1 };
        if sub_value > 0 {
            let sub = currency
                .sub
                .ok_or_else(|| fail(text, "MONEY", "currency has no subunit"))?;
            let sub_name = if sub_value == 1 { sub.0 } else { sub.1 };
            out.push_str(&format!(
                " and {} {sub_name}",
                numbers::cardinal_value(sub_value, and)?
            ));
        }
    }
    Ok(out)
}

fn decimal(text: &str, and: bool) -> Result<String> {
    let t = text.trim();
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let (int_part, frac_part) = body
        .split_once('.')
        .ok_or_else(|| fail(text, "DECIMAL", "no decimal point"))?;
    if !frac_part.chars().all(|c| c.is_ascii_digit()) || frac_part.is_empty() {
        return Err(fail(text, "DECIMAL", "bad fraction digits"));
    }
    let mut out = String::new();
    if negative {
        out.push_str("minus ");
    }
    if !int_part.is_empty() {
        if !int_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(fail(text, "DECIMAL", "bad integer digits"));
        }
        out.push_str(&numbers::cardinal(int_part, and)?);
        out.push(' ');
    }
    out.push_str("point");
    for c in frac_part.chars() {
        let d = c.to_digit(10).expect("digit") as u64;
        out.push(' ');
        if d == 0 {
            out.push('o');
        } else {
            out.push_str(&numbers::cardinal_value(d, and)?);
        }
    }
    Ok(out)
}

fn unit_words(unit: &str) -> Option<(&'static str, &'static str)> {
    let table: &[(&str, (&str, &str))] = &[
        ("kg", ("kilogram", "kilograms")),
        ("g", ("gram", "grams")),
        ("mg", ("milligram", "milligrams")),
        ("km", ("kilometer", "kilometers")),
        ("m", ("meter", "meters")),
        ("cm", ("centimeter", "centimeters")),
        ("mm", ("millimeter", "millimeters")),
        ("mi", ("mile", "miles")),
        ("ft", ("foot", "feet")),
        ("in", ("inch", "inches")),
        ("lb", ("pound", "pounds")),
        ("lbs", ("pounds", "pounds")),
        ("oz", ("ounce", "ounces")),
        ("mph", ("miles per hour", "miles per hour")),
        ("kb", ("kilobyte", "kilobytes")),
        ("mb", ("megabyte", "megabytes")),
        ("gb", ("gigabyte", "gigabytes")),
        ("tb", ("terabyte", "terabytes")),
        ("hz", ("hertz", "hertz")),
        ("khz", ("kilohertz", "kilohertz")),
        ("mhz", ("megahertz", "megahertz")),
        ("ghz", ("gigahertz", "gigahertz")),
        ("ml", ("milliliter", "milliliters")),
        ("l", ("liter", "liters")),
        ("s", ("second", "seconds")),
        ("sec", ("second", "seconds")),
        ("min", ("minute", "minutes")),
        ("h", ("hour", "hours")),
        ("hr", ("hour", "hours")),
        ("%", ("percent", "percent")),
        ("°", ("degree", "degrees")),
        ("°c", ("degrees celsius", "degrees celsius")),
        ("°f", ("degrees fahrenheit", "degrees fahrenheit")),
    ];
    let lower = unit.to_lowercase();
    table.iter().find(|(u, _)| *u == lower).map(|(_, w)| *w)
}

fn measure(text: &str, and: bool) -> Result<String> {
    let t = text.trim();
    let split_at = t
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_digit() || *c == '.' || *c == ',' || *c == '-'))
        .map(|(i, _)| i)
        .ok_or_else(|| fail(text, "MEASURE", "no unit"))?;
    let (num, unit_text) = t.split_at(split_at);
    let num = num.trim();
    let unit_text = unit_text.trim();
    if num.is_empty() {
        return Err(fail(text, "MEASURE", "no numeric part"));
    }
    // Compound "per" units like km/h.
    let (unit, per) = match unit_text.split_once('/') {
        Some((u, p)) => (u, Some(p)),
        None => (unit_text, None),
    };
    let singular = num == "1";
    let unit_w = unit_words(unit).ok_or_else(|| fail(text, "MEASURE", "unknown unit"))?;
    let mut out = if num.contains('.') {
        decimal(num, and)?
    } else {
        numbers::cardinal(num, and)?
    };
    out.push(' ');
    out.push_str(if singular { unit_w.0 } else { unit_w.1 });
    if let Some(per_unit) = per {
        let per_w = unit_words(per_unit).ok_or_else(|| fail(text, "MEASURE", "unknown unit"))?;
        out.push_str(" per ");
        out.push_str(per_w.0);
    }
    Ok(out)
}

fn fraction_part(n: u64, d: u64, and: bool) -> Result<String> {
    let num = numbers::cardinal_value(n, and)?;
    let denom = match d {
        0 => return Err(fail(&format!("{n}/{d}"), "FRACTION", "zero denominator")),
        1 => return Ok(num),
        2 => {
            if n == 1 {
                return Ok("one half".to_string());
            }
            "halves".to_string()
        }
        4 => {
            if n == 1 {
                return Ok("one quarter".to_string());
            }
            "quarters".to_string()
        }
        _ => {
            let base = numbers::ordinal(&d.to_string(), and)?;
            if n == 1 {
                return Ok(format!("{num} {base}"));
            }
            format!("{base}s")
        }
    };
    Ok(format!("{num} {denom}"))
}

fn fraction(text: &str, and: bool) -> Result<String> {
    let t = text.trim();
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, t),
    };
    let (whole, frac) = match body.split_once(char::is_whitespace) {
        Some((w, f)) if w.chars().all(|c| c.is_ascii_digit()) && !w.is_empty() => {
            (Some(w), f.trim())
        }
        _ => (None, body),
    };
    let (n, d) = frac
        .split_once('/')
        .ok_or_else(|| fail(text, "FRACTION", "no slash"))?;
    let (n, d) = (n.trim(), d.trim());
    if n.is_empty()
        || d.is_empty()
        || !n.chars().all(|c| c.is_ascii_digit())
        || !d.chars().all(|c| c.is_ascii_digit())
    {
        return Err(fail(text, "FRACTION", "bad numerator or denominator"));
    }
    let n: u64 = n.parse().map_err(|_| fail(text, "FRACTION", "out of range"))?;
    let d: u64 = d.parse().map_err(|_| fail(text, "FRACTION", "out of range"))?;
    let mut out = String::new();
    if negative {
        out.push_str("minus ");
    }
    if let Some(w) = whole {
        out.push_str(&numbers::cardinal(w, and)?);
        out.push_str(" and ");
    }
    out.push_str(&fraction_part(n, d, and)?);
    Ok(out)
}

fn symbol_word(c: char) -> Option<&'static str> {
    Some(match c {
        '.' => "dot",
        '@' => "at",
        '/' => "slash",
        '\\' => "backslash",
        ':' => "colon",
        ';' => "semicolon",
        '-' => "dash",
        '_' => "underscore",
        '#' => "hash",
        '?' => "question mark",
        '!' => "exclamation mark",
        '=' => "equals",
        '&' => "and",
        '~' => "tilde",
        '%' => "percent",
        '+' => "plus",
        '*' => "asterisk",
        '$' => "dollar",
        ',' => "comma",
        '\'' => "apostrophe",
        '"' => "quote",
        '^' => "caret",
        '<' => "less than",
        '>' => "greater than",
        '|' => "bar",
        '°' => "degree",
        _ => return None,
    })
}

fn spell_letters(s: &str) -> Vec<String> {
    s.chars()
        .filter(|c| c.is_ascii_alphabetic())
        .map(|c| c.to_ascii_lowercase().to_string())
        .collect()
}

fn electronic(text: &str) -> Result<String> {
    let t = text.trim().to_lowercase();
    if t.is_empty() {
        return Err(fail(text, "ELECTRONIC", "empty"));
    }
    let mut words: Vec<String> = Vec::new();
    let mut run = String::new();
    let flush = |run: &mut String, words: &mut Vec<String>| -> Result<()> {
        if run.is_empty() {
            return Ok(());
        }
        if run.chars().all(|c| c.is_ascii_digit()) {
            words.push(numbers::digits(run)?);
        } else if *run == "www" {
            words.push("w w w".to_string());
        } else if run.len() == 1 {
            words.push(run.clone());
        } else {
            // Pronounceable segments read as words.
            words.push(run.clone());
        }
        run.clear();
        Ok(())
    };
    for c in t.chars() {
        if c.is_ascii_alphabetic() {
            if run.chars().next().is_some_and(|f| f.is_ascii_digit()) {
                flush(&mut run, &mut words)?;
            }
            run.push(c);
        } else if c.is_ascii_digit() {
            if run.chars().next().is_some_and(|f| f.is_ascii_alphabetic()) {
                flush(&mut run, &mut words)?;
            }
            run.push(c);
        } else {
            flush(&mut run, &mut words)?;
            words.push(
                symbol_word(c)
                    .ok_or_else(|| fail(text, "ELECTRONIC", "unknown symbol"))?
                    .to_string(),
            );
        }
    }
    flush(&mut run, &mut words)?;
    Ok(words.join(" "))
}

fn address(text: &str, and: bool) -> Result<String> {
    let t = text.trim();
    let head: String = t.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    let rest = &t[head.len()..];
    let rest = rest.trim_start_matches(['-', ' ']);
    let digits_part: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    let tail = &rest[digits_part.len()..];
    if digits_part.is_empty() || !tail.chars().all(|c| c.is_ascii_alphabetic()) {
        return Err(fail(text, "ADDRESS", "expected letters then digits"));
    }
    let mut words = spell_letters(&head);
    let number: u64 = digits_part
        .parse()
        .map_err(|_| fail(text, "ADDRESS", "number out of range"))?;
    words.push(match digits_part.len() {
        0..=3 => numbers::cardinal_value(number, and)?,
        4 => numbers::year(number, and)?,
        _ => numbers::digits(&digits_part)?,
    });
    words.extend(spell_letters(tail));
    Ok(words.join(" "))
}

fn telephone(text: &str) -> Result<String> {
    let t = text.trim();
    let mut words: Vec<String> = Vec::new();
    let mut saw_digit = false;
    for c in t.chars() {
        if let Some(d) = c.to_digit(10) {
            saw_digit = true;
            words.push(if d == 0 {
                "o".to_string()
            } else {
                numbers::cardinal_value(d as u64, false).expect("single digit")
            });
        } else if c == '+' {
            words.push("plus".to_string());
        } else if c.is_ascii_alphabetic() {
            words.push(c.to_ascii_lowercase().to_string());
        } else if matches!(c, '-' | '.' | '(' | ')' | ' ') {
            // Separators are silent.
        } else {
            return Err(fail(text, "TELEPHONE", "unexpected character"));
        }
    }
    if !saw_digit {
        return Err(fail(text, "TELEPHONE", "no digits"));
    }
    Ok(words.join(" "))
}

fn letters(text: &str) -> Result<String> {
    let mut words = Vec::new();
    for c in text.chars() {
        if c.is_ascii_alphabetic() {
            words.push(c.to_ascii_lowercase().to_string());
        } else if let Some(d) = c.to_digit(10) {
            words.push(numbers::cardinal_value(d as u64, false).expect("single digit"));
        }
    }
    if words.is_empty() {
        return Err(fail(text, "LETTERS", "nothing to spell"));
    }
    Ok(words.join(" "))
}

/// Plural letter sequences: "dvds" -> "d v ds", "cd's" -> "c d's".
fn letterss(text: &str) -> Result<String> {
    let t = text.trim();
    let lower = t.to_lowercase();
    let (base, suffix) = if let Some(b) = lower.strip_suffix("'s") {
        (b, "'s")
    } else if let Some(b) = lower.strip_suffix('s') {
        (b, "s")
    } else {
        return Err(fail(text, "LETTERSS", "no plural suffix"));
    };
    let spelled = letters(base)?;
    Ok(format!("{spelled}{suffix}"))
}

/// Character-by-character reading; cannot fail. Returns the words and a
/// note listing dropped (unknown) characters, if any.
pub fn verbatim(text: &str) -> (String, Option<String>) {
    let mut words: Vec<String> = Vec::new();
    let mut dropped = Vec::new();
    for c in text.chars() {
        if c.is_whitespace() {
            continue;
        }
        if c.is_ascii_alphabetic() {
            words.push(c.to_ascii_lowercase().to_string());
        } else if let Some(d) = c.to_digit(10) {
            words.push(
                numbers::cardinal_value(d as u64, false)
                    .expect("single digit")
                    .to_string(),
            );
        } else if let Some(w) = symbol_word(c) {
            words.push(w.to_string());
        } else {
            dropped.push(c);
        }
    }
    let note = if dropped.is_empty() {
        None
    } else {
        Some(format!(
            "dropped characters without a reading: {}",
            dropped.iter().collect::<String>()
        ))
    };
    (words.join(" "), note)
}

fn math(text: &str, and: bool) -> Result<String> {
    let t = text.trim();
    let mut words: Vec<String> = Vec::new();
    let mut num = String::new();
    let flush = |num: &mut String, words: &mut Vec<String>| -> Result<()> {
        if num.is_empty() {
            return Ok(());
        }
        words.push(if num.contains('.') {
            decimal(num, and)?
        } else {
            numbers::cardinal(num, and)?
        });
        num.clear();
        Ok(())
    };
    for c in t.chars() {
        match c {
            '0'..='9' => num.push(c),
            '.' if !num.is_empty() => num.push(c),
            _ => {
                flush(&mut num, &mut words)?;
                match c {
                    '+' => words.push("plus".to_string()),
                    '-' | '−' => words.push("minus".to_string()),
                    '*' | '×' | '·' => words.push("times".to_string()),
                    '/' | '÷' => words.push("divided by".to_string()),
                    '=' => words.push("equals".to_string()),
                    '<' => words.push("less than".to_string()),
                    '>' => words.push("greater than".to_string()),
                    '^' => words.push("to the power of".to_string()),
                    '%' => words.push("percent".to_string()),
                    '(' | ')' | ' ' => {}
                    c if c.is_ascii_alphabetic() => {
                        words.push(c.to_ascii_lowercase().to_string())
                    }
                    _ => return Err(fail(text, "MATH", "unknown operator")),
                }
            }
        }
    }
    flush(&mut num, &mut words)?;
    if words.is_empty() {
        return Err(fail(text, "MATH", "empty expression"));
    }
    Ok(words.join(" "))
}

/// Scores like "3-1": the numbers are read as cardinals, separators are
/// silent.
fn score(text: &str, and: bool) -> Result<String> {
    let parts: Vec<&str> = text.trim().split(['-', ':', '–']).collect();
    if parts.len() < 2 {
        return Err(fail(text, "SCORE", "expected two numbers"));
    }
    let mut words = Vec::new();
    for p in parts {
        let p = p.trim();
        if p.is_empty() || !p.chars().all(|c| c.is_ascii_digit()) {
            return Err(fail(text, "SCORE", "non-numeric part"));
        }
        words.push(numbers::cardinal(p, and)?);
    }
    Ok(words.join(" "))
}

fn plain(text: &str) -> Result<String> {
    let lower = text.trim().to_lowercase();
    if !lower.is_empty() && lower.chars().all(|c| c.is_ascii_lowercase() || c == '\'') {
        Ok(lower)
    } else {
        Err(fail(text, "PLAIN", "not plain alphabetic"))
    }
}
