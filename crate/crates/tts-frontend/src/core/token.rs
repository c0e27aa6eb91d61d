//! Whitespace tokenization with punctuation split off into separate tokens.
//!
//! Offsets are 0-based character offsets into the source string, so a token
//! always equals the source slice `[start, end)` in characters.

/// A token with its character span in the source sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn new(text: impl Into<String>, start: usize, end: usize) -> Self {
        Token {
            text: text.into(),
            start,
            end,
        }
    }

    /// Character length of the token.
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

/// Split `text` into tokens: runs of alphanumeric characters (plus
/// apostrophes) are kept together, every other non-whitespace character
/// becomes its own token. Deterministic; empty input yields no tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if is_word_char(c) {
            let start = i;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            tokens.push(Token::new(chars[start..i].iter().collect::<String>(), start, i));
        } else {
            tokens.push(Token::new(c.to_string(), i, i + 1));
            i += 1;
        }
    }
    tokens
}

/// Token texts in order, handy for feeding models.
pub fn token_texts(tokens: &[Token]) -> Vec<&str> {
    tokens.iter().map(|t| t.text.as_str()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn whitespace_split() {
        let toks = token_strings("i have 3 dvds");
        assert_eq!(toks, ["i", "have", "3", "dvds"]);
    }

    #[test]
    fn punctuation_is_split_off() {
        let toks = token_strings("it costs $5.");
        assert_eq!(toks, ["it", "costs", "$", "5", "."]);
    }

    #[test]
    fn apostrophes_stay_inside_words() {
        let toks = token_strings("don't tear the page");
        assert_eq!(toks, ["don't", "tear", "the", "page"]);
    }

    #[test]
    fn offsets_match_source() {
        let text = "call 911.";
        let chars: Vec<char> = text.chars().collect();
        for t in tokenize(text) {
            let slice: String = chars[t.start..t.end].iter().collect();
            assert_eq!(slice, t.text);
        }
    }

    #[test]
    fn tokens_ordered_and_disjoint() {
        let toks = tokenize("she said: \"3-1, really?\"");
        for w in toks.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
    }

    fn token_strings(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.text).collect()
    }
}
