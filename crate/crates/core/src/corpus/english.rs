const MIN_LATIN_RATIO: f64 = 0.9;

/// Heuristic English filter: at least one letter, and at least 90% of the
/// letters are basic Latin (`A-Z`, `a-z`). Whitespace, digits and
/// punctuation are not counted.
pub fn is_english_like(message: &str) -> bool {
    let mut letters = 0usize;
    let mut latin = 0usize;
    for c in message.chars() {
        if c.is_whitespace() || c.is_numeric() || c.is_ascii_punctuation() || !c.is_alphabetic() {
            continue;
        }
        letters += 1;
        if c.is_ascii_alphabetic() {
            latin += 1;
        }
    }
    letters > 0 && latin as f64 / letters as f64 >= MIN_LATIN_RATIO
}
