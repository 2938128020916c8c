//! Whitespace and punctuation tokenization shared by the parser and the
//! translate-train pipeline.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Characters that belong inside words.
///
/// Devanagari vowel signs and the virama are combining marks, so the whole
/// block counts as word material.
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || ('\u{0300}'..='\u{036F}').contains(&c) || is_devanagari_letter(c)
}

fn is_devanagari_letter(c: char) -> bool {
    // U+0964/U+0965 are the danda punctuation marks
    ('\u{0900}'..='\u{097F}').contains(&c) && c != '\u{0964}' && c != '\u{0965}'
}

/// A token with no alphanumeric content.
pub fn is_punctuation(token: &str) -> bool {
    !token.is_empty() && !token.chars().any(|c| c.is_alphanumeric() || is_devanagari_letter(c))
}

/// Splits leading and trailing punctuation runs off a whitespace-delimited
/// piece. Internal punctuation (apostrophes, hyphens) stays with the word.
pub fn split_punctuation(piece: &str) -> Vec<&str> {
    let mut out = Vec::with_capacity(3);
    if piece.is_empty() {
        return out;
    }
    let is_edge = |c: char| !is_word_char(c) || c == '\'';
    let start = piece
        .char_indices()
        .find(|&(_, c)| !is_edge(c))
        .map(|(i, _)| i);
    let Some(start) = start else {
        out.push(piece);
        return out;
    };
    let end = piece
        .char_indices()
        .rev()
        .find(|&(_, c)| !is_edge(c))
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(piece.len());
    if start > 0 {
        out.push(&piece[..start]);
    }
    out.push(&piece[start..end]);
    if end < piece.len() {
        out.push(&piece[end..]);
    }
    out
}

/// Whitespace split followed by [`split_punctuation`].
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .flat_map(split_punctuation)
        .map(ToString::to_string)
        .collect()
}
