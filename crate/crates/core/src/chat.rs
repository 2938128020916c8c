//! CHAT transcript parsing (Bangor Miami conventions).
//!
//! Recognised markup:
//!
//! | markup                   | effect                                          |
//! |--------------------------|-------------------------------------------------|
//! | `word@s:eng`             | token language, explicit                        |
//! | `word@s`                 | the pair partner of the utterance's matrix      |
//! | `[- spa]`                | utterance precode, sets the matrix language     |
//! | `[/]` `[//]` `[///]`     | retracing markers, removed (words are kept)     |
//! | `<...>`                  | scope brackets, removed                         |
//! | `(.)` `(..)` `(1.5)`     | pauses, removed                                 |
//! | `&=laughs` `&+fr`        | events and fragments, removed                   |
//! | `&-um`                   | filler, kept as `um`                            |
//! | `xxx` `yyy` `www`        | unintelligible, removed                         |
//! | `+...` `+/.`             | special terminators, removed                    |
//! | other `[...]` codes      | removed, unknown ones with a warning            |
//!
//! Header (`@`) lines and dependent tiers (`%mor`, `%com`, ...) are skipped.
//! Lines that start with whitespace continue the previous tier.

use alloc::string::String;
use alloc::vec::Vec;

use crate::lang::LangTag;
use crate::text::{is_punctuation, split_punctuation};
use crate::transcript::{Token, Transcript, TranscriptError, Utterance};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("malformed line {0}: unbalanced bracket group")]
    MalformedLine(usize),
    #[error("no utterances survived parsing")]
    EmptyTranscript,
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
}

/// Knobs for the noise-removal inventory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParserProfile {
    /// Languages of the conversation; a bare `@s` flips between them.
    pub language_pair: (LangTag, LangTag),
    /// Matrix language assumed when no precode is present.
    pub default_matrix: LangTag,
    /// When set, a precode tags every otherwise unmarked word explicitly.
    pub precode_tags_tokens: bool,
    pub drop_unintelligible: bool,
    /// Accept `MAR: text` lines without the leading `*`.
    pub allow_bare_speakers: bool,
}

impl Default for ParserProfile {
    fn default() -> Self {
        ParserProfile {
            language_pair: (LangTag::Eng, LangTag::Spa),
            default_matrix: LangTag::Eng,
            precode_tags_tokens: true,
            drop_unintelligible: true,
            allow_bare_speakers: true,
        }
    }
}

/// Parses one transcript. `id` is usually the file stem.
pub fn parse_transcript(id: &str, raw: &str, profile: &ParserProfile) -> Result<Transcript, ParseError> {
    let mut tiers: Vec<(usize, String, String)> = Vec::new();
    // whether the most recent tier was a speaker tier, for continuation lines
    let mut in_speaker_tier = false;
    for (idx, line) in raw.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with(['\t', ' ']) {
            if in_speaker_tier {
                if let Some(last) = tiers.last_mut() {
                    last.2.push(' ');
                    last.2.push_str(line.trim());
                }
            }
            continue;
        }
        if line.starts_with('@') || line.starts_with('%') {
            in_speaker_tier = false;
            continue;
        }
        match split_speaker(line, profile.allow_bare_speakers) {
            Some((speaker, body)) => {
                tiers.push((line_no, speaker, String::from(body)));
                in_speaker_tier = true;
            }
            None => {
                log::warn!("line {line_no}: not a speaker tier, skipped");
                in_speaker_tier = false;
            }
        }
    }

    let mut utterances = Vec::new();
    for (line_no, speaker, body) in tiers {
        let tokens = parse_body(&body, line_no, profile)?;
        if tokens.iter().all(|t| is_punctuation(&t.text)) {
            continue;
        }
        utterances.push(Utterance { line_no, speaker, tokens });
    }
    if utterances.is_empty() {
        return Err(ParseError::EmptyTranscript);
    }
    Ok(Transcript::new(id, utterances)?)
}

fn split_speaker(line: &str, allow_bare: bool) -> Option<(String, &str)> {
    let (starred, rest) = match line.strip_prefix('*') {
        Some(rest) => (true, rest),
        None if allow_bare => (false, line),
        None => return None,
    };
    let colon = rest.find(':')?;
    let code = &rest[..colon];
    let valid = !code.is_empty()
        && code.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        && (starred || code.chars().all(|c| !c.is_ascii_lowercase()));
    if !valid {
        return None;
    }
    Some((code.to_ascii_uppercase(), rest[colon + 1..].trim()))
}

enum Item {
    Code(String),
    Piece(String),
}

fn lex(body: &str, line_no: usize) -> Result<Vec<Item>, ParseError> {
    let malformed = || ParseError::MalformedLine(line_no);
    let mut items = Vec::new();
    let mut piece = String::new();
    let mut angle = 0usize;
    let mut paren = 0usize;
    let mut chars = body.chars();
    let flush = |piece: &mut String, items: &mut Vec<Item>| {
        if !piece.is_empty() {
            items.push(Item::Piece(core::mem::take(piece)));
        }
    };
    // time-alignment bullets are delimited by U+0015
    let mut in_bullet = false;
    while let Some(c) = chars.next() {
        if c == '\u{15}' {
            in_bullet = !in_bullet;
            flush(&mut piece, &mut items);
            continue;
        }
        if in_bullet {
            continue;
        }
        match c {
            '[' => {
                flush(&mut piece, &mut items);
                let mut code = String::new();
                loop {
                    match chars.next() {
                        Some(']') => break,
                        Some('[') | None => return Err(malformed()),
                        Some(ch) => code.push(ch),
                    }
                }
                items.push(Item::Code(String::from(code.trim())));
            }
            ']' => return Err(malformed()),
            '<' => {
                angle += 1;
                flush(&mut piece, &mut items);
            }
            '>' => {
                angle = angle.checked_sub(1).ok_or_else(malformed)?;
                flush(&mut piece, &mut items);
            }
            '(' => {
                paren += 1;
                piece.push(c);
            }
            ')' => {
                paren = paren.checked_sub(1).ok_or_else(malformed)?;
                piece.push(c);
            }
            c if c.is_whitespace() => {
                if paren > 0 {
                    return Err(malformed());
                }
                flush(&mut piece, &mut items);
            }
            c => piece.push(c),
        }
    }
    if angle != 0 || paren != 0 || in_bullet {
        return Err(malformed());
    }
    flush(&mut piece, &mut items);
    Ok(items)
}

fn is_known_code(code: &str) -> bool {
    const PREFIXES: [&str; 13] = ["/", "<", ">", "!", "?", "=", "+", "*", ":", "%", "^", "\"", "x "];
    code == "e" || PREFIXES.iter().any(|p| code.starts_with(p))
}

fn is_pause(piece: &str) -> bool {
    if let Some(inner) = piece.strip_prefix('(').and_then(|p| p.strip_suffix(')')) {
        return !inner.is_empty() && inner.chars().all(|c| c == '.' || c == ':' || c.is_ascii_digit());
    }
    piece.chars().all(|c| c == '#')
}

fn is_chat_noise_char(c: char) -> bool {
    matches!(
        c,
        '(' | ')' | ':' | '&' | '#' | '^' | '~' | '↑' | '↓' | '≠' | '⌈' | '⌉' | '⌊' | '⌋' | '‡' | '„'
            | '→' | '↗' | '↘' | '≈' | '≋' | '∆' | '∇' | '°' | '▔' | '▁' | '☺' | '♋' | '⁇' | '∬'
            | '∲' | '§' | '∾' | '↫' | '\u{15}'
    )
}

/// Splits `word@s:eng,` into the base, the tag (if a language marker), and
/// any characters trailing the marker.
fn split_marker(piece: &str, matrix: LangTag, pair: (LangTag, LangTag)) -> (String, Option<LangTag>) {
    let Some(at) = piece.find('@') else {
        return (String::from(piece), None);
    };
    let base = &piece[..at];
    let suffix = &piece[at + 1..];
    let kind_len = suffix.find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(suffix.len());
    let kind = &suffix[..kind_len];
    let mut rest = &suffix[kind_len..];
    let mut tag = None;
    if kind == "s" {
        if let Some(after) = rest.strip_prefix(':') {
            let code_len = after
                .find(|c: char| !(c.is_ascii_alphabetic() || c == '+' || c == '&'))
                .unwrap_or(after.len());
            tag = Some(LangTag::from_chat_code(&after[..code_len]));
            rest = &after[code_len..];
        } else {
            tag = Some(matrix.partner(pair));
        }
    } else if let Some(after) = rest.strip_prefix(':') {
        // other markers such as @l or @o may carry a sub-code too
        let code_len = after.find(|c: char| !c.is_ascii_alphanumeric()).unwrap_or(after.len());
        rest = &after[code_len..];
    }
    let mut out = String::from(base);
    out.extend(rest.chars().filter(|&c| c != '@'));
    (out, tag)
}

fn is_unintelligible(word: &str) -> bool {
    matches!(word.to_ascii_lowercase().as_str(), "xxx" | "yyy" | "www")
}

fn is_omitted(word: &str) -> bool {
    let mut chars = word.chars();
    chars.next() == Some('0') && chars.next().is_some_and(|c| c.is_alphabetic())
}

fn parse_body(body: &str, line_no: usize, profile: &ParserProfile) -> Result<Vec<Token>, ParseError> {
    let items = lex(body, line_no)?;

    let mut precode = None;
    for item in &items {
        if let Item::Code(code) = item {
            if let Some(lang) = code.strip_prefix('-') {
                precode = Some(LangTag::from_chat_code(lang.trim()));
            } else if !is_known_code(code) {
                log::warn!("line {line_no}: unknown bracket code [{code}] stripped");
            }
        }
    }
    let matrix = precode.unwrap_or(profile.default_matrix);

    let mut tokens = Vec::new();
    for item in items {
        let Item::Piece(piece) = item else { continue };
        if is_pause(&piece) || piece.starts_with('+') {
            continue;
        }
        let piece = match piece.strip_prefix('&') {
            Some(rest) => match rest.strip_prefix('-') {
                Some(filler) => String::from(filler),
                None => continue,
            },
            None => piece,
        };
        let (base, tag) = split_marker(&piece, matrix, profile.language_pair);
        let cleaned: String = base.chars().filter(|&c| !is_chat_noise_char(c)).collect();
        for part in cleaned.split(['_', '+']) {
            for sub in split_punctuation(part) {
                if is_punctuation(sub) {
                    tokens.push(Token::unmarked(sub));
                    continue;
                }
                if is_omitted(sub) || (profile.drop_unintelligible && is_unintelligible(sub)) {
                    continue;
                }
                let token = match (tag, precode) {
                    (Some(lang), _) => Token::new(sub, lang, true),
                    (None, Some(lang)) if profile.precode_tags_tokens => Token::new(sub, lang, true),
                    _ => Token::unmarked(sub),
                };
                tokens.push(token);
            }
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn parse(raw: &str) -> Result<Transcript, ParseError> {
        parse_transcript("t", raw, &ParserProfile::default())
    }

    fn tok(text: &str, lang: LangTag, explicit: bool) -> Token {
        Token::new(text, lang, explicit)
    }

    #[test]
    fn word_suffix_tag_is_explicit() {
        let t = parse("MAR: olvídate si tiene como tres trainers@s:eng !").unwrap();
        let u = &t.utterances()[0];
        assert_eq!(u.speaker, "MAR");
        let amb = LangTag::Ambiguous;
        assert_eq!(
            u.tokens,
            vec![
                tok("olvídate", amb, false),
                tok("si", amb, false),
                tok("tiene", amb, false),
                tok("como", amb, false),
                tok("tres", amb, false),
                tok("trainers", LangTag::Eng, true),
                tok("!", amb, false),
            ]
        );
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert_eq!(parse(""), Err(ParseError::EmptyTranscript));
        assert_eq!(parse("@Begin\n@End\n"), Err(ParseError::EmptyTranscript));
    }

    // Expected tokens written out by hand from the markup table above.
    #[test]
    fn five_line_fixture() {
        let raw = "@Begin\n\
                   *MAR:\t[- spa] ay (.) no sé si quiero go@s:eng .\n\
                   %mor:\tco|ay adv|no\n\
                   *JES:\t&=laughs .\n\
                   *JES:\tI <want to> [/] want to eat pupusas@s:spa (..) now !\n\
                   *MAR:\tbueno@s &-um xxx yeah@s:eng+spa ?\n\
                   @End\n";
        let t = parse(raw).unwrap();
        let (a, s, e) = (LangTag::Ambiguous, LangTag::Spa, LangTag::Eng);
        let expected = [
            Utterance {
                line_no: 2,
                speaker: "MAR".into(),
                tokens: vec![
                    tok("ay", s, true),
                    tok("no", s, true),
                    tok("sé", s, true),
                    tok("si", s, true),
                    tok("quiero", s, true),
                    tok("go", e, true),
                    tok(".", a, false),
                ],
            },
            Utterance {
                line_no: 5,
                speaker: "JES".into(),
                tokens: vec![
                    tok("I", a, false),
                    tok("want", a, false),
                    tok("to", a, false),
                    tok("want", a, false),
                    tok("to", a, false),
                    tok("eat", a, false),
                    tok("pupusas", s, true),
                    tok("now", a, false),
                    tok("!", a, false),
                ],
            },
            Utterance {
                line_no: 6,
                speaker: "MAR".into(),
                tokens: vec![tok("bueno", s, true), tok("um", a, false), tok("yeah", a, true), tok("?", a, false)],
            },
        ];
        assert_eq!(t.utterances(), &expected[..]);
    }

    #[test]
    fn unbalanced_groups_are_malformed() {
        assert_eq!(parse("*MAR:\thola [/ mundo\n"), Err(ParseError::MalformedLine(1)));
        assert_eq!(parse("*MAR:\thola\n*MAR:\t<hola mundo .\n"), Err(ParseError::MalformedLine(2)));
        assert_eq!(parse("*MAR:\thola )\n"), Err(ParseError::MalformedLine(1)));
        assert_eq!(parse("*MAR:\thola ] .\n"), Err(ParseError::MalformedLine(1)));
    }

    #[test]
    fn continuation_lines_and_bullets() {
        let raw = "*NIC:\tyeah I'll tell her \u{15}1000_2000\u{15}\n\tbueno@s:spa not her .\n";
        let t = parse(raw).unwrap();
        let words: Vec<&str> = t.utterances()[0].tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(words, vec!["yeah", "I'll", "tell", "her", "bueno", "not", "her", "."]);
    }

    #[test]
    fn unknown_codes_and_noise_are_stripped() {
        let t = parse("*MAR:\tso:: [!] (be)cause high_school [% comment] [zzz] 0is xxx .\n").unwrap();
        let words: Vec<&str> = t.utterances()[0].tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(words, vec!["so", "because", "high", "school", "."]);
    }

    #[test]
    fn bare_speaker_lines_require_uppercase() {
        let t = parse("Note: ignore me\nMAR: hola\n").unwrap();
        assert_eq!(t.utterances().len(), 1);
        assert_eq!(t.utterances()[0].line_no, 2);
    }

    #[test]
    fn clean_render_reparses_identically() {
        let raw = "*MAR:\t[- spa] ay no sé go@s:eng ¿verdad?\n*JES:\tyeah@s:eng+spa ok .\n";
        let t = parse(raw).unwrap();
        let rendered = t.render_chat();
        let again = parse_transcript("t", &rendered, &ParserProfile::default()).unwrap();
        // line numbers follow the rendered file, content must not change
        let content = |t: &Transcript| t.utterances().iter().map(|u| (u.speaker.clone(), u.tokens.clone())).collect::<Vec<_>>();
        assert_eq!(content(&t), content(&again));
        assert_eq!(again.render_chat(), rendered);
    }
}
