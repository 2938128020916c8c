//! Devanagari to Latin transliteration.
//!
//! Translation clients are asked for Latin output, but some return
//! Devanagari. This pass applies one fixed table in the informal
//! "aa/ee/oo" style common in romanized Hindi chat text: long vowels are
//! doubled, the inherent vowel is written `a`, and a word-final inherent
//! vowel is dropped (`नमक` becomes `namak`, not `namaka`).

use alloc::string::String;

fn consonant(c: char) -> Option<&'static str> {
    Some(match c {
        'क' => "k",
        'ख' => "kh",
        'ग' => "g",
        'घ' => "gh",
        'ङ' => "n",
        'च' => "ch",
        'छ' => "chh",
        'ज' => "j",
        'झ' => "jh",
        'ञ' => "n",
        'ट' => "t",
        'ठ' => "th",
        'ड' => "d",
        'ढ' => "dh",
        'ण' => "n",
        'त' => "t",
        'थ' => "th",
        'द' => "d",
        'ध' => "dh",
        'न' => "n",
        'प' => "p",
        'फ' => "ph",
        'ब' => "b",
        'भ' => "bh",
        'म' => "m",
        'य' => "y",
        'र' => "r",
        'ल' => "l",
        'व' => "v",
        'श' => "sh",
        'ष' => "sh",
        'स' => "s",
        'ह' => "h",
        // precomposed nukta letters
        '\u{0958}' => "q",
        '\u{0959}' => "kh",
        '\u{095A}' => "gh",
        '\u{095B}' => "z",
        '\u{095C}' => "r",
        '\u{095D}' => "rh",
        '\u{095E}' => "f",
        '\u{095F}' => "y",
        _ => return None,
    })
}

fn with_nukta(c: char) -> Option<&'static str> {
    Some(match c {
        'क' => "q",
        'ख' => "kh",
        'ग' => "gh",
        'ज' => "z",
        'ड' => "r",
        'ढ' => "rh",
        'फ' => "f",
        'य' => "y",
        _ => return None,
    })
}

fn independent_vowel(c: char) -> Option<&'static str> {
    Some(match c {
        'अ' => "a",
        'आ' => "aa",
        'इ' => "i",
        'ई' => "ee",
        'उ' => "u",
        'ऊ' => "oo",
        'ऋ' => "ri",
        'ए' => "e",
        'ऐ' => "ai",
        'ऑ' => "o",
        'ओ' => "o",
        'औ' => "au",
        'ऍ' => "e",
        _ => return None,
    })
}

fn vowel_sign(c: char) -> Option<&'static str> {
    Some(match c {
        'ा' => "aa",
        'ि' => "i",
        'ी' => "ee",
        'ु' => "u",
        'ू' => "oo",
        'ृ' => "ri",
        'े' => "e",
        'ै' => "ai",
        'ॉ' => "o",
        'ो' => "o",
        'ौ' => "au",
        'ॅ' => "e",
        _ => return None,
    })
}

fn other_sign(c: char) -> Option<&'static str> {
    Some(match c {
        'ं' | 'ँ' => "n",
        'ः' => "h",
        'ॐ' => "om",
        '।' | '॥' => ".",
        '०' => "0",
        '१' => "1",
        '२' => "2",
        '३' => "3",
        '४' => "4",
        '५' => "5",
        '६' => "6",
        '७' => "7",
        '८' => "8",
        '९' => "9",
        _ => return None,
    })
}

const NUKTA: char = '\u{093C}';
const VIRAMA: char = '\u{094D}';

fn continues_word(c: Option<char>) -> bool {
    c.is_some_and(|c| consonant(c).is_some() || independent_vowel(c).is_some() || matches!(c, 'ं' | 'ँ' | 'ः'))
}

/// True if the text contains any Devanagari letter.
pub fn has_devanagari(text: &str) -> bool {
    text.chars().any(|c| ('\u{0900}'..='\u{097F}').contains(&c))
}

/// Transliterates Devanagari; other characters pass through unchanged.
pub fn romanize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if let Some(mut base) = consonant(c) {
            if chars.peek() == Some(&NUKTA) {
                chars.next();
                base = with_nukta(c).unwrap_or(base);
            }
            out.push_str(base);
            match chars.peek().copied() {
                Some(VIRAMA) => {
                    chars.next();
                }
                Some(sign) if vowel_sign(sign).is_some() => {
                    chars.next();
                    let at_end = !continues_word(chars.peek().copied());
                    match vowel_sign(sign) {
                        Some("aa") if at_end => out.push('a'),
                        Some(v) => out.push_str(v),
                        None => {}
                    }
                }
                next if continues_word(next) => out.push('a'),
                _ => {}
            }
        } else if let Some(v) = independent_vowel(c).or_else(|| other_sign(c)) {
            out.push_str(v);
        } else if let Some(v) = vowel_sign(c) {
            // stray sign without a consonant
            out.push_str(v);
        } else if c == NUKTA || c == VIRAMA {
            continue;
        } else {
            out.push(c);
        }
    }
    out
}
