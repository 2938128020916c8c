//! Word-level language identification.
//!
//! Each language gets an interpolated character n-gram model (orders 1 to 3,
//! add-one smoothed, with word-boundary sentinels) plus an exact-match
//! lexicon. A lexicon hit in exactly one language decides the word outright;
//! otherwise the n-gram log-likelihoods are compared and the word is left
//! [`LangTag::Ambiguous`] when the best two are closer than the model's
//! ambiguity margin.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::lang::LangTag;
use crate::text::is_punctuation;
use crate::transcript::{Token, Utterance};

/// Start-of-word sentinel (private use area, never produced by the parser).
pub const BOW: char = '\u{E000}';
/// End-of-word sentinel.
pub const EOW: char = '\u{E001}';

pub const MODEL_VERSION: u32 = 1;

/// Shipped seed lexicons, one lowercase word per line.
pub mod seeds {
    use alloc::string::{String, ToString};
    use alloc::vec::Vec;

    use crate::lang::LangTag;

    pub const ENGLISH: &str = include_str!("../data/lexicons/eng.txt");
    pub const SPANISH: &str = include_str!("../data/lexicons/spa.txt");
    /// Romanized Hindi.
    pub const HINDI: &str = include_str!("../data/lexicons/hin.txt");

    pub fn words(list: &str) -> Vec<String> {
        list.lines().map(str::trim).filter(|w| !w.is_empty()).map(ToString::to_string).collect()
    }

    pub fn for_lang(lang: LangTag) -> Option<Vec<String>> {
        match lang {
            LangTag::Eng => Some(words(ENGLISH)),
            LangTag::Spa => Some(words(SPANISH)),
            LangTag::Hin => Some(words(HINDI)),
            _ => None,
        }
    }

    /// Seed corpora for a language pair, e.g. (ENG, SPA).
    pub fn pair(a: LangTag, b: LangTag) -> Vec<(LangTag, Vec<String>)> {
        [a, b].into_iter().filter_map(|l| Some((l, for_lang(l)?))).collect()
    }

    pub fn all() -> Vec<(LangTag, Vec<String>)> {
        LangTag::DECIDABLE.into_iter().filter_map(|l| Some((l, for_lang(l)?))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LangIdError {
    #[error("seed corpus for {0} is below the minimum word count")]
    InsufficientSeed(LangTag),
    #[error("ambiguity margin must be finite and >= 0, got {0}")]
    BadMargin(f64),
    #[error("{0} cannot be modelled; only ENG, SPA and HIN are decidable")]
    UnsupportedLanguage(LangTag),
    #[error("language {0} appears twice in the seed corpora")]
    DuplicateLanguage(LangTag),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Log-odds (nats) below which a decision is reported as ambiguous.
    pub ambiguity_margin: f64,
    pub min_seed_words: usize,
    /// Interpolation weights for unigram, bigram and trigram estimates.
    pub weights: [f64; 3],
    /// Resolve ambiguous words from agreeing neighbours in [`tag_utterance`].
    pub resolve_from_neighbours: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            ambiguity_margin: 0.5,
            min_seed_words: 1000,
            weights: [0.05, 0.15, 0.8],
            resolve_from_neighbours: true,
        }
    }
}

/// Smoothed next-character distribution for one context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextDist {
    /// Log probability of each character observed after the context.
    pub seen: BTreeMap<char, f64>,
    /// Log probability of any other alphabet symbol.
    pub unseen: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharModel {
    /// Keyed by context string: "" for unigrams, one char for bigrams, two
    /// chars for trigrams.
    pub contexts: BTreeMap<String, ContextDist>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangModel {
    pub version: u32,
    pub languages: Vec<LangTag>,
    /// Number of symbols each context distribution ranges over: every seed
    /// character, the end sentinel and one slot for unknown characters.
    pub alphabet_size: usize,
    pub char_models: Vec<CharModel>,
    pub lexicons: Vec<BTreeSet<String>>,
    pub ambiguity_margin: f64,
    pub weights: [f64; 3],
    pub resolve_from_neighbours: bool,
}

fn normalize(word: &str) -> String {
    word.to_lowercase()
}

fn padded(word: &str) -> Vec<char> {
    let mut chars = Vec::with_capacity(word.len() + 3);
    chars.push(BOW);
    chars.push(BOW);
    chars.extend(word.chars());
    chars.push(EOW);
    chars
}

/// Trains a model from per-language word lists.
pub fn train_langmodel(seed_corpora: &[(LangTag, Vec<String>)], config: &TrainConfig) -> Result<LangModel, LangIdError> {
    if !(config.ambiguity_margin.is_finite() && config.ambiguity_margin >= 0.0) {
        return Err(LangIdError::BadMargin(config.ambiguity_margin));
    }
    let mut languages: Vec<LangTag> = Vec::new();
    for (lang, words) in seed_corpora {
        if !lang.is_language() {
            return Err(LangIdError::UnsupportedLanguage(*lang));
        }
        if languages.contains(lang) {
            return Err(LangIdError::DuplicateLanguage(*lang));
        }
        let n = words.iter().filter(|w| !w.trim().is_empty()).count();
        if n == 0 || n < config.min_seed_words {
            return Err(LangIdError::InsufficientSeed(*lang));
        }
        languages.push(*lang);
    }

    let mut order: Vec<usize> = (0..seed_corpora.len()).collect();
    order.sort_by_key(|&i| seed_corpora[i].0);

    let mut alphabet: BTreeSet<char> = BTreeSet::new();
    alphabet.insert(EOW);
    let lexicons: Vec<BTreeSet<String>> = order
        .iter()
        .map(|&i| {
            seed_corpora[i]
                .1
                .iter()
                .map(|w| normalize(w.trim()))
                .filter(|w| !w.is_empty())
                .collect()
        })
        .collect();
    for lex in &lexicons {
        for w in lex {
            alphabet.extend(w.chars());
        }
    }
    let alphabet_size = alphabet.len() + 1;

    let char_models = lexicons
        .iter()
        .map(|lex| {
            let mut counts: BTreeMap<String, BTreeMap<char, u64>> = BTreeMap::new();
            for w in lex {
                let chars = padded(w);
                for i in 2..chars.len() {
                    let c = chars[i];
                    for n in 0..3 {
                        let ctx: String = chars[i - n..i].iter().collect();
                        *counts.entry(ctx).or_default().entry(c).or_default() += 1;
                    }
                }
            }
            let contexts = counts
                .into_iter()
                .map(|(ctx, dist)| {
                    let total: u64 = dist.values().sum();
                    let denom = (total + alphabet_size as u64) as f64;
                    let seen = dist
                        .into_iter()
                        .map(|(c, k)| (c, libm::log((k + 1) as f64 / denom)))
                        .collect();
                    (ctx, ContextDist { seen, unseen: libm::log(1.0 / denom) })
                })
                .collect();
            CharModel { contexts }
        })
        .collect();

    Ok(LangModel {
        version: MODEL_VERSION,
        languages: order.iter().map(|&i| seed_corpora[i].0).collect(),
        alphabet_size,
        char_models,
        lexicons,
        ambiguity_margin: config.ambiguity_margin,
        weights: config.weights,
        resolve_from_neighbours: config.resolve_from_neighbours,
    })
}

impl CharModel {
    fn prob(&self, ctx: &str, c: char, alphabet_size: usize) -> f64 {
        match self.contexts.get(ctx) {
            Some(dist) => libm::exp(dist.seen.get(&c).copied().unwrap_or(dist.unseen)),
            None => 1.0 / alphabet_size as f64,
        }
    }
}

impl LangModel {
    /// Log-likelihood of the (lowercased) word under each language, in
    /// `self.languages` order.
    pub fn log_likelihoods(&self, word: &str) -> Vec<f64> {
        let chars = padded(&normalize(word));
        self.char_models
            .iter()
            .map(|m| {
                let mut total = 0.0;
                let mut ctx = String::new();
                for i in 2..chars.len() {
                    let c = chars[i];
                    let mut p = 0.0;
                    for n in 0..3 {
                        ctx.clear();
                        ctx.extend(&chars[i - n..i]);
                        p += self.weights[n] * m.prob(&ctx, c, self.alphabet_size);
                    }
                    total += libm::log(p);
                }
                total
            })
            .collect()
    }

    /// Returns the best language and its log-odds over the runner-up.
    ///
    /// An exact lexicon match in a single language returns that language with
    /// infinite log-odds. Ties go to the earlier language in ENG, SPA, HIN
    /// order.
    pub fn classify_word(&self, word: &str) -> (LangTag, f64) {
        let w = normalize(word);
        if w.is_empty() || self.languages.is_empty() {
            return (LangTag::Ambiguous, 0.0);
        }
        let hits: Vec<usize> = (0..self.languages.len()).filter(|&i| self.lexicons[i].contains(&w)).collect();
        if hits.len() == 1 {
            return (self.languages[hits[0]], f64::INFINITY);
        }
        let candidates: Vec<usize> = if hits.is_empty() { (0..self.languages.len()).collect() } else { hits };
        if candidates.len() == 1 {
            return (self.languages[candidates[0]], f64::INFINITY);
        }
        let scores = self.log_likelihoods(&w);
        let mut ranked: Vec<(f64, LangTag)> = candidates.iter().map(|&i| (scores[i], self.languages[i])).collect();
        // languages are stored in tie-break order, so a stable sort on score suffices
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        let margin = ranked[0].0 - ranked[1].0;
        if margin < self.ambiguity_margin {
            (LangTag::Ambiguous, margin)
        } else {
            (ranked[0].1, margin)
        }
    }

    /// Tags every non-explicit token of an utterance.
    ///
    /// Punctuation and purely numeric tokens become `Other`. When
    /// `resolve_from_neighbours` is set, a word left ambiguous takes the
    /// language of its nearest decided neighbours if they agree (or if only
    /// one side has a decided word); at a language boundary it stays
    /// ambiguous.
    pub fn tag_utterance(&self, utt: &Utterance) -> Utterance {
        let mut tokens: Vec<Token> = utt
            .tokens
            .iter()
            .map(|t| {
                if t.explicit {
                    return t.clone();
                }
                let lang = if is_punctuation(&t.text) || t.text.chars().all(|c| c.is_numeric()) {
                    LangTag::Other
                } else {
                    self.classify_word(&t.text).0
                };
                Token::new(t.text.clone(), lang, false)
            })
            .collect();

        if self.resolve_from_neighbours {
            let decided: Vec<Option<LangTag>> =
                tokens.iter().map(|t| t.lang.is_language().then_some(t.lang)).collect();
            for i in 0..tokens.len() {
                if tokens[i].explicit || tokens[i].lang != LangTag::Ambiguous {
                    continue;
                }
                let left = decided[..i].iter().rev().find_map(|l| *l);
                let right = decided[i + 1..].iter().find_map(|l| *l);
                let resolved = match (left, right) {
                    (Some(l), Some(r)) if l == r => Some(l),
                    (Some(l), None) => Some(l),
                    (None, Some(r)) => Some(r),
                    _ => None,
                };
                if let Some(lang) = resolved.filter(|l| self.languages.contains(l)) {
                    tokens[i].lang = lang;
                }
            }
        }
        Utterance { line_no: utt.line_no, speaker: utt.speaker.clone(), tokens }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn tiny(config: &TrainConfig) -> LangModel {
        train_langmodel(
            &[(LangTag::Eng, vec!["aaa".to_string()]), (LangTag::Spa, vec!["bbb".to_string()])],
            config,
        )
        .unwrap()
    }

    fn small_config() -> TrainConfig {
        TrainConfig { min_seed_words: 1, ..TrainConfig::default() }
    }

    #[test]
    fn separable_single_word_corpora() {
        let m = tiny(&small_config());
        assert_eq!(m.classify_word("aaa").0, LangTag::Eng);
        assert_eq!(m.classify_word("bbb").0, LangTag::Spa);
        // off-lexicon words fall back to the n-grams
        assert_eq!(m.classify_word("aaaa").0, LangTag::Eng);
    }

    #[test]
    fn empty_seed_is_rejected() {
        let err = train_langmodel(
            &[(LangTag::Eng, seeds::words(seeds::ENGLISH)), (LangTag::Spa, vec![])],
            &TrainConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err, LangIdError::InsufficientSeed(LangTag::Spa));
    }

    #[test]
    fn below_threshold_is_rejected() {
        let err = train_langmodel(&[(LangTag::Eng, vec!["a".into(); 999])], &TrainConfig::default()).unwrap_err();
        assert_eq!(err, LangIdError::InsufficientSeed(LangTag::Eng));
    }

    #[test]
    fn negative_margin_is_rejected() {
        let cfg = TrainConfig { ambiguity_margin: -0.1, ..small_config() };
        assert_eq!(
            train_langmodel(&[(LangTag::Eng, vec!["a".into()])], &cfg).unwrap_err(),
            LangIdError::BadMargin(-0.1)
        );
    }

    #[test]
    fn shared_word_with_small_margin_is_ambiguous() {
        let m = train_langmodel(
            &[(LangTag::Eng, vec!["casa".into()]), (LangTag::Spa, vec!["casa".into()])],
            &small_config(),
        )
        .unwrap();
        let (tag, margin) = m.classify_word("casa");
        assert_eq!(tag, LangTag::Ambiguous);
        assert_eq!(margin, 0.0);
    }

    #[test]
    fn context_distributions_sum_to_one() {
        let m = train_langmodel(&seeds::all(), &TrainConfig::default()).unwrap();
        for cm in &m.char_models {
            for (ctx, dist) in &cm.contexts {
                let unseen_slots = m.alphabet_size - dist.seen.len();
                let total: f64 = dist.seen.values().map(|lp| libm::exp(*lp)).sum::<f64>()
                    + unseen_slots as f64 * libm::exp(dist.unseen);
                assert!((total - 1.0).abs() < 1e-9, "context {ctx:?} sums to {total}");
            }
        }
    }

    fn utt(words: &[&str]) -> Utterance {
        Utterance { line_no: 1, speaker: "MAR".into(), tokens: words.iter().map(|w| Token::unmarked(*w)).collect() }
    }

    #[test]
    fn explicit_tokens_are_untouched() {
        let m = tiny(&small_config());
        let u = Utterance {
            line_no: 3,
            speaker: "MAR".into(),
            tokens: vec![Token::new("aaa", LangTag::Spa, true), Token::new("bbb", LangTag::Hin, true)],
        };
        assert_eq!(m.tag_utterance(&u), u);
    }

    #[test]
    fn punctuation_becomes_other() {
        let m = tiny(&small_config());
        let tagged = m.tag_utterance(&utt(&["!"]));
        assert_eq!(tagged.tokens[0].lang, LangTag::Other);
        assert!(!tagged.tokens[0].explicit);
    }

    #[test]
    fn boundary_ambiguity_survives_neighbour_resolution() {
        let m = train_langmodel(
            &[(LangTag::Eng, vec!["aaa".into(), "zzz".into()]), (LangTag::Spa, vec!["bbb".into(), "zzz".into()])],
            &small_config(),
        )
        .unwrap();
        let tags: Vec<LangTag> = m.tag_utterance(&utt(&["aaa", "zzz", "bbb"])).tokens.iter().map(|t| t.lang).collect();
        assert_eq!(tags, vec![LangTag::Eng, LangTag::Ambiguous, LangTag::Spa]);
        let tags: Vec<LangTag> = m.tag_utterance(&utt(&["bbb", "zzz", "bbb"])).tokens.iter().map(|t| t.lang).collect();
        assert_eq!(tags, vec![LangTag::Spa, LangTag::Spa, LangTag::Spa]);
    }
}
