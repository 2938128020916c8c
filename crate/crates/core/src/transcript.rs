//! Parsed conversation structure and corpus-level counts.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::lang::LangTag;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub lang: LangTag,
    /// Set only when a transcript marker assigned `lang`.
    pub explicit: bool,
}

impl Token {
    pub fn new(text: impl Into<String>, lang: LangTag, explicit: bool) -> Self {
        Token { text: text.into(), lang, explicit }
    }

    pub fn unmarked(text: impl Into<String>) -> Self {
        Token::new(text, LangTag::Ambiguous, false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    /// Line of the speaker tier in the source file (1-based).
    pub line_no: usize,
    pub speaker: String,
    pub tokens: Vec<Token>,
}

impl Utterance {
    /// Tokens joined by single spaces.
    pub fn surface(&self) -> String {
        join_tokens(&self.tokens)
    }
}

pub(crate) fn join_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.text);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranscriptError {
    #[error("transcript id is empty")]
    EmptyId,
    #[error("transcript has no utterances")]
    Empty,
    #[error("utterance at line {line_no} has an invalid speaker code `{speaker}`")]
    BadSpeaker { line_no: usize, speaker: String },
    #[error("utterance at line {0} has no tokens")]
    NoTokens(usize),
}

/// An ordered, validated list of utterances. Utterance indices are the
/// positions in [`Transcript::utterances`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    id: String,
    utterances: Vec<Utterance>,
}

pub fn is_valid_speaker(speaker: &str) -> bool {
    !speaker.is_empty()
        && speaker
            .chars()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_' || c == '-')
}

impl Transcript {
    pub fn new(id: impl Into<String>, utterances: Vec<Utterance>) -> Result<Self, TranscriptError> {
        let id = id.into();
        if id.is_empty() {
            return Err(TranscriptError::EmptyId);
        }
        if utterances.is_empty() {
            return Err(TranscriptError::Empty);
        }
        for u in &utterances {
            if !is_valid_speaker(&u.speaker) {
                return Err(TranscriptError::BadSpeaker { line_no: u.line_no, speaker: u.speaker.clone() });
            }
            if u.tokens.is_empty() {
                return Err(TranscriptError::NoTokens(u.line_no));
            }
        }
        Ok(Transcript { id, utterances })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    /// Applies `f` to every utterance, keeping the id.
    ///
    /// `f` must not empty an utterance or break its speaker code.
    pub fn map_utterances(&self, mut f: impl FnMut(&Utterance) -> Utterance) -> Result<Self, TranscriptError> {
        Transcript::new(self.id.clone(), self.utterances.iter().map(&mut f).collect())
    }

    pub fn token_count(&self) -> usize {
        self.utterances.iter().map(|u| u.tokens.len()).sum()
    }

    /// One corpus JSONL record per utterance.
    pub fn to_records(&self) -> Vec<CorpusRecord> {
        self.utterances
            .iter()
            .map(|u| CorpusRecord {
                transcript: self.id.clone(),
                line_no: u.line_no,
                speaker: u.speaker.clone(),
                tokens: u.tokens.clone(),
            })
            .collect()
    }

    /// Groups consecutive records with the same transcript id.
    pub fn from_records(records: impl IntoIterator<Item = CorpusRecord>) -> Result<Vec<Transcript>, TranscriptError> {
        let mut out = Vec::new();
        let mut current: Option<(String, Vec<Utterance>)> = None;
        for r in records {
            let utt = Utterance { line_no: r.line_no, speaker: r.speaker, tokens: r.tokens };
            match &mut current {
                Some((id, utts)) if *id == r.transcript => utts.push(utt),
                _ => {
                    if let Some((id, utts)) = current.take() {
                        out.push(Transcript::new(id, utts)?);
                    }
                    current = Some((r.transcript, alloc::vec![utt]));
                }
            }
        }
        if let Some((id, utts)) = current {
            out.push(Transcript::new(id, utts)?);
        }
        Ok(out)
    }

    /// Renders the transcript back to clean CHAT text. Explicit tags are
    /// written as `@s:<code>` word suffixes so that re-parsing reproduces the
    /// same structure.
    pub fn render_chat(&self) -> String {
        let mut out = String::from("@Begin\n");
        for u in &self.utterances {
            let _ = write!(out, "*{}:", u.speaker);
            for t in &u.tokens {
                out.push(' ');
                out.push_str(&t.text);
                if t.explicit {
                    out.push_str("@s:");
                    out.push_str(t.lang.chat_code());
                }
            }
            out.push('\n');
        }
        out.push_str("@End\n");
        out
    }
}

/// One line of the canonical corpus JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub transcript: String,
    pub line_no: usize,
    pub speaker: String,
    pub tokens: Vec<Token>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub utterances: usize,
    pub eng: usize,
    pub spa: usize,
    pub hin: usize,
    pub ambiguous: usize,
    pub other: usize,
}

impl CorpusStats {
    pub fn add_utterance(&mut self, utt: &Utterance) {
        self.utterances += 1;
        for t in &utt.tokens {
            match t.lang {
                LangTag::Eng => self.eng += 1,
                LangTag::Spa => self.spa += 1,
                LangTag::Hin => self.hin += 1,
                LangTag::Ambiguous => self.ambiguous += 1,
                LangTag::Other => self.other += 1,
            }
        }
    }

    pub fn total_tokens(&self) -> usize {
        self.eng + self.spa + self.hin + self.ambiguous + self.other
    }
}

/// Counts utterances and tokens per language over every utterance of every
/// transcript. Run it over extracted focus utterances (see
/// [`crate::switches::focus_stats`]) to get per-switch statistics.
pub fn corpus_stats(transcripts: &[Transcript]) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for t in transcripts {
        for u in t.utterances() {
            stats.add_utterance(u);
        }
    }
    stats
}
