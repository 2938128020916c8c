//! Code-switch detection and context windows.
//!
//! A switch is a change between two decided languages (ENG, SPA, HIN) inside
//! a speaker's turn. Ambiguous and `Other` tokens are transparent. Turns are
//! runs of consecutive utterances by the same speaker; language carried over
//! from the previous utterance of the turn can trigger a switch on the first
//! decided token, but a change of speaker never does.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::lang::LangTag;
use crate::schema::LabelSet;
use crate::transcript::{CorpusStats, Transcript, Utterance};

pub const DEFAULT_WINDOW: usize = 3;

/// A language change inside one utterance: `token` is the first token of
/// the new language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalSwitch {
    pub token: usize,
    pub from: LangTag,
    pub to: LangTag,
}

/// A switch point inside an instance's context window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchPoint {
    /// Offset into `SwitchInstance::context`.
    pub utterance: usize,
    pub token: usize,
    pub from: LangTag,
    pub to: LangTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchInstance {
    pub id: String,
    pub transcript_id: String,
    /// Utterance index of the focus line within its transcript.
    pub focus_line: usize,
    /// Utterance index of the first context line.
    pub context_start: usize,
    pub context: Vec<Utterance>,
    pub switch_points: Vec<SwitchPoint>,
    /// `SPK: tokens` for each context line, space-joined.
    pub text: String,
    /// Gold labels, when the instance file carries them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<LabelSet>,
    /// Id of the instance this one was derived from (translate-train).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
}

impl SwitchInstance {
    pub fn focus(&self) -> &Utterance {
        &self.context[self.focus_line - self.context_start]
    }

    pub fn focus_offset(&self) -> usize {
        self.focus_line - self.context_start
    }

    /// Recomputes `text` from the context lines.
    pub fn refresh_text(&mut self) {
        self.text = flatten(&self.context);
    }
}

pub fn flatten(context: &[Utterance]) -> String {
    let mut out = String::new();
    for (i, u) in context.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&u.speaker);
        out.push_str(": ");
        out.push_str(&u.surface());
    }
    out
}

/// Language changes inside one tagged utterance. `prev_lang` is the last
/// decided language earlier in the same turn, if any.
pub fn find_switch_points(utt: &Utterance, prev_lang: Option<LangTag>) -> Vec<LocalSwitch> {
    let mut points = Vec::new();
    let mut current = prev_lang.filter(|l| l.is_language());
    for (i, token) in utt.tokens.iter().enumerate() {
        if !token.lang.is_language() {
            continue;
        }
        if let Some(from) = current {
            if from != token.lang {
                points.push(LocalSwitch { token: i, from, to: token.lang });
            }
        }
        current = Some(token.lang);
    }
    points
}

fn last_language(utt: &Utterance) -> Option<LangTag> {
    utt.tokens.iter().rev().map(|t| t.lang).find(|l| l.is_language())
}

/// Switch points of every utterance, with the per-turn carry-over applied.
pub fn transcript_switch_points(transcript: &Transcript) -> Vec<Vec<LocalSwitch>> {
    let utts = transcript.utterances();
    let mut out = Vec::with_capacity(utts.len());
    let mut carried: Option<LangTag> = None;
    for (i, u) in utts.iter().enumerate() {
        if i == 0 || utts[i - 1].speaker != u.speaker {
            carried = None;
        }
        out.push(find_switch_points(u, carried));
        if let Some(l) = last_language(u) {
            carried = Some(l);
        }
    }
    out
}

/// One instance per utterance that contains a switch point, with up to
/// `window` utterances on each side.
pub fn extract_instances(transcript: &Transcript, window: usize) -> Vec<SwitchInstance> {
    let utts = transcript.utterances();
    let points = transcript_switch_points(transcript);
    let mut out = Vec::new();
    for (focus, local) in points.iter().enumerate() {
        if local.is_empty() {
            continue;
        }
        let start = focus.saturating_sub(window);
        let end = (focus + window).min(utts.len() - 1);
        let context: Vec<Utterance> = utts[start..=end].to_vec();
        let switch_points = (start..=end)
            .flat_map(|u| {
                points[u].iter().map(move |p| SwitchPoint { utterance: u - start, token: p.token, from: p.from, to: p.to })
            })
            .collect();
        out.push(SwitchInstance {
            id: format!("{}-u{:06}", transcript.id(), focus),
            transcript_id: transcript.id().into(),
            focus_line: focus,
            context_start: start,
            text: flatten(&context),
            context,
            switch_points,
            labels: None,
            source_id: None,
        });
    }
    out
}

/// Utterance and token counts over the focus utterances of `instances`.
pub fn focus_stats(instances: &[SwitchInstance]) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for inst in instances {
        stats.add_utterance(inst.focus());
    }
    stats
}
