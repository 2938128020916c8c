//! Translate-train: rewrite the Spanish spans of Spanish-English instances
//! as (romanized) Hindi, leaving English spans untouched.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::lang::LangTag;
use crate::romanize::{has_devanagari, romanize};
use crate::switches::{find_switch_points, SwitchInstance, SwitchPoint};
use crate::text::{is_punctuation, tokenize};
use crate::transcript::{join_tokens, Token, Utterance};

/// A maximal run of tokens in one language. Ambiguous and `Other` tokens
/// join the preceding span (or the following one at utterance start).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LangSpan {
    pub lang: LangTag,
    pub tokens: Range<usize>,
    /// Byte range in [`Utterance::surface`].
    pub char_range: Range<usize>,
}

/// Tokens of `span`, space-joined.
pub fn span_text(utt: &Utterance, span: &LangSpan) -> String {
    join_tokens(&utt.tokens[span.tokens.clone()])
}

pub fn segment_spans(utt: &Utterance) -> Vec<LangSpan> {
    let mut spans: Vec<(LangTag, Range<usize>)> = Vec::new();
    let mut leading = 0;
    for (i, t) in utt.tokens.iter().enumerate() {
        if !t.lang.is_language() {
            match spans.last_mut() {
                Some(last) => last.1.end = i + 1,
                None => leading = i + 1,
            }
            continue;
        }
        match spans.last_mut() {
            Some(last) if last.0 == t.lang => last.1.end = i + 1,
            Some(_) => spans.push((t.lang, i..i + 1)),
            None => spans.push((t.lang, 0..i + 1)),
        }
    }
    if spans.is_empty() && leading > 0 {
        spans.push((LangTag::Ambiguous, 0..leading));
    }

    // byte offsets of each token in the space-joined surface
    let mut starts = Vec::with_capacity(utt.tokens.len() + 1);
    let mut pos = 0;
    for t in &utt.tokens {
        starts.push(pos);
        pos += t.text.len() + 1;
    }
    spans
        .into_iter()
        .map(|(lang, tokens)| {
            let begin = starts[tokens.start];
            let last = &utt.tokens[tokens.end - 1];
            let end = starts[tokens.end - 1] + last.text.len();
            LangSpan { lang, tokens, char_range: begin..end }
        })
        .collect()
}

/// Text of every span in `lang`, in order.
pub fn spans_in(utt: &Utterance, lang: LangTag) -> Vec<String> {
    segment_spans(utt).iter().filter(|s| s.lang == lang).map(|s| span_text(utt, s)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Translation {
    pub text: String,
    /// Served from a cache without contacting the backend.
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TranslateError(pub String);

/// A translation backend. Implementations must be deterministic for the
/// lifetime of their cache.
pub trait Translator {
    fn translate(&self, text: &str, source: LangTag, target: LangTag) -> Result<Translation, TranslateError>;
}

impl<T: Translator + ?Sized> Translator for &T {
    fn translate(&self, text: &str, source: LangTag, target: LangTag) -> Result<Translation, TranslateError> {
        (**self).translate(text, source, target)
    }
}

impl<T: Translator + ?Sized> Translator for alloc::boxed::Box<T> {
    fn translate(&self, text: &str, source: LangTag, target: LangTag) -> Result<Translation, TranslateError> {
        (**self).translate(text, source, target)
    }
}

/// Returns its input. Useful for checking the plumbing.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn translate(&self, text: &str, _: LangTag, _: LangTag) -> Result<Translation, TranslateError> {
        Ok(Translation { text: text.to_owned(), cached: false })
    }
}

/// Uppercases its input, making translated spans easy to spot in tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct UppercaseTranslator;

impl Translator for UppercaseTranslator {
    fn translate(&self, text: &str, _: LangTag, _: LangTag) -> Result<Translation, TranslateError> {
        Ok(Translation { text: text.to_uppercase(), cached: false })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferOptions {
    pub source: LangTag,
    pub target: LangTag,
    /// Romanize Devanagari client output.
    pub romanize: bool,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions { source: LangTag::Spa, target: LangTag::Hin, romanize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("translating `{span}` in instance `{instance_id}` failed: {cause}")]
pub struct TransferFailure {
    pub instance_id: String,
    pub span: String,
    pub cause: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanCounts {
    pub translated: usize,
    pub cache_hits: usize,
}

fn transfer_utterance(
    utt: &Utterance,
    client: &dyn Translator,
    opts: &TransferOptions,
    counts: &mut SpanCounts,
) -> Result<Utterance, (String, TranslateError)> {
    let mut tokens = Vec::with_capacity(utt.tokens.len());
    for span in segment_spans(utt) {
        if span.lang != opts.source {
            tokens.extend_from_slice(&utt.tokens[span.tokens.clone()]);
            continue;
        }
        let text = span_text(utt, &span);
        let out = client.translate(&text, opts.source, opts.target).map_err(|e| (text.clone(), e))?;
        counts.translated += 1;
        counts.cache_hits += usize::from(out.cached);
        let rendered = if opts.romanize && has_devanagari(&out.text) { romanize(&out.text) } else { out.text };
        tokens.extend(tokenize(&rendered).into_iter().map(|w| {
            let lang = if is_punctuation(&w) { LangTag::Other } else { opts.target };
            Token::new(w, lang, false)
        }));
    }
    Ok(Utterance { line_no: utt.line_no, speaker: utt.speaker.clone(), tokens })
}

fn recompute_points(context: &[Utterance]) -> Vec<SwitchPoint> {
    let mut points = Vec::new();
    let mut carried = None;
    for (i, u) in context.iter().enumerate() {
        if i == 0 || context[i - 1].speaker != u.speaker {
            carried = None;
        }
        points.extend(
            find_switch_points(u, carried)
                .into_iter()
                .map(|p| SwitchPoint { utterance: i, token: p.token, from: p.from, to: p.to }),
        );
        if let Some(l) = u.tokens.iter().rev().map(|t| t.lang).find(|l| l.is_language()) {
            carried = Some(l);
        }
    }
    points
}

/// Translates every source-language span of every context line.
///
/// Labels carry over unchanged; the result records the source id and gets
/// a derived id of its own.
pub fn transfer_instance(
    instance: &SwitchInstance,
    client: &dyn Translator,
    opts: &TransferOptions,
) -> Result<(SwitchInstance, SpanCounts), TransferFailure> {
    let mut counts = SpanCounts::default();
    let context = instance
        .context
        .iter()
        .map(|u| transfer_utterance(u, client, opts, &mut counts))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|(span, e)| TransferFailure { instance_id: instance.id.clone(), span, cause: e.0 })?;
    let mut out = SwitchInstance {
        id: format!("{}~{}", instance.id, opts.target.chat_code()),
        transcript_id: instance.transcript_id.clone(),
        focus_line: instance.focus_line,
        context_start: instance.context_start,
        switch_points: recompute_points(&context),
        context,
        text: String::new(),
        labels: instance.labels,
        source_id: Some(instance.id.clone()),
    };
    out.refresh_text();
    Ok((out, counts))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferReport {
    pub total: usize,
    pub transferred: usize,
    pub failures: Vec<TransferFailure>,
    pub spans_translated: usize,
    pub cache_hits: usize,
}

impl TransferReport {
    /// Folds per-instance results (in source order) into outputs and a report.
    pub fn collect(
        results: impl IntoIterator<Item = Result<(SwitchInstance, SpanCounts), TransferFailure>>,
    ) -> (Vec<SwitchInstance>, TransferReport) {
        let mut out = Vec::new();
        let mut report = TransferReport::default();
        for r in results {
            report.total += 1;
            match r {
                Ok((inst, counts)) => {
                    report.transferred += 1;
                    report.spans_translated += counts.translated;
                    report.cache_hits += counts.cache_hits;
                    out.push(inst);
                }
                Err(failure) => {
                    log::warn!("{failure}");
                    report.failures.push(failure);
                }
            }
        }
        (out, report)
    }

    pub fn reconciles(&self) -> bool {
        self.transferred + self.failures.len() == self.total
    }
}

/// Sequential corpus transfer. Failed instances are skipped and reported.
pub fn transfer_corpus(
    instances: &[SwitchInstance],
    client: &dyn Translator,
    opts: &TransferOptions,
) -> (Vec<SwitchInstance>, TransferReport) {
    TransferReport::collect(instances.iter().map(|inst| transfer_instance(inst, client, opts)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use LangTag::*;

    fn utt(words: &[(&str, LangTag)]) -> Utterance {
        Utterance {
            line_no: 1,
            speaker: "MAR".into(),
            tokens: words.iter().map(|&(w, l)| Token::new(w, l, false)).collect(),
        }
    }

    fn borrowing() -> Utterance {
        utt(&[
            ("Mi", Spa),
            ("amiga", Spa),
            ("de", Spa),
            ("high", Eng),
            ("school", Eng),
            ("va", Spa),
            ("a", Spa),
            ("casarse", Spa),
            ("en", Spa),
            ("dos", Spa),
            ("semanas", Spa),
        ])
    }

    #[test]
    fn borrowing_sentence_spans() {
        let u = borrowing();
        let spans = segment_spans(&u);
        let texts: Vec<(LangTag, String)> = spans.iter().map(|s| (s.lang, span_text(&u, s))).collect();
        assert_eq!(
            texts,
            vec![
                (Spa, "Mi amiga de".into()),
                (Eng, "high school".into()),
                (Spa, "va a casarse en dos semanas".into())
            ]
        );
        let surface = u.surface();
        for s in &spans {
            assert_eq!(&surface[s.char_range.clone()], span_text(&u, s));
        }
    }

    #[test]
    fn monolingual_is_one_span() {
        let u = utt(&[("I", Eng), ("like", Eng), ("it", Eng), (".", Other)]);
        let spans = segment_spans(&u);
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].lang, Eng);
        assert_eq!(spans[0].tokens, 0..4);
    }

    #[test]
    fn ambiguous_absorption() {
        let u = utt(&[("yo", Spa), ("eh", Ambiguous), ("go", Eng)]);
        let spans = segment_spans(&u);
        assert_eq!(spans.iter().map(|s| (s.lang, s.tokens.clone())).collect::<Vec<_>>(), vec![(Spa, 0..2), (Eng, 2..3)]);
        let u = utt(&[("eh", Ambiguous), ("go", Eng), ("yo", Spa)]);
        let spans = segment_spans(&u);
        assert_eq!(spans.iter().map(|s| (s.lang, s.tokens.clone())).collect::<Vec<_>>(), vec![(Eng, 0..2), (Spa, 2..3)]);
    }

    fn instance(context: Vec<Utterance>) -> SwitchInstance {
        let mut inst = SwitchInstance {
            id: "t-u000000".into(),
            transcript_id: "t".into(),
            focus_line: 0,
            context_start: 0,
            switch_points: recompute_points(&context),
            context,
            text: String::new(),
            labels: Some(crate::schema::LabelSet::single(crate::schema::LabelKey::Borrowing)),
            source_id: None,
        };
        inst.refresh_text();
        inst
    }

    #[test]
    fn uppercase_client_keeps_english() {
        let (out, counts) = transfer_instance(&instance(vec![borrowing()]), &UppercaseTranslator, &TransferOptions::default()).unwrap();
        assert_eq!(out.context[0].surface(), "MI AMIGA DE high school VA A CASARSE EN DOS SEMANAS");
        assert_eq!(counts.translated, 2);
        assert_eq!(out.labels, Some(crate::schema::LabelSet::single(crate::schema::LabelKey::Borrowing)));
        assert_eq!(out.source_id.as_deref(), Some("t-u000000"));
        let tags: Vec<LangTag> = out.context[0].tokens.iter().map(|t| t.lang).collect();
        assert_eq!(tags, vec![Hin, Hin, Hin, Eng, Eng, Hin, Hin, Hin, Hin, Hin, Hin]);
        assert_eq!(out.switch_points.len(), 2);
    }

    #[test]
    fn identity_client_retags_only() {
        let src = instance(vec![borrowing()]);
        let (out, _) = transfer_instance(&src, &IdentityTranslator, &TransferOptions::default()).unwrap();
        assert_eq!(out.text, src.text);
        assert!(out.context[0].tokens.iter().all(|t| t.lang != Spa));
    }

    struct Devanagari;
    impl Translator for Devanagari {
        fn translate(&self, _: &str, _: LangTag, _: LangTag) -> Result<Translation, TranslateError> {
            Ok(Translation { text: "कभी कभी,".into(), cached: false })
        }
    }

    #[test]
    fn devanagari_output_is_romanized() {
        let u = utt(&[("A", Spa), ("veces", Spa), (",", Other), ("sometimes", Eng), (",", Other), ("I", Eng)]);
        let (out, _) = transfer_instance(&instance(vec![u]), &Devanagari, &TransferOptions::default()).unwrap();
        assert_eq!(out.context[0].surface(), "kabhee kabhee , sometimes , I");
    }

    struct Failing;
    impl Translator for Failing {
        fn translate(&self, text: &str, _: LangTag, _: LangTag) -> Result<Translation, TranslateError> {
            if text.contains("dos") {
                Err(TranslateError("quota exceeded".into()))
            } else {
                Ok(Translation { text: text.into(), cached: false })
            }
        }
    }

    #[test]
    fn failures_are_reported_not_dropped() {
        let ok = instance(vec![utt(&[("hola", Spa), ("there", Eng)])]);
        let bad = instance(vec![borrowing()]);
        let (out, report) = transfer_corpus(&[ok, bad], &Failing, &TransferOptions::default());
        assert_eq!(out.len(), 1);
        assert_eq!(report.total, 2);
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].span, "va a casarse en dos semanas");
        assert!(report.reconciles());
    }

    #[test]
    fn empty_corpus() {
        let (out, report) = transfer_corpus(&[], &IdentityTranslator, &TransferOptions::default());
        assert!(out.is_empty());
        assert_eq!(report, TransferReport::default());
    }
}
