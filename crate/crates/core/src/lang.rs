use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Language of a single token.
///
/// `Ambiguous` means no decision was made (or the evidence was balanced);
/// `Other` covers punctuation and languages outside the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LangTag {
    Eng,
    Spa,
    Hin,
    Ambiguous,
    Other,
}

impl LangTag {
    /// Languages a model can decide between, in tie-breaking order.
    pub const DECIDABLE: [LangTag; 3] = [LangTag::Eng, LangTag::Spa, LangTag::Hin];

    pub fn as_str(self) -> &'static str {
        match self {
            LangTag::Eng => "ENG",
            LangTag::Spa => "SPA",
            LangTag::Hin => "HIN",
            LangTag::Ambiguous => "AMBIGUOUS",
            LangTag::Other => "OTHER",
        }
    }

    /// True for ENG, SPA and HIN.
    pub fn is_language(self) -> bool {
        !matches!(self, LangTag::Ambiguous | LangTag::Other)
    }

    /// Maps a CHAT language code (`eng`, `spa`, `hin`, `eng+spa`, ...).
    ///
    /// Mixed codes such as `eng+spa` are ambiguous by construction; codes for
    /// languages the toolkit does not model map to `Other`.
    pub fn from_chat_code(code: &str) -> LangTag {
        if code.contains('+') || code.contains('&') {
            return LangTag::Ambiguous;
        }
        match code.to_ascii_lowercase().as_str() {
            "eng" | "en" => LangTag::Eng,
            "spa" | "es" => LangTag::Spa,
            "hin" | "hi" => LangTag::Hin,
            "amb" | "ambiguous" => LangTag::Ambiguous,
            _ => LangTag::Other,
        }
    }

    /// Inverse of [`LangTag::from_chat_code`] for rendering clean transcripts.
    pub fn chat_code(self) -> &'static str {
        match self {
            LangTag::Eng => "eng",
            LangTag::Spa => "spa",
            LangTag::Hin => "hin",
            LangTag::Ambiguous => "eng+spa",
            LangTag::Other => "other",
        }
    }

    /// The other half of a bilingual pair, used for bare `@s` markers.
    pub fn partner(self, pair: (LangTag, LangTag)) -> LangTag {
        if self == pair.0 {
            pair.1
        } else {
            pair.0
        }
    }
}

impl fmt::Display for LangTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown language tag `{0}`")]
pub struct UnknownLangTag(pub alloc::string::String);

impl FromStr for LangTag {
    type Err = UnknownLangTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ENG" => Ok(LangTag::Eng),
            "SPA" => Ok(LangTag::Spa),
            "HIN" => Ok(LangTag::Hin),
            "AMBIGUOUS" => Ok(LangTag::Ambiguous),
            "OTHER" => Ok(LangTag::Other),
            _ => Err(UnknownLangTag(s.into())),
        }
    }
}
