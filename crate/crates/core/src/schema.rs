//! The 11-label motivation scheme.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::de::{self, MapAccess, SeqAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Bumped whenever labels are added, removed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

pub const LABEL_COUNT: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKey {
    ChangeTopic,
    Borrowing,
    Joke,
    Quote,
    Translate,
    Command,
    Filler,
    Exasperation,
    Happiness,
    ProperNoun,
    Surprise,
}

impl LabelKey {
    /// Schema order.
    pub const ALL: [LabelKey; LABEL_COUNT] = [
        LabelKey::ChangeTopic,
        LabelKey::Borrowing,
        LabelKey::Joke,
        LabelKey::Quote,
        LabelKey::Translate,
        LabelKey::Command,
        LabelKey::Filler,
        LabelKey::Exasperation,
        LabelKey::Happiness,
        LabelKey::ProperNoun,
        LabelKey::Surprise,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelKey::ChangeTopic => "change_topic",
            LabelKey::Borrowing => "borrowing",
            LabelKey::Joke => "joke",
            LabelKey::Quote => "quote",
            LabelKey::Translate => "translate",
            LabelKey::Command => "command",
            LabelKey::Filler => "filler",
            LabelKey::Exasperation => "exasperation",
            LabelKey::Happiness => "happiness",
            LabelKey::ProperNoun => "proper_noun",
            LabelKey::Surprise => "surprise",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            LabelKey::ChangeTopic => "Change topic",
            LabelKey::Borrowing => "Borrowing",
            LabelKey::Joke => "Joke",
            LabelKey::Quote => "Quote",
            LabelKey::Translate => "Translate",
            LabelKey::Command => "Command",
            LabelKey::Filler => "Filler",
            LabelKey::Exasperation => "Exasperation",
            LabelKey::Happiness => "Happiness",
            LabelKey::ProperNoun => "Proper noun",
            LabelKey::Surprise => "Surprise",
        }
    }
}

impl fmt::Display for LabelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for LabelKey {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LabelKey::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| UnknownLabel(s.into()))
    }
}

/// One schema entry as shipped in `schema.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelDefinition {
    pub key: LabelKey,
    pub name: String,
    pub definition: String,
    pub example: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSchema {
    pub version: u32,
    pub labels: Vec<LabelDefinition>,
}

const DEFINITIONS: [(&str, &str); LABEL_COUNT] = [
    (
        "The switch opens a new angle on the conversation: a different viewpoint, a shift in tone, or a clarification.",
        "I'm not ready at all, ¿y qué tal tú?",
    ),
    (
        "A short word or phrase from the other language is slotted in before the speaker returns to the original language.",
        "Mi amiga de high school va a casarse en dos semanas.",
    ),
    (
        "The other language carries a joke or a sarcastic remark.",
        "You're making such a big deal about it, como si murieran las personas en la calle.",
    ),
    (
        "Someone else's words are reproduced in the language they were said in.",
        "So my Spanish teacher said, \"Oye, necesitas estudiar más.\"",
    ),
    (
        "A statement or phrase is repeated in the other language, for emphasis or clarity.",
        "A veces, sometimes, I like to be by myself.",
    ),
    (
        "The switch delivers an order or imperative aimed at the listener.",
        "Él no sabe lo que está diciendo, just don't listen to him.",
    ),
    (
        "A filler, short interjection or noise from the other language.",
        "Y yo me callé, you know, porque no quería ofender a nadie.",
    ),
    (
        "The switch voices a complaint, anger or frustration.",
        "Ay, cómo me sigues molestando, I should just get up and leave!",
    ),
    (
        "The switch carries a compliment or a positive exclamation.",
        "I just saw her dress, ¡qué lindo!",
    ),
    (
        "A person or place is named in the language the name belongs to or is pronounced in.",
        "Escogimos United Airlines porque ellos ofrecen las mejores meriendas.",
    ),
    (
        "The switch marks that something was unexpected.",
        "¿Qué hizo ella? Oh my god.",
    ),
];

impl LabelSchema {
    /// The current built-in schema.
    pub fn current() -> Self {
        LabelSchema {
            version: SCHEMA_VERSION,
            labels: LabelKey::ALL
                .iter()
                .zip(DEFINITIONS)
                .map(|(&key, (definition, example))| LabelDefinition {
                    key,
                    name: key.display_name().into(),
                    definition: definition.into(),
                    example: example.into(),
                })
                .collect(),
        }
    }

    /// Checks that a loaded schema matches the built-in one: same version,
    /// same keys in the same order.
    pub fn check_compatible(&self) -> Result<(), SchemaMismatch> {
        if self.version != SCHEMA_VERSION {
            return Err(SchemaMismatch { expected: SCHEMA_VERSION, found: self.version });
        }
        let keys: Vec<LabelKey> = self.labels.iter().map(|l| l.key).collect();
        if keys != LabelKey::ALL {
            return Err(SchemaMismatch { expected: SCHEMA_VERSION, found: self.version });
        }
        Ok(())
    }

    /// Canonical example sentence of each label, with a LabelSet that has
    /// only that label set.
    pub fn fixtures(&self) -> Vec<(String, LabelSet)> {
        self.labels.iter().map(|l| (l.example.clone(), LabelSet::single(l.key))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("label schema mismatch: expected version {expected}, found {found}")]
pub struct SchemaMismatch {
    pub expected: u32,
    pub found: u32,
}

/// Fixed-order 11-way boolean vector. All-false means "no label".
///
/// Serializes as an object with all eleven keys in schema order. Both that
/// object form and a plain array of exactly eleven booleans are accepted on
/// input; anything else is rejected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelSet {
    bits: [bool; LABEL_COUNT],
}

impl LabelSet {
    pub fn none() -> Self {
        LabelSet::default()
    }

    pub fn from_bits(bits: [bool; LABEL_COUNT]) -> Self {
        LabelSet { bits }
    }

    pub fn single(key: LabelKey) -> Self {
        let mut s = LabelSet::none();
        s.set(key, true);
        s
    }

    pub fn from_keys(keys: &[LabelKey]) -> Self {
        let mut s = LabelSet::none();
        for &k in keys {
            s.set(k, true);
        }
        s
    }

    /// Accepts a slice of any length and fails unless it has exactly eleven.
    pub fn from_slice(bits: &[bool]) -> Option<Self> {
        bits.try_into().ok().map(LabelSet::from_bits)
    }

    pub fn get(&self, key: LabelKey) -> bool {
        self.bits[key.index()]
    }

    pub fn set(&mut self, key: LabelKey, value: bool) {
        self.bits[key.index()] = value;
    }

    pub fn bits(&self) -> [bool; LABEL_COUNT] {
        self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn keys(&self) -> impl Iterator<Item = LabelKey> + '_ {
        LabelKey::ALL.into_iter().filter(|k| self.get(*k))
    }
}

impl Serialize for LabelSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(LABEL_COUNT))?;
        for key in LabelKey::ALL {
            map.serialize_entry(key.as_str(), &self.get(key))?;
        }
        map.end()
    }
}

struct LabelSetVisitor;

impl<'de> Visitor<'de> for LabelSetVisitor {
    type Value = LabelSet;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("an object with all 11 label keys or an array of 11 booleans")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<LabelSet, A::Error> {
        let mut seen = [false; LABEL_COUNT];
        let mut set = LabelSet::none();
        while let Some(key) = map.next_key::<String>()? {
            let key: LabelKey = key.parse().map_err(|e: UnknownLabel| de::Error::custom(e))?;
            if seen[key.index()] {
                return Err(de::Error::custom(alloc::format!("duplicate label `{key}`")));
            }
            seen[key.index()] = true;
            set.set(key, map.next_value()?);
        }
        if let Some(missing) = LabelKey::ALL.iter().find(|k| !seen[k.index()]) {
            return Err(de::Error::custom(alloc::format!("missing label `{missing}`")));
        }
        Ok(set)
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<LabelSet, A::Error> {
        let mut bits = Vec::with_capacity(LABEL_COUNT);
        while let Some(b) = seq.next_element::<bool>()? {
            bits.push(b);
        }
        LabelSet::from_slice(&bits).ok_or_else(|| de::Error::invalid_length(bits.len(), &self))
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(LabelSetVisitor)
    }
}
