use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::RefexInstance;
use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SyntacticPosition {
    Subject,
    Object,
    Genitive,
}

/// Whether a mention is the first (`New`) or a later (`Given`) one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InfoStatus {
    New,
    Given,
}

impl SyntacticPosition {
    pub const ALL: [SyntacticPosition; 3] = [Self::Subject, Self::Object, Self::Genitive];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Subject => "subject",
            Self::Object => "object",
            Self::Genitive => "genitive",
        }
    }
}

impl InfoStatus {
    pub const ALL: [InfoStatus; 2] = [Self::New, Self::Given];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::New => "new",
            Self::Given => "given",
        }
    }
}

impl fmt::Display for SyntacticPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for InfoStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SyntacticPosition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::parse("syntactic_position", format!("unknown value {s:?}")))
    }
}

impl FromStr for InfoStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::parse("information status", format!("unknown value {s:?}")))
    }
}

/// Salience features used by the form classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FormFeatures {
    pub syntactic_position: SyntacticPosition,
    pub text_status: InfoStatus,
    pub sentence_status: InfoStatus,
}

impl FormFeatures {
    pub fn new(syntactic_position: SyntacticPosition, text_status: InfoStatus, sentence_status: InfoStatus) -> Self {
        FormFeatures {
            syntactic_position,
            text_status,
            sentence_status,
        }
    }

    /// All 12 feature combinations.
    pub fn all() -> impl Iterator<Item = FormFeatures> {
        SyntacticPosition::ALL.into_iter().flat_map(|p| {
            InfoStatus::ALL
                .into_iter()
                .flat_map(move |t| InfoStatus::ALL.into_iter().map(move |s| FormFeatures::new(p, t, s)))
        })
    }
}

const SENTENCE_END: &[&str] = &[".", "!", "?"];
const POSSESSIVE: &[&str] = &["'s", "’s", "'"];
const FINITE_VERBS: &[&str] = &[
    "is", "are", "was", "were", "am", "be", "been", "has", "have", "had", "does", "do", "did",
    "will", "would", "can", "could", "may", "might", "shall", "should", "must", "lies", "serves",
    "leads", "includes", "contains", "plays", "runs", "owns", "uses", "means",
];

fn is_verb_candidate(token: &str) -> bool {
    FINITE_VERBS.contains(&token)
        || (token.len() > 3 && token.ends_with("ed") && token.chars().all(|c| c.is_ascii_lowercase()))
}

/// Parser-free approximation of the form features from an instance's
/// contexts.
///
/// * text status is `Given` iff the entity's wiki token occurs in the
///   pre-context;
/// * sentence status is `Given` iff it occurs after the last sentence
///   boundary (`.`, `!`, `?`) of the pre-context;
/// * position is genitive when the slot is followed by a possessive marker,
///   subject when no finite-verb candidate (a closed auxiliary/verb list or a
///   lowercase word ending in "ed") precedes the slot in its sentence, and
///   object otherwise.
pub fn extract_features_heuristic(instance: &RefexInstance) -> FormFeatures {
    let entity = instance.entity.to_lowercase();
    let pre = &instance.pre_context;
    let sentence_start = pre
        .iter()
        .rposition(|t| SENTENCE_END.contains(&t.as_str()))
        .map_or(0, |i| i + 1);
    let sentence = &pre[sentence_start..];
    let text_status = if pre.contains(&entity) {
        InfoStatus::Given
    } else {
        InfoStatus::New
    };
    let sentence_status = if sentence.contains(&entity) {
        InfoStatus::Given
    } else {
        InfoStatus::New
    };
    let syntactic_position = if instance
        .pos_context
        .first()
        .is_some_and(|t| POSSESSIVE.contains(&t.as_str()))
    {
        SyntacticPosition::Genitive
    } else if sentence.iter().any(|t| is_verb_candidate(t)) {
        SyntacticPosition::Object
    } else {
        SyntacticPosition::Subject
    };
    FormFeatures::new(syntactic_position, text_status, sentence_status)
}
