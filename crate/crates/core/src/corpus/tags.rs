use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// One subject-predicate-object statement. Objects may be typed constants
/// such as `1988@year` or `"120 million (Australian dollars)"@USD`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Triple {
    pub fn new(subject: &str, predicate: &str, object: &str) -> Self {
        Triple {
            subject: subject.to_string(),
            predicate: predicate.to_string(),
            object: object.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Agent,
    Bridge,
    Patient,
}

impl Role {
    fn label(self) -> &'static str {
        match self {
            Role::Agent => "AGENT",
            Role::Bridge => "BRIDGE",
            Role::Patient => "PATIENT",
        }
    }
}

/// Ordered tag → ID mapping.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityTagMap {
    entries: Vec<(String, String)>,
}

impl EntityTagMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a pair; `false` if either the tag or the ID is already mapped.
    pub fn insert(&mut self, tag: &str, id: &str) -> bool {
        if self.entries.iter().any(|(t, i)| t == tag || i == id) {
            return false;
        }
        self.entries.push((tag.to_string(), id.to_string()));
        true
    }

    pub fn get(&self, tag: &str) -> Option<&str> {
        self.entries.iter().find(|(t, _)| t == tag).map(|(_, i)| i.as_str())
    }

    pub fn tag_of(&self, id: &str) -> Option<&str> {
        self.entries.iter().find(|(_, i)| i == id).map(|(t, _)| t.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(t, i)| (t.as_str(), i.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn role_of(&self, id: &str) -> Option<Role> {
        let tag = self.tag_of(id)?;
        match tag.split_once('-')?.0 {
            "AGENT" => Some(Role::Agent),
            "BRIDGE" => Some(Role::Bridge),
            "PATIENT" => Some(Role::Patient),
            _ => None,
        }
    }
}

impl fmt::Display for EntityTagMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, i) in &self.entries {
            writeln!(f, "{t}\t{i}")?;
        }
        Ok(())
    }
}

/// Tags every entity of a triple set by where it occurs: subject only →
/// AGENT, object only → PATIENT, both → BRIDGE. Numbers are assigned per role
/// in order of first appearance (subject before object within a triple).
pub fn assign_entity_tags(triples: &[Triple]) -> EntityTagMap {
    let subjects: HashSet<&str> = triples.iter().map(|t| t.subject.as_str()).collect();
    let objects: HashSet<&str> = triples.iter().map(|t| t.object.as_str()).collect();
    let mut seen = HashSet::new();
    let mut counters = [0usize; 3];
    let mut map = EntityTagMap::new();
    for id in triples.iter().flat_map(|t| [t.subject.as_str(), t.object.as_str()]) {
        if !seen.insert(id) {
            continue;
        }
        let role = match (subjects.contains(id), objects.contains(id)) {
            (true, true) => Role::Bridge,
            (true, false) => Role::Agent,
            _ => Role::Patient,
        };
        let slot = &mut counters[role as usize];
        *slot += 1;
        map.insert(&format!("{}-{}", role.label(), slot), id);
    }
    map
}

/// Splits a typed constant into value and type, e.g. `1988@year` →
/// `("1988", "year")`. `None` for Wikipedia entity IDs.
pub fn constant_parts(id: &str) -> Option<(&str, &str)> {
    let (value, ty) = id.rsplit_once('@')?;
    let valid_type = !ty.is_empty()
        && ty.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && ty.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    (valid_type && !value.is_empty()).then_some((value, ty))
}

pub fn is_constant(id: &str) -> bool {
    constant_parts(id).is_some()
}

/// Strips surrounding quotes and whitespace and joins the remaining words
/// with underscores.
pub fn normalize_constant(raw: &str) -> String {
    let trimmed = raw.trim().trim_matches(|c| c == '"' || c == '\'').trim();
    trimmed.split_whitespace().collect::<Vec<_>>().join("_")
}

/// The source value of a constant with quotes and type removed, or the ID.
pub fn constant_value(id: &str) -> String {
    match constant_parts(id) {
        Some((value, _)) => value.trim().trim_matches('"').trim().to_string(),
        None => id.to_string(),
    }
}

/// The single-token form used for a reference inside a wikified template.
pub fn wiki_token(id: &str) -> String {
    match constant_parts(id) {
        Some((value, _)) => normalize_constant(value),
        None => id.to_string(),
    }
}
