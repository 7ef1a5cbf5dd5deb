use std::collections::{BTreeMap, HashMap};

use crate::corpus::{constant_value, is_constant, is_tag, tokenize, EntityTagMap, TemplateText};
use crate::error::{Error, Result};

/// Tokens to copy into the text for each constant-valued tag.
pub fn constant_sources(map: &EntityTagMap) -> BTreeMap<String, Vec<String>> {
    map.iter()
        .filter(|(_, id)| is_constant(id))
        .map(|(tag, id)| (tag.to_string(), tokenize(&constant_value(id).replace('_', " "))))
        .collect()
}

/// Replaces each tag occurrence (in order) with its assignment. Occurrences
/// without an assignment fall back to the constant map.
pub fn relexicalize(
    template: &[String],
    assignments: &[Option<Vec<String>>],
    constants: &BTreeMap<String, Vec<String>>,
) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(template.len());
    let mut slot = 0;
    for tok in template {
        if !is_tag(tok) {
            out.push(tok.clone());
            continue;
        }
        let assigned = assignments.get(slot).and_then(Option::as_ref);
        let tokens = assigned
            .or_else(|| constants.get(tok))
            .ok_or_else(|| Error::Contract(format!("no referring expression for {tok} (occurrence {slot})")))?;
        out.extend(tokens.iter().cloned());
        slot += 1;
    }
    Ok(out)
}

/// Relexicalizes a whole text from predictions keyed by slot.
pub fn relexicalize_text(text: &TemplateText, predictions: &HashMap<usize, Vec<String>>) -> Result<Vec<String>> {
    let assignments: Vec<Option<Vec<String>>> = (0..text.slot_count()).map(|s| predictions.get(&s).cloned()).collect();
    relexicalize(&text.template, &assignments, &constant_sources(&text.tags))
        .map_err(|e| Error::Contract(format!("text {}: {e}", text.id)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn no_tags_unchanged() {
        let t = toks("nothing to see .");
        assert_eq!(relexicalize(&t, &[], &BTreeMap::new()).unwrap(), t);
    }

    #[test]
    fn positional_assignment() {
        let t = toks("AGENT-1 met PATIENT-1 . AGENT-1 left");
        let a = vec![Some(toks("John Smith")), Some(toks("Mary")), Some(toks("He"))];
        assert_eq!(
            relexicalize(&t, &a, &BTreeMap::new()).unwrap(),
            toks("John Smith met Mary . He left")
        );
    }

    #[test]
    fn missing_assignment_names_tag() {
        let t = toks("AGENT-1 met PATIENT-1");
        let err = relexicalize(&t, &[Some(toks("John"))], &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("PATIENT-1"));
    }

    #[test]
    fn constants_copied() {
        let mut map = EntityTagMap::new();
        map.insert("AGENT-1", "Perth");
        map.insert("PATIENT-1", "\"120 million\"@USD");
        let consts = constant_sources(&map);
        assert_eq!(consts["PATIENT-1"], toks("120 million"));
        let t = toks("AGENT-1 cost PATIENT-1");
        assert_eq!(
            relexicalize(&t, &[Some(toks("Perth")), None], &consts).unwrap(),
            toks("Perth cost 120 million")
        );
    }
}
