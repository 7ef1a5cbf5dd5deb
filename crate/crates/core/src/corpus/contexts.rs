use super::tags::{wiki_token, EntityTagMap};
use super::tokenize::is_tag;
use crate::error::{Error, Result};

/// Template with every tag replaced by its entity's wiki token.
pub fn wikify(template: &[String], map: &EntityTagMap) -> Result<Vec<String>> {
    template
        .iter()
        .map(|t| {
            if is_tag(t) {
                map.get(t)
                    .map(wiki_token)
                    .ok_or_else(|| Error::Contract(format!("tag {t} missing from tag map")))
            } else {
                Ok(t.clone())
            }
        })
        .collect()
}

/// Lowercased wikified context before and after tag occurrence `occurrence`
/// (counting tag occurrences from zero).
pub fn build_contexts(
    template: &[String],
    map: &EntityTagMap,
    occurrence: usize,
) -> Result<(Vec<String>, Vec<String>)> {
    let slot = template
        .iter()
        .enumerate()
        .filter(|(_, t)| is_tag(t))
        .nth(occurrence)
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Contract(format!("template has no tag occurrence {occurrence}")))?;
    let wiki = wikify(template, map)?;
    let lower = |ts: &[String]| ts.iter().map(|t| t.to_lowercase()).collect::<Vec<_>>();
    Ok((lower(&wiki[..slot]), lower(&wiki[slot + 1..])))
}

#[cfg(test)]
mod tests {
    use super::super::tokenize::tokenize;
    use super::*;

    fn figure_map() -> EntityTagMap {
        let mut m = EntityTagMap::new();
        for (t, i) in [
            ("AGENT-1", "108_St_Georges_Terrace"),
            ("BRIDGE-1", "Perth"),
            ("PATIENT-1", "Australia"),
            ("PATIENT-2", "1988@year"),
            ("PATIENT-3", "\"120 million (Australian dollars)\"@USD"),
            ("PATIENT-4", "50@Integer"),
        ] {
            m.insert(t, i);
        }
        m
    }

    fn template() -> Vec<String> {
        tokenize("AGENT-1 was completed in PATIENT-2 in BRIDGE-1 , PATIENT-1 . AGENT-1 has a total of PATIENT-4 floors and cost PATIENT-3 .")
    }

    #[test]
    fn wikified_template() {
        assert_eq!(
            wikify(&template(), &figure_map()).unwrap().join(" "),
            "108_St_Georges_Terrace was completed in 1988 in Perth , Australia . 108_St_Georges_Terrace has a total of 50 floors and cost 120_million_(Australian_dollars) ."
        );
    }

    #[test]
    fn first_and_last_slots() {
        let (pre, pos) = build_contexts(&template(), &figure_map(), 0).unwrap();
        assert!(pre.is_empty());
        assert_eq!(pos[0], "was");
        let (_, pos) = build_contexts(&template(), &figure_map(), 6).unwrap();
        assert_eq!(pos, vec!["."]);
        let t = tokenize("see AGENT-1");
        let mut m = EntityTagMap::new();
        m.insert("AGENT-1", "X");
        let (pre, pos) = build_contexts(&t, &m, 0).unwrap();
        assert_eq!(pre, vec!["see"]);
        assert!(pos.is_empty());
    }

    #[test]
    fn second_agent_occurrence() {
        let (pre, pos) = build_contexts(&template(), &figure_map(), 4).unwrap();
        assert_eq!(pre.join(" "), "108_st_georges_terrace was completed in 1988 in perth , australia .");
        assert_eq!(pos.join(" "), "has a total of 50 floors and cost 120_million_(australian_dollars) .");
    }

    #[test]
    fn occurrence_out_of_range() {
        assert!(matches!(build_contexts(&template(), &figure_map(), 7), Err(Error::Contract(_))));
    }
}
