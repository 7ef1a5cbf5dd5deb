use super::tags::EntityTagMap;
use super::tokenize::is_tag;
use crate::error::{Error, Result};

/// A referring expression found in the original text for one tag occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractedRefex {
    pub tag: String,
    pub tokens: Vec<String>,
}

fn alignment_error(template: &[String], original: &[String], reason: String) -> Error {
    Error::Alignment {
        template: template.to_vec(),
        original: original.to_vec(),
        reason,
    }
}

/// Pairs of (template index, original index) of a longest common subsequence.
/// Tags never match. Among equally long alignments, each template token is
/// matched to the leftmost original token that still allows a maximal one.
fn lcs_pairs(template: &[String], original: &[String]) -> Vec<(usize, usize)> {
    let (n, m) = (template.len(), original.len());
    let mut suffix = vec![0u32; (n + 1) * (m + 1)];
    let at = |i: usize, j: usize| i * (m + 1) + j;
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            suffix[at(i, j)] = if !is_tag(&template[i]) && template[i] == original[j] {
                1 + suffix[at(i + 1, j + 1)]
            } else {
                suffix[at(i + 1, j)].max(suffix[at(i, j + 1)])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut pairs = Vec::new();
    while i < n && j < m {
        if !is_tag(&template[i])
            && template[i] == original[j]
            && suffix[at(i, j)] == 1 + suffix[at(i + 1, j + 1)]
        {
            pairs.push((i, j));
            i += 1;
            j += 1;
        } else if suffix[at(i + 1, j)] >= suffix[at(i, j + 1)] {
            i += 1;
        } else {
            j += 1;
        }
    }
    pairs
}

/// Recovers the referring expression behind every tag occurrence of a
/// delexicalized template by aligning it with the original tokenized text.
/// The unmatched original tokens between two aligned anchors form the
/// expression of the single tag sitting in the corresponding template gap.
pub fn extract_refexes(
    original: &[String],
    template: &[String],
    map: &EntityTagMap,
) -> Result<Vec<ExtractedRefex>> {
    if let Some(tag) = template.iter().find(|t| is_tag(t) && map.get(t).is_none()) {
        return Err(alignment_error(template, original, format!("tag {tag} missing from tag map")));
    }
    let mut pairs = lcs_pairs(template, original);
    pairs.push((template.len(), original.len()));
    let mut out = Vec::new();
    let (mut ti, mut oj) = (0usize, 0usize);
    for (tn, on) in pairs {
        let gap_template = &template[ti..tn];
        let gap_original = &original[oj..on];
        if let Some(stray) = gap_template.iter().find(|t| !is_tag(t)) {
            return Err(alignment_error(
                template,
                original,
                format!("template token {stray:?} has no counterpart in the text"),
            ));
        }
        match (gap_template.len(), gap_original.is_empty()) {
            (0, true) => {}
            (1, false) => out.push(ExtractedRefex {
                tag: gap_template[0].clone(),
                tokens: gap_original.to_vec(),
            }),
            (tags, _) => {
                return Err(alignment_error(
                    template,
                    original,
                    format!(
                        "gap at template position {ti} holds {tags} tag(s) for {} text token(s)",
                        gap_original.len()
                    ),
                ))
            }
        }
        ti = tn + 1;
        oj = on + 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::tokenize::tokenize;
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> EntityTagMap {
        let mut m = EntityTagMap::new();
        for (t, i) in pairs {
            m.insert(t, i);
        }
        m
    }

    #[test]
    fn figure_example() {
        let original = tokenize(
            "108 St Georges Terrace was completed in 1988 in Perth, Australia. It has a total of 50 floors and cost 120m Australian dollars.",
        );
        let template = tokenize(
            "AGENT-1 was completed in PATIENT-2 in BRIDGE-1 , PATIENT-1 . AGENT-1 has a total of PATIENT-4 floors and cost PATIENT-3 .",
        );
        let m = map(&[
            ("AGENT-1", "108_St_Georges_Terrace"),
            ("BRIDGE-1", "Perth"),
            ("PATIENT-1", "Australia"),
            ("PATIENT-2", "1988@year"),
            ("PATIENT-3", "\"120 million (Australian dollars)\"@USD"),
            ("PATIENT-4", "50@Integer"),
        ]);
        let got: Vec<(String, String)> = extract_refexes(&original, &template, &m)
            .unwrap()
            .into_iter()
            .map(|r| (r.tag, r.tokens.join(" ")))
            .collect();
        let expect = [
            ("AGENT-1", "108 St Georges Terrace"),
            ("PATIENT-2", "1988"),
            ("BRIDGE-1", "Perth"),
            ("PATIENT-1", "Australia"),
            ("AGENT-1", "It"),
            ("PATIENT-4", "50"),
            ("PATIENT-3", "120m Australian dollars"),
        ];
        let expect: Vec<(String, String)> = expect.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn identical_text_has_no_refexes() {
        let t = tokenize("nothing to see here .");
        assert!(extract_refexes(&t, &t, &EntityTagMap::new()).unwrap().is_empty());
    }

    #[test]
    fn single_tag() {
        let got = extract_refexes(&tokenize("the dog ran"), &tokenize("TAG-1 ran"), &EntityTagMap::new());
        // TAG-1 is not a role tag, so the template word is stray
        assert!(got.is_err());
        let m = map(&[("AGENT-1", "Dog")]);
        let got = extract_refexes(&tokenize("the dog ran"), &tokenize("AGENT-1 ran"), &m).unwrap();
        assert_eq!(got, vec![ExtractedRefex { tag: "AGENT-1".into(), tokens: vec!["the".into(), "dog".into()] }]);
    }

    #[test]
    fn unalignable_pairs() {
        let m = map(&[("AGENT-1", "a"), ("PATIENT-1", "b")]);
        // adjacent tags: one gap, two tags
        let e = extract_refexes(&tokenize("x y ran"), &tokenize("AGENT-1 PATIENT-1 ran"), &m).unwrap_err();
        assert!(matches!(e, Error::Alignment { .. }));
        // tag with no text
        assert!(extract_refexes(&tokenize("ran"), &tokenize("AGENT-1 ran"), &m).is_err());
        // extra text with no tag
        assert!(extract_refexes(&tokenize("oh x ran"), &tokenize("oh ran"), &m).is_err());
        // unknown tag
        assert!(extract_refexes(&tokenize("x ran"), &tokenize("AGENT-2 ran"), &m).is_err());
    }
}
