//! Whitespace + punctuation tokenizer.
//!
//! Punctuation at word edges becomes its own token, a trailing possessive
//! `'s` is split off, and delexicalization tags (`AGENT-1`, ...) are never
//! split. Internal punctuation (`120m`, `1923-11-18`, `St.Georges`) stays.

const LEADING: &[char] = &['(', '"', '\'', '`', '[', '{'];
const TRAILING: &[char] = &['.', ',', ';', ':', '!', '?', ')', '"', '\'', ']', '}'];

/// True for role tags such as `AGENT-1`, `BRIDGE-2`, `PATIENT-10`.
pub fn is_tag(token: &str) -> bool {
    let Some((role, n)) = token.split_once('-') else {
        return false;
    };
    matches!(role, "AGENT" | "BRIDGE" | "PATIENT")
        && !n.is_empty()
        && n.bytes().all(|b| b.is_ascii_digit())
}

pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        if is_tag(chunk) || chunk == "'s" || chunk == "’s" {
            out.push(chunk.to_string());
            continue;
        }
        split_chunk(chunk, &mut out);
    }
    out
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let mut rest = chunk;
    while let Some(c) = rest.chars().next() {
        if LEADING.contains(&c) && rest.len() > c.len_utf8() {
            out.push(c.to_string());
            rest = &rest[c.len_utf8()..];
        } else {
            break;
        }
    }
    let mut tail = Vec::new();
    while let Some(c) = rest.chars().next_back() {
        if rest.len() > c.len_utf8() && TRAILING.contains(&c) {
            // keep the possessive marker whole
            if c == '\'' || c == 's' {
                break;
            }
            tail.push(c.to_string());
            rest = &rest[..rest.len() - c.len_utf8()];
        } else {
            break;
        }
    }
    if rest.len() > 2 && (rest.ends_with("'s") || rest.ends_with("’s")) {
        let cut = rest.len() - if rest.ends_with("'s") { 2 } else { "’s".len() };
        out.push(rest[..cut].to_string());
        out.push(rest[cut..].to_string());
    } else if !rest.is_empty() {
        out.push(rest.to_string());
    }
    out.extend(tail.into_iter().rev());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_edge_punctuation() {
        assert_eq!(
            tokenize("Perth, Australia. It has 50 floors."),
            vec!["Perth", ",", "Australia", ".", "It", "has", "50", "floors", "."]
        );
        assert_eq!(tokenize("(the \"tower\")"), vec!["(", "the", "\"", "tower", "\"", ")"]);
    }

    #[test]
    fn keeps_tags_and_internal_punctuation() {
        assert_eq!(tokenize("AGENT-1 was born 1923-11-18 ."), vec!["AGENT-1", "was", "born", "1923-11-18", "."]);
        assert!(is_tag("PATIENT-12"));
        assert!(!is_tag("PATIENT-"));
        assert!(!is_tag("agent-1"));
    }

    #[test]
    fn possessive_split() {
        assert_eq!(tokenize("Perth's mayor"), vec!["Perth", "'s", "mayor"]);
        assert_eq!(tokenize("AGENT-1 's"), vec!["AGENT-1", "'s"]);
    }
}
