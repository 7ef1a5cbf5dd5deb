//! Text format for aligned template/text pairs.
//!
//! Blocks are separated by blank lines and consist of three paragraphs:
//!
//! ```text
//! # optional-text-id
//! subject<TAB>predicate<TAB>object
//! ...
//!
//! TAG<TAB>ID
//! ...
//!
//! template tokens
//! original text
//! ```
//!
//! Blocks without a `#` id line are numbered `t1`, `t2`, ... in file order.

use std::fmt::Write as _;

use super::tags::{EntityTagMap, Triple};
use super::tokenize::{is_tag, tokenize};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateText {
    pub id: String,
    pub triples: Vec<Triple>,
    pub tags: EntityTagMap,
    pub template: Vec<String>,
    pub original: Vec<String>,
}

impl TemplateText {
    /// Number of tag occurrences in the template.
    pub fn slot_count(&self) -> usize {
        self.template.iter().filter(|t| is_tag(t)).count()
    }
}

fn paragraphs(text: &str) -> Vec<(usize, Vec<&str>)> {
    let mut out = Vec::new();
    let mut cur: Vec<&str> = Vec::new();
    let mut start = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !cur.is_empty() {
                out.push((start, std::mem::take(&mut cur)));
            }
        } else {
            if cur.is_empty() {
                start = i + 1;
            }
            cur.push(line);
        }
    }
    if !cur.is_empty() {
        out.push((start, cur));
    }
    out
}

pub fn parse_template_file(text: &str, source: &str) -> Result<Vec<TemplateText>> {
    let paras = paragraphs(text);
    if !paras.len().is_multiple_of(3) {
        let line = paras.last().map_or(0, |p| p.0);
        return Err(Error::parse(
            format!("{source}:{line}"),
            format!("{} paragraphs do not form complete triple/tag/text blocks", paras.len()),
        ));
    }
    let mut out = Vec::new();
    for (b, block) in paras.chunks(3).enumerate() {
        let (tline, triple_lines) = &block[0];
        let (mline, map_lines) = &block[1];
        let (xline, text_lines) = &block[2];
        let mut id = format!("t{}", b + 1);
        let mut triples = Vec::new();
        for (k, line) in triple_lines.iter().enumerate() {
            if let Some(rest) = line.strip_prefix('#') {
                id = rest.trim().to_string();
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(
                    format!("{source}:{}", tline + k),
                    format!("triple needs 3 tab-separated fields, got {}", cols.len()),
                ));
            }
            triples.push(Triple::new(cols[0].trim(), cols[1].trim(), cols[2].trim()));
        }
        let mut tags = EntityTagMap::new();
        for (k, line) in map_lines.iter().enumerate() {
            let loc = format!("{source}:{}", mline + k);
            let (tag, entity) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(&loc, "tag line needs TAG<TAB>ID"))?;
            if !is_tag(tag.trim()) {
                return Err(Error::parse(&loc, format!("{tag:?} is not a role tag")));
            }
            if !tags.insert(tag.trim(), entity.trim()) {
                return Err(Error::parse(&loc, format!("duplicate tag or entity in {line:?}")));
            }
        }
        if text_lines.len() != 2 {
            return Err(Error::parse(
                format!("{source}:{xline}"),
                format!("expected template and original lines, got {} lines", text_lines.len()),
            ));
        }
        out.push(TemplateText {
            id,
            triples,
            tags,
            template: tokenize(text_lines[0]),
            original: tokenize(text_lines[1]),
        });
    }
    let mut ids: Vec<&str> = out.iter().map(|t| t.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::parse(source, format!("duplicate text id {}", w[0])));
    }
    Ok(out)
}

pub fn format_template_file(texts: &[TemplateText]) -> String {
    let mut s = String::new();
    for (i, t) in texts.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let _ = writeln!(s, "# {}", t.id);
        for tr in &t.triples {
            let _ = writeln!(s, "{}\t{}\t{}", tr.subject, tr.predicate, tr.object);
        }
        s.push('\n');
        let _ = write!(s, "{}", t.tags);
        s.push('\n');
        let _ = writeln!(s, "{}", t.template.join(" "));
        let _ = writeln!(s, "{}", t.original.join(" "));
    }
    s
}
