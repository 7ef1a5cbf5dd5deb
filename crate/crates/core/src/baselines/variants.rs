use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::features::{FormFeatures, InfoStatus, SyntacticPosition};
use crate::corpus::{Form, RefexInstance};
use crate::error::{Error, Result};

/// Replaces the underscores of a wiki ID with spaces.
pub fn only_names(wiki_id: &str) -> String {
    wiki_id.replace('_', " ")
}

type Counts = BTreeMap<String, u64>;

/// How a variant was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantSource {
    /// Hit after dropping this many key factors (0 = full key).
    Table { backoff: usize },
    /// No variant for the entity; produced by [`only_names`].
    OnlyNames,
}

/// Frequency tables of surface variants keyed by entity, features and form,
/// plus the three back-off levels obtained by dropping sentence status, then
/// text status, then syntactic position.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VariantTable {
    full: BTreeMap<(String, SyntacticPosition, InfoStatus, InfoStatus, Form), Counts>,
    no_sentence: BTreeMap<(String, SyntacticPosition, InfoStatus, Form), Counts>,
    no_text: BTreeMap<(String, SyntacticPosition, Form), Counts>,
    entity_form: BTreeMap<(String, Form), Counts>,
}

/// Most frequent string; ties go to the lexicographically smallest.
fn best(counts: &Counts) -> Option<&str> {
    let mut out: Option<(&str, u64)> = None;
    for (s, &c) in counts {
        if out.is_none_or(|(_, b)| c > b) {
            out = Some((s, c));
        }
    }
    out.map(|(s, _)| s)
}

impl VariantTable {
    pub fn add(&mut self, entity: &str, features: FormFeatures, form: Form, refex: &str, count: u64) {
        let e = entity.to_string();
        let FormFeatures {
            syntactic_position: p,
            text_status: t,
            sentence_status: s,
        } = features;
        *self.full.entry((e.clone(), p, t, s, form)).or_default().entry(refex.into()).or_default() += count;
        *self.no_sentence.entry((e.clone(), p, t, form)).or_default().entry(refex.into()).or_default() += count;
        *self.no_text.entry((e.clone(), p, form)).or_default().entry(refex.into()).or_default() += count;
        *self.entity_form.entry((e, form)).or_default().entry(refex.into()).or_default() += count;
    }

    pub fn train(instances: &[RefexInstance]) -> Result<Self> {
        let mut t = VariantTable::default();
        for inst in instances {
            let f = inst
                .features
                .ok_or_else(|| Error::Contract(format!("instance {} has no form features", inst.id)))?;
            t.add(&inst.entity, f, inst.form, &inst.refex.join(" "), 1);
        }
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.full.len()
    }

    pub fn is_empty(&self) -> bool {
        self.full.is_empty()
    }

    /// Variant for the key, backing off one factor at a time and finally
    /// falling back to [`only_names`].
    pub fn select(&self, entity: &str, features: FormFeatures, form: Form) -> (String, VariantSource) {
        let e = entity.to_string();
        let FormFeatures {
            syntactic_position: p,
            text_status: t,
            sentence_status: s,
        } = features;
        let hits = [
            self.full.get(&(e.clone(), p, t, s, form)).and_then(best),
            self.no_sentence.get(&(e.clone(), p, t, form)).and_then(best),
            self.no_text.get(&(e.clone(), p, form)).and_then(best),
            self.entity_form.get(&(e, form)).and_then(best),
        ];
        for (backoff, hit) in hits.into_iter().enumerate() {
            if let Some(v) = hit {
                return (v.to_string(), VariantSource::Table { backoff });
            }
        }
        (only_names(entity), VariantSource::OnlyNames)
    }

    /// TSV rows: entity, position, text_status, sentence_status, form, refex, count.
    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        for ((e, p, t, s, f), counts) in &self.full {
            for (refex, c) in counts {
                writeln!(w, "{e}\t{p}\t{t}\t{s}\t{f}\t{refex}\t{c}")?;
            }
        }
        Ok(())
    }

    pub fn read(r: impl BufRead, source: &str) -> Result<Self> {
        let mut table = VariantTable::default();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let loc = format!("{source}:{}", n + 1);
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 7 {
                return Err(Error::parse(loc, format!("expected 7 columns, found {}", cols.len())));
            }
            let parse = || -> Result<(FormFeatures, Form, u64)> {
                let f = FormFeatures::new(cols[1].parse()?, cols[2].parse()?, cols[3].parse()?);
                let c = cols[6]
                    .parse()
                    .map_err(|_| Error::parse("count", format!("bad count {:?}", cols[6])))?;
                Ok((f, cols[4].parse()?, c))
            };
            let (f, form, c) = parse().map_err(|e| Error::parse(&loc, e.to_string()))?;
            table.add(cols[0], f, form, cols[5], c);
        }
        Ok(table)
    }
}
