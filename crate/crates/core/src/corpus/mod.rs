//! Referring-expression corpus: extraction from aligned template/text pairs,
//! instance files, vocabularies and splits.

mod align;
mod contexts;
mod forms;
mod instance;
mod split;
mod tags;
mod template_file;
mod tokenize;
mod vocab;

use std::collections::BTreeMap;

pub use align::{extract_refexes, ExtractedRefex};
pub use contexts::{build_contexts, wikify};
pub use forms::{classify_form, classify_form_with, Form, PRONOUNS};
pub use instance::{read_instances, write_instances, RefexInstance, INSTANCE_COLUMNS};
pub use split::{split_dataset, DatasetSplit};
pub use tags::{
    assign_entity_tags, constant_parts, constant_value, is_constant, normalize_constant, wiki_token, EntityTagMap,
    Role, Triple,
};
pub use template_file::{format_template_file, parse_template_file, TemplateText};
pub use tokenize::{is_tag, tokenize};
pub use vocab::{build_vocab, Vocabulary, BOS, EOS, PAD, UNK};

use crate::baselines::extract_features_heuristic;
use crate::error::{Error, Result};

/// Instances for every tag occurrence of one text, constants included.
/// Features are filled in by the context heuristic.
pub fn extract_instances(text: &TemplateText) -> Result<Vec<RefexInstance>> {
    let refexes = extract_refexes(&text.original, &text.template, &text.tags)?;
    refexes
        .into_iter()
        .enumerate()
        .map(|(slot, r)| {
            let entity = text
                .tags
                .get(&r.tag)
                .ok_or_else(|| Error::Contract(format!("tag {} missing from tag map", r.tag)))?
                .to_string();
            let (pre_context, pos_context) = build_contexts(&text.template, &text.tags, slot)?;
            let form = classify_form(&r.tokens);
            let mut inst = RefexInstance {
                id: RefexInstance::instance_id(&text.id, slot),
                text_id: text.id.clone(),
                slot,
                entity,
                pre_context,
                pos_context,
                refex: r.tokens,
                form,
                features: None,
            };
            inst.features = Some(extract_features_heuristic(&inst));
            Ok(inst)
        })
        .collect()
}

/// Keeps instances whose referent is a Wikipedia entity (drops constants).
pub fn filter_wiki(instances: Vec<RefexInstance>) -> Vec<RefexInstance> {
    instances.into_iter().filter(|i| !is_constant(&i.entity)).collect()
}

/// Result of running extraction over a whole template file.
#[derive(Debug, Default)]
pub struct CorpusBuild {
    pub instances: Vec<RefexInstance>,
    /// `(text id, error)` for texts that could not be aligned.
    pub failures: Vec<(String, Error)>,
}

/// Extracts and filters instances for every text, collecting alignment
/// failures instead of stopping at the first one.
pub fn build_corpus(texts: &[TemplateText]) -> CorpusBuild {
    let mut out = CorpusBuild::default();
    for text in texts {
        match extract_instances(text) {
            Ok(insts) => out.instances.extend(filter_wiki(insts)),
            Err(e) => out.failures.push((text.id.clone(), e)),
        }
    }
    out
}

/// Count and percentage of each form.
pub fn form_distribution(instances: &[RefexInstance]) -> Vec<(Form, usize, f64)> {
    let mut counts: BTreeMap<Form, usize> = Form::ALL.iter().map(|f| (*f, 0)).collect();
    for i in instances {
        *counts.entry(i.form).or_default() += 1;
    }
    let total = instances.len().max(1) as f64;
    Form::ALL
        .iter()
        .map(|f| (*f, counts[f], 100.0 * counts[f] as f64 / total))
        .collect()
}
