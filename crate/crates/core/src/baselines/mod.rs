//! Non-neural comparison systems: the ID-based name baseline and the
//! Naive Bayes form classifier followed by most-frequent-variant selection.

mod features;
mod naive_bayes;
mod variants;

pub use features::{extract_features_heuristic, FormFeatures, InfoStatus, SyntacticPosition};
pub use naive_bayes::{choose_argmax, nb_train, ChoiceMode, FormModel, FORM_TIE_ORDER};
pub use variants::{only_names, VariantSource, VariantTable};

use crate::corpus::{Form, RefexInstance};
use crate::error::Result;
use crate::tensor::RngState;

/// Where the features used for a prediction came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSource {
    Tsv,
    Heuristic,
}

impl FeatureSource {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSource::Tsv => "tsv",
            FeatureSource::Heuristic => "heuristic",
        }
    }
}

/// Features stored on the instance, else the context heuristic.
pub fn instance_features(inst: &RefexInstance) -> (FormFeatures, FeatureSource) {
    match inst.features {
        Some(f) => (f, FeatureSource::Tsv),
        None => (extract_features_heuristic(inst), FeatureSource::Heuristic),
    }
}

/// Form choice followed by variant lookup.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FerreiraBaseline {
    pub forms: FormModel,
    pub variants: VariantTable,
    pub mode: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselinePrediction {
    pub refex: String,
    pub form: Form,
    pub features: FeatureSource,
    pub variant: VariantSource,
}

impl FerreiraBaseline {
    /// Trains on instances, filling missing features with the heuristic.
    pub fn train(instances: &[RefexInstance]) -> Result<Self> {
        let filled: Vec<RefexInstance> = instances
            .iter()
            .map(|i| {
                let mut i = i.clone();
                i.features = Some(instance_features(&i).0);
                i
            })
            .collect();
        Ok(FerreiraBaseline {
            forms: nb_train(&filled)?,
            variants: VariantTable::train(&filled)?,
            mode: None,
        })
    }

    /// Uses posterior sampling seeded per instance instead of argmax.
    pub fn sampling(mut self, seed: u64) -> Self {
        self.mode = Some(seed);
        self
    }

    pub fn predict(&self, inst: &RefexInstance, index: usize) -> BaselinePrediction {
        let (features, source) = instance_features(inst);
        let mode = match self.mode {
            None => ChoiceMode::Argmax,
            Some(seed) => ChoiceMode::Sample(RngState::derive(seed, &[index as u64]).seed()),
        };
        let form = self.forms.choose_form(features, mode);
        let (refex, variant) = self.variants.select(&inst.entity, features, form);
        BaselinePrediction {
            refex,
            form,
            features: source,
            variant,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(entity: &str, pre: &str, refex: &str, form: Form) -> RefexInstance {
        RefexInstance {
            id: "t:0".into(),
            text_id: "t".into(),
            slot: 0,
            entity: entity.into(),
            pre_context: pre.split_whitespace().map(String::from).collect(),
            pos_context: vec!["is".into(), ".".into()],
            refex: refex.split(' ').map(String::from).collect(),
            form,
            features: None,
        }
    }

    #[test]
    fn ferreira_predicts_pronoun_for_given_mentions() {
        let mut train = Vec::new();
        for _ in 0..5 {
            train.push(inst("Perth", "", "Perth", Form::Name));
            train.push(inst("Perth", "perth is big and", "it", Form::Pronoun));
        }
        let model = FerreiraBaseline::train(&train).unwrap();
        let p = model.predict(&inst("Perth", "perth has a port and", "x", Form::Name), 0);
        assert_eq!(p.refex, "it");
        assert_eq!(p.features, FeatureSource::Heuristic);
        let p = model.predict(&inst("Rome", "", "x", Form::Name), 1);
        assert_eq!(p.refex, "Rome");
        assert_eq!(p.variant, VariantSource::OnlyNames);
    }
}
