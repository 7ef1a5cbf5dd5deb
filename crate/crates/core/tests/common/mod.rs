#![allow(dead_code)]

use neuralreg::corpus::{build_vocab, classify_form, RefexInstance};
use neuralreg::model::{DecoderVariant, ModelConfig, NeuralModel};
use neuralreg::tensor::Scalar;

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

pub fn instance(id: &str, entity: &str, pre: &str, pos: &str, refex: &str) -> RefexInstance {
    let refex = toks(refex);
    RefexInstance {
        id: format!("{id}:0"),
        text_id: id.to_string(),
        slot: 0,
        entity: entity.to_string(),
        pre_context: toks(pre),
        pos_context: toks(pos),
        form: classify_form(&refex),
        refex,
        features: None,
    }
}

pub fn toy_instances() -> Vec<RefexInstance> {
    vec![
        instance("t1", "Perth", "", "is a city in australia .", "Perth"),
        instance("t2", "Perth", "perth is big .", "has a port .", "It"),
        instance("t3", "Australia", "perth is in", ".", "Australia"),
        instance("t4", "Alan_Bean", "", "was a pilot .", "Alan Bean"),
        instance("t5", "Alan_Bean", "alan_bean flew .", "was born in 1932 .", "He"),
    ]
}

pub fn small_config(variant: DecoderVariant, dims: (usize, usize)) -> ModelConfig {
    ModelConfig {
        embedding_dim: dims.0,
        hidden_dim: dims.1,
        dropout: 0.0,
        beam_size: 5,
        max_epochs: 5,
        batch_size: 4,
        variant,
        seed: 7,
        ..ModelConfig::default()
    }
}

pub fn model_for<S: Scalar>(data: &[RefexInstance], config: ModelConfig) -> NeuralModel<S> {
    let (input, output) = build_vocab(data, 1).unwrap();
    NeuralModel::new(config, input, output).unwrap()
}
