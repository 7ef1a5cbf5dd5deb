use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use neuralreg::corpus::{build_vocab, classify_form, RefexInstance};
use neuralreg::eval::bleu_significance;
use neuralreg::model::{DecoderVariant, ModelConfig, NeuralModel};
use neuralreg::Execution;

const ENTITIES: [&str; 6] = ["Perth", "Australia", "Alan_Bean", "Texas", "Elliot_See", "Dallas"];

fn corpus(n: usize) -> Vec<RefexInstance> {
    (0..n)
        .map(|i| {
            let entity = ENTITIES[i % ENTITIES.len()];
            let lower = entity.to_lowercase();
            let refex: Vec<String> = if i % 3 == 0 {
                vec!["it".into()]
            } else {
                entity.split('_').map(String::from).collect()
            };
            let pre = format!("{lower} is known . the place near");
            let pos = format!("was visited in {} by many .", 1900 + i % 50);
            RefexInstance {
                id: format!("b{i}:0"),
                text_id: format!("b{i}"),
                slot: 0,
                entity: entity.into(),
                pre_context: pre.split(' ').map(String::from).collect(),
                pos_context: pos.split(' ').map(String::from).collect(),
                form: classify_form(&refex),
                refex,
                features: None,
            }
        })
        .collect()
}

fn model(data: &[RefexInstance]) -> NeuralModel<f32> {
    let config = ModelConfig {
        embedding_dim: 32,
        hidden_dim: 32,
        variant: DecoderVariant::Catt,
        ..ModelConfig::default()
    };
    let (input, output) = build_vocab(data, 1).unwrap();
    NeuralModel::new(config, input, output).unwrap()
}

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_gradients(c: &mut Criterion) {
    let data = corpus(40);
    let m = model(&data);
    let mut group = c.benchmark_group("batch_gradients");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(m.batch_gradients(&data, 0, exec).unwrap()))
        });
    }
    group.finish();
}

fn bench_predict(c: &mut Criterion) {
    let data = corpus(24);
    let m = model(&data);
    let mut group = c.benchmark_group("beam_predict");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(m.predict_all(&data, 5, exec).unwrap()))
        });
    }
    group.finish();
}

fn bench_randomization(c: &mut Criterion) {
    let words = ["the", "city", "of", "perth", "is", "in", "australia", "."];
    let sent = |k: usize, drop: usize| -> Vec<String> {
        (0..12).filter(|j| !(j + k).is_multiple_of(drop)).map(|j| words[(j + k) % words.len()].to_string()).collect()
    };
    let refs: Vec<Vec<Vec<String>>> = (0..200).map(|k| vec![sent(k, 100)]).collect();
    let a: Vec<Vec<String>> = (0..200).map(|k| sent(k, 5)).collect();
    let b: Vec<Vec<String>> = (0..200).map(|k| sent(k, 3)).collect();
    let mut group = c.benchmark_group("bleu_randomization");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |bch, &exec| {
            bch.iter(|| black_box(bleu_significance(&a, &b, &refs, 2000, 1, exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_gradients, bench_predict, bench_randomization);
criterion_main!(benches);
