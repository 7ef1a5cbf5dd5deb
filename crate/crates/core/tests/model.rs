mod common;

use common::{instance, model_for, small_config, toks, toy_instances};
use neuralreg::corpus::RefexInstance;
use neuralreg::model::{
    attention, context_catt, context_hieratt, context_seq2seq, context_width, lstm_cell, train, AttentionMemory,
    AttentionParams, DecoderVariant, Dropout, LstmParams, ModelConfig, NeuralModel, Side,
};
use neuralreg::tensor::{read_params, write_params, ParamStore, RngState, Tape, Tensor};
use neuralreg::Execution;
use proptest::prelude::*;

/// Central differences at eps = 1e-5 on losses of order 10 carry round-off
/// near 1e-10, so relative error is measured against at least this value.
const GRAD_FLOOR: f64 = 1e-5;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn loss_of(model: &NeuralModel<f64>, data: &[RefexInstance]) -> f64 {
    let mut tape = Tape::new(model.params());
    let mut total = 0.0;
    for inst in data {
        let l = model.instance_loss(&mut tape, inst, &mut Dropout::eval()).unwrap();
        total += tape.value(l).item();
    }
    total
}

fn gradient_check(variant: DecoderVariant) {
    let data = toy_instances()[..3].to_vec();
    let mut model: NeuralModel<f64> = model_for(&data, small_config(variant, (4, 3)));
    let mut tape = Tape::new(model.params());
    let losses: Vec<_> = data
        .iter()
        .map(|i| model.instance_loss(&mut tape, i, &mut Dropout::eval()).unwrap())
        .collect();
    let mean = tape.mean(&losses).unwrap();
    let total = tape.scale(mean, losses.len() as f64).unwrap();
    let grads = tape.backward(total).unwrap();
    drop(tape);

    let eps = 1e-5;
    let mut worst = 0.0f64;
    let ids: Vec<_> = model.params().ids().collect();
    for id in ids {
        let name = model.params().name(id).to_string();
        let n = model.params().get(id).len();
        let step = (n / 7).max(1);
        let mut checked = 0;
        for k in (0..n).step_by(step) {
            let orig = model.params().get(id).data()[k];
            model.params_mut().get_mut(id).data_mut()[k] = orig + eps;
            let up = loss_of(&model, &data);
            model.params_mut().get_mut(id).data_mut()[k] = orig - eps;
            let down = loss_of(&model, &data);
            model.params_mut().get_mut(id).data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = grads.get(id).data()[k];
            let rel = (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(GRAD_FLOOR);
            assert!(
                rel < 1e-4,
                "{variant} {name}[{k}]: analytic {analytic}, numeric {numeric}, rel {rel}"
            );
            worst = worst.max(rel);
            checked += 1;
        }
        assert!(checked > 0, "{name} unchecked");
    }
    assert!(worst < 1e-4);
}

#[test]
fn gradient_check_seq2seq() {
    gradient_check(DecoderVariant::Seq2seq);
}

#[test]
fn gradient_check_catt() {
    gradient_check(DecoderVariant::Catt);
}

#[test]
fn gradient_check_hieratt() {
    gradient_check(DecoderVariant::Hieratt);
}

fn lstm_store(w: &[f64], b: &[f64], input: usize, hidden: usize) -> (ParamStore<f64>, LstmParams) {
    let mut store = ParamStore::new();
    let wid = store.add("w", Tensor::matrix(4 * hidden, input + hidden, w.to_vec()).unwrap());
    let bid = store.add("b", Tensor::vector(b.to_vec()));
    (store, LstmParams { w: wid, b: bid, hidden })
}

#[test]
fn lstm_zero_weights_give_zero_state() {
    let (store, p) = lstm_store(&[0.0; 8], &[0.0; 4], 1, 1);
    let mut tape = Tape::new(&store);
    let x = tape.input(Tensor::vector(vec![3.0]));
    let h = tape.input(Tensor::vector(vec![0.5]));
    let c = tape.input(Tensor::vector(vec![0.0]));
    let (h, _) = lstm_cell(&mut tape, &p, x, h, c).unwrap();
    assert_eq!(tape.value(h).data(), &[0.0]);
}

#[test]
fn lstm_matches_scalar_trace() {
    let (input, hidden) = (2, 2);
    let w: Vec<f64> = (0..4 * hidden * (input + hidden)).map(|i| ((i * 37 % 19) as f64 - 9.0) / 10.0).collect();
    let b: Vec<f64> = (0..4 * hidden).map(|i| (i as f64 - 3.0) / 7.0).collect();
    let (store, p) = lstm_store(&w, &b, input, hidden);
    let (x, h0, c0) = ([0.3, -0.7], [0.1, 0.2], [-0.4, 0.6]);
    let mut tape = Tape::new(&store);
    let xv = tape.input(Tensor::vector(x.to_vec()));
    let hv = tape.input(Tensor::vector(h0.to_vec()));
    let cv = tape.input(Tensor::vector(c0.to_vec()));
    let (h, c) = lstm_cell(&mut tape, &p, xv, hv, cv).unwrap();

    let xh = [x[0], x[1], h0[0], h0[1]];
    let z: Vec<f64> = (0..8)
        .map(|r| b[r] + (0..4).map(|k| w[r * 4 + k] * xh[k]).sum::<f64>())
        .collect();
    for j in 0..2 {
        let (i, f, o, g) = (sigmoid(z[j]), sigmoid(z[2 + j]), sigmoid(z[4 + j]), z[6 + j].tanh());
        let cj = f * c0[j] + i * g;
        let hj = o * cj.tanh();
        assert!((tape.value(c).data()[j] - cj).abs() < 1e-12);
        assert!((tape.value(h).data()[j] - hj).abs() < 1e-12);
        assert!(hj.abs() < 1.0);
    }
}

fn attention_store(w: &[f64], u: &[f64], v: &[f64], a: usize, ds: usize, dk: usize) -> (ParamStore<f64>, AttentionParams) {
    let mut store = ParamStore::new();
    let p = AttentionParams {
        w: store.add("w", Tensor::matrix(a, ds, w.to_vec()).unwrap()),
        u: store.add("u", Tensor::matrix(a, dk, u.to_vec()).unwrap()),
        v: store.add("v", Tensor::vector(v.to_vec())),
    };
    (store, p)
}

#[test]
fn attention_matches_scalar_trace() {
    let (w, u, v) = ([0.5, -0.2, 0.1, 0.3], [1.0, 0.4, -0.6, 0.2], [0.7, -1.1]);
    let (store, p) = attention_store(&w, &u, &v, 2, 2, 2);
    let s = [0.2, -0.5];
    let hs = [[1.0, 0.0], [0.3, 0.8], [-0.5, 0.5]];
    let mut tape = Tape::new(&store);
    let sv = tape.input(Tensor::vector(s.to_vec()));
    let ann: Vec<_> = hs.iter().map(|h| tape.input(Tensor::vector(h.to_vec()))).collect();
    let (alpha, summary) = attention(&mut tape, sv, &ann, p).unwrap();

    let e: Vec<f64> = hs
        .iter()
        .map(|h| {
            (0..2)
                .map(|r| {
                    let pre = w[r * 2] * s[0] + w[r * 2 + 1] * s[1] + u[r * 2] * h[0] + u[r * 2 + 1] * h[1];
                    v[r] * pre.tanh()
                })
                .sum()
        })
        .collect();
    let z: f64 = e.iter().map(|x| x.exp()).sum();
    let a: Vec<f64> = e.iter().map(|x| x.exp() / z).collect();
    for j in 0..3 {
        assert!((tape.value(alpha).data()[j] - a[j]).abs() < 1e-12);
    }
    for d in 0..2 {
        let expect: f64 = (0..3).map(|j| a[j] * hs[j][d]).sum();
        assert!((tape.value(summary).data()[d] - expect).abs() < 1e-12);
    }
}

#[test]
fn attention_degenerate_cases() {
    let (store, p) = attention_store(&[0.3; 4], &[0.2, -0.1, 0.5, 0.4], &[1.0, -1.0], 2, 2, 2);
    let mut tape = Tape::new(&store);
    let s = tape.input(Tensor::vector(vec![0.1, 0.9]));
    let h = tape.input(Tensor::vector(vec![0.4, -0.2]));
    let (alpha, summary) = attention(&mut tape, s, &[h], p).unwrap();
    assert_eq!(tape.value(alpha).data(), &[1.0]);
    assert_eq!(tape.value(summary).data(), tape.value(h).data());
    let (alpha, _) = attention(&mut tape, s, &[h, h, h, h], p).unwrap();
    for a in tape.value(alpha).data() {
        assert!((a - 0.25).abs() < 1e-12);
    }
    assert!(attention(&mut tape, s, &[], p).is_err());
}

#[test]
fn attention_with_zero_query_depends_only_on_keys() {
    let (store, p) = attention_store(&[0.0; 4], &[0.2, -0.1, 0.5, 0.4], &[1.0, -1.0], 2, 2, 2);
    let mut tape = Tape::new(&store);
    let s1 = tape.input(Tensor::vector(vec![0.1, 0.9]));
    let s2 = tape.input(Tensor::vector(vec![-3.0, 2.0]));
    let hs: Vec<_> = [[0.4, -0.2], [1.0, 0.3]]
        .iter()
        .map(|h| tape.input(Tensor::vector(h.to_vec())))
        .collect();
    let (a1, _) = attention(&mut tape, s1, &hs, p).unwrap();
    let (a2, _) = attention(&mut tape, s2, &hs, p).unwrap();
    assert_eq!(tape.value(a1).data(), tape.value(a2).data());
}

#[test]
fn catt_concatenates_single_annotations() {
    let (store, p) = attention_store(&[0.3; 4], &[0.2, -0.1, 0.5, 0.4], &[1.0, -1.0], 2, 2, 2);
    let mut tape = Tape::new(&store);
    let s = tape.input(Tensor::vector(vec![0.1, 0.9]));
    let hp = tape.input(Tensor::vector(vec![0.4, -0.2]));
    let hq = tape.input(Tensor::vector(vec![0.7, 0.1]));
    let mp = AttentionMemory::new(&mut tape, &[hp], p).unwrap();
    let mq = AttentionMemory::new(&mut tape, &[hq], p).unwrap();
    let c = context_catt(&mut tape, s, Some(&mp), Some(&mq), 2).unwrap();
    assert_eq!(tape.value(c).data(), &[0.4, -0.2, 0.7, 0.1]);
    let c = context_catt(&mut tape, s, None, Some(&mq), 2).unwrap();
    assert_eq!(tape.value(c).data(), &[0.0, 0.0, 0.7, 0.1]);
}

#[test]
fn context_widths_at_default_sizes() {
    let mut c = ModelConfig::default();
    assert_eq!(context_width(&c), 2048);
    c.variant = DecoderVariant::Seq2seq;
    assert_eq!(context_width(&c), 2048);
    c.variant = DecoderVariant::Hieratt;
    assert_eq!(context_width(&c), 512);
}

#[test]
fn seq2seq_context_means() {
    let store = ParamStore::<f64>::new();
    let mut tape = Tape::new(&store);
    let a = tape.input(Tensor::vector(vec![1.0, 2.0]));
    let b = tape.input(Tensor::vector(vec![3.0, -2.0]));
    let c = context_seq2seq(&mut tape, &[a], &[a, b], 2).unwrap();
    assert_eq!(tape.value(c).data(), &[1.0, 2.0, 2.0, 0.0]);
    let c = context_seq2seq(&mut tape, &[b, b, b], &[], 2).unwrap();
    assert_eq!(tape.value(c).data(), &[3.0, -2.0, 0.0, 0.0]);
}

#[test]
fn hieratt_trace_and_symmetry() {
    let mut store = ParamStore::new();
    let mk = |store: &mut ParamStore<f64>, tag: &str, w: &[f64], u: &[f64], v: &[f64]| AttentionParams {
        w: store.add(format!("{tag}w"), Tensor::matrix(2, 2, w.to_vec()).unwrap()),
        u: store.add(format!("{tag}u"), Tensor::matrix(2, 2, u.to_vec()).unwrap()),
        v: store.add(format!("{tag}v"), Tensor::vector(v.to_vec())),
    };
    let (w0, u0, v0) = ([0.1, 0.2, -0.3, 0.4], [0.5, -0.6, 0.7, 0.8], [1.0, 0.5]);
    let (w1, u1, v1) = ([-0.2, 0.1, 0.3, 0.3], [0.9, 0.1, -0.4, 0.2], [-0.5, 1.5]);
    let p = [mk(&mut store, "a", &w0, &u0, &v0), mk(&mut store, "b", &w1, &u1, &v1)];
    let q = [p[0], p[0]];
    let s = [0.3, -0.1];
    let (c0, c1) = ([0.6, -0.2], [0.1, 0.9]);
    let mut tape = Tape::new(&store);
    let sv = tape.input(Tensor::vector(s.to_vec()));
    let a = tape.input(Tensor::vector(c0.to_vec()));
    let b = tape.input(Tensor::vector(c1.to_vec()));
    let (beta, c) = context_hieratt(&mut tape, sv, a, b, &p).unwrap();

    let mv = |m: &[f64], x: &[f64]| [m[0] * x[0] + m[1] * x[1], m[2] * x[0] + m[3] * x[1]];
    let proj = [mv(&u0, &c0), mv(&u1, &c1)];
    let e: Vec<f64> = [(&w0, &v0, proj[0]), (&w1, &v1, proj[1])]
        .iter()
        .map(|(w, v, pr)| {
            let q = mv(*w, &s);
            v[0] * (q[0] + pr[0]).tanh() + v[1] * (q[1] + pr[1]).tanh()
        })
        .collect();
    let z = e[0].exp() + e[1].exp();
    let bt = [e[0].exp() / z, e[1].exp() / z];
    let bv = tape.value(beta).data().to_vec();
    assert!((bv[0] - bt[0]).abs() < 1e-12 && (bv[1] - bt[1]).abs() < 1e-12);
    assert!((bv[0] + bv[1] - 1.0).abs() < 1e-12);
    for d in 0..2 {
        let expect = bt[0] * proj[0][d] + bt[1] * proj[1][d];
        assert!((tape.value(c).data()[d] - expect).abs() < 1e-12);
    }
    let (beta, _) = context_hieratt(&mut tape, sv, a, a, &q).unwrap();
    assert_eq!(tape.value(beta).data(), &[0.5, 0.5]);
}

#[test]
fn encoder_annotations_and_direction_structure() {
    let data = toy_instances();
    let mut model: NeuralModel<f64> = model_for(&data, small_config(DecoderVariant::Catt, (4, 3)));
    // Give the forward encoder the backward weights so the two directions are comparable.
    for suffix in ["w", "b"] {
        let src = model.params().find(&format!("enc_pre_bwd_{suffix}")).unwrap();
        let dst = model.params().find(&format!("enc_pre_fwd_{suffix}")).unwrap();
        let copy = model.params().get(src).clone();
        *model.params_mut().get_mut(dst) = copy;
    }
    let tokens = toks("perth is a city");
    let reversed: Vec<String> = tokens.iter().rev().cloned().collect();
    let mut tape = Tape::new(model.params());
    let mut d = Dropout::eval();
    let fwd = model.encode_context(&mut tape, &tokens, Side::Pre, &mut d).unwrap();
    let rev = model.encode_context(&mut tape, &reversed, Side::Pre, &mut d).unwrap();
    let n = tokens.len();
    for t in 0..n {
        assert_eq!(tape.shape(fwd[t]), &[6]);
        let backward_half = &tape.value(fwd[t]).data()[3..];
        let forward_half = &tape.value(rev[n - 1 - t]).data()[..3];
        for (x, y) in backward_half.iter().zip(forward_half) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    assert!(model.encode_context(&mut tape, &[], Side::Pos, &mut d).unwrap().is_empty());
    let one = model.encode_context(&mut tape, &toks("perth"), Side::Pos, &mut d).unwrap();
    assert_eq!(one.len(), 1);
}

#[test]
fn default_size_annotation_width() {
    let data = vec![instance("t1", "Perth", "", "is", "Perth")];
    let model: NeuralModel<f32> = model_for(&data, ModelConfig::default());
    let mut tape = Tape::new(model.params());
    let ann = model
        .encode_context(&mut tape, &toks("is"), Side::Pos, &mut Dropout::eval())
        .unwrap();
    assert_eq!(tape.shape(ann[0]), &[1024]);
}

#[test]
fn unknown_entity_is_vocabulary_error() {
    let data = toy_instances();
    let model: NeuralModel<f64> = model_for(&data, small_config(DecoderVariant::Hieratt, (4, 3)));
    let stranger = instance("x", "Nobody_Here", "a", "b", "Nobody");
    let err = model.beam_search(&stranger, 1).unwrap_err();
    assert!(matches!(err, neuralreg::Error::Vocabulary(_)));
}

#[test]
fn decoder_distribution_and_gold_gradient_sign() {
    let data = toy_instances();
    for variant in DecoderVariant::ALL {
        let model: NeuralModel<f64> = model_for(&data, small_config(variant, (4, 3)));
        let inst = &data[1];
        let mut tape = Tape::new(model.params());
        let mut d = Dropout::eval();
        let ctx = model.prepare(&mut tape, inst, &mut d).unwrap();
        let s0 = model.initial_state(&mut tape);
        let (_, logits) = model.decoder_step(&mut tape, &ctx, s0, neuralreg::corpus::BOS, &mut d).unwrap();
        let (_, again) = model.decoder_step(&mut tape, &ctx, s0, neuralreg::corpus::BOS, &mut d).unwrap();
        assert_eq!(tape.value(logits).data(), tape.value(again).data());
        let dist = tape.softmax(logits).unwrap();
        let total: f64 = tape.value(dist).data().iter().sum();
        assert!((total - 1.0).abs() < 1e-6);

        // d NLL / d out_b[gold], by central differences, is p_gold − 1 < 0.
        let gold = model.target_ids(inst)[0];
        let bias = model.params().find("out_b").unwrap();
        let mut plus = model.clone();
        plus.params_mut().get_mut(bias).data_mut()[gold] += 1e-5;
        let mut minus = model.clone();
        minus.params_mut().get_mut(bias).data_mut()[gold] -= 1e-5;
        let first_token = |m: &NeuralModel<f64>| {
            let mut tape = Tape::new(m.params());
            let mut d = Dropout::eval();
            let ctx = m.prepare(&mut tape, inst, &mut d).unwrap();
            let s0 = m.initial_state(&mut tape);
            let (_, l) = m.decoder_step(&mut tape, &ctx, s0, neuralreg::corpus::BOS, &mut d).unwrap();
            let nll = tape.nll(l, gold).unwrap();
            tape.value(nll).item()
        };
        assert!(first_token(&plus) - first_token(&minus) < 0.0);
    }
}

#[test]
fn uniform_outputs_give_log_vocab_loss() {
    let data = toy_instances();
    let mut model: NeuralModel<f64> = model_for(&data, small_config(DecoderVariant::Catt, (4, 3)));
    for name in ["out_w", "out_b"] {
        let id = model.params().find(name).unwrap();
        model.params_mut().get_mut(id).data_mut().fill(0.0);
    }
    let v = model.output_vocab().len() as f64;
    let inst = &data[3];
    let expected = (inst.refex.len() + 2) as f64 * v.ln();
    let got = model.batch_loss(std::slice::from_ref(inst)).unwrap();
    assert!((got - expected).abs() < 1e-9);
}

#[test]
fn beam_one_equals_greedy() {
    let data = toy_instances();
    for variant in DecoderVariant::ALL {
        for seed in 0..4 {
            let mut cfg = small_config(variant, (5, 4));
            cfg.seed = seed;
            let model: NeuralModel<f64> = model_for(&data, cfg);
            for inst in &data {
                assert_eq!(model.beam_search(inst, 1).unwrap(), model.greedy_decode(inst).unwrap());
            }
        }
    }
}

#[test]
fn beam_hypotheses_are_well_formed() {
    let data = toy_instances();
    let model: NeuralModel<f64> = model_for(&data, small_config(DecoderVariant::Hieratt, (5, 4)));
    let cfg = model.config().clone();
    for inst in &data {
        let hyps = model.beam_search_hypotheses(inst, 5).unwrap();
        assert!(!hyps.is_empty() && hyps.len() <= 5 + 4);
        for h in &hyps {
            assert!(h.log_prob <= 0.0);
            assert!(h.tokens.len() <= cfg.max_len);
            assert!(h.eos_seen == cfg.eos_stop_count || h.tokens.len() == cfg.max_len);
        }
        for pair in hyps.windows(2) {
            let ord = neuralreg::model::rank(&pair[0], &pair[1], cfg.length_norm_alpha, model.output_vocab());
            assert_ne!(ord, std::cmp::Ordering::Greater);
        }
        assert_eq!(model.beam_search(inst, 5).unwrap(), model.beam_search(inst, 5).unwrap());
    }
}

#[test]
fn save_load_round_trip() {
    let data = toy_instances();
    for variant in DecoderVariant::ALL {
        let model: NeuralModel<f32> = model_for(&data, small_config(variant, (5, 4)));
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let loaded = NeuralModel::<f32>::load(&mut buf.as_slice()).unwrap();
        assert_eq!(loaded.config(), model.config());
        for ((_, _, a), (_, _, b)) in model.params().iter().zip(loaded.params().iter()) {
            let bits = |t: &Tensor<f32>| t.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
        for inst in &data {
            assert_eq!(model.beam_search(inst, 3).unwrap(), loaded.beam_search(inst, 3).unwrap());
        }
        let mut again = Vec::new();
        loaded.save(&mut again).unwrap();
        assert_eq!(buf, again);
    }
}

#[test]
fn load_rejects_mismatched_shapes() {
    let data = toy_instances();
    let model: NeuralModel<f32> = model_for(&data, small_config(DecoderVariant::Catt, (5, 4)));
    let mut buf = Vec::new();
    model.save(&mut buf).unwrap();
    let (header, params) = read_params::<f32>(&mut buf.as_slice()).unwrap();
    let mut json: serde_json::Value = serde_json::from_slice(&header).unwrap();
    json["config"]["variant"] = "hieratt".into();
    let mut forged = Vec::new();
    write_params(&mut forged, &serde_json::to_vec(&json).unwrap(), &params).unwrap();
    assert!(matches!(
        NeuralModel::<f32>::load(&mut forged.as_slice()),
        Err(neuralreg::Error::Dimension(_))
    ));
    assert!(NeuralModel::<f32>::load(&mut &buf[..10]).is_err());
}

#[test]
fn training_is_deterministic_and_thread_independent() {
    let data = toy_instances();
    let mut cfg = small_config(DecoderVariant::Catt, (6, 5));
    cfg.dropout = 0.2;
    cfg.max_epochs = 3;
    let run = |exec| {
        let model: NeuralModel<f32> = model_for(&data, cfg.clone());
        train(model, &data, &data[..2], exec, |_| {}).unwrap()
    };
    let a = run(Execution::Sequential);
    let b = run(Execution::Parallel);
    let c = run(Execution::Parallel);
    for other in [&b, &c] {
        assert_eq!(a.history.len(), other.history.len());
        for (x, y) in a.history.iter().zip(&other.history) {
            assert_eq!((x.epoch, x.train_loss, x.dev_accuracy), (y.epoch, y.train_loss, y.dev_accuracy));
        }
        for ((_, _, p), (_, _, q)) in a.model.params().iter().zip(other.model.params().iter()) {
            assert_eq!(p.data(), q.data());
        }
    }
}

#[test]
fn training_reduces_loss() {
    let data = toy_instances();
    let mut cfg = small_config(DecoderVariant::Seq2seq, (8, 8));
    cfg.max_epochs = 30;
    cfg.patience = 100;
    cfg.batch_size = 5;
    let model: NeuralModel<f32> = model_for(&data, cfg);
    let out = train(model, &data, &data, Execution::default(), |_| {}).unwrap();
    let first = out.history.first().unwrap().train_loss;
    let last = out.history.last().unwrap().train_loss;
    assert!(last < first * 0.8, "loss {first} -> {last}");
    assert!(out.history.iter().all(|r| r.train_loss >= 0.0));
}

#[test]
fn empty_splits_rejected() {
    let data = toy_instances();
    let model: NeuralModel<f32> = model_for(&data, small_config(DecoderVariant::Catt, (4, 3)));
    assert!(train(model, &data, &[], Execution::Sequential, |_| {}).is_err());
}

#[test]
fn dropout_only_in_training() {
    let data = toy_instances();
    let mut cfg = small_config(DecoderVariant::Catt, (6, 5));
    cfg.dropout = 0.5;
    let model: NeuralModel<f64> = model_for(&data, cfg);
    let eval_loss = model.batch_loss(&data[..1]).unwrap();
    let mut tape = Tape::new(model.params());
    let l = model
        .instance_loss(&mut tape, &data[0], &mut Dropout::training(0.5, RngState::new(3)))
        .unwrap();
    assert_ne!(tape.value(l).item(), eval_loss);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn attention_weights_are_distributions(
        seed in 0u64..1000,
        n in 1usize..6,
        variant in prop::sample::select(vec![DecoderVariant::Catt, DecoderVariant::Hieratt]),
    ) {
        let data = toy_instances();
        let mut cfg = small_config(variant, (4, 3));
        cfg.seed = seed;
        let model: NeuralModel<f64> = model_for(&data, cfg);
        let mut tape = Tape::new(model.params());
        let mut d = Dropout::eval();
        let words = ["perth", "is", "a", "city", "in", "australia"];
        let tokens: Vec<String> = words[..n].iter().map(|s| s.to_string()).collect();
        let ann = model.encode_context(&mut tape, &tokens, Side::Pre, &mut d).unwrap();
        let p = model.attention_params(Side::Pre).unwrap();
        let s = tape.input(Tensor::vector((0..3).map(|i| (seed as f64 + i as f64).sin()).collect()));
        let (alpha, _) = attention(&mut tape, s, &ann, p).unwrap();
        let a = tape.value(alpha).data();
        prop_assert!(a.iter().all(|x| *x >= 0.0));
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn annotation_order_invariance(perm_seed in 0u64..1000) {
        use rand::seq::SliceRandom;
        let (store, p) = attention_store(&[0.3, -0.2, 0.1, 0.5], &[0.2, -0.1, 0.5, 0.4], &[1.0, -1.0], 2, 2, 2);
        let mut tape = Tape::new(&store);
        let s = tape.input(Tensor::vector(vec![0.1, 0.9]));
        let raw = [[0.4, -0.2], [1.0, 0.3], [-0.7, 0.6], [0.2, 0.2]];
        let ann: Vec<_> = raw.iter().map(|h| tape.input(Tensor::vector(h.to_vec()))).collect();
        let mut shuffled = ann.clone();
        shuffled.shuffle(&mut RngState::new(perm_seed));
        let m1 = context_seq2seq(&mut tape, &ann, &ann, 2).unwrap();
        let m2 = context_seq2seq(&mut tape, &shuffled, &shuffled, 2).unwrap();
        let (_, a1) = attention(&mut tape, s, &ann, p).unwrap();
        let (_, a2) = attention(&mut tape, s, &shuffled, p).unwrap();
        for (x, y) in tape.value(m1).data().iter().zip(tape.value(m2).data()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in tape.value(a1).data().iter().zip(tape.value(a2).data()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn token_order_changes_context_for_every_variant() {
    let data = toy_instances();
    for variant in DecoderVariant::ALL {
        let model: NeuralModel<f64> = model_for(&data, small_config(variant, (4, 3)));
        let a = instance("a", "Perth", "perth is a city", "", "It");
        let b = instance("b", "Perth", "city a is perth", "", "It");
        let ctx = |inst: &RefexInstance| {
            let mut tape = Tape::new(model.params());
            let mut d = Dropout::eval();
            let c = model.prepare(&mut tape, inst, &mut d).unwrap();
            let s0 = model.initial_state(&mut tape);
            let v = model.context(&mut tape, &c, s0.s).unwrap();
            tape.value(v).data().to_vec()
        };
        assert_ne!(ctx(&a), ctx(&b), "{variant}");
    }
}
