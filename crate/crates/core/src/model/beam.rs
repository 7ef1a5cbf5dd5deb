use std::cmp::Ordering;

use crate::corpus::{RefexInstance, Vocabulary, BOS, EOS};
use crate::error::Result;
use crate::tensor::{Scalar, Tape};

use super::network::{DecoderState, Dropout, NeuralModel};

/// Length penalty `((5 + len) / 6)^alpha`.
pub fn length_penalty(len: usize, alpha: f64) -> f64 {
    ((5.0 + len as f64) / 6.0).powf(alpha)
}

/// A finished or partial decoder output.
#[derive(Clone, Debug, PartialEq)]
pub struct Hypothesis {
    /// Output-vocabulary ids, EOS emissions included.
    pub tokens: Vec<usize>,
    pub log_prob: f64,
    pub eos_seen: usize,
}

impl Hypothesis {
    pub fn score(&self, alpha: f64) -> f64 {
        self.log_prob / length_penalty(self.tokens.len(), alpha)
    }

    /// Tokens up to the first EOS, as strings.
    pub fn surface(&self, vocab: &Vocabulary) -> Vec<String> {
        self.tokens
            .iter()
            .take_while(|&&t| t != EOS)
            .map(|&t| vocab.token(t).to_string())
            .collect()
    }
}

fn lexical(vocab: &Vocabulary, a: &[usize], b: &[usize]) -> Ordering {
    a.iter().map(|&t| vocab.token(t)).cmp(b.iter().map(|&t| vocab.token(t)))
}

/// Best-first order over hypotheses of any length: higher normalized score,
/// then shorter, then lexicographically smaller.
pub fn rank(a: &Hypothesis, b: &Hypothesis, alpha: f64, vocab: &Vocabulary) -> Ordering {
    b.score(alpha)
        .total_cmp(&a.score(alpha))
        .then(a.tokens.len().cmp(&b.tokens.len()))
        .then_with(|| lexical(vocab, &a.tokens, &b.tokens))
}

struct Live {
    hyp: Hypothesis,
    state: DecoderState,
}

struct Candidate {
    parent: usize,
    token: usize,
    log_prob: f64,
}

fn log_probs<S: Scalar>(tape: &mut Tape<S>, logits: crate::tensor::Var) -> Result<Vec<f64>> {
    let lp = tape.log_softmax(logits)?;
    Ok(tape.value(lp).to_f64())
}

impl<S: Scalar> NeuralModel<S> {
    /// Length-normalized beam search. Returns every finished hypothesis in
    /// rank order; the first is the prediction.
    pub fn beam_search_hypotheses(&self, instance: &RefexInstance, beam_size: usize) -> Result<Vec<Hypothesis>> {
        let cfg = self.config();
        let (alpha, max_len, stop) = (cfg.length_norm_alpha, cfg.max_len, cfg.eos_stop_count);
        let beam_size = beam_size.max(1);
        let vocab = self.output_vocab();
        let mut tape = Tape::new(self.params());
        let mut dropout = Dropout::eval();
        let ctx = self.prepare(&mut tape, instance, &mut dropout)?;
        let mut live = vec![Live {
            hyp: Hypothesis {
                tokens: Vec::new(),
                log_prob: 0.0,
                eos_seen: 0,
            },
            state: self.initial_state(&mut tape),
        }];
        let mut finished: Vec<Hypothesis> = Vec::new();
        while !live.is_empty() && finished.len() < beam_size {
            let mut states = Vec::with_capacity(live.len());
            let mut candidates = Vec::new();
            for (i, l) in live.iter().enumerate() {
                let prev = l.hyp.tokens.last().copied().unwrap_or(BOS);
                let (state, logits) = self.decoder_step(&mut tape, &ctx, l.state, prev, &mut dropout)?;
                states.push(state);
                for (token, lp) in log_probs(&mut tape, logits)?.into_iter().enumerate() {
                    candidates.push(Candidate {
                        parent: i,
                        token,
                        log_prob: l.hyp.log_prob + lp,
                    });
                }
            }
            // All candidates share one length, so raw log-probability gives
            // the same order as the normalized score.
            let order = |a: &Candidate, b: &Candidate| {
                b.log_prob.total_cmp(&a.log_prob).then_with(|| {
                    let pa = &live[a.parent].hyp.tokens;
                    let pb = &live[b.parent].hyp.tokens;
                    pa.iter()
                        .chain([&a.token])
                        .map(|&t| vocab.token(t))
                        .cmp(pb.iter().chain([&b.token]).map(|&t| vocab.token(t)))
                })
            };
            let keep = beam_size.min(candidates.len());
            if keep < candidates.len() {
                candidates.select_nth_unstable_by(keep - 1, order);
                candidates.truncate(keep);
            }
            candidates.sort_by(order);
            let mut next = Vec::with_capacity(keep);
            for c in candidates {
                let parent = &live[c.parent].hyp;
                let mut tokens = parent.tokens.clone();
                tokens.push(c.token);
                let hyp = Hypothesis {
                    eos_seen: parent.eos_seen + usize::from(c.token == EOS),
                    tokens,
                    log_prob: c.log_prob,
                };
                if hyp.eos_seen >= stop || hyp.tokens.len() >= max_len {
                    finished.push(hyp);
                } else {
                    next.push(Live {
                        hyp,
                        state: states[c.parent],
                    });
                }
            }
            live = next;
        }
        finished.sort_by(|a, b| rank(a, b, alpha, vocab));
        Ok(finished)
    }

    /// Prediction for one instance with EOS tokens stripped.
    pub fn beam_search(&self, instance: &RefexInstance, beam_size: usize) -> Result<Vec<String>> {
        let hyps = self.beam_search_hypotheses(instance, beam_size)?;
        Ok(hyps.first().map(|h| h.surface(self.output_vocab())).unwrap_or_default())
    }

    /// Step-by-step argmax decoding. Equal log-probabilities go to the
    /// lexicographically smaller token.
    pub fn greedy_decode(&self, instance: &RefexInstance) -> Result<Vec<String>> {
        let cfg = self.config();
        let vocab = self.output_vocab();
        let mut tape = Tape::new(self.params());
        let mut dropout = Dropout::eval();
        let ctx = self.prepare(&mut tape, instance, &mut dropout)?;
        let mut state = self.initial_state(&mut tape);
        let mut hyp = Hypothesis {
            tokens: Vec::new(),
            log_prob: 0.0,
            eos_seen: 0,
        };
        while hyp.eos_seen < cfg.eos_stop_count && hyp.tokens.len() < cfg.max_len {
            let prev = hyp.tokens.last().copied().unwrap_or(BOS);
            let (next, logits) = self.decoder_step(&mut tape, &ctx, state, prev, &mut dropout)?;
            state = next;
            let mut best: Option<(usize, f64)> = None;
            for (t, lp) in log_probs(&mut tape, logits)?.into_iter().enumerate() {
                let total = hyp.log_prob + lp;
                let better = match best {
                    None => true,
                    Some((b, bl)) => total > bl || (total == bl && vocab.token(t) < vocab.token(b)),
                };
                if better {
                    best = Some((t, total));
                }
            }
            let (t, total) = best.expect("output vocabulary is never empty");
            hyp.tokens.push(t);
            hyp.log_prob = total;
            hyp.eos_seen += usize::from(t == EOS);
        }
        Ok(hyp.surface(vocab))
    }
}
