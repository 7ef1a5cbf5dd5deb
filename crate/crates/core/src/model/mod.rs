//! The neural generator: two bidirectional LSTM context encoders, an entity
//! embedding and an LSTM decoder whose context vector comes from one of three
//! variants (time-averaged annotations, concatenated per-side attention, or
//! hierarchical attention over the two side summaries).
//!
//! The decoder starts from zero state with `<bos>` as the first input and is
//! trained to emit the reference followed by `eos_stop_count` end tokens.
//! Training uses teacher forcing, Adadelta and dev-accuracy early stopping;
//! decoding uses length-normalized beam search.

mod beam;
mod config;
mod io;
mod network;
mod train;

pub use beam::{length_penalty, rank, Hypothesis};
pub use config::{DecoderVariant, ModelConfig};
pub use network::{
    attention, context_catt, context_hieratt, context_seq2seq, context_width, lstm_cell, AttentionMemory,
    AttentionParams, DecoderContext, DecoderState, Dropout, EncoderOutputs, LstmParams, NeuralModel, Side,
};
pub use train::{train, EpochRecord, StopReason, TrainOutcome, TrainState, SHARD_SIZE};
