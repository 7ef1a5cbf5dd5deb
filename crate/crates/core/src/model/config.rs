use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderVariant {
    /// Context is the time-averaged annotations of both sides.
    Seq2seq,
    /// Per-side attention, summaries concatenated.
    Catt,
    /// Per-side attention followed by attention over the two summaries.
    Hieratt,
}

impl DecoderVariant {
    pub const ALL: [DecoderVariant; 3] = [Self::Seq2seq, Self::Catt, Self::Hieratt];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Seq2seq => "seq2seq",
            Self::Catt => "catt",
            Self::Hieratt => "hieratt",
        }
    }
}

impl fmt::Display for DecoderVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecoderVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown decoder variant {s:?}")))
    }
}

/// Architecture, decoding and training settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    /// Per direction in the encoders; also the decoder and attention width.
    pub hidden_dim: usize,
    pub dropout: f64,
    pub beam_size: usize,
    pub max_len: usize,
    pub eos_stop_count: usize,
    pub length_norm_alpha: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub variant: DecoderVariant,
    pub seed: u64,
    /// Global gradient-norm clip; 0 disables.
    pub clip_norm: f64,
    pub adadelta_rho: f64,
    pub adadelta_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embedding_dim: 300,
            hidden_dim: 512,
            dropout: 0.2,
            beam_size: 5,
            max_len: 30,
            eos_stop_count: 2,
            length_norm_alpha: 0.6,
            batch_size: 40,
            max_epochs: 60,
            patience: 20,
            variant: DecoderVariant::Catt,
            seed: 1,
            clip_norm: 5.0,
            adadelta_rho: 0.95,
            adadelta_eps: 1e-6,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.embedding_dim > 0, "embedding_dim must be positive"),
            (self.hidden_dim > 0, "hidden_dim must be positive"),
            ((0.0..1.0).contains(&self.dropout), "dropout must be in [0, 1)"),
            (self.beam_size >= 1, "beam_size must be at least 1"),
            (self.max_len >= 1, "max_len must be at least 1"),
            (self.eos_stop_count >= 1, "eos_stop_count must be at least 1"),
            (self.length_norm_alpha >= 0.0, "length_norm_alpha must be non-negative"),
            (self.batch_size >= 1, "batch_size must be at least 1"),
            (self.max_epochs >= 1, "max_epochs must be at least 1"),
            (self.clip_norm >= 0.0, "clip_norm must be non-negative"),
            (self.adadelta_rho > 0.0 && self.adadelta_rho < 1.0, "adadelta_rho must be in (0, 1)"),
            (self.adadelta_eps > 0.0, "adadelta_eps must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config(msg.to_string())),
            None => Ok(()),
        }
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "embedding_dim" => self.embedding_dim = parse(key, value)?,
            "hidden_dim" => self.hidden_dim = parse(key, value)?,
            "dropout" | "dropout_p" => self.dropout = parse(key, value)?,
            "beam_size" | "beam" => self.beam_size = parse(key, value)?,
            "max_len" => self.max_len = parse(key, value)?,
            "eos_stop_count" => self.eos_stop_count = parse(key, value)?,
            "length_norm_alpha" => self.length_norm_alpha = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "variant" | "decoder_variant" => self.variant = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "clip_norm" => self.clip_norm = parse(key, value)?,
            "adadelta_rho" => self.adadelta_rho = parse(key, value)?,
            "adadelta_eps" => self.adadelta_eps = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies flat `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got {line:?}")))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        format!(
            "embedding_dim={}\nhidden_dim={}\ndropout={}\nbeam_size={}\nmax_len={}\neos_stop_count={}\n\
             length_norm_alpha={}\nbatch_size={}\nmax_epochs={}\npatience={}\nvariant={}\nseed={}\n\
             clip_norm={}\nadadelta_rho={}\nadadelta_eps={}\n",
            self.embedding_dim,
            self.hidden_dim,
            self.dropout,
            self.beam_size,
            self.max_len,
            self.eos_stop_count,
            self.length_norm_alpha,
            self.batch_size,
            self.max_epochs,
            self.patience,
            self.variant,
            self.seed,
            self.clip_norm,
            self.adadelta_rho,
            self.adadelta_eps
        )
    }
}
