use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use super::instance::RefexInstance;
use crate::error::{Error, Result};

pub const EOS: usize = 0;
pub const BOS: usize = 1;
pub const UNK: usize = 2;
pub const PAD: usize = 3;
const RESERVED: [&str; 4] = ["<eos>", "<bos>", "<unk>", "<pad>"];

/// Token ↔ index map with four reserved leading entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    pub fn new() -> Self {
        let tokens: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { tokens, index }
    }

    pub fn insert(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), self.tokens.len() - 1);
        self.tokens.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of `token`, or [`UNK`].
    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        for t in &self.tokens {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    pub fn read(r: impl BufRead, source: &str) -> Result<Self> {
        let lines: Vec<String> = r.lines().collect::<std::io::Result<_>>()?;
        Self::from_tokens(lines, source)
    }

    pub fn from_tokens(tokens: Vec<String>, source: &str) -> Result<Self> {
        if tokens.len() < RESERVED.len() || tokens[..4] != RESERVED {
            return Err(Error::parse(source, "vocabulary must start with the reserved tokens"));
        }
        let mut v = Vocabulary::new();
        for t in &tokens[4..] {
            if v.get(t).is_some() {
                return Err(Error::parse(source, format!("duplicate token {t:?}")));
            }
            v.insert(t);
        }
        Ok(v)
    }
}

/// Builds the shared input vocabulary (context tokens, lowercased entity
/// tokens and refex tokens) and the output vocabulary (refex tokens).
/// Tokens seen fewer than `min_freq` times are left out and map to UNK;
/// entity tokens are always kept.
pub fn build_vocab(train: &[RefexInstance], min_freq: usize) -> Result<(Vocabulary, Vocabulary)> {
    if train.is_empty() {
        return Err(Error::Contract("cannot build a vocabulary from an empty training set".into()));
    }
    let mut input_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut output_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for inst in train {
        for t in inst.pre_context.iter().chain(&inst.pos_context).chain(&inst.refex) {
            *input_counts.entry(t).or_default() += 1;
        }
        for t in &inst.refex {
            *output_counts.entry(t).or_default() += 1;
        }
    }
    let mut input = Vocabulary::new();
    let mut entities: Vec<String> = train.iter().map(RefexInstance::entity_token).collect();
    entities.sort();
    entities.dedup();
    for e in &entities {
        input.insert(e);
    }
    for (t, c) in input_counts {
        if c >= min_freq {
            input.insert(t);
        }
    }
    let mut output = Vocabulary::new();
    for (t, c) in output_counts {
        if c >= min_freq {
            output.insert(t);
        }
    }
    Ok((input, output))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Form;

    fn inst(entity: &str, pre: &[&str], refex: &[&str]) -> RefexInstance {
        RefexInstance {
            id: "t:0".into(),
            text_id: "t".into(),
            slot: 0,
            entity: entity.into(),
            pre_context: pre.iter().map(|s| s.to_string()).collect(),
            pos_context: vec![],
            refex: refex.iter().map(|s| s.to_string()).collect(),
            form: Form::Name,
            features: None,
        }
    }

    #[test]
    fn reserved_layout() {
        let v = Vocabulary::new();
        assert_eq!((v.token(EOS), v.token(BOS), v.token(UNK), v.token(PAD)), ("<eos>", "<bos>", "<unk>", "<pad>"));
    }

    #[test]
    fn min_freq_one_keeps_everything() {
        let train = vec![inst("Perth", &["in", "x"], &["Perth"]), inst("Rome", &["y"], &["it"])];
        let (input, output) = build_vocab(&train, 1).unwrap();
        for t in ["in", "x", "y", "Perth", "it", "perth", "rome"] {
            assert!(input.get(t).is_some(), "{t}");
        }
        assert_eq!(output.len(), 4 + 2);
    }

    #[test]
    fn counting_threshold() {
        let train = vec![inst("E", &["a", "a", "b"], &["E"])];
        let (input, _) = build_vocab(&train, 2).unwrap();
        assert!(input.get("a").is_some());
        assert_eq!(input.id("b"), UNK);
        // entity kept although it occurs once
        assert!(input.get("e").is_some());
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(build_vocab(&[], 1), Err(Error::Contract(_))));
    }

    #[test]
    fn text_round_trip() {
        let (input, _) = build_vocab(&[inst("E", &["a", "b"], &["c"])], 1).unwrap();
        let mut buf = Vec::new();
        input.write(&mut buf).unwrap();
        assert_eq!(Vocabulary::read(buf.as_slice(), "mem").unwrap(), input);
    }
}
