use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::instance::RefexInstance;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<RefexInstance>,
    pub dev: Vec<RefexInstance>,
    pub test: Vec<RefexInstance>,
    pub train_texts: Vec<String>,
    pub dev_texts: Vec<String>,
    pub test_texts: Vec<String>,
}

impl DatasetSplit {
    /// Split manifest: counts table followed by the text IDs of each split.
    pub fn manifest(&self) -> String {
        let mut s = String::from("split\ttexts\tinstances\n");
        let parts = [
            ("train", &self.train_texts, &self.train),
            ("dev", &self.dev_texts, &self.dev),
            ("test", &self.test_texts, &self.test),
        ];
        for (name, texts, insts) in parts {
            let _ = writeln!(s, "{name}\t{}\t{}", texts.len(), insts.len());
        }
        for (name, texts, _) in parts {
            let _ = writeln!(s, "\n[{name}]");
            for t in texts {
                let _ = writeln!(s, "{t}");
            }
        }
        s
    }
}

/// Splits by text so that all instances of a text land in the same part.
/// Texts are shuffled with `seed`; dev and test receive `floor(n · ratio)`
/// texts each and train keeps the remainder.
pub fn split_dataset(instances: &[RefexInstance], ratios: (f64, f64, f64), seed: u64) -> Result<DatasetSplit> {
    let (tr, dv, ts) = ratios;
    if [tr, dv, ts].iter().any(|r| !(0.0..=1.0).contains(r)) || ((tr + dv + ts) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios {ratios:?} must be in [0,1] and sum to 1")));
    }
    let texts: BTreeSet<&str> = instances.iter().map(|i| i.text_id.as_str()).collect();
    let mut texts: Vec<&str> = texts.into_iter().collect();
    texts.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = texts.len() as f64;
    let n_dev = (n * dv + 1e-9).floor() as usize;
    let n_test = (n * ts + 1e-9).floor() as usize;
    let n_train = texts.len() - n_dev - n_test;

    let mut assignment: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, t) in texts.iter().enumerate() {
        let part = if i < n_train {
            0
        } else if i < n_train + n_dev {
            1
        } else {
            2
        };
        assignment.insert(t, part);
    }
    let mut split = DatasetSplit::default();
    for inst in instances {
        match assignment[inst.text_id.as_str()] {
            0 => split.train.push(inst.clone()),
            1 => split.dev.push(inst.clone()),
            _ => split.test.push(inst.clone()),
        }
    }
    for t in &texts {
        let dst = match assignment[t] {
            0 => &mut split.train_texts,
            1 => &mut split.dev_texts,
            _ => &mut split.test_texts,
        };
        dst.push(t.to_string());
    }
    Ok(split)
}
