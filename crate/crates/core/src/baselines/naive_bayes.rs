use std::io::{BufRead, Write};

use rand::Rng;

use super::features::{FormFeatures, InfoStatus, SyntacticPosition};
use crate::corpus::{Form, RefexInstance};
use crate::error::{Error, Result};
use crate::tensor::RngState;

/// Forms in argmax tie-breaking order.
pub const FORM_TIE_ORDER: [Form; 4] = [Form::Name, Form::Description, Form::Demonstrative, Form::Pronoun];

fn form_index(f: Form) -> usize {
    Form::ALL.iter().position(|&x| x == f).unwrap()
}

/// Naive Bayes counts over referential forms. Add-one smoothing is applied
/// when the posterior is queried.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FormModel {
    /// Indexed like [`Form::ALL`].
    pub priors: [u64; 4],
    pub position: [[u64; 4]; 3],
    pub text_status: [[u64; 4]; 2],
    pub sentence_status: [[u64; 4]; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChoiceMode {
    Argmax,
    Sample(u64),
}

fn pos_index(p: SyntacticPosition) -> usize {
    p as usize
}

fn status_index(s: InfoStatus) -> usize {
    s as usize
}

impl FormModel {
    pub fn observe(&mut self, features: FormFeatures, form: Form) {
        let f = form_index(form);
        self.priors[f] += 1;
        self.position[pos_index(features.syntactic_position)][f] += 1;
        self.text_status[status_index(features.text_status)][f] += 1;
        self.sentence_status[status_index(features.sentence_status)][f] += 1;
    }

    pub fn total(&self) -> u64 {
        self.priors.iter().sum()
    }

    /// Scales every count by `k`.
    pub fn scaled(&self, k: u64) -> FormModel {
        let mut m = self.clone();
        m.priors.iter_mut().for_each(|c| *c *= k);
        for row in m.position.iter_mut().chain(m.text_status.iter_mut()).chain(m.sentence_status.iter_mut()) {
            row.iter_mut().for_each(|c| *c *= k);
        }
        m
    }

    /// Smoothed `P(f)`.
    pub fn prior(&self, form: Form) -> f64 {
        (self.priors[form_index(form)] as f64 + 1.0) / (self.total() as f64 + 4.0)
    }

    /// Smoothed `P(x | f)` for each of the three features.
    pub fn likelihoods(&self, features: FormFeatures, form: Form) -> [f64; 3] {
        let f = form_index(form);
        let cf = self.priors[f] as f64;
        [
            (self.position[pos_index(features.syntactic_position)][f] as f64 + 1.0) / (cf + 3.0),
            (self.text_status[status_index(features.text_status)][f] as f64 + 1.0) / (cf + 2.0),
            (self.sentence_status[status_index(features.sentence_status)][f] as f64 + 1.0) / (cf + 2.0),
        ]
    }

    /// Posterior over [`Form::ALL`].
    pub fn posterior(&self, features: FormFeatures) -> [f64; 4] {
        let mut scores = [0.0; 4];
        for (s, &form) in scores.iter_mut().zip(&Form::ALL) {
            *s = self.prior(form) * self.likelihoods(features, form).iter().product::<f64>();
        }
        let z: f64 = scores.iter().sum();
        scores.map(|s| s / z)
    }

    pub fn choose_form(&self, features: FormFeatures, mode: ChoiceMode) -> Form {
        let post = self.posterior(features);
        match mode {
            ChoiceMode::Argmax => choose_argmax(&post),
            ChoiceMode::Sample(seed) => {
                let u: f64 = RngState::new(seed).gen();
                let mut acc = 0.0;
                for (i, p) in post.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Form::ALL[i];
                    }
                }
                Form::ALL[3]
            }
        }
    }

    /// Plain-text count tables: `form<TAB>count` lines, then
    /// `feature<TAB>value<TAB>form<TAB>count` lines.
    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        for (i, f) in Form::ALL.iter().enumerate() {
            writeln!(w, "{f}\t{}", self.priors[i])?;
        }
        for (v, p) in SyntacticPosition::ALL.iter().enumerate() {
            for (i, f) in Form::ALL.iter().enumerate() {
                writeln!(w, "syntactic_position\t{p}\t{f}\t{}", self.position[v][i])?;
            }
        }
        for (name, table) in [("text_status", &self.text_status), ("sentence_status", &self.sentence_status)] {
            for (v, s) in InfoStatus::ALL.iter().enumerate() {
                for (i, f) in Form::ALL.iter().enumerate() {
                    writeln!(w, "{name}\t{s}\t{f}\t{}", table[v][i])?;
                }
            }
        }
        Ok(())
    }

    pub fn read(r: impl BufRead, source: &str) -> Result<Self> {
        let mut m = FormModel::default();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let loc = format!("{source}:{}", n + 1);
            let cols: Vec<&str> = line.split('\t').collect();
            let count = |s: &str| s.parse::<u64>().map_err(|_| Error::parse(&loc, format!("bad count {s:?}")));
            let wrap = |e: Error| Error::parse(&loc, e.to_string());
            match cols.as_slice() {
                [form, c] => m.priors[form_index(form.parse().map_err(wrap)?)] = count(c)?,
                ["syntactic_position", v, form, c] => {
                    let v: SyntacticPosition = v.parse().map_err(wrap)?;
                    m.position[pos_index(v)][form_index(form.parse().map_err(wrap)?)] = count(c)?;
                }
                [name @ ("text_status" | "sentence_status"), v, form, c] => {
                    let v: InfoStatus = v.parse().map_err(wrap)?;
                    let table = if *name == "text_status" { &mut m.text_status } else { &mut m.sentence_status };
                    table[status_index(v)][form_index(form.parse().map_err(wrap)?)] = count(c)?;
                }
                _ => return Err(Error::parse(loc, format!("unrecognised line {line:?}"))),
            }
        }
        Ok(m)
    }
}

/// Highest posterior; exact ties go to the earlier form in [`FORM_TIE_ORDER`].
pub fn choose_argmax(posterior: &[f64; 4]) -> Form {
    let mut best = FORM_TIE_ORDER[0];
    for &f in &FORM_TIE_ORDER[1..] {
        if posterior[form_index(f)] > posterior[form_index(best)] {
            best = f;
        }
    }
    best
}

/// Counts forms and features of instances that carry features.
pub fn nb_train(instances: &[RefexInstance]) -> Result<FormModel> {
    let mut m = FormModel::default();
    for inst in instances {
        let f = inst
            .features
            .ok_or_else(|| Error::Contract(format!("instance {} has no form features", inst.id)))?;
        m.observe(f, inst.form);
    }
    if m.total() == 0 {
        return Err(Error::Contract("no training data for the form model".into()));
    }
    Ok(m)
}
