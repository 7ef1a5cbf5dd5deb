use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::forms::Form;
use crate::baselines::FormFeatures;
use crate::error::{Error, Result};

/// One referring expression with its discourse context.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefexInstance {
    /// `text_id:slot`.
    pub id: String,
    pub text_id: String,
    /// Index of the tag occurrence within its template.
    pub slot: usize,
    /// Wikipedia ID of the referent.
    pub entity: String,
    pub pre_context: Vec<String>,
    pub pos_context: Vec<String>,
    /// Truecased tokens.
    pub refex: Vec<String>,
    pub form: Form,
    pub features: Option<FormFeatures>,
}

impl RefexInstance {
    pub fn instance_id(text_id: &str, slot: usize) -> String {
        format!("{text_id}:{slot}")
    }

    /// Lowercased wiki token of the referent, as it appears inside contexts.
    pub fn entity_token(&self) -> String {
        self.entity.to_lowercase()
    }
}

/// Column order of the instance TSV. The last two columns are optional on read.
pub const INSTANCE_COLUMNS: [&str; 10] = [
    "entity",
    "pre_context",
    "pos_context",
    "refex",
    "form",
    "syntactic_position",
    "text_status",
    "sentence_status",
    "text_id",
    "slot",
];

const MISSING: &str = "-";

fn check_field(field: &str, what: &str) -> Result<()> {
    if field.contains(['\t', '\n', '\r']) {
        return Err(Error::Contract(format!("{what} contains a tab or newline: {field:?}")));
    }
    Ok(())
}

pub fn write_instances(w: &mut impl Write, instances: &[RefexInstance]) -> Result<()> {
    for inst in instances {
        let (pos, ts, ss) = match inst.features {
            Some(f) => (
                f.syntactic_position.to_string(),
                f.text_status.to_string(),
                f.sentence_status.to_string(),
            ),
            None => (MISSING.into(), MISSING.into(), MISSING.into()),
        };
        let fields = [
            inst.entity.clone(),
            inst.pre_context.join(" "),
            inst.pos_context.join(" "),
            inst.refex.join(" "),
            inst.form.to_string(),
            pos,
            ts,
            ss,
            inst.text_id.clone(),
            inst.slot.to_string(),
        ];
        for (f, name) in fields.iter().zip(INSTANCE_COLUMNS) {
            check_field(f, name)?;
        }
        writeln!(w, "{}", fields.join("\t"))?;
    }
    Ok(())
}

fn split_tokens(s: &str) -> Vec<String> {
    s.split(' ').filter(|t| !t.is_empty()).map(String::from).collect()
}

/// Reads instance TSV. Rows with 8 columns get the id `line:N` and slot N.
pub fn read_instances(r: impl BufRead, source: &str) -> Result<Vec<RefexInstance>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let loc = format!("{source}:{}", lineno + 1);
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 8 && cols.len() != 10 {
            return Err(Error::parse(loc, format!("expected 8 or 10 columns, found {}", cols.len())));
        }
        let refex = split_tokens(cols[3]);
        if refex.is_empty() {
            return Err(Error::parse(loc, "empty referring expression"));
        }
        let form = cols[4].parse().map_err(|e: Error| Error::parse(&loc, e.to_string()))?;
        let features = if cols[5..8].iter().all(|c| *c == MISSING) {
            None
        } else {
            let parse = || -> Result<FormFeatures> {
                Ok(FormFeatures::new(cols[5].parse()?, cols[6].parse()?, cols[7].parse()?))
            };
            Some(parse().map_err(|e| Error::parse(&loc, e.to_string()))?)
        };
        let (text_id, slot) = if cols.len() == 10 {
            let slot = cols[9]
                .parse()
                .map_err(|_| Error::parse(&loc, format!("bad slot {:?}", cols[9])))?;
            (cols[8].to_string(), slot)
        } else {
            ("line".to_string(), lineno + 1)
        };
        out.push(RefexInstance {
            id: RefexInstance::instance_id(&text_id, slot),
            text_id,
            slot,
            entity: cols[0].to_string(),
            pre_context: split_tokens(cols[1]),
            pos_context: split_tokens(cols[2]),
            refex,
            form,
            features,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{InfoStatus, SyntacticPosition};

    fn sample() -> RefexInstance {
        RefexInstance {
            id: "t7:2".into(),
            text_id: "t7".into(),
            slot: 2,
            entity: "Perth".into(),
            pre_context: vec![],
            pos_context: vec!["is".into(), ".".into()],
            refex: vec!["Perth".into()],
            form: Form::Name,
            features: Some(FormFeatures::new(SyntacticPosition::Subject, InfoStatus::New, InfoStatus::New)),
        }
    }

    #[test]
    fn round_trip_and_layout() {
        let mut a = sample();
        let mut b = sample();
        b.features = None;
        b.slot = 3;
        b.id = "t7:3".into();
        a.pre_context = vec!["in".into(), "1988".into()];
        let mut buf = Vec::new();
        write_instances(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "Perth\tin 1988\tis .\tPerth\tname\tsubject\tnew\tnew\tt7\t2"
        );
        let back = read_instances(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn eight_column_rows() {
        let row = "Perth\t\tis .\tit\tpronoun\t-\t-\t-\n";
        let got = read_instances(row.as_bytes(), "mem").unwrap();
        assert_eq!(got[0].id, "line:1");
        assert!(got[0].pre_context.is_empty());
        assert_eq!(got[0].form, Form::Pronoun);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(read_instances("a\tb\n".as_bytes(), "m").is_err());
        assert!(read_instances("P\t\t\t\tname\t-\t-\t-\n".as_bytes(), "m").is_err());
        let mut bad = sample();
        bad.refex = vec!["a\tb".into()];
        assert!(write_instances(&mut Vec::new(), &[bad]).is_err());
    }
}
