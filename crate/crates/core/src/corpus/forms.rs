use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Referential form of an expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Form {
    Name,
    Pronoun,
    Description,
    Demonstrative,
}

impl Form {
    pub const ALL: [Form; 4] = [Form::Name, Form::Pronoun, Form::Description, Form::Demonstrative];

    pub fn as_str(self) -> &'static str {
        match self {
            Form::Name => "name",
            Form::Pronoun => "pronoun",
            Form::Description => "description",
            Form::Demonstrative => "demonstrative",
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Form {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Form::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::parse("form", format!("unknown form {s:?}")))
    }
}

/// Closed pronoun list. Single-token "that" is a demonstrative.
pub const PRONOUNS: &[&str] = &[
    "he", "she", "it", "they", "him", "her", "them", "his", "hers", "its", "their", "theirs",
    "himself", "herself", "itself", "themselves", "who", "whom", "whose",
];

const DEMONSTRATIVES: &[&str] = &["this", "that", "these", "those"];
const ARTICLES: &[&str] = &["the", "a", "an"];

/// Form of a tokenized referring expression, decided on lowercased tokens.
pub fn classify_form<T: AsRef<str>>(refex: &[T]) -> Form {
    classify_form_with(refex, PRONOUNS)
}

pub fn classify_form_with<T: AsRef<str>>(refex: &[T], pronouns: &[&str]) -> Form {
    let Some(first) = refex.first().map(|t| t.as_ref().to_lowercase()) else {
        return Form::Name;
    };
    if refex.len() == 1 && pronouns.contains(&first.as_str()) {
        Form::Pronoun
    } else if DEMONSTRATIVES.contains(&first.as_str()) {
        Form::Demonstrative
    } else if ARTICLES.contains(&first.as_str()) {
        Form::Description
    } else {
        Form::Name
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(s: &str) -> Form {
        classify_form(&s.split(' ').collect::<Vec<_>>())
    }

    #[test]
    fn examples() {
        assert_eq!(form("it"), Form::Pronoun);
        assert_eq!(form("It"), Form::Pronoun);
        assert_eq!(form("the famous female painter"), Form::Description);
        assert_eq!(form("alan shepard"), Form::Name);
        assert_eq!(form("that"), Form::Demonstrative);
        assert_eq!(form("this airport"), Form::Demonstrative);
        assert_eq!(form("his wife"), Form::Name);
    }

    #[test]
    fn parse_round_trip() {
        for f in Form::ALL {
            assert_eq!(f.as_str().parse::<Form>().unwrap(), f);
        }
        assert!("noun".parse::<Form>().is_err());
    }
}
