//! Closed language registry.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Languages known to the pipeline. Codes outside this set are rejected at
/// every ingest boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    Liv,
    Vro,
    Kpv,
    Et,
    Fi,
    En,
    Lv,
    Ru,
}

impl Lang {
    pub const ALL: [Lang; 8] = [
        Lang::Liv,
        Lang::Vro,
        Lang::Kpv,
        Lang::Et,
        Lang::Fi,
        Lang::En,
        Lang::Lv,
        Lang::Ru,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Lang::Liv => "liv",
            Lang::Vro => "vro",
            Lang::Kpv => "kpv",
            Lang::Et => "et",
            Lang::Fi => "fi",
            Lang::En => "en",
            Lang::Lv => "lv",
            Lang::Ru => "ru",
        }
    }

    /// English exonym used inside prompt templates.
    pub fn english_name(self) -> &'static str {
        match self {
            Lang::Liv => "Livonian",
            Lang::Vro => "Võro",
            Lang::Kpv => "Komi",
            Lang::Et => "Estonian",
            Lang::Fi => "Finnish",
            Lang::En => "English",
            Lang::Lv => "Latvian",
            Lang::Ru => "Russian",
        }
    }

    /// The three extremely low-resource target languages.
    pub fn is_target(self) -> bool {
        matches!(self, Lang::Liv | Lang::Vro | Lang::Kpv)
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown language code `{0}`")]
pub struct UnknownLang(pub String);

impl FromStr for Lang {
    type Err = UnknownLang;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        // ISO 639-3 aliases for the supporting languages show up in some dumps.
        let code = match lower.as_str() {
            "est" => "et",
            "fin" => "fi",
            "eng" => "en",
            "lav" | "lvs" => "lv",
            "rus" => "ru",
            other => other,
        };
        Lang::ALL
            .into_iter()
            .find(|l| l.code() == code)
            .ok_or_else(|| UnknownLang(s.to_string()))
    }
}

/// An ordered language pair as used for parallel data, e.g. `kpv-ru`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LangPair {
    pub first: Lang,
    pub second: Lang,
}

impl LangPair {
    pub fn new(first: Lang, second: Lang) -> Self {
        Self { first, second }
    }

    pub fn reversed(self) -> Self {
        Self {
            first: self.second,
            second: self.first,
        }
    }
}

impl fmt::Display for LangPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first, self.second)
    }
}

impl FromStr for LangPair {
    type Err = UnknownLang;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| UnknownLang(s.to_string()))?;
        Ok(Self::new(a.parse()?, b.parse()?))
    }
}

impl Serialize for LangPair {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LangPair {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
