//! Keyword lexicon and command-token classification.
//!
//! Words are sorted into five categories (action, class, pronoun, metric,
//! finish). Numbers come from an explicit table so that the recognizer's
//! output ("90", "ninety") resolves without a general number parser.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrammarError {
    #[error("malformed metric phrase `{0}`")]
    MalformedMetric(String),
    #[error("word `{word}` appears in both {first} and {second}")]
    OverlappingWord {
        word: String,
        first: &'static str,
        second: &'static str,
    },
    #[error("duplicate word `{word}` in {set}")]
    DuplicateWord { word: String, set: &'static str },
    #[error("invalid word token: {0}")]
    InvalidToken(String),
    #[error("invalid lexicon entry: {0}")]
    InvalidEntry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Degrees,
    Speed,
    Spatial,
}

impl UnitKind {
    /// Degrees need a preceding number; speed and spatial words stand alone.
    pub fn needs_number(self) -> bool {
        matches!(self, UnitKind::Degrees)
    }
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnitKind::Degrees => "degrees",
            UnitKind::Speed => "speed",
            UnitKind::Spatial => "spatial",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricValue {
    Number(f64),
    Qualifier(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: MetricValue,
    pub unit: UnitKind,
}

impl Metric {
    pub fn degrees(value: f64) -> Self {
        Self {
            value: MetricValue::Number(value),
            unit: UnitKind::Degrees,
        }
    }

    pub fn qualifier(word: impl Into<String>, unit: UnitKind) -> Self {
        Self {
            value: MetricValue::Qualifier(word.into()),
            unit,
        }
    }

    pub fn as_degrees(&self) -> Option<f64> {
        match (&self.value, self.unit) {
            (MetricValue::Number(v), UnitKind::Degrees) => Some(*v),
            _ => None,
        }
    }

    pub fn as_qualifier(&self, unit: UnitKind) -> Option<&str> {
        match &self.value {
            MetricValue::Qualifier(q) if self.unit == unit => Some(q),
            _ => None,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.value {
            MetricValue::Number(v) => write!(f, "{v} {}", self.unit),
            MetricValue::Qualifier(q) => write!(f, "{q} ({})", self.unit),
        }
    }
}

/// A recognized word with its time span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordToken {
    pub text: String,
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default = "full_confidence")]
    pub confidence: f64,
}

fn full_confidence() -> f64 {
    1.0
}

impl WordToken {
    pub fn new(text: &str, t_start: f64, t_end: f64, confidence: f64) -> Result<Self, GrammarError> {
        let tok = Self {
            text: text.trim().to_lowercase(),
            t_start,
            t_end,
            confidence,
        };
        tok.check()?;
        Ok(tok)
    }

    pub fn check(&self) -> Result<(), GrammarError> {
        if self.text.trim().is_empty() {
            return Err(GrammarError::InvalidToken("empty text".into()));
        }
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end >= self.t_start) {
            return Err(GrammarError::InvalidToken(format!(
                "`{}` ends at {} before it starts at {}",
                self.text, self.t_end, self.t_start
            )));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(GrammarError::InvalidToken(format!(
                "confidence {} outside [0, 1]",
                self.confidence
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CommandKind {
    Action(String),
    Class(String),
    Pronoun,
    Metric(Metric),
    Finish,
    /// A number-table word still waiting for its unit.
    Number(f64),
    /// A unit word that needs a preceding number.
    Unit(UnitKind),
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandToken {
    pub kind: CommandKind,
    pub source: Vec<WordToken>,
}

impl CommandToken {
    pub fn t_start(&self) -> f64 {
        self.source.first().map_or(0.0, |w| w.t_start)
    }

    pub fn t_end(&self) -> f64 {
        self.source.last().map_or(0.0, |w| w.t_end)
    }

    pub fn text(&self) -> String {
        self.source
            .iter()
            .map(|w| w.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Keyword vocabulary. All words are stored lowercase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LexiconRepr", into = "LexiconRepr")]
pub struct Lexicon {
    action_words: BTreeMap<String, String>,
    class_words: BTreeMap<String, String>,
    pronoun_words: BTreeSet<String>,
    metric_units: BTreeMap<String, UnitKind>,
    finish_words: BTreeSet<String>,
    numbers: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconRepr {
    action_words: BTreeMap<String, String>,
    class_words: BTreeMap<String, String>,
    pronoun_words: Vec<String>,
    metric_units: BTreeMap<String, UnitKind>,
    finish_words: Vec<String>,
    #[serde(default)]
    numbers: BTreeMap<String, f64>,
}

impl TryFrom<LexiconRepr> for Lexicon {
    type Error = GrammarError;

    fn try_from(r: LexiconRepr) -> Result<Self, GrammarError> {
        Lexicon::new(
            r.action_words,
            r.class_words,
            r.pronoun_words,
            r.metric_units,
            r.finish_words,
            r.numbers,
        )
    }
}

impl From<Lexicon> for LexiconRepr {
    fn from(l: Lexicon) -> Self {
        Self {
            action_words: l.action_words,
            class_words: l.class_words,
            pronoun_words: l.pronoun_words.into_iter().collect(),
            metric_units: l.metric_units,
            finish_words: l.finish_words.into_iter().collect(),
            numbers: l.numbers,
        }
    }
}

fn normalize_map<V>(
    set: &'static str,
    map: BTreeMap<String, V>,
) -> Result<BTreeMap<String, V>, GrammarError> {
    let mut out = BTreeMap::new();
    for (k, v) in map {
        let word = k.trim().to_lowercase();
        if word.is_empty() {
            return Err(GrammarError::InvalidEntry(format!("empty word in {set}")));
        }
        if out.insert(word.clone(), v).is_some() {
            return Err(GrammarError::DuplicateWord { word, set });
        }
    }
    Ok(out)
}

fn normalize_set(set: &'static str, words: Vec<String>) -> Result<BTreeSet<String>, GrammarError> {
    let mut out = BTreeSet::new();
    for w in words {
        let word = w.trim().to_lowercase();
        if word.is_empty() {
            return Err(GrammarError::InvalidEntry(format!("empty word in {set}")));
        }
        if !out.insert(word.clone()) {
            return Err(GrammarError::DuplicateWord { word, set });
        }
    }
    Ok(out)
}

impl Lexicon {
    pub fn new(
        action_words: BTreeMap<String, String>,
        class_words: BTreeMap<String, String>,
        pronoun_words: Vec<String>,
        metric_units: BTreeMap<String, UnitKind>,
        finish_words: Vec<String>,
        numbers: BTreeMap<String, f64>,
    ) -> Result<Self, GrammarError> {
        let lex = Self {
            action_words: normalize_map("action_words", action_words)?,
            class_words: normalize_map("class_words", class_words)?,
            pronoun_words: normalize_set("pronoun_words", pronoun_words)?,
            metric_units: normalize_map("metric_units", metric_units)?,
            finish_words: normalize_set("finish_words", finish_words)?,
            numbers: normalize_map("numbers", numbers)?,
        };
        if let Some((w, v)) = lex.numbers.iter().find(|(_, v)| !v.is_finite()) {
            return Err(GrammarError::InvalidEntry(format!("number `{w}` = {v}")));
        }
        lex.check_disjoint()?;
        Ok(lex)
    }

    fn sets(&self) -> [(&'static str, Vec<&String>); 6] {
        [
            ("action_words", self.action_words.keys().collect()),
            ("class_words", self.class_words.keys().collect()),
            ("pronoun_words", self.pronoun_words.iter().collect()),
            ("metric_units", self.metric_units.keys().collect()),
            ("finish_words", self.finish_words.iter().collect()),
            ("numbers", self.numbers.keys().collect()),
        ]
    }

    fn check_disjoint(&self) -> Result<(), GrammarError> {
        let mut seen: BTreeMap<&String, &'static str> = BTreeMap::new();
        for (name, words) in self.sets() {
            for w in words {
                if let Some(first) = seen.insert(w, name) {
                    return Err(GrammarError::OverlappingWord {
                        word: w.clone(),
                        first,
                        second: name,
                    });
                }
            }
        }
        Ok(())
    }

    /// Distinct action names the lexicon can produce.
    pub fn action_names(&self) -> BTreeSet<&str> {
        self.action_words.values().map(String::as_str).collect()
    }

    pub fn class_labels(&self) -> BTreeSet<&str> {
        self.class_words.values().map(String::as_str).collect()
    }

    /// Spoken word for an action or class label (first alphabetically).
    pub fn word_for_action(&self, action: &str) -> Option<&str> {
        self.action_words
            .iter()
            .find(|(_, a)| a.as_str() == action)
            .map(|(w, _)| w.as_str())
    }

    pub fn word_for_class(&self, class: &str) -> Option<&str> {
        self.class_words
            .iter()
            .find(|(_, c)| c.as_str() == class)
            .map(|(w, _)| w.as_str())
    }

    pub fn pronouns(&self) -> impl Iterator<Item = &str> {
        self.pronoun_words.iter().map(String::as_str)
    }

    pub fn finish_words(&self) -> impl Iterator<Item = &str> {
        self.finish_words.iter().map(String::as_str)
    }

    /// Word in the number table whose value is `value`, preferring digits.
    pub fn word_for_number(&self, value: f64) -> Option<&str> {
        let mut matches: Vec<&str> = self
            .numbers
            .iter()
            .filter(|(_, v)| **v == value)
            .map(|(w, _)| w.as_str())
            .collect();
        matches.sort_by_key(|w| (!w.chars().all(|c| c.is_ascii_digit()), *w));
        matches.first().copied()
    }

    pub fn unit_word(&self, unit: UnitKind) -> Option<&str> {
        self.metric_units
            .iter()
            .find(|(_, u)| **u == unit)
            .map(|(w, _)| w.as_str())
    }

    fn lookup(&self, word: &str) -> CommandKind {
        if let Some(a) = self.action_words.get(word) {
            CommandKind::Action(a.clone())
        } else if let Some(c) = self.class_words.get(word) {
            CommandKind::Class(c.clone())
        } else if self.pronoun_words.contains(word) {
            CommandKind::Pronoun
        } else if let Some(&unit) = self.metric_units.get(word) {
            if unit.needs_number() {
                CommandKind::Unit(unit)
            } else {
                CommandKind::Metric(Metric::qualifier(word, unit))
            }
        } else if self.finish_words.contains(word) {
            CommandKind::Finish
        } else if let Some(&n) = self.numbers.get(word) {
            CommandKind::Number(n)
        } else {
            CommandKind::Unknown
        }
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        let map = |pairs: &[(&str, &str)]| -> BTreeMap<String, String> {
            pairs
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect()
        };
        let action_words = map(&[
            ("pick", "pick"),
            ("put", "put"),
            ("pour", "pour"),
            ("push", "push"),
            ("throw", "throw"),
            ("clean", "clean"),
            ("flush", "flush"),
            ("home", "home"),
            ("initial", "home"),
        ]);
        let class_words = map(&[
            ("cup", "cup"),
            ("mug", "cup"),
            ("bowl", "bowl"),
            ("plate", "plate"),
            ("bottle", "bottle"),
            ("rubbish", "rubbish"),
            ("towel", "towel"),
            ("scissors", "scissors"),
            ("shampoo", "shampoo"),
        ]);
        let metric_units = [
            ("degrees", UnitKind::Degrees),
            ("degree", UnitKind::Degrees),
            ("near", UnitKind::Spatial),
            ("far", UnitKind::Spatial),
            // Three-level speed scale; a guess at what speed commands sound like.
            ("slow", UnitKind::Speed),
            ("medium", UnitKind::Speed),
            ("fast", UnitKind::Speed),
        ]
        .into_iter()
        .map(|(w, u)| (w.to_string(), u))
        .collect();
        Lexicon::new(
            action_words,
            class_words,
            vec!["this".into(), "that".into(), "there".into()],
            metric_units,
            vec!["finish".into()],
            default_number_table(),
        )
        .expect("default lexicon is disjoint")
    }
}

/// Multiples of five from 0 to 360 as digits, plus the common angle words.
fn default_number_table() -> BTreeMap<String, f64> {
    let mut table: BTreeMap<String, f64> = (0..=72)
        .map(|i| ((i * 5).to_string(), f64::from(i * 5)))
        .collect();
    for (w, v) in [
        ("zero", 0.0),
        ("ten", 10.0),
        ("fifteen", 15.0),
        ("twenty", 20.0),
        ("thirty", 30.0),
        ("forty", 40.0),
        ("forty-five", 45.0),
        ("fifty", 50.0),
        ("sixty", 60.0),
        ("seventy", 70.0),
        ("eighty", 80.0),
        ("ninety", 90.0),
    ] {
        table.insert(w.to_string(), v);
    }
    table
}

/// Lexical classification of a single word. Case-insensitive; words in no
/// lexicon set become [`CommandKind::Unknown`].
pub fn classify(token: &WordToken, lex: &Lexicon) -> CommandToken {
    let word = token.text.trim().to_lowercase();
    CommandToken {
        kind: lex.lookup(&word),
        source: vec![token.clone()],
    }
}

/// Parses a metric phrase: `<number> <unit>` or a standalone qualifier.
pub fn parse_metric(tokens: &[WordToken], lex: &Lexicon) -> Result<CommandToken, GrammarError> {
    let kinds: Vec<CommandKind> = tokens
        .iter()
        .map(|t| lex.lookup(&t.text.trim().to_lowercase()))
        .collect();
    let metric = match kinds.as_slice() {
        [CommandKind::Metric(m)] => m.clone(),
        [CommandKind::Number(n), CommandKind::Unit(unit)] => Metric {
            value: MetricValue::Number(*n),
            unit: *unit,
        },
        _ => {
            let phrase = tokens
                .iter()
                .map(|t| t.text.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            return Err(GrammarError::MalformedMetric(phrase));
        }
    };
    Ok(CommandToken {
        kind: CommandKind::Metric(metric),
        source: tokens.to_vec(),
    })
}

/// Turns a word stream into command tokens, joining `<number> <unit>` pairs.
///
/// A number is held back until the next word arrives. Stray numbers and
/// units are passed through as their partial kinds; the fusion engine
/// ignores them.
#[derive(Debug, Clone, Default)]
pub struct CommandAssembler {
    pending_number: Option<WordToken>,
}

impl CommandAssembler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, word: &WordToken, lex: &Lexicon) -> Vec<CommandToken> {
        let tok = classify(word, lex);
        let mut out = Vec::new();
        match (&tok.kind, self.pending_number.take()) {
            (CommandKind::Unit(_), Some(num)) => {
                let pair = [num, word.clone()];
                out.push(parse_metric(&pair, lex).expect("number followed by unit"));
            }
            (kind, pending) => {
                if let Some(num) = pending {
                    tracing::debug!(word = %num.text, "number without unit");
                    out.push(classify(&num, lex));
                }
                match kind {
                    CommandKind::Number(_) => self.pending_number = Some(word.clone()),
                    CommandKind::Unit(_) => {
                        tracing::debug!(word = %word.text, "unit without number");
                        out.push(tok);
                    }
                    _ => out.push(tok),
                }
            }
        }
        out
    }

    /// Releases a held-back number, if any.
    pub fn flush(&mut self, lex: &Lexicon) -> Option<CommandToken> {
        self.pending_number.take().map(|n| classify(&n, lex))
    }
}
