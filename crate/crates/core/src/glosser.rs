//! Disjunctive gloss structures and their compilation into word lattices.
//!
//! A gloss record reads like
//!
//! ```text
//! (GLOSS ((OP1 (*OR* "a" "the")) (OP2 "plan")))
//! ```
//!
//! `OPk` features are ordered parts, `*OR*` lists are alternatives, and
//! quoted strings are leaves. The leaf `"*empty*"` is the empty alternant
//! and `"+plural"` is a morphological marker resolved by
//! [`apply_morphology`].

use std::collections::HashMap;

use thiserror::Error;

use crate::lattice::{Lattice, LatticeBuilder, LatticeError, StateId, Token, Transition, MORPH_TAGS};
use crate::sexpr::{self, Sexp, SexpError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GlossStructure {
    Leaf(Token),
    Seq(Vec<GlossStructure>),
    Alt(Vec<GlossStructure>),
}

#[derive(Debug, Error, PartialEq)]
pub enum GlossError {
    #[error(transparent)]
    Syntax(#[from] SexpError),
    #[error("record does not start with GLOSS: {0}")]
    NotGloss(String),
    #[error("bad feature label {0:?}")]
    BadLabel(String),
    #[error("OP labels must be OP1..OP{expected}, found {found:?}")]
    NonConsecutive { expected: usize, found: Vec<usize> },
    #[error("unknown marker token {0:?}")]
    UnknownMarker(String),
    #[error("*OR* needs at least two alternatives")]
    ShortDisjunction,
    #[error("empty gloss leaf")]
    EmptyLeaf,
    #[error("unexpected gloss value {0}")]
    Unexpected(String),
    #[error("marker on transition {0} is not preceded only by words")]
    MorphWithoutWord(usize),
    #[error("bad plural lexicon line {line}: {text:?}")]
    Lexicon { line: usize, text: String },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

impl GlossStructure {
    /// Number of token sequences the structure denotes, counted recursively.
    pub fn path_count(&self) -> u128 {
        match self {
            GlossStructure::Leaf(_) => 1,
            GlossStructure::Seq(cs) => cs.iter().map(Self::path_count).fold(1u128, u128::saturating_mul),
            GlossStructure::Alt(cs) => cs.iter().map(Self::path_count).fold(0u128, u128::saturating_add),
        }
    }
}

/// Parses a single gloss record.
pub fn parse_gloss(text: &str) -> Result<GlossStructure, GlossError> {
    gloss_from_record(&sexpr::parse_one(text)?)
}

/// Parses a gloss file: one record per s-expression, `;` comments allowed.
pub fn parse_gloss_file(text: &str) -> Result<Vec<GlossStructure>, GlossError> {
    sexpr::parse_all(text)?.iter().map(gloss_from_record).collect()
}

fn gloss_from_record(record: &Sexp) -> Result<GlossStructure, GlossError> {
    // Accept both `(GLOSS v)` and the printed `((GLOSS v))`.
    let items = record.as_list().ok_or_else(|| GlossError::NotGloss(record.to_string()))?;
    match items {
        [Sexp::Atom(head), value] if head == "GLOSS" => gloss_value(value),
        [inner @ Sexp::List(_)] => gloss_from_record(inner),
        _ => Err(GlossError::NotGloss(record.to_string())),
    }
}

fn gloss_value(v: &Sexp) -> Result<GlossStructure, GlossError> {
    match v {
        Sexp::Str(s) => leaf_string(s),
        Sexp::Atom(a) => Err(GlossError::Unexpected(a.clone())),
        Sexp::List(items) => match items.first() {
            Some(Sexp::Atom(op)) if op == "*OR*" => {
                let alts = items[1..].iter().map(gloss_value).collect::<Result<Vec<_>, _>>()?;
                if alts.len() < 2 {
                    return Err(GlossError::ShortDisjunction);
                }
                Ok(GlossStructure::Alt(alts))
            }
            Some(Sexp::List(_)) => ordered_parts(items),
            _ => Err(GlossError::Unexpected(v.to_string())),
        },
    }
}

fn ordered_parts(items: &[Sexp]) -> Result<GlossStructure, GlossError> {
    let mut parts: Vec<(usize, GlossStructure)> = Vec::with_capacity(items.len());
    for item in items {
        let pair = item.as_list().ok_or_else(|| GlossError::Unexpected(item.to_string()))?;
        let [Sexp::Atom(label), value] = pair else {
            return Err(GlossError::Unexpected(item.to_string()));
        };
        let k = label
            .strip_prefix("OP")
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| GlossError::BadLabel(label.clone()))?;
        parts.push((k, gloss_value(value)?));
    }
    parts.sort_by_key(|(k, _)| *k);
    let labels: Vec<usize> = parts.iter().map(|(k, _)| *k).collect();
    if !labels.iter().copied().eq(1..=labels.len()) {
        return Err(GlossError::NonConsecutive { expected: labels.len(), found: labels });
    }
    Ok(GlossStructure::Seq(parts.into_iter().map(|(_, g)| g).collect()))
}

fn leaf_string(s: &str) -> Result<GlossStructure, GlossError> {
    let mut leaves =
        s.split_whitespace().map(|piece| leaf_token(piece).map(GlossStructure::Leaf)).collect::<Result<Vec<_>, _>>()?;
    match leaves.len() {
        0 => Err(GlossError::EmptyLeaf),
        1 => Ok(leaves.remove(0)),
        _ => Ok(GlossStructure::Seq(leaves)),
    }
}

fn leaf_token(piece: &str) -> Result<Token, GlossError> {
    if piece == "*empty*" {
        Ok(Token::Empty)
    } else if piece.starts_with('+') {
        if MORPH_TAGS.contains(&piece) {
            Ok(Token::Morph(piece.to_string()))
        } else {
            Err(GlossError::UnknownMarker(piece.to_string()))
        }
    } else if piece.len() > 1 && piece.starts_with('*') && piece.ends_with('*') {
        Err(GlossError::UnknownMarker(piece.to_string()))
    } else {
        Ok(Token::Word(piece.to_string()))
    }
}

/// Compiles a gloss into a lattice: Seq concatenates, Alt unions, a leaf
/// is one transition.
pub fn compile_gloss(g: &GlossStructure) -> Lattice {
    let mut b = LatticeBuilder::new();
    let start = b.new_state();
    let fin = b.new_state();
    compile_into(g, &mut b, start, fin);
    b.finish(start, fin)
}

fn compile_into(g: &GlossStructure, b: &mut LatticeBuilder, from: StateId, to: StateId) {
    match g {
        GlossStructure::Leaf(t) => b.add(from, to, t.clone(), 0.0),
        GlossStructure::Alt(cs) => {
            for c in cs {
                compile_into(c, b, from, to);
            }
        }
        GlossStructure::Seq(cs) => {
            let mut at = from;
            for (i, c) in cs.iter().enumerate() {
                let next = if i + 1 == cs.len() { to } else { b.new_state() };
                compile_into(c, b, at, next);
                at = next;
            }
        }
    }
}

/// English pluralization: an irregular table, then suffix rules.
#[derive(Clone, Debug)]
pub struct PluralRules {
    irregular: HashMap<String, String>,
}

const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("man", "men"),
    ("woman", "women"),
    ("child", "children"),
    ("person", "people"),
    ("foot", "feet"),
    ("tooth", "teeth"),
    ("goose", "geese"),
    ("mouse", "mice"),
    ("ox", "oxen"),
    ("criterion", "criteria"),
    ("phenomenon", "phenomena"),
    ("datum", "data"),
    ("knife", "knives"),
    ("life", "lives"),
    ("wife", "wives"),
    ("leaf", "leaves"),
    ("half", "halves"),
    ("sheep", "sheep"),
    ("fish", "fish"),
    ("series", "series"),
    ("species", "species"),
];

impl Default for PluralRules {
    fn default() -> Self {
        PluralRules { irregular: IRREGULAR_PLURALS.iter().map(|&(s, p)| (s.to_string(), p.to_string())).collect() }
    }
}

impl PluralRules {
    /// Built-in irregulars extended (or overridden) by a `singular<TAB>plural` table.
    pub fn from_tsv(text: &str) -> Result<PluralRules, GlossError> {
        let mut rules = PluralRules::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            match (fields.next(), fields.next(), fields.next()) {
                (Some(s), Some(p), None) => {
                    rules.irregular.insert(s.to_lowercase(), p.to_lowercase());
                }
                _ => return Err(GlossError::Lexicon { line: i + 1, text: line.to_string() }),
            }
        }
        Ok(rules)
    }

    pub fn pluralize(&self, word: &str) -> String {
        let lower = word.to_lowercase();
        if let Some(p) = self.irregular.get(&lower) {
            return match_case(word, p);
        }
        let bytes = lower.as_bytes();
        let n = bytes.len();
        let is_vowel = |c: u8| matches!(c, b'a' | b'e' | b'i' | b'o' | b'u');
        if n >= 2 && bytes[n - 1] == b'y' && !is_vowel(bytes[n - 2]) {
            format!("{}ies", &word[..word.len() - 1])
        } else if ["s", "x", "z", "ch", "sh"].iter().any(|suf| lower.ends_with(suf)) {
            format!("{word}es")
        } else {
            format!("{word}s")
        }
    }
}

fn match_case(original: &str, plural: &str) -> String {
    if original.chars().next().is_some_and(char::is_uppercase) {
        let mut c = plural.chars();
        c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
    } else {
        plural.to_string()
    }
}

/// Resolves `+plural` markers: every word entering a marker's source state
/// is re-emitted in plural form straight to the marker's target. The
/// result carries no marker tokens.
pub fn apply_morphology(l: &Lattice, rules: &PluralRules) -> Result<Lattice, GlossError> {
    l.validate().map_err(LatticeError::from)?;
    let trs = l.transitions();
    let mut out: Vec<Transition> = Vec::with_capacity(trs.len());
    for (i, t) in trs.iter().enumerate() {
        let Token::Morph(_) = &t.token else {
            out.push(t.clone());
            continue;
        };
        let src = l.state_index(t.from).expect("validated lattice");
        let preceding = l.incoming(src);
        if preceding.is_empty() {
            return Err(GlossError::MorphWithoutWord(i));
        }
        for &p in preceding {
            let prev = &trs[p];
            let Token::Word(w) = &prev.token else {
                return Err(GlossError::MorphWithoutWord(i));
            };
            out.push(Transition::weighted(prev.from, t.to, Token::Word(rules.pluralize(w)), prev.weight + t.weight));
        }
    }
    let rebuilt = Lattice::build(l.states().iter().copied(), l.start(), l.final_state(), out)?;
    Ok(rebuilt.trim())
}
