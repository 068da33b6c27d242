//! Back-transliteration of romanized katakana into English spellings.
//!
//! A correspondence table proposes English letter fragments for each kana
//! unit; the resulting chain lattice is decoded by the shared extractor
//! under a letter n-gram model that rewards English-looking strings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::extractor::{self, ExtractError, ExtractionResult, NBestOptions, Scoring};
use crate::lattice::{Lattice, LatticeBuilder, Token};
use crate::ngram::{good_turing, train, NGramError, NGramModel, TrainOptions};

pub const LETTER_ORDER: usize = 4;
pub const DEFAULT_LAMBDA: f64 = 0.5;
/// Marks word gaps inside letter sequences.
pub const BOUNDARY: char = '_';
/// Cap for the exhaustive reference decoder.
pub const ORACLE_LIMIT: u128 = 5000;

#[derive(Debug, Error)]
pub enum TranslitError {
    #[error("no training pairs")]
    EmptyTraining,
    #[error("cannot segment input at offset {offset} ({found:?})")]
    Segment { offset: usize, found: String },
    #[error("no table entries for unit {0:?}")]
    NoEntries(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("interpolation weight {0} outside [0, 1]")]
    Lambda(f64),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Model(#[from] NGramError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Position {
    Initial,
    Medial,
    Final,
    Any,
}

impl Position {
    /// Position of unit `i` in a word of `len` units; a lone unit counts
    /// as initial.
    pub fn of(i: usize, len: usize) -> Position {
        if i == 0 {
            Position::Initial
        } else if i + 1 == len {
            Position::Final
        } else {
            Position::Medial
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Position::Initial => "INITIAL",
            Position::Medial => "MEDIAL",
            Position::Final => "FINAL",
            Position::Any => "ANY",
        }
    }

    pub fn parse(s: &str) -> Option<Position> {
        match s {
            "INITIAL" => Some(Position::Initial),
            "MEDIAL" => Some(Position::Medial),
            "FINAL" => Some(Position::Final),
            "ANY" => Some(Position::Any),
            _ => None,
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One training example: unit-to-fragment alignments per word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignedPair {
    pub romaji: String,
    pub english: String,
    pub words: Vec<Vec<(String, String)>>,
}

impl AlignedPair {
    /// Parses `u:f u:f | u:f` alignments, checking they spell both sides.
    pub fn new(romaji: &str, english: &str, alignment: &str) -> Result<AlignedPair, String> {
        let mut words = vec![Vec::new()];
        for item in alignment.split_whitespace() {
            if item == "|" {
                words.push(Vec::new());
                continue;
            }
            let (u, f) = item.split_once(':').ok_or_else(|| format!("alignment item {item:?} lacks ':'"))?;
            if u.is_empty() {
                return Err(format!("empty unit in {item:?}"));
            }
            words.last_mut().expect("non-empty").push((u.to_string(), f.to_lowercase()));
        }
        let spelled = |pick: fn(&(String, String)) -> &str| {
            words.iter().map(|w| w.iter().map(pick).collect::<String>()).collect::<Vec<_>>().join(" ")
        };
        let r = spelled(|p| &p.0);
        let e = spelled(|p| &p.1);
        let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
        if r != norm(romaji) {
            return Err(format!("units spell {r:?}, expected {romaji:?}"));
        }
        if e != norm(&english.to_lowercase()) {
            return Err(format!("fragments spell {e:?}, expected {english:?}"));
        }
        if words.iter().any(Vec::is_empty) {
            return Err("empty word in alignment".into());
        }
        Ok(AlignedPair { romaji: romaji.to_string(), english: english.to_string(), words })
    }
}

/// Reads `romaji<TAB>english<TAB>alignment` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<AlignedPair>, TranslitError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fail = |msg: String| TranslitError::Format { line: i + 1, msg };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(fail(format!("expected 3 tab-separated columns, found {}", cols.len())));
        }
        out.push(AlignedPair::new(cols[0], cols[1], cols[2]).map_err(fail)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableEntry {
    pub unit: String,
    pub fragment: String,
    pub position: Position,
    pub logprob: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransliterationTable {
    rows: BTreeMap<(String, Position), Vec<(String, f64)>>,
    units: BTreeSet<String>,
}

impl TransliterationTable {
    pub fn from_entries(entries: impl IntoIterator<Item = TableEntry>) -> TransliterationTable {
        let mut t = TransliterationTable::default();
        for e in entries {
            t.units.insert(e.unit.clone());
            t.rows.entry((e.unit, e.position)).or_default().push((e.fragment, e.logprob));
        }
        for row in t.rows.values_mut() {
            row.sort_by(|a, b| a.0.cmp(&b.0));
        }
        t
    }

    pub fn units(&self) -> impl Iterator<Item = &str> {
        self.units.iter().map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = TableEntry> + '_ {
        self.rows.iter().flat_map(|((u, p), row)| {
            row.iter().map(move |(f, lp)| TableEntry {
                unit: u.clone(),
                fragment: f.clone(),
                position: *p,
                logprob: *lp,
            })
        })
    }

    /// Fragments for a unit at a position, falling back to the ANY row.
    pub fn row(&self, unit: &str, position: Position) -> Option<&[(String, f64)]> {
        self.rows
            .get(&(unit.to_string(), position))
            .or_else(|| self.rows.get(&(unit.to_string(), Position::Any)))
            .map(Vec::as_slice)
    }

    pub fn prob(&self, unit: &str, fragment: &str, position: Position) -> Option<f64> {
        self.row(unit, position)?.iter().find(|(f, _)| f == fragment).map(|(_, lp)| 10f64.powf(*lp))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in self.entries() {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", e.unit, e.fragment, e.position, e.logprob));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<TransliterationTable, TranslitError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fail = |msg: String| TranslitError::Format { line: i + 1, msg };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 || cols[0].is_empty() {
                return Err(fail("expected unit, fragment, position, log10p".into()));
            }
            let position = Position::parse(cols[2]).ok_or_else(|| fail(format!("bad position {:?}", cols[2])))?;
            let logprob: f64 = cols[3].parse().map_err(|_| fail(format!("bad log10p {:?}", cols[3])))?;
            entries.push(TableEntry { unit: cols[0].into(), fragment: cols[1].into(), position, logprob });
        }
        Ok(TransliterationTable::from_entries(entries))
    }
}

/// Relative frequencies per (unit, position) and per (unit, ANY), with
/// `epsilon` added to every observed fragment's count.
pub fn train_table(pairs: &[AlignedPair], epsilon: f64) -> Result<TransliterationTable, TranslitError> {
    if pairs.is_empty() {
        return Err(TranslitError::EmptyTraining);
    }
    let mut counts: BTreeMap<(String, Position), BTreeMap<String, f64>> = BTreeMap::new();
    for p in pairs {
        for word in &p.words {
            for (i, (u, f)) in word.iter().enumerate() {
                for pos in [Position::of(i, word.len()), Position::Any] {
                    *counts.entry((u.clone(), pos)).or_default().entry(f.clone()).or_default() += 1.0;
                }
            }
        }
    }
    let mut entries = Vec::new();
    for ((unit, position), frags) in counts {
        let total: f64 = frags.values().sum::<f64>() + epsilon * frags.len() as f64;
        for (fragment, c) in frags {
            entries.push(TableEntry {
                unit: unit.clone(),
                fragment,
                position,
                logprob: ((c + epsilon) / total).log10(),
            });
        }
    }
    Ok(TransliterationTable::from_entries(entries))
}

/// Greedy longest-match segmentation of each whitespace-separated word.
pub fn segment(romaji: &str, table: &TransliterationTable) -> Result<Vec<Vec<String>>, TranslitError> {
    let longest = table.units.iter().map(String::len).max().unwrap_or(0);
    let mut words = Vec::new();
    let mut current = Vec::new();
    let mut at = 0;
    while at < romaji.len() {
        let rest = &romaji[at..];
        let c = rest.chars().next().expect("non-empty rest");
        if c.is_whitespace() {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            at += c.len_utf8();
            continue;
        }
        let found = (1..=longest.min(rest.len()))
            .rev()
            .filter(|&k| rest.is_char_boundary(k))
            .map(|k| &rest[..k])
            .find(|u| table.units.contains(*u));
        match found {
            Some(u) => {
                current.push(u.to_string());
                at += u.len();
            }
            None => return Err(TranslitError::Segment { offset: at, found: c.to_string() }),
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    Ok(words)
}

/// Chain lattice with one block of alternatives per unit and a space
/// fragment between words. Empty fragments become `*empty*` transitions.
pub fn candidate_lattice(words: &[Vec<String>], table: &TransliterationTable) -> Result<Lattice, TranslitError> {
    let mut b = LatticeBuilder::new();
    let start = b.new_state();
    let mut at = start;
    for (wi, word) in words.iter().enumerate() {
        if wi > 0 {
            let next = b.new_state();
            b.add(at, next, Token::fragment(" "), 0.0);
            at = next;
        }
        for (i, unit) in word.iter().enumerate() {
            let row =
                table.row(unit, Position::of(i, word.len())).ok_or_else(|| TranslitError::NoEntries(unit.clone()))?;
            let next = b.new_state();
            for (frag, lp) in row {
                let tok = if frag.is_empty() { Token::Empty } else { Token::fragment(frag.clone()) };
                b.add(at, next, tok, *lp);
            }
            at = next;
        }
    }
    Ok(b.finish(start, at))
}

/// Space-separated letters with word gaps as `_`, the training form for
/// the letter model.
pub fn letters(text: &str) -> String {
    let words: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    let joined = words.join(&BOUNDARY.to_string());
    let mut out = String::with_capacity(joined.len() * 2);
    for c in joined.chars() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push(c);
    }
    out
}

pub fn train_letter_model<S: AsRef<str>>(lines: &[S]) -> Result<NGramModel, TranslitError> {
    let seqs: Vec<String> = lines.iter().map(|l| letters(l.as_ref())).filter(|s| !s.is_empty()).collect();
    Ok(good_turing(&train(&seqs, &TrainOptions::verbatim(LETTER_ORDER))?))
}

pub fn scoring(lambda: f64) -> Result<Scoring, TranslitError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(TranslitError::Lambda(lambda));
    }
    Ok(Scoring { lm_scale: lambda, weight_scale: 1.0 - lambda })
}

pub fn back_transliterate(
    romaji: &str,
    table: &TransliterationTable,
    lm: &NGramModel,
    n: usize,
    lambda: f64,
) -> Result<ExtractionResult, TranslitError> {
    let scoring = scoring(lambda)?;
    let lattice = candidate_lattice(&segment(romaji, table)?, table)?;
    Ok(extractor::nbest_with(&lattice, lm, &NBestOptions { n, beam: None, scoring })?)
}

/// Reference ranking by scoring every candidate path.
pub fn brute_force(
    romaji: &str,
    table: &TransliterationTable,
    lm: &NGramModel,
    n: usize,
    lambda: f64,
) -> Result<ExtractionResult, TranslitError> {
    let scoring = scoring(lambda)?;
    let lattice = candidate_lattice(&segment(romaji, table)?, table)?;
    Ok(extractor::exhaustive(&lattice, lm, n, &scoring, ORACLE_LIMIT)?)
}

/// Presentation only: upper-cases the first letter of every word.
pub fn capitalize_words(s: &str) -> String {
    s.split(' ')
        .map(|w| {
            let mut cs = w.chars();
            match cs.next() {
                Some(c) => c.to_uppercase().chain(cs).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(r: &str, e: &str, a: &str) -> AlignedPair {
        AlignedPair::new(r, e, a).unwrap()
    }

    fn small_table() -> TransliterationTable {
        let pairs = [
            pair("kurinton", "clinton", "ku:c ri:li n:n to:to n:n"),
            pair("kurasu", "class", "ku:c ra:la su:ss"),
            pair("kukkii", "cookie", "ku:coo k: ki:ki i:e"),
            pair("rokku", "rock", "ro:ro k: ku:ck"),
            pair("kaato", "cart", "ka:ca a:r to:t"),
        ];
        train_table(&pairs, 0.0).unwrap()
    }

    #[test]
    fn alignment_must_spell_both_sides() {
        assert!(AlignedPair::new("kuri", "cli", "ku:c ri:li").is_ok());
        assert!(AlignedPair::new("kuri", "cla", "ku:c ri:li").is_err());
        assert!(AlignedPair::new("kuri", "cli", "ku:c ro:li").is_err());
        assert!(AlignedPair::new("a b", "x y", "a:x | b:y").is_ok());
        assert!(AlignedPair::new("ab", "xy", "a:x b").is_err());
    }

    #[test]
    fn relative_frequencies_by_position() {
        let pairs = [
            pair("ku", "c", "ku:c"),
            pair("kuri", "cli", "ku:c ri:li"),
            pair("kuro", "kuro", "ku:ku ro:ro"),
            pair("ro", "ro", "ro:ro"),
        ];
        let t = train_table(&pairs, 0.0).unwrap();
        assert!((t.prob("ku", "c", Position::Initial).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(t.prob("ri", "li", Position::Final), Some(1.0));
        // MEDIAL row for ku is absent, so the ANY row answers.
        assert!((t.prob("ku", "ku", Position::Medial).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(matches!(train_table(&[], 0.1), Err(TranslitError::EmptyTraining)));
    }

    #[test]
    fn rows_normalize_with_smoothing() {
        let pairs = [pair("kuri", "cli", "ku:c ri:li"), pair("kuro", "kuro", "ku:ku ro:ro"), pair("ku", "c", "ku:c")];
        let t = train_table(&pairs, 0.3).unwrap();
        let mut sums: BTreeMap<(String, Position), f64> = BTreeMap::new();
        for e in t.entries() {
            *sums.entry((e.unit, e.position)).or_default() += 10f64.powf(e.logprob);
        }
        assert!(sums.values().all(|s| (s - 1.0).abs() < 1e-9));
    }

    #[test]
    fn segments_greedily() {
        let t = small_table();
        assert_eq!(segment("kurinton", &t).unwrap(), vec![vec!["ku", "ri", "n", "to", "n"]]);
        assert_eq!(segment("a", &t).unwrap(), vec![vec!["a"]]);
        assert_eq!(segment("rokku kaato", &t).unwrap().len(), 2);
        match segment("kurinton!", &t) {
            Err(TranslitError::Segment { offset, found }) => {
                assert_eq!(offset, 8);
                assert_eq!(found, "!");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lattice_is_product_of_blocks() {
        let entries = [("a", "x"), ("a", "y"), ("b", "z"), ("c", "p"), ("c", "q"), ("c", "")]
            .map(|(u, f)| TableEntry { unit: u.into(), fragment: f.into(), position: Position::Any, logprob: -0.5 });
        let t = TransliterationTable::from_entries(entries);
        let l = candidate_lattice(&[vec!["a".into(), "b".into(), "c".into()]], &t).unwrap();
        assert_eq!(l.path_count().unwrap(), 6);
        for p in l.enumerate_paths(10).unwrap() {
            assert_eq!(p.score, -1.5);
        }
        assert!(matches!(candidate_lattice(&[vec!["d".into()]], &t), Err(TranslitError::NoEntries(_))));
    }

    #[test]
    fn candidates_include_target() {
        let t = small_table();
        let l = candidate_lattice(&segment("kurinton", &t).unwrap(), &t).unwrap();
        let spellings: Vec<String> = l.enumerate_paths(1000).unwrap().iter().map(|p| p.spelling()).collect();
        assert!(spellings.contains(&"clinton".to_string()));
    }

    #[test]
    fn table_tsv_round_trip() {
        let t = small_table();
        assert_eq!(TransliterationTable::from_tsv(&t.to_tsv()).unwrap(), t);
        assert!(TransliterationTable::from_tsv("ku\tc\tSOMEWHERE\t-1\n").is_err());
    }

    #[test]
    fn letter_sequences() {
        assert_eq!(letters("Stepper Motor"), "s t e p p e r _ m o t o r");
        assert_eq!(letters(""), "");
    }

    #[test]
    fn decoder_matches_brute_force() {
        let t = small_table();
        let lm = train_letter_model(&["clinton", "class", "cookie", "rock", "cart", "clock"]).unwrap();
        for lambda in [0.0, 0.3, 0.5, 1.0] {
            let fast = back_transliterate("kurinton", &t, &lm, 5, lambda).unwrap();
            let slow = brute_force("kurinton", &t, &lm, 5, lambda).unwrap();
            assert_eq!(fast, slow, "lambda={lambda}");
        }
        assert!(matches!(back_transliterate("ku", &t, &lm, 1, 1.5), Err(TranslitError::Lambda(_))));
    }

    #[test]
    fn capitalization_is_cosmetic() {
        assert_eq!(capitalize_words("stepper motor"), "Stepper Motor");
        assert_eq!(capitalize_words(""), "");
    }
}
