//! Generators and reference implementations shared by the integration
//! suites. The oracles here deliberately avoid the library's search code.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use gapfill::glosser::GlossStructure;
use gapfill::lattice::{Lattice, LatticeBuilder, Token};
use gapfill::ngram::NGramModel;
use gapfill::skipparse::Grammar;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub const WORDS: [&str; 10] = ["the", "dog", "cat", "saw", "a", "big", "ran", "home", "Tokyo", "2"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_sentence(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<String> {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| WORDS.choose(rng).unwrap().to_string()).collect()
}

pub fn random_corpus(rng: &mut ChaCha8Rng, sentences: usize) -> Vec<String> {
    (0..sentences).map(|_| random_sentence(rng, 6).join(" ")).collect()
}

/// Acyclic lattice on `2..=max_states` states: a backbone chain through
/// every state plus random forward skips, so every state is on some path.
pub fn random_lattice(rng: &mut ChaCha8Rng, max_states: usize) -> Lattice {
    let k = rng.gen_range(2..=max_states);
    let mut b = LatticeBuilder::new();
    let states: Vec<_> = (0..k).map(|_| b.new_state()).collect();
    let token = |rng: &mut ChaCha8Rng| match rng.gen_range(0..12) {
        0 => Token::Empty,
        1 => Token::word("zebra"),
        _ => Token::word(*WORDS.choose(rng).unwrap()),
    };
    let weight = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { 0.0 } else { -rng.gen_range(0.0..2.0) };
    for i in 0..k - 1 {
        let (t, w) = (token(rng), weight(rng));
        b.add(states[i], states[i + 1], t, w);
        for _ in 0..rng.gen_range(0..3) {
            let j = rng.gen_range(i + 1..k);
            let (t, w) = (token(rng), weight(rng));
            b.add(states[i], states[j], t, w);
        }
    }
    b.finish(states[0], states[k - 1])
}

/// Top-n distinct spellings by brute force: every path is spelled and
/// scored with the word-level sentence probability plus its weights.
pub fn oracle_nbest(l: &Lattice, m: &NGramModel, n: usize) -> Vec<(String, f64)> {
    let mut best: BTreeMap<String, f64> = BTreeMap::new();
    for p in l.enumerate_paths(1 << 20).unwrap() {
        let words: Vec<&str> = p
            .tokens
            .iter()
            .filter_map(|t| match t {
                Token::Word(w) => Some(w.as_str()),
                Token::Empty => None,
                other => panic!("generator emits words only, got {other:?}"),
            })
            .collect();
        let score = m.sentence_logprob(&words) + p.score;
        let spelling = words.join(" ");
        let slot = best.entry(spelling).or_insert(f64::NEG_INFINITY);
        *slot = slot.max(score);
    }
    let mut ranked: Vec<(String, f64)> = best.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(n);
    ranked
}

/// Number of start-to-final paths, by memoized recursion over successors.
pub fn count_paths(l: &Lattice) -> u128 {
    fn go(l: &Lattice, s: u32, memo: &mut HashMap<u32, u128>) -> u128 {
        if s == l.final_state() {
            return 1;
        }
        if let Some(&c) = memo.get(&s) {
            return c;
        }
        let c = l.transitions().iter().filter(|t| t.from == s).map(|t| go(l, t.to, memo)).sum();
        memo.insert(s, c);
        c
    }
    go(l, l.start(), &mut HashMap::new())
}

/// A gloss tree together with its textual record.
#[derive(Clone, Debug)]
pub struct GeneratedGloss {
    pub text: String,
    /// Path count computed while generating, by the product/sum rule.
    pub paths: u128,
    pub has_plural: bool,
}

fn leaf_strategy() -> impl Strategy<Value = (String, bool)> {
    prop_oneof![
        4 => prop::sample::select(vec!["dog", "plan", "company", "box", "city"]).prop_map(|w| (format!("\"{w}\""), false)),
        1 => Just(("\"*empty*\"".to_string(), false)),
        2 => prop::sample::select(vec!["dog", "company", "box", "child"]).prop_map(|w| (format!("\"{w} +plural\""), true)),
        1 => Just(("\"new plan\"".to_string(), false)),
    ]
}

/// Gloss values built from OPk sequences and `*OR*` lists.
pub fn gloss_strategy() -> impl Strategy<Value = GeneratedGloss> {
    let leaf = leaf_strategy().prop_map(|(text, has_plural)| GeneratedGloss { text, paths: 1, has_plural });
    let value = leaf.prop_recursive(4, 40, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(|parts| {
                let body: Vec<String> =
                    parts.iter().enumerate().map(|(i, p)| format!("(OP{} {})", i + 1, p.text)).collect();
                GeneratedGloss {
                    text: format!("({})", body.join(" ")),
                    paths: parts.iter().map(|p| p.paths).product(),
                    has_plural: parts.iter().any(|p| p.has_plural),
                }
            }),
            prop::collection::vec(inner, 2..4).prop_map(|alts| GeneratedGloss {
                text: format!("(*OR* {})", alts.iter().map(|a| a.text.as_str()).collect::<Vec<_>>().join(" ")),
                paths: alts.iter().map(|a| a.paths).sum(),
                has_plural: alts.iter().any(|a| a.has_plural),
            }),
        ]
    });
    value.prop_map(|v| GeneratedGloss { text: format!("(GLOSS {})", v.text), ..v })
}

pub fn structure_paths(g: &GlossStructure) -> u128 {
    match g {
        GlossStructure::Leaf(_) => 1,
        GlossStructure::Seq(cs) => cs.iter().map(structure_paths).product(),
        GlossStructure::Alt(cs) => cs.iter().map(structure_paths).sum(),
    }
}

/// Word lists per lexical tag, read from `lex word TAG` lines.
pub fn lexicon_by_tag(grammar_text: &str) -> BTreeMap<String, Vec<String>> {
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for line in grammar_text.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() == 3 && f[0] == "lex" {
            for tag in f[2].split(',') {
                out.entry(tag.to_string()).or_default().push(f[1].to_string());
            }
        }
    }
    out
}

/// Random derivation from the start symbol; deep expansions pick the
/// shortest right-hand side so generation terminates.
pub fn generate(rng: &mut ChaCha8Rng, g: &Grammar, lex: &BTreeMap<String, Vec<String>>) -> Vec<String> {
    fn expand(
        rng: &mut ChaCha8Rng,
        g: &Grammar,
        lex: &BTreeMap<String, Vec<String>>,
        sym: &str,
        depth: usize,
        out: &mut Vec<String>,
    ) {
        if let Some(words) = lex.get(sym) {
            if !g.is_nonterminal(sym) {
                out.push(words.choose(rng).unwrap().clone());
                return;
            }
        }
        let rules: Vec<_> = g.rules().iter().filter(|r| r.lhs == sym).collect();
        let rule =
            if depth > 3 { *rules.iter().min_by_key(|r| r.rhs.len()).unwrap() } else { *rules.choose(rng).unwrap() };
        for s in &rule.rhs {
            expand(rng, g, lex, s, depth + 1, out);
        }
    }
    let mut out = Vec::new();
    expand(rng, g, lex, g.start(), 0, &mut out);
    out
}

/// Grammatical sentence with up to two noise words spliced in, at most
/// `max_len` tokens long.
pub fn noisy_sentence(
    rng: &mut ChaCha8Rng,
    g: &Grammar,
    lex: &BTreeMap<String, Vec<String>>,
    max_len: usize,
) -> Vec<String> {
    const NOISE: [&str; 8] = ["uh", "very", ",", "and", "also", "the", "dogs", "chase"];
    loop {
        let mut s = generate(rng, g, lex);
        for _ in 0..rng.gen_range(0..=2) {
            let at = rng.gen_range(0..=s.len());
            s.insert(at, NOISE.choose(rng).unwrap().to_string());
        }
        if s.len() <= max_len {
            return s;
        }
    }
}

/// Top-down recognizer with span memoization. Exact for grammars whose
/// unary rules do not form cycles.
pub fn naive_recognize(tokens: &[&str], g: &Grammar) -> bool {
    fn derives(
        tokens: &[&str],
        g: &Grammar,
        sym: &str,
        i: usize,
        j: usize,
        memo: &mut HashMap<(String, usize, usize), bool>,
    ) -> bool {
        let key = (sym.to_string(), i, j);
        if let Some(&v) = memo.get(&key) {
            return v;
        }
        memo.insert(key.clone(), false);
        let lexical = j == i + 1 && g.tags(tokens[i]).iter().any(|t| t == sym);
        let v = lexical || g.rules().iter().filter(|r| r.lhs == sym).any(|r| splits(tokens, g, &r.rhs, i, j, memo));
        memo.insert(key, v);
        v
    }
    fn splits(
        tokens: &[&str],
        g: &Grammar,
        rhs: &[String],
        i: usize,
        j: usize,
        memo: &mut HashMap<(String, usize, usize), bool>,
    ) -> bool {
        match rhs {
            [] => i == j,
            [last] => i < j && derives(tokens, g, last, i, j, memo),
            [first, rest @ ..] => {
                (i + 1..j).any(|k| derives(tokens, g, first, i, k, memo) && splits(tokens, g, rest, k, j, memo))
            }
        }
    }
    !tokens.is_empty() && derives(tokens, g, g.start(), 0, tokens.len(), &mut HashMap::new())
}

/// Smallest number of skipped tokens that leaves a parsable sentence,
/// never dropping exactly one noun of a run of two or more. Markerless
/// input only.
pub fn oracle_min_skips(tokens: &[&str], g: &Grammar, noun_tag: &str) -> Option<usize> {
    let n = tokens.len();
    let noun: Vec<bool> = tokens.iter().map(|t| g.tags(t).iter().any(|x| x == noun_tag)).collect();
    let mut runs = Vec::new();
    let mut i = 0;
    while i < n {
        let s = i;
        while i < n && noun[i] {
            i += 1;
        }
        if i - s >= 2 {
            runs.push(s..i);
        }
        i = i.max(s + 1);
    }
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << n) {
        let k = mask.count_ones() as usize;
        if best.is_some_and(|b| k >= b) || k == n {
            continue;
        }
        let skipped = |i: usize| mask & (1 << i) != 0;
        if runs.iter().any(|r| r.clone().filter(|&i| skipped(i)).count() == 1) {
            continue;
        }
        let kept: Vec<&str> = (0..n).filter(|&i| !skipped(i)).map(|i| tokens[i]).collect();
        if naive_recognize(&kept, g) {
            best = Some(k);
        }
    }
    best
}

pub mod invariants;
