//! Bundled fixtures and the side-by-side random vs. bigram demos.
//!
//! The corpora are small, hand-written texts whose bigram counts favour
//! the fluent alternants; `fixtures/README.md` describes how they were
//! put together.

use thiserror::Error;

use crate::extractor::{self, ExtractError};
use crate::glosser::{apply_morphology, compile_gloss, parse_gloss, GlossError, PluralRules};
use crate::lattice::{Lattice, LatticeBuilder, LatticeError, Token};
use crate::ngram::{good_turing, train, NGramError, NGramModel, TrainOptions};
use crate::translit::{self, TranslitError, TransliterationTable};

pub const S3_GLOSS: &str = include_str!("../fixtures/s3.gloss");
pub const S3_CORPUS: &str = include_str!("../fixtures/s3.corpus");
pub const S8_GLOSS: &str = include_str!("../fixtures/s8.gloss");
pub const S8_CORPUS: &str = include_str!("../fixtures/s8.corpus");
pub const TRANSLIT_PAIRS: &str = include_str!("../fixtures/translit_pairs.tsv");
pub const ENGLISH_WORDS: &str = include_str!("../fixtures/english_words.txt");
pub const ONTOLOGY: &str = include_str!("../fixtures/ontology.txt");
pub const GOAL_INTERLINGUA: &str = include_str!("../fixtures/goal.il");
pub const SAY_CANDIDATES: &str = include_str!("../fixtures/say.il");
pub const TIER_CASES: &str = include_str!("../fixtures/tier_cases.tsv");
pub const TOY_GRAMMAR: &str = include_str!("../fixtures/toy_grammar.txt");
pub const MIXED_CORPUS: &str = include_str!("../fixtures/mixed_corpus.txt");
pub const ARTICLE_LEXICON: &str = include_str!("../fixtures/article_lexicon.txt");
pub const ARTICLES: &str = include_str!("../fixtures/articles.txt");
pub const TRANSLIT_INPUTS: [&str; 2] = ["kurinton", "suteppaa mootaa"];

/// Default seeds for the random extractor, one per demo.
pub const S3_SEED: u64 = 2;
pub const S8_SEED: u64 = 52;
pub const BIGRAM: usize = 2;
/// Smoothing added to every observed table fragment.
pub const TABLE_EPSILON: f64 = 0.1;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("unknown demo {0:?} (expected s3, s8 or translit)")]
    Unknown(String),
    #[error(transparent)]
    Gloss(#[from] GlossError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Model(#[from] NGramError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Translit(#[from] TranslitError),
}

/// One extracted sentence with its model score.
#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub text: String,
    pub logprob: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairReport {
    pub random: Scored,
    pub bigram: Scored,
}

fn gloss_lattice(gloss: &str) -> Result<Lattice, DemoError> {
    Ok(apply_morphology(&compile_gloss(&parse_gloss(gloss)?), &PluralRules::default())?)
}

pub fn s3_lattice() -> Result<Lattice, DemoError> {
    gloss_lattice(S3_GLOSS)
}

/// The gloss lattice followed by a glued sentence-final period.
pub fn s8_lattice() -> Result<Lattice, DemoError> {
    let mut b = LatticeBuilder::new();
    let s = b.new_state();
    let f = b.new_state();
    b.add(s, f, Token::fragment("."), 0.0);
    Ok(gloss_lattice(S8_GLOSS)?.concat(&b.finish(s, f))?)
}

pub fn corpus_lines(corpus: &str) -> Vec<&str> {
    corpus.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect()
}

pub fn bigram_model(corpus: &str) -> Result<NGramModel, DemoError> {
    Ok(good_turing(&train(&corpus_lines(corpus), &TrainOptions::words(BIGRAM))?))
}

/// A random path and the model's best path through the same lattice.
pub fn compare(l: &Lattice, m: &NGramModel, seed: u64) -> Result<PairReport, DemoError> {
    let random = extractor::random_path(l, seed)?;
    let random =
        Scored { logprob: m.sentence_logprob_ids(&extractor::model_ids(&random.tokens, m)), text: random.spelling() };
    let best = extractor::nbest(l, m, 1, None)?;
    let (text, logprob) = best.top().expect("lattice has a path").clone();
    Ok(PairReport { random, bigram: Scored { text, logprob } })
}

pub fn s3(seed: u64) -> Result<PairReport, DemoError> {
    let mut r = compare(&s3_lattice()?, &bigram_model(S3_CORPUS)?, seed)?;
    for s in [&mut r.random, &mut r.bigram] {
        s.text = format!("...{}...", s.text);
    }
    Ok(r)
}

pub fn s8(seed: u64) -> Result<PairReport, DemoError> {
    compare(&s8_lattice()?, &bigram_model(S8_CORPUS)?, seed)
}

pub fn translit_table() -> Result<TransliterationTable, DemoError> {
    Ok(translit::train_table(&translit::parse_pairs(TRANSLIT_PAIRS)?, TABLE_EPSILON)?)
}

pub fn letter_model() -> Result<NGramModel, DemoError> {
    Ok(translit::train_letter_model(&corpus_lines(ENGLISH_WORDS))?)
}

/// Top-1 back-transliteration of each bundled input.
pub fn translit_demo() -> Result<Vec<(String, Scored)>, DemoError> {
    let table = translit_table()?;
    let lm = letter_model()?;
    TRANSLIT_INPUTS
        .iter()
        .map(|input| {
            let r = translit::back_transliterate(input, &table, &lm, 1, translit::DEFAULT_LAMBDA)?;
            let (text, logprob) = r.top().expect("non-empty lattice").clone();
            Ok((input.to_string(), Scored { text, logprob }))
        })
        .collect()
}

pub fn default_seed(name: &str) -> u64 {
    match name {
        "s8" => S8_SEED,
        _ => S3_SEED,
    }
}

/// Printable report for a named demo; `seed` overrides the demo's default.
pub fn report(name: &str, seed: Option<u64>) -> Result<String, DemoError> {
    let seed = seed.unwrap_or_else(|| default_seed(name));
    let pair = |r: PairReport| {
        format!(
            "(random extractor)\n{}\t{:.4}\n(bigram extractor)\n{}\t{:.4}\n",
            r.random.text, r.random.logprob, r.bigram.text, r.bigram.logprob
        )
    };
    match name {
        "s3" => Ok(pair(s3(seed)?)),
        "s8" => Ok(pair(s8(seed)?)),
        "translit" => Ok(translit_demo()?
            .into_iter()
            .map(|(input, s)| format!("{input}\t{}\t{:.4}\n", s.text, s.logprob))
            .collect()),
        other => Err(DemoError::Unknown(other.to_string())),
    }
}
