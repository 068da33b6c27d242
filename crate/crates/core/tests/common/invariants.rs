//! Invariant checks shared by the proptest suite and the acceptance
//! runner. Each takes generated input and fails with a message.

use std::sync::OnceLock;

use gapfill::demo;
use gapfill::extractor::nbest;
use gapfill::glosser::{apply_morphology, compile_gloss, parse_gloss, PluralRules};
use gapfill::lattice::{parse_lattices, Token};
use gapfill::ngram::{good_turing, train, NGramModel, TrainOptions};
use gapfill::postedit::{
    evaluate, majority_baseline, prepare, train_tree, ArticleInstance, Label, Lexicon, TreeParams, FEATURES,
};
use gapfill::prefsem::{load_ontology, parse_interlingua, score, Ontology};
use gapfill::skipparse::{chart_parse, Grammar};
use gapfill::translit::{
    back_transliterate, brute_force, candidate_lattice, segment, TransliterationTable, DEFAULT_LAMBDA, ORACLE_LIMIT,
};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{count_paths, naive_recognize, random_corpus, random_lattice, random_sentence, rng, GeneratedGloss};

type Check = Result<(), TestCaseError>;

pub fn lattice_counts_agree(seed: u64) -> Check {
    let l = random_lattice(&mut rng(seed), 12);
    prop_assert!(l.validate().is_ok());
    let counted = l.path_count().unwrap();
    prop_assert_eq!(counted, count_paths(&l));
    prop_assert_eq!(l.enumerate_paths(u128::MAX).unwrap().len() as u128, counted);
    let reread = parse_lattices(&l.to_text()).unwrap();
    prop_assert_eq!(reread.len(), 1);
    prop_assert_eq!(reread[0].path_count().unwrap(), counted);
    Ok(())
}

pub fn gloss_product_rule(g: &GeneratedGloss) -> Check {
    let structure = parse_gloss(&g.text).map_err(|e| TestCaseError::fail(format!("{e}: {}", g.text)))?;
    prop_assert_eq!(structure.path_count(), g.paths);
    let lattice = compile_gloss(&structure);
    prop_assert_eq!(lattice.path_count().unwrap(), g.paths);
    prop_assert_eq!(count_paths(&lattice), g.paths);
    Ok(())
}

/// Morphology must remove every marker and pluralize exactly the words the
/// markers follow, path for path.
pub fn morphology_resolves_markers(g: &GeneratedGloss) -> Check {
    let rules = PluralRules::default();
    let lattice = compile_gloss(&parse_gloss(&g.text).unwrap());
    let resolved = apply_morphology(&lattice, &rules).unwrap();
    for t in resolved.transitions() {
        prop_assert!(!matches!(t.token, Token::Morph(_)), "marker left: {:?}", t.token);
        prop_assert!(!t.token.to_string().contains('+'), "plus sign left: {}", t.token);
    }
    let mut expected: Vec<String> = lattice
        .enumerate_paths(u128::MAX)
        .unwrap()
        .iter()
        .map(|p| {
            let mut words: Vec<String> = Vec::new();
            for t in &p.tokens {
                match t {
                    Token::Word(w) => words.push(w.clone()),
                    Token::Morph(_) => {
                        let w = words.pop().expect("generator puts a word before every marker");
                        words.push(rules.pluralize(&w));
                    }
                    _ => {}
                }
            }
            words.join(" ")
        })
        .collect();
    let mut actual: Vec<String> = resolved.enumerate_paths(u128::MAX).unwrap().iter().map(|p| p.spelling()).collect();
    expected.sort();
    actual.sort();
    prop_assert_eq!(actual, expected);
    Ok(())
}

pub fn model_roundtrip(seed: u64, order: usize) -> Check {
    let mut r = rng(seed);
    let corpus = random_corpus(&mut r, 20);
    let model = good_turing(&train(&corpus, &TrainOptions::words(order)).unwrap());
    let text = model.to_text().unwrap();
    let reread = NGramModel::from_text(&text).unwrap();
    prop_assert_eq!(&reread.to_text().unwrap(), &text);
    for _ in 0..5 {
        let mut s = random_sentence(&mut r, 8);
        if r.gen_bool(0.3) {
            s.push("unseen".into());
        }
        let (a, b) = (model.sentence_logprob(&s), reread.sentence_logprob(&s));
        prop_assert_eq!(a.to_bits(), b.to_bits(), "{:?}: {} vs {}", s, a, b);
    }
    Ok(())
}

/// Largest deviation from one of Σ_w p(w | h) over sampled histories.
pub fn normalization_error(model: &NGramModel, histories: &[Vec<u32>]) -> f64 {
    histories
        .iter()
        .map(|h| {
            let total: f64 = model.vocab().predictable().map(|w| 10f64.powf(model.logprob_ids(w, h))).sum();
            (total - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

pub fn beam_never_beats_exact(seed: u64, width: usize) -> Check {
    let mut r = rng(seed);
    let model = good_turing(&train(&random_corpus(&mut r, 20), &TrainOptions::words(2)).unwrap());
    let l = random_lattice(&mut r, 12);
    let exact = nbest(&l, &model, 1, None).unwrap().top().unwrap().1;
    let beam = nbest(&l, &model, 1, Some(width)).unwrap().top().unwrap().1;
    prop_assert!(beam <= exact + 1e-9, "beam {} above exact {}", beam, exact);
    Ok(())
}

pub fn ontology() -> &'static Ontology {
    static O: OnceLock<Ontology> = OnceLock::new();
    O.get_or_init(|| load_ontology(demo::ONTOLOGY).unwrap())
}

/// Random interlingua text over the bundled ontology, with literal
/// fillers, an undeclared relation and occasional reentrant references.
pub fn random_interlingua(seed: u64) -> String {
    fn instance(
        r: &mut rand_chacha::ChaCha8Rng,
        depth: usize,
        ids: &mut Vec<String>,
        concepts: &[&str],
        relations: &[&str],
    ) -> String {
        let id = format!("x-{}", ids.len());
        ids.push(id.clone());
        let mut out = format!("({id} / {}", concepts.choose(r).unwrap());
        for _ in 0..r.gen_range(0..if depth < 3 { 4 } else { 1 }) {
            let rel = relations.choose(r).unwrap();
            let filler = match r.gen_range(0..6) {
                0 => r.gen_range(1..13).to_string(),
                1 => "\"two\"".to_string(),
                2 if ids.len() > 1 => ids[r.gen_range(0..ids.len() - 1)].clone(),
                _ => instance(r, depth + 1, ids, concepts, relations),
            };
            out.push_str(&format!(" :{rel} {filler}"));
        }
        out.push(')');
        out
    }
    let o = ontology();
    let concepts: Vec<&str> = o.concepts().collect();
    let mut relations: Vec<&str> = o.relations().map(|(n, _)| n).collect();
    relations.push("UNDECLARED-ROLE");
    instance(&mut rng(seed), 0, &mut Vec::new(), &concepts, &relations)
}

pub fn preference_never_zero(seed: u64) -> Check {
    let text = random_interlingua(seed);
    let expr = parse_interlingua(&text).map_err(|e| TestCaseError::fail(format!("{e}: {text}")))?;
    let s = score(&expr, ontology());
    let product: f64 = s.records.iter().map(|r| r.range.value() * r.domain.map_or(1.0, |d| d.value())).product();
    prop_assert!(s.value > 0.0, "zero score for {}", text);
    prop_assert!((s.value - product).abs() <= 1e-12 * product.max(f64::MIN_POSITIVE), "{} vs {}", s.value, product);
    let floor = 0.01f64.powi(s.factors() as i32);
    prop_assert!(s.value >= floor * (1.0 - 1e-12), "{} below {}", s.value, floor);
    Ok(())
}

pub fn toy_grammar() -> &'static Grammar {
    static G: OnceLock<Grammar> = OnceLock::new();
    G.get_or_init(|| Grammar::parse(demo::TOY_GRAMMAR).unwrap())
}

pub fn chart_matches_naive(seed: u64) -> Check {
    let g = toy_grammar();
    let words: Vec<String> = super::lexicon_by_tag(demo::TOY_GRAMMAR).into_values().flatten().collect();
    let mut r = rng(seed);
    let len = r.gen_range(1..=7);
    let toks: Vec<&str> = (0..len).map(|_| words.choose(&mut r).unwrap().as_str()).collect();
    prop_assert_eq!(chart_parse(&toks, g).is_some(), naive_recognize(&toks, g), "{:?}", toks);
    Ok(())
}

fn random_instances(seed: u64) -> Vec<ArticleInstance> {
    let mut r = rng(seed);
    let n = r.gen_range(1..60);
    (0..n)
        .map(|_| ArticleInstance {
            label: *Label::ALL.choose(&mut r).unwrap(),
            features: FEATURES.iter().map(|_| ["p", "q", "r"][r.gen_range(0..3)].to_string()).collect(),
        })
        .collect()
}

pub fn training_beats_majority(seed: u64) -> Check {
    let instances = random_instances(seed);
    let tree = train_tree(&instances, TreeParams::default()).unwrap();
    let acc = evaluate(&tree, &instances).unwrap();
    prop_assert!(acc + 1e-12 >= majority_baseline(&instances), "{} < {}", acc, majority_baseline(&instances));
    Ok(())
}

pub fn article_lexicon() -> &'static Lexicon {
    static L: OnceLock<Lexicon> = OnceLock::new();
    L.get_or_init(|| Lexicon::parse(demo::ARTICLE_LEXICON).unwrap())
}

pub fn stripping_is_lossless(seed: u64) -> Check {
    const VOCAB: [&str; 14] = [
        "dog", "dogs", "idea", "apple", "big", "red", "saw", "with", "ran", "report", "markets", "engineer", "old", ".",
    ];
    const ARTICLES: [&str; 5] = ["the", "a", "an", "The", "A"];
    let mut r = rng(seed);
    let mut lines = Vec::new();
    for _ in 0..r.gen_range(1..6) {
        if !lines.is_empty() && r.gen_bool(0.15) {
            lines.push(String::new());
            continue;
        }
        let mut toks = Vec::new();
        for _ in 0..r.gen_range(1..9) {
            if r.gen_bool(0.3) {
                toks.push(*ARTICLES.choose(&mut r).unwrap());
            }
            toks.push(*VOCAB.choose(&mut r).unwrap());
        }
        lines.push(toks.join(" "));
    }
    let text = lines.join("\n");
    let prepared = prepare(&text, article_lexicon()).unwrap();
    prop_assert_eq!(prepared.restore(), text);
    for s in &prepared.stripped {
        prop_assert!(!s.iter().any(|t| ["the", "a", "an"].contains(&t.to_lowercase().as_str())));
    }
    Ok(())
}

pub fn translit_assets() -> &'static (TransliterationTable, NGramModel) {
    static T: OnceLock<(TransliterationTable, NGramModel)> = OnceLock::new();
    T.get_or_init(|| (demo::translit_table().unwrap(), demo::letter_model().unwrap()))
}

pub fn decoder_matches_brute_force(romaji: &str, n: usize) -> Check {
    let (table, lm) = translit_assets();
    let Ok(words) = segment(romaji, table) else {
        prop_assert!(back_transliterate(romaji, table, lm, n, DEFAULT_LAMBDA).is_err());
        return Ok(());
    };
    let paths = candidate_lattice(&words, table).unwrap().path_count().unwrap();
    prop_assume!(paths <= ORACLE_LIMIT, "{} candidates", paths);
    let fast = back_transliterate(romaji, table, lm, n, DEFAULT_LAMBDA).unwrap();
    let slow = brute_force(romaji, table, lm, n, DEFAULT_LAMBDA).unwrap();
    prop_assert_eq!(fast.ranked.len(), slow.ranked.len());
    for (a, b) in fast.ranked.iter().zip(&slow.ranked) {
        prop_assert_eq!(&a.0, &b.0);
        prop_assert!((a.1 - b.1).abs() <= 1e-9, "{} vs {}", a.1, b.1);
    }
    Ok(())
}

/// Romaji built from table units, one or two words of one to three units.
pub fn random_romaji(seed: u64) -> String {
    let (table, _) = translit_assets();
    let units: Vec<&str> = table.units().collect();
    let mut r = rng(seed);
    let words: Vec<String> = (0..r.gen_range(1..=2))
        .map(|_| (0..r.gen_range(1..=3)).map(|_| *units.choose(&mut r).unwrap()).collect())
        .collect();
    words.join(" ")
}
