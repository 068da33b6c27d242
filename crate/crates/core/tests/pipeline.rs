//! End-to-end runs across module boundaries, using the bundled fixtures.

use gapfill::demo;
use gapfill::extractor::{exhaustive, nbest, Scoring};
use gapfill::glosser::{apply_morphology, compile_gloss, parse_gloss_file, PluralRules};
use gapfill::lattice::parse_lattices;
use gapfill::ngram::NGramModel;
use gapfill::postedit::{insert_articles, prepare, synthetic_corpus, train_tree, Lexicon, TreeParams};
use gapfill::prefsem::{load_ontology, parse_interlingua_file, rank};
use gapfill::skipparse::{skip_parse, split_by_parse, suspicion_train, Budget, Grammar};

#[test]
fn gloss_to_lattice_to_sentence() {
    let glosses = parse_gloss_file(demo::S3_GLOSS).unwrap();
    let compiled = compile_gloss(&glosses[0]);
    let lattice = apply_morphology(&compiled, &PluralRules::default()).unwrap();
    assert_eq!(lattice.path_count().unwrap(), glosses[0].path_count());

    let model = demo::bigram_model(demo::S3_CORPUS).unwrap();
    let reread = NGramModel::from_text(&model.to_text().unwrap()).unwrap();
    let best = nbest(&lattice, &reread, 3, None).unwrap();
    let oracle = exhaustive(&lattice, &reread, 3, &Scoring::default(), 1 << 16).unwrap();
    assert_eq!(best.ranked, oracle.ranked);
    assert_eq!(best.top().unwrap().0, "planned economy times are old");
}

#[test]
fn shipped_lattice_and_model_agree_with_demo() {
    let lattice = parse_lattices(include_str!("../fixtures/s8.lat")).unwrap().remove(0);
    let model = NGramModel::from_text(include_str!("../fixtures/s8.lm")).unwrap();
    let top = nbest(&lattice, &model, 1, None).unwrap().top().unwrap().clone();
    let report = demo::s8(demo::S8_SEED).unwrap();
    assert_eq!(top.0, report.bigram.text);
    assert_eq!(top.1.to_bits(), report.bigram.logprob.to_bits());
}

#[test]
fn say_event_readings_rank_by_agent_fitness() {
    let o = load_ontology(demo::ONTOLOGY).unwrap();
    let readings = parse_interlingua_file(demo::SAY_CANDIDATES).unwrap();
    let ranked = rank(&readings, &o);
    let agents: Vec<&str> = ranked.iter().map(|(i, _)| readings[*i].instances[1].concept.as_str()).collect();
    assert_eq!(agents, ["EMPLOYEE", "CROWD", "COMPANY-BUSINESS", "CALENDAR-MONTH", "ROCK"]);
}

#[test]
fn noisy_lines_parse_after_skipping_their_noise() {
    let g = Grammar::parse(demo::TOY_GRAMMAR).unwrap();
    let corpus = demo::corpus_lines(demo::MIXED_CORPUS);
    let (parsed, unparsed) = split_by_parse(&corpus, &g);
    let table = suspicion_train(&parsed, &unparsed, &g).unwrap();
    let toks = ["the", "dogs", "uh", "bark"];
    let res = skip_parse(&toks, &g, &table, Budget::default()).unwrap();
    assert_eq!(res.skipped, [2]);
    assert_eq!(res.tree.leaves(), [0, 1, 3]);
}

#[test]
fn stripped_synthetic_text_gets_its_articles_back() {
    let nouns = [("dog", "dogs"), ("idea", "ideas"), ("apple", "apples"), ("company", "companies")];
    let lex = Lexicon::parse(demo::ARTICLE_LEXICON).unwrap();
    let text = synthetic_corpus(&nouns, &["big", "old"], 40, 9);
    let prepared = prepare(&text, &lex).unwrap();
    let tree = train_tree(&prepared.instances(), TreeParams { max_depth: 6, min_leaf: 0 }).unwrap();
    let restored = insert_articles(&prepared.stripped_text(), &tree, &lex);
    assert_eq!(restored.to_lowercase(), text.to_lowercase());
}
