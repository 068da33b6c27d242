use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn gapfill(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapfill")).args(args).env_remove("GAPFILL_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = gapfill(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn extract_without_arguments_is_a_usage_error() {
    let o = gapfill(&["extract"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn extract_reproduces_bundled_sentence() {
    let out = ok(&["extract", "--model", p(&fixture("s8.lm")), "--n", "1", p(&fixture("s8.lat"))]);
    let line = out.lines().next().unwrap();
    assert_eq!(line.split('\t').nth(2), Some("The new company plans to establish in February."));
}

#[test]
fn demos_print_both_extractors() {
    let s8 = ok(&["demo", "s8"]);
    assert!(s8.contains("(random extractor)\nThe new companies will have as a purpose launching at February.\t"));
    assert!(s8.contains("(bigram extractor)\nThe new company plans to establish in February.\t"));
    assert!(ok(&["demo", "s3"]).contains("\n...planned economy times are old...\t"));
    let tr = ok(&["demo", "translit"]);
    assert!(tr.contains("kurinton\tclinton\t"));
    assert!(tr.contains("suteppaa mootaa\tstepper motor\t"));
    assert_eq!(gapfill(&["demo", "s9"]).status.code(), Some(2));
}

#[test]
fn seed_environment_variable_is_honoured() {
    let run = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_gapfill")).args(["demo", "s8"]).env("GAPFILL_SEED", seed).output().unwrap()
    };
    assert_eq!(stdout(&run("11")), stdout(&run("11")));
    assert_ne!(stdout(&run("11")), ok(&["demo", "s8"]));
    assert_eq!(run("eleven").status.code(), Some(2));
}

#[test]
fn lm_scores_are_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.lm");
    ok(&["lm", "train", "--order", "3", p(&fixture("s8.corpus")), "-o", p(&model)]);
    let a = ok(&["lm", "score", "--model", p(&model), p(&fixture("s3.corpus"))]);
    let b = ok(&["lm", "score", "--model", p(&model), p(&fixture("s3.corpus"))]);
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 10);
}

#[test]
fn error_classes_have_distinct_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let (model, lattice) = (fixture("s8.lm"), fixture("s8.lat"));
    let missing = dir.path().join("nope.lat");
    assert_eq!(gapfill(&["extract", "--model", p(&model), p(&missing)]).status.code(), Some(3));

    let bad = dir.path().join("bad.lat");
    std::fs::write(&bad, "LATTICE v1 2 0 1\n0 1 word notanumber\n").unwrap();
    assert_eq!(gapfill(&["extract", "--model", p(&model), p(&bad)]).status.code(), Some(4));

    let zero = ["extract", "--model", p(&model), "--n", "0", p(&lattice)];
    assert_eq!(gapfill(&zero).status.code(), Some(5));
}

#[test]
fn gloss_compiles_to_the_shipped_lattice_shape() {
    let out = ok(&["gloss", p(&fixture("s3.gloss"))]);
    assert!(out.starts_with("LATTICE v1"));
    assert!(!out.contains("+plural"));
    assert!(out.contains("times"));
}

#[test]
fn prefsem_ranks_say_event_readings() {
    let out = ok(&["prefsem", "--ontology", p(&fixture("ontology.txt")), p(&fixture("say.il"))]);
    let ranked: Vec<&str> =
        out.lines().filter(|l| !l.starts_with('\t')).map(|l| l.split('\t').nth(1).unwrap()).collect();
    assert_eq!(ranked, ["1", "0.8", "0.25", "0.05", "0.01"]);
}

#[test]
fn translit_table_and_decode() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.tsv");
    ok(&["translit", "table", p(&fixture("translit_pairs.tsv")), "-o", p(&table)]);
    let out = ok(&[
        "translit",
        "decode",
        "--table",
        p(&table),
        "--words",
        p(&fixture("english_words.txt")),
        "--n",
        "3",
        "kurinton",
    ]);
    assert_eq!(out.lines().count(), 3);
    assert!(out.starts_with("kurinton\t1\t"));
    assert!(out.lines().next().unwrap().ends_with("\tclinton"));
}

#[test]
fn skipparse_train_then_parse() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("suspicion.tsv");
    let grammar = fixture("toy_grammar.txt");
    ok(&["skipparse", "train", "--grammar", p(&grammar), p(&fixture("mixed_corpus.txt")), "-o", p(&table)]);
    let out = ok(&[
        "skipparse",
        "parse",
        "--grammar",
        p(&grammar),
        "--suspicion",
        p(&table),
        p(&fixture("mixed_corpus.txt")),
    ]);
    let first = out.lines().next().unwrap();
    assert!(first.starts_with("ok\t0\t\t(S "), "{first}");
    assert!(out.lines().any(|l| l.starts_with("ok\t1\tuh\t")));
}

#[test]
fn postedit_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.tsv");
    let stripped = dir.path().join("stripped.txt");
    let tree = dir.path().join("tree.txt");
    let lex = fixture("article_lexicon.txt");
    let text = fixture("articles.txt");
    ok(&["postedit", "prepare", "--lexicon", p(&lex), p(&text), "--stripped", p(&stripped), "-o", p(&inst)]);
    ok(&["postedit", "train", p(&inst), "-o", p(&tree)]);
    let eval = ok(&["postedit", "eval", "--tree", p(&tree), p(&inst)]);
    let acc: f64 = eval.lines().next().unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    let base: f64 = eval.lines().nth(1).unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    assert!(acc >= base);
    let applied = ok(&["postedit", "apply", "--tree", p(&tree), "--lexicon", p(&lex), p(&stripped)]);
    assert_eq!(applied.lines().count(), std::fs::read_to_string(&stripped).unwrap().lines().count());
}

#[test]
fn inputs_are_not_modified() {
    let files = ["s8.lm", "s8.lat", "s8.corpus"].map(fixture);
    let before: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
    ok(&["extract", "--model", p(&files[0]), "--n", "5", p(&files[1])]);
    ok(&["lm", "score", "--model", p(&files[0]), p(&files[2])]);
    let after: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
    assert_eq!(before, after);
}
