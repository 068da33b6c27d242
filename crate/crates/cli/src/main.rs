//! Batch front end: one subcommand per pipeline, results on stdout or `-o`.

mod error;

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gapfill::demo;
use gapfill::extractor::{self, NBestOptions, Scoring};
use gapfill::glosser::{apply_morphology, compile_gloss, parse_gloss_file, PluralRules};
use gapfill::lattice::parse_lattices;
use gapfill::ngram::{good_turing, train, NGramModel, TrainOptions};
use gapfill::postedit::{self, DecisionTree, Lexicon, TreeParams};
use gapfill::prefsem::{self, load_ontology, parse_interlingua_file};
use gapfill::skipparse::{self, Budget, Grammar, SuspicionTable};
use gapfill::translit::{self, TransliterationTable};

use error::CliError;

const SEED_VAR: &str = "GAPFILL_SEED";
const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(name = "gapfill", version, about = "Statistical gap fillers for knowledge-based MT")]
struct Cli {
    /// Write results here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile gloss records into lattices.
    Gloss(GlossArgs),
    /// Train or apply an n-gram model.
    #[command(subcommand)]
    Lm(LmCommand),
    /// Rank lattice paths under a model.
    Extract(ExtractArgs),
    /// Score and rank interlingua candidates.
    Prefsem(PrefsemArgs),
    /// Back-transliterate romanized katakana.
    #[command(subcommand)]
    Translit(TranslitCommand),
    /// Parse sentences, skipping words when needed.
    #[command(subcommand)]
    Skipparse(SkipCommand),
    /// Learn and apply article insertion.
    #[command(subcommand)]
    Postedit(PosteditCommand),
    /// Rerun a bundled example: s3, s8 or translit.
    Demo(DemoArgs),
}

#[derive(Args)]
struct GlossArgs {
    /// Gloss file, or `-` for stdin.
    input: PathBuf,
    /// Extra `singular plural` lines for the pluralizer.
    #[arg(long)]
    plurals: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LmCommand {
    /// Count a corpus (one sentence per line) and write a smoothed model.
    Train {
        corpus: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Use tokens as-is, without lowercasing or name/number classes.
        #[arg(long)]
        verbatim: bool,
    },
    /// Print the log10 probability of each line.
    Score {
        #[arg(long)]
        model: PathBuf,
        corpus: PathBuf,
    },
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Keep only this many hypotheses per search level.
    #[arg(long)]
    beam: Option<usize>,
    /// Print one uniformly random path per lattice instead.
    #[arg(long)]
    random: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Lattice file, or `-` for stdin.
    lattices: PathBuf,
}

#[derive(Args)]
struct PrefsemArgs {
    #[arg(long)]
    ontology: PathBuf,
    /// Interlingua candidates, one expression each.
    candidates: PathBuf,
}

#[derive(Subcommand)]
enum TranslitCommand {
    /// Estimate a correspondence table from aligned pairs.
    Table { pairs: PathBuf },
    /// Decode inputs; bundled table and word list are used by default.
    Decode {
        #[arg(long, conflicts_with = "pairs")]
        table: Option<PathBuf>,
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Saved letter model.
        #[arg(long, conflicts_with = "words")]
        lm: Option<PathBuf>,
        /// English text to train the letter model from.
        #[arg(long)]
        words: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = translit::DEFAULT_LAMBDA)]
        lambda: f64,
        #[arg(required = true)]
        inputs: Vec<String>,
    },
}

#[derive(Subcommand)]
enum SkipCommand {
    /// Learn suspicion scores from a corpus split by parse success.
    Train {
        #[arg(long)]
        grammar: PathBuf,
        corpus: PathBuf,
    },
    /// Parse each line, skipping the most suspicious words as needed.
    Parse {
        #[arg(long)]
        grammar: PathBuf,
        /// Suspicion table; trained on the input itself when absent.
        #[arg(long)]
        suspicion: Option<PathBuf>,
        #[arg(long, default_value_t = Budget::default().max_skips)]
        max_skips: usize,
        #[arg(long, default_value_t = Budget::default().max_candidates)]
        max_candidates: usize,
        corpus: PathBuf,
    },
}

#[derive(Subcommand)]
enum PosteditCommand {
    /// Strip articles and write labelled instances.
    Prepare {
        #[arg(long)]
        lexicon: PathBuf,
        text: PathBuf,
        /// Also write the article-free text here.
        #[arg(long)]
        stripped: Option<PathBuf>,
    },
    /// Learn a decision tree from instances.
    Train {
        instances: PathBuf,
        #[arg(long, default_value_t = TreeParams::default().max_depth)]
        max_depth: usize,
        #[arg(long, default_value_t = TreeParams::default().min_leaf)]
        min_leaf: usize,
    },
    /// Insert articles into article-free text.
    Apply {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        text: PathBuf,
    },
    /// Accuracy of a tree on held-out instances.
    Eval {
        #[arg(long)]
        tree: PathBuf,
        instances: PathBuf,
    },
}

#[derive(Args)]
struct DemoArgs {
    name: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the demo's lattice instead of the report.
    #[arg(long, conflicts_with = "model")]
    lattice: bool,
    /// Print the demo's bigram model instead of the report.
    #[arg(long)]
    model: bool,
}

fn read(path: &Path) -> Result<String, CliError> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::io(path, e))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Explicit flag, then the environment, then the given default.
fn seed(flag: Option<u64>, default: Option<u64>) -> Result<Option<u64>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(SEED_VAR) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::Usage(format!("{SEED_VAR}={v:?} is not an integer"))),
        Err(_) => Ok(default),
    }
}

fn load_model(path: &Path) -> Result<NGramModel, CliError> {
    Ok(NGramModel::from_text(&read(path)?)?)
}

fn lines(text: &str) -> Vec<&str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect()
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut out = String::new();
    match cli.command {
        Command::Gloss(a) => {
            let rules = match &a.plurals {
                Some(p) => PluralRules::from_tsv(&read(p)?)?,
                None => PluralRules::default(),
            };
            for g in parse_gloss_file(&read(&a.input)?)? {
                out.push_str(&apply_morphology(&compile_gloss(&g), &rules)?.to_text());
            }
        }
        Command::Lm(LmCommand::Train { corpus, order, verbatim }) => {
            let text = read(&corpus)?;
            let opts = if verbatim { TrainOptions::verbatim(order) } else { TrainOptions::words(order) };
            out = good_turing(&train(&lines(&text), &opts)?).to_text()?;
        }
        Command::Lm(LmCommand::Score { model, corpus }) => {
            let m = load_model(&model)?;
            for line in lines(&read(&corpus)?) {
                let words: Vec<&str> = line.split_whitespace().collect();
                writeln!(out, "{}\t{line}", m.sentence_logprob(&words)).unwrap();
            }
        }
        Command::Extract(a) => {
            let m = load_model(&a.model)?;
            let lattices = parse_lattices(&read(&a.lattices)?)?;
            let seed = seed(a.seed, Some(DEFAULT_SEED))?.expect("defaulted");
            for (i, l) in lattices.iter().enumerate() {
                if a.random {
                    let p = extractor::random_path(l, seed.wrapping_add(i as u64))?;
                    let score = extractor::score_path(&p, &m, &Scoring::default());
                    writeln!(out, "1\t{score}\t{}", p.spelling()).unwrap();
                    continue;
                }
                let r =
                    extractor::nbest_with(l, &m, &NBestOptions { n: a.n, beam: a.beam, scoring: Scoring::default() })?;
                for (rank, (text, score)) in r.ranked.iter().enumerate() {
                    writeln!(out, "{}\t{score}\t{text}", rank + 1).unwrap();
                }
            }
        }
        Command::Prefsem(a) => {
            let o = load_ontology(&read(&a.ontology)?)?;
            let candidates = parse_interlingua_file(&read(&a.candidates)?)?;
            for (i, s) in prefsem::rank(&candidates, &o) {
                writeln!(out, "{i}\t{}\t{}", s.value, candidates[i].instances[candidates[i].root].id).unwrap();
                for r in &s.records {
                    let domain = r.domain.map_or("-".to_string(), |d| d.value().to_string());
                    writeln!(out, "\t{}\t{}\t{domain}", r.triple, r.range.value()).unwrap();
                }
                for d in &s.diagnostics {
                    writeln!(out, "\t# {d}").unwrap();
                }
            }
        }
        Command::Translit(TranslitCommand::Table { pairs }) => {
            let pairs = translit::parse_pairs(&read(&pairs)?)?;
            out = translit::train_table(&pairs, demo::TABLE_EPSILON)?.to_tsv();
        }
        Command::Translit(TranslitCommand::Decode { table, pairs, lm, words, n, lambda, inputs }) => {
            let table = match (table, pairs) {
                (Some(t), _) => TransliterationTable::from_tsv(&read(&t)?)?,
                (None, Some(p)) => translit::train_table(&translit::parse_pairs(&read(&p)?)?, demo::TABLE_EPSILON)?,
                (None, None) => demo::translit_table()?,
            };
            let lm = match (lm, words) {
                (Some(p), _) => load_model(&p)?,
                (None, Some(w)) => translit::train_letter_model(&lines(&read(&w)?))?,
                (None, None) => demo::letter_model()?,
            };
            for input in &inputs {
                let r = translit::back_transliterate(input, &table, &lm, n, lambda)?;
                for (rank, (text, score)) in r.ranked.iter().enumerate() {
                    writeln!(out, "{input}\t{}\t{score}\t{text}", rank + 1).unwrap();
                }
            }
        }
        Command::Skipparse(SkipCommand::Train { grammar, corpus }) => {
            let g = Grammar::parse(&read(&grammar)?)?;
            let text = read(&corpus)?;
            let (parsed, unparsed) = skipparse::split_by_parse(&lines(&text), &g);
            out = skipparse::suspicion_train(&parsed, &unparsed, &g)?.to_tsv();
        }
        Command::Skipparse(SkipCommand::Parse { grammar, suspicion, max_skips, max_candidates, corpus }) => {
            let g = Grammar::parse(&read(&grammar)?)?;
            let text = read(&corpus)?;
            let sentences = lines(&text);
            let table = match suspicion {
                Some(p) => SuspicionTable::from_tsv(&read(&p)?)?,
                None => {
                    let (parsed, unparsed) = skipparse::split_by_parse(&sentences, &g);
                    skipparse::suspicion_train(&parsed, &unparsed, &g)?
                }
            };
            let budget = Budget { max_skips, max_candidates };
            for s in sentences {
                let toks: Vec<&str> = s.split_whitespace().collect();
                match skipparse::skip_parse(&toks, &g, &table, budget) {
                    Ok(r) => {
                        let skipped: Vec<&str> = r.skipped.iter().map(|&i| toks[i]).collect();
                        writeln!(out, "ok\t{}\t{}\t{}", r.skipped.len(), skipped.join(" "), r.tree).unwrap();
                    }
                    Err(e) => writeln!(out, "fail\t-\t-\t{e}").unwrap(),
                }
            }
        }
        Command::Postedit(PosteditCommand::Prepare { lexicon, text, stripped }) => {
            let lex = Lexicon::parse(&read(&lexicon)?)?;
            let p = postedit::prepare(&read(&text)?, &lex)?;
            if let Some(path) = stripped {
                write_file(&path, &line_terminated(p.stripped_text()))?;
            }
            out = postedit::instances_to_tsv(&p.instances());
        }
        Command::Postedit(PosteditCommand::Train { instances, max_depth, min_leaf }) => {
            let data = postedit::instances_from_tsv(&read(&instances)?)?;
            out = postedit::train_tree(&data, TreeParams { max_depth, min_leaf })?.to_text();
        }
        Command::Postedit(PosteditCommand::Apply { tree, lexicon, text }) => {
            let t = DecisionTree::from_text(&read(&tree)?)?;
            let lex = Lexicon::parse(&read(&lexicon)?)?;
            out = line_terminated(postedit::insert_articles(&read(&text)?, &t, &lex));
        }
        Command::Postedit(PosteditCommand::Eval { tree, instances }) => {
            let t = DecisionTree::from_text(&read(&tree)?)?;
            let data = postedit::instances_from_tsv(&read(&instances)?)?;
            writeln!(out, "accuracy\t{}", postedit::evaluate(&t, &data)?).unwrap();
            writeln!(out, "majority\t{}", postedit::majority_baseline(&data)).unwrap();
        }
        Command::Demo(a) if a.lattice || a.model => {
            let (lattice, corpus) = match a.name.as_str() {
                "s3" => (demo::s3_lattice()?, demo::S3_CORPUS),
                "s8" => (demo::s8_lattice()?, demo::S8_CORPUS),
                other => return Err(CliError::Usage(format!("demo {other:?} has no lattice or model"))),
            };
            out = if a.lattice { lattice.to_text() } else { demo::bigram_model(corpus)?.to_text()? };
        }
        Command::Demo(a) => {
            out = demo::report(&a.name, seed(a.seed, None)?)?;
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let output = cli.output.clone();
    let result = run(cli).and_then(|text| match &output {
        Some(path) => write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gapfill: {e}");
            e.exit_code()
        }
    }
}

/// Text that already ends a line is kept byte for byte.
fn line_terminated(mut text: String) -> String {
    if !text.ends_with('\n') {
        text.push('\n');
    }
    text
}
