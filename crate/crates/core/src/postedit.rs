//! Article insertion for article-free English.
//!
//! Noun-phrase slots are found with a small lexicon (`J* N+` not already
//! preceded by a determiner). Each slot is described by six categorical
//! features and classified by an ID3 tree as DEF, INDEF or NONE.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const FEATURES: [&str; 6] = ["head", "initial", "next", "plural", "prev", "seen"];
/// Value used when a feature has nothing to look at.
pub const NONE_VALUE: &str = "<none>";
const DETERMINERS: [&str; 16] = [
    "the", "a", "an", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our", "their", "some",
    "every",
];

#[derive(Debug, Error, PartialEq)]
pub enum PosteditError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("no instances")]
    NoInstances,
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Def,
    Indef,
    None,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Def, Label::Indef, Label::None];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Def => "DEF",
            Label::Indef => "INDEF",
            Label::None => "NONE",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        Label::ALL.into_iter().find(|l| l.as_str() == s)
    }

    fn of_article(word: &str) -> Option<Label> {
        match word.to_lowercase().as_str() {
            "the" => Some(Label::Def),
            "a" | "an" => Some(Label::Indef),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WordClass {
    Noun,
    PluralNoun,
    Adjective,
}

/// Word → class, from `word TAG` lines with tags N, NS, J.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Lexicon {
    words: HashMap<String, WordClass>,
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Lexicon, PosteditError> {
        let mut words = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fail = |msg: String| PosteditError::Format { line: i + 1, msg };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(fail("expected `word TAG`".into()));
            }
            let class = match cols[1] {
                "N" => WordClass::Noun,
                "NS" => WordClass::PluralNoun,
                "J" => WordClass::Adjective,
                t => return Err(fail(format!("unknown tag {t:?}"))),
            };
            words.insert(cols[0].to_lowercase(), class);
        }
        Ok(Lexicon { words })
    }

    pub fn class(&self, word: &str) -> Option<WordClass> {
        self.words.get(&word.to_lowercase()).copied()
    }

    fn is_noun(&self, word: &str) -> bool {
        matches!(self.class(word), Some(WordClass::Noun | WordClass::PluralNoun))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArticleInstance {
    pub label: Label,
    /// Values in `FEATURES` order.
    pub features: Vec<String>,
}

impl ArticleInstance {
    pub fn feature(&self, name: &str) -> &str {
        FEATURES.iter().position(|f| *f == name).map_or(NONE_VALUE, |i| &self.features[i])
    }
}

/// One slot in stripped text: where an article was (or could be) placed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    pub sentence: usize,
    /// Index in the stripped sentence of the token the article precedes.
    pub position: usize,
    /// Removed article surface, if any.
    pub article: Option<String>,
    pub instance: ArticleInstance,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prepared {
    pub stripped: Vec<Vec<String>>,
    pub slots: Vec<Slot>,
}

impl Prepared {
    pub fn instances(&self) -> Vec<ArticleInstance> {
        self.slots.iter().map(|s| s.instance.clone()).collect()
    }

    pub fn stripped_text(&self) -> String {
        self.stripped.iter().map(|s| s.join(" ")).collect::<Vec<_>>().join("\n")
    }

    /// Puts every removed article back where it came from.
    pub fn restore(&self) -> String {
        let mut out = Vec::new();
        for (si, sent) in self.stripped.iter().enumerate() {
            let mut toks = Vec::new();
            for (ti, t) in sent.iter().enumerate() {
                for s in self.slots.iter().filter(|s| s.sentence == si && s.position == ti) {
                    toks.extend(s.article.clone());
                }
                toks.push(t.clone());
            }
            for s in self.slots.iter().filter(|s| s.sentence == si && s.position == sent.len()) {
                toks.extend(s.article.clone());
            }
            out.push(toks.join(" "));
        }
        out.join("\n")
    }
}

/// Start index of each `J* N+` run in an article-free sentence whose
/// preceding token is not a determiner.
fn np_slots(tokens: &[String], lex: &Lexicon) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let start = i;
        while i < tokens.len() && lex.class(&tokens[i]) == Some(WordClass::Adjective) {
            i += 1;
        }
        let nouns_from = i;
        while i < tokens.len() && lex.is_noun(&tokens[i]) {
            i += 1;
        }
        if i > nouns_from {
            let det_before = start > 0 && DETERMINERS.contains(&tokens[start - 1].to_lowercase().as_str());
            if !det_before {
                out.push(start);
            }
        } else {
            i = start + 1;
        }
    }
    out
}

/// Head noun of the phrase starting at `pos`: the last noun of its noun run,
/// or the word itself when no phrase starts there.
fn head_at(tokens: &[String], pos: usize, lex: &Lexicon) -> (String, bool) {
    let mut i = pos;
    while i < tokens.len() && lex.class(&tokens[i]) == Some(WordClass::Adjective) {
        i += 1;
    }
    let mut head = None;
    while i < tokens.len() && lex.is_noun(&tokens[i]) {
        head = Some(i);
        i += 1;
    }
    match head.or((pos < tokens.len()).then_some(pos)) {
        Some(h) => (tokens[h].to_lowercase(), lex.class(&tokens[h]) == Some(WordClass::PluralNoun)),
        None => (NONE_VALUE.to_string(), false),
    }
}

/// `seen` holds the words of earlier sentences; earlier words of this
/// sentence are checked directly.
fn features(tokens: &[String], pos: usize, lex: &Lexicon, seen: &BTreeSet<String>) -> Vec<String> {
    let (head, plural) = head_at(tokens, pos, lex);
    let word = |i: Option<usize>| i.and_then(|i| tokens.get(i)).map_or(NONE_VALUE.to_string(), |t| t.to_lowercase());
    let yes_no = |b: bool| if b { "yes" } else { "no" }.to_string();
    let mut values = BTreeMap::new();
    values.insert("head", head.clone());
    values.insert("initial", yes_no(pos == 0));
    values.insert("next", word(Some(pos)));
    values.insert("plural", yes_no(plural));
    values.insert("prev", word(pos.checked_sub(1)));
    let earlier = seen.contains(&head) || tokens[..pos.min(tokens.len())].iter().any(|t| t.to_lowercase() == head);
    values.insert("seen", yes_no(earlier));
    FEATURES.iter().map(|f| values[f].clone()).collect()
}

/// Strips articles from text with one sentence per line and labels every
/// article position and every article-free NP slot. A blank line ends a
/// document, which resets what counts as seen.
pub fn prepare(text: &str, lex: &Lexicon) -> Result<Prepared, PosteditError> {
    let sentences: Vec<Vec<String>> =
        text.split('\n').map(|l| l.split_whitespace().map(str::to_string).collect()).collect();
    if sentences.iter().all(Vec::is_empty) {
        return Err(PosteditError::EmptyCorpus);
    }
    let mut stripped = Vec::new();
    let mut slots = Vec::new();
    let mut seen = BTreeSet::new();
    for (si, sent) in sentences.iter().enumerate() {
        if sent.is_empty() {
            seen.clear();
        }
        let mut toks = Vec::new();
        let mut removed: Vec<(usize, String)> = Vec::new();
        for t in sent {
            if Label::of_article(t).is_some() {
                removed.push((toks.len(), t.clone()));
            } else {
                toks.push(t.clone());
            }
        }
        let mut positions: BTreeMap<usize, Option<String>> =
            np_slots(&toks, lex).into_iter().map(|p| (p, None)).collect();
        for (p, art) in removed {
            positions.insert(p, Some(art));
        }
        for (p, article) in positions {
            let feats = features(&toks, p, lex, &seen);
            let label = article.as_deref().and_then(Label::of_article).unwrap_or(Label::None);
            slots.push(Slot {
                sentence: si,
                position: p,
                article,
                instance: ArticleInstance { label, features: feats },
            });
        }
        seen.extend(toks.iter().map(|t| t.to_lowercase()));
        stripped.push(toks);
    }
    Ok(Prepared { stripped, slots })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecisionTree {
    Leaf {
        label: Label,
        counts: [usize; 3],
    },
    Split {
        feature: String,
        branches: BTreeMap<String, DecisionTree>,
        /// Majority label at this node, used for unseen values.
        default: Label,
        counts: [usize; 3],
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Nodes with at most this many instances become leaves.
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> TreeParams {
        TreeParams { max_depth: 8, min_leaf: 1 }
    }
}

fn counts_of(items: &[&ArticleInstance]) -> [usize; 3] {
    let mut c = [0; 3];
    for i in items {
        c[i.label as usize] += 1;
    }
    c
}

/// Most frequent label; ties go to the earlier label.
fn majority(counts: &[usize; 3]) -> Label {
    let mut best = Label::Def;
    for l in Label::ALL {
        if counts[l as usize] > counts[best as usize] {
            best = l;
        }
    }
    best
}

fn entropy(counts: &[usize; 3]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

const MIN_GAIN: f64 = 1e-12;

pub fn train_tree(instances: &[ArticleInstance], params: TreeParams) -> Result<DecisionTree, PosteditError> {
    if instances.is_empty() {
        return Err(PosteditError::NoInstances);
    }
    let refs: Vec<&ArticleInstance> = instances.iter().collect();
    Ok(grow(&refs, &mut BTreeSet::new(), 0, params))
}

fn grow(items: &[&ArticleInstance], used: &mut BTreeSet<usize>, depth: usize, params: TreeParams) -> DecisionTree {
    let counts = counts_of(items);
    let label = majority(&counts);
    let leaf = DecisionTree::Leaf { label, counts };
    if depth >= params.max_depth || items.len() <= params.min_leaf || counts.iter().filter(|&&c| c > 0).count() < 2 {
        return leaf;
    }
    let base = entropy(&counts);
    let mut best: Option<(f64, usize)> = None;
    // FEATURES is sorted, so scanning in order breaks ties by name.
    for f in (0..FEATURES.len()).filter(|f| !used.contains(f)) {
        let mut parts: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
        for i in items {
            parts.entry(&i.features[f]).or_default()[i.label as usize] += 1;
        }
        let rest: f64 = parts.values().map(|c| c.iter().sum::<usize>() as f64 / items.len() as f64 * entropy(c)).sum();
        let gain = base - rest;
        if gain > MIN_GAIN && best.is_none_or(|(g, _)| gain > g + MIN_GAIN) {
            best = Some((gain, f));
        }
    }
    let Some((_, f)) = best else { return leaf };
    let mut groups: BTreeMap<String, Vec<&ArticleInstance>> = BTreeMap::new();
    for i in items {
        groups.entry(i.features[f].clone()).or_default().push(i);
    }
    used.insert(f);
    let branches = groups.into_iter().map(|(v, g)| (v, grow(&g, used, depth + 1, params))).collect();
    used.remove(&f);
    DecisionTree::Split { feature: FEATURES[f].to_string(), branches, default: label, counts }
}

impl DecisionTree {
    pub fn classify(&self, features: &[String]) -> Label {
        match self {
            DecisionTree::Leaf { label, .. } => *label,
            DecisionTree::Split { feature, branches, default, .. } => {
                let f = FEATURES.iter().position(|n| n == feature).expect("known feature");
                match branches.get(&features[f]) {
                    Some(t) => t.classify(features),
                    None => *default,
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf { .. } => 0,
            DecisionTree::Split { branches, .. } => 1 + branches.values().map(DecisionTree::depth).max().unwrap_or(0),
        }
    }

    fn write(&self, out: &mut String, indent: usize, value: Option<&str>) {
        let pad = "  ".repeat(indent);
        let head = match value {
            Some(v) => format!("{pad}branch {v}"),
            None => format!("{pad}root"),
        };
        let c = |c: &[usize; 3]| format!("{},{},{}", c[0], c[1], c[2]);
        match self {
            DecisionTree::Leaf { label, counts } => {
                writeln!(out, "{head} leaf {label} counts={}", c(counts)).unwrap();
            }
            DecisionTree::Split { feature, branches, default, counts } => {
                writeln!(out, "{head} split {feature} default={default} counts={}", c(counts)).unwrap();
                for (v, t) in branches {
                    t.write(out, indent + 1, Some(v));
                }
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("DTREE v1\n");
        self.write(&mut out, 0, None);
        out
    }

    pub fn from_text(text: &str) -> Result<DecisionTree, PosteditError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
        match lines.next() {
            Some((_, "DTREE v1")) => {}
            _ => return Err(PosteditError::Format { line: 1, msg: "expected DTREE v1 header".into() }),
        }
        let rows: Vec<(usize, usize, Vec<&str>)> =
            lines.map(|(i, l)| (i + 1, (l.len() - l.trim_start().len()) / 2, l.split_whitespace().collect())).collect();
        let mut at = 0;
        let tree = parse_node(&rows, &mut at, 0, true)?.1;
        if at != rows.len() {
            return Err(PosteditError::Format { line: rows[at].0, msg: "unexpected trailing node".into() });
        }
        Ok(tree)
    }
}

fn parse_counts(s: &str, line: usize) -> Result<[usize; 3], PosteditError> {
    let fail = || PosteditError::Format { line, msg: format!("bad counts {s:?}") };
    let v: Vec<usize> = s
        .strip_prefix("counts=")
        .ok_or_else(fail)?
        .split(',')
        .map(|x| x.parse().map_err(|_| fail()))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| fail())
}

fn parse_node(
    rows: &[(usize, usize, Vec<&str>)],
    at: &mut usize,
    indent: usize,
    root: bool,
) -> Result<(Option<String>, DecisionTree), PosteditError> {
    let (line, ind, fields) = rows.get(*at).ok_or(PosteditError::Format { line: 0, msg: "missing node".into() })?;
    let fail = |msg: &str| PosteditError::Format { line: *line, msg: msg.to_string() };
    if *ind != indent {
        return Err(fail("bad indentation"));
    }
    let (value, rest) = match (root, fields.first().copied()) {
        (true, Some("root")) => (None, &fields[1..]),
        (false, Some("branch")) if fields.len() > 1 => (Some(fields[1].to_string()), &fields[2..]),
        _ => return Err(fail("expected root or branch")),
    };
    *at += 1;
    let label = |s: &str| Label::parse(s).ok_or_else(|| fail("bad label"));
    let node = match rest {
        ["leaf", l, c] => DecisionTree::Leaf { label: label(l)?, counts: parse_counts(c, *line)? },
        ["split", feature, d, c] => {
            if !FEATURES.contains(feature) {
                return Err(fail("unknown feature"));
            }
            let default = label(d.strip_prefix("default=").ok_or_else(|| fail("missing default"))?)?;
            let counts = parse_counts(c, *line)?;
            let mut branches = BTreeMap::new();
            while rows.get(*at).is_some_and(|r| r.1 > indent) {
                let (v, t) = parse_node(rows, at, indent + 1, false)?;
                branches.insert(v.expect("branch value"), t);
            }
            if branches.is_empty() {
                return Err(fail("split without branches"));
            }
            DecisionTree::Split { feature: feature.to_string(), branches, default, counts }
        }
        _ => return Err(fail("expected leaf or split")),
    };
    Ok((value, node))
}

/// `a` or `an` by the next word's first letter.
pub fn indefinite_for(next: &str) -> &'static str {
    match next.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn capitalize(s: &str) -> String {
    let mut cs = s.chars();
    cs.next().map_or_else(String::new, |c| c.to_uppercase().chain(cs).collect())
}

/// Inserts articles into article-free text, one sentence per line.
pub fn insert_articles(text: &str, tree: &DecisionTree, lex: &Lexicon) -> String {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for line in text.split('\n') {
        let toks: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if toks.is_empty() {
            seen.clear();
            out.push(String::new());
            continue;
        }
        let slots: BTreeSet<usize> = np_slots(&toks, lex).into_iter().collect();
        let mut words = Vec::new();
        for (i, t) in toks.iter().enumerate() {
            if slots.contains(&i) {
                let article = match tree.classify(&features(&toks, i, lex, &seen)) {
                    Label::Def => Some("the"),
                    Label::Indef => Some(indefinite_for(t)),
                    Label::None => None,
                };
                if let Some(a) = article {
                    words.push(if i == 0 { capitalize(a) } else { a.to_string() });
                }
            }
            words.push(t.clone());
        }
        seen.extend(toks.iter().map(|t| t.to_lowercase()));
        out.push(words.join(" "));
    }
    out.join("\n")
}

pub fn evaluate(tree: &DecisionTree, heldout: &[ArticleInstance]) -> Result<f64, PosteditError> {
    if heldout.is_empty() {
        return Err(PosteditError::NoInstances);
    }
    let right = heldout.iter().filter(|i| tree.classify(&i.features) == i.label).count();
    Ok(right as f64 / heldout.len() as f64)
}

/// Share of the most frequent label.
pub fn majority_baseline(instances: &[ArticleInstance]) -> f64 {
    let refs: Vec<&ArticleInstance> = instances.iter().collect();
    let c = counts_of(&refs);
    c[majority(&c) as usize] as f64 / instances.len().max(1) as f64
}

pub fn instances_to_tsv(instances: &[ArticleInstance]) -> String {
    let mut out = format!("label\t{}\n", FEATURES.join("\t"));
    for i in instances {
        writeln!(out, "{}\t{}", i.label, i.features.join("\t")).unwrap();
    }
    out
}

pub fn instances_from_tsv(text: &str) -> Result<Vec<ArticleInstance>, PosteditError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header: Vec<&str> = match lines.next() {
        Some((_, h)) => h.split('\t').collect(),
        None => return Err(PosteditError::NoInstances),
    };
    if header.first() != Some(&"label") {
        return Err(PosteditError::Format { line: 1, msg: "header must start with `label`".into() });
    }
    let cols: Vec<Option<usize>> = FEATURES.iter().map(|f| header.iter().position(|h| h == f)).collect();
    let mut out = Vec::new();
    for (i, line) in lines {
        let fail = |msg: String| PosteditError::Format { line: i + 1, msg };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != header.len() {
            return Err(fail(format!("expected {} columns", header.len())));
        }
        let label = Label::parse(fields[0]).ok_or_else(|| fail(format!("bad label {:?}", fields[0])))?;
        let features = cols.iter().map(|c| c.map_or(NONE_VALUE.to_string(), |c| fields[c].to_string())).collect();
        out.push(ArticleInstance { label, features });
    }
    Ok(out)
}

/// Generates documents whose articles follow a fixed rule: a head noun
/// already mentioned takes "the"; otherwise singular takes "a"/"an" and
/// plural takes nothing.
pub fn synthetic_corpus(lex_nouns: &[(&str, &str)], adjectives: &[&str], docs: usize, seed: u64) -> String {
    const VERBS: [&str; 6] = ["saw", "liked", "found", "moved", "wanted", "helped"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..docs {
        let mut mentioned: BTreeSet<&str> = BTreeSet::new();
        let sentences = rng.gen_range(3..7);
        for _ in 0..sentences {
            let mut sent: Vec<String> = Vec::new();
            for slot in 0..2 {
                let &(sing, plur) = lex_nouns.choose(&mut rng).expect("nouns");
                let plural = rng.gen_bool(0.4);
                let noun = if plural { plur } else { sing };
                let mut np = Vec::new();
                if rng.gen_bool(0.3) {
                    np.push(adjectives.choose(&mut rng).expect("adjectives").to_string());
                }
                np.push(noun.to_string());
                if mentioned.contains(noun) {
                    sent.push("the".into());
                } else if !plural {
                    sent.push(indefinite_for(&np[0]).into());
                }
                sent.extend(np);
                mentioned.insert(noun);
                if slot == 0 {
                    sent.push(VERBS.choose(&mut rng).expect("verbs").to_string());
                }
            }
            out.push(sent.join(" "));
        }
        out.push(String::new());
    }
    out.join("\n")
}
