//! Chart parsing with a word-skipping fallback.
//!
//! Boundary markers are not grammar terminals: a kept marker pair acts as
//! a bracket that no chart item, partial or complete, may cross. When the
//! full input fails to parse, subsets of tokens are dropped in order of
//! increasing size and decreasing suspicion until one parses.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GrammarError {
    #[error("grammar line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("symbol {0} is neither a nonterminal nor a lexical tag")]
    Undeclared(String),
    #[error("grammar has no rules")]
    NoRules,
}

#[derive(Debug, Error, PartialEq)]
pub enum SkipError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("search budget exhausted after {tried} candidates")]
    BudgetExhausted { tried: usize, diagnostics: Diagnostics },
    #[error("no parse with at most {max_skips} skips ({tried} candidates tried)")]
    NoParse { max_skips: usize, tried: usize, diagnostics: Diagnostics },
}

/// Best partial analysis of the unskipped input, for failure reports.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Widest constituent found: token range and label.
    pub widest: Option<(usize, usize, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub lhs: String,
    pub rhs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkerPair {
    pub open: String,
    pub close: String,
    /// Required label for the enclosed span when the pair is dropped.
    pub label: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Grammar {
    start: String,
    rules: Vec<Rule>,
    lexicon: HashMap<String, Vec<String>>,
    oov: Vec<String>,
    markers: Vec<MarkerPair>,
    nouns: BTreeSet<String>,
    symbols: Vec<String>,
    symbol_ids: HashMap<String, usize>,
    /// Rule indices keyed by first right-hand symbol id.
    by_first: Vec<Vec<usize>>,
    rhs_ids: Vec<Vec<usize>>,
    lhs_ids: Vec<usize>,
    nonterminals: BTreeSet<String>,
}

fn tag_list(s: &str) -> Vec<String> {
    s.split(',').filter(|t| !t.is_empty()).map(str::to_string).collect()
}

impl Grammar {
    pub fn parse(text: &str) -> Result<Grammar, GrammarError> {
        let mut start = None;
        let mut rules = Vec::new();
        let mut lexicon: HashMap<String, Vec<String>> = HashMap::new();
        let mut oov = Vec::new();
        let mut markers = Vec::new();
        let mut nouns = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fail = |msg: &str| GrammarError::Format { line: i + 1, msg: msg.to_string() };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "start" if fields.len() == 2 => start = Some(fields[1].to_string()),
                "lex" if fields.len() == 3 => {
                    lexicon.entry(fields[1].to_string()).or_default().extend(tag_list(fields[2]));
                }
                "oov" if fields.len() == 2 => oov = tag_list(fields[1]),
                "noun" if fields.len() == 2 => nouns.extend(tag_list(fields[1])),
                "marker" if (fields.len() == 4 || fields.len() == 5) && fields[3] == "pair" => {
                    markers.push(MarkerPair {
                        open: fields[1].to_string(),
                        close: fields[2].to_string(),
                        label: fields.get(4).map(|s| s.to_string()),
                    });
                }
                "start" | "lex" | "oov" | "noun" | "marker" => return Err(fail("wrong number of fields")),
                _ => {
                    if fields.get(1) != Some(&"->") || fields.len() < 3 {
                        return Err(fail("expected `A -> B C ...`"));
                    }
                    for alt in fields[2..].split(|f| *f == "|") {
                        if alt.is_empty() {
                            return Err(fail("empty alternative"));
                        }
                        rules.push(Rule {
                            lhs: fields[0].to_string(),
                            rhs: alt.iter().map(|s| s.to_string()).collect(),
                        });
                    }
                }
            }
        }
        if rules.is_empty() {
            return Err(GrammarError::NoRules);
        }
        let start = start.unwrap_or_else(|| rules[0].lhs.clone());
        Grammar::new(start, rules, lexicon, oov, markers, nouns)
    }

    pub fn new(
        start: String,
        rules: Vec<Rule>,
        lexicon: HashMap<String, Vec<String>>,
        oov: Vec<String>,
        markers: Vec<MarkerPair>,
        nouns: BTreeSet<String>,
    ) -> Result<Grammar, GrammarError> {
        let nonterminals: BTreeSet<String> = rules.iter().map(|r| r.lhs.clone()).collect();
        let tags: BTreeSet<String> = lexicon.values().flatten().chain(&oov).cloned().collect();
        let declared = |s: &String| nonterminals.contains(s) || tags.contains(s);
        for s in rules.iter().flat_map(|r| &r.rhs).chain(std::iter::once(&start)) {
            if !declared(s) {
                return Err(GrammarError::Undeclared(s.clone()));
            }
        }
        for m in &markers {
            if let Some(l) = &m.label {
                if !declared(l) {
                    return Err(GrammarError::Undeclared(l.clone()));
                }
            }
        }
        let mut symbols: Vec<String> = nonterminals.iter().chain(&tags).cloned().collect();
        symbols.sort();
        symbols.dedup();
        let symbol_ids: HashMap<String, usize> = symbols.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let rhs_ids: Vec<Vec<usize>> = rules.iter().map(|r| r.rhs.iter().map(|s| symbol_ids[s]).collect()).collect();
        let lhs_ids: Vec<usize> = rules.iter().map(|r| symbol_ids[&r.lhs]).collect();
        let mut by_first = vec![Vec::new(); symbols.len()];
        for (ri, rhs) in rhs_ids.iter().enumerate() {
            by_first[rhs[0]].push(ri);
        }
        Ok(Grammar {
            start,
            rules,
            lexicon,
            oov,
            markers,
            nouns,
            symbols,
            symbol_ids,
            by_first,
            rhs_ids,
            lhs_ids,
            nonterminals,
        })
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn markers(&self) -> &[MarkerPair] {
        &self.markers
    }

    pub fn is_nonterminal(&self, s: &str) -> bool {
        self.nonterminals.contains(s)
    }

    /// Lexicon tags, trying the exact form then lowercase, else the OOV set.
    pub fn tags(&self, word: &str) -> &[String] {
        self.lexicon
            .get(word)
            .or_else(|| self.lexicon.get(&word.to_lowercase()))
            .map(Vec::as_slice)
            .unwrap_or(&self.oov)
    }

    /// Marker pair index and whether the token opens it.
    pub fn marker(&self, tok: &str) -> Option<(usize, bool)> {
        self.markers.iter().enumerate().find_map(|(i, m)| {
            if m.open == tok {
                Some((i, true))
            } else if m.close == tok {
                Some((i, false))
            } else {
                None
            }
        })
    }

    /// First lexicon tag; markers tag as themselves.
    pub fn pos(&self, tok: &str) -> String {
        if self.marker(tok).is_some() {
            return tok.to_string();
        }
        self.tags(tok).first().cloned().unwrap_or_else(|| "<oov>".to_string())
    }

    pub fn is_noun(&self, tok: &str) -> bool {
        self.marker(tok).is_none() && self.nouns.contains(&self.pos(tok))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseTree {
    Leaf { tag: String, word: String, index: usize },
    Node { label: String, children: Vec<ParseTree> },
}

impl ParseTree {
    pub fn label(&self) -> &str {
        match self {
            ParseTree::Leaf { tag, .. } => tag,
            ParseTree::Node { label, .. } => label,
        }
    }

    /// Token indices of the leaves, left to right.
    pub fn leaves(&self) -> Vec<usize> {
        match self {
            ParseTree::Leaf { index, .. } => vec![*index],
            ParseTree::Node { children, .. } => children.iter().flat_map(ParseTree::leaves).collect(),
        }
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseTree::Leaf { tag, word, .. } => write!(f, "({tag} {word})"),
            ParseTree::Node { label, children } => {
                write!(f, "({label}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Bracket constraints over word positions.
#[derive(Clone, Debug, Default)]
struct Brackets {
    spans: Vec<(usize, usize)>,
    points: Vec<usize>,
}

impl Brackets {
    fn crosses(&self, a: usize, b: usize) -> bool {
        self.spans.iter().any(|&(i, j)| (a < i && i < b && b < j) || (i < a && a < j && j < b))
            || self.points.iter().any(|&p| a < p && p < b)
    }
}

/// Matched marker pairs as (open index, close index) in `tokens`, plus
/// unmatched marker indices.
pub fn marker_pairs(tokens: &[&str], g: &Grammar) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut stack: Vec<(usize, usize)> = Vec::new();
    let mut pairs = Vec::new();
    let mut loose = Vec::new();
    for (i, t) in tokens.iter().enumerate() {
        match g.marker(t) {
            Some((m, true)) => stack.push((m, i)),
            Some((m, false)) => match stack.last() {
                Some(&(top, at)) if top == m => {
                    stack.pop();
                    pairs.push((at, i));
                }
                _ => loose.push(i),
            },
            None => {}
        }
    }
    loose.extend(stack.into_iter().map(|(_, i)| i));
    loose.sort_unstable();
    pairs.sort_unstable();
    (pairs, loose)
}

/// Recognition chart over the non-marker tokens of a sequence.
pub struct Chart<'g> {
    g: &'g Grammar,
    tokens: Vec<String>,
    /// Indices (into `tokens`) of the words the chart spans.
    words: Vec<usize>,
    complete: Vec<BTreeSet<usize>>,
    partial: Vec<HashSet<(usize, usize)>>,
}

impl<'g> Chart<'g> {
    pub fn build(tokens: &[&str], g: &'g Grammar) -> Chart<'g> {
        let words: Vec<usize> = (0..tokens.len()).filter(|&i| g.marker(tokens[i]).is_none()).collect();
        let n = words.len();
        let word_pos = |tok_index: usize| words.iter().take_while(|&&w| w < tok_index).count();
        let (pairs, loose) = marker_pairs(tokens, g);
        let brackets = Brackets {
            spans: pairs.iter().map(|&(a, b)| (word_pos(a), word_pos(b))).collect(),
            points: loose.iter().map(|&p| word_pos(p)).collect(),
        };
        let mut chart = Chart {
            g,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
            words,
            complete: vec![BTreeSet::new(); (n + 1) * (n + 1)],
            partial: vec![HashSet::new(); (n + 1) * (n + 1)],
        };
        for len in 1..=n {
            for i in 0..=n - len {
                let j = i + len;
                if brackets.crosses(i, j) {
                    continue;
                }
                let mut agenda: Vec<usize> = Vec::new();
                let mut partial = HashSet::new();
                if len == 1 {
                    let tok = &chart.tokens[chart.words[i]];
                    agenda.extend(g.tags(tok).iter().map(|t| g.symbol_ids[t]));
                }
                for k in i + 1..j {
                    for &(r, d) in &chart.partial[chart.idx(i, k)] {
                        let rhs = &g.rhs_ids[r];
                        if chart.complete[chart.idx(k, j)].contains(&rhs[d]) {
                            if d + 1 == rhs.len() {
                                agenda.push(g.lhs_ids[r]);
                            } else {
                                partial.insert((r, d + 1));
                            }
                        }
                    }
                }
                let mut complete = BTreeSet::new();
                while let Some(sym) = agenda.pop() {
                    if !complete.insert(sym) {
                        continue;
                    }
                    for &r in &g.by_first[sym] {
                        if g.rhs_ids[r].len() == 1 {
                            agenda.push(g.lhs_ids[r]);
                        } else {
                            partial.insert((r, 1));
                        }
                    }
                }
                let at = chart.idx(i, j);
                chart.complete[at] = complete;
                chart.partial[at] = partial;
            }
        }
        chart
    }

    fn n(&self) -> usize {
        self.words.len()
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.n() + 1) + j
    }

    /// Whether `symbol` spans words `i..j`.
    pub fn has(&self, symbol: &str, i: usize, j: usize) -> bool {
        self.g
            .symbol_ids
            .get(symbol)
            .is_some_and(|s| i < j && j <= self.n() && self.complete[self.idx(i, j)].contains(s))
    }

    /// Labels spanning words `i..j`, sorted.
    pub fn labels(&self, i: usize, j: usize) -> Vec<&str> {
        if i >= j || j > self.n() {
            return Vec::new();
        }
        self.complete[self.idx(i, j)].iter().map(|&s| self.g.symbols[s].as_str()).collect()
    }

    pub fn num_words(&self) -> usize {
        self.n()
    }

    pub fn accepts(&self) -> bool {
        self.n() > 0 && self.has(&self.g.start, 0, self.n())
    }

    /// Widest span carrying a nonterminal, leftmost first; token indices.
    pub fn widest(&self) -> Option<(usize, usize, String)> {
        let n = self.n();
        for len in (1..=n).rev() {
            for i in 0..=n - len {
                let labels = self.labels(i, i + len);
                let best = labels.iter().find(|l| self.g.is_nonterminal(l)).or(labels.first());
                if let Some(l) = best {
                    return Some((self.words[i], self.words[i + len - 1] + 1, l.to_string()));
                }
            }
        }
        None
    }

    pub fn tree(&self, symbol: &str) -> Option<ParseTree> {
        let sym = *self.g.symbol_ids.get(symbol)?;
        self.build_tree(sym, 0, self.n(), &mut HashSet::new())
    }

    fn build_tree(
        &self,
        sym: usize,
        i: usize,
        j: usize,
        guard: &mut HashSet<(usize, usize, usize)>,
    ) -> Option<ParseTree> {
        if i >= j || !self.complete[self.idx(i, j)].contains(&sym) || !guard.insert((sym, i, j)) {
            return None;
        }
        let g = self.g;
        let label = g.symbols[sym].clone();
        let mut result = None;
        if j == i + 1 {
            let index = self.words[i];
            let word = &self.tokens[index];
            if g.tags(word).contains(&label) {
                result = Some(ParseTree::Leaf { tag: label.clone(), word: word.clone(), index });
            }
        }
        if result.is_none() {
            for r in (0..g.rules.len()).filter(|&r| g.lhs_ids[r] == sym) {
                if let Some(children) = self.match_rhs(r, 0, i, i, j, guard) {
                    result = Some(ParseTree::Node { label: label.clone(), children });
                    break;
                }
            }
        }
        guard.remove(&(sym, i, j));
        result
    }

    /// Matches `rhs[d..]` of rule `r` over `k..j`, given that `rhs[..d]`
    /// covers `origin..k`. Every proper prefix must be a recorded partial
    /// item, so rebuilt trees respect brackets.
    fn match_rhs(
        &self,
        r: usize,
        d: usize,
        origin: usize,
        k: usize,
        j: usize,
        guard: &mut HashSet<(usize, usize, usize)>,
    ) -> Option<Vec<ParseTree>> {
        if d > 0 && !self.partial[self.idx(origin, k)].contains(&(r, d)) {
            return None;
        }
        let rhs = &self.g.rhs_ids[r];
        if d + 1 == rhs.len() {
            return self.build_tree(rhs[d], k, j, guard).map(|t| vec![t]);
        }
        for m in k + 1..j {
            if !self.complete[self.idx(k, m)].contains(&rhs[d]) {
                continue;
            }
            if let Some(rest) = self.match_rhs(r, d + 1, origin, m, j, guard) {
                if let Some(head) = self.build_tree(rhs[d], k, m, guard) {
                    let mut out = vec![head];
                    out.extend(rest);
                    return Some(out);
                }
            }
        }
        None
    }
}

/// Parse tree for the start symbol over all tokens, if any.
pub fn chart_parse(tokens: &[&str], g: &Grammar) -> Option<ParseTree> {
    let chart = Chart::build(tokens, g);
    if chart.accepts() {
        chart.tree(g.start())
    } else {
        None
    }
}

const SENT_START: &str = "<s>";
const SENT_END: &str = "</s>";

#[derive(Clone, Debug, PartialEq)]
pub struct SuspicionTable {
    scores: HashMap<(String, String), f64>,
    default: f64,
}

impl SuspicionTable {
    pub fn new(scores: HashMap<(String, String), f64>, default: f64) -> SuspicionTable {
        SuspicionTable { scores, default }
    }

    pub fn bigram(&self, a: &str, b: &str) -> f64 {
        self.scores.get(&(a.to_string(), b.to_string())).copied().unwrap_or(self.default)
    }

    pub fn default_score(&self) -> f64 {
        self.default
    }

    /// Per-token score: sum of the two bigrams the token takes part in.
    pub fn token_scores(&self, tokens: &[&str], g: &Grammar) -> Vec<f64> {
        let tags: Vec<String> = std::iter::once(SENT_START.to_string())
            .chain(tokens.iter().map(|t| g.pos(t)))
            .chain(std::iter::once(SENT_END.to_string()))
            .collect();
        (1..tags.len() - 1).map(|i| self.bigram(&tags[i - 1], &tags[i]) + self.bigram(&tags[i], &tags[i + 1])).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<_> = self.scores.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = format!("*\t*\t{}\n", self.default);
        for ((a, b), s) in rows {
            out.push_str(&format!("{a}\t{b}\t{s}\n"));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<SuspicionTable, GrammarError> {
        let mut scores = HashMap::new();
        let mut default = 0.0;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fail = |msg: String| GrammarError::Format { line: i + 1, msg };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(fail("expected tag, tag, score".into()));
            }
            let s: f64 = cols[2].parse().map_err(|_| fail(format!("bad score {:?}", cols[2])))?;
            if !s.is_finite() {
                return Err(fail("score must be finite".into()));
            }
            if cols[0] == "*" && cols[1] == "*" {
                default = s;
            } else {
                scores.insert((cols[0].to_string(), cols[1].to_string()), s);
            }
        }
        Ok(SuspicionTable { scores, default })
    }
}

fn tag_bigrams<S: AsRef<str>>(corpus: &[S], g: &Grammar) -> (HashMap<(String, String), u64>, u64) {
    let mut counts = HashMap::new();
    let mut total = 0;
    for s in corpus {
        let tags: Vec<String> = std::iter::once(SENT_START.to_string())
            .chain(s.as_ref().split_whitespace().map(|t| g.pos(t)))
            .chain(std::iter::once(SENT_END.to_string()))
            .collect();
        for w in tags.windows(2) {
            *counts.entry((w[0].clone(), w[1].clone())).or_default() += 1;
            total += 1;
        }
    }
    (counts, total)
}

/// ln of the add-one smoothed relative frequency ratio, unparsed over
/// parsed, for every POS bigram seen in either corpus.
pub fn suspicion_train<S: AsRef<str>>(parsed: &[S], unparsed: &[S], g: &Grammar) -> Result<SuspicionTable, SkipError> {
    if parsed.is_empty() || unparsed.is_empty() {
        return Err(SkipError::EmptyCorpus);
    }
    let (cp, np) = tag_bigrams(parsed, g);
    let (cu, nu) = tag_bigrams(unparsed, g);
    let types: BTreeSet<&(String, String)> = cp.keys().chain(cu.keys()).collect();
    let v = types.len() as f64;
    let rel = |c: u64, n: u64| (c as f64 + 1.0) / (n as f64 + v);
    let mut scores = HashMap::new();
    for b in types {
        let up = cu.get(b).copied().unwrap_or(0);
        let pp = cp.get(b).copied().unwrap_or(0);
        scores.insert(b.clone(), (rel(up, nu) / rel(pp, np)).ln());
    }
    Ok(SuspicionTable { scores, default: (rel(0, nu) / rel(0, np)).ln() })
}

/// Splits a corpus by whether each sentence parses in full.
pub fn split_by_parse<'a>(corpus: &[&'a str], g: &Grammar) -> (Vec<&'a str>, Vec<&'a str>) {
    corpus.iter().partition(|s| {
        let toks: Vec<&str> = s.split_whitespace().collect();
        chart_parse(&toks, g).is_some()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_skips: usize,
    pub max_candidates: usize,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget { max_skips: 4, max_candidates: 20_000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Subsets that passed the cheap constraints and were parsed.
    pub candidates: usize,
    /// Subsets rejected by a constraint before parsing.
    pub rejected: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkipResult {
    pub kept: Vec<usize>,
    pub skipped: Vec<usize>,
    pub tree: ParseTree,
    pub stats: SearchStats,
}

/// Maximal runs (length ≥ 2) of noun-tagged tokens, as index ranges.
pub fn noun_runs(tokens: &[&str], g: &Grammar) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if g.is_noun(tokens[i]) {
            let start = i;
            while i < tokens.len() && g.is_noun(tokens[i]) {
                i += 1;
            }
            if i - start >= 2 {
                runs.push((start, i));
            }
        } else {
            i += 1;
        }
    }
    runs
}

/// Constraints checkable without parsing: no lone noun dropped from a run,
/// markers dropped only as matched pairs.
pub fn cheap_constraints_ok(skip: &[bool], tokens: &[&str], g: &Grammar) -> bool {
    for (a, b) in noun_runs(tokens, g) {
        if skip[a..b].iter().filter(|&&s| s).count() == 1 {
            return false;
        }
    }
    let (pairs, loose) = marker_pairs(tokens, g);
    if loose.iter().any(|&i| skip[i]) {
        return false;
    }
    pairs.iter().all(|&(a, b)| skip[a] == skip[b])
}

/// A dropped marker pair must enclose non-empty kept material that parses
/// as a single constituent (of the pair's label, when declared).
pub fn dropped_pairs_ok(skip: &[bool], tokens: &[&str], g: &Grammar) -> bool {
    let (pairs, _) = marker_pairs(tokens, g);
    for (a, b) in pairs {
        if !skip[a] {
            continue;
        }
        let inner: Vec<&str> = (a + 1..b).filter(|&i| !skip[i]).map(|i| tokens[i]).collect();
        let chart = Chart::build(&inner, g);
        let n = chart.num_words();
        if n == 0 {
            return false;
        }
        let label = &g.markers[g.marker(tokens[a]).expect("marker").0].label;
        let ok = match label {
            Some(l) => chart.has(l, 0, n),
            None => !chart.labels(0, n).is_empty(),
        };
        if !ok {
            return false;
        }
    }
    true
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(0, n, k, &mut cur, &mut out);
    out
}

pub fn skip_parse(tokens: &[&str], g: &Grammar, s: &SuspicionTable, budget: Budget) -> Result<SkipResult, SkipError> {
    let n = tokens.len();
    let suspicion = s.token_scores(tokens, g);
    let mut stats = SearchStats::default();
    let diagnostics = || Diagnostics { widest: Chart::build(tokens, g).widest() };
    for k in 0..=budget.max_skips.min(n) {
        let mut level: Vec<(f64, Vec<usize>)> = Vec::new();
        for subset in combinations(n, k) {
            let mut skip = vec![false; n];
            for &i in &subset {
                skip[i] = true;
            }
            if cheap_constraints_ok(&skip, tokens, g) {
                level.push((subset.iter().map(|&i| suspicion[i]).sum(), subset));
            } else {
                stats.rejected += 1;
            }
        }
        level.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        for (_, subset) in level {
            if stats.candidates >= budget.max_candidates {
                return Err(SkipError::BudgetExhausted { tried: stats.candidates, diagnostics: diagnostics() });
            }
            stats.candidates += 1;
            let mut skip = vec![false; n];
            for &i in &subset {
                skip[i] = true;
            }
            if !dropped_pairs_ok(&skip, tokens, g) {
                continue;
            }
            let kept: Vec<usize> = (0..n).filter(|&i| !skip[i]).collect();
            let kept_tokens: Vec<&str> = kept.iter().map(|&i| tokens[i]).collect();
            if let Some(tree) = chart_parse(&kept_tokens, g) {
                let tree = reindex(tree, &kept);
                return Ok(SkipResult { kept, skipped: subset, tree, stats });
            }
        }
    }
    Err(SkipError::NoParse { max_skips: budget.max_skips, tried: stats.candidates, diagnostics: diagnostics() })
}

/// Maps leaf indices from the kept subsequence back to input positions.
fn reindex(tree: ParseTree, kept: &[usize]) -> ParseTree {
    match tree {
        ParseTree::Leaf { tag, word, index } => ParseTree::Leaf { tag, word, index: kept[index] },
        ParseTree::Node { label, children } => {
            ParseTree::Node { label, children: children.into_iter().map(|c| reindex(c, kept)).collect() }
        }
    }
}
