//! Bigram/trigram (and letter 4-gram) language models.
//!
//! Tokens are classed before counting: numerals become `<NUM>`,
//! capitalized words missing from the known-word list become `<NAME>`,
//! everything else is lowercased. Each order is smoothed with Simple
//! Good-Turing discounts and unseen mass is passed down by Katz backoff,
//! ending in a uniform share over the unseen vocabulary.
//!
//! All probabilities are log10.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

pub type TokenId = u32;

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const NAME: &str = "<NAME>";
pub const NUM: &str = "<NUM>";

pub const UNK_ID: TokenId = 0;
pub const BOS_ID: TokenId = 1;
pub const EOS_ID: TokenId = 2;
const RESERVED: [&str; 5] = [UNK, BOS, EOS, NAME, NUM];

pub const MAX_ORDER: usize = 4;
/// Pseudo-count used when an order has no singletons.
pub const ADD_EPSILON: f64 = 0.01;
/// Mass reserved per history when Good-Turing regression degenerates.
pub const HELD_OUT_MASS: f64 = 0.01;
/// Raw and regressed estimates are swapped once they agree within this
/// many standard errors.
pub const SGT_CONFIDENCE: f64 = 1.65;
const MIN_DISCOUNT: f64 = 0.01;
const MAX_DISCOUNT: f64 = 0.999;

#[derive(Debug, Error)]
pub enum NGramError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("unsupported order {0} (expected 1..={MAX_ORDER})")]
    BadOrder(usize),
    #[error("model has no word events; refusing to save")]
    EmptyModel,
    #[error("unsupported model header {0:?}")]
    Version(String),
    #[error("truncated model file")]
    Truncated,
    #[error("model format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Classified {
    Word(String),
    Name,
    Num,
}

impl Classified {
    pub fn key(&self) -> &str {
        match self {
            Classified::Word(w) => w,
            Classified::Name => NAME,
            Classified::Num => NUM,
        }
    }
}

/// Digits, optionally mixed with `,` `.` and `%`.
pub fn is_numeral(t: &str) -> bool {
    t.chars().any(|c| c.is_ascii_digit()) && t.chars().all(|c| c.is_ascii_digit() || matches!(c, ',' | '.' | '%'))
}

pub fn classify_token(t: &str, known: &BTreeSet<String>) -> Classified {
    if is_numeral(t) {
        return Classified::Num;
    }
    let lower = t.to_lowercase();
    if t.chars().next().is_some_and(char::is_uppercase) && !known.contains(&lower) {
        Classified::Name
    } else {
        Classified::Word(lower)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOptions {
    pub order: usize,
    /// Replace names and numbers by class tokens and lowercase words.
    /// Off for letter models, where tokens are used verbatim.
    pub classes: bool,
    /// Minimum lowercase frequency for a word to count as known.
    pub known_threshold: u64,
}

impl TrainOptions {
    pub fn words(order: usize) -> TrainOptions {
        TrainOptions { order, classes: true, known_threshold: 2 }
    }

    pub fn verbatim(order: usize) -> TrainOptions {
        TrainOptions { order, classes: false, known_threshold: 0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vocab {
    words: Vec<String>,
    ids: HashMap<String, TokenId>,
}

impl Vocab {
    fn new() -> Vocab {
        let mut v = Vocab::default();
        for r in RESERVED {
            v.intern(r);
        }
        v
    }

    fn intern(&mut self, w: &str) -> TokenId {
        if let Some(&id) = self.ids.get(w) {
            return id;
        }
        let id = self.words.len() as TokenId;
        self.words.push(w.to_string());
        self.ids.insert(w.to_string(), id);
        id
    }

    pub fn id(&self, w: &str) -> Option<TokenId> {
        self.ids.get(w).copied()
    }

    pub fn word(&self, id: TokenId) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Ids a model may predict: everything except `<s>`.
    pub fn predictable(&self) -> impl Iterator<Item = TokenId> + '_ {
        (0..self.words.len() as TokenId).filter(|&id| id != BOS_ID)
    }
}

#[derive(Clone, Debug)]
enum Classing {
    Off,
    Words(BTreeSet<String>),
}

impl Classing {
    fn classify(&self, t: &str) -> String {
        if RESERVED.contains(&t) {
            return t.to_string();
        }
        match self {
            Classing::Off => t.to_string(),
            Classing::Words(known) => classify_token(t, known).key().to_string(),
        }
    }
}

/// Raw n-gram counts for orders 1..=order over classified tokens.
#[derive(Clone, Debug)]
pub struct CountTable {
    order: usize,
    vocab: Vocab,
    classing: Classing,
    counts: Vec<HashMap<Vec<TokenId>, u64>>,
    total: u64,
}

impl CountTable {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of predicted tokens (words plus `</s>`).
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Count of an n-gram given as classified token strings.
    pub fn count(&self, ngram: &[&str]) -> u64 {
        if ngram.is_empty() || ngram.len() > self.order {
            return 0;
        }
        let ids: Option<Vec<TokenId>> = ngram.iter().map(|w| self.vocab.id(w)).collect();
        ids.and_then(|ids| self.counts[ngram.len() - 1].get(&ids).copied()).unwrap_or(0)
    }

    /// All n-grams of order `n` with their counts, as strings, sorted.
    pub fn ngrams(&self, n: usize) -> Vec<(Vec<String>, u64)> {
        let mut out: Vec<(Vec<String>, u64)> = self.counts[n - 1]
            .iter()
            .map(|(k, &c)| (k.iter().map(|&id| self.vocab.word(id).to_string()).collect(), c))
            .collect();
        out.sort();
        out
    }

    pub fn freq_of_freq(&self, n: usize) -> FreqOfFreq {
        FreqOfFreq::from_counts(self.counts[n - 1].values().copied())
    }
}

/// Trains counts on whitespace-tokenized sentences, padding each with
/// `order - 1` copies of `<s>` and one `</s>`.
pub fn train<S: AsRef<str>>(sentences: &[S], opts: &TrainOptions) -> Result<CountTable, NGramError> {
    if !(1..=MAX_ORDER).contains(&opts.order) {
        return Err(NGramError::BadOrder(opts.order));
    }
    if sentences.is_empty() {
        return Err(NGramError::EmptyCorpus);
    }
    let classing = if opts.classes {
        let mut freq: HashMap<String, u64> = HashMap::new();
        for s in sentences {
            for t in s.as_ref().split_whitespace() {
                *freq.entry(t.to_lowercase()).or_default() += 1;
            }
        }
        Classing::Words(freq.into_iter().filter(|&(_, c)| c >= opts.known_threshold).map(|(w, _)| w).collect())
    } else {
        Classing::Off
    };
    let order = opts.order;
    let mut vocab = Vocab::new();
    let mut counts: Vec<HashMap<Vec<TokenId>, u64>> = vec![HashMap::new(); order];
    let mut total = 0;
    for s in sentences {
        let mut padded = vec![BOS_ID; order - 1];
        for t in s.as_ref().split_whitespace() {
            padded.push(vocab.intern(&classing.classify(t)));
        }
        padded.push(EOS_ID);
        for end in order - 1..padded.len() {
            total += 1;
            for n in 1..=order.min(end + 1) {
                *counts[n - 1].entry(padded[end + 1 - n..=end].to_vec()).or_default() += 1;
            }
        }
    }
    Ok(CountTable { order, vocab, classing, counts, total })
}

/// Frequency-of-frequency table: r -> N_r.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FreqOfFreq {
    n_r: BTreeMap<u64, u64>,
}

impl FreqOfFreq {
    pub fn from_counts(counts: impl IntoIterator<Item = u64>) -> FreqOfFreq {
        let mut n_r = BTreeMap::new();
        for r in counts.into_iter().filter(|&r| r > 0) {
            *n_r.entry(r).or_default() += 1;
        }
        FreqOfFreq { n_r }
    }

    pub fn from_table(pairs: &[(u64, u64)]) -> FreqOfFreq {
        FreqOfFreq { n_r: pairs.iter().copied().filter(|&(r, n)| r > 0 && n > 0).collect() }
    }

    pub fn n(&self, r: u64) -> u64 {
        self.n_r.get(&r).copied().unwrap_or(0)
    }

    /// Σ r·N_r, the number of observed n-gram tokens.
    pub fn total(&self) -> u64 {
        self.n_r.iter().map(|(r, n)| r * n).sum()
    }

    pub fn rs(&self) -> impl Iterator<Item = u64> + '_ {
        self.n_r.keys().copied()
    }

    /// Turing estimate r* = (r+1)·N_{r+1}/N_r, before any smoothing.
    pub fn raw_adjusted(&self, r: u64) -> Option<f64> {
        let nr = self.n(r);
        (nr > 0).then(|| (r + 1) as f64 * self.n(r + 1) as f64 / nr as f64)
    }

    /// Probability mass the Turing estimate leaves for unseen events: N_1/N.
    pub fn unseen_mass(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.n(1) as f64 / total as f64
        }
    }

    /// Simple Good-Turing; `None` when the log-log regression has fewer
    /// than two points to fit.
    pub fn simple_good_turing(&self) -> Option<SimpleGoodTuring> {
        let rs: Vec<u64> = self.rs().collect();
        if rs.len() < 2 {
            return None;
        }
        let mut points = Vec::with_capacity(rs.len());
        for (j, &r) in rs.iter().enumerate() {
            let q = if j == 0 { 0 } else { rs[j - 1] } as f64;
            let t = if j + 1 < rs.len() { rs[j + 1] as f64 } else { 2.0 * r as f64 - q };
            let z = self.n(r) as f64 / (0.5 * (t - q));
            points.push(((r as f64).ln(), z.ln()));
        }
        let k = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
        let my = points.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        if !slope.is_finite() || !intercept.is_finite() {
            return None;
        }
        let mut adjusted = BTreeMap::new();
        let mut use_turing = true;
        let mut floor = 0.0f64;
        for &r in &rs {
            let rf = r as f64;
            let y = (rf + 1.0) * (1.0 + 1.0 / rf).powf(slope);
            let next = self.n(r + 1) as f64;
            let nr = self.n(r) as f64;
            let mut estimate = y;
            if use_turing {
                if next == 0.0 {
                    use_turing = false;
                } else {
                    let x = (rf + 1.0) * next / nr;
                    let sd = ((rf + 1.0).powi(2) * next / (nr * nr) * (1.0 + next / nr)).sqrt();
                    if (x - y).abs() > SGT_CONFIDENCE * sd {
                        estimate = x;
                    } else {
                        use_turing = false;
                    }
                }
            }
            // Adjusted counts are kept non-decreasing in r so discounting
            // never reorders two seen events.
            floor = floor.max(estimate);
            adjusted.insert(r, floor);
        }
        Some(SimpleGoodTuring { slope, intercept, adjusted })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimpleGoodTuring {
    pub slope: f64,
    pub intercept: f64,
    adjusted: BTreeMap<u64, f64>,
}

impl SimpleGoodTuring {
    pub fn adjusted(&self, r: u64) -> Option<f64> {
        self.adjusted.get(&r).copied()
    }

    /// Discount ratio r*/r, clamped so every history keeps some mass.
    pub fn discount(&self, r: u64) -> f64 {
        let d = self.adjusted(r).map_or(1.0, |a| a / r as f64);
        d.clamp(MIN_DISCOUNT, MAX_DISCOUNT)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothing {
    GoodTuring,
    /// No singletons: add-ε over the whole vocabulary, no backoff.
    AddEpsilon,
    /// Degenerate regression: raw relative frequencies, ε held out for backoff.
    HeldOut,
}

impl Smoothing {
    fn as_str(self) -> &'static str {
        match self {
            Smoothing::GoodTuring => "gt",
            Smoothing::AddEpsilon => "addeps",
            Smoothing::HeldOut => "heldout",
        }
    }

    fn parse(s: &str) -> Option<Smoothing> {
        match s {
            "gt" => Some(Smoothing::GoodTuring),
            "addeps" => Some(Smoothing::AddEpsilon),
            "heldout" => Some(Smoothing::HeldOut),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct HistoryEntry {
    seen: HashMap<TokenId, f64>,
    /// Backoff weight (log10 α), or the flat unseen probability under add-ε.
    rest: f64,
}

#[derive(Clone, Debug, PartialEq)]
struct Level {
    smoothing: Smoothing,
    histories: HashMap<Vec<TokenId>, HistoryEntry>,
}

#[derive(Clone, Debug)]
pub struct NGramModel {
    order: usize,
    vocab: Vocab,
    classing: Classing,
    unigram_smoothing: Smoothing,
    unigram: Vec<f64>,
    /// Orders 2..=order.
    levels: Vec<Level>,
    flags: Vec<String>,
}

fn pick_smoothing(fof: &FreqOfFreq, n: usize, flags: &mut Vec<String>) -> (Smoothing, Option<SimpleGoodTuring>) {
    if fof.n(1) == 0 {
        flags.push(format!("order{n}:no-singletons:add-epsilon"));
        return (Smoothing::AddEpsilon, None);
    }
    match fof.simple_good_turing() {
        Some(sgt) => (Smoothing::GoodTuring, Some(sgt)),
        None => {
            flags.push(format!("order{n}:degenerate-regression:held-out"));
            (Smoothing::HeldOut, None)
        }
    }
}

/// Builds a smoothed backoff model from counts.
pub fn good_turing(c: &CountTable) -> NGramModel {
    let vocab = c.vocab.clone();
    let v_size = vocab.predictable().count() as f64;
    let mut flags = Vec::new();

    let uni_counts = &c.counts[0];
    let fof = c.freq_of_freq(1);
    let (unigram_smoothing, sgt) = pick_smoothing(&fof, 1, &mut flags);
    let n = c.total as f64;
    let count_of = |id: TokenId| uni_counts.get(&vec![id]).copied().unwrap_or(0);
    let unseen: Vec<TokenId> = vocab.predictable().filter(|&id| count_of(id) == 0).collect();
    let mut unigram = vec![f64::NEG_INFINITY; vocab.len()];
    match unigram_smoothing {
        Smoothing::AddEpsilon => {
            for id in vocab.predictable() {
                unigram[id as usize] = ((count_of(id) as f64 + ADD_EPSILON) / (n + ADD_EPSILON * v_size)).log10();
            }
        }
        Smoothing::HeldOut => {
            for id in vocab.predictable() {
                let r = count_of(id) as f64;
                let p = if r > 0.0 { (1.0 - HELD_OUT_MASS) * r / n } else { HELD_OUT_MASS / unseen.len() as f64 };
                unigram[id as usize] = p.log10();
            }
        }
        Smoothing::GoodTuring => {
            let sgt = sgt.expect("good-turing smoothing carries its estimate");
            let p0 = fof.unseen_mass();
            let norm: f64 = fof.rs().map(|r| fof.n(r) as f64 * sgt.adjusted(r).unwrap_or(0.0)).sum();
            for id in vocab.predictable() {
                let r = count_of(id);
                let p =
                    if r > 0 { (1.0 - p0) * sgt.adjusted(r).unwrap_or(0.0) / norm } else { p0 / unseen.len() as f64 };
                unigram[id as usize] = p.log10();
            }
        }
    }

    let mut model = NGramModel {
        order: c.order,
        vocab,
        classing: c.classing.clone(),
        unigram_smoothing,
        unigram,
        levels: Vec::new(),
        flags: Vec::new(),
    };

    for order in 2..=c.order {
        let fof = c.freq_of_freq(order);
        let (smoothing, sgt) = pick_smoothing(&fof, order, &mut flags);
        let mut grouped: HashMap<Vec<TokenId>, Vec<(TokenId, u64)>> = HashMap::new();
        for (gram, &cnt) in &c.counts[order - 1] {
            let (w, h) = gram.split_last().expect("n-grams are non-empty");
            grouped.entry(h.to_vec()).or_default().push((*w, cnt));
        }
        let mut histories = HashMap::with_capacity(grouped.len());
        for (h, mut events) in grouped {
            // Fixed summation order keeps saved models byte-identical across runs.
            events.sort_unstable();
            let ch: f64 = events.iter().map(|&(_, c)| c as f64).sum();
            let mut entry = HistoryEntry::default();
            match smoothing {
                Smoothing::AddEpsilon => {
                    let denom = ch + ADD_EPSILON * v_size;
                    for &(w, cnt) in &events {
                        entry.seen.insert(w, ((cnt as f64 + ADD_EPSILON) / denom).log10());
                    }
                    entry.rest = (ADD_EPSILON / denom).log10();
                }
                Smoothing::HeldOut | Smoothing::GoodTuring => {
                    let mut kept = 0.0;
                    let mut lower_seen = 0.0;
                    for &(w, cnt) in &events {
                        let d = match (&sgt, smoothing) {
                            (Some(s), Smoothing::GoodTuring) => s.discount(cnt),
                            _ => 1.0 - HELD_OUT_MASS,
                        };
                        let p = d * cnt as f64 / ch;
                        kept += p;
                        lower_seen += 10f64.powf(model.level_logprob(order - 1, &h[1..], w));
                        entry.seen.insert(w, p.log10());
                    }
                    let alpha = (1.0 - kept) / (1.0 - lower_seen);
                    entry.rest = alpha.log10();
                }
            }
            histories.insert(h, entry);
        }
        model.levels.push(Level { smoothing, histories });
    }
    model.flags = flags;
    model
}

/// An n-gram line as read back: ids, log10 probability, backoff weight.
type SavedGram = (Vec<TokenId>, f64, Option<f64>);

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    /// Warnings recorded while smoothing (fallback modes per order).
    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    pub fn uses_classes(&self) -> bool {
        matches!(self.classing, Classing::Words(_))
    }

    /// Maps a surface token to the id the model conditions on.
    pub fn token_id(&self, t: &str) -> TokenId {
        self.vocab.id(&self.classing.classify(t)).unwrap_or(UNK_ID)
    }

    /// Class the model sees for a surface token.
    pub fn classify(&self, t: &str) -> String {
        self.classing.classify(t)
    }

    fn level_logprob(&self, n: usize, hist: &[TokenId], w: TokenId) -> f64 {
        if n <= 1 {
            return self.unigram.get(w as usize).copied().unwrap_or(self.unigram[UNK_ID as usize]);
        }
        let h = &hist[hist.len() + 1 - n..];
        let level = &self.levels[n - 2];
        match level.histories.get(h) {
            None => self.level_logprob(n - 1, h, w),
            Some(e) => match e.seen.get(&w) {
                Some(&p) => p,
                None if level.smoothing == Smoothing::AddEpsilon => e.rest,
                None => e.rest + self.level_logprob(n - 1, h, w),
            },
        }
    }

    /// log10 p(w | history) over token ids. Histories shorter than
    /// `order - 1` are left-padded with `<s>`.
    pub fn logprob_ids(&self, w: TokenId, history: &[TokenId]) -> f64 {
        let need = self.order - 1;
        if history.len() >= need {
            self.level_logprob(self.order, &history[history.len() - need..], w)
        } else {
            let mut padded = vec![BOS_ID; need - history.len()];
            padded.extend_from_slice(history);
            self.level_logprob(self.order, &padded, w)
        }
    }

    pub fn logprob(&self, w: &str, history: &[&str]) -> f64 {
        let h: Vec<TokenId> = history.iter().map(|t| self.token_id(t)).collect();
        self.logprob_ids(self.token_id(w), &h)
    }

    /// Sum of log10 probabilities over `<s>… words </s>`.
    pub fn sentence_logprob<S: AsRef<str>>(&self, words: &[S]) -> f64 {
        let ids: Vec<TokenId> = words.iter().map(|w| self.token_id(w.as_ref())).collect();
        self.sentence_logprob_ids(&ids)
    }

    pub fn sentence_logprob_ids(&self, ids: &[TokenId]) -> f64 {
        let mut ctx = vec![BOS_ID; self.order - 1];
        let mut total = 0.0;
        for &w in ids.iter().chain(std::iter::once(&EOS_ID)) {
            total += self.logprob_ids(w, &ctx);
            if !ctx.is_empty() {
                ctx.remove(0);
                ctx.push(w);
            }
        }
        total
    }

    /// Serializes to the `NGRAM v1` text format.
    pub fn to_text(&self) -> Result<String, NGramError> {
        let has_words = (RESERVED.len() as TokenId..self.vocab.len() as TokenId).next().is_some();
        if !has_words {
            return Err(NGramError::EmptyModel);
        }
        let mut out = String::new();
        let w = |ids: &[TokenId]| ids.iter().map(|&i| self.vocab.word(i)).collect::<Vec<_>>().join(" ");
        writeln!(out, "NGRAM v1 order={} vocab={}", self.order, self.vocab.len()).unwrap();
        match &self.classing {
            Classing::Off => writeln!(out, "classes off").unwrap(),
            Classing::Words(known) => {
                writeln!(out, "classes on {}", known.len()).unwrap();
                for k in known {
                    writeln!(out, "{k}").unwrap();
                }
            }
        }
        for f in &self.flags {
            writeln!(out, "flag {f}").unwrap();
        }
        // Backoff fields attach to an n-gram viewed as a history one order up.
        let backoff_of = |gram: &[TokenId]| -> Option<f64> {
            self.levels.get(gram.len().wrapping_sub(1)).and_then(|l| l.histories.get(gram)).map(|e| e.rest)
        };
        writeln!(out, "\\1-grams: {}", self.unigram_smoothing.as_str()).unwrap();
        let mut ids: Vec<TokenId> = (0..self.vocab.len() as TokenId).collect();
        ids.sort_by(|a, b| self.vocab.word(*a).cmp(self.vocab.word(*b)));
        for id in ids {
            let gram = [id];
            write!(out, "{} {}", self.unigram[id as usize], w(&gram)).unwrap();
            if let Some(b) = backoff_of(&gram) {
                write!(out, " {b}").unwrap();
            }
            out.push('\n');
        }
        for (li, level) in self.levels.iter().enumerate() {
            let n = li + 2;
            writeln!(out, "\\{n}-grams: {}", level.smoothing.as_str()).unwrap();
            let mut lines: BTreeMap<String, (f64, Option<f64>)> = BTreeMap::new();
            for (h, e) in &level.histories {
                for (&wid, &p) in &e.seen {
                    let mut gram = h.clone();
                    gram.push(wid);
                    lines.insert(w(&gram), (p, backoff_of(&gram)));
                }
            }
            // Histories one order up that are not themselves seen n-grams.
            if let Some(up) = self.levels.get(li + 1) {
                for (h, e) in &up.histories {
                    lines.entry(w(h)).or_insert((f64::NEG_INFINITY, Some(e.rest)));
                }
            }
            for (toks, (p, b)) in lines {
                match b {
                    Some(b) => writeln!(out, "{p} {toks} {b}").unwrap(),
                    None => writeln!(out, "{p} {toks}").unwrap(),
                }
            }
        }
        out.push_str("\\end\n");
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<NGramModel, NGramError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        let fail = |line: usize, msg: String| NGramError::Format { line, msg };
        let (_, header) = lines.next().ok_or(NGramError::Truncated)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "NGRAM" || fields[1] != "v1" {
            return Err(NGramError::Version(header.to_string()));
        }
        let order: usize = fields[2]
            .strip_prefix("order=")
            .and_then(|s| s.parse().ok())
            .filter(|o| (1..=MAX_ORDER).contains(o))
            .ok_or_else(|| fail(1, format!("bad order field {:?}", fields[2])))?;
        let vocab_size: usize = fields[3]
            .strip_prefix("vocab=")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| fail(1, format!("bad vocab field {:?}", fields[3])))?;

        let (ln, classes) = lines.next().ok_or(NGramError::Truncated)?;
        let classing = match classes.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["classes", "off"] => Classing::Off,
            ["classes", "on", k] => {
                let k: usize = k.parse().map_err(|_| fail(ln, "bad known-word count".into()))?;
                let mut known = BTreeSet::new();
                for _ in 0..k {
                    let (_, word) = lines.next().ok_or(NGramError::Truncated)?;
                    known.insert(word.to_string());
                }
                Classing::Words(known)
            }
            _ => return Err(fail(ln, format!("expected classes line, got {classes:?}"))),
        };

        let mut flags = Vec::new();
        let mut vocab = Vocab::new();
        let mut unigram: Vec<(TokenId, f64)> = Vec::new();
        let mut unigram_smoothing = None;
        let mut grams: Vec<Vec<SavedGram>> = vec![Vec::new(); order + 1];
        let mut smoothing: Vec<Option<Smoothing>> = vec![None; order + 1];
        let mut section = 0usize;
        let mut ended = false;
        for (ln, line) in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(f) = line.strip_prefix("flag ") {
                flags.push(f.to_string());
                continue;
            }
            if line == "\\end" {
                ended = true;
                break;
            }
            if let Some(rest) = line.strip_prefix('\\') {
                let (n, mode) = rest.split_once("-grams: ").ok_or_else(|| fail(ln, format!("bad section {line:?}")))?;
                let n: usize = n.parse().map_err(|_| fail(ln, format!("bad section {line:?}")))?;
                let mode = Smoothing::parse(mode).ok_or_else(|| fail(ln, format!("bad smoothing {mode:?}")))?;
                if n != section + 1 || n > order {
                    return Err(fail(ln, format!("unexpected section {n}")));
                }
                section = n;
                smoothing[n] = Some(mode);
                if n == 1 {
                    unigram_smoothing = Some(mode);
                }
                continue;
            }
            if section == 0 {
                return Err(fail(ln, "entry outside a section".into()));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != section + 1 && parts.len() != section + 2 {
                return Err(fail(ln, format!("expected {} tokens", section)));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| fail(ln, format!("bad number {s:?}")));
            let p = num(parts[0])?;
            let gram: Vec<TokenId> = parts[1..=section].iter().map(|t| vocab.intern(t)).collect();
            let b = parts.get(section + 1).map(|s| num(s)).transpose()?;
            if section == 1 {
                unigram.push((gram[0], p));
            }
            grams[section].push((gram, p, b));
        }
        if !ended || section != order {
            return Err(NGramError::Truncated);
        }
        if vocab.len() != vocab_size {
            return Err(fail(1, format!("vocab={vocab_size} but {} tokens listed", vocab.len())));
        }
        let mut uni = vec![f64::NEG_INFINITY; vocab.len()];
        for (id, p) in unigram {
            uni[id as usize] = p;
        }
        let mut levels: Vec<Level> = (2..=order)
            .map(|n| Level { smoothing: smoothing[n].expect("section seen"), histories: HashMap::new() })
            .collect();
        for n in 1..=order {
            for (gram, p, b) in &grams[n] {
                if n >= 2 && p.is_finite() {
                    let (w, h) = gram.split_last().expect("non-empty");
                    levels[n - 2].histories.entry(h.to_vec()).or_default().seen.insert(*w, *p);
                }
                if let Some(b) = b {
                    let up = levels.get_mut(n - 1).ok_or_else(|| fail(0, "backoff above model order".into()))?;
                    up.histories.entry(gram.clone()).or_default().rest = *b;
                }
            }
        }
        Ok(NGramModel {
            order,
            vocab,
            classing,
            unigram_smoothing: unigram_smoothing.ok_or(NGramError::Truncated)?,
            unigram: uni,
            levels,
            flags,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NGramError> {
        std::fs::write(path, self.to_text()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<NGramModel, NGramError> {
        NGramModel::from_text(&std::fs::read_to_string(path)?)
    }
}
