//! N-best path extraction from a word lattice under an n-gram model.
//!
//! Hypotheses are grouped per state by model context (the last
//! `order - 1` token ids). Two hypotheses in the same group see identical
//! futures, so each group only needs its best `n` distinct spellings to
//! stay exact. An optional beam additionally caps the number of live
//! hypotheses per topological depth.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lattice::{append_spelling, ClassMark, Lattice, LatticeError, Token, Violation, WordPath};
use crate::ngram::{NGramModel, TokenId, BOS_ID, EOS_ID, NAME, NUM};

/// Scores closer than this to a group's n-th best are kept, so float
/// reassociation between prefix and full-path sums cannot drop a winner.
const KEEP_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("n must be at least 1")]
    ZeroN,
    #[error("beam width must be at least 1")]
    ZeroBeam,
    #[error(transparent)]
    Invalid(#[from] Violation),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Linear combination of model log-probability and lattice weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scoring {
    pub lm_scale: f64,
    pub weight_scale: f64,
}

impl Default for Scoring {
    fn default() -> Scoring {
        Scoring { lm_scale: 1.0, weight_scale: 1.0 }
    }
}

impl Scoring {
    fn combine(&self, lm: f64, weight: f64) -> f64 {
        self.lm_scale * lm + self.weight_scale * weight
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NBestOptions {
    pub n: usize,
    pub beam: Option<usize>,
    pub scoring: Scoring,
}

impl NBestOptions {
    pub fn exact(n: usize) -> NBestOptions {
        NBestOptions { n, beam: None, scoring: Scoring::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExtractionResult {
    /// Distinct spellings with total log10 scores, best first.
    pub ranked: Vec<(String, f64)>,
}

impl ExtractionResult {
    pub fn top(&self) -> Option<&(String, f64)> {
        self.ranked.first()
    }

    fn from_scored(scored: impl IntoIterator<Item = (String, f64)>, n: usize) -> ExtractionResult {
        let mut best: HashMap<String, f64> = HashMap::new();
        for (s, score) in scored {
            let slot = best.entry(s).or_insert(f64::NEG_INFINITY);
            if score > *slot {
                *slot = score;
            }
        }
        let mut ranked: Vec<(String, f64)> = best.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(n);
        ExtractionResult { ranked }
    }
}

/// Appends the model ids a lattice token contributes. Fragments emit one
/// id per character with spaces mapped to `_`; class tokens emit the class.
pub fn push_model_ids(tok: &Token, m: &NGramModel, out: &mut Vec<TokenId>) {
    match tok {
        Token::Empty => {}
        Token::Word(w) | Token::Morph(w) => out.push(m.token_id(w)),
        Token::Class { mark, .. } => out.push(m.token_id(match mark {
            ClassMark::Name => NAME,
            ClassMark::Num => NUM,
        })),
        Token::Fragment(s) => {
            let mut buf = [0u8; 4];
            for c in s.chars() {
                let c = if c == ' ' { '_' } else { c };
                out.push(m.token_id(c.encode_utf8(&mut buf)));
            }
        }
    }
}

pub fn model_ids<'a>(tokens: impl IntoIterator<Item = &'a Token>, m: &NGramModel) -> Vec<TokenId> {
    let mut out = Vec::new();
    for t in tokens {
        push_model_ids(t, m, &mut out);
    }
    out
}

/// Total score of one path, computed the same way as the search does.
pub fn score_path(path: &WordPath, m: &NGramModel, scoring: &Scoring) -> f64 {
    scoring.combine(m.sentence_logprob_ids(&model_ids(&path.tokens, m)), path.score)
}

#[derive(Clone, Debug)]
struct Hyp {
    lm: f64,
    weight: f64,
    total: f64,
    spelling: String,
}

fn rank(a: &Hyp, b: &Hyp) -> Ordering {
    b.total.total_cmp(&a.total).then_with(|| a.spelling.cmp(&b.spelling))
}

/// Keeps the best distinct spellings of one (state, context) group.
fn prune_group(hyps: &mut Vec<Hyp>, n: usize) {
    hyps.sort_by(rank);
    let mut seen = HashSet::new();
    hyps.retain(|h| seen.insert(h.spelling.clone()));
    if hyps.len() > n {
        let cutoff = hyps[n - 1].total - KEEP_SLACK;
        hyps.retain(|h| h.total >= cutoff);
    }
}

type Groups = HashMap<Vec<TokenId>, Vec<Hyp>>;

pub fn nbest(l: &Lattice, m: &NGramModel, n: usize, beam: Option<usize>) -> Result<ExtractionResult, ExtractError> {
    nbest_with(l, m, &NBestOptions { n, beam, scoring: Scoring::default() })
}

pub fn nbest_with(l: &Lattice, m: &NGramModel, opts: &NBestOptions) -> Result<ExtractionResult, ExtractError> {
    if opts.n == 0 {
        return Err(ExtractError::ZeroN);
    }
    if opts.beam == Some(0) {
        return Err(ExtractError::ZeroBeam);
    }
    let order = l.topological_order()?;
    let transitions = l.transitions();
    let index = |id| l.state_index(id).expect("validated lattice");

    let mut depth = vec![0usize; l.num_states()];
    for &s in &order {
        for &t in l.outgoing(s) {
            let to = index(transitions[t].to);
            depth[to] = depth[to].max(depth[s] + 1);
        }
    }
    let mut levels: Vec<Vec<usize>> = vec![Vec::new(); depth.iter().max().map_or(1, |d| d + 1)];
    for &s in &order {
        levels[depth[s]].push(s);
    }

    let ctx_len = m.order() - 1;
    let fin = index(l.final_state());
    let mut groups: Vec<Groups> = vec![HashMap::new(); l.num_states()];
    groups[index(l.start())].insert(
        vec![BOS_ID; ctx_len],
        vec![Hyp { lm: 0.0, weight: 0.0, total: opts.scoring.combine(0.0, 0.0), spelling: String::new() }],
    );

    let mut emitted = Vec::new();
    for level in &levels {
        for &s in level {
            for hyps in groups[s].values_mut() {
                prune_group(hyps, opts.n);
            }
        }
        if let Some(width) = opts.beam {
            apply_beam(&mut groups, level, width);
        }
        for &s in level {
            if s == fin {
                continue;
            }
            let current = std::mem::take(&mut groups[s]);
            for (ctx, hyps) in &current {
                for &t in l.outgoing(s) {
                    let tr = &transitions[t];
                    emitted.clear();
                    push_model_ids(&tr.token, m, &mut emitted);
                    let mut next_ctx = ctx.clone();
                    let mut steps = Vec::with_capacity(emitted.len());
                    for &w in &emitted {
                        steps.push(m.logprob_ids(w, &next_ctx));
                        if ctx_len > 0 {
                            next_ctx.remove(0);
                            next_ctx.push(w);
                        }
                    }
                    let bucket = groups[index(tr.to)].entry(next_ctx).or_default();
                    for h in hyps {
                        let lm = steps.iter().fold(h.lm, |acc, &p| acc + p);
                        let weight = h.weight + tr.weight;
                        let mut spelling = h.spelling.clone();
                        append_spelling(&mut spelling, &tr.token);
                        bucket.push(Hyp { lm, weight, total: opts.scoring.combine(lm, weight), spelling });
                    }
                }
            }
        }
    }

    let finished = std::mem::take(&mut groups[fin]);
    let scored = finished.into_iter().flat_map(|(ctx, hyps)| {
        let eos = m.logprob_ids(EOS_ID, &ctx);
        let scoring = opts.scoring;
        hyps.into_iter().map(move |h| (h.spelling, scoring.combine(h.lm + eos, h.weight)))
    });
    Ok(ExtractionResult::from_scored(scored, opts.n))
}

fn apply_beam(groups: &mut [Groups], level: &[usize], width: usize) {
    let mut live: Vec<(usize, Vec<TokenId>, Hyp)> = Vec::new();
    for &s in level {
        for (ctx, hyps) in groups[s].drain() {
            live.extend(hyps.into_iter().map(|h| (s, ctx.clone(), h)));
        }
    }
    live.sort_by(|a, b| rank(&a.2, &b.2).then_with(|| a.0.cmp(&b.0)).then_with(|| a.1.cmp(&b.1)));
    live.truncate(width);
    for (s, ctx, h) in live {
        groups[s].entry(ctx).or_default().push(h);
    }
}

/// Exhaustive reference: enumerate every path, score it, collapse equal
/// spellings to their best score, and rank.
pub fn exhaustive(
    l: &Lattice,
    m: &NGramModel,
    n: usize,
    scoring: &Scoring,
    limit: u128,
) -> Result<ExtractionResult, ExtractError> {
    if n == 0 {
        return Err(ExtractError::ZeroN);
    }
    let paths = l.enumerate_paths(limit)?;
    let scored = paths.iter().map(|p| (p.spelling(), score_path(p, m, scoring)));
    Ok(ExtractionResult::from_scored(scored, n))
}

/// Uniform choice among outgoing transitions at every state.
pub fn random_path(l: &Lattice, seed: u64) -> Result<WordPath, ExtractError> {
    l.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fin = l.state_index(l.final_state()).expect("final state exists");
    let mut at = l.state_index(l.start()).expect("start state exists");
    let mut path = WordPath { tokens: Vec::new(), score: 0.0 };
    while at != fin {
        let out = l.outgoing(at);
        let tr = &l.transitions()[out[rng.gen_range(0..out.len())]];
        path.tokens.push(tr.token.clone());
        path.score += tr.weight;
        at = l.state_index(tr.to).expect("validated lattice");
    }
    Ok(path)
}
