//! Word lattices: acyclic state-transition networks whose start-to-final
//! paths spell alternative token sequences.
//!
//! A [`Lattice`] is the exchange structure between the glosser, the
//! transliterator and the extractor. It is built unvalidated; every
//! operation that depends on acyclicity (counting, enumeration, search)
//! validates first and refuses invalid input.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

pub type StateId = u32;

/// Morphological marker tags a [`Token::Morph`] may carry.
pub const MORPH_TAGS: &[&str] = &["+plural"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassMark {
    Name,
    Num,
}

impl ClassMark {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassMark::Name => "NAME",
            ClassMark::Num => "NUM",
        }
    }

    pub fn parse(s: &str) -> Option<ClassMark> {
        match s {
            "NAME" => Some(ClassMark::Name),
            "NUM" => Some(ClassMark::Num),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Word(String),
    /// The `*empty*` alternant; elided when a path is spelled.
    Empty,
    Morph(String),
    /// A class-marked word. Scoring sees the class, spelling shows the surface.
    Class {
        mark: ClassMark,
        surface: String,
    },
    /// A letter string; may be empty (deletion) or a single space (word gap).
    Fragment(String),
}

impl Token {
    pub fn word(s: impl Into<String>) -> Token {
        Token::Word(s.into())
    }

    pub fn fragment(s: impl Into<String>) -> Token {
        Token::Fragment(s.into())
    }

    /// Checks the per-kind invariants.
    pub fn check(&self) -> Result<(), String> {
        match self {
            Token::Word(w) | Token::Class { surface: w, .. } => {
                if w.is_empty() {
                    Err("empty word".into())
                } else if w.chars().any(char::is_whitespace) {
                    Err(format!("word {w:?} contains whitespace"))
                } else {
                    Ok(())
                }
            }
            Token::Morph(tag) => {
                if MORPH_TAGS.contains(&tag.as_str()) {
                    Ok(())
                } else {
                    Err(format!("unregistered morph tag {tag:?}"))
                }
            }
            Token::Empty | Token::Fragment(_) => Ok(()),
        }
    }

    /// Parses the text-format encoding produced by `Display`.
    pub fn parse_text(s: &str) -> Result<Token, String> {
        if s == "*empty*" {
            return Ok(Token::Empty);
        }
        if s.starts_with('+') {
            return Ok(Token::Morph(s.to_string()));
        }
        if let Some(rest) = s.strip_prefix('~') {
            return Ok(Token::Fragment(unquote(rest)?));
        }
        if let Some(rest) = s.strip_prefix('@') {
            let (mark, surface) = rest.split_once(':').ok_or_else(|| format!("class token {s:?} lacks ':'"))?;
            let mark = ClassMark::parse(mark).ok_or_else(|| format!("unknown class {mark:?}"))?;
            let surface = if surface.starts_with('"') { unquote(surface)? } else { surface.to_string() };
            return Ok(Token::Class { mark, surface });
        }
        if s.starts_with('"') {
            return Ok(Token::Word(unquote(s)?));
        }
        if s.is_empty() {
            return Err("missing token".into());
        }
        Ok(Token::Word(s.to_string()))
    }
}

fn needs_quoting(w: &str) -> bool {
    w.is_empty()
        || w.starts_with(['*', '+', '@', '~', '"'])
        || w.chars().any(|c| c.is_whitespace() || c == '"' || c == '\\')
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn unquote(s: &str) -> Result<String, String> {
    let inner = s
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .filter(|_| s.len() >= 2)
        .ok_or_else(|| format!("bad quoted string {s:?}"))?;
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => out.push(chars.next().ok_or("dangling escape")?),
            '"' => return Err(format!("unescaped quote in {s:?}")),
            c => out.push(c),
        }
    }
    Ok(out)
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Empty => f.write_str("*empty*"),
            Token::Morph(tag) => f.write_str(tag),
            Token::Fragment(s) => write!(f, "~{}", quote(s)),
            Token::Class { mark, surface } => {
                if needs_quoting(surface) {
                    write!(f, "@{}:{}", mark.as_str(), quote(surface))
                } else {
                    write!(f, "@{}:{}", mark.as_str(), surface)
                }
            }
            Token::Word(w) if needs_quoting(w) => f.write_str(&quote(w)),
            Token::Word(w) => f.write_str(w),
        }
    }
}

/// Appends the printed form of `tok` to a spelling under construction.
///
/// Words are space-separated, fragments are glued, `*empty*` vanishes.
pub fn append_spelling(out: &mut String, tok: &Token) {
    match tok {
        Token::Empty => {}
        Token::Fragment(s) => out.push_str(s),
        Token::Word(w) | Token::Morph(w) | Token::Class { surface: w, .. } => {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(w);
        }
    }
}

pub fn spell<'a>(tokens: impl IntoIterator<Item = &'a Token>) -> String {
    let mut out = String::new();
    for t in tokens {
        append_spelling(&mut out, t);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub from: StateId,
    pub to: StateId,
    pub token: Token,
    /// log10 score; 0 for unweighted lattices.
    pub weight: f64,
}

impl Transition {
    pub fn new(from: StateId, to: StateId, token: Token) -> Transition {
        Transition { from, to, token, weight: 0.0 }
    }

    pub fn weighted(from: StateId, to: StateId, token: Token, weight: f64) -> Transition {
        Transition { from, to, token, weight }
    }
}

/// First violated lattice invariant.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("cycle through states {0:?}")]
    Cycle(Vec<StateId>),
    #[error("unreachable state {0}")]
    Unreachable(StateId),
    #[error("dead-end state {0} cannot reach the final state")]
    DeadEnd(StateId),
    #[error("invalid token on transition {index}: {reason}")]
    Token { index: usize, reason: String },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::Cycle(_) => "cycle",
            Violation::Unreachable(_) => "unreachable",
            Violation::DeadEnd(_) => "dead-end",
            Violation::Token { .. } => "token",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LatticeError {
    #[error("duplicate state id {0}")]
    DuplicateState(StateId),
    #[error("unknown state id {0}")]
    UnknownState(StateId),
    #[error("invalid lattice: {0}")]
    Invalid(#[from] Violation),
    #[error("lattice has {count} paths, more than the limit of {limit}")]
    TooManyPaths { count: u128, limit: u128 },
    #[error("lattice format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordPath {
    pub tokens: Vec<Token>,
    pub score: f64,
}

impl WordPath {
    pub fn spelling(&self) -> String {
        spell(&self.tokens)
    }
}

#[derive(Clone, Debug)]
pub struct Lattice {
    states: Vec<StateId>,
    index: HashMap<StateId, usize>,
    start: StateId,
    final_state: StateId,
    transitions: Vec<Transition>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
}

impl Lattice {
    /// Assembles a lattice without validating it.
    pub fn build(
        states: impl IntoIterator<Item = StateId>,
        start: StateId,
        final_state: StateId,
        transitions: Vec<Transition>,
    ) -> Result<Lattice, LatticeError> {
        let states: Vec<StateId> = states.into_iter().collect();
        let mut index = HashMap::with_capacity(states.len());
        for (i, &s) in states.iter().enumerate() {
            if index.insert(s, i).is_some() {
                return Err(LatticeError::DuplicateState(s));
            }
        }
        for id in [start, final_state] {
            if !index.contains_key(&id) {
                return Err(LatticeError::UnknownState(id));
            }
        }
        let mut outgoing = vec![Vec::new(); states.len()];
        let mut incoming = vec![Vec::new(); states.len()];
        for (t, tr) in transitions.iter().enumerate() {
            let from = *index.get(&tr.from).ok_or(LatticeError::UnknownState(tr.from))?;
            let to = *index.get(&tr.to).ok_or(LatticeError::UnknownState(tr.to))?;
            outgoing[from].push(t);
            incoming[to].push(t);
        }
        Ok(Lattice { states, index, start, final_state, transitions, outgoing, incoming })
    }

    /// Like [`Lattice::build`], but accepts several final states and joins
    /// them with `*empty*` transitions into a fresh sink.
    pub fn build_with_finals(
        states: impl IntoIterator<Item = StateId>,
        start: StateId,
        finals: &[StateId],
        mut transitions: Vec<Transition>,
    ) -> Result<Lattice, LatticeError> {
        let mut states: Vec<StateId> = states.into_iter().collect();
        match finals {
            [] => Err(LatticeError::UnknownState(start)),
            [only] => Lattice::build(states, start, *only, transitions),
            many => {
                let sink = states.iter().copied().max().map_or(0, |m| m + 1);
                states.push(sink);
                for &f in many {
                    transitions.push(Transition::new(f, sink, Token::Empty));
                }
                Lattice::build(states, start, sink, transitions)
            }
        }
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn final_state(&self) -> StateId {
        self.final_state
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Dense index of a state id.
    pub fn state_index(&self, id: StateId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Transition indices leaving the state at dense index `i`.
    pub fn outgoing(&self, i: usize) -> &[usize] {
        &self.outgoing[i]
    }

    pub fn incoming(&self, i: usize) -> &[usize] {
        &self.incoming[i]
    }

    fn idx(&self, id: StateId) -> usize {
        self.index[&id]
    }

    pub fn validate(&self) -> Result<(), Violation> {
        self.topological_order().map(|_| ())
    }

    /// Validates and returns dense state indices in topological order.
    pub fn topological_order(&self) -> Result<Vec<usize>, Violation> {
        for (index, tr) in self.transitions.iter().enumerate() {
            tr.token.check().map_err(|reason| Violation::Token { index, reason })?;
        }
        let n = self.states.len();
        let mut indegree: Vec<usize> = self.incoming.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for &t in &self.outgoing[i] {
                let j = self.idx(self.transitions[t].to);
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    queue.push_back(j);
                }
            }
        }
        if order.len() < n {
            let mut cyclic: Vec<StateId> = (0..n).filter(|&i| indegree[i] > 0).map(|i| self.states[i]).collect();
            cyclic.sort_unstable();
            return Err(Violation::Cycle(cyclic));
        }
        let forward = self.reach(self.idx(self.start), true);
        if let Some(i) = (0..n).find(|&i| !forward[i]) {
            return Err(Violation::Unreachable(self.states[i]));
        }
        let backward = self.reach(self.idx(self.final_state), false);
        if let Some(i) = (0..n).find(|&i| !backward[i]) {
            return Err(Violation::DeadEnd(self.states[i]));
        }
        Ok(order)
    }

    fn reach(&self, from: usize, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.states.len()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(i) = stack.pop() {
            let edges = if forward { &self.outgoing[i] } else { &self.incoming[i] };
            for &t in edges {
                let tr = &self.transitions[t];
                let j = self.idx(if forward { tr.to } else { tr.from });
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// Drops states (and their transitions) that lie on no start-to-final path.
    pub fn trim(&self) -> Lattice {
        let fwd = self.reach(self.idx(self.start), true);
        let bwd = self.reach(self.idx(self.final_state), false);
        let keep = |id: StateId| {
            let i = self.idx(id);
            fwd[i] && bwd[i]
        };
        let mut states: Vec<StateId> = self.states.iter().copied().filter(|&s| keep(s)).collect();
        for id in [self.start, self.final_state] {
            if !states.contains(&id) {
                states.push(id);
            }
        }
        let transitions = self.transitions.iter().filter(|t| keep(t.from) && keep(t.to)).cloned().collect();
        Lattice::build(states, self.start, self.final_state, transitions).expect("trimming keeps ids consistent")
    }

    /// Number of distinct start-to-final transition sequences, by one
    /// dynamic-programming pass. Saturates at `u128::MAX`.
    pub fn path_count(&self) -> Result<u128, LatticeError> {
        let order = self.topological_order()?;
        let mut count = vec![0u128; self.states.len()];
        count[self.idx(self.start)] = 1;
        for i in order {
            let here = count[i];
            if here == 0 {
                continue;
            }
            for &t in &self.outgoing[i] {
                let j = self.idx(self.transitions[t].to);
                count[j] = count[j].saturating_add(here);
            }
        }
        Ok(count[self.idx(self.final_state)])
    }

    /// Every path, with score = sum of transition weights, sorted by
    /// spelling and then by token count.
    pub fn enumerate_paths(&self, limit: u128) -> Result<Vec<WordPath>, LatticeError> {
        let count = self.path_count()?;
        if count > limit {
            return Err(LatticeError::TooManyPaths { count, limit });
        }
        let mut paths = Vec::with_capacity(count as usize);
        let final_idx = self.idx(self.final_state);
        // (state, next outgoing slot) frames; `trail` holds transition ids.
        let mut stack: Vec<(usize, usize)> = vec![(self.idx(self.start), 0)];
        let mut trail: Vec<usize> = Vec::new();
        while let Some(&(state, slot)) = stack.last() {
            if slot == 0 && state == final_idx {
                let tokens = trail.iter().map(|&t| self.transitions[t].token.clone()).collect();
                let score = trail.iter().fold(0.0, |acc, &t| acc + self.transitions[t].weight);
                paths.push(WordPath { tokens, score });
            }
            if let Some(&t) = self.outgoing[state].get(slot) {
                if let Some(top) = stack.last_mut() {
                    top.1 += 1;
                }
                trail.push(t);
                stack.push((self.idx(self.transitions[t].to), 0));
            } else {
                stack.pop();
                trail.pop();
            }
        }
        let mut keyed: Vec<(String, WordPath)> = paths.into_iter().map(|p| (p.spelling(), p)).collect();
        keyed.sort_by(|(sa, a), (sb, b)| {
            sa.cmp(sb).then(a.tokens.len().cmp(&b.tokens.len())).then(a.tokens.cmp(&b.tokens))
        });
        Ok(keyed.into_iter().map(|(_, p)| p).collect())
    }

    /// Paths of `self` followed by paths of `other`.
    pub fn concat(&self, other: &Lattice) -> Result<Lattice, LatticeError> {
        self.validate()?;
        other.validate()?;
        let mut b = LatticeBuilder::new();
        let (s1, f1) = b.import(self);
        let (s2, f2) = b.import(other);
        b.add(f1, s2, Token::Empty, 0.0);
        Ok(b.finish(s1, f2))
    }

    /// Paths of `self` together with paths of `other`.
    pub fn union(&self, other: &Lattice) -> Result<Lattice, LatticeError> {
        self.validate()?;
        other.validate()?;
        let mut b = LatticeBuilder::new();
        let start = b.new_state();
        let fin = b.new_state();
        for l in [self, other] {
            let (s, f) = b.import(l);
            b.add(start, s, Token::Empty, 0.0);
            b.add(f, fin, Token::Empty, 0.0);
        }
        Ok(b.finish(start, fin))
    }

    /// Serializes in the line-oriented `LATTICE v1` text format. State ids
    /// are renumbered densely in ascending id order.
    pub fn to_text(&self) -> String {
        let mut sorted = self.states.clone();
        sorted.sort_unstable();
        let dense: HashMap<StateId, usize> = sorted.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut out = format!("LATTICE v1 {} {} {}\n", sorted.len(), dense[&self.start], dense[&self.final_state]);
        for t in &self.transitions {
            out.push_str(&format!("{} {} {} {}\n", dense[&t.from], dense[&t.to], t.token, t.weight));
        }
        out
    }
}

/// Reads one or more `LATTICE v1` blocks. `#` lines and blank lines are ignored.
pub fn parse_lattices(text: &str) -> Result<Vec<Lattice>, LatticeError> {
    let fail = |line: usize, msg: String| LatticeError::Format { line, msg };
    let mut out = Vec::new();
    let mut current: Option<(u32, StateId, StateId, Vec<Transition>)> = None;
    let flush =
        |cur: Option<(u32, StateId, StateId, Vec<Transition>)>, out: &mut Vec<Lattice>| -> Result<(), LatticeError> {
            if let Some((n, start, fin, trs)) = cur {
                out.push(Lattice::build(0..n, start, fin, trs)?);
            }
            Ok(())
        };
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("LATTICE") {
            flush(current.take(), &mut out)?;
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "v1" {
                return Err(fail(lineno, format!("bad header {line:?}")));
            }
            let num = |s: &str| s.parse::<u32>().map_err(|e| fail(lineno, format!("{s:?}: {e}")));
            current = Some((num(fields[1])?, num(fields[2])?, num(fields[3])?, Vec::new()));
            continue;
        }
        let Some((_, _, _, trs)) = current.as_mut() else {
            return Err(fail(lineno, "transition before LATTICE header".into()));
        };
        let mut head = line.splitn(3, char::is_whitespace);
        let from = head.next().unwrap_or_default();
        let to = head.next().unwrap_or_default();
        let rest = head.next().unwrap_or_default().trim();
        let (tok, weight) = rest
            .rsplit_once(char::is_whitespace)
            .ok_or_else(|| fail(lineno, "expected `<from> <to> <token> <weight>`".into()))?;
        let from = from.parse().map_err(|e| fail(lineno, format!("from: {e}")))?;
        let to = to.parse().map_err(|e| fail(lineno, format!("to: {e}")))?;
        let weight: f64 = weight.parse().map_err(|e| fail(lineno, format!("weight: {e}")))?;
        let token = Token::parse_text(tok.trim()).map_err(|m| fail(lineno, m))?;
        trs.push(Transition { from, to, token, weight });
    }
    flush(current, &mut out)?;
    Ok(out)
}

/// Allocates fresh state ids while a lattice is assembled.
#[derive(Debug, Default)]
pub struct LatticeBuilder {
    next: StateId,
    transitions: Vec<Transition>,
}

impl LatticeBuilder {
    pub fn new() -> LatticeBuilder {
        LatticeBuilder::default()
    }

    pub fn new_state(&mut self) -> StateId {
        let s = self.next;
        self.next += 1;
        s
    }

    pub fn add(&mut self, from: StateId, to: StateId, token: Token, weight: f64) {
        self.transitions.push(Transition { from, to, token, weight });
    }

    /// Copies `l` in with fresh ids; returns its (start, final).
    pub fn import(&mut self, l: &Lattice) -> (StateId, StateId) {
        let base = self.next;
        self.next += l.states.len() as StateId;
        let map = |id: StateId| base + l.idx(id) as StateId;
        for t in &l.transitions {
            self.add(map(t.from), map(t.to), t.token.clone(), t.weight);
        }
        (map(l.start), map(l.final_state))
    }

    pub fn finish(self, start: StateId, final_state: StateId) -> Lattice {
        Lattice::build(0..self.next, start, final_state, self.transitions).expect("builder allocates every id it uses")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Token {
        Token::word(s)
    }

    fn chain(words: &[&str]) -> Lattice {
        let mut b = LatticeBuilder::new();
        let start = b.new_state();
        let mut at = start;
        for word in words {
            let next = b.new_state();
            b.add(at, next, w(word), 0.0);
            at = next;
        }
        b.finish(start, at)
    }

    fn block(words: &[&str]) -> Lattice {
        let mut b = LatticeBuilder::new();
        let (s, f) = (b.new_state(), b.new_state());
        for word in words {
            b.add(s, f, w(word), 0.0);
        }
        b.finish(s, f)
    }

    #[test]
    fn minimal_lattice_has_one_path() {
        let l = Lattice::build([0, 1], 0, 1, vec![Transition::new(0, 1, w("a"))]).unwrap();
        assert!(l.validate().is_ok());
        assert_eq!(l.path_count().unwrap(), 1);
    }

    #[test]
    fn unknown_and_duplicate_ids_are_rejected() {
        let err = Lattice::build([0, 1], 0, 1, vec![Transition::new(0, 7, w("a"))]).unwrap_err();
        assert_eq!(err, LatticeError::UnknownState(7));
        let err = Lattice::build([0, 0], 0, 0, vec![]).unwrap_err();
        assert_eq!(err, LatticeError::DuplicateState(0));
    }

    #[test]
    fn diamond_has_two_paths() {
        let trs = vec![
            Transition::new(0, 1, w("x")),
            Transition::new(0, 2, w("y")),
            Transition::new(1, 3, w("end")),
            Transition::new(2, 3, w("end")),
        ];
        let l = Lattice::build(0..4, 0, 3, trs).unwrap();
        assert_eq!(l.path_count().unwrap(), 2);
        let spelled: Vec<String> = l.enumerate_paths(10).unwrap().iter().map(WordPath::spelling).collect();
        assert_eq!(spelled, ["x end", "y end"]);
    }

    #[test]
    fn violations_are_named() {
        let l = Lattice::build([0, 1], 0, 1, vec![Transition::new(0, 1, w("a")), Transition::new(1, 1, w("loop"))])
            .unwrap();
        assert_eq!(l.validate().unwrap_err().kind(), "cycle");
        assert!(matches!(l.path_count(), Err(LatticeError::Invalid(Violation::Cycle(_)))));

        let l = Lattice::build([0, 1, 2], 0, 1, vec![Transition::new(0, 1, w("a"))]).unwrap();
        assert_eq!(l.validate().unwrap_err(), Violation::Unreachable(2));

        let l = Lattice::build([0, 1, 2], 0, 1, vec![Transition::new(0, 1, w("a")), Transition::new(0, 2, w("b"))])
            .unwrap();
        assert_eq!(l.validate().unwrap_err(), Violation::DeadEnd(2));

        let l = Lattice::build([0, 1], 0, 1, vec![Transition::new(0, 1, Token::Morph("+dual".into()))]).unwrap();
        assert_eq!(l.validate().unwrap_err().kind(), "token");
    }

    #[test]
    fn product_rule_for_blocks() {
        let l = block(&["a", "b", "c", "d"]).concat(&block(&["e", "f"])).unwrap().concat(&block(&["g", "h"])).unwrap();
        assert_eq!(l.path_count().unwrap(), 16);
        let paths = l.enumerate_paths(16).unwrap();
        assert_eq!(paths.len(), 16);
        let mut spelled: Vec<String> = paths.iter().map(WordPath::spelling).collect();
        spelled.dedup();
        assert_eq!(spelled.len(), 16);
    }

    #[test]
    fn enumeration_refuses_over_limit() {
        let l = block(&["a", "b", "c"]);
        assert_eq!(l.enumerate_paths(2).unwrap_err(), LatticeError::TooManyPaths { count: 3, limit: 2 });
    }

    #[test]
    fn concat_and_union_counts() {
        let a = block(&["a", "b"]);
        let b = block(&["c", "d", "e"]);
        assert_eq!(a.concat(&b).unwrap().path_count().unwrap(), 6);
        let u = a.union(&b).unwrap();
        assert!(u.validate().is_ok());
        assert_eq!(u.path_count().unwrap(), 5);
    }

    #[test]
    fn concat_with_epsilon_keeps_spellings() {
        let a = chain(&["the", "plan"]);
        let eps = Lattice::build([0, 1], 0, 1, vec![Transition::new(0, 1, Token::Empty)]).unwrap();
        let joined = a.concat(&eps).unwrap();
        let spelled: Vec<String> = joined.enumerate_paths(4).unwrap().iter().map(WordPath::spelling).collect();
        assert_eq!(spelled, ["the plan"]);
    }

    #[test]
    fn weights_accumulate_along_paths() {
        let trs = vec![Transition::weighted(0, 1, w("a"), -0.5), Transition::weighted(1, 2, w("b"), -0.25)];
        let l = Lattice::build(0..3, 0, 2, trs).unwrap();
        let paths = l.enumerate_paths(1).unwrap();
        assert_eq!(paths[0].score, -0.75);
    }

    #[test]
    fn multiple_finals_get_a_sink() {
        let trs = vec![Transition::new(0, 1, w("a")), Transition::new(0, 2, w("b"))];
        let l = Lattice::build_with_finals(0..3, 0, &[1, 2], trs).unwrap();
        assert!(l.validate().is_ok());
        assert_eq!(l.path_count().unwrap(), 2);
    }

    #[test]
    fn trim_drops_dead_branches() {
        let l = Lattice::build([0, 1, 2], 0, 1, vec![Transition::new(0, 1, w("a")), Transition::new(0, 2, w("b"))])
            .unwrap();
        let t = l.trim();
        assert!(t.validate().is_ok());
        assert_eq!(t.transitions().len(), 1);
    }

    #[test]
    fn text_format_round_trip() {
        let trs = vec![
            Transition::weighted(10, 20, w("plan"), -0.301),
            Transition::new(20, 30, Token::Empty),
            Transition::new(20, 30, Token::Morph("+plural".into())),
            Transition::weighted(30, 40, Token::fragment(" "), -1e-3),
            Transition::new(30, 40, Token::word("say\"hi\\")),
            Transition::new(30, 40, Token::Class { mark: ClassMark::Name, surface: "Perkin".into() }),
        ];
        let l = Lattice::build([10, 20, 30, 40], 10, 40, trs).unwrap();
        let text = l.to_text();
        assert!(text.starts_with("LATTICE v1 4 0 3\n"));
        let back = parse_lattices(&text).unwrap();
        assert_eq!(back.len(), 1);
        let a: Vec<_> = l.enumerate_paths(10).unwrap();
        let b: Vec<_> = back[0].enumerate_paths(10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn text_format_errors() {
        assert!(parse_lattices("0 1 a 0\n").is_err());
        assert!(parse_lattices("LATTICE v2 2 0 1\n").is_err());
        assert!(parse_lattices("LATTICE v1 2 0 1\n0 1 a notanumber\n").is_err());
        assert!(matches!(parse_lattices("LATTICE v1 2 0 1\n0 5 a 0\n"), Err(LatticeError::UnknownState(5))));
    }
}
