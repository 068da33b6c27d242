//! Preference scoring of interlingua expressions against a small ontology.
//!
//! Every role edge is graded by how well its filler fits the relation's
//! range (and, if declared, how well the holder fits its domain). Grades
//! multiply, and the lowest grade is positive, so no expression scores zero.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::sexpr::{self, Sexp, SexpError};

#[derive(Debug, Error, PartialEq)]
pub enum OntologyError {
    #[error("ontology line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("ontology line {line}: undeclared concept {name}")]
    UndeclaredConcept { line: usize, name: String },
    #[error("isa cycle through {0:?}")]
    IsaCycle(Vec<String>),
}

#[derive(Debug, Error, PartialEq)]
pub enum InterlinguaError {
    #[error(transparent)]
    Syntax(#[from] SexpError),
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error("instance id {0} defined more than once")]
    Duplicate(String),
    #[error("reference to undefined instance {0}")]
    Undefined(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConceptSet {
    Any,
    Of(BTreeSet<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum LiteralKind {
    Number,
    String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub basic: ConceptSet,
    /// Concepts accepted only as a relaxation, on top of `basic`.
    pub relaxed: ConceptSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub range: Constraint,
    pub domain: Option<Constraint>,
    pub literals: Option<BTreeSet<LiteralKind>>,
}

#[derive(Clone, Debug, Default)]
pub struct Ontology {
    concepts: BTreeSet<String>,
    ancestors: HashMap<String, BTreeSet<String>>,
    disjoint: BTreeSet<(String, String)>,
    relations: BTreeMap<String, Relation>,
}

impl Ontology {
    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.concepts.iter().map(String::as_str)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    /// True when `specific` is `general` or reaches it through isa links.
    pub fn subsumes(&self, general: &str, specific: &str) -> bool {
        match self.ancestors.get(specific) {
            Some(a) => a.contains(general),
            None => general == specific,
        }
    }

    /// Declared disjointness, inherited by every descendant of either side.
    pub fn disjoint(&self, a: &str, b: &str) -> bool {
        let up = |c: &str| self.ancestors.get(c).cloned().unwrap_or_else(|| BTreeSet::from([c.to_string()]));
        let (ua, ub) = (up(a), up(b));
        self.disjoint.iter().any(|(x, y)| (ua.contains(x) && ub.contains(y)) || (ua.contains(y) && ub.contains(x)))
    }

    fn satisfies(&self, filler: &str, set: &ConceptSet) -> bool {
        match set {
            ConceptSet::Any => true,
            ConceptSet::Of(s) => s.iter().any(|c| self.subsumes(c, filler)),
        }
    }

    fn disjoint_from_all(&self, filler: &str, set: &ConceptSet) -> bool {
        match set {
            ConceptSet::Any => false,
            ConceptSet::Of(s) => !s.is_empty() && s.iter().all(|c| self.disjoint(filler, c)),
        }
    }

    /// Grade of a concept against one constraint.
    pub fn grade(&self, concept: &str, c: &Constraint) -> Tier {
        if self.satisfies(concept, &c.basic) {
            Tier::Basic
        } else if self.satisfies(concept, &c.relaxed) {
            if self.disjoint_from_all(concept, &c.basic) {
                Tier::RelaxedDisjoint
            } else {
                Tier::Relaxed
            }
        } else if self.disjoint_from_all(concept, &c.basic) || self.disjoint_from_all(concept, &c.relaxed) {
            Tier::Disjoint
        } else {
            Tier::Neither
        }
    }
}

fn parse_set(field: &str, line: usize, concepts: &BTreeSet<String>) -> Result<ConceptSet, OntologyError> {
    if field == "*" {
        return Ok(ConceptSet::Any);
    }
    let mut out = BTreeSet::new();
    for name in field.split(',').filter(|s| !s.is_empty()) {
        if !concepts.contains(name) {
            return Err(OntologyError::UndeclaredConcept { line, name: name.to_string() });
        }
        out.insert(name.to_string());
    }
    Ok(ConceptSet::Of(out))
}

/// Parses `basic LIST [relaxable-to LIST]` starting at `fields[at]`;
/// returns the constraint and the next unread index.
fn parse_constraint(
    fields: &[&str],
    at: usize,
    line: usize,
    concepts: &BTreeSet<String>,
    lead: &str,
) -> Result<(Constraint, usize), OntologyError> {
    let fail = |msg: String| OntologyError::Format { line, msg };
    if fields.get(at) != Some(&lead) {
        return Err(fail(format!("expected `{lead}`")));
    }
    let basic =
        parse_set(fields.get(at + 1).ok_or_else(|| fail(format!("missing list after `{lead}`")))?, line, concepts)?;
    let mut next = at + 2;
    let mut relaxed = ConceptSet::Of(BTreeSet::new());
    if fields.get(next) == Some(&"relaxable-to") {
        relaxed = parse_set(
            fields.get(next + 1).ok_or_else(|| fail("missing list after `relaxable-to`".into()))?,
            line,
            concepts,
        )?;
        next += 2;
    }
    Ok((Constraint { basic, relaxed }, next))
}

pub fn load_ontology(text: &str) -> Result<Ontology, OntologyError> {
    let mut concepts = BTreeSet::new();
    let mut isa: Vec<(usize, String, String)> = Vec::new();
    let mut disjoint: Vec<(usize, String, String)> = Vec::new();
    let mut relation_lines: Vec<(usize, Vec<&str>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let fail = |msg: &str| OntologyError::Format { line, msg: msg.to_string() };
        match fields[0] {
            "concept" => {
                if fields.len() < 2 {
                    return Err(fail("concept needs at least one name"));
                }
                concepts.extend(fields[1..].iter().map(|s| s.to_string()));
            }
            "isa" | "disjoint" => {
                if fields.len() != 3 {
                    return Err(fail("expected two concept names"));
                }
                let rec = (line, fields[1].to_string(), fields[2].to_string());
                if fields[0] == "isa" {
                    isa.push(rec);
                } else {
                    disjoint.push(rec);
                }
            }
            "relation" => relation_lines.push((line, fields)),
            other => return Err(fail(&format!("unknown directive {other:?}"))),
        }
    }
    let check = |line: usize, name: &str| {
        if concepts.contains(name) {
            Ok(())
        } else {
            Err(OntologyError::UndeclaredConcept { line, name: name.to_string() })
        }
    };
    let mut parents: HashMap<String, BTreeSet<String>> = HashMap::new();
    for (line, child, parent) in &isa {
        check(*line, child)?;
        check(*line, parent)?;
        parents.entry(child.clone()).or_default().insert(parent.clone());
    }
    let mut pairs = BTreeSet::new();
    for (line, a, b) in &disjoint {
        check(*line, a)?;
        check(*line, b)?;
        pairs.insert(if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) });
    }

    let ancestors = close_isa(&concepts, &parents)?;

    let mut relations = BTreeMap::new();
    for (line, fields) in relation_lines {
        let fail = |msg: String| OntologyError::Format { line, msg };
        let name = fields.get(1).ok_or_else(|| fail("relation needs a name".into()))?.to_string();
        let (range, mut at) = parse_constraint(&fields, 2, line, &concepts, "basic")?;
        let mut domain = None;
        let mut literals = None;
        while at < fields.len() {
            match fields[at] {
                "domain" => {
                    let (c, next) = parse_constraint(&fields, at, line, &concepts, "domain")?;
                    domain = Some(c);
                    at = next;
                }
                "literal" => {
                    let list = fields.get(at + 1).ok_or_else(|| fail("missing literal kinds".into()))?;
                    let mut kinds = BTreeSet::new();
                    for k in list.split(',') {
                        kinds.insert(match k {
                            "number" => LiteralKind::Number,
                            "string" => LiteralKind::String,
                            _ => return Err(fail(format!("unknown literal kind {k:?}"))),
                        });
                    }
                    literals = Some(kinds);
                    at += 2;
                }
                other => return Err(fail(format!("unexpected {other:?} in relation"))),
            }
        }
        if relations.insert(name.clone(), Relation { range, domain, literals }).is_some() {
            return Err(fail(format!("relation {name} declared twice")));
        }
    }
    Ok(Ontology { concepts, ancestors, disjoint: pairs, relations })
}

fn close_isa(
    concepts: &BTreeSet<String>,
    parents: &HashMap<String, BTreeSet<String>>,
) -> Result<HashMap<String, BTreeSet<String>>, OntologyError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit(
        c: &str,
        parents: &HashMap<String, BTreeSet<String>>,
        marks: &mut HashMap<String, Mark>,
        out: &mut HashMap<String, BTreeSet<String>>,
        trail: &mut Vec<String>,
    ) -> Result<(), OntologyError> {
        match marks.get(c) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                let from = trail.iter().position(|t| t == c).unwrap_or(0);
                return Err(OntologyError::IsaCycle(trail[from..].to_vec()));
            }
            None => {}
        }
        marks.insert(c.to_string(), Mark::Active);
        trail.push(c.to_string());
        let mut anc = BTreeSet::from([c.to_string()]);
        for p in parents.get(c).into_iter().flatten() {
            visit(p, parents, marks, out, trail)?;
            anc.extend(out[p].iter().cloned());
        }
        trail.pop();
        marks.insert(c.to_string(), Mark::Done);
        out.insert(c.to_string(), anc);
        Ok(())
    }
    let mut marks = HashMap::new();
    let mut out = HashMap::new();
    for c in concepts {
        visit(c, parents, &mut marks, &mut out, &mut Vec::new())?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    Disjoint,
    Neither,
    RelaxedDisjoint,
    Relaxed,
    Basic,
}

impl Tier {
    pub const ALL: [Tier; 5] = [Tier::Basic, Tier::Relaxed, Tier::RelaxedDisjoint, Tier::Neither, Tier::Disjoint];

    pub fn value(self) -> f64 {
        match self {
            Tier::Basic => 1.0,
            Tier::Relaxed => 0.8,
            Tier::RelaxedDisjoint => 0.25,
            Tier::Neither => 0.05,
            Tier::Disjoint => 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Literal {
    Number(String),
    Str(String),
}

impl Literal {
    pub fn kind(&self) -> LiteralKind {
        match self {
            Literal::Number(_) => LiteralKind::Number,
            Literal::Str(_) => LiteralKind::String,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => f.write_str(n),
            Literal::Str(s) => write!(f, "{}", Sexp::Str(s.clone())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Filler {
    /// A nested definition at this position.
    Define(usize),
    /// A bare id pointing at an instance defined elsewhere.
    Ref(usize),
    Literal(Literal),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub concept: String,
    pub roles: Vec<(String, Filler)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterlinguaExpr {
    pub instances: Vec<Instance>,
    pub root: usize,
}

impl InterlinguaExpr {
    pub fn instance(&self, id: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.id == id)
    }

    /// Number of role edges whose filler is the given instance.
    pub fn references_to(&self, id: &str) -> usize {
        let Some(target) = self.instances.iter().position(|i| i.id == id) else { return 0 };
        self.instances
            .iter()
            .flat_map(|i| &i.roles)
            .filter(|(_, f)| matches!(f, Filler::Define(t) | Filler::Ref(t) if *t == target))
            .count()
    }

    fn write_instance(&self, idx: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inst = &self.instances[idx];
        write!(f, "({} / {}", inst.id, inst.concept)?;
        for (role, filler) in &inst.roles {
            write!(f, " :{role} ")?;
            match filler {
                Filler::Define(i) => self.write_instance(*i, f)?,
                Filler::Ref(i) => f.write_str(&self.instances[*i].id)?,
                Filler::Literal(l) => write!(f, "{l}")?,
            }
        }
        f.write_str(")")
    }
}

impl fmt::Display for InterlinguaExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_instance(self.root, f)
    }
}

fn is_number(s: &str) -> bool {
    s.parse::<f64>().is_ok() && s.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '-' || c == '+' || c == '.')
}

enum Pending {
    Done(Filler),
    Ref(String),
}

struct Builder {
    instances: Vec<Instance>,
    pending: Vec<Vec<(String, Pending)>>,
    ids: HashMap<String, usize>,
}

impl Builder {
    fn define(&mut self, e: &Sexp) -> Result<usize, InterlinguaError> {
        let items = e.as_list().ok_or_else(|| InterlinguaError::Malformed(e.to_string()))?;
        let (id, concept) = match items {
            [Sexp::Atom(id), Sexp::Atom(slash), Sexp::Atom(concept), ..] if slash == "/" => (id, concept),
            _ => return Err(InterlinguaError::Malformed(e.to_string())),
        };
        if self.ids.contains_key(id) {
            return Err(InterlinguaError::Duplicate(id.clone()));
        }
        let idx = self.instances.len();
        self.ids.insert(id.clone(), idx);
        self.instances.push(Instance { id: id.clone(), concept: concept.clone(), roles: Vec::new() });
        self.pending.push(Vec::new());
        let rest = &items[3..];
        if rest.len() % 2 != 0 {
            return Err(InterlinguaError::Malformed(format!("role without filler in {id}")));
        }
        for pair in rest.chunks(2) {
            let role = pair[0]
                .as_atom()
                .and_then(|a| a.strip_prefix(':'))
                .filter(|r| !r.is_empty())
                .ok_or_else(|| InterlinguaError::Malformed(format!("expected :ROLE in {id}, got {}", pair[0])))?;
            let filler = match &pair[1] {
                Sexp::List(_) => Pending::Done(Filler::Define(self.define(&pair[1])?)),
                Sexp::Str(s) => Pending::Done(Filler::Literal(Literal::Str(s.clone()))),
                Sexp::Atom(a) if is_number(a) => Pending::Done(Filler::Literal(Literal::Number(a.clone()))),
                Sexp::Atom(a) => Pending::Ref(a.clone()),
            };
            self.pending[idx].push((role.to_string(), filler));
        }
        Ok(idx)
    }

    fn finish(mut self, root: usize) -> Result<InterlinguaExpr, InterlinguaError> {
        for (idx, roles) in std::mem::take(&mut self.pending).into_iter().enumerate() {
            for (role, p) in roles {
                let filler = match p {
                    Pending::Done(f) => f,
                    Pending::Ref(id) => Filler::Ref(*self.ids.get(&id).ok_or(InterlinguaError::Undefined(id))?),
                };
                self.instances[idx].roles.push((role, filler));
            }
        }
        Ok(InterlinguaExpr { instances: self.instances, root })
    }
}

pub fn interlingua_from_sexp(e: &Sexp) -> Result<InterlinguaExpr, InterlinguaError> {
    let mut b = Builder { instances: Vec::new(), pending: Vec::new(), ids: HashMap::new() };
    let root = b.define(e)?;
    b.finish(root)
}

pub fn parse_interlingua(text: &str) -> Result<InterlinguaExpr, InterlinguaError> {
    interlingua_from_sexp(&sexpr::parse_one(text)?)
}

/// Every top-level expression in a file.
pub fn parse_interlingua_file(text: &str) -> Result<Vec<InterlinguaExpr>, InterlinguaError> {
    sexpr::parse_all(text)?.iter().map(interlingua_from_sexp).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TripleFiller {
    Concept(String),
    Literal(Literal),
}

impl fmt::Display for TripleFiller {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TripleFiller::Concept(c) => f.write_str(c),
            TripleFiller::Literal(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationTriple {
    pub head: String,
    pub relation: String,
    pub filler: TripleFiller,
}

impl fmt::Display for RelationTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}, {}>", self.head, self.relation, self.filler)
    }
}

/// One triple per role edge, in definition order.
pub fn extract_relations(e: &InterlinguaExpr) -> Vec<RelationTriple> {
    let mut out = Vec::new();
    for inst in &e.instances {
        for (role, filler) in &inst.roles {
            let filler = match filler {
                Filler::Define(i) | Filler::Ref(i) => TripleFiller::Concept(e.instances[*i].concept.clone()),
                Filler::Literal(l) => TripleFiller::Literal(l.clone()),
            };
            out.push(RelationTriple { head: inst.concept.clone(), relation: role.clone(), filler });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct TierRecord {
    pub triple: RelationTriple,
    pub range: Tier,
    pub domain: Option<Tier>,
}

impl TierRecord {
    pub fn value(&self) -> f64 {
        self.range.value() * self.domain.map_or(1.0, Tier::value)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreferenceScore {
    pub value: f64,
    pub records: Vec<TierRecord>,
    pub diagnostics: Vec<String>,
}

impl PreferenceScore {
    /// Number of tier factors in the product.
    pub fn factors(&self) -> usize {
        self.records.iter().map(|r| 1 + usize::from(r.domain.is_some())).sum()
    }
}

/// Range and domain grades for one triple, with a note when the relation
/// is unknown to the ontology.
pub fn tier(o: &Ontology, t: &RelationTriple) -> (TierRecord, Option<String>) {
    let Some(rel) = o.relation(&t.relation) else {
        let rec = TierRecord { triple: t.clone(), range: Tier::Neither, domain: None };
        return (rec, Some(format!("undeclared relation {}", t.relation)));
    };
    let range = match &t.filler {
        TripleFiller::Concept(c) => o.grade(c, &rel.range),
        TripleFiller::Literal(l) => match &rel.literals {
            Some(kinds) if !kinds.contains(&l.kind()) => Tier::Disjoint,
            _ => Tier::Basic,
        },
    };
    let domain = rel.domain.as_ref().map(|d| o.grade(&t.head, d));
    let mut note = None;
    for c in std::iter::once(&t.head).chain(match &t.filler {
        TripleFiller::Concept(c) => Some(c),
        TripleFiller::Literal(_) => None,
    }) {
        if !o.concepts.contains(c) {
            note = Some(format!("concept {c} not in ontology"));
        }
    }
    (TierRecord { triple: t.clone(), range, domain }, note)
}

pub fn score(e: &InterlinguaExpr, o: &Ontology) -> PreferenceScore {
    let mut value = 1.0;
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for t in extract_relations(e) {
        let (rec, note) = tier(o, &t);
        value *= rec.range.value();
        if let Some(d) = rec.domain {
            value *= d.value();
        }
        diagnostics.extend(note);
        records.push(rec);
    }
    PreferenceScore { value, records, diagnostics }
}

/// Candidate indices with scores, best first; ties keep input order.
pub fn rank(candidates: &[InterlinguaExpr], o: &Ontology) -> Vec<(usize, PreferenceScore)> {
    let mut out: Vec<(usize, PreferenceScore)> = candidates.iter().map(|e| score(e, o)).enumerate().collect();
    out.sort_by(|a, b| b.1.value.total_cmp(&a.1.value));
    out
}
