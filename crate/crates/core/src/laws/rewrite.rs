//! Rule application on nets.
//!
//! A rule's matched side is built once with placeholder words `$0 $1 ...`. Matching first
//! embeds that net up to atom shape, then solves the word equations between placeholder
//! and host words, then rebuilds the concrete instance and re-matches it exactly.

use std::sync::OnceLock;

use super::{Law, LawKind, Orientation, Origin, Side};
use crate::error::Result;
use crate::net::Net;
use crate::signature::{Name, ObjectWord, Signature};
use crate::term::{BaseTerm, Term, TypedTerm};

/// Largest pair list the list-valued laws are compiled for.
pub const MAX_PAIRS: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub law: String,
    pub reverse: bool,
    /// Canonical node id of the anchor, or `nodes + k` for boundary wire `k`.
    pub position: usize,
}

impl std::fmt::Display for TraceStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let dir = if self.reverse { "<-" } else { "->" };
        write!(f, "{}{}@{}", self.law, dir, self.position)
    }
}

pub struct Rule {
    pub law: Law,
    pub reverse: bool,
    pattern: Net,
    nvars: usize,
}

fn placeholder(k: usize) -> Name {
    Name::from(format!("${k}"))
}

fn var_index(n: &Name) -> Option<usize> {
    n.strip_prefix('$')?.parse().ok()
}

fn placeholder_sig(n: usize) -> Signature {
    (0..n).fold(Signature::new(), |s, k| s.with_object(&placeholder(k)))
}

fn base_shape(p: &BaseTerm, h: &BaseTerm) -> bool {
    match (p, h) {
        (BaseTerm::Id(_), BaseTerm::Id(_)) | (BaseTerm::Braid(..), BaseTerm::Braid(..)) => true,
        (BaseTerm::Gen(a), BaseTerm::Gen(b)) => a == b,
        (BaseTerm::Compose(a, b), BaseTerm::Compose(c, d))
        | (BaseTerm::Tensor(a, b), BaseTerm::Tensor(c, d)) => base_shape(a, c) && base_shape(b, d),
        _ => false,
    }
}

/// Same constructor and arity, words ignored.
pub fn same_shape(p: &Term, h: &Term) -> bool {
    match (p, h) {
        (Term::SeqM(..), Term::SeqM(..))
        | (Term::ParM(..), Term::ParM(..))
        | (Term::IdSt(_), Term::IdSt(_)) => true,
        (Term::Split(a), Term::Split(b))
        | (Term::Merge(a), Term::Merge(b))
        | (Term::Ident(a), Term::Ident(b)) => a.len() == b.len(),
        (Term::Lift(f), Term::Lift(g)) => base_shape(f, g),
        (Term::PGen(a), Term::PGen(b)) => a == b,
        _ => false,
    }
}

fn base_words(f: &BaseTerm, out: &mut Vec<ObjectWord>) {
    match f {
        BaseTerm::Id(w) => out.push(w.clone()),
        BaseTerm::Gen(_) => {}
        BaseTerm::Braid(u, v) => {
            out.push(u.clone());
            out.push(v.clone());
        }
        BaseTerm::Compose(a, b) | BaseTerm::Tensor(a, b) => {
            base_words(a, out);
            base_words(b, out);
        }
    }
}

/// Words an atom mentions, in a fixed order per constructor.
pub fn atom_words(t: &Term) -> Vec<ObjectWord> {
    let mut out = Vec::new();
    match t {
        Term::SeqM(a, b, c) => out.extend([a.clone(), b.clone(), c.clone()]),
        Term::ParM(a, b, c, d) => out.extend([a.clone(), b.clone(), c.clone(), d.clone()]),
        Term::IdSt(a) => out.push(a.clone()),
        Term::Split(p) | Term::Merge(p) | Term::Ident(p) => {
            for h in p {
                out.push(h.dom.clone());
                out.push(h.cod.clone());
            }
        }
        Term::Lift(f) => base_words(f, &mut out),
        _ => {}
    }
    out
}

const MAX_SOLUTIONS: usize = 64;

fn solve(
    eqs: &[(Vec<usize>, Vec<Name>)],
    e: usize,
    pi: usize,
    hi: usize,
    binds: &mut Vec<Option<Vec<Name>>>,
    out: &mut Vec<Vec<ObjectWord>>,
) {
    if out.len() >= MAX_SOLUTIONS {
        return;
    }
    if e == eqs.len() {
        if let Some(ws) = binds
            .iter()
            .map(|b| b.clone().map(ObjectWord))
            .collect::<Option<Vec<_>>>()
        {
            out.push(ws);
        }
        return;
    }
    let (p, h) = &eqs[e];
    if pi == p.len() {
        if hi == h.len() {
            solve(eqs, e + 1, 0, 0, binds, out);
        }
        return;
    }
    let v = p[pi];
    if let Some(b) = binds[v].clone() {
        if h[hi..].starts_with(&b) {
            solve(eqs, e, pi + 1, hi + b.len(), binds, out);
        }
        return;
    }
    // a lone trailing variable takes the rest
    let lens: Vec<usize> = if pi + 1 == p.len() {
        vec![h.len() - hi]
    } else {
        (0..=h.len() - hi).collect()
    };
    for len in lens {
        binds[v] = Some(h[hi..hi + len].to_vec());
        solve(eqs, e, pi + 1, hi + len, binds, out);
    }
    binds[v] = None;
}

/// Every assignment of words to the placeholders making each pattern word equal its host word.
pub fn unify_words(eqs: &[(ObjectWord, ObjectWord)], nvars: usize) -> Vec<Vec<ObjectWord>> {
    let mut coded: Vec<(Vec<usize>, Vec<Name>)> = Vec::new();
    for (p, h) in eqs {
        let Some(vs) = p.0.iter().map(var_index).collect::<Option<Vec<_>>>() else {
            return vec![];
        };
        coded.push((vs, h.0.clone()));
    }
    coded.sort_by_key(|(p, _)| p.len());
    let mut out = Vec::new();
    solve(&coded, 0, 0, 0, &mut vec![None; nvars], &mut out);
    out
}

impl Rule {
    pub fn new(law: Law, reverse: bool) -> Option<Rule> {
        let nvars = law.vars();
        let ws: Vec<ObjectWord> = (0..nvars)
            .map(|k| ObjectWord(vec![placeholder(k)]))
            .collect();
        let (l, r) = law.sides(&ws);
        let side = if reverse { r } else { l };
        let pattern = side.net(&placeholder_sig(nvars)).ok()?;
        if pattern.nodes.is_empty() {
            return None;
        }
        Some(Rule {
            law,
            reverse,
            pattern,
            nvars,
        })
    }

    pub fn name(&self) -> &'static str {
        self.law.name()
    }

    /// Every rewrite of `host` with the pattern's first node on `anchor`.
    pub fn apply_at(&self, sig: &Signature, host: &Net, anchor: usize) -> Vec<Net> {
        let a0 = &self.pattern.nodes[0].atom;
        if !same_shape(a0, &host.nodes[anchor].atom) {
            return vec![];
        }
        let Some(map) = host.match_at_with(&self.pattern, 0, anchor, &same_shape) else {
            return vec![];
        };
        let mut eqs = Vec::new();
        for (p, &h) in map.iter().enumerate() {
            let pw = atom_words(&self.pattern.nodes[p].atom);
            let hw = atom_words(&host.nodes[h].atom);
            eqs.extend(pw.into_iter().zip(hw));
        }
        let mut out = Vec::new();
        for words in unify_words(&eqs, self.nvars) {
            if let Ok(n) = self.instantiate(sig, host, anchor, &words) {
                if let Some(n) = n {
                    if !out.contains(&n) {
                        out.push(n);
                    }
                }
            }
        }
        out
    }

    fn instantiate(
        &self,
        sig: &Signature,
        host: &Net,
        anchor: usize,
        words: &[ObjectWord],
    ) -> Result<Option<Net>> {
        let (l, r) = self.law.sides(words);
        let (from, to): (Side, Side) = if self.reverse { (r, l) } else { (l, r) };
        let from = from.net(sig)?;
        let to = to.net(sig)?;
        if from.inputs != to.inputs || from.outputs != to.outputs {
            return Ok(None);
        }
        let Some(map) = host.match_at(&from, 0, anchor) else {
            return Ok(None);
        };
        Ok(host.replace(&from, &map, &to))
    }
}

pub struct RuleSet {
    pub rules: Vec<Rule>,
}

fn expand(kind: LawKind, reverse: bool, max_pairs: usize, out: &mut Vec<Rule>) {
    for shape in kind.shapes(max_pairs) {
        if let Some(r) = Rule::new(Law::with_shape(kind, shape), reverse) {
            out.push(r);
        }
    }
}

impl RuleSet {
    /// Directed laws left to right, cheapest cancellations first.
    pub fn normalizing(with_derived: bool, max_pairs: usize) -> RuleSet {
        let mut rules = Vec::new();
        let order = [
            LawKind::E4L,
            LawKind::E4R,
            LawKind::E5L,
            LawKind::E5R,
            LawKind::E8,
            LawKind::E10a,
            LawKind::E10b,
            LawKind::Unary,
            LawKind::E6,
            LawKind::D1,
            LawKind::E1,
            LawKind::E2,
        ];
        for kind in order {
            if kind.origin() == Origin::Derived && !with_derived && kind != LawKind::Unary {
                continue;
            }
            expand(kind, false, max_pairs, &mut rules);
        }
        RuleSet { rules }
    }

    /// Core laws in every direction whose matched side has a node.
    pub fn core_moves(max_pairs: usize) -> RuleSet {
        let mut rules = Vec::new();
        for kind in LawKind::ALL {
            if kind.origin() != Origin::Core {
                continue;
            }
            expand(kind, false, max_pairs, &mut rules);
            let reversible = kind.orientation() == Orientation::Bidirectional
                || matches!(kind, LawKind::E1 | LawKind::E2 | LawKind::E6 | LawKind::E8);
            if reversible {
                expand(kind, true, max_pairs, &mut rules);
            }
        }
        RuleSet { rules }
    }

    pub fn default_normalizing() -> &'static RuleSet {
        static R: OnceLock<RuleSet> = OnceLock::new();
        R.get_or_init(|| RuleSet::normalizing(true, MAX_PAIRS))
    }

    pub fn core_normalizing() -> &'static RuleSet {
        static R: OnceLock<RuleSet> = OnceLock::new();
        R.get_or_init(|| RuleSet::normalizing(false, MAX_PAIRS))
    }

    pub fn default_moves() -> &'static RuleSet {
        static R: OnceLock<RuleSet> = OnceLock::new();
        R.get_or_init(|| RuleSet::core_moves(MAX_PAIRS))
    }
}

/// First rewrite in canonical anchor order, rules in priority order. The input is
/// canonicalized first so positions are canonical node ids.
pub fn rewrite_step_net(sig: &Signature, net: &Net, rules: &RuleSet) -> Option<(Net, TraceStep)> {
    let c = net.canonicalize();
    for anchor in 0..c.nodes.len() {
        for rule in &rules.rules {
            if let Some(n) = rule.apply_at(sig, &c, anchor).into_iter().next() {
                return Some((
                    n,
                    TraceStep {
                        law: rule.law.label(),
                        reverse: rule.reverse,
                        position: anchor,
                    },
                ));
            }
        }
    }
    None
}

#[derive(Clone, Debug)]
pub struct Normalized {
    pub term: TypedTerm,
    pub net: Net,
    pub trace: Vec<TraceStep>,
    /// Fuel ran out before a normal form was reached.
    pub exhausted: bool,
}

pub fn normalize_net(
    sig: &Signature,
    net: &Net,
    rules: &RuleSet,
    fuel: usize,
) -> (Net, Vec<TraceStep>, bool) {
    let mut cur = net.canonicalize();
    let mut trace = Vec::new();
    for _ in 0..fuel {
        match rewrite_step_net(sig, &cur, rules) {
            Some((n, step)) => {
                cur = n.canonicalize();
                trace.push(step);
            }
            None => return (cur, trace, false),
        }
    }
    let exhausted = rewrite_step_net(sig, &cur, rules).is_some();
    (cur, trace, exhausted)
}

/// One directed rewrite: the new term, the law used and its position.
pub fn rewrite_step(sig: &Signature, t: &TypedTerm) -> Result<Option<(TypedTerm, String, usize)>> {
    let net = Net::from_term(sig, &t.term)?;
    match rewrite_step_net(sig, &net, RuleSet::default_normalizing()) {
        None => Ok(None),
        Some((n, step)) => {
            let term = TypedTerm::new(sig, n.to_term()?)?;
            Ok(Some((term, step.law, step.position)))
        }
    }
}

pub fn normalize(sig: &Signature, t: &TypedTerm, fuel: usize) -> Result<Normalized> {
    let net = Net::from_term(sig, &t.term)?;
    let (n, trace, exhausted) = normalize_net(sig, &net, RuleSet::default_normalizing(), fuel);
    let term = TypedTerm::new(sig, n.to_term()?)?;
    Ok(Normalized {
        term,
        net: n,
        trace,
        exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::HomType;
    use crate::term::{par_box, seq_box};

    fn w(s: &[&str]) -> ObjectWord {
        ObjectWord::of(s)
    }

    fn sig() -> Signature {
        Signature::new()
            .with_object("q")
            .with_object("r")
            .with_object("s")
            .with_gen("f", w(&["q"]), w(&["r"]))
            .with_gen("g", w(&["r"]), w(&["s"]))
            .with_gen("h", w(&["s"]), w(&["q"]))
    }

    fn lift(s: &Signature, n: &str) -> TypedTerm {
        TypedTerm::new(s, Term::lift(BaseTerm::gen(n))).unwrap()
    }

    #[test]
    fn unification_splits_words() {
        let p = |v: &[usize]| ObjectWord(v.iter().map(|k| placeholder(*k)).collect());
        let eqs = vec![(p(&[0, 1]), w(&["q", "r", "s"])), (p(&[0]), w(&["q"]))];
        let sols = unify_words(&eqs, 2);
        assert_eq!(sols, vec![vec![w(&["q"]), w(&["r", "s"])]]);
        let open = unify_words(&[(p(&[0, 1]), w(&["q", "r"]))], 2);
        assert_eq!(open.len(), 3);
    }

    #[test]
    fn sequential_unit_rewrites_at_root() {
        let s = sig();
        let t = seq_box(
            &s,
            &TypedTerm::new(&s, Term::IdSt(w(&["q"]))).unwrap(),
            &lift(&s, "f"),
        )
        .unwrap();
        let (out, law, _) = rewrite_step(&s, &t).unwrap().unwrap();
        assert_eq!(out.term, Term::lift(BaseTerm::gen("f")));
        assert_eq!(law, "E4L");
    }

    #[test]
    fn merge_then_split_cancels() {
        let s = sig();
        let p = vec![
            HomType::new(w(&["q"]), w(&["r"])),
            HomType::new(w(&["s"]), w(&["s"])),
        ];
        let t = TypedTerm::new(
            &s,
            Term::comp(Term::Merge(p.clone()), 0, Term::Split(p.clone()), 0),
        )
        .unwrap();
        let (out, law, _) = rewrite_step(&s, &t).unwrap().unwrap();
        assert_eq!(out.term, Term::Ident(p));
        assert_eq!(law, "E10a(2)");
    }

    #[test]
    fn generator_states_are_normal() {
        let s = sig();
        assert!(rewrite_step(&s, &lift(&s, "f")).unwrap().is_none());
        let id = TypedTerm::new(&s, Term::IdSt(w(&["q"]))).unwrap();
        let n = normalize(&s, &id, 100).unwrap();
        assert!(n.trace.is_empty() && n.term == id);
    }

    #[test]
    fn box_composition_is_associative_after_normalizing() {
        let s = sig();
        let (f, g, h) = (lift(&s, "f"), lift(&s, "g"), lift(&s, "h"));
        let left = seq_box(&s, &seq_box(&s, &f, &g).unwrap(), &h).unwrap();
        let right = seq_box(&s, &f, &seq_box(&s, &g, &h).unwrap()).unwrap();
        let nl = normalize(&s, &left, 1000).unwrap();
        let nr = normalize(&s, &right, 1000).unwrap();
        assert!(!nl.exhausted && !nr.exhausted);
        assert_eq!(nl.term, nr.term);
        assert_eq!(nl.net.key(), nr.net.key());
    }

    #[test]
    fn tensor_unit_drops_empty_identity() {
        let s = sig();
        let e = TypedTerm::new(&s, Term::IdSt(ObjectWord::empty())).unwrap();
        let t = par_box(&s, &lift(&s, "f"), &e).unwrap();
        let n = normalize(&s, &t, 100).unwrap();
        assert_eq!(n.term.term, Term::lift(BaseTerm::gen("f")));
    }

    #[test]
    fn copy_law_fires() {
        let s = sig();
        let a = TypedTerm::new(&s, Term::IdSt(w(&["q"]))).unwrap();
        let b = TypedTerm::new(&s, Term::IdSt(w(&["r"]))).unwrap();
        let n = normalize(&s, &par_box(&s, &a, &b).unwrap(), 100).unwrap();
        assert_eq!(n.term.term, Term::IdSt(w(&["q", "r"])));
    }
}
