//! The equational laws of higher-order circuit theories.
//!
//! Each law is stated over word metavariables; list-valued laws (cotensor associativity,
//! merge/split cancellation, black-dot merging, the multi-party braid) also take a shape.
//! Law sides are terms except for the split-then-merge cancellation, whose left side
//! connects two nodes along several wires and so only exists as a net.

mod rewrite;
mod search;
mod sweep;

pub use rewrite::{
    normalize, normalize_net, rewrite_step, rewrite_step_net, Normalized, Rule, RuleSet, TraceStep,
};
pub use search::{
    decide_equal, derive, find_distinction, search, verify_chain, EqualityVerdict, ModelSpec,
    SearchOutcome, Witness,
};
pub use sweep::{
    boolean_sweep, check_instance, float_trials, instance_hash, words_up_to, InstanceResult,
    SweepSummary,
};

use crate::error::Result;
use crate::net::Net;
use crate::signature::{HomType, ObjectWord, Signature};
use crate::term::{BaseTerm, Term};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Orientation {
    Directed,
    Bidirectional,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Origin {
    Core,
    Derived,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum LawKind {
    E1,
    E2,
    E3,
    E4L,
    E4R,
    E5L,
    E5R,
    E6,
    E7a,
    E7b,
    E8,
    E9,
    E10a,
    E10b,
    D1,
    D2,
    D3,
    D4,
    /// A one-pair split or merge is a plain wire.
    Unary,
}

/// One side of a law instance.
#[derive(Clone, Debug, PartialEq)]
pub enum Side {
    Term(Term),
    SplitMerge(Vec<HomType>),
}

impl Side {
    pub fn net(&self, sig: &Signature) -> Result<Net> {
        match self {
            Side::Term(t) => Net::from_term(sig, t),
            Side::SplitMerge(p) => {
                for h in p {
                    sig.check_word(&h.dom)?;
                    sig.check_word(&h.cod)?;
                }
                Ok(Net::split_then_merge(p))
            }
        }
    }

    pub fn term(&self) -> Option<&Term> {
        match self {
            Side::Term(t) => Some(t),
            Side::SplitMerge(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Law {
    pub kind: LawKind,
    pub shape: Vec<usize>,
}

fn cat(a: &ObjectWord, b: &ObjectWord) -> ObjectWord {
    a.concat(b)
}

fn hom(a: &ObjectWord, b: &ObjectWord) -> HomType {
    HomType::new(a.clone(), b.clone())
}

fn comp(s: Term, i: usize, t: Term, j: usize) -> Term {
    Term::comp(s, i, t, j)
}

/// `[a b, a' b'] -> [b a, b' a']` built from lifted braids and sequencing.
pub fn conj(a: &ObjectWord, a2: &ObjectWord, b: &ObjectWord, b2: &ObjectWord) -> Term {
    let pre = comp(
        Term::lift(BaseTerm::Braid(b.clone(), a.clone())),
        0,
        Term::SeqM(cat(b, a), cat(a, b), cat(a2, b2)),
        0,
    );
    let post = comp(
        Term::lift(BaseTerm::Braid(a2.clone(), b2.clone())),
        0,
        Term::SeqM(cat(b, a), cat(a2, b2), cat(b2, a2)),
        1,
    );
    comp(pre, 0, post, 0)
}

/// Pairs from a flat word list `a1 b1 a2 b2 ...`.
pub fn pairs_of(words: &[ObjectWord]) -> Vec<HomType> {
    words.chunks(2).map(|c| hom(&c[0], &c[1])).collect()
}

fn joined(pairs: &[HomType]) -> HomType {
    HomType::new(
        ObjectWord::concat_all(pairs.iter().map(|h| &h.dom)),
        ObjectWord::concat_all(pairs.iter().map(|h| &h.cod)),
    )
}

/// Outer list with the block `inner` collapsed into a single pair at `k`.
fn nest(flat: &[HomType], r: usize, k: usize, q: usize) -> (Vec<HomType>, Vec<HomType>) {
    debug_assert_eq!(flat.len(), r - 1 + q);
    let inner = flat[k..k + q].to_vec();
    let mut outer = flat[..k].to_vec();
    outer.push(joined(&inner));
    outer.extend(flat[k + q..].iter().cloned());
    (outer, inner)
}

impl LawKind {
    pub const ALL: [LawKind; 18] = [
        LawKind::E1,
        LawKind::E2,
        LawKind::E3,
        LawKind::E4L,
        LawKind::E4R,
        LawKind::E5L,
        LawKind::E5R,
        LawKind::E6,
        LawKind::E7a,
        LawKind::E7b,
        LawKind::E8,
        LawKind::E9,
        LawKind::E10a,
        LawKind::E10b,
        LawKind::D1,
        LawKind::D2,
        LawKind::D3,
        LawKind::D4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LawKind::E1 => "E1",
            LawKind::E2 => "E2",
            LawKind::E3 => "E3",
            LawKind::E4L => "E4L",
            LawKind::E4R => "E4R",
            LawKind::E5L => "E5L",
            LawKind::E5R => "E5R",
            LawKind::E6 => "E6",
            LawKind::E7a => "E7a",
            LawKind::E7b => "E7b",
            LawKind::E8 => "E8",
            LawKind::E9 => "E9",
            LawKind::E10a => "E10a",
            LawKind::E10b => "E10b",
            LawKind::D1 => "D1",
            LawKind::D2 => "D2",
            LawKind::D3 => "D3",
            LawKind::D4 => "D4",
            LawKind::Unary => "unary",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            LawKind::E1 => "sequential associativity",
            LawKind::E2 => "tensor associativity",
            LawKind::E3 => "interchange",
            LawKind::E4L | LawKind::E4R => "sequential unit",
            LawKind::E5L | LawKind::E5R => "tensor unit",
            LawKind::E6 => "cotensor associativity",
            LawKind::E7a | LawKind::E7b => "frobenius",
            LawKind::E8 => "copy",
            LawKind::E9 => "braid",
            LawKind::E10a => "merge then split cancels",
            LawKind::E10b => "split then merge cancels",
            LawKind::D1 => "black-dot merging",
            LawKind::D2 => "function-box symmetry",
            LawKind::D3 => "times-dot",
            LawKind::D4 => "multi-party braid",
            LawKind::Unary => "unary cotensor",
        }
    }

    pub fn from_name(s: &str) -> Option<LawKind> {
        LawKind::ALL
            .iter()
            .chain(&[LawKind::Unary])
            .copied()
            .find(|k| k.name() == s)
    }

    pub fn origin(self) -> Origin {
        match self {
            LawKind::D1 | LawKind::D2 | LawKind::D3 | LawKind::D4 | LawKind::Unary => {
                Origin::Derived
            }
            _ => Origin::Core,
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            LawKind::E3 | LawKind::E7a | LawKind::E7b | LawKind::E9 => Orientation::Bidirectional,
            LawKind::D2 | LawKind::D3 | LawKind::D4 => Orientation::Bidirectional,
            _ => Orientation::Directed,
        }
    }

    /// Shape used when a single representative is wanted.
    pub fn default_shape(self) -> Vec<usize> {
        match self {
            LawKind::E6 | LawKind::D1 => vec![2, 0, 2],
            LawKind::E10a | LawKind::E10b => vec![2],
            LawKind::D4 => vec![2],
            LawKind::Unary => vec![0],
            _ => vec![],
        }
    }

    /// Every shape whose pair lists have at most `max_pairs` entries.
    pub fn shapes(self, max_pairs: usize) -> Vec<Vec<usize>> {
        match self {
            LawKind::E6 | LawKind::D1 => {
                let mut out = Vec::new();
                for m in 0..=max_pairs {
                    for r in 1..=m + 1 {
                        if r > max_pairs {
                            continue;
                        }
                        let q = m + 1 - r;
                        if q > max_pairs {
                            continue;
                        }
                        for k in 0..r {
                            out.push(vec![r, k, q]);
                        }
                    }
                }
                out
            }
            LawKind::E10a | LawKind::E10b => (0..=max_pairs).map(|n| vec![n]).collect(),
            LawKind::D4 => (2..=max_pairs).map(|n| vec![n]).collect(),
            // 0: split, 1: merge
            LawKind::Unary => vec![vec![0], vec![1]],
            _ => vec![vec![]],
        }
    }

    /// Number of word metavariables at `shape`.
    pub fn vars(self, shape: &[usize]) -> usize {
        match self {
            LawKind::E1 => 4,
            LawKind::E2 | LawKind::E3 | LawKind::E7a | LawKind::E7b | LawKind::D3 => 6,
            LawKind::E4L | LawKind::E4R | LawKind::E5L | LawKind::E5R | LawKind::E8 => 2,
            LawKind::E9 | LawKind::D2 => 4,
            LawKind::E6 | LawKind::D1 => 2 * (shape[0] - 1 + shape[2]),
            LawKind::E10a | LawKind::E10b | LawKind::D4 => 2 * shape[0],
            LawKind::Unary => 2,
        }
    }

    /// Left and right sides at `shape` with metavariables set to `w`.
    pub fn sides(self, shape: &[usize], w: &[ObjectWord]) -> (Side, Side) {
        assert_eq!(
            w.len(),
            self.vars(shape),
            "{} takes {} words",
            self.name(),
            self.vars(shape)
        );
        let e = ObjectWord::empty();
        let t = |x: Term| Side::Term(x);
        match self {
            LawKind::E1 => {
                let (a, b, c, d) = (&w[0], &w[1], &w[2], &w[3]);
                (
                    t(comp(
                        Term::SeqM(a.clone(), b.clone(), c.clone()),
                        0,
                        Term::SeqM(a.clone(), c.clone(), d.clone()),
                        0,
                    )),
                    t(comp(
                        Term::SeqM(b.clone(), c.clone(), d.clone()),
                        0,
                        Term::SeqM(a.clone(), b.clone(), d.clone()),
                        1,
                    )),
                )
            }
            LawKind::E2 => {
                let (a, a2, b, b2, c, c2) = (&w[0], &w[1], &w[2], &w[3], &w[4], &w[5]);
                (
                    t(comp(
                        Term::ParM(a.clone(), a2.clone(), b.clone(), b2.clone()),
                        0,
                        Term::ParM(cat(a, b), cat(a2, b2), c.clone(), c2.clone()),
                        0,
                    )),
                    t(comp(
                        Term::ParM(b.clone(), b2.clone(), c.clone(), c2.clone()),
                        0,
                        Term::ParM(a.clone(), a2.clone(), cat(b, c), cat(b2, c2)),
                        1,
                    )),
                )
            }
            LawKind::E3 => {
                let (a, b, c, a2, b2, c2) = (&w[0], &w[1], &w[2], &w[3], &w[4], &w[5]);
                let inner = comp(
                    Term::ParM(a.clone(), b.clone(), a2.clone(), b2.clone()),
                    0,
                    Term::SeqM(cat(a, a2), cat(b, b2), cat(c, c2)),
                    0,
                );
                let lhs = Term::inperm(
                    comp(
                        Term::ParM(b.clone(), c.clone(), b2.clone(), c2.clone()),
                        0,
                        inner,
                        2,
                    ),
                    vec![0, 2, 1, 3],
                );
                let rinner = comp(
                    Term::SeqM(a.clone(), b.clone(), c.clone()),
                    0,
                    Term::ParM(a.clone(), c.clone(), a2.clone(), c2.clone()),
                    0,
                );
                let rhs = comp(Term::SeqM(a2.clone(), b2.clone(), c2.clone()), 0, rinner, 2);
                (t(lhs), t(rhs))
            }
            LawKind::E4L => {
                let (a, b) = (&w[0], &w[1]);
                (
                    t(comp(
                        Term::IdSt(a.clone()),
                        0,
                        Term::SeqM(a.clone(), a.clone(), b.clone()),
                        0,
                    )),
                    t(Term::Ident(vec![hom(a, b)])),
                )
            }
            LawKind::E4R => {
                let (a, b) = (&w[0], &w[1]);
                (
                    t(comp(
                        Term::IdSt(b.clone()),
                        0,
                        Term::SeqM(a.clone(), b.clone(), b.clone()),
                        1,
                    )),
                    t(Term::Ident(vec![hom(a, b)])),
                )
            }
            LawKind::E5L => {
                let (a, a2) = (&w[0], &w[1]);
                (
                    t(comp(
                        Term::IdSt(e.clone()),
                        0,
                        Term::ParM(e.clone(), e.clone(), a.clone(), a2.clone()),
                        0,
                    )),
                    t(Term::Ident(vec![hom(a, a2)])),
                )
            }
            LawKind::E5R => {
                let (a, a2) = (&w[0], &w[1]);
                (
                    t(comp(
                        Term::IdSt(e.clone()),
                        0,
                        Term::ParM(a.clone(), a2.clone(), e.clone(), e.clone()),
                        1,
                    )),
                    t(Term::Ident(vec![hom(a, a2)])),
                )
            }
            LawKind::E6 => {
                let (r, k, q) = (shape[0], shape[1], shape[2]);
                let flat = pairs_of(w);
                let (outer, inner) = nest(&flat, r, k, q);
                (
                    t(comp(Term::Split(outer), k, Term::Split(inner), 0)),
                    t(Term::Split(flat)),
                )
            }
            LawKind::D1 => {
                let (r, k, q) = (shape[0], shape[1], shape[2]);
                let flat = pairs_of(w);
                let (outer, inner) = nest(&flat, r, k, q);
                (
                    t(comp(Term::Merge(inner), 0, Term::Merge(outer), k)),
                    t(Term::Merge(flat)),
                )
            }
            LawKind::E7a => {
                let (a, a2, b, b2, c, c2) = (&w[0], &w[1], &w[2], &w[3], &w[4], &w[5]);
                (
                    t(comp(
                        Term::Split(vec![hom(b, b2), hom(c, c2)]),
                        0,
                        Term::ParM(a.clone(), a2.clone(), b.clone(), b2.clone()),
                        1,
                    )),
                    t(comp(
                        Term::ParM(a.clone(), a2.clone(), cat(b, c), cat(b2, c2)),
                        0,
                        Term::Split(vec![hom(&cat(a, b), &cat(a2, b2)), hom(c, c2)]),
                        0,
                    )),
                )
            }
            LawKind::E7b => {
                let (a, a2, b, b2, c, c2) = (&w[0], &w[1], &w[2], &w[3], &w[4], &w[5]);
                (
                    t(comp(
                        Term::Split(vec![hom(a, a2), hom(b, b2)]),
                        1,
                        Term::ParM(b.clone(), b2.clone(), c.clone(), c2.clone()),
                        0,
                    )),
                    t(comp(
                        Term::ParM(cat(a, b), cat(a2, b2), c.clone(), c2.clone()),
                        0,
                        Term::Split(vec![hom(a, a2), hom(&cat(b, c), &cat(b2, c2))]),
                        0,
                    )),
                )
            }
            LawKind::E8 => {
                let (a, b) = (&w[0], &w[1]);
                (
                    t(comp(
                        Term::IdSt(a.clone()),
                        0,
                        comp(
                            Term::IdSt(b.clone()),
                            0,
                            Term::ParM(a.clone(), a.clone(), b.clone(), b.clone()),
                            1,
                        ),
                        0,
                    )),
                    t(Term::IdSt(cat(a, b))),
                )
            }
            LawKind::E9 => {
                let (a, a2, b, b2) = (&w[0], &w[1], &w[2], &w[3]);
                (
                    t(Term::outperm(
                        Term::Split(vec![hom(a, a2), hom(b, b2)]),
                        vec![1, 0],
                    )),
                    t(comp(
                        conj(a, a2, b, b2),
                        0,
                        Term::Split(vec![hom(b, b2), hom(a, a2)]),
                        0,
                    )),
                )
            }
            LawKind::D2 => {
                let (a, a2, b, b2) = (&w[0], &w[1], &w[2], &w[3]);
                (
                    t(comp(
                        Term::inperm(Term::Merge(vec![hom(b, b2), hom(a, a2)]), vec![1, 0]),
                        0,
                        conj(b, b2, a, a2),
                        0,
                    )),
                    t(Term::Merge(vec![hom(a, a2), hom(b, b2)])),
                )
            }
            LawKind::D3 => {
                let (a, a2, b, b2, c, c2) = (&w[0], &w[1], &w[2], &w[3], &w[4], &w[5]);
                (
                    t(comp(
                        Term::Merge(vec![hom(b, b2), hom(c, c2)]),
                        0,
                        Term::ParM(a.clone(), a2.clone(), cat(b, c), cat(b2, c2)),
                        1,
                    )),
                    t(comp(
                        Term::ParM(a.clone(), a2.clone(), b.clone(), b2.clone()),
                        0,
                        Term::Merge(vec![hom(&cat(a, b), &cat(a2, b2)), hom(c, c2)]),
                        0,
                    )),
                )
            }
            LawKind::D4 => {
                let n = shape[0];
                let p = pairs_of(w);
                let mut sigma = vec![n - 1];
                sigma.extend(0..n - 1);
                let rest = joined(&p[1..]);
                let mut rotated = p[1..].to_vec();
                rotated.push(p[0].clone());
                (
                    t(Term::outperm(Term::Split(p.clone()), sigma)),
                    t(comp(
                        conj(&p[0].dom, &p[0].cod, &rest.dom, &rest.cod),
                        0,
                        Term::Split(rotated),
                        0,
                    )),
                )
            }
            LawKind::E10a => {
                let p = pairs_of(w);
                (
                    t(comp(Term::Merge(p.clone()), 0, Term::Split(p.clone()), 0)),
                    t(Term::Ident(p)),
                )
            }
            LawKind::E10b => {
                let p = pairs_of(w);
                let j = joined(&p);
                (Side::SplitMerge(p), t(Term::Ident(vec![j])))
            }
            LawKind::Unary => {
                let p = vec![hom(&w[0], &w[1])];
                let node = if shape[0] == 0 {
                    Term::Split(p.clone())
                } else {
                    Term::Merge(p.clone())
                };
                (t(node), t(Term::Ident(p)))
            }
        }
    }
}

impl Law {
    pub fn new(kind: LawKind) -> Law {
        Law {
            kind,
            shape: kind.default_shape(),
        }
    }

    pub fn with_shape(kind: LawKind, shape: Vec<usize>) -> Law {
        Law { kind, shape }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn label(&self) -> String {
        if self.shape.is_empty() {
            self.kind.name().to_string()
        } else {
            let s: Vec<String> = self.shape.iter().map(|x| x.to_string()).collect();
            format!("{}({})", self.kind.name(), s.join(","))
        }
    }

    pub fn vars(&self) -> usize {
        self.kind.vars(&self.shape)
    }

    pub fn sides(&self, words: &[ObjectWord]) -> (Side, Side) {
        self.kind.sides(&self.shape, words)
    }
}

/// The named laws, one representative shape each.
pub fn law_catalogue() -> Vec<Law> {
    LawKind::ALL.iter().map(|k| Law::new(*k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::typecheck;

    fn sig() -> Signature {
        Signature::new().with_object("q").with_object("r")
    }

    fn words() -> Vec<ObjectWord> {
        vec![
            ObjectWord::empty(),
            ObjectWord::of(&["q"]),
            ObjectWord::of(&["r"]),
            ObjectWord::of(&["q", "r"]),
            ObjectWord::of(&["r", "r"]),
        ]
    }

    #[test]
    fn catalogue_names() {
        let names: Vec<&str> = law_catalogue().iter().map(|l| l.name()).collect();
        assert_eq!(
            names,
            vec![
                "E1", "E2", "E3", "E4L", "E4R", "E5L", "E5R", "E6", "E7a", "E7b", "E8", "E9",
                "E10a", "E10b", "D1", "D2", "D3", "D4"
            ]
        );
    }

    #[test]
    fn copy_law_shape() {
        let (l, r) = LawKind::E8.sides(&[], &[ObjectWord::of(&["q"]), ObjectWord::of(&["r"])]);
        let l = l.term().unwrap().clone();
        assert!(matches!(&l, Term::Comp(s, _, _, _) if matches!(**s, Term::IdSt(_))));
        assert_eq!(r, Side::Term(Term::IdSt(ObjectWord::of(&["q", "r"]))));
    }

    #[test]
    fn sides_share_boundaries() {
        let s = sig();
        let ws = words();
        for kind in LawKind::ALL.iter().chain(&[LawKind::Unary]) {
            for shape in kind.shapes(3) {
                let n = kind.vars(&shape);
                for seed in 0..20usize {
                    let w: Vec<ObjectWord> = (0..n)
                        .map(|k| ws[(seed * 7 + k * 3 + k * k) % ws.len()].clone())
                        .collect();
                    let (l, r) = kind.sides(&shape, &w);
                    let (nl, nr) = (l.net(&s).unwrap(), r.net(&s).unwrap());
                    assert_eq!(nl.inputs, nr.inputs, "{} {:?}", kind.name(), shape);
                    assert_eq!(nl.outputs, nr.outputs, "{} {:?}", kind.name(), shape);
                    if let (Some(a), Some(b)) = (l.term(), r.term()) {
                        assert_eq!(typecheck(&s, a).unwrap(), typecheck(&s, b).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn braid_law_is_the_binary_multi_party_braid() {
        let w: Vec<ObjectWord> = words()[1..].to_vec();
        assert_eq!(LawKind::E9.sides(&[], &w), LawKind::D4.sides(&[2], &w));
    }
}
