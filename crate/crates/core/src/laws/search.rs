//! Bidirectional breadth-first search between nets, and the three-valued equality test.

use std::collections::{HashMap, VecDeque};

use rand::SeedableRng;

use super::rewrite::{normalize_net, rewrite_step_net, RuleSet, TraceStep};
use super::Law;
use crate::error::{Error, Result};
use crate::matmodel::sparse::{eval_net, SparseMatrix};
use crate::matmodel::{random_assignment, AssignmentSpace, ModelAssignment, Semiring};
use crate::net::{Net, Sink};
use crate::signature::{HomType, Name, ObjectWord, Signature};
use crate::term::{Term, TypedTerm};

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub found: bool,
    pub trace: Vec<TraceStep>,
    /// Canonical nets from start to goal, one more than the trace.
    pub chain: Vec<Net>,
    /// States generated on both sides.
    pub states: usize,
}

type Path = Vec<(TraceStep, Net)>;

struct Side {
    parent: HashMap<String, Option<(String, TraceStep)>>,
    nets: HashMap<String, Net>,
    normal: HashMap<String, (String, Path)>,
    frontier: VecDeque<(String, Net)>,
}

impl Side {
    fn new() -> Side {
        Side {
            parent: HashMap::new(),
            nets: HashMap::new(),
            normal: HashMap::new(),
            frontier: VecDeque::new(),
        }
    }

    /// Steps from the root to `key`, each with the net it produced.
    fn path(&self, key: &str) -> Path {
        let mut out = Vec::new();
        let mut k = key.to_string();
        while let Some(Some((p, step))) = self.parent.get(&k) {
            out.push((step.clone(), self.nets[&k].clone()));
            k = p.clone();
        }
        out.reverse();
        out
    }
}

fn flip(steps: Vec<TraceStep>) -> Vec<TraceStep> {
    steps
        .into_iter()
        .rev()
        .map(|s| TraceStep {
            reverse: !s.reverse,
            ..s
        })
        .collect()
}

/// Reverses a path rooted at `root`: the result leads from its end back to `root`.
fn unwind(root: &Net, path: Path) -> Path {
    let mut before: Vec<Net> = vec![root.clone()];
    before.extend(path.iter().map(|(_, n)| n.clone()));
    path.into_iter()
        .enumerate()
        .rev()
        .map(|(i, (s, _))| {
            (
                TraceStep {
                    reverse: !s.reverse,
                    ..s
                },
                before[i].clone(),
            )
        })
        .collect()
}

/// Normalization that keeps every intermediate net.
fn normal_path(sig: &Signature, net: &Net, rules: &RuleSet, fuel: usize) -> (Net, Path) {
    let mut cur = net.canonicalize();
    let mut out = Vec::new();
    for _ in 0..fuel {
        match rewrite_step_net(sig, &cur, rules) {
            Some((n, step)) => {
                cur = n.canonicalize();
                out.push((step, cur.clone()));
            }
            None => break,
        }
    }
    (cur, out)
}

/// Checks that consecutive nets of `chain` are related by the named step, applied forward
/// or, for a reversed step, by the forward rule from the later net back to the earlier one.
pub fn verify_chain(
    sig: &Signature,
    chain: &[Net],
    trace: &[TraceStep],
    sets: &[&RuleSet],
) -> bool {
    if chain.len() != trace.len() + 1 {
        return false;
    }
    let related = |from: &Net, to: &Net, label: &str, reverse: bool| {
        let target = to.canonicalize().key();
        let from = from.canonicalize();
        sets.iter().flat_map(|s| &s.rules).any(|r| {
            r.law.label() == label
                && r.reverse == reverse
                && (0..from.nodes.len()).any(|a| {
                    r.apply_at(sig, &from, a)
                        .iter()
                        .any(|n| n.canonicalize().key() == target)
                })
        })
    };
    trace.iter().enumerate().all(|(i, st)| {
        let (a, b) = (&chain[i], &chain[i + 1]);
        related(a, b, &st.law, st.reverse) || related(b, a, &st.law, !st.reverse)
    })
}

/// Pair lists of every split and merge in the nets.
fn pair_hints(nets: &[&Net]) -> Vec<Vec<HomType>> {
    let mut out: Vec<Vec<HomType>> = Vec::new();
    for n in nets {
        for node in &n.nodes {
            if let Term::Split(p) | Term::Merge(p) = &node.atom {
                if p.len() >= 2 && !out.contains(p) {
                    out.push(p.clone());
                }
            }
        }
    }
    out
}

fn joined(p: &[HomType]) -> HomType {
    HomType::new(
        ObjectWord::concat_all(p.iter().map(|h| &h.dom)),
        ObjectWord::concat_all(p.iter().map(|h| &h.cod)),
    )
}

fn moves(
    sig: &Signature,
    net: &Net,
    rules: &RuleSet,
    hints: &[Vec<HomType>],
) -> Vec<(Net, TraceStep)> {
    let mut out = Vec::new();
    for anchor in 0..net.nodes.len() {
        for rule in &rules.rules {
            for n in rule.apply_at(sig, net, anchor) {
                out.push((
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
    // split-then-merge inserted on a boundary wire
    let (_, in_c) = net.consumers();
    let nn = net.nodes.len();
    for p in hints {
        let j = joined(p);
        let gadget = Net::split_then_merge(p);
        let label = format!("E10b({})", p.len());
        for (k, h) in net.outputs.iter().enumerate() {
            if *h == j {
                out.push((
                    net.insert_on_wire(Sink::Out(k), &gadget),
                    TraceStep {
                        law: label.clone(),
                        reverse: true,
                        position: nn + k,
                    },
                ));
            }
        }
        for (k, h) in net.inputs.iter().enumerate() {
            if *h == j {
                if let Some(sink) = in_c[k] {
                    out.push((
                        net.insert_on_wire(sink, &gadget),
                        TraceStep {
                            law: label.clone(),
                            reverse: true,
                            position: nn + net.outputs.len() + k,
                        },
                    ));
                }
            }
        }
    }
    out
}

/// Searches for a chain of rewrites joining `start` and `goal`, generating at most `fuel`
/// states. Two states meet when their nets agree or their normal forms do.
pub fn search(
    sig: &Signature,
    start: &Net,
    goal: &Net,
    rules: &RuleSet,
    normal: &RuleSet,
    fuel: usize,
) -> SearchOutcome {
    let hints = pair_hints(&[start, goal]);
    let mut sides = [Side::new(), Side::new()];
    let mut states = 0;
    let seed = |side: &mut Side, n: &Net| {
        let c = n.canonicalize();
        let k = c.key();
        side.parent.insert(k.clone(), None);
        side.frontier.push_back((k, c));
    };
    seed(&mut sides[0], start);
    seed(&mut sides[1], goal);

    let root = [start.canonicalize(), goal.canonicalize()];
    // registers a state; returns the full path from start to goal when the sides meet
    let visit = |sides: &mut [Side; 2], s: usize, key: &str, net: &Net| -> Option<Path> {
        let o = 1 - s;
        let join = |mine: Path, theirs: Path| {
            if s == 0 {
                [mine, unwind(&root[1], theirs)].concat()
            } else {
                [theirs, unwind(&root[1], mine)].concat()
            }
        };
        if sides[o].parent.contains_key(key) {
            return Some(join(sides[s].path(key), sides[o].path(key)));
        }
        let (nf, npath) = normal_path(sig, net, normal, 200);
        let nkey = nf.key();
        if let Some((okey, opath)) = sides[o].normal.get(&nkey).cloned() {
            let mine = [sides[s].path(key), npath].concat();
            let theirs = [sides[o].path(&okey), opath].concat();
            return Some(join(mine, theirs));
        }
        sides[s]
            .normal
            .entry(nkey)
            .or_insert((key.to_string(), npath));
        None
    };
    let done = |path: Path, states: usize| SearchOutcome {
        found: true,
        trace: path.iter().map(|(s, _)| s.clone()).collect(),
        chain: std::iter::once(root[0].clone())
            .chain(path.into_iter().map(|(_, n)| n))
            .collect(),
        states,
    };

    for s in 0..2 {
        let (k, n) = sides[s].frontier[0].clone();
        sides[s].nets.insert(k.clone(), n.clone());
        if let Some(path) = visit(&mut sides, s, &k, &n) {
            return done(path, 2);
        }
    }
    states += 2;

    while states < fuel {
        let s = if sides[0].frontier.is_empty() {
            1
        } else if sides[1].frontier.is_empty() || sides[0].parent.len() <= sides[1].parent.len() {
            0
        } else {
            1
        };
        let Some((key, net)) = sides[s].frontier.pop_front() else {
            break;
        };
        for (next, step) in moves(sig, &net, rules, &hints) {
            let c = next.canonicalize();
            let k = c.key();
            if sides[s].parent.contains_key(&k) {
                continue;
            }
            sides[s].parent.insert(k.clone(), Some((key.clone(), step)));
            sides[s].nets.insert(k.clone(), c.clone());
            states += 1;
            if let Some(path) = visit(&mut sides, s, &k, &c) {
                return done(path, states);
            }
            sides[s].frontier.push_back((k, c));
            if states >= fuel {
                break;
            }
        }
    }
    SearchOutcome {
        found: false,
        trace: vec![],
        chain: vec![],
        states,
    }
}

/// Derives a law instance from the core laws.
pub fn derive(
    sig: &Signature,
    law: &Law,
    words: &[ObjectWord],
    fuel: usize,
) -> Result<SearchOutcome> {
    let (l, r) = law.sides(words);
    let (nl, nr) = (l.net(sig)?, r.net(sig)?);
    Ok(search(
        sig,
        &nl,
        &nr,
        RuleSet::default_moves(),
        RuleSet::core_normalizing(),
        fuel,
    ))
}

#[derive(Clone, Debug)]
pub enum ModelSpec {
    /// Every Boolean assignment of the generators used, dims up to the bound.
    Boolean { dim_bound: usize },
    /// Seeded uniform `[0,1)` entries, dims uniform up to the bound.
    Float {
        dim_bound: usize,
        trials: usize,
        seed: u64,
    },
}

impl ModelSpec {
    pub fn id(&self) -> String {
        match self {
            ModelSpec::Boolean { dim_bound } => format!("bool-d{dim_bound}"),
            ModelSpec::Float {
                dim_bound,
                trials,
                seed,
            } => format!("f64-d{dim_bound}-n{trials}-s{seed}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub model: String,
    /// The assignment in model file format.
    pub assignment: String,
    pub entry: (usize, usize),
    pub left: String,
    pub right: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EqualityVerdict {
    EqualByRewriting(Vec<TraceStep>),
    DistinguishedByModel(Witness),
    Undecided,
}

impl EqualityVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            EqualityVerdict::EqualByRewriting(_) => "equal_by_rewriting",
            EqualityVerdict::DistinguishedByModel(_) => "distinguished_by_model",
            EqualityVerdict::Undecided => "undecided",
        }
    }
}

fn entry_at<S: Semiring>(m: &SparseMatrix<S>, at: (usize, usize)) -> S {
    m.entries
        .binary_search_by(|e| (e.0, e.1).cmp(&at))
        .map(|k| m.entries[k].2)
        .unwrap_or(S::zero())
}

fn compare<S: Semiring>(
    sig: &Signature,
    a: &Net,
    b: &Net,
    m: &ModelAssignment<S>,
    model: &str,
    tol: f64,
) -> Result<Option<Witness>> {
    let (ea, eb) = (eval_net(sig, a, m)?, eval_net(sig, b, m)?);
    Ok(ea.first_difference(&eb, tol).map(|at| Witness {
        model: model.to_string(),
        assignment: m.to_string(),
        entry: at,
        left: entry_at(&ea, at).fmt_entry(),
        right: entry_at(&eb, at).fmt_entry(),
    }))
}

fn used_names(ts: &[&Term]) -> (Vec<Name>, Vec<Name>) {
    let (mut base, mut poly) = (Vec::new(), Vec::new());
    for t in ts {
        let (b, p) = t.gen_names();
        for n in b {
            if !base.contains(&n) {
                base.push(n);
            }
        }
        for n in p {
            if !poly.contains(&n) {
                poly.push(n);
            }
        }
    }
    (base, poly)
}

/// A model assignment separating the two nets, if the spec finds one.
pub fn find_distinction(
    sig: &Signature,
    a: &Net,
    b: &Net,
    names: (&[Name], &[Name]),
    spec: &ModelSpec,
) -> Result<Option<Witness>> {
    match spec {
        ModelSpec::Boolean { dim_bound } => {
            let space = AssignmentSpace::restricted(sig, *dim_bound, names.0, names.1);
            for m in space.enumerate(crate::matmodel::ceiling())? {
                if let Some(w) = compare(sig, a, b, &m, &spec.id(), 0.0)? {
                    return Ok(Some(w));
                }
            }
            Ok(None)
        }
        ModelSpec::Float {
            dim_bound,
            trials,
            seed,
        } => {
            use rand::Rng;
            let space = AssignmentSpace::restricted(sig, *dim_bound, names.0, names.1);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
            for _ in 0..*trials {
                let m = random_assignment(&space, &mut rng, |r| r.gen::<f64>())?;
                if let Some(w) = compare(sig, a, b, &m, &spec.id(), 1e-9)? {
                    return Ok(Some(w));
                }
            }
            Ok(None)
        }
    }
}

/// Equal by rewriting when normal forms agree or the search joins them, distinguished when
/// a model separates them, otherwise undecided.
pub fn decide_equal(
    sig: &Signature,
    s: &TypedTerm,
    t: &TypedTerm,
    models: &[ModelSpec],
    fuel: usize,
) -> Result<EqualityVerdict> {
    if s.ty != t.ty {
        return Err(Error::TypeMismatch(format!("{} versus {}", s.ty, t.ty)));
    }
    let (ns, nt) = (Net::from_term(sig, &s.term)?, Net::from_term(sig, &t.term)?);
    let rules = RuleSet::default_normalizing();
    let (fs, ts, _) = normalize_net(sig, &ns, rules, fuel);
    let (ft, tt, _) = normalize_net(sig, &nt, rules, fuel);
    if fs.key() == ft.key() {
        return Ok(EqualityVerdict::EqualByRewriting([ts, flip(tt)].concat()));
    }
    let (base, poly) = used_names(&[&s.term, &t.term]);
    for spec in models {
        if let Some(w) = find_distinction(sig, &ns, &nt, (&base, &poly), spec)? {
            return Ok(EqualityVerdict::DistinguishedByModel(w));
        }
    }
    let out = search(sig, &fs, &ft, RuleSet::default_moves(), rules, fuel);
    if out.found {
        return Ok(EqualityVerdict::EqualByRewriting(
            [ts, out.trace, flip(tt)].concat(),
        ));
    }
    Ok(EqualityVerdict::Undecided)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::LawKind;
    use crate::term::BaseTerm;

    fn q() -> ObjectWord {
        ObjectWord::of(&["q"])
    }

    fn sig() -> Signature {
        Signature::new()
            .with_object("q")
            .with_gen("f", q(), q())
            .with_gen("g", q(), q())
    }

    #[test]
    fn frobenius_sides_are_joined_by_rewriting() {
        let s = sig();
        let (l, r) = Law::new(LawKind::E7a).sides(&vec![q(); 6]);
        let l = TypedTerm::new(&s, l.term().unwrap().clone()).unwrap();
        let r = TypedTerm::new(&s, r.term().unwrap().clone()).unwrap();
        let v = decide_equal(&s, &l, &r, &[ModelSpec::Boolean { dim_bound: 2 }], 10_000).unwrap();
        assert_eq!(v.tag(), "equal_by_rewriting");
    }

    #[test]
    fn independent_generators_are_distinguished() {
        let s = sig();
        let f = TypedTerm::new(&s, Term::lift(BaseTerm::gen("f"))).unwrap();
        let g = TypedTerm::new(&s, Term::lift(BaseTerm::gen("g"))).unwrap();
        let v = decide_equal(&s, &f, &g, &[ModelSpec::Boolean { dim_bound: 2 }], 1000).unwrap();
        match v {
            EqualityVerdict::DistinguishedByModel(w) => {
                assert_ne!(w.left, w.right);
                assert!(w.assignment.contains("mat f"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reflexivity_has_an_empty_trace() {
        let s = sig();
        let f = TypedTerm::new(&s, Term::lift(BaseTerm::gen("f"))).unwrap();
        assert_eq!(
            decide_equal(&s, &f, &f, &[], 10).unwrap(),
            EqualityVerdict::EqualByRewriting(vec![])
        );
    }

    #[test]
    fn mismatched_types_are_rejected() {
        let s = sig();
        let f = TypedTerm::new(&s, Term::lift(BaseTerm::gen("f"))).unwrap();
        let i = TypedTerm::new(&s, Term::IdSt(ObjectWord::empty())).unwrap();
        assert!(matches!(
            decide_equal(&s, &f, &i, &[], 10),
            Err(Error::TypeMismatch(_))
        ));
    }
}
