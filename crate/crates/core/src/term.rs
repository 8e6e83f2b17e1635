//! Diagram-with-holes terms, their typechecker and polycategorical composition.

use std::fmt;

use crate::error::{Error, Result};
use crate::signature::{HomType, Name, ObjectWord, PolyType, Signature};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum BaseTerm {
    Id(ObjectWord),
    Gen(Name),
    Braid(ObjectWord, ObjectWord),
    /// `Compose(f, g)` is `f` followed by `g`.
    Compose(Box<BaseTerm>, Box<BaseTerm>),
    Tensor(Box<BaseTerm>, Box<BaseTerm>),
}

impl BaseTerm {
    pub fn gen(name: &str) -> Self {
        BaseTerm::Gen(name.into())
    }

    pub fn then(self, g: BaseTerm) -> Self {
        BaseTerm::Compose(Box::new(self), Box::new(g))
    }

    pub fn tensor(self, g: BaseTerm) -> Self {
        BaseTerm::Tensor(Box::new(self), Box::new(g))
    }

    pub fn size(&self) -> usize {
        match self {
            BaseTerm::Compose(f, g) | BaseTerm::Tensor(f, g) => 1 + f.size() + g.size(),
            _ => 1,
        }
    }

    pub fn gen_names(&self, out: &mut Vec<Name>) {
        match self {
            BaseTerm::Gen(n) => {
                if !out.contains(n) {
                    out.push(n.clone())
                }
            }
            BaseTerm::Compose(f, g) | BaseTerm::Tensor(f, g) => {
                f.gen_names(out);
                g.gen_names(out);
            }
            _ => {}
        }
    }
}

pub type Perm = Vec<usize>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    PGen(Name),
    Lift(BaseTerm),
    SeqM(ObjectWord, ObjectWord, ObjectWord),
    ParM(ObjectWord, ObjectWord, ObjectWord, ObjectWord),
    IdSt(ObjectWord),
    Split(Vec<HomType>),
    Merge(Vec<HomType>),
    /// Identity polymorphism on a list of hom types.
    Ident(Vec<HomType>),
    InPerm(Box<Term>, Perm),
    OutPerm(Box<Term>, Perm),
    Comp(Box<Term>, usize, Box<Term>, usize),
}

impl Term {
    pub fn comp(s: Term, i: usize, t: Term, j: usize) -> Term {
        Term::Comp(Box::new(s), i, Box::new(t), j)
    }

    pub fn inperm(t: Term, p: Perm) -> Term {
        Term::InPerm(Box::new(t), p)
    }

    pub fn outperm(t: Term, p: Perm) -> Term {
        Term::OutPerm(Box::new(t), p)
    }

    pub fn lift(f: BaseTerm) -> Term {
        Term::Lift(f)
    }

    pub fn pgen(name: &str) -> Term {
        Term::PGen(name.into())
    }

    /// Number of constructor nodes, base terms counted as one.
    pub fn size(&self) -> usize {
        match self {
            Term::InPerm(t, _) | Term::OutPerm(t, _) => 1 + t.size(),
            Term::Comp(s, _, t, _) => 1 + s.size() + t.size(),
            _ => 1,
        }
    }

    /// Names of base and poly generators mentioned, in first-occurrence order.
    pub fn gen_names(&self) -> (Vec<Name>, Vec<Name>) {
        fn go(t: &Term, base: &mut Vec<Name>, poly: &mut Vec<Name>) {
            match t {
                Term::PGen(n) => {
                    if !poly.contains(n) {
                        poly.push(n.clone())
                    }
                }
                Term::Lift(f) => f.gen_names(base),
                Term::InPerm(t, _) | Term::OutPerm(t, _) => go(t, base, poly),
                Term::Comp(s, _, t, _) => {
                    go(s, base, poly);
                    go(t, base, poly);
                }
                _ => {}
            }
        }
        let mut b = Vec::new();
        let mut p = Vec::new();
        go(self, &mut b, &mut p);
        (b, p)
    }
}

pub fn base_typecheck(sig: &Signature, f: &BaseTerm) -> Result<(ObjectWord, ObjectWord)> {
    match f {
        BaseTerm::Id(w) => {
            sig.check_word(w)?;
            Ok((w.clone(), w.clone()))
        }
        BaseTerm::Gen(n) => sig
            .gen(n)
            .map(|g| (g.dom.clone(), g.cod.clone()))
            .ok_or_else(|| Error::UndeclaredName(n.to_string())),
        BaseTerm::Braid(u, v) => {
            sig.check_word(u)?;
            sig.check_word(v)?;
            Ok((u.concat(v), v.concat(u)))
        }
        BaseTerm::Compose(f, g) => {
            let (a, b) = base_typecheck(sig, f)?;
            let (b2, c) = base_typecheck(sig, g)?;
            if b != b2 {
                return Err(Error::TypeMismatch(format!(
                    "composing {a} -> {b} with {b2} -> {c}"
                )));
            }
            Ok((a, c))
        }
        BaseTerm::Tensor(f, g) => {
            let (a, b) = base_typecheck(sig, f)?;
            let (c, d) = base_typecheck(sig, g)?;
            Ok((a.concat(&c), b.concat(&d)))
        }
    }
}

pub fn check_perm(p: &[usize], len: usize) -> Result<()> {
    let bad = || Error::PermutationLengthMismatch {
        len,
        perm: p.to_vec(),
    };
    if p.len() != len {
        return Err(bad());
    }
    let mut seen = vec![false; len];
    for &k in p {
        if k >= len || seen[k] {
            return Err(bad());
        }
        seen[k] = true;
    }
    Ok(())
}

/// `out[p[k]] = list[k]`.
pub fn apply_perm<T: Clone>(list: &[T], p: &[usize]) -> Vec<T> {
    let mut out: Vec<Option<T>> = vec![None; list.len()];
    for (k, x) in list.iter().enumerate() {
        out[p[k]] = Some(x.clone());
    }
    out.into_iter().map(|x| x.unwrap()).collect()
}

pub fn invert_perm(p: &[usize]) -> Perm {
    let mut inv = vec![0; p.len()];
    for (k, &v) in p.iter().enumerate() {
        inv[v] = k;
    }
    inv
}

pub fn split_type(pairs: &[HomType]) -> PolyType {
    let dom = ObjectWord::concat_all(pairs.iter().map(|h| &h.dom));
    let cod = ObjectWord::concat_all(pairs.iter().map(|h| &h.cod));
    PolyType::new(vec![HomType::new(dom, cod)], pairs.to_vec())
}

/// Typing rule for `Comp(s, i, t, j)`.
pub fn comp_type(s: &PolyType, i: usize, t: &PolyType, j: usize) -> Result<PolyType> {
    if i >= s.outputs.len() {
        return Err(Error::ArityOutOfRange {
            index: i,
            len: s.outputs.len(),
        });
    }
    if j >= t.inputs.len() {
        return Err(Error::ArityOutOfRange {
            index: j,
            len: t.inputs.len(),
        });
    }
    if s.outputs[i] != t.inputs[j] {
        return Err(Error::CompositionTypeMismatch {
            i,
            j,
            expected: s.outputs[i].to_string(),
            found: t.inputs[j].to_string(),
        });
    }
    let mut inputs = t.inputs[..j].to_vec();
    inputs.extend(s.inputs.iter().cloned());
    inputs.extend(t.inputs[j + 1..].iter().cloned());
    let mut outputs = s.outputs[..i].to_vec();
    outputs.extend(t.outputs.iter().cloned());
    outputs.extend(s.outputs[i + 1..].iter().cloned());
    Ok(PolyType::new(inputs, outputs))
}

fn check_pairs(sig: &Signature, pairs: &[HomType]) -> Result<()> {
    for h in pairs {
        sig.check_word(&h.dom)?;
        sig.check_word(&h.cod)?;
    }
    Ok(())
}

pub fn typecheck(sig: &Signature, t: &Term) -> Result<PolyType> {
    let h = |a: &ObjectWord, b: &ObjectWord| HomType::new(a.clone(), b.clone());
    match t {
        Term::PGen(n) => sig
            .polygen(n)
            .map(|g| g.ty.clone())
            .ok_or_else(|| Error::UndeclaredName(n.to_string())),
        Term::Lift(f) => {
            let (a, b) = base_typecheck(sig, f)?;
            Ok(PolyType::new(vec![], vec![HomType::new(a, b)]))
        }
        Term::SeqM(a, b, c) => {
            for w in [a, b, c] {
                sig.check_word(w)?;
            }
            Ok(PolyType::new(vec![h(a, b), h(b, c)], vec![h(a, c)]))
        }
        Term::ParM(a, a2, b, b2) => {
            for w in [a, a2, b, b2] {
                sig.check_word(w)?;
            }
            Ok(PolyType::new(
                vec![h(a, a2), h(b, b2)],
                vec![HomType::new(a.concat(b), a2.concat(b2))],
            ))
        }
        Term::IdSt(a) => {
            sig.check_word(a)?;
            Ok(PolyType::new(vec![], vec![h(a, a)]))
        }
        Term::Split(p) => {
            check_pairs(sig, p)?;
            Ok(split_type(p))
        }
        Term::Merge(p) => {
            check_pairs(sig, p)?;
            let s = split_type(p);
            Ok(PolyType::new(s.outputs, s.inputs))
        }
        Term::Ident(p) => {
            check_pairs(sig, p)?;
            Ok(PolyType::new(p.clone(), p.clone()))
        }
        Term::InPerm(t, p) => {
            let ty = typecheck(sig, t)?;
            check_perm(p, ty.inputs.len())?;
            Ok(PolyType::new(apply_perm(&ty.inputs, p), ty.outputs))
        }
        Term::OutPerm(t, p) => {
            let ty = typecheck(sig, t)?;
            check_perm(p, ty.outputs.len())?;
            Ok(PolyType::new(ty.inputs, apply_perm(&ty.outputs, p)))
        }
        Term::Comp(s, i, t, j) => {
            let a = typecheck(sig, s)?;
            let b = typecheck(sig, t)?;
            comp_type(&a, *i, &b, *j)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TypedTerm {
    pub term: Term,
    pub ty: PolyType,
}

impl TypedTerm {
    pub fn new(sig: &Signature, term: Term) -> Result<Self> {
        let ty = typecheck(sig, &term)?;
        Ok(TypedTerm { term, ty })
    }
}

impl fmt::Display for TypedTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {}", self.term, self.ty)
    }
}

pub fn compose(s: &TypedTerm, i: usize, t: &TypedTerm, j: usize) -> Result<TypedTerm> {
    let ty = comp_type(&s.ty, i, &t.ty, j)?;
    Ok(TypedTerm {
        term: Term::comp(s.term.clone(), i, t.term.clone(), j),
        ty,
    })
}

fn last_output(t: &TypedTerm) -> Result<usize> {
    t.ty.outputs
        .len()
        .checked_sub(1)
        .ok_or(Error::ArityOutOfRange { index: 0, len: 0 })
}

/// Plugs two boxes into the first two holes of a structural morphism.
fn plug_two(
    sig: &Signature,
    s: &TypedTerm,
    i: usize,
    t: &TypedTerm,
    j: usize,
    structural: Term,
) -> Result<TypedTerm> {
    let m = TypedTerm::new(sig, structural)?;
    let x = compose(s, i, &m, 0)?;
    compose(t, j, &x, s.ty.inputs.len())
}

pub fn seq_box(sig: &Signature, s: &TypedTerm, t: &TypedTerm) -> Result<TypedTerm> {
    seq_box_at(sig, s, last_output(s)?, t, last_output(t)?)
}

pub fn seq_box_at(
    sig: &Signature,
    s: &TypedTerm,
    i: usize,
    t: &TypedTerm,
    j: usize,
) -> Result<TypedTerm> {
    let hs = s.ty.outputs.get(i).ok_or(Error::ArityOutOfRange {
        index: i,
        len: s.ty.outputs.len(),
    })?;
    let ht = t.ty.outputs.get(j).ok_or(Error::ArityOutOfRange {
        index: j,
        len: t.ty.outputs.len(),
    })?;
    if hs.cod != ht.dom {
        return Err(Error::TypeMismatch(format!(
            "sequencing {hs} with {ht}: middle objects differ"
        )));
    }
    let m = Term::SeqM(hs.dom.clone(), hs.cod.clone(), ht.cod.clone());
    plug_two(sig, s, i, t, j, m)
}

pub fn par_box(sig: &Signature, s: &TypedTerm, t: &TypedTerm) -> Result<TypedTerm> {
    par_box_at(sig, s, last_output(s)?, t, last_output(t)?)
}

pub fn par_box_at(
    sig: &Signature,
    s: &TypedTerm,
    i: usize,
    t: &TypedTerm,
    j: usize,
) -> Result<TypedTerm> {
    let hs = s.ty.outputs.get(i).ok_or(Error::ArityOutOfRange {
        index: i,
        len: s.ty.outputs.len(),
    })?;
    let ht = t.ty.outputs.get(j).ok_or(Error::ArityOutOfRange {
        index: j,
        len: t.ty.outputs.len(),
    })?;
    let m = Term::ParM(
        hs.dom.clone(),
        hs.cod.clone(),
        ht.dom.clone(),
        ht.cod.clone(),
    );
    plug_two(sig, s, i, t, j, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &[&str]) -> ObjectWord {
        ObjectWord::of(s)
    }

    fn sig() -> Signature {
        Signature::new()
            .with_object("q")
            .with_object("r")
            .with_object("s")
            .with_object("u")
            .with_gen("f", w(&["q"]), w(&["r"]))
            .with_gen("g", w(&["r"]), w(&["s"]))
            .with_gen("k", w(&["s"]), w(&["u"]))
    }

    fn hom(a: &[&str], b: &[&str]) -> HomType {
        HomType::new(w(a), w(b))
    }

    #[test]
    fn base_typing() {
        let s = sig();
        assert_eq!(
            base_typecheck(&s, &BaseTerm::Id(w(&["q", "r"]))).unwrap(),
            (w(&["q", "r"]), w(&["q", "r"]))
        );
        assert_eq!(
            base_typecheck(&s, &BaseTerm::Braid(w(&["q"]), w(&["r"]))).unwrap(),
            (w(&["q", "r"]), w(&["r", "q"]))
        );
        assert_eq!(
            base_typecheck(&s, &BaseTerm::gen("f").then(BaseTerm::gen("g"))).unwrap(),
            (w(&["q"]), w(&["s"]))
        );
        assert!(matches!(
            base_typecheck(&s, &BaseTerm::gen("g").then(BaseTerm::gen("f"))),
            Err(Error::TypeMismatch(_))
        ));
        assert!(matches!(
            base_typecheck(&s, &BaseTerm::gen("zz")),
            Err(Error::UndeclaredName(_))
        ));
    }

    #[test]
    fn structural_typing() {
        let s = sig();
        let t = typecheck(&s, &Term::SeqM(w(&["q"]), w(&["r"]), w(&["s"]))).unwrap();
        assert_eq!(t.to_string(), "[q,r],[r,s] -> [q,s]");
        let t = typecheck(
            &s,
            &Term::comp(
                Term::IdSt(w(&["q"])),
                0,
                Term::SeqM(w(&["q"]), w(&["q"]), w(&["q"])),
                0,
            ),
        )
        .unwrap();
        assert_eq!(t.to_string(), "[q,q] -> [q,q]");
        let t = typecheck(
            &s,
            &Term::Split(vec![hom(&["q"], &["r"]), hom(&["s"], &["u"])]),
        )
        .unwrap();
        assert_eq!(t.to_string(), "[q s,r u] -> [q,r],[s,u]");
    }

    #[test]
    fn compose_examples() {
        let s = sig();
        let f = TypedTerm::new(&s, Term::lift(BaseTerm::gen("f"))).unwrap();
        let m = TypedTerm::new(&s, Term::SeqM(w(&["q"]), w(&["r"]), w(&["s"]))).unwrap();
        assert_eq!(
            compose(&f, 0, &m, 0).unwrap().ty.to_string(),
            "[r,s] -> [q,s]"
        );
        let id = TypedTerm::new(&s, Term::IdSt(w(&["q"]))).unwrap();
        let sp = TypedTerm::new(&s, Term::Split(vec![hom(&["q"], &["q"])])).unwrap();
        assert_eq!(
            compose(&id, 0, &sp, 0).unwrap().ty.to_string(),
            ". -> [q,q]"
        );
        assert!(matches!(
            compose(&f, 0, &m, 1),
            Err(Error::CompositionTypeMismatch { .. })
        ));
        assert!(matches!(
            compose(&f, 1, &m, 0),
            Err(Error::ArityOutOfRange { .. })
        ));
    }

    #[test]
    fn box_composition() {
        let s = sig();
        let f = TypedTerm::new(&s, Term::lift(BaseTerm::gen("f"))).unwrap();
        let g = TypedTerm::new(&s, Term::lift(BaseTerm::gen("g"))).unwrap();
        assert_eq!(seq_box(&s, &f, &g).unwrap().ty.to_string(), ". -> [q,s]");
        assert!(seq_box(&s, &g, &f).is_err());
        let k = TypedTerm::new(&s, Term::lift(BaseTerm::gen("k"))).unwrap();
        assert_eq!(
            par_box(&s, &f, &k).unwrap().ty.to_string(),
            ". -> [q s,r u]"
        );
        let bad = Signature::new().with_object("q");
        let idq = TypedTerm::new(&s, Term::IdSt(w(&["r"]))).unwrap();
        assert!(matches!(
            par_box(&bad, &idq, &idq),
            Err(Error::UndeclaredObject(_))
        ));
    }

    #[test]
    fn permutation_checks() {
        let s = sig();
        let sp = Term::Split(vec![hom(&["q"], &["r"]), hom(&["s"], &["u"])]);
        let t = typecheck(&s, &Term::outperm(sp.clone(), vec![1, 0])).unwrap();
        assert_eq!(t.to_string(), "[q s,r u] -> [s,u],[q,r]");
        assert!(matches!(
            typecheck(&s, &Term::outperm(sp.clone(), vec![0])),
            Err(Error::PermutationLengthMismatch { .. })
        ));
        assert!(matches!(
            typecheck(&s, &Term::outperm(sp, vec![0, 0])),
            Err(Error::PermutationLengthMismatch { .. })
        ));
    }
}
