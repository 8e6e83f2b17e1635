//! Seeded random terms and bounded enumeration of states.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::laws::RuleSet;
use crate::net::Net;
use crate::signature::{HomType, Name, ObjectWord, Signature};
use crate::term::{compose, BaseTerm, Term, TypedTerm};

/// Number of atoms in a term.
pub fn atom_count(t: &Term) -> usize {
    match t {
        Term::InPerm(t, _) | Term::OutPerm(t, _) => atom_count(t),
        Term::Comp(s, _, t, _) => atom_count(s) + atom_count(t),
        _ => 1,
    }
}

/// A base morphism `u -> v` built letter by letter from identities and generators.
pub fn letterwise(
    sig: &Signature,
    u: &ObjectWord,
    v: &ObjectWord,
    pick: &mut dyn FnMut(&[BaseTerm]) -> usize,
) -> Option<BaseTerm> {
    if u.len() != v.len() {
        return None;
    }
    let mut out: Option<BaseTerm> = None;
    for (a, b) in u.0.iter().zip(&v.0) {
        let opts = letter_maps(sig, a, b);
        if opts.is_empty() {
            return None;
        }
        let f = opts[pick(&opts)].clone();
        out = Some(match out {
            None => f,
            Some(g) => g.tensor(f),
        });
    }
    Some(out.unwrap_or(BaseTerm::Id(ObjectWord::empty())))
}

fn letter_maps(sig: &Signature, a: &Name, b: &Name) -> Vec<BaseTerm> {
    let mut opts = Vec::new();
    if a == b {
        opts.push(BaseTerm::Id(ObjectWord(vec![a.clone()])));
    }
    for g in &sig.gens {
        if g.dom.0 == [a.clone()] && g.cod.0 == [b.clone()] {
            opts.push(BaseTerm::Gen(g.name.clone()));
        }
    }
    opts
}

/// Every letterwise base morphism `u -> v`, plus braids when `v` is a rotation of `u`.
pub fn base_terms_between(sig: &Signature, u: &ObjectWord, v: &ObjectWord) -> Vec<BaseTerm> {
    let mut out: Vec<BaseTerm> = vec![];
    if u.len() == v.len() {
        let mut partial: Vec<Option<BaseTerm>> = vec![None];
        for (a, b) in u.0.iter().zip(&v.0) {
            let opts = letter_maps(sig, a, b);
            let mut next = Vec::new();
            for p in &partial {
                for f in &opts {
                    next.push(Some(match p {
                        None => f.clone(),
                        Some(g) => g.clone().tensor(f.clone()),
                    }));
                }
            }
            partial = next;
        }
        out.extend(
            partial
                .into_iter()
                .map(|p| p.unwrap_or(BaseTerm::Id(ObjectWord::empty()))),
        );
    }
    for k in 1..u.len() {
        let (a, b) = (u.slice(0, k), u.slice(k, u.len()));
        if b.concat(&a) == *v && a != b {
            out.push(BaseTerm::Braid(a, b));
        }
    }
    out
}

pub struct TermGen<'a> {
    sig: &'a Signature,
    pub rng: ChaCha8Rng,
    /// Longest word used for fresh atoms.
    pub max_word: usize,
    /// Allow atoms with several outputs.
    pub multi_output: bool,
}

impl<'a> TermGen<'a> {
    pub fn new(sig: &'a Signature, seed: u64) -> Self {
        TermGen {
            sig,
            rng: ChaCha8Rng::seed_from_u64(seed),
            max_word: 1,
            multi_output: true,
        }
    }

    pub fn word(&mut self, max: usize) -> ObjectWord {
        let objs = self.sig.object_names();
        let n = self.rng.gen_range(0..=max);
        ObjectWord(
            (0..n)
                .map(|_| objs.choose(&mut self.rng).unwrap().clone())
                .collect(),
        )
    }

    fn cut(&mut self, w: &ObjectWord) -> (ObjectWord, ObjectWord) {
        let k = self.rng.gen_range(0..=w.len());
        (w.slice(0, k), w.slice(k, w.len()))
    }

    fn lift_between(&mut self, u: &ObjectWord, v: &ObjectWord) -> Option<Term> {
        let opts = base_terms_between(self.sig, u, v);
        opts.choose(&mut self.rng).cloned().map(Term::Lift)
    }

    /// A random atom with some input of type `h`, and the index of that input.
    fn atom_with_input(&mut self, h: &HomType) -> (Term, usize) {
        let m = self.max_word;
        match self.rng.gen_range(0..5) {
            0 => (Term::SeqM(h.dom.clone(), h.cod.clone(), self.word(m)), 0),
            1 => (Term::SeqM(self.word(m), h.dom.clone(), h.cod.clone()), 1),
            2 => {
                let (b, b2) = (self.word(m), self.word(m));
                (Term::ParM(h.dom.clone(), h.cod.clone(), b, b2), 0)
            }
            3 => {
                let (a, a2) = (self.word(m), self.word(m));
                (Term::ParM(a, a2, h.dom.clone(), h.cod.clone()), 1)
            }
            _ if self.multi_output => {
                let (u1, u2) = self.cut(&h.dom);
                let (v1, v2) = self.cut(&h.cod);
                (
                    Term::Split(vec![HomType::new(u1, v1), HomType::new(u2, v2)]),
                    0,
                )
            }
            _ => {
                let other = HomType::new(self.word(m), self.word(m));
                if self.rng.gen() {
                    return (Term::Merge(vec![h.clone(), other]), 0);
                }
                (Term::Merge(vec![other, h.clone()]), 1)
            }
        }
    }

    /// A random single-output atom whose output has type `h`.
    fn atom_with_output(&mut self, h: &HomType) -> Term {
        let m = self.max_word;
        loop {
            match self.rng.gen_range(0..5) {
                0 => return Term::SeqM(h.dom.clone(), self.word(m), h.cod.clone()),
                1 => {
                    let (a, b) = self.cut(&h.dom);
                    let (a2, b2) = self.cut(&h.cod);
                    return Term::ParM(a, a2, b, b2);
                }
                2 => {
                    let (a, b) = self.cut(&h.dom);
                    let (a2, b2) = self.cut(&h.cod);
                    return Term::Merge(vec![HomType::new(a, a2), HomType::new(b, b2)]);
                }
                3 if h.dom == h.cod => return Term::IdSt(h.dom.clone()),
                _ => {
                    if let Some(t) = self.lift_between(&h.dom, &h.cod) {
                        return t;
                    }
                }
            }
        }
    }

    /// A random first atom.
    pub fn atom(&mut self) -> Term {
        let m = self.max_word;
        let h = HomType::new(self.word(m), self.word(m));
        if self.rng.gen_bool(0.3) {
            self.atom_with_output(&h)
        } else {
            self.atom_with_input(&h).0
        }
    }

    /// A random term with between one and `max_atoms` atoms.
    pub fn term(&mut self, max_atoms: usize) -> TypedTerm {
        let target = self.rng.gen_range(1..=max_atoms.max(1));
        let first = self.atom();
        let mut cur = TypedTerm::new(self.sig, first).expect("fresh atoms typecheck");
        self.grow(&mut cur, target, true);
        cur
    }

    fn grow(&mut self, cur: &mut TypedTerm, target: usize, outward: bool) {
        let mut stall = 0;
        while atom_count(&cur.term) < target && stall < 50 {
            stall += 1;
            let down = outward
                && !cur.ty.outputs.is_empty()
                && (cur.ty.inputs.is_empty() || self.rng.gen());
            let next = if down {
                let i = self.rng.gen_range(0..cur.ty.outputs.len());
                let h = cur.ty.outputs[i].clone();
                let (a, j) = self.atom_with_input(&h);
                TypedTerm::new(self.sig, a).and_then(|a| compose(cur, i, &a, j))
            } else if !cur.ty.inputs.is_empty() {
                let j = self.rng.gen_range(0..cur.ty.inputs.len());
                let h = cur.ty.inputs[j].clone();
                let a = self.atom_with_output(&h);
                TypedTerm::new(self.sig, a).and_then(|a| compose(&a, 0, cur, j))
            } else {
                continue;
            };
            if let Ok(n) = next {
                *cur = n;
            }
        }
    }

    /// A random term with exactly one output.
    pub fn single_output(&mut self, max_atoms: usize) -> TypedTerm {
        let saved = self.multi_output;
        self.multi_output = false;
        let target = self.rng.gen_range(1..=max_atoms.max(1));
        let h = HomType::new(self.word(self.max_word), self.word(self.max_word));
        let first = self.atom_with_output(&h);
        let mut cur = TypedTerm::new(self.sig, first).expect("fresh atoms typecheck");
        self.grow(&mut cur, target, true);
        self.multi_output = saved;
        cur
    }

    /// A single-output term whose output is `h`, grown only at its inputs.
    pub fn single_output_into(&mut self, h: &HomType, max_atoms: usize) -> TypedTerm {
        let target = self.rng.gen_range(1..=max_atoms.max(1));
        let first = self.atom_with_output(h);
        let mut cur = TypedTerm::new(self.sig, first).expect("fresh atoms typecheck");
        self.grow(&mut cur, target, false);
        cur
    }

    /// `(s, t, j)` with `s` single-output and its output plugging into input `j` of `t`;
    /// the composite has at most `max_atoms` atoms.
    pub fn composable_pair(&mut self, max_atoms: usize) -> (TypedTerm, TypedTerm, usize) {
        loop {
            let budget = max_atoms.max(2);
            let t = self.single_output(budget - 1);
            if t.ty.inputs.is_empty() {
                continue;
            }
            let j = self.rng.gen_range(0..t.ty.inputs.len());
            let left = budget - atom_count(&t.term);
            let s = self.single_output_into(&t.ty.inputs[j].clone(), left.max(1));
            return (s, t, j);
        }
    }

    /// A term of the same type reached by a short random walk of core rewrites.
    pub fn rewrite_walk(&mut self, t: &TypedTerm, steps: usize) -> Result<TypedTerm> {
        let rules = RuleSet::default_moves();
        let mut net = Net::from_term(self.sig, &t.term)?.canonicalize();
        let mut best = t.clone();
        for _ in 0..steps {
            let mut moves = Vec::new();
            for a in 0..net.nodes.len() {
                for r in &rules.rules {
                    moves.extend(r.apply_at(self.sig, &net, a));
                }
            }
            let Some(n) = moves.choose(&mut self.rng).cloned() else {
                break;
            };
            net = n.canonicalize();
            if let Ok(term) = net.to_term() {
                if let Ok(tt) = TypedTerm::new(self.sig, term) {
                    if tt.ty == t.ty {
                        best = tt;
                    }
                }
            }
        }
        Ok(best)
    }

    /// Replaces one lifted generator by another of the same type, when there is one.
    pub fn swap_generator(&mut self, t: &TypedTerm) -> Option<TypedTerm> {
        let sig = self.sig;
        let mut sites = Vec::new();
        collect_gen_sites(&t.term, &mut vec![], &mut sites);
        sites.shuffle(&mut self.rng);
        for (path, name) in sites {
            let g = sig.gen(&name)?;
            let alts: Vec<Name> = sig
                .gens
                .iter()
                .filter(|h| h.name != name && h.dom == g.dom && h.cod == g.cod)
                .map(|h| h.name.clone())
                .collect();
            if let Some(alt) = alts.choose(&mut self.rng) {
                let term = replace_gen(&t.term, &path, alt);
                return TypedTerm::new(sig, term).ok();
            }
        }
        None
    }
}

fn collect_base_sites(f: &BaseTerm, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, Name)>) {
    match f {
        BaseTerm::Gen(n) => out.push((path.clone(), n.clone())),
        BaseTerm::Compose(a, b) | BaseTerm::Tensor(a, b) => {
            path.push(0);
            collect_base_sites(a, path, out);
            path.pop();
            path.push(1);
            collect_base_sites(b, path, out);
            path.pop();
        }
        _ => {}
    }
}

fn collect_gen_sites(t: &Term, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, Name)>) {
    match t {
        Term::Lift(f) => collect_base_sites(f, path, out),
        Term::InPerm(s, _) | Term::OutPerm(s, _) => {
            path.push(0);
            collect_gen_sites(s, path, out);
            path.pop();
        }
        Term::Comp(s, _, u, _) => {
            path.push(0);
            collect_gen_sites(s, path, out);
            path.pop();
            path.push(1);
            collect_gen_sites(u, path, out);
            path.pop();
        }
        _ => {}
    }
}

fn replace_base(f: &BaseTerm, path: &[usize], name: &Name) -> BaseTerm {
    match (f, path.split_first()) {
        (BaseTerm::Gen(_), None) => BaseTerm::Gen(name.clone()),
        (BaseTerm::Compose(a, b), Some((k, rest))) => {
            if *k == 0 {
                BaseTerm::Compose(Box::new(replace_base(a, rest, name)), b.clone())
            } else {
                BaseTerm::Compose(a.clone(), Box::new(replace_base(b, rest, name)))
            }
        }
        (BaseTerm::Tensor(a, b), Some((k, rest))) => {
            if *k == 0 {
                BaseTerm::Tensor(Box::new(replace_base(a, rest, name)), b.clone())
            } else {
                BaseTerm::Tensor(a.clone(), Box::new(replace_base(b, rest, name)))
            }
        }
        _ => f.clone(),
    }
}

fn replace_gen(t: &Term, path: &[usize], name: &Name) -> Term {
    match t {
        Term::Lift(f) => Term::Lift(replace_base(f, path, name)),
        Term::InPerm(s, p) => Term::InPerm(Box::new(replace_gen(s, &path[1..], name)), p.clone()),
        Term::OutPerm(s, p) => Term::OutPerm(Box::new(replace_gen(s, &path[1..], name)), p.clone()),
        Term::Comp(s, i, u, j) => {
            if path[0] == 0 {
                Term::Comp(
                    Box::new(replace_gen(s, &path[1..], name)),
                    *i,
                    u.clone(),
                    *j,
                )
            } else {
                Term::Comp(
                    s.clone(),
                    *i,
                    Box::new(replace_gen(u, &path[1..], name)),
                    *j,
                )
            }
        }
        _ => t.clone(),
    }
}

/// Every state `∅ -> h` with at most `max_atoms` atoms built from identity states, lifts of
/// letterwise base morphisms, and sequential or parallel composition through words up to
/// `mid_len` letters.
pub fn enumerate_states(
    sig: &Signature,
    h: &HomType,
    max_atoms: usize,
    mid_len: usize,
) -> Vec<Term> {
    let mids = crate::laws::words_up_to(sig, mid_len);
    let mut memo = std::collections::HashMap::new();
    states_rec(sig, h, max_atoms, &mids, &mut memo)
}

type Memo = std::collections::HashMap<(HomType, usize), Vec<Term>>;

fn states_rec(
    sig: &Signature,
    h: &HomType,
    n: usize,
    mids: &[ObjectWord],
    memo: &mut Memo,
) -> Vec<Term> {
    if n == 0 {
        return vec![];
    }
    if let Some(v) = memo.get(&(h.clone(), n)) {
        return v.clone();
    }
    let mut out: Vec<Term> = Vec::new();
    if h.dom == h.cod {
        out.push(Term::IdSt(h.dom.clone()));
    }
    out.extend(
        base_terms_between(sig, &h.dom, &h.cod)
            .into_iter()
            .map(Term::Lift),
    );
    if n >= 3 {
        for w in mids {
            for k in 1..n - 1 {
                let left = states_rec(sig, &HomType::new(h.dom.clone(), w.clone()), k, mids, memo);
                if left.is_empty() {
                    continue;
                }
                let right = states_rec(
                    sig,
                    &HomType::new(w.clone(), h.cod.clone()),
                    n - 1 - k,
                    mids,
                    memo,
                );
                for a in &left {
                    for b in &right {
                        if atom_count(a) + atom_count(b) + 1 > n {
                            continue;
                        }
                        let seq = Term::SeqM(h.dom.clone(), w.clone(), h.cod.clone());
                        out.push(Term::comp(
                            b.clone(),
                            0,
                            Term::comp(a.clone(), 0, seq, 0),
                            0,
                        ));
                    }
                }
            }
        }
        for i in 1..h.dom.len() {
            for j in 1..h.cod.len() {
                let (a, b) = (h.dom.slice(0, i), h.dom.slice(i, h.dom.len()));
                let (a2, b2) = (h.cod.slice(0, j), h.cod.slice(j, h.cod.len()));
                for k in 1..n - 1 {
                    let left = states_rec(sig, &HomType::new(a.clone(), a2.clone()), k, mids, memo);
                    if left.is_empty() {
                        continue;
                    }
                    let right = states_rec(
                        sig,
                        &HomType::new(b.clone(), b2.clone()),
                        n - 1 - k,
                        mids,
                        memo,
                    );
                    for x in &left {
                        for y in &right {
                            if atom_count(x) + atom_count(y) + 1 > n {
                                continue;
                            }
                            let par = Term::ParM(a.clone(), a2.clone(), b.clone(), b2.clone());
                            out.push(Term::comp(
                                y.clone(),
                                0,
                                Term::comp(x.clone(), 0, par, 0),
                                0,
                            ));
                        }
                    }
                }
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    out.retain(|t| seen.insert(t.clone()));
    memo.insert((h.clone(), n), out.clone());
    out
}
