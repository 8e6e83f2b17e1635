//! Sparse evaluation of nets on letter legs.
//!
//! A wire of hom type `[a, b]` carries one leg per letter of `rev a` followed by `b`.
//! Structural atoms only identify legs, so they are folded into a union-find; generator
//! atoms become sparse tensors on their legs and are contracted along shared classes.
//! A class that closes into a loop contributes its dimension as a scalar factor.

use std::collections::HashMap;

use super::assign::ModelAssignment;
use super::dense::{eval_atom, wiring, Wiring};
use super::matrix::{digits, flatten, Matrix, Semiring};
use crate::error::{Error, Result};
use crate::net::{Net, Src};
use crate::signature::Signature;
use crate::term::{base_typecheck, BaseTerm, Term, TypedTerm};

type Class = u32;

struct Tensor<S> {
    labels: Vec<Class>,
    dims: Vec<usize>,
    entries: Vec<(Vec<u32>, S)>,
}

impl<S: Semiring> Tensor<S> {
    fn scalar(v: S) -> Self {
        Tensor {
            labels: vec![],
            dims: vec![],
            entries: vec![(vec![], v)],
        }
    }

    /// Merges repeated labels by keeping only the diagonal.
    fn diagonal(self) -> Self {
        let mut labels = Vec::new();
        let mut dims = Vec::new();
        let mut first: Vec<usize> = Vec::new();
        for (k, l) in self.labels.iter().enumerate() {
            match labels.iter().position(|x| x == l) {
                Some(p) => first.push(p),
                None => {
                    first.push(labels.len());
                    labels.push(*l);
                    dims.push(self.dims[k]);
                }
            }
        }
        if labels.len() == self.labels.len() {
            return self;
        }
        let mut acc: HashMap<Vec<u32>, S> = HashMap::new();
        'entry: for (idx, v) in self.entries {
            let mut out = vec![u32::MAX; labels.len()];
            for (k, x) in idx.into_iter().enumerate() {
                let slot = &mut out[first[k]];
                if *slot != u32::MAX && *slot != x {
                    continue 'entry;
                }
                *slot = x;
            }
            let e = acc.entry(out).or_insert(S::zero());
            *e = e.add(v);
        }
        Tensor {
            labels,
            dims,
            entries: acc.into_iter().filter(|(_, v)| !v.is_zero()).collect(),
        }
    }

    fn contract(self, other: Tensor<S>) -> Tensor<S> {
        let shared: Vec<(usize, usize)> = self
            .labels
            .iter()
            .enumerate()
            .filter_map(|(a, l)| other.labels.iter().position(|x| x == l).map(|b| (a, b)))
            .collect();
        let keep_a: Vec<usize> = (0..self.labels.len())
            .filter(|a| !shared.iter().any(|(x, _)| x == a))
            .collect();
        let keep_b: Vec<usize> = (0..other.labels.len())
            .filter(|b| !shared.iter().any(|(_, y)| y == b))
            .collect();
        let mut index: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
        for (k, (idx, _)) in other.entries.iter().enumerate() {
            let key: Vec<u32> = shared.iter().map(|(_, b)| idx[*b]).collect();
            index.entry(key).or_default().push(k);
        }
        let mut acc: HashMap<Vec<u32>, S> = HashMap::new();
        for (ia, va) in &self.entries {
            let key: Vec<u32> = shared.iter().map(|(a, _)| ia[*a]).collect();
            if let Some(ks) = index.get(&key) {
                for &k in ks {
                    let (ib, vb) = &other.entries[k];
                    let mut out: Vec<u32> = keep_a.iter().map(|a| ia[*a]).collect();
                    out.extend(keep_b.iter().map(|b| ib[*b]));
                    let v = va.mul(*vb);
                    let slot = acc.entry(out).or_insert(S::zero());
                    *slot = slot.add(v);
                }
            }
        }
        let mut labels: Vec<Class> = keep_a.iter().map(|a| self.labels[*a]).collect();
        labels.extend(keep_b.iter().map(|b| other.labels[*b]));
        let mut dims: Vec<usize> = keep_a.iter().map(|a| self.dims[*a]).collect();
        dims.extend(keep_b.iter().map(|b| other.dims[*b]));
        Tensor {
            labels,
            dims,
            entries: acc.into_iter().filter(|(_, v)| !v.is_zero()).collect(),
        }
    }
}

/// A matrix stored by its nonzero entries, sorted by `(row, col)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<S> {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, S)>,
}

impl<S: Semiring> SparseMatrix<S> {
    pub fn from_dense(m: &Matrix<S>) -> Self {
        let mut entries = Vec::new();
        for r in 0..m.rows {
            for c in 0..m.cols {
                let v = m.get(r, c);
                if !v.is_zero() {
                    entries.push((r, c, v));
                }
            }
        }
        SparseMatrix {
            rows: m.rows,
            cols: m.cols,
            entries,
        }
    }

    pub fn to_dense(&self) -> Result<Matrix<S>> {
        let n = self
            .rows
            .checked_mul(self.cols)
            .filter(|n| (*n as u128) <= super::assign::ceiling())
            .ok_or(Error::ExplosionGuard {
                count: self.rows as u128 * self.cols as u128,
                ceiling: super::assign::ceiling(),
            })?;
        let mut m = Matrix::from_vec(self.rows, self.cols, vec![S::zero(); n])?;
        for &(r, c, v) in &self.entries {
            m.set(r, c, v);
        }
        Ok(m)
    }

    /// First `(row, col)` where the matrices differ beyond `tol`, absent entries being zero.
    pub fn first_difference(&self, other: &Self, tol: f64) -> Option<(usize, usize)> {
        if self.rows != other.rows || self.cols != other.cols {
            return Some((0, 0));
        }
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let ka = a.get(i).map(|e| (e.0, e.1));
            let kb = b.get(j).map(|e| (e.0, e.1));
            let (key, va, vb) = match (ka, kb) {
                (Some(x), Some(y)) if x == y => {
                    i += 1;
                    j += 1;
                    (x, a[i - 1].2, b[j - 1].2)
                }
                (Some(x), Some(y)) if x < y => {
                    i += 1;
                    (x, a[i - 1].2, S::zero())
                }
                (Some(x), None) => {
                    i += 1;
                    (x, a[i - 1].2, S::zero())
                }
                (_, Some(y)) => {
                    j += 1;
                    (y, S::zero(), b[j - 1].2)
                }
                (None, None) => unreachable!(),
            };
            if !va.close(vb, tol) {
                return Some(key);
            }
        }
        None
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.first_difference(other, tol).is_none()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// For a base term built from identities and braids, the domain letter each codomain
/// letter comes from.
pub fn base_perm(f: &BaseTerm) -> Option<Vec<usize>> {
    match f {
        BaseTerm::Id(w) => Some((0..w.len()).collect()),
        BaseTerm::Gen(_) => None,
        BaseTerm::Braid(u, v) => Some((u.len()..u.len() + v.len()).chain(0..u.len()).collect()),
        BaseTerm::Compose(a, b) => {
            let (pa, pb) = (base_perm(a)?, base_perm(b)?);
            Some(pb.into_iter().map(|j| pa[j]).collect())
        }
        BaseTerm::Tensor(a, b) => {
            let pa = base_perm(a)?;
            let n = pa.len();
            Some(
                pa.into_iter()
                    .chain(base_perm(b)?.into_iter().map(|j| j + n))
                    .collect(),
            )
        }
    }
}

fn lift_wiring<S: Semiring>(
    sig: &Signature,
    f: &BaseTerm,
    m: &ModelAssignment<S>,
) -> Result<Option<Wiring>> {
    let Some(p) = base_perm(f) else {
        return Ok(None);
    };
    let (dom, _) = base_typecheck(sig, f)?;
    let legs: Vec<(u32, usize)> = m
        .letter_dims(&dom)?
        .into_iter()
        .enumerate()
        .map(|(k, d)| (k as u32, d))
        .collect();
    let mut outs: Vec<(u32, usize)> = legs.iter().rev().cloned().collect();
    outs.extend(p.iter().map(|j| legs[*j]));
    Ok(Some(Wiring { ins: vec![], outs }))
}

struct Legs {
    parent: Vec<usize>,
    dim: Vec<usize>,
}

impl Legs {
    fn add(&mut self, d: usize) -> usize {
        self.parent.push(self.parent.len());
        self.dim.push(d);
        self.parent.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> Result<()> {
        let (ra, rb) = (self.find(a), self.find(b));
        if self.dim[ra] != self.dim[rb] {
            return Err(Error::ShapeMismatch(
                "wires of different dimension meet".into(),
            ));
        }
        self.parent[ra] = rb;
        Ok(())
    }
}

fn hom_letter_dims<S: Semiring>(
    m: &ModelAssignment<S>,
    h: &crate::signature::HomType,
) -> Result<Vec<usize>> {
    let mut d = m.letter_dims(&h.dom)?;
    d.reverse();
    d.extend(m.letter_dims(&h.cod)?);
    Ok(d)
}

/// The matrix of a net, stored sparsely.
pub fn eval_net<S: Semiring>(
    sig: &Signature,
    net: &Net,
    m: &ModelAssignment<S>,
) -> Result<SparseMatrix<S>> {
    let mut legs = Legs {
        parent: vec![],
        dim: vec![],
    };
    let mut wire: HashMap<Src, Vec<usize>> = HashMap::new();
    for (k, h) in net.inputs.iter().enumerate() {
        let ls = hom_letter_dims(m, h)?
            .into_iter()
            .map(|d| legs.add(d))
            .collect();
        wire.insert(Src::In(k), ls);
    }
    for (n, node) in net.nodes.iter().enumerate() {
        for (p, h) in node.outs.iter().enumerate() {
            let ls = hom_letter_dims(m, h)?
                .into_iter()
                .map(|d| legs.add(d))
                .collect();
            wire.insert(Src::Out(n, p), ls);
        }
    }
    let mut gens: Vec<(Vec<usize>, Vec<usize>, Vec<(Vec<u32>, S)>)> = Vec::new();
    for (n, node) in net.nodes.iter().enumerate() {
        let ins: Vec<usize> = node.src.iter().flat_map(|s| wire[s].clone()).collect();
        let outs: Vec<usize> = (0..node.outs.len())
            .flat_map(|p| wire[&Src::Out(n, p)].clone())
            .collect();
        let w = match &node.atom {
            Term::Lift(f) => lift_wiring(sig, f, m)?,
            t => wiring(t, m)?,
        };
        match w {
            Some(w) => {
                if w.ins.len() != ins.len() || w.outs.len() != outs.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "{} has mismatched legs",
                        node.atom
                    )));
                }
                let mut seen: HashMap<u32, usize> = HashMap::new();
                let all = w.ins.iter().zip(&ins).chain(w.outs.iter().zip(&outs));
                for ((label, _), leg) in all {
                    match seen.remove(label) {
                        Some(other) => legs.union(other, *leg)?,
                        None => {
                            seen.insert(*label, *leg);
                        }
                    }
                }
            }
            None => {
                let mat = eval_atom(sig, &node.atom, m)?;
                let in_d: Vec<usize> = ins.iter().map(|l| legs.dim[*l]).collect();
                let out_d: Vec<usize> = outs.iter().map(|l| legs.dim[*l]).collect();
                let rows: usize = out_d.iter().product();
                let cols: usize = in_d.iter().product();
                if (mat.rows, mat.cols) != (rows, cols) {
                    return Err(Error::ShapeMismatch(format!(
                        "{} evaluates to {}x{}, expected {rows}x{cols}",
                        node.atom, mat.rows, mat.cols
                    )));
                }
                let mut e = Vec::new();
                for r in 0..rows {
                    for c in 0..cols {
                        let v = mat.get(r, c);
                        if !v.is_zero() {
                            let mut idx: Vec<u32> =
                                digits(c, &in_d).into_iter().map(|x| x as u32).collect();
                            idx.extend(digits(r, &out_d).into_iter().map(|x| x as u32));
                            e.push((idx, v));
                        }
                    }
                }
                gens.push((ins, outs, e));
            }
        }
    }

    let row_legs: Vec<usize> = net.out_src.iter().flat_map(|s| wire[s].clone()).collect();
    let col_legs: Vec<usize> = (0..net.inputs.len())
        .flat_map(|k| wire[&Src::In(k)].clone())
        .collect();
    let class_of = |legs: &mut Legs, l: usize| legs.find(l) as Class;
    let row_cls: Vec<Class> = row_legs.iter().map(|l| class_of(&mut legs, *l)).collect();
    let col_cls: Vec<Class> = col_legs.iter().map(|l| class_of(&mut legs, *l)).collect();
    let mut pending: Vec<Tensor<S>> = Vec::new();
    for (ins, outs, entries) in gens {
        let all: Vec<usize> = ins.into_iter().chain(outs).collect();
        let t = Tensor {
            labels: all.iter().map(|l| class_of(&mut legs, *l)).collect(),
            dims: all.iter().map(|l| legs.dim[*l]).collect(),
            entries,
        };
        pending.push(t.diagonal());
    }

    // loops touch neither the boundary nor a generator
    let mut used: Vec<bool> = vec![false; legs.parent.len()];
    for c in row_cls
        .iter()
        .chain(&col_cls)
        .chain(pending.iter().flat_map(|t| &t.labels))
    {
        used[*c as usize] = true;
    }
    let mut scalar = S::one();
    for l in 0..legs.parent.len() {
        let r = legs.find(l);
        if r == l && !used[r] {
            let d = (0..legs.dim[r]).fold(S::zero(), |acc, _| acc.add(S::one()));
            scalar = scalar.mul(d);
        }
    }

    let mut cur = Tensor::scalar(scalar);
    while !pending.is_empty() {
        let best = (0..pending.len())
            .max_by_key(|&k| {
                let shared = pending[k]
                    .labels
                    .iter()
                    .filter(|l| cur.labels.contains(l))
                    .count();
                (
                    shared,
                    std::cmp::Reverse(pending[k].entries.len()),
                    std::cmp::Reverse(k),
                )
            })
            .unwrap();
        let t = pending.swap_remove(best);
        cur = cur.contract(t).diagonal();
    }

    let out_d: Vec<usize> = row_legs.iter().map(|l| legs.dim[*l]).collect();
    let in_d: Vec<usize> = col_legs.iter().map(|l| legs.dim[*l]).collect();
    let rows = super::assign::checked_product(out_d.iter().cloned())?;
    let cols = super::assign::checked_product(in_d.iter().cloned())?;
    let mut free: Vec<Class> = Vec::new();
    for c in row_cls.iter().chain(&col_cls) {
        if !cur.labels.contains(c) && !free.contains(c) {
            free.push(*c);
        }
    }
    let free_d: Vec<usize> = free.iter().map(|c| legs.dim[*c as usize]).collect();
    let spread: u128 = free_d.iter().map(|d| *d as u128).product();
    let count = spread * cur.entries.len() as u128;
    if count > super::assign::ceiling() {
        return Err(Error::ExplosionGuard {
            count,
            ceiling: super::assign::ceiling(),
        });
    }
    let locate = |c: &Class, fixed: &[u32], fv: &[usize]| -> usize {
        match cur.labels.iter().position(|x| x == c) {
            Some(p) => fixed[p] as usize,
            None => fv[free.iter().position(|x| x == c).unwrap()],
        }
    };
    let mut entries: Vec<(usize, usize, S)> = Vec::with_capacity(count as usize);
    for (idx, v) in &cur.entries {
        for k in 0..spread as usize {
            let fv = digits(k, &free_d);
            let ri: Vec<usize> = row_cls.iter().map(|c| locate(c, idx, &fv)).collect();
            let ci: Vec<usize> = col_cls.iter().map(|c| locate(c, idx, &fv)).collect();
            entries.push((flatten(&ri, &out_d), flatten(&ci, &in_d), *v));
        }
    }
    entries.sort_by_key(|a| (a.0, a.1));
    Ok(SparseMatrix {
        rows,
        cols,
        entries,
    })
}

/// Sparse counterpart of `eval_poly`.
pub fn eval_sparse<S: Semiring>(
    sig: &Signature,
    t: &TypedTerm,
    m: &ModelAssignment<S>,
) -> Result<SparseMatrix<S>> {
    let net = Net::from_term(sig, &t.term)?;
    if net.inputs != t.ty.inputs || net.outputs != t.ty.outputs {
        return Err(Error::TypeMismatch(
            "typed term carries a stale type".into(),
        ));
    }
    eval_net(sig, &net, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matmodel::eval_poly;
    use crate::signature::{HomType, ObjectWord};
    use crate::term::{BaseTerm, Term};
    use rand::{Rng, SeedableRng};

    fn w(s: &[&str]) -> ObjectWord {
        ObjectWord::of(s)
    }

    fn sig() -> Signature {
        Signature::new()
            .with_object("q")
            .with_object("r")
            .with_gen("f", w(&["q"]), w(&["r"]))
            .with_gen("g", w(&["r"]), w(&["q", "q"]))
    }

    #[test]
    fn agrees_with_dense_route() {
        let s = sig();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let h = |a: &[&str], b: &[&str]| HomType::new(w(a), w(b));
        let terms = vec![
            Term::comp(
                Term::lift(BaseTerm::gen("f")),
                0,
                Term::SeqM(w(&["q"]), w(&["r"]), w(&["q", "q"])),
                0,
            ),
            Term::comp(
                Term::Split(vec![h(&["q"], &["r"]), h(&["r"], &["q"])]),
                1,
                Term::ParM(w(&["r"]), w(&["q"]), w(&["q"]), w(&["r"])),
                0,
            ),
            Term::inperm(
                Term::comp(
                    Term::IdSt(w(&["r", "q"])),
                    0,
                    Term::SeqM(w(&["r", "q"]), w(&["r", "q"]), w(&[])),
                    0,
                ),
                vec![0],
            ),
            Term::Ident(vec![h(&["q"], &["r"]), h(&[], &["q"])]),
            Term::lift(BaseTerm::Braid(w(&["q", "r"]), w(&["q"]))),
            Term::comp(
                Term::lift(BaseTerm::Compose(
                    Box::new(BaseTerm::Braid(w(&["q"]), w(&["r"]))),
                    Box::new(BaseTerm::Tensor(
                        Box::new(BaseTerm::Id(w(&["r"]))),
                        Box::new(BaseTerm::gen("f")),
                    )),
                )),
                0,
                Term::SeqM(w(&["q", "r"]), w(&["r", "r"]), w(&["q"])),
                0,
            ),
            Term::comp(
                Term::Merge(vec![h(&["q"], &["q"]), h(&["r"], &["r"])]),
                0,
                Term::Split(vec![h(&["q"], &["q"]), h(&["r"], &["r"])]),
                0,
            ),
        ];
        for t in terms {
            let tt = TypedTerm::new(&s, t).unwrap();
            for _ in 0..10 {
                let (dq, dr) = (rng.gen_range(1..4), rng.gen_range(1..4));
                let mut m = ModelAssignment::<f64>::with_dims(&[("q", dq), ("r", dr)]);
                let mf =
                    Matrix::from_vec(dr, dq, (0..dq * dr).map(|_| rng.gen()).collect()).unwrap();
                let mg =
                    Matrix::from_vec(dq * dq, dr, (0..dq * dq * dr).map(|_| rng.gen()).collect())
                        .unwrap();
                m.gens.insert("f".into(), mf);
                m.gens.insert("g".into(), mg);
                let dense = eval_poly(&s, &tt, &m).unwrap();
                let sparse = eval_sparse(&s, &tt, &m).unwrap();
                assert!(
                    sparse.approx_eq(&SparseMatrix::from_dense(&dense), 1e-12),
                    "{tt}"
                );
                assert!(sparse.to_dense().unwrap().approx_eq(&dense, 1e-12));
            }
        }
    }

    #[test]
    fn closed_loop_counts_dimension() {
        use crate::net::Node;
        let s = sig();
        let e = ObjectWord::empty();
        let q = w(&["q"]);
        let hq = HomType::new(q.clone(), q.clone());
        let parts = vec![
            HomType::new(e.clone(), q.clone()),
            HomType::new(q.clone(), e.clone()),
        ];
        let net = Net {
            inputs: vec![],
            outputs: vec![HomType::new(e.clone(), e.clone())],
            nodes: vec![
                Node {
                    atom: Term::IdSt(q.clone()),
                    ins: vec![],
                    outs: vec![hq.clone()],
                    src: vec![],
                },
                Node {
                    atom: Term::Split(parts.clone()),
                    ins: vec![hq],
                    outs: parts.clone(),
                    src: vec![Src::Out(0, 0)],
                },
                Node {
                    atom: Term::SeqM(e.clone(), q.clone(), e.clone()),
                    ins: parts,
                    outs: vec![HomType::new(e.clone(), e)],
                    src: vec![Src::Out(1, 0), Src::Out(1, 1)],
                },
            ],
            out_src: vec![Src::Out(2, 0)],
        };
        for d in 1..4 {
            let m = ModelAssignment::<f64>::with_dims(&[("q", d), ("r", 1)]);
            let v = eval_net(&s, &net, &m).unwrap();
            assert_eq!(v.entries, vec![(0, 0, d as f64)]);
        }
    }

    #[test]
    fn difference_is_located() {
        let a = SparseMatrix::from_dense(&Matrix::<bool>::identity(3));
        let mut b = a.clone();
        b.entries.remove(1);
        assert_eq!(a.first_difference(&b, 0.0), Some((1, 1)));
        assert_eq!(a.first_difference(&a, 0.0), None);
    }
}
