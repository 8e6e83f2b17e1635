use super::assign::ModelAssignment;
use super::matrix::{digits, flatten, mat_compose, mat_perm, mat_tensor, Matrix, Semiring};
use crate::error::{Error, Result};
use crate::signature::{HomType, ObjectWord, PolyType, Signature};
use crate::term::{
    apply_perm, base_typecheck, check_perm, comp_type, typecheck, BaseTerm, Term, TypedTerm,
};

pub fn eval_base<S: Semiring>(f: &BaseTerm, m: &ModelAssignment<S>) -> Result<Matrix<S>> {
    match f {
        BaseTerm::Id(w) => Ok(Matrix::identity(m.dim(w)?)),
        BaseTerm::Gen(n) => Ok(m.gen_matrix(n)?.clone()),
        BaseTerm::Braid(u, v) => mat_perm(&[m.dim(u)?, m.dim(v)?], &[1, 0]),
        BaseTerm::Compose(f, g) => mat_compose(&eval_base(g, m)?, &eval_base(f, m)?),
        BaseTerm::Tensor(f, g) => Ok(mat_tensor(&eval_base(f, m)?, &eval_base(g, m)?)),
    }
}

/// Flat index of a multi-index over `dims` read with its factors reversed.
pub fn reversed_flat(flat: usize, dims: &[usize]) -> usize {
    let mut d = digits(flat, dims);
    d.reverse();
    let mut rd = dims.to_vec();
    rd.reverse();
    flatten(&d, &rd)
}

/// Column vector of `F: dom -> cod` laid out on the legs of `[dom, cod]`.
pub fn vectorize<S: Semiring>(f: &Matrix<S>, dom_dims: &[usize]) -> Matrix<S> {
    let mut v = Matrix::zeros(f.rows * f.cols, 1);
    for c in 0..f.cols {
        let rc = reversed_flat(c, dom_dims);
        for r in 0..f.rows {
            v.data[rc * f.rows + r] = f.get(r, c);
        }
    }
    v
}

/// Inverse of [`vectorize`].
pub fn unvectorize<S: Semiring>(v: &[S], dom_dims: &[usize], cod: usize) -> Matrix<S> {
    let dom: usize = dom_dims.iter().product();
    let mut f = Matrix::zeros(cod, dom);
    for c in 0..dom {
        let rc = reversed_flat(c, dom_dims);
        for r in 0..cod {
            f.set(r, c, v[rc * cod + r]);
        }
    }
    f
}

/// A structural morphism as labelled legs; each label occurs exactly twice.
#[derive(Clone, Debug)]
pub struct Wiring {
    pub ins: Vec<(u32, usize)>,
    pub outs: Vec<(u32, usize)>,
}

struct Labeller<'a, S> {
    next: u32,
    m: &'a ModelAssignment<S>,
}

impl<S: Semiring> Labeller<'_, S> {
    fn word(&mut self, w: &ObjectWord) -> Result<Vec<(u32, usize)>> {
        let mut out = Vec::new();
        for d in self.m.letter_dims(w)? {
            out.push((self.next, d));
            self.next += 1;
        }
        Ok(out)
    }
}

fn rev<T: Clone>(v: &[T]) -> Vec<T> {
    v.iter().rev().cloned().collect()
}

fn cat<T: Clone>(parts: &[&[T]]) -> Vec<T> {
    parts.iter().flat_map(|p| p.iter().cloned()).collect()
}

/// Legs of an atomic structural term, or `None` for generators.
pub fn wiring<S: Semiring>(t: &Term, m: &ModelAssignment<S>) -> Result<Option<Wiring>> {
    let mut l = Labeller { next: 0, m };
    let pair_legs = |l: &mut Labeller<S>, p: &[HomType]| -> Result<Vec<(Vec<_>, Vec<_>)>> {
        p.iter()
            .map(|h| Ok((l.word(&h.dom)?, l.word(&h.cod)?)))
            .collect()
    };
    let w = match t {
        Term::SeqM(a, b, c) => {
            let (la, lb, lc) = (l.word(a)?, l.word(b)?, l.word(c)?);
            Wiring {
                ins: cat(&[&rev(&la), &lb, &rev(&lb), &lc]),
                outs: cat(&[&rev(&la), &lc]),
            }
        }
        Term::ParM(a, a2, b, b2) => {
            let (la, la2, lb, lb2) = (l.word(a)?, l.word(a2)?, l.word(b)?, l.word(b2)?);
            Wiring {
                ins: cat(&[&rev(&la), &la2, &rev(&lb), &lb2]),
                outs: cat(&[&rev(&lb), &rev(&la), &la2, &lb2]),
            }
        }
        Term::IdSt(a) => {
            let la = l.word(a)?;
            Wiring {
                ins: vec![],
                outs: cat(&[&rev(&la), &la]),
            }
        }
        Term::Split(p) | Term::Merge(p) => {
            let legs = pair_legs(&mut l, p)?;
            let mut whole = Vec::new();
            for (a, _) in legs.iter().rev() {
                whole.extend(rev(a));
            }
            for (_, b) in &legs {
                whole.extend(b.iter().cloned());
            }
            let mut parts = Vec::new();
            for (a, b) in &legs {
                parts.extend(rev(a));
                parts.extend(b.iter().cloned());
            }
            if matches!(t, Term::Split(_)) {
                Wiring {
                    ins: whole,
                    outs: parts,
                }
            } else {
                Wiring {
                    ins: parts,
                    outs: whole,
                }
            }
        }
        Term::Ident(p) => {
            let legs = pair_legs(&mut l, p)?;
            let mut all = Vec::new();
            for (a, b) in &legs {
                all.extend(rev(a));
                all.extend(b.iter().cloned());
            }
            Wiring {
                ins: all.clone(),
                outs: all,
            }
        }
        _ => return Ok(None),
    };
    Ok(Some(w))
}

impl Wiring {
    /// `(row, col)` of every nonzero entry, each entry being one.
    pub fn entries(&self) -> Vec<(usize, usize)> {
        let mut labels: Vec<(u32, usize)> = Vec::new();
        for &(l, d) in self.ins.iter().chain(&self.outs) {
            if !labels.iter().any(|(x, _)| *x == l) {
                labels.push((l, d));
            }
        }
        let ldims: Vec<usize> = labels.iter().map(|(_, d)| *d).collect();
        let slot = |l: u32| labels.iter().position(|(x, _)| *x == l).unwrap();
        let in_slots: Vec<usize> = self.ins.iter().map(|(l, _)| slot(*l)).collect();
        let out_slots: Vec<usize> = self.outs.iter().map(|(l, _)| slot(*l)).collect();
        let in_dims: Vec<usize> = self.ins.iter().map(|(_, d)| *d).collect();
        let out_dims: Vec<usize> = self.outs.iter().map(|(_, d)| *d).collect();
        let n: usize = ldims.iter().product();
        let mut out = Vec::with_capacity(n);
        for flat in 0..n {
            let v = digits(flat, &ldims);
            let ri: Vec<usize> = out_slots.iter().map(|s| v[*s]).collect();
            let ci: Vec<usize> = in_slots.iter().map(|s| v[*s]).collect();
            out.push((flatten(&ri, &out_dims), flatten(&ci, &in_dims)));
        }
        out
    }

    pub fn shape(&self) -> (usize, usize) {
        (
            self.outs.iter().map(|(_, d)| d).product(),
            self.ins.iter().map(|(_, d)| d).product(),
        )
    }

    pub fn matrix<S: Semiring>(&self) -> Matrix<S> {
        let (r, c) = self.shape();
        let mut m = Matrix::zeros(r, c);
        for (i, j) in self.entries() {
            m.set(i, j, S::one());
        }
        m
    }
}

/// Matrix of a lifted base term, the domain laid out letter by letter.
pub fn eval_lift<S: Semiring>(
    sig: &Signature,
    f: &BaseTerm,
    m: &ModelAssignment<S>,
) -> Result<Matrix<S>> {
    let (dom, _) = base_typecheck(sig, f)?;
    let e = eval_base(f, m)?;
    let dd = m.letter_dims(&dom)?;
    if dd.iter().product::<usize>() != e.cols {
        return Err(Error::ShapeMismatch(format!(
            "lifted matrix has {} columns",
            e.cols
        )));
    }
    Ok(vectorize(&e, &dd))
}

/// Matrix of an atomic term: a generator, a lift or a structural morphism.
pub fn eval_atom<S: Semiring>(
    sig: &Signature,
    t: &Term,
    m: &ModelAssignment<S>,
) -> Result<Matrix<S>> {
    match t {
        Term::PGen(n) => Ok(m.polygen_matrix(n)?.clone()),
        Term::Lift(f) => eval_lift(sig, f, m),
        _ => match wiring(t, m)? {
            Some(w) => Ok(w.matrix()),
            None => Err(Error::TypeMismatch(format!("{t} is not atomic"))),
        },
    }
}

/// Dense evaluation: atoms are matrices, composites contract along the plugged hom.
pub fn eval_poly<S: Semiring>(
    sig: &Signature,
    t: &TypedTerm,
    m: &ModelAssignment<S>,
) -> Result<Matrix<S>> {
    let (mat, ty) = eval_term(sig, &t.term, m)?;
    if ty != t.ty {
        return Err(Error::TypeMismatch(
            "typed term carries a stale type".into(),
        ));
    }
    Ok(mat)
}

fn eval_term<S: Semiring>(
    sig: &Signature,
    t: &Term,
    m: &ModelAssignment<S>,
) -> Result<(Matrix<S>, PolyType)> {
    match t {
        Term::InPerm(inner, p) => {
            let (mat, ty) = eval_term(sig, inner, m)?;
            check_perm(p, ty.inputs.len())?;
            let out = mat.permute_cols(&m.hdims(&ty.inputs)?, p);
            Ok((out, PolyType::new(apply_perm(&ty.inputs, p), ty.outputs)))
        }
        Term::OutPerm(inner, p) => {
            let (mat, ty) = eval_term(sig, inner, m)?;
            check_perm(p, ty.outputs.len())?;
            let out = mat.permute_rows(&m.hdims(&ty.outputs)?, p);
            Ok((out, PolyType::new(ty.inputs, apply_perm(&ty.outputs, p))))
        }
        Term::Comp(s, i, u, j) => {
            let (ms, ts) = eval_term(sig, s, m)?;
            let (mu, tu) = eval_term(sig, u, m)?;
            let ty = comp_type(&ts, *i, &tu, *j)?;
            let out = comp_matrices(
                &ms,
                &m.hdims(&ts.inputs)?,
                &m.hdims(&ts.outputs)?,
                *i,
                &mu,
                &m.hdims(&tu.inputs)?,
                *j,
            )?;
            Ok((out, ty))
        }
        _ => {
            let ty = typecheck(sig, t)?;
            let mat = eval_atom(sig, t, m)?;
            let rows: usize = m.hdims(&ty.outputs)?.iter().product();
            let cols: usize = m.hdims(&ty.inputs)?.iter().product();
            if (mat.rows, mat.cols) != (rows, cols) {
                return Err(Error::ShapeMismatch(format!(
                    "{t} evaluates to {}x{}, expected {rows}x{cols}",
                    mat.rows, mat.cols
                )));
            }
            Ok((mat, ty))
        }
    }
}

/// Contracts output `i` of `s` with input `j` of `t`, blockwise.
pub fn comp_matrices<S: Semiring>(
    s: &Matrix<S>,
    s_in: &[usize],
    s_out: &[usize],
    i: usize,
    t: &Matrix<S>,
    t_in: &[usize],
    j: usize,
) -> Result<Matrix<S>> {
    let b = s_out[i];
    if t_in[j] != b {
        return Err(Error::ShapeMismatch("plugged dims differ".into()));
    }
    let d1: usize = s_out[..i].iter().product();
    let d2: usize = s_out[i + 1..].iter().product();
    let l1: usize = t_in[..j].iter().product();
    let l2: usize = t_in[j + 1..].iter().product();
    let g: usize = s_in.iter().product();
    let th = t.rows;
    if s.rows != d1 * b * d2 || s.cols != g || t.cols != l1 * b * l2 {
        return Err(Error::ShapeMismatch("composite operands".into()));
    }
    let rows = d1 * th * d2;
    let cols = l1 * g * l2;
    let mut out: Matrix<S> = Matrix::zeros(rows, cols);
    for r in 0..s.rows {
        let (x1, beta, x2) = (r / (b * d2), (r / d2) % b, r % d2);
        for gam in 0..g {
            let sv = s.get(r, gam);
            if sv.is_zero() {
                continue;
            }
            for y1 in 0..l1 {
                for y2 in 0..l2 {
                    let tc = (y1 * b + beta) * l2 + y2;
                    let oc = (y1 * g + gam) * l2 + y2;
                    for th_i in 0..th {
                        let tv = t.get(th_i, tc);
                        if tv.is_zero() {
                            continue;
                        }
                        let or = (x1 * th + th_i) * d2 + x2;
                        let cur = out.get(or, oc);
                        out.set(or, oc, cur.add(sv.mul(tv)));
                    }
                }
            }
        }
    }
    Ok(out)
}
