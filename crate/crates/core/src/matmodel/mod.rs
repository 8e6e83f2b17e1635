//! Compact-closed semiring matrices as a model of terms.
//!
//! `[a,b]` is laid out on the legs `(a_n*, ..., a_1*, b_1, ..., b_m)`; duals share the
//! dimension of their object. A polymorphism with inputs `X_1..X_n` and outputs
//! `Y_1..Y_m` becomes a matrix with rows over `Y_1 .. Y_m` and columns over `X_1 .. X_n`.

mod assign;
mod dense;
mod matrix;
pub mod sparse;

pub use assign::{
    ceiling, checked_product, enumerate_boolean_assignments, parse_model, random_assignment,
    AnyModel, AssignmentSpace, BooleanAssignments, ModelAssignment, DEFAULT_CEILING,
};
pub use dense::{
    comp_matrices, eval_atom, eval_base, eval_lift, eval_poly, reversed_flat, unvectorize,
    vectorize, wiring, Wiring,
};
pub use matrix::{
    digits, flatten, mat_compose, mat_perm, mat_tensor, perm_index_map, permuted_dims, Matrix,
    Semiring,
};

use crate::error::Result;
use crate::signature::Signature;
use crate::term::TypedTerm;

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation<S> {
    pub term: TypedTerm,
    pub matrix: Matrix<S>,
}

pub fn evaluate<S: Semiring>(
    sig: &Signature,
    t: &TypedTerm,
    m: &ModelAssignment<S>,
) -> Result<Evaluation<S>> {
    Ok(Evaluation {
        term: t.clone(),
        matrix: eval_poly(sig, t, m)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::{HomType, ObjectWord};
    use crate::term::{seq_box, BaseTerm, Term};

    fn w(s: &[&str]) -> ObjectWord {
        ObjectWord::of(s)
    }

    fn sig() -> Signature {
        Signature::new()
            .with_object("q")
            .with_object("r")
            .with_object("s")
            .with_object("u")
            .with_gen("f", w(&["q"]), w(&["q"]))
            .with_gen("g", w(&["q"]), w(&["q"]))
    }

    fn bits(n: usize, k: usize) -> Vec<bool> {
        (0..n).map(|b| (k >> b) & 1 == 1).collect()
    }

    #[test]
    fn identity_state_is_the_vectorized_identity() {
        let s = sig();
        let m = ModelAssignment::<bool>::with_dims(&[("q", 2), ("r", 1), ("s", 1), ("u", 1)]);
        let t = TypedTerm::new(&s, Term::IdSt(w(&["q"]))).unwrap();
        let v = eval_poly(&s, &t, &m).unwrap();
        assert_eq!(v.data, vec![true, false, false, true]);
    }

    #[test]
    fn sequencing_lifts_multiplies_matrices() {
        let s = sig();
        let t = seq_box(
            &s,
            &TypedTerm::new(&s, Term::lift(BaseTerm::gen("f"))).unwrap(),
            &TypedTerm::new(&s, Term::lift(BaseTerm::gen("g"))).unwrap(),
        )
        .unwrap();
        for kf in 0..16 {
            for kg in 0..16 {
                let mut m =
                    ModelAssignment::<bool>::with_dims(&[("q", 2), ("r", 1), ("s", 1), ("u", 1)]);
                let f = Matrix::from_vec(2, 2, bits(4, kf)).unwrap();
                let g = Matrix::from_vec(2, 2, bits(4, kg)).unwrap();
                // oracle: (g f)[r][c] = OR_k g[r][k] f[k][c], vectorized by column then row
                let mut expect = vec![false; 4];
                for c in 0..2 {
                    for r in 0..2 {
                        expect[c * 2 + r] = (0..2).any(|k| g.get(r, k) && f.get(k, c));
                    }
                }
                m.gens.insert("f".into(), f);
                m.gens.insert("g".into(), g);
                assert_eq!(eval_poly(&s, &t, &m).unwrap().data, expect);
            }
        }
    }

    #[test]
    fn braid_is_the_factor_swap() {
        let m = ModelAssignment::<bool>::with_dims(&[("q", 2), ("r", 3)]);
        let b = eval_base(&BaseTerm::Braid(w(&["q"]), w(&["r"])), &m).unwrap();
        assert_eq!(b, mat_perm(&[2, 3], &[1, 0]).unwrap());
        let i = eval_base(&BaseTerm::Id(w(&["q", "q"])), &m).unwrap();
        assert!(i.is_identity() && i.rows == 4);
    }

    #[test]
    fn base_composition_is_matrix_product() {
        let mut m = ModelAssignment::<bool>::with_dims(&[("q", 2)]);
        for k in 0..256usize {
            let f = Matrix::from_vec(2, 2, bits(4, k & 15)).unwrap();
            let g = Matrix::from_vec(2, 2, bits(4, k >> 4)).unwrap();
            m.gens.insert("f".into(), f.clone());
            m.gens.insert("g".into(), g.clone());
            let e = eval_base(&BaseTerm::gen("f").then(BaseTerm::gen("g")), &m).unwrap();
            let oracle = Matrix::from_fn(2, 2, |r, c| (0..2).any(|j| g.get(r, j) && f.get(j, c)));
            assert_eq!(e, oracle);
        }
    }

    #[test]
    fn split_layout_and_inverse() {
        let s = sig();
        let m = ModelAssignment::<bool>::with_dims(&[("q", 2), ("r", 3), ("s", 2), ("u", 1)]);
        let p = vec![
            HomType::new(w(&["q"]), w(&["r"])),
            HomType::new(w(&["s"]), w(&["u"])),
        ];
        let sp = eval_poly(&s, &TypedTerm::new(&s, Term::Split(p.clone())).unwrap(), &m).unwrap();
        let mg = eval_poly(&s, &TypedTerm::new(&s, Term::Merge(p)).unwrap(), &m).unwrap();
        // input legs (s*, q*, r, u) with dims (2,2,3,1), outputs (q*, r), (s*, u)
        let ind = [2, 2, 3, 1];
        let outd = [2, 3, 2, 1];
        for sd in 0..2 {
            for qd in 0..2 {
                for r in 0..3 {
                    let col = flatten(&[sd, qd, r, 0], &ind);
                    let row = flatten(&[qd, r, sd, 0], &outd);
                    assert!(sp.get(row, col));
                }
            }
        }
        assert!(mat_compose(&mg, &sp).unwrap().is_identity());
        assert!(mat_compose(&sp, &mg).unwrap().is_identity());
    }

    /// Composition by identities, permutations and matrix products.
    fn literal_comp(
        s: &Matrix<f64>,
        s_in: &[usize],
        s_out: &[usize],
        i: usize,
        t: &Matrix<f64>,
        t_in: &[usize],
        j: usize,
    ) -> Matrix<f64> {
        let b = s_out[i];
        let mut sigma: Vec<usize> = (0..s_out.len()).collect();
        sigma[i] = s_out.len() - 1;
        for k in i + 1..s_out.len() {
            sigma[k] = k - 1;
        }
        let s1 = mat_compose(&mat_perm(s_out, &sigma).unwrap(), s).unwrap();
        let mut qd = vec![b];
        qd.extend(t_in[..j].iter().chain(&t_in[j + 1..]).cloned());
        let mut qs = vec![j];
        for k in 0..t_in.len() - 1 {
            qs.push(if k < j { k } else { k + 1 });
        }
        let t2 = mat_compose(t, &mat_perm(&qd, &qs).unwrap()).unwrap();
        let d12: usize = s_out.iter().product::<usize>() / b;
        let l12: usize = t_in.iter().product::<usize>() / b;
        let left = mat_tensor(&Matrix::identity(d12), &t2);
        let right = mat_tensor(&s1, &Matrix::identity(l12));
        let core = mat_compose(&left, &right).unwrap();
        // core: (Gamma, L1, L2) -> (D1, D2, Theta)
        let d1: usize = s_out[..i].iter().product();
        let d2: usize = s_out[i + 1..].iter().product();
        let th = t.rows;
        let out_fix = mat_perm(&[d1, d2, th], &[0, 2, 1]).unwrap();
        let g: usize = s_in.iter().product();
        let l1: usize = t_in[..j].iter().product();
        let l2: usize = t_in[j + 1..].iter().product();
        let in_fix = mat_perm(&[l1, g, l2], &[1, 0, 2]).unwrap();
        mat_compose(&mat_compose(&out_fix, &core).unwrap(), &in_fix).unwrap()
    }

    #[test]
    fn blockwise_composition_matches_literal_route() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let ns_in = rng.gen_range(0..3);
            let ns_out = rng.gen_range(1..4);
            let nt_in = rng.gen_range(1..4);
            let nt_out = rng.gen_range(0..3);
            let dim = |rng: &mut rand_chacha::ChaCha8Rng| rng.gen_range(1..4usize);
            let s_in: Vec<usize> = (0..ns_in).map(|_| dim(&mut rng)).collect();
            let mut s_out: Vec<usize> = (0..ns_out).map(|_| dim(&mut rng)).collect();
            let mut t_in: Vec<usize> = (0..nt_in).map(|_| dim(&mut rng)).collect();
            let t_out: Vec<usize> = (0..nt_out).map(|_| dim(&mut rng)).collect();
            let i = rng.gen_range(0..ns_out);
            let j = rng.gen_range(0..nt_in);
            let b = dim(&mut rng);
            s_out[i] = b;
            t_in[j] = b;
            let rs: usize = s_out.iter().product();
            let cs: usize = s_in.iter().product();
            let rt: usize = t_out.iter().product();
            let ct: usize = t_in.iter().product();
            let s =
                Matrix::from_vec(rs, cs, (0..rs * cs).map(|_| rng.gen::<f64>()).collect()).unwrap();
            let t =
                Matrix::from_vec(rt, ct, (0..rt * ct).map(|_| rng.gen::<f64>()).collect()).unwrap();
            let fast = comp_matrices(&s, &s_in, &s_out, i, &t, &t_in, j).unwrap();
            let slow = literal_comp(&s, &s_in, &s_out, i, &t, &t_in, j);
            assert!(fast.approx_eq(&slow, 1e-9));
        }
    }
}
