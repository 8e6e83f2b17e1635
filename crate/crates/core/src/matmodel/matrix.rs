use std::fmt;

use crate::error::{Error, Result};

pub trait Semiring: Copy + PartialEq + fmt::Debug + Send + Sync + 'static {
    const KIND: &'static str;
    fn zero() -> Self;
    fn one() -> Self;
    fn add(self, other: Self) -> Self;
    fn mul(self, other: Self) -> Self;
    fn is_zero(self) -> bool;
    /// Exact for Booleans, `|a - b| <= tol` for floats.
    fn close(self, other: Self, tol: f64) -> bool;
    fn parse_entry(s: &str) -> Option<Self>;
    fn fmt_entry(self) -> String;
}

impl Semiring for bool {
    const KIND: &'static str = "bool";
    fn zero() -> Self {
        false
    }
    fn one() -> Self {
        true
    }
    fn add(self, other: Self) -> Self {
        self | other
    }
    fn mul(self, other: Self) -> Self {
        self & other
    }
    fn is_zero(self) -> bool {
        !self
    }
    fn close(self, other: Self, _tol: f64) -> bool {
        self == other
    }
    fn parse_entry(s: &str) -> Option<Self> {
        match s {
            "0" => Some(false),
            "1" => Some(true),
            _ => None,
        }
    }
    fn fmt_entry(self) -> String {
        if self { "1" } else { "0" }.to_string()
    }
}

impl Semiring for f64 {
    const KIND: &'static str = "f64";
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn mul(self, other: Self) -> Self {
        self * other
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
    fn close(self, other: Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }
    fn parse_entry(s: &str) -> Option<Self> {
        s.parse::<f64>().ok().filter(|x| x.is_finite())
    }
    fn fmt_entry(self) -> String {
        format!("{self}")
    }
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Matrix<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Semiring> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { S::one() } else { S::zero() })
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.close(*b, tol))
    }

    /// First `(row, col)` where the two matrices differ beyond `tol`.
    pub fn first_difference(&self, other: &Self, tol: f64) -> Option<(usize, usize)> {
        if self.rows != other.rows || self.cols != other.cols {
            return Some((0, 0));
        }
        (0..self.data.len())
            .find(|&k| !self.data[k].close(other.data[k], tol))
            .map(|k| (k / self.cols, k % self.cols))
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols && self.approx_eq(&Self::identity(self.rows), 0.0)
    }

    pub fn map<T: Semiring>(&self, f: impl Fn(S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| f(*x)).collect(),
        }
    }
}

impl<S: Semiring> fmt::Display for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).fmt_entry()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// `g . f`, i.e. `f` first.
pub fn mat_compose<S: Semiring>(g: &Matrix<S>, f: &Matrix<S>) -> Result<Matrix<S>> {
    if g.cols != f.rows {
        return Err(Error::ShapeMismatch(format!(
            "composing {}x{} after {}x{}",
            g.rows, g.cols, f.rows, f.cols
        )));
    }
    let mut out: Matrix<S> = Matrix::zeros(g.rows, f.cols);
    for r in 0..g.rows {
        for k in 0..g.cols {
            let a = g.get(r, k);
            if a.is_zero() {
                continue;
            }
            let frow = &f.data[k * f.cols..(k + 1) * f.cols];
            let orow = &mut out.data[r * f.cols..(r + 1) * f.cols];
            for (o, b) in orow.iter_mut().zip(frow) {
                *o = o.add(a.mul(*b));
            }
        }
    }
    Ok(out)
}

/// Kronecker product; `f` indexes the most significant factor.
pub fn mat_tensor<S: Semiring>(f: &Matrix<S>, g: &Matrix<S>) -> Matrix<S> {
    let mut out = Matrix::zeros(f.rows * g.rows, f.cols * g.cols);
    for r1 in 0..f.rows {
        for c1 in 0..f.cols {
            let a = f.get(r1, c1);
            if a.is_zero() {
                continue;
            }
            for r2 in 0..g.rows {
                for c2 in 0..g.cols {
                    out.set(r1 * g.rows + r2, c1 * g.cols + c2, a.mul(g.get(r2, c2)));
                }
            }
        }
    }
    out
}

/// Mixed-radix digits of `flat`, most significant first.
pub fn digits(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = flat % dims[k];
        flat /= dims[k];
    }
    out
}

pub fn flatten(idx: &[usize], dims: &[usize]) -> usize {
    idx.iter().zip(dims).fold(0, |acc, (i, d)| acc * d + i)
}

/// Output dims of the factor permutation sending factor `k` to position `sigma[k]`.
pub fn permuted_dims(dims: &[usize], sigma: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate() {
        out[sigma[k]] = d;
    }
    out
}

/// Where each flat input index lands under the factor permutation.
pub fn perm_index_map(dims: &[usize], sigma: &[usize]) -> Vec<usize> {
    let odims = permuted_dims(dims, sigma);
    let n: usize = dims.iter().product();
    (0..n)
        .map(|flat| {
            let d = digits(flat, dims);
            let mut o = vec![0; dims.len()];
            for (k, &x) in d.iter().enumerate() {
                o[sigma[k]] = x;
            }
            flatten(&o, &odims)
        })
        .collect()
}

/// Factor permutation matrix: factor `k` of the input becomes factor `sigma[k]` of the output.
pub fn mat_perm<S: Semiring>(dims: &[usize], sigma: &[usize]) -> Result<Matrix<S>> {
    crate::term::check_perm(sigma, dims.len())?;
    let map = perm_index_map(dims, sigma);
    let n = map.len();
    let mut m = Matrix::zeros(n, n);
    for (i, &o) in map.iter().enumerate() {
        m.set(o, i, S::one());
    }
    Ok(m)
}

impl<S: Semiring> Matrix<S> {
    /// `mat_perm(dims, sigma) . self` without forming the permutation matrix.
    pub fn permute_rows(&self, dims: &[usize], sigma: &[usize]) -> Matrix<S> {
        let map = perm_index_map(dims, sigma);
        let mut out = Matrix::zeros(self.rows, self.cols);
        for (r, &o) in map.iter().enumerate() {
            out.data[o * self.cols..(o + 1) * self.cols]
                .copy_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
        }
        out
    }

    /// `self . mat_perm(dims, sigma)^-1`: columns indexed by the permuted factor order.
    pub fn permute_cols(&self, dims: &[usize], sigma: &[usize]) -> Matrix<S> {
        let map = perm_index_map(dims, sigma);
        let mut out = Matrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, &o) in map.iter().enumerate() {
                out.data[r * self.cols + o] = self.data[r * self.cols + c];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_tensor_identities() {
        let i2 = Matrix::<bool>::identity(2);
        assert_eq!(mat_compose(&i2, &i2).unwrap(), i2);
        assert_eq!(mat_tensor(&i2, &Matrix::identity(3)), Matrix::identity(6));
        assert!(mat_compose(&i2, &Matrix::<bool>::identity(3)).is_err());
    }

    #[test]
    fn swap_is_an_involution() {
        let s1 = mat_perm::<f64>(&[2, 3], &[1, 0]).unwrap();
        let s2 = mat_perm::<f64>(&[3, 2], &[1, 0]).unwrap();
        assert!(mat_compose(&s2, &s1).unwrap().is_identity());
        assert!(!s1.is_identity());
    }

    #[test]
    fn perm_moves_factors() {
        // e_1 (x) e_2 in dims [2,3] goes to e_2 (x) e_1 in dims [3,2]
        let p = mat_perm::<bool>(&[2, 3], &[1, 0]).unwrap();
        let src = flatten(&[1, 2], &[2, 3]);
        let dst = flatten(&[2, 1], &[3, 2]);
        assert!(p.get(dst, src));
    }

    #[test]
    fn row_and_column_permutation_match_products() {
        let m = Matrix::<f64>::from_fn(6, 4, |r, c| (r * 4 + c) as f64);
        let p = mat_perm::<f64>(&[2, 3], &[1, 0]).unwrap();
        assert_eq!(
            m.permute_rows(&[2, 3], &[1, 0]),
            mat_compose(&p, &m).unwrap()
        );
        let n = Matrix::<f64>::from_fn(4, 6, |r, c| (r * 6 + c) as f64);
        let pinv = p.transpose();
        assert_eq!(
            n.permute_cols(&[2, 3], &[1, 0]),
            mat_compose(&n, &pinv).unwrap()
        );
    }
}
