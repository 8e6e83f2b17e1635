use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use super::matrix::{Matrix, Semiring};
use crate::error::{Error, Result};
use crate::signature::{HomType, Name, ObjectWord, Signature};

pub const DEFAULT_CEILING: u128 = 10_000_000;

/// The explosion-guard ceiling, overridable through `HOCIRC_CEILING`.
pub fn ceiling() -> u128 {
    std::env::var("HOCIRC_CEILING")
        .ok()
        .and_then(|s| s.trim().parse::<u128>().ok())
        .unwrap_or(DEFAULT_CEILING)
}

pub fn checked_product(xs: impl IntoIterator<Item = usize>) -> Result<usize> {
    xs.into_iter()
        .try_fold(1usize, |acc, x| acc.checked_mul(x))
        .ok_or_else(|| Error::ShapeMismatch("dimension overflow".into()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelAssignment<S> {
    pub dims: BTreeMap<Name, usize>,
    pub gens: BTreeMap<Name, Matrix<S>>,
    pub polygens: BTreeMap<Name, Matrix<S>>,
}

impl<S: Semiring> Default for ModelAssignment<S> {
    fn default() -> Self {
        ModelAssignment {
            dims: BTreeMap::new(),
            gens: BTreeMap::new(),
            polygens: BTreeMap::new(),
        }
    }
}

impl<S: Semiring> ModelAssignment<S> {
    pub fn with_dims(dims: &[(&str, usize)]) -> Self {
        let mut m = Self::default();
        for (n, d) in dims {
            m.dims.insert(Name::from(*n), *d);
        }
        m
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        self.dims
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingAssignment(name.to_string()))
    }

    pub fn letter_dims(&self, w: &ObjectWord) -> Result<Vec<usize>> {
        w.0.iter().map(|n| self.dim_of(n)).collect()
    }

    pub fn dim(&self, w: &ObjectWord) -> Result<usize> {
        checked_product(self.letter_dims(w)?)
    }

    pub fn hdim(&self, h: &HomType) -> Result<usize> {
        checked_product([self.dim(&h.dom)?, self.dim(&h.cod)?])
    }

    /// Leg dimensions of `[a,b]`: the duals of `a` reversed, then `b`.
    pub fn leg_dims(&self, h: &HomType) -> Result<Vec<usize>> {
        let mut out = self.letter_dims(&h.dom)?;
        out.reverse();
        out.extend(self.letter_dims(&h.cod)?);
        Ok(out)
    }

    pub fn hdims(&self, list: &[HomType]) -> Result<Vec<usize>> {
        list.iter().map(|h| self.hdim(h)).collect()
    }

    pub fn gen_matrix(&self, name: &str) -> Result<&Matrix<S>> {
        self.gens
            .get(name)
            .ok_or_else(|| Error::MissingAssignment(name.to_string()))
    }

    pub fn polygen_matrix(&self, name: &str) -> Result<&Matrix<S>> {
        self.polygens
            .get(name)
            .ok_or_else(|| Error::MissingAssignment(name.to_string()))
    }

    /// Checks dims and every shape against the signature.
    pub fn validate(&self, sig: &Signature) -> Result<()> {
        for o in &sig.objects {
            let d = self.dim_of(&o.name)?;
            if d == 0 {
                return Err(Error::ShapeMismatch(format!(
                    "object {} has dimension 0",
                    o.name
                )));
            }
        }
        for g in &sig.gens {
            if let Some(m) = self.gens.get(&g.name) {
                let (r, c) = (self.dim(&g.cod)?, self.dim(&g.dom)?);
                if (m.rows, m.cols) != (r, c) {
                    return Err(Error::ShapeMismatch(format!(
                        "gen {} needs {r}x{c}, got {}x{}",
                        g.name, m.rows, m.cols
                    )));
                }
            }
        }
        for g in &sig.polygens {
            if let Some(m) = self.polygens.get(&g.name) {
                let r = checked_product(self.hdims(&g.ty.outputs)?)?;
                let c = checked_product(self.hdims(&g.ty.inputs)?)?;
                if (m.rows, m.cols) != (r, c) {
                    return Err(Error::ShapeMismatch(format!(
                        "polygen {} needs {r}x{c}, got {}x{}",
                        g.name, m.rows, m.cols
                    )));
                }
            }
        }
        for n in self.gens.keys() {
            if sig.gen(n).is_none() {
                return Err(Error::UndeclaredName(n.to_string()));
            }
        }
        for n in self.polygens.keys() {
            if sig.polygen(n).is_none() {
                return Err(Error::UndeclaredName(n.to_string()));
            }
        }
        Ok(())
    }

    /// Shape `(rows, cols)` of a generator's matrix under these dims.
    pub fn gen_shape(&self, sig: &Signature, name: &str) -> Result<(usize, usize)> {
        if let Some(g) = sig.gen(name) {
            return Ok((self.dim(&g.cod)?, self.dim(&g.dom)?));
        }
        if let Some(g) = sig.polygen(name) {
            let r = checked_product(self.hdims(&g.ty.outputs)?)?;
            let c = checked_product(self.hdims(&g.ty.inputs)?)?;
            return Ok((r, c));
        }
        Err(Error::UndeclaredName(name.to_string()))
    }
}

/// Prints in the model file format, so a witness can be replayed.
impl<S: Semiring> fmt::Display for ModelAssignment<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "semiring {}", S::KIND)?;
        for (n, d) in &self.dims {
            writeln!(f, "dim {n} {d}")?;
        }
        for (n, m) in self.gens.iter().chain(&self.polygens) {
            let es: Vec<String> = m.data.iter().map(|x| x.fmt_entry()).collect();
            writeln!(f, "mat {n} {}x{} {}", m.rows, m.cols, es.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    Bool(ModelAssignment<bool>),
    F64(ModelAssignment<f64>),
}

fn parse_entries<S: Semiring>(
    name: &str,
    shape: &str,
    entries: &[&str],
    line: usize,
) -> Result<Matrix<S>> {
    let (r, c) = shape
        .split_once('x')
        .and_then(|(r, c)| Some((r.parse::<usize>().ok()?, c.parse::<usize>().ok()?)))
        .ok_or_else(|| Error::syntax(line, 1, format!("bad shape `{shape}` for {name}")))?;
    let mut data = Vec::with_capacity(entries.len());
    for e in entries {
        data.push(
            S::parse_entry(e)
                .ok_or_else(|| Error::syntax(line, 1, format!("bad {} entry `{e}`", S::KIND)))?,
        );
    }
    Matrix::from_vec(r, c, data).map_err(|e| Error::syntax(line, 1, e.to_string()))
}

fn parse_model_as<S: Semiring>(text: &str, sig: &Signature) -> Result<ModelAssignment<S>> {
    let mut m = ModelAssignment::<S>::default();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        let parts: Vec<&str> = body.split_whitespace().collect();
        match parts.as_slice() {
            [] | ["semiring", _] => {}
            ["dim", obj, n] => {
                let d = n
                    .parse::<usize>()
                    .ok()
                    .filter(|d| *d > 0)
                    .ok_or_else(|| Error::syntax(line, 1, format!("bad dimension `{n}`")))?;
                if !sig.has_object(obj) {
                    return Err(Error::UndeclaredObject(obj.to_string()));
                }
                m.dims.insert(Name::from(*obj), d);
            }
            ["mat", name, shape, entries @ ..] => {
                let mat = parse_entries::<S>(name, shape, entries, line)?;
                if sig.gen(name).is_some() {
                    m.gens.insert(Name::from(*name), mat);
                } else if sig.polygen(name).is_some() {
                    m.polygens.insert(Name::from(*name), mat);
                } else {
                    return Err(Error::UndeclaredName(name.to_string()));
                }
            }
            [kw, ..] => {
                let col = raw.find(kw).map(|p| p + 1).unwrap_or(1);
                return Err(Error::syntax(
                    line,
                    col,
                    format!("unknown model line `{kw}`"),
                ));
            }
        }
    }
    m.validate(sig)?;
    Ok(m)
}

/// Parses a model file; the `semiring` line picks the carrier (Boolean by default).
pub fn parse_model(text: &str, sig: &Signature) -> Result<AnyModel> {
    let mut kind = "bool";
    for (ln, raw) in text.lines().enumerate() {
        let parts: Vec<&str> = raw
            .split('#')
            .next()
            .unwrap_or("")
            .split_whitespace()
            .collect();
        if parts.first() == Some(&"semiring") {
            kind = match parts.get(1) {
                Some(&"bool") => "bool",
                Some(&"f64") => "f64",
                _ => return Err(Error::syntax(ln + 1, 1, "semiring must be `bool` or `f64`")),
            };
        }
    }
    if kind == "bool" {
        Ok(AnyModel::Bool(parse_model_as(text, sig)?))
    } else {
        Ok(AnyModel::F64(parse_model_as(text, sig)?))
    }
}

/// Which generators an enumeration covers, with a dimension bound.
#[derive(Clone, Debug)]
pub struct AssignmentSpace {
    pub objects: Vec<Name>,
    pub base: Vec<Name>,
    pub poly: Vec<Name>,
    pub dim_bound: usize,
    sig: Signature,
}

impl AssignmentSpace {
    pub fn all(sig: &Signature, dim_bound: usize) -> Self {
        AssignmentSpace {
            objects: sig.object_names(),
            base: sig.gens.iter().map(|g| g.name.clone()).collect(),
            poly: sig.polygens.iter().map(|g| g.name.clone()).collect(),
            dim_bound,
            sig: sig.clone(),
        }
    }

    /// Only the named generators get matrices.
    pub fn restricted(sig: &Signature, dim_bound: usize, base: &[Name], poly: &[Name]) -> Self {
        AssignmentSpace {
            objects: sig.object_names(),
            base: base.to_vec(),
            poly: poly.to_vec(),
            dim_bound,
            sig: sig.clone(),
        }
    }

    fn dim_vectors(&self) -> Vec<Vec<usize>> {
        let n = self.objects.len();
        let mut out = Vec::new();
        let mut cur = vec![1; n];
        loop {
            out.push(cur.clone());
            let mut k = n;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if cur[k] < self.dim_bound {
                    cur[k] += 1;
                    for x in cur.iter_mut().skip(k + 1) {
                        *x = 1;
                    }
                    break;
                }
            }
        }
    }

    fn shell(&self, dims: &[usize]) -> ModelAssignment<bool> {
        let mut m = ModelAssignment::default();
        for (o, d) in self.objects.iter().zip(dims) {
            m.dims.insert(o.clone(), *d);
        }
        m
    }

    fn shapes(&self, m: &ModelAssignment<bool>) -> Result<Vec<(usize, usize)>> {
        self.base
            .iter()
            .chain(&self.poly)
            .map(|n| m.gen_shape(&self.sig, n))
            .collect()
    }

    /// Total number of assignments, saturating.
    pub fn count(&self) -> Result<u128> {
        let mut total: u128 = 0;
        for dims in self.dim_vectors() {
            let bits = self
                .shapes(&self.shell(&dims))?
                .iter()
                .try_fold(0usize, |acc, (r, c)| acc.checked_add(r.checked_mul(*c)?))
                .unwrap_or(usize::MAX);
            let n = if bits >= 127 {
                u128::MAX
            } else {
                1u128 << bits
            };
            total = total.saturating_add(n);
        }
        Ok(total)
    }

    /// Every Boolean assignment, dims in lexicographic order, then matrices counting in binary.
    pub fn enumerate(&self, ceiling: u128) -> Result<BooleanAssignments> {
        let count = self.count()?;
        if count > ceiling {
            return Err(Error::ExplosionGuard { count, ceiling });
        }
        let mut blocks = Vec::new();
        for dims in self.dim_vectors() {
            let shell = self.shell(&dims);
            let shapes = self.shapes(&shell)?;
            blocks.push((shell, shapes));
        }
        Ok(BooleanAssignments {
            names: self.base.iter().chain(&self.poly).cloned().collect(),
            n_base: self.base.len(),
            blocks,
            block: 0,
            bits: None,
        })
    }
}

pub struct BooleanAssignments {
    names: Vec<Name>,
    n_base: usize,
    blocks: Vec<(ModelAssignment<bool>, Vec<(usize, usize)>)>,
    block: usize,
    bits: Option<Vec<bool>>,
}

impl Iterator for BooleanAssignments {
    type Item = ModelAssignment<bool>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.block >= self.blocks.len() {
                return None;
            }
            let total: usize = self.blocks[self.block].1.iter().map(|(r, c)| r * c).sum();
            let bits = match self.bits.take() {
                None => vec![false; total],
                Some(mut b) => {
                    let mut k = 0;
                    while k < b.len() && b[k] {
                        b[k] = false;
                        k += 1;
                    }
                    if k == b.len() {
                        self.block += 1;
                        continue;
                    }
                    b[k] = true;
                    b
                }
            };
            let (shell, shapes) = &self.blocks[self.block];
            let mut m = shell.clone();
            let mut off = 0;
            for (k, ((r, c), name)) in shapes.iter().zip(&self.names).enumerate() {
                let mat = Matrix::from_vec(*r, *c, bits[off..off + r * c].to_vec()).unwrap();
                off += r * c;
                if k < self.n_base {
                    m.gens.insert(name.clone(), mat);
                } else {
                    m.polygens.insert(name.clone(), mat);
                }
            }
            self.bits = Some(bits);
            return Some(m);
        }
    }
}

/// Every Boolean assignment of every generator of `sig` with dims up to `dim_bound`.
pub fn enumerate_boolean_assignments(
    sig: &Signature,
    dim_bound: usize,
) -> Result<BooleanAssignments> {
    AssignmentSpace::all(sig, dim_bound).enumerate(ceiling())
}

/// A random assignment over the space, entries drawn by `sample`.
pub fn random_assignment<S: Semiring, R: Rng>(
    space: &AssignmentSpace,
    rng: &mut R,
    mut sample: impl FnMut(&mut R) -> S,
) -> Result<ModelAssignment<S>> {
    let mut m = ModelAssignment::<S>::default();
    for o in &space.objects {
        m.dims.insert(o.clone(), rng.gen_range(1..=space.dim_bound));
    }
    for (k, name) in space.base.iter().chain(&space.poly).enumerate() {
        let (r, c) = m.gen_shape(&space.sig, name)?;
        let data = (0..r * c).map(|_| sample(rng)).collect();
        let mat = Matrix::from_vec(r, c, data)?;
        if k < space.base.len() {
            m.gens.insert(name.clone(), mat);
        } else {
            m.polygens.insert(name.clone(), mat);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_gen() -> Signature {
        Signature::new().with_object("q").with_gen(
            "f",
            ObjectWord::single("q"),
            ObjectWord::single("q"),
        )
    }

    #[test]
    fn counts_one_generator() {
        let sig = one_gen();
        // oracle: sum over d of 2^(d*d)
        let expected: usize = (1..=2).map(|d| 1usize << (d * d)).sum();
        assert_eq!(expected, 18);
        let all: Vec<_> = enumerate_boolean_assignments(&sig, 2).unwrap().collect();
        assert_eq!(all.len(), expected);
        assert_eq!(AssignmentSpace::all(&sig, 2).count().unwrap(), 18);
        let distinct: std::collections::BTreeSet<String> =
            all.iter().map(|m| m.to_string()).collect();
        assert_eq!(distinct.len(), 18);
    }

    #[test]
    fn empty_signature_has_one_assignment() {
        assert_eq!(
            enumerate_boolean_assignments(&Signature::new(), 3)
                .unwrap()
                .count(),
            1
        );
    }

    #[test]
    fn ceiling_is_enforced() {
        let sig = one_gen();
        let e = AssignmentSpace::all(&sig, 3).enumerate(100).err().unwrap();
        assert!(matches!(
            e,
            Error::ExplosionGuard {
                count: 530,
                ceiling: 100
            }
        ));
    }

    #[test]
    fn model_files_round_trip() {
        let sig = one_gen();
        let text = "semiring bool\ndim q 2\nmat f 2x2 1 0 1 1\n";
        let m = parse_model(text, &sig).unwrap();
        match &m {
            AnyModel::Bool(a) => assert_eq!(a.to_string(), text),
            _ => panic!(),
        }
        let f = parse_model("semiring f64\ndim q 1\nmat f 1x1 0.5\n", &sig).unwrap();
        assert!(matches!(f, AnyModel::F64(_)));
        assert!(parse_model("dim q 2\nmat f 2x1 1 0\n", &sig).is_err());
        assert!(matches!(
            parse_model("dim q 2\nfoo\n", &sig),
            Err(Error::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_model("dim q 1\nmat f 1x1 2\n", &sig),
            Err(Error::Syntax { line: 2, .. })
        ));
    }
}
