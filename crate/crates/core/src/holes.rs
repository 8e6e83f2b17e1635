//! Supermaps, locally-applicable transformations, slots and the behavioral quotient.
//!
//! Everything here lives in the Boolean matrix model at one assignment of dimensions. A
//! process in the hole `[a,a']` with context `(x,x')` is a matrix with rows over `a' x'` and
//! columns over `a x`; contexts are written as hom types `[x,x']`. A family with inputs
//! `[a_i,a_i']` and output `[b,b']` sends processes with contexts `(x_i,x_i')` to a process in
//! `[b,b']` with context `(x_1..x_n, x_1'..x_n')`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gen::enumerate_states;
use crate::laws::{instance_hash, words_up_to};
use crate::matmodel::sparse::eval_net;
use crate::matmodel::{
    digits, mat_compose, mat_tensor, unvectorize, Matrix, ModelAssignment, Semiring,
};
use crate::net::Net;
use crate::signature::{HomType, Name, ObjectWord, Signature};
use crate::term::{Term, TypedTerm};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FamilyType {
    pub inputs: Vec<HomType>,
    pub output: HomType,
}

impl FamilyType {
    pub fn new(inputs: Vec<HomType>, output: HomType) -> Self {
        FamilyType { inputs, output }
    }

    /// Output hole widened by the contexts of the inputs.
    pub fn output_at(&self, ctx: &[HomType]) -> HomType {
        let c = joined(ctx);
        HomType::new(
            self.output.dom.concat(&c.dom),
            self.output.cod.concat(&c.cod),
        )
    }
}

impl fmt::Display for FamilyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for h in &self.inputs {
            write!(f, "{} ", hom_token(h))?;
        }
        write!(f, "-> {}", hom_token(&self.output))
    }
}

/// The contexts `(x_1..x_n, x_1'..x_n')` laid side by side.
pub fn joined(ctx: &[HomType]) -> HomType {
    HomType::new(
        ObjectWord::concat_all(ctx.iter().map(|h| &h.dom)),
        ObjectWord::concat_all(ctx.iter().map(|h| &h.cod)),
    )
}

/// `(rows, cols)` of a process in hole `h` with context `ctx`.
pub fn process_shape<S: Semiring>(
    m: &ModelAssignment<S>,
    h: &HomType,
    ctx: &HomType,
) -> Result<(usize, usize)> {
    Ok((
        m.dim(&h.cod)? * m.dim(&ctx.cod)?,
        m.dim(&h.dom)? * m.dim(&ctx.dom)?,
    ))
}

/// A comb `b (a_1'..a_n') -> b' (a_1..a_n)` in the matrix model.
#[derive(Clone, Debug, PartialEq)]
pub struct DSupermap<S = bool> {
    pub ty: FamilyType,
    /// Rows over `b' a_1..a_n`, columns over `b a_1'..a_n'`.
    pub core: Matrix<S>,
}

impl<S: Semiring> DSupermap<S> {
    pub fn core_shape(ty: &FamilyType, m: &ModelAssignment<S>) -> Result<(usize, usize)> {
        let mut r = m.dim(&ty.output.cod)?;
        let mut c = m.dim(&ty.output.dom)?;
        for h in &ty.inputs {
            r *= m.dim(&h.dom)?;
            c *= m.dim(&h.cod)?;
        }
        Ok((r, c))
    }

    pub fn new(ty: FamilyType, core: Matrix<S>, m: &ModelAssignment<S>) -> Result<Self> {
        let (r, c) = Self::core_shape(&ty, m)?;
        if (core.rows, core.cols) != (r, c) {
            return Err(Error::ShapeMismatch(format!(
                "core for {ty} must be {r}x{c}, found {}x{}",
                core.rows, core.cols
            )));
        }
        Ok(DSupermap { ty, core })
    }

    /// Plugs the process straight into the output hole.
    pub fn identity(h: &HomType, m: &ModelAssignment<S>) -> Result<Self> {
        let (da, da2) = (m.dim(&h.dom)?, m.dim(&h.cod)?);
        let core = Matrix::from_fn(da2 * da, da * da2, |r, c| {
            let (b2, a) = (r / da, r % da);
            let (b, a2) = (c / da2, c % da2);
            if b2 == a2 && a == b {
                S::one()
            } else {
                S::zero()
            }
        });
        Ok(DSupermap {
            ty: FamilyType::new(vec![h.clone()], h.clone()),
            core,
        })
    }

    /// The comb `φ ↦ (d ⊗ 1) φ (u ⊗ 1)` for `u: b -> a` and `d: a' -> b'`.
    pub fn sandwich(a: &HomType, b: &HomType, u: &Matrix<S>, d: &Matrix<S>) -> Self {
        let (da, db) = (u.rows, u.cols);
        let (db2, da2) = (d.rows, d.cols);
        let core = Matrix::from_fn(db2 * da, db * da2, |r, c| {
            let (b2, x) = (r / da, r % da);
            let (y, a2) = (c / da2, c % da2);
            d.get(b2, a2).mul(u.get(x, y))
        });
        DSupermap {
            ty: FamilyType::new(vec![a.clone()], b.clone()),
            core,
        }
    }
}

impl DSupermap<bool> {
    pub fn random(
        ty: FamilyType,
        m: &ModelAssignment<bool>,
        density: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let (r, c) = Self::core_shape(&ty, m)?;
        let data = (0..r * c).map(|_| rng.gen_bool(density)).collect();
        Ok(DSupermap {
            ty,
            core: Matrix::from_vec(r, c, data)?,
        })
    }
}

/// Contracts the comb with the processes, each wired through its own context.
pub fn apply_dsupermap<S: Semiring>(
    m: &ModelAssignment<S>,
    s: &DSupermap<S>,
    ctx: &[HomType],
    phis: &[Matrix<S>],
) -> Result<Matrix<S>> {
    let n = s.ty.inputs.len();
    if ctx.len() != n || phis.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} holes, {} contexts, {} processes",
            ctx.len(),
            phis.len()
        )));
    }
    let (db, db2) = (m.dim(&s.ty.output.dom)?, m.dim(&s.ty.output.cod)?);
    let mut rdims = vec![db2];
    let mut cdims = vec![db];
    // slices[i][a'][a] lists the nonzero (x', x, value) of φ_i
    let mut slices: Vec<Vec<Vec<Vec<(usize, usize, S)>>>> = Vec::with_capacity(n);
    let (mut rows, mut cols) = (db2, db);
    for (k, (h, c)) in s.ty.inputs.iter().zip(ctx).enumerate() {
        let (da, da2) = (m.dim(&h.dom)?, m.dim(&h.cod)?);
        let (dx, dx2) = (m.dim(&c.dom)?, m.dim(&c.cod)?);
        let phi = &phis[k];
        if (phi.rows, phi.cols) != (da2 * dx2, da * dx) {
            return Err(Error::ShapeMismatch(format!(
                "process {k} for hole {h} at context {c} must be {}x{}, found {}x{}",
                da2 * dx2,
                da * dx,
                phi.rows,
                phi.cols
            )));
        }
        let mut sl = vec![vec![Vec::new(); da]; da2];
        for r in 0..phi.rows {
            for c in 0..phi.cols {
                let v = phi.get(r, c);
                if !v.is_zero() {
                    sl[r / dx2][c / dx].push((r % dx2, c % dx, v));
                }
            }
        }
        slices.push(sl);
        rdims.push(da);
        cdims.push(da2);
        rows *= dx2;
        cols *= dx;
    }
    let dxs: Vec<(usize, usize)> = ctx
        .iter()
        .map(|c| Ok((m.dim(&c.dom)?, m.dim(&c.cod)?)))
        .collect::<Result<_>>()?;
    let mut out = Matrix::zeros(rows, cols);
    let mut partial: Vec<(usize, usize, S)> = Vec::new();
    let mut next: Vec<(usize, usize, S)> = Vec::new();
    let cols_n = s.core.cols;
    let mut rd = Vec::new();
    let mut last_row = usize::MAX;
    for (at, v) in s.core.data.iter().enumerate() {
        if v.is_zero() {
            continue;
        }
        let (r, c) = (at / cols_n, at % cols_n);
        if r != last_row {
            rd = digits(r, &rdims);
            last_row = r;
        }
        let cd = digits(c, &cdims);
        partial.clear();
        partial.push((rd[0], cd[0], *v));
        for i in 0..n {
            next.clear();
            let (dx, dx2) = dxs[i];
            for &(pr, pc, pv) in &partial {
                for &(x2, x, w) in &slices[i][cd[i + 1]][rd[i + 1]] {
                    next.push((pr * dx2 + x2, pc * dx + x, pv.mul(w)));
                }
            }
            std::mem::swap(&mut partial, &mut next);
        }
        for &(pr, pc, pv) in &partial {
            let cur: S = out.get(pr, pc);
            out.set(pr, pc, cur.add(pv));
        }
    }
    Ok(out)
}

/// A family of functions on processes, one per tuple of contexts.
pub trait Family {
    fn ty(&self) -> &FamilyType;
    fn apply(&self, ctx: &[HomType], inputs: &[Matrix<bool>]) -> Result<Matrix<bool>>;
    /// Whether the family is defined at these contexts.
    fn covers(&self, _ctx: &[HomType]) -> bool {
        true
    }
}

/// The family a comb induces.
pub struct Induced {
    pub sup: DSupermap<bool>,
    pub model: ModelAssignment<bool>,
}

impl Family for Induced {
    fn ty(&self) -> &FamilyType {
        &self.sup.ty
    }

    fn apply(&self, ctx: &[HomType], inputs: &[Matrix<bool>]) -> Result<Matrix<bool>> {
        apply_dsupermap(&self.model, &self.sup, ctx, inputs)
    }
}

/// `S(φ) = φ`.
pub struct IdentityFamily {
    ty: FamilyType,
}

impl IdentityFamily {
    pub fn new(h: &HomType) -> Self {
        IdentityFamily {
            ty: FamilyType::new(vec![h.clone()], h.clone()),
        }
    }
}

impl Family for IdentityFamily {
    fn ty(&self) -> &FamilyType {
        &self.ty
    }

    fn apply(&self, _ctx: &[HomType], inputs: &[Matrix<bool>]) -> Result<Matrix<bool>> {
        Ok(inputs[0].clone())
    }
}

type ApplyFn<'a> = Box<dyn Fn(&[HomType], &[Matrix<bool>]) -> Result<Matrix<bool>> + 'a>;

/// A family given by a closure.
pub struct FnFamily<'a> {
    pub ty: FamilyType,
    f: ApplyFn<'a>,
}

impl<'a> FnFamily<'a> {
    pub fn new(
        ty: FamilyType,
        f: impl Fn(&[HomType], &[Matrix<bool>]) -> Result<Matrix<bool>> + 'a,
    ) -> Self {
        FnFamily { ty, f: Box::new(f) }
    }

    /// Entrywise complement of the input; not a transformation of any comb.
    pub fn complement(h: &HomType) -> Self {
        Self::new(FamilyType::new(vec![h.clone()], h.clone()), |_, ins| {
            Ok(ins[0].map(|v| !v))
        })
    }

    /// `φ ↦ (M ⊗ 1) φ` for a fixed `M: a' -> b'`.
    pub fn post_compose(
        a: &HomType,
        b: &HomType,
        mat: Matrix<bool>,
        model: &'a ModelAssignment<bool>,
    ) -> Self {
        let b2 = b.clone();
        Self::new(
            FamilyType::new(vec![a.clone()], HomType::new(a.dom.clone(), b2.cod.clone())),
            move |ctx, ins| {
                let dx2 = model.dim(&ctx[0].cod)?;
                mat_compose(&mat_tensor(&mat, &Matrix::identity(dx2)), &ins[0])
            },
        )
    }
}

impl Family for FnFamily<'_> {
    fn ty(&self) -> &FamilyType {
        &self.ty
    }

    fn apply(&self, ctx: &[HomType], inputs: &[Matrix<bool>]) -> Result<Matrix<bool>> {
        (self.f)(ctx, inputs)
    }
}

pub type TableKey = (Vec<HomType>, Vec<Matrix<bool>>);

/// A family with one table entry replaced.
pub struct Mutated<'a> {
    pub base: &'a dyn Family,
    pub key: TableKey,
    pub value: Matrix<bool>,
}

impl<'a> Mutated<'a> {
    /// Flips the first entry of the base family's value at `key`.
    pub fn flip(
        base: &'a dyn Family,
        ctx: Vec<HomType>,
        inputs: Vec<Matrix<bool>>,
    ) -> Result<Self> {
        let mut value = base.apply(&ctx, &inputs)?;
        if value.data.is_empty() {
            return Err(Error::ShapeMismatch(
                "cannot corrupt an empty matrix".into(),
            ));
        }
        value.data[0] = !value.data[0];
        Ok(Mutated {
            base,
            key: (ctx, inputs),
            value,
        })
    }
}

impl Family for Mutated<'_> {
    fn ty(&self) -> &FamilyType {
        self.base.ty()
    }

    fn apply(&self, ctx: &[HomType], inputs: &[Matrix<bool>]) -> Result<Matrix<bool>> {
        if self.key.0 == ctx && self.key.1 == inputs {
            return Ok(self.value.clone());
        }
        self.base.apply(ctx, inputs)
    }

    fn covers(&self, ctx: &[HomType]) -> bool {
        self.base.covers(ctx)
    }
}

/// Where and how densely the checks look.
#[derive(Clone, Debug)]
pub struct LatGrid {
    pub model: ModelAssignment<bool>,
    pub contexts: Vec<ObjectWord>,
    /// Processes with at most this many entries are enumerated exhaustively.
    pub max_bits: usize,
    /// Seeded processes per shape above the budget.
    pub samples: usize,
    /// Fillings tried per bullet of the multi-input check.
    pub fillings: Fillings,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fillings {
    /// Every cell and every process the grid offers there.
    All,
    /// This many seeded fillings.
    Sample(usize),
}

impl LatGrid {
    pub fn new(sig: &Signature, model: ModelAssignment<bool>, word_len: usize) -> Self {
        LatGrid {
            model,
            contexts: words_up_to(sig, word_len),
            max_bits: 6,
            samples: 12,
            fillings: Fillings::All,
            seed: 0,
        }
    }

    pub fn with_budget(mut self, max_bits: usize, samples: usize) -> Self {
        self.max_bits = max_bits;
        self.samples = samples;
        self
    }

    pub fn max_len(&self) -> usize {
        self.contexts.iter().map(|w| w.len()).max().unwrap_or(0)
    }

    pub fn cells(&self) -> Vec<HomType> {
        let mut out = Vec::new();
        for x in &self.contexts {
            for x2 in &self.contexts {
                out.push(HomType::new(x.clone(), x2.clone()));
            }
        }
        out
    }

    /// All `rows x cols` Boolean matrices within the bit budget, else a seeded sample that
    /// always contains the zero and the all-ones matrix.
    pub fn processes(&self, rows: usize, cols: usize, salt: u64) -> Vec<Matrix<bool>> {
        let bits = rows * cols;
        if bits <= self.max_bits {
            return (0..1u64 << bits)
                .map(|k| from_bits(rows, cols, k))
                .collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(
            self.seed ^ salt ^ ((rows as u64) << 40) ^ ((cols as u64) << 20),
        );
        let mut out = vec![
            Matrix::zeros(rows, cols),
            Matrix::from_fn(rows, cols, |_, _| true),
        ];
        if rows == cols {
            out.push(Matrix::identity(rows));
        }
        while out.len() < self.samples.max(3) {
            let data = (0..bits).map(|_| rng.gen_bool(0.5)).collect();
            out.push(Matrix::from_vec(rows, cols, data).expect("sized"));
        }
        out
    }
}

fn from_bits(rows: usize, cols: usize, k: u64) -> Matrix<bool> {
    Matrix::from_fn(rows, cols, |r, c| (k >> (r * cols + c)) & 1 == 1)
}

fn salt_of(h: &HomType) -> u64 {
    instance_hash("cell", &[h.dom.clone(), h.cod.clone()])
}

/// First counterexample of a check.
#[derive(Clone, Debug, PartialEq)]
pub struct LatWitness {
    pub rule: String,
    pub ctx: Vec<HomType>,
    pub inputs: Vec<Matrix<bool>>,
    pub context: Option<Matrix<bool>>,
    pub expected: Matrix<bool>,
    pub found: Matrix<bool>,
}

impl fmt::Display for LatWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at", self.rule)?;
        for c in &self.ctx {
            write!(f, " {}", hom_token(c))?;
        }
        for m in &self.inputs {
            write!(f, " {}", matrix_token(m))?;
        }
        if let Some(c) = &self.context {
            write!(f, " with {}", matrix_token(c))?;
        }
        write!(
            f,
            ": expected {} found {}",
            matrix_token(&self.expected),
            matrix_token(&self.found)
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Pass,
    Fail(Box<LatWitness>),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    fn note(self, prefix: &str) -> Verdict {
        match self {
            Verdict::Fail(mut w) => {
                w.rule = format!("{prefix}/{}", w.rule);
                Verdict::Fail(w)
            }
            v => v,
        }
    }
}

fn fail(
    rule: &str,
    ctx: &[HomType],
    inputs: &[Matrix<bool>],
    context: Option<&Matrix<bool>>,
    expected: Matrix<bool>,
    found: Matrix<bool>,
) -> Verdict {
    Verdict::Fail(Box::new(LatWitness {
        rule: rule.to_string(),
        ctx: ctx.to_vec(),
        inputs: inputs.to_vec(),
        context: context.cloned(),
        expected,
        found,
    }))
}

/// Commutation of a one-input family with post-composition, pre-composition and parallel
/// extension of the context, over every cell of the grid.
pub fn check_lat_single(t: &dyn Family, grid: &LatGrid) -> Result<Verdict> {
    let ty = t.ty();
    if ty.inputs.len() != 1 {
        return Err(Error::TypeMismatch(format!(
            "{ty} is not a one-input family"
        )));
    }
    let (a, b) = (&ty.inputs[0], &ty.output);
    let m = &grid.model;
    let (da, da2, db, db2) = (
        m.dim(&a.dom)?,
        m.dim(&a.cod)?,
        m.dim(&b.dom)?,
        m.dim(&b.cod)?,
    );
    let max = grid.max_len();
    // context morphisms with their lifts, prepared once per context word
    type Moves = Vec<(HomType, Matrix<bool>, Matrix<bool>, Matrix<bool>)>;
    let mut posts: HashMap<(ObjectWord, ObjectWord), Moves> = HashMap::new();
    let mut pres: HashMap<(ObjectWord, ObjectWord), Moves> = HashMap::new();
    for x in &grid.contexts {
        for x2 in &grid.contexts {
            let (dx, dx2) = (m.dim(x)?, m.dim(x2)?);
            let mut post = Vec::new();
            let mut pre = Vec::new();
            for y in &grid.contexts {
                let cell = HomType::new(x.clone(), y.clone());
                if t.covers(std::slice::from_ref(&cell)) {
                    for k in grid.processes(m.dim(y)?, dx2, salt_of(&cell) ^ 1) {
                        let (la, lb) = (
                            mat_tensor(&Matrix::identity(da2), &k),
                            mat_tensor(&Matrix::identity(db2), &k),
                        );
                        post.push((cell.clone(), k, la, lb));
                    }
                }
                let cell = HomType::new(y.clone(), x2.clone());
                if t.covers(std::slice::from_ref(&cell)) {
                    for k in grid.processes(dx, m.dim(y)?, salt_of(&cell) ^ 2) {
                        let (la, lb) = (
                            mat_tensor(&Matrix::identity(da), &k),
                            mat_tensor(&Matrix::identity(db), &k),
                        );
                        pre.push((cell.clone(), k, la, lb));
                    }
                }
            }
            posts.insert((x.clone(), x2.clone()), post);
            pres.insert((x.clone(), x2.clone()), pre);
        }
    }
    for ctx in grid.cells() {
        if !t.covers(std::slice::from_ref(&ctx)) {
            continue;
        }
        let (x, x2) = (&ctx.dom, &ctx.cod);
        let key = (x.clone(), x2.clone());
        let (r, c) = process_shape(m, a, &ctx)?;
        let mut exts = Vec::new();
        for z in grid.contexts.iter().filter(|z| !z.is_empty()) {
            let cell = HomType::new(x.concat(z), x2.concat(z));
            if x.len() + z.len() <= max
                && x2.len() + z.len() <= max
                && t.covers(std::slice::from_ref(&cell))
            {
                exts.push((cell, Matrix::identity(m.dim(z)?)));
            }
        }
        for phi in grid.processes(r, c, salt_of(&ctx)) {
            let out = t.apply(std::slice::from_ref(&ctx), std::slice::from_ref(&phi))?;
            for (cell, k, la, lb) in &posts[&key] {
                let lhs = t.apply(std::slice::from_ref(cell), &[mat_compose(la, &phi)?])?;
                let rhs = mat_compose(lb, &out)?;
                if lhs != rhs {
                    return Ok(fail("post", &[ctx], &[phi], Some(k), rhs, lhs));
                }
            }
            for (cell, k, la, lb) in &pres[&key] {
                let lhs = t.apply(std::slice::from_ref(cell), &[mat_compose(&phi, la)?])?;
                let rhs = mat_compose(&out, lb)?;
                if lhs != rhs {
                    return Ok(fail("pre", &[ctx], &[phi], Some(k), rhs, lhs));
                }
            }
            for (cell, iz) in &exts {
                let lhs = t.apply(std::slice::from_ref(cell), &[mat_tensor(&phi, iz)])?;
                let rhs = mat_tensor(&out, iz);
                if lhs != rhs {
                    return Ok(fail("extend", &[ctx], &[phi], Some(iz), rhs, lhs));
                }
            }
        }
    }
    Ok(Verdict::Pass)
}

/// Fillings of one input: every grid choice, or a seeded sample of them.
fn fillings(
    grid: &LatGrid,
    h: &HomType,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(HomType, Matrix<bool>)>> {
    let mut all = Vec::new();
    for ctx in grid.cells() {
        let (r, c) = process_shape(&grid.model, h, &ctx)?;
        for p in grid.processes(r, c, salt_of(&ctx)) {
            all.push((ctx.clone(), p));
        }
    }
    Ok(match grid.fillings {
        Fillings::All => all,
        Fillings::Sample(k) => (0..k)
            .map(|_| all.choose(rng).expect("nonempty").clone())
            .collect(),
    })
}

/// Every tuple of fillings of `hs`, or a seeded sample.
fn filling_tuples(
    grid: &LatGrid,
    hs: &[HomType],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<(HomType, Matrix<bool>)>>> {
    let per: Vec<Vec<(HomType, Matrix<bool>)>> = hs
        .iter()
        .map(|h| fillings(grid, h, rng))
        .collect::<Result<_>>()?;
    Ok(match grid.fillings {
        Fillings::All => {
            let lens: Vec<usize> = per.iter().map(|l| l.len()).collect();
            let total: usize = lens.iter().product();
            (0..total)
                .map(|k| {
                    digits(k, &lens)
                        .iter()
                        .enumerate()
                        .map(|(i, d)| per[i][*d].clone())
                        .collect()
                })
                .collect()
        }
        Fillings::Sample(k) => (0..k)
            .map(|j| per.iter().map(|l| l[j % l.len()].clone()).collect())
            .collect(),
    })
}

/// The inductive multi-input check: filling all but the last input leaves a one-input
/// family, and filling the last input leaves, after swapping its context to the front of
/// the others, a family with one input fewer.
pub fn check_lat_multi(t: &dyn Family, grid: &LatGrid) -> Result<Verdict> {
    let ty = t.ty().clone();
    let n = ty.inputs.len();
    match n {
        0 => return Ok(Verdict::Pass),
        1 => return check_lat_single(t, grid),
        _ => {}
    }
    let m = &grid.model;
    let mut rng = ChaCha8Rng::seed_from_u64(
        grid.seed ^ instance_hash("multi", std::slice::from_ref(&ty.output.dom)) ^ n as u64,
    );
    for (k, fill) in filling_tuples(grid, &ty.inputs[..n - 1], &mut rng)?
        .into_iter()
        .enumerate()
    {
        let (ctxs, phis): (Vec<HomType>, Vec<Matrix<bool>>) = fill.into_iter().unzip();
        let gty = FamilyType::new(vec![ty.inputs[n - 1].clone()], ty.output_at(&ctxs));
        let (cs, ps) = (ctxs.clone(), phis.clone());
        let g = FnFamily::new(gty, move |c, ins| {
            let mut c2 = cs.clone();
            c2.push(c[0].clone());
            let mut p2 = ps.clone();
            p2.push(ins[0].clone());
            t.apply(&c2, &p2)
        });
        let v = check_lat_single(&g, grid)?;
        if !v.is_pass() {
            return Ok(v.note(&format!("first {} filled #{k}", n - 1)));
        }
    }
    for (k, (yc, psi)) in fillings(grid, &ty.inputs[n - 1], &mut rng)?
        .into_iter()
        .enumerate()
    {
        let hty = FamilyType::new(
            ty.inputs[..n - 1].to_vec(),
            HomType::new(ty.output.dom.concat(&yc.dom), ty.output.cod.concat(&yc.cod)),
        );
        let (db, db2) = (m.dim(&ty.output.dom)?, m.dim(&ty.output.cod)?);
        let (dy, dy2) = (m.dim(&yc.dom)?, m.dim(&yc.cod)?);
        let (yc2, psi2) = (yc.clone(), psi.clone());
        let h = FnFamily::new(hty, move |c, ins| {
            let mut c2 = c.to_vec();
            c2.push(yc2.clone());
            let mut p2 = ins.to_vec();
            p2.push(psi2.clone());
            let r = t.apply(&c2, &p2)?;
            let rest = joined(c);
            let (dx, dx2) = (m.dim(&rest.dom)?, m.dim(&rest.cod)?);
            // β moves y' past the other primed contexts, and y past the unprimed ones
            Ok(r.permute_rows(&[db2, dx2, dy2], &[0, 2, 1])
                .permute_cols(&[db, dx, dy], &[0, 2, 1]))
        });
        let v = check_lat_multi(&h, grid)?;
        if !v.is_pass() {
            return Ok(v.note(&format!("last filled at {} #{k}", hom_token(&yc))));
        }
    }
    Ok(Verdict::Pass)
}

/// Whether `s` and `t` commute when applied to disjoint factors of bipartite processes.
pub fn check_slot(s: &dyn Family, t: &dyn Family, grid: &LatGrid) -> Result<Verdict> {
    let (sty, tty) = (s.ty(), t.ty());
    if sty.inputs.len() != 1 || tty.inputs.len() != 1 {
        return Err(Error::TypeMismatch(
            "slot check takes one-input families".into(),
        ));
    }
    let m = &grid.model;
    let (a, b, c, d) = (&sty.inputs[0], &sty.output, &tty.inputs[0], &tty.output);
    let dm = |w: &ObjectWord| m.dim(w);
    let whole = HomType::new(a.dom.concat(&c.dom), a.cod.concat(&c.cod));
    let mut checked = 0usize;
    for ctx in grid.cells() {
        let (x, x2) = (&ctx.dom, &ctx.cod);
        let wrap = |h: &HomType| HomType::new(h.dom.concat(x), h.cod.concat(x2));
        let (sc, sd, ta, tb) = (wrap(c), wrap(d), wrap(a), wrap(b));
        if !(s.covers(std::slice::from_ref(&sc))
            && s.covers(std::slice::from_ref(&sd))
            && t.covers(std::slice::from_ref(&ta))
            && t.covers(std::slice::from_ref(&tb)))
        {
            continue;
        }
        checked += 1;
        let (dx, dx2) = (dm(x)?, dm(x2)?);
        let (r, cl) = process_shape(m, &whole, &ctx)?;
        for phi in grid.processes(r, cl, salt_of(&ctx) ^ 3) {
            // S first, on the a-factor with c riding along in the context
            let r1 = s.apply(std::slice::from_ref(&sc), std::slice::from_ref(&phi))?;
            let r1 = swap_front(
                &r1,
                [dm(&b.cod)?, dm(&c.cod)?, dx2],
                [dm(&b.dom)?, dm(&c.dom)?, dx],
            );
            let r1 = t.apply(std::slice::from_ref(&tb), &[r1])?;
            // T first
            let p = swap_front(
                &phi,
                [dm(&a.cod)?, dm(&c.cod)?, dx2],
                [dm(&a.dom)?, dm(&c.dom)?, dx],
            );
            let r2 = t.apply(std::slice::from_ref(&ta), &[p])?;
            let r2 = swap_front(
                &r2,
                [dm(&d.cod)?, dm(&a.cod)?, dx2],
                [dm(&d.dom)?, dm(&a.dom)?, dx],
            );
            let r2 = s.apply(std::slice::from_ref(&sd), &[r2])?;
            let r2 = swap_front(
                &r2,
                [dm(&b.cod)?, dm(&d.cod)?, dx2],
                [dm(&b.dom)?, dm(&d.dom)?, dx],
            );
            if r1 != r2 {
                return Ok(fail("slot", &[ctx], &[phi], None, r1, r2));
            }
        }
    }
    if checked == 0 {
        return Err(Error::IncompleteTable(
            "no grid cell is covered by both families".into(),
        ));
    }
    Ok(Verdict::Pass)
}

/// Exchanges the first two factors on both sides.
fn swap_front(mat: &Matrix<bool>, rows: [usize; 3], cols: [usize; 3]) -> Matrix<bool> {
    mat.permute_rows(&rows, &[1, 0, 2])
        .permute_cols(&cols, &[1, 0, 2])
}

/// `u: b -> a e` and `d: a' e -> b'` with `S(φ) = (d ⊗ 1)(φ ⊗ 1_e)(u ⊗ 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sandwich {
    pub ancilla: ObjectWord,
    pub u: Matrix<bool>,
    pub d: Matrix<bool>,
}

fn sandwich_apply(sw: &Sandwich, de: usize, phi: &Matrix<bool>, dims: [usize; 8]) -> Matrix<bool> {
    let [da, da2, db, db2, dx, dx2, _, _] = dims;
    let mut out = Matrix::zeros(db2 * dx2, db * dx);
    for b2 in 0..db2 {
        for x2 in 0..dx2 {
            for b in 0..db {
                for x in 0..dx {
                    let mut v = false;
                    'sum: for a2 in 0..da2 {
                        for e in 0..de {
                            if !sw.d.get(b2, a2 * de + e) {
                                continue;
                            }
                            for a in 0..da {
                                if sw.u.get(a * de + e, b) && phi.get(a2 * dx2 + x2, a * dx + x) {
                                    v = true;
                                    break 'sum;
                                }
                            }
                        }
                    }
                    out.set(b2 * dx2 + x2, b * dx + x, v);
                }
            }
        }
    }
    out
}

/// Searches every comb `(u, d)` with an ancilla of at most one letter for the sandwich form
/// of input `i` once the other inputs are fixed at the empty context.
pub fn check_single_party_representable(
    sig: &Signature,
    t: &dyn Family,
    i: usize,
    fixed: &[Matrix<bool>],
    grid: &LatGrid,
) -> Result<Option<Sandwich>> {
    let ty = t.ty();
    let n = ty.inputs.len();
    if i >= n || fixed.len() + 1 != n {
        return Err(Error::ArityOutOfRange { index: i, len: n });
    }
    let m = &grid.model;
    let (a, b) = (&ty.inputs[i], &ty.output);
    let (da, da2, db, db2) = (
        m.dim(&a.dom)?,
        m.dim(&a.cod)?,
        m.dim(&b.dom)?,
        m.dim(&b.cod)?,
    );
    let empty = HomType::new(ObjectWord::empty(), ObjectWord::empty());
    let call = |ctx: &HomType, psi: &Matrix<bool>| -> Result<Matrix<bool>> {
        let mut cs = vec![empty.clone(); n];
        cs[i] = ctx.clone();
        let mut ps: Vec<Matrix<bool>> = fixed.to_vec();
        ps.insert(i, psi.clone());
        t.apply(&cs, &ps)
    };
    let mut tests = Vec::new();
    for ctx in grid.cells() {
        if ctx.dom.len() > 1 || ctx.cod.len() > 1 {
            continue;
        }
        let (r, c) = process_shape(m, a, &ctx)?;
        for psi in grid.processes(r, c, salt_of(&ctx) ^ 4) {
            let out = call(&ctx, &psi)?;
            tests.push((m.dim(&ctx.dom)?, m.dim(&ctx.cod)?, psi, out));
        }
    }
    let mut ancillas = vec![ObjectWord::empty()];
    ancillas.extend(sig.object_names().into_iter().map(|o| ObjectWord(vec![o])));
    let mut count: u128 = 0;
    for e in &ancillas {
        let de = m.dim(e)?;
        count += 1u128 << (db * da * de).min(100);
        count = count.saturating_mul(1u128 << (da2 * de * db2).min(100));
    }
    let ceiling = crate::matmodel::ceiling();
    if count > ceiling {
        return Err(Error::ExplosionGuard { count, ceiling });
    }
    for e in ancillas {
        let de = m.dim(&e)?;
        let (ub, dbits) = (da * de * db, db2 * da2 * de);
        for uk in 0..1u64 << ub {
            let u = from_bits(da * de, db, uk);
            for dk in 0..1u64 << dbits {
                let d = from_bits(db2, da2 * de, dk);
                let sw = Sandwich {
                    ancilla: e.clone(),
                    u: u.clone(),
                    d,
                };
                let ok = tests.iter().all(|(dx, dx2, psi, out)| {
                    sandwich_apply(&sw, de, psi, [da, da2, db, db2, *dx, *dx2, 0, 0]) == *out
                });
                if ok {
                    return Ok(Some(sw));
                }
            }
        }
    }
    Ok(None)
}

/// A family tabulated over a finite grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Tabulated {
    pub ty: FamilyType,
    pub dims: Vec<(Name, usize)>,
    pub contexts: Vec<ObjectWord>,
    pub table: HashMap<TableKey, Matrix<bool>>,
}

impl Tabulated {
    pub fn model(&self) -> ModelAssignment<bool> {
        let mut m = ModelAssignment::default();
        for (n, d) in &self.dims {
            m.dims.insert(n.clone(), *d);
        }
        m
    }

    /// The grid the table spans, enumerated exhaustively.
    pub fn grid(&self) -> LatGrid {
        LatGrid {
            model: self.model(),
            contexts: self.contexts.clone(),
            max_bits: 24,
            samples: 0,
            fillings: Fillings::All,
            seed: 0,
        }
    }
}

impl Family for Tabulated {
    fn ty(&self) -> &FamilyType {
        &self.ty
    }

    fn apply(&self, ctx: &[HomType], inputs: &[Matrix<bool>]) -> Result<Matrix<bool>> {
        self.table
            .get(&(ctx.to_vec(), inputs.to_vec()))
            .cloned()
            .ok_or_else(|| {
                let cs: Vec<String> = ctx.iter().map(hom_token).collect();
                let ms: Vec<String> = inputs.iter().map(matrix_token).collect();
                Error::IncompleteTable(format!("{} {}", cs.join(" "), ms.join(" ")))
            })
    }

    fn covers(&self, ctx: &[HomType]) -> bool {
        ctx.iter()
            .all(|h| self.contexts.contains(&h.dom) && self.contexts.contains(&h.cod))
    }
}

/// Tabulates a family over every cell of the grid and every process there.
pub fn tabulate(f: &dyn Family, grid: &LatGrid, max_entries: usize) -> Result<Tabulated> {
    let ty = f.ty().clone();
    let m = &grid.model;
    let cells = grid.cells();
    let mut per_input: Vec<Vec<(HomType, Matrix<bool>)>> = Vec::new();
    for h in &ty.inputs {
        let mut list = Vec::new();
        for c in &cells {
            let (r, k) = process_shape(m, h, c)?;
            if r * k > 24 {
                return Err(Error::ExplosionGuard {
                    count: 1u128 << (r * k).min(127),
                    ceiling: max_entries as u128,
                });
            }
            for p in (0..1u64 << (r * k)).map(|b| from_bits(r, k, b)) {
                list.push((c.clone(), p));
            }
        }
        per_input.push(list);
    }
    let total: u128 = per_input.iter().map(|l| l.len() as u128).product();
    if total > max_entries as u128 {
        return Err(Error::ExplosionGuard {
            count: total,
            ceiling: max_entries as u128,
        });
    }
    let mut table = HashMap::new();
    for idx in 0..total as usize {
        let ds = digits(idx, &per_input.iter().map(|l| l.len()).collect::<Vec<_>>());
        let ctx: Vec<HomType> = ds
            .iter()
            .enumerate()
            .map(|(i, d)| per_input[i][*d].0.clone())
            .collect();
        let ins: Vec<Matrix<bool>> = ds
            .iter()
            .enumerate()
            .map(|(i, d)| per_input[i][*d].1.clone())
            .collect();
        let out = f.apply(&ctx, &ins)?;
        table.insert((ctx, ins), out);
    }
    Ok(Tabulated {
        ty,
        dims: m.dims.iter().map(|(n, d)| (n.clone(), *d)).collect(),
        contexts: grid.contexts.clone(),
        table,
    })
}

pub fn word_token(w: &ObjectWord) -> String {
    if w.is_empty() {
        "I".into()
    } else {
        w.0.iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

pub fn hom_token(h: &HomType) -> String {
    format!("[{},{}]", word_token(&h.dom), word_token(&h.cod))
}

pub fn matrix_token(m: &Matrix<bool>) -> String {
    let rows: Vec<String> = (0..m.rows)
        .map(|r| {
            (0..m.cols)
                .map(|c| if m.get(r, c) { '1' } else { '0' })
                .collect()
        })
        .collect();
    rows.join("/")
}

fn parse_word(sig: &Signature, s: &str, line: usize) -> Result<ObjectWord> {
    if s == "I" {
        return Ok(ObjectWord::empty());
    }
    let mut out = Vec::new();
    for part in s.split('.') {
        if !sig.has_object(part) {
            return Err(Error::syntax(line, 1, format!("unknown object `{part}`")));
        }
        out.push(Name::from(part));
    }
    Ok(ObjectWord(out))
}

fn parse_hom(sig: &Signature, s: &str, line: usize) -> Result<HomType> {
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .and_then(|r| r.split_once(','))
        .ok_or_else(|| Error::syntax(line, 1, format!("bad hole `{s}`, expected [dom,cod]")))?;
    Ok(HomType::new(
        parse_word(sig, inner.0, line)?,
        parse_word(sig, inner.1, line)?,
    ))
}

fn parse_matrix(s: &str, line: usize) -> Result<Matrix<bool>> {
    let rows: Vec<&str> = s.split('/').collect();
    let cols = rows[0].len();
    let mut data = Vec::new();
    for r in &rows {
        if r.len() != cols {
            return Err(Error::syntax(line, 1, format!("ragged matrix `{s}`")));
        }
        for ch in r.chars() {
            data.push(match ch {
                '0' => false,
                '1' => true,
                _ => return Err(Error::syntax(line, 1, format!("bad matrix entry `{ch}`"))),
            });
        }
    }
    Matrix::from_vec(rows.len(), cols, data)
}

/// Reads a family file: `dim`, `contexts`, `type` and `entry` lines.
pub fn parse_family(text: &str, sig: &Signature) -> Result<Tabulated> {
    let mut dims: Vec<(Name, usize)> = Vec::new();
    let mut contexts: Option<Vec<ObjectWord>> = None;
    let mut ty: Option<FamilyType> = None;
    let mut table = HashMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let parts: Vec<&str> = raw
            .split('#')
            .next()
            .unwrap_or("")
            .split_whitespace()
            .collect();
        match parts.as_slice() {
            [] => {}
            ["dim", o, d] => {
                if !sig.has_object(o) {
                    return Err(Error::UndeclaredObject(o.to_string()));
                }
                let d = d
                    .parse::<usize>()
                    .ok()
                    .filter(|d| *d > 0)
                    .ok_or_else(|| Error::syntax(line, 1, format!("bad dimension `{d}`")))?;
                dims.push((Name::from(*o), d));
            }
            ["contexts", ws @ ..] => {
                contexts = Some(
                    ws.iter()
                        .map(|w| parse_word(sig, w, line))
                        .collect::<Result<_>>()?,
                );
            }
            ["type", rest @ ..] => {
                let arrow = rest
                    .iter()
                    .position(|p| *p == "->")
                    .ok_or_else(|| Error::syntax(line, 1, "type line needs `->`"))?;
                if rest.len() != arrow + 2 {
                    return Err(Error::syntax(line, 1, "type line needs one output hole"));
                }
                let inputs = rest[..arrow]
                    .iter()
                    .map(|h| parse_hom(sig, h, line))
                    .collect::<Result<_>>()?;
                ty = Some(FamilyType::new(
                    inputs,
                    parse_hom(sig, rest[arrow + 1], line)?,
                ));
            }
            ["entry", rest @ ..] => {
                let t = ty
                    .as_ref()
                    .ok_or_else(|| Error::syntax(line, 1, "entry before type"))?;
                let n = t.inputs.len();
                if rest.len() != 3 * n + 2 || rest[3 * n] != "->" {
                    return Err(Error::syntax(
                        line,
                        1,
                        format!("entry needs {n} context pairs, {n} matrices, `->` and a result"),
                    ));
                }
                let mut ctx = Vec::new();
                for k in 0..n {
                    ctx.push(HomType::new(
                        parse_word(sig, rest[2 * k], line)?,
                        parse_word(sig, rest[2 * k + 1], line)?,
                    ));
                }
                let ins = rest[2 * n..3 * n]
                    .iter()
                    .map(|s| parse_matrix(s, line))
                    .collect::<Result<Vec<_>>>()?;
                let out = parse_matrix(rest[3 * n + 1], line)?;
                table.insert((ctx, ins), out);
            }
            [kw, ..] => {
                return Err(Error::syntax(
                    line,
                    1,
                    format!("unknown family line `{kw}`"),
                ))
            }
        }
    }
    let ty = ty.ok_or_else(|| Error::syntax(1, 1, "family file has no type line"))?;
    let fam = Tabulated {
        ty,
        dims,
        contexts: contexts.unwrap_or_else(|| vec![ObjectWord::empty()]),
        table,
    };
    let m = fam.model();
    for ((ctx, ins), out) in &fam.table {
        for ((h, c), p) in fam.ty.inputs.iter().zip(ctx).zip(ins) {
            let (r, k) = process_shape(&m, h, c)?;
            if (p.rows, p.cols) != (r, k) {
                return Err(Error::ShapeMismatch(format!(
                    "input at {} must be {r}x{k}",
                    hom_token(c)
                )));
            }
        }
        let (r, k) = process_shape(&m, &fam.ty.output, &joined(ctx))?;
        if (out.rows, out.cols) != (r, k) {
            return Err(Error::ShapeMismatch(format!(
                "result at {ctx:?} must be {r}x{k}"
            )));
        }
    }
    Ok(fam)
}

/// Writes a family file with entries in a fixed order.
pub fn format_family(f: &Tabulated) -> String {
    let mut out = String::new();
    for (n, d) in &f.dims {
        out.push_str(&format!("dim {n} {d}\n"));
    }
    let cs: Vec<String> = f.contexts.iter().map(word_token).collect();
    out.push_str(&format!("contexts {}\n", cs.join(" ")));
    out.push_str(&format!("type {}\n", f.ty));
    let mut lines: Vec<String> = f
        .table
        .iter()
        .map(|((ctx, ins), v)| {
            let mut parts = vec!["entry".to_string()];
            for c in ctx {
                parts.push(word_token(&c.dom));
                parts.push(word_token(&c.cod));
            }
            parts.extend(ins.iter().map(matrix_token));
            parts.push("->".into());
            parts.push(matrix_token(v));
            parts.join(" ")
        })
        .collect();
    lines.sort();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

/// Grid of the behavioral quotient.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeGrid {
    pub dim_bound: usize,
    /// Context words of probe states.
    pub context_len: usize,
    /// Atoms per probe state.
    pub probe_atoms: usize,
    /// Longest middle word in sequential composites of probe states.
    pub mid_len: usize,
    /// Seeded generator assignments per choice of dimensions.
    pub gen_samples: usize,
    /// Probe tuples per assignment before sampling kicks in.
    pub max_tuples: usize,
    pub seed: u64,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        ProbeGrid {
            dim_bound: 2,
            context_len: 1,
            probe_atoms: 4,
            mid_len: 1,
            gen_samples: 2,
            max_tuples: 128,
            seed: 0,
        }
    }
}

/// A probe state `∅ -> [a x, a' x']` with its two evaluations.
#[derive(Clone, Debug)]
pub struct Probe {
    pub ctx: HomType,
    pub state: Term,
    /// Rows over `a' x'`, columns over `a x`.
    pub process: Matrix<bool>,
    /// The state split into `[a,a']` and `[x,x']`, rows over the legs of `[a,a']`.
    pub split: Matrix<bool>,
}

/// Probe states and assignments of a grid, evaluated lazily and cached.
pub struct Prober<'a> {
    pub sig: &'a Signature,
    pub grid: ProbeGrid,
    pub models: Vec<ModelAssignment<bool>>,
    states: RefCell<HashMap<HomType, Rc<Vec<Term>>>>,
    probes: RefCell<HashMap<(usize, HomType), Rc<Vec<Probe>>>>,
}

fn dense(sig: &Signature, t: &Term, m: &ModelAssignment<bool>) -> Result<Matrix<bool>> {
    eval_net(sig, &Net::from_term(sig, t)?, m)?.to_dense()
}

impl<'a> Prober<'a> {
    pub fn new(sig: &'a Signature, grid: ProbeGrid) -> Result<Self> {
        let objs = sig.object_names();
        let combos = (grid.dim_bound.max(1) as u128).pow(objs.len() as u32);
        if combos * grid.gen_samples as u128 > 4096 {
            return Err(Error::ExplosionGuard {
                count: combos * grid.gen_samples as u128,
                ceiling: 4096,
            });
        }
        let mut models = Vec::new();
        for k in 0..combos as usize {
            let ds = digits(k, &vec![grid.dim_bound; objs.len()]);
            for s in 0..grid.gen_samples.max(1) {
                let mut m = ModelAssignment::<bool>::default();
                for (o, d) in objs.iter().zip(&ds) {
                    m.dims.insert(o.clone(), d + 1);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(grid.seed ^ ((k as u64) << 32) ^ s as u64);
                for g in sig
                    .gens
                    .iter()
                    .map(|g| g.name.clone())
                    .chain(sig.polygens.iter().map(|g| g.name.clone()))
                {
                    let (r, c) = m.gen_shape(sig, &g)?;
                    let mat =
                        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_bool(0.5)).collect())?;
                    if sig.gen(&g).is_some() {
                        m.gens.insert(g, mat);
                    } else {
                        m.polygens.insert(g, mat);
                    }
                }
                models.push(m);
            }
        }
        Ok(Prober {
            sig,
            grid,
            models,
            states: RefCell::new(HashMap::new()),
            probes: RefCell::new(HashMap::new()),
        })
    }

    pub fn contexts(&self) -> Vec<HomType> {
        let ws = words_up_to(self.sig, self.grid.context_len);
        let mut out = Vec::new();
        for x in &ws {
            for x2 in &ws {
                out.push(HomType::new(x.clone(), x2.clone()));
            }
        }
        out
    }

    pub fn states(&self, h: &HomType) -> Rc<Vec<Term>> {
        if let Some(v) = self.states.borrow().get(h) {
            return v.clone();
        }
        let v = Rc::new(enumerate_states(
            self.sig,
            h,
            self.grid.probe_atoms,
            self.grid.mid_len,
        ));
        self.states.borrow_mut().insert(h.clone(), v.clone());
        v
    }

    /// Probe states for hole `a` over every context cell, one per distinct value.
    pub fn probes(&self, mi: usize, a: &HomType) -> Result<Rc<Vec<Probe>>> {
        if let Some(v) = self.probes.borrow().get(&(mi, a.clone())) {
            return Ok(v.clone());
        }
        let m = &self.models[mi];
        let mut out = Vec::new();
        for ctx in self.contexts() {
            let whole = HomType::new(a.dom.concat(&ctx.dom), a.cod.concat(&ctx.cod));
            let mut seen = std::collections::HashSet::new();
            let dom_dims = m.letter_dims(&whole.dom)?;
            let cod = m.dim(&whole.cod)?;
            for st in self.states(&whole).iter() {
                let v = dense(self.sig, st, m)?;
                let process = unvectorize(&v.data, &dom_dims, cod);
                if !seen.insert(process.clone()) {
                    continue;
                }
                let split = Term::comp(st.clone(), 0, Term::Split(vec![a.clone(), ctx.clone()]), 0);
                let sv = dense(self.sig, &split, m)?;
                let rows = m.hdim(a)?;
                let split = Matrix::from_vec(rows, sv.data.len() / rows, sv.data)?;
                out.push(Probe {
                    ctx: ctx.clone(),
                    state: st.clone(),
                    process,
                    split,
                });
            }
        }
        let rc = Rc::new(out);
        self.probes.borrow_mut().insert((mi, a.clone()), rc.clone());
        Ok(rc)
    }

    /// Probe tuples for the inputs, all of them or a seeded sample of `max_tuples`.
    pub fn tuples(
        &self,
        mi: usize,
        inputs: &[HomType],
    ) -> Result<(Vec<Rc<Vec<Probe>>>, Vec<Vec<usize>>)> {
        let lists: Vec<Rc<Vec<Probe>>> = inputs
            .iter()
            .map(|a| self.probes(mi, a))
            .collect::<Result<_>>()?;
        let lens: Vec<usize> = lists.iter().map(|l| l.len()).collect();
        if lens.contains(&0) {
            return Ok((lists, vec![]));
        }
        let total: u128 = lens.iter().map(|l| *l as u128).product();
        let idx = if total <= self.grid.max_tuples as u128 {
            (0..total as usize).map(|k| digits(k, &lens)).collect()
        } else {
            let words: Vec<ObjectWord> = inputs
                .iter()
                .flat_map(|h| [h.dom.clone(), h.cod.clone()])
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(
                self.grid.seed ^ instance_hash("tuples", &words) ^ mi as u64,
            );
            (0..self.grid.max_tuples)
                .map(|_| lens.iter().map(|l| rng.gen_range(0..*l)).collect())
                .collect()
        };
        Ok((lists, idx))
    }
}

/// Contracts factor `A` of a `[pre][A][post]` tensor with `p: A x X`, giving `[pre][X][post]`.
fn contract_factor(t: &[bool], pre: usize, a: usize, post: usize, p: &Matrix<bool>) -> Vec<bool> {
    let x = p.cols;
    let mut out = vec![false; pre * x * post];
    for i in 0..pre {
        for k in 0..a {
            let base = (i * a + k) * post;
            if !t[base..base + post].iter().any(|v| *v) {
                continue;
            }
            for j in 0..x {
                if !p.get(k, j) {
                    continue;
                }
                let ob = (i * x + j) * post;
                for l in 0..post {
                    out[ob + l] |= t[base + l];
                }
            }
        }
    }
    out
}

/// A term applied to split probe states: rows over the term's output legs, columns over the
/// legs of the leftover contexts.
pub fn cut(mat: &Matrix<bool>, probes: &[&Probe]) -> Matrix<bool> {
    let mut t = mat.data.clone();
    let rows = mat.rows;
    let a: Vec<usize> = probes.iter().map(|p| p.split.rows).collect();
    let mut tail = 1;
    for k in (0..probes.len()).rev() {
        let pre = rows * a[..k].iter().product::<usize>();
        t = contract_factor(&t, pre, a[k], tail, &probes[k].split);
        tail *= probes[k].split.cols;
    }
    Matrix::from_vec(rows, tail, t).expect("sized")
}

#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorWitness {
    pub assignment: String,
    pub probes: Vec<Term>,
    pub entry: (usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Behavior {
    Equal { tuples: usize },
    Distinguished(Box<BehaviorWitness>),
}

impl Behavior {
    pub fn is_equal(&self) -> bool {
        matches!(self, Behavior::Equal { .. })
    }
}

/// A term with its cuts over the whole grid.
#[derive(Clone, Debug)]
pub struct BehavioralClass {
    pub representative: TypedTerm,
    pub fingerprint: Vec<(usize, Vec<usize>, Matrix<bool>)>,
}

impl BehavioralClass {
    pub fn of(p: &Prober, t: &TypedTerm) -> Result<Self> {
        let mut fingerprint = Vec::new();
        for mi in 0..p.models.len() {
            let mat = dense(p.sig, &t.term, &p.models[mi])?;
            let (lists, idx) = p.tuples(mi, &t.ty.inputs)?;
            for tup in idx {
                let ps: Vec<&Probe> = tup.iter().enumerate().map(|(i, k)| &lists[i][*k]).collect();
                fingerprint.push((mi, tup.clone(), cut(&mat, &ps)));
            }
        }
        Ok(BehavioralClass {
            representative: t.clone(),
            fingerprint,
        })
    }
}

/// Compares the two terms on every probe tuple of the grid.
pub fn behavioral_equal(p: &Prober, s: &TypedTerm, t: &TypedTerm) -> Result<Behavior> {
    if s.ty != t.ty {
        return Err(Error::TypeMismatch(format!("{} vs {}", s.ty, t.ty)));
    }
    let mut count = 0;
    for (mi, m) in p.models.iter().enumerate() {
        let (ms, mt) = (dense(p.sig, &s.term, m)?, dense(p.sig, &t.term, m)?);
        let (lists, idx) = p.tuples(mi, &s.ty.inputs)?;
        for tup in idx {
            let ps: Vec<&Probe> = tup.iter().enumerate().map(|(i, k)| &lists[i][*k]).collect();
            let (a, b) = (cut(&ms, &ps), cut(&mt, &ps));
            count += 1;
            if let Some(entry) = a.first_difference(&b, 0.0) {
                return Ok(Behavior::Distinguished(Box::new(BehaviorWitness {
                    assignment: m.to_string(),
                    probes: ps.iter().map(|p| p.state.clone()).collect(),
                    entry,
                })));
            }
        }
    }
    Ok(Behavior::Equal { tuples: count })
}

/// Whether behavioral equality is respected by `Comp(·,i,·,j)` on this pair of pairs:
/// `None` when a premise fails, else whether the composites are equal too.
pub fn congruence_holds(
    p: &Prober,
    (s, t): (&TypedTerm, &TypedTerm),
    (s2, t2): (&TypedTerm, &TypedTerm),
    i: usize,
    j: usize,
) -> Result<Option<bool>> {
    if !behavioral_equal(p, s, t)?.is_equal() || !behavioral_equal(p, s2, t2)?.is_equal() {
        return Ok(None);
    }
    let (a, b) = (
        crate::term::compose(s, i, s2, j)?,
        crate::term::compose(t, i, t2, j)?,
    );
    Ok(Some(behavioral_equal(p, &a, &b)?.is_equal()))
}
