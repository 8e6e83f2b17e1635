//! Strong profunctors over the base category and the functor from terms into them.
//!
//! The profunctor of a hole `a` sends a context `(x,x')` to the states `∅ -> a, [x,x']`.
//! Base morphisms act on the context side by pre- and post-composition and the strength
//! widens both sides of the context by a word. In a matrix model an element is a process
//! with rows over `a' x'` and columns over `a x`.
//!
//! The action by `(f,g)` and the strength at `y` are plugged into an element through a
//! one-input polymorphism on the context, so the profunctor axioms reduce to equations
//! between the matrices of those polymorphisms. Those equations hold on every element at
//! once; the element-level checks only tie the symbolic constructions to the model formulas.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gen::{base_terms_between, enumerate_states, TermGen};
use crate::holes::{
    apply_dsupermap, behavioral_equal, check_lat_multi, joined, word_token, DSupermap, FamilyType,
    Fillings, Induced, LatGrid, Probe, ProbeGrid, Prober, Verdict,
};
use crate::laws::{instance_hash, words_up_to};
use crate::matmodel::sparse::eval_net;
use crate::matmodel::{
    eval_base, mat_compose, mat_tensor, random_assignment, reversed_flat, unvectorize,
    AssignmentSpace, Matrix, ModelAssignment, Semiring,
};
use crate::net::{Net, Node, Src};
use crate::signature::{HomType, ObjectWord, Signature};
use crate::term::{base_typecheck, compose, BaseTerm, Term, TypedTerm};

fn dense<S: Semiring>(sig: &Signature, t: &Term, m: &ModelAssignment<S>) -> Result<Matrix<S>> {
    eval_net(sig, &Net::from_term(sig, t)?, m)?.to_dense()
}

#[derive(Clone, Debug, PartialEq)]
pub enum ElementValue {
    /// A state `∅ -> a, [x,x']`.
    Term(Term),
    /// Rows over `a' x'`, columns over `a x`.
    Matrix(Matrix<bool>),
}

/// An element of the profunctor of `hole` at context `ctx`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfElement {
    pub hole: HomType,
    pub ctx: HomType,
    pub value: ElementValue,
}

impl ProfElement {
    pub fn new(sig: &Signature, hole: HomType, ctx: HomType, term: Term) -> Result<Self> {
        let t = TypedTerm::new(sig, term)?;
        if !t.ty.inputs.is_empty() || t.ty.outputs != [hole.clone(), ctx.clone()] {
            return Err(Error::TypeMismatch(format!(
                "element of {hole} at {ctx} must be a state of [{hole}, {ctx}], found {}",
                t.ty
            )));
        }
        Ok(ProfElement {
            hole,
            ctx,
            value: ElementValue::Term(t.term),
        })
    }

    /// Splits a state `∅ -> [a x, a' x']` into hole and context.
    pub fn from_state(sig: &Signature, hole: HomType, ctx: HomType, state: Term) -> Result<Self> {
        let split = Term::comp(state, 0, Term::Split(vec![hole.clone(), ctx.clone()]), 0);
        ProfElement::new(sig, hole, ctx, split)
    }

    pub fn from_matrix(
        m: &ModelAssignment<bool>,
        hole: HomType,
        ctx: HomType,
        mat: Matrix<bool>,
    ) -> Result<Self> {
        let rows = m.dim(&hole.cod)? * m.dim(&ctx.cod)?;
        let cols = m.dim(&hole.dom)? * m.dim(&ctx.dom)?;
        if (mat.rows, mat.cols) != (rows, cols) {
            return Err(Error::ShapeMismatch(format!(
                "element of {hole} at {ctx} must be {rows}x{cols}, found {}x{}",
                mat.rows, mat.cols
            )));
        }
        Ok(ProfElement {
            hole,
            ctx,
            value: ElementValue::Matrix(mat),
        })
    }

    pub fn term(&self) -> Option<&Term> {
        match &self.value {
            ElementValue::Term(t) => Some(t),
            ElementValue::Matrix(_) => None,
        }
    }

    /// The element as a process in the model.
    pub fn process(&self, sig: &Signature, m: &ModelAssignment<bool>) -> Result<Matrix<bool>> {
        match &self.value {
            ElementValue::Matrix(mat) => Ok(mat.clone()),
            ElementValue::Term(t) => {
                let v = dense(sig, t, m)?;
                pair_to_process(&v.data, m, &self.hole, &self.ctx)
            }
        }
    }
}

/// Reads a state of `[a, x]` laid out on the legs of both homs as a process
/// `a x -> a' x'`.
pub fn pair_to_process<S: Semiring>(
    v: &[S],
    m: &ModelAssignment<S>,
    hole: &HomType,
    ctx: &HomType,
) -> Result<Matrix<S>> {
    let (ad, xd) = (m.letter_dims(&hole.dom)?, m.letter_dims(&ctx.dom)?);
    let (da, da2) = (m.dim(&hole.dom)?, m.dim(&hole.cod)?);
    let (dx, dx2) = (m.dim(&ctx.dom)?, m.dim(&ctx.cod)?);
    if v.len() != da * da2 * dx * dx2 {
        return Err(Error::ShapeMismatch(format!(
            "state of length {} for [{hole}, {ctx}]",
            v.len()
        )));
    }
    let mut out = Matrix::zeros(da2 * dx2, da * dx);
    for a in 0..da {
        let ra = reversed_flat(a, &ad);
        for x in 0..dx {
            let rx = reversed_flat(x, &xd);
            for a2 in 0..da2 {
                for x2 in 0..dx2 {
                    let idx = (ra * da2 + a2) * dx * dx2 + rx * dx2 + x2;
                    out.set(a2 * dx2 + x2, a * dx + x, v[idx]);
                }
            }
        }
    }
    Ok(out)
}

/// The polymorphism `[x,x'] -> [y,y']` through which `(f: y -> x, g: x' -> y')` acts.
pub fn action_poly(sig: &Signature, f: &BaseTerm, g: &BaseTerm) -> Result<TypedTerm> {
    let (y, x) = base_typecheck(sig, f)?;
    let (x2, y2) = base_typecheck(sig, g)?;
    let pre = Term::comp(
        Term::Lift(f.clone()),
        0,
        Term::SeqM(y.clone(), x, x2.clone()),
        0,
    );
    let post = Term::comp(Term::Lift(g.clone()), 0, Term::SeqM(y, x2, y2), 1);
    TypedTerm::new(sig, Term::comp(pre, 0, post, 0))
}

/// The polymorphism `[x,x'] -> [x y, x' y]` of the strength at `y`.
pub fn strength_poly(sig: &Signature, ctx: &HomType, y: &ObjectWord) -> Result<TypedTerm> {
    let par = Term::ParM(ctx.dom.clone(), ctx.cod.clone(), y.clone(), y.clone());
    TypedTerm::new(sig, Term::comp(Term::IdSt(y.clone()), 0, par, 1))
}

fn plug_context(
    sig: &Signature,
    e: &ProfElement,
    t: &Term,
    new_ctx: HomType,
) -> Result<ProfElement> {
    match &e.value {
        ElementValue::Term(s) => ProfElement::new(
            sig,
            e.hole.clone(),
            new_ctx,
            Term::comp(s.clone(), 1, t.clone(), 0),
        ),
        ElementValue::Matrix(_) => unreachable!("model elements are handled by the caller"),
    }
}

/// `(I ⊗ G) φ (I ⊗ F)`.
pub fn action_matrix<S: Semiring>(
    phi: &Matrix<S>,
    da: usize,
    da2: usize,
    f: &Matrix<S>,
    g: &Matrix<S>,
) -> Result<Matrix<S>> {
    let left = mat_tensor(&Matrix::identity(da2), g);
    let right = mat_tensor(&Matrix::identity(da), f);
    mat_compose(&left, &mat_compose(phi, &right)?)
}

/// Acts on the context of `e` by `f: y -> x` before it and `g: x' -> y'` after it.
pub fn prof_action(
    sig: &Signature,
    m: &ModelAssignment<bool>,
    e: &ProfElement,
    f: &BaseTerm,
    g: &BaseTerm,
) -> Result<ProfElement> {
    let (y, x) = base_typecheck(sig, f)?;
    let (x2, y2) = base_typecheck(sig, g)?;
    if x != e.ctx.dom || x2 != e.ctx.cod {
        return Err(Error::TypeMismatch(format!(
            "cannot act by {x} <- {y} and {x2} -> {y2} on context {}",
            e.ctx
        )));
    }
    let ctx = HomType::new(y, y2);
    match &e.value {
        ElementValue::Term(_) => plug_context(sig, e, &action_poly(sig, f, g)?.term, ctx),
        ElementValue::Matrix(phi) => {
            let (da, da2) = (m.dim(&e.hole.dom)?, m.dim(&e.hole.cod)?);
            let r = action_matrix(phi, da, da2, &eval_base(f, m)?, &eval_base(g, m)?)?;
            ProfElement::from_matrix(m, e.hole.clone(), ctx, r)
        }
    }
}

/// Extends the context of `e` by `y` on both sides.
pub fn strength(
    sig: &Signature,
    m: &ModelAssignment<bool>,
    e: &ProfElement,
    y: &ObjectWord,
) -> Result<ProfElement> {
    let ctx = HomType::new(e.ctx.dom.concat(y), e.ctx.cod.concat(y));
    match &e.value {
        ElementValue::Term(_) => plug_context(sig, e, &strength_poly(sig, &e.ctx, y)?.term, ctx),
        ElementValue::Matrix(phi) => {
            let r = mat_tensor(phi, &Matrix::identity(m.dim(y)?));
            ProfElement::from_matrix(m, e.hole.clone(), ctx, r)
        }
    }
}

/// The elements of one hole over a grid of contexts, in one model.
#[derive(Clone, Debug)]
pub struct StrongProfunctorView {
    pub hole: HomType,
    pub model: ModelAssignment<bool>,
    pub elements: BTreeMap<HomType, Vec<Matrix<bool>>>,
}

impl StrongProfunctorView {
    pub fn tabulate(p: &Prober, mi: usize, hole: &HomType) -> Result<Self> {
        let mut elements: BTreeMap<HomType, Vec<Matrix<bool>>> = BTreeMap::new();
        for pr in p.probes(mi, hole)?.iter() {
            elements
                .entry(pr.ctx.clone())
                .or_default()
                .push(pr.process.clone());
        }
        Ok(StrongProfunctorView {
            hole: hole.clone(),
            model: p.models[mi].clone(),
            elements,
        })
    }

    pub fn act(
        &self,
        sig: &Signature,
        ctx: &HomType,
        phi: &Matrix<bool>,
        f: &BaseTerm,
        g: &BaseTerm,
    ) -> Result<Matrix<bool>> {
        let e = ProfElement::from_matrix(&self.model, self.hole.clone(), ctx.clone(), phi.clone())?;
        match prof_action(sig, &self.model, &e, f, g)?.value {
            ElementValue::Matrix(r) => Ok(r),
            ElementValue::Term(_) => unreachable!(),
        }
    }

    pub fn strength(&self, phi: &Matrix<bool>, y: &ObjectWord) -> Result<Matrix<bool>> {
        Ok(mat_tensor(phi, &Matrix::identity(self.model.dim(y)?)))
    }
}

/// The image of a single-output term: a family of functions between profunctors.
#[derive(Clone, Debug)]
pub struct FMorphism<'a> {
    pub sig: &'a Signature,
    ty: FamilyType,
    net: Net,
}

impl<'a> FMorphism<'a> {
    pub fn new(sig: &'a Signature, s: &TypedTerm) -> Result<Self> {
        if s.ty.outputs.len() != 1 {
            return Err(Error::MultipleOutputsUnsupported);
        }
        Ok(FMorphism {
            sig,
            ty: FamilyType::new(s.ty.inputs.clone(), s.ty.outputs[0].clone()),
            net: Net::from_term(sig, &s.term)?,
        })
    }

    /// Merges the outputs of `s` into one hom first.
    pub fn merged(sig: &'a Signature, s: &TypedTerm) -> Result<Self> {
        if s.ty.outputs.len() == 1 {
            return FMorphism::new(sig, s);
        }
        let outs = &s.ty.outputs;
        let mut net = Net::from_term(sig, &s.term)?;
        let merged = joined(outs);
        net.nodes.push(Node {
            atom: Term::Merge(outs.clone()),
            ins: outs.clone(),
            outs: vec![merged.clone()],
            src: net.out_src.clone(),
        });
        net.out_src = vec![Src::Out(net.nodes.len() - 1, 0)];
        net.outputs = vec![merged.clone()];
        Ok(FMorphism {
            sig,
            ty: FamilyType::new(s.ty.inputs.clone(), merged),
            net,
        })
    }

    pub fn ty(&self) -> FamilyType {
        self.ty.clone()
    }

    /// The net feeding the hole of each element into the term and merging the contexts
    /// behind its output.
    pub fn net(&self, elems: &[ProfElement]) -> Result<Net> {
        let ty = self.ty();
        if elems.len() != ty.inputs.len() {
            return Err(Error::ArityOutOfRange {
                index: elems.len(),
                len: ty.inputs.len(),
            });
        }
        let mut nodes: Vec<Node> = Vec::new();
        let mut feeds: Vec<(Src, Src)> = Vec::new();
        for (k, e) in elems.iter().enumerate() {
            if e.hole != ty.inputs[k] {
                return Err(Error::TypeMismatch(format!(
                    "input {k} is {} but the element lives in {}",
                    ty.inputs[k], e.hole
                )));
            }
            let t = e
                .term()
                .ok_or_else(|| Error::TypeMismatch(format!("element {k} has no term")))?;
            let n = Net::from_term(self.sig, t)?;
            let off = nodes.len();
            let shift = |s: Src| match s {
                Src::Out(a, p) => Src::Out(a + off, p),
                Src::In(_) => unreachable!("states have no inputs"),
            };
            feeds.push((shift(n.out_src[0]), shift(n.out_src[1])));
            for mut node in n.nodes {
                node.src = node.src.into_iter().map(shift).collect();
                nodes.push(node);
            }
        }
        let s = self.net.clone();
        let off = nodes.len();
        let map = |src: Src| match src {
            Src::In(k) => feeds[k].0,
            Src::Out(a, p) => Src::Out(a + off, p),
        };
        for mut node in s.nodes {
            node.src = node.src.into_iter().map(map).collect();
            nodes.push(node);
        }
        let mut pairs = vec![ty.output.clone()];
        pairs.extend(elems.iter().map(|e| e.ctx.clone()));
        let mut src = vec![map(s.out_src[0])];
        src.extend(feeds.iter().map(|f| f.1));
        let merged = joined(&pairs);
        nodes.push(Node {
            atom: Term::Merge(pairs.clone()),
            ins: pairs,
            outs: vec![merged.clone()],
            src,
        });
        Ok(Net {
            inputs: vec![],
            outputs: vec![merged],
            out_src: vec![Src::Out(nodes.len() - 1, 0)],
            nodes,
        })
    }

    /// Evaluates the symbolic image as a process with rows over `b' x_1'..x_n'` and
    /// columns over `b x_1..x_n`.
    pub fn apply_symbolic(
        &self,
        m: &ModelAssignment<bool>,
        elems: &[ProfElement],
    ) -> Result<Matrix<bool>> {
        let net = self.net(elems)?;
        let h = &net.outputs[0];
        let v = eval_net(self.sig, &net, m)?.to_dense()?;
        Ok(unvectorize(
            &v.data,
            &m.letter_dims(&h.dom)?,
            m.dim(&h.cod)?,
        ))
    }

    /// The comb whose induced family is the image in the model.
    pub fn core(&self, m: &ModelAssignment<bool>) -> Result<DSupermap<bool>> {
        let ty = self.ty();
        let mat = eval_net(self.sig, &self.net, m)?.to_dense()?;
        core_from_matrix(m, ty, &mat)
    }

    pub fn family(&self, m: &ModelAssignment<bool>) -> Result<Induced> {
        Ok(Induced {
            sup: self.core(m)?,
            model: m.clone(),
        })
    }
}

/// Rearranges the matrix of a single-output polymorphism into comb layout:
/// `core[(b', a_1..a_n), (b, a_1'..a_n')] = M[legs of b b', legs of a_i a_i']`.
pub fn core_from_matrix(
    m: &ModelAssignment<bool>,
    ty: FamilyType,
    mat: &Matrix<bool>,
) -> Result<DSupermap<bool>> {
    let (rows, cols) = DSupermap::<bool>::core_shape(&ty, m)?;
    let bl = m.letter_dims(&ty.output.dom)?;
    let (db, db2) = (m.dim(&ty.output.dom)?, m.dim(&ty.output.cod)?);
    let ins: Vec<(Vec<usize>, usize, usize)> = ty
        .inputs
        .iter()
        .map(|h| Ok((m.letter_dims(&h.dom)?, m.dim(&h.dom)?, m.dim(&h.cod)?)))
        .collect::<Result<_>>()?;
    let in_total: usize = ins.iter().map(|(_, a, b)| a * b).product();
    if (mat.rows, mat.cols) != (db * db2, in_total) {
        return Err(Error::ShapeMismatch(format!(
            "matrix {}x{} for a family of type {ty}",
            mat.rows, mat.cols
        )));
    }
    let mut core = Matrix::zeros(rows, cols);
    for r in 0..mat.rows {
        let (rb, b2) = (r / db2, r % db2);
        let b = reversed_flat(rb, &{
            let mut d = bl.clone();
            d.reverse();
            d
        });
        for c in 0..mat.cols {
            if !mat.get(r, c) {
                continue;
            }
            let mut rest = c;
            let mut parts = vec![(0, 0); ins.len()];
            for (k, (ad, da, da2)) in ins.iter().enumerate().rev() {
                let block = rest % (da * da2);
                rest /= da * da2;
                let mut rev = ad.clone();
                rev.reverse();
                parts[k] = (reversed_flat(block / da2, &rev), block % da2);
            }
            let (mut cr, mut cc) = (b2, b);
            for (k, (_, da, da2)) in ins.iter().enumerate() {
                cr = cr * da + parts[k].0;
                cc = cc * da2 + parts[k].1;
            }
            core.set(cr, cc, true);
        }
    }
    DSupermap::new(ty, core, m)
}

/// Runs the multi-input check on the image of `s` in the grid's model.
pub fn check_lat_of_f(sig: &Signature, s: &TypedTerm, grid: &LatGrid) -> Result<Verdict> {
    let fam = FMorphism::merged(sig, s)?.family(&grid.model)?;
    check_lat_multi(&fam, grid)
}

/// `F(s)` and `F(t)` agree on every probe tuple of the grid.
pub fn f_equal(p: &Prober, s: &TypedTerm, t: &TypedTerm) -> Result<bool> {
    if s.ty != t.ty {
        return Err(Error::TypeMismatch(format!("{} vs {}", s.ty, t.ty)));
    }
    let (fs, ft) = (FMorphism::new(p.sig, s)?, FMorphism::new(p.sig, t)?);
    for (mi, m) in p.models.iter().enumerate() {
        let (cs, ct) = (fs.core(m)?, ft.core(m)?);
        let (lists, idx) = p.tuples(mi, &s.ty.inputs)?;
        for tup in idx {
            let ps: Vec<&Probe> = tup.iter().enumerate().map(|(i, k)| &lists[i][*k]).collect();
            let ctx: Vec<HomType> = ps.iter().map(|p| p.ctx.clone()).collect();
            let phis: Vec<Matrix<bool>> = ps.iter().map(|p| p.process.clone()).collect();
            if apply_dsupermap(m, &cs, &ctx, &phis)? != apply_dsupermap(m, &ct, &ctx, &phis)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FaithfulReport {
    /// `[behavioral][F]` counts, index 0 for equal and 1 for distinguished.
    pub agreement: [[usize; 2]; 2],
    pub disagreements: Vec<(TypedTerm, TypedTerm)>,
}

impl FaithfulReport {
    pub fn consistent(&self) -> bool {
        self.agreement[0][1] == 0 && self.agreement[1][0] == 0
    }

    pub fn equal_class(&self) -> usize {
        self.agreement[0][0]
    }

    pub fn distinguished_class(&self) -> usize {
        self.agreement[1][1]
    }
}

/// Compares the behavioral verdict with pointwise equality of the images.
pub fn check_faithful(p: &Prober, pairs: &[(TypedTerm, TypedTerm)]) -> Result<FaithfulReport> {
    let mut rep = FaithfulReport::default();
    for (s, t) in pairs {
        let b = usize::from(!behavioral_equal(p, s, t)?.is_equal());
        let f = usize::from(!f_equal(p, s, t)?);
        rep.agreement[b][f] += 1;
        if b != f {
            rep.disagreements.push((s.clone(), t.clone()));
        }
    }
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Profunctor,
    Strength,
    Multifunctor,
    Lat,
    Faithful,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Profunctor,
        Suite::Strength,
        Suite::Multifunctor,
        Suite::Lat,
        Suite::Faithful,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Profunctor => "profunctor",
            Suite::Strength => "strength",
            Suite::Multifunctor => "multifunctor",
            Suite::Lat => "lat",
            Suite::Faithful => "faithful",
        }
    }

    pub fn parse(s: &str) -> Option<Vec<Suite>> {
        if s == "all" {
            return Some(Suite::ALL.to_vec());
        }
        Suite::ALL.iter().find(|x| x.name() == s).map(|x| vec![*x])
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Grid and sample sizes of the suites.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbedConfig {
    /// Boolean dimensions are `1..=dim_bound`.
    pub dim_bound: usize,
    /// Longest context word in the axiom suites.
    pub word_len: usize,
    /// Float samples per axiom and random terms of the lat suite. The multifunctor suite
    /// draws half as many pairs and the faithful suite twice as many.
    pub samples: usize,
    pub float_dim: usize,
    /// Seeded generator assignments per choice of dimensions.
    pub gen_samples: usize,
    /// Atoms of random terms.
    pub max_atoms: usize,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim_bound: 2,
            word_len: 2,
            samples: 100,
            float_dim: 3,
            gen_samples: 2,
            max_atoms: 6,
            seed: 0,
        }
    }
}

impl EmbedConfig {
    pub fn probe_grid(&self) -> ProbeGrid {
        ProbeGrid {
            dim_bound: self.dim_bound,
            gen_samples: self.gen_samples,
            seed: self.seed,
            ..ProbeGrid::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseResult {
    pub suite: Suite,
    pub id: String,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for CaseResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "EMBED {} {} {}",
            self.suite,
            self.id,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteSummary {
    pub cases: usize,
    pub failures: Vec<CaseResult>,
    /// Individual equations checked across all cases.
    pub checks: usize,
    pub notes: Vec<String>,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Reporter<'r> {
    suite: Suite,
    summary: SuiteSummary,
    out: &'r mut dyn FnMut(&CaseResult),
}

impl Reporter<'_> {
    fn case(&mut self, id: String, pass: bool, detail: String) {
        let r = CaseResult {
            suite: self.suite,
            id,
            pass,
            detail,
        };
        (self.out)(&r);
        self.summary.cases += 1;
        if !r.pass {
            self.summary.failures.push(r);
        }
    }
}

/// Runs one suite, reporting every case.
pub fn run_suite(
    sig: &Signature,
    suite: Suite,
    cfg: &EmbedConfig,
    out: &mut dyn FnMut(&CaseResult),
) -> Result<SuiteSummary> {
    let mut rep = Reporter {
        suite,
        summary: SuiteSummary::default(),
        out,
    };
    match suite {
        Suite::Profunctor | Suite::Strength => axiom_suite(sig, suite, cfg, &mut rep)?,
        Suite::Multifunctor => multifunctor_suite(sig, cfg, &mut rep)?,
        Suite::Lat => lat_suite(sig, cfg, &mut rep)?,
        Suite::Faithful => faithful_suite(sig, cfg, &mut rep)?,
    }
    Ok(rep.summary)
}

/// Matrices of the context polymorphisms in one model, cached.
struct Ops<'a, S: Semiring> {
    sig: &'a Signature,
    m: ModelAssignment<S>,
    act: HashMap<(BaseTerm, BaseTerm), Matrix<S>>,
    st: HashMap<(HomType, ObjectWord), Matrix<S>>,
    evals: usize,
}

impl<'a, S: Semiring> Ops<'a, S> {
    fn new(sig: &'a Signature, m: ModelAssignment<S>) -> Self {
        Ops {
            sig,
            m,
            act: HashMap::new(),
            st: HashMap::new(),
            evals: 0,
        }
    }

    fn a(&mut self, f: &BaseTerm, g: &BaseTerm) -> Result<Matrix<S>> {
        let key = (f.clone(), g.clone());
        if let Some(v) = self.act.get(&key) {
            return Ok(v.clone());
        }
        let t = action_poly(self.sig, f, g)?;
        let v = dense(self.sig, &t.term, &self.m)?;
        self.evals += 1;
        self.act.insert(key, v.clone());
        Ok(v)
    }

    fn s(&mut self, ctx: &HomType, y: &ObjectWord) -> Result<Matrix<S>> {
        let key = (ctx.clone(), y.clone());
        if let Some(v) = self.st.get(&key) {
            return Ok(v.clone());
        }
        let t = strength_poly(self.sig, ctx, y)?;
        let v = dense(self.sig, &t.term, &self.m)?;
        self.evals += 1;
        self.st.insert(key, v.clone());
        Ok(v)
    }
}

fn id(w: &ObjectWord) -> BaseTerm {
    BaseTerm::Id(w.clone())
}

/// Every base morphism between words of the grid, by codomain and by domain.
struct Homs {
    words: Vec<ObjectWord>,
    all: HashMap<(ObjectWord, ObjectWord), Vec<BaseTerm>>,
}

impl Homs {
    fn new(sig: &Signature, len: usize) -> Self {
        let words = words_up_to(sig, len);
        let mut all = HashMap::new();
        for u in &words {
            for v in &words {
                let fs = base_terms_between(sig, u, v);
                if !fs.is_empty() {
                    all.insert((u.clone(), v.clone()), fs);
                }
            }
        }
        Homs { words, all }
    }

    /// `(y, f: y -> x)` for every `y`.
    fn ending_at(&self, x: &ObjectWord) -> Vec<(ObjectWord, BaseTerm)> {
        self.words
            .iter()
            .flat_map(|y| {
                self.all
                    .get(&(y.clone(), x.clone()))
                    .into_iter()
                    .flatten()
                    .map(move |f| (y.clone(), f.clone()))
            })
            .collect()
    }

    /// `(y, g: x -> y)` for every `y`.
    fn starting_at(&self, x: &ObjectWord) -> Vec<(ObjectWord, BaseTerm)> {
        self.words
            .iter()
            .flat_map(|y| {
                self.all
                    .get(&(x.clone(), y.clone()))
                    .into_iter()
                    .flatten()
                    .map(move |g| (y.clone(), g.clone()))
            })
            .collect()
    }
}

fn cell_id(ctx: &HomType) -> String {
    format!("{}-{}", word_token(&ctx.dom), word_token(&ctx.cod))
}

const PROFUNCTOR_AXIOMS: [&str; 4] = ["unit", "contra", "co", "interchange"];
const STRENGTH_AXIOMS: [&str; 5] = ["unit", "assoc", "nat-pre", "nat-post", "dinat"];

/// Checks one axiom at context `ctx`. `pick` chooses the quantified data: all of it in the
/// exhaustive mode, one random choice in the float mode. Returns the number of equations
/// checked and the first failure.
fn axiom_at<S: Semiring>(
    ops: &mut Ops<S>,
    homs: &Homs,
    suite: Suite,
    axiom: &str,
    ctx: &HomType,
    pick: &mut dyn FnMut(usize) -> Vec<usize>,
    tol: f64,
) -> Result<(usize, Option<String>)> {
    let (x, x2) = (&ctx.dom, &ctx.cod);
    let mut count = 0;
    let mut check = |l: Matrix<S>, r: Matrix<S>, what: &dyn Fn() -> String| -> Option<String> {
        count += 1;
        if l.rows == r.rows && l.cols == r.cols && l.approx_eq(&r, tol) {
            None
        } else {
            Some(what())
        }
    };
    let mut fail = None;
    match (suite, axiom) {
        (Suite::Profunctor, "unit") => {
            let a = ops.a(&id(x), &id(x2))?;
            fail = fail.or(check(a.clone(), Matrix::identity(a.cols), &|| {
                "identity action".into()
            }));
        }
        (Suite::Profunctor, "contra") => {
            let fs = homs.ending_at(x);
            for i in pick(fs.len()) {
                let (y, f) = &fs[i];
                let gs = homs.ending_at(y);
                for k in pick(gs.len()) {
                    let (_, f1) = &gs[k];
                    let l = mat_compose(&ops.a(f1, &id(x2))?, &ops.a(f, &id(x2))?)?;
                    let r = ops.a(&f1.clone().then(f.clone()), &id(x2))?;
                    fail = fail.or(check(l, r, &|| format!("f = {f:?}, f' = {f1:?}")));
                }
            }
        }
        (Suite::Profunctor, "co") => {
            let gs = homs.starting_at(x2);
            for i in pick(gs.len()) {
                let (y2, g) = &gs[i];
                let hs = homs.starting_at(y2);
                for k in pick(hs.len()) {
                    let (_, g1) = &hs[k];
                    let l = mat_compose(&ops.a(&id(x), g1)?, &ops.a(&id(x), g)?)?;
                    let r = ops.a(&id(x), &g.clone().then(g1.clone()))?;
                    fail = fail.or(check(l, r, &|| format!("g = {g:?}, g' = {g1:?}")));
                }
            }
        }
        (Suite::Profunctor, "interchange") => {
            let (fs, gs) = (homs.ending_at(x), homs.starting_at(x2));
            for i in pick(fs.len()) {
                let (y, f) = &fs[i];
                for k in pick(gs.len()) {
                    let (y2, g) = &gs[k];
                    let both = ops.a(f, g)?;
                    let l = mat_compose(&ops.a(f, &id(y2))?, &ops.a(&id(x), g)?)?;
                    let r = mat_compose(&ops.a(&id(y), g)?, &ops.a(f, &id(x2))?)?;
                    fail = fail.or(check(l, both.clone(), &|| {
                        format!("f = {f:?} after g = {g:?}")
                    }));
                    fail = fail.or(check(r, both, &|| format!("g = {g:?} after f = {f:?}")));
                }
            }
        }
        (Suite::Strength, "unit") => {
            let s = ops.s(ctx, &ObjectWord::empty())?;
            fail = fail.or(check(s.clone(), Matrix::identity(s.cols), &|| {
                "empty strength".into()
            }));
        }
        (Suite::Strength, "assoc") => {
            let ws = &homs.words;
            for i in pick(ws.len()) {
                let y = &ws[i];
                let wide = HomType::new(x.concat(y), x2.concat(y));
                for k in pick(ws.len()) {
                    let z = &ws[k];
                    let l = mat_compose(&ops.s(&wide, z)?, &ops.s(ctx, y)?)?;
                    let r = ops.s(ctx, &y.concat(z))?;
                    fail = fail.or(check(l, r, &|| format!("y = {y}, z = {z}")));
                }
            }
        }
        (Suite::Strength, "nat-pre") => {
            let fs = homs.ending_at(x);
            for i in pick(fs.len()) {
                let (y0, f) = &fs[i];
                for k in pick(homs.words.len()) {
                    let y = &homs.words[k];
                    let l = mat_compose(
                        &ops.s(&HomType::new(y0.clone(), x2.clone()), y)?,
                        &ops.a(f, &id(x2))?,
                    )?;
                    let r = mat_compose(
                        &ops.a(&f.clone().tensor(id(y)), &id(&x2.concat(y)))?,
                        &ops.s(ctx, y)?,
                    )?;
                    fail = fail.or(check(l, r, &|| format!("f = {f:?}, y = {y}")));
                }
            }
        }
        (Suite::Strength, "nat-post") => {
            let gs = homs.starting_at(x2);
            for i in pick(gs.len()) {
                let (y0, g) = &gs[i];
                for k in pick(homs.words.len()) {
                    let y = &homs.words[k];
                    let l = mat_compose(
                        &ops.s(&HomType::new(x.clone(), y0.clone()), y)?,
                        &ops.a(&id(x), g)?,
                    )?;
                    let r = mat_compose(
                        &ops.a(&id(&x.concat(y)), &g.clone().tensor(id(y)))?,
                        &ops.s(ctx, y)?,
                    )?;
                    fail = fail.or(check(l, r, &|| format!("g = {g:?}, y = {y}")));
                }
            }
        }
        (Suite::Strength, "dinat") => {
            let ws = &homs.words;
            for i in pick(ws.len()) {
                let y = &ws[i];
                let hs = homs.starting_at(y);
                for k in pick(hs.len()) {
                    let (y1, h) = &hs[k];
                    let l = mat_compose(
                        &ops.a(&id(x).tensor(h.clone()), &id(&x2.concat(y1)))?,
                        &ops.s(ctx, y1)?,
                    )?;
                    let r = mat_compose(
                        &ops.a(&id(&x.concat(y)), &id(x2).tensor(h.clone()))?,
                        &ops.s(ctx, y)?,
                    )?;
                    fail = fail.or(check(l, r, &|| format!("h = {h:?}")));
                }
            }
        }
        _ => unreachable!("unknown axiom {axiom}"),
    }
    Ok((count, fail))
}

/// Exhaustive Boolean cases per model and context, then seeded float samples per axiom.
fn axiom_suite(sig: &Signature, suite: Suite, cfg: &EmbedConfig, rep: &mut Reporter) -> Result<()> {
    let axioms: &[&str] = if suite == Suite::Profunctor {
        &PROFUNCTOR_AXIOMS
    } else {
        &STRENGTH_AXIOMS
    };
    let homs = Homs::new(sig, cfg.word_len);
    let prober = Prober::new(sig, cfg.probe_grid())?;
    let cells: Vec<HomType> = homs
        .words
        .iter()
        .flat_map(|x| {
            homs.words
                .iter()
                .map(move |x2| HomType::new(x.clone(), x2.clone()))
        })
        .collect();
    for axiom in axioms {
        for (mi, m) in prober.models.iter().enumerate() {
            let mut ops = Ops::new(sig, m.clone());
            for ctx in &cells {
                let mut all = |n: usize| (0..n).collect();
                let (n, fail) = axiom_at(&mut ops, &homs, suite, axiom, ctx, &mut all, 0.0)?;
                rep.summary.checks += n;
                rep.case(
                    format!("{axiom}-b{mi}-{}", cell_id(ctx)),
                    fail.is_none(),
                    fail.unwrap_or_default(),
                );
            }
        }
        let space = AssignmentSpace::all(sig, cfg.float_dim);
        let mut rng =
            ChaCha8Rng::seed_from_u64(cfg.seed ^ instance_hash(&format!("{suite}-{axiom}"), &[]));
        let mut rejected = 0;
        let mut k = 0;
        while k < cfg.samples {
            let m: ModelAssignment<f64> =
                random_assignment(&space, &mut rng, |r| r.gen_range(-1.0..1.0))?;
            let ctx = cells[rng.gen_range(0..cells.len())].clone();
            let mut ops = Ops::new(sig, m);
            let mut one = |n: usize| {
                if n == 0 {
                    vec![]
                } else {
                    vec![rng.gen_range(0..n)]
                }
            };
            let (n, fail) = match axiom_at(&mut ops, &homs, suite, axiom, &ctx, &mut one, 1e-9) {
                Err(Error::ExplosionGuard { .. }) if rejected < cfg.samples * 100 => {
                    rejected += 1;
                    continue;
                }
                r => r?,
            };
            rep.summary.checks += n;
            rep.case(
                format!("{axiom}-f{k}"),
                fail.is_none(),
                fail.unwrap_or_default(),
            );
            k += 1;
        }
        if rejected > 0 {
            rep.summary.notes.push(format!(
                "{axiom}: {rejected} float draws over the size cap redrawn"
            ));
        }
    }
    element_cases(sig, suite, cfg, &prober, &homs, rep)
}

/// The symbolic action and strength on probe elements against the model formulas.
fn element_cases(
    sig: &Signature,
    suite: Suite,
    cfg: &EmbedConfig,
    prober: &Prober,
    homs: &Homs,
    rep: &mut Reporter,
) -> Result<()> {
    let q = sig.object_names().into_iter().next();
    let hole = match q {
        Some(o) => HomType::new(ObjectWord(vec![o.clone()]), ObjectWord(vec![o])),
        None => return Ok(()),
    };
    let ctx_words = words_up_to(sig, 1.min(cfg.word_len));
    for (mi, m) in prober.models.iter().enumerate() {
        for x in &ctx_words {
            for x2 in &ctx_words {
                let ctx = HomType::new(x.clone(), x2.clone());
                let whole = HomType::new(hole.dom.concat(x), hole.cod.concat(x2));
                let mut fail = None;
                let mut n = 0;
                for st in enumerate_states(sig, &whole, 3, 1) {
                    let e = ProfElement::from_state(sig, hole.clone(), ctx.clone(), st)?;
                    let phi = e.process(sig, m)?;
                    let me = ProfElement::from_matrix(m, hole.clone(), ctx.clone(), phi)?;
                    let mut pairs: Vec<(ProfElement, ProfElement)> = Vec::new();
                    if suite == Suite::Profunctor {
                        for (_, f) in homs.ending_at(x).iter().filter(|(y, _)| y.len() <= 1) {
                            for (_, g) in homs.starting_at(x2).iter().filter(|(y, _)| y.len() <= 1)
                            {
                                pairs.push((
                                    prof_action(sig, m, &e, f, g)?,
                                    prof_action(sig, m, &me, f, g)?,
                                ));
                            }
                        }
                    } else {
                        for y in &ctx_words {
                            pairs.push((strength(sig, m, &e, y)?, strength(sig, m, &me, y)?));
                        }
                    }
                    for (a, b) in pairs {
                        n += 1;
                        if a.process(sig, m)? != b.process(sig, m)? && fail.is_none() {
                            fail = Some(format!("{:?}", a.term()));
                        }
                    }
                }
                rep.summary.checks += n;
                rep.case(
                    format!("elements-b{mi}-{}", cell_id(&ctx)),
                    fail.is_none(),
                    fail.unwrap_or_default(),
                );
            }
        }
    }
    Ok(())
}

/// `F(s)` at position `j` of `F(t)` against `F(s ∘_j t)`, model route on every probe tuple
/// and the symbolic route on the first few.
pub fn check_multifunctor_pair(
    p: &Prober,
    s: &TypedTerm,
    t: &TypedTerm,
    j: usize,
    symbolic: usize,
) -> Result<Option<String>> {
    let st = compose(s, 0, t, j)?;
    let (fs, ft, fst) = (
        FMorphism::new(p.sig, s)?,
        FMorphism::new(p.sig, t)?,
        FMorphism::new(p.sig, &st)?,
    );
    let ns = s.ty.inputs.len();
    for (mi, m) in p.models.iter().enumerate() {
        let (cs, ct, cst) = (fs.core(m)?, ft.core(m)?, fst.core(m)?);
        let (lists, idx) = p.tuples(mi, &st.ty.inputs)?;
        for (n, tup) in idx.iter().enumerate() {
            let ps: Vec<&Probe> = tup.iter().enumerate().map(|(i, k)| &lists[i][*k]).collect();
            let ctx: Vec<HomType> = ps.iter().map(|p| p.ctx.clone()).collect();
            let phis: Vec<Matrix<bool>> = ps.iter().map(|p| p.process.clone()).collect();
            let whole = apply_dsupermap(m, &cst, &ctx, &phis)?;
            let inner = apply_dsupermap(m, &cs, &ctx[j..j + ns], &phis[j..j + ns])?;
            let mut octx = ctx[..j].to_vec();
            octx.push(joined(&ctx[j..j + ns]));
            octx.extend_from_slice(&ctx[j + ns..]);
            let mut ophis = phis[..j].to_vec();
            ophis.push(inner);
            ophis.extend_from_slice(&phis[j + ns..]);
            let outer = apply_dsupermap(m, &ct, &octx, &ophis)?;
            if whole != outer {
                return Ok(Some(format!("model {mi}, tuple {tup:?}")));
            }
            if n < symbolic {
                let elems: Vec<ProfElement> = ps
                    .iter()
                    .zip(&st.ty.inputs)
                    .map(|(pr, a)| {
                        ProfElement::from_state(p.sig, a.clone(), pr.ctx.clone(), pr.state.clone())
                    })
                    .collect::<Result<_>>()?;
                if fst.apply_symbolic(m, &elems)? != whole {
                    return Ok(Some(format!("symbolic route, model {mi}, tuple {tup:?}")));
                }
            }
        }
    }
    Ok(None)
}

fn multifunctor_suite(sig: &Signature, cfg: &EmbedConfig, rep: &mut Reporter) -> Result<()> {
    let prober = Prober::new(sig, cfg.probe_grid())?;
    let mut gen = TermGen::new(sig, cfg.seed ^ instance_hash("multifunctor", &[]));
    for k in 0..cfg.samples.div_ceil(2) {
        let (s, t, j) = gen.composable_pair(cfg.max_atoms);
        let fail = check_multifunctor_pair(&prober, &s, &t, j, 2)?;
        rep.summary.checks += 1;
        rep.case(
            format!("pair-{k}"),
            fail.is_none(),
            fail.unwrap_or_default(),
        );
    }
    Ok(())
}

/// The grid of the lat suite for one model. Each bullet of the multi-input check tries two
/// fillings up to four holes and one beyond, where the checks double per hole.
pub fn lat_suite_grid(
    sig: &Signature,
    m: ModelAssignment<bool>,
    seed: u64,
    holes: usize,
) -> LatGrid {
    let mut g = LatGrid::new(sig, m, 1).with_budget(4, 6);
    g.fillings = Fillings::Sample(if holes <= 4 { 2 } else { 1 });
    g.seed = seed;
    g
}

fn lat_suite(sig: &Signature, cfg: &EmbedConfig, rep: &mut Reporter) -> Result<()> {
    let prober = Prober::new(sig, cfg.probe_grid())?;
    let mut gen = TermGen::new(sig, cfg.seed ^ instance_hash("lat", &[]));
    gen.multi_output = false;
    for k in 0..cfg.samples {
        let s = gen.single_output(cfg.max_atoms);
        let m = prober.models[k % prober.models.len()].clone();
        let grid = lat_suite_grid(sig, m, cfg.seed ^ k as u64, s.ty.inputs.len());
        let v = check_lat_of_f(sig, &s, &grid)?;
        rep.summary.checks += 1;
        let detail = match &v {
            Verdict::Pass => String::new(),
            Verdict::Fail(w) => format!("{s}: {w}"),
        };
        rep.case(format!("term-{k}"), v.is_pass(), detail);
    }
    Ok(())
}

/// Pairs for the faithfulness check: even indices are rewrite walks of a random term, odd
/// ones swap a generator for another of the same type.
pub fn faithful_pairs(
    sig: &Signature,
    seed: u64,
    count: usize,
    max_atoms: usize,
) -> Result<Vec<(TypedTerm, TypedTerm)>> {
    let mut gen = TermGen::new(sig, seed);
    gen.multi_output = false;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        if k % 2 == 1 {
            let swapped = (0..64).find_map(|_| {
                let s = gen.single_output(max_atoms);
                gen.swap_generator(&s).map(|t| (s, t))
            });
            if let Some(pair) = swapped {
                out.push(pair);
                continue;
            }
        }
        let s = gen.single_output(max_atoms);
        let t = gen.rewrite_walk(&s, 4)?;
        out.push((s, t));
    }
    Ok(out)
}

/// Class coverage required of the faithfulness sample.
pub const FAITHFUL_MIN_CLASS: usize = 20;

fn faithful_suite(sig: &Signature, cfg: &EmbedConfig, rep: &mut Reporter) -> Result<()> {
    let prober = Prober::new(sig, cfg.probe_grid())?;
    let count = cfg.samples * 2;
    let need = FAITHFUL_MIN_CLASS.min(count / 2);
    let mut seed = cfg.seed;
    for attempt in 0..16 {
        let pairs = faithful_pairs(sig, seed, count, cfg.max_atoms.min(5))?;
        let mut verdicts = Vec::with_capacity(pairs.len());
        let mut classes = [0usize; 2];
        for (s, t) in &pairs {
            let b = behavioral_equal(&prober, s, t)?.is_equal();
            let f = f_equal(&prober, s, t)?;
            classes[usize::from(!b)] += 1;
            verdicts.push((b, f));
        }
        if (classes[0] < need || classes[1] < need) && attempt < 15 {
            rep.summary.notes.push(format!(
                "seed {seed}: {} equal, {} distinguished; reseeding",
                classes[0], classes[1]
            ));
            seed = seed.wrapping_add(1);
            continue;
        }
        rep.summary.notes.push(format!(
            "seed {seed}: {} equal, {} distinguished",
            classes[0], classes[1]
        ));
        for (k, ((b, f), (s, t))) in verdicts.iter().zip(&pairs).enumerate() {
            rep.summary.checks += 1;
            let detail = if b == f {
                String::new()
            } else {
                format!("behavioral {b}, F {f}: {s} vs {t}")
            };
            rep.case(format!("pair-{k}"), b == f, detail);
        }
        let covered = classes[0] >= need && classes[1] >= need;
        rep.case(
            "coverage".into(),
            covered,
            format!("{} equal, {} distinguished", classes[0], classes[1]),
        );
        break;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holes::{Family, IdentityFamily};
    use crate::matmodel::vectorize;
    use proptest::prelude::*;
    use rand::Rng;

    fn w(s: &[&str]) -> ObjectWord {
        ObjectWord::of(s)
    }

    fn h(a: &[&str], b: &[&str]) -> HomType {
        HomType::new(w(a), w(b))
    }

    fn model(q: usize, r: usize, seed: u64) -> ModelAssignment<bool> {
        let sig = Signature::demo();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = ModelAssignment::with_dims(&[("q", q), ("r", r)]);
        for g in &sig.gens {
            let (a, b) = m.gen_shape(&sig, &g.name).unwrap();
            let mat =
                Matrix::from_vec(a, b, (0..a * b).map(|_| rng.gen_bool(0.5)).collect()).unwrap();
            m.gens.insert(g.name.clone(), mat);
        }
        m
    }

    /// `Σ` over the hole and context indices of a state, written out index by index.
    fn oracle_process(v: &[bool], da: usize, da2: usize, dx: usize, dx2: usize) -> Matrix<bool> {
        Matrix::from_fn(da2 * dx2, da * dx, |r, c| {
            v[((c / dx) * da2 + r / dx2) * dx * dx2 + (c % dx) * dx2 + r % dx2]
        })
    }

    #[test]
    fn single_letter_elements_read_like_the_oracle() {
        let sig = Signature::demo();
        let m = model(2, 2, 1);
        let hole = h(&["q"], &["q"]);
        let ctx = h(&["q"], &["r"]);
        for st in enumerate_states(&sig, &h(&["q", "q"], &["q", "r"]), 3, 1) {
            let e = ProfElement::from_state(&sig, hole.clone(), ctx.clone(), st).unwrap();
            let v = dense(&sig, e.term().unwrap(), &m).unwrap();
            assert_eq!(
                e.process(&sig, &m).unwrap(),
                oracle_process(&v.data, 2, 2, 2, 2)
            );
        }
    }

    #[test]
    fn element_of_a_state_is_the_state_as_process() {
        let sig = Signature::demo();
        let m = model(2, 2, 3);
        let (hole, ctx) = (h(&["q"], &["q"]), h(&["r"], &["q"]));
        let whole = h(&["q", "r"], &["q", "q"]);
        for st in enumerate_states(&sig, &whole, 3, 1) {
            let v = dense(&sig, &st, &m).unwrap();
            let direct = unvectorize(&v.data, &m.letter_dims(&whole.dom).unwrap(), 4);
            let e = ProfElement::from_state(&sig, hole.clone(), ctx.clone(), st).unwrap();
            assert_eq!(e.process(&sig, &m).unwrap(), direct);
        }
    }

    #[test]
    fn acting_by_identities_does_nothing() {
        let sig = Signature::demo();
        let m = model(2, 1, 0);
        let (hole, ctx) = (h(&["q"], &["q"]), h(&["q"], &["q"]));
        for st in enumerate_states(&sig, &h(&["q", "q"], &["q", "q"]), 3, 1) {
            let e = ProfElement::from_state(&sig, hole.clone(), ctx.clone(), st).unwrap();
            let a = prof_action(&sig, &m, &e, &id(&w(&["q"])), &id(&w(&["q"]))).unwrap();
            assert_eq!(a.process(&sig, &m).unwrap(), e.process(&sig, &m).unwrap());
        }
    }

    #[test]
    fn action_type_errors() {
        let sig = Signature::demo();
        let m = model(2, 1, 0);
        let e =
            ProfElement::from_state(&sig, h(&["q"], &["q"]), h(&[], &[]), Term::IdSt(w(&["q"])))
                .unwrap();
        let err = prof_action(&sig, &m, &e, &BaseTerm::gen("h"), &id(&ObjectWord::empty()));
        assert!(matches!(err, Err(Error::TypeMismatch(_))));
        let bad = ProfElement::new(&sig, h(&["q"], &["q"]), h(&[], &[]), Term::IdSt(w(&["q"])));
        assert!(matches!(bad, Err(Error::TypeMismatch(_))));
    }

    #[test]
    fn contravariant_composition_on_grid_elements() {
        let sig = Signature::demo();
        let m = model(2, 2, 5);
        let (hole, ctx) = (h(&["q"], &["q"]), h(&["q"], &["r"]));
        let f = BaseTerm::gen("f");
        let k = BaseTerm::gen("k");
        for st in enumerate_states(&sig, &h(&["q", "q"], &["q", "r"]), 3, 1) {
            let e = ProfElement::from_state(&sig, hole.clone(), ctx.clone(), st).unwrap();
            let r = w(&["r"]);
            let step = prof_action(&sig, &m, &e, &f, &id(&r)).unwrap();
            let twice = prof_action(&sig, &m, &step, &k, &id(&r)).unwrap();
            let once = prof_action(&sig, &m, &e, &k.clone().then(f.clone()), &id(&r)).unwrap();
            assert_eq!(
                twice.process(&sig, &m).unwrap(),
                once.process(&sig, &m).unwrap()
            );
        }
    }

    #[test]
    fn acting_on_an_identity_state_by_a_pair_of_functions() {
        // the identity state on x, split as hole I and context (x, x), acted on by (f, f)
        // is the process f f with the cup index summed
        let sig = Signature::demo();
        let m = model(2, 1, 9);
        let e =
            ProfElement::from_state(&sig, h(&[], &[]), h(&["q"], &["q"]), Term::IdSt(w(&["q"])))
                .unwrap();
        let f = BaseTerm::gen("f");
        let a = prof_action(&sig, &m, &e, &f, &f)
            .unwrap()
            .process(&sig, &m)
            .unwrap();
        let fm = m.gens["f"].clone();
        let oracle = Matrix::from_fn(2, 2, |r, c| (0..2).any(|k| fm.get(k, c) && fm.get(r, k)));
        assert_eq!(a, oracle);
    }

    #[test]
    fn strength_at_the_unit_word_is_the_identity() {
        let sig = Signature::demo();
        let m = model(2, 2, 2);
        let (hole, ctx) = (h(&["q"], &["q"]), h(&["q"], &[]));
        for st in enumerate_states(&sig, &h(&["q", "q"], &["q"]), 3, 1) {
            let e = ProfElement::from_state(&sig, hole.clone(), ctx.clone(), st).unwrap();
            let s = strength(&sig, &m, &e, &ObjectWord::empty()).unwrap();
            assert_eq!(s.ctx, ctx);
            assert_eq!(s.process(&sig, &m).unwrap(), e.process(&sig, &m).unwrap());
        }
    }

    #[test]
    fn strength_twice_is_strength_once() {
        let sig = Signature::demo();
        let m = model(2, 2, 4);
        let (hole, ctx) = (h(&["q"], &["q"]), h(&["r"], &["q"]));
        let (y, z) = (w(&["q"]), w(&["r"]));
        for st in enumerate_states(&sig, &h(&["q", "r"], &["q", "q"]), 3, 1) {
            let e = ProfElement::from_state(&sig, hole.clone(), ctx.clone(), st).unwrap();
            let two = strength(&sig, &m, &strength(&sig, &m, &e, &y).unwrap(), &z).unwrap();
            let one = strength(&sig, &m, &e, &y.concat(&z)).unwrap();
            assert_eq!(two.ctx, one.ctx);
            assert_eq!(
                two.process(&sig, &m).unwrap(),
                one.process(&sig, &m).unwrap()
            );
        }
    }

    #[test]
    fn image_of_the_identity_is_the_identity_family() {
        let sig = Signature::demo();
        let m = model(2, 2, 0);
        let hole = h(&["q"], &["r"]);
        let t = TypedTerm::new(&sig, Term::Ident(vec![hole.clone()])).unwrap();
        let fam = FMorphism::new(&sig, &t).unwrap().family(&m).unwrap();
        let id_fam = IdentityFamily::new(&hole);
        let grid = LatGrid::new(&sig, m.clone(), 1).with_budget(4, 6);
        for ctx in grid.cells() {
            let rows = m.dim(&hole.cod).unwrap() * m.dim(&ctx.cod).unwrap();
            let cols = m.dim(&hole.dom).unwrap() * m.dim(&ctx.dom).unwrap();
            for phi in grid.processes(rows, cols, 7) {
                let c = [ctx.clone()];
                let ins = [phi];
                assert_eq!(
                    fam.apply(&c, &ins).unwrap(),
                    id_fam.apply(&c, &ins).unwrap()
                );
            }
        }
    }

    #[test]
    fn sequential_box_composes_lifts() {
        // F(SeqM) on lift f and lift g is lift of f then g, for every Boolean f and g
        let sig = Signature::new().with_object("q");
        let q = w(&["q"]);
        let t = TypedTerm::new(&sig, Term::SeqM(q.clone(), q.clone(), q.clone())).unwrap();
        let m = ModelAssignment::<bool>::with_dims(&[("q", 2)]);
        let fam = FMorphism::new(&sig, &t).unwrap().family(&m).unwrap();
        let e = HomType::new(ObjectWord::empty(), ObjectWord::empty());
        for a in 0..16u64 {
            for b in 0..16u64 {
                let f = Matrix::from_fn(2, 2, |r, c| (a >> (r * 2 + c)) & 1 == 1);
                let g = Matrix::from_fn(2, 2, |r, c| (b >> (r * 2 + c)) & 1 == 1);
                let out = fam
                    .apply(&[e.clone(), e.clone()], &[f.clone(), g.clone()])
                    .unwrap();
                assert_eq!(out, mat_compose(&g, &f).unwrap());
            }
        }
    }

    #[test]
    fn symbolic_and_model_images_agree() {
        let sig = Signature::demo();
        let p = Prober::new(
            &sig,
            ProbeGrid {
                probe_atoms: 3,
                ..ProbeGrid::default()
            },
        )
        .unwrap();
        let mut gen = TermGen::new(&sig, 11);
        gen.multi_output = false;
        for _ in 0..12 {
            let s = gen.single_output(4);
            let fm = FMorphism::new(&sig, &s).unwrap();
            for mi in [0, 3, 7] {
                let m = &p.models[mi];
                let core = fm.core(m).unwrap();
                let (lists, idx) = p.tuples(mi, &s.ty.inputs).unwrap();
                for tup in idx.iter().take(6) {
                    let ps: Vec<&Probe> =
                        tup.iter().enumerate().map(|(i, k)| &lists[i][*k]).collect();
                    let ctx: Vec<HomType> = ps.iter().map(|p| p.ctx.clone()).collect();
                    let phis: Vec<Matrix<bool>> = ps.iter().map(|p| p.process.clone()).collect();
                    let elems: Vec<ProfElement> = ps
                        .iter()
                        .zip(&s.ty.inputs)
                        .map(|(pr, a)| {
                            ProfElement::from_state(
                                &sig,
                                a.clone(),
                                pr.ctx.clone(),
                                pr.state.clone(),
                            )
                            .unwrap()
                        })
                        .collect();
                    assert_eq!(
                        fm.apply_symbolic(m, &elems).unwrap(),
                        apply_dsupermap(m, &core, &ctx, &phis).unwrap(),
                        "{s}"
                    );
                }
            }
        }
    }

    #[test]
    fn multiple_outputs() {
        let sig = Signature::demo();
        let pairs = vec![h(&["q"], &["q"]), h(&["r"], &["q"])];
        let t = TypedTerm::new(&sig, Term::Split(pairs.clone())).unwrap();
        assert_eq!(
            FMorphism::new(&sig, &t).unwrap_err(),
            Error::MultipleOutputsUnsupported
        );
        let fm = FMorphism::merged(&sig, &t).unwrap();
        assert_eq!(fm.ty().output, joined(&pairs));
        // splitting then merging is the identity
        let m = model(2, 1, 0);
        let grid = LatGrid::new(&sig, m.clone(), 1).with_budget(4, 6);
        assert!(check_lat_of_f(&sig, &t, &grid).unwrap().is_pass());
        let fam = fm.family(&m).unwrap();
        let c = [HomType::new(ObjectWord::empty(), ObjectWord::empty())];
        let phi = Matrix::from_fn(4, 2, |r, c| r % 3 == c);
        assert_eq!(fam.apply(&c, std::slice::from_ref(&phi)).unwrap(), phi);
    }

    #[test]
    fn parallel_box_image_is_a_lat() {
        let sig = Signature::demo();
        let t =
            TypedTerm::new(&sig, Term::ParM(w(&["q"]), w(&["q"]), w(&["r"]), w(&["q"]))).unwrap();
        for (q, r) in [(1, 2), (2, 1)] {
            let grid = LatGrid::new(&sig, model(q, r, 0), 1).with_budget(4, 6);
            assert!(check_lat_of_f(&sig, &t, &grid).unwrap().is_pass());
        }
    }

    #[test]
    fn images_of_composites_compose() {
        let sig = Signature::demo();
        let p = Prober::new(
            &sig,
            ProbeGrid {
                probe_atoms: 3,
                ..ProbeGrid::default()
            },
        )
        .unwrap();
        let mut gen = TermGen::new(&sig, 5);
        for _ in 0..6 {
            let (s, t, j) = gen.composable_pair(5);
            assert_eq!(
                check_multifunctor_pair(&p, &s, &t, j, 1).unwrap(),
                None,
                "{s} into {t} at {j}"
            );
        }
    }

    #[test]
    fn faithfulness_examples() {
        let sig = Signature::demo();
        let p = Prober::new(
            &sig,
            ProbeGrid {
                probe_atoms: 3,
                ..ProbeGrid::default()
            },
        )
        .unwrap();
        let lift = |n: &str| TypedTerm::new(&sig, Term::Lift(BaseTerm::gen(n))).unwrap();
        let rep = check_faithful(&p, &[(lift("f"), lift("f")), (lift("f"), lift("g"))]).unwrap();
        assert!(rep.consistent());
        assert_eq!(rep.agreement, [[1, 0], [0, 1]]);
    }

    #[test]
    fn model_elements_follow_the_formulas() {
        let sig = Signature::demo();
        let m = model(2, 2, 8);
        let phi = Matrix::from_fn(4, 4, |r, c| (r * 3 + c) % 5 < 2);
        let e = ProfElement::from_matrix(&m, h(&["q"], &["q"]), h(&["q"], &["r"]), phi.clone())
            .unwrap();
        let s = strength(&sig, &m, &e, &w(&["q"])).unwrap();
        let ElementValue::Matrix(sm) = s.value else {
            panic!()
        };
        assert_eq!(sm, mat_tensor(&phi, &Matrix::identity(2)));
        let v = vectorize(&phi, &[2, 2]);
        assert_eq!(v.rows, 16);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn action_matches_the_model_formula(seed in 0u64..1000, pick in 0usize..64) {
            let sig = Signature::demo();
            let m = model(2, 2, seed);
            let homs = Homs::new(&sig, 1);
            let hole = h(&["q"], &["q"]);
            let ws = &homs.words;
            let ctx = HomType::new(ws[pick % 3].clone(), ws[(pick / 3) % 3].clone());
            let whole = HomType::new(hole.dom.concat(&ctx.dom), hole.cod.concat(&ctx.cod));
            let states = enumerate_states(&sig, &whole, 3, 1);
            prop_assume!(!states.is_empty());
            let st = states[pick % states.len()].clone();
            let e = ProfElement::from_state(&sig, hole.clone(), ctx.clone(), st).unwrap();
            let fs = homs.ending_at(&ctx.dom);
            let gs = homs.starting_at(&ctx.cod);
            let (_, f) = &fs[pick % fs.len()];
            let (_, g) = &gs[(pick / 7) % gs.len()];
            let sym = prof_action(&sig, &m, &e, f, g).unwrap().process(&sig, &m).unwrap();
            let phi = e.process(&sig, &m).unwrap();
            let direct = action_matrix(&phi, 2, 2, &eval_base(f, &m).unwrap(), &eval_base(g, &m).unwrap()).unwrap();
            prop_assert_eq!(sym, direct);
        }

        #[test]
        fn strength_matches_the_model_formula(seed in 0u64..1000, pick in 0usize..64) {
            let sig = Signature::demo();
            let m = model(2, 2, seed);
            let ws = words_up_to(&sig, 1);
            let hole = h(&["q"], &["r"]);
            let ctx = HomType::new(ws[pick % 3].clone(), ws[(pick / 3) % 3].clone());
            let y = &ws[(pick / 9) % 3];
            let whole = HomType::new(hole.dom.concat(&ctx.dom), hole.cod.concat(&ctx.cod));
            let states = enumerate_states(&sig, &whole, 3, 1);
            prop_assume!(!states.is_empty());
            let st = states[pick % states.len()].clone();
            let e = ProfElement::from_state(&sig, hole.clone(), ctx.clone(), st).unwrap();
            let sym = strength(&sig, &m, &e, y).unwrap().process(&sig, &m).unwrap();
            let phi = e.process(&sig, &m).unwrap();
            prop_assert_eq!(sym, mat_tensor(&phi, &Matrix::identity(m.dim(y).unwrap())));
        }
    }
}
