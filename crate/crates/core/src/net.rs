//! Port graphs of atomic terms.
//!
//! A net forgets the bracketing of `Comp` and the `InPerm`/`OutPerm` bookkeeping, so the
//! associativity, interchange and symmetry axioms of the polycategory hold on the nose.
//! `Ident` dissolves into wires.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::signature::{HomType, Signature};
use crate::term::{apply_perm, typecheck, Term};

/// Where a wire comes from: a boundary input or a node output port.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Src {
    In(usize),
    Out(usize, usize),
}

/// Where a wire goes: a node input port or a boundary output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Sink {
    Node(usize, usize),
    Out(usize),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Node {
    pub atom: Term,
    pub ins: Vec<HomType>,
    pub outs: Vec<HomType>,
    pub src: Vec<Src>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Net {
    pub inputs: Vec<HomType>,
    pub outputs: Vec<HomType>,
    pub nodes: Vec<Node>,
    pub out_src: Vec<Src>,
}

pub fn is_atom(t: &Term) -> bool {
    !matches!(
        t,
        Term::Ident(_) | Term::InPerm(..) | Term::OutPerm(..) | Term::Comp(..)
    )
}

struct Builder {
    parent: Vec<usize>,
    producer: Vec<Option<Src>>,
    nodes: Vec<(Term, Vec<HomType>, Vec<HomType>, Vec<usize>)>,
}

struct Frag {
    ins: Vec<usize>,
    outs: Vec<usize>,
}

impl Builder {
    fn wire(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.producer.push(None);
        self.parent.len() - 1
    }

    fn find(&mut self, w: usize) -> usize {
        let mut r = w;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut x = w;
        while self.parent[x] != r {
            let nx = self.parent[x];
            self.parent[x] = r;
            x = nx;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let p = self.producer[ra].or(self.producer[rb]);
            self.parent[rb] = ra;
            self.producer[ra] = p;
        }
    }

    fn build(&mut self, sig: &Signature, t: &Term) -> Result<Frag> {
        match t {
            Term::Ident(p) => {
                let ws: Vec<usize> = p.iter().map(|_| self.wire()).collect();
                Ok(Frag {
                    ins: ws.clone(),
                    outs: ws,
                })
            }
            Term::InPerm(s, p) => {
                let f = self.build(sig, s)?;
                crate::term::check_perm(p, f.ins.len())?;
                Ok(Frag {
                    ins: apply_perm(&f.ins, p),
                    outs: f.outs,
                })
            }
            Term::OutPerm(s, p) => {
                let f = self.build(sig, s)?;
                crate::term::check_perm(p, f.outs.len())?;
                Ok(Frag {
                    ins: f.ins,
                    outs: apply_perm(&f.outs, p),
                })
            }
            Term::Comp(s, i, u, j) => {
                let a = self.build(sig, s)?;
                let b = self.build(sig, u)?;
                if *i >= a.outs.len() || *j >= b.ins.len() {
                    return Err(Error::ArityOutOfRange {
                        index: *i,
                        len: a.outs.len(),
                    });
                }
                self.union(a.outs[*i], b.ins[*j]);
                let mut ins = b.ins[..*j].to_vec();
                ins.extend(&a.ins);
                ins.extend(&b.ins[*j + 1..]);
                let mut outs = a.outs[..*i].to_vec();
                outs.extend(&b.outs);
                outs.extend(&a.outs[*i + 1..]);
                Ok(Frag { ins, outs })
            }
            atom => {
                let ty = typecheck(sig, atom)?;
                let n = self.nodes.len();
                let ins: Vec<usize> = ty.inputs.iter().map(|_| self.wire()).collect();
                let outs: Vec<usize> = ty
                    .outputs
                    .iter()
                    .enumerate()
                    .map(|(p, _)| {
                        let w = self.wire();
                        self.producer[w] = Some(Src::Out(n, p));
                        w
                    })
                    .collect();
                self.nodes
                    .push((atom.clone(), ty.inputs, ty.outputs, ins.clone()));
                Ok(Frag { ins, outs })
            }
        }
    }
}

impl Net {
    pub fn from_term(sig: &Signature, t: &Term) -> Result<Net> {
        let ty = typecheck(sig, t)?;
        let mut b = Builder {
            parent: Vec::new(),
            producer: Vec::new(),
            nodes: Vec::new(),
        };
        let frag = b.build(sig, t)?;
        for (k, &w) in frag.ins.iter().enumerate() {
            let r = b.find(w);
            b.producer[r] = Some(Src::In(k));
        }
        let mut nodes = Vec::new();
        let raw = std::mem::take(&mut b.nodes);
        for (atom, ins, outs, wires) in raw {
            let src = wires
                .iter()
                .map(|&w| {
                    let r = b.find(w);
                    b.producer[r].expect("every wire has a producer")
                })
                .collect();
            nodes.push(Node {
                atom,
                ins,
                outs,
                src,
            });
        }
        let out_src = frag
            .outs
            .iter()
            .map(|&w| {
                let r = b.find(w);
                b.producer[r].expect("every wire has a producer")
            })
            .collect();
        Ok(Net {
            inputs: ty.inputs,
            outputs: ty.outputs,
            nodes,
            out_src,
        })
    }

    /// Consumer of each node output port, and of each boundary input.
    pub fn consumers(&self) -> (Vec<Vec<Option<Sink>>>, Vec<Option<Sink>>) {
        let mut node_c: Vec<Vec<Option<Sink>>> = self
            .nodes
            .iter()
            .map(|n| vec![None; n.outs.len()])
            .collect();
        let mut in_c = vec![None; self.inputs.len()];
        let mut put = |s: Src, k: Sink| match s {
            Src::In(i) => in_c[i] = Some(k),
            Src::Out(n, p) => node_c[n][p] = Some(k),
        };
        for (n, node) in self.nodes.iter().enumerate() {
            for (p, s) in node.src.iter().enumerate() {
                put(*s, Sink::Node(n, p));
            }
        }
        for (k, s) in self.out_src.iter().enumerate() {
            put(*s, Sink::Out(k));
        }
        (node_c, in_c)
    }

    fn dfs_order(
        &self,
        starts: &[usize],
        visited: &mut [bool],
        order: &mut Vec<usize>,
        node_c: &[Vec<Option<Sink>>],
    ) {
        let mut stack: Vec<usize> = starts.iter().rev().cloned().collect();
        while let Some(n) = stack.pop() {
            if visited[n] {
                continue;
            }
            visited[n] = true;
            order.push(n);
            let mut next = Vec::new();
            for s in &self.nodes[n].src {
                if let Src::Out(m, _) = s {
                    next.push(*m);
                }
            }
            for c in node_c[n].iter().flatten() {
                if let Sink::Node(m, _) = c {
                    next.push(*m);
                }
            }
            for m in next.into_iter().rev() {
                if !visited[m] {
                    stack.push(m);
                }
            }
        }
    }

    /// Node ids in canonical order: depth first from the ordered boundary.
    pub fn canonical_order(&self) -> Vec<usize> {
        let (node_c, in_c) = self.consumers();
        let mut visited = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        let mut starts = Vec::new();
        for s in &self.out_src {
            if let Src::Out(n, _) = s {
                starts.push(*n);
            }
        }
        for c in in_c.iter().flatten() {
            if let Sink::Node(n, _) = c {
                starts.push(*n);
            }
        }
        // one start at a time so later starts do not jump the queue
        for s in starts {
            self.dfs_order(&[s], &mut visited, &mut order, &node_c);
        }
        while order.len() < self.nodes.len() {
            let mut best: Option<(String, Vec<usize>)> = None;
            for r in 0..self.nodes.len() {
                if visited[r] {
                    continue;
                }
                let mut v2 = visited.clone();
                let mut comp = Vec::new();
                self.dfs_order(&[r], &mut v2, &mut comp, &node_c);
                let key = self.component_key(&comp);
                if best.as_ref().is_none_or(|(k, _)| key < *k) {
                    best = Some((key, comp));
                }
            }
            let (_, comp) = best.expect("an unvisited node exists");
            for n in comp {
                visited[n] = true;
                order.push(n);
            }
        }
        order
    }

    fn component_key(&self, comp: &[usize]) -> String {
        let pos = |n: usize| comp.iter().position(|x| *x == n);
        let mut out = String::new();
        for &n in comp {
            let node = &self.nodes[n];
            out.push_str(&node.atom.to_string());
            for s in &node.src {
                match s {
                    Src::Out(m, p) => {
                        out.push_str(&format!(" {}.{}", pos(*m).unwrap_or(usize::MAX), p))
                    }
                    Src::In(k) => out.push_str(&format!(" i{k}")),
                }
            }
            out.push(';');
        }
        out
    }

    /// Same net with nodes renumbered into canonical order.
    pub fn canonicalize(&self) -> Net {
        let order = self.canonical_order();
        let mut new_id = vec![0; self.nodes.len()];
        for (k, &n) in order.iter().enumerate() {
            new_id[n] = k;
        }
        let remap = |s: &Src| match s {
            Src::In(k) => Src::In(*k),
            Src::Out(n, p) => Src::Out(new_id[*n], *p),
        };
        Net {
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            nodes: order
                .iter()
                .map(|&n| {
                    let node = &self.nodes[n];
                    Node {
                        atom: node.atom.clone(),
                        ins: node.ins.clone(),
                        outs: node.outs.clone(),
                        src: node.src.iter().map(remap).collect(),
                    }
                })
                .collect(),
            out_src: self.out_src.iter().map(remap).collect(),
        }
    }

    /// A string equal for two nets exactly when they are boundary-preserving isomorphic.
    pub fn key(&self) -> String {
        let c = self.canonicalize();
        let mut out = String::new();
        for h in &c.inputs {
            out.push_str(&h.to_string());
        }
        out.push_str("=>");
        for h in &c.outputs {
            out.push_str(&h.to_string());
        }
        out.push('|');
        let all: Vec<usize> = (0..c.nodes.len()).collect();
        out.push_str(&c.component_key(&all));
        out.push('|');
        for s in &c.out_src {
            match s {
                Src::Out(n, p) => out.push_str(&format!("{n}.{p} ")),
                Src::In(k) => out.push_str(&format!("i{k} ")),
            }
        }
        out
    }

    pub fn is_acyclic(&self) -> bool {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, node) in self.nodes.iter().enumerate() {
            for s in &node.src {
                if let Src::Out(m, _) = s {
                    indeg[k] += 1;
                    succ[*m].push(k);
                }
            }
        }
        let mut q: VecDeque<usize> = (0..n).filter(|k| indeg[*k] == 0).collect();
        let mut seen = 0;
        while let Some(k) = q.pop_front() {
            seen += 1;
            for &m in &succ[k] {
                indeg[m] -= 1;
                if indeg[m] == 0 {
                    q.push_back(m);
                }
            }
        }
        seen == n
    }

    /// Connected components as node sets, plus pass-through wires `(input, output)`.
    fn components(&self) -> (Vec<Vec<usize>>, Vec<(usize, usize)>) {
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for (k, node) in self.nodes.iter().enumerate() {
            for s in &node.src {
                if let Src::Out(m, _) = s {
                    let (a, b) = (find(&mut parent, k), find(&mut parent, *m));
                    parent[a] = b;
                }
            }
        }
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut root_of: Vec<Option<usize>> = vec![None; n];
        for k in 0..n {
            let r = find(&mut parent, k);
            match root_of[r] {
                Some(c) => comps[c].push(k),
                None => {
                    root_of[r] = Some(comps.len());
                    comps.push(vec![k]);
                }
            }
        }
        let pass = self
            .out_src
            .iter()
            .enumerate()
            .filter_map(|(o, s)| match s {
                Src::In(i) => Some((*i, o)),
                _ => None,
            })
            .collect();
        (comps, pass)
    }

    /// True when every component is a tree (so the net has a term reading).
    pub fn is_forest(&self) -> bool {
        let (comps, _) = self.components();
        comps.iter().all(|c| {
            let edges: usize = c
                .iter()
                .map(|&k| {
                    self.nodes[k]
                        .src
                        .iter()
                        .filter(|s| matches!(s, Src::Out(..)))
                        .count()
                })
                .sum();
            edges + 1 == c.len()
        })
    }

    /// A term whose net is this one (after canonicalization).
    pub fn to_term(&self) -> Result<Term> {
        let net = self.canonicalize();
        net.readback()
    }

    fn readback(&self) -> Result<Term> {
        if !self.is_forest() {
            return Err(Error::NotATree);
        }
        let (node_c, _) = self.consumers();
        let (comps, pass) = self.components();
        // pieces: term, boundary input ids, boundary output ids
        let mut pieces: Vec<(usize, Term, Vec<usize>, Vec<usize>)> = Vec::new();
        for comp in &comps {
            let root = *comp.iter().min().unwrap();
            let (t, ins, outs) = self.build_piece(root, None, &node_c);
            let ins: Vec<usize> = ins
                .iter()
                .map(|(n, p)| match self.nodes[*n].src[*p] {
                    Src::In(k) => k,
                    _ => unreachable!("dangling input comes from the boundary"),
                })
                .collect();
            let outs: Vec<usize> = outs
                .iter()
                .map(|(n, p)| match node_c[*n][*p] {
                    Some(Sink::Out(k)) => k,
                    _ => unreachable!("dangling output goes to the boundary"),
                })
                .collect();
            pieces.push((root, t, ins, outs));
        }
        for (i, o) in pass {
            pieces.push((
                self.nodes.len() + o,
                Term::Ident(vec![self.inputs[i].clone()]),
                vec![i],
                vec![o],
            ));
        }
        pieces.sort_by_key(|p| p.0);
        let (term, ins, outs) = match pieces.len() {
            0 => (Term::Ident(vec![]), vec![], vec![]),
            1 => {
                let (_, t, i, o) = pieces.pop().unwrap();
                (t, i, o)
            }
            _ => self.mix(pieces)?,
        };
        let mut t = term;
        let identity = |v: &[usize]| v.iter().enumerate().all(|(k, x)| k == *x);
        if !identity(&ins) {
            t = Term::inperm(t, ins);
        }
        if !identity(&outs) {
            t = Term::outperm(t, outs);
        }
        Ok(t)
    }

    #[allow(clippy::type_complexity)]
    fn mix(
        &self,
        pieces: Vec<(usize, Term, Vec<usize>, Vec<usize>)>,
    ) -> Result<(Term, Vec<usize>, Vec<usize>)> {
        #[derive(Clone, Copy, PartialEq)]
        enum Port {
            B(usize),
            Slot(usize),
        }
        let mut homs = Vec::new();
        for (_, _, ins, outs) in &pieces {
            if let Some(o) = outs.first() {
                homs.push(self.outputs[*o].clone());
            } else if let Some(i) = ins.first() {
                homs.push(self.inputs[*i].clone());
            } else {
                return Err(Error::NotATree);
            }
        }
        let r = pieces.len();
        let mut term = Term::Ident(homs);
        let mut m_ins: Vec<Port> = (0..r).map(Port::Slot).collect();
        let mut m_outs: Vec<Port> = (0..r).map(Port::Slot).collect();
        for (c, (_, t, ins, outs)) in pieces.into_iter().enumerate() {
            if matches!(&t, Term::Ident(h) if h.len() == 1) && ins.len() == 1 && outs.len() == 1 {
                // a bare wire fills its slot directly
                for p in m_ins.iter_mut().filter(|p| **p == Port::Slot(c)) {
                    *p = Port::B(ins[0]);
                }
                for p in m_outs.iter_mut().filter(|p| **p == Port::Slot(c)) {
                    *p = Port::B(outs[0]);
                }
            } else if let Some(&o0) = outs.first() {
                let j = m_ins.iter().position(|p| *p == Port::Slot(c)).unwrap();
                term = Term::comp(t, 0, term, j);
                let mut ni = m_ins[..j].to_vec();
                ni.extend(ins.iter().map(|k| Port::B(*k)));
                ni.extend(&m_ins[j + 1..]);
                m_ins = ni;
                let mut no: Vec<Port> = m_outs
                    .iter()
                    .map(|p| if *p == Port::Slot(c) { Port::B(o0) } else { *p })
                    .collect();
                no.extend(outs[1..].iter().map(|k| Port::B(*k)));
                m_outs = no;
            } else {
                let i0 = ins[0];
                let i = m_outs.iter().position(|p| *p == Port::Slot(c)).unwrap();
                term = Term::comp(term, i, t, 0);
                let mut ni: Vec<Port> = m_ins
                    .iter()
                    .map(|p| if *p == Port::Slot(c) { Port::B(i0) } else { *p })
                    .collect();
                ni.extend(ins[1..].iter().map(|k| Port::B(*k)));
                m_ins = ni;
                let mut no = m_outs[..i].to_vec();
                no.extend(&m_outs[i + 1..]);
                m_outs = no;
            }
        }
        let strip = |v: Vec<Port>| {
            v.into_iter()
                .map(|p| match p {
                    Port::B(k) => k,
                    Port::Slot(_) => unreachable!("every slot is filled"),
                })
                .collect()
        };
        Ok((term, strip(m_ins), strip(m_outs)))
    }

    #[allow(clippy::type_complexity)]
    fn build_piece(
        &self,
        n: usize,
        parent: Option<usize>,
        node_c: &[Vec<Option<Sink>>],
    ) -> (Term, Vec<(usize, usize)>, Vec<(usize, usize)>) {
        let node = &self.nodes[n];
        let mut term = node.atom.clone();
        let mut ins: Vec<(usize, usize)> = (0..node.ins.len()).map(|p| (n, p)).collect();
        let mut outs: Vec<(usize, usize)> = (0..node.outs.len()).map(|p| (n, p)).collect();
        for (q, s) in node.src.iter().enumerate() {
            if let Src::Out(m, p) = *s {
                if Some(m) == parent {
                    continue;
                }
                let (ct, cins, couts) = self.build_piece(m, Some(n), node_c);
                let i = couts.iter().position(|x| *x == (m, p)).unwrap();
                let j = ins.iter().position(|x| *x == (n, q)).unwrap();
                term = Term::comp(ct, i, term, j);
                let mut ni = ins[..j].to_vec();
                ni.extend(&cins);
                ni.extend(&ins[j + 1..]);
                let mut no = couts[..i].to_vec();
                no.extend(&outs);
                no.extend(&couts[i + 1..]);
                ins = ni;
                outs = no;
            }
        }
        for (q, c) in node_c[n].iter().enumerate() {
            if let Some(Sink::Node(m, p)) = *c {
                if Some(m) == parent {
                    continue;
                }
                let (ct, cins, couts) = self.build_piece(m, Some(n), node_c);
                let i = outs.iter().position(|x| *x == (n, q)).unwrap();
                let j = cins.iter().position(|x| *x == (m, p)).unwrap();
                term = Term::comp(term, i, ct, j);
                let mut ni = cins[..j].to_vec();
                ni.extend(&ins);
                ni.extend(&cins[j + 1..]);
                let mut no = outs[..i].to_vec();
                no.extend(&couts);
                no.extend(&outs[i + 1..]);
                ins = ni;
                outs = no;
            }
        }
        (term, ins, outs)
    }

    /// Embeds `pat` so that pattern node `pa` sits on host node `ha`.
    pub fn match_at(&self, pat: &Net, pa: usize, ha: usize) -> Option<Vec<usize>> {
        self.match_at_with(pat, pa, ha, &|p, h| p == h)
    }

    /// As [`Net::match_at`], with `compat(pattern_atom, host_atom)` deciding atom agreement.
    pub fn match_at_with(
        &self,
        pat: &Net,
        pa: usize,
        ha: usize,
        compat: &dyn Fn(&Term, &Term) -> bool,
    ) -> Option<Vec<usize>> {
        let (hc, _) = self.consumers();
        let (pc, _) = pat.consumers();
        let mut map: Vec<Option<usize>> = vec![None; pat.nodes.len()];
        let mut used = vec![false; self.nodes.len()];
        let mut queue = VecDeque::new();
        let mut assign =
            |p: usize, h: usize, map: &mut Vec<Option<usize>>, q: &mut VecDeque<usize>| -> bool {
                match map[p] {
                    Some(x) => x == h,
                    None => {
                        if used[h] || !compat(&pat.nodes[p].atom, &self.nodes[h].atom) {
                            return false;
                        }
                        used[h] = true;
                        map[p] = Some(h);
                        q.push_back(p);
                        true
                    }
                }
            };
        if !assign(pa, ha, &mut map, &mut queue) {
            return None;
        }
        while let Some(p) = queue.pop_front() {
            let h = map[p].unwrap();
            for (q, s) in pat.nodes[p].src.iter().enumerate() {
                if let Src::Out(p2, q2) = *s {
                    match self.nodes[h].src[q] {
                        Src::Out(h2, r2) if r2 == q2 => {
                            if !assign(p2, h2, &mut map, &mut queue) {
                                return None;
                            }
                        }
                        _ => return None,
                    }
                }
            }
            for (q, c) in pc[p].iter().enumerate() {
                if let Some(Sink::Node(p2, q2)) = *c {
                    match hc[h][q] {
                        Some(Sink::Node(h2, r2)) if r2 == q2 => {
                            if !assign(p2, h2, &mut map, &mut queue) {
                                return None;
                            }
                        }
                        _ => return None,
                    }
                }
            }
        }
        let map: Vec<usize> = map.into_iter().collect::<Option<_>>()?;
        let image: BTreeSet<usize> = map.iter().cloned().collect();
        // boundary wires of the pattern must leave the image
        for (p, node) in pat.nodes.iter().enumerate() {
            for (q, s) in node.src.iter().enumerate() {
                if let Src::In(_) = s {
                    if let Src::Out(h2, _) = self.nodes[map[p]].src[q] {
                        if image.contains(&h2) {
                            return None;
                        }
                    }
                }
            }
        }
        for s in &pat.out_src {
            match *s {
                Src::Out(p, q) => {
                    if let Some(Sink::Node(h2, _)) = hc[map[p]][q] {
                        if image.contains(&h2) {
                            return None;
                        }
                    }
                }
                Src::In(_) => return None,
            }
        }
        Some(map)
    }

    /// Every embedding of `pat`, anchored on its node 0, in host node order.
    pub fn matches(&self, pat: &Net) -> Vec<Vec<usize>> {
        if pat.nodes.is_empty() {
            return Vec::new();
        }
        (0..self.nodes.len())
            .filter(|&h| self.nodes[h].atom == pat.nodes[0].atom)
            .filter_map(|h| self.match_at(pat, 0, h))
            .collect()
    }

    /// Replaces the image of `pat` under `map` by `rhs`, which has the same boundary.
    pub fn replace(&self, pat: &Net, map: &[usize], rhs: &Net) -> Option<Net> {
        let image: BTreeSet<usize> = map.iter().cloned().collect();
        let mut new_id = vec![usize::MAX; self.nodes.len()];
        let mut k = 0;
        for n in 0..self.nodes.len() {
            if !image.contains(&n) {
                new_id[n] = k;
                k += 1;
            }
        }
        let base = k;
        let remap = |s: Src| match s {
            Src::In(i) => Src::In(i),
            Src::Out(n, p) => Src::Out(new_id[n], p),
        };
        // host source feeding each pattern boundary input
        let mut s_k = vec![None; pat.inputs.len()];
        for (p, node) in pat.nodes.iter().enumerate() {
            for (q, s) in node.src.iter().enumerate() {
                if let Src::In(i) = s {
                    s_k[*i] = Some(remap(self.nodes[map[p]].src[q]));
                }
            }
        }
        let s_k: Vec<Src> = s_k.into_iter().collect::<Option<_>>()?;
        let rhs_src = |s: Src| match s {
            Src::In(i) => s_k[i],
            Src::Out(n, p) => Src::Out(base + n, p),
        };
        let redirect = |s: Src| -> Src {
            if let Src::Out(h, q) = s {
                if image.contains(&h) {
                    let k = pat
                        .out_src
                        .iter()
                        .position(|o| matches!(o, Src::Out(p, pq) if map[*p] == h && *pq == q))
                        .expect("wire leaving the image is a pattern output");
                    return rhs_src(rhs.out_src[k]);
                }
            }
            remap(s)
        };
        let mut nodes = Vec::new();
        for (n, node) in self.nodes.iter().enumerate() {
            if image.contains(&n) {
                continue;
            }
            nodes.push(Node {
                atom: node.atom.clone(),
                ins: node.ins.clone(),
                outs: node.outs.clone(),
                src: node.src.iter().map(|s| redirect(*s)).collect(),
            });
        }
        for node in &rhs.nodes {
            nodes.push(Node {
                atom: node.atom.clone(),
                ins: node.ins.clone(),
                outs: node.outs.clone(),
                src: node.src.iter().map(|s| rhs_src(*s)).collect(),
            });
        }
        let out_src = self.out_src.iter().map(|s| redirect(*s)).collect();
        let net = Net {
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            nodes,
            out_src,
        };
        if net.is_acyclic() {
            Some(net)
        } else {
            None
        }
    }
}

impl Net {
    /// `Split(pairs)` followed by `Merge(pairs)` along every one of the wires between them.
    pub fn split_then_merge(pairs: &[HomType]) -> Net {
        let ty = crate::term::split_type(pairs);
        let whole = ty.inputs.clone();
        let n = pairs.len();
        Net {
            inputs: whole.clone(),
            outputs: whole.clone(),
            nodes: vec![
                Node {
                    atom: Term::Split(pairs.to_vec()),
                    ins: whole.clone(),
                    outs: pairs.to_vec(),
                    src: vec![Src::In(0)],
                },
                Node {
                    atom: Term::Merge(pairs.to_vec()),
                    ins: pairs.to_vec(),
                    outs: whole,
                    src: (0..n).map(|k| Src::Out(0, k)).collect(),
                },
            ],
            out_src: vec![Src::Out(1, 0)],
        }
    }

    /// Inserts a one-in one-out `gadget` on the wire entering `sink`.
    pub fn insert_on_wire(&self, sink: Sink, gadget: &Net) -> Net {
        let base = self.nodes.len();
        let old = match sink {
            Sink::Node(n, p) => self.nodes[n].src[p],
            Sink::Out(k) => self.out_src[k],
        };
        let shift = |s: Src| match s {
            Src::In(_) => old,
            Src::Out(n, p) => Src::Out(base + n, p),
        };
        let mut net = self.clone();
        for node in &gadget.nodes {
            let mut node = node.clone();
            node.src = node.src.iter().map(|s| shift(*s)).collect();
            net.nodes.push(node);
        }
        let new = shift(gadget.out_src[0]);
        match sink {
            Sink::Node(n, p) => net.nodes[n].src[p] = new,
            Sink::Out(k) => net.out_src[k] = new,
        }
        net
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::ObjectWord;
    use crate::term::{BaseTerm, TypedTerm};

    fn w(s: &[&str]) -> ObjectWord {
        ObjectWord::of(s)
    }

    fn sig() -> Signature {
        Signature::new()
            .with_object("q")
            .with_object("r")
            .with_gen("f", w(&["q"]), w(&["q"]))
            .with_gen("g", w(&["q"]), w(&["q"]))
            .with_gen("h", w(&["q"]), w(&["q"]))
    }

    fn lift(n: &str) -> Term {
        Term::lift(BaseTerm::gen(n))
    }

    fn seq() -> Term {
        Term::SeqM(w(&["q"]), w(&["q"]), w(&["q"]))
    }

    #[test]
    fn bracketing_is_forgotten() {
        let s = sig();
        // (f ; g) ; h  versus  f ; (g ; h) as plugged seq boxes share no net, but
        // re-associating Comp itself does
        let a = Term::comp(lift("f"), 0, Term::comp(lift("g"), 0, seq(), 1), 0);
        let b = Term::comp(
            Term::comp(lift("f"), 0, seq(), 0),
            0,
            Term::Ident(vec![HomType::new(w(&["q"]), w(&["q"]))]),
            0,
        );
        let b = Term::comp(lift("g"), 0, b, 0);
        let na = Net::from_term(&s, &a).unwrap();
        let nb = Net::from_term(&s, &b).unwrap();
        assert_eq!(na.key(), nb.key());
    }

    #[test]
    fn readback_round_trips() {
        let s = sig();
        let terms = vec![
            Term::comp(lift("f"), 0, Term::comp(lift("g"), 0, seq(), 1), 0),
            Term::Ident(vec![
                HomType::new(w(&["q"]), w(&["r"])),
                HomType::new(w(&["r"]), w(&["q"])),
            ]),
            Term::inperm(seq(), vec![1, 0]),
            Term::comp(
                Term::Split(vec![
                    HomType::new(w(&["q"]), w(&["q"])),
                    HomType::new(w(&["r"]), w(&["r"])),
                ]),
                1,
                Term::ParM(w(&["r"]), w(&["r"]), w(&["q"]), w(&["q"])),
                0,
            ),
            lift("f"),
        ];
        for t in terms {
            let ty = TypedTerm::new(&s, t.clone()).unwrap().ty;
            let n = Net::from_term(&s, &t).unwrap();
            let back = n.to_term().unwrap();
            assert_eq!(
                TypedTerm::new(&s, back.clone()).unwrap().ty,
                ty,
                "{t} -> {back}"
            );
            assert_eq!(Net::from_term(&s, &back).unwrap().key(), n.key());
        }
    }

    #[test]
    fn isomorphic_closed_components_share_a_key() {
        let s = sig();
        let a = Term::Ident(vec![]);
        let n = Net::from_term(&s, &a).unwrap();
        assert_eq!(n.nodes.len(), 0);
        assert_eq!(n.to_term().unwrap(), Term::Ident(vec![]));
    }

    #[test]
    fn matching_and_replacement() {
        let s = sig();
        let host = Net::from_term(
            &s,
            &Term::comp(lift("f"), 0, Term::comp(lift("g"), 0, seq(), 1), 0),
        )
        .unwrap();
        let pat = Net::from_term(&s, &Term::comp(lift("g"), 0, seq(), 1)).unwrap();
        let ms = host.matches(&pat);
        assert_eq!(ms.len(), 1);
        let rhs = Net::from_term(&s, &Term::comp(lift("h"), 0, seq(), 1)).unwrap();
        let out = host.replace(&pat, &ms[0], &rhs).unwrap();
        let expect = Net::from_term(
            &s,
            &Term::comp(lift("f"), 0, Term::comp(lift("h"), 0, seq(), 1), 0),
        )
        .unwrap();
        assert_eq!(out.key(), expect.key());
    }
}
