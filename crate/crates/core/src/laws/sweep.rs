//! Model soundness sweeps over law instances.
//!
//! The Boolean sweep covers every instance with words up to a length and every assignment
//! of the generators the law mentions. A law side's matrix depends on its words only through
//! the dimensions of their letters, and letters of dimension one add nothing to an index, so
//! instances are grouped by that reduced profile and each group is evaluated once.

use std::collections::HashMap;
use std::hash::Hasher;

use rand::{Rng, SeedableRng};

use super::search::{find_distinction, ModelSpec, Witness};
use super::{Law, Side};
use crate::error::{Error, Result};
use crate::matmodel::sparse::eval_net;
use crate::matmodel::{random_assignment, AssignmentSpace, ModelAssignment};
use crate::net::Net;
use crate::signature::{Name, ObjectWord, Signature};

/// All words over the signature's objects of length at most `len`, shortest first.
pub fn words_up_to(sig: &Signature, len: usize) -> Vec<ObjectWord> {
    let objs = sig.object_names();
    let mut out = vec![ObjectWord::empty()];
    let mut layer = vec![ObjectWord::empty()];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &layer {
            for o in &objs {
                let mut v = w.0.clone();
                v.push(o.clone());
                next.push(ObjectWord(v));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// FNV-1a of the law label and its words.
pub fn instance_hash(label: &str, words: &[ObjectWord]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(label.as_bytes());
    for w in words {
        h.write(b"|");
        h.write(w.to_string().as_bytes());
    }
    h.finish()
}

#[derive(Clone, Debug)]
pub struct InstanceResult {
    pub law: String,
    pub words: Vec<ObjectWord>,
    pub hash: u64,
    pub pass: bool,
    pub model: String,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, Default)]
pub struct SweepSummary {
    pub law: String,
    pub instances: usize,
    pub assignments: usize,
    /// Distinct evaluations of both sides actually performed.
    pub evaluations: usize,
    /// Float draws discarded by the size cap.
    pub rejected: usize,
    pub failures: Vec<InstanceResult>,
}

fn names_of(sides: &[&Side]) -> (Vec<Name>, Vec<Name>) {
    let (mut base, mut poly) = (Vec::new(), Vec::new());
    for s in sides {
        if let Some(t) = s.term() {
            let (b, p) = t.gen_names();
            base.extend(
                b.into_iter()
                    .filter(|n| !base.contains(n))
                    .collect::<Vec<_>>(),
            );
            poly.extend(
                p.into_iter()
                    .filter(|n| !poly.contains(n))
                    .collect::<Vec<_>>(),
            );
        }
    }
    (base, poly)
}

fn nets(sig: &Signature, law: &Law, words: &[ObjectWord]) -> Result<(Net, Net)> {
    let (l, r) = law.sides(words);
    Ok((l.net(sig)?, r.net(sig)?))
}

fn digits_base(mut idx: usize, base: usize, k: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = idx % base;
        idx /= base;
    }
    out
}

/// Exhaustive Boolean check of every instance of `law` with words up to `word_len`.
/// `report` sees one result per instance, after all assignments.
pub fn boolean_sweep(
    sig: &Signature,
    law: &Law,
    word_len: usize,
    dim_bound: usize,
    mut report: impl FnMut(&InstanceResult),
) -> Result<SweepSummary> {
    let words = words_up_to(sig, word_len);
    let k = law.vars();
    let total = words.len().checked_pow(k as u32).unwrap_or(usize::MAX);
    let probe = law.sides(&vec![ObjectWord::empty(); k]);
    let (base, poly) = names_of(&[&probe.0, &probe.1]);
    let generic = base.is_empty() && poly.is_empty();
    let space = AssignmentSpace::restricted(sig, dim_bound, &base, &poly);
    let model = ModelSpec::Boolean { dim_bound }.id();
    let mut witness: Vec<Option<Witness>> = Vec::new();
    let mut failed = vec![false; total];
    let mut summary = SweepSummary {
        law: law.label(),
        instances: total,
        ..Default::default()
    };
    for m in space.enumerate(crate::matmodel::ceiling())? {
        summary.assignments += 1;
        let profile: Vec<Vec<usize>> = words
            .iter()
            .map(|w| {
                m.letter_dims(w)
                    .map(|d| d.into_iter().filter(|x| *x > 1).collect())
            })
            .collect::<Result<_>>()?;
        let mut ids: HashMap<&Vec<usize>, usize> = HashMap::new();
        let pid: Vec<usize> = profile
            .iter()
            .map(|p| {
                let n = ids.len();
                *ids.entry(p).or_insert(n)
            })
            .collect();
        let mut cache: HashMap<Vec<usize>, Option<Witness>> = HashMap::new();
        for idx in 0..total {
            let ws = digits_base(idx, words.len(), k);
            let key: Vec<usize> = if generic {
                ws.iter().map(|w| pid[*w]).collect()
            } else {
                ws.clone()
            };
            let res = match cache.get(&key) {
                Some(r) => r.clone(),
                None => {
                    let inst: Vec<ObjectWord> = ws.iter().map(|w| words[*w].clone()).collect();
                    let (a, b) = nets(sig, law, &inst)?;
                    let (ea, eb) = (eval_net(sig, &a, &m)?, eval_net(sig, &b, &m)?);
                    summary.evaluations += 1;
                    let r = ea.first_difference(&eb, 0.0).map(|at| Witness {
                        model: model.clone(),
                        assignment: m.to_string(),
                        entry: at,
                        left: String::new(),
                        right: String::new(),
                    });
                    cache.insert(key, r.clone());
                    r
                }
            };
            if let Some(w) = res {
                if !failed[idx] {
                    failed[idx] = true;
                    if witness.len() < 16 {
                        witness.push(Some(w));
                    }
                }
            }
        }
    }
    let mut wit = witness.into_iter();
    for (idx, bad) in failed.iter().enumerate() {
        let ws: Vec<ObjectWord> = digits_base(idx, words.len(), k)
            .into_iter()
            .map(|w| words[w].clone())
            .collect();
        let r = InstanceResult {
            law: law.label(),
            hash: instance_hash(&law.label(), &ws),
            words: ws,
            pass: !bad,
            model: model.clone(),
            witness: if *bad { wit.next().flatten() } else { None },
        };
        report(&r);
        if *bad && summary.failures.len() < 16 {
            summary.failures.push(r);
        }
    }
    Ok(summary)
}

/// Seeded float trials: a random instance and a random assignment per trial. Draws whose
/// matrices trip the explosion guard are redrawn and counted as rejected.
pub fn float_trials(
    sig: &Signature,
    law: &Law,
    word_len: usize,
    dim_bound: usize,
    trials: usize,
    seed: u64,
) -> Result<SweepSummary> {
    let words = words_up_to(sig, word_len);
    let k = law.vars();
    let probe = law.sides(&vec![ObjectWord::empty(); k]);
    let (base, poly) = names_of(&[&probe.0, &probe.1]);
    let space = AssignmentSpace::restricted(sig, dim_bound, &base, &poly);
    let label = law.label();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ instance_hash(&label, &[]));
    let mut summary = SweepSummary {
        law: label.clone(),
        ..Default::default()
    };
    let model = format!("f64-d{dim_bound}-s{seed}");
    let mut attempts = 0;
    while summary.instances < trials {
        attempts += 1;
        if attempts > trials * 1000 {
            break;
        }
        let inst: Vec<ObjectWord> = (0..k)
            .map(|_| words[rng.gen_range(0..words.len())].clone())
            .collect();
        let m: ModelAssignment<f64> = random_assignment(&space, &mut rng, |r| r.gen::<f64>())?;
        let (a, b) = nets(sig, law, &inst)?;
        let (ea, eb) = match (eval_net(sig, &a, &m), eval_net(sig, &b, &m)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(Error::ExplosionGuard { .. }), _) | (_, Err(Error::ExplosionGuard { .. })) => {
                summary.rejected += 1;
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        summary.instances += 1;
        summary.assignments += 1;
        summary.evaluations += 1;
        if let Some(at) = ea.first_difference(&eb, 1e-9) {
            summary.failures.push(InstanceResult {
                law: label.clone(),
                hash: instance_hash(&label, &inst),
                words: inst,
                pass: false,
                model: model.clone(),
                witness: Some(Witness {
                    model: model.clone(),
                    assignment: m.to_string(),
                    entry: at,
                    left: String::new(),
                    right: String::new(),
                }),
            });
        }
    }
    Ok(summary)
}

/// Boolean check of one instance against every assignment; `None` when the sides agree.
pub fn check_instance(
    sig: &Signature,
    law: &Law,
    words: &[ObjectWord],
    spec: &ModelSpec,
) -> Result<Option<Witness>> {
    let (l, r) = law.sides(words);
    let (base, poly) = names_of(&[&l, &r]);
    let (a, b) = (l.net(sig)?, r.net(sig)?);
    find_distinction(sig, &a, &b, (&base, &poly), spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::LawKind;

    fn sig() -> Signature {
        Signature::new().with_object("q").with_object("r")
    }

    #[test]
    fn word_list() {
        let w = words_up_to(&sig(), 2);
        assert_eq!(w.len(), 7);
        assert_eq!(w[0], ObjectWord::empty());
        assert_eq!(w[6], ObjectWord::of(&["r", "r"]));
    }

    #[test]
    fn small_sweeps_pass() {
        let s = sig();
        for kind in [LawKind::E1, LawKind::E4L, LawKind::E8, LawKind::E9] {
            let sum = boolean_sweep(&s, &Law::new(kind), 1, 2, |_| {}).unwrap();
            assert!(sum.failures.is_empty(), "{:?}", sum.failures);
            assert_eq!(sum.assignments, 4);
            assert!(sum.evaluations <= sum.instances * 4);
        }
    }

    #[test]
    fn a_false_law_is_caught() {
        // swapping the two sides of a braid without the crossing is not sound
        let s = sig();
        let w = vec![
            ObjectWord::of(&["q"]),
            ObjectWord::of(&["q"]),
            ObjectWord::of(&["r"]),
            ObjectWord::of(&["r"]),
        ];
        let (l, _) = LawKind::E9.sides(&[], &w);
        let plain = crate::term::Term::Split(vec![
            crate::signature::HomType::new(w[2].clone(), w[3].clone()),
            crate::signature::HomType::new(w[0].clone(), w[1].clone()),
        ]);
        let (a, b) = (l.net(&s).unwrap(), Side::Term(plain).net(&s).unwrap());
        let m = ModelAssignment::<bool>::with_dims(&[("q", 2), ("r", 2)]);
        let (ea, eb) = (eval_net(&s, &a, &m).unwrap(), eval_net(&s, &b, &m).unwrap());
        assert!(ea.first_difference(&eb, 0.0).is_some());
    }
}
