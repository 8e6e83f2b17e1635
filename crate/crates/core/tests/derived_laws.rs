use hocirc::laws::{check_instance, derive, verify_chain, Law, LawKind, ModelSpec, RuleSet};
use hocirc::{ObjectWord, Signature};

fn sig() -> Signature {
    Signature::new().with_object("q").with_object("r")
}

fn words(n: usize) -> Vec<ObjectWord> {
    let pool = [
        ["q"].as_slice(),
        &["r"],
        &["q", "r"],
        &["r", "q"],
        &["q", "q"],
        &["r", "r"],
    ];
    (0..n)
        .map(|k| ObjectWord::of(pool[k % pool.len()]))
        .collect()
}

fn derivable(law: Law) {
    let s = sig();
    let ws = words(law.vars());
    let out = derive(&s, &law, &ws, 10_000).unwrap();
    assert!(
        out.found,
        "{} not derived in {} states",
        law.label(),
        out.states
    );
    assert!(out.states <= 10_000);
    let sets = [RuleSet::default_moves(), RuleSet::core_normalizing()];
    assert!(
        verify_chain(&s, &out.chain, &out.trace, &sets),
        "{} chain does not replay",
        law.label()
    );
    let (l, r) = law.sides(&ws);
    assert_eq!(out.chain[0].key(), l.net(&s).unwrap().canonicalize().key());
    assert_eq!(
        out.chain.last().unwrap().key(),
        r.net(&s).unwrap().canonicalize().key()
    );
    let spec = ModelSpec::Boolean { dim_bound: 2 };
    assert!(check_instance(&s, &law, &ws, &spec).unwrap().is_none());
    eprintln!(
        "{} {} states {} steps",
        law.label(),
        out.states,
        out.trace.len()
    );
}

#[test]
fn black_dot_merging() {
    derivable(Law::new(LawKind::D1));
}

#[test]
fn function_box_symmetry() {
    derivable(Law::new(LawKind::D2));
}

#[test]
fn times_dot() {
    derivable(Law::new(LawKind::D3));
}

#[test]
fn multi_party_braid() {
    for n in 2..=4 {
        derivable(Law::with_shape(LawKind::D4, vec![n]));
    }
}
