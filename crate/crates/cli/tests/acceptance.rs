//! Acceptance criteria, one PASS/FAIL line each. Runs without the test harness so the lines
//! are always printed; the process fails if any criterion does.

use std::path::PathBuf;
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hocirc::embed::{run_suite, EmbedConfig, Suite, SuiteSummary};
use hocirc::gen::TermGen;
use hocirc::holes::{
    check_lat_multi, check_lat_single, check_slot, congruence_holds, process_shape, DSupermap,
    Family, FamilyType, IdentityFamily, Induced, LatGrid, Mutated, ProbeGrid, Prober, Verdict,
};
use hocirc::laws::{
    boolean_sweep, derive, float_trials, verify_chain, words_up_to, Law, LawKind, Origin, RuleSet,
};
use hocirc::matmodel::{evaluate, mat_compose, Matrix, ModelAssignment};
use hocirc::{
    parse_signature, parse_term, parse_typed_term, HomType, ObjectWord, Signature, Term, TypedTerm,
};

const FLOAT_TOL: f64 = 1e-9;
const BOOL_DIMS: usize = 2;
const FLOAT_DIMS: usize = 3;
const WORD_LEN: usize = 2;
const FLOAT_SAMPLES: usize = 100;
const DERIVE_FUEL: usize = 10_000;

type Outcome = Result<String, String>;

struct Criterion {
    id: usize,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn sig() -> Signature {
    Signature::demo()
}

fn fail_if(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Err(msg)
    } else {
        Ok(())
    }
}

/// Boolean exhaustive at dims ≤ 2 and float at dims ≤ 3, words of length ≤ 2.
fn model_equal(s: &Signature, law: &Law, seed: u64) -> Result<(usize, usize), String> {
    let b = boolean_sweep(s, law, WORD_LEN, BOOL_DIMS, |_| {})
        .map_err(|e| format!("{}: {e}", law.label()))?;
    if let Some(f) = b.failures.first() {
        return Err(format!("{} {:016x} fails in {}", f.law, f.hash, f.model));
    }
    let f = float_trials(s, law, WORD_LEN, FLOAT_DIMS, FLOAT_SAMPLES, seed)
        .map_err(|e| format!("{}: {e}", law.label()))?;
    if let Some(x) = f.failures.first() {
        return Err(format!(
            "{} {:016x} differs beyond {FLOAT_TOL}",
            x.law, x.hash
        ));
    }
    fail_if(
        f.instances != FLOAT_SAMPLES,
        format!("{}: only {} float trials", law.label(), f.instances),
    )?;
    Ok((b.instances, f.instances))
}

fn c1() -> Outcome {
    let s = sig();
    let (mut laws, mut bool_inst, mut float_inst) = (0, 0, 0);
    for kind in LawKind::ALL
        .into_iter()
        .filter(|k| k.origin() == Origin::Core)
    {
        for shape in kind.shapes(3) {
            let (b, f) = model_equal(&s, &Law::with_shape(kind, shape), 0)?;
            laws += 1;
            bool_inst += b;
            float_inst += f;
        }
    }
    Ok(format!(
        "{laws} law shapes, {bool_inst} Boolean instances, {float_inst} float trials"
    ))
}

fn c2() -> Outcome {
    let s = sig();
    let mut laws = vec![
        Law::new(LawKind::D1),
        Law::new(LawKind::D2),
        Law::new(LawKind::D3),
    ];
    laws.extend((2..=4).map(|n| Law::with_shape(LawKind::D4, vec![n])));
    let sets = [RuleSet::default_moves(), RuleSet::core_normalizing()];
    let mut notes = Vec::new();
    for law in &laws {
        let ws: Vec<ObjectWord> = (0..law.vars())
            .map(|k| ObjectWord::of(&[["q"], ["r"]][k % 2]))
            .collect();
        let out = derive(&s, law, &ws, DERIVE_FUEL).map_err(|e| e.to_string())?;
        fail_if(
            !out.found,
            format!("{} not reached in {} states", law.label(), out.states),
        )?;
        fail_if(
            out.states > DERIVE_FUEL,
            format!("{} took {} states", law.label(), out.states),
        )?;
        fail_if(
            !verify_chain(&s, &out.chain, &out.trace, &sets),
            format!("{} chain does not replay", law.label()),
        )?;
        model_equal(&s, law, 0)?;
        notes.push(format!("{} in {} steps", law.label(), out.trace.len()));
    }
    Ok(notes.join(", "))
}

/// Pair lists whose words have total length ≤ `budget`, at most `max_pairs` pairs.
fn pair_lists(words: &[ObjectWord], budget: usize, max_pairs: usize) -> Vec<Vec<HomType>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![(vec![], 0usize)];
    for _ in 0..max_pairs {
        let mut next = Vec::new();
        for (list, used) in &frontier {
            for a in words {
                for b in words {
                    let cost = used + a.len() + b.len();
                    if cost <= budget {
                        let mut l: Vec<HomType> = list.clone();
                        l.push(HomType::new(a.clone(), b.clone()));
                        out.push(l.clone());
                        next.push((l, cost));
                    }
                }
            }
        }
        frontier = next;
    }
    out
}

fn c3() -> Outcome {
    let s = sig();
    let words = words_up_to(&s, 4);
    let lists = pair_lists(&words, 4, 4);
    let mut checked = 0;
    for pairs in &lists {
        let split = TypedTerm::new(&s, Term::Split(pairs.clone())).map_err(|e| e.to_string())?;
        let merge = TypedTerm::new(&s, Term::Merge(pairs.clone())).map_err(|e| e.to_string())?;
        for q in 1..=BOOL_DIMS {
            for r in 1..=BOOL_DIMS {
                let m = ModelAssignment::<bool>::with_dims(&[("q", q), ("r", r)]);
                let sm = evaluate(&s, &split, &m).map_err(|e| e.to_string())?.matrix;
                let mm = evaluate(&s, &merge, &m).map_err(|e| e.to_string())?.matrix;
                for (name, prod) in [
                    ("split.merge", mat_compose(&sm, &mm)),
                    ("merge.split", mat_compose(&mm, &sm)),
                ] {
                    let p = prod.map_err(|e| e.to_string())?;
                    fail_if(
                        !p.is_identity(),
                        format!("{name} not the identity at {pairs:?} q={q} r={r}"),
                    )?;
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{} pair lists, {checked} evaluations", lists.len()))
}

fn suite(suites: &[Suite], expect_cases: Option<usize>) -> Outcome {
    let s = sig();
    let cfg = EmbedConfig::default();
    let mut notes = Vec::new();
    for &su in suites {
        let sum: SuiteSummary =
            run_suite(&s, su, &cfg, &mut |_| {}).map_err(|e| format!("{su}: {e}"))?;
        if let Some(c) = sum.failures.first() {
            return Err(format!(
                "{} failures, first {c}: {}",
                sum.failures.len(),
                c.detail
            ));
        }
        if let Some(n) = expect_cases {
            fail_if(
                sum.cases != n,
                format!("{su}: {} cases, expected {n}", sum.cases),
            )?;
        }
        notes.push(format!("{su} {} cases {} checks", sum.cases, sum.checks));
        notes.extend(sum.notes.iter().map(|n| format!("{su}: {n}")));
    }
    Ok(notes.join("; "))
}

fn c4() -> Outcome {
    suite(&[Suite::Profunctor, Suite::Strength], None)
}

fn c5() -> Outcome {
    suite(&[Suite::Multifunctor], Some(50))
}

fn c6() -> Outcome {
    suite(&[Suite::Lat], Some(100))
}

fn c7() -> Outcome {
    // 200 pairs plus the class-coverage case
    suite(&[Suite::Faithful], Some(201))
}

fn small_hom(rng: &mut ChaCha8Rng) -> HomType {
    let pick = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
        0 => ObjectWord::empty(),
        1 => ObjectWord::single("q"),
        _ => ObjectWord::single("r"),
    };
    HomType::new(pick(rng), pick(rng))
}

fn c8() -> Outcome {
    let s = sig();
    let ctx0 = HomType::new(ObjectWord::empty(), ObjectWord::empty());
    let (mut passes, mut caught, mut slots) = (0, 0, 0);
    for k in 0..30u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(k);
        let m = ModelAssignment::<bool>::with_dims(&[
            ("q", rng.gen_range(1..=2)),
            ("r", rng.gen_range(1..=2)),
        ]);
        let holes = 1 + (k as usize % 2);
        let ty = FamilyType::new(
            (0..holes).map(|_| small_hom(&mut rng)).collect(),
            small_hom(&mut rng),
        );
        let sup = DSupermap::random(ty.clone(), &m, 0.4, &mut rng).map_err(|e| e.to_string())?;
        let fam = Induced {
            sup,
            model: m.clone(),
        };
        let grid = LatGrid::new(&s, m.clone(), 1).with_budget(4, 6);
        let lat = |f: &dyn Family| -> Result<Verdict, String> {
            if holes == 1 {
                let v = check_lat_single(f, &grid).map_err(|e| e.to_string())?;
                if !v.is_pass() {
                    return Ok(v);
                }
            }
            check_lat_multi(f, &grid).map_err(|e| e.to_string())
        };
        if let Verdict::Fail(w) = lat(&fam)? {
            return Err(format!("core {k} ({ty}) rejected: {w}"));
        }
        passes += 1;
        let inputs: Vec<Matrix<bool>> = ty
            .inputs
            .iter()
            .map(|h| {
                let (r, c) = process_shape(&m, h, &ctx0)?;
                let ps = grid.processes(r, c, k);
                Ok(ps[rng.gen_range(0..ps.len())].clone())
            })
            .collect::<hocirc::Result<_>>()
            .map_err(|e| e.to_string())?;
        let bad =
            Mutated::flip(&fam, vec![ctx0.clone(); holes], inputs).map_err(|e| e.to_string())?;
        match lat(&bad)? {
            Verdict::Fail(w) => {
                fail_if(
                    w.rule.is_empty(),
                    format!("core {k}: mutant failed without a witness"),
                )?;
                caught += 1;
            }
            Verdict::Pass => return Err(format!("core {k} ({ty}): corrupted entry not detected")),
        }
        if holes == 1 {
            let id = IdentityFamily::new(&ty.inputs[0]);
            let id_out = IdentityFamily::new(&ty.output);
            for (a, b) in [(&id as &dyn Family, &fam as &dyn Family), (&fam, &id_out)] {
                let v = check_slot(a, b, &grid).map_err(|e| e.to_string())?;
                fail_if(!v.is_pass(), format!("core {k}: identity is not central"))?;
                slots += 1;
            }
        }
    }
    Ok(format!(
        "{passes} families pass, {caught} mutants caught, {slots} slot checks"
    ))
}

fn c9() -> Outcome {
    let s = sig();
    let p = Prober::new(&s, ProbeGrid::default()).map_err(|e| e.to_string())?;
    let mut gen = TermGen::new(&s, 0);
    gen.multi_output = false;
    for k in 0..100 {
        let (a, b, j) = gen.composable_pair(6);
        let a2 = gen.rewrite_walk(&a, 4).map_err(|e| e.to_string())?;
        let b2 = gen.rewrite_walk(&b, 4).map_err(|e| e.to_string())?;
        match congruence_holds(&p, (&a, &a2), (&b, &b2), 0, j).map_err(|e| e.to_string())? {
            Some(true) => {}
            Some(false) => {
                return Err(format!(
                    "pair {k}: composites differ\n{}\n{}",
                    a.term, b.term
                ))
            }
            None => {
                return Err(format!(
                    "pair {k}: rewritten partner is not behaviorally equal"
                ))
            }
        }
    }
    Ok("100 pairs".into())
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn cli(args: &[&str]) -> Result<Output, String> {
    Command::new(env!("CARGO_BIN_EXE_hocirc"))
        .current_dir(fixtures())
        .args(args)
        .output()
        .map_err(|e| e.to_string())
}

/// Exit 0 and byte-identical stdout on two runs.
fn reproducible(args: &[&str]) -> Result<usize, String> {
    let a = cli(args)?;
    let b = cli(args)?;
    fail_if(
        a.status.code() != Some(0),
        format!("`{}` exited {:?}", args.join(" "), a.status.code()),
    )?;
    fail_if(
        a.stdout != b.stdout,
        format!("`{}` differs between runs", args.join(" ")),
    )?;
    Ok(a.stdout.iter().filter(|&&c| c == b'\n').count())
}

fn c10() -> Outcome {
    let sig_text =
        std::fs::read_to_string(fixtures().join("poly.sig")).map_err(|e| e.to_string())?;
    let s = parse_signature(&sig_text).map_err(|e| e.to_string())?;
    let mut corpus = 0;
    for e in std::fs::read_dir(fixtures().join("corpus")).map_err(|e| e.to_string())? {
        let path = e.map_err(|e| e.to_string())?.path();
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let t = parse_typed_term(&text, &s).map_err(|e| format!("{}: {e}", path.display()))?;
        let back =
            parse_term(&t.term.to_string()).map_err(|e| format!("{}: {e}", path.display()))?;
        fail_if(
            back != t.term,
            format!("{} does not round-trip", path.display()),
        )?;
        corpus += 1;
    }
    fail_if(corpus < 30, format!("corpus has {corpus} terms"))?;
    let laws = reproducible(&[
        "--sig",
        "demo.sig",
        "laws",
        "--model",
        "bool",
        "--dim-bound",
        "2",
    ])?;
    let embed = reproducible(&["--sig", "demo.sig", "embed", "check", "--suite", "all"])?;
    let mut lat = 0;
    for f in [
        "identity.fam",
        "comb1.fam",
        "comb2.fam",
        "slot_identity.fam",
        "slot_comb.fam",
    ] {
        lat += reproducible(&["--sig", "demo.sig", "lat-check", f])?;
    }
    Ok(format!(
        "{corpus} corpus terms, {laws} law lines, {embed} embed lines, {lat} lat-check lines"
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            title: "core laws hold in models",
            budget: Some(Duration::from_secs(300)),
            run: c1,
        },
        Criterion {
            id: 2,
            title: "derived laws are derivable",
            budget: None,
            run: c2,
        },
        Criterion {
            id: 3,
            title: "split and merge are inverse",
            budget: None,
            run: c3,
        },
        Criterion {
            id: 4,
            title: "strong profunctor axioms",
            budget: Some(Duration::from_secs(600)),
            run: c4,
        },
        Criterion {
            id: 5,
            title: "multifunctoriality",
            budget: None,
            run: c5,
        },
        Criterion {
            id: 6,
            title: "images are locally applicable",
            budget: None,
            run: c6,
        },
        Criterion {
            id: 7,
            title: "faithfulness consistency",
            budget: None,
            run: c7,
        },
        Criterion {
            id: 8,
            title: "supermap toolbox",
            budget: None,
            run: c8,
        },
        Criterion {
            id: 9,
            title: "congruence under composition",
            budget: None,
            run: c9,
        },
        Criterion {
            id: 10,
            title: "command line",
            budget: None,
            run: c10,
        },
    ];
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| only.is_empty() || only.contains(&c.id))
    {
        let start = Instant::now();
        let mut res = (c.run)();
        let took = start.elapsed();
        if let (Ok(_), Some(b)) = (&res, c.budget) {
            if took > b {
                res = Err(format!("took {took:.1?}, budget {b:?}"));
            }
        }
        match res {
            Ok(d) => println!("CRITERION {} PASS {} ({d}; {took:.1?})", c.id, c.title),
            Err(d) => {
                failed += 1;
                println!("CRITERION {} FAIL {} ({d}; {took:.1?})", c.id, c.title);
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
