use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hocirc::embed::{run_suite, EmbedConfig, Suite};
use hocirc::holes::{
    behavioral_equal, check_lat_multi, check_slot, parse_family, Behavior, ProbeGrid, Prober,
    Verdict,
};
use hocirc::laws::{
    boolean_sweep, decide_equal, float_trials, normalize, EqualityVerdict, Law, LawKind, ModelSpec,
};
use hocirc::matmodel::{evaluate, parse_model, AnyModel, Matrix, Semiring};
use hocirc::{parse_signature, parse_typed_term, Error, Signature, TypedTerm};

#[derive(Parser)]
#[command(
    name = "hocirc",
    version,
    about = "Terms, laws and models of higher-order circuits"
)]
struct Cli {
    /// Signature file; the two-object demo signature when absent.
    #[arg(long, global = true)]
    sig: Option<PathBuf>,
    /// One JSON object per check.
    #[arg(long, global = true)]
    json: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Typecheck a term file.
    Check { term: PathBuf },
    /// Rewrite to normal form.
    Normalize {
        term: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
    },
    /// Evaluate a term in a model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        term: PathBuf,
    },
    /// Decide equality by rewriting, else look for a separating model.
    Equal {
        t1: PathBuf,
        t2: PathBuf,
        #[arg(long, default_value_t = 2)]
        dim_bound: usize,
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
    },
    /// Check the law catalogue in a model family.
    Laws(LawsArgs),
    /// Check a tabulated family for local applicability.
    LatCheck { family: PathBuf },
    /// Check that the first family commutes with the second on disjoint holes.
    SlotCheck { f1: PathBuf, f2: PathBuf },
    /// Compare two terms on the probe grid.
    BehavEq {
        t1: PathBuf,
        t2: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Machine checks of the embedding into strong profunctors.
    Embed {
        #[command(subcommand)]
        cmd: EmbedCmd,
    },
}

#[derive(Args)]
struct LawsArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Bool)]
    model: ModelKind,
    #[arg(long, default_value_t = 2)]
    dim_bound: usize,
    #[arg(long, default_value_t = 2)]
    word_len: usize,
    /// Largest number of pairs in list-shaped laws.
    #[arg(long, default_value_t = 3)]
    max_pairs: usize,
    /// Float trials per law shape.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Only this law.
    #[arg(long)]
    law: Option<String>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = 2)]
    dim_bound: usize,
    #[arg(long, default_value_t = 1)]
    context_len: usize,
    #[arg(long, default_value_t = 4)]
    probe_atoms: usize,
    #[arg(long, default_value_t = 128)]
    max_tuples: usize,
}

#[derive(Subcommand)]
enum EmbedCmd {
    Check {
        #[arg(long, default_value_t = 2)]
        grid_dims: usize,
        #[arg(long, default_value_t = 2)]
        word_len: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    Bool,
    F64,
}

/// A failed run: the exit code and what to print.
struct Fail {
    code: u8,
    msg: String,
}

const CHECK_FAILED: u8 = 1;
const USAGE: u8 = 2;
const IO_OR_PARSE: u8 = 3;

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Syntax { .. }
            | Error::DuplicateName(_)
            | Error::UndeclaredObject(_)
            | Error::UndeclaredName(_)
            | Error::Invalid(_)
            | Error::MissingAssignment(_)
            | Error::IncompleteTable(_) => IO_OR_PARSE,
            _ => CHECK_FAILED,
        };
        Fail {
            code,
            msg: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail {
        code: IO_OR_PARSE,
        msg: format!("{}: {e}", path.display()),
    })
}

fn in_file<T>(path: &Path, r: hocirc::Result<T>) -> Result<T, Fail> {
    r.map_err(|e| {
        let mut f = Fail::from(e);
        f.msg = format!("{}: {}", path.display(), f.msg);
        f
    })
}

/// Buffered report lines, text or JSON.
struct Out {
    json: bool,
    lines: Vec<String>,
    failed: bool,
}

impl Out {
    fn text(&mut self, s: String) {
        if !self.json {
            self.lines.push(s);
        }
    }

    fn check(
        &mut self,
        suite: &str,
        case: &str,
        pass: bool,
        text: String,
        witness: Option<String>,
    ) {
        self.failed |= !pass;
        if self.json {
            let mut v = json!({
                "suite": suite,
                "case": case,
                "verdict": if pass { "PASS" } else { "FAIL" },
            });
            if let Some(w) = witness {
                v["witness"] = json!(w);
            }
            self.lines.push(v.to_string());
        } else {
            self.lines.push(text);
        }
    }

    fn flush(&self) -> io::Result<()> {
        let mut o = io::stdout().lock();
        for l in &self.lines {
            writeln!(o, "{l}")?;
        }
        o.flush()
    }
}

fn signature(cli: &Cli) -> Result<Signature, Fail> {
    match &cli.sig {
        None => Ok(Signature::demo()),
        Some(p) => in_file(p, parse_signature(&read(p)?)),
    }
}

fn term(sig: &Signature, p: &Path) -> Result<TypedTerm, Fail> {
    in_file(p, parse_typed_term(&read(p)?, sig))
}

fn fmt_matrix<S: Semiring>(m: &Matrix<S>) -> Vec<String> {
    (0..m.rows)
        .map(|r| {
            (0..m.cols)
                .map(|c| m.get(r, c).fmt_entry())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

fn verdict_witness(v: &Verdict) -> Option<String> {
    match v {
        Verdict::Pass => None,
        Verdict::Fail(w) => Some(w.to_string()),
    }
}

fn run(cli: &Cli, out: &mut Out) -> Result<(), Fail> {
    let sig = signature(cli)?;
    match &cli.cmd {
        Cmd::Check { term: p } => {
            let t = term(&sig, p)?;
            out.check(
                "check",
                &p.display().to_string(),
                true,
                format!("{}", t.ty),
                None,
            );
        }
        Cmd::Normalize { term: p, fuel } => {
            let t = term(&sig, p)?;
            let n = normalize(&sig, &t, *fuel)?;
            out.text(format!("{}", n.term.term));
            out.text(format!("steps {}", n.trace.len()));
            if cli.json {
                out.lines.push(
                    json!({
                        "suite": "normalize",
                        "case": p.display().to_string(),
                        "verdict": if n.exhausted { "FAIL" } else { "PASS" },
                        "term": n.term.term.to_string(),
                        "steps": n.trace.len(),
                    })
                    .to_string(),
                );
            }
            out.failed |= n.exhausted;
        }
        Cmd::Eval { model, term: p } => {
            let t = term(&sig, p)?;
            let rows = match in_file(model, parse_model(&read(model)?, &sig))? {
                AnyModel::Bool(m) => fmt_matrix(&evaluate(&sig, &t, &m)?.matrix),
                AnyModel::F64(m) => fmt_matrix(&evaluate(&sig, &t, &m)?.matrix),
            };
            if cli.json {
                out.lines.push(json!({ "suite": "eval", "case": p.display().to_string(), "verdict": "PASS", "rows": rows }).to_string());
            } else {
                out.lines.extend(rows);
            }
        }
        Cmd::Equal {
            t1,
            t2,
            dim_bound,
            fuel,
        } => {
            let (s, t) = (term(&sig, t1)?, term(&sig, t2)?);
            let v = decide_equal(
                &sig,
                &s,
                &t,
                &[ModelSpec::Boolean {
                    dim_bound: *dim_bound,
                }],
                *fuel,
            )?;
            let witness = match &v {
                EqualityVerdict::DistinguishedByModel(w) => Some(format!(
                    "{} at {:?}: {} vs {}\n{}",
                    w.model, w.entry, w.left, w.right, w.assignment
                )),
                _ => None,
            };
            let pass = matches!(v, EqualityVerdict::EqualByRewriting(_));
            out.check("equal", "pair", pass, v.tag().to_string(), witness.clone());
            if let Some(w) = witness {
                out.text(w);
            }
        }
        Cmd::Laws(a) => laws(&sig, a, cli.seed, out)?,
        Cmd::LatCheck { family } => {
            let f = in_file(family, parse_family(&read(family)?, &sig))?;
            let v = check_lat_multi(&f, &f.grid())?;
            let w = verdict_witness(&v);
            let tag = if v.is_pass() { "PASS" } else { "FAIL" };
            out.check(
                "lat",
                &family.display().to_string(),
                v.is_pass(),
                format!("LAT {} {tag}", f.ty),
                w.clone(),
            );
            if let Some(w) = w {
                out.text(w);
            }
        }
        Cmd::SlotCheck { f1, f2 } => {
            let a = in_file(f1, parse_family(&read(f1)?, &sig))?;
            let b = in_file(f2, parse_family(&read(f2)?, &sig))?;
            if a.dims != b.dims {
                return Err(Fail {
                    code: CHECK_FAILED,
                    msg: "the two families are tabulated in different models".into(),
                });
            }
            let v = check_slot(&a, &b, &a.grid())?;
            let w = verdict_witness(&v);
            let tag = if v.is_pass() { "PASS" } else { "FAIL" };
            out.check(
                "slot",
                "pair",
                v.is_pass(),
                format!("SLOT {tag}"),
                w.clone(),
            );
            if let Some(w) = w {
                out.text(w);
            }
        }
        Cmd::BehavEq { t1, t2, grid } => {
            let (s, t) = (term(&sig, t1)?, term(&sig, t2)?);
            let p = Prober::new(
                &sig,
                ProbeGrid {
                    dim_bound: grid.dim_bound,
                    context_len: grid.context_len,
                    probe_atoms: grid.probe_atoms,
                    max_tuples: grid.max_tuples,
                    seed: cli.seed,
                    ..ProbeGrid::default()
                },
            )?;
            match behavioral_equal(&p, &s, &t)? {
                Behavior::Equal { tuples } => out.check(
                    "behav-eq",
                    "pair",
                    true,
                    format!("equal on {tuples} probe tuples"),
                    None,
                ),
                Behavior::Distinguished(w) => {
                    let probes: Vec<String> = w.probes.iter().map(|t| t.to_string()).collect();
                    let text = format!(
                        "distinguished at {:?} by {}\n{}",
                        w.entry,
                        probes.join(" "),
                        w.assignment
                    );
                    out.check("behav-eq", "pair", false, text.clone(), Some(text));
                }
            }
        }
        Cmd::Embed {
            cmd:
                EmbedCmd::Check {
                    grid_dims,
                    word_len,
                    samples,
                    suite,
                },
        } => {
            let suites = Suite::parse(suite).ok_or_else(|| Fail {
                code: USAGE,
                msg: format!("unknown suite `{suite}`"),
            })?;
            let cfg = EmbedConfig {
                dim_bound: *grid_dims,
                word_len: *word_len,
                samples: *samples,
                seed: cli.seed,
                ..EmbedConfig::default()
            };
            for s in suites {
                let mut cases = Vec::new();
                let sum = run_suite(&sig, s, &cfg, &mut |c| cases.push(c.clone()))?;
                for c in cases {
                    let w = (!c.pass).then(|| c.detail.clone());
                    out.check(s.name(), &c.id, c.pass, c.to_string(), w);
                }
                for n in sum.notes {
                    out.text(format!("# {s}: {n}"));
                }
            }
        }
    }
    Ok(())
}

fn laws(sig: &Signature, a: &LawsArgs, seed: u64, out: &mut Out) -> Result<(), Fail> {
    let kinds: Vec<LawKind> = match &a.law {
        None => LawKind::ALL.to_vec(),
        Some(n) => vec![LawKind::from_name(n).ok_or_else(|| Fail {
            code: USAGE,
            msg: format!("unknown law `{n}`"),
        })?],
    };
    for kind in kinds {
        for shape in kind.shapes(a.max_pairs) {
            let law = Law::with_shape(kind, shape);
            match a.model {
                ModelKind::Bool => {
                    boolean_sweep(sig, &law, a.word_len, a.dim_bound, |r| {
                        let tag = if r.pass { "PASS" } else { "FAIL" };
                        let w = r
                            .witness
                            .as_ref()
                            .map(|w| format!("{} at {:?}", w.assignment, w.entry));
                        let text = format!("LAW {} {:016x} {tag} {}", r.law, r.hash, r.model);
                        out.check(
                            "laws",
                            &format!("{} {:016x}", r.law, r.hash),
                            r.pass,
                            text,
                            w,
                        );
                    })?;
                }
                ModelKind::F64 => {
                    let sum = float_trials(sig, &law, a.word_len, a.dim_bound, a.samples, seed)?;
                    let model = format!("f64-d{}-s{seed}", a.dim_bound);
                    for f in &sum.failures {
                        let w = f
                            .witness
                            .as_ref()
                            .map(|w| format!("{} at {:?}", w.assignment, w.entry));
                        out.check(
                            "laws",
                            &format!("{} {:016x}", f.law, f.hash),
                            false,
                            format!("LAW {} {:016x} FAIL {model}", f.law, f.hash),
                            w,
                        );
                    }
                    let pass = sum.failures.is_empty() && sum.instances == a.samples;
                    let hash = hocirc::laws::instance_hash(&sum.law, &[]);
                    out.check(
                        "laws",
                        &format!("{} {hash:016x}", sum.law),
                        pass,
                        format!(
                            "LAW {} {hash:016x} {} {model}",
                            sum.law,
                            if pass { "PASS" } else { "FAIL" }
                        ),
                        None,
                    );
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let mut out = Out {
        json: cli.json,
        lines: Vec::new(),
        failed: false,
    };
    let res = run(&cli, &mut out);
    if out.flush().is_err() {
        return ExitCode::from(IO_OR_PARSE);
    }
    match res {
        Ok(()) if out.failed => ExitCode::from(CHECK_FAILED),
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
