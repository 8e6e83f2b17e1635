//! S-expression reading and printing of terms.

use std::fmt;

use crate::error::{Error, Result};
use crate::signature::{HomType, Name, ObjectWord, Signature};
use crate::term::{BaseTerm, Term, TypedTerm};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Open,
    Close,
    LBrack,
    RBrack,
    Atom(String),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn tokenize(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let chars: Vec<char> = raw.chars().collect();
        let mut k = 0;
        while k < chars.len() {
            let c = chars[k];
            let col = k + 1;
            let line = ln + 1;
            match c {
                ';' | '#' => break,
                c if c.is_whitespace() => k += 1,
                '(' | ')' | '[' | ']' => {
                    let tok = match c {
                        '(' => Tok::Open,
                        ')' => Tok::Close,
                        '[' => Tok::LBrack,
                        _ => Tok::RBrack,
                    };
                    out.push(Spanned { tok, line, col });
                    k += 1;
                }
                _ => {
                    let start = k;
                    while k < chars.len()
                        && !chars[k].is_whitespace()
                        && !"()[];#".contains(chars[k])
                    {
                        k += 1;
                    }
                    let s: String = chars[start..k].iter().collect();
                    if !s
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || "_'=-".contains(c))
                    {
                        return Err(Error::syntax(line, col, format!("unexpected token `{s}`")));
                    }
                    out.push(Spanned {
                        tok: Tok::Atom(s),
                        line,
                        col,
                    });
                }
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    env: Vec<(String, Term)>,
    end: (usize, usize),
    _text: &'a str,
}

fn is_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Result<Self> {
        let toks = tokenize(text)?;
        let lines = text.lines().count().max(1);
        let last = text.lines().last().map(|l| l.chars().count()).unwrap_or(0);
        Ok(Parser {
            toks,
            pos: 0,
            env: Vec::new(),
            end: (lines, last + 1),
            _text: text,
        })
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(t) => (t.line, t.col),
            None => self.end,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (l, c) = self.here();
        Err(Error::syntax(l, c, msg))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn atom(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Atom(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn name(&mut self, what: &str) -> Result<Name> {
        let s = self.atom(what)?;
        if !is_name(&s) {
            self.pos -= 1;
            return self.err(format!("bad name `{s}`"));
        }
        Ok(Name::from(s.as_str()))
    }

    fn index(&mut self) -> Result<usize> {
        let s = self.atom("an index")?;
        s.parse::<usize>().or_else(|_| {
            self.pos -= 1;
            self.err(format!("bad index `{s}`"))
        })
    }

    fn word(&mut self) -> Result<ObjectWord> {
        match self.peek() {
            Some(Tok::Atom(s)) if s == "I" => {
                self.pos += 1;
                Ok(ObjectWord::empty())
            }
            Some(Tok::Atom(_)) => Ok(ObjectWord(vec![self.name("an object")?])),
            Some(Tok::Open) => {
                self.pos += 1;
                let mut out = Vec::new();
                while self.peek() != Some(&Tok::Close) {
                    if self.peek() == Some(&Tok::Atom("I".into())) {
                        return self.err("`I` cannot appear inside a word");
                    }
                    out.push(self.name("an object or `)`")?);
                }
                self.pos += 1;
                Ok(ObjectWord(out))
            }
            _ => self.err("expected a word"),
        }
    }

    fn pairs(&mut self) -> Result<Vec<HomType>> {
        let mut out = Vec::new();
        while self.peek() == Some(&Tok::LBrack) {
            self.pos += 1;
            let a = self.word()?;
            let b = self.word()?;
            self.expect(Tok::RBrack, "`]`")?;
            out.push(HomType::new(a, b));
        }
        Ok(out)
    }

    fn perm(&mut self) -> Result<Vec<usize>> {
        self.expect(Tok::Open, "`(` starting a permutation")?;
        let mut out = Vec::new();
        while self.peek() != Some(&Tok::Close) {
            out.push(self.index()?);
        }
        self.pos += 1;
        Ok(out)
    }

    fn base(&mut self) -> Result<BaseTerm> {
        self.expect(Tok::Open, "`(` starting a base term")?;
        let head = self.atom("a base form")?;
        let f = match head.as_str() {
            "bid" => BaseTerm::Id(self.word()?),
            "bgen" => BaseTerm::Gen(self.name("a generator name")?),
            "braid" => BaseTerm::Braid(self.word()?, self.word()?),
            "bcomp" => {
                let f = self.base()?;
                let g = self.base()?;
                f.then(g)
            }
            "btensor" => {
                let f = self.base()?;
                let g = self.base()?;
                f.tensor(g)
            }
            other => {
                self.pos -= 1;
                return self.err(format!("unknown base form `{other}`"));
            }
        };
        self.expect(Tok::Close, "`)`")?;
        Ok(f)
    }

    fn term(&mut self) -> Result<Term> {
        if let Some(Tok::Atom(s)) = self.peek() {
            let s = s.clone();
            if let Some((_, t)) = self.env.iter().rev().find(|(n, _)| *n == s) {
                let t = t.clone();
                self.pos += 1;
                return Ok(t);
            }
            return self.err(format!("unbound name `{s}`"));
        }
        self.expect(Tok::Open, "`(` starting a term")?;
        let head = self.atom("a term form")?;
        let t = match head.as_str() {
            "pgen" => Term::PGen(self.name("a generator name")?),
            "lift" => Term::Lift(self.base()?),
            "seq" => Term::SeqM(self.word()?, self.word()?, self.word()?),
            "par" => Term::ParM(self.word()?, self.word()?, self.word()?, self.word()?),
            "id" => Term::IdSt(self.word()?),
            "split" => Term::Split(self.pairs()?),
            "merge" => Term::Merge(self.pairs()?),
            "ident" => Term::Ident(self.pairs()?),
            "comp" => {
                let s = self.term()?;
                let i = self.index()?;
                let t = self.term()?;
                let j = self.index()?;
                Term::comp(s, i, t, j)
            }
            "inperm" => {
                let s = self.term()?;
                Term::inperm(s, self.perm()?)
            }
            "outperm" => {
                let s = self.term()?;
                Term::outperm(s, self.perm()?)
            }
            other => {
                self.pos -= 1;
                return self.err(format!("unknown term form `{other}`"));
            }
        };
        self.expect(Tok::Close, "`)`")?;
        Ok(t)
    }
}

/// A parsed term file: named bindings in order, the last item being the main term.
#[derive(Clone, Debug)]
pub struct TermFile {
    pub items: Vec<(Option<String>, Term)>,
}

impl TermFile {
    pub fn main(&self) -> &Term {
        &self.items.last().expect("nonempty by construction").1
    }
}

pub fn parse_term_file(text: &str) -> Result<TermFile> {
    let mut p = Parser::new(text)?;
    let mut items = Vec::new();
    while p.peek().is_some() {
        if p.peek() == Some(&Tok::Atom("let".into())) {
            p.pos += 1;
            let name = p.atom("a binding name")?;
            if !is_name(&name) {
                p.pos -= 1;
                return p.err(format!("bad binding name `{name}`"));
            }
            if p.atom("`=`")? != "=" {
                p.pos -= 1;
                return p.err("expected `=`");
            }
            let t = p.term()?;
            p.env.push((name.clone(), t.clone()));
            items.push((Some(name), t));
        } else {
            let t = p.term()?;
            items.push((None, t));
        }
    }
    if items.is_empty() {
        return p.err("empty term file");
    }
    Ok(TermFile { items })
}

/// Parses one term, the last item of the file when there are bindings.
pub fn parse_term(text: &str) -> Result<Term> {
    Ok(parse_term_file(text)?.main().clone())
}

pub fn parse_typed_term(text: &str, sig: &Signature) -> Result<TypedTerm> {
    TypedTerm::new(sig, parse_term(text)?)
}

pub fn parse_base(text: &str) -> Result<BaseTerm> {
    let mut p = Parser::new(text)?;
    let f = p.base()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(f)
}

pub(crate) struct SexpWord<'a>(pub &'a ObjectWord);

impl fmt::Display for SexpWord<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 .0.len() {
            0 => write!(f, "I"),
            1 => write!(f, "{}", self.0 .0[0]),
            _ => write!(f, "({})", self.0),
        }
    }
}

fn fmt_pairs(f: &mut fmt::Formatter<'_>, pairs: &[HomType]) -> fmt::Result {
    for h in pairs {
        write!(f, " [{} {}]", SexpWord(&h.dom), SexpWord(&h.cod))?;
    }
    Ok(())
}

fn fmt_perm(f: &mut fmt::Formatter<'_>, p: &[usize]) -> fmt::Result {
    write!(f, "(")?;
    for (k, x) in p.iter().enumerate() {
        if k > 0 {
            write!(f, " ")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, ")")
}

impl fmt::Display for BaseTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseTerm::Id(w) => write!(f, "(bid {})", SexpWord(w)),
            BaseTerm::Gen(n) => write!(f, "(bgen {n})"),
            BaseTerm::Braid(u, v) => write!(f, "(braid {} {})", SexpWord(u), SexpWord(v)),
            BaseTerm::Compose(a, b) => write!(f, "(bcomp {a} {b})"),
            BaseTerm::Tensor(a, b) => write!(f, "(btensor {a} {b})"),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::PGen(n) => write!(f, "(pgen {n})"),
            Term::Lift(b) => write!(f, "(lift {b})"),
            Term::SeqM(a, b, c) => {
                write!(f, "(seq {} {} {})", SexpWord(a), SexpWord(b), SexpWord(c))
            }
            Term::ParM(a, a2, b, b2) => write!(
                f,
                "(par {} {} {} {})",
                SexpWord(a),
                SexpWord(a2),
                SexpWord(b),
                SexpWord(b2)
            ),
            Term::IdSt(a) => write!(f, "(id {})", SexpWord(a)),
            Term::Split(p) => {
                write!(f, "(split")?;
                fmt_pairs(f, p)?;
                write!(f, ")")
            }
            Term::Merge(p) => {
                write!(f, "(merge")?;
                fmt_pairs(f, p)?;
                write!(f, ")")
            }
            Term::Ident(p) => {
                write!(f, "(ident")?;
                fmt_pairs(f, p)?;
                write!(f, ")")
            }
            Term::InPerm(t, p) => {
                write!(f, "(inperm {t} ")?;
                fmt_perm(f, p)?;
                write!(f, ")")
            }
            Term::OutPerm(t, p) => {
                write!(f, "(outperm {t} ")?;
                fmt_perm(f, p)?;
                write!(f, ")")
            }
            Term::Comp(s, i, t, j) => write!(f, "(comp {s} {i} {t} {j})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_example() {
        let sig = Signature::new().with_object("q");
        let t = parse_typed_term("(comp (id (q)) 0 (seq (q) (q) (q)) 0)", &sig).unwrap();
        assert_eq!(t.ty.to_string(), "[q,q] -> [q,q]");
    }

    #[test]
    fn bindings_and_references() {
        let text = "let a = (id q)\n; comment\nlet b = (comp a 0 (seq q q q) 0)\n";
        let f = parse_term_file(text).unwrap();
        assert_eq!(f.items.len(), 2);
        assert_eq!(f.main().to_string(), "(comp (id q) 0 (seq q q q) 0)");
    }

    #[test]
    fn words_in_every_spelling() {
        let t = parse_term("(split [(q r) I] [q ()])").unwrap();
        assert_eq!(t.to_string(), "(split [(q r) I] [q I])");
    }

    #[test]
    fn errors_carry_positions() {
        match parse_term("(comp (id q) 0\n  (seq q q q 0)") {
            Err(Error::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 14)),
            other => panic!("{other:?}"),
        }
        match parse_term("(lift (bgen f)") {
            Err(Error::Syntax {
                line: 1, col: 15, ..
            }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_term("(frob q)"),
            Err(Error::Syntax { col: 2, .. })
        ));
        assert!(matches!(parse_term("x"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_term(""), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse_term("(id q) $"),
            Err(Error::Syntax { col: 8, .. })
        ));
    }
}
