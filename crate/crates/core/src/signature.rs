//! Base objects, words, hom types and signatures.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result, Violations};

pub type Name = Arc<str>;

/// A word over base objects. The empty word is the monoidal unit.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ObjectWord(pub Vec<Name>);

impl ObjectWord {
    pub fn empty() -> Self {
        ObjectWord(Vec::new())
    }

    pub fn single(name: &str) -> Self {
        ObjectWord(vec![Name::from(name)])
    }

    pub fn of(names: &[&str]) -> Self {
        ObjectWord(names.iter().map(|n| Name::from(*n)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &ObjectWord) -> ObjectWord {
        tensor_words(self, other)
    }

    pub fn reversed(&self) -> ObjectWord {
        ObjectWord(self.0.iter().rev().cloned().collect())
    }

    pub fn slice(&self, from: usize, to: usize) -> ObjectWord {
        ObjectWord(self.0[from..to].to_vec())
    }

    pub fn concat_all<'a>(words: impl IntoIterator<Item = &'a ObjectWord>) -> ObjectWord {
        ObjectWord(
            words
                .into_iter()
                .flat_map(|w| w.0.iter().cloned())
                .collect(),
        )
    }
}

impl fmt::Display for ObjectWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "I");
        }
        for (k, n) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ObjectWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

pub fn tensor_words(u: &ObjectWord, v: &ObjectWord) -> ObjectWord {
    let mut out = u.0.clone();
    out.extend(v.0.iter().cloned());
    ObjectWord(out)
}

/// The enrichment object `[dom, cod]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HomType {
    pub dom: ObjectWord,
    pub cod: ObjectWord,
}

impl HomType {
    pub fn new(dom: ObjectWord, cod: ObjectWord) -> Self {
        HomType { dom, cod }
    }
}

impl fmt::Display for HomType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.dom, self.cod)
    }
}

impl fmt::Debug for HomType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PolyType {
    pub inputs: Vec<HomType>,
    pub outputs: Vec<HomType>,
}

impl PolyType {
    pub fn new(inputs: Vec<HomType>, outputs: Vec<HomType>) -> Self {
        PolyType { inputs, outputs }
    }
}

pub(crate) fn fmt_homlist(list: &[HomType]) -> String {
    if list.is_empty() {
        return ".".to_string();
    }
    list.iter()
        .map(|h| h.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for PolyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {}",
            fmt_homlist(&self.inputs),
            fmt_homlist(&self.outputs)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseObject {
    pub name: Name,
    pub line: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseGen {
    pub name: Name,
    pub dom: ObjectWord,
    pub cod: ObjectWord,
    pub line: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyGen {
    pub name: Name,
    pub ty: PolyType,
    pub line: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Signature {
    pub objects: Vec<BaseObject>,
    pub gens: Vec<BaseGen>,
    pub polygens: Vec<PolyGen>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_object(mut self, name: &str) -> Self {
        self.objects.push(BaseObject {
            name: name.into(),
            line: None,
        });
        self
    }

    pub fn with_gen(mut self, name: &str, dom: ObjectWord, cod: ObjectWord) -> Self {
        self.gens.push(BaseGen {
            name: name.into(),
            dom,
            cod,
            line: None,
        });
        self
    }

    pub fn with_polygen(mut self, name: &str, ty: PolyType) -> Self {
        self.polygens.push(PolyGen {
            name: name.into(),
            ty,
            line: None,
        });
        self
    }

    pub fn has_object(&self, name: &str) -> bool {
        self.objects.iter().any(|o| &*o.name == name)
    }

    pub fn gen(&self, name: &str) -> Option<&BaseGen> {
        self.gens.iter().find(|g| &*g.name == name)
    }

    pub fn polygen(&self, name: &str) -> Option<&PolyGen> {
        self.polygens.iter().find(|g| &*g.name == name)
    }

    pub fn object_names(&self) -> Vec<Name> {
        self.objects.iter().map(|o| o.name.clone()).collect()
    }

    pub fn check_word(&self, w: &ObjectWord) -> Result<()> {
        match w.0.iter().find(|n| !self.has_object(n)) {
            Some(n) => Err(Error::UndeclaredObject(n.to_string())),
            None => Ok(()),
        }
    }

    /// `[dom, cod]`, provided both words only use declared objects.
    pub fn hom(&self, dom: ObjectWord, cod: ObjectWord) -> Result<HomType> {
        self.check_word(&dom)?;
        self.check_word(&cod)?;
        Ok(HomType::new(dom, cod))
    }

    /// Reports every violation: duplicate names and undeclared objects.
    pub fn validate(&self) -> std::result::Result<(), Violations> {
        let mut out = Vec::new();
        let loc = |kind: &str, name: &str, line: Option<usize>| match line {
            Some(l) => format!("line {l}: {kind} {name}"),
            None => format!("{kind} {name}"),
        };
        let mut seen = BTreeSet::new();
        for o in &self.objects {
            if o.name.is_empty() {
                out.push((
                    loc("object", "", o.line),
                    Error::UndeclaredObject(String::new()),
                ));
            }
            if !seen.insert(o.name.clone()) {
                out.push((
                    loc("object", &o.name, o.line),
                    Error::DuplicateName(o.name.to_string()),
                ));
            }
        }
        let mut names = BTreeSet::new();
        let undeclared = |w: &ObjectWord, here: String, out: &mut Vec<(String, Error)>| {
            for n in &w.0 {
                if !self.has_object(n) {
                    out.push((here.clone(), Error::UndeclaredObject(n.to_string())));
                }
            }
        };
        for g in &self.gens {
            let here = loc("gen", &g.name, g.line);
            if !names.insert(g.name.clone()) {
                out.push((here.clone(), Error::DuplicateName(g.name.to_string())));
            }
            undeclared(&g.dom, here.clone(), &mut out);
            undeclared(&g.cod, here, &mut out);
        }
        for g in &self.polygens {
            let here = loc("polygen", &g.name, g.line);
            if !names.insert(g.name.clone()) {
                out.push((here.clone(), Error::DuplicateName(g.name.to_string())));
            }
            for h in g.ty.inputs.iter().chain(&g.ty.outputs) {
                undeclared(&h.dom, here.clone(), &mut out);
                undeclared(&h.cod, here.clone(), &mut out);
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(Violations(out))
        }
    }

    /// Two objects `q r` and a few generators over them.
    pub fn demo() -> Self {
        let q = ObjectWord::single("q");
        let r = ObjectWord::single("r");
        Signature::new()
            .with_object("q")
            .with_object("r")
            .with_gen("f", q.clone(), q.clone())
            .with_gen("g", q.clone(), q.clone())
            .with_gen("h", q.clone(), r.clone())
            .with_gen("k", r.clone(), q.clone())
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.objects {
            writeln!(f, "object {}", o.name)?;
        }
        for g in &self.gens {
            writeln!(f, "gen {} : {} -> {}", g.name, g.dom, g.cod)?;
        }
        for g in &self.polygens {
            writeln!(
                f,
                "polygen {} : {} -> {}",
                g.name,
                fmt_homlist(&g.ty.inputs),
                fmt_homlist(&g.ty.outputs)
            )?;
        }
        Ok(())
    }
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    cs.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// Parses a whitespace separated word, `I` being the empty word.
fn parse_word(text: &str, line: usize, col: usize) -> Result<ObjectWord> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts == ["I"] {
        return Ok(ObjectWord::empty());
    }
    if parts.is_empty() {
        return Err(Error::syntax(
            line,
            col,
            "expected a word (use `I` for the empty word)",
        ));
    }
    let mut out = Vec::new();
    for p in parts {
        if !is_ident(p) || p == "I" {
            return Err(Error::syntax(line, col, format!("bad object name `{p}`")));
        }
        out.push(Name::from(p));
    }
    Ok(ObjectWord(out))
}

fn parse_homlist(text: &str, line: usize, col: usize) -> Result<Vec<HomType>> {
    let t = text.trim();
    if t == "." {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut rest = t;
    let mut offset = col + (text.len() - text.trim_start().len());
    loop {
        let r = rest.trim_start();
        offset += rest.len() - r.len();
        rest = r;
        if !rest.starts_with('[') {
            return Err(Error::syntax(line, offset, "expected `[`"));
        }
        let close = rest
            .find(']')
            .ok_or_else(|| Error::syntax(line, offset, "unclosed `[`"))?;
        let inner = &rest[1..close];
        let comma = inner
            .find(',')
            .ok_or_else(|| Error::syntax(line, offset, "expected `,` inside hom type"))?;
        let dom = parse_word(&inner[..comma], line, offset + 1)?;
        let cod = parse_word(&inner[comma + 1..], line, offset + comma + 2)?;
        out.push(HomType::new(dom, cod));
        offset += close + 1;
        rest = &rest[close + 1..];
        let r = rest.trim_start();
        offset += rest.len() - r.len();
        rest = r;
        if rest.is_empty() {
            return Ok(out);
        }
        if !rest.starts_with(',') {
            return Err(Error::syntax(
                line,
                offset,
                "expected `,` between hom types",
            ));
        }
        rest = &rest[1..];
        offset += 1;
    }
}

/// Parses the line-oriented signature format and validates the result.
pub fn parse_signature(text: &str) -> Result<Signature> {
    let sig = parse_signature_unchecked(text)?;
    sig.validate().map_err(Error::Invalid)?;
    Ok(sig)
}

pub fn parse_signature_unchecked(text: &str) -> Result<Signature> {
    let mut sig = Signature::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let trimmed = body.trim_start();
        let indent = body.len() - trimmed.len();
        let trimmed = trimmed.trim_end();
        if trimmed.is_empty() {
            continue;
        }
        let (kw, rest) = match trimmed.find(char::is_whitespace) {
            Some(p) => (&trimmed[..p], &trimmed[p..]),
            None => (trimmed, ""),
        };
        let rest_col = indent + kw.len() + 1;
        match kw {
            "object" => {
                let name = rest.trim();
                if !is_ident(name) || name == "I" {
                    return Err(Error::syntax(
                        line,
                        rest_col + 1,
                        format!("bad object name `{name}`"),
                    ));
                }
                sig.objects.push(BaseObject {
                    name: name.into(),
                    line: Some(line),
                });
            }
            "gen" | "polygen" => {
                let colon = rest
                    .find(':')
                    .ok_or_else(|| Error::syntax(line, rest_col, "expected `:`"))?;
                let name = rest[..colon].trim();
                if !is_ident(name) {
                    return Err(Error::syntax(
                        line,
                        rest_col + 1,
                        format!("bad generator name `{name}`"),
                    ));
                }
                let ty = &rest[colon + 1..];
                let arrow = ty
                    .find("->")
                    .ok_or_else(|| Error::syntax(line, rest_col + colon + 1, "expected `->`"))?;
                let lhs_col = rest_col + colon + 1;
                let rhs_col = lhs_col + arrow + 2;
                if kw == "gen" {
                    let dom = parse_word(&ty[..arrow], line, lhs_col)?;
                    let cod = parse_word(&ty[arrow + 2..], line, rhs_col)?;
                    sig.gens.push(BaseGen {
                        name: name.into(),
                        dom,
                        cod,
                        line: Some(line),
                    });
                } else {
                    let inputs = parse_homlist(&ty[..arrow], line, lhs_col)?;
                    let outputs = parse_homlist(&ty[arrow + 2..], line, rhs_col)?;
                    sig.polygens.push(PolyGen {
                        name: name.into(),
                        ty: PolyType::new(inputs, outputs),
                        line: Some(line),
                    });
                }
            }
            other => {
                return Err(Error::syntax(
                    line,
                    indent + 1,
                    format!("unknown declaration `{other}`"),
                ));
            }
        }
    }
    Ok(sig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &[&str]) -> ObjectWord {
        ObjectWord::of(s)
    }

    #[test]
    fn minimal_signature_is_ok() {
        let sig = Signature::new()
            .with_object("q")
            .with_gen("f", w(&["q"]), w(&["q"]));
        assert!(sig.validate().is_ok());
    }

    #[test]
    fn undeclared_object_is_reported() {
        let sig = Signature::new()
            .with_object("q")
            .with_gen("f", w(&["q"]), w(&["r"]));
        let v = sig.validate().unwrap_err();
        assert_eq!(v.0.len(), 1);
        assert_eq!(v.0[0].1, Error::UndeclaredObject("r".into()));
    }

    #[test]
    fn duplicate_gen_is_reported() {
        let sig = Signature::new()
            .with_object("q")
            .with_gen("f", w(&["q"]), w(&["q"]))
            .with_gen("f", w(&["q"]), w(&["q"]));
        let v = sig.validate().unwrap_err();
        assert_eq!(v.0[0].1, Error::DuplicateName("f".into()));
    }

    #[test]
    fn every_violation_is_listed() {
        let sig = Signature::new()
            .with_object("q")
            .with_gen("f", w(&["x"]), w(&["y"]))
            .with_polygen(
                "f",
                PolyType::new(vec![HomType::new(w(&["z"]), w(&[]))], vec![]),
            );
        let v = sig.validate().unwrap_err();
        assert_eq!(v.0.len(), 4);
    }

    #[test]
    fn tensor_words_examples() {
        assert_eq!(
            tensor_words(&w(&["q", "r"]), &w(&["s"])),
            w(&["q", "r", "s"])
        );
        assert_eq!(tensor_words(&w(&[]), &w(&["q"])), w(&["q"]));
        assert_eq!(tensor_words(&w(&["q"]), &w(&[])), w(&["q"]));
    }

    #[test]
    fn hom_examples() {
        let sig = Signature::new().with_object("q").with_object("r");
        assert_eq!(sig.hom(w(&["q"]), w(&["r"])).unwrap().to_string(), "[q,r]");
        assert_eq!(sig.hom(w(&[]), w(&[])).unwrap().to_string(), "[I,I]");
        assert_eq!(
            sig.hom(w(&["q", "r"]), w(&["q"])).unwrap().to_string(),
            "[q r,q]"
        );
        assert_eq!(
            sig.hom(w(&["s"]), w(&[])).unwrap_err(),
            Error::UndeclaredObject("s".into())
        );
    }

    #[test]
    fn parses_file_format() {
        let text = "# demo\nobject q\nobject r  # second\ngen f : q -> q r\ngen u : I -> q\npolygen S : [q,r],[I,q] -> .\n";
        let sig = parse_signature(text).unwrap();
        assert_eq!(sig.objects.len(), 2);
        assert_eq!(sig.gen("f").unwrap().cod, w(&["q", "r"]));
        assert_eq!(sig.gen("u").unwrap().dom, w(&[]));
        let s = sig.polygen("S").unwrap();
        assert_eq!(s.ty.inputs.len(), 2);
        assert!(s.ty.outputs.is_empty());
        let again = parse_signature(&sig.to_string()).unwrap();
        assert_eq!(again.to_string(), sig.to_string());
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_signature("object q\ngen f q -> q\n") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_signature("object q\nfoo bar\n") {
            Err(Error::Syntax {
                line: 2, col: 1, ..
            }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_signature("gen f : q -> q"),
            Err(Error::Invalid(_))
        ));
    }
}
