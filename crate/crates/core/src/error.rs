use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("undeclared object `{0}`")]
    UndeclaredObject(String),
    #[error("undeclared name `{0}`")]
    UndeclaredName(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("composition type mismatch plugging output {i} into input {j}: expected {expected}, found {found}")]
    CompositionTypeMismatch {
        i: usize,
        j: usize,
        expected: String,
        found: String,
    },
    #[error("index {index} out of range for a list of length {len}")]
    ArityOutOfRange { index: usize, len: usize },
    #[error("permutation {perm:?} is not a permutation of a list of length {len}")]
    PermutationLengthMismatch { len: usize, perm: Vec<usize> },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("missing assignment for `{0}`")]
    MissingAssignment(String),
    #[error("enumeration of {count} cases exceeds the ceiling {ceiling}")]
    ExplosionGuard { count: u128, ceiling: u128 },
    #[error("table has no entry for {0}")]
    IncompleteTable(String),
    #[error("term has several outputs; a single output is required")]
    MultipleOutputsUnsupported,
    #[error("diagram is not tree-shaped and has no term reading")]
    NotATree,
    #[error("{line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{0}")]
    Invalid(Violations),
}

impl Error {
    pub fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }
}

/// Every problem found by a validation pass, each with a location.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Violations(pub Vec<(String, Error)>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (loc, e)) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{loc}: {e}")?;
        }
        Ok(())
    }
}
