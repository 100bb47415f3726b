use std::fmt;

use thiserror::Error;

/// One problem found while validating a system or mapping description.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("{context}: unknown sort `{sort}`")]
    UnknownSort { context: String, sort: String },
    #[error("{context}: unknown relation `{name}`")]
    UnknownRelation { context: String, name: String },
    #[error("{context}: unknown query `{name}`")]
    UnknownQuery { context: String, name: String },
    #[error("{context}: unknown command `{name}`")]
    UnknownCommand { context: String, name: String },
    #[error("{context}: `{name}` expects {expected} arguments, got {found}")]
    ArityMismatch {
        context: String,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate {kind} `{name}`")]
    DuplicateName { kind: &'static str, name: String },
    #[error("{context}: unbound variable `{var}`")]
    UnboundVariable { context: String, var: String },
    #[error("{context}: `{var}` has sort `{found}` where `{expected}` is required")]
    SortMismatch {
        context: String,
        var: String,
        expected: String,
        found: String,
    },
    #[error("request `{0}` is not among the declared queries")]
    RequestNotQuery(String),
    #[error("command `{command}`: actor index {index} is out of range")]
    BadActor { command: String, index: usize },
    #[error("initial state: {0}")]
    InvalidInit(String),
    #[error("administrator relation `{0}` must be a declared unary relation")]
    BadAdmins(String),
    #[error("{context}: {message}")]
    Malformed { context: String, message: String },
}

/// A non-empty list of schema errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaErrors(pub Vec<SchemaError>);

impl fmt::Display for SchemaErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for SchemaErrors {}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unknown query `{0}`")]
    UnknownQuery(String),
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("`{name}` expects {expected} arguments, got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("`{name}` argument {index}: atom `{atom}` has sort `{found}`, expected `{expected}`")]
    SortMismatch {
        name: String,
        index: usize,
        atom: String,
        expected: String,
        found: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("no rule for source command `{0}`")]
    MissingCommandRule(String),
    #[error("no decider rule for source query `{0}`")]
    MissingQueryRule(String),
    #[error("more than one rule for `{0}`")]
    DuplicateRule(String),
    #[error("rule emits unknown target relation or sort `{0}`")]
    RuleEmitsUnknownRelation(String),
    #[error("invalid mapping: {0}")]
    Schema(SchemaErrors),
    #[error("atom `{atom}` of sort `{sort}` has no image in the target state")]
    UntranslatableAtom { sort: String, atom: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("actor preservation needs actor parameters: command `{0}` declares none")]
    NoActorDeclared(String),
    #[error("request `{0}` has no identically named target request with a matching signature")]
    SignatureMismatch(String),
    #[error("weak authorization preservation needs a request transformation for `{0}`")]
    MissingRequestTransform(String),
    #[error("property {0} cannot be checked by bounded exploration")]
    Unsupported(String),
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

/// Top-level error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Schema(#[from] SchemaErrors),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("unknown corpus id `{0}`")]
    UnknownId(String),
    #[error("unknown simulation `{0}`")]
    UnknownSimulation(String),
    #[error("unknown property tag `{0}`")]
    UnknownTag(String),
    #[error("no canonical usage is recorded for `{0}`")]
    NoCanonicalData(String),
    #[error("invalid report: {0}")]
    InvalidReport(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
