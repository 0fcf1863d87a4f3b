use thiserror::Error;

/// A single validation finding: which rule fired and on which entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub rule: &'static str,
    pub entity: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.entity, self.message)
    }
}

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unresolved reference to {what} `{name}` in {context}")]
    Unresolved {
        what: &'static str,
        name: String,
        context: String,
    },
    #[error("duplicate {what} id `{name}`")]
    Duplicate { what: &'static str, name: String },
    #[error("unsupported format version {0}")]
    Format(u32),
    #[error("design validation failed: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("characterization error: {0}")]
    Characterization(String),
    #[error("infeasible timing: {0}")]
    InfeasibleTiming(String),
    #[error("infeasible clustering: {0}")]
    InfeasibleClustering(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SmtError>;
