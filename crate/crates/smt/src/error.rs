use thiserror::Error;

#[derive(Debug, Error)]
pub enum SmtError {
    #[error("sort error: {0}")]
    Sort(String),
    #[error("constant {value} does not fit in {width} bits")]
    ConstantRange { value: String, width: u32 },
    #[error("variable `{0}` is already declared")]
    DuplicateVariable(String),
    #[error("variable `{0}` is not declared")]
    UndeclaredVariable(String),
    #[error("invalid variable name `{0}`")]
    InvalidName(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
}
