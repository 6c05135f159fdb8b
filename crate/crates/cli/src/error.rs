use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {message}", location(.line, .field))]
    Config { line: Option<usize>, field: String, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] cstar_core::Error),
}

fn location(line: &Option<usize>, field: &str) -> String {
    match line {
        Some(n) => format!(" at line {n} ({field})"),
        None => format!(" ({field})"),
    }
}

impl CliError {
    pub fn config(line: Option<usize>, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config { line, field: field.into(), message: message.into() }
    }
}
