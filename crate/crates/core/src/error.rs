use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("location `{0}` has no send or internal rule")]
    TerminalLocation(String),
    #[error("rule {rule} uses undeclared {kind} `{name}`")]
    UndeclaredSymbol { rule: usize, kind: &'static str, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid model: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ValidationError>),
    #[error("rule {0} is not enabled")]
    NotEnabled(usize),
    #[error("enumeration exceeds the bound {bound}")]
    TooLarge { bound: usize },
    #[error("removing every location leaves nothing")]
    EmptyRemainder,
    #[error("{count} target sets exceed the limit of {limit}")]
    TooManyTargets { count: usize, limit: usize },
    #[error("query needs at least one target set")]
    NoTargets,
    #[error("transition function has no entry for state `{state}` on location `{loc}`")]
    PartialDelta { state: String, loc: String },
    #[error("the safe set is empty")]
    EmptySafe,
    #[error("the promising set is empty")]
    EmptyProm,
    #[error("the almost-sure core is empty")]
    EmptyCore,
    #[error("scheduler undefined in mode {mode} at {config}")]
    Undefined { mode: usize, config: String },
    #[error("saturation exceeded {0} generators")]
    SaturationLimit(usize),
    #[error("explicit state space exceeds {0} configurations")]
    StateSpace(usize),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("unknown message `{0}`")]
    UnknownMessage(String),
    #[error("fault rate must lie strictly between 0 and 1, got {0}")]
    FaultRate(String),
    #[error("{}", parse_message(*.line, .msg))]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

fn parse_message(line: usize, msg: &str) -> String {
    if line == 0 {
        msg.to_string()
    } else {
        format!("line {line}: {msg}")
    }
}
