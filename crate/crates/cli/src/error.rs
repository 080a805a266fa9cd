use std::fmt;

use germinate_core::cantor::CantorError;
use germinate_core::field::FieldError;
use germinate_core::germ::GermError;
use germinate_core::interp::InterpError;
use germinate_core::poly::PolyError;
use germinate_core::zeros::ZerosError;

/// Failure classes, one per exit status.
#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Numerical(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    pub fn invalid(m: impl Into<String>) -> Self {
        CliError::Invalid(m.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn field_is_numerical(e: &FieldError) -> bool {
    matches!(e, FieldError::PrecisionExhausted)
}

fn poly_is_numerical(e: &PolyError) -> bool {
    matches!(e, PolyError::Field(f) if field_is_numerical(f))
}

fn interp_is_numerical(e: &InterpError) -> bool {
    match e {
        InterpError::QuadratureFailure { .. } => true,
        InterpError::Field(f) => field_is_numerical(f),
        InterpError::Poly(p) => poly_is_numerical(p),
        InterpError::Cantor(CantorError::Field(f)) => field_is_numerical(f),
        _ => false,
    }
}

fn classify(numerical: bool, message: String) -> CliError {
    if numerical {
        CliError::Numerical(message)
    } else {
        CliError::Invalid(message)
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        classify(field_is_numerical(&e), e.to_string())
    }
}

impl From<PolyError> for CliError {
    fn from(e: PolyError) -> Self {
        classify(poly_is_numerical(&e), e.to_string())
    }
}

impl From<CantorError> for CliError {
    fn from(e: CantorError) -> Self {
        classify(matches!(&e, CantorError::Field(f) if field_is_numerical(f)), e.to_string())
    }
}

impl From<InterpError> for CliError {
    fn from(e: InterpError) -> Self {
        classify(interp_is_numerical(&e), e.to_string())
    }
}

impl From<GermError> for CliError {
    fn from(e: GermError) -> Self {
        let numerical = match &e {
            GermError::Interp(i) => interp_is_numerical(i),
            GermError::Poly(p) => poly_is_numerical(p),
            GermError::Field(f) => field_is_numerical(f),
            _ => false,
        };
        classify(numerical, e.to_string())
    }
}

impl From<ZerosError> for CliError {
    fn from(e: ZerosError) -> Self {
        let numerical = match &e {
            ZerosError::RootFindingFailure { .. } => true,
            ZerosError::Field(f) => field_is_numerical(f),
            ZerosError::Poly(p) => poly_is_numerical(p),
            _ => false,
        };
        classify(numerical, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}
