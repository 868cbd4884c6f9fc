use fowt_ccd::Error;

pub const FAILURE: u8 = 1;
pub const VALIDATION: u8 = 2;
pub const INFEASIBLE: u8 = 3;
pub const IO: u8 = 4;

/// A failed command: process exit code plus message.
#[derive(Debug)]
pub struct Exit {
    pub code: u8,
    pub message: String,
}

impl Exit {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(VALIDATION, message)
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self::new(IO, format!("{}: {e}", path.display()))
    }
}

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } | Error::Json { .. } | Error::Csv(_) => IO,
            Error::InvalidInput(_)
            | Error::Dimension(_)
            | Error::OutOfHull { .. }
            | Error::Extrapolation { .. }
            | Error::Build(_) => VALIDATION,
            _ => FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

pub type CmdResult = Result<(), Exit>;
