use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const RUNTIME: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const SHOOTING: i32 = 3;
    pub const BLOW_UP: i32 = 4;
    pub const VERIFY: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("profile shooting failed: {0}")]
    Shooting(String),

    #[error("{0}")]
    BlowUp(String),

    #[error("verification failed: {0}")]
    Verify(String),

    #[error("{0}")]
    Runtime(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Shooting(_) => exit::SHOOTING,
            CliError::BlowUp(_) => exit::BLOW_UP,
            CliError::Verify(_) => exit::VERIFY,
            CliError::Runtime(_) | CliError::Io { .. } => exit::RUNTIME,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<diffwave::Error> for CliError {
    fn from(e: diffwave::Error) -> Self {
        use diffwave::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParams(_)
            | E::InvalidGrid(_)
            | E::InvalidConfig(_)
            | E::Compatibility(_)
            | E::Misaligned { .. }
            | E::Parse { .. } => CliError::Config(msg),
            E::NoConvergence(_) | E::Degenerate { .. } => CliError::Shooting(msg),
            E::BlowUp { .. } | E::NonFinite { .. } => CliError::BlowUp(msg),
            _ => CliError::Runtime(msg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_distinct() {
        let errs = [
            CliError::Config(String::new()),
            CliError::Shooting(String::new()),
            CliError::BlowUp(String::new()),
            CliError::Verify(String::new()),
            CliError::Runtime(String::new()),
        ];
        let mut codes: Vec<i32> = errs.iter().map(CliError::exit_code).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), errs.len());
        assert!(!codes.contains(&exit::SUCCESS));
    }

    #[test]
    fn core_errors_map_by_kind() {
        let blow = diffwave::Error::BlowUp {
            t: 1.0,
            reason: "x".into(),
        };
        assert_eq!(CliError::from(blow).exit_code(), exit::BLOW_UP);
        let shoot = diffwave::Error::NoConvergence("x".into());
        assert_eq!(CliError::from(shoot).exit_code(), exit::SHOOTING);
        let bad = diffwave::Error::InvalidParams("x".into());
        assert_eq!(CliError::from(bad).exit_code(), exit::CONFIG);
    }
}
