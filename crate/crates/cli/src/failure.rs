use std::fmt;

/// Exit code for bad flags, unreadable or inconsistent inputs.
pub const EXIT_INPUT: u8 = 2;
/// Exit code for failures that are not the caller's fault.
pub const EXIT_INTERNAL: u8 = 1;

/// A stage-tagged failure carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(stage: &str, err: impl fmt::Display) -> Self {
        Self {
            code: EXIT_INPUT,
            message: format!("{stage}: {err}"),
        }
    }

    pub fn internal(stage: &str, err: impl fmt::Display) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: format!("{stage}: {err}"),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type Outcome<T> = Result<T, Failure>;

/// Attaches a stage name and an exit code to any displayable error.
pub trait StageExt<T> {
    fn input(self, stage: &str) -> Outcome<T>;
    fn internal(self, stage: &str) -> Outcome<T>;
}

impl<T, E: fmt::Display> StageExt<T> for Result<T, E> {
    fn input(self, stage: &str) -> Outcome<T> {
        self.map_err(|e| Failure::input(stage, e))
    }

    fn internal(self, stage: &str) -> Outcome<T> {
        self.map_err(|e| Failure::internal(stage, e))
    }
}
