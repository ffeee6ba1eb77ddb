use std::path::{Path, PathBuf};

use serde_json::json;

/// Everything the front ends can fail with, grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Validation(#[from] jointvip::Error),
    #[error("cannot {action} {}: {message}", path.display())]
    Io { action: &'static str, path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(action: &'static str, path: &Path, err: std::io::Error) -> Self {
        CliError::Io { action, path: path.to_path_buf(), message: err.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Usage(_) => 4,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            CliError::Validation(e) => e.to_json(),
            CliError::Io { path, .. } => json!({
                "code": "IoError",
                "message": self.to_string(),
                "detail": { "path": path.display().to_string() },
            }),
            CliError::Usage(message) => json!({ "code": "Usage", "message": message }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        let io = CliError::io("read", Path::new("m.json"), std::io::Error::from(std::io::ErrorKind::NotFound));
        assert_eq!(io.exit_code(), 3);
        assert_eq!(io.to_json()["code"], "IoError");
        assert_eq!(io.to_json()["detail"]["path"], "m.json");
        let validation = CliError::from(jointvip::Error::NoTreatedInAnalysis);
        assert_eq!(validation.exit_code(), 2);
        assert_eq!(validation.to_json()["code"], "NoTreatedInAnalysis");
        assert_eq!(CliError::Usage("x".into()).exit_code(), 4);
    }
}
