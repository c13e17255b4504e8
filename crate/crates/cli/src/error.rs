use longi_readout::ReadoutError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error(transparent)]
    Numeric(#[from] ReadoutError),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    /// Single-line JSON document for stderr.
    pub fn to_json(&self) -> String {
        let body = match self {
            CliError::Schema { path, message } => {
                json!({"kind": "schema", "path": path, "message": message})
            }
            CliError::Usage(m) => json!({"kind": "usage", "message": m}),
            CliError::Io(m) => json!({"kind": "io", "message": m}),
            CliError::Numeric(e) => json!({"kind": e.kind(), "message": e.to_string()}),
        };
        json!({ "error": body }).to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape() {
        let e = CliError::Schema { path: "system.kappa".into(), message: "bad".into() };
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"]["kind"], "schema");
        assert_eq!(v["error"]["path"], "system.kappa");
        let n = CliError::from(ReadoutError::Alignment("x".into()));
        let v: serde_json::Value = serde_json::from_str(&n.to_json()).unwrap();
        assert_eq!(v["error"]["kind"], "alignment");
        assert_eq!(n.exit_code(), 4);
    }
}
