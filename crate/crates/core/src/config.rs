//! Parameter-file ingestion (TOML; key names match the `RawParams` fields,
//! matrices as nested row-major arrays).

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{validate_params, ModelParams, RawParams};

/// Parse a parameter file without validating.
pub fn read_raw(path: &Path) -> Result<RawParams> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Parse and validate a parameter file.
pub fn load_params(path: &Path) -> Result<ModelParams> {
    validate_params(&read_raw(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const BASELINE: &str = r#"
horizon_T = 1.0
theta = 0.3
dim_d = 1
sigma_R = [[0.25]]
sigma_mu = [[1.0]]
kappa = [[3.0]]
mu_bar = [0.0]
m_bar0 = [0.0]
q_bar0 = [[0.16666666666666666]]
m0 = [0.0]
q0 = [[0.16666666666666666]]
"#;

    #[test]
    fn loads_baseline_toml() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(BASELINE.as_bytes()).unwrap();
        let p = load_params(f.path()).unwrap();
        assert_eq!(p.dim_d, 1);
        assert_eq!(p.x0, 1.0);
        assert_eq!(p.theta, 0.3);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(format!("{BASELINE}\nmystery = 1.0\n").as_bytes())
            .unwrap();
        assert!(matches!(load_params(f.path()), Err(Error::Config(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_params(Path::new("/nonexistent/params.toml")),
            Err(Error::Io(_))
        ));
    }
}
