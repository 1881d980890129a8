use std::path::Path;

use super::ExperimentError;
use crate::ensemble::{Ensemble, EnsembleFile, TOL_IMPORT};

/// Residuals above this are reported but tolerated on import.
pub const WARN_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ImportedEnsemble {
    pub ensemble: Ensemble,
    /// Stated rate, or the ensemble's own design rate when none is given.
    pub rate: f64,
    pub warnings: Vec<String>,
}

/// Read and validate an ensemble file with the relaxed import tolerance.
pub fn import_ensemble(path: &Path) -> Result<ImportedEnsemble, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    let file: EnsembleFile = serde_json::from_str(&text)
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
    import_file(&file).map_err(|e| match e {
        ExperimentError::Config(m) => ExperimentError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Validate an already parsed ensemble description.
pub fn import_file(file: &EnsembleFile) -> Result<ImportedEnsemble, ExperimentError> {
    let ensemble = file.to_ensemble().map_err(|e| ExperimentError::Config(e.to_string()))?;
    let rate = match file.rate() {
        Some(r) => r,
        None => ensemble.rate().map_err(|e| ExperimentError::Config(e.to_string()))?,
    };
    let report = ensemble.validate(rate, TOL_IMPORT);
    if !report.passed() {
        let failed: Vec<String> = report.violations().map(|r| format!("{} ({:+.3e})", r.check, r.residual)).collect();
        return Err(ExperimentError::Config(format!("ensemble violates {}", failed.join(", "))));
    }
    let warnings = report
        .residuals
        .iter()
        .filter(|r| r.residual.abs() > WARN_TOL)
        .map(|r| format!("{} residual {:+.3e}", r.check, r.residual))
        .collect();
    Ok(ImportedEnsemble { ensemble, rate, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn rounded_file_imports_with_warnings() {
        let f = write(
            r#"{"type":"standard","rate":0.5,
                "lambda":{"2":0.2978,"3":0.1747,"6":0.2459,"20":0.2816},
                "rho":{"7":0.3414,"8":0.6589}}"#,
        );
        let imp = import_ensemble(f.path()).unwrap();
        assert!(imp.warnings.iter().any(|w| w.starts_with("rho_sum")), "{:?}", imp.warnings);
        assert_eq!(imp.rate, 0.5);
    }

    #[test]
    fn clean_file_has_no_warnings() {
        let f = write(r#"{"type":"standard","lambda":{"3":1.0},"rho":{"6":1.0}}"#);
        let imp = import_ensemble(f.path()).unwrap();
        assert!(imp.warnings.is_empty());
        assert!((imp.rate - 0.5).abs() < 1e-15);
    }

    #[test]
    fn malformed_json_reports_position() {
        let f = write("{\"type\":\"standard\",\n\"lambda\":{\"3\":1.0,},\"rho\":{}}");
        let err = import_ensemble(f.path()).unwrap_err();
        assert!(matches!(&err, ExperimentError::Config(m) if m.contains("line 2")), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn violations_are_listed_by_name() {
        let f = write(
            r#"{"type":"met","rate":0.5,"m_e":4,
                "var_types":[{"b":[0,1],"d":[2,0,0,0],"coeff":0.5},{"b":[0,1],"d":[3,0,0,0],"coeff":0.3},
                             {"b":[1,0],"d":[0,3,3,0],"coeff":0.2},{"b":[0,1],"d":[0,0,0,1],"coeff":0.2}],
                "chk_types":[{"d":[2,2,1,0],"coeff":0.4},{"d":[2,1,2,0],"coeff":0.1},{"d":[0,0,3,1],"coeff":0.2}]}"#,
        );
        let err = import_ensemble(f.path()).unwrap_err().to_string();
        assert!(err.contains("edge_balance:class1"), "{err}");
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = import_ensemble(Path::new("/nonexistent/ensemble.json")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
