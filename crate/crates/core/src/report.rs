//! Residual bookkeeping shared by the verification routines.

use serde::Serialize;

/// Version of the JSON report layout written by the CLI.
pub const SCHEMA_VERSION: u32 = 1;

/// Largest residual observed for one axiom, with the sample that produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomResidual {
    pub axiom: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub worst_at: Option<String>,
    pub samples: usize,
    pub passed: bool,
}

impl AxiomResidual {
    pub fn new(axiom: &str, tolerance: f64) -> Self {
        AxiomResidual {
            axiom: axiom.to_string(),
            max_residual: 0.0,
            tolerance,
            worst_at: None,
            samples: 0,
            passed: true,
        }
    }

    /// Records one residual; NaN counts as a failure.
    pub fn record(&mut self, residual: f64, at: &str) {
        self.samples += 1;
        if residual.is_nan() || residual > self.max_residual {
            self.max_residual = if residual.is_nan() { f64::INFINITY } else { residual };
            self.worst_at = Some(at.to_string());
        }
        self.passed = self.max_residual <= self.tolerance;
    }
}
