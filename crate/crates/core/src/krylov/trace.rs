use std::path::Path;

use crate::error::{Error, Result};
use crate::report::{fmt_f64, CsvTable};

/// Residual history of an iterative solve.
///
/// `converged` implies the last residual is at most `tol * reference_norm`.
/// The reference is the initial residual, raised to an absolute floor for
/// starts that are already exact to rounding.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationTrace {
    pub residual_norms: Vec<f64>,
    pub error_norms: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub tol: f64,
    pub reference_norm: f64,
}

impl IterationTrace {
    pub(crate) fn start(tol: f64, r0: f64, floor: f64, track_error: bool) -> Self {
        IterationTrace {
            residual_norms: vec![r0],
            error_norms: track_error.then(Vec::new),
            iterations: 0,
            converged: false,
            tol,
            reference_norm: r0.max(floor / tol),
        }
    }

    pub(crate) fn push(&mut self, r: f64) {
        self.residual_norms.push(r);
        self.iterations += 1;
    }

    pub(crate) fn push_error(&mut self, e: f64) {
        if let Some(errs) = self.error_norms.as_mut() {
            errs.push(e);
        }
    }

    pub(crate) fn is_small(&self, r: f64) -> bool {
        r <= self.tol * self.reference_norm
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual_norms.last().unwrap()
    }

    /// `Err(MaxIterExceeded)` unless the run converged.
    pub fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::MaxIterExceeded {
                iterations: self.iterations,
            })
        }
    }

    /// Columns `iter,residual,error`; `error` is empty without a reference solution.
    pub fn to_table(&self, metadata: &[(&str, String)]) -> CsvTable {
        let mut t = CsvTable::new(&["iter", "residual", "error"]);
        for (k, v) in metadata {
            t.meta(k, v);
        }
        t.meta("tol", fmt_f64(self.tol));
        t.meta("converged", self.converged);
        for (i, r) in self.residual_norms.iter().enumerate() {
            let e = self
                .error_norms
                .as_ref()
                .and_then(|v| v.get(i))
                .map(|&x| fmt_f64(x))
                .unwrap_or_default();
            t.push(vec![i.to_string(), fmt_f64(*r), e]);
        }
        t
    }

    pub fn write_csv(&self, path: &Path, metadata: &[(&str, String)]) -> Result<()> {
        self.to_table(metadata).write(path)
    }
}
