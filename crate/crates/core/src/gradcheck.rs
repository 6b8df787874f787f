//! Central finite-difference gradient checking.

use crate::error::{Error, Result};

/// Outcome of comparing an analytic gradient against central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Number of coordinates compared.
    pub checked: usize,
    /// Coordinate with the largest relative error.
    pub worst_index: Option<usize>,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    pub step: f64,
    pub tolerance: f64,
}

impl Default for GradCheck {
    fn default() -> Self {
        GradCheck {
            step: 1e-5,
            tolerance: 1e-4,
        }
    }
}

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

impl GradCheck {
    pub fn with_tolerance(tolerance: f64) -> Self {
        GradCheck {
            tolerance,
            ..Default::default()
        }
    }

    /// Compares `analytic` against central differences of `f` at `point`
    /// over every coordinate.
    pub fn check<F>(&self, f: F, point: &[f64], analytic: &[f64]) -> Result<GradCheckReport>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let all: Vec<usize> = (0..point.len()).collect();
        self.check_subset(f, point, analytic, &all)
    }

    /// Like [`GradCheck::check`] but only perturbs the listed coordinates.
    pub fn check_subset<F>(
        &self,
        mut f: F,
        point: &[f64],
        analytic: &[f64],
        indices: &[usize],
    ) -> Result<GradCheckReport>
    where
        F: FnMut(&[f64]) -> f64,
    {
        if analytic.len() != point.len() {
            return Err(Error::dim(
                crate::error::Axis::Length,
                point.len(),
                analytic.len(),
            ));
        }
        let mut x = point.to_vec();
        let mut worst = (0.0f64, None);
        for &i in indices {
            let orig = x[i];
            x[i] = orig + self.step;
            let plus = f(&x);
            x[i] = orig - self.step;
            let minus = f(&x);
            x[i] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::Evaluation(format!(
                    "non-finite value while perturbing coordinate {i}"
                )));
            }
            let numeric = (plus - minus) / (2.0 * self.step);
            let err = relative_error(analytic[i], numeric);
            if err.is_nan() || err > worst.0 {
                worst = (err, Some(i));
            }
        }
        Ok(GradCheckReport {
            max_rel_error: worst.0,
            checked: indices.len(),
            worst_index: worst.1,
            pass: worst.0 <= self.tolerance,
        })
    }
}

/// Checks a map that returns its value together with its analytic gradient.
pub fn grad_check<F>(mut f: F, point: &[f64], tolerance: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (value, analytic) = f(point)?;
    if !value.is_finite() {
        return Err(Error::Evaluation(
            "non-finite value at the check point".into(),
        ));
    }
    let mut failure = None;
    let report = GradCheck::with_tolerance(tolerance).check(
        |x| match f(x) {
            Ok((v, _)) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        point,
        &analytic,
    );
    match failure {
        Some(e) => Err(e),
        None => report,
    }
}
