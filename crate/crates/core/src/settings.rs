/// Library-wide numeric tolerances.
///
/// Every tolerance is relative to the scale of the object it is applied to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericSettings {
    /// Relative singular-value cutoff for the pseudoinverse. `None` selects
    /// `max(rows, cols) * eps`.
    pub pinv_cutoff: Option<f64>,
    /// Relative singular-value threshold used by full-rank checks.
    pub rank_tol: f64,
    /// Relative coincidence tolerance for evaluation points.
    pub dedup_tol: f64,
    /// Relative singular-value threshold for the poisedness test.
    pub poised_tol: f64,
    /// Smallest admissible `|g(x0)|` for the quotient rule.
    pub division_floor: f64,
}

impl NumericSettings {
    pub const DEFAULT: NumericSettings = NumericSettings {
        pinv_cutoff: None,
        rank_tol: 1e-12,
        dedup_tol: 1e-12,
        poised_tol: 1e-10,
        division_floor: 1e-12,
    };
}

impl Default for NumericSettings {
    fn default() -> Self {
        Self::DEFAULT
    }
}
