//! Reproduces the two worked point-set examples: the second canonical
//! minimal set in the plane, and a poised six-point set that is not minimal.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::sets::{canonical_set, is_minimal_nshc, is_poised_quadratic, nshc_points, DirectionSet, PointSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn outcome(name: &str, result: std::result::Result<String, String>) -> CheckOutcome {
    match result {
        Ok(detail) => CheckOutcome {
            name: name.into(),
            passed: true,
            detail,
        },
        Err(detail) => CheckOutcome {
            name: name.into(),
            passed: false,
            detail,
        },
    }
}

const CANONICAL_PLANE: [[f64; 2]; 6] = [
    [0.0, -1.0],
    [0.0, 0.0],
    [0.0, 1.0],
    [1.0, -1.0],
    [1.0, 0.0],
    [2.0, -1.0],
];

const NON_MINIMAL: [[f64; 2]; 6] = [
    [0.0, 0.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [-1.0, 0.0],
    [0.0, -1.0],
    [-1.0, -1.0],
];

fn set_of(rows: &[[f64; 2]]) -> PointSet {
    let pts = rows.iter().map(|r| DVector::from_row_slice(r)).collect();
    PointSet::new(2, pts).expect("listed points are distinct")
}

fn check_canonical() -> std::result::Result<String, String> {
    let x0 = DVector::zeros(2);
    let (s, t) = canonical_set(2, 2, 1.0).map_err(|e| e.to_string())?;
    let expected_t = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, -1.0]);
    if t.matrix() != &expected_t {
        return Err(format!("T = {:?}, expected columns e1 - e2 and -e2", t.matrix().as_slice()));
    }
    let generated = nshc_points(&x0, &s, &t).map_err(|e| e.to_string())?;
    let listed = set_of(&CANONICAL_PLANE);
    if !generated.same_points(&listed, 1e-12) {
        return Err(format!("generated {} points that differ from the listed six", generated.len()));
    }
    match is_minimal_nshc(&listed, &x0).map_err(|e| e.to_string())? {
        Some(w) => {
            let rebuilt = nshc_points(&x0, &w.s, &w.t).map_err(|e| e.to_string())?;
            if rebuilt.same_points(&listed, 1e-12) {
                Ok("six points reproduced; search finds a witness".into())
            } else {
                Err("search witness does not rebuild the set".into())
            }
        }
        None => Err("search found no witness".into()),
    }
}

fn check_non_minimal() -> std::result::Result<String, String> {
    let x0 = DVector::zeros(2);
    let set = set_of(&NON_MINIMAL);
    let poised = is_poised_quadratic(&set).map_err(|e| e.to_string())?;
    let witness = is_minimal_nshc(&set, &x0).map_err(|e| e.to_string())?;
    match (poised, witness) {
        (true, None) => Ok("poised: true, minimal: false".into()),
        (p, w) => Err(format!("poised: {p}, minimal: {}", w.is_some())),
    }
}

/// Applies an invertible `N` and a permutation to `S` and `U_2`, then checks
/// the transformed set is still found minimal by the search.
fn check_transformed() -> std::result::Result<String, String> {
    let x0 = DVector::from_row_slice(&[0.25, -0.5]);
    let transforms = [
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.25, 1.5]),
    ];
    let (s, t) = canonical_set(2, 2, 1.0).map_err(|e| e.to_string())?;
    for n in &transforms {
        let sn: DirectionSet = s.transformed(n).map_err(|e| e.to_string())?;
        let tn: DirectionSet = t.transformed(n).map_err(|e| e.to_string())?;
        let pts = nshc_points(&x0, &sn, &tn).map_err(|e| e.to_string())?;
        if pts.len() != 6 {
            return Err(format!("transformed set has {} points", pts.len()));
        }
        if is_minimal_nshc(&pts, &x0).map_err(|e| e.to_string())?.is_none() {
            return Err(format!("transform {:?} lost minimality", n.as_slice()));
        }
    }
    Ok(format!("{} transforms remain minimal", transforms.len()))
}

pub fn verify_examples() -> VerifyReport {
    VerifyReport {
        checks: vec![
            outcome("canonical-plane-set", check_canonical()),
            outcome("poised-not-minimal", check_non_minimal()),
            outcome("transformed-canonical-set", check_transformed()),
        ],
    }
}
