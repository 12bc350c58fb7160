//! Direction sets, evaluation point sets and their geometry checks.
//!
//! Index convention: the pivot index `k` of `U_k` / `E_k` is 1-based, with
//! `k = 0` selecting the unmodified set. So for `n = 2` the admissible values
//! are `0, 1, 2` and `k = 2` pivots on the second column.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, ensure_finite, ensure_finite_vec};
use crate::quadmodel::quadratic_basis;
use crate::{Error, NumericSettings, Result};

/// An ordered set of directions stored as the columns of an `n x m` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    matrix: DMatrix<f64>,
    radius: f64,
}

impl DirectionSet {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        ensure_finite(&matrix, "direction set")?;
        let radius = matrix
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        Ok(Self { matrix, radius })
    }

    pub fn from_columns(columns: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::EmptyMatrix);
        };
        let n = first.len();
        if let Some(bad) = columns.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                what: "direction length",
                expected: n,
                got: bad.len(),
            });
        }
        Self::new(DMatrix::from_columns(columns))
    }

    /// Dimension of the ambient space.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of directions.
    pub fn len(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.ncols() == 0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.matrix.column(i).into_owned()
    }

    /// Largest Euclidean column norm.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The set divided by its radius, so that the longest column has unit norm.
    pub fn normalized(&self) -> Result<DMatrix<f64>> {
        if self.radius <= 0.0 {
            return Err(Error::NonPositiveRadius("direction set"));
        }
        Ok(&self.matrix / self.radius)
    }

    pub fn scaled(&self, beta: f64) -> Result<Self> {
        Self::new(&self.matrix * beta)
    }

    /// Left multiplication `N * self`.
    pub fn transformed(&self, n: &DMatrix<f64>) -> Result<Self> {
        Self::new(n * &self.matrix)
    }

    /// Full row rank under the default rank tolerance.
    pub fn has_full_row_rank(&self) -> bool {
        linalg::rank(&self.matrix, NumericSettings::DEFAULT.rank_tol) == self.dim()
    }
}

/// A list of pairwise distinct points in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    points: Vec<DVector<f64>>,
}

fn coincide(a: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
    (a - b).norm() <= tol
}

impl PointSet {
    /// Validates dimensions, finiteness and pairwise distinctness.
    pub fn new(dim: usize, points: Vec<DVector<f64>>) -> Result<Self> {
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "point length",
                    expected: dim,
                    got: p.len(),
                });
            }
            ensure_finite_vec(p, "point")?;
        }
        let scale = 1.0 + points.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let tol = NumericSettings::DEFAULT.dedup_tol * scale;
        for (i, p) in points.iter().enumerate() {
            if points[..i].iter().any(|q| coincide(p, q, tol)) {
                return Err(Error::DuplicatePoint(i));
            }
        }
        Ok(Self { dim, points })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        Self::new(dim, rows.iter().map(|r| DVector::from_row_slice(r)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn position(&self, p: &DVector<f64>, tol: f64) -> Option<usize> {
        self.points.iter().position(|q| coincide(p, q, tol))
    }

    pub fn contains(&self, p: &DVector<f64>, tol: f64) -> bool {
        self.position(p, tol).is_some()
    }

    /// Set equality (order ignored) under an absolute tolerance.
    pub fn same_points(&self, other: &PointSet, tol: f64) -> bool {
        self.len() == other.len() && self.points.iter().all(|p| other.contains(p, tol))
    }

    fn push_distinct(&mut self, p: DVector<f64>, tol: f64) {
        if !self.contains(&p, tol) {
            self.points.push(p);
        }
    }

    /// One point per row, header `x1,...,xn`.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((1..=self.dim).map(|i| format!("x{i}")))?;
        for p in &self.points {
            w.write_record(p.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `(n + 1)(n + 2) / 2`: the number of coefficients of a quadratic in `R^n`.
pub fn quadratic_basis_size(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// Builds `U_k` from a square set `S`: `U_0 = S`; for `k >= 1` column `i` is
/// `s^i - s^k` for `i != k` and column `k` is `-s^k`.
pub fn build_uk(s: &DirectionSet, k: usize) -> Result<DirectionSet> {
    let n = s.dim();
    if s.len() != n {
        return Err(Error::DimensionMismatch {
            what: "columns of S",
            expected: n,
            got: s.len(),
        });
    }
    if k > n {
        return Err(Error::IndexOutOfRange { index: k, max: n });
    }
    if k == 0 {
        return Ok(s.clone());
    }
    let pivot = s.column(k - 1);
    let cols: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            if i == k - 1 {
                -&pivot
            } else {
                s.column(i) - &pivot
            }
        })
        .collect();
    DirectionSet::from_columns(&cols)
}

/// `(beta * Id_n, beta * E_k)`.
pub fn canonical_set(n: usize, k: usize, beta: f64) -> Result<(DirectionSet, DirectionSet)> {
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    if k > n {
        return Err(Error::IndexOutOfRange { index: k, max: n });
    }
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::ZeroScale);
    }
    let s = DirectionSet::new(DMatrix::identity(n, n) * beta)?;
    let t = build_uk(&s, k)?;
    Ok((s, t))
}

/// Coincidence tolerance for the points generated from `(x0, S, T)`.
pub fn dedup_tolerance(
    x0: &DVector<f64>,
    s: &DirectionSet,
    t: &DirectionSet,
    settings: &NumericSettings,
) -> f64 {
    settings.dedup_tol * (1.0 + x0.norm() + s.radius() + t.radius())
}

pub(crate) fn check_dims(x0: &DVector<f64>, s: &DirectionSet, t: &DirectionSet) -> Result<()> {
    if t.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            what: "rows of T",
            expected: s.dim(),
            got: t.dim(),
        });
    }
    if x0.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            what: "x0",
            expected: s.dim(),
            got: x0.len(),
        });
    }
    Ok(())
}

/// All distinct points used by the nested-set Hessian over `(S, T)`:
/// `x0`, `x0 + t^j`, `x0 + s^i` and `x0 + s^i + t^j`, in that order.
pub fn nshc_points(x0: &DVector<f64>, s: &DirectionSet, t: &DirectionSet) -> Result<PointSet> {
    nshc_points_with(x0, s, t, &NumericSettings::DEFAULT)
}

pub fn nshc_points_with(
    x0: &DVector<f64>,
    s: &DirectionSet,
    t: &DirectionSet,
    settings: &NumericSettings,
) -> Result<PointSet> {
    check_dims(x0, s, t)?;
    ensure_finite_vec(x0, "x0")?;
    let tol = dedup_tolerance(x0, s, t, settings);
    let mut set = PointSet {
        dim: x0.len(),
        points: Vec::new(),
    };
    set.push_distinct(x0.clone(), tol);
    for j in 0..t.len() {
        set.push_distinct(x0 + t.matrix().column(j), tol);
    }
    for i in 0..s.len() {
        let base = x0 + s.matrix().column(i);
        set.push_distinct(base.clone(), tol);
        for j in 0..t.len() {
            set.push_distinct(&base + t.matrix().column(j), tol);
        }
    }
    Ok(set)
}

pub fn count_distinct(x0: &DVector<f64>, s: &DirectionSet, t: &DirectionSet) -> Result<usize> {
    Ok(nshc_points(x0, s, t)?.len())
}

/// Centroid and radius used to condition the quadratic basis.
pub(crate) fn centroid_and_radius(points: &PointSet) -> (DVector<f64>, f64) {
    let n = points.dim();
    let mut c = DVector::zeros(n);
    for p in points.points() {
        c += p;
    }
    c /= points.len().max(1) as f64;
    let r = points
        .points()
        .iter()
        .map(|p| (p - &c).norm())
        .fold(0.0, f64::max);
    (c, r)
}

/// Quadratic-basis interpolation matrix of `points`, centered at `center`
/// and divided by `radius`. Row `i` is the basis evaluated at point `i`.
pub fn interpolation_matrix(points: &PointSet, center: &DVector<f64>, radius: f64) -> DMatrix<f64> {
    let p = quadratic_basis_size(points.dim());
    let mut m = DMatrix::zeros(points.len(), p);
    for (i, y) in points.points().iter().enumerate() {
        let z = (y - center) / radius;
        m.row_mut(i).copy_from(&quadratic_basis(&z).transpose());
    }
    m
}

/// Whether `points` (exactly `(n+1)(n+2)/2` of them) determine a unique
/// quadratic interpolant.
pub fn is_poised_quadratic(points: &PointSet) -> Result<bool> {
    is_poised_quadratic_with(points, &NumericSettings::DEFAULT)
}

pub fn is_poised_quadratic_with(points: &PointSet, settings: &NumericSettings) -> Result<bool> {
    let expected = quadratic_basis_size(points.dim());
    if points.len() != expected {
        return Err(Error::WrongCardinality {
            expected,
            got: points.len(),
        });
    }
    let (c, r) = centroid_and_radius(points);
    if r <= 0.0 {
        return Ok(false);
    }
    let m = interpolation_matrix(points, &c, r);
    Ok(linalg::rank(&m, settings.poised_tol) == expected)
}

/// Directions `S`, `T` that reproduce a point set as `S(x0; S, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalWitness {
    pub s: DirectionSet,
    pub t: DirectionSet,
}

/// Largest dimension accepted by the exhaustive minimality search.
pub const MINIMALITY_SEARCH_MAX_DIM: usize = 3;

fn combinations(len: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, len: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..len {
            cur.push(i);
            go(i + 1, len, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, len, r, &mut Vec::with_capacity(r), &mut out);
    out
}

/// Exhaustive test of whether `points` is a minimal poised set for
/// nested-set Hessian computation at `x0`.
///
/// Candidate columns of `S` are the offsets `p - x0`. For a fixed `S`, a
/// candidate `t` must land inside the set from `x0` and from every `x0 + s^i`.
/// Column order is irrelevant, so only combinations are enumerated. Returns
/// the first witness found.
pub fn is_minimal_nshc(points: &PointSet, x0: &DVector<f64>) -> Result<Option<MinimalWitness>> {
    let n = points.dim();
    if n > MINIMALITY_SEARCH_MAX_DIM {
        return Err(Error::SearchBoundExceeded {
            dim: n,
            max: MINIMALITY_SEARCH_MAX_DIM,
        });
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            what: "x0",
            expected: n,
            got: x0.len(),
        });
    }
    let spread = points
        .points()
        .iter()
        .map(|p| (p - x0).norm())
        .fold(0.0, f64::max);
    let tol = NumericSettings::DEFAULT.dedup_tol * (1.0 + x0.norm() + 2.0 * spread);
    if !points.contains(x0, tol) {
        return Err(Error::MissingPointOfInterest);
    }
    if points.len() != quadratic_basis_size(n) {
        return Ok(None);
    }

    let offsets: Vec<DVector<f64>> = points
        .points()
        .iter()
        .filter(|p| !coincide(p, x0, tol))
        .map(|p| p - x0)
        .collect();

    for s_idx in combinations(offsets.len(), n) {
        let s_cols: Vec<DVector<f64>> = s_idx.iter().map(|&i| offsets[i].clone()).collect();
        let s = DirectionSet::from_columns(&s_cols)?;
        if !s.has_full_row_rank() {
            continue;
        }
        let t_cands: Vec<&DVector<f64>> = offsets
            .iter()
            .filter(|t| {
                s_cols
                    .iter()
                    .all(|si| points.contains(&(x0 + si + *t), tol))
            })
            .collect();
        if t_cands.len() < n {
            continue;
        }
        for t_idx in combinations(t_cands.len(), n) {
            let t_cols: Vec<DVector<f64>> = t_idx.iter().map(|&j| t_cands[j].clone()).collect();
            let t = DirectionSet::from_columns(&t_cols)?;
            if !t.has_full_row_rank() {
                continue;
            }
            // Every generated point lies in the set by construction, so
            // equality reduces to a cardinality check.
            if nshc_points(x0, &s, &t)?.len() == points.len() {
                return Ok(Some(MinimalWitness { s, t }));
            }
        }
    }
    Ok(None)
}
