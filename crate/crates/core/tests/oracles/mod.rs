//! Reference computations that share no code with the library.
#![allow(dead_code)]

use nshess::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Determinant by cofactor expansion along the first row.
pub fn laplace_det(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    match n {
        0 => 1.0,
        1 => a[(0, 0)],
        _ => (0..n)
            .map(|j| {
                let minor = a.clone().remove_row(0).remove_column(j);
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[(0, j)] * laplace_det(&minor)
            })
            .sum(),
    }
}

/// Random square matrix whose Hadamard ratio `|det| / prod(col norms)`
/// exceeds `0.6^n`, which keeps it comfortably invertible.
pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let a = random_matrix(rng, n, n);
        let hadamard: f64 = a.column_iter().map(|c| c.norm()).product();
        if laplace_det(&a).abs() > 0.6f64.powi(n as i32) * hadamard {
            return a;
        }
    }
}

/// Largest singular value by power iteration on `A^T A` from several
/// starting vectors.
pub fn power_spectral_norm(a: &DMatrix<f64>, seed: u64) -> f64 {
    let ata = a.transpose() * a;
    let mut r = rng(seed);
    let mut best: f64 = 0.0;
    for _ in 0..4 {
        let mut v = random_vector(&mut r, a.ncols());
        if v.norm() == 0.0 {
            continue;
        }
        v /= v.norm();
        let mut lambda = 0.0;
        for _ in 0..2000 {
            let w = &ata * &v;
            let nw = w.norm();
            if nw == 0.0 {
                break;
            }
            let next = nw;
            v = w / nw;
            if (next - lambda).abs() <= 1e-15 * next {
                lambda = next;
                break;
            }
            lambda = next;
        }
        best = best.max(lambda.sqrt());
    }
    best
}

/// Gaussian elimination with partial pivoting, `a x = b`.
pub fn gauss_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut rhs = b.clone();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[(i, c)].abs().total_cmp(&m[(j, c)].abs())).unwrap();
        m.swap_rows(c, p);
        rhs.swap_rows(c, p);
        for r in (c + 1)..n {
            let f = m[(r, c)] / m[(c, c)];
            for k in c..n {
                m[(r, k)] -= f * m[(c, k)];
            }
            rhs[r] -= f * rhs[c];
        }
    }
    let mut x = DVector::zeros(n);
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|k| m[(r, k)] * x[k]).sum();
        x[r] = (rhs[r] - s) / m[(r, r)];
    }
    x
}

/// `E_k` written out entry by entry: column `i != k` is `e_i - e_k`,
/// column `k` is `-e_k` (1-based `k`).
pub fn e_matrix(n: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |r, c| {
        let kk = k - 1;
        if c == kk {
            if r == kk {
                -1.0
            } else {
                0.0
            }
        } else if r == c {
            1.0
        } else if r == kk {
            -1.0
        } else {
            0.0
        }
    })
}

/// Slope of the least-squares line through `(x, y)`, written as the
/// normal-equation solution of the 2x2 system.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Direct evaluation of the nested-set Hessian for `S = T = h I`: entry
/// `(i, j)` is `[f(x + h e_i + h e_j) - f(x + h e_i) - f(x + h e_j) + f(x)] / h^2`.
pub fn forward_difference_hessian(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = x.len();
    let e = |i: usize| {
        let mut v = DVector::zeros(n);
        v[i] = h;
        v
    };
    DMatrix::from_fn(n, n, |i, j| {
        (f(&(x + e(i) + e(j))) - f(&(x + e(i))) - f(&(x + e(j))) + f(x)) / (h * h)
    })
}

/// Smooth non-polynomial test function with seeded coefficients.
pub fn random_smooth(seed: u64, n: usize) -> impl Fn(&DVector<f64>) -> f64 + Clone {
    let mut r = rng(seed);
    let a = random_vector(&mut r, n);
    let b = random_vector(&mut r, n);
    let c = random_matrix(&mut r, n, n);
    move |x: &DVector<f64>| (a.dot(x)).sin() + 0.5 * (b.dot(x) * 0.5).exp() + (x.transpose() * &c * x)[0] * 0.3
}
