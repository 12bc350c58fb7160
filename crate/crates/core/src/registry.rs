//! Test functions with analytic derivatives and certified Lipschitz
//! constants.
//!
//! Lipschitz constants are valid on the closed ball `B(x0, radius)` and are
//! computed from `R = |x0|_inf + radius`, a bound on every coordinate there.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result};

type ScalarFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type MatrixFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type LipschitzFn = Arc<dyn Fn(&DVector<f64>, f64) -> Lipschitz + Send + Sync>;

/// Lipschitz constants of the gradient and of the Hessian (spectral norm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lipschitz {
    pub grad: f64,
    pub hess: f64,
}

#[derive(Clone)]
pub struct TestFunction {
    name: String,
    dim: usize,
    value: ScalarFn,
    gradient: VectorFn,
    hessian: MatrixFn,
    lipschitz: Option<LipschitzFn>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("certified", &self.lipschitz.is_some())
            .finish()
    }
}

/// Base names accepted by [`lookup`].
pub const NAMES: [&str; 5] = ["quadratic", "cubes", "expsum", "rosenbrock", "oneplussq"];

impl TestFunction {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(x)
    }

    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.hessian)(x)
    }

    /// Certified constants on `B(x0, radius)`; `None` for composites.
    pub fn lipschitz(&self, x0: &DVector<f64>, radius: f64) -> Option<Lipschitz> {
        self.lipschitz.as_ref().map(|l| l(x0, radius))
    }

    /// A cloneable oracle closure.
    pub fn oracle(&self) -> impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static {
        let v = Arc::clone(&self.value);
        move |x| v(x)
    }

    /// Compares the analytic gradient and Hessian with central differences
    /// at `count` seeded points in `[-1, 1]^n`.
    pub fn self_check(&self, count: usize, seed: u64) -> Result<()> {
        let h = 1e-5;
        let tol = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            let x = DVector::from_fn(self.dim, |_, _| rng.random_range(-1.0..1.0));
            let g = self.gradient(&x);
            let hs = self.hessian(&x);
            for i in 0..self.dim {
                let mut e = DVector::zeros(self.dim);
                e[i] = h;
                let fd = (self.value(&(&x + &e)) - self.value(&(&x - &e))) / (2.0 * h);
                if (fd - g[i]).abs() > tol * (1.0 + g[i].abs()) {
                    return Err(self.check_failure(&x, format!("gradient entry {i}: {} vs {fd}", g[i])));
                }
                let col = (self.gradient(&(&x + &e)) - self.gradient(&(&x - &e))) / (2.0 * h);
                for j in 0..self.dim {
                    if (col[j] - hs[(j, i)]).abs() > tol * (1.0 + hs[(j, i)].abs()) {
                        return Err(self.check_failure(
                            &x,
                            format!("Hessian entry ({j},{i}): {} vs {}", hs[(j, i)], col[j]),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_failure(&self, x: &DVector<f64>, what: String) -> Error {
        Error::Config(format!("{} failed its derivative check at {:?}: {what}", self.name, x.as_slice()))
    }

    /// `f g` with the exact product-rule derivatives.
    pub fn product(f: &TestFunction, g: &TestFunction) -> Result<TestFunction> {
        same_dim(f, g)?;
        let (f1, g1, f2, g2, f3, g3) = (f.clone(), g.clone(), f.clone(), g.clone(), f.clone(), g.clone());
        Ok(TestFunction {
            name: format!("{}*{}", f.name, g.name),
            dim: f.dim,
            value: Arc::new(move |x| f1.value(x) * g1.value(x)),
            gradient: Arc::new(move |x| f2.gradient(x) * g2.value(x) + g2.gradient(x) * f2.value(x)),
            hessian: Arc::new(move |x| {
                let (gf, gg) = (f3.gradient(x), g3.gradient(x));
                f3.hessian(x) * g3.value(x)
                    + &gf * gg.transpose()
                    + &gg * gf.transpose()
                    + g3.hessian(x) * f3.value(x)
            }),
            lipschitz: None,
        })
    }

    /// `f / g` with the exact quotient-rule derivatives.
    pub fn quotient(f: &TestFunction, g: &TestFunction) -> Result<TestFunction> {
        same_dim(f, g)?;
        let (f1, g1, f2, g2, f3, g3) = (f.clone(), g.clone(), f.clone(), g.clone(), f.clone(), g.clone());
        Ok(TestFunction {
            name: format!("{}/{}", f.name, g.name),
            dim: f.dim,
            value: Arc::new(move |x| f1.value(x) / g1.value(x)),
            gradient: Arc::new(move |x| {
                let gv = g2.value(x);
                (f2.gradient(x) * gv - g2.gradient(x) * f2.value(x)) / (gv * gv)
            }),
            hessian: Arc::new(move |x| {
                let (fv, gv) = (f3.value(x), g3.value(x));
                let (gf, gg) = (f3.gradient(x), g3.gradient(x));
                (f3.hessian(x) * (gv * gv) - g3.hessian(x) * (fv * gv)
                    + (&gg * gg.transpose()) * (2.0 * fv)
                    - (&gf * gg.transpose() + &gg * gf.transpose()) * gv)
                    / (gv * gv * gv)
            }),
            lipschitz: None,
        })
    }

    /// `f^p` with the exact power-rule derivatives.
    pub fn power(f: &TestFunction, p: u32) -> Result<TestFunction> {
        if p < 2 {
            return Err(Error::InvalidPower(p));
        }
        let (f1, f2, f3) = (f.clone(), f.clone(), f.clone());
        let e = p as i32;
        let pf = p as f64;
        Ok(TestFunction {
            name: format!("{}^{p}", f.name),
            dim: f.dim,
            value: Arc::new(move |x| f1.value(x).powi(e)),
            gradient: Arc::new(move |x| f2.gradient(x) * (pf * f2.value(x).powi(e - 1))),
            hessian: Arc::new(move |x| {
                let fv = f3.value(x);
                let g = f3.gradient(x);
                f3.hessian(x) * (pf * fv.powi(e - 1))
                    + (&g * g.transpose()) * (pf * (pf - 1.0) * fv.powi(e - 2))
            }),
            lipschitz: None,
        })
    }
}

fn same_dim(f: &TestFunction, g: &TestFunction) -> Result<()> {
    if f.dim != g.dim {
        return Err(Error::DimensionMismatch {
            what: "composite dimension",
            expected: f.dim,
            got: g.dim,
        });
    }
    Ok(())
}

fn coord_bound(x0: &DVector<f64>, radius: f64) -> f64 {
    x0.amax() + radius
}

/// `x^T A x / 2 + b^T x + c` with entries drawn uniformly from `[-1, 1]`
/// and `A` symmetric.
pub fn random_quadratic(dim: usize, seed: u64) -> TestFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let v: f64 = rng.random_range(-1.0..1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let b = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    let c: f64 = rng.random_range(-1.0..1.0);
    let l_grad = crate::linalg::spectral_norm(&a);
    let (a1, b1, a2, b2, a3) = (a.clone(), b.clone(), a.clone(), b, a);
    TestFunction {
        name: "quadratic".into(),
        dim,
        value: Arc::new(move |x| 0.5 * x.dot(&(&a1 * x)) + b1.dot(x) + c),
        gradient: Arc::new(move |x| &a2 * x + &b2),
        hessian: Arc::new(move |_| a3.clone()),
        lipschitz: Some(Arc::new(move |_, _| Lipschitz {
            grad: l_grad,
            hess: 0.0,
        })),
    }
}

/// `sum_i x_i^3`.
pub fn sum_of_cubes(dim: usize) -> TestFunction {
    TestFunction {
        name: "cubes".into(),
        dim,
        value: Arc::new(|x| x.iter().map(|v| v * v * v).sum()),
        gradient: Arc::new(|x| x.map(|v| 3.0 * v * v)),
        hessian: Arc::new(|x| DMatrix::from_diagonal(&x.map(|v| 6.0 * v))),
        lipschitz: Some(Arc::new(|x0, r| Lipschitz {
            grad: 6.0 * coord_bound(x0, r),
            hess: 6.0,
        })),
    }
}

/// `exp(sum_i x_i)`.
pub fn exp_of_sum(dim: usize) -> TestFunction {
    let n = dim as f64;
    TestFunction {
        name: "expsum".into(),
        dim,
        value: Arc::new(|x| x.sum().exp()),
        gradient: Arc::new(|x| DVector::from_element(x.len(), x.sum().exp())),
        hessian: Arc::new(|x| DMatrix::from_element(x.len(), x.len(), x.sum().exp())),
        lipschitz: Some(Arc::new(move |x0, r| {
            let peak = (x0.sum() + n.sqrt() * r).exp();
            Lipschitz {
                grad: n * peak,
                hess: n.powf(1.5) * peak,
            }
        })),
    }
}

/// Chained Rosenbrock `sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`, `n >= 2`.
pub fn rosenbrock(dim: usize) -> Result<TestFunction> {
    if dim < 2 {
        return Err(Error::Config("rosenbrock needs dim >= 2".into()));
    }
    Ok(TestFunction {
        name: "rosenbrock".into(),
        dim,
        value: Arc::new(|x| {
            (0..x.len() - 1)
                .map(|i| 100.0 * (x[i + 1] - x[i] * x[i]).powi(2) + (1.0 - x[i]).powi(2))
                .sum()
        }),
        gradient: Arc::new(|x| {
            let mut g = DVector::zeros(x.len());
            for i in 0..x.len() - 1 {
                let w = x[i + 1] - x[i] * x[i];
                g[i] += -400.0 * x[i] * w - 2.0 * (1.0 - x[i]);
                g[i + 1] += 200.0 * w;
            }
            g
        }),
        hessian: Arc::new(|x| {
            let n = x.len();
            let mut h = DMatrix::zeros(n, n);
            for i in 0..n - 1 {
                h[(i, i)] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
                h[(i, i + 1)] -= 400.0 * x[i];
                h[(i + 1, i)] -= 400.0 * x[i];
                h[(i + 1, i + 1)] += 200.0;
            }
            h
        }),
        // Gershgorin row sums of the Hessian and of its directional derivative.
        lipschitz: Some(Arc::new(|x0, r| {
            let big = coord_bound(x0, r);
            Lipschitz {
                grad: 1200.0 * big * big + 1200.0 * big + 202.0,
                hess: 2400.0 * big + 1200.0,
            }
        })),
    })
}

/// `1 + |x|^2`, a denominator bounded away from zero.
pub fn one_plus_square(dim: usize) -> TestFunction {
    TestFunction {
        name: "oneplussq".into(),
        dim,
        value: Arc::new(|x| 1.0 + x.norm_squared()),
        gradient: Arc::new(|x| x * 2.0),
        hessian: Arc::new(|x| DMatrix::identity(x.len(), x.len()) * 2.0),
        lipschitz: Some(Arc::new(|_, _| Lipschitz {
            grad: 2.0,
            hess: 0.0,
        })),
    }
}

/// Looks up a base function by name and runs its derivative self-check.
/// `seed` only affects `quadratic`.
pub fn lookup(name: &str, dim: usize, seed: u64) -> Result<TestFunction> {
    if dim == 0 {
        return Err(Error::Config("dimension must be positive".into()));
    }
    let f = match name {
        "quadratic" => random_quadratic(dim, seed),
        "cubes" => sum_of_cubes(dim),
        "expsum" => exp_of_sum(dim),
        "rosenbrock" => rosenbrock(dim)?,
        "oneplussq" => one_plus_square(dim),
        other => {
            return Err(Error::Config(format!(
                "unknown function {other:?}; expected one of {}",
                NAMES.join(", ")
            )))
        }
    };
    f.self_check(4, 0x5eed)?;
    Ok(f)
}
