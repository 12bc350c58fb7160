//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod oracles;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nshess::approx::nested_set_hessian;
use nshess::bounds::error_bound_canonical;
use nshess::calculus::{power_hessian, product_hessian, quotient_hessian, CalcMode};
use nshess::eval::EvaluationCache;
use nshess::linalg::{frobenius_norm, pseudoinverse};
use nshess::quadmodel::{interpolate_general, interpolate_minimal};
use nshess::registry::{self, TestFunction};
use nshess::sets::{
    build_uk, canonical_set, is_minimal_nshc, is_poised_quadratic, nshc_points, quadratic_basis_size,
    DirectionSet, PointSet,
};
use nshess::study::{run_study, Estimator, FittedOrder, StudyConfig};
use nshess::verify::verify_examples;
use nshess::{DMatrix, DVector};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || {
        format!("took {:.2}s, limit {limit}s", elapsed.as_secs_f64())
    })
}

fn quadratic_exactness() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for trial in 0..100u64 {
        let n = 2 + (trial % 5) as usize;
        let q = registry::random_quadratic(n, trial);
        let x0 = oracles::random_vector(&mut oracles::rng(1000 + trial), n);
        let h = q.hessian(&x0);
        let mut cache = EvaluationCache::new(q.oracle());
        for k in 0..=n {
            let (s, t) = canonical_set(n, k, 0.1).map_err(|e| e.to_string())?;
            let got = nested_set_hessian(&x0, &s, &t, &mut cache, false).map_err(|e| e.to_string())?;
            let err = frobenius_norm(&(&got.hessian - &h));
            let tol = 1e-8 * (1.0 + frobenius_norm(&h));
            worst = worst.max(err / tol);
            ensure(err <= tol, || format!("trial {trial}, n={n}, k={k}: error {err:e} > {tol:e}"))?;
            runs += 1;
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("{runs} Hessians, worst error/tolerance {worst:.2e}"))
}

fn evaluation_economy() -> Outcome {
    for n in 1..=8 {
        let x0 = DVector::from_element(n, 0.1);
        for k in 0..=n {
            let (s, t) = canonical_set(n, k, 0.5).map_err(|e| e.to_string())?;
            let mut cache = EvaluationCache::new(|x: &DVector<f64>| x.map(f64::sin).sum());
            let h = nested_set_hessian(&x0, &s, &t, &mut cache, false).map_err(|e| e.to_string())?;
            interpolate_minimal(&x0, &s, k, &mut cache).map_err(|e| e.to_string())?;
            let want = (n + 1) * (n + 2) / 2;
            ensure(h.eval_count == want && cache.distinct_count() == want, || {
                format!("n={n}, k={k}: {} / {} evaluations, expected {want}", h.eval_count, cache.distinct_count())
            })?;
        }
    }
    let (s, t) = canonical_set(2, 2, 1.0).map_err(|e| e.to_string())?;
    let mut cache = EvaluationCache::new(|x: &DVector<f64>| x[0] * x[1]);
    nested_set_hessian(&DVector::zeros(2), &s, &t, &mut cache, false).map_err(|e| e.to_string())?;
    let evaluated = PointSet::new(2, cache.entries().map(|(p, _)| p.clone()).collect()).map_err(|e| e.to_string())?;
    let listed = PointSet::from_rows(&[
        &[0.0, -1.0],
        &[0.0, 0.0],
        &[0.0, 1.0],
        &[1.0, -1.0],
        &[1.0, 0.0],
        &[2.0, -1.0],
    ])
    .map_err(|e| e.to_string())?;
    ensure(evaluated.same_points(&listed, 0.0), || "plane example points differ".into())?;
    Ok("n = 1..8, all k: exactly (n+1)(n+2)/2; plane example matches its six points".into())
}

fn order_one_accuracy() -> Outcome {
    let start = Instant::now();
    let betas: Vec<f64> = (0..7).map(|i| 10f64.powf(-1.0 - 0.5 * i as f64)).collect();
    let mut summary = Vec::new();
    for name in ["cubes", "expsum"] {
        for k in 0..=3 {
            let config = StudyConfig {
                function: name.into(),
                dim: 3,
                k,
                betas: Some(betas.clone()),
                ..StudyConfig::default()
            };
            let report = run_study(&config).map_err(|e| e.to_string())?;
            let order = match report.fitted {
                FittedOrder::Slope { order, .. } => order,
                other => return Err(format!("{name} k={k}: fit {other:?}")),
            };
            ensure((0.9..=2.1).contains(&order), || format!("{name} k={k}: order {order:.3}"))?;
            for r in &report.rows {
                ensure(r.error_spec <= r.bound + r.noise_floor, || {
                    format!("{name} k={k} beta={}: error {:e} > bound {:e}", r.beta, r.error_spec, r.bound)
                })?;
            }
            // independent slope from the rows above the noise floor
            let kept: Vec<_> = report.rows.iter().filter(|r| r.error_spec > r.noise_floor).collect();
            let xs: Vec<f64> = kept.iter().map(|r| r.beta.ln()).collect();
            let ys: Vec<f64> = kept.iter().map(|r| r.error_spec.ln()).collect();
            let oracle = oracles::ols_slope(&xs, &ys);
            ensure((oracle - order).abs() < 1e-9, || format!("{name} k={k}: fit {order} vs oracle {oracle}"))?;
            summary.push(format!("{name}/k{k}:{order:.2}"));
        }
    }
    within(start.elapsed(), 5.0)?;
    Ok(format!("slopes {}", summary.join(" ")))
}

fn canonical_constants() -> Outcome {
    let mut r = oracles::rng(4);
    for _ in 0..200 {
        let n = r.random_range(1..=8usize);
        let k = r.random_range(0..=n);
        let beta: f64 = r.random_range(1e-4..1.0);
        let l: f64 = r.random_range(0.0..50.0);
        let got = error_bound_canonical(n, k, beta, l).map_err(|e| e.to_string())?;
        let nf = n as f64;
        let want = if k == 0 {
            5.0 / 3.0 * nf * nf.sqrt() * l * beta
        } else {
            11.0 / 2.0 * nf * nf * l * beta
        };
        ensure((got - want).abs() <= 1e-12 * want.abs().max(f64::MIN_POSITIVE), || {
            format!("n={n} k={k}: {got} vs {want}")
        })?;
    }
    let mut checked = 0;
    for n in 2..=4 {
        for name in ["cubes", "expsum", "rosenbrock"] {
            let f = registry::lookup(name, n, 0).map_err(|e| e.to_string())?;
            let x0 = DVector::from_element(n, 0.5);
            let h = f.hessian(&x0);
            for k in 0..=n {
                for beta in [1e-1, 1e-2, 1e-3] {
                    let (s, t) = canonical_set(n, k, beta).map_err(|e| e.to_string())?;
                    let l = f.lipschitz(&x0, s.radius() + t.radius()).expect("base functions are certified");
                    let mut cache = EvaluationCache::new(f.oracle());
                    let got = nested_set_hessian(&x0, &s, &t, &mut cache, false).map_err(|e| e.to_string())?;
                    let err = nshess::linalg::spectral_norm(&(&got.hessian - &h));
                    let bound = error_bound_canonical(n, k, beta, l.hess).map_err(|e| e.to_string())?;
                    ensure(err <= bound, || format!("{name} n={n} k={k} beta={beta}: {err:e} > {bound:e}"))?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("formula matches on 200 draws; {checked} measured errors within the constants"))
}

fn closed_form_equivalence() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0);
    let mut compared = 0;
    for trial in 0..50u64 {
        let n = 1 + (trial % 5) as usize;
        let mut r = oracles::rng(500 + trial);
        let s = DirectionSet::new(oracles::random_invertible(&mut r, n) * 0.5).map_err(|e| e.to_string())?;
        let x0 = oracles::random_vector(&mut r, n);
        let f = oracles::random_smooth(trial, n);
        for k in 0..=n {
            let u = build_uk(&s, k).map_err(|e| e.to_string())?;
            let mut cache = EvaluationCache::new(f.clone());
            let closed = interpolate_minimal(&x0, &s, k, &mut cache).map_err(|e| e.to_string())?;
            let pts = nshc_points(&x0, &s, &u).map_err(|e| e.to_string())?;
            let vals: Vec<f64> = pts.points().iter().map(|p| cache.evaluate(p).unwrap()).collect();
            let general = interpolate_general(&pts, &vals).map_err(|e| e.to_string())?;
            let a = closed.flat();
            let b = general.flat();
            let pairs = std::iter::once((a.alpha0, b.alpha0))
                .chain(a.alpha.iter().copied().zip(b.alpha.iter().copied()))
                .chain(a.hessian_upper.iter().copied().zip(b.hessian_upper.iter().copied()));
            for (x, y) in pairs {
                ensure(close(x, y), || format!("trial {trial}, n={n}, k={k}: {x} vs {y}"))?;
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} coefficients agree over 50 trials"))
}

fn poisedness_and_minimality() -> Outcome {
    let mut poised = 0;
    for n in 1..=5 {
        let mut r = oracles::rng(60 + n as u64);
        for _ in 0..10 {
            let s = DirectionSet::new(oracles::random_invertible(&mut r, n)).map_err(|e| e.to_string())?;
            let x0 = oracles::random_vector(&mut r, n);
            for k in 0..=n {
                let u = build_uk(&s, k).map_err(|e| e.to_string())?;
                let pts = nshc_points(&x0, &s, &u).map_err(|e| e.to_string())?;
                ensure(pts.len() == quadratic_basis_size(n), || format!("n={n} k={k}: {} points", pts.len()))?;
                ensure(is_poised_quadratic(&pts).map_err(|e| e.to_string())?, || {
                    format!("n={n} k={k}: minimal set not poised")
                })?;
                poised += 1;
            }
        }
    }
    let report = verify_examples();
    for c in &report.checks {
        ensure(c.passed, || format!("{}: {}", c.name, c.detail))?;
    }
    let mut r = oracles::rng(77);
    let x0 = DVector::from_vec(vec![0.2, -0.1]);
    for i in 0..20 {
        let nmat = oracles::random_invertible(&mut r, 2);
        let k = i % 3;
        let (s, t) = canonical_set(2, k, 1.0).map_err(|e| e.to_string())?;
        let sn = s.transformed(&nmat).map_err(|e| e.to_string())?;
        let tn = t.transformed(&nmat).map_err(|e| e.to_string())?;
        let pts = nshc_points(&x0, &sn, &tn).map_err(|e| e.to_string())?;
        ensure(pts.len() == 6, || format!("transform {i}: {} points", pts.len()))?;
        ensure(is_minimal_nshc(&pts, &x0).map_err(|e| e.to_string())?.is_some(), || {
            format!("transform {i}: search found no witness")
        })?;
    }
    Ok(format!("{poised} minimal sets poised; examples reproduced; 20 transforms stay minimal"))
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    frobenius_norm(&(a - b)) / (1.0 + frobenius_norm(b))
}

fn shifted_quadratic(n: usize, seed: u64, x0: &DVector<f64>, min_abs: f64) -> TestFunction {
    let mut s = seed;
    loop {
        let q = registry::random_quadratic(n, s);
        if q.value(x0).abs() >= min_abs {
            return q;
        }
        s += 1000;
    }
}

fn calculus_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    for trial in 0..30u64 {
        let n = 1 + (trial % 4) as usize;
        let x0 = oracles::random_vector(&mut oracles::rng(900 + trial), n);
        let f = registry::random_quadratic(n, 2 * trial);
        let g = shifted_quadratic(n, 2 * trial + 1, &x0, 0.5);
        let k = (trial as usize) % (n + 1);
        let (s, t) = canonical_set(n, k, 0.1).map_err(|e| e.to_string())?;
        let cases = [
            ("product", TestFunction::product(&f, &g).map_err(|e| e.to_string())?),
            ("quotient", TestFunction::quotient(&f, &g).map_err(|e| e.to_string())?),
            ("power", TestFunction::power(&f, 3).map_err(|e| e.to_string())?),
        ];
        for (name, composite) in cases {
            let mut fc = EvaluationCache::new(f.oracle());
            let mut gc = EvaluationCache::new(g.oracle());
            let got = match name {
                "product" => product_hessian(&mut fc, &mut gc, &x0, &s, &t, CalcMode::Quadratic, false),
                "quotient" => quotient_hessian(&mut fc, &mut gc, &x0, &s, &t, CalcMode::Quadratic, false),
                _ => power_hessian(&mut fc, &x0, &s, &t, 3, CalcMode::Quadratic, false),
            }
            .map_err(|e| e.to_string())?;
            let e = rel_err(&got.result.hessian, &composite.hessian(&x0));
            worst = worst.max(e);
            ensure(e <= 1e-7, || format!("qc {name} trial {trial}: relative error {e:e}"))?;
        }
        let mut r = oracles::rng(trial);
        let (a, b) = (oracles::random_vector(&mut r, n), oracles::random_vector(&mut r, n));
        let (a1, b1) = (a.clone(), b.clone());
        let mut fc = EvaluationCache::new(move |x: &DVector<f64>| a1.dot(x) + 0.3);
        let mut gc = EvaluationCache::new(move |x: &DVector<f64>| b1.dot(x) - 0.7);
        let got = product_hessian(&mut fc, &mut gc, &x0, &s, &t, CalcMode::Simplex, false).map_err(|e| e.to_string())?;
        let exact = &a * b.transpose() + &b * a.transpose();
        let e = frobenius_norm(&(&got.result.hessian - &exact));
        ensure(e <= 1e-8, || format!("sc affine product trial {trial}: error {e:e}"))?;
    }

    let composites: [(&str, &str, u32); 5] = [
        ("product", "cubes,expsum", 2),
        ("product", "rosenbrock,oneplussq", 2),
        ("quotient", "expsum,oneplussq", 2),
        ("quotient", "cubes,oneplussq", 2),
        ("power", "expsum", 3),
    ];
    let mut rows = 0;
    for (kind, function, power) in composites {
        for mode in ["sc", "qc"] {
            for k in [0, 2] {
                let estimator: Estimator = format!("{kind}-{mode}").parse().map_err(|e: nshess::Error| e.to_string())?;
                let config = StudyConfig {
                    function: function.into(),
                    dim: 2,
                    k,
                    estimator,
                    power,
                    beta_steps: 8,
                    ..StudyConfig::default()
                };
                let report = run_study(&config).map_err(|e| e.to_string())?;
                for r in &report.rows {
                    ensure(r.error_spec <= r.bound + r.noise_floor, || {
                        format!("{kind}-{mode} {function} k={k} beta={}: error {:e} > bound {:e}", r.beta, r.error_spec, r.bound)
                    })?;
                    rows += 1;
                }
            }
        }
    }
    Ok(format!("qc exact (worst relative {worst:.1e}); sc affine product exact; {rows} composite rows within bounds"))
}

fn penrose() -> Outcome {
    let mut r = oracles::rng(8);
    for i in 0..1000 {
        let rows = r.random_range(1..=8usize);
        let cols = r.random_range(1..=8usize);
        let a = if i % 3 == 0 {
            let inner = r.random_range(1..=rows.min(cols));
            oracles::random_matrix(&mut r, rows, inner) * oracles::random_matrix(&mut r, inner, cols)
        } else {
            oracles::random_matrix(&mut r, rows, cols)
        };
        let p = pseudoinverse(&a).map_err(|e| e.to_string())?;
        let (na, np) = (frobenius_norm(&a), frobenius_norm(&p));
        let ap = &a * &p;
        let pa = &p * &a;
        let residuals = [
            frobenius_norm(&(&ap * &a - &a)) / na,
            frobenius_norm(&(&p * &ap - &p)) / np,
            frobenius_norm(&(&ap - ap.transpose())) / frobenius_norm(&ap),
            frobenius_norm(&(&pa - pa.transpose())) / frobenius_norm(&pa),
        ];
        for (eq, res) in residuals.iter().enumerate() {
            ensure(*res <= 1e-10, || {
                let sv = nshess::linalg::singular_values(&a);
                format!("matrix {i} ({rows}x{cols}): equation {} residual {res:e}, singular values {sv:?}", eq + 1)
            })?;
        }
    }
    for n in 2..=6 {
        for k in 1..=n {
            let (_, t) = canonical_set(n, k, 1.0).map_err(|e| e.to_string())?;
            ensure(t.matrix() == &oracles::e_matrix(n, k), || format!("E_{k} in R^{n} differs from oracle"))?;
            let e_hat = t.normalized().map_err(|e| e.to_string())?;
            let inv = pseudoinverse(&e_hat).map_err(|e| e.to_string())?;
            let diff = frobenius_norm(&(&inv - &e_hat * 2.0));
            ensure(diff <= 1e-12, || format!("n={n} k={k}: |E_hat^-1 - 2 E_hat| = {diff:e}"))?;
        }
    }
    Ok("1000 matrices satisfy all four equations; E_hat inverse = 2 E_hat for n = 2..6".into())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("quadratic exactness", quadratic_exactness),
        ("evaluation economy", evaluation_economy),
        ("order-1 accuracy", order_one_accuracy),
        ("canonical bound constants", canonical_constants),
        ("closed-form vs general solver", closed_form_equivalence),
        ("poisedness and minimality", poisedness_and_minimality),
        ("calculus exactness and bounds", calculus_exactness),
        ("pseudoinverse properties", penrose),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
