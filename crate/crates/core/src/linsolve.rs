//! Jacobi-preconditioned conjugate gradients for the symmetric positive
//! definite systems that appear in inverse iteration, embedding-constant
//! ascent and the implicit time step.
//!
//! The operators used in this crate are symmetric with respect to a uniformly
//! weighted inner product, so plain Euclidean CG applies unchanged.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Target for `‖b − Ax‖ / ‖b‖`.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            rel_tol: 1e-12,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub rel_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` with `x` holding the initial guess on entry.
///
/// `apply(v, out)` must write `A v` into `out`. `diag`, when given, is the
/// diagonal of `A` and is used as a Jacobi preconditioner.
pub fn conjugate_gradient<F>(
    mut apply: F,
    b: &[f64],
    x: &mut [f64],
    diag: Option<&[f64]>,
    opts: CgOptions,
) -> Result<CgStats>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    if x.len() != n || diag.is_some_and(|d| d.len() != n) {
        return Err(Error::invalid("conjugate gradient dimension mismatch"));
    }
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats {
            iterations: 0,
            rel_residual: 0.0,
        });
    }

    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let precondition = |r: &[f64], z: &mut [f64]| match diag {
        Some(d) => {
            for i in 0..n {
                z[i] = r[i] / d[i];
            }
        }
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / b_norm;

    for it in 0..opts.max_iter {
        if res <= opts.rel_tol {
            return Ok(CgStats {
                iterations: it,
                rel_residual: res,
            });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::ConvergenceFailure {
                what: "conjugate gradient (operator not positive definite)".into(),
                residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / b_norm;
        if !res.is_finite() {
            break;
        }
    }
    if res <= opts.rel_tol {
        return Ok(CgStats {
            iterations: opts.max_iter,
            rel_residual: res,
        });
    }
    Err(Error::ConvergenceFailure {
        what: "conjugate gradient".into(),
        residual: res,
    })
}
