//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by the implicit-shift QL iteration, after the classic
//! EISPACK/Jama `tred2`/`tql2` routines. Deterministic and single-threaded.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// symmetric matrix.
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Solve the full symmetric eigenproblem `A v = lambda v`.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut v = a.clone();
    let mut d = vec![0.0_f64; n];
    let mut e = vec![0.0_f64; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;
    Ok(SymEigen {
        values: DVector::from_vec(d),
        vectors: v,
    })
}

// Householder reduction of a real symmetric matrix to tridiagonal form.
// On exit `v` holds the accumulated orthogonal transformation, `d` the
// diagonal and `e` the subdiagonal.
fn tred2(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let sub = f * e[k] + g * d[k];
                    v[(k, j)] -= sub;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate transformations.
    for i in 0..(n - 1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let sub = g * d[k];
                    v[(k, j)] -= sub;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit-shift QL iteration on the tridiagonal form.
fn tql2(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0_f64;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 50 {
                    return Err(Error::EigenFailed { iterations: iter });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v[(k, i + 1)];
                        v[(k, i + 1)] = s * v[(k, i)] + c * h;
                        v[(k, i)] = c * v[(k, i)] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Sort ascending, carrying eigenvectors along.
    for i in 0..(n.saturating_sub(1)) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d.swap(k, i);
            for r in 0..n {
                let tmp = v[(r, i)];
                v[(r, i)] = v[(r, k)];
                v[(r, k)] = tmp;
            }
        }
    }
    Ok(())
}

/// Constrained generalized symmetric eigenproblem `A x = lambda M x` with
/// diagonal positive mass `M`, restricted to `{x : constraint . x = 0}`.
///
/// The problem is whitened by `M^{-1/2}`, the constraint direction deflated
/// and shifted above the spectrum, and the dense solver applied. Returned
/// eigenvectors are `M`-orthonormal and satisfy the constraint.
pub struct ConstrainedEigen {
    pub values: DVector<f64>,
    /// Columns are eigenvectors in the original coordinates.
    pub vectors: DMatrix<f64>,
}

pub fn constrained_generalized_eigen(
    a: &DMatrix<f64>,
    mass: &[f64],
    constraint: &[f64],
    k: usize,
) -> Result<ConstrainedEigen> {
    let n = a.nrows();
    assert_eq!(mass.len(), n);
    assert_eq!(constraint.len(), n);
    if k > n.saturating_sub(1) {
        return Err(Error::Unsupported(format!(
            "requested {k} constrained eigenpairs of an n = {n} problem"
        )));
    }

    let inv_sqrt: Vec<f64> = mass.iter().map(|&m| 1.0 / m.sqrt()).collect();
    let mut b = a.clone();
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let mut g = DVector::from_iterator(n, constraint.iter().zip(&inv_sqrt).map(|(c, s)| c * s));
    let gn = g.norm();
    if gn == 0.0 {
        return Err(Error::ConstraintViolated { value: 0.0, tol: 0.0 });
    }
    g /= gn;

    let scale = b.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let sigma = 10.0 * scale.max(1.0);
    let bg = &b * &g;
    let gbg = g.dot(&bg);
    // P B P + sigma g g^T = B - g (Bg)^T - (Bg) g^T + (g^T B g + sigma) g g^T.
    let mut pbp = b;
    for i in 0..n {
        for j in 0..n {
            pbp[(i, j)] += -g[i] * bg[j] - bg[i] * g[j] + (gbg + sigma) * g[i] * g[j];
        }
    }
    let pbp = (&pbp + pbp.transpose()) * 0.5;

    let eig = sym_eigen(&pbp)?;
    let mut vectors = DMatrix::zeros(n, k);
    for c in 0..k {
        for i in 0..n {
            vectors[(i, c)] = eig.vectors[(i, c)] * inv_sqrt[i];
        }
    }
    Ok(ConstrainedEigen {
        values: DVector::from_iterator(k, eig.values.iter().take(k).cloned()),
        vectors,
    })
}
