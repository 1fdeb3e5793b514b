//! Dense symmetric/Hermitian eigensolvers.
//!
//! Householder tridiagonalization followed by the implicitly shifted QL
//! iteration (the classic tred2/tql2 pair), which delivers machine-precision
//! residuals where a naive shifted-QR stops near sqrt(eps). Hermitian
//! matrices go through the real embedding [[X, -Y], [Y, X]].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigendecomposition of a real symmetric matrix; eigenvalues ascending,
/// eigenvectors as matching columns of an orthogonal matrix.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::invalid("eigensolver requires a square matrix"));
    }
    if n == 0 {
        return Err(Error::invalid("eigensolver requires a non-empty matrix"));
    }
    let mut v = a.clone();
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];
    tred2(&mut v, &mut d, &mut e);
    tql2(&mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(i));
    }
    Ok((values, vectors))
}

/// Householder reduction to symmetric tridiagonal form, accumulating the
/// transformation in `v`; `d` receives the diagonal and `e` the
/// subdiagonal (in e[1..]).
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
            for item in e.iter_mut().take(i) {
                *item = 0.0;
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
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

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
                    v[(k, j)] -= g * d[k];
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

/// Implicitly shifted QL iteration on the tridiagonal (d, e), rotating `v`
/// along. Follows the standard tql2 routine.
fn tql2(v: &mut DMatrix<f64>, d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
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
        if m == n {
            m = n - 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 50 {
                    return Err(Error::Numerical(
                        "tridiagonal QL iteration failed to converge".into(),
                    ));
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
    Ok(())
}

/// Eigendecomposition of a complex Hermitian matrix through the real
/// embedding; eigenvalues ascending with orthonormal complex eigenvectors.
pub fn hermitian_eigen(a: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::invalid("eigensolver requires a square matrix"));
    }
    // B = [[X, -Y], [Y, X]] is symmetric iff A = X + iY is Hermitian;
    // every eigenvalue of A appears twice in B
    let mut b = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            b[(i, j)] = z.re;
            b[(i, j + n)] = -z.im;
            b[(i + n, j)] = z.im;
            b[(i + n, j + n)] = z.re;
        }
    }
    let (values, vectors) = symmetric_eigen(&b)?;

    // walk the doubled spectrum and keep one complex vector per pair,
    // Gram-Schmidt within (near-)degenerate clusters
    let mut out_values: Vec<f64> = Vec::with_capacity(n);
    let mut out_vectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    for (k, &lambda) in values.iter().enumerate() {
        if out_values.len() == n {
            break;
        }
        let mut z: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(vectors[(i, k)], vectors[(i + n, k)]))
            .collect();
        for (&prev_lambda, prev) in out_values.iter().zip(&out_vectors) {
            if (lambda - prev_lambda).abs() > 1e-9 * scale {
                continue;
            }
            let overlap: Complex64 = prev.iter().zip(&z).map(|(p, q)| p.conj() * q).sum();
            for (zi, pi) in z.iter_mut().zip(prev) {
                *zi -= overlap * pi;
            }
        }
        let norm: f64 = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            // duplicate copy of an already-extracted eigenvector
            continue;
        }
        for zi in &mut z {
            *zi /= norm;
        }
        out_values.push(lambda);
        out_vectors.push(z);
    }
    if out_values.len() != n {
        return Err(Error::Numerical(
            "hermitian embedding failed to yield a full eigenbasis".into(),
        ));
    }
    let mut m = DMatrix::zeros(n, n);
    for (col, v) in out_vectors.iter().enumerate() {
        for (row, &x) in v.iter().enumerate() {
            m[(row, col)] = x;
        }
    }
    Ok((out_values, m))
}
