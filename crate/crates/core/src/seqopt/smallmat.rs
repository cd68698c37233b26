//! Fixed-size symmetric kernels for the 2×2, 3×3 and 4×4 per-gate pencils.

use crate::error::{Error, Result};

pub type Mat<const N: usize> = [[f64; N]; N];

pub fn identity<const N: usize>() -> Mat<N> {
    let mut m = [[0.0; N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn quad_form<const N: usize>(m: &Mat<N>, v: &[f64; N]) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        for j in 0..N {
            acc += v[i] * m[i][j] * v[j];
        }
    }
    acc
}

pub fn max_row_sum<const N: usize>(m: &Mat<N>) -> f64 {
    m.iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn symmetrize<const N: usize>(m: &Mat<N>) -> Mat<N> {
    let mut s = *m;
    for i in 0..N {
        for j in i + 1..N {
            let v = 0.5 * (m[i][j] + m[j][i]);
            s[i][j] = v;
            s[j][i] = v;
        }
    }
    s
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<const N: usize>(m: &Mat<N>) -> Result<Mat<N>> {
    let mut l = [[0.0; N]; N];
    for j in 0..N {
        let mut d = m[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Numerical(format!(
                "Cholesky pivot {j} is {d:e}; matrix is not positive definite"
            )));
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in j + 1..N {
            let mut s = m[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
fn forward<const N: usize>(l: &Mat<N>, b: &[f64; N]) -> [f64; N] {
    let mut x = [0.0; N];
    for i in 0..N {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
fn backward_t<const N: usize>(l: &Mat<N>, b: &[f64; N]) -> [f64; N] {
    let mut x = [0.0; N];
    for i in (0..N).rev() {
        let mut s = b[i];
        for k in i + 1..N {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching unit eigenvectors
/// (`vectors[k]` belongs to `values[k]`).
pub fn sym_eigen<const N: usize>(m: &Mat<N>) -> Result<([f64; N], [[f64; N]; N])> {
    let mut a = symmetrize(m);
    if a.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("eigensolve of non-finite matrix".into()));
    }
    let mut v = identity::<N>();
    let scale = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..64 {
        let off: f64 = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * scale || off == 0.0 {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..N).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let mut values = [0.0; N];
    let mut vectors = [[0.0; N]; N];
    for (k, &i) in order.iter().enumerate() {
        values[k] = a[i][i];
        for r in 0..N {
            vectors[k][r] = v[r][i];
        }
    }
    Ok((values, vectors))
}

/// Generalized eigenpairs of the pencil `(A, B)` with `B` positive definite,
/// via `B = LLᵀ` and the standard problem `L⁻¹ A L⁻ᵀ`.
///
/// Eigenvalues ascend; each eigenvector is scaled to unit Euclidean norm.
pub fn sym_gen_eigen<const N: usize>(a: &Mat<N>, b: &Mat<N>) -> Result<([f64; N], [[f64; N]; N])> {
    let l = cholesky(&symmetrize(b))?;
    let a = symmetrize(a);
    // X = L⁻¹ A, column by column (A symmetric, so columns are rows)
    let mut x = [[0.0; N]; N];
    for j in 0..N {
        let col = forward(&l, &a[j]);
        for i in 0..N {
            x[i][j] = col[i];
        }
    }
    // C = L⁻¹ Xᵀ
    let mut c = [[0.0; N]; N];
    for j in 0..N {
        let col = forward(&l, &x[j]);
        for i in 0..N {
            c[i][j] = col[i];
        }
    }
    let (values, ys) = sym_eigen(&symmetrize(&c))?;
    let mut vectors = [[0.0; N]; N];
    for k in 0..N {
        let p = backward_t(&l, &ys[k]);
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        for i in 0..N {
            vectors[k][i] = p[i] / norm;
        }
    }
    Ok((values, vectors))
}
