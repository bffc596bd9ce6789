//! Thin helpers over `faer` dense matrices.
//!
//! Everything runs sequentially (`Par::Seq`); ensemble-level parallelism
//! happens one level up so artifact bytes stay reproducible.

use faer::linalg::matmul::matmul;
use faer::prelude::*;
use num_complex::Complex64 as C64;

pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// dst = a · b
pub fn mul_into(dst: &mut Mat<C64>, a: MatRef<'_, C64>, b: MatRef<'_, C64>) {
    matmul(dst.as_mut(), faer::Accum::Replace, a, b, ONE, Par::Seq);
}

pub fn mul(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    mul_into(&mut out, a, b);
    out
}

/// a · b†
pub fn mul_right_adjoint(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let mut out = Mat::zeros(a.nrows(), b.nrows());
    matmul(out.as_mut(), faer::Accum::Replace, a, b.adjoint(), ONE, Par::Seq);
    out
}

/// a† · b
pub fn mul_left_adjoint(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let mut out = Mat::zeros(a.ncols(), b.ncols());
    matmul(out.as_mut(), faer::Accum::Replace, a.adjoint(), b, ONE, Par::Seq);
    out
}

pub fn col_slice(m: &Mat<C64>, j: usize) -> &[C64] {
    m.col(j).try_as_col_major().unwrap().as_slice()
}

pub fn col_slice_mut(m: &mut Mat<C64>, j: usize) -> &mut [C64] {
    m.col_mut(j).try_as_col_major_mut().unwrap().as_slice_mut()
}

/// Largest |entry| of a − b†, i.e. the hermiticity residue of `a` when b = a.
pub fn hermitian_residue(a: &Mat<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            let r = (a[(i, j)] - a[(j, i)].conj()).norm();
            if r > worst {
                worst = r;
            }
        }
    }
    worst
}

/// (a + a†)/2
pub fn hermitize(a: &Mat<C64>) -> Mat<C64> {
    let n = a.nrows();
    Mat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// dst += c · src
pub fn axpy(dst: &mut Mat<C64>, c: C64, src: &Mat<C64>) {
    for j in 0..src.ncols() {
        let s = col_slice(src, j).as_ptr();
        let d = col_slice_mut(dst, j);
        for i in 0..d.len() {
            // columns are disjoint; src and dst are distinct matrices
            d[i] += c * unsafe { *s.add(i) };
        }
    }
}

pub fn scale(m: &Mat<C64>, c: C64) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * c)
}

pub fn sub(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)])
}

pub fn add(a: &Mat<C64>, b: &Mat<C64>) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + b[(i, j)])
}

pub fn trace(m: &Mat<C64>) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

pub fn frobenius(m: &Mat<C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for z in col_slice(m, j) {
            s += z.norm_sqr();
        }
    }
    s.sqrt()
}

pub fn max_abs(m: &Mat<C64>) -> f64 {
    let mut s = 0.0f64;
    for j in 0..m.ncols() {
        for z in col_slice(m, j) {
            s = s.max(z.norm());
        }
    }
    s
}

/// Eigenvalues of a hermitian matrix, ascending. The matrix is normalized to
/// unit max-entry first: the QR iteration can fail to converge on matrices
/// with extreme absolute scale.
pub fn eigvalsh(h: &Mat<C64>) -> Vec<f64> {
    let n = h.nrows();
    let scale = max_abs(h);
    if scale == 0.0 || !scale.is_finite() {
        assert!(scale == 0.0, "eigvalsh on a non-finite matrix");
        return vec![0.0; n];
    }
    let scaled = Mat::from_fn(n, n, |i, j| h[(i, j)] / scale);
    let mut w = match scaled.self_adjoint_eigenvalues(faer::Side::Lower) {
        Ok(w) => w,
        // |λ| = σ for hermitian matrices; sign recovery via Rayleigh
        // quotients is not needed by any caller that can reach this path
        Err(_) => {
            let svd = scaled.svd().expect("svd fallback failed");
            let sv = svd.S().column_vector();
            let u = svd.U();
            (0..n)
                .map(|k| {
                    // sign of λ_k from the Rayleigh quotient of the singular vector
                    let mut q = C64::new(0.0, 0.0);
                    for i in 0..n {
                        let mut av = C64::new(0.0, 0.0);
                        for j in 0..n {
                            av += scaled[(i, j)] * u[(j, k)];
                        }
                        q += u[(i, k)].conj() * av;
                    }
                    sv[k].re.copysign(q.re)
                })
                .collect()
        }
    };
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    w.into_iter().map(|x| x * scale).collect()
}

/// Full hermitian eigendecomposition: (eigenvalues ascending, eigenvectors as columns).
pub fn eigh(h: &Mat<C64>) -> (Vec<f64>, Mat<C64>) {
    let n = h.nrows();
    let scale = max_abs(h);
    if scale == 0.0 {
        return (vec![0.0; n], Mat::identity(n, n));
    }
    let scaled = Mat::from_fn(n, n, |i, j| h[(i, j)] / scale);
    let evd = scaled.self_adjoint_eigen(faer::Side::Lower).expect("eigh failed");
    let mut pairs: Vec<(f64, usize)> =
        (0..n).map(|i| (evd.S().column_vector()[i].re, i)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let vals: Vec<f64> = pairs.iter().map(|p| p.0 * scale).collect();
    let u = evd.U();
    let vecs = Mat::from_fn(n, n, |i, j| u[(i, pairs[j].1)]);
    (vals, vecs)
}

/// Singular values, descending, with the same scale normalization as
/// `eigvalsh`.
pub fn singular_values(m: &Mat<C64>) -> Vec<f64> {
    let scale = max_abs(m);
    if scale == 0.0 {
        return vec![0.0; m.nrows().min(m.ncols())];
    }
    let scaled = Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / scale);
    let mut s = scaled.singular_values().expect("svd failed");
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s.into_iter().map(|x| x * scale).collect()
}

/// Rebuild V · diag(w) · V†.
pub fn from_eigh(vals: &[f64], vecs: &Mat<C64>) -> Mat<C64> {
    let n = vecs.nrows();
    let mut scaled = Mat::zeros(n, n);
    for j in 0..n {
        let src = col_slice(vecs, j).as_ptr();
        let dst = col_slice_mut(&mut scaled, j);
        for i in 0..n {
            dst[i] = unsafe { *src.add(i) } * vals[j];
        }
    }
    let mut out = Mat::zeros(n, n);
    matmul(out.as_mut(), faer::Accum::Replace, scaled.as_ref(), vecs.adjoint(), ONE, Par::Seq);
    out
}

/// Trapezoidal weights on a uniform grid of `len` samples with spacing `h`.
pub fn trapezoid_weights(len: usize, h: f64) -> Vec<f64> {
    assert!(len >= 2);
    let mut w = vec![h; len];
    w[0] = 0.5 * h;
    w[len - 1] = 0.5 * h;
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigh_reconstructs() {
        let n = 12;
        let a = Mat::from_fn(n, n, |i, j| C64::new((i * 3 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.2));
        let h = hermitize(&a);
        let (w, v) = eigh(&h);
        let r = from_eigh(&w, &v);
        assert!(max_abs(&sub(&h, &r)) < 1e-10);
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn singular_values_of_hermitian_are_abs_eigs() {
        let n = 10;
        let a = Mat::from_fn(n, n, |i, j| C64::new(((i + 2 * j) as f64).sin(), ((i * j) as f64).cos()));
        let h = hermitize(&a);
        let mut abs_w: Vec<f64> = eigvalsh(&h).iter().map(|x| x.abs()).collect();
        abs_w.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let s = singular_values(&h);
        for (x, y) in abs_w.iter().zip(&s) {
            assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
        }
    }
}
