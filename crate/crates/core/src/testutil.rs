//! Random matrix helpers and assertions shared by the unit and integration
//! tests. Not part of the stable API.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::matcore::{svd, DenseMatrix};

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> DenseMatrix {
    DMatrix::from_fn(n, m, |_, _| rng.sample(StandardNormal))
}

pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DenseMatrix {
    gaussian(rng, n, n).qr().q()
}

/// Gaussian-like n×m matrix of exact rank `r`.
pub fn gaussian_rank<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, r: usize) -> DenseMatrix {
    gaussian(rng, n, r) * gaussian(rng, r, m)
}

/// n×m matrix with prescribed singular values (`sv.len() ≤ min(n, m)`).
pub fn with_singular_values<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    sv: &[f64],
) -> DenseMatrix {
    let u = random_orthogonal(rng, n);
    let v = random_orthogonal(rng, m);
    let mut s = DMatrix::zeros(n, m);
    for (i, &x) in sv.iter().enumerate() {
        s[(i, i)] = x;
    }
    u * s * v.transpose()
}

pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> DenseMatrix {
    let g = gaussian(rng, n, k);
    let p = &g * g.transpose();
    (&p + p.transpose()) * 0.5
}

pub fn random_psd_rank<R: Rng + ?Sized>(rng: &mut R, n: usize, r: usize) -> DenseMatrix {
    random_psd(rng, n, r)
}

pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DenseMatrix {
    let g = gaussian(rng, n, n);
    (&g + g.transpose()) * 0.5
}

pub fn diag(d: &[f64]) -> DenseMatrix {
    DMatrix::from_diagonal(&DVector::from_column_slice(d))
}

pub fn condition_number(x: &DenseMatrix) -> f64 {
    let f = svd(x).unwrap();
    let r = f.rank(None);
    f.s[0] / f.s[r - 1]
}

#[track_caller]
pub fn assert_close(a: &DenseMatrix, b: &DenseMatrix, tol: f64) {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    let d = (a - b).norm();
    assert!(d <= tol, "matrices differ by {d:.3e} > {tol:.3e}\n{a}\n{b}");
}

#[track_caller]
pub fn assert_close_vec(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

#[track_caller]
pub fn assert_orthogonal(q: &DenseMatrix, tol: f64) {
    let n = q.ncols();
    let d = (q.transpose() * q - DMatrix::<f64>::identity(n, n)).norm();
    assert!(d <= tol, "QᵀQ − I has norm {d:.3e}");
}
