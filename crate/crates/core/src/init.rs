//! Starting points for the first-order solvers.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{PsdpError, Result};
use crate::matcore::{pinv, psd_project, DenseMatrix};
use crate::solvers::{fgm_solve, SolverConfig};

pub fn init_zero(n: usize) -> DenseMatrix {
    DMatrix::zeros(n, n)
}

/// Projection of the unconstrained least-squares solution `B·X†`.
pub fn init_unconstrained(x: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    psd_project(&(b * pinv(x, None)?))
}

/// Best diagonal PSD matrix: the problem separates by rows into
/// `min_{aᵢ≥0} ‖aᵢX(i,:) − B(i,:)‖²`. Zero rows of `X` get `aᵢ = 0`.
pub fn init_diagonal(x: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if x.shape() != b.shape() {
        return Err(PsdpError::Dimension(format!(
            "X is {}x{} but B is {}x{}",
            x.nrows(),
            x.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let n = x.nrows();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = x.row(i);
        let nrm = xi.norm_squared();
        if nrm > 0.0 {
            a[(i, i)] = (b.row(i).dot(&xi) / nrm).max(0.0);
        }
    }
    Ok(a)
}

/// Contiguous blocks of an ascending sequence, each with bounded ratio
/// `max/min`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub blocks: Vec<Range<usize>>,
    pub kappas: Vec<f64>,
}

/// Split point `k` (first block `d[..k]`) minimizing
/// `max(d[k−1]/d[0], d[n−1]/d[k])`; smallest `k` on ties.
fn best_split(d: &[f64]) -> usize {
    let n = d.len();
    let mut best = (1, f64::INFINITY);
    for k in 1..n {
        let v = (d[k - 1] / d[0]).max(d[n - 1] / d[k]);
        if v < best.1 {
            best = (k, v);
        }
    }
    best.0
}

fn split_into(d: &[f64], offset: usize, kappa_max: f64, out: &mut Partition) {
    let kappa = d[d.len() - 1] / d[0];
    if kappa <= kappa_max {
        out.blocks.push(offset..offset + d.len());
        out.kappas.push(kappa);
        return;
    }
    let k = best_split(d);
    split_into(&d[..k], offset, kappa_max, out);
    split_into(&d[k..], offset + k, kappa_max, out);
}

/// Recursively bisects ascending positive `d` until every block has
/// condition number at most `kappa_max`.
pub fn split_diagonal(d: &[f64], kappa_max: f64) -> Result<Partition> {
    if !(kappa_max >= 1.0) {
        return Err(PsdpError::Parameter(format!(
            "kappa_max must be at least 1, got {kappa_max}"
        )));
    }
    if d.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(PsdpError::Precondition(
            "diagonal entries must be positive and finite".into(),
        ));
    }
    if d.windows(2).any(|w| w[1] < w[0]) {
        return Err(PsdpError::Precondition(
            "diagonal entries must be ascending".into(),
        ));
    }
    let mut out = Partition {
        blocks: Vec::new(),
        kappas: Vec::new(),
    };
    if !d.is_empty() {
        split_into(d, 0, kappa_max, &mut out);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RecursiveInitConfig {
    pub kappa_max: f64,
    /// FGM iterations per block.
    pub block_iters: usize,
    pub alpha1: f64,
}

impl Default for RecursiveInitConfig {
    fn default() -> Self {
        RecursiveInitConfig {
            kappa_max: 100.0,
            block_iters: 100,
            alpha1: 0.1,
        }
    }
}

/// Block-diagonal warm start for a problem whose `X` is square diagonal with
/// positive entries. The diagonal is split into well-conditioned groups; on
/// each group the problem restricted to that diagonal block of `B` is solved
/// approximately (diagonal init plus FGM, keeping the best iterate).
pub fn init_recursive(
    sigma: &DenseMatrix,
    b: &DenseMatrix,
    cfg: &RecursiveInitConfig,
) -> Result<DenseMatrix> {
    let r = sigma.nrows();
    if sigma.ncols() != r || b.shape() != (r, r) {
        return Err(PsdpError::Inapplicable(format!(
            "recursive init needs square diagonal X and matching B, got {}x{} and {}x{}",
            sigma.nrows(),
            sigma.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let off_diagonal = (0..r).any(|j| (0..r).any(|i| i != j && sigma[(i, j)] != 0.0));
    if off_diagonal || (0..r).any(|i| !(sigma[(i, i)] > 0.0)) {
        return Err(PsdpError::Inapplicable(
            "recursive init only applies to a positive diagonal X".into(),
        ));
    }

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| sigma[(i, i)].total_cmp(&sigma[(j, j)]));
    let sorted: Vec<f64> = order.iter().map(|&i| sigma[(i, i)]).collect();
    let part = split_diagonal(&sorted, cfg.kappa_max)?;

    let solver = SolverConfig {
        max_iter: cfg.block_iters.max(1),
        alpha1: cfg.alpha1,
        record_trace: false,
        ..SolverConfig::default()
    };
    let mut a = DMatrix::zeros(r, r);
    for block in &part.blocks {
        let idx = &order[block.clone()];
        let k = idx.len();
        let xb = DMatrix::from_fn(
            k,
            k,
            |i, j| if i == j { sigma[(idx[i], idx[i])] } else { 0.0 },
        );
        let bb = DMatrix::from_fn(k, k, |i, j| b[(idx[i], idx[j])]);
        let a0 = init_diagonal(&xb, &bb)?;
        let ab = if cfg.block_iters == 0 {
            a0
        } else {
            fgm_solve(&xb, &bb, &a0, &solver)?
                .best
                .map(|b| b.a)
                .unwrap_or(a0)
        };
        for i in 0..k {
            for j in 0..k {
                a[(idx[i], idx[j])] = ab[(i, j)];
            }
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{from_row_major, is_psd};
    use crate::solution::objective;
    use crate::testutil::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fixed_diagonal_37() -> Vec<f64> {
        let mut d: Vec<f64> = (1..=10).map(f64::from).collect();
        d.extend((2..=10).map(|i| 10.0 * f64::from(i)));
        d.extend((2..=10).map(|i| 100.0 * f64::from(i)));
        d.extend((2..=10).map(|i| 1000.0 * f64::from(i)));
        d
    }

    #[test]
    fn zero_init() {
        assert_eq!(init_zero(3), DMatrix::<f64>::zeros(3, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = gaussian(&mut rng, 3, 4);
        let b = gaussian(&mut rng, 3, 4);
        assert_eq!(objective(&init_zero(3), &x, &b), b.norm_squared());
    }

    #[test]
    fn unconstrained_init() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = random_psd(&mut rng, 4, 4);
        let i4 = DMatrix::identity(4, 4);
        let a = init_unconstrained(&i4, &b).unwrap();
        assert_close(&a, &b, 1e-10);
        assert!(objective(&a, &i4, &b) < 1e-20);
        let a = init_unconstrained(&i4, &(-&i4)).unwrap();
        assert_eq!(a.norm(), 0.0);
    }

    #[test]
    fn diagonal_init_examples() {
        let b = from_row_major(2, 2, &[3.0, 0.0, 0.0, -1.0]).unwrap();
        let a = init_diagonal(&DMatrix::identity(2, 2), &b).unwrap();
        assert_eq!(a, diag(&[3.0, 0.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gaussian(&mut rng, 3, 5);
        assert_eq!(
            init_diagonal(&x, &DMatrix::zeros(3, 5)).unwrap().norm(),
            0.0
        );
        let mut x = gaussian(&mut rng, 3, 5);
        x.row_mut(1).fill(0.0);
        let b = gaussian(&mut rng, 3, 5);
        assert_eq!(init_diagonal(&x, &b).unwrap()[(1, 1)], 0.0);
    }

    #[test]
    fn diagonal_init_is_optimal_among_diagonals() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x = gaussian(&mut rng, 5, 7);
            let b = gaussian(&mut rng, 5, 7);
            let a = init_diagonal(&x, &b).unwrap();
            let f0 = objective(&a, &x, &b);
            for i in 0..5 {
                for delta in [1e-3, -1e-3, 0.5, -0.5] {
                    let mut p = a.clone();
                    p[(i, i)] += delta;
                    if p[(i, i)] < 0.0 {
                        continue;
                    }
                    assert!(objective(&p, &x, &b) >= f0 * (1.0 - 1e-14));
                }
            }
        }
    }

    #[test]
    fn split_examples() {
        let p = split_diagonal(&[1.0, 2.0, 3.0], 100.0).unwrap();
        assert_eq!(p.blocks, vec![0..3]);
        let p = split_diagonal(&[1.0, 10.0, 100.0], 5.0).unwrap();
        assert_eq!(p.blocks, vec![0..1, 1..2, 2..3]);
        assert_eq!(best_split(&[1.0, 10.0, 100.0]), 1);
        assert!(split_diagonal(&[2.0, 1.0], 10.0).is_err());
        assert!(split_diagonal(&[0.0, 1.0], 10.0).is_err());
    }

    #[test]
    fn split_point_is_global_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(2..12);
            let mut d: Vec<f64> = (0..n)
                .map(|_| 10f64.powf(rng.random_range(0.0..5.0)))
                .collect();
            d.sort_by(f64::total_cmp);
            let obj = |k: usize| (d[k - 1] / d[0]).max(d[n - 1] / d[k]);
            let k = best_split(&d);
            let brute = (1..n).map(obj).fold(f64::INFINITY, f64::min);
            assert_eq!(obj(k), brute);
            assert!((1..k).all(|j| obj(j) > brute));
        }
    }

    #[test]
    fn split_table_instance_postcondition() {
        let d = fixed_diagonal_37();
        assert_eq!(d.len(), 37);
        let p = split_diagonal(&d, 100.0).unwrap();
        let mut next = 0;
        for (blk, &kappa) in p.blocks.iter().zip(&p.kappas) {
            assert_eq!(blk.start, next);
            next = blk.end;
            assert!(kappa <= 100.0);
            assert_eq!(kappa, d[blk.end - 1] / d[blk.start]);
        }
        assert_eq!(next, 37);
        assert!(p.blocks.len() >= 2);
    }

    #[test]
    fn recursive_single_block_matches_diagonal_plus_fgm() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = diag(&[3.0, 1.0, 2.0, 5.0]);
        let b = gaussian(&mut rng, 4, 4);
        let a = init_recursive(&x, &b, &RecursiveInitConfig::default()).unwrap();
        let a0 = init_diagonal(&x, &b).unwrap();
        let cfg = SolverConfig {
            max_iter: 100,
            record_trace: false,
            ..SolverConfig::default()
        };
        let expect = fgm_solve(&x, &b, &a0, &cfg).unwrap().best.unwrap().a;
        assert_close(&a, &expect, 1e-9);
    }

    #[test]
    fn recursive_beats_diagonal() {
        let d = fixed_diagonal_37();
        let x = diag(&d);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let b = gaussian(&mut rng, 37, 37);
            let rec = init_recursive(&x, &b, &RecursiveInitConfig::default()).unwrap();
            let dia = init_diagonal(&x, &b).unwrap();
            assert!(is_psd(&rec, 1e-10).unwrap());
            assert!(objective(&rec, &x, &b) <= objective(&dia, &x, &b));
        }
    }

    #[test]
    fn recursive_maps_unsorted_diagonal_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = [1000.0, 1.0, 2.0, 900.0];
        let b = gaussian(&mut rng, 4, 4);
        let a = init_recursive(&diag(&d), &b, &RecursiveInitConfig::default()).unwrap();
        // Blocks {1, 2} and {0, 3}: cross entries stay zero.
        for (i, j) in [(0, 1), (0, 2), (3, 1), (3, 2)] {
            assert_eq!(a[(i, j)], 0.0);
            assert_eq!(a[(j, i)], 0.0);
        }
    }

    #[test]
    fn recursive_rejects_non_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = gaussian(&mut rng, 3, 3);
        let err = init_recursive(&x, &x, &RecursiveInitConfig::default()).unwrap_err();
        assert!(matches!(err, PsdpError::Inapplicable(_)));
        let err = init_recursive(
            &diag(&[1.0, 0.0]),
            &diag(&[1.0, 1.0]),
            &RecursiveInitConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PsdpError::Inapplicable(_)));
    }
}
