//! Seeded instance generators.
//!
//! Every instance is drawn from a `ChaCha8Rng` seeded with the spec's seed,
//! `X` first and then `B`, so a spec reproduces bit-identical matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{PsdpError, Result};
use crate::matcore::{svd, DenseMatrix};

/// Size of the fixed diagonal instance used for the initialization study.
pub const INIT_EXPERIMENT_N: usize = 37;

pub const DEFAULT_KAPPA: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Gaussian `X` and `B`.
    Gaussian,
    /// `X = UΛVᵀ` with geometric singular values spanning `kappa_target`.
    IllConditioned,
    /// Gaussian `X` with its `min(n, m)/2` smallest singular values zeroed.
    RankDeficient,
    /// `X = diag(1..10, 20..100, 200..1000, 2000..10000)`, Gaussian `B`.
    InitGaussian,
    /// Same `X`, `B` uniform on `[0, 1]`.
    InitUniform,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::IllConditioned => "ill",
            Family::RankDeficient => "rankdef",
            Family::InitGaussian => "init-gaussian",
            Family::InitUniform => "init-uniform",
        }
    }

    fn is_init(self) -> bool {
        matches!(self, Family::InitGaussian | Family::InitUniform)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = PsdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "well" => Ok(Family::Gaussian),
            "ill" | "ill-conditioned" | "ill_conditioned" => Ok(Family::IllConditioned),
            "rankdef" | "rank-deficient" | "rank_deficient" => Ok(Family::RankDeficient),
            "init-gaussian" => Ok(Family::InitGaussian),
            "init-uniform" | "uniform" => Ok(Family::InitUniform),
            _ => Err(PsdpError::Config(format!("unknown family '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// Condition number for [`Family::IllConditioned`]; defaults to 1e6.
    pub kappa_target: Option<f64>,
}

impl InstanceSpec {
    pub fn new(family: Family, n: usize, m: usize, seed: u64) -> Self {
        InstanceSpec {
            family,
            n,
            m,
            seed,
            kappa_target: None,
        }
    }

    pub fn init_experiment(uniform: bool, seed: u64) -> Self {
        let family = if uniform {
            Family::InitUniform
        } else {
            Family::InitGaussian
        };
        Self::new(family, INIT_EXPERIMENT_N, INIT_EXPERIMENT_N, seed)
    }
}

/// Diagonal of the initialization-study `X`: 1..10, 20..100, 200..1000,
/// 2000..10000.
pub fn init_experiment_diagonal() -> Vec<f64> {
    let mut d: Vec<f64> = (1..=10).map(f64::from).collect();
    for scale in [10.0, 100.0, 1000.0] {
        d.extend((2..=10).map(|i| scale * f64::from(i)));
    }
    d
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DenseMatrix {
    DMatrix::from_fn(n, m, |_, _| rng.sample(StandardNormal))
}

/// Keeps the singular vectors of `g` and replaces its singular values.
fn with_spectrum(g: &DenseMatrix, sv: &[f64]) -> Result<DenseMatrix> {
    let f = svd(g)?;
    let p = sv.len();
    let u = f.u.columns(0, p);
    let v = f.v.columns(0, p);
    Ok(u * DMatrix::from_diagonal(&DVector::from_column_slice(sv)) * v.transpose())
}

pub fn gen(spec: &InstanceSpec) -> Result<(DenseMatrix, DenseMatrix)> {
    let (n, m) = (spec.n, spec.m);
    if n == 0 || m == 0 {
        return Err(PsdpError::Parameter(format!(
            "dimensions must be positive, got {n}x{m}"
        )));
    }
    if spec.family.is_init() && (n, m) != (INIT_EXPERIMENT_N, INIT_EXPERIMENT_N) {
        return Err(PsdpError::Parameter(format!(
            "the initialization instance is {k}x{k}, got {n}x{m}",
            k = INIT_EXPERIMENT_N
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p = n.min(m);

    let x = match spec.family {
        Family::Gaussian => gaussian(&mut rng, n, m),
        Family::IllConditioned => {
            let kappa = spec.kappa_target.unwrap_or(DEFAULT_KAPPA);
            if p < 2 || !(kappa >= 1.0) {
                return Err(PsdpError::Parameter(format!(
                    "ill-conditioned instances need min(n, m) >= 2 and kappa >= 1, got {p} and {kappa}"
                )));
            }
            let alpha = kappa.powf(1.0 / (p - 1) as f64);
            let sv: Vec<f64> = (0..p).map(|i| alpha.powi(i as i32)).collect();
            with_spectrum(&gaussian(&mut rng, n, m), &sv)?
        }
        Family::RankDeficient => {
            let g = gaussian(&mut rng, n, m);
            let f = svd(&g)?;
            let keep = p - p / 2;
            let sv: Vec<f64> = (0..p)
                .map(|i| if i < keep { f.s[i] } else { 0.0 })
                .collect();
            with_spectrum(&g, &sv)?
        }
        Family::InitGaussian | Family::InitUniform => {
            DMatrix::from_diagonal(&DVector::from_vec(init_experiment_diagonal()))
        }
    };

    let b = match spec.family {
        Family::InitUniform => DMatrix::from_fn(n, m, |_, _| rng.random::<f64>()),
        _ => gaussian(&mut rng, n, m),
    };
    Ok((x, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::default_rank_tol;
    use crate::matcore::numerical_rank;

    #[test]
    fn deterministic() {
        for family in [
            Family::Gaussian,
            Family::IllConditioned,
            Family::RankDeficient,
        ] {
            let spec = InstanceSpec::new(family, 12, 7, 42);
            let (x1, b1) = gen(&spec).unwrap();
            let (x2, b2) = gen(&spec).unwrap();
            assert_eq!(x1, x2);
            assert_eq!(b1, b2);
            let (x3, _) = gen(&InstanceSpec::new(family, 12, 7, 43)).unwrap();
            assert_ne!(x1, x3);
        }
    }

    #[test]
    fn ill_conditioned_hits_target() {
        let (x, _) = gen(&InstanceSpec::new(Family::IllConditioned, 50, 50, 7)).unwrap();
        let s = svd(&x).unwrap().s;
        let kappa = s[0] / s[49];
        assert!((kappa / 1e6 - 1.0).abs() < 1e-6, "kappa = {kappa}");
        let spec = InstanceSpec {
            kappa_target: Some(100.0),
            ..InstanceSpec::new(Family::IllConditioned, 20, 30, 1)
        };
        let s = svd(&gen(&spec).unwrap().0).unwrap().s;
        assert!((s[0] / s[19] / 100.0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rank_deficient_has_half_rank() {
        let (x, _) = gen(&InstanceSpec::new(Family::RankDeficient, 50, 50, 3)).unwrap();
        let s = svd(&x).unwrap().s;
        assert_eq!(
            numerical_rank(s.as_slice(), default_rank_tol(50, 50, s[0])),
            25
        );
        let (x, _) = gen(&InstanceSpec::new(Family::RankDeficient, 20, 40, 3)).unwrap();
        let s = svd(&x).unwrap().s;
        assert_eq!(
            numerical_rank(s.as_slice(), default_rank_tol(20, 40, s[0])),
            10
        );
    }

    #[test]
    fn init_instance() {
        let d = init_experiment_diagonal();
        assert_eq!(d.len(), 37);
        let (x, b) = gen(&InstanceSpec::init_experiment(true, 5)).unwrap();
        assert_eq!(x.shape(), (37, 37));
        let s = svd(&x).unwrap().s;
        assert!((s[0] / s[36] - 1e4).abs() < 1e-8);
        assert!(b.iter().all(|&v| (0.0..1.0).contains(&v)));
        assert!(gen(&InstanceSpec::new(Family::InitGaussian, 10, 10, 0)).is_err());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(gen(&InstanceSpec::new(Family::Gaussian, 0, 3, 0)).is_err());
        assert!(gen(&InstanceSpec::new(Family::IllConditioned, 1, 3, 0)).is_err());
        assert!("nope".parse::<Family>().is_err());
        assert_eq!("ill".parse::<Family>().unwrap(), Family::IllConditioned);
    }
}
