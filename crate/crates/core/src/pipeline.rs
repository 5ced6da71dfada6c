//! AN-FGM: reduce, warm-start the diagonal subproblem, run FGM on it, and
//! assemble a full-size (ε-)solution. Also the method/init dispatcher used by
//! the CLI and the benchmarks.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{PsdpError, Result};
use crate::init::{
    init_diagonal, init_recursive, init_unconstrained, init_zero, RecursiveInitConfig,
};
use crate::matcore::{check_finite, DenseMatrix};
use crate::reduction::{
    assemble_epsilon, assemble_optimal, default_epsilon, infimum_value, kernel_contained,
    negative_case_solution, negative_condition_holds, rank1_solve, reduce, SubproblemSolution,
    DEFAULT_KERNEL_TOL,
};
use crate::solution::{BestIterate, IterateTrace, PsdpSolution};
use crate::solvers::{fgm_solve, gradient_solve, partan_solve, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Gradient,
    Fgm,
    Partan,
    AnFgm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Gradient, Method::Fgm, Method::Partan, Method::AnFgm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Gradient => "gradient",
            Method::Fgm => "fgm",
            Method::Partan => "partan",
            Method::AnFgm => "an-fgm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PsdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gradient" => Ok(Method::Gradient),
            "fgm" => Ok(Method::Fgm),
            "partan" => Ok(Method::Partan),
            "an-fgm" | "anfgm" => Ok(Method::AnFgm),
            _ => Err(PsdpError::Config(format!(
                "unknown method '{s}' (expected gradient, fgm, partan or an-fgm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitKind {
    Zero,
    Unconstrained,
    Diagonal,
    Recursive,
}

impl InitKind {
    pub const ALL: [InitKind; 4] = [
        InitKind::Zero,
        InitKind::Unconstrained,
        InitKind::Diagonal,
        InitKind::Recursive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InitKind::Zero => "zero",
            InitKind::Unconstrained => "unconstrained",
            InitKind::Diagonal => "diagonal",
            InitKind::Recursive => "recursive",
        }
    }
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InitKind {
    type Err = PsdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(InitKind::Zero),
            "unconstrained" => Ok(InitKind::Unconstrained),
            "diagonal" => Ok(InitKind::Diagonal),
            "recursive" => Ok(InitKind::Recursive),
            _ => Err(PsdpError::Config(format!(
                "unknown init '{s}' (expected zero, unconstrained, diagonal or recursive)"
            ))),
        }
    }
}

/// Knobs for AN-FGM beyond the shared [`SolverConfig`].
#[derive(Debug, Clone)]
pub struct AnFgmOptions {
    /// Warm start applied to the reduced problem.
    pub init: InitKind,
    /// Accuracy of the returned ε-approximant when the infimum is not
    /// attained; defaults to [`default_epsilon`].
    pub eps: Option<f64>,
    /// Use the rank-one and negative-semidefinite closed forms when they
    /// apply. Disabling forces the iterative path.
    pub shortcuts: bool,
    pub recursive: RecursiveInitConfig,
}

impl Default for AnFgmOptions {
    fn default() -> Self {
        AnFgmOptions {
            init: InitKind::Recursive,
            eps: None,
            shortcuts: true,
            recursive: RecursiveInitConfig::default(),
        }
    }
}

fn single_entry_trace(cfg: &SolverConfig, obj: f64) -> Option<IterateTrace> {
    cfg.record_trace.then(|| {
        let mut t = IterateTrace::default();
        t.push(obj, std::time::Duration::ZERO);
        t
    })
}

/// AN-FGM with the recursive warm start.
pub fn an_fgm_solve(
    x: &DenseMatrix,
    b: &DenseMatrix,
    cfg: &SolverConfig,
    eps: Option<f64>,
) -> Result<PsdpSolution> {
    let opts = AnFgmOptions {
        eps,
        ..AnFgmOptions::default()
    };
    an_fgm_solve_with(x, b, cfg, &opts)
}

/// AN-FGM with explicit options. The trace is reported in original
/// coordinates: each entry is the subproblem objective plus `‖BV₂‖_F²`.
pub fn an_fgm_solve_with(
    x: &DenseMatrix,
    b: &DenseMatrix,
    cfg: &SolverConfig,
    opts: &AnFgmOptions,
) -> Result<PsdpSolution> {
    cfg.validate()?;
    let red = match reduce(x, b, cfg.rank_tol) {
        Ok(red) => red,
        Err(PsdpError::Degenerate { infimum }) => {
            let n = x.nrows();
            let mut sol = PsdpSolution::exact(DMatrix::zeros(n, n), infimum, infimum);
            sol.trace = single_entry_trace(cfg, infimum);
            return Ok(sol);
        }
        Err(e) => return Err(e),
    };

    if opts.shortcuts {
        let closed = if red.r == 1 {
            Some(rank1_solve(x, b, opts.eps, cfg.rank_tol)?)
        } else if red.r < red.n && negative_condition_holds(&red)? {
            negative_case_solution(&red, opts.eps)?
        } else {
            None
        };
        if let Some(mut sol) = closed {
            sol.trace = single_entry_trace(cfg, sol.objective);
            return Ok(sol);
        }
    }

    let sigma = red.sigma1_matrix();
    let a0 = match opts.init {
        InitKind::Zero => init_zero(red.r),
        InitKind::Unconstrained => init_unconstrained(&sigma, &red.btilde)?,
        InitKind::Diagonal => init_diagonal(&sigma, &red.btilde)?,
        InitKind::Recursive => init_recursive(&sigma, &red.btilde, &opts.recursive)?,
    };
    let run = fgm_solve(&sigma, &red.btilde, &a0, cfg)?;
    let best = run.best.expect("fgm_solve always tracks its best iterate");

    let sub = SubproblemSolution::new(&red, best.a, DEFAULT_KERNEL_TOL)?;
    let mut sol = if kernel_contained(&sub, &red, DEFAULT_KERNEL_TOL)? {
        assemble_optimal(&red, &sub, None)?
    } else {
        let eps = opts
            .eps
            .unwrap_or_else(|| default_epsilon(infimum_value(&red, &sub), sub.residual));
        assemble_epsilon(&red, &sub, eps, None)?
    };
    sol.trace = run.trace.map(|t| t.shifted(red.offset));
    sol.best = Some(BestIterate {
        a: sol.a.clone(),
        objective: sol.objective,
        iteration: best.iteration,
    });
    Ok(sol)
}

/// Single entry point over all method/initialization pairs. The recursive
/// initialization needs a diagonal `X`, so it is only offered through
/// AN-FGM, which applies every initialization to the reduced problem.
pub fn solve(
    x: &DenseMatrix,
    b: &DenseMatrix,
    method: Method,
    init: InitKind,
    cfg: &SolverConfig,
    eps: Option<f64>,
) -> Result<PsdpSolution> {
    if x.shape() != b.shape() {
        return Err(PsdpError::Dimension(format!(
            "X is {}x{} but B is {}x{}",
            x.nrows(),
            x.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    check_finite(x)?;
    check_finite(b)?;
    if method == Method::AnFgm {
        let opts = AnFgmOptions {
            init,
            eps,
            ..AnFgmOptions::default()
        };
        return an_fgm_solve_with(x, b, cfg, &opts);
    }
    let a0 = match init {
        InitKind::Zero => init_zero(x.nrows()),
        InitKind::Unconstrained => init_unconstrained(x, b)?,
        InitKind::Diagonal => init_diagonal(x, b)?,
        InitKind::Recursive => {
            return Err(PsdpError::Config(format!(
                "recursive init is only available with an-fgm, not {method}"
            )))
        }
    };
    match method {
        Method::Gradient => gradient_solve(x, b, &a0, cfg),
        Method::Fgm => fgm_solve(x, b, &a0, cfg),
        Method::Partan => partan_solve(x, b, &a0, cfg),
        Method::AnFgm => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{is_psd, sym_eig};
    use crate::solution::objective;
    use crate::solvers::precompute;
    use crate::testutil::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_x_psd_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_psd(&mut rng, 5, 5);
        let sol =
            an_fgm_solve(&DMatrix::identity(5, 5), &b, &SolverConfig::default(), None).unwrap();
        assert!(sol.attained);
        assert_close(&sol.a, &b, 1e-8);
        assert!(sol.objective < 1e-14);
    }

    #[test]
    fn zero_x_is_degenerate_but_solved() {
        let b = DMatrix::from_element(3, 2, 2.0);
        let sol = an_fgm_solve(&DMatrix::zeros(3, 2), &b, &SolverConfig::default(), None).unwrap();
        assert_eq!(sol.a, DMatrix::<f64>::zeros(3, 3));
        assert_eq!(sol.objective, 24.0);
        assert_eq!(sol.infimum, Some(24.0));
    }

    #[test]
    fn reported_objective_matches_trace_and_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n, m, r) in [(8, 8, 8), (10, 5, 5), (6, 12, 6), (10, 10, 4)] {
            let x = gaussian_rank(&mut rng, n, m, r);
            let b = gaussian(&mut rng, n, m);
            let sol = an_fgm_solve(&x, &b, &SolverConfig::default(), None).unwrap();
            let direct = objective(&sol.a, &x, &b);
            assert!((sol.objective - direct).abs() <= 1e-9 * direct);
            let trace_best = sol
                .trace
                .as_ref()
                .unwrap()
                .objectives
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let inf = sol.infimum.unwrap();
            assert!((trace_best - inf).abs() <= 1e-9 * inf);
            if sol.attained {
                assert!((sol.objective - inf).abs() <= 1e-9 * inf);
            } else {
                assert!(sol.objective < inf + sol.epsilon.unwrap());
            }
            assert!(is_psd(&sol.a, 1e-8 * sol.a.norm()).unwrap());
        }
    }

    #[test]
    fn every_method_stays_above_infimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gaussian_rank(&mut rng, 8, 8, 4);
        let b = gaussian(&mut rng, 8, 8);
        let cfg = SolverConfig::default().with_max_iter(3000);
        let inf = an_fgm_solve(&x, &b, &cfg, None).unwrap().infimum.unwrap();
        for method in [Method::Gradient, Method::Fgm, Method::Partan] {
            let sol = solve(&x, &b, method, InitKind::Diagonal, &cfg, None).unwrap();
            let t = sol.trace.unwrap();
            assert!(
                t.objectives.iter().all(|&o| o >= inf * (1.0 - 1e-9)),
                "{method}"
            );
        }
    }

    #[test]
    fn dispatcher_rules() {
        let x = DMatrix::identity(3, 3);
        let err = solve(
            &x,
            &x,
            Method::Fgm,
            InitKind::Recursive,
            &SolverConfig::default(),
            None,
        );
        assert!(matches!(err, Err(PsdpError::Config(_))));
        let one = SolverConfig::default().with_max_iter(1);
        let sol = solve(&x, &x, Method::Gradient, InitKind::Zero, &one, None).unwrap();
        assert_close(&sol.a, &x, 1e-14);
        assert!(sol.objective < 1e-28);
        assert_eq!("an-fgm".parse::<Method>().unwrap(), Method::AnFgm);
        assert_eq!("Diagonal".parse::<InitKind>().unwrap(), InitKind::Diagonal);
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn methods_agree_on_well_conditioned_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = gaussian(&mut rng, 20, 20);
        let b = gaussian(&mut rng, 20, 20);
        let cfg = SolverConfig::default();
        let objs: Vec<f64> = [
            (Method::Fgm, InitKind::Diagonal),
            (Method::Partan, InitKind::Diagonal),
            (Method::AnFgm, InitKind::Recursive),
        ]
        .iter()
        .map(|&(m, i)| solve(&x, &b, m, i, &cfg, None).unwrap().best_objective())
        .collect();
        let lo = objs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = objs.iter().copied().fold(0.0, f64::max);
        assert!(hi.sqrt() <= 1.01 * lo.sqrt(), "{objs:?}");
    }

    #[test]
    fn subproblem_is_strongly_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = gaussian_rank(&mut rng, 9, 7, 3);
        let b = gaussian(&mut rng, 9, 7);
        let red = reduce(&x, &b, None).unwrap();
        let p = precompute(&red.sigma1_matrix(), &red.btilde, None).unwrap();
        assert!(p.q > 0.0);
    }

    #[test]
    fn shortcuts_agree_with_iterative_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = gaussian_rank(&mut rng, 5, 5, 1);
        let b = gaussian(&mut rng, 5, 5);
        let fast = an_fgm_solve(&x, &b, &SolverConfig::default(), None).unwrap();
        let slow_opts = AnFgmOptions {
            shortcuts: false,
            ..AnFgmOptions::default()
        };
        let slow = an_fgm_solve_with(&x, &b, &SolverConfig::default(), &slow_opts).unwrap();
        let (f, s) = (fast.infimum.unwrap(), slow.infimum.unwrap());
        assert!((f - s).abs() <= 1e-7 * s.max(1.0));
    }

    #[test]
    fn other_inits_on_reduced_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = gaussian(&mut rng, 6, 6);
        let b = gaussian(&mut rng, 6, 6);
        let cfg = SolverConfig::default().with_max_iter(2000);
        let vals: Vec<f64> = InitKind::ALL
            .iter()
            .map(|&i| {
                solve(&x, &b, Method::AnFgm, i, &cfg, None)
                    .unwrap()
                    .objective
            })
            .collect();
        for v in &vals {
            assert!((v - vals[0]).abs() <= 1e-8 * vals[0]);
        }
        let sol = solve(&x, &b, Method::AnFgm, InitKind::Zero, &cfg, None).unwrap();
        assert!(sym_eig(&sol.a).unwrap().min_eigenvalue() >= -1e-10);
    }
}
