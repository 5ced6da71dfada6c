//! Projected first-order methods for `min_{A⪰0} ‖AX − B‖_F²`.
//!
//! All three share the projected gradient step
//! `A ← P⪰(Y − (Y·XXᵀ − BXᵀ)/L)` with `L = σ₁(X)²`; they differ in how the
//! extrapolation point `Y` is formed:
//!
//! * [`gradient_solve`]: `Y = A`.
//! * [`fgm_solve`]: Nesterov's constant-step scheme with
//!   `α_{k+1} = ½(q − α_k² + √((q − α_k²)² + 4α_k²))`,
//!   `β_k = α_k(1 − α_k)/(α_k² + α_{k+1})`, `Y = A + β_k(A − Â)`.
//! * [`partan_solve`]: `Y = A + β_k(A − Â)` with `β_k` the unconstrained
//!   exact line minimizer, falling back to `β_k = 0` when the step does not
//!   decrease the objective.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use crate::error::{PsdpError, Result};
use crate::matcore::{default_rank_tol, inner, psd_project, svd, DenseMatrix};
use crate::solution::{objective, BestIterate, IterateTrace, PsdpSolution};

/// Number of iterations the early-stopping rule looks back over.
const STOP_WINDOW: usize = 10;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Initial FGM momentum parameter, in `(0, 1)`.
    pub alpha1: f64,
    /// Rank threshold for `X`; defaults to `max(n, m)·ε·σ₁`.
    pub rank_tol: Option<f64>,
    /// Stop once the objective changes by at most this fraction over the
    /// last 10 iterations. Off by default.
    pub objective_tol: Option<f64>,
    pub record_trace: bool,
    pub wall_clock_budget: Option<Duration>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iter: 1000,
            alpha1: 0.1,
            rank_tol: None,
            objective_tol: None,
            record_trace: true,
            wall_clock_budget: None,
        }
    }
}

impl SolverConfig {
    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(PsdpError::Config("max_iter must be at least 1".into()));
        }
        if !(self.alpha1 > 0.0 && self.alpha1 < 1.0) {
            return Err(PsdpError::Config(format!(
                "alpha1 must lie in (0, 1), got {}",
                self.alpha1
            )));
        }
        if let Some(tol) = self.objective_tol {
            if !(tol >= 0.0) {
                return Err(PsdpError::Config(format!(
                    "objective_tol must be nonnegative, got {tol}"
                )));
            }
        }
        Ok(())
    }
}

/// Quantities shared by every iteration.
#[derive(Debug, Clone)]
pub struct Precomputed {
    pub xxt: DenseMatrix,
    pub bxt: DenseMatrix,
    /// Lipschitz constant `σ₁(X)²`.
    pub l: f64,
    /// Inverse condition `σ_n(X)²/L`; zero when `X` has rank below n.
    pub q: f64,
}

pub fn precompute(x: &DenseMatrix, b: &DenseMatrix, rank_tol: Option<f64>) -> Result<Precomputed> {
    if x.shape() != b.shape() {
        return Err(PsdpError::Dimension(format!(
            "X is {}x{} but B is {}x{}",
            x.nrows(),
            x.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let (n, m) = x.shape();
    let s = svd(x)?.s;
    let s1 = s[0];
    let l = s1 * s1;
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(n, m, s1));
    let q = if m < n || l == 0.0 {
        0.0
    } else {
        let sn = s[n - 1];
        if sn > tol {
            (sn * sn) / l
        } else {
            0.0
        }
    };
    Ok(Precomputed {
        xxt: x * x.transpose(),
        bxt: b * x.transpose(),
        l,
        q,
    })
}

/// `G_Y = Y·XXᵀ − BXᵀ`, the gradient of `½‖YX − B‖_F²`.
pub fn gradient(y: &DenseMatrix, xxt: &DenseMatrix, bxt: &DenseMatrix) -> DenseMatrix {
    y * xxt - bxt
}

/// One FGM momentum update: returns `(α_{k+1}, β_k)`.
pub fn fgm_momentum(alpha: f64, q: f64) -> (f64, f64) {
    let d = q - alpha * alpha;
    let next = 0.5 * (d + (d * d + 4.0 * alpha * alpha).sqrt());
    let beta = alpha * (1.0 - alpha) / (alpha * alpha + next);
    (next, beta)
}

/// Bookkeeping common to all solver loops: trace, best iterate, stopping.
struct Monitor<'a> {
    cfg: &'a SolverConfig,
    start: Instant,
    history: Vec<f64>,
    trace: IterateTrace,
    best: BestIterate,
}

impl<'a> Monitor<'a> {
    fn new(cfg: &'a SolverConfig, start: Instant, a0: &DenseMatrix, f0: f64) -> Self {
        let mut trace = IterateTrace::default();
        if cfg.record_trace {
            trace.push(f0, start.elapsed());
        }
        Monitor {
            cfg,
            start,
            history: vec![f0],
            trace,
            best: BestIterate {
                a: a0.clone(),
                objective: f0,
                iteration: 0,
            },
        }
    }

    /// Records iteration `k`; returns true when the run should stop.
    fn record(&mut self, k: usize, a: &DenseMatrix, f: f64) -> bool {
        let elapsed = self.start.elapsed();
        if self.cfg.record_trace {
            self.trace.push(f, elapsed);
        }
        self.history.push(f);
        if f < self.best.objective {
            self.best = BestIterate {
                a: a.clone(),
                objective: f,
                iteration: k,
            };
        }
        if let Some(budget) = self.cfg.wall_clock_budget {
            if elapsed >= budget {
                return true;
            }
        }
        if let Some(tol) = self.cfg.objective_tol {
            if self.history.len() > STOP_WINDOW {
                let old = self.history[self.history.len() - 1 - STOP_WINDOW];
                if (old - f).abs() <= tol * f.abs().max(f64::MIN_POSITIVE) {
                    return true;
                }
            }
        }
        false
    }

    fn finish(self, a: DenseMatrix, x: &DenseMatrix, b: &DenseMatrix) -> PsdpSolution {
        let obj = objective(&a, x, b);
        PsdpSolution {
            a,
            objective: obj,
            infimum: None,
            attained: true,
            epsilon: None,
            trace: self.cfg.record_trace.then_some(self.trace),
            best: Some(self.best),
        }
    }
}

fn check_start(x: &DenseMatrix, a0: &DenseMatrix, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    let n = x.nrows();
    if a0.shape() != (n, n) {
        return Err(PsdpError::Dimension(format!(
            "initial matrix must be {n}x{n}, got {}x{}",
            a0.nrows(),
            a0.ncols()
        )));
    }
    Ok(())
}

fn run_momentum(
    x: &DenseMatrix,
    b: &DenseMatrix,
    a0: &DenseMatrix,
    cfg: &SolverConfig,
    accelerated: bool,
) -> Result<PsdpSolution> {
    check_start(x, a0, cfg)?;
    let start = Instant::now();
    let pre = precompute(x, b, cfg.rank_tol)?;
    let mut a = a0.clone();
    let mut mon = Monitor::new(cfg, start, &a, objective(&a, x, b));
    if pre.l == 0.0 {
        return Ok(mon.finish(a, x, b));
    }
    let step = 1.0 / pre.l;
    let mut y = a.clone();
    let mut alpha = cfg.alpha1;

    for k in 1..=cfg.max_iter {
        let g = gradient(&y, &pre.xxt, &pre.bxt);
        let next = psd_project(&(&y - g * step))?;
        if accelerated {
            let (alpha_next, beta) = fgm_momentum(alpha, pre.q);
            alpha = alpha_next;
            y = &next + (&next - &a) * beta;
        } else {
            y = next.clone();
        }
        a = next;
        let f = objective(&a, x, b);
        if mon.record(k, &a, f) {
            break;
        }
    }
    Ok(mon.finish(a, x, b))
}

/// Projected gradient with step `1/L`. Its objective sequence is
/// nonincreasing.
pub fn gradient_solve(
    x: &DenseMatrix,
    b: &DenseMatrix,
    a0: &DenseMatrix,
    cfg: &SolverConfig,
) -> Result<PsdpSolution> {
    run_momentum(x, b, a0, cfg, false)
}

/// Fast gradient method. Returns the last iterate as `a`; the lowest-objective
/// iterate is kept in `best` since the sequence is not monotone.
pub fn fgm_solve(
    x: &DenseMatrix,
    b: &DenseMatrix,
    a0: &DenseMatrix,
    cfg: &SolverConfig,
) -> Result<PsdpSolution> {
    run_momentum(x, b, a0, cfg, true)
}

/// Parallel-tangents heuristic. The direction `D = A − Â` is scaled by the
/// exact minimizer of `‖(A + βD)X − B‖_F²` over unconstrained `β`:
/// `β = ⟨BXᵀ − A·XXᵀ, D⟩ / ⟨D·XXᵀ, D⟩`.
pub fn partan_solve(
    x: &DenseMatrix,
    b: &DenseMatrix,
    a0: &DenseMatrix,
    cfg: &SolverConfig,
) -> Result<PsdpSolution> {
    check_start(x, a0, cfg)?;
    let start = Instant::now();
    let pre = precompute(x, b, cfg.rank_tol)?;
    let mut a = a0.clone();
    let mut f_a = objective(&a, x, b);
    let mut mon = Monitor::new(cfg, start, &a, f_a);
    if pre.l == 0.0 {
        return Ok(mon.finish(a, x, b));
    }
    let step = 1.0 / pre.l;
    let mut prev = a.clone();

    for k in 1..=cfg.max_iter {
        let axx = &a * &pre.xxt;
        let d = &a - &prev;
        let dxx = &d * &pre.xxt;
        let curvature = inner(&dxx, &d);
        let beta = if curvature > 0.0 {
            inner(&(&pre.bxt - &axx), &d) / curvature
        } else {
            0.0
        };

        let grad_a = &axx - &pre.bxt;
        let mut next = if beta != 0.0 {
            let y = &a + &d * beta;
            let g = &grad_a + &dxx * beta;
            psd_project(&(y - g * step))?
        } else {
            psd_project(&(&a - &grad_a * step))?
        };
        let mut f_next = objective(&next, x, b);
        if beta != 0.0 && f_next > f_a {
            next = psd_project(&(&a - &grad_a * step))?;
            f_next = objective(&next, x, b);
        }

        prev = std::mem::replace(&mut a, next);
        f_a = f_next;
        if mon.record(k, &a, f_a) {
            break;
        }
    }
    Ok(mon.finish(a, x, b))
}

/// Zero matrix helper used as the default starting point.
pub fn zeros(n: usize) -> DenseMatrix {
    DMatrix::zeros(n, n)
}
