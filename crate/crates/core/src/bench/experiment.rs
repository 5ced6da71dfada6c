//! Experiment runners: the initialization study and the solver comparison.
//! Trials run on a rayon pool (capped by `PSDP_THREADS`); each trial is
//! single-threaded, and results are collected in trial order so reports do
//! not depend on scheduling.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use super::gen::{gen, Family, InstanceSpec};
use crate::error::{PsdpError, Result};
use crate::init::{
    init_diagonal, init_recursive, init_unconstrained, init_zero, RecursiveInitConfig,
};
use crate::matcore::DenseMatrix;
use crate::pipeline::{an_fgm_solve_with, solve, AnFgmOptions, InitKind, Method};
use crate::solution::{objective, PsdpSolution};
use crate::solvers::{fgm_solve, SolverConfig};

pub const THREADS_ENV: &str = "PSDP_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Well,
    Ill,
    RankDef,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Well, Suite::Ill, Suite::RankDef];

    pub fn family(self) -> Family {
        match self {
            Suite::Well => Family::Gaussian,
            Suite::Ill => Family::IllConditioned,
            Suite::RankDef => Family::RankDeficient,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Well => "well",
            Suite::Ill => "ill",
            Suite::RankDef => "rankdef",
        }
    }
}

impl FromStr for Suite {
    type Err = PsdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "well" => Ok(Suite::Well),
            "ill" => Ok(Suite::Ill),
            "rankdef" => Ok(Suite::RankDef),
            _ => Err(PsdpError::Config(format!(
                "unknown suite '{s}' (expected well, ill or rankdef)"
            ))),
        }
    }
}

/// Aspect ratio of `X` (n×m) for a nominal size `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    /// `n = m = P`.
    Square,
    /// `m = 2n`: `n = P/2`, `m = P`.
    M2n,
    /// `n = 2m`: `n = P`, `m = P/2`.
    N2m,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Square, Shape::M2n, Shape::N2m];

    pub fn dims(self, size: usize) -> (usize, usize) {
        match self {
            Shape::Square => (size, size),
            Shape::M2n => (size / 2, size),
            Shape::N2m => (size, size / 2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Square => "square",
            Shape::M2n => "m2n",
            Shape::N2m => "n2m",
        }
    }
}

impl FromStr for Shape {
    type Err = PsdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square" | "m=n" => Ok(Shape::Square),
            "m2n" | "m=2n" => Ok(Shape::M2n),
            "n2m" | "n=2m" => Ok(Shape::N2m),
            _ => Err(PsdpError::Config(format!(
                "unknown shape '{s}' (expected square, m2n or n2m)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub iters: usize,
    /// Nominal problem size `P` (solver comparison only).
    pub size: usize,
    /// Trial `t` uses seed `seed + t`.
    pub seed: u64,
    pub alpha1: f64,
    /// Worker cap; `None` reads `PSDP_THREADS`, falling back to rayon's default.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            trials: 10,
            iters: 1000,
            size: 100,
            seed: 0,
            alpha1: 0.1,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(PsdpError::Config("trials must be at least 1".into()));
        }
        if self.iters == 0 {
            return Err(PsdpError::Config("iters must be at least 1".into()));
        }
        Ok(())
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig {
            max_iter: self.iters,
            alpha1: self.alpha1,
            ..SolverConfig::default()
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let threads = match self.threads {
            Some(t) => Some(t),
            None => match std::env::var(THREADS_ENV) {
                Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                    PsdpError::Config(format!(
                        "{THREADS_ENV} must be a positive integer, got '{v}'"
                    ))
                })?),
                Err(_) => None,
            },
        };
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = threads {
            builder = builder.num_threads(t.max(1));
        }
        builder
            .build()
            .map_err(|e| PsdpError::Config(format!("cannot build thread pool: {e}")))
    }
}

/// Aggregated results for one method (or one family/initialization pair).
#[derive(Debug, Clone)]
pub struct MethodResult {
    pub label: String,
    /// Per-trial relative errors `100·‖A_kX − B‖_F/‖B‖_F`, iterations 0..=iters.
    pub traces: Vec<Vec<f64>>,
    /// Per-trial summary value: final relative error for the solver
    /// comparison, initial error `‖A₀X − B‖_F` for the initialization study.
    pub values: Vec<f64>,
    /// Per-trial seconds per iteration of the solver loop.
    pub seconds_per_iter: Vec<f64>,
}

impl MethodResult {
    fn new(label: String) -> Self {
        MethodResult {
            label,
            traces: Vec::new(),
            values: Vec::new(),
            seconds_per_iter: Vec::new(),
        }
    }

    pub fn mean_trace(&self) -> Vec<f64> {
        let len = self.traces.first().map_or(0, Vec::len);
        (0..len)
            .map(|k| mean(&self.traces.iter().map(|t| t[k]).collect::<Vec<_>>()))
            .collect()
    }

    pub fn final_mean(&self) -> f64 {
        self.mean_trace().last().copied().unwrap_or(f64::NAN)
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    pub fn std(&self) -> f64 {
        std_dev(&self.values)
    }

    pub fn seconds_per_1000_iters(&self) -> f64 {
        1000.0 * mean(&self.seconds_per_iter)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    /// Panel name, e.g. `rankdef-square` or `init`.
    pub name: String,
    pub trials: usize,
    pub iters: usize,
    pub methods: Vec<MethodResult>,
    /// AN-FGM trials whose infimum was not attained (solver comparison only).
    pub unattained: usize,
}

impl ExperimentReport {
    pub fn method(&self, label: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.label == label)
    }

    /// Writes `trace.csv`, `summary.csv` and `timing.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let csv_err = |e: csv::Error| PsdpError::Io(std::io::Error::other(e));

        let mut w = csv::Writer::from_path(dir.join("trace.csv")).map_err(csv_err)?;
        w.write_record(["iter", "method", "mean_rel_err"])
            .map_err(csv_err)?;
        for m in &self.methods {
            for (k, v) in m.mean_trace().iter().enumerate() {
                w.write_record([k.to_string(), m.label.clone(), format!("{v:.10e}")])
                    .map_err(csv_err)?;
            }
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("summary.csv")).map_err(csv_err)?;
        w.write_record(["family", "method", "mean", "std"])
            .map_err(csv_err)?;
        for m in &self.methods {
            let (family, method) = match m.label.split_once(':') {
                Some((f, meth)) => (f.to_string(), meth.to_string()),
                None => (self.name.clone(), m.label.clone()),
            };
            w.write_record([
                family,
                method,
                format!("{:.10e}", m.mean()),
                format!("{:.10e}", m.std()),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("timing.csv")).map_err(csv_err)?;
        w.write_record(["method", "seconds_per_1000_iters"])
            .map_err(csv_err)?;
        for m in &self.methods {
            w.write_record([
                m.label.clone(),
                format!("{:.6e}", m.seconds_per_1000_iters()),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for ExperimentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} ({} trials, {} iterations)",
            self.name, self.trials, self.iters
        )?;
        for m in &self.methods {
            writeln!(
                f,
                "  {:<28} mean {:>12.4} std {:>10.4} final {:>9.4}%  {:.3e} s/1000 it",
                m.label,
                m.mean(),
                m.std(),
                m.final_mean(),
                m.seconds_per_1000_iters()
            )?;
        }
        Ok(())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n − 1 denominator); zero for a single sample.
fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mu = mean(v);
    (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Relative-error trace padded to `iters + 1` entries by repeating the last
/// value (closed-form shortcuts and early stops record fewer entries).
fn relative_trace(sol: &PsdpSolution, b_norm: f64, iters: usize) -> Vec<f64> {
    let objs = sol
        .trace
        .as_ref()
        .map(|t| t.objectives.clone())
        .unwrap_or_else(|| vec![sol.objective]);
    let mut out: Vec<f64> = objs
        .iter()
        .map(|o| 100.0 * o.max(0.0).sqrt() / b_norm)
        .collect();
    let last = *out.last().expect("trace has at least one entry");
    out.resize(iters + 1, last);
    out.truncate(iters + 1);
    out
}

fn seconds_per_iter(sol: &PsdpSolution) -> f64 {
    sol.trace
        .as_ref()
        .and_then(|t| t.seconds_per_iteration())
        .unwrap_or(0.0)
}

struct TrialOutcome {
    per_method: Vec<(Vec<f64>, f64, f64)>,
    unattained: bool,
}

/// The solver comparison: Gradient, FGM and ParTan from the diagonal
/// initialization, AN-FGM from the recursive one, on shared instances.
pub fn run_solver_experiment(
    suite: Suite,
    shape: Shape,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (n, m) = shape.dims(cfg.size);
    if n < 2 || m < 2 {
        return Err(PsdpError::Config(format!(
            "size {} is too small for shape {}",
            cfg.size,
            shape.name()
        )));
    }
    let solver = cfg.solver();
    let run_trial = |t: usize| -> Result<TrialOutcome> {
        let spec = InstanceSpec::new(suite.family(), n, m, cfg.seed + t as u64);
        let (x, b) = gen(&spec)?;
        let b_norm = b.norm();
        let mut per_method = Vec::with_capacity(4);
        let mut unattained = false;
        for method in Method::ALL {
            let sol = if method == Method::AnFgm {
                let s = an_fgm_solve_with(&x, &b, &solver, &AnFgmOptions::default())?;
                unattained = !s.attained;
                s
            } else {
                solve(&x, &b, method, InitKind::Diagonal, &solver, None)?
            };
            let trace = relative_trace(&sol, b_norm, cfg.iters);
            let fin = *trace.last().unwrap();
            per_method.push((trace, fin, seconds_per_iter(&sol)));
        }
        Ok(TrialOutcome {
            per_method,
            unattained,
        })
    };

    let outcomes: Vec<Result<TrialOutcome>> = cfg
        .pool()?
        .install(|| (0..cfg.trials).into_par_iter().map(run_trial).collect());

    let mut methods: Vec<MethodResult> = Method::ALL
        .iter()
        .map(|m| MethodResult::new(m.name().into()))
        .collect();
    let mut unattained = 0;
    for outcome in outcomes {
        let outcome = outcome?;
        unattained += usize::from(outcome.unattained);
        for (res, (trace, fin, spi)) in methods.iter_mut().zip(outcome.per_method) {
            res.traces.push(trace);
            res.values.push(fin);
            res.seconds_per_iter.push(spi);
        }
    }
    Ok(ExperimentReport {
        name: format!("{}-{}", suite.name(), shape.name()),
        trials: cfg.trials,
        iters: cfg.iters,
        methods,
        unattained,
    })
}

/// Starting point for the initialization study. `X` is diagonal here, so the
/// recursive scheme applies directly.
pub fn initial_point(kind: InitKind, x: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    match kind {
        InitKind::Zero => Ok(init_zero(x.nrows())),
        InitKind::Unconstrained => init_unconstrained(x, b),
        InitKind::Diagonal => init_diagonal(x, b),
        InitKind::Recursive => init_recursive(x, b, &RecursiveInitConfig::default()),
    }
}

/// The initialization study on the fixed 37×37 diagonal instance: for each
/// `B` family and initialization, the initial error `‖A₀X − B‖_F` and the FGM
/// trace started from `A₀`. Labels are `<family>:<init>`.
pub fn run_init_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let solver = cfg.solver();
    let families = [Family::InitGaussian, Family::InitUniform];
    let pool = cfg.pool()?;
    let mut methods = Vec::new();

    for family in families {
        let run_trial = |t: usize| -> Result<Vec<(Vec<f64>, f64, f64)>> {
            let spec =
                InstanceSpec::init_experiment(family == Family::InitUniform, cfg.seed + t as u64);
            let (x, b) = gen(&spec)?;
            let b_norm = b.norm();
            InitKind::ALL
                .iter()
                .map(|&kind| {
                    let a0 = initial_point(kind, &x, &b)?;
                    let initial = objective(&a0, &x, &b).sqrt();
                    let sol = fgm_solve(&x, &b, &a0, &solver)?;
                    Ok((
                        relative_trace(&sol, b_norm, cfg.iters),
                        initial,
                        seconds_per_iter(&sol),
                    ))
                })
                .collect()
        };
        let outcomes: Vec<Result<Vec<(Vec<f64>, f64, f64)>>> =
            pool.install(|| (0..cfg.trials).into_par_iter().map(run_trial).collect());
        let mut results: Vec<MethodResult> = InitKind::ALL
            .iter()
            .map(|k| MethodResult::new(format!("{}:{}", family.name(), k.name())))
            .collect();
        for outcome in outcomes {
            for (res, (trace, initial, spi)) in results.iter_mut().zip(outcome?) {
                res.traces.push(trace);
                res.values.push(initial);
                res.seconds_per_iter.push(spi);
            }
        }
        methods.extend(results);
    }
    Ok(ExperimentReport {
        name: "init".into(),
        trials: cfg.trials,
        iters: cfg.iters,
        methods,
        unattained: 0,
    })
}

/// Number of AN-FGM runs on a suite whose infimum is not attained.
pub fn count_unattained(suite: Suite, shape: Shape, cfg: &ExperimentConfig) -> Result<usize> {
    cfg.validate()?;
    let (n, m) = shape.dims(cfg.size);
    let solver = cfg.solver();
    let mut count = 0;
    for t in 0..cfg.trials {
        let (x, b) = gen(&InstanceSpec::new(
            suite.family(),
            n,
            m,
            cfg.seed + t as u64,
        ))?;
        let sol = an_fgm_solve_with(&x, &b, &solver, &AnFgmOptions::default())?;
        count += usize::from(!sol.attained);
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize, iters: usize, size: usize) -> ExperimentConfig {
        ExperimentConfig {
            trials,
            iters,
            size,
            seed: 11,
            threads: Some(2),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn solver_experiment_is_deterministic() {
        let cfg = small(3, 30, 12);
        let a = run_solver_experiment(Suite::RankDef, Shape::Square, &cfg).unwrap();
        let b = run_solver_experiment(Suite::RankDef, Shape::Square, &cfg).unwrap();
        assert_eq!(a.methods.len(), 4);
        for (ma, mb) in a.methods.iter().zip(&b.methods) {
            assert_eq!(ma.traces, mb.traces);
            assert_eq!(ma.traces[0].len(), 31);
            assert!(ma.traces.iter().flatten().all(|&v| v >= 0.0));
        }
        assert_eq!(a.name, "rankdef-square");
    }

    #[test]
    fn csv_outputs() {
        let cfg = small(2, 10, 8);
        let report = run_solver_experiment(Suite::Well, Shape::N2m, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        report.write_csv(dir.path()).unwrap();
        let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert!(trace.starts_with("iter,method,mean_rel_err\n"));
        assert_eq!(trace.lines().count(), 1 + 4 * 11);
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.lines().any(|l| l.starts_with("well-n2m,an-fgm,")));
        let timing = fs::read_to_string(dir.path().join("timing.csv")).unwrap();
        assert_eq!(timing.lines().count(), 5);
    }

    #[test]
    fn init_experiment_labels_and_ordering() {
        let cfg = small(4, 5, 0);
        let report = run_init_experiment(&cfg).unwrap();
        assert_eq!(report.methods.len(), 8);
        let g = |l: &str| report.method(l).unwrap().mean();
        assert!(g("init-gaussian:recursive") < g("init-gaussian:diagonal"));
        assert!(g("init-gaussian:diagonal") <= g("init-gaussian:zero"));
        assert!(g("init-gaussian:zero") < g("init-gaussian:unconstrained"));
        assert!(g("init-uniform:recursive") < g("init-uniform:zero"));
    }

    #[test]
    fn stats_helpers() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(std_dev(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(std_dev(&[4.0]), 0.0);
    }

    #[test]
    fn config_errors() {
        let cfg = small(0, 10, 10);
        assert!(matches!(
            run_solver_experiment(Suite::Well, Shape::Square, &cfg),
            Err(PsdpError::Config(_))
        ));
        assert!(run_solver_experiment(Suite::Well, Shape::M2n, &small(1, 1, 2)).is_err());
        assert_eq!("n=2m".parse::<Shape>().unwrap(), Shape::N2m);
        assert_eq!(Shape::M2n.dims(100), (50, 100));
    }
}
