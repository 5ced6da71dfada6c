use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use psdp::bench::{
    gen, run_init_experiment, run_solver_experiment, ExperimentConfig, Family, InstanceSpec, Shape,
    Suite,
};
use psdp::io::{load_matrix, save_matrix, save_solution, write_solution};
use psdp::{solve, InitKind, Method, PsdpError, SolverConfig};

#[derive(Parser)]
#[command(
    name = "psdp",
    version,
    about = "Positive semidefinite Procrustes solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve min ||AX - B||_F over PSD A.
    Solve(SolveArgs),
    /// Write a generated instance as x.txt and b.txt.
    Gen(GenArgs),
    /// Run one of the benchmark experiments.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance family: gaussian, ill, rankdef, init-gaussian, init-uniform.
    #[arg(long)]
    family: Option<Family>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target condition number for the ill-conditioned family.
    #[arg(long)]
    kappa: Option<f64>,
}

impl InstanceArgs {
    fn spec(&self) -> Result<InstanceSpec, PsdpError> {
        let family = self
            .family
            .ok_or_else(|| PsdpError::Config("--family is required".into()))?;
        let (n, m) = match family {
            Family::InitGaussian | Family::InitUniform => {
                (self.n.unwrap_or(37), self.m.unwrap_or(37))
            }
            _ => {
                let n = self
                    .n
                    .ok_or_else(|| PsdpError::Config("--n is required".into()))?;
                (n, self.m.unwrap_or(n))
            }
        };
        Ok(InstanceSpec {
            kappa_target: self.kappa,
            ..InstanceSpec::new(family, n, m, self.seed)
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Matrix file holding X.
    #[arg(long, requires = "b", conflicts_with = "family")]
    x: Option<PathBuf>,
    /// Matrix file holding B.
    #[arg(long, requires = "x")]
    b: Option<PathBuf>,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = "an-fgm")]
    method: Method,
    /// Defaults to recursive for an-fgm and diagonal otherwise.
    #[arg(long)]
    init: Option<InitKind>,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha1: f64,
    /// Accuracy of the approximant when the infimum is not attained.
    #[arg(long)]
    eps: Option<f64>,
    /// Output file; the solution goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Initial errors and FGM traces for the four initializations.
    InitExp(BenchArgs),
    /// Gradient, FGM, ParTan and AN-FGM on one suite and shape.
    SolverExp(SolverExpArgs),
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SolverExpArgs {
    #[arg(long, default_value = "well")]
    suite: Suite,
    #[arg(long, default_value = "square")]
    shape: Shape,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 100)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "results")]
    out_dir: PathBuf,
}

fn exit_code(err: &PsdpError) -> u8 {
    match err {
        PsdpError::Io(_) => 1,
        PsdpError::Numeric(_)
        | PsdpError::Degenerate { .. }
        | PsdpError::NotAttained
        | PsdpError::ConstraintViolation(_) => 3,
        _ => 2,
    }
}

fn run_solve(args: SolveArgs) -> Result<(), PsdpError> {
    let (x, b) = match (&args.x, &args.b) {
        (Some(xp), Some(bp)) => (load_matrix(xp)?, load_matrix(bp)?),
        _ => gen(&args.instance.spec()?)?,
    };
    let init = args.init.unwrap_or(if args.method == Method::AnFgm {
        InitKind::Recursive
    } else {
        InitKind::Diagonal
    });
    let cfg = SolverConfig {
        max_iter: args.max_iter,
        alpha1: args.alpha1,
        ..SolverConfig::default()
    };
    let sol = solve(&x, &b, args.method, init, &cfg, args.eps)?;

    match &args.out {
        Some(path) => save_solution(path, &sol)?,
        None => {
            let mut out = BufWriter::new(io::stdout().lock());
            write_solution(&mut out, &sol)?;
            out.flush()?;
        }
    }
    let iters = sol.trace.as_ref().map_or(0, |t| t.iterations());
    eprintln!(
        "{} ({} init): objective {:.6e}, relative error {:.4}%, {} iterations, attained {}",
        args.method,
        init,
        sol.objective,
        sol.relative_error(b.norm()),
        iters,
        sol.attained
    );
    Ok(())
}

fn run_gen(args: GenArgs) -> Result<(), PsdpError> {
    let spec = args.instance.spec()?;
    let (x, b) = gen(&spec)?;
    std::fs::create_dir_all(&args.out_dir)?;
    save_matrix(&args.out_dir.join("x.txt"), &x)?;
    save_matrix(&args.out_dir.join("b.txt"), &b)?;
    eprintln!(
        "wrote {}x{} {} instance (seed {}) to {}",
        spec.n,
        spec.m,
        spec.family,
        spec.seed,
        args.out_dir.display()
    );
    Ok(())
}

fn run_bench(cmd: BenchCommand) -> Result<(), PsdpError> {
    let (report, out_dir) = match cmd {
        BenchCommand::InitExp(a) => {
            let cfg = ExperimentConfig {
                trials: a.trials,
                iters: a.iters,
                seed: a.seed,
                ..ExperimentConfig::default()
            };
            (run_init_experiment(&cfg)?, a.out_dir)
        }
        BenchCommand::SolverExp(a) => {
            let cfg = ExperimentConfig {
                trials: a.trials,
                iters: a.iters,
                size: a.size,
                seed: a.seed,
                ..ExperimentConfig::default()
            };
            (run_solver_experiment(a.suite, a.shape, &cfg)?, a.out_dir)
        }
    };
    report.write_csv(&out_dir)?;
    print!("{report}");
    if report.name != "init" {
        println!(
            "  unattained infimum in {}/{} trials",
            report.unattained, report.trials
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Gen(args) => run_gen(args),
        Command::Bench(cmd) => run_bench(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
