//! Instance generators and the experiment harness behind `psdp bench`.

pub mod experiment;
pub mod gen;

pub use experiment::{
    count_unattained, initial_point, run_init_experiment, run_solver_experiment, ExperimentConfig,
    ExperimentReport, MethodResult, Shape, Suite, THREADS_ENV,
};
pub use gen::{gen, init_experiment_diagonal, Family, InstanceSpec};
