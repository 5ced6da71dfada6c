use std::time::Duration;

use crate::matcore::DenseMatrix;

/// `‖AX − B‖_F²`.
pub fn objective(a: &DenseMatrix, x: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a * x - b).norm_squared()
}

/// Per-iteration history of a solver run. Entry 0 is the objective of the
/// initialization; entry `k` is the objective after iteration `k`.
#[derive(Debug, Clone, Default)]
pub struct IterateTrace {
    /// Squared residuals `‖A_k X − B‖_F²`.
    pub objectives: Vec<f64>,
    /// Wall-clock time elapsed since the start of the run, per entry.
    pub timestamps: Vec<Duration>,
}

impl IterateTrace {
    pub fn push(&mut self, objective: f64, at: Duration) {
        self.objectives.push(objective);
        self.timestamps.push(at);
    }

    pub fn len(&self) -> usize {
        self.objectives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objectives.is_empty()
    }

    /// Number of iterations recorded (entries after the initialization).
    pub fn iterations(&self) -> usize {
        self.objectives.len().saturating_sub(1)
    }

    /// `‖A_k X − B‖_F` per entry.
    pub fn residual_norms(&self) -> Vec<f64> {
        self.objectives.iter().map(|o| o.max(0.0).sqrt()).collect()
    }

    /// Shifts every objective by `offset`, e.g. to map a reduced-problem
    /// trace back to original coordinates.
    pub fn shifted(mut self, offset: f64) -> Self {
        for o in &mut self.objectives {
            *o += offset;
        }
        self
    }

    /// Mean wall time per iteration, excluding the initialization entry.
    pub fn seconds_per_iteration(&self) -> Option<f64> {
        let iters = self.iterations();
        if iters == 0 {
            return None;
        }
        let first = self.timestamps[0].as_secs_f64();
        let last = self.timestamps[iters].as_secs_f64();
        Some((last - first) / iters as f64)
    }
}

/// Lowest-objective iterate seen during a run.
#[derive(Debug, Clone)]
pub struct BestIterate {
    pub a: DenseMatrix,
    pub objective: f64,
    pub iteration: usize,
}

/// Result of any solve.
///
/// `infimum` is only known when the reduction certifies it; plain first-order
/// runs leave it empty. When `attained` is false, `a` is an ε-approximant and
/// `objective < infimum + epsilon`.
#[derive(Debug, Clone)]
pub struct PsdpSolution {
    pub a: DenseMatrix,
    pub objective: f64,
    pub infimum: Option<f64>,
    pub attained: bool,
    pub epsilon: Option<f64>,
    pub trace: Option<IterateTrace>,
    pub best: Option<BestIterate>,
}

impl PsdpSolution {
    pub(crate) fn exact(a: DenseMatrix, objective: f64, infimum: f64) -> Self {
        PsdpSolution {
            a,
            objective,
            infimum: Some(infimum),
            attained: true,
            epsilon: None,
            trace: None,
            best: None,
        }
    }

    pub(crate) fn approximate(a: DenseMatrix, objective: f64, infimum: f64, eps: f64) -> Self {
        PsdpSolution {
            a,
            objective,
            infimum: Some(infimum),
            attained: false,
            epsilon: Some(eps),
            trace: None,
            best: None,
        }
    }

    /// The lowest objective this run knows of: the best iterate when one was
    /// tracked, else the returned matrix.
    pub fn best_objective(&self) -> f64 {
        self.best
            .as_ref()
            .map_or(self.objective, |b| b.objective.min(self.objective))
    }

    /// Relative error in percent, `100·‖AX − B‖_F / ‖B‖_F`.
    pub fn relative_error(&self, b_norm: f64) -> f64 {
        100.0 * self.objective.max(0.0).sqrt() / b_norm
    }
}
