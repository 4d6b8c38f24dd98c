//! Iteration traces shared by the alternating optimizers.

/// One inner iteration of a two-layer penalty loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub outer: usize,
    pub inner: usize,
    /// Penalized objective after the iteration (maximization form).
    pub objective: f64,
    /// `||v - a(theta)||^2` after the iteration.
    pub residual: f64,
    pub penalty: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub trace: Vec<TraceEntry>,
    /// Inner iterations used in each outer round.
    pub inner_per_outer: Vec<usize>,
    pub outer_iters: usize,
    pub final_residual: f64,
    /// Whether the outer loop met the residual tolerance before its cap.
    pub converged: bool,
    /// Conic solves issued (for diagnostics).
    pub conic_solves: usize,
}

impl SolveReport {
    pub fn inner_iters(&self) -> usize {
        self.inner_per_outer.iter().sum()
    }

    pub fn max_inner(&self) -> usize {
        self.inner_per_outer.iter().copied().max().unwrap_or(0)
    }

    /// Largest decrease between consecutive inner iterations of the same
    /// outer round, relative to the objective scale. Zero for monotone traces.
    pub fn worst_inner_decrease(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for pair in self.trace.windows(2) {
            if pair[0].outer == pair[1].outer {
                let scale = pair[0].objective.abs().max(pair[1].objective.abs()).max(1e-300);
                worst = worst.max((pair[0].objective - pair[1].objective) / scale);
            }
        }
        worst
    }
}
