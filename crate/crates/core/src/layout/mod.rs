//! 2-D node placement from the total connectivity matrix.
//!
//! `T` becomes a "no-connectivity" target distance `W_ij = 1/√(Q_ij + 1)` with
//! `Q = 99·T/max(T)`, so targets span 0.1 (strongest pair) to 1.0 (unconnected).
//! Node positions minimize the full-matrix Frobenius stress `‖Δ − W‖²_F` with a
//! simplex search started from a spring-embedder layout.

mod force;
mod nelder_mead;

use log::warn;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;

pub use force::{center, force_directed_init};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult, SolverError, Termination};

/// Above this many subjects the joint simplex search becomes unreliable.
pub const DESIGN_MAX_SUBJECTS: usize = 60;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LayoutError {
    #[error("cannot lay out an empty graph")]
    Empty,
    #[error("target matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("initial layout has {got} nodes, expected {expected}")]
    InitSize { expected: usize, got: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Target distances derived from connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct NoConnectivity {
    pub q: Array2<f64>,
    pub w: Array2<f64>,
    /// `max(T) = 0`: every pair got the unconnected distance.
    pub degenerate: bool,
}

pub fn no_connectivity(t: &Array2<f64>) -> NoConnectivity {
    let n = t.nrows();
    let max = t.iter().copied().fold(0.0, f64::max);
    let degenerate = max <= 0.0;
    if degenerate && n > 1 {
        warn!("connectivity is zero everywhere; all target distances set to 1");
    }
    let q = if degenerate {
        Array2::zeros((n, n))
    } else {
        t.mapv(|v| 99.0 * v / max)
    };
    let w = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            0.0
        } else {
            1.0 / (q[(i, j)] + 1.0).sqrt()
        }
    });
    NoConnectivity { q, w, degenerate }
}

/// Σ_{i≠j} (Δ_ij − W_ij)², each unordered pair counted twice.
pub fn stress(positions: &[Point], w: &Array2<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let r = positions[i].distance(positions[j]) - w[(i, j)];
            s += r * r;
        }
    }
    2.0 * s
}

/// Mean |Δ_ij − W_ij| over unordered pairs i<j.
pub fn mae(positions: &[Point], w: &Array2<f64>) -> f64 {
    let n = positions.len();
    if n < 2 {
        warn!("mean absolute error is undefined for fewer than two nodes; reporting 0");
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += (positions[i].distance(positions[j]) - w[(i, j)]).abs();
        }
    }
    s / (n * (n - 1) / 2) as f64
}

fn flat_stress(x: &[f64], w: &Array2<f64>) -> f64 {
    let n = x.len() / 2;
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = (x[2 * i] - x[2 * j]).hypot(x[2 * i + 1] - x[2 * j + 1]);
            let r = d - w[(i, j)];
            s += r * r;
        }
    }
    2.0 * s
}

fn flatten(positions: &[Point]) -> Vec<f64> {
    positions.iter().flat_map(|p| [p.x, p.y]).collect()
}

fn unflatten(x: &[f64]) -> Vec<Point> {
    x.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Simplex iterations; `None` means 200 per coordinate.
    pub max_iterations: Option<usize>,
    pub x_tolerance: f64,
    pub f_tolerance: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub initial_step: f64,
    pub fd_iterations: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: None,
            x_tolerance: 1e-9,
            f_tolerance: 1e-12,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.05,
            fd_iterations: 500,
            seed: 42,
        }
    }
}

impl SolverConfig {
    pub fn simplex_options(&self, dimension: usize) -> NelderMeadOptions {
        NelderMeadOptions {
            max_iterations: self.max_iterations.unwrap_or(200 * dimension),
            x_tolerance: self.x_tolerance,
            f_tolerance: self.f_tolerance,
            reflection: self.reflection,
            expansion: self.expansion,
            contraction: self.contraction,
            shrink: self.shrink,
            initial_step: self.initial_step,
        }
    }
}

/// Final node placement; serialized as `layout.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub positions: Vec<Point>,
    #[serde(with = "crate::matrix_serde")]
    pub w: Array2<f64>,
    pub stress: f64,
    /// Stress of the spring-embedder warm start.
    pub initial_stress: f64,
    pub mae: f64,
    pub iterations: usize,
    pub termination: Option<Termination>,
    pub seed: u64,
    pub config: SolverConfig,
}

/// Lay out the nodes starting from the spring-embedder warm start.
pub fn solve_layout(w: &Array2<f64>, cfg: &SolverConfig) -> Result<Layout, LayoutError> {
    let init = force_directed_init(w, cfg.seed, cfg.fd_iterations);
    solve_layout_from(w, init, cfg)
}

/// Lay out the nodes from a given start.
pub fn solve_layout_from(
    w: &Array2<f64>,
    mut init: Vec<Point>,
    cfg: &SolverConfig,
) -> Result<Layout, LayoutError> {
    let (rows, cols) = w.dim();
    if rows != cols {
        return Err(LayoutError::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(LayoutError::Empty);
    }
    if init.len() != rows {
        return Err(LayoutError::InitSize {
            expected: rows,
            got: init.len(),
        });
    }
    if rows > DESIGN_MAX_SUBJECTS {
        warn!(
            "{rows} subjects exceed the {DESIGN_MAX_SUBJECTS}-subject envelope of the simplex search"
        );
    }
    center(&mut init);
    let initial_stress = stress(&init, w);
    let done = |positions: Vec<Point>, stress, iterations, termination| Layout {
        mae: mae(&positions, w),
        positions,
        w: w.clone(),
        stress,
        initial_stress,
        iterations,
        termination,
        seed: cfg.seed,
        config: cfg.clone(),
    };
    if rows == 1 {
        return Ok(done(init, 0.0, 0, None));
    }

    let x0 = flatten(&init);
    let result = nelder_mead(|x| flat_stress(x, w), &x0, &cfg.simplex_options(x0.len()))?;
    let mut positions = unflatten(&result.x);
    center(&mut positions);
    let mut final_stress = stress(&positions, w);
    if final_stress > initial_stress {
        // only possible through rounding when the search made no progress
        positions = init;
        final_stress = initial_stress;
    }
    Ok(done(
        positions,
        final_stress,
        result.iterations,
        Some(result.termination),
    ))
}
