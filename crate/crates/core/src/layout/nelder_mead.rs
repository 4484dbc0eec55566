//! Derivative-free simplex search (Nelder–Mead) with reflection, expansion,
//! outside/inside contraction and shrink steps.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("objective is not finite at the starting point")]
    NonFiniteStart,
    #[error("starting point is empty")]
    EmptyStart,
    #[error("invalid solver option: {0}")]
    Options(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop when every vertex is within this (max-norm) distance of the best one.
    pub x_tolerance: f64,
    /// Stop when every vertex value is within this of the best value.
    pub f_tolerance: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Offset added to each coordinate of the start to build the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            x_tolerance: 1e-9,
            f_tolerance: 1e-12,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: 0.05,
        }
    }
}

impl NelderMeadOptions {
    fn validate(&self) -> Result<(), SolverError> {
        let positive = [
            self.reflection,
            self.expansion,
            self.contraction,
            self.shrink,
            self.x_tolerance,
            self.f_tolerance,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(SolverError::Options("coefficients and tolerances must be positive"));
        }
        if self.initial_step == 0.0 || !self.initial_step.is_finite() {
            return Err(SolverError::Options("initial step must be finite and nonzero"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    XTolerance,
    FTolerance,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    /// Best vertex value before the first iteration and after each one.
    pub trace: Vec<f64>,
}

struct Objective<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Objective<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// `base + coeff · (target − base)`, element-wise.
fn towards(base: &[f64], target: &[f64], coeff: f64) -> Vec<f64> {
    base.iter()
        .zip(target)
        .map(|(b, t)| b + coeff * (t - b))
        .collect()
}

pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Result<NelderMeadResult, SolverError>
where
    F: FnMut(&[f64]) -> f64,
{
    opts.validate()?;
    let n = x0.len();
    if n == 0 {
        return Err(SolverError::EmptyStart);
    }
    let mut obj = Objective { f, evaluations: 0 };
    let f0 = (obj.f)(x0);
    obj.evaluations += 1;
    if !f0.is_finite() {
        return Err(SolverError::NonFiniteStart);
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for k in 0..n {
        let mut v = x0.to_vec();
        v[k] += opts.initial_step;
        let fv = obj.eval(&v);
        simplex.push((v, fv));
    }

    let mut trace = Vec::new();
    let mut iterations = 0;
    let termination = loop {
        // Stable: among equal values the earlier vertex stays ahead.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(simplex[0].1);

        let best = &simplex[0];
        let f_spread = simplex[1..]
            .iter()
            .map(|(_, fv)| (fv - best.1).abs())
            .fold(0.0, f64::max);
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if x_spread < opts.x_tolerance {
            break Termination::XTolerance;
        }
        if f_spread < opts.f_tolerance {
            break Termination::FTolerance;
        }
        if iterations >= opts.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n as f64);

        let worst = simplex[n].clone();
        let second_worst = simplex[n - 1].1;
        let f_best = simplex[0].1;

        let xr = towards(&centroid, &worst.0, -opts.reflection);
        let fr = obj.eval(&xr);

        if fr < f_best {
            let xe = towards(&centroid, &xr, opts.expansion);
            let fe = obj.eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < second_worst {
            simplex[n] = (xr, fr);
            continue;
        }
        let contracted = if fr < worst.1 {
            let xc = towards(&centroid, &xr, opts.contraction);
            let fc = obj.eval(&xc);
            (fc <= fr).then_some((xc, fc))
        } else {
            let xcc = towards(&centroid, &worst.0, opts.contraction);
            let fcc = obj.eval(&xcc);
            (fcc < worst.1).then_some((xcc, fcc))
        };
        match contracted {
            Some(vertex) => simplex[n] = vertex,
            None => {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let v = towards(&anchor, &vertex.0, opts.shrink);
                    let fv = obj.eval(&v);
                    *vertex = (v, fv);
                }
            }
        }
    };

    let (x, f) = simplex.swap_remove(0);
    Ok(NelderMeadResult {
        x,
        f,
        iterations,
        evaluations: obj.evaluations,
        termination,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(max_iterations: usize) -> NelderMeadOptions {
        NelderMeadOptions {
            max_iterations,
            ..Default::default()
        }
    }

    fn non_increasing(trace: &[f64]) -> bool {
        trace.windows(2).all(|w| w[1] <= w[0])
    }

    #[test]
    fn quadratic_minimum() {
        let r = nelder_mead(
            |x| (x[0] - 3.0).powi(2) + (x[1] + 2.0).powi(2),
            &[0.0, 0.0],
            &opts(400),
        )
        .unwrap();
        assert!((r.x[0] - 3.0).abs() < 1e-6 && (r.x[1] + 2.0).abs() < 1e-6, "{:?}", r.x);
        assert!(non_increasing(&r.trace));
    }

    #[test]
    fn rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(rosen, &[-1.2, 1.0], &opts(400)).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?} {:?}", r.x, r.termination);
        assert!(non_increasing(&r.trace));
    }

    #[test]
    fn constant_objective_stops_on_value_spread() {
        let r = nelder_mead(|_| 7.0, &[1.0, 2.0, 3.0], &opts(100)).unwrap();
        assert_eq!(r.termination, Termination::FTolerance);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        assert_eq!(
            nelder_mead(|_| f64::NAN, &[0.0], &opts(10)).unwrap_err(),
            SolverError::NonFiniteStart
        );
    }

    #[test]
    fn non_finite_steps_are_rejected() {
        // undefined left of zero; the search must stay in the feasible half-line
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.01).powi(2) };
        let r = nelder_mead(f, &[0.5], &opts(500)).unwrap();
        assert!(r.x[0] >= 0.0);
        assert!((r.x[0] - 0.01).abs() < 1e-5);
        assert!(non_increasing(&r.trace));
    }

    #[test]
    fn iteration_cap() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(rosen, &[-1.2, 1.0], &opts(5)).unwrap();
        assert_eq!(r.termination, Termination::MaxIterations);
        assert_eq!(r.iterations, 5);
        assert_eq!(r.trace.len(), 6);
    }
}
