//! Limited-memory BFGS with box bounds.
//!
//! The search direction comes from the two-loop recursion restricted to
//! the free variables (those not pinned at a bound by the gradient), and
//! the step is a backtracking Armijo search along the projected path
//! `P(x + t·d)`. [`minimize`] is generic over the function so the GP fit
//! and the acquisition search reuse it; [`run`] drives an [`Objective`]
//! with finite-difference gradients and uniform restarts.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fd::{fd_gradient, FdError, FD_EPS};
use super::{argmax, Exhausted, MethodReport, Objective, Observation};
use crate::rng::{self, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsbSettings {
    /// Correction pairs kept.
    pub memory: usize,
    pub ftol: f64,
    pub gtol: f64,
    pub maxiter: usize,
    pub restarts: usize,
    pub fd_eps: f64,
    pub armijo_c: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsbSettings {
    fn default() -> Self {
        Self {
            memory: 10,
            ftol: 1e-9,
            gtol: 1e-6,
            maxiter: 200,
            restarts: 3,
            fd_eps: FD_EPS,
            armijo_c: 1e-4,
            max_backtracks: 20,
        }
    }
}

impl LbfgsbSettings {
    pub fn check(&self) -> Result<(), String> {
        if self.memory == 0 || self.maxiter == 0 || self.restarts == 0 {
            return Err("lbfgsb: memory, maxiter and restarts must be positive".into());
        }
        if !(self.fd_eps > 0.0 && self.fd_eps < 0.5) {
            return Err("lbfgsb: fd_eps must be in (0, 0.5)".into());
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) || self.ftol < 0.0 || self.gtol < 0.0 {
            return Err("lbfgsb: tolerances out of range".into());
        }
        Ok(())
    }
}

/// A differentiable function to minimize.
pub trait Smooth {
    type Error;
    fn value(&mut self, x: &[f64]) -> Result<f64, Self::Error>;
    fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>, Self::Error>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Ftol,
    Gtol,
    MaxIter,
    /// No Armijo step within the backtracking limit.
    LineSearch,
    /// The starting value was not finite.
    BadStart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub stop: Stop,
    /// Function value at the start and after every accepted step.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `P(x + t d)` onto `[lower, upper]`.
fn project_step(x: &[f64], d: &[f64], t: f64, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    (0..x.len()).map(|j| (x[j] + t * d[j]).clamp(lower[j], upper[j])).collect()
}

/// Variables held at a bound because the gradient pushes them outward.
fn pinned(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> Vec<bool> {
    (0..x.len()).map(|j| (x[j] <= lower[j] && g[j] > 0.0) || (x[j] >= upper[j] && g[j] < 0.0)).collect()
}

/// `‖P(x − g) − x‖∞`.
fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    (0..x.len()).map(|j| ((x[j] - g[j]).clamp(lower[j], upper[j]) - x[j]).abs()).fold(0.0, f64::max)
}

/// `−H g` by the two-loop recursion over the stored pairs, oldest first.
fn two_loop(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Minimizes `fun` over the box from `x0` (projected first).
pub fn minimize<S: Smooth>(
    fun: &mut S,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    settings: &LbfgsbSettings,
) -> Result<Minimum, S::Error> {
    let n = x0.len();
    let mut x: Vec<f64> = (0..n).map(|j| x0[j].clamp(lower[j], upper[j])).collect();
    let mut f = fun.value(&x)?;
    if !f.is_finite() {
        return Ok(Minimum { x, f, iterations: 0, stop: Stop::BadStart, history: vec![f] });
    }
    let mut history = vec![f];
    let mut g = fun.gradient(&x)?;
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(settings.memory);

    for it in 0..settings.maxiter {
        if projected_gradient_norm(&x, &g, lower, upper) < settings.gtol {
            return Ok(Minimum { x, f, iterations: it, stop: Stop::Gtol, history });
        }
        let fixed = pinned(&x, &g, lower, upper);
        let g_free: Vec<f64> = (0..n).map(|j| if fixed[j] { 0.0 } else { g[j] }).collect();
        let mut d = two_loop(&g_free, &pairs);
        for j in 0..n {
            if fixed[j] {
                d[j] = 0.0;
            }
        }
        if pairs.is_empty() || dot(&d, &g_free) >= 0.0 {
            // steepest descent with a unit-length first step
            pairs.clear();
            let norm = dot(&g_free, &g_free).sqrt();
            d = g_free.iter().map(|v| -v / norm.max(1.0)).collect();
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=settings.max_backtracks {
            let xt = project_step(&x, &d, t, lower, upper);
            let step: Vec<f64> = (0..n).map(|j| xt[j] - x[j]).collect();
            if step.iter().all(|s| *s == 0.0) {
                break;
            }
            let ft = fun.value(&xt)?;
            if ft.is_finite() && ft <= f + settings.armijo_c * dot(&g, &step) {
                accepted = Some((xt, ft, step));
                break;
            }
            t *= 0.5;
        }
        let Some((xt, ft, s)) = accepted else {
            return Ok(Minimum { x, f, iterations: it, stop: Stop::LineSearch, history });
        };

        history.push(ft);
        if f - ft <= settings.ftol * f.abs().max(ft.abs()).max(1.0) {
            return Ok(Minimum { x: xt, f: ft, iterations: it + 1, stop: Stop::Ftol, history });
        }
        let gt = fun.gradient(&xt)?;
        let y: Vec<f64> = (0..n).map(|j| gt[j] - g[j]).collect();
        let sy = dot(&s, &y);
        if sy > f64::EPSILON * dot(&y, &y) && sy > 0.0 {
            if pairs.len() == settings.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        x = xt;
        f = ft;
        g = gt;
    }
    Ok(Minimum { x, f, iterations: settings.maxiter, stop: Stop::MaxIter, history })
}

/// Negated reward with finite-difference gradients, charged to the budget.
struct Descent<'a> {
    obj: &'a mut dyn Objective,
    eps: f64,
}

impl Smooth for Descent<'_> {
    type Error = FdError;

    fn value(&mut self, x: &[f64]) -> Result<f64, FdError> {
        Ok(-self.obj.evaluate(x)?)
    }

    fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>, FdError> {
        let obj = &mut *self.obj;
        fd_gradient(|z| obj.evaluate(z).map(|r| -r), x, self.eps)
    }
}

/// Multi-start L-BFGS-B on the unit cube. The first start is the best warm
/// start when there is one; the others are uniform.
pub fn run(
    obj: &mut dyn Objective,
    settings: &LbfgsbSettings,
    seed: u64,
    warm: &[Observation],
    report: &mut MethodReport,
) -> Result<(), Exhausted> {
    let d = obj.dim();
    let lower = vec![0.0; d];
    let upper = vec![1.0; d];
    let mut rng = rng::stream(seed, streams::RESTARTS);
    let warm_best = argmax(&warm.iter().map(|o| o.reward).collect::<Vec<_>>()).map(|i| warm[i].z.clone());
    for r in 0..settings.restarts {
        let x0 = match (&warm_best, r) {
            (Some(z), 0) => z.clone(),
            _ => (0..d).map(|_| rng.random::<f64>()).collect(),
        };
        let mut fun = Descent { obj: &mut *obj, eps: settings.fd_eps };
        match minimize(&mut fun, &x0, &lower, &upper, settings) {
            Ok(m) if m.stop == Stop::BadStart => report.warnings.push(format!("restart {r}: start point failed to evaluate")),
            Ok(_) => {}
            Err(FdError::Exhausted) => return Err(Exhausted),
            Err(e) => report.warnings.push(format!("restart {r} stopped: {e}")),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quad {
        c: Vec<f64>,
        h: Vec<f64>,
    }

    impl Smooth for Quad {
        type Error = ();
        fn value(&mut self, x: &[f64]) -> Result<f64, ()> {
            Ok((0..x.len()).map(|i| self.h[i] * (x[i] - self.c[i]).powi(2)).sum())
        }
        fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>, ()> {
            Ok((0..x.len()).map(|i| 2.0 * self.h[i] * (x[i] - self.c[i])).collect())
        }
    }

    #[test]
    fn exact_gradient_quadratic_converges() {
        let mut q = Quad { c: vec![0.2, 0.7, 0.5], h: vec![1.0, 10.0, 100.0] };
        let m = minimize(&mut q, &[0.9, 0.1, 0.0], &[0.0; 3], &[1.0; 3], &LbfgsbSettings::default()).unwrap();
        assert!(m.f < 1e-12, "{m:?}");
    }

    #[test]
    fn bound_active_at_solution() {
        // unconstrained minimizer at (1.5, -0.5) projects to the corner (1, 0)
        let mut q = Quad { c: vec![1.5, -0.5], h: vec![1.0, 1.0] };
        let m = minimize(&mut q, &[0.5, 0.5], &[0.0; 2], &[1.0; 2], &LbfgsbSettings::default()).unwrap();
        assert_eq!(m.x, vec![1.0, 0.0]);
        assert_eq!(m.stop, Stop::Gtol);
    }

    #[test]
    fn two_loop_without_memory_is_steepest_descent() {
        assert_eq!(two_loop(&[1.0, -2.0], &VecDeque::new()), vec![-1.0, 2.0]);
    }

    #[test]
    fn run_stops_at_budget() {
        let mut o = super::super::FnObjective::new(3, 50, |z: &[f64]| -z.iter().map(|c| (c - 0.3).powi(2)).sum::<f64>());
        assert_eq!(run(&mut o, &LbfgsbSettings::default(), 1, &[], &mut MethodReport::default()), Err(Exhausted));
        assert_eq!(o.used(), 50);
    }
}
