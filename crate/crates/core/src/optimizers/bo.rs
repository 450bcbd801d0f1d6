//! Bayesian optimization with an exact GP and log expected improvement.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::gp::{self, Gp, Hyper, HyperBounds};
use super::lbfgsb::{self, LbfgsbSettings, Smooth};
use super::{Exhausted, MethodReport, Objective, Observation};
use crate::rng::{self, streams, BenchRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoSettings {
    /// Uniform samples before the first model fit.
    pub n_initial: usize,
    /// Quasi-random candidates scored per acquisition search.
    pub raw_samples: usize,
    /// Best candidates refined by gradient ascent.
    pub num_restarts: usize,
    /// One lengthscale per dimension instead of a shared one.
    pub ard: bool,
    /// Starts for the hyperparameter fit.
    pub fit_restarts: usize,
    pub fit_maxiter: usize,
    pub acq_maxiter: usize,
}

impl Default for BoSettings {
    fn default() -> Self {
        Self { n_initial: 30, raw_samples: 256, num_restarts: 10, ard: false, fit_restarts: 3, fit_maxiter: 50, acq_maxiter: 50 }
    }
}

impl BoSettings {
    pub fn check(&self) -> Result<(), String> {
        if self.n_initial == 0 || self.raw_samples == 0 || self.fit_restarts == 0 {
            return Err("bo: n_initial, raw_samples and fit_restarts must be positive".into());
        }
        if self.num_restarts > self.raw_samples {
            return Err("bo: num_restarts cannot exceed raw_samples".into());
        }
        Ok(())
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

/// Below this the tails use asymptotic series instead of `erfc`.
const TAIL: f64 = -20.0;

/// `ln(z·Φ(z) + φ(z))`, accurate far into the lower tail.
pub fn log_h(z: f64) -> f64 {
    if z > TAIL {
        (z * norm_cdf(z) + norm_pdf(z)).ln()
    } else {
        let s = 1.0 / (z * z);
        let series = 1.0 - 3.0 * s + 15.0 * s * s - 105.0 * s.powi(3) + 945.0 * s.powi(4);
        -0.5 * z * z - LN_SQRT_2PI - 2.0 * z.abs().ln() + series.ln()
    }
}

/// `Φ(z) / h(z)`, the derivative of [`log_h`].
fn dlog_h(z: f64) -> f64 {
    if z > TAIL {
        norm_cdf(z) / (z * norm_cdf(z) + norm_pdf(z))
    } else {
        let s = 1.0 / (z * z);
        let cdf_series = 1.0 - s + 3.0 * s * s - 15.0 * s.powi(3) + 105.0 * s.powi(4);
        let h_series = 1.0 - 3.0 * s + 15.0 * s * s - 105.0 * s.powi(3) + 945.0 * s.powi(4);
        z.abs() * cdf_series / h_series
    }
}

/// Expected improvement over `best` for a Gaussian `N(mean, sd²)`.
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    if sd <= 0.0 {
        return (mean - best).max(0.0);
    }
    let z = (mean - best) / sd;
    (mean - best) * norm_cdf(z) + sd * norm_pdf(z)
}

/// `ln EI`; `−∞` where the posterior is degenerate and cannot improve.
pub fn log_expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    if sd <= 0.0 {
        return (mean - best).max(0.0).ln();
    }
    sd.ln() + log_h((mean - best) / sd)
}

/// Smallest posterior variance treated as informative.
const MIN_VAR: f64 = 1e-18;

/// Negated LogEI with its analytic gradient.
struct NegLogEi<'a> {
    gp: &'a Gp,
    best: f64,
}

impl Smooth for NegLogEi<'_> {
    type Error = std::convert::Infallible;

    fn value(&mut self, z: &[f64]) -> Result<f64, Self::Error> {
        let (m, v) = self.gp.predict(z);
        let out = -log_expected_improvement(m, v.max(MIN_VAR).sqrt(), self.best);
        Ok(if out.is_nan() { f64::INFINITY } else { out })
    }

    fn gradient(&mut self, z: &[f64]) -> Result<Vec<f64>, Self::Error> {
        let (m, v, dm, dv) = self.gp.predict_with_gradient(z);
        let v = v.max(MIN_VAR);
        let s = v.sqrt();
        let u = (m - self.best) / s;
        let r = dlog_h(u);
        Ok((0..z.len())
            .map(|k| {
                let ds = dv[k] / (2.0 * s);
                let du = (dm[k] - u * ds) / s;
                -(ds / s + r * du)
            })
            .collect())
    }
}

fn primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 2u64;
    while out.len() < n {
        if out.iter().take_while(|p| *p * *p <= c).all(|p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `n` points of a Halton sequence under a random shift modulo 1.
pub fn shifted_halton(n: usize, d: usize, rng: &mut BenchRng) -> Vec<Vec<f64>> {
    let bases = primes(d);
    let shift: Vec<f64> = (0..d).map(|_| rng.random()).collect();
    (1..=n as u64)
        .map(|i| (0..d).map(|k| (radical_inverse(i, bases[k]) + shift[k]).fract()).collect())
        .collect()
}

/// Rewards standardized to zero mean and unit variance. Failed evaluations
/// are imputed one standard deviation below the worst success.
fn standardize(rewards: &[f64]) -> Option<Vec<f64>> {
    let ok: Vec<f64> = rewards.iter().copied().filter(|r| r.is_finite()).collect();
    if ok.is_empty() {
        return None;
    }
    let n = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / n;
    let sd = (ok.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    let worst = ok.iter().copied().fold(f64::INFINITY, f64::min);
    Some(rewards.iter().map(|r| (if r.is_finite() { *r } else { worst - sd } - mean) / sd).collect())
}

struct State {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    last: Option<Hyper>,
}

fn propose(
    state: &mut State,
    settings: &BoSettings,
    hyper_rng: &mut BenchRng,
    acq_rng: &mut BenchRng,
    report: &mut MethodReport,
) -> Option<Vec<f64>> {
    let d = state.x[0].len();
    let y = standardize(&state.y)?;
    let scales = if settings.ard { d } else { 1 };
    let mut starts = vec![state.last.clone().unwrap_or(Hyper {
        lengthscales: vec![0.5 * (d as f64).sqrt(); scales],
        signal: 1.0,
        noise: 1e-3,
    })];
    while starts.len() < settings.fit_restarts {
        starts.push(Hyper {
            lengthscales: (0..scales).map(|_| 10f64.powf(hyper_rng.random_range(-1.5..0.5))).collect(),
            signal: 10f64.powf(hyper_rng.random_range(-0.5..0.5)),
            noise: 10f64.powf(hyper_rng.random_range(-5.0..-1.0)),
        });
    }
    let fit = match gp::fit(&state.x, &y, &starts, &HyperBounds::default(), settings.fit_maxiter) {
        Ok(f) => f,
        Err(e) => {
            report.warnings.push(format!("GP fit failed on {} points: {e}", state.x.len()));
            return None;
        }
    };
    state.last = Some(fit.gp.hyper().clone());
    let best = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let candidates = shifted_halton(settings.raw_samples, d, acq_rng);
    let mut acq = NegLogEi { gp: &fit.gp, best };
    let mut scored: Vec<(f64, usize)> =
        candidates.iter().enumerate().map(|(i, c)| (acq.value(c).unwrap_or(f64::INFINITY), i)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let (lo, hi) = (vec![0.0; d], vec![1.0; d]);
    let local = LbfgsbSettings { maxiter: settings.acq_maxiter, ..LbfgsbSettings::default() };
    let mut best_z = candidates[scored[0].1].clone();
    let mut best_v = scored[0].0;
    for &(_, i) in scored.iter().take(settings.num_restarts) {
        let Ok(m) = lbfgsb::minimize(&mut acq, &candidates[i], &lo, &hi, &local);
        if m.f < best_v {
            best_v = m.f;
            best_z = m.x;
        }
    }
    Some(best_z)
}

/// Uniform initial design, then one model-guided evaluation at a time.
/// Warm starts join the training data.
pub fn run(
    obj: &mut dyn Objective,
    settings: &BoSettings,
    seed: u64,
    warm: &[Observation],
    report: &mut MethodReport,
) -> Result<(), Exhausted> {
    let d = obj.dim();
    let mut sample_rng = rng::stream(seed, streams::SAMPLING);
    let mut hyper_rng = rng::stream(seed, streams::HYPERPARAMS);
    let mut acq_rng = rng::stream(seed, streams::ACQUISITION);
    let mut state = State { x: Vec::new(), y: Vec::new(), last: None };
    for o in warm {
        state.x.push(o.z.clone());
        state.y.push(o.reward);
    }
    let uniform = |rng: &mut BenchRng| -> Vec<f64> { (0..d).map(|_| rng.random()).collect() };
    for _ in 0..settings.n_initial {
        let z = uniform(&mut sample_rng);
        let r = obj.evaluate(&z)?;
        state.x.push(z);
        state.y.push(r);
    }
    loop {
        let z = match propose(&mut state, settings, &mut hyper_rng, &mut acq_rng, report) {
            Some(z) => z,
            None => uniform(&mut sample_rng),
        };
        let r = obj.evaluate(&z)?;
        state.x.push(z);
        state.y.push(r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ei_closed_form_limits() {
        assert_eq!(expected_improvement(0.3, 0.0, 0.3), 0.0);
        assert_eq!(expected_improvement(0.5, 0.0, 0.3), 0.5 - 0.3);
        assert!(expected_improvement(0.3, 1e-12, 0.3) < 1e-12);
        // at the incumbent EI = σ φ(0)
        assert!((expected_improvement(1.0, 2.0, 1.0) - 2.0 * norm_pdf(0.0)).abs() < 1e-15);
        assert_eq!(log_expected_improvement(0.3, 0.0, 0.3), f64::NEG_INFINITY);
    }

    #[test]
    fn log_ei_matches_direct_and_stays_finite() {
        for z in [-9.0, -5.0, -1.0, 0.0, 2.0] {
            let direct = expected_improvement(z, 1.0, 0.0).ln();
            assert!((log_expected_improvement(z, 1.0, 0.0) - direct).abs() < 1e-9 * direct.abs().max(1.0));
        }
        // both branches agree at the switch point
        let s = TAIL;
        assert!((log_h(s + 1e-9) - log_h(s - 1e-9)).abs() < 1e-6);
        assert!((dlog_h(s + 1e-9) - dlog_h(s - 1e-9)).abs() < 1e-6);
        assert!(log_h(-60.0).is_finite());
    }

    #[test]
    fn dlog_h_is_the_derivative() {
        for z in [-30.0, -12.0, -3.0, 0.0, 1.5] {
            let fd = (log_h(z + 1e-6) - log_h(z - 1e-6)) / 2e-6;
            assert!((dlog_h(z) - fd).abs() < 1e-5 * fd.abs().max(1.0), "{z}");
        }
    }

    #[test]
    fn halton_is_in_the_cube_and_distinct() {
        let mut r = rng::stream(1, 4);
        let pts = shifted_halton(256, 5, &mut r);
        assert_eq!(pts.len(), 256);
        assert!(pts.iter().flatten().all(|c| (0.0..1.0).contains(c)));
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(primes(5), vec![2, 3, 5, 7, 11]);
    }

    #[test]
    fn standardization_imputes_failures() {
        let y = standardize(&[1.0, 3.0, f64::NEG_INFINITY]).unwrap();
        assert_eq!(y, vec![-1.0, 1.0, -2.0]);
        assert!(standardize(&[f64::NEG_INFINITY]).is_none());
    }
}
