//! Exact Gaussian process regression with a Matérn-5/2 kernel.
//!
//! ```text
//! k(x, x') = σ_f² (1 + √5 r + 5r²/3) exp(−√5 r),   r² = Σ_k (x_k − x'_k)² / ℓ_k²
//! ```
//!
//! One lengthscale is shared by all dimensions unless the hyperparameters
//! carry one per dimension. Hyperparameters are fitted by maximizing the
//! log marginal likelihood over log-parameters with [`lbfgsb::minimize`]
//! from several starts, using the analytic gradient
//! `½ tr((ααᵀ − K⁻¹) ∂K/∂θ)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use super::lbfgsb::{self, LbfgsbSettings, Smooth};

/// First jitter added when a kernel matrix is not numerically positive
/// definite; doubled up to [`MAX_JITTER`].
pub const MIN_JITTER: f64 = 1e-8;
pub const MAX_JITTER: f64 = 1e-4;

const SQRT5: f64 = 2.23606797749979;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("kernel matrix of {n} points is not positive definite even with jitter {max_jitter:e}")]
    NotPositiveDefinite { n: usize, max_jitter: f64 },
    #[error("no training data")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyper {
    /// One entry (shared) or one per dimension.
    pub lengthscales: Vec<f64>,
    /// Signal variance `σ_f²`.
    pub signal: f64,
    /// Observation noise variance.
    pub noise: f64,
}

impl Hyper {
    fn to_log(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        t.push(self.signal.ln());
        t.push(self.noise.ln());
        t
    }

    fn from_log(t: &[f64]) -> Self {
        let k = t.len() - 2;
        Self { lengthscales: t[..k].iter().map(|v| v.exp()).collect(), signal: t[k].exp(), noise: t[k + 1].exp() }
    }

    fn scaled_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        if self.lengthscales.len() == 1 {
            let l2 = self.lengthscales[0] * self.lengthscales[0];
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / l2
        } else {
            a.iter().zip(b).zip(&self.lengthscales).map(|((x, y), l)| ((x - y) / l).powi(2)).sum()
        }
    }

    fn lengthscale(&self, k: usize) -> f64 {
        if self.lengthscales.len() == 1 {
            self.lengthscales[0]
        } else {
            self.lengthscales[k]
        }
    }

    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = self.scaled_sq(a, b).sqrt();
        self.signal * (1.0 + SQRT5 * r + 5.0 * r * r / 3.0) * (-SQRT5 * r).exp()
    }

    /// `σ_f²·(5/3)(1 + √5 r) exp(−√5 r)`, the common factor of every
    /// kernel derivative.
    fn slope(&self, r: f64) -> f64 {
        self.signal * 5.0 / 3.0 * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp()
    }
}

/// Factorization with the smallest jitter that succeeds.
pub fn cholesky_with_jitter(k: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64), GpError> {
    if let Some(c) = Cholesky::new(k.clone()) {
        return Ok((c, 0.0));
    }
    let n = k.nrows();
    let mut jitter = MIN_JITTER;
    while jitter <= MAX_JITTER {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(kj) {
            return Ok((c, jitter));
        }
        jitter *= 2.0;
    }
    Err(GpError::NotPositiveDefinite { n, max_jitter: MAX_JITTER })
}

/// A GP conditioned on data with fixed hyperparameters.
#[derive(Debug, Clone)]
pub struct Gp {
    x: Vec<Vec<f64>>,
    y: DVector<f64>,
    hyper: Hyper,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl Gp {
    pub fn new(x: Vec<Vec<f64>>, y: &[f64], hyper: Hyper) -> Result<Self, GpError> {
        if x.is_empty() {
            return Err(GpError::Empty);
        }
        let n = x.len();
        let mut k = DMatrix::from_fn(n, n, |i, j| hyper.kernel(&x[i], &x[j]));
        for i in 0..n {
            k[(i, i)] += hyper.noise;
        }
        let (chol, jitter) = cholesky_with_jitter(&k)?;
        let y = DVector::from_column_slice(y);
        let alpha = chol.solve(&y);
        Ok(Self { x, y, hyper, chol, alpha, jitter })
    }

    pub fn hyper(&self) -> &Hyper {
        &self.hyper
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.x.len() as f64;
        let logdet: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * self.y.dot(&self.alpha) - logdet - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }

    fn cross(&self, z: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| self.hyper.kernel(z, xi)))
    }

    /// Posterior mean and latent variance at `z`.
    pub fn predict(&self, z: &[f64]) -> (f64, f64) {
        let ks = self.cross(z);
        let mean = ks.dot(&self.alpha);
        let v = self.chol.l_dirty().solve_lower_triangular(&ks).expect("triangular solve");
        (mean, (self.hyper.signal - v.dot(&v)).max(0.0))
    }

    /// Mean, variance and their gradients with respect to `z`.
    pub fn predict_with_gradient(&self, z: &[f64]) -> (f64, f64, Vec<f64>, Vec<f64>) {
        let d = z.len();
        let ks = self.cross(z);
        let mean = ks.dot(&self.alpha);
        let beta = self.chol.solve(&ks);
        let var = (self.hyper.signal - ks.dot(&beta)).max(0.0);
        let mut dm = vec![0.0; d];
        let mut dv = vec![0.0; d];
        for (i, xi) in self.x.iter().enumerate() {
            let r = self.hyper.scaled_sq(z, xi).sqrt();
            let s = self.hyper.slope(r);
            for k in 0..d {
                let l = self.hyper.lengthscale(k);
                let dk = -s * (z[k] - xi[k]) / (l * l);
                dm[k] += self.alpha[i] * dk;
                dv[k] -= 2.0 * beta[i] * dk;
            }
        }
        (mean, var, dm, dv)
    }
}

/// Bounds for the hyperparameter search (natural units).
#[derive(Debug, Clone, PartialEq)]
pub struct HyperBounds {
    pub lengthscale: (f64, f64),
    pub signal: (f64, f64),
    pub noise: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self { lengthscale: (0.01, 20.0), signal: (0.05, 20.0), noise: (1e-6, 1.0) }
    }
}

impl HyperBounds {
    fn log_box(&self, n_scales: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![self.lengthscale.0.ln(); n_scales];
        let mut hi = vec![self.lengthscale.1.ln(); n_scales];
        lo.extend([self.signal.0.ln(), self.noise.0.ln()]);
        hi.extend([self.signal.1.ln(), self.noise.1.ln()]);
        (lo, hi)
    }
}

/// Negative log marginal likelihood over log-hyperparameters.
struct NegMll<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    cache: Option<(Vec<f64>, Gp)>,
}

impl NegMll<'_> {
    fn gp(&mut self, t: &[f64]) -> Option<&Gp> {
        let hit = matches!(&self.cache, Some((ct, _)) if ct.as_slice() == t);
        if !hit {
            self.cache = Gp::new(self.x.to_vec(), self.y, Hyper::from_log(t)).ok().map(|gp| (t.to_vec(), gp));
        }
        self.cache.as_ref().map(|(_, gp)| gp)
    }
}

impl Smooth for NegMll<'_> {
    type Error = GpError;

    fn value(&mut self, t: &[f64]) -> Result<f64, GpError> {
        Ok(self.gp(t).map_or(f64::INFINITY, |gp| -gp.log_marginal_likelihood()))
    }

    fn gradient(&mut self, t: &[f64]) -> Result<Vec<f64>, GpError> {
        let x = self.x;
        let gp = self.gp(t).ok_or(GpError::NotPositiveDefinite { n: x.len(), max_jitter: MAX_JITTER })?;
        let n = x.len();
        let h = &gp.hyper;
        let kinv = gp.chol.inverse();
        // W = ααᵀ − K⁻¹
        let w = &gp.alpha * gp.alpha.transpose() - kinv;
        let n_scales = h.lengthscales.len();
        let mut grad = vec![0.0; n_scales + 2];
        for a in 0..n {
            for b in 0..n {
                let wab = w[(a, b)];
                let r = h.scaled_sq(&x[a], &x[b]).sqrt();
                let kf = h.kernel(&x[a], &x[b]);
                grad[n_scales] += wab * kf;
                if a == b {
                    grad[n_scales + 1] += wab * h.noise;
                    continue;
                }
                let s = h.slope(r);
                if n_scales == 1 {
                    grad[0] += wab * s * r * r;
                } else {
                    for k in 0..n_scales {
                        grad[k] += wab * s * ((x[a][k] - x[b][k]) / h.lengthscales[k]).powi(2);
                    }
                }
            }
        }
        Ok(grad.into_iter().map(|g| -0.5 * g).collect())
    }
}

/// Result of a hyperparameter fit.
#[derive(Debug, Clone)]
pub struct Fit {
    pub gp: Gp,
    /// Accepted log-likelihood values per start, in order.
    pub traces: Vec<Vec<f64>>,
}

/// Fits hyperparameters from each start and keeps the best likelihood.
pub fn fit(
    x: &[Vec<f64>],
    y: &[f64],
    starts: &[Hyper],
    bounds: &HyperBounds,
    maxiter: usize,
) -> Result<Fit, GpError> {
    if x.is_empty() {
        return Err(GpError::Empty);
    }
    let settings = LbfgsbSettings { maxiter, ftol: 1e-10, gtol: 1e-6, ..LbfgsbSettings::default() };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut traces = Vec::with_capacity(starts.len());
    for start in starts {
        let (lo, hi) = bounds.log_box(start.lengthscales.len());
        let mut f = NegMll { x, y, cache: None };
        let m = lbfgsb::minimize(&mut f, &start.to_log(), &lo, &hi, &settings)?;
        traces.push(m.history.iter().map(|v| -v).collect());
        if m.f.is_finite() && best.as_ref().is_none_or(|(bf, _)| m.f < *bf) {
            best = Some((m.f, m.x));
        }
    }
    let (_, t) = best.ok_or(GpError::NotPositiveDefinite { n: x.len(), max_jitter: MAX_JITTER })?;
    Ok(Fit { gp: Gp::new(x.to_vec(), y, Hyper::from_log(&t))?, traces })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 11.0, ((i * 7) % 12) as f64 / 11.0]).collect();
        let y = x.iter().map(|p| (6.0 * p[0]).sin() + p[1] * p[1]).collect();
        (x, y)
    }

    #[test]
    fn noiseless_interpolation() {
        let (x, y) = data();
        let gp = Gp::new(x.clone(), &y, Hyper { lengthscales: vec![0.3], signal: 1.0, noise: 0.0 }).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let (m, v) = gp.predict(xi);
            assert!((m - yi).abs() < 1e-8, "{m} vs {yi}");
            assert!(v <= 1e-8);
        }
    }

    #[test]
    fn kernel_shape() {
        let h = Hyper { lengthscales: vec![0.5], signal: 2.0, noise: 0.0 };
        assert_eq!(h.kernel(&[0.1], &[0.1]), 2.0);
        let r: f64 = 0.4 / 0.5;
        let want = 2.0 * (1.0 + 5f64.sqrt() * r + 5.0 * r * r / 3.0) * (-(5f64.sqrt()) * r).exp();
        assert!((h.kernel(&[0.1], &[0.5]) - want).abs() < 1e-15);
    }

    #[test]
    fn prediction_gradient_matches_differences() {
        let (x, y) = data();
        for ls in [vec![0.3], vec![0.2, 0.6]] {
            let gp = Gp::new(x.clone(), &y, Hyper { lengthscales: ls, signal: 1.3, noise: 1e-4 }).unwrap();
            let z = [0.37, 0.61];
            let (_, _, dm, dv) = gp.predict_with_gradient(&z);
            for k in 0..2 {
                let mut a = z;
                let mut b = z;
                a[k] += 1e-6;
                b[k] -= 1e-6;
                let (ma, va) = gp.predict(&a);
                let (mb, vb) = gp.predict(&b);
                assert!((dm[k] - (ma - mb) / 2e-6).abs() < 1e-5);
                assert!((dv[k] - (va - vb) / 2e-6).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn likelihood_gradient_matches_differences() {
        let (x, y) = data();
        for t in [vec![(0.3f64).ln(), 0.2, (1e-3f64).ln()], vec![(0.2f64).ln(), (0.7f64).ln(), 0.1, (1e-2f64).ln()]] {
            let mut f = NegMll { x: &x, y: &y, cache: None };
            let g = f.gradient(&t).unwrap();
            for k in 0..t.len() {
                let mut a = t.clone();
                let mut b = t.clone();
                a[k] += 1e-6;
                b[k] -= 1e-6;
                let fd = (f.value(&a).unwrap() - f.value(&b).unwrap()) / 2e-6;
                assert!((g[k] - fd).abs() < 1e-5 * fd.abs().max(1.0), "{k}: {} vs {fd}", g[k]);
            }
        }
    }

    #[test]
    fn fit_improves_likelihood_monotonically() {
        let (x, y) = data();
        let starts = [
            Hyper { lengthscales: vec![1.0], signal: 1.0, noise: 0.1 },
            Hyper { lengthscales: vec![0.05], signal: 5.0, noise: 1e-3 },
        ];
        let fit = fit(&x, &y, &starts, &HyperBounds::default(), 50).unwrap();
        for trace in &fit.traces {
            assert!(trace.windows(2).all(|w| w[1] >= w[0]));
        }
        let start_ll = Gp::new(x.clone(), &y, starts[0].clone()).unwrap().log_marginal_likelihood();
        assert!(fit.gp.log_marginal_likelihood() >= start_ll);
    }

    #[test]
    fn duplicate_points_need_jitter() {
        let x = vec![vec![0.5], vec![0.5]];
        let gp = Gp::new(x, &[1.0, 1.0], Hyper { lengthscales: vec![0.3], signal: 1.0, noise: 0.0 }).unwrap();
        assert!(gp.jitter() >= MIN_JITTER);
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky_with_jitter(&k), Err(GpError::NotPositiveDefinite { .. })));
    }
}
