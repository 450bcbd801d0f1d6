//! Covariance matrix adaptation evolution strategy.
//!
//! Strategy constants follow the standard defaults as functions of the
//! dimension `n`, population `λ` and parent number `μ = ⌊λ/2⌋`:
//!
//! ```text
//! wᵢ ∝ ln((λ+1)/2) − ln i,  Σ wᵢ = 1,  μ_eff = 1 / Σ wᵢ²
//! c_σ = (μ_eff + 2) / (n + μ_eff + 5)
//! d_σ = 1 + 2·max(0, √((μ_eff − 1)/(n + 1)) − 1) + c_σ
//! c_c = (4 + μ_eff/n) / (n + 4 + 2·μ_eff/n)
//! c₁  = 2 / ((n + 1.3)² + μ_eff)
//! c_μ = min(1 − c₁, 2·(μ_eff − 2 + 1/μ_eff) / ((n + 2)² + μ_eff))
//! E‖N(0, I)‖ ≈ √n·(1 − 1/(4n) + 1/(21n²))
//! ```
//!
//! Offspring are clipped into the unit cube before evaluation and the
//! update uses the clipped steps, so the mean never leaves the box.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{argmax, Exhausted, MethodReport, Objective, Observation};
use crate::rng::{self, streams, BenchRng};

/// Smallest eigenvalue kept in the covariance matrix.
pub const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CmaesSettings {
    /// Offspring per generation; `4 + ⌊3 ln n⌋` when unset.
    pub population: Option<usize>,
    /// Initial step size in unit-cube coordinates.
    pub sigma0: f64,
}

impl Default for CmaesSettings {
    fn default() -> Self {
        Self { population: None, sigma0: 0.3 }
    }
}

impl CmaesSettings {
    pub fn check(&self) -> Result<(), String> {
        if self.population.is_some_and(|l| l < 2) {
            return Err("cmaes: population must be at least 2".into());
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err("cmaes: sigma0 must be positive".into());
        }
        Ok(())
    }

    pub fn lambda(&self, n: usize) -> usize {
        self.population.unwrap_or_else(|| default_population(n))
    }
}

pub fn default_population(n: usize) -> usize {
    4 + (3.0 * (n.max(1) as f64).ln()).floor() as usize
}

/// Strategy constants for one `(n, λ)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c1: f64,
    pub c_mu: f64,
    pub chi_n: f64,
}

impl Params {
    pub fn new(n: usize, lambda: usize) -> Self {
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu).map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self { lambda, mu, weights, mu_eff, c_sigma, d_sigma, c_c, c1, c_mu, chi_n }
    }
}

/// Ask/tell state of one CMA-ES instance.
#[derive(Debug, Clone)]
pub struct Cma {
    pub params: Params,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    generation: usize,
}

impl Cma {
    pub fn new(mean: &[f64], sigma: f64, lambda: usize) -> Self {
        let n = mean.len();
        Self {
            params: Params::new(n, lambda),
            mean: DVector::from_column_slice(mean),
            sigma,
            cov: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            generation: 0,
        }
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// `λ` offspring `clip(m + σ·B·D·z)` with `z ~ N(0, I)`.
    pub fn ask(&self, rng: &mut BenchRng) -> Vec<Vec<f64>> {
        let n = self.mean.len();
        (0..self.params.lambda)
            .map(|_| {
                let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let y = &self.basis * z.component_mul(&self.scales);
                (0..n).map(|j| (self.mean[j] + self.sigma * y[j]).clamp(0.0, 1.0)).collect()
            })
            .collect()
    }

    /// Updates the distribution from evaluated offspring (larger reward is
    /// better). Returns a warning when eigenvalues had to be floored.
    pub fn tell(&mut self, offspring: &[Vec<f64>], rewards: &[f64]) -> Option<String> {
        let p = &self.params;
        let n = self.mean.len();
        let mut order: Vec<usize> = (0..offspring.len()).collect();
        order.sort_by(|&a, &b| rewards[b].total_cmp(&rewards[a]).then(a.cmp(&b)));
        let steps: Vec<DVector<f64>> = order[..p.mu]
            .iter()
            .map(|&k| DVector::from_iterator(n, (0..n).map(|j| (offspring[k][j] - self.mean[j]) / self.sigma)))
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in p.weights.iter().zip(&steps) {
            y_w += *w * y;
        }
        self.mean += self.sigma * &y_w;
        // a convex combination of in-box points, up to rounding
        self.mean.apply(|m| *m = m.clamp(0.0, 1.0));

        let inv_sqrt = &self.basis * DMatrix::from_diagonal(&self.scales.map(|s| 1.0 / s)) * self.basis.transpose();
        self.p_sigma = (1.0 - p.c_sigma) * &self.p_sigma + (p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff).sqrt() * (inv_sqrt * &y_w);
        let gen = (self.generation + 1) as f64;
        let norm_ps = self.p_sigma.norm();
        let h_sigma = norm_ps / (1.0 - (1.0 - p.c_sigma).powf(2.0 * gen)).sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * p.chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        self.p_c = (1.0 - p.c_c) * &self.p_c + h * (p.c_c * (2.0 - p.c_c) * p.mu_eff).sqrt() * &y_w;

        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, y) in p.weights.iter().zip(&steps) {
            rank_mu += *w * y * y.transpose();
        }
        let decay = 1.0 - p.c1 - p.c_mu + (1.0 - h) * p.c1 * p.c_c * (2.0 - p.c_c);
        self.cov = decay * &self.cov + p.c1 * &self.p_c * self.p_c.transpose() + p.c_mu * rank_mu;
        self.sigma *= ((p.c_sigma / p.d_sigma) * (norm_ps / p.chi_n - 1.0)).exp();
        self.generation += 1;
        self.decompose()
    }

    fn decompose(&mut self) -> Option<String> {
        let sym = 0.5 * (&self.cov + self.cov.transpose());
        let eig = SymmetricEigen::new(sym);
        let floored = eig.eigenvalues.iter().filter(|v| !(**v >= EIGEN_FLOOR)).count();
        let values = eig.eigenvalues.map(|v| if v >= EIGEN_FLOOR { v } else { EIGEN_FLOOR });
        self.basis = eig.eigenvectors;
        self.scales = values.map(f64::sqrt);
        self.cov = &self.basis * DMatrix::from_diagonal(&values) * self.basis.transpose();
        self.cov = 0.5 * (&self.cov + self.cov.transpose());
        (floored > 0).then(|| {
            format!("generation {}: {floored} covariance eigenvalue(s) floored at {EIGEN_FLOOR:e}", self.generation)
        })
    }
}

/// Runs CMA-ES until the budget is spent. The mean starts at the best warm
/// start, or uniformly at random.
pub fn run(
    obj: &mut dyn Objective,
    settings: &CmaesSettings,
    seed: u64,
    warm: &[Observation],
    report: &mut MethodReport,
) -> Result<(), Exhausted> {
    let d = obj.dim();
    let mut rng = rng::stream(seed, streams::OPTIMIZER);
    let start = match argmax(&warm.iter().map(|o| o.reward).collect::<Vec<_>>()) {
        Some(i) => warm[i].z.clone(),
        None => (0..d).map(|_| rng.random::<f64>()).collect(),
    };
    let mut cma = Cma::new(&start, settings.sigma0, settings.lambda(d));
    loop {
        let offspring = cma.ask(&mut rng);
        let mut rewards = Vec::with_capacity(offspring.len());
        for x in &offspring {
            rewards.push(obj.evaluate(x)?);
        }
        if let Some(w) = cma.tell(&offspring, &rewards) {
            report.warnings.push(w);
        }
    }
}
