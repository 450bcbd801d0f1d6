//! Seeded smooth landscapes on the unit cube.
//!
//! `g(z) = Σ tⱼ (2zⱼ − 1) + Σₖ aₖ exp(−½ Σⱼ ((zⱼ − cₖⱼ) / sₖⱼ)²)`
//!
//! with `Σ|tⱼ| = 1` and `Σ|aₖ| = 1`, so `g ∈ [−2, 2]` everywhere. The number of
//! bumps is drawn from `5..=20`, centres uniformly from the cube and widths
//! from `[0.15, 0.5]` independently per axis.

use rand::Rng;

use crate::rng;

#[derive(Debug, Clone, PartialEq)]
struct Bump {
    amplitude: f64,
    centre: Vec<f64>,
    width: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    trend: Vec<f64>,
    bumps: Vec<Bump>,
}

pub const MIN_WIDTH: f64 = 0.15;
pub const MAX_WIDTH: f64 = 0.5;

impl Landscape {
    /// Landscape number `index` of the stand-in seeded by `seed`.
    pub fn seeded(seed: u64, index: u64, dim: usize) -> Self {
        let mut rng = rng::stream(seed, 1000 + index);
        let mut trend: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        normalize_l1(&mut trend);
        let n = rng.random_range(5..=20);
        let mut amps: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        normalize_l1(&mut amps);
        let bumps = amps
            .into_iter()
            .map(|amplitude| Bump {
                amplitude,
                centre: (0..dim).map(|_| rng.random()).collect(),
                width: (0..dim).map(|_| rng.random_range(MIN_WIDTH..MAX_WIDTH)).collect(),
            })
            .collect();
        Self { trend, bumps }
    }

    pub fn dim(&self) -> usize {
        self.trend.len()
    }

    pub fn bump_count(&self) -> usize {
        self.bumps.len()
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let mut g: f64 = self.trend.iter().zip(z).map(|(t, x)| t * (2.0 * x - 1.0)).sum();
        for b in &self.bumps {
            g += b.amplitude * (-0.5 * b.exponent(z)).exp();
        }
        g
    }

    /// Value and analytic gradient.
    pub fn value_and_gradient(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let mut grad: Vec<f64> = self.trend.iter().map(|t| 2.0 * t).collect();
        let mut g: f64 = self.trend.iter().zip(z).map(|(t, x)| t * (2.0 * x - 1.0)).sum();
        for b in &self.bumps {
            let e = b.amplitude * (-0.5 * b.exponent(z)).exp();
            g += e;
            for j in 0..z.len() {
                grad[j] -= e * (z[j] - b.centre[j]) / (b.width[j] * b.width[j]);
            }
        }
        (g, grad)
    }

    /// `(g + 2) / 4`, mapped into `[0, 1]`.
    pub fn unit(&self, z: &[f64]) -> f64 {
        ((self.value(z) + 2.0) / 4.0).clamp(0.0, 1.0)
    }
}

impl Bump {
    fn exponent(&self, z: &[f64]) -> f64 {
        z.iter().zip(&self.centre).zip(&self.width).map(|((x, c), w)| ((x - c) / w).powi(2)).sum()
    }
}

fn normalize_l1(v: &mut [f64]) {
    let s: f64 = v.iter().map(|x| x.abs()).sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
}
