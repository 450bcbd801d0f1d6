//! Particle swarm with linearly scheduled coefficients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Exhausted, MethodReport, Objective, Observation};
use crate::rng::{self, streams, BenchRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoSettings {
    pub swarm_size: usize,
    /// Initial velocities are uniform in `±velocity_fraction` of the box width.
    pub velocity_fraction: f64,
    pub w: (f64, f64),
    pub c1: (f64, f64),
    pub c2: (f64, f64),
}

impl Default for PsoSettings {
    fn default() -> Self {
        Self { swarm_size: 20, velocity_fraction: 0.1, w: (0.8, 0.2), c1: (1.5, 0.5), c2: (0.2, 3.0) }
    }
}

impl PsoSettings {
    pub fn check(&self) -> Result<(), String> {
        if self.swarm_size < 2 {
            return Err("pso: swarm_size must be at least 2".into());
        }
        if !(self.velocity_fraction >= 0.0) {
            return Err("pso: velocity_fraction must be nonnegative".into());
        }
        Ok(())
    }
}

/// Linear interpolation from `a` at `t = 0` to `b` at `t = T`.
///
/// Written as `(1 − r)·a + r·b` so both endpoints are reproduced exactly.
fn schedule((a, b): (f64, f64), t: usize, total: usize) -> f64 {
    let r = if total == 0 { 0.0 } else { t as f64 / total as f64 };
    (1.0 - r) * a + r * b
}

/// `(w, c1, c2)` at iteration `t` of `total` with the default endpoints.
pub fn pso_coefficients(t: usize, total: usize) -> (f64, f64, f64) {
    coefficients(&PsoSettings::default(), t, total)
}

fn coefficients(s: &PsoSettings, t: usize, total: usize) -> (f64, f64, f64) {
    (schedule(s.w, t, total), schedule(s.c1, t, total), schedule(s.c2, t, total))
}

struct Swarm {
    x: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    p_f: Vec<f64>,
    g: Vec<f64>,
    g_f: f64,
}

impl Swarm {
    /// Evaluates the current positions and updates personal and global
    /// bests once the whole swarm is done.
    fn evaluate(&mut self, obj: &mut dyn Objective) -> Result<(), Exhausted> {
        let mut f = Vec::with_capacity(self.x.len());
        for x in &self.x {
            f.push(obj.evaluate(x)?);
        }
        for (i, fi) in f.iter().enumerate() {
            if *fi > self.p_f[i] {
                self.p_f[i] = *fi;
                self.p[i] = self.x[i].clone();
            }
        }
        if let Some(i) = super::argmax(&f) {
            if f[i] > self.g_f {
                self.g_f = f[i];
                self.g = self.x[i].clone();
            }
        }
        Ok(())
    }

    fn step(&mut self, (w, c1, c2): (f64, f64, f64), rng: &mut BenchRng) {
        for i in 0..self.x.len() {
            for j in 0..self.x[i].len() {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let x = self.x[i][j];
                self.v[i][j] = w * self.v[i][j] + c1 * r1 * (self.p[i][j] - x) + c2 * r2 * (self.g[j] - x);
                self.x[i][j] = (x + self.v[i][j]).clamp(0.0, 1.0);
            }
        }
    }
}

/// Runs the swarm for `⌊remaining / N⌋` generations, the initial one
/// included. A warm start better than the initial swarm seeds the global
/// best.
pub fn run(
    obj: &mut dyn Objective,
    settings: &PsoSettings,
    seed: u64,
    warm: &[Observation],
    _report: &mut MethodReport,
) -> Result<(), Exhausted> {
    let d = obj.dim();
    let n = settings.swarm_size;
    let mut rng = rng::stream(seed, streams::OPTIMIZER);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    let vmax = settings.velocity_fraction;
    let v: Vec<Vec<f64>> =
        (0..n).map(|_| (0..d).map(|_| if vmax > 0.0 { rng.random_range(-vmax..=vmax) } else { 0.0 }).collect()).collect();
    // a budget smaller than the swarm still gets a partial first generation
    let generations = (obj.remaining() / n).max(1);
    let mut swarm = Swarm { p: x.clone(), x, v, p_f: vec![f64::NEG_INFINITY; n], g: vec![0.5; d], g_f: f64::NEG_INFINITY };
    for o in warm {
        if o.reward > swarm.g_f {
            swarm.g_f = o.reward;
            swarm.g = o.z.clone();
        }
    }
    run_swarm(obj, settings, &mut swarm, generations, &mut rng)
}

fn run_swarm(
    obj: &mut dyn Objective,
    settings: &PsoSettings,
    swarm: &mut Swarm,
    generations: usize,
    rng: &mut BenchRng,
) -> Result<(), Exhausted> {
    if generations == 0 {
        return Ok(());
    }
    swarm.evaluate(obj)?;
    let total = generations - 1;
    for t in 0..total {
        swarm.step(coefficients(settings, t, total), rng);
        swarm.evaluate(obj)?;
    }
    Ok(())
}
