//! Island-model evolution with power-law parent selection.
//!
//! Each island keeps an archive of its best designs. An iteration picks a
//! parent with probability `∝ rank^(−pw_alpha)` (rank 1 is the best),
//! asks a [`Proposer`] for `batch_size` children, clips and evaluates them.
//! Every `migration_interval` iterations the top `migration_rate` share of
//! each archive is copied to the next island in a ring.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{clamp_unit, Exhausted, MethodReport, Objective, Observation};
use crate::rng::{self, streams, BenchRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveSettings {
    pub batch_size: usize,
    pub pw_alpha: f64,
    pub num_islands: usize,
    pub migration_interval: usize,
    pub migration_rate: f64,
    pub archive_size: usize,
    /// Mutation standard deviation as a fraction of the box width.
    pub gaussian_scale: f64,
    pub gaussian_decay: bool,
    /// With decay on, the scale falls linearly to this fraction of
    /// `gaussian_scale` by the last iteration.
    pub gaussian_final_scale: f64,
    /// Uniform designs evaluated before the first iteration.
    pub initialize_n_sample: usize,
}

impl Default for EvolveSettings {
    fn default() -> Self {
        Self {
            batch_size: 5,
            pw_alpha: 3.0,
            num_islands: 1,
            migration_interval: 10,
            migration_rate: 0.1,
            archive_size: 100,
            gaussian_scale: 0.1,
            gaussian_decay: false,
            gaussian_final_scale: 0.1,
            initialize_n_sample: 0,
        }
    }
}

impl EvolveSettings {
    pub fn check(&self) -> Result<(), String> {
        if self.batch_size == 0 || self.num_islands == 0 || self.archive_size == 0 || self.migration_interval == 0 {
            return Err("evolve: batch_size, num_islands, archive_size and migration_interval must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.migration_rate) {
            return Err("evolve: migration_rate must be in [0, 1]".into());
        }
        if !(self.pw_alpha >= 0.0) || !(self.gaussian_scale >= 0.0) || !(self.gaussian_final_scale >= 0.0) {
            return Err("evolve: pw_alpha and scales must be nonnegative".into());
        }
        Ok(())
    }

    /// Mutation scale at `progress ∈ [0, 1]` through the run.
    pub fn scale_at(&self, progress: f64) -> f64 {
        if self.gaussian_decay {
            let p = progress.clamp(0.0, 1.0);
            self.gaussian_scale * ((1.0 - p) + p * self.gaussian_final_scale)
        } else {
            self.gaussian_scale
        }
    }
}

/// Best-first bounded archive; the worst member is evicted when full.
#[derive(Debug, Clone, Default)]
pub struct Archive {
    members: Vec<Observation>,
    capacity: usize,
}

impl Archive {
    pub fn new(capacity: usize) -> Self {
        Self { members: Vec::new(), capacity }
    }

    pub fn insert(&mut self, o: Observation) {
        // after existing equal rewards, so earlier members keep their rank
        let at = self.members.partition_point(|m| m.reward.total_cmp(&o.reward).is_ge());
        self.members.insert(at, o);
        self.members.truncate(self.capacity);
    }

    pub fn members(&self) -> &[Observation] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Index (0 = best) drawn with probability `∝ (index + 1)^(−alpha)`.
    pub fn select(&self, alpha: f64, rng: &mut BenchRng) -> usize {
        let weights: Vec<f64> = (1..=self.members.len()).map(|r| (r as f64).powf(-alpha)).collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        self.members.len() - 1
    }
}

/// Source of candidate designs around a parent.
pub trait Proposer {
    fn propose(&mut self, parent: &[f64], archive: &Archive, n: usize, progress: f64, rng: &mut BenchRng)
        -> Vec<Vec<f64>>;
}

/// Isotropic Gaussian mutation of the parent in unit-cube coordinates.
#[derive(Debug, Clone)]
pub struct GaussianProposer {
    settings: EvolveSettings,
}

impl GaussianProposer {
    pub fn new(settings: &EvolveSettings) -> Self {
        Self { settings: settings.clone() }
    }
}

impl Proposer for GaussianProposer {
    fn propose(&mut self, parent: &[f64], _: &Archive, n: usize, progress: f64, rng: &mut BenchRng) -> Vec<Vec<f64>> {
        let sigma = self.settings.scale_at(progress);
        (0..n).map(|_| parent.iter().map(|p| p + sigma * rng.sample::<f64, _>(StandardNormal)).collect()).collect()
    }
}

pub fn run(
    obj: &mut dyn Objective,
    settings: &EvolveSettings,
    seed: u64,
    warm: &[Observation],
    report: &mut MethodReport,
) -> Result<(), Exhausted> {
    run_with_proposer(obj, settings, seed, warm, report, &mut GaussianProposer::new(settings))
}

pub fn run_with_proposer(
    obj: &mut dyn Objective,
    settings: &EvolveSettings,
    seed: u64,
    warm: &[Observation],
    _report: &mut MethodReport,
    proposer: &mut dyn Proposer,
) -> Result<(), Exhausted> {
    let d = obj.dim();
    let mut rng = rng::stream(seed, streams::OPTIMIZER);
    let mut islands: Vec<Archive> = (0..settings.num_islands).map(|_| Archive::new(settings.archive_size)).collect();
    for o in warm {
        for island in &mut islands {
            island.insert(o.clone());
        }
    }
    let uniform = |rng: &mut BenchRng| -> Vec<f64> { (0..d).map(|_| rng.random()).collect() };
    for k in 0..settings.initialize_n_sample {
        let z = uniform(&mut rng);
        let reward = obj.evaluate(&z)?;
        islands[k % settings.num_islands].insert(Observation { z, reward });
    }

    let per_iter = settings.num_islands * settings.batch_size;
    let planned = (obj.remaining() / per_iter).max(1);
    for it in 0.. {
        let progress = if planned > 1 { it as f64 / (planned - 1) as f64 } else { 1.0 };
        for island in &mut islands {
            let children = if island.is_empty() {
                (0..settings.batch_size).map(|_| uniform(&mut rng)).collect()
            } else {
                let parent = island.members()[island.select(settings.pw_alpha, &mut rng)].z.clone();
                proposer.propose(&parent, island, settings.batch_size, progress, &mut rng)
            };
            for mut z in children {
                clamp_unit(&mut z);
                let reward = obj.evaluate(&z)?;
                island.insert(Observation { z, reward });
            }
        }
        if settings.num_islands > 1 && (it + 1) % settings.migration_interval == 0 {
            migrate(&mut islands, settings.migration_rate);
        }
    }
    unreachable!("the loop ends when the budget is exhausted")
}

/// Copies the top `rate` share of each island to its ring successor.
fn migrate(islands: &mut [Archive], rate: f64) {
    let n = islands.len();
    let movers: Vec<Vec<Observation>> = islands
        .iter()
        .map(|a| {
            let k = (rate * a.len() as f64).ceil() as usize;
            a.members()[..k.min(a.len())].to_vec()
        })
        .collect();
    for (i, group) in movers.into_iter().enumerate() {
        for o in group {
            islands[(i + 1) % n].insert(o);
        }
    }
}
