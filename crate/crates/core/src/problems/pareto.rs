//! Non-dominated filtering of objective vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Maximize,
    Minimize,
}

impl Sense {
    /// `+1` for maximization, `−1` for minimization.
    pub fn sign(self) -> f64 {
        match self {
            Sense::Maximize => 1.0,
            Sense::Minimize => -1.0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParetoError {
    #[error("no points given")]
    Empty,
    #[error("point {index} has {got} objectives, expected {expected}")]
    Ragged { index: usize, expected: usize, got: usize },
    #[error("point {0} has a NaN objective")]
    NaN(usize),
}

/// True when `a` is at least as good as `b` on every axis and strictly better
/// on one.
pub fn dominates(a: &[f64], b: &[f64], senses: &[Sense]) -> bool {
    let mut strictly = false;
    for ((x, y), s) in a.iter().zip(b).zip(senses) {
        let (x, y) = (x * s.sign(), y * s.sign());
        if x < y {
            return false;
        }
        if x > y {
            strictly = true;
        }
    }
    strictly
}

/// Indices of the non-dominated points, in input order. Duplicates of a
/// non-dominated vector are all kept.
///
/// Points are visited in lexicographic order of their sense-adjusted
/// objectives, so a point can only be dominated by one seen earlier. The scan
/// compares each point against the running front only.
pub fn pareto_front(points: &[Vec<f64>], senses: &[Sense]) -> Result<Vec<usize>, ParetoError> {
    let first = points.first().ok_or(ParetoError::Empty)?;
    let m = senses.len();
    if first.len() != m {
        return Err(ParetoError::Ragged { index: 0, expected: m, got: first.len() });
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != m {
            return Err(ParetoError::Ragged { index: i, expected: m, got: p.len() });
        }
        if p.iter().any(|v| v.is_nan()) {
            return Err(ParetoError::NaN(i));
        }
    }
    let key = |i: usize| -> Vec<f64> { points[i].iter().zip(senses).map(|(v, s)| -v * s.sign()).collect() };
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (key(a), key(b));
        ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        if !front.iter().any(|&j| dominates(&points[j], &points[i], senses)) {
            front.push(i);
        }
    }
    front.sort_unstable();
    Ok(front)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn brute_force(points: &[Vec<f64>], senses: &[Sense]) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| !(0..points.len()).any(|j| j != i && dominates(&points[j], &points[i], senses)))
            .collect()
    }

    #[test]
    fn small_cases() {
        let max2 = [Sense::Maximize; 2];
        assert_eq!(pareto_front(&[vec![1.0, 1.0], vec![2.0, 2.0]], &max2).unwrap(), vec![1]);
        assert_eq!(pareto_front(&[vec![1.0, 2.0], vec![2.0, 1.0]], &max2).unwrap(), vec![0, 1]);
        let min2 = [Sense::Minimize; 2];
        assert_eq!(pareto_front(&[vec![1.0, 1.0], vec![2.0, 2.0]], &min2).unwrap(), vec![0]);
        assert_eq!(pareto_front(&[vec![3.0, 3.0], vec![3.0, 3.0]], &max2).unwrap(), vec![0, 1]);
        assert_eq!(pareto_front(&[], &max2), Err(ParetoError::Empty));
        assert!(pareto_front(&[vec![1.0]], &max2).is_err());
    }

    #[test]
    fn matches_pairwise_oracle() {
        let mut rng = crate::rng::stream(11, 0);
        for _ in 0..200 {
            let n = rng.random_range(1..=60);
            let m = rng.random_range(1..=3);
            let senses: Vec<Sense> =
                (0..m).map(|_| if rng.random() { Sense::Maximize } else { Sense::Minimize }).collect();
            // coarse grid values so ties and duplicates occur
            let points: Vec<Vec<f64>> =
                (0..n).map(|_| (0..m).map(|_| rng.random_range(0..6) as f64).collect()).collect();
            assert_eq!(pareto_front(&points, &senses).unwrap(), brute_force(&points, &senses));
        }
    }
}
