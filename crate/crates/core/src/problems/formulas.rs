//! Scalar formulas shared by the task formulations.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulaError {
    #[error("violation {value} of `{name}` outside [0, 1]")]
    ViolationOutOfRange { name: String, value: f64 },
    #[error("penalty weight must be non-negative, got {0}")]
    NegativePenalty(f64),
    #[error("lift coefficient must be positive, got {0}")]
    NonPositiveLift(f64),
    #[error("values and weights differ in length ({values} vs {weights})")]
    LengthMismatch { values: usize, weights: usize },
    #[error("empty input")]
    Empty,
    #[error("weights must be non-negative and not all zero")]
    BadWeights,
    #[error("bisection interval [{lo}, {hi}] is empty")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("bisection needs at least one iteration")]
    NoIterations,
    #[error("reference area must be positive, got {0}")]
    NonPositiveArea(f64),
}

/// Free-stream dynamic pressure of the car task, Pa.
pub const CAR_DYNAMIC_PRESSURE: f64 = 1000.0;
/// Frontal reference area of the car task, m².
pub const CAR_REFERENCE_AREA: f64 = 2.37;

/// Penalty composition in the maximization sense: `raw − λ·Σv`.
///
/// For a minimization objective pass the negated objective, which yields
/// `−(objective + λ·Σv)`.
pub fn penalized_reward<'a, I>(raw: f64, violations: I, lambda: f64) -> Result<f64, FormulaError>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    if lambda < 0.0 || lambda.is_nan() {
        return Err(FormulaError::NegativePenalty(lambda));
    }
    let mut total = 0.0;
    for (name, v) in violations {
        if !(0.0..=1.0).contains(&v) {
            return Err(FormulaError::ViolationOutOfRange { name: name.to_string(), value: v });
        }
        total += v;
    }
    if total == 0.0 {
        return Ok(raw);
    }
    Ok(raw - lambda * total)
}

/// Fixed-lift polar Reynolds schedule: `Re = 5e5 · (CL / 1.25)^(−1/2)`.
pub fn reynolds_schedule(cl: f64) -> Result<f64, FormulaError> {
    if !(cl > 0.0) {
        return Err(FormulaError::NonPositiveLift(cl));
    }
    Ok(500_000.0 * (1.25 / cl).sqrt())
}

/// `Σ wᵢ vᵢ / Σ wᵢ`. With weights that already sum to one this is the
/// mission-style weighted sum.
pub fn weighted_multipoint(values: &[f64], weights: &[f64]) -> Result<f64, FormulaError> {
    if values.len() != weights.len() {
        return Err(FormulaError::LengthMismatch { values: values.len(), weights: weights.len() });
    }
    if values.is_empty() {
        return Err(FormulaError::Empty);
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(FormulaError::BadWeights);
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(FormulaError::BadWeights);
    }
    let dot: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    Ok(dot / total)
}

/// Worst case over operating points.
pub fn robust_min(values: &[f64]) -> Result<f64, FormulaError> {
    values.iter().copied().reduce(f64::min).ok_or(FormulaError::Empty)
}

/// Outcome of a lift-targeted angle-of-attack search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSolution {
    pub alpha: f64,
    /// False when the target lies outside `[cl(lo), cl(hi)]`; `alpha` is then
    /// the endpoint whose lift is closer to the target.
    pub bracketed: bool,
}

/// Bisection for `cl(α) = target` on `[lo, hi]` with exactly `iters` halvings.
///
/// `cl` must be increasing in α. The result is the midpoint of the final
/// bracket, so the error is at most `(hi − lo) / 2^iters`.
pub fn bisect_alpha_to_cl<F, E>(mut cl: F, target: f64, lo: f64, hi: f64, iters: u32) -> Result<AlphaSolution, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    E: From<FormulaError>,
{
    if !(lo < hi) {
        return Err(FormulaError::EmptyInterval { lo, hi }.into());
    }
    if iters == 0 {
        return Err(FormulaError::NoIterations.into());
    }
    let cl_lo = cl(lo)?;
    let cl_hi = cl(hi)?;
    if target < cl_lo || target > cl_hi {
        let alpha = if (cl_lo - target).abs() <= (cl_hi - target).abs() { lo } else { hi };
        return Ok(AlphaSolution { alpha, bracketed: false });
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..iters - 1 {
        let mid = 0.5 * (a + b);
        if cl(mid)? < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(AlphaSolution { alpha: 0.5 * (a + b), bracketed: true })
}

/// One surface cell of an integrated-drag evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCell {
    pub cp: f64,
    pub cfx: f64,
    pub area: f64,
    pub nx: f64,
}

/// `C_D = (1/S_ref) · Σ (Cp·A·nx + Cfx·A)`.
pub fn integrated_drag(cells: &[SurfaceCell], s_ref: f64) -> Result<f64, FormulaError> {
    if !(s_ref > 0.0) {
        return Err(FormulaError::NonPositiveArea(s_ref));
    }
    let sum: f64 = cells.iter().map(|c| c.cp * c.area * c.nx + c.cfx * c.area).sum();
    Ok(sum / s_ref)
}

/// Car drag coefficient from pressure and shear drag forces (N).
pub fn car_drag_coefficient(f_pressure: f64, f_shear: f64) -> f64 {
    (f_pressure + f_shear) / (CAR_DYNAMIC_PRESSURE * CAR_REFERENCE_AREA)
}

/// Fractional violation of `value ≥ bound`, reaching 1 at `bound − scale`.
pub fn violation_at_least(value: f64, bound: f64, scale: f64) -> f64 {
    ((bound - value) / scale).clamp(0.0, 1.0)
}

/// Fractional violation of `value ≤ bound`, reaching 1 at `bound + scale`.
pub fn violation_at_most(value: f64, bound: f64, scale: f64) -> f64 {
    ((value - bound) / scale).clamp(0.0, 1.0)
}

/// Fractional violation of `value = target`: `min(1, |value − target| / tolerance)`.
pub fn violation_equal(value: f64, target: f64, tolerance: f64) -> f64 {
    ((value - target).abs() / tolerance).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_examples() {
        assert_eq!(penalized_reward(300.0, [("te", 1.0)], 500.0).unwrap(), -200.0);
        assert_eq!(penalized_reward(42.5, [], 500.0).unwrap(), 42.5);
        assert_eq!(penalized_reward(42.5, [("a", 0.0)], 500.0).unwrap(), 42.5);
        // 10 − 500·0.35 by hand
        let r = penalized_reward(10.0, [("a", 0.1), ("b", 0.25)], 500.0).unwrap();
        assert!((r - -165.0).abs() < 1e-12);
        assert!(matches!(
            penalized_reward(1.0, [("a", 1.5)], 500.0),
            Err(FormulaError::ViolationOutOfRange { .. })
        ));
        assert!(penalized_reward(1.0, [], -1.0).is_err());
    }

    #[test]
    fn reynolds_examples() {
        assert_eq!(reynolds_schedule(1.25).unwrap(), 500_000.0);
        assert!((reynolds_schedule(0.8).unwrap() / 625_000.0 - 1.0).abs() < 1e-12);
        // 500000 / sqrt(1.28) = 441941.738241592...
        assert!((reynolds_schedule(1.6).unwrap() - 441_941.738_241_592_2).abs() < 1e-6);
        assert!(reynolds_schedule(0.0).is_err());
        assert!(reynolds_schedule(-0.3).is_err());
    }

    #[test]
    fn multipoint_examples() {
        let cl = [0.8, 1.0, 1.2, 1.4, 1.5, 1.6];
        let w = [5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(w.iter().sum::<f64>(), 45.0);
        // 4 + 6 + 8.4 + 11.2 + 13.5 + 16 = 59.1
        assert!((weighted_multipoint(&cl, &w).unwrap() - 59.1 / 45.0).abs() < 1e-12);
        assert_eq!(weighted_multipoint(&[3.5], &[2.0]).unwrap(), 3.5);
        assert!((weighted_multipoint(&[1.0, 2.0, 6.0], &[1.0; 3]).unwrap() - 3.0).abs() < 1e-15);
        assert!(weighted_multipoint(&[1.0], &[1.0, 2.0]).is_err());
        assert!(weighted_multipoint(&[1.0, 2.0], &[0.0, 0.0]).is_err());
        assert!(weighted_multipoint(&[], &[]).is_err());
    }

    #[test]
    fn robust_min_examples() {
        assert_eq!(robust_min(&[12.1, 9.8, 14.0]).unwrap(), 9.8);
        assert_eq!(robust_min(&[7.0]).unwrap(), 7.0);
        assert_eq!(robust_min(&[2.0; 4]).unwrap(), 2.0);
        assert_eq!(robust_min(&[]), Err(FormulaError::Empty));
    }

    #[test]
    fn bisection_examples() {
        let sol = bisect_alpha_to_cl::<_, FormulaError>(|a| Ok(0.05 * a), 0.206, -5.0, 12.0, 8).unwrap();
        assert!(sol.bracketed);
        assert!((sol.alpha - 4.12).abs() <= 17.0 / 256.0);

        // target at the midpoint lift
        let sol = bisect_alpha_to_cl::<_, FormulaError>(|a| Ok(0.05 * a), 0.05 * 3.5, -5.0, 12.0, 8).unwrap();
        assert!((sol.alpha - 3.5).abs() <= 17.0 / 256.0);

        let sol = bisect_alpha_to_cl::<_, FormulaError>(|a| Ok(0.05 * a), 2.0, -5.0, 12.0, 8).unwrap();
        assert_eq!(sol, AlphaSolution { alpha: 12.0, bracketed: false });
        let sol = bisect_alpha_to_cl::<_, FormulaError>(|a| Ok(0.05 * a), -2.0, -5.0, 12.0, 8).unwrap();
        assert_eq!(sol, AlphaSolution { alpha: -5.0, bracketed: false });

        assert!(bisect_alpha_to_cl::<_, FormulaError>(|a| Ok(a), 0.0, 1.0, 1.0, 8).is_err());
        assert!(bisect_alpha_to_cl::<_, FormulaError>(|a| Ok(a), 0.0, -1.0, 1.0, 0).is_err());
    }

    #[test]
    fn bisection_counts_evaluations() {
        let mut calls = 0;
        bisect_alpha_to_cl::<_, FormulaError>(
            |a| {
                calls += 1;
                Ok(a)
            },
            0.3,
            -5.0,
            12.0,
            8,
        )
        .unwrap();
        // two endpoint probes plus seven interior halvings
        assert_eq!(calls, 9);
    }

    #[test]
    fn integrated_drag_examples() {
        let friction = SurfaceCell { cp: 0.0, cfx: 0.004, area: 1.0, nx: 0.0 };
        assert_eq!(integrated_drag(&[friction], 1.0).unwrap(), 0.004);
        let a = SurfaceCell { cp: 0.7, cfx: 0.0, area: 2.0, nx: 0.6 };
        let b = SurfaceCell { nx: -0.6, ..a };
        assert_eq!(integrated_drag(&[a, b], 3.0).unwrap(), 0.0);
        assert!(integrated_drag(&[a], 0.0).is_err());
    }

    #[test]
    fn car_cd_examples() {
        let cd = car_drag_coefficient(120.70740509033203, 33.71821975708008);
        assert!((cd - 0.06515849149679837).abs() < 1e-15);
        assert_eq!(car_drag_coefficient(0.0, 0.0), 0.0);
        assert!((car_drag_coefficient(2000.0, 370.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn violation_rules() {
        assert_eq!(violation_at_least(0.2, 0.128, 0.128), 0.0);
        assert_eq!(violation_at_least(0.0, 0.128, 0.128), 1.0);
        assert!((violation_at_least(0.064, 0.128, 0.128) - 0.5).abs() < 1e-15);
        assert_eq!(violation_at_most(0.3, 0.1, 0.05), 1.0);
        assert_eq!(violation_equal(180.0, 180.0, 1.0), 0.0);
        assert_eq!(violation_equal(179.5, 180.0, 1.0), 0.5);
        assert_eq!(violation_equal(90.0, 180.0, 1.0), 1.0);
    }
}
