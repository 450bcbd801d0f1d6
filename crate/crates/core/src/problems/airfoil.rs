//! Class-shape (CST) airfoil geometry used by the airfoil stand-in.
//!
//! Surfaces follow the Kulfan form with class function `√x (1 − x)` and a
//! degree-7 Bernstein shape function per surface:
//!
//! ```text
//! y_u(x) = C(x) Σ uᵢ Bᵢ(x) + p_LE x (1 − x)^(7.5) + x t_TE / 2
//! y_l(x) = C(x) Σ ℓᵢ Bᵢ(x) + p_LE x (1 − x)^(7.5) − x t_TE / 2
//! ```

use std::sync::OnceLock;

/// Weights per surface.
pub const N_WEIGHTS: usize = 8;

/// Upper-surface weights of a least-squares CST fit to NACA 0012 (closed
/// trailing edge). The lower surface is the negation.
pub const NACA0012_UPPER: [f64; N_WEIGHTS] =
    [0.17296113, 0.15244337, 0.17400288, 0.13006695, 0.1651118, 0.13010883, 0.14786027, 0.14374724];

/// Leading-edge coefficient at which a surface counts as fully rounded.
pub const LE_ROUND_COEFF: f64 = 0.01;

/// Chordwise stations for the interior thickness minimum.
const STATIONS: usize = 99;

#[derive(Debug, Clone, PartialEq)]
pub struct CstAirfoil {
    pub upper: [f64; N_WEIGHTS],
    pub lower: [f64; N_WEIGHTS],
    pub le_weight: f64,
    pub te_thickness: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn shape(weights: &[f64; N_WEIGHTS], x: f64) -> f64 {
    let n = N_WEIGHTS - 1;
    weights
        .iter()
        .enumerate()
        .map(|(i, w)| w * binomial(n, i) * x.powi(i as i32) * (1.0 - x).powi((n - i) as i32))
        .sum()
}

fn class(x: f64) -> f64 {
    x.sqrt() * (1.0 - x)
}

/// `Σ (Δ² wᵢ)²` over one weight sequence.
pub fn second_difference_energy(w: &[f64]) -> f64 {
    w.windows(3).map(|t| (t[2] - 2.0 * t[1] + t[0]).powi(2)).sum()
}

impl CstAirfoil {
    pub fn naca0012() -> Self {
        Self { upper: NACA0012_UPPER, lower: NACA0012_UPPER.map(|w| -w), le_weight: 0.0, te_thickness: 0.0 }
    }

    pub fn upper_y(&self, x: f64) -> f64 {
        class(x) * shape(&self.upper, x) + self.le_term(x) + 0.5 * x * self.te_thickness
    }

    pub fn lower_y(&self, x: f64) -> f64 {
        class(x) * shape(&self.lower, x) + self.le_term(x) - 0.5 * x * self.te_thickness
    }

    fn le_term(&self, x: f64) -> f64 {
        self.le_weight * x * (1.0 - x).powf(N_WEIGHTS as f64 - 0.5)
    }

    /// Local thickness `y_u − y_l` at chord fraction `x`.
    pub fn thickness(&self, x: f64) -> f64 {
        class(x) * (shape(&self.upper, x) - shape(&self.lower, x)) + x * self.te_thickness
    }

    /// Mean camber `(y_u + y_l) / 2` at chord fraction `x`.
    pub fn camber(&self, x: f64) -> f64 {
        0.5 * (self.upper_y(x) + self.lower_y(x))
    }

    /// Smallest thickness over the interior stations `x = 0.01 … 0.99`.
    pub fn min_interior_thickness(&self) -> f64 {
        (1..=STATIONS).map(|i| self.thickness(i as f64 / (STATIONS + 1) as f64)).fold(f64::INFINITY, f64::min)
    }

    /// Largest thickness over the interior stations.
    pub fn max_thickness(&self) -> f64 {
        (1..=STATIONS).map(|i| self.thickness(i as f64 / (STATIONS + 1) as f64)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Included trailing-edge angle in degrees, from the last shape weights
    /// (the surface slopes at `x = 1` are `−u₇` and `−ℓ₇`).
    pub fn te_wedge_deg(&self) -> f64 {
        (self.upper[N_WEIGHTS - 1].atan() - self.lower[N_WEIGHTS - 1].atan()).to_degrees()
    }

    /// Included leading-edge angle in degrees. Each surface contributes 90°
    /// when its first weight rounds the nose outward by at least
    /// [`LE_ROUND_COEFF`], falling linearly to 0° for a cusp.
    pub fn le_angle_deg(&self) -> f64 {
        let round = |a: f64| 90.0 * (a / LE_ROUND_COEFF).clamp(0.0, 1.0);
        round(self.upper[0]) + round(-self.lower[0])
    }

    pub fn wiggliness(&self) -> f64 {
        second_difference_energy(&self.upper) + second_difference_energy(&self.lower)
    }
}

/// Wiggliness of the stored NACA 0012 weights, computed once.
pub fn naca0012_wiggliness() -> f64 {
    static W: OnceLock<f64> = OnceLock::new();
    *W.get_or_init(|| CstAirfoil::naca0012().wiggliness())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naca_half_thickness(x: f64) -> f64 {
        // closed trailing-edge NACA 4-digit thickness, t = 0.12
        5.0 * 0.12 * (0.2969 * x.sqrt() - 0.1260 * x - 0.3516 * x * x + 0.2843 * x.powi(3) - 0.1036 * x.powi(4))
    }

    #[test]
    fn naca0012_fit_tracks_the_analytic_section() {
        let a = CstAirfoil::naca0012();
        for i in 1..100 {
            let x = i as f64 / 100.0;
            assert!((a.thickness(x) - 2.0 * naca_half_thickness(x)).abs() < 5e-4, "x={x}");
            assert!(a.camber(x).abs() < 1e-15);
        }
        assert!((a.max_thickness() - 0.12).abs() < 1e-3);
        assert!((a.te_wedge_deg() - 16.36).abs() < 0.01);
        assert_eq!(a.le_angle_deg(), 180.0);
    }

    #[test]
    fn reference_wiggliness() {
        let mut direct = 0.0;
        for s in [NACA0012_UPPER, NACA0012_UPPER.map(|w| -w)] {
            for i in 0..N_WEIGHTS - 2 {
                let d2 = s[i + 2] - 2.0 * s[i + 1] + s[i];
                direct += d2 * d2;
            }
        }
        assert!((naca0012_wiggliness() - direct).abs() < 1e-15);
        assert!((naca0012_wiggliness() - 0.040931785660872605).abs() < 1e-12);
    }

    #[test]
    fn le_angle_and_te_thickness() {
        let mut a = CstAirfoil::naca0012();
        a.lower[0] = 0.0;
        assert_eq!(a.le_angle_deg(), 90.0);
        a.lower[0] = -0.005;
        assert_eq!(a.le_angle_deg(), 135.0);
        let mut b = CstAirfoil::naca0012();
        b.te_thickness = 0.01;
        assert!((b.thickness(1.0) - 0.01).abs() < 1e-15);
        assert_eq!(second_difference_energy(&[1.0, 2.0, 3.0, 4.0]), 0.0);
        assert_eq!(second_difference_energy(&[0.0, 1.0, 0.0]), 4.0);
    }
}
