//! Deterministic stand-in evaluators.
//!
//! Each family combines a small closed-form aerodynamic model with seeded
//! [`Landscape`]s that perturb its coefficients across the design space. The
//! landscapes are evaluated on the relaxed unit cube of the task, so every
//! variable (categorical ones included) moves the metrics.
//!
//! Lift always carries an additive `k·α` term with `k > 0`, so lift-targeted
//! bisection sees a strictly increasing curve.
//!
//! Documented metric ranges, valid over the whole design space at the
//! catalogue operating points:
//!
//! | family    | metric         | range                    |
//! |-----------|----------------|--------------------------|
//! | airfoil   | `CL`           | `[−1.86, 1.86]`          |
//! | airfoil   | `CL / CD`      | `(−250, 250)`            |
//! | airfoil   | `confidence`   | `[0.85, 1]`              |
//! | ceras     | `FuelMass`     | `[15000, 22000]` kg      |
//! | ceras     | `StaticMargin` | `[−0.015, 0.165]`        |
//! | sta       | `LD`           | `[4, 9]`                 |
//! | car       | `Cd`           | `[0.0352, 0.2376]`       |
//! | bwb       | `Cfx`          | `[0.0038, 0.0065]`       |
//!
//! Synthetic tasks expose a single metric `f` with a closed-form gradient.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::airfoil::{CstAirfoil, N_WEIGHTS};
use super::formulas::{self, SurfaceCell, CAR_DYNAMIC_PRESSURE, CAR_REFERENCE_AREA};
use super::landscape::Landscape;
use super::{EvalError, MetricSource, Metrics, OperatingPoint, TaskSpec};
use crate::rng;
use crate::space::{DesignPoint, Domain, ParamSpace};

/// Which closed-form model backs a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum StandinModel {
    DeltaWing,
    Bwb,
    Airfoil,
    SweptWing,
    Cca,
    Car,
    Ceras,
    Sta,
    /// `f(x) = Σ (xᵢ − cᵢ)²`.
    Sphere { center: Vec<f64> },
    /// `f(x) = Σ hᵢ (xᵢ − cᵢ)²`.
    Quadratic { center: Vec<f64>, curvature: Vec<f64> },
    /// `f(x) = (x − c)ᵀ Qᵀ diag(h) Q (x − c)` with a seeded orthogonal `Q`.
    RotatedQuadratic { center: Vec<f64>, curvature: Vec<f64>, rotation_seed: u64 },
    /// `f(x) = Σ 100 (xᵢ₊₁ − xᵢ²)² + (1 − xᵢ)²`.
    Rosenbrock,
    /// `f(x) = (6x − 2)² sin(12x − 4)`.
    Forrester,
    /// `f(x) = Σ aᵢ xᵢ`.
    Linear { coefficients: Vec<f64> },
}

impl StandinModel {
    fn landscape_count(&self) -> u64 {
        match self {
            StandinModel::DeltaWing | StandinModel::Cca => 6,
            StandinModel::Bwb => 5,
            StandinModel::Airfoil => 4,
            StandinModel::SweptWing => 5,
            StandinModel::Car => 3,
            StandinModel::Ceras => 2,
            StandinModel::Sta => 1,
            _ => 0,
        }
    }

    fn is_synthetic(&self) -> bool {
        self.landscape_count() == 0
    }

    fn required_variables(&self) -> Vec<String> {
        let names: &[&str] = match self {
            StandinModel::DeltaWing => &["sweep", "root_airfoil"],
            StandinModel::Bwb => &["C2_C1", "C3_C1", "C4_C1", "B1_C1", "B2_C1", "B3_C1"],
            StandinModel::Airfoil => {
                let mut v: Vec<String> = (1..=N_WEIGHTS).map(|i| format!("u{i}")).collect();
                v.extend((1..=N_WEIGHTS).map(|i| format!("l{i}")));
                v.extend(["p_le".to_string(), "t_te".to_string()]);
                return v;
            }
            StandinModel::SweptWing => &["sa", "ar", "t_r", "r_t3"],
            StandinModel::Cca => &["n_naca", "b", "c_r", "c_t"],
            StandinModel::Car => &["car_size"],
            StandinModel::Ceras => &["x_mac"],
            _ => &[],
        };
        names.iter().map(|s| s.to_string()).collect()
    }
}

/// Stand-in evaluator bound to one task's design space.
#[derive(Debug, Clone)]
pub struct StandIn {
    model: StandinModel,
    space: ParamSpace,
    landscapes: Vec<Landscape>,
    rotation: Option<DMatrix<f64>>,
}

/// Section data for the named airfoils of the delta-wing and CCA families:
/// (label, max camber, thickness).
const DELTA_SECTIONS: [(&str, f64, f64); 5] = [
    ("NACA0010", 0.0, 0.10),
    ("NACA0016", 0.0, 0.16),
    ("NACA0024", 0.0, 0.24),
    ("NACA2416", 0.02, 0.16),
    ("NACA4416", 0.04, 0.16),
];
const CCA_SECTIONS: [(&str, f64, f64); 4] =
    [("1412", 0.01, 0.12), ("12", 0.0, 0.12), ("2408", 0.02, 0.08), ("4412", 0.04, 0.12)];

fn prandtl_glauert(mach: f64) -> f64 {
    1.0 / (1.0 - mach * mach).max(0.05).sqrt()
}

fn num(design: &DesignPoint, name: &str) -> Result<f64, EvalError> {
    design.real(name).ok_or_else(|| EvalError::Evaluator(format!("stand-in needs numeric `{name}`")))
}

fn label<'a>(design: &'a DesignPoint, name: &str) -> Result<&'a str, EvalError> {
    design
        .get(name)
        .and_then(|v| v.as_label())
        .ok_or_else(|| EvalError::Evaluator(format!("stand-in needs label `{name}`")))
}

fn section(table: &[(&str, f64, f64)], name: &str) -> Result<(f64, f64), EvalError> {
    table
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, c, t)| (*c, *t))
        .ok_or_else(|| EvalError::Evaluator(format!("unknown section `{name}`")))
}

fn metrics<const N: usize>(pairs: [(&str, f64); N]) -> Metrics {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

impl StandIn {
    pub fn new(model: StandinModel, space: ParamSpace, seed: u64) -> Result<Self, String> {
        for name in model.required_variables() {
            if space.variable(&name).is_none() {
                return Err(format!("stand-in model needs variable `{name}`"));
            }
        }
        let dim = space.relaxed_dim();
        if model.is_synthetic() {
            if space.continuous_coords().len() != dim {
                return Err("synthetic models need an all-continuous space".into());
            }
            let check = |v: &[f64], what: &str| {
                if v.len() == dim {
                    Ok(())
                } else {
                    Err(format!("{what} has length {}, expected {dim}", v.len()))
                }
            };
            match &model {
                StandinModel::Sphere { center } => check(center, "center")?,
                StandinModel::Quadratic { center, curvature }
                | StandinModel::RotatedQuadratic { center, curvature, .. } => {
                    check(center, "center")?;
                    check(curvature, "curvature")?;
                }
                StandinModel::Linear { coefficients } => check(coefficients, "coefficients")?,
                StandinModel::Forrester if dim != 1 => return Err("forrester is one-dimensional".into()),
                StandinModel::Rosenbrock if dim < 2 => return Err("rosenbrock needs two or more variables".into()),
                _ => {}
            }
        }
        let landscapes = (0..model.landscape_count()).map(|i| Landscape::seeded(seed, i, dim)).collect();
        let rotation = match &model {
            StandinModel::RotatedQuadratic { rotation_seed, .. } => Some(random_rotation(*rotation_seed, dim)),
            _ => None,
        };
        Ok(Self { model, space, landscapes, rotation })
    }

    pub fn for_task(spec: &TaskSpec) -> Result<Self, String> {
        Self::new(spec.model.clone(), spec.space.clone(), spec.standin_seed)
            .map_err(|e| format!("task `{}`: {e}", spec.id))
    }

    pub fn model(&self) -> &StandinModel {
        &self.model
    }

    /// The seeded landscapes perturbing this model, in model order.
    pub fn landscapes(&self) -> &[Landscape] {
        &self.landscapes
    }

    /// Metric `f` of a synthetic model and its gradient in raw coordinates.
    pub fn synthetic_value_and_gradient(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let d = x.len();
        Some(match &self.model {
            StandinModel::Sphere { center } => {
                let f = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum();
                (f, x.iter().zip(center).map(|(a, c)| 2.0 * (a - c)).collect())
            }
            StandinModel::Quadratic { center, curvature } => {
                let f = (0..d).map(|i| curvature[i] * (x[i] - center[i]).powi(2)).sum();
                (f, (0..d).map(|i| 2.0 * curvature[i] * (x[i] - center[i])).collect())
            }
            StandinModel::RotatedQuadratic { center, curvature, .. } => {
                let q = self.rotation.as_ref()?;
                let r = nalgebra::DVector::from_iterator(d, (0..d).map(|i| x[i] - center[i]));
                let y = q * &r;
                let f = (0..d).map(|i| curvature[i] * y[i] * y[i]).sum();
                let hy = nalgebra::DVector::from_iterator(d, (0..d).map(|i| 2.0 * curvature[i] * y[i]));
                (f, (q.transpose() * hy).iter().copied().collect())
            }
            StandinModel::Rosenbrock => {
                let mut f = 0.0;
                let mut g = vec![0.0; d];
                for i in 0..d - 1 {
                    let a = x[i + 1] - x[i] * x[i];
                    let b = 1.0 - x[i];
                    f += 100.0 * a * a + b * b;
                    g[i] += -400.0 * x[i] * a - 2.0 * b;
                    g[i + 1] += 200.0 * a;
                }
                (f, g)
            }
            StandinModel::Forrester => {
                let t = 6.0 * x[0] - 2.0;
                let s = 12.0 * x[0] - 4.0;
                (t * t * s.sin(), vec![12.0 * t * s.sin() + 12.0 * t * t * s.cos()])
            }
            StandinModel::Linear { coefficients } => {
                (x.iter().zip(coefficients).map(|(a, c)| a * c).sum(), coefficients.clone())
            }
            _ => return None,
        })
    }

    fn raw_from_unit(&self, z: &[f64]) -> Vec<f64> {
        self.space
            .variables()
            .iter()
            .zip(z)
            .map(|(v, t)| match v.domain {
                Domain::Continuous { lower, upper } => lower + t * (upper - lower),
                _ => unreachable!("synthetic spaces are continuous"),
            })
            .collect()
    }

    fn units(&self, z: &[f64]) -> Vec<f64> {
        self.landscapes.iter().map(|l| l.unit(z)).collect()
    }

    fn delta_like(
        &self,
        u: &[f64],
        op: &OperatingPoint,
        camber: f64,
        thickness: f64,
        slope_scale: f64,
    ) -> Result<Metrics, EvalError> {
        let alpha = op.alpha.ok_or_else(|| EvalError::Evaluator("operating point needs alpha".into()))?;
        let mach = op.mach.unwrap_or(0.4);
        let re = op.reynolds.unwrap_or(8e6);
        let a = slope_scale * (0.8 + 0.4 * u[0]) * prandtl_glauert(mach);
        let cl = a * alpha + 3.0 * camber + 0.04 * (u[1] - 0.5);
        let cd0 = (0.006 + 0.02 * thickness + 0.004 * u[2]) * (re / 1e7).powf(-0.2);
        let k = 0.25 + 0.2 * u[3];
        let cd = cd0 + k * cl * cl;
        let sm = 0.02 + 0.1 * u[4];
        let cm = -1.5 * camber + 0.03 * (u[5] - 0.5) - sm * cl;
        Ok(metrics([("CL", cl), ("CD", cd), ("CM", cm)]))
    }

    fn delta_wing(&self, design: &DesignPoint, u: &[f64], op: &OperatingPoint) -> Result<Metrics, EvalError> {
        let sweep = num(design, "sweep")?;
        let (camber, t) = section(&DELTA_SECTIONS, label(design, "root_airfoil")?)?;
        // slender-wing lift slope falls with sweep
        let scale = 0.045 - 0.0006 * (sweep - 55.0);
        self.delta_like(u, op, camber, t, scale)
    }

    fn cca(&self, design: &DesignPoint, u: &[f64], op: &OperatingPoint) -> Result<Metrics, EvalError> {
        let (camber, t) = section(&CCA_SECTIONS, label(design, "n_naca")?)?;
        let span = num(design, "b")?;
        let area = 0.5 * (num(design, "c_r")? + num(design, "c_t")?) * span;
        let ar = span * span / area;
        let scale = 0.09 * ar / (ar + 2.0);
        self.delta_like(u, op, camber, t, scale)
    }

    fn bwb(&self, design: &DesignPoint, u: &[f64], op: &OperatingPoint) -> Result<Metrics, EvalError> {
        let alpha = op.alpha.ok_or_else(|| EvalError::Evaluator("operating point needs alpha".into()))?;
        let mach = op.mach.unwrap_or(0.3);
        let re = op.reynolds.unwrap_or(1e7);
        let chords = [1.0, num(design, "C2_C1")?, num(design, "C3_C1")?, num(design, "C4_C1")?];
        let spans = [num(design, "B1_C1")?, num(design, "B2_C1")?, num(design, "B3_C1")?];

        let a = (0.025 + 0.015 * u[0]) * prandtl_glauert(mach);
        let alpha0 = -3.0 + 2.0 * u[1];
        let cl = a * (alpha - alpha0);
        let cfx = (0.0038 + 0.0012 * u[2]) * (1.0 + 0.002 * alpha * alpha) * (re / 1e7).powf(-0.2);

        // planform strips, four per segment, mirrored about the centreline
        const STRIPS: usize = 4;
        const SLOPE: f64 = 0.05;
        let mut strips = Vec::new();
        for seg in 0..3 {
            let dy = spans[seg] / STRIPS as f64;
            for s in 0..STRIPS {
                let t = (s as f64 + 0.5) / STRIPS as f64;
                let chord = chords[seg] + t * (chords[seg + 1] - chords[seg]);
                strips.push(2.0 * chord * dy);
            }
        }
        let s_ref: f64 = strips.iter().sum();
        let semi_span: f64 = spans.iter().sum();
        let ar = 4.0 * semi_span * semi_span / s_ref;
        let wetted = 2.04 * s_ref;

        let cd_pressure = 0.002 + 0.003 * u[4] + cl * cl / (std::f64::consts::PI * 0.8 * ar);
        let cp_front = 0.25 + 0.1 * u[3];
        let cp_aft = cp_front - cd_pressure * s_ref / (SLOPE * 0.5 * wetted);
        let mut cells = Vec::with_capacity(4 * strips.len());
        for area in strips {
            // each strip: upper/lower skin, split into front and aft halves
            let cell = 0.25 * 2.04 * area;
            for _ in 0..2 {
                cells.push(SurfaceCell { cp: cp_front, cfx, area: cell, nx: SLOPE });
                cells.push(SurfaceCell { cp: cp_aft, cfx, area: cell, nx: -SLOPE });
            }
        }
        let cd_int = formulas::integrated_drag(&cells, s_ref)?;
        Ok(metrics([("CL", cl), ("Cfx", cfx), ("CD_int", cd_int), ("AR", ar), ("S_ref", s_ref)]))
    }

    fn airfoil(&self, design: &DesignPoint, z: &[f64], u: &[f64], op: &OperatingPoint) -> Result<Metrics, EvalError> {
        let alpha = op.alpha.ok_or_else(|| EvalError::Evaluator("operating point needs alpha".into()))?;
        let mach = op.mach.unwrap_or(0.2);
        let re = op.reynolds.unwrap_or(1e6);
        let mut foil = CstAirfoil {
            upper: [0.0; N_WEIGHTS],
            lower: [0.0; N_WEIGHTS],
            le_weight: num(design, "p_le")?,
            te_thickness: num(design, "t_te")?,
        };
        for i in 0..N_WEIGHTS {
            foil.upper[i] = num(design, &format!("u{}", i + 1))?;
            foil.lower[i] = num(design, &format!("l{}", i + 1))?;
        }
        let m = (0..N_WEIGHTS).map(|i| foil.upper[i] + foil.lower[i]).sum::<f64>() / (2.0 * N_WEIGHTS as f64);
        let t_max = foil.max_thickness();

        let alpha0 = -40.0 * m;
        let a = 0.105 * (0.9 + 0.2 * u[0]) * prandtl_glauert(mach);
        let clmax = 1.2 + 0.6 * u[1];
        let cl = clmax * (a * (alpha - alpha0) / clmax).tanh() + 0.004 * alpha;
        let stall = (cl.abs() - 0.85 * clmax).max(0.0);
        let cd = (0.012 + 0.004 * u[2]) * (re / 1e6).powf(-0.2)
            + 0.02 * t_max * t_max
            + 0.0008 * cl * cl
            + 0.05 * stall * stall;
        let cm = -0.1 * (1.0 + (6.0 * m - 1.2).tanh()) + 0.02 * (u[3] - 0.5);
        let r2 = z.iter().map(|x| (2.0 * x - 1.0).powi(2)).sum::<f64>() / z.len() as f64;

        Ok(metrics([
            ("CL", cl),
            ("CD", cd),
            ("CM", cm),
            ("confidence", 1.0 - 0.15 * r2),
            ("t_min", foil.min_interior_thickness()),
            ("t_max", t_max),
            ("t_033", foil.thickness(0.33)),
            ("t_090", foil.thickness(0.90)),
            ("te_wedge", foil.te_wedge_deg()),
            ("le_angle", foil.le_angle_deg()),
            ("wiggliness", foil.wiggliness()),
        ]))
    }

    fn swept_wing(&self, design: &DesignPoint, u: &[f64], op: &OperatingPoint) -> Result<Metrics, EvalError> {
        let alpha = op.alpha.ok_or_else(|| EvalError::Evaluator("operating point needs alpha".into()))?;
        let mach = op.mach.unwrap_or(0.82);
        let sweep = num(design, "sa")?.to_radians();
        let ar = num(design, "ar")?;
        let t = num(design, "t_r")? * num(design, "r_t3")?;
        let c = sweep.cos();

        let a = (0.06 + 0.02 * u[0]) * c * prandtl_glauert(mach * c) * ar / (ar + 2.0);
        let cl = a * alpha + 0.05 + 0.15 * u[1];
        let e = 0.7 + 0.2 * u[3];
        let cd_induced = cl * cl / (std::f64::consts::PI * e * ar);
        // Korn relation with a supercritical technology factor, Lock's law above M_cr
        let mdd = 0.95 / c - t / (c * c) - cl / (10.0 * c.powi(3));
        let mcr = mdd - (0.1f64 / 80.0).cbrt();
        let wave = 20.0 * (mach - mcr).max(0.0).powi(4);
        let cd = 0.008 + 0.006 * u[2] + cd_induced + wave;
        let cm = -0.05 - 0.1 * u[4] * cl;
        Ok(metrics([("CL", cl), ("CD", cd), ("CM", cm), ("CD_wave", wave)]))
    }

    fn car(&self, design: &DesignPoint, u: &[f64]) -> Result<Metrics, EvalError> {
        let s = num(design, "car_size")?;
        let qa = CAR_DYNAMIC_PRESSURE * CAR_REFERENCE_AREA * s * s;
        Ok(metrics([
            ("drag_pressure", qa * (0.04 + 0.1 * u[0])),
            ("drag_shear", qa * (0.015 + 0.01 * u[1])),
            ("lift", qa * (-0.2 + 0.3 * u[2])),
        ]))
    }

    fn ceras(&self, design: &DesignPoint, z: &[f64]) -> Result<Metrics, EvalError> {
        let (lo, hi) = self.space.variable("x_mac").and_then(|v| v.numeric_bounds()).unwrap_or((16.0, 18.0));
        let x = (num(design, "x_mac")? - lo) / (hi - lo);
        let g = self.landscapes[1].value(z);
        Ok(metrics([
            ("FuelMass", 15000.0 + 7000.0 * self.landscapes[0].unit(z)),
            ("StaticMargin", 0.075 - 0.12 * (x - 0.5) + 0.03 * g / 2.0),
        ]))
    }
}

fn random_rotation(seed: u64, dim: usize) -> DMatrix<f64> {
    let mut rng = rng::stream(seed, rng::streams::LANDSCAPE);
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // sign fix makes the factorization unique
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

impl MetricSource for StandIn {
    fn point_metrics(&self, design: &DesignPoint, op: &OperatingPoint) -> Result<Metrics, EvalError> {
        let z = self.space.normalize(design)?;
        if self.model.is_synthetic() {
            let x = self.raw_from_unit(&z);
            let (f, _) = self.synthetic_value_and_gradient(&x).expect("synthetic model");
            return Ok(metrics([("f", f)]));
        }
        let u = self.units(&z);
        match self.model {
            StandinModel::DeltaWing => self.delta_wing(design, &u, op),
            StandinModel::Cca => self.cca(design, &u, op),
            StandinModel::Bwb => self.bwb(design, &u, op),
            StandinModel::Airfoil => self.airfoil(design, &z, &u, op),
            StandinModel::SweptWing => self.swept_wing(design, &u, op),
            StandinModel::Car => self.car(design, &u),
            StandinModel::Ceras => self.ceras(design, &z),
            StandinModel::Sta => Ok(metrics([("LD", 4.0 + 5.0 * u[0])])),
            _ => unreachable!(),
        }
    }

    fn metric_gradient(&self, z: &[f64], metric: &str) -> Option<Vec<f64>> {
        if metric != "f" || !self.model.is_synthetic() || z.len() != self.space.relaxed_dim() {
            return None;
        }
        let x = self.raw_from_unit(z);
        let (_, g) = self.synthetic_value_and_gradient(&x)?;
        let widths = self.space.variables().iter().map(|v| v.numeric_bounds().map(|(l, u)| u - l).unwrap_or(1.0));
        Some(g.iter().zip(widths).map(|(g, w)| g * w).collect())
    }

    fn describe(&self) -> String {
        format!("stand-in {:?}", self.model).split_whitespace().take(2).collect::<Vec<_>>().join(" ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::VariableSpec;

    fn unit_space(d: usize, lo: f64, hi: f64) -> ParamSpace {
        ParamSpace::new((0..d).map(|i| VariableSpec::continuous(&format!("x{i}"), lo, hi, "")).collect()).unwrap()
    }

    fn fd_check(s: &StandIn, z: &[f64]) {
        let g = s.metric_gradient(z, "f").unwrap();
        let op = OperatingPoint::default();
        let h = 1e-6;
        for j in 0..z.len() {
            let mut p = z.to_vec();
            let mut m = z.to_vec();
            p[j] += h;
            m[j] -= h;
            let fp = s.point_metrics(&s.space.denormalize(&p).unwrap(), &op).unwrap()["f"];
            let fm = s.point_metrics(&s.space.denormalize(&m).unwrap(), &op).unwrap()["f"];
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()), "j={j} fd={fd} g={}", g[j]);
        }
    }

    #[test]
    fn synthetic_gradients() {
        let rot = StandIn::new(
            StandinModel::RotatedQuadratic { center: vec![0.3; 4], curvature: vec![1.0, 4.0, 9.0, 16.0], rotation_seed: 5 },
            unit_space(4, 0.0, 1.0),
            0,
        )
        .unwrap();
        fd_check(&rot, &[0.1, 0.7, 0.4, 0.9]);
        let rosen = StandIn::new(StandinModel::Rosenbrock, unit_space(2, -2.0, 2.0), 0).unwrap();
        fd_check(&rosen, &[0.3, 0.6]);
        let forr = StandIn::new(StandinModel::Forrester, unit_space(1, 0.0, 1.0), 0).unwrap();
        fd_check(&forr, &[0.42]);
    }

    #[test]
    fn rotation_is_orthogonal() {
        let q = random_rotation(3, 6);
        let err = (q.transpose() * &q - DMatrix::identity(6, 6)).abs().max();
        assert!(err < 1e-12);
    }

    #[test]
    fn forrester_reference_value() {
        let s = StandIn::new(StandinModel::Forrester, unit_space(1, 0.0, 1.0), 0).unwrap();
        let (f, _) = s.synthetic_value_and_gradient(&[0.75724876]).unwrap();
        assert!((f + 6.02074).abs() < 1e-4);
    }

    #[test]
    fn rejects_missing_variables() {
        assert!(StandIn::new(StandinModel::Car, unit_space(2, 0.0, 1.0), 0).is_err());
        assert!(StandIn::new(StandinModel::Sphere { center: vec![0.0] }, unit_space(2, 0.0, 1.0), 0).is_err());
    }
}
