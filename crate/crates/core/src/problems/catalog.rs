//! The built-in task catalogue.
//!
//! The catalogue is plain data and round-trips through versioned JSON. Set
//! `AEROBENCH_CATALOG` to a JSON file to replace the built-in tasks.

use std::collections::HashSet;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::airfoil::{naca0012_wiggliness, N_WEIGHTS};
use super::formulas::reynolds_schedule;
use super::{
    Aggregate, AlphaSolve, ConstraintKind, ConstraintRule, ConstraintSpec, DerivedMetric, DiagnosticsProfile,
    ObjectiveTerm, OperatingPoint, ProblemEnvironment, Sense, StandIn, StandinModel, TaskSpec,
};
use crate::space::{ParamSpace, VariableSpec};

pub const CATALOG_VERSION: &str = "1.0.0";
pub const CATALOG_ENV_VAR: &str = "AEROBENCH_CATALOG";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("cannot read catalogue {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed catalogue: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate task id `{0}`")]
    DuplicateId(String),
    #[error("{0}")]
    Invalid(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub version: String,
    pub tasks: Vec<TaskSpec>,
}

impl Catalog {
    pub fn builtin() -> Self {
        let mut tasks = Vec::new();
        tasks.extend(delta_wing());
        tasks.extend(bwb());
        tasks.extend(airfoil());
        tasks.extend(swept_wing());
        tasks.push(cca());
        tasks.push(car());
        tasks.push(ceras());
        tasks.push(sta());
        tasks.extend(synthetic());
        Self { version: CATALOG_VERSION.into(), tasks }
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let cat: Catalog = serde_json::from_str(text)?;
        cat.check()?;
        Ok(cat)
    }

    pub fn load(path: &Path) -> Result<Self, CatalogError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CatalogError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// The catalogue named by `AEROBENCH_CATALOG`, or the built-in one.
    pub fn from_env() -> Result<Self, CatalogError> {
        match std::env::var_os(CATALOG_ENV_VAR) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::builtin()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalogue serializes")
    }

    /// Unique ids, well-formed tasks and a constructible stand-in for each.
    pub fn check(&self) -> Result<(), CatalogError> {
        let mut seen = HashSet::new();
        for t in &self.tasks {
            if !seen.insert(t.id.as_str()) {
                return Err(CatalogError::DuplicateId(t.id.clone()));
            }
            t.check().map_err(CatalogError::Invalid)?;
            StandIn::for_task(t).map_err(CatalogError::Invalid)?;
        }
        Ok(())
    }

    pub fn task(&self, id: &str) -> Result<&TaskSpec, CatalogError> {
        self.tasks.iter().find(|t| t.id == id).ok_or_else(|| CatalogError::UnknownTask(id.into()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.tasks.iter().map(|t| t.id.as_str())
    }

    /// Stand-in environment for task `id`.
    pub fn environment(&self, id: &str) -> Result<ProblemEnvironment, CatalogError> {
        let spec = Arc::new(self.task(id)?.clone());
        ProblemEnvironment::standin(spec).map_err(CatalogError::Invalid)
    }
}

fn cont(name: &str, lo: f64, hi: f64, unit: &str) -> VariableSpec {
    VariableSpec::continuous(name, lo, hi, unit)
}

fn space(vars: Vec<VariableSpec>) -> ParamSpace {
    ParamSpace::new(vars).expect("built-in spaces are valid")
}

fn at_least(name: &str, metric: &str, bound: f64, scale: f64) -> ConstraintSpec {
    ConstraintSpec::new(
        name,
        ConstraintKind::Inequality,
        ConstraintRule::AtLeast { metric: metric.into(), bound, scale },
    )
}

fn at_most(name: &str, metric: &str, bound: f64, scale: f64) -> ConstraintSpec {
    ConstraintSpec::new(name, ConstraintKind::Inequality, ConstraintRule::AtMost { metric: metric.into(), bound, scale })
}

struct Base {
    id: &'static str,
    family: &'static str,
    description: &'static str,
    space: ParamSpace,
    points: Vec<OperatingPoint>,
    objective: Vec<ObjectiveTerm>,
    sense: Sense,
    model: StandinModel,
    seed: u64,
}

impl Base {
    fn build(self) -> TaskSpec {
        TaskSpec {
            id: self.id.into(),
            family: self.family.into(),
            environment: self.family.into(),
            description: self.description.into(),
            space: self.space,
            points: self.points,
            alpha_solve: None,
            derived: Vec::new(),
            objective: self.objective,
            constraints: Vec::new(),
            sense: self.sense,
            penalty_weight: 0.0,
            model: self.model,
            standin_seed: self.seed,
            diagnostics: DiagnosticsProfile::default(),
        }
    }
}

const DELTA_AIRFOILS: [&str; 5] = ["NACA0010", "NACA0016", "NACA0024", "NACA2416", "NACA4416"];

fn delta_space(discrete_sweep: bool) -> ParamSpace {
    let sweep = if discrete_sweep {
        VariableSpec::discrete("sweep", &[55.0, 65.0, 75.0], "deg")
    } else {
        cont("sweep", 55.0, 75.0, "deg")
    };
    space(vec![sweep, VariableSpec::categorical("root_airfoil", &DELTA_AIRFOILS)])
}

fn delta_mission_points() -> Vec<OperatingPoint> {
    vec![
        OperatingPoint::at_alpha(5.0).mach(0.35).reynolds(6.5e6).weight(0.3),
        OperatingPoint::at_alpha(10.0).mach(0.42).reynolds(8.9e6).weight(0.4),
        OperatingPoint::at_alpha(15.0).mach(0.5).reynolds(1e7).weight(0.3),
    ]
}

fn delta_wing() -> Vec<TaskSpec> {
    let single = || vec![OperatingPoint::at_alpha(10.0).mach(0.4).reynolds(8e6)];
    let ld = DerivedMetric::LiftToDrag;
    let mut out = Vec::new();

    let mut t = Base {
        id: "delta_wing_ld",
        family: "delta_wing",
        description: "Maximize L/D of a delta wing at one operating point over sweep and root section.",
        space: delta_space(false),
        points: single(),
        objective: vec![ObjectiveTerm::new("LD", "LD", Aggregate::Single, Sense::Maximize)],
        sense: Sense::Maximize,
        model: StandinModel::DeltaWing,
        seed: 101,
    }
    .build();
    t.derived = vec![ld.clone()];
    out.push(t);

    let mut t = Base {
        id: "delta_wing_mission",
        family: "delta_wing",
        description: "Maximize weighted-sum L/D over three operating points with discrete sweep.",
        space: delta_space(true),
        points: delta_mission_points(),
        objective: vec![ObjectiveTerm::new("mission_LD", "LD", Aggregate::WeightedSum, Sense::Maximize)],
        sense: Sense::Maximize,
        model: StandinModel::DeltaWing,
        seed: 102,
    }
    .build();
    t.derived = vec![ld.clone()];
    out.push(t);

    let mut t = Base {
        id: "delta_wing_robust",
        family: "delta_wing",
        description: "Maximize worst-case L/D over three operating points with discrete sweep.",
        space: delta_space(true),
        points: delta_mission_points(),
        objective: vec![ObjectiveTerm::new("worst_LD", "LD", Aggregate::WorstCase, Sense::Maximize)],
        sense: Sense::Maximize,
        model: StandinModel::DeltaWing,
        seed: 103,
    }
    .build();
    t.derived = vec![ld.clone()];
    out.push(t);

    let mut t = Base {
        id: "delta_wing_margin_drag",
        family: "delta_wing",
        description: "Maximize static margin while minimizing weighted drag at one operating point.",
        space: delta_space(false),
        points: vec![OperatingPoint::at_alpha(10.0).mach(0.42).reynolds(8.9e6)],
        objective: vec![
            ObjectiveTerm::new("K_n", "K_n", Aggregate::Single, Sense::Maximize),
            ObjectiveTerm::new("CD", "CD", Aggregate::Single, Sense::Minimize).weighted(10.0),
        ],
        sense: Sense::Maximize,
        model: StandinModel::DeltaWing,
        seed: 104,
    }
    .build();
    t.derived = vec![DerivedMetric::StaticMargin { delta_alpha: 0.5 }];
    out.push(t);

    let mut t = Base {
        id: "delta_wing_ld_trim",
        family: "delta_wing",
        description: "Minimize negative L/D and trim penalty |CM| at one operating point.",
        space: delta_space(false),
        points: single(),
        objective: vec![
            ObjectiveTerm::new("LD", "LD", Aggregate::Single, Sense::Maximize),
            ObjectiveTerm::new("abs_CM", "abs_CM", Aggregate::Single, Sense::Minimize).weighted(10.0),
        ],
        sense: Sense::Minimize,
        model: StandinModel::DeltaWing,
        seed: 105,
    }
    .build();
    t.derived = vec![ld.clone(), DerivedMetric::AbsMoment];
    out.push(t);

    let mut t = Base {
        id: "delta_wing_mission_mo",
        family: "delta_wing",
        description: "Three-objective mission: weighted L/D, drag and trim penalty over three points.",
        space: delta_space(false),
        points: delta_mission_points(),
        objective: vec![
            ObjectiveTerm::new("mission_LD", "LD", Aggregate::WeightedSum, Sense::Maximize),
            ObjectiveTerm::new("mission_CD", "CD", Aggregate::WeightedSum, Sense::Minimize).weighted(100.0),
            ObjectiveTerm::new("mission_abs_CM", "abs_CM", Aggregate::WeightedSum, Sense::Minimize).weighted(10.0),
        ],
        sense: Sense::Minimize,
        model: StandinModel::DeltaWing,
        seed: 106,
    }
    .build();
    t.derived = vec![ld, DerivedMetric::AbsMoment];
    out.push(t);
    out
}

pub const BWB_CL_TARGETS: [f64; 5] = [0.185, 0.206, 0.206, 0.206, 0.227];

fn bwb_space() -> ParamSpace {
    space(vec![
        cont("C2_C1", 0.55, 0.85, ""),
        cont("C3_C1", 0.18, 0.28, ""),
        cont("C4_C1", 0.06, 0.09, ""),
        cont("B1_C1", 0.10, 0.20, ""),
        cont("B2_C1", 0.05, 0.20, ""),
        cont("B3_C1", 0.20, 0.70, ""),
        cont("S1", 40.0, 60.0, "deg"),
        cont("S2", 40.0, 60.0, "deg"),
        cont("S3", 24.0, 40.0, "deg"),
    ])
}

fn bwb() -> Vec<TaskSpec> {
    let points: Vec<OperatingPoint> = BWB_CL_TARGETS
        .iter()
        .map(|&cl| OperatingPoint { mach: Some(0.3), reynolds: Some(1e7), ..Default::default() }.cl_target(cl).weight(1.0))
        .collect();
    let make = |id, description, label: &str, metric: &str, sense, seed| {
        let mut t = Base {
            id,
            family: "bwb",
            description,
            space: bwb_space(),
            points: points.clone(),
            objective: vec![ObjectiveTerm::new(label, metric, Aggregate::WeightedMean, sense)],
            sense,
            model: StandinModel::Bwb,
            seed,
        }
        .build();
        t.alpha_solve = Some(AlphaSolve { lo: -5.0, hi: 12.0, iters: 8 });
        t
    };
    let mut ld = make(
        "bwb_ld_proxy",
        "Maximize mean lift-to-friction proxy over five lift targets.",
        "mean_LD_proxy",
        "LD_proxy",
        Sense::Maximize,
        202,
    );
    ld.derived = vec![DerivedMetric::LiftToFriction];
    let mut ar = make(
        "bwb_cd_int_ar",
        "Minimize mean integrated drag over five lift targets with aspect ratio at least 2.5.",
        "mean_CD_int",
        "CD_int",
        Sense::Minimize,
        204,
    );
    ar.constraints = vec![at_least("aspect_ratio", "AR", 2.5, 1.0)];
    ar.penalty_weight = 1.0;
    vec![
        make(
            "bwb_cfx",
            "Minimize mean skin-friction proxy over five lift targets.",
            "mean_Cfx",
            "Cfx",
            Sense::Minimize,
            201,
        ),
        ld,
        make(
            "bwb_cd_int",
            "Minimize mean integrated drag over five lift targets.",
            "mean_CD_int",
            "CD_int",
            Sense::Minimize,
            203,
        ),
        ar,
    ]
}

fn airfoil_space() -> ParamSpace {
    let mut vars: Vec<VariableSpec> = (1..=N_WEIGHTS).map(|i| cont(&format!("u{i}"), -0.3, 0.6, "")).collect();
    vars.extend((1..=N_WEIGHTS).map(|i| cont(&format!("l{i}"), -0.3, 0.3, "")));
    vars.push(cont("p_le", -0.5, 0.5, ""));
    vars.push(cont("t_te", 0.0, 0.01, "chord"));
    space(vars)
}

fn airfoil_constraints() -> Vec<ConstraintSpec> {
    let w2 = 2.0 * naca0012_wiggliness();
    vec![
        at_least("thickness_positive", "t_min", 0.0, 0.01),
        at_least("thickness_033", "t_033", 0.128, 0.128),
        at_least("thickness_090", "t_090", 0.014, 0.014),
        at_least("te_wedge", "te_wedge", 6.03, 6.03),
        ConstraintSpec::new(
            "le_angle",
            ConstraintKind::Equality,
            ConstraintRule::Equal { metric: "le_angle".into(), target: 180.0, tolerance: 1.0 },
        ),
        at_most("wiggliness", "wiggliness", w2, w2),
        at_least("cm_floor", "CM", -0.133, 0.133),
        at_least("confidence", "confidence", 0.9, 0.05),
    ]
}

pub const DAEDALUS_CL_TARGETS: [f64; 6] = [0.8, 1.0, 1.2, 1.4, 1.5, 1.6];
pub const DAEDALUS_WEIGHTS: [f64; 6] = [5.0, 6.0, 7.0, 8.0, 9.0, 10.0];

fn airfoil() -> Vec<TaskSpec> {
    let mut single = Base {
        id: "airfoil_ld",
        family: "airfoil",
        description: "Maximize penalized L/D of a CST airfoil at one operating point.",
        space: airfoil_space(),
        points: vec![OperatingPoint::at_alpha(5.0).reynolds(1e7).mach(0.2)],
        objective: vec![ObjectiveTerm::new("LD", "LD", Aggregate::Single, Sense::Maximize)],
        sense: Sense::Maximize,
        model: StandinModel::Airfoil,
        seed: 301,
    }
    .build();
    single.derived = vec![DerivedMetric::LiftToDrag];
    single.constraints = airfoil_constraints();
    single.penalty_weight = 500.0;

    let points = DAEDALUS_CL_TARGETS
        .iter()
        .zip(DAEDALUS_WEIGHTS)
        .map(|(&cl, w)| {
            let re = reynolds_schedule(cl).expect("positive lift targets");
            OperatingPoint { mach: Some(0.03), reynolds: Some(re), ..Default::default() }.cl_target(cl).weight(w)
        })
        .collect();
    let mut multi = Base {
        id: "airfoil_daedalus",
        family: "airfoil",
        description: "Minimize weighted mean drag at six lift targets on a fixed-lift Reynolds schedule.",
        space: airfoil_space(),
        points,
        objective: vec![ObjectiveTerm::new("mean_CD", "CD", Aggregate::WeightedMean, Sense::Minimize)],
        sense: Sense::Minimize,
        model: StandinModel::Airfoil,
        seed: 302,
    }
    .build();
    multi.alpha_solve = Some(AlphaSolve { lo: -5.0, hi: 15.0, iters: 20 });
    multi.derived = vec![DerivedMetric::LiftSlope { delta_alpha: 0.5 }];
    multi.constraints = airfoil_constraints();
    multi.constraints.push(at_least("lift_monotone", "CL_alpha", 0.0, 0.01));
    multi.constraints.push(ConstraintSpec::new(
        "targets_reachable",
        ConstraintKind::Inequality,
        ConstraintRule::TargetsReachable,
    ));
    multi.penalty_weight = 500.0;
    vec![single, multi]
}

fn swept_space() -> ParamSpace {
    let mut vars = vec![
        cont("sa", 25.0, 40.0, "deg"),
        cont("ar", 8.0, 11.0, ""),
        cont("tr", 0.15, 0.40, ""),
        cont("eta_k", 0.36, 0.42, ""),
        cont("kappa_r", 0.10, 1.10, ""),
        cont("gamma_k", 0.5, 6.0, "deg"),
        cont("gamma_t", 4.0, 6.0, "deg"),
        cont("t_r", 0.14, 0.17, ""),
        cont("r_t2", 0.60, 0.70, ""),
        cont("r_t3", 0.90, 0.98, ""),
        cont("r_t4", 0.92, 1.00, ""),
        cont("r_d1", 0.30, 0.80, ""),
        cont("r_d2", 0.50, 1.00, ""),
        cont("r_d4", 0.00, 0.80, ""),
        cont("theta1", -4.0, -2.0, "deg"),
        cont("theta2", -4.0, -2.0, "deg"),
        cont("theta3", -3.0, -1.0, "deg"),
        cont("theta4", -3.0, -1.0, "deg"),
    ];
    vars.extend((0..10).map(|i| cont(&format!("cu{i}"), -0.3, 0.6, "")));
    vars.extend((0..10).map(|i| cont(&format!("cl{i}"), -0.3, 0.3, "")));
    space(vars)
}

fn swept_wing() -> Vec<TaskSpec> {
    let mut single = Base {
        id: "swept_wing_cd",
        family: "swept_wing",
        description: "Minimize transonic wing drag with a quadratic lift-floor penalty.",
        space: swept_space(),
        points: vec![OperatingPoint::at_alpha(3.0).mach(0.82)],
        objective: vec![
            ObjectiveTerm::new("CD", "CD", Aggregate::Single, Sense::Minimize),
            ObjectiveTerm::new("CL_floor_penalty", "CL_floor_penalty", Aggregate::Single, Sense::Minimize),
        ],
        sense: Sense::Minimize,
        model: StandinModel::SweptWing,
        seed: 401,
    }
    .build();
    single.derived = vec![DerivedMetric::LiftFloorPenalty { cl_min: 0.45, weight: 10.0 }];

    let mp_terms = |agg| {
        vec![
            ObjectiveTerm::new("M_LD", "M_LD", agg, Sense::Maximize),
            ObjectiveTerm::new("CL_match_penalty", "CL_match_penalty", agg, Sense::Minimize),
        ]
    };
    let mut multi = Base {
        id: "swept_wing_mp",
        family: "swept_wing",
        description: "Mach-weighted L/D with a lift-matching penalty over four Mach numbers.",
        space: swept_space(),
        points: [0.75, 0.80, 0.86, 0.90]
            .iter()
            .map(|&m| OperatingPoint { mach: Some(m), ..Default::default() }.cl_target(0.55).weight(1.0))
            .collect(),
        objective: mp_terms(Aggregate::WeightedMean),
        sense: Sense::Minimize,
        model: StandinModel::SweptWing,
        seed: 402,
    }
    .build();
    multi.alpha_solve = Some(AlphaSolve { lo: 2.0, hi: 12.0, iters: 12 });
    multi.derived = vec![
        DerivedMetric::MachLiftToDrag,
        DerivedMetric::MachLiftMatch { cl_star: Some(0.55), weight: 1.0 },
    ];

    let targets = [0.3, 0.4, 0.5, 0.6];
    let total: f64 = targets.iter().sum();
    let mut multi_b = Base {
        id: "swept_wing_mp_b",
        family: "swept_wing",
        description: "Mach-weighted L/D with lift matching at four lift targets, lift-weighted.",
        space: swept_space(),
        points: targets
            .iter()
            .map(|&cl| OperatingPoint { mach: Some(0.8), ..Default::default() }.cl_target(cl).weight(cl / total))
            .collect(),
        objective: mp_terms(Aggregate::WeightedSum),
        sense: Sense::Minimize,
        model: StandinModel::SweptWing,
        seed: 403,
    }
    .build();
    multi_b.alpha_solve = Some(AlphaSolve { lo: 2.0, hi: 12.0, iters: 12 });
    multi_b.derived =
        vec![DerivedMetric::MachLiftToDrag, DerivedMetric::MachLiftMatch { cl_star: None, weight: 1.0 }];
    vec![single, multi, multi_b]
}

fn cca() -> TaskSpec {
    let mut t = Base {
        id: "cca_ld",
        family: "cca",
        description: "Maximize L/D of a single-duct drone over 16 mixed variables.",
        space: space(vec![
            cont("theta_d", 0.25, 15.0, "deg"),
            cont("b_w", 25.0, 1000.0, "mm"),
            cont("alpha1", 0.0, 45.0, "deg"),
            cont("alpha2", 0.0, 10.0, "deg"),
            cont("p_w", 0.22, 0.51, ""),
            cont("x_r", 4500.0, 7500.0, "mm"),
            cont("l_i", 0.2, 0.6, ""),
            VariableSpec::categorical("n_naca", &["1412", "12", "2408", "4412"]),
            cont("theta_ft", 0.0, 10.0, "deg"),
            cont("theta_at", 12.0, 32.5, "deg"),
            cont("h_ta", 36.0, 220.0, "mm"),
            cont("h_ba", 38.0, 208.0, "mm"),
            cont("b", 6500.0, 20000.0, "mm"),
            cont("delta_r", 992.0, 1770.0, "mm"),
            cont("c_r", 1431.0, 2700.0, "mm"),
            cont("c_t", 800.0, 1200.0, "mm"),
        ]),
        points: vec![OperatingPoint::at_alpha(3.0).mach(0.42).reynolds(8e6)],
        objective: vec![ObjectiveTerm::new("LD", "LD", Aggregate::Single, Sense::Maximize)],
        sense: Sense::Maximize,
        model: StandinModel::Cca,
        seed: 501,
    }
    .build();
    t.derived = vec![DerivedMetric::LiftToDrag];
    t
}

pub const CAR_ANGLE_PARAMS: [&str; 6] = [
    "ramp_angle",
    "trunklid_angle",
    "diffusor_angle",
    "car_green_house_angle",
    "car_front_hood_angle",
    "car_air_intake_angle",
];

pub const CAR_IMAGES: [&str; 6] =
    ["Pressure_iso.png", "Pressure_top.png", "Pressure_side.png", "WSSx_iso.png", "WSSx_top.png", "WSSx_side.png"];

/// Artifact keys the car checks look up: base geometry and normalization statistics.
pub const CAR_ARTIFACTS: [&str; 2] = ["base_vtk_path", "norm_stats_path"];

pub fn car_space() -> ParamSpace {
    let d = |n: &str| cont(n, -0.05, 0.05, "m");
    let a = |n: &str| cont(n, -8.0, 8.0, "deg");
    let l = |n: &str| cont(n, -0.1, 0.1, "m");
    space(vec![
        cont("car_size", 0.8, 1.2, ""),
        l("car_width"),
        l("car_len"),
        a("ramp_angle"),
        l("front_bumper_length"),
        d("wind_screen_x"),
        d("wind_screen_z"),
        d("side_mirrors_x"),
        d("side_mirrors_z"),
        d("rear_window_x"),
        d("rear_window_z"),
        a("trunklid_angle"),
        d("trunklid_x"),
        d("trunklid_z"),
        a("diffusor_angle"),
        a("car_green_house_angle"),
        a("car_front_hood_angle"),
        a("car_air_intake_angle"),
        cont("tires_diameter", -0.013, 0.013, "m"),
        cont("tires_width", -0.015, 0.015, "m"),
    ])
}

fn car() -> TaskSpec {
    let mut t = Base {
        id: "car_cd",
        family: "car",
        description: "Minimize the drag coefficient of an estate-back car body over 20 shape parameters.",
        space: car_space(),
        points: vec![OperatingPoint { mach: Some(40.0 / 343.0), weight: 1.0, ..Default::default() }],
        objective: vec![ObjectiveTerm::new("Cd", "Cd", Aggregate::Single, Sense::Minimize)],
        sense: Sense::Minimize,
        model: StandinModel::Car,
        seed: 601,
    }
    .build();
    t.derived = vec![DerivedMetric::CarForces];
    t.diagnostics = DiagnosticsProfile {
        angle_params: CAR_ANGLE_PARAMS.iter().map(|s| s.to_string()).collect(),
        scale_param: Some("car_size".into()),
        width_param: Some("car_width".into()),
        length_param: Some("car_len".into()),
        required_metrics: ["drag", "Cd", "lift", "drag_pressure", "drag_shear"].iter().map(|s| s.to_string()).collect(),
        expected_images: CAR_IMAGES.iter().map(|s| s.to_string()).collect(),
        required_artifacts: CAR_ARTIFACTS.iter().map(|s| s.to_string()).collect(),
        compatibility_token: true,
    };
    t
}

fn ceras() -> TaskSpec {
    let mut t = Base {
        id: "ceras_fuel",
        family: "ceras",
        description: "Minimize fuel mass of a mixed-variable transport aircraft with a static-margin band.",
        space: space(vec![
            cont("x_mac", 16.0, 18.0, "m"),
            cont("ar_wing", 5.0, 11.0, ""),
            cont("ar_vt", 1.5, 6.0, ""),
            cont("ar_ht", 1.5, 6.0, ""),
            cont("taper_wing", 0.0, 1.0, ""),
            cont("sweep_wing", 20.0, 30.0, "deg"),
            VariableSpec::discrete("cruise_altitude", &[30000.0, 32000.0, 34000.0, 36000.0], "ft"),
            VariableSpec::discrete("n_engines", &[2.0, 3.0, 4.0], ""),
            VariableSpec::categorical("tail", &["T-tail", "no T-tail"]),
            VariableSpec::categorical("engine_position", &["front engines", "rear engines"]),
        ]),
        points: vec![OperatingPoint { mach: Some(0.78), weight: 1.0, ..Default::default() }],
        objective: vec![ObjectiveTerm::new("FuelMass", "FuelMass", Aggregate::Single, Sense::Minimize)],
        sense: Sense::Minimize,
        model: StandinModel::Ceras,
        seed: 701,
    }
    .build();
    t.constraints = vec![
        at_least("static_margin_min", "StaticMargin", 0.05, 0.05),
        at_most("static_margin_max", "StaticMargin", 0.1, 0.05),
    ];
    t.penalty_weight = 10_000.0;
    t.environment = "mixed".into();
    t
}

fn sta() -> TaskSpec {
    let flag = |n: &str| VariableSpec::discrete(n, &[0.0, 1.0], "");
    let mut t = Base {
        id: "sta_ld",
        family: "sta",
        description: "Maximize L/D of a supersonic transport with three boolean configuration choices.",
        space: space(vec![
            cont("sweep_in", 10.0, 50.0, "deg"),
            cont("sweep_out", 10.0, 70.0, "deg"),
            cont("canard_pos", 0.1, 0.4, ""),
            cont("wing_pos", 0.4, 0.7, ""),
            cont("break_chord", 0.1, 0.9, ""),
            cont("break_span", 0.1, 0.7, ""),
            flag("cranked"),
            flag("t_tail"),
            flag("canard"),
        ]),
        points: vec![OperatingPoint { mach: Some(1.5), weight: 1.0, ..Default::default() }],
        objective: vec![ObjectiveTerm::new("LD", "LD", Aggregate::Single, Sense::Maximize)],
        sense: Sense::Maximize,
        model: StandinModel::Sta,
        seed: 801,
    }
    .build();
    t.environment = "mixed".into();
    t
}

fn unit_box(d: usize, lo: f64, hi: f64) -> ParamSpace {
    space((0..d).map(|i| cont(&format!("x{i}"), lo, hi, "")).collect())
}

fn synthetic() -> Vec<TaskSpec> {
    let nominal = || vec![OperatingPoint { alpha: Some(0.0), weight: 1.0, ..Default::default() }];
    let f_min = || vec![ObjectiveTerm::new("f", "f", Aggregate::Single, Sense::Minimize)];
    let make = |id, description, space, model, seed| {
        let mut t = Base {
            id,
            family: "synthetic",
            description,
            space,
            points: nominal(),
            objective: f_min(),
            sense: Sense::Minimize,
            model,
            seed,
        }
        .build();
        t.environment = "synthetic".into();
        t
    };
    let center: Vec<f64> = (0..10).map(|i| 0.3 + 0.04 * i as f64).collect();
    let curvature: Vec<f64> = (0..10).map(|i| 10f64.powf(i as f64 / 9.0)).collect();
    vec![
        make(
            "sphere_10d",
            "Shifted sphere on the unit box.",
            unit_box(10, 0.0, 1.0),
            StandinModel::Sphere { center: center.clone() },
            901,
        ),
        make(
            "quadratic_10d",
            "Axis-aligned ill-conditioned quadratic on the unit box.",
            unit_box(10, 0.0, 1.0),
            StandinModel::Quadratic { center: center.clone(), curvature: curvature.clone() },
            902,
        ),
        make(
            "rotated_quadratic_10d",
            "The same quadratic under a fixed random rotation.",
            unit_box(10, 0.0, 1.0),
            StandinModel::RotatedQuadratic { center, curvature, rotation_seed: 7 },
            903,
        ),
        make("rosenbrock_2d", "Rosenbrock valley on [-2, 2]^2.", unit_box(2, -2.0, 2.0), StandinModel::Rosenbrock, 904),
        make("forrester_1d", "Multimodal one-dimensional test function.", unit_box(1, 0.0, 1.0), StandinModel::Forrester, 905),
        make(
            "linear_corner",
            "Linear function whose minimum sits at a box corner.",
            unit_box(4, 0.0, 1.0),
            StandinModel::Linear { coefficients: vec![1.0, -2.0, 0.5, -0.25] },
            906,
        ),
    ]
}
