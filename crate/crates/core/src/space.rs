//! Mixed design spaces.
//!
//! A [`ParamSpace`] is an ordered list of continuous, discrete and
//! categorical variables. Optimizers never see raw values: they work on the
//! *relaxed unit cube*, where
//!
//! * a continuous variable `x ∈ [l, u]` maps to `(x − l) / (u − l)`,
//! * a discrete variable with `L` levels maps its level index `i` to `i / (L − 1)`,
//! * a categorical variable with `L` levels expands to a one-hot block of width `L`.
//!
//! Decoding a relaxed vector takes the argmax of each one-hot block (lowest
//! index wins ties) and the nearest level index for discrete variables (lower
//! index wins ties).

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use rand::Rng;
use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::rng::{self, BenchRng};

/// Reserved metadata key in design files.
pub const NAME_KEY: &str = "name";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("invalid variable spec `{name}`: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("missing value for variable `{0}`")]
    MissingVariable(String),
    #[error("variable `{name}` expects a {expected} value")]
    KindMismatch { name: String, expected: &'static str },
    #[error("value {value} of `{name}` outside [{lower}, {upper}]")]
    OutOfBounds { name: String, value: f64, lower: f64, upper: f64 },
    #[error("non-finite value for `{0}`")]
    NonFiniteValue(String),
    #[error("`{name}` has no level {level}")]
    UnknownLevel { name: String, level: String },
    #[error("relaxed vector has length {got}, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("relaxed component {0} is not finite")]
    NonFiniteComponent(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Discrete,
    Categorical,
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarKind::Continuous => "continuous",
            VarKind::Discrete => "discrete",
            VarKind::Categorical => "categorical",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Continuous { lower: f64, upper: f64 },
    Discrete { levels: Vec<f64> },
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    #[serde(flatten)]
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub unit: String,
}

impl VariableSpec {
    pub fn continuous(name: &str, lower: f64, upper: f64, unit: &str) -> Self {
        Self { name: name.into(), domain: Domain::Continuous { lower, upper }, unit: unit.into() }
    }

    pub fn discrete(name: &str, levels: &[f64], unit: &str) -> Self {
        Self { name: name.into(), domain: Domain::Discrete { levels: levels.to_vec() }, unit: unit.into() }
    }

    pub fn categorical(name: &str, levels: &[&str]) -> Self {
        Self {
            name: name.into(),
            domain: Domain::Categorical { levels: levels.iter().map(|s| s.to_string()).collect() },
            unit: String::new(),
        }
    }

    pub fn kind(&self) -> VarKind {
        match self.domain {
            Domain::Continuous { .. } => VarKind::Continuous,
            Domain::Discrete { .. } => VarKind::Discrete,
            Domain::Categorical { .. } => VarKind::Categorical,
        }
    }

    /// Width of this variable in the relaxed unit cube.
    pub fn relaxed_width(&self) -> usize {
        match &self.domain {
            Domain::Categorical { levels } => levels.len(),
            _ => 1,
        }
    }

    /// Numeric bounds for continuous and discrete variables.
    pub fn numeric_bounds(&self) -> Option<(f64, f64)> {
        match &self.domain {
            Domain::Continuous { lower, upper } => Some((*lower, *upper)),
            Domain::Discrete { levels } => {
                let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Some((lo, hi))
            }
            Domain::Categorical { .. } => None,
        }
    }

    fn check(&self) -> Result<(), SpaceError> {
        let bad = |reason: &str| SpaceError::InvalidSpec { name: self.name.clone(), reason: reason.into() };
        if self.name.is_empty() || self.name == NAME_KEY {
            return Err(bad("reserved or empty name"));
        }
        match &self.domain {
            Domain::Continuous { lower, upper } => {
                if !lower.is_finite() || !upper.is_finite() {
                    return Err(bad("bounds must be finite"));
                }
                if lower >= upper {
                    return Err(bad("lower bound must be below upper bound"));
                }
            }
            Domain::Discrete { levels } => {
                if levels.len() < 2 {
                    return Err(bad("needs at least two levels"));
                }
                if levels.iter().any(|l| !l.is_finite()) {
                    return Err(bad("levels must be finite"));
                }
                for (i, a) in levels.iter().enumerate() {
                    if levels[..i].iter().any(|b| b == a) {
                        return Err(bad("levels must be distinct"));
                    }
                }
            }
            Domain::Categorical { levels } => {
                if levels.len() < 2 {
                    return Err(bad("needs at least two levels"));
                }
                let unique: HashSet<&String> = levels.iter().collect();
                if unique.len() != levels.len() {
                    return Err(bad("levels must be distinct"));
                }
            }
        }
        Ok(())
    }

    /// Index of a discrete level matching `value` (relative tolerance 1e-9).
    pub fn discrete_index(&self, value: f64) -> Option<usize> {
        match &self.domain {
            Domain::Discrete { levels } => {
                levels.iter().position(|l| (l - value).abs() <= 1e-9 * l.abs().max(1.0))
            }
            _ => None,
        }
    }
}

/// A value assigned to one variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    Label(String),
}

impl Value {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(x) => Some(*x),
            Value::Label(_) => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Value::Label(s) => Some(s),
            Value::Real(_) => None,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Label(s.to_string())
    }
}

/// A named assignment of values to the variables of a space.
///
/// Serializes to the flat design-file shape: one key per variable plus an
/// optional string `name`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DesignPoint {
    pub name: Option<String>,
    pub values: IndexMap<String, Value>,
}

impl DesignPoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.values.insert(key.to_string(), value.into());
        self
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    pub fn real(&self, key: &str) -> Option<f64> {
        self.values.get(key).and_then(Value::as_real)
    }
}

impl Serialize for DesignPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let len = self.values.len() + usize::from(self.name.is_some());
        let mut map = serializer.serialize_map(Some(len))?;
        for (k, v) in &self.values {
            map.serialize_entry(k, v)?;
        }
        if let Some(name) = &self.name {
            map.serialize_entry(NAME_KEY, name)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for DesignPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PointVisitor;

        impl<'de> Visitor<'de> for PointVisitor {
            type Value = DesignPoint;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of variable names to numbers or labels")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<DesignPoint, A::Error> {
                let mut point = DesignPoint::default();
                while let Some(key) = access.next_key::<String>()? {
                    if key == NAME_KEY {
                        let name: String = access.next_value()?;
                        point.name = Some(name);
                    } else {
                        let value: Value = access.next_value()?;
                        point.values.insert(key, value);
                    }
                }
                Ok(point)
            }
        }

        deserializer.deserialize_map(PointVisitor)
    }
}

/// Ordered mixed design space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpace {
    variables: Vec<VariableSpec>,
    #[serde(skip)]
    relaxed_dim: usize,
}

impl<'de> Deserialize<'de> for ParamSpace {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            variables: Vec<VariableSpec>,
        }
        let raw = Raw::deserialize(deserializer)?;
        ParamSpace::new(raw.variables).map_err(serde::de::Error::custom)
    }
}

impl ParamSpace {
    pub fn new(variables: Vec<VariableSpec>) -> Result<Self, SpaceError> {
        let mut seen = HashSet::new();
        for v in &variables {
            v.check()?;
            if !seen.insert(v.name.as_str()) {
                return Err(SpaceError::DuplicateName(v.name.clone()));
            }
        }
        let relaxed_dim = variables.iter().map(VariableSpec::relaxed_width).sum();
        Ok(Self { variables, relaxed_dim })
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&VariableSpec> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn relaxed_dim(&self) -> usize {
        self.relaxed_dim
    }

    pub fn count(&self, kind: VarKind) -> usize {
        self.variables.iter().filter(|v| v.kind() == kind).count()
    }

    pub fn is_mixed(&self) -> bool {
        self.count(VarKind::Continuous) < self.len()
    }

    /// Checks presence, kind and domain membership of every value.
    pub fn validate(&self, point: &DesignPoint) -> Result<(), SpaceError> {
        for key in point.values.keys() {
            if self.variable(key).is_none() {
                return Err(SpaceError::UnknownVariable(key.clone()));
            }
        }
        for var in &self.variables {
            let value = point.get(&var.name).ok_or_else(|| SpaceError::MissingVariable(var.name.clone()))?;
            self.level_or_value(var, value)?;
        }
        Ok(())
    }

    fn level_or_value(&self, var: &VariableSpec, value: &Value) -> Result<f64, SpaceError> {
        match (&var.domain, value) {
            (Domain::Continuous { lower, upper }, Value::Real(x)) => {
                if !x.is_finite() {
                    return Err(SpaceError::NonFiniteValue(var.name.clone()));
                }
                if x < lower || x > upper {
                    return Err(SpaceError::OutOfBounds {
                        name: var.name.clone(),
                        value: *x,
                        lower: *lower,
                        upper: *upper,
                    });
                }
                Ok((x - lower) / (upper - lower))
            }
            (Domain::Discrete { .. }, Value::Real(x)) => var
                .discrete_index(*x)
                .map(|i| i as f64)
                .ok_or_else(|| SpaceError::UnknownLevel { name: var.name.clone(), level: x.to_string() }),
            (Domain::Categorical { levels }, Value::Label(s)) => levels
                .iter()
                .position(|l| l == s)
                .map(|i| i as f64)
                .ok_or_else(|| SpaceError::UnknownLevel { name: var.name.clone(), level: s.clone() }),
            (Domain::Categorical { .. }, Value::Real(_)) => {
                Err(SpaceError::KindMismatch { name: var.name.clone(), expected: "label" })
            }
            (_, Value::Label(_)) => Err(SpaceError::KindMismatch { name: var.name.clone(), expected: "numeric" }),
        }
    }

    /// Maps a point into the relaxed unit cube.
    pub fn normalize(&self, point: &DesignPoint) -> Result<Vec<f64>, SpaceError> {
        self.validate(point)?;
        let mut out = Vec::with_capacity(self.relaxed_dim);
        for var in &self.variables {
            let value = &point.values[&var.name];
            let coord = self.level_or_value(var, value)?;
            match &var.domain {
                Domain::Continuous { .. } => out.push(coord),
                Domain::Discrete { levels } => out.push(coord / (levels.len() - 1) as f64),
                Domain::Categorical { levels } => {
                    let hot = coord as usize;
                    out.extend((0..levels.len()).map(|i| if i == hot { 1.0 } else { 0.0 }));
                }
            }
        }
        Ok(out)
    }

    /// Decodes a relaxed unit-cube vector into a design point.
    ///
    /// Components are clamped into `[0, 1]` before decoding.
    pub fn denormalize(&self, u: &[f64]) -> Result<DesignPoint, SpaceError> {
        if u.len() != self.relaxed_dim {
            return Err(SpaceError::WrongLength { expected: self.relaxed_dim, got: u.len() });
        }
        if let Some(i) = u.iter().position(|c| !c.is_finite()) {
            return Err(SpaceError::NonFiniteComponent(i));
        }
        let mut point = DesignPoint::default();
        let mut offset = 0;
        for var in &self.variables {
            let value = match &var.domain {
                Domain::Continuous { lower, upper } => {
                    let t = u[offset].clamp(0.0, 1.0);
                    Value::Real((lower + t * (upper - lower)).clamp(*lower, *upper))
                }
                Domain::Discrete { levels } => {
                    let idx = nearest_index(u[offset].clamp(0.0, 1.0), levels.len());
                    Value::Real(levels[idx])
                }
                Domain::Categorical { levels } => {
                    let block = &u[offset..offset + levels.len()];
                    Value::Label(levels[argmax_lowest(block)].clone())
                }
            };
            offset += var.relaxed_width();
            point.values.insert(var.name.clone(), value);
        }
        Ok(point)
    }

    /// One design drawn uniformly: each variable independently over its box or
    /// level set.
    pub fn sample_point(&self, rng: &mut BenchRng) -> DesignPoint {
        let mut point = DesignPoint::default();
        for var in &self.variables {
            let value = match &var.domain {
                Domain::Continuous { lower, upper } => {
                    let t: f64 = rng.random();
                    Value::Real(lower + t * (upper - lower))
                }
                Domain::Discrete { levels } => Value::Real(levels[rng.random_range(0..levels.len())]),
                Domain::Categorical { levels } => Value::Label(levels[rng.random_range(0..levels.len())].clone()),
            };
            point.values.insert(var.name.clone(), value);
        }
        point
    }

    /// `n` independent uniform designs, reproducible from `seed`.
    pub fn sample_uniform(&self, seed: u64, n: usize) -> Vec<DesignPoint> {
        let mut rng = rng::stream(seed, rng::streams::SAMPLING);
        (0..n).map(|_| self.sample_point(&mut rng)).collect()
    }

    /// Projects a point onto the space: continuous values are clamped, discrete
    /// values snap to the nearest level (lower level on ties).
    pub fn clip(&self, point: &DesignPoint) -> Result<DesignPoint, SpaceError> {
        let mut out = DesignPoint { name: point.name.clone(), values: IndexMap::new() };
        for key in point.values.keys() {
            if self.variable(key).is_none() {
                return Err(SpaceError::UnknownVariable(key.clone()));
            }
        }
        for var in &self.variables {
            let value = point.get(&var.name).ok_or_else(|| SpaceError::MissingVariable(var.name.clone()))?;
            let clipped = match (&var.domain, value) {
                (Domain::Continuous { lower, upper }, Value::Real(x)) => {
                    if x.is_nan() {
                        return Err(SpaceError::NonFiniteValue(var.name.clone()));
                    }
                    Value::Real(x.clamp(*lower, *upper))
                }
                (Domain::Discrete { levels }, Value::Real(x)) => {
                    if x.is_nan() {
                        return Err(SpaceError::NonFiniteValue(var.name.clone()));
                    }
                    Value::Real(levels[nearest_level(levels, *x)])
                }
                (Domain::Categorical { .. }, Value::Label(_)) => {
                    self.level_or_value(var, value)?;
                    value.clone()
                }
                (Domain::Categorical { .. }, _) => {
                    return Err(SpaceError::KindMismatch { name: var.name.clone(), expected: "label" })
                }
                (_, _) => return Err(SpaceError::KindMismatch { name: var.name.clone(), expected: "numeric" }),
            };
            out.values.insert(var.name.clone(), clipped);
        }
        Ok(out)
    }

    /// Indices of relaxed coordinates that belong to continuous variables.
    pub fn continuous_coords(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut offset = 0;
        for var in &self.variables {
            if var.kind() == VarKind::Continuous {
                out.push(offset);
            }
            offset += var.relaxed_width();
        }
        out
    }
}

/// Nearest index for `t ∈ [0,1]` on a grid of `levels` points, lower index on ties.
fn nearest_index(t: f64, levels: usize) -> usize {
    let scaled = t * (levels - 1) as f64;
    let lower = scaled.floor();
    let idx = if scaled - lower > 0.5 { lower + 1.0 } else { lower };
    (idx as usize).min(levels - 1)
}

/// Level closest in value to `x`; the earlier level wins ties.
fn nearest_level(levels: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, l) in levels.iter().enumerate() {
        if (l - x).abs() < (levels[best] - x).abs() {
            best = i;
        }
    }
    best
}

fn argmax_lowest(block: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in block.iter().enumerate() {
        if *v > block[best] {
            best = i;
        }
    }
    best
}
