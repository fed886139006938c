//! Robot API surface: the primitive calls a plan may contain and their
//! argument schemas.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::workcell::Pose6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApiError {
    #[error("unknown primitive `{0}`")]
    UnknownPrimitive(String),
    #[error("{primitive}: {reason}")]
    SchemaMismatch { primitive: String, reason: String },
    #[error("invalid api definition: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Primitive {
    MoveLinear,
    MoveVertical,
    OpenGripper,
    CloseGripper,
    RotateEe,
    GoHome,
    Wait,
}

impl Primitive {
    pub const ALL: [Primitive; 7] = [
        Primitive::MoveLinear,
        Primitive::MoveVertical,
        Primitive::OpenGripper,
        Primitive::CloseGripper,
        Primitive::RotateEe,
        Primitive::GoHome,
        Primitive::Wait,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Primitive::MoveLinear => "move_linear",
            Primitive::MoveVertical => "move_vertical",
            Primitive::OpenGripper => "open_gripper",
            Primitive::CloseGripper => "close_gripper",
            Primitive::RotateEe => "rotate_ee",
            Primitive::GoHome => "go_home",
            Primitive::Wait => "wait",
        }
    }

    /// Parameter names in canonical order.
    pub fn params(self) -> &'static [&'static str] {
        match self {
            Primitive::MoveLinear => &["x", "y", "z", "roll", "pitch", "yaw"],
            Primitive::MoveVertical => &["dz"],
            Primitive::OpenGripper | Primitive::CloseGripper => &["angle"],
            Primitive::RotateEe => &["angle"],
            Primitive::GoHome => &[],
            Primitive::Wait => &["seconds"],
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Primitive::MoveLinear => "straight-line move of the end-effector to an absolute pose",
            Primitive::MoveVertical => "move the end-effector straight up (dz > 0) or down (dz < 0)",
            Primitive::OpenGripper => "open the gripper to the given finger angle, releasing any held object",
            Primitive::CloseGripper => "close the gripper to the given finger angle, grasping the object between the fingers",
            Primitive::RotateEe => "rotate the wrist about the tool roll axis by the given angle",
            Primitive::GoHome => "return to the configured home pose",
            Primitive::Wait => "hold still",
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Primitive {
    type Err = ApiError;

    fn from_str(s: &str) -> Result<Self, ApiError> {
        Primitive::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ApiError::UnknownPrimitive(s.to_string()))
    }
}

/// One call in an action sequence. Kept untyped so that planner output can
/// be represented before it has been checked against an [`ApiSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionStep {
    pub primitive: String,
    pub args: BTreeMap<String, f64>,
}

impl ActionStep {
    pub fn new(primitive: impl Into<String>, args: &[(&str, f64)]) -> Self {
        Self {
            primitive: primitive.into(),
            args: args.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn arg(&self, name: &str) -> Option<f64> {
        self.args.get(name).copied()
    }
}

impl fmt::Display for ActionStep {
    /// Canonical plan-line rendering, arguments in schema order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.primitive)?;
        let order: Vec<&str> = match self.primitive.parse::<Primitive>() {
            Ok(p) => {
                let mut names: Vec<&str> = p.params().to_vec();
                names.extend(
                    self.args
                        .keys()
                        .map(String::as_str)
                        .filter(|k| !p.params().contains(k)),
                );
                names
            }
            Err(_) => self.args.keys().map(String::as_str).collect(),
        };
        let mut first = true;
        for name in order {
            if let Some(v) = self.args.get(name) {
                if !first {
                    f.write_str(", ")?;
                }
                first = false;
                write!(f, "{name}={v}")?;
            }
        }
        f.write_str(")")
    }
}

/// Typed form of an [`ActionStep`].
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    MoveLinear(Pose6),
    MoveVertical { dz: f64 },
    OpenGripper { angle: f64 },
    CloseGripper { angle: f64 },
    RotateEe { degrees: f64 },
    GoHome,
    Wait { seconds: f64 },
}

impl Command {
    pub fn primitive(&self) -> Primitive {
        match self {
            Command::MoveLinear(_) => Primitive::MoveLinear,
            Command::MoveVertical { .. } => Primitive::MoveVertical,
            Command::OpenGripper { .. } => Primitive::OpenGripper,
            Command::CloseGripper { .. } => Primitive::CloseGripper,
            Command::RotateEe { .. } => Primitive::RotateEe,
            Command::GoHome => Primitive::GoHome,
            Command::Wait { .. } => Primitive::Wait,
        }
    }

    /// Checks names only; value ranges belong to [`ApiSpec::check`].
    pub fn from_step(step: &ActionStep) -> Result<Self, ApiError> {
        let primitive: Primitive = step.primitive.parse()?;
        let expected = primitive.params();
        let mismatch = |reason: String| ApiError::SchemaMismatch {
            primitive: step.primitive.clone(),
            reason,
        };
        if let Some(extra) = step.args.keys().find(|k| !expected.contains(&k.as_str())) {
            return Err(mismatch(format!("unexpected argument `{extra}`")));
        }
        if let Some(missing) = expected.iter().find(|k| !step.args.contains_key(**k)) {
            return Err(mismatch(format!("missing argument `{missing}`")));
        }
        if let Some((k, v)) = step.args.iter().find(|(_, v)| !v.is_finite()) {
            return Err(mismatch(format!("argument `{k}` = {v} is not finite")));
        }
        let a = |name: &str| step.args[name];
        Ok(match primitive {
            Primitive::MoveLinear => Command::MoveLinear(Pose6 {
                x: a("x"),
                y: a("y"),
                z: a("z"),
                roll: a("roll"),
                pitch: a("pitch"),
                yaw: a("yaw"),
            }),
            Primitive::MoveVertical => Command::MoveVertical { dz: a("dz") },
            Primitive::OpenGripper => Command::OpenGripper { angle: a("angle") },
            Primitive::CloseGripper => Command::CloseGripper { angle: a("angle") },
            Primitive::RotateEe => Command::RotateEe { degrees: a("angle") },
            Primitive::GoHome => Command::GoHome,
            Primitive::Wait => Command::Wait { seconds: a("seconds") },
        })
    }

    pub fn to_step(&self) -> ActionStep {
        let name = self.primitive().name();
        match self {
            Command::MoveLinear(p) => ActionStep::new(
                name,
                &[
                    ("x", p.x),
                    ("y", p.y),
                    ("z", p.z),
                    ("roll", p.roll),
                    ("pitch", p.pitch),
                    ("yaw", p.yaw),
                ],
            ),
            Command::MoveVertical { dz } => ActionStep::new(name, &[("dz", *dz)]),
            Command::OpenGripper { angle } | Command::CloseGripper { angle } => {
                ActionStep::new(name, &[("angle", *angle)])
            }
            Command::RotateEe { degrees } => ActionStep::new(name, &[("angle", *degrees)]),
            Command::GoHome => ActionStep::new(name, &[]),
            Command::Wait { seconds } => ActionStep::new(name, &[("seconds", *seconds)]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
    pub unit: String,
}

impl ParamRange {
    fn new(min: f64, max: f64, unit: &str) -> Self {
        Self {
            min,
            max,
            unit: unit.to_string(),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

/// Allowed primitives with closed parameter ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<Primitive, BTreeMap<String, ParamRange>>")]
#[serde(into = "BTreeMap<Primitive, BTreeMap<String, ParamRange>>")]
pub struct ApiSpec {
    primitives: BTreeMap<Primitive, BTreeMap<String, ParamRange>>,
}

impl TryFrom<BTreeMap<Primitive, BTreeMap<String, ParamRange>>> for ApiSpec {
    type Error = ApiError;

    fn try_from(primitives: BTreeMap<Primitive, BTreeMap<String, ParamRange>>) -> Result<Self, ApiError> {
        ApiSpec::new(primitives)
    }
}

impl From<ApiSpec> for BTreeMap<Primitive, BTreeMap<String, ParamRange>> {
    fn from(a: ApiSpec) -> Self {
        a.primitives
    }
}

impl ApiSpec {
    pub fn new(primitives: BTreeMap<Primitive, BTreeMap<String, ParamRange>>) -> Result<Self, ApiError> {
        for (p, params) in &primitives {
            let mut names: Vec<&str> = params.keys().map(String::as_str).collect();
            let mut expected = p.params().to_vec();
            names.sort_unstable();
            expected.sort_unstable();
            if names != expected {
                return Err(ApiError::InvalidSpec(format!(
                    "{p} must declare exactly {expected:?}, got {names:?}"
                )));
            }
            for (name, r) in params {
                if !(r.min.is_finite() && r.max.is_finite() && r.min <= r.max) {
                    return Err(ApiError::InvalidSpec(format!(
                        "{p}.{name} range [{}, {}] is not a finite closed interval",
                        r.min, r.max
                    )));
                }
            }
        }
        Ok(Self { primitives })
    }

    pub fn primitives(&self) -> impl Iterator<Item = (Primitive, &BTreeMap<String, ParamRange>)> {
        self.primitives.iter().map(|(p, r)| (*p, r))
    }

    pub fn allows(&self, p: Primitive) -> bool {
        self.primitives.contains_key(&p)
    }

    pub fn range(&self, p: Primitive, param: &str) -> Option<&ParamRange> {
        self.primitives.get(&p).and_then(|r| r.get(param))
    }

    /// Resolves a step to its typed command, checking membership, argument
    /// names and ranges.
    pub fn check(&self, step: &ActionStep) -> Result<Command, ApiError> {
        let primitive: Primitive = step.primitive.parse()?;
        let ranges = self
            .primitives
            .get(&primitive)
            .ok_or_else(|| ApiError::UnknownPrimitive(step.primitive.clone()))?;
        let cmd = Command::from_step(step)?;
        for (name, r) in ranges {
            let v = step.args[name];
            if !r.contains(v) {
                return Err(ApiError::SchemaMismatch {
                    primitive: step.primitive.clone(),
                    reason: format!("{name}={v} outside [{}, {}] {}", r.min, r.max, r.unit),
                });
            }
        }
        Ok(cmd)
    }

    /// Human-readable listing used in prompts.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for (p, ranges) in &self.primitives {
            let sig: Vec<String> = p
                .params()
                .iter()
                .map(|n| {
                    let r = &ranges[*n];
                    format!("{n}: {} in [{}, {}]", r.unit, r.min, r.max)
                })
                .collect();
            out.push_str(&format!("- {}({}): {}\n", p.name(), sig.join(", "), p.summary()));
        }
        out
    }
}

impl Default for ApiSpec {
    fn default() -> Self {
        use std::f64::consts::PI;
        let mut m = BTreeMap::new();
        let entry = |pairs: &[(&str, ParamRange)]| -> BTreeMap<String, ParamRange> {
            pairs
                .iter()
                .map(|(k, r)| (k.to_string(), r.clone()))
                .collect()
        };
        m.insert(
            Primitive::MoveLinear,
            entry(&[
                ("x", ParamRange::new(-1.0, 1.0, "m")),
                ("y", ParamRange::new(-1.0, 1.0, "m")),
                ("z", ParamRange::new(0.0, 1.0, "m")),
                ("roll", ParamRange::new(-PI, PI, "rad")),
                ("pitch", ParamRange::new(-PI, PI, "rad")),
                ("yaw", ParamRange::new(-PI, PI, "rad")),
            ]),
        );
        m.insert(
            Primitive::MoveVertical,
            entry(&[("dz", ParamRange::new(-1.0, 1.0, "m"))]),
        );
        m.insert(
            Primitive::OpenGripper,
            entry(&[("angle", ParamRange::new(0.0, 0.8, "rad"))]),
        );
        m.insert(
            Primitive::CloseGripper,
            entry(&[("angle", ParamRange::new(0.0, 0.8, "rad"))]),
        );
        m.insert(
            Primitive::RotateEe,
            entry(&[("angle", ParamRange::new(-180.0, 180.0, "deg"))]),
        );
        m.insert(Primitive::GoHome, BTreeMap::new());
        m.insert(
            Primitive::Wait,
            entry(&[("seconds", ParamRange::new(0.0, 10.0, "s"))]),
        );
        ApiSpec::new(m).expect("default api definition is well-formed")
    }
}
