//! Problem files: a TOML document describing a hierarchical problem, its
//! schedules, solver settings and oracle hints. See `docs/problem-format.md`
//! for the grammar.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bifunction::{Bifunction, BifunctionError, BifunctionKind, Contraction, ConvexFunctional, MonotoneMap, NonexpansiveMap};
use crate::geometry::{GeometryError, Point, SetDescriptor};
use crate::resolvent::{ResolventConfig, ResolventMethod};
use crate::sampling;
use crate::schedule::{FamilyKind, GapModel, ScheduleError, ScheduleSet, SequenceFamily, Theorem};
use crate::solver::{HepProblem, RunConfig, SolverError, StoppingRule};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("{0}")]
    Parse(String),
    #[error("line {line}: [{section}] {message}")]
    Invalid {
        section: String,
        line: usize,
        message: String,
    },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("cannot serialize problem: {0}")]
    Serialize(String),
}

fn one() -> u64 {
    1
}

fn is_one(v: &u64) -> bool {
    *v == 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    WholeSpace,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `{x : ⟨normal, x⟩ ≤ offset}`
    Halfspace { normal: Vec<f64>, offset: f64 },
    /// `{x : rows · x = rhs}`
    Affine { rows: Vec<Vec<f64>>, rhs: Vec<f64> },
    Simplex { radius: f64 },
    Singleton { point: Vec<f64> },
    Intersection { feasible: Vec<f64>, sets: Vec<SetSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    /// `½⟨Qx, x⟩ + ⟨linear, x⟩ + constant`
    Quadratic {
        matrix: Vec<Vec<f64>>,
        linear: Vec<f64>,
        #[serde(default)]
        constant: f64,
    },
    /// `(weight/2)‖x − center‖²`
    Isotropic { weight: f64, center: Vec<f64> },
    HalfSquaredDistance { set: SetSpec },
    Norm1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Identity,
    Linear { matrix: Vec<Vec<f64>> },
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    GradientOfQuadratic { matrix: Vec<Vec<f64>>, linear: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonexpansiveSpec {
    Identity,
    Projection { set: SetSpec },
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// Rotations by `angle` in the coordinate planes `(i, j)`.
    Rotation { planes: Vec<(usize, usize, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BifunctionSpec {
    DifferenceOfFunction {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modulus: Option<f64>,
        functional: FunctionalSpec,
    },
    DirectionalDerivative {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modulus: Option<f64>,
        functional: FunctionalSpec,
    },
    OperatorVi {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modulus: Option<f64>,
        map: MapSpec,
    },
    FixedPointGap {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modulus: Option<f64>,
        map: NonexpansiveSpec,
    },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContractionSpec {
    Constant { point: Vec<f64> },
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Constant {
        value: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        offset: u64,
    },
    PowerLaw {
        a: f64,
        p: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        offset: u64,
    },
    LogPower {
        a: f64,
        p: f64,
        q: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        offset: u64,
    },
    LinearRamp {
        start: f64,
        slope: f64,
        cap: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        offset: u64,
    },
    Complement {
        total: f64,
        a: f64,
        p: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        offset: u64,
    },
    Table {
        values: Vec<f64>,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        offset: u64,
    },
}

fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulesSpec {
    #[serde(default = "default_c")]
    pub c: f64,
    pub r: FamilySpec,
    pub lambda: FamilySpec,
    pub gamma: FamilySpec,
    pub alpha: FamilySpec,
    pub beta: FamilySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<FamilySpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    ClosedForm,
    InnerProjectedGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub x1: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minty_probes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cert_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GapSpec {
    HalfSquaredDistance,
    FixedPoint { excess_per_unit: f64 },
    Zero,
    Custom { coefficient: f64, exponent: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleHintsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_solution: Option<Vec<f64>>,
    /// `p ∈ N_{S_F}(x̄)` with `−p ∈ A^G(x̄)`; zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplier: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_solution_set: Option<SetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_set: Option<SetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<GapSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<String>,
    pub set: SetSpec,
    pub lower_bifunction: BifunctionSpec,
    pub upper_bifunction: BifunctionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selector: Option<ContractionSpec>,
    pub schedules: SchedulesSpec,
    pub solver: SolverSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_hints: Option<OracleHintsSpec>,
}

/// Everything a run needs, assembled from a [`ProblemFile`].
#[derive(Debug, Clone)]
pub struct Assembled {
    pub name: String,
    pub problem: HepProblem,
    pub schedules: ScheduleSet,
    pub theorem: Option<Theorem>,
    pub gap: GapModel,
    pub multiplier: Point,
    pub x1: Point,
    pub x0: Option<Point>,
    pub stop: StoppingRule,
    pub run: RunConfig,
    pub cert_tol: f64,
    pub seed: u64,
}

pub const DEFAULT_CERT_TOL: f64 = 1e-6;

pub const PRESET_NAMES: [&str; 5] = ["thm1_weak", "thm2_strong", "thm3_viscosity", "remark3_prox", "fixedpoint_lower"];

pub fn preset_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "thm1_weak" => include_str!("../presets/thm1_weak.toml"),
        "thm2_strong" => include_str!("../presets/thm2_strong.toml"),
        "thm3_viscosity" => include_str!("../presets/thm3_viscosity.toml"),
        "remark3_prox" => include_str!("../presets/remark3_prox.toml"),
        "fixedpoint_lower" => include_str!("../presets/fixedpoint_lower.toml"),
        _ => return None,
    })
}

pub fn preset(name: &str) -> Result<ProblemFile, ProblemError> {
    let src = preset_source(name).ok_or_else(|| ProblemError::UnknownPreset(name.to_string()))?;
    ProblemFile::parse(src)
}

/// Line of the first header or key mentioning `section` in `src`.
fn section_line(src: Option<&str>, section: &str) -> usize {
    let Some(src) = src else { return 0 };
    let head = section.split('.').next().unwrap_or(section);
    for (i, line) in src.lines().enumerate() {
        let t = line.trim_start();
        if t.starts_with(&format!("[{section}")) || t.starts_with(&format!("{section} ")) || t.starts_with(&format!("{section}=")) {
            return i + 1;
        }
    }
    for (i, line) in src.lines().enumerate() {
        let t = line.trim_start();
        if t.starts_with(&format!("[{head}")) || t.starts_with(&format!("{head} ")) || t.starts_with(&format!("{head}=")) {
            return i + 1;
        }
    }
    0
}

struct Ctx<'a> {
    src: Option<&'a str>,
    dim: usize,
}

impl Ctx<'_> {
    fn err(&self, section: &str, message: impl std::fmt::Display) -> ProblemError {
        ProblemError::Invalid {
            section: section.to_string(),
            line: section_line(self.src, section),
            message: message.to_string(),
        }
    }

    fn point(&self, section: &str, v: &[f64]) -> Result<Point, ProblemError> {
        if v.len() != self.dim {
            return Err(self.err(section, format!("expected {} coordinates, found {}", self.dim, v.len())));
        }
        Point::from_slice(v).map_err(|e| self.err(section, e))
    }

    fn vector(&self, section: &str, v: &[f64]) -> Result<DVector<f64>, ProblemError> {
        Ok(self.point(section, v)?.into_vector())
    }

    fn matrix(&self, section: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, ProblemError> {
        if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
            return Err(self.err(section, format!("matrix must be {0}×{0}", self.dim)));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(self.err(section, "matrix entries must be finite"));
        }
        Ok(DMatrix::from_fn(self.dim, self.dim, |i, j| rows[i][j]))
    }

    fn set(&self, section: &str, s: &SetSpec) -> Result<SetDescriptor, ProblemError> {
        let geo = |r: Result<SetDescriptor, GeometryError>| r.map_err(|e| self.err(section, e));
        match s {
            SetSpec::WholeSpace => geo(SetDescriptor::whole_space(self.dim)),
            SetSpec::Box { lower, upper } => {
                if lower.len() != self.dim || upper.len() != self.dim {
                    return Err(self.err(section, format!("box bounds need {} coordinates", self.dim)));
                }
                geo(SetDescriptor::boxed(lower.clone(), upper.clone()))
            }
            SetSpec::Ball { center, radius } => geo(SetDescriptor::ball(self.point(section, center)?, *radius)),
            SetSpec::Halfspace { normal, offset } => {
                self.point(section, normal)?;
                geo(SetDescriptor::halfspace(normal.clone(), *offset))
            }
            SetSpec::Affine { rows, rhs } => {
                if rows.iter().any(|r| r.len() != self.dim) {
                    return Err(self.err(section, format!("affine rows need {} entries", self.dim)));
                }
                geo(SetDescriptor::affine(rows.clone(), rhs.clone()))
            }
            SetSpec::Simplex { radius } => geo(SetDescriptor::simplex(self.dim, *radius)),
            SetSpec::Singleton { point } => Ok(SetDescriptor::singleton(self.point(section, point)?)),
            SetSpec::Intersection { feasible, sets } => {
                let members = sets
                    .iter()
                    .map(|m| self.set(section, m))
                    .collect::<Result<Vec<_>, _>>()?;
                geo(SetDescriptor::intersection(members, self.point(section, feasible)?))
            }
        }
    }

    fn functional(&self, section: &str, f: &FunctionalSpec) -> Result<ConvexFunctional, ProblemError> {
        let bif = |r: Result<ConvexFunctional, BifunctionError>| r.map_err(|e| self.err(section, e));
        match f {
            FunctionalSpec::Quadratic {
                matrix,
                linear,
                constant,
            } => bif(ConvexFunctional::quadratic(
                self.matrix(section, matrix)?,
                self.vector(section, linear)?,
                *constant,
            )),
            FunctionalSpec::Isotropic { weight, center } => {
                if !(*weight >= 0.0) || !weight.is_finite() {
                    return Err(self.err(section, "isotropic weight must be finite and nonnegative"));
                }
                bif(ConvexFunctional::isotropic(*weight, &self.point(section, center)?))
            }
            FunctionalSpec::HalfSquaredDistance { set } => {
                Ok(ConvexFunctional::HalfSquaredDistance(self.set(section, set)?))
            }
            FunctionalSpec::Norm1 => Ok(ConvexFunctional::Norm1 { dim: self.dim }),
        }
    }

    fn bifunction(&self, section: &str, b: &BifunctionSpec, domain: &SetDescriptor) -> Result<Bifunction, ProblemError> {
        let bif = |r: Result<Bifunction, BifunctionError>| r.map_err(|e| self.err(section, e));
        let (kind, modulus) = match b {
            BifunctionSpec::Zero => (BifunctionKind::Zero, None),
            BifunctionSpec::DifferenceOfFunction { modulus, functional } => (
                BifunctionKind::DifferenceOfFunction(self.functional(section, functional)?),
                *modulus,
            ),
            BifunctionSpec::DirectionalDerivative { modulus, functional } => (
                BifunctionKind::DirectionalDerivative(self.functional(section, functional)?),
                *modulus,
            ),
            BifunctionSpec::OperatorVi { modulus, map } => {
                let m = match map {
                    MapSpec::Identity => Ok(MonotoneMap::identity(self.dim)),
                    MapSpec::Linear { matrix } => MonotoneMap::linear(self.matrix(section, matrix)?),
                    MapSpec::Affine { matrix, offset } => {
                        MonotoneMap::affine(self.matrix(section, matrix)?, self.vector(section, offset)?)
                    }
                    MapSpec::GradientOfQuadratic { matrix, linear } => {
                        MonotoneMap::gradient_of_quadratic(self.matrix(section, matrix)?, self.vector(section, linear)?)
                    }
                }
                .map_err(|e| self.err(section, e))?;
                (BifunctionKind::OperatorVI(m), *modulus)
            }
            BifunctionSpec::FixedPointGap { modulus, map } => {
                let t = match map {
                    NonexpansiveSpec::Identity => Ok(NonexpansiveMap::Identity { dim: self.dim }),
                    NonexpansiveSpec::Projection { set } => Ok(NonexpansiveMap::ProjectionOnto(self.set(section, set)?)),
                    NonexpansiveSpec::Affine { matrix, offset } => {
                        NonexpansiveMap::affine(self.matrix(section, matrix)?, self.vector(section, offset)?)
                    }
                    NonexpansiveSpec::Rotation { planes } => NonexpansiveMap::rotation(self.dim, planes.clone()),
                }
                .map_err(|e| self.err(section, e))?;
                (BifunctionKind::FixedPointGap(t), *modulus)
            }
        };
        let f = bif(Bifunction::new(kind, domain.clone()))?;
        match modulus {
            Some(rho) => bif(f.with_declared_modulus(rho)),
            None => Ok(f),
        }
    }

    fn family(&self, section: &str, f: &FamilySpec) -> Result<SequenceFamily, ProblemError> {
        let (kind, offset) = match f {
            FamilySpec::Constant { value, offset } => (FamilyKind::Constant(*value), *offset),
            FamilySpec::PowerLaw { a, p, offset } => (FamilyKind::PowerLaw { a: *a, p: *p }, *offset),
            FamilySpec::LogPower { a, p, q, offset } => (FamilyKind::LogPower { a: *a, p: *p, q: *q }, *offset),
            FamilySpec::LinearRamp {
                start,
                slope,
                cap,
                offset,
            } => (
                FamilyKind::LinearRamp {
                    start: *start,
                    slope: *slope,
                    cap: *cap,
                },
                *offset,
            ),
            FamilySpec::Complement { total, a, p, offset } => (
                FamilyKind::Complement {
                    total: *total,
                    a: *a,
                    p: *p,
                },
                *offset,
            ),
            FamilySpec::Table { values, offset } => (FamilyKind::Table(values.clone()), *offset),
        };
        SequenceFamily::new(kind, offset).map_err(|e| self.err(section, e))
    }
}

impl ProblemFile {
    /// Parses and checks the document shape; unknown keys are rejected.
    pub fn parse(src: &str) -> Result<Self, ProblemError> {
        toml::from_str(src).map_err(|e| ProblemError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, ProblemError> {
        toml::to_string(self).map_err(|e| ProblemError::Serialize(e.to_string()))
    }

    pub fn theorem(&self) -> Result<Option<Theorem>, ScheduleError> {
        self.theorem.as_deref().map(str::parse).transpose()
    }

    pub fn schedules(&self) -> Result<ScheduleSet, ProblemError> {
        self.schedules_in(None)
    }

    fn schedules_in(&self, src: Option<&str>) -> Result<ScheduleSet, ProblemError> {
        let ctx = Ctx { src, dim: self.dimension };
        let s = &self.schedules;
        let b = s.b.as_ref().map(|f| ctx.family("schedules.b", f)).transpose()?;
        ScheduleSet::new(
            ctx.family("schedules.r", &s.r)?,
            ctx.family("schedules.lambda", &s.lambda)?,
            ctx.family("schedules.gamma", &s.gamma)?,
            ctx.family("schedules.alpha", &s.alpha)?,
            ctx.family("schedules.beta", &s.beta)?,
            s.c,
            b,
        )
        .map_err(|e| ctx.err("schedules", e))
    }

    /// Builds the problem with the file seed (or `HEQ_SEED`).
    pub fn assemble(&self) -> Result<Assembled, ProblemError> {
        self.assemble_with(None, sampling::resolve_seed(self.seed))
    }

    /// Builds the problem; `src` is only used to anchor diagnostics.
    pub fn assemble_with(&self, src: Option<&str>, seed: u64) -> Result<Assembled, ProblemError> {
        if self.dimension == 0 {
            return Err(ProblemError::Invalid {
                section: "dimension".into(),
                line: section_line(src, "dimension"),
                message: "dimension must be at least 1".into(),
            });
        }
        let ctx = Ctx { src, dim: self.dimension };
        let theorem = self.theorem().map_err(|e| ctx.err("theorem", e))?;
        let domain = ctx.set("set", &self.set)?;
        let lower = ctx.bifunction("lower_bifunction", &self.lower_bifunction, &domain)?;
        let upper = ctx.bifunction("upper_bifunction", &self.upper_bifunction, &domain)?;
        let solver_err = |section: &str, e: SolverError| ctx.err(section, e);
        let mut problem = HepProblem::new(domain.clone(), lower.clone(), upper).map_err(|e| solver_err("set", e))?;
        if let Some(sel) = &self.selector {
            let g = match sel {
                ContractionSpec::Constant { point } => Ok(Contraction::Constant(ctx.point("selector", point)?)),
                ContractionSpec::Affine { matrix, offset } => {
                    Contraction::affine(ctx.matrix("selector", matrix)?, ctx.vector("selector", offset)?)
                }
            }
            .map_err(|e| ctx.err("selector", e))?;
            problem = problem.with_selector(g).map_err(|e| solver_err("selector", e))?;
        }
        let hints = self.oracle_hints.clone().unwrap_or_default();
        if let Some(s_f) = &hints.lower_solution_set {
            let s_f = ctx.set("oracle_hints.lower_solution_set", s_f)?;
            problem = problem
                .with_lower_solution_set(s_f, seed)
                .map_err(|e| solver_err("oracle_hints.lower_solution_set", e))?;
        }
        if let Some(s) = &hints.solution_set {
            let s = ctx.set("oracle_hints.solution_set", s)?;
            problem = problem.with_solution_set(s).map_err(|e| solver_err("oracle_hints.solution_set", e))?;
        }
        if let Some(x) = &hints.known_solution {
            let x = ctx.point("oracle_hints", x)?;
            problem = problem
                .with_known_solution(x, seed)
                .map_err(|e| solver_err("oracle_hints", e))?;
        }
        let multiplier = match &hints.multiplier {
            Some(p) => ctx.point("oracle_hints", p)?,
            None => Point::zeros(self.dimension),
        };
        let gap = match &hints.gap {
            Some(GapSpec::HalfSquaredDistance) => GapModel::HalfSquaredDistance,
            Some(GapSpec::FixedPoint { excess_per_unit }) => GapModel::FixedPoint {
                excess_per_unit: *excess_per_unit,
            },
            Some(GapSpec::Zero) => GapModel::Zero,
            Some(GapSpec::Custom { coefficient, exponent }) => GapModel::Custom {
                coefficient: *coefficient,
                exponent: *exponent,
            },
            None => infer_gap(&lower, &multiplier, problem.lower_solution_set())
                .map_err(|m| ctx.err("oracle_hints.gap", m))?,
        };
        gap.validate().map_err(|e| ctx.err("oracle_hints.gap", e))?;

        let schedules = self.schedules_in(src)?;
        let sv = &self.solver;
        let x1 = ctx.point("solver", &sv.x1)?;
        let x0 = sv.x0.as_ref().map(|v| ctx.point("solver", v)).transpose()?;
        let defaults = StoppingRule::default();
        let stop = StoppingRule {
            max_iters: sv.max_iters.unwrap_or(defaults.max_iters),
            step_tol: sv.step_tol.unwrap_or(defaults.step_tol),
            solution_tol: sv.solution_tol.unwrap_or(defaults.solution_tol),
        };
        stop.validate().map_err(|e| solver_err("solver", e))?;
        let rdef = ResolventConfig::default();
        let resolvent = ResolventConfig {
            inner_tol: sv.inner_tol.unwrap_or(rdef.inner_tol),
            inner_max_iters: sv.inner_max_iters.unwrap_or(rdef.inner_max_iters),
            method: match sv.method {
                Some(MethodSpec::InnerProjectedGradient) => ResolventMethod::InnerProjectedGradient,
                _ => ResolventMethod::ClosedForm,
            },
        };
        resolvent.validate().map_err(|e| ctx.err("solver", e))?;
        let run = RunConfig {
            resolvent,
            minty_probes: sv.minty_probes.unwrap_or(crate::solver::DEFAULT_MINTY_PROBES),
            seed,
            certificate: None,
        };
        let cert_tol = sv.cert_tol.unwrap_or(DEFAULT_CERT_TOL);
        if !(cert_tol >= 0.0) {
            return Err(ctx.err("solver", "cert_tol must be nonnegative"));
        }
        Ok(Assembled {
            name: self.name.clone().unwrap_or_else(|| "problem".into()),
            problem,
            schedules,
            theorem,
            gap,
            multiplier,
            x1,
            x0,
            stop,
            run,
            cert_tol,
            seed,
        })
    }
}

/// The gap model implied by the lower-level kind when the file gives none.
fn infer_gap(lower: &Bifunction, p: &Point, s_f: Option<&SetDescriptor>) -> Result<GapModel, String> {
    let p_norm = p.norm();
    match lower.kind() {
        BifunctionKind::DifferenceOfFunction(ConvexFunctional::HalfSquaredDistance(_))
        | BifunctionKind::DirectionalDerivative(ConvexFunctional::HalfSquaredDistance(_)) => {
            Ok(GapModel::HalfSquaredDistance)
        }
        BifunctionKind::Zero => Ok(GapModel::Zero),
        _ if p_norm == 0.0 => Ok(GapModel::Zero),
        BifunctionKind::FixedPointGap(_) => {
            let s_f = s_f.ok_or("the fixed-point gap needs oracle_hints.lower_solution_set")?;
            let unit = p * (1.0 / p_norm);
            let outer = lower.domain().support_function(&unit).map_err(|e| e.to_string())?;
            let inner = s_f.support_function(&unit).map_err(|e| e.to_string())?;
            if !outer.is_finite() {
                return Err("σ_C(p) is infinite; the fixed-point gap has no closed form".into());
            }
            Ok(GapModel::FixedPoint {
                excess_per_unit: (outer - inner).max(0.0),
            })
        }
        other => Err(format!("no gap model for lower-level {}; give oracle_hints.gap", other.name())),
    }
}

/// Parses `src` and assembles it, with diagnostics anchored to its lines.
pub fn load_str(src: &str) -> Result<(ProblemFile, Assembled), ProblemError> {
    let file = ProblemFile::parse(src)?;
    let built = file.assemble_with(Some(src), sampling::resolve_seed(file.seed))?;
    Ok((file, built))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_assemble() {
        for name in PRESET_NAMES {
            let src = preset_source(name).unwrap();
            let (file, built) = load_str(src).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(file.name.as_deref(), Some(name));
            assert_eq!(built.problem.dim(), file.dimension);
        }
    }

    #[test]
    fn round_trip() {
        for name in PRESET_NAMES {
            let file = preset(name).unwrap();
            let text = file.to_toml().unwrap();
            assert_eq!(ProblemFile::parse(&text).unwrap(), file, "{name}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let src = preset_source("remark3_prox").unwrap().replace("[solver]", "[solver]\nbogus = 1");
        let err = ProblemFile::parse(&src).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn semantic_errors_are_line_anchored() {
        let src = preset_source("remark3_prox").unwrap().replace("x1 = [1.0, 0.0]", "x1 = [1.0]");
        match load_str(&src) {
            Err(ProblemError::Invalid { section, line, .. }) => {
                assert_eq!(section, "solver");
                assert!(line > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
