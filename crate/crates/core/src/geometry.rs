//! Points in ℝⁿ and structured closed convex sets with exact metric
//! projections, normal-cone membership tests and support functions.

use std::fmt;
use std::ops::{Add, Deref, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

/// Projection tolerance for the closed-form set kinds.
pub const TAU_PROJ: f64 = 1e-10;
/// Projection tolerance for [`SetKind::Intersection`].
pub const TAU_PROJ_ITERATIVE: f64 = 1e-8;
/// Sweep cap for Dykstra's alternating projections.
pub const INTERSECTION_MAX_SWEEPS: usize = 10_000;
/// Number of feasible points sampled when testing normal-cone membership on
/// an intersection.
pub const INTERSECTION_NORMAL_SAMPLES: usize = 200;

/// Half-width of the sampling box used for unbounded sets.
pub const DEFAULT_SAMPLING_RADIUS: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite coordinate in point")]
    NonFinite,
    #[error("empty point (dimension 0)")]
    EmptyPoint,
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("alternating projections did not converge after {sweeps} sweeps (residual {residual:e})")]
    IntersectionNotConverged { sweeps: usize, residual: f64 },
    #[error("point is not in the set (distance {distance:e})")]
    PointNotInSet { distance: f64 },
    #[error("operation not supported for {0}")]
    UnsupportedKind(&'static str),
}

/// A point of ℝⁿ with finite coordinates.
#[derive(Clone, PartialEq)]
pub struct Point(DVector<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::EmptyPoint);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        Ok(Point(DVector::from_vec(coords)))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(DVector::zeros(dim))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self, GeometryError> {
        Self::new(coords.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn distance_squared(&self, other: &Point) -> f64 {
        (&self.0 - &other.0).norm_squared()
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, other: &Point, b: f64) -> Point {
        Point(&self.0 * a + &other.0 * b)
    }

    pub fn check_dim(&self, expected: usize) -> Result<(), GeometryError> {
        if self.dim() != expected {
            Err(GeometryError::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        } else {
            Ok(())
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Point").field(&self.as_slice()).finish()
    }
}

impl Deref for Point {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl From<DVector<f64>> for Point {
    fn from(v: DVector<f64>) -> Self {
        Point(v)
    }
}

impl Add<&Point> for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        Point(&self.0 + &rhs.0)
    }
}

impl Sub<&Point> for &Point {
    type Output = Point;
    fn sub(self, rhs: &Point) -> Point {
        Point(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point(&self.0 * rhs)
    }
}

impl Neg for &Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point(-&self.0)
    }
}

/// The tagged description of a nonempty closed convex set.
#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    WholeSpace {
        dim: usize,
    },
    /// Coordinate box; bounds may be infinite.
    Box {
        lower: DVector<f64>,
        upper: DVector<f64>,
    },
    Ball {
        center: Point,
        radius: f64,
    },
    /// `{x : ⟨a, x⟩ ≤ b}`
    Halfspace {
        normal: DVector<f64>,
        offset: f64,
    },
    /// Solution set of `A x = b`.
    Affine {
        matrix: DMatrix<f64>,
        rhs: DVector<f64>,
        // Moore–Penrose pseudo-inverse of `matrix`, cached at construction.
        pinv: DMatrix<f64>,
    },
    /// `{x ≥ 0 : Σ xᵢ = radius}`
    Simplex {
        dim: usize,
        radius: f64,
    },
    Singleton(Point),
    Intersection {
        sets: Vec<SetDescriptor>,
        feasible: Point,
    },
}

/// A nonempty closed convex subset of ℝⁿ.
///
/// Construct through the named constructors, which check the invariants of
/// each kind (nonemptiness in particular).
#[derive(Debug, Clone, PartialEq)]
pub struct SetDescriptor {
    kind: SetKind,
}

/// Outcome of [`SetDescriptor::normal_cone_contains`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalConeDecision {
    pub contains: bool,
    /// True when the decision was reached by sampling rather than analytically.
    pub approximate: bool,
}

fn check_vec(v: &[f64], what: &str) -> Result<(), GeometryError> {
    if v.is_empty() {
        return Err(GeometryError::InvalidSet(format!("{what} is empty")));
    }
    if v.iter().any(|c| c.is_nan()) {
        return Err(GeometryError::InvalidSet(format!("{what} contains NaN")));
    }
    Ok(())
}

fn check_finite(v: &[f64], what: &str) -> Result<(), GeometryError> {
    check_vec(v, what)?;
    if v.iter().any(|c| !c.is_finite()) {
        return Err(GeometryError::InvalidSet(format!("{what} must be finite")));
    }
    Ok(())
}

impl SetDescriptor {
    pub fn whole_space(dim: usize) -> Result<Self, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::EmptyPoint);
        }
        Ok(Self {
            kind: SetKind::WholeSpace { dim },
        })
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, GeometryError> {
        check_vec(&lower, "box lower bound")?;
        check_vec(&upper, "box upper bound")?;
        if lower.len() != upper.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(GeometryError::InvalidSet(format!(
                    "box bounds empty in coordinate {i}: [{l}, {u}]"
                )));
            }
        }
        Ok(Self {
            kind: SetKind::Box {
                lower: DVector::from_vec(lower),
                upper: DVector::from_vec(upper),
            },
        })
    }

    /// A ball; radius zero is normalized to a singleton.
    pub fn ball(center: Point, radius: f64) -> Result<Self, GeometryError> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(GeometryError::InvalidSet(format!(
                "ball radius must be finite and nonnegative, got {radius}"
            )));
        }
        if radius == 0.0 {
            return Ok(Self::singleton(center));
        }
        Ok(Self {
            kind: SetKind::Ball { center, radius },
        })
    }

    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Self, GeometryError> {
        check_finite(&normal, "halfspace normal")?;
        if !offset.is_finite() {
            return Err(GeometryError::InvalidSet("halfspace offset must be finite".into()));
        }
        let normal = DVector::from_vec(normal);
        if normal.norm() == 0.0 {
            return Err(GeometryError::InvalidSet("halfspace normal is zero".into()));
        }
        Ok(Self {
            kind: SetKind::Halfspace { normal, offset },
        })
    }

    /// The solution set of `matrix · x = rhs`; `rows` are the rows of the matrix.
    pub fn affine(rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self, GeometryError> {
        if rows.is_empty() {
            return Err(GeometryError::InvalidSet("affine set needs at least one row".into()));
        }
        let n = rows[0].len();
        for row in &rows {
            check_finite(row, "affine row")?;
            if row.len() != n {
                return Err(GeometryError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
        }
        check_finite(&rhs, "affine rhs")?;
        if rhs.len() != rows.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: rows.len(),
                found: rhs.len(),
            });
        }
        let matrix = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
        let rhs = DVector::from_vec(rhs);
        let pinv = matrix
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| GeometryError::InvalidSet(format!("affine pseudo-inverse: {e}")))?;
        let x0 = &pinv * &rhs;
        let resid = (&matrix * &x0 - &rhs).norm();
        if resid > 1e-9 * (1.0 + rhs.norm()) {
            return Err(GeometryError::InvalidSet(format!(
                "affine system is inconsistent (residual {resid:e})"
            )));
        }
        Ok(Self {
            kind: SetKind::Affine { matrix, rhs, pinv },
        })
    }

    pub fn simplex(dim: usize, radius: f64) -> Result<Self, GeometryError> {
        if dim == 0 {
            return Err(GeometryError::EmptyPoint);
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeometryError::InvalidSet(format!(
                "simplex radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            kind: SetKind::Simplex { dim, radius },
        })
    }

    pub fn singleton(point: Point) -> Self {
        Self {
            kind: SetKind::Singleton(point),
        }
    }

    /// Intersection of `sets`; `feasible` must lie in every member.
    pub fn intersection(sets: Vec<SetDescriptor>, feasible: Point) -> Result<Self, GeometryError> {
        if sets.is_empty() {
            return Err(GeometryError::InvalidSet("intersection of no sets".into()));
        }
        for set in &sets {
            feasible.check_dim(set.dim())?;
            let d = set.distance(&feasible)?;
            if d > TAU_PROJ_ITERATIVE * (1.0 + feasible.norm()) {
                return Err(GeometryError::InvalidSet(format!(
                    "feasible point is at distance {d:e} from an intersection member"
                )));
            }
        }
        Ok(Self {
            kind: SetKind::Intersection { sets, feasible },
        })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            SetKind::WholeSpace { .. } => "whole_space",
            SetKind::Box { .. } => "box",
            SetKind::Ball { .. } => "ball",
            SetKind::Halfspace { .. } => "halfspace",
            SetKind::Affine { .. } => "affine",
            SetKind::Simplex { .. } => "simplex",
            SetKind::Singleton(_) => "singleton",
            SetKind::Intersection { .. } => "intersection",
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SetKind::WholeSpace { dim } | SetKind::Simplex { dim, .. } => *dim,
            SetKind::Box { lower, .. } => lower.len(),
            SetKind::Ball { center, .. } => center.dim(),
            SetKind::Halfspace { normal, .. } => normal.len(),
            SetKind::Affine { matrix, .. } => matrix.ncols(),
            SetKind::Singleton(p) => p.dim(),
            SetKind::Intersection { feasible, .. } => feasible.dim(),
        }
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(self.kind, SetKind::WholeSpace { .. })
    }

    /// Projection tolerance that applies to this kind.
    pub fn tolerance(&self) -> f64 {
        match self.kind {
            SetKind::Intersection { .. } => TAU_PROJ_ITERATIVE,
            _ => TAU_PROJ,
        }
    }

    /// Metric projection `Π_S(x)`.
    pub fn project(&self, x: &Point) -> Result<Point, GeometryError> {
        x.check_dim(self.dim())?;
        Ok(match &self.kind {
            SetKind::WholeSpace { .. } => x.clone(),
            SetKind::Box { lower, upper } => Point(DVector::from_fn(x.dim(), |i, _| {
                x[i].clamp(lower[i], upper[i])
            })),
            SetKind::Ball { center, radius } => {
                let offset = x - center;
                let dist = offset.norm();
                if dist <= *radius {
                    x.clone()
                } else {
                    center.combine(1.0, &offset, radius / dist)
                }
            }
            SetKind::Halfspace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    Point(&x.0 - normal * (excess / normal.norm_squared()))
                }
            }
            SetKind::Affine {
                matrix, rhs, pinv, ..
            } => {
                let resid = matrix * &x.0 - rhs;
                Point(&x.0 - pinv * resid)
            }
            SetKind::Simplex { radius, .. } => Point(project_simplex(&x.0, *radius)),
            SetKind::Singleton(p) => p.clone(),
            SetKind::Intersection { sets, .. } => dykstra(sets, x)?,
        })
    }

    pub fn distance(&self, x: &Point) -> Result<f64, GeometryError> {
        Ok(self.project(x)?.distance(x))
    }

    /// Membership up to `tol` (scaled by the magnitude of `x`).
    pub fn contains(&self, x: &Point, tol: f64) -> Result<bool, GeometryError> {
        Ok(self.distance(x)? <= tol * (1.0 + x.norm()))
    }

    /// Support function `σ_S(p) = sup_{x∈S} ⟨p, x⟩`; `+∞` outside the barrier cone.
    ///
    /// Intersections only support `p = 0`.
    pub fn support_function(&self, p: &Point) -> Result<f64, GeometryError> {
        p.check_dim(self.dim())?;
        let is_zero = p.iter().all(|c| *c == 0.0);
        Ok(match &self.kind {
            SetKind::WholeSpace { .. } => {
                if is_zero {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            SetKind::Box { lower, upper } => p
                .iter()
                .enumerate()
                .map(|(i, pi)| {
                    if *pi > 0.0 {
                        pi * upper[i]
                    } else if *pi < 0.0 {
                        pi * lower[i]
                    } else {
                        0.0
                    }
                })
                .sum(),
            SetKind::Ball { center, radius } => p.dot(center) + radius * p.norm(),
            SetKind::Halfspace { normal, offset } => {
                if is_zero {
                    return Ok(0.0);
                }
                let t = p.dot(normal) / normal.norm_squared();
                let off_axis = (&p.0 - normal * t).norm();
                if t > 0.0 && off_axis <= 1e-12 * p.norm() {
                    t * offset
                } else {
                    f64::INFINITY
                }
            }
            SetKind::Affine {
                matrix, rhs, pinv, ..
            } => {
                let row_part = pinv * (matrix * &p.0);
                if (&p.0 - &row_part).norm() <= 1e-12 * (1.0 + p.norm()) {
                    p.dot(&(pinv * rhs))
                } else {
                    f64::INFINITY
                }
            }
            SetKind::Simplex { radius, .. } => radius * p.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            SetKind::Singleton(q) => p.dot(q),
            SetKind::Intersection { .. } => {
                if is_zero {
                    0.0
                } else {
                    return Err(GeometryError::UnsupportedKind("support function of an intersection"));
                }
            }
        })
    }

    /// Tests `d ∈ N_S(x)`, i.e. `⟨d, z − x⟩ ≤ tol` for all `z ∈ S`.
    ///
    /// Decided analytically for every kind except intersections, where the
    /// answer comes from sampled feasible points and is flagged approximate.
    pub fn normal_cone_contains(
        &self,
        x: &Point,
        d: &Point,
        tol: f64,
    ) -> Result<NormalConeDecision, GeometryError> {
        x.check_dim(self.dim())?;
        d.check_dim(self.dim())?;
        let in_tol = self.tolerance().max(tol);
        let distance = self.distance(x)?;
        if distance > in_tol * (1.0 + x.norm()) {
            return Err(GeometryError::PointNotInSet { distance });
        }
        let exact = |contains: bool| NormalConeDecision {
            contains,
            approximate: false,
        };
        Ok(match &self.kind {
            SetKind::WholeSpace { .. } => exact(d.norm() <= tol),
            SetKind::Box { lower, upper } => {
                let scale = 1.0 + x.norm();
                let ok = (0..x.dim()).all(|i| {
                    let at_lower = (x[i] - lower[i]).abs() <= in_tol * scale;
                    let at_upper = (upper[i] - x[i]).abs() <= in_tol * scale;
                    match (at_lower, at_upper) {
                        (true, true) => true,
                        (true, false) => d[i] <= tol,
                        (false, true) => d[i] >= -tol,
                        (false, false) => d[i].abs() <= tol,
                    }
                });
                exact(ok)
            }
            SetKind::Ball { center, radius } => {
                let radial = x - center;
                let r = radial.norm();
                if r < radius - in_tol * (1.0 + x.norm()) {
                    exact(d.norm() <= tol)
                } else {
                    let unit = &radial * (1.0 / r);
                    let t = d.dot(&unit);
                    let off_axis = (&d.0 - &unit.0 * t).norm();
                    exact(t >= -tol && off_axis <= tol)
                }
            }
            SetKind::Halfspace { normal, offset } => {
                let slack = offset - normal.dot(x);
                if slack > in_tol * (1.0 + x.norm()) * normal.norm() {
                    exact(d.norm() <= tol)
                } else {
                    let t = d.dot(normal) / normal.norm_squared();
                    let off_axis = (&d.0 - normal * t).norm();
                    exact(t * normal.norm() >= -tol && off_axis <= tol)
                }
            }
            SetKind::Affine { matrix, pinv, .. } => {
                let row_part = pinv * (matrix * &d.0);
                exact((&d.0 - row_part).norm() <= tol)
            }
            SetKind::Simplex { radius, .. } => {
                // For a polytope the worst z is a vertex.
                let sigma = radius * d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                exact(sigma - d.dot(x) <= tol)
            }
            SetKind::Singleton(_) => exact(true),
            SetKind::Intersection { feasible, .. } => {
                let mut rng = crate::sampling::rng(0x6e6f_726d);
                let mut ok = d.dot(&(feasible - x)) <= tol;
                for _ in 0..INTERSECTION_NORMAL_SAMPLES {
                    if !ok {
                        break;
                    }
                    let z = self.sample(&mut rng, DEFAULT_SAMPLING_RADIUS)?;
                    ok = d.dot(&(&z - x)) <= tol;
                }
                NormalConeDecision {
                    contains: ok,
                    approximate: true,
                }
            }
        })
    }

    /// Projection of `v` onto the normal cone `N_S(x)` for `x ∈ S`.
    ///
    /// Returns `Ok(None)` for kinds without a closed form (simplex,
    /// intersection).
    pub fn normal_cone_projection(&self, x: &Point, v: &Point) -> Result<Option<Point>, GeometryError> {
        x.check_dim(self.dim())?;
        v.check_dim(self.dim())?;
        let tol = self.tolerance() * (1.0 + x.norm());
        Ok(Some(match &self.kind {
            SetKind::WholeSpace { .. } => Point::zeros(x.dim()),
            SetKind::Box { lower, upper } => Point(DVector::from_fn(x.dim(), |i, _| {
                let at_lower = (x[i] - lower[i]).abs() <= tol;
                let at_upper = (upper[i] - x[i]).abs() <= tol;
                match (at_lower, at_upper) {
                    (true, true) => v[i],
                    (true, false) => v[i].min(0.0),
                    (false, true) => v[i].max(0.0),
                    (false, false) => 0.0,
                }
            })),
            SetKind::Ball { center, radius } => {
                let radial = x - center;
                let r = radial.norm();
                if r < radius - tol {
                    Point::zeros(x.dim())
                } else {
                    let unit = &radial * (1.0 / r);
                    &unit * v.dot(&unit).max(0.0)
                }
            }
            SetKind::Halfspace { normal, offset } => {
                if offset - normal.dot(x) > tol * normal.norm() {
                    Point::zeros(x.dim())
                } else {
                    Point(normal * (v.dot(normal).max(0.0) / normal.norm_squared()))
                }
            }
            SetKind::Affine { matrix, pinv, .. } => Point(pinv * (matrix * &v.0)),
            SetKind::Singleton(_) => v.clone(),
            SetKind::Simplex { .. } | SetKind::Intersection { .. } => return Ok(None),
        }))
    }

    /// Axis-aligned bounding box, when the set is bounded.
    pub fn bounding_box(&self) -> Option<(DVector<f64>, DVector<f64>)> {
        match &self.kind {
            SetKind::Box { lower, upper } => {
                if lower.iter().chain(upper.iter()).all(|v| v.is_finite()) {
                    Some((lower.clone(), upper.clone()))
                } else {
                    None
                }
            }
            SetKind::Ball { center, radius } => Some((
                center.map(|c| c - radius),
                center.map(|c| c + radius),
            )),
            SetKind::Simplex { dim, radius } => {
                Some((DVector::zeros(*dim), DVector::from_element(*dim, *radius)))
            }
            SetKind::Singleton(p) => Some((p.0.clone(), p.0.clone())),
            SetKind::Intersection { sets, .. } => {
                let mut bounds: Option<(DVector<f64>, DVector<f64>)> = None;
                for (lo, hi) in sets.iter().filter_map(|s| s.bounding_box()) {
                    bounds = Some(match bounds {
                        None => (lo, hi),
                        Some((l, h)) => (l.sup(&lo), h.inf(&hi)),
                    });
                }
                bounds
            }
            _ => None,
        }
    }

    /// Draws a point of the set: uniform on bounded boxes, balls and
    /// simplices, otherwise uniform on a box of half-width `radius` around
    /// the origin (clipped to the set's bounding box) followed by projection.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, radius: f64) -> Result<Point, GeometryError> {
        let n = self.dim();
        match &self.kind {
            SetKind::Singleton(p) => Ok(p.clone()),
            SetKind::Ball { center, radius: r } => {
                let dir = crate::sampling::unit_vector(rng, n);
                let scale = r * rng.gen::<f64>().powf(1.0 / n as f64);
                Ok(center.combine(1.0, &dir, scale))
            }
            SetKind::Simplex { radius: s, .. } => {
                let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let total: f64 = e.iter().sum();
                Ok(Point(DVector::from_iterator(n, e.into_iter().map(|v| s * v / total))))
            }
            _ => {
                let (lo, hi) = match self.bounding_box() {
                    Some(b) => b,
                    None => {
                        let mut lo = DVector::from_element(n, -radius);
                        let mut hi = DVector::from_element(n, radius);
                        if let SetKind::Box { lower, upper } = &self.kind {
                            for i in 0..n {
                                match (lower[i].is_finite(), upper[i].is_finite()) {
                                    (true, true) => {
                                        lo[i] = lower[i];
                                        hi[i] = upper[i];
                                    }
                                    (true, false) => {
                                        lo[i] = lower[i];
                                        hi[i] = lower[i] + 2.0 * radius;
                                    }
                                    (false, true) => {
                                        lo[i] = upper[i] - 2.0 * radius;
                                        hi[i] = upper[i];
                                    }
                                    (false, false) => {}
                                }
                            }
                        }
                        (lo, hi)
                    }
                };
                let raw = Point(DVector::from_fn(n, |i, _| {
                    if hi[i] > lo[i] {
                        rng.gen_range(lo[i]..=hi[i])
                    } else {
                        lo[i]
                    }
                }));
                self.project(&raw)
            }
        }
    }
}

/// Euclidean projection onto `{x ≥ 0 : Σ x = s}` by the sort-and-threshold rule.
fn project_simplex(v: &DVector<f64>, s: f64) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().cloned().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - s) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// Dykstra's alternating projections: converges to the projection onto the
/// intersection, not merely to some common point.
fn dykstra(sets: &[SetDescriptor], x: &Point) -> Result<Point, GeometryError> {
    let m = sets.len();
    let mut y = x.clone();
    let mut corrections = vec![Point::zeros(x.dim()); m];
    let scale = 1.0 + x.norm();
    let mut residual = f64::INFINITY;
    for _ in 0..INTERSECTION_MAX_SWEEPS {
        let start = y.clone();
        for (set, inc) in sets.iter().zip(corrections.iter_mut()) {
            let shifted = &y + inc;
            let projected = set.project(&shifted)?;
            *inc = &shifted - &projected;
            y = projected;
        }
        let change = y.distance(&start);
        let infeasibility = sets
            .iter()
            .map(|s| s.distance(&y))
            .try_fold(0.0_f64, |acc, d| d.map(|d| acc.max(d)))?;
        residual = change.max(infeasibility);
        if change <= 0.1 * TAU_PROJ_ITERATIVE * scale && infeasibility <= 0.1 * TAU_PROJ_ITERATIVE * scale {
            return Ok(y);
        }
    }
    Err(GeometryError::IntersectionNotConverged {
        sweeps: INTERSECTION_MAX_SWEEPS,
        residual,
    })
}
