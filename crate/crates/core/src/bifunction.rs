//! Structured monotone bifunctions `F : C × C → ℝ` and the maps they are
//! built from.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{GeometryError, Point, SetDescriptor, DEFAULT_SAMPLING_RADIUS};
use crate::linalg;
use crate::sampling;

/// Default number of sampled pairs for [`Bifunction::monotonicity_modulus`].
pub const DEFAULT_MODULUS_SAMPLES: usize = 500;
/// Slack allowed between a declared modulus and the sampled estimate.
pub const MODULUS_WARNING_SLACK: f64 = 1e-6;
/// Tolerance of the Minty spot check performed by [`Bifunction::fitzpatrick_gap`].
pub const FITZPATRICK_MINTY_TOL: f64 = 1e-6;
const FITZPATRICK_MINTY_PROBES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BifunctionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("point lies outside the domain (distance {distance:e})")]
    PointOutsideDomain { distance: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("all sampled pairs coincide")]
    DegenerateSample,
    #[error("scale must be positive, got {0}")]
    ScaleNonpositive(f64),
    #[error("no closed form for {0}")]
    NoClosedForm(String),
    #[error("point fails the solution-set spot check (Minty residual {residual:e})")]
    NotInSolutionSet { residual: f64 },
    #[error("fixed-point set of the map is empty")]
    EmptyFixedPointSet,
}

fn square_matrix(m: &DMatrix<f64>, what: &str) -> Result<(), BifunctionError> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(BifunctionError::InvalidParameter(format!("{what} must be square")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(BifunctionError::InvalidParameter(format!("{what} must be finite")));
    }
    Ok(())
}

fn matching_vector(v: &DVector<f64>, n: usize, what: &str) -> Result<(), BifunctionError> {
    if v.len() != n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            found: v.len(),
        }
        .into());
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(BifunctionError::InvalidParameter(format!("{what} must be finite")));
    }
    Ok(())
}

/// A finite convex function on ℝⁿ.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexFunctional {
    /// `½⟨Qx, x⟩ + ⟨q, x⟩ + c` with `Q` symmetric positive semidefinite.
    Quadratic {
        matrix: DMatrix<f64>,
        linear: DVector<f64>,
        constant: f64,
    },
    /// `½ d(x, K)²`
    HalfSquaredDistance(SetDescriptor),
    /// `‖x‖₁`
    Norm1 { dim: usize },
}

impl ConvexFunctional {
    pub fn quadratic(matrix: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Result<Self, BifunctionError> {
        square_matrix(&matrix, "quadratic matrix")?;
        matching_vector(&linear, matrix.nrows(), "quadratic linear term")?;
        if !constant.is_finite() {
            return Err(BifunctionError::InvalidParameter("quadratic constant must be finite".into()));
        }
        if !linalg::is_symmetric(&matrix, 1e-12) {
            return Err(BifunctionError::InvalidParameter("quadratic matrix must be symmetric".into()));
        }
        let (lo, _) = linalg::symmetric_eigen_range(&matrix);
        if lo < -1e-10 * (1.0 + matrix.amax()) {
            return Err(BifunctionError::InvalidParameter(format!(
                "quadratic matrix is not positive semidefinite (eigenvalue {lo:e})"
            )));
        }
        Ok(ConvexFunctional::Quadratic {
            matrix,
            linear,
            constant,
        })
    }

    /// `(m/2)‖x − a‖²`
    pub fn isotropic(m: f64, center: &Point) -> Result<Self, BifunctionError> {
        let n = center.dim();
        Self::quadratic(
            DMatrix::identity(n, n) * m,
            -center.vector() * m,
            0.5 * m * center.norm_squared(),
        )
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexFunctional::Quadratic { matrix, .. } => matrix.nrows(),
            ConvexFunctional::HalfSquaredDistance(k) => k.dim(),
            ConvexFunctional::Norm1 { dim } => *dim,
        }
    }

    pub fn value(&self, x: &Point) -> Result<f64, BifunctionError> {
        x.check_dim(self.dim())?;
        Ok(match self {
            ConvexFunctional::Quadratic {
                matrix,
                linear,
                constant,
            } => 0.5 * x.dot(&(matrix * x.vector())) + linear.dot(x) + constant,
            ConvexFunctional::HalfSquaredDistance(k) => 0.5 * k.distance(x)?.powi(2),
            ConvexFunctional::Norm1 { .. } => x.iter().map(|c| c.abs()).sum(),
        })
    }

    /// A subgradient; for `Norm1` the minimal-norm one (zero at kinks).
    pub fn subgradient(&self, x: &Point) -> Result<Point, BifunctionError> {
        x.check_dim(self.dim())?;
        Ok(match self {
            ConvexFunctional::Quadratic { matrix, linear, .. } => Point::from(matrix * x.vector() + linear),
            ConvexFunctional::HalfSquaredDistance(k) => x - &k.project(x)?,
            ConvexFunctional::Norm1 { .. } => Point::from(x.map(|c| {
                if c > 0.0 {
                    1.0
                } else if c < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            })),
        })
    }

    /// `ψ′(x; d) = max_{ξ∈∂ψ(x)} ⟨ξ, d⟩`
    pub fn directional_derivative(&self, x: &Point, d: &Point) -> Result<f64, BifunctionError> {
        d.check_dim(self.dim())?;
        Ok(match self {
            ConvexFunctional::Norm1 { .. } => {
                x.check_dim(self.dim())?;
                x.iter()
                    .zip(d.iter())
                    .map(|(xi, di)| if *xi == 0.0 { di.abs() } else { xi.signum() * di })
                    .sum()
            }
            _ => self.subgradient(x)?.dot(d),
        })
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self, ConvexFunctional::Norm1 { .. })
    }

    /// Lipschitz constant of the gradient, when it exists.
    pub fn gradient_lipschitz(&self) -> Option<f64> {
        match self {
            ConvexFunctional::Quadratic { matrix, .. } => Some(linalg::symmetric_eigen_range(matrix).1.max(0.0)),
            ConvexFunctional::HalfSquaredDistance(_) => Some(1.0),
            ConvexFunctional::Norm1 { .. } => None,
        }
    }

    pub fn strong_convexity(&self) -> f64 {
        match self {
            ConvexFunctional::Quadratic { matrix, .. } => linalg::symmetric_eigen_range(matrix).0.max(0.0),
            _ => 0.0,
        }
    }
}

/// A single-valued monotone affine map `x ↦ M x + b`.
#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneMap {
    Linear(DMatrix<f64>),
    Affine { matrix: DMatrix<f64>, offset: DVector<f64> },
    /// `∇(½⟨Qx, x⟩ + ⟨q, x⟩) = Q x + q`
    GradientOfQuadratic { matrix: DMatrix<f64>, linear: DVector<f64> },
}

impl MonotoneMap {
    pub fn linear(matrix: DMatrix<f64>) -> Result<Self, BifunctionError> {
        Self::check_monotone(&matrix)?;
        Ok(MonotoneMap::Linear(matrix))
    }

    pub fn identity(dim: usize) -> Self {
        MonotoneMap::Linear(DMatrix::identity(dim, dim))
    }

    pub fn affine(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self, BifunctionError> {
        Self::check_monotone(&matrix)?;
        matching_vector(&offset, matrix.nrows(), "affine offset")?;
        Ok(MonotoneMap::Affine { matrix, offset })
    }

    pub fn gradient_of_quadratic(matrix: DMatrix<f64>, linear: DVector<f64>) -> Result<Self, BifunctionError> {
        // Reuse the quadratic checks (symmetric, PSD).
        ConvexFunctional::quadratic(matrix.clone(), linear.clone(), 0.0)?;
        Ok(MonotoneMap::GradientOfQuadratic { matrix, linear })
    }

    fn check_monotone(matrix: &DMatrix<f64>) -> Result<(), BifunctionError> {
        square_matrix(matrix, "operator matrix")?;
        let (lo, _) = linalg::symmetric_eigen_range(matrix);
        if lo < -1e-10 * (1.0 + matrix.amax()) {
            return Err(BifunctionError::InvalidParameter(format!(
                "operator is not monotone (M + Mᵀ has eigenvalue {:e})",
                2.0 * lo
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        match self {
            MonotoneMap::Linear(m) => m,
            MonotoneMap::Affine { matrix, .. } | MonotoneMap::GradientOfQuadratic { matrix, .. } => matrix,
        }
    }

    pub fn offset(&self) -> DVector<f64> {
        match self {
            MonotoneMap::Linear(m) => DVector::zeros(m.nrows()),
            MonotoneMap::Affine { offset, .. } => offset.clone(),
            MonotoneMap::GradientOfQuadratic { linear, .. } => linear.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix().nrows()
    }

    pub fn apply(&self, x: &Point) -> Result<Point, BifunctionError> {
        x.check_dim(self.dim())?;
        let mx = self.matrix() * x.vector();
        Ok(Point::from(match self {
            MonotoneMap::Linear(_) => mx,
            MonotoneMap::Affine { offset, .. } => mx + offset,
            MonotoneMap::GradientOfQuadratic { linear, .. } => mx + linear,
        }))
    }

    /// Strong monotonicity constant `λ_min((M + Mᵀ)/2)`.
    pub fn strong_monotonicity(&self) -> f64 {
        linalg::symmetric_eigen_range(self.matrix()).0.max(0.0)
    }

    pub fn lipschitz(&self) -> f64 {
        linalg::spectral_norm(self.matrix())
    }

    pub fn is_symmetric(&self) -> bool {
        linalg::is_symmetric(self.matrix(), 1e-12)
    }
}

/// A nonexpansive map `T : ℝⁿ → ℝⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub enum NonexpansiveMap {
    Identity { dim: usize },
    ProjectionOnto(SetDescriptor),
    /// `x ↦ M x + b` with `‖M‖₂ ≤ 1`.
    AffineContraction { matrix: DMatrix<f64>, offset: DVector<f64> },
    /// Rotations by the given angles in pairwise disjoint coordinate planes.
    Rotation { dim: usize, planes: Vec<(usize, usize, f64)> },
}

impl NonexpansiveMap {
    pub fn affine(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self, BifunctionError> {
        square_matrix(&matrix, "nonexpansive matrix")?;
        matching_vector(&offset, matrix.nrows(), "nonexpansive offset")?;
        let norm = linalg::spectral_norm(&matrix);
        if norm > 1.0 + 1e-12 {
            return Err(BifunctionError::InvalidParameter(format!(
                "affine map is not nonexpansive (‖M‖₂ = {norm})"
            )));
        }
        Ok(NonexpansiveMap::AffineContraction { matrix, offset })
    }

    pub fn rotation(dim: usize, planes: Vec<(usize, usize, f64)>) -> Result<Self, BifunctionError> {
        let mut used = vec![false; dim];
        for &(i, j, angle) in &planes {
            if i >= dim || j >= dim || i == j {
                return Err(BifunctionError::InvalidParameter(format!(
                    "rotation plane ({i}, {j}) invalid in dimension {dim}"
                )));
            }
            if used[i] || used[j] {
                return Err(BifunctionError::InvalidParameter("rotation planes must be disjoint".into()));
            }
            if !angle.is_finite() {
                return Err(BifunctionError::InvalidParameter("rotation angle must be finite".into()));
            }
            used[i] = true;
            used[j] = true;
        }
        Ok(NonexpansiveMap::Rotation { dim, planes })
    }

    pub fn dim(&self) -> usize {
        match self {
            NonexpansiveMap::Identity { dim } | NonexpansiveMap::Rotation { dim, .. } => *dim,
            NonexpansiveMap::ProjectionOnto(s) => s.dim(),
            NonexpansiveMap::AffineContraction { matrix, .. } => matrix.nrows(),
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point, BifunctionError> {
        x.check_dim(self.dim())?;
        Ok(match self {
            NonexpansiveMap::Identity { .. } => x.clone(),
            NonexpansiveMap::ProjectionOnto(s) => s.project(x)?,
            NonexpansiveMap::AffineContraction { matrix, offset } => Point::from(matrix * x.vector() + offset),
            NonexpansiveMap::Rotation { planes, .. } => {
                let mut v = x.vector().clone();
                for &(i, j, angle) in planes {
                    let (s, c) = angle.sin_cos();
                    let (a, b) = (x[i], x[j]);
                    v[i] = c * a - s * b;
                    v[j] = s * a + c * b;
                }
                Point::from(v)
            }
        })
    }

    /// `Fix(T)` as a set descriptor.
    pub fn fixed_point_set(&self) -> Result<SetDescriptor, BifunctionError> {
        let n = self.dim();
        match self {
            NonexpansiveMap::Identity { .. } => Ok(SetDescriptor::whole_space(n)?),
            NonexpansiveMap::ProjectionOnto(s) => Ok(s.clone()),
            NonexpansiveMap::AffineContraction { matrix, offset } => {
                let lhs = DMatrix::identity(n, n) - matrix;
                if let Some(x) = lhs.clone().lu().solve(offset) {
                    if (&lhs * &x - offset).norm() <= 1e-12 * (1.0 + offset.norm()) {
                        return Ok(SetDescriptor::singleton(Point::from(x)));
                    }
                }
                if lhs.amax() == 0.0 {
                    return if offset.amax() == 0.0 {
                        Ok(SetDescriptor::whole_space(n)?)
                    } else {
                        Err(BifunctionError::EmptyFixedPointSet)
                    };
                }
                let rows = (0..n).map(|i| lhs.row(i).iter().cloned().collect()).collect();
                SetDescriptor::affine(rows, offset.iter().cloned().collect())
                    .map_err(|_| BifunctionError::EmptyFixedPointSet)
            }
            NonexpansiveMap::Rotation { planes, .. } => {
                let mut rows = Vec::new();
                for &(i, j, angle) in planes {
                    let turns = angle / std::f64::consts::TAU;
                    if (turns - turns.round()).abs() > 1e-15 {
                        for idx in [i, j] {
                            let mut row = vec![0.0; n];
                            row[idx] = 1.0;
                            rows.push(row);
                        }
                    }
                }
                if rows.is_empty() {
                    Ok(SetDescriptor::whole_space(n)?)
                } else {
                    let rhs = vec![0.0; rows.len()];
                    Ok(SetDescriptor::affine(rows, rhs)?)
                }
            }
        }
    }
}

/// The selector `g` of the viscosity step: a `δ`-contraction.
#[derive(Debug, Clone, PartialEq)]
pub enum Contraction {
    Constant(Point),
    Affine { matrix: DMatrix<f64>, offset: DVector<f64> },
}

impl Contraction {
    pub fn affine(matrix: DMatrix<f64>, offset: DVector<f64>) -> Result<Self, BifunctionError> {
        square_matrix(&matrix, "contraction matrix")?;
        matching_vector(&offset, matrix.nrows(), "contraction offset")?;
        let delta = linalg::spectral_norm(&matrix);
        if delta >= 1.0 {
            return Err(BifunctionError::InvalidParameter(format!(
                "selector is not a contraction (‖M‖₂ = {delta})"
            )));
        }
        Ok(Contraction::Affine { matrix, offset })
    }

    pub fn dim(&self) -> usize {
        match self {
            Contraction::Constant(p) => p.dim(),
            Contraction::Affine { matrix, .. } => matrix.nrows(),
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            Contraction::Constant(_) => 0.0,
            Contraction::Affine { matrix, .. } => linalg::spectral_norm(matrix),
        }
    }

    pub fn apply(&self, x: &Point) -> Result<Point, BifunctionError> {
        x.check_dim(self.dim())?;
        Ok(match self {
            Contraction::Constant(p) => p.clone(),
            Contraction::Affine { matrix, offset } => Point::from(matrix * x.vector() + offset),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BifunctionKind {
    /// `F(x, y) = ψ(y) − ψ(x)`
    DifferenceOfFunction(ConvexFunctional),
    /// `F(x, y) = ψ′(x; y − x)`
    DirectionalDerivative(ConvexFunctional),
    /// `F(x, y) = ⟨A x, y − x⟩`
    OperatorVI(MonotoneMap),
    /// `F(x, y) = ⟨x − T x, y − x⟩`
    FixedPointGap(NonexpansiveMap),
    Zero,
}

impl BifunctionKind {
    pub fn name(&self) -> &'static str {
        match self {
            BifunctionKind::DifferenceOfFunction(_) => "difference_of_function",
            BifunctionKind::DirectionalDerivative(_) => "directional_derivative",
            BifunctionKind::OperatorVI(_) => "operator_vi",
            BifunctionKind::FixedPointGap(_) => "fixed_point_gap",
            BifunctionKind::Zero => "zero",
        }
    }
}

/// Sampled estimate of the monotonicity modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusEstimate {
    /// `inf −2(F(x,y) + F(y,x)) / ‖x − y‖²` over the sample.
    pub estimate: f64,
    /// Set when the declared modulus exceeds the estimate by more than
    /// [`MODULUS_WARNING_SLACK`].
    pub warning: Option<String>,
}

/// An equilibrium bifunction on a closed convex domain `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bifunction {
    kind: BifunctionKind,
    domain: SetDescriptor,
    declared_modulus: Option<f64>,
}

impl Bifunction {
    pub fn new(kind: BifunctionKind, domain: SetDescriptor) -> Result<Self, BifunctionError> {
        let n = domain.dim();
        let kind_dim = match &kind {
            BifunctionKind::DifferenceOfFunction(psi) | BifunctionKind::DirectionalDerivative(psi) => psi.dim(),
            BifunctionKind::OperatorVI(a) => a.dim(),
            BifunctionKind::FixedPointGap(t) => t.dim(),
            BifunctionKind::Zero => n,
        };
        if kind_dim != n {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                found: kind_dim,
            }
            .into());
        }
        Ok(Self {
            kind,
            domain,
            declared_modulus: None,
        })
    }

    pub fn zero(domain: SetDescriptor) -> Self {
        Self {
            kind: BifunctionKind::Zero,
            domain,
            declared_modulus: None,
        }
    }

    /// Attaches a declared modulus `ρ` in the convention
    /// `F(x,y) + F(y,x) ≤ −(ρ/2)‖x − y‖²`.
    pub fn with_declared_modulus(mut self, rho: f64) -> Result<Self, BifunctionError> {
        if !rho.is_finite() {
            return Err(BifunctionError::InvalidParameter("declared modulus must be finite".into()));
        }
        self.declared_modulus = Some(rho);
        Ok(self)
    }

    pub fn kind(&self) -> &BifunctionKind {
        &self.kind
    }

    pub fn domain(&self) -> &SetDescriptor {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn declared_modulus(&self) -> Option<f64> {
        self.declared_modulus
    }

    /// The modulus implied by the structure of the kind (same convention as
    /// [`Bifunction::with_declared_modulus`]).
    pub fn analytic_modulus(&self) -> f64 {
        match &self.kind {
            BifunctionKind::DirectionalDerivative(psi) => 2.0 * psi.strong_convexity(),
            BifunctionKind::OperatorVI(a) => 2.0 * a.strong_monotonicity(),
            _ => 0.0,
        }
    }

    /// Declared modulus if present, otherwise the analytic one.
    pub fn modulus(&self) -> f64 {
        self.declared_modulus.unwrap_or_else(|| self.analytic_modulus())
    }

    pub fn check_in_domain(&self, x: &Point) -> Result<(), BifunctionError> {
        x.check_dim(self.dim())?;
        if self.domain.is_whole_space() {
            return Ok(());
        }
        let distance = self.domain.distance(x)?;
        if distance > 100.0 * self.domain.tolerance() * (1.0 + x.norm()) {
            return Err(BifunctionError::PointOutsideDomain { distance });
        }
        Ok(())
    }

    /// `F(x, y)` for `x, y ∈ C`.
    pub fn evaluate(&self, x: &Point, y: &Point) -> Result<f64, BifunctionError> {
        self.check_in_domain(x)?;
        self.check_in_domain(y)?;
        self.evaluate_unchecked(x, y)
    }

    /// `F(x, y)` without the domain check; dimensions are still verified.
    pub fn evaluate_unchecked(&self, x: &Point, y: &Point) -> Result<f64, BifunctionError> {
        x.check_dim(self.dim())?;
        y.check_dim(self.dim())?;
        if x == y {
            return Ok(0.0);
        }
        Ok(match &self.kind {
            BifunctionKind::DifferenceOfFunction(psi) => psi.value(y)? - psi.value(x)?,
            BifunctionKind::DirectionalDerivative(psi) => psi.directional_derivative(x, &(y - x))?,
            BifunctionKind::OperatorVI(a) => a.apply(x)?.dot(&(y - x)),
            BifunctionKind::FixedPointGap(t) => (x - &t.apply(x)?).dot(&(y - x)),
            BifunctionKind::Zero => 0.0,
        })
    }

    /// Estimates the modulus from `samples` seeded pairs drawn from `C`.
    pub fn monotonicity_modulus(&self, samples: usize, seed: u64) -> Result<ModulusEstimate, BifunctionError> {
        if samples < 2 {
            return Err(BifunctionError::InvalidParameter("need at least 2 samples".into()));
        }
        let mut rng = sampling::rng(seed);
        let mut estimate = f64::INFINITY;
        for _ in 0..samples {
            let x = self.domain.sample(&mut rng, DEFAULT_SAMPLING_RADIUS)?;
            let y = self.domain.sample(&mut rng, DEFAULT_SAMPLING_RADIUS)?;
            let d2 = x.distance_squared(&y);
            if d2 <= 1e-24 {
                continue;
            }
            let sum = self.evaluate_unchecked(&x, &y)? + self.evaluate_unchecked(&y, &x)?;
            estimate = estimate.min(-2.0 * sum / d2);
        }
        if !estimate.is_finite() {
            return Err(BifunctionError::DegenerateSample);
        }
        let warning = self.declared_modulus.and_then(|rho| {
            (rho > estimate + MODULUS_WARNING_SLACK).then(|| {
                format!("declared modulus {rho} exceeds the sampled estimate {estimate}")
            })
        });
        Ok(ModulusEstimate { estimate, warning })
    }

    /// The minimal-norm element of `A^F(x)` where it is analytic.
    pub fn minimal_norm_element(&self, x: &Point) -> Result<Point, BifunctionError> {
        self.check_in_domain(x)?;
        let base = match &self.kind {
            BifunctionKind::DifferenceOfFunction(psi) | BifunctionKind::DirectionalDerivative(psi) => {
                if !psi.is_differentiable() && !self.domain.is_whole_space() {
                    return Err(BifunctionError::NoClosedForm(
                        "minimal-norm subgradient of a nonsmooth functional on a constrained domain".into(),
                    ));
                }
                psi.subgradient(x)?
            }
            BifunctionKind::OperatorVI(a) => a.apply(x)?,
            BifunctionKind::FixedPointGap(t) => x - &t.apply(x)?,
            BifunctionKind::Zero => Point::zeros(x.dim()),
        };
        // min ‖base + n‖ over n ∈ N_C(x) is attained at n = Π_{N_C(x)}(−base).
        match self.domain.normal_cone_projection(x, &-&base)? {
            Some(n) => Ok(&base + &n),
            None => Err(BifunctionError::NoClosedForm(format!(
                "normal cone of a {} domain",
                self.domain.kind_name()
            ))),
        }
    }

    /// The gap `𝓕_F(x, 2p/scale) − σ_{S_F}(2p/scale)` for `x ∈ S_F`.
    ///
    /// `x` is spot-checked with a sampled Minty residual; `solution_set` is
    /// the analytic lower-level solution set.
    pub fn fitzpatrick_gap(
        &self,
        x: &Point,
        p: &Point,
        scale: f64,
        solution_set: &SetDescriptor,
    ) -> Result<f64, BifunctionError> {
        let residual = crate::resolvent::minty_residual(self, x, FITZPATRICK_MINTY_PROBES, 0x6669_747a)
            .map_err(|e| match e {
                crate::resolvent::ResolventError::Bifunction(b) => b,
                other => BifunctionError::InvalidParameter(other.to_string()),
            })?;
        if residual > FITZPATRICK_MINTY_TOL {
            return Err(BifunctionError::NotInSolutionSet { residual });
        }
        self.fitzpatrick_gap_unchecked(p, scale, solution_set)
    }

    /// [`Bifunction::fitzpatrick_gap`] without the membership spot check.
    ///
    /// For the half-squared-distance family the value `½‖q‖²` is exact when
    /// `C` is the whole space and an upper bound otherwise; for the
    /// fixed-point family `σ_C(q) − σ_{S_F}(q)` is likewise an upper bound
    /// that is attained when `C` is the whole space.
    pub fn fitzpatrick_gap_unchecked(
        &self,
        p: &Point,
        scale: f64,
        solution_set: &SetDescriptor,
    ) -> Result<f64, BifunctionError> {
        p.check_dim(self.dim())?;
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(BifunctionError::ScaleNonpositive(scale));
        }
        if p.iter().all(|c| *c == 0.0) {
            return Ok(0.0);
        }
        let q = p * (2.0 / scale);
        match &self.kind {
            BifunctionKind::DifferenceOfFunction(ConvexFunctional::HalfSquaredDistance(_))
            | BifunctionKind::DirectionalDerivative(ConvexFunctional::HalfSquaredDistance(_)) => {
                Ok(0.5 * q.norm_squared())
            }
            BifunctionKind::FixedPointGap(_) => {
                let outer = self.domain.support_function(&q)?;
                let inner = solution_set.support_function(&q)?;
                if outer.is_infinite() {
                    Ok(f64::INFINITY)
                } else {
                    Ok((outer - inner).max(0.0))
                }
            }
            BifunctionKind::Zero => Ok(0.0),
            other => Err(BifunctionError::NoClosedForm(format!("Fitzpatrick gap of {}", other.name()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point {
        Point::from_slice(c).unwrap()
    }

    fn plane() -> SetDescriptor {
        SetDescriptor::whole_space(2).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let half_norm = ConvexFunctional::isotropic(1.0, &pt(&[0.0, 0.0])).unwrap();
        let f = Bifunction::new(BifunctionKind::DifferenceOfFunction(half_norm), plane()).unwrap();
        assert_eq!(f.evaluate(&pt(&[1.0, 0.0]), &pt(&[0.0, 1.0])).unwrap(), 0.0);

        let f = Bifunction::new(BifunctionKind::FixedPointGap(NonexpansiveMap::Identity { dim: 2 }), plane()).unwrap();
        assert_eq!(f.evaluate(&pt(&[1.0, 3.0]), &pt(&[-2.0, 1.0])).unwrap(), 0.0);

        let f = Bifunction::new(BifunctionKind::OperatorVI(MonotoneMap::identity(2)), plane()).unwrap();
        assert_eq!(f.evaluate(&pt(&[1.0, 0.0]), &pt(&[0.0, 0.0])).unwrap(), -1.0);
    }

    #[test]
    fn evaluation_rejects_points_outside_domain() {
        let ball = SetDescriptor::ball(pt(&[0.0, 0.0]), 1.0).unwrap();
        let f = Bifunction::zero(ball);
        assert!(matches!(
            f.evaluate(&pt(&[2.0, 0.0]), &pt(&[0.0, 0.0])),
            Err(BifunctionError::PointOutsideDomain { .. })
        ));
    }

    #[test]
    fn norm1_directional_derivative_takes_the_max_subgradient() {
        let f = Bifunction::new(BifunctionKind::DirectionalDerivative(ConvexFunctional::Norm1 { dim: 2 }), plane())
            .unwrap();
        // at x = (0, 1): ψ′(x; d) = |d₁| + d₂
        assert_eq!(f.evaluate(&pt(&[0.0, 1.0]), &pt(&[-2.0, 0.0])).unwrap(), 2.0 - 1.0);
    }

    #[test]
    fn modulus_of_identity_vi_is_two() {
        // ⟨x, y − x⟩ + ⟨y, x − y⟩ = −‖x − y‖², checked by hand on (1,0),(0,1):
        // ⟨(1,0),(−1,1)⟩ + ⟨(0,1),(1,−1)⟩ = −1 − 1 = −2 = −‖(1,−1)‖².
        let f = Bifunction::new(BifunctionKind::OperatorVI(MonotoneMap::identity(2)), plane()).unwrap();
        let sum = f.evaluate(&pt(&[1.0, 0.0]), &pt(&[0.0, 1.0])).unwrap()
            + f.evaluate(&pt(&[0.0, 1.0]), &pt(&[1.0, 0.0])).unwrap();
        assert_eq!(sum, -2.0);
        let est = f.monotonicity_modulus(DEFAULT_MODULUS_SAMPLES, 7).unwrap();
        assert!((est.estimate - 2.0).abs() < 1e-9);
        assert!(est.warning.is_none());
    }

    #[test]
    fn difference_of_function_modulus_is_zero() {
        let psi = ConvexFunctional::isotropic(3.0, &pt(&[1.0, -1.0])).unwrap();
        let f = Bifunction::new(BifunctionKind::DifferenceOfFunction(psi), plane()).unwrap();
        let est = f.monotonicity_modulus(100, 1).unwrap();
        assert!(est.estimate.abs() < 1e-9);
    }

    #[test]
    fn overclaimed_modulus_warns() {
        let f = Bifunction::new(BifunctionKind::OperatorVI(MonotoneMap::identity(2)), plane())
            .unwrap()
            .with_declared_modulus(3.0)
            .unwrap();
        assert!(f.monotonicity_modulus(50, 3).unwrap().warning.is_some());
    }

    #[test]
    fn degenerate_sample_is_reported() {
        let f = Bifunction::zero(SetDescriptor::singleton(pt(&[1.0, 2.0])));
        assert_eq!(f.monotonicity_modulus(10, 0), Err(BifunctionError::DegenerateSample));
    }

    #[test]
    fn non_monotone_operator_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(MonotoneMap::linear(m).is_err());
    }

    #[test]
    fn fixed_point_sets() {
        let t = NonexpansiveMap::affine(DMatrix::identity(2, 2) * 0.5, DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let fix = t.fixed_point_set().unwrap();
        assert!(fix.project(&pt(&[9.0, 9.0])).unwrap().distance(&pt(&[2.0, 0.0])) < 1e-12);

        let rot = NonexpansiveMap::rotation(3, vec![(0, 1, 0.3)]).unwrap();
        let fix = rot.fixed_point_set().unwrap();
        let y = fix.project(&pt(&[1.0, 2.0, 3.0])).unwrap();
        assert!(y.distance(&pt(&[0.0, 0.0, 3.0])) < 1e-12);

        // translation has no fixed point
        let shift = NonexpansiveMap::affine(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(shift.fixed_point_set(), Err(BifunctionError::EmptyFixedPointSet));
    }

    #[test]
    fn fitzpatrick_gap_examples() {
        let k = SetDescriptor::ball(pt(&[0.0, 0.0]), 1.0).unwrap();
        let f = Bifunction::new(
            BifunctionKind::DifferenceOfFunction(ConvexFunctional::HalfSquaredDistance(k.clone())),
            plane(),
        )
        .unwrap();
        let gap = f.fitzpatrick_gap(&pt(&[0.0, 0.0]), &pt(&[1.0, 0.0]), 2.0, &k).unwrap();
        assert!((gap - 0.5).abs() < 1e-15);
        assert_eq!(f.fitzpatrick_gap(&pt(&[0.5, 0.0]), &Point::zeros(2), 1.0, &k).unwrap(), 0.0);
        assert_eq!(
            f.fitzpatrick_gap(&pt(&[0.0, 0.0]), &pt(&[1.0, 0.0]), 0.0, &k),
            Err(BifunctionError::ScaleNonpositive(0.0))
        );

        let c = SetDescriptor::boxed(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let t = NonexpansiveMap::ProjectionOnto(k.clone());
        let f = Bifunction::new(BifunctionKind::FixedPointGap(t), c).unwrap();
        let gap = f.fitzpatrick_gap(&pt(&[0.0, 0.0]), &pt(&[1.0, 0.0]), 2.0, &k).unwrap();
        assert!((gap - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fitzpatrick_gap_rejects_non_solutions() {
        let k = SetDescriptor::ball(pt(&[0.0, 0.0]), 1.0).unwrap();
        let f = Bifunction::new(
            BifunctionKind::DifferenceOfFunction(ConvexFunctional::HalfSquaredDistance(k.clone())),
            plane(),
        )
        .unwrap();
        assert!(matches!(
            f.fitzpatrick_gap(&pt(&[3.0, 0.0]), &pt(&[1.0, 0.0]), 1.0, &k),
            Err(BifunctionError::NotInSolutionSet { .. })
        ));
    }

    #[test]
    fn fitzpatrick_gap_without_closed_form() {
        let f = Bifunction::new(BifunctionKind::OperatorVI(MonotoneMap::identity(2)), plane()).unwrap();
        let s = SetDescriptor::singleton(Point::zeros(2));
        assert!(matches!(
            f.fitzpatrick_gap_unchecked(&pt(&[1.0, 0.0]), 1.0, &s),
            Err(BifunctionError::NoClosedForm(_))
        ));
    }

    #[test]
    fn minimal_norm_element_uses_the_normal_cone() {
        // ψ = ½‖x − (2,0)‖² on the unit ball, at x = (1, 0): ∇ψ = (−1, 0) is
        // cancelled by the outward normal.
        let psi = ConvexFunctional::isotropic(1.0, &pt(&[2.0, 0.0])).unwrap();
        let ball = SetDescriptor::ball(pt(&[0.0, 0.0]), 1.0).unwrap();
        let g = Bifunction::new(BifunctionKind::DifferenceOfFunction(psi.clone()), ball).unwrap();
        assert!(g.minimal_norm_element(&pt(&[1.0, 0.0])).unwrap().norm() < 1e-15);
        let g = Bifunction::new(BifunctionKind::DifferenceOfFunction(psi), plane()).unwrap();
        assert_eq!(g.minimal_norm_element(&pt(&[1.0, 0.0])).unwrap(), pt(&[-1.0, 0.0]));
    }
}
