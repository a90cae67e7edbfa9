//! Resolvents `J_r^F`, Yosida approximations and Minty residuals.
//!
//! `J_r^F(x)` is the unique `z ∈ C` with `r F(z, y) + ⟨y − z, z − x⟩ ≥ 0`
//! for every `y ∈ C`. Closed forms are used where the structure allows;
//! everything else goes through a contracting inner iteration whose output
//! is checked against sampled `y ∈ C` before it is returned.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::bifunction::{Bifunction, BifunctionError, BifunctionKind, ConvexFunctional, NonexpansiveMap};
use crate::geometry::{GeometryError, Point, SetDescriptor, SetKind, DEFAULT_SAMPLING_RADIUS, TAU_PROJ};
use crate::linalg;
use crate::sampling;

/// Number of sampled `y ∈ C` used to verify inner-solver outputs.
pub const VERIFICATION_SAMPLES: usize = 64;
/// Allowed violation of the resolvent inequality, per unit of `max(1, r)`.
pub const VERIFICATION_TOL: f64 = 1e-6;
const VERIFICATION_SEED: u64 = 0x7265_736f;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolventError {
    #[error(transparent)]
    Bifunction(#[from] BifunctionError),
    #[error("parameter must be positive and finite, got {0}")]
    NonpositiveParameter(f64),
    #[error("inner solver stopped after {iterations} iterations with step {residual:e}")]
    InnerSolverDiverged { iterations: usize, residual: f64 },
    #[error("resolvent inequality violated by {violation:e} on a sampled point")]
    VerificationFailed { violation: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl From<GeometryError> for ResolventError {
    fn from(e: GeometryError) -> Self {
        ResolventError::Bifunction(e.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolventMethod {
    /// Closed forms where available, structured inner iterations elsewhere.
    ClosedForm,
    /// Force the projected-gradient inner solver on the smooth kinds.
    InnerProjectedGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventConfig {
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub method: ResolventMethod,
}

impl Default for ResolventConfig {
    fn default() -> Self {
        Self {
            inner_tol: 1e-10,
            inner_max_iters: 100_000,
            method: ResolventMethod::ClosedForm,
        }
    }
}

impl ResolventConfig {
    pub fn validate(&self) -> Result<(), ResolventError> {
        if !(self.inner_tol > 0.0) || !self.inner_tol.is_finite() {
            return Err(ResolventError::InvalidConfig(format!(
                "inner_tol must be positive, got {}",
                self.inner_tol
            )));
        }
        if self.inner_max_iters == 0 {
            return Err(ResolventError::InvalidConfig("inner_max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// How a resolvent value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolveMethodUsed {
    ClosedForm,
    ProjectedGradient,
    ProxSplitting,
    Picard,
    ProjectedFixedPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolveInfo {
    pub point: Point,
    pub method: ResolveMethodUsed,
    pub inner_iterations: usize,
}

/// `J_r^F(x)`.
pub fn resolve(f: &Bifunction, r: f64, x: &Point, cfg: &ResolventConfig) -> Result<Point, ResolventError> {
    resolve_with_info(f, r, x, cfg).map(|info| info.point)
}

/// `J_r^F(x)` together with the method that produced it.
pub fn resolve_with_info(
    f: &Bifunction,
    r: f64,
    x: &Point,
    cfg: &ResolventConfig,
) -> Result<ResolveInfo, ResolventError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(ResolventError::NonpositiveParameter(r));
    }
    cfg.validate()?;
    x.check_dim(f.dim()).map_err(BifunctionError::from)?;
    let c = f.domain();
    let closed = |point: Point| ResolveInfo {
        point,
        method: ResolveMethodUsed::ClosedForm,
        inner_iterations: 0,
    };
    let info = match f.kind() {
        BifunctionKind::Zero => return Ok(closed(c.project(x)?)),
        BifunctionKind::DifferenceOfFunction(psi) | BifunctionKind::DirectionalDerivative(psi) => {
            if cfg.method == ResolventMethod::InnerProjectedGradient && psi.is_differentiable() {
                prox_projected_gradient(psi, c, r, x, cfg)?
            } else if let Some(z) = prox_closed_form(psi, c, r, x)? {
                return Ok(closed(z));
            } else {
                prox_splitting(psi, c, r, x, cfg)?
            }
        }
        BifunctionKind::OperatorVI(a) => {
            let (m, b) = (a.matrix(), a.offset());
            let n = x.dim();
            // (I + rM) z = x − r b
            let lhs = DMatrix::identity(n, n) + m * r;
            let z0 = Point::from(solve_linear(&lhs, &(x.vector() - &b * r))?);
            if cfg.method == ResolventMethod::ClosedForm && inside(c, &z0)? {
                return Ok(closed(z0));
            }
            let mu = a.strong_monotonicity() + 1.0 / r;
            let lip = a.lipschitz() + 1.0 / r;
            let step = if a.is_symmetric() { 1.0 / lip } else { mu / (lip * lip) };
            let q = if a.is_symmetric() {
                1.0 - mu / lip
            } else {
                (1.0 - mu * mu / (lip * lip)).max(0.0).sqrt()
            };
            let map = |z: &Point| -> Result<Point, ResolventError> {
                let grad = &Point::from(m * z.vector() + &b) + &(&(z - x) * (1.0 / r));
                Ok(c.project(&z.combine(1.0, &grad, -step))?)
            };
            let start = c.project(x)?;
            let (z, it) = contract(map, start, q, cfg)?;
            ResolveInfo {
                point: z,
                method: ResolveMethodUsed::ProjectedFixedPoint,
                inner_iterations: it,
            }
        }
        BifunctionKind::FixedPointGap(t) => {
            if let Some(z0) = fixed_point_unconstrained(t, r, x)? {
                if cfg.method == ResolventMethod::ClosedForm && inside(c, &z0)? {
                    return Ok(closed(z0));
                }
            }
            // z = Π_C((x + r T z)/(1 + r)) contracts with factor r/(1 + r).
            let q = r / (1.0 + r);
            let map = |z: &Point| -> Result<Point, ResolventError> {
                let tz = t.apply(z)?;
                Ok(c.project(&x.combine(1.0 - q, &tz, q))?)
            };
            let start = c.project(x)?;
            let (z, it) = contract(map, start, q, cfg)?;
            ResolveInfo {
                point: z,
                method: ResolveMethodUsed::Picard,
                inner_iterations: it,
            }
        }
    };
    verify(f, r, x, &info.point, cfg)?;
    Ok(info)
}

/// Yosida approximation `(x − J_r^F(x)) / r`.
pub fn yosida(f: &Bifunction, r: f64, x: &Point, cfg: &ResolventConfig) -> Result<Point, ResolventError> {
    let z = resolve(f, r, x, cfg)?;
    Ok(&(x - &z) * (1.0 / r))
}

/// `max F(y, x)` over `x` itself, `Π_C(0)` and `probe_count` seeded samples
/// of `C`. Values at or below a tolerance certify `x` as an approximate
/// solution of the Minty formulation.
pub fn minty_residual(f: &Bifunction, x: &Point, probe_count: usize, seed: u64) -> Result<f64, ResolventError> {
    f.check_in_domain(x)?;
    let c = f.domain();
    let mut worst = f.evaluate_unchecked(x, x)?;
    let origin = c.project(&Point::zeros(x.dim()))?;
    worst = worst.max(f.evaluate_unchecked(&origin, x)?);
    let mut rng = sampling::rng(seed);
    for _ in 0..probe_count {
        let y = c.sample(&mut rng, DEFAULT_SAMPLING_RADIUS)?;
        worst = worst.max(f.evaluate_unchecked(&y, x)?);
    }
    Ok(worst)
}

/// `min [r F(z, y) + ⟨y − z, z − x⟩]` over `z` itself, `x` projected onto
/// `C`, and `samples` seeded points of `C`. Nonnegative for the exact
/// resolvent.
pub fn resolvent_inequality_margin(
    f: &Bifunction,
    r: f64,
    x: &Point,
    z: &Point,
    samples: usize,
    seed: u64,
) -> Result<f64, ResolventError> {
    let c = f.domain();
    let term = |y: &Point| -> Result<f64, ResolventError> {
        Ok(r * f.evaluate_unchecked(z, y)? + (y - z).dot(&(z - x)))
    };
    let mut worst = term(&c.project(x)?)?;
    let mut rng = sampling::rng(seed);
    for _ in 0..samples {
        let y = c.sample(&mut rng, DEFAULT_SAMPLING_RADIUS)?;
        worst = worst.min(term(&y)?);
    }
    Ok(worst)
}

fn verify(f: &Bifunction, r: f64, x: &Point, z: &Point, cfg: &ResolventConfig) -> Result<(), ResolventError> {
    f.check_in_domain(z)?;
    let margin = resolvent_inequality_margin(f, r, x, z, VERIFICATION_SAMPLES, VERIFICATION_SEED)?;
    let tol = VERIFICATION_TOL.max(cfg.inner_tol) * r.max(1.0) * (1.0 + x.norm());
    if margin < -tol {
        return Err(ResolventError::VerificationFailed { violation: -margin });
    }
    Ok(())
}

fn inside(c: &SetDescriptor, z: &Point) -> Result<bool, ResolventError> {
    Ok(c.is_whole_space() || c.contains(z, TAU_PROJ)?)
}

fn solve_linear(lhs: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, ResolventError> {
    let lu = lhs.clone().lu();
    let mut z = lu
        .solve(rhs)
        .ok_or_else(|| ResolventError::InvalidConfig("singular resolvent system".into()))?;
    // one step of iterative refinement
    if let Some(dz) = lu.solve(&(rhs - lhs * &z)) {
        z += dz;
    }
    Ok(z)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Unconstrained `prox_{rψ}(x)`.
fn prox_unconstrained(psi: &ConvexFunctional, r: f64, x: &Point) -> Result<Point, ResolventError> {
    Ok(match psi {
        ConvexFunctional::Quadratic { matrix, linear, .. } => {
            let n = x.dim();
            let lhs = DMatrix::identity(n, n) + matrix * r;
            Point::from(solve_linear(&lhs, &(x.vector() - linear * r))?)
        }
        ConvexFunctional::HalfSquaredDistance(k) => {
            let t = r / (1.0 + r);
            x.combine(1.0 - t, &k.project(x)?, t)
        }
        ConvexFunctional::Norm1 { .. } => Point::from(x.map(|v| soft_threshold(v, r))),
    })
}

/// `prox_{r(ψ+δ_C)}(x)` where a closed form exists.
fn prox_closed_form(
    psi: &ConvexFunctional,
    c: &SetDescriptor,
    r: f64,
    x: &Point,
) -> Result<Option<Point>, ResolventError> {
    let z0 = prox_unconstrained(psi, r, x)?;
    if inside(c, &z0)? {
        return Ok(Some(z0));
    }
    let separable = match psi {
        ConvexFunctional::Quadratic { matrix, .. } => {
            if linalg::isotropic_scale(matrix).is_some() {
                // ψ + ‖· − x‖²/2r is then a multiple of ‖· − z0‖² plus a constant.
                return Ok(Some(c.project(&z0)?));
            }
            linalg::is_diagonal(matrix)
        }
        ConvexFunctional::Norm1 { .. } => true,
        ConvexFunctional::HalfSquaredDistance(k) => matches!(k.kind(), SetKind::Box { .. }),
    };
    if separable && matches!(c.kind(), SetKind::Box { .. }) {
        // separable objective over a box: clip the one-dimensional proxes
        return Ok(Some(c.project(&z0)?));
    }
    Ok(None)
}

/// Projected gradient on `ψ(z) + ‖z − x‖²/(2r)` over `C` with step `1/L`.
fn prox_projected_gradient(
    psi: &ConvexFunctional,
    c: &SetDescriptor,
    r: f64,
    x: &Point,
    cfg: &ResolventConfig,
) -> Result<ResolveInfo, ResolventError> {
    let lip = psi.gradient_lipschitz().unwrap_or(0.0) + 1.0 / r;
    let mu = psi.strong_convexity() + 1.0 / r;
    let step = 1.0 / lip;
    let map = |z: &Point| -> Result<Point, ResolventError> {
        let grad = &psi.subgradient(z)? + &(&(z - x) * (1.0 / r));
        Ok(c.project(&z.combine(1.0, &grad, -step))?)
    };
    let (z, it) = contract(map, c.project(x)?, 1.0 - mu / lip, cfg)?;
    Ok(ResolveInfo {
        point: z,
        method: ResolveMethodUsed::ProjectedGradient,
        inner_iterations: it,
    })
}

/// Dykstra-type splitting for `prox_{rψ + δ_C}`: alternates the
/// unconstrained prox of `rψ` with the projection onto `C`, carrying the two
/// correction terms so the limit is the prox of the sum.
fn prox_splitting(
    psi: &ConvexFunctional,
    c: &SetDescriptor,
    r: f64,
    x: &Point,
    cfg: &ResolventConfig,
) -> Result<ResolveInfo, ResolventError> {
    let n = x.dim();
    let mut cur = x.clone();
    let mut p = Point::zeros(n);
    let mut q = Point::zeros(n);
    let mut last_step = f64::INFINITY;
    for it in 1..=cfg.inner_max_iters {
        let y = prox_unconstrained(psi, r, &(&cur + &p))?;
        p = &(&cur + &p) - &y;
        let next = c.project(&(&y + &q))?;
        q = &(&y + &q) - &next;
        last_step = next.distance(&cur).max(next.distance(&y));
        cur = next;
        if last_step <= 0.1 * cfg.inner_tol {
            return Ok(ResolveInfo {
                point: cur,
                method: ResolveMethodUsed::ProxSplitting,
                inner_iterations: it,
            });
        }
    }
    Err(ResolventError::InnerSolverDiverged {
        iterations: cfg.inner_max_iters,
        residual: last_step,
    })
}

/// Unconstrained solution of `r(z − T z) + z − x = 0` for the kinds where it
/// is explicit.
fn fixed_point_unconstrained(t: &NonexpansiveMap, r: f64, x: &Point) -> Result<Option<Point>, ResolventError> {
    let n = x.dim();
    Ok(Some(match t {
        NonexpansiveMap::Identity { .. } => x.clone(),
        NonexpansiveMap::ProjectionOnto(b) => {
            // I − Π_B is the gradient of ½d_B², so this is its prox.
            let s = r / (1.0 + r);
            x.combine(1.0 - s, &b.project(x)?, s)
        }
        NonexpansiveMap::AffineContraction { matrix, offset } => {
            let lhs = DMatrix::identity(n, n) * (1.0 + r) - matrix * r;
            Point::from(solve_linear(&lhs, &(x.vector() + offset * r))?)
        }
        NonexpansiveMap::Rotation { .. } => {
            let mut rot = DMatrix::zeros(n, n);
            for j in 0..n {
                let mut e = DVector::zeros(n);
                e[j] = 1.0;
                let col = t.apply(&Point::from(e))?;
                rot.set_column(j, col.vector());
            }
            let lhs = DMatrix::identity(n, n) * (1.0 + r) - rot * r;
            Point::from(solve_linear(&lhs, x.vector())?)
        }
    }))
}

/// Iterates a `q`-contraction until the a-posteriori error bound
/// `q/(1−q)·‖Δz‖` falls below `inner_tol`.
fn contract<M>(map: M, start: Point, q: f64, cfg: &ResolventConfig) -> Result<(Point, usize), ResolventError>
where
    M: Fn(&Point) -> Result<Point, ResolventError>,
{
    let q = q.clamp(0.0, 1.0 - 1e-16);
    let factor = if q == 0.0 { 1.0 } else { q / (1.0 - q) };
    let mut z = start;
    let mut step = f64::INFINITY;
    for it in 1..=cfg.inner_max_iters {
        let next = map(&z)?;
        step = next.distance(&z);
        z = next;
        if step * factor <= cfg.inner_tol || step == 0.0 {
            return Ok((z, it));
        }
    }
    Err(ResolventError::InnerSolverDiverged {
        iterations: cfg.inner_max_iters,
        residual: step,
    })
}
