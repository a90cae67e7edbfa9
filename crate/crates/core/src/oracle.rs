//! Ground-truth solutions for benchmark problems.
//!
//! Nothing here calls into `resolvent` or `solver`, and bifunction values
//! are recomputed from the problem data by local formulas; only set
//! geometry is shared. Agreement between this module and the solver is
//! therefore evidence rather than a tautology.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::bifunction::{BifunctionKind, Contraction, ConvexFunctional, MonotoneMap, NonexpansiveMap};
use crate::geometry::{GeometryError, Point, SetDescriptor, SetKind, DEFAULT_SAMPLING_RADIUS};
use crate::sampling;
use crate::solver::HepProblem;

pub const PROJECTED_GRADIENT_STEPS: usize = 1_000_000;
pub const EARLY_EXIT_STEP: f64 = 1e-14;
pub const PICARD_TOL: f64 = 1e-12;
pub const CERTIFICATION_SAMPLES: usize = 500;
pub const CERTIFIED_RESIDUAL_TOL: f64 = 1e-6;
pub const GRID_RESOLUTION: f64 = 1e-3;
const CERTIFICATION_SEED: u64 = 0x6f72_6163;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("no analytic form: {0}")]
    NoAnalyticForm(String),
    #[error("oracle did not converge after {iterations} iterations (last step {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("the solution set S is not available as a projectable descriptor")]
    SolutionSetNotProjectable,
    #[error("certified residual {0:e} exceeds the tolerance")]
    CertificationFailed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    AnalyticProjection,
    PicardOnSelector,
    LongProjectedGradient,
    GridSearch,
}

impl OracleMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            OracleMethod::AnalyticProjection => "analytic_projection",
            OracleMethod::PicardOnSelector => "picard_on_selector",
            OracleMethod::LongProjectedGradient => "long_projected_gradient",
            OracleMethod::GridSearch => "grid_search",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub solution: Point,
    pub method: OracleMethod,
    /// `max G(y, x̄)` over sampled `y ∈ S_F`.
    pub certified_residual: f64,
    pub iterations: usize,
}

fn functional_value(psi: &ConvexFunctional, x: &Point) -> Result<f64, OracleError> {
    Ok(match psi {
        ConvexFunctional::Quadratic {
            matrix,
            linear,
            constant,
        } => 0.5 * (matrix * x.vector()).dot(x.vector()) + linear.dot(x.vector()) + constant,
        ConvexFunctional::HalfSquaredDistance(k) => {
            let d = k.distance(x)?;
            0.5 * d * d
        }
        ConvexFunctional::Norm1 { .. } => x.iter().map(|v| v.abs()).sum(),
    })
}

fn functional_slope(psi: &ConvexFunctional, x: &Point, d: &DVector<f64>) -> Result<f64, OracleError> {
    Ok(match psi {
        ConvexFunctional::Quadratic { matrix, linear, .. } => (matrix * x.vector() + linear).dot(d),
        ConvexFunctional::HalfSquaredDistance(k) => (x.vector() - k.project(x)?.vector()).dot(d),
        ConvexFunctional::Norm1 { .. } => x
            .iter()
            .zip(d.iter())
            .map(|(xi, di)| if *xi == 0.0 { di.abs() } else { xi.signum() * di })
            .sum(),
    })
}

fn map_value(a: &MonotoneMap, x: &Point) -> DVector<f64> {
    a.matrix() * x.vector() + a.offset()
}

fn nonexpansive_value(t: &NonexpansiveMap, x: &Point) -> Result<DVector<f64>, OracleError> {
    Ok(match t {
        NonexpansiveMap::Identity { .. } => x.vector().clone(),
        NonexpansiveMap::ProjectionOnto(set) => set.project(x)?.into_vector(),
        NonexpansiveMap::AffineContraction { matrix, offset } => matrix * x.vector() + offset,
        NonexpansiveMap::Rotation { planes, .. } => {
            let mut out = x.vector().clone();
            for &(i, j, theta) in planes {
                let (s, c) = theta.sin_cos();
                out[i] = c * x[i] - s * x[j];
                out[j] = s * x[i] + c * x[j];
            }
            out
        }
    })
}

/// `B(x, y)` for a bifunction kind, recomputed from its data.
fn bifunction_value(kind: &BifunctionKind, x: &Point, y: &Point) -> Result<f64, OracleError> {
    let d = y.vector() - x.vector();
    Ok(match kind {
        BifunctionKind::DifferenceOfFunction(psi) => functional_value(psi, y)? - functional_value(psi, x)?,
        BifunctionKind::DirectionalDerivative(psi) => functional_slope(psi, x, &d)?,
        BifunctionKind::OperatorVI(a) => map_value(a, x).dot(&d),
        BifunctionKind::FixedPointGap(t) => (x.vector() - nonexpansive_value(t, x)?).dot(&d),
        BifunctionKind::Zero => 0.0,
    })
}

fn contraction_value(g: &Contraction, x: &Point) -> DVector<f64> {
    match g {
        Contraction::Constant(p) => p.vector().clone(),
        Contraction::Affine { matrix, offset } => matrix * x.vector() + offset,
    }
}

fn contained_in(inner: &SetDescriptor, outer: &SetDescriptor) -> Result<bool, OracleError> {
    if outer.is_whole_space() {
        return Ok(true);
    }
    let Some((lo, hi)) = inner.bounding_box() else {
        return Ok(false);
    };
    let n = lo.len();
    if lo.iter().chain(hi.iter()).any(|v| !v.is_finite()) {
        return Ok(false);
    }
    // every corner of the bounding box inside the convex outer set
    for mask in 0..(1u64 << n.min(16)) {
        let corner: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] }).collect();
        if !outer.contains(&Point::new(corner)?, 1e-12)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn fixed_point_set(t: &NonexpansiveMap, n: usize) -> Result<SetDescriptor, OracleError> {
    Ok(match t {
        NonexpansiveMap::Identity { .. } => SetDescriptor::whole_space(n)?,
        NonexpansiveMap::ProjectionOnto(b) => b.clone(),
        NonexpansiveMap::AffineContraction { matrix, offset } => {
            let lhs = DMatrix::identity(n, n) - matrix;
            let x = lhs
                .lu()
                .solve(offset)
                .ok_or_else(|| OracleError::NoAnalyticForm("I − M is singular".into()))?;
            SetDescriptor::singleton(Point::from(x))
        }
        NonexpansiveMap::Rotation { planes, .. } => {
            let mut rows = Vec::new();
            for &(i, j, theta) in planes {
                if theta.rem_euclid(std::f64::consts::TAU) == 0.0 {
                    continue;
                }
                for idx in [i, j] {
                    let mut row = vec![0.0; n];
                    row[idx] = 1.0;
                    rows.push(row);
                }
            }
            if rows.is_empty() {
                SetDescriptor::whole_space(n)?
            } else {
                let rhs = vec![0.0; rows.len()];
                SetDescriptor::affine(rows, rhs)?
            }
        }
    })
}

/// The solution set `S_F` of the lower-level problem.
pub fn solve_lower(p: &HepProblem) -> Result<SetDescriptor, OracleError> {
    let c = p.domain();
    let n = p.dim();
    match p.lower().kind() {
        BifunctionKind::Zero => Ok(c.clone()),
        BifunctionKind::DifferenceOfFunction(ConvexFunctional::HalfSquaredDistance(k))
        | BifunctionKind::DirectionalDerivative(ConvexFunctional::HalfSquaredDistance(k)) => {
            if contained_in(k, c)? {
                Ok(k.clone())
            } else {
                Err(OracleError::NoAnalyticForm("K is not contained in C".into()))
            }
        }
        BifunctionKind::FixedPointGap(t) => {
            let fix = fixed_point_set(t, n)?;
            if contained_in(&fix, c)? {
                Ok(fix)
            } else {
                Err(OracleError::NoAnalyticForm("Fix T is not contained in C".into()))
            }
        }
        other => Err(OracleError::NoAnalyticForm(format!("lower-level {} has no analytic S_F", other.name()))),
    }
}

fn lower_set(p: &HepProblem) -> Result<SetDescriptor, OracleError> {
    match p.lower_solution_set() {
        Some(s) => Ok(s.clone()),
        None => solve_lower(p),
    }
}

/// `max G(y, x̄)` over `x̄` itself and seeded samples of `S_F`.
pub fn certify(p: &HepProblem, s_f: &SetDescriptor, x: &Point) -> Result<f64, OracleError> {
    let mut rng = sampling::rng(CERTIFICATION_SEED);
    let mut worst = 0.0f64;
    for _ in 0..CERTIFICATION_SAMPLES {
        let y = s_f.sample(&mut rng, DEFAULT_SAMPLING_RADIUS)?;
        worst = worst.max(bifunction_value(p.upper().kind(), &y, x)?);
    }
    Ok(worst)
}

fn finish(p: &HepProblem, s_f: &SetDescriptor, solution: Point, method: OracleMethod, iterations: usize) -> Result<OracleResult, OracleError> {
    let certified_residual = certify(p, s_f, &solution)?;
    if certified_residual > CERTIFIED_RESIDUAL_TOL {
        return Err(OracleError::CertificationFailed(certified_residual));
    }
    Ok(OracleResult {
        solution,
        method,
        certified_residual,
        iterations,
    })
}

/// Operator `x ↦ A(x)` of a smooth upper level, with its Lipschitz
/// constant and strong monotonicity modulus.
fn upper_operator(kind: &BifunctionKind) -> Option<(DMatrix<f64>, DVector<f64>)> {
    match kind {
        BifunctionKind::DifferenceOfFunction(ConvexFunctional::Quadratic { matrix, linear, .. })
        | BifunctionKind::DirectionalDerivative(ConvexFunctional::Quadratic { matrix, linear, .. }) => {
            Some((matrix.clone(), linear.clone()))
        }
        BifunctionKind::OperatorVI(a) => Some((a.matrix().clone(), a.offset())),
        _ => None,
    }
}

fn long_projected_iteration(
    s_f: &SetDescriptor,
    m: &DMatrix<f64>,
    q: &DVector<f64>,
    step: f64,
) -> Result<(Point, usize), OracleError> {
    let mut x = s_f.project(&Point::zeros(q.len()))?;
    let mut last = f64::INFINITY;
    for it in 1..=PROJECTED_GRADIENT_STEPS {
        let grad = m * x.vector() + q;
        let next = s_f.project(&Point::from(x.vector() - grad * step))?;
        last = next.distance(&x);
        x = next;
        if last < EARLY_EXIT_STEP {
            return Ok((x, it));
        }
    }
    Err(OracleError::NotConverged {
        iterations: PROJECTED_GRADIENT_STEPS,
        residual: last,
    })
}

/// The unique solution of the hierarchical problem when `G` is strongly
/// monotone (or `S_F` is a point).
pub fn solve_hep(p: &HepProblem) -> Result<OracleResult, OracleError> {
    let s_f = lower_set(p)?;
    if let SetKind::Singleton(q) = s_f.kind() {
        return finish(p, &s_f, q.clone(), OracleMethod::AnalyticProjection, 0);
    }
    let kind = p.upper().kind();
    let Some((m, q)) = upper_operator(kind) else {
        return Err(OracleError::NoAnalyticForm(format!(
            "upper-level {} does not single out a solution",
            kind.name()
        )));
    };
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigenvalues();
    let mu = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let lmax = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(mu > 0.0) {
        return Err(OracleError::NoAnalyticForm("upper level is not strongly monotone".into()));
    }
    // ψ = (m/2)‖x − a‖² on S_F: the answer is Π_{S_F}(a)
    let n = q.len();
    let scale = m[(0, 0)];
    if m == DMatrix::identity(n, n) * scale && !matches!(kind, BifunctionKind::OperatorVI(_)) {
        let a = Point::from(-&q / scale);
        return finish(p, &s_f, s_f.project(&a)?, OracleMethod::AnalyticProjection, 0);
    }
    let symmetric = (&m - m.transpose()).amax() == 0.0;
    let step = if symmetric {
        1.0 / lmax
    } else {
        let l = m.clone().singular_values().iter().cloned().fold(0.0, f64::max);
        mu / (l * l)
    };
    match long_projected_iteration(&s_f, &m, &q, step) {
        Ok((x, it)) => finish(p, &s_f, x, OracleMethod::LongProjectedGradient, it),
        Err(e) if p.dim() <= 3 => grid_search(p, &s_f).or(Err(e)),
        Err(e) => Err(e),
    }
}

/// Coarse-to-fine grid minimization of the natural residual
/// `‖x − Π_{S_F}(x − A(x))‖` over the bounding box of `S_F`, refined down
/// to [`GRID_RESOLUTION`]. Needs a bounded `S_F` and `n ≤ 3`.
pub fn grid_search(p: &HepProblem, s_f: &SetDescriptor) -> Result<OracleResult, OracleError> {
    let n = p.dim();
    if n > 3 {
        return Err(OracleError::NoAnalyticForm("grid search needs n ≤ 3".into()));
    }
    let (m, q) = upper_operator(p.upper().kind())
        .ok_or_else(|| OracleError::NoAnalyticForm("grid search needs an affine upper operator".into()))?;
    let (lo, hi) = s_f
        .bounding_box()
        .filter(|(lo, hi)| lo.iter().chain(hi.iter()).all(|v| v.is_finite()))
        .ok_or_else(|| OracleError::NoAnalyticForm("grid search needs a bounded S_F".into()))?;
    let merit = |x: &Point| -> Result<f64, OracleError> {
        let step = Point::from(x.vector() - (&m * x.vector() + &q));
        Ok(x.distance(&s_f.project(&step)?))
    };
    let mut lo = lo;
    let mut hi = hi;
    let mut h = (0..n).map(|i| hi[i] - lo[i]).fold(0.0, f64::max) / 20.0;
    let mut best: Option<(f64, Point)> = None;
    let mut evaluations = 0;
    loop {
        let h_eff = h.max(GRID_RESOLUTION);
        let counts: Vec<usize> = (0..n).map(|i| ((hi[i] - lo[i]) / h_eff).round() as usize + 1).collect();
        let total: usize = counts.iter().product();
        for idx in 0..total {
            let mut rem = idx;
            let coords: Vec<f64> = (0..n)
                .map(|i| {
                    let c = rem % counts[i];
                    rem /= counts[i];
                    (lo[i] + c as f64 * h_eff).min(hi[i])
                })
                .collect();
            let x = Point::new(coords)?;
            if !s_f.contains(&x, 1e-12)? {
                continue;
            }
            evaluations += 1;
            let v = merit(&x)?;
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, x));
            }
        }
        let Some((_, centre)) = &best else {
            return Err(OracleError::NoAnalyticForm("no grid point inside S_F".into()));
        };
        if h_eff <= GRID_RESOLUTION {
            break;
        }
        for i in 0..n {
            lo[i] = lo[i].max(centre[i] - 2.0 * h_eff);
            hi[i] = hi[i].min(centre[i] + 2.0 * h_eff);
        }
        h = h_eff / 10.0;
    }
    let (_, x) = best.expect("set above");
    let certified_residual = certify(p, s_f, &x)?;
    Ok(OracleResult {
        solution: x,
        method: OracleMethod::GridSearch,
        certified_residual,
        iterations: evaluations,
    })
}

/// The solution selected by the viscosity step: the fixed point of
/// `Π_S ∘ g`, by Picard iteration.
pub fn solve_selected(p: &HepProblem) -> Result<OracleResult, OracleError> {
    let s_f = lower_set(p)?;
    let s = match (p.solution_set(), s_f.kind()) {
        (Some(s), _) => s.clone(),
        (None, SetKind::Singleton(_)) => s_f.clone(),
        _ => return Err(OracleError::SolutionSetNotProjectable),
    };
    if matches!(s.kind(), SetKind::Intersection { .. }) {
        return Err(OracleError::SolutionSetNotProjectable);
    }
    let g = p
        .selector()
        .ok_or_else(|| OracleError::NoAnalyticForm("no selector g".into()))?;
    let mut x = s.project(&Point::zeros(p.dim()))?;
    let mut last = f64::INFINITY;
    for it in 1..=PROJECTED_GRADIENT_STEPS {
        let next = s.project(&Point::from(contraction_value(g, &x)))?;
        last = next.distance(&x);
        x = next;
        if last <= PICARD_TOL {
            return finish(p, &s_f, x, OracleMethod::PicardOnSelector, it);
        }
    }
    Err(OracleError::NotConverged {
        iterations: PROJECTED_GRADIENT_STEPS,
        residual: last,
    })
}

/// The reference solution used for distances: the selected solution when
/// the problem carries a selector and `S`, the hierarchical solution
/// otherwise.
pub fn reference_solution(p: &HepProblem) -> Result<OracleResult, OracleError> {
    if p.selector().is_some() && p.solution_set().is_some() {
        solve_selected(p)
    } else {
        solve_hep(p)
    }
}

/// One extra Picard step of `Π_S ∘ g` from `x`.
pub fn picard_step(p: &HepProblem, s: &SetDescriptor, x: &Point) -> Result<Point, OracleError> {
    let g = p
        .selector()
        .ok_or_else(|| OracleError::NoAnalyticForm("no selector g".into()))?;
    Ok(s.project(&Point::from(contraction_value(g, x)))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifunction::Bifunction;

    fn pt(v: &[f64]) -> Point {
        Point::from_slice(v).unwrap()
    }

    fn problem(c: SetDescriptor, lower: BifunctionKind, upper: BifunctionKind) -> HepProblem {
        let f = Bifunction::new(lower, c.clone()).unwrap();
        let g = Bifunction::new(upper, c.clone()).unwrap();
        HepProblem::new(c, f, g).unwrap()
    }

    #[test]
    fn lower_sets() {
        let boxed = SetDescriptor::boxed(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let ball = SetDescriptor::ball(pt(&[0.0, 0.0]), 1.0).unwrap();
        let p = problem(
            boxed.clone(),
            BifunctionKind::DifferenceOfFunction(ConvexFunctional::HalfSquaredDistance(ball.clone())),
            BifunctionKind::Zero,
        );
        assert_eq!(solve_lower(&p).unwrap(), ball);
        let p = problem(boxed.clone(), BifunctionKind::Zero, BifunctionKind::Zero);
        assert_eq!(solve_lower(&p).unwrap(), boxed);

        let ws = SetDescriptor::whole_space(2).unwrap();
        let t = NonexpansiveMap::affine(DMatrix::identity(2, 2) * 0.5, DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let p = problem(ws, BifunctionKind::FixedPointGap(t), BifunctionKind::Zero);
        match solve_lower(&p).unwrap().kind() {
            SetKind::Singleton(q) => assert!(q.distance(&pt(&[2.0, 0.0])) < 1e-15),
            other => panic!("expected a singleton, got {other:?}"),
        }
    }

    #[test]
    fn hep_projection_of_anchor() {
        let ws = SetDescriptor::whole_space(2).unwrap();
        let ball = SetDescriptor::ball(pt(&[0.0, 0.0]), 1.0).unwrap();
        let p = problem(
            ws,
            BifunctionKind::DifferenceOfFunction(ConvexFunctional::HalfSquaredDistance(ball)),
            BifunctionKind::DifferenceOfFunction(ConvexFunctional::isotropic(1.0, &pt(&[2.0, 0.0])).unwrap()),
        );
        let res = solve_hep(&p).unwrap();
        assert_eq!(res.method, OracleMethod::AnalyticProjection);
        assert!(res.solution.distance(&pt(&[1.0, 0.0])) < 1e-15);
        assert!(res.certified_residual <= CERTIFIED_RESIDUAL_TOL);
    }

    #[test]
    fn vi_on_box_agrees_with_grid() {
        let ws = SetDescriptor::whole_space(2).unwrap();
        let b = SetDescriptor::boxed(vec![1.0, 1.0], vec![2.0, 2.0]).unwrap();
        let p = problem(
            ws,
            BifunctionKind::DifferenceOfFunction(ConvexFunctional::HalfSquaredDistance(b.clone())),
            BifunctionKind::OperatorVI(MonotoneMap::identity(2)),
        );
        let res = solve_hep(&p).unwrap();
        assert_eq!(res.method, OracleMethod::LongProjectedGradient);
        assert!(res.solution.distance(&pt(&[1.0, 1.0])) < 1e-12);
        let grid = grid_search(&p, &b).unwrap();
        assert!(grid.solution.distance(&res.solution) <= GRID_RESOLUTION);
    }

    #[test]
    fn selected_solutions() {
        let ws = SetDescriptor::whole_space(2).unwrap();
        let ball = SetDescriptor::ball(pt(&[0.0, 0.0]), 1.0).unwrap();
        let base = problem(
            ws.clone(),
            BifunctionKind::DifferenceOfFunction(ConvexFunctional::HalfSquaredDistance(ball.clone())),
            BifunctionKind::Zero,
        )
        .with_solution_set(ball.clone())
        .unwrap();
        let p = base.clone().with_selector(Contraction::Constant(pt(&[2.0, 0.0]))).unwrap();
        assert!(solve_selected(&p).unwrap().solution.distance(&pt(&[1.0, 0.0])) < 1e-15);

        let unit = SetDescriptor::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let p = problem(
            ws,
            BifunctionKind::DifferenceOfFunction(ConvexFunctional::HalfSquaredDistance(unit.clone())),
            BifunctionKind::Zero,
        )
        .with_solution_set(unit.clone())
        .unwrap()
        .with_selector(Contraction::affine(DMatrix::identity(2, 2) * 0.5, DVector::zeros(2)).unwrap())
        .unwrap();
        let res = solve_selected(&p).unwrap();
        assert!(res.solution.norm() <= 1e-11);
        let again = picard_step(&p, &unit, &res.solution).unwrap();
        assert!(again.distance(&res.solution) <= PICARD_TOL / (1.0 - 0.5));
    }

    #[test]
    fn singleton_lower_set_fixes_the_answer() {
        let ws = SetDescriptor::whole_space(2).unwrap();
        let t = NonexpansiveMap::affine(DMatrix::identity(2, 2) * 0.5, DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let p = problem(
            ws,
            BifunctionKind::FixedPointGap(t),
            BifunctionKind::OperatorVI(MonotoneMap::identity(2)),
        );
        let res = solve_hep(&p).unwrap();
        assert!(res.solution.distance(&pt(&[2.0, 0.0])) < 1e-15);
    }
}
