//! The relaxed inertial proximal splitting iteration
//!
//! ```text
//! y_k     = (1 − γ_k) x_k + γ_k x_{k−1}
//! u_k     = J^G_{r_k}(y_k)
//! z_k     = J^F_{r_k λ_k}(u_k)
//! x_{k+1} = α_k x_k + β_k z_k + μ_k g(x_k)
//! ```
//!
//! together with its degenerate reductions, ergodic averages and the
//! per-iteration certificate.

use nalgebra::DVector;
use thiserror::Error;

use crate::bifunction::{Bifunction, BifunctionError, BifunctionKind, Contraction};
use crate::geometry::{GeometryError, Point, SetDescriptor, DEFAULT_SAMPLING_RADIUS};
use crate::resolvent::{self, ResolventConfig, ResolventError};
use crate::sampling;
use crate::schedule::{ScheduleError, ScheduleSet, StepParams};

pub const DEFAULT_MAX_ITERS: usize = 100_000;
pub const DEFAULT_STEP_TOL: f64 = 1e-10;
pub const DEFAULT_SOLUTION_TOL: f64 = 1e-8;
pub const DEFAULT_MINTY_PROBES: usize = 16;
/// Tolerance of the construction-time Minty spot checks.
pub const SPOT_CHECK_TOL: f64 = 1e-6;
const SPOT_CHECK_POINTS: usize = 8;
const SPOT_CHECK_PROBES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
    #[error(transparent)]
    Bifunction(#[from] BifunctionError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid stopping rule: {0}")]
    InvalidStoppingRule(String),
    #[error("no iterations recorded")]
    NoIterations,
    #[error("no known solution available for the certificate")]
    SolutionNotProvided,
    #[error("invalid certificate parameters: {0}")]
    InvalidCertificate(String),
    #[error("variant {variant} is not admissible: {reason}")]
    VariantMismatch { variant: &'static str, reason: String },
    #[error("iteration {k} failed: {source}")]
    StepFailed {
        k: u64,
        source: Box<SolverError>,
        partial: Box<Trajectory>,
    },
}

/// A hierarchical equilibrium problem: equilibria of `G` over the
/// equilibria `S_F` of `F` on `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct HepProblem {
    domain: SetDescriptor,
    lower: Bifunction,
    upper: Bifunction,
    selector: Option<Contraction>,
    lower_solution_set: Option<SetDescriptor>,
    solution_set: Option<SetDescriptor>,
    known_solution: Option<Point>,
}

impl HepProblem {
    pub fn new(domain: SetDescriptor, lower: Bifunction, upper: Bifunction) -> Result<Self, SolverError> {
        let n = domain.dim();
        if lower.dim() != n || upper.dim() != n {
            return Err(SolverError::InvalidProblem(format!(
                "dimension mismatch: C has {n}, F has {}, G has {}",
                lower.dim(),
                upper.dim()
            )));
        }
        if lower.domain() != &domain || upper.domain() != &domain {
            return Err(SolverError::InvalidProblem("F and G must be posed on C".into()));
        }
        Ok(Self {
            domain,
            lower,
            upper,
            selector: None,
            lower_solution_set: None,
            solution_set: None,
            known_solution: None,
        })
    }

    pub fn with_selector(mut self, g: Contraction) -> Result<Self, SolverError> {
        if g.dim() != self.dim() {
            return Err(SolverError::InvalidProblem("selector dimension mismatch".into()));
        }
        self.selector = Some(g);
        Ok(self)
    }

    /// Attaches the analytic `S_F`; seeded points of it are spot-checked
    /// against the Minty formulation of `F`.
    pub fn with_lower_solution_set(mut self, s_f: SetDescriptor, seed: u64) -> Result<Self, SolverError> {
        if s_f.dim() != self.dim() {
            return Err(SolverError::InvalidProblem("S_F dimension mismatch".into()));
        }
        let mut rng = sampling::rng(seed);
        for i in 0..SPOT_CHECK_POINTS {
            let x = s_f.sample(&mut rng, DEFAULT_SAMPLING_RADIUS)?;
            let residual = resolvent::minty_residual(&self.lower, &x, SPOT_CHECK_PROBES, seed.wrapping_add(i as u64))?;
            if residual > SPOT_CHECK_TOL {
                return Err(SolverError::InvalidProblem(format!(
                    "S_F point {:?} has Minty residual {residual:e} on F",
                    x.as_slice()
                )));
            }
        }
        self.lower_solution_set = Some(s_f);
        Ok(self)
    }

    /// Attaches the solution set `S` of the hierarchical problem.
    pub fn with_solution_set(mut self, s: SetDescriptor) -> Result<Self, SolverError> {
        if s.dim() != self.dim() {
            return Err(SolverError::InvalidProblem("S dimension mismatch".into()));
        }
        self.solution_set = Some(s);
        Ok(self)
    }

    /// Attaches `x̄`. When `S_F` is known, `x̄` must lie in it and pass the
    /// Minty check of `G` over sampled points of `S_F`.
    pub fn with_known_solution(mut self, x: Point, seed: u64) -> Result<Self, SolverError> {
        x.check_dim(self.dim())?;
        self.upper.check_in_domain(&x)?;
        if let Some(s_f) = &self.lower_solution_set {
            let d = s_f.distance(&x)?;
            if d > SPOT_CHECK_TOL * (1.0 + x.norm()) {
                return Err(SolverError::InvalidProblem(format!("known solution is {d:e} away from S_F")));
            }
            let mut rng = sampling::rng(seed);
            let mut worst = 0.0f64;
            for _ in 0..SPOT_CHECK_PROBES {
                let y = s_f.sample(&mut rng, DEFAULT_SAMPLING_RADIUS)?;
                worst = worst.max(self.upper.evaluate_unchecked(&y, &x)?);
            }
            if worst > SPOT_CHECK_TOL {
                return Err(SolverError::InvalidProblem(format!(
                    "known solution has Minty residual {worst:e} on G over S_F"
                )));
            }
        }
        self.known_solution = Some(x);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &SetDescriptor {
        &self.domain
    }

    pub fn lower(&self) -> &Bifunction {
        &self.lower
    }

    pub fn upper(&self) -> &Bifunction {
        &self.upper
    }

    pub fn selector(&self) -> Option<&Contraction> {
        self.selector.as_ref()
    }

    pub fn lower_solution_set(&self) -> Option<&SetDescriptor> {
        self.lower_solution_set.as_ref()
    }

    pub fn solution_set(&self) -> Option<&SetDescriptor> {
        self.solution_set.as_ref()
    }

    pub fn known_solution(&self) -> Option<&Point> {
        self.known_solution.as_ref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRule {
    pub max_iters: usize,
    /// Stop once `‖x_{k+1} − x_k‖ ≤ step_tol`; zero disables the test.
    pub step_tol: f64,
    /// Stop once `‖x_{k+1} − x̄‖ ≤ solution_tol`; zero disables the test.
    pub solution_tol: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            step_tol: DEFAULT_STEP_TOL,
            solution_tol: DEFAULT_SOLUTION_TOL,
        }
    }
}

impl StoppingRule {
    pub fn iterations(max_iters: usize) -> Self {
        Self {
            max_iters,
            step_tol: 0.0,
            solution_tol: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.max_iters == 0 {
            return Err(SolverError::InvalidStoppingRule("max_iters must be at least 1".into()));
        }
        for (name, v) in [("step_tol", self.step_tol), ("solution_tol", self.solution_tol)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(SolverError::InvalidStoppingRule(format!("{name} must be finite and nonnegative")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    StepTol,
    SolutionTol,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::MaxIters => "max_iters",
            StopReason::StepTol => "step_tol",
            StopReason::SolutionTol => "solution_tol",
        }
    }
}

/// What the certificate is evaluated against: `x̄ ∈ S`, the multiplier
/// `p ∈ N_{S_F}(x̄)` with `−p ∈ A^G(x̄)` (so `v = 0`), and the modulus `ρ`
/// in the convention `G(x, y) + G(y, x) ≤ −ρ‖x − y‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSpec {
    pub x_bar: Point,
    pub multiplier: Point,
    pub rho: f64,
}

impl CertificateSpec {
    /// `v = p = 0`, with `ρ` taken from `G`.
    pub fn at_solution(problem: &HepProblem, x_bar: Point) -> Self {
        let n = x_bar.dim();
        Self {
            x_bar,
            multiplier: Point::zeros(n),
            rho: lemma_rho(problem.upper()),
        }
    }
}

/// `G`'s modulus in the convention `G(x, y) + G(y, x) ≤ −ρ‖x − y‖²`.
pub fn lemma_rho(g: &Bifunction) -> f64 {
    0.5 * g.modulus()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub resolvent: ResolventConfig,
    pub minty_probes: usize,
    pub seed: u64,
    pub certificate: Option<CertificateSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            resolvent: ResolventConfig::default(),
            minty_probes: DEFAULT_MINTY_PROBES,
            seed: 0,
            certificate: None,
        }
    }
}

/// Running `Σ r_k x_{k+1}` and `σ = Σ r_k` with compensated summation.
#[derive(Debug, Clone, PartialEq)]
struct ErgodicAccumulator {
    sum: DVector<f64>,
    sum_comp: DVector<f64>,
    sigma: f64,
    sigma_comp: f64,
    count: u64,
}

impl ErgodicAccumulator {
    fn new(dim: usize) -> Self {
        Self {
            sum: DVector::zeros(dim),
            sum_comp: DVector::zeros(dim),
            sigma: 0.0,
            sigma_comp: 0.0,
            count: 0,
        }
    }

    fn add(&mut self, weight: f64, x: &Point) {
        for i in 0..self.sum.len() {
            let y = weight * x[i] - self.sum_comp[i];
            let t = self.sum[i] + y;
            self.sum_comp[i] = (t - self.sum[i]) - y;
            self.sum[i] = t;
        }
        let y = weight - self.sigma_comp;
        let t = self.sigma + y;
        self.sigma_comp = (t - self.sigma) - y;
        self.sigma = t;
        self.count += 1;
    }

    fn average(&self) -> Result<Point, SolverError> {
        if self.count == 0 || self.sigma <= 0.0 {
            return Err(SolverError::NoIterations);
        }
        Ok(Point::from(&self.sum / self.sigma))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Index of the next iteration.
    pub k: u64,
    pub x_prev: Point,
    pub x_curr: Point,
    ergodic: ErgodicAccumulator,
}

impl SolverState {
    /// Starts from `x_1` with `x_0 = x_1` unless a previous point is given.
    pub fn new(x1: Point, x0: Option<Point>) -> Result<Self, SolverError> {
        if !x1.is_finite() {
            return Err(SolverError::Geometry(GeometryError::NonFinite));
        }
        let x0 = match x0 {
            Some(p) => {
                p.check_dim(x1.dim())?;
                p
            }
            None => x1.clone(),
        };
        let dim = x1.dim();
        Ok(Self {
            k: 1,
            x_prev: x0,
            x_curr: x1,
            ergodic: ErgodicAccumulator::new(dim),
        })
    }

    /// `σ_n`
    pub fn sigma(&self) -> f64 {
        self.ergodic.sigma
    }

    fn advance(&mut self, x_next: Point, weight: f64) {
        self.ergodic.add(weight, &x_next);
        self.x_prev = std::mem::replace(&mut self.x_curr, x_next);
        self.k += 1;
    }
}

/// `x̃_n = (1/σ_n) Σ_{k=1}^n r_k x_{k+1}`: each weight is paired with the
/// iterate its step produced.
pub fn ergodic_average(s: &SolverState) -> Result<Point, SolverError> {
    s.ergodic.average()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: u64,
    pub params: StepParams,
    pub x_prev: Point,
    pub x_curr: Point,
    pub y: Point,
    pub u: Point,
    pub z: Point,
    pub x_next: Point,
    pub step_norm: f64,
    pub splitting_gap: f64,
    pub minty_residual: f64,
    pub dist_to_solution: Option<f64>,
    pub certificate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    pub final_point: Point,
    pub ergodic_average: Option<Point>,
    pub stop_reason: Option<StopReason>,
}

impl Trajectory {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn iterates(&self) -> impl Iterator<Item = &Point> {
        self.records.iter().map(|r| &r.x_next)
    }

    pub fn certificate_min(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| r.certificate)
            .reduce(f64::min)
    }
}

fn diagnostics(
    problem: &HepProblem,
    cfg: &RunConfig,
    record: &mut IterationRecord,
) -> Result<(), SolverError> {
    record.minty_residual = if cfg.minty_probes == 0 {
        0.0
    } else {
        resolvent::minty_residual(problem.lower(), &record.x_next, cfg.minty_probes, cfg.seed)?
    };
    record.dist_to_solution = problem.known_solution().map(|s| record.x_next.distance(s));
    if let Some(spec) = &cfg.certificate {
        record.certificate = Some(lemma10_certificate(problem, record, spec)?);
    }
    Ok(())
}

fn selector_value(problem: &HepProblem, mu: f64, x: &Point) -> Result<Point, SolverError> {
    match problem.selector() {
        Some(g) => Ok(g.apply(x)?),
        None if mu == 0.0 => Ok(Point::zeros(x.dim())),
        None => Err(SolverError::InvalidProblem("μ_k > 0 requires a selector g".into())),
    }
}

/// One iteration from `s`.
pub fn ripsa_step(
    problem: &HepProblem,
    s: &SolverState,
    sched: &ScheduleSet,
    cfg: &RunConfig,
) -> Result<(SolverState, IterationRecord), SolverError> {
    let k = s.k;
    let p = sched.at(k)?;
    s.x_curr.check_dim(problem.dim())?;

    let y = s.x_curr.combine(1.0 - p.gamma, &s.x_prev, p.gamma);
    let u = resolvent::resolve(problem.upper(), p.r, &y, &cfg.resolvent)?;
    let z = resolvent::resolve(problem.lower(), p.r * p.lambda, &u, &cfg.resolvent)?;
    let g = selector_value(problem, p.mu, &s.x_curr)?;
    let mut x_next = s.x_curr.combine(p.alpha, &z, p.beta);
    if p.mu != 0.0 {
        x_next = x_next.combine(1.0, &g, p.mu);
    }
    if !x_next.is_finite() {
        return Err(SolverError::Geometry(GeometryError::NonFinite));
    }

    let mut record = IterationRecord {
        k,
        params: p,
        x_prev: s.x_prev.clone(),
        x_curr: s.x_curr.clone(),
        step_norm: x_next.distance(&s.x_curr),
        splitting_gap: u.distance(&z),
        y,
        u,
        z,
        x_next: x_next.clone(),
        minty_residual: 0.0,
        dist_to_solution: None,
        certificate: None,
    };
    diagnostics(problem, cfg, &mut record)?;
    let mut next = s.clone();
    next.advance(x_next, p.r);
    Ok((next, record))
}

fn stop_check(stop: &StoppingRule, rec: &IterationRecord) -> Option<StopReason> {
    if let Some(d) = rec.dist_to_solution {
        if stop.solution_tol > 0.0 && d <= stop.solution_tol {
            return Some(StopReason::SolutionTol);
        }
    }
    if stop.step_tol > 0.0 && rec.step_norm <= stop.step_tol {
        return Some(StopReason::StepTol);
    }
    None
}

fn drive<F>(
    x1: Point,
    x0: Option<Point>,
    stop: &StoppingRule,
    mut step: F,
) -> Result<Trajectory, SolverError>
where
    F: FnMut(&SolverState) -> Result<(SolverState, IterationRecord), SolverError>,
{
    stop.validate()?;
    let mut state = SolverState::new(x1, x0)?;
    let mut records: Vec<IterationRecord> = Vec::with_capacity(stop.max_iters.min(1 << 20));
    let mut reason = StopReason::MaxIters;
    for _ in 0..stop.max_iters {
        match step(&state) {
            Ok((next, rec)) => {
                let hit = stop_check(stop, &rec);
                records.push(rec);
                state = next;
                if let Some(r) = hit {
                    reason = r;
                    break;
                }
            }
            Err(e) => {
                let partial = Trajectory {
                    records,
                    final_point: state.x_curr.clone(),
                    ergodic_average: ergodic_average(&state).ok(),
                    stop_reason: None,
                };
                return Err(SolverError::StepFailed {
                    k: state.k,
                    source: Box::new(e),
                    partial: Box::new(partial),
                });
            }
        }
    }
    Ok(Trajectory {
        records,
        final_point: state.x_curr.clone(),
        ergodic_average: Some(ergodic_average(&state)?),
        stop_reason: Some(reason),
    })
}

/// Iterates from `x_1` (and `x_0`, defaulting to `x_1`) until `stop` fires.
pub fn run(
    problem: &HepProblem,
    sched: &ScheduleSet,
    x1: &Point,
    x0: Option<&Point>,
    cfg: &RunConfig,
    stop: &StoppingRule,
) -> Result<Trajectory, SolverError> {
    cfg.resolvent.validate()?;
    x1.check_dim(problem.dim())?;
    drive(x1.clone(), x0.cloned(), stop, |s| ripsa_step(problem, s, sched, cfg))
}

/// `‖αx + βy + γz‖²` expanded for `α + β + γ = 1`:
/// `α‖x‖² + β‖y‖² + γ‖z‖² − αβ‖x−y‖² − αγ‖x−z‖² − βγ‖y−z‖²`.
pub fn three_point_expansion(alpha: f64, beta: f64, gamma: f64, x: &Point, y: &Point, z: &Point) -> f64 {
    alpha * x.norm_squared() + beta * y.norm_squared() + gamma * z.norm_squared()
        - alpha * beta * x.distance_squared(y)
        - alpha * gamma * x.distance_squared(z)
        - beta * gamma * y.distance_squared(z)
}

/// Right-hand side minus left-hand side of the per-iteration inequality
/// for `z_k`, with `v = 0` and the multiplier `p` of `spec`. Nonnegative
/// up to rounding whenever `p ∈ N_{S_F}(x̄)` and `−p ∈ A^G(x̄)`.
pub fn lemma10_certificate(
    problem: &HepProblem,
    rec: &IterationRecord,
    spec: &CertificateSpec,
) -> Result<f64, SolverError> {
    let StepParams {
        r, lambda, gamma, b, c, ..
    } = rec.params;
    if !(c > 0.0 && c < 2.0) {
        return Err(SolverError::InvalidCertificate(format!("c must lie in (0, 2), got {c}")));
    }
    if !(b > gamma && b < 1.0) {
        return Err(SolverError::InvalidCertificate(format!("b_k = {b} must lie in (γ_k, 1) = ({gamma}, 1)")));
    }
    if !(spec.rho >= 0.0) {
        return Err(SolverError::InvalidCertificate(format!("ρ must be nonnegative, got {}", spec.rho)));
    }
    let x = &spec.x_bar;
    let p = &spec.multiplier;
    let p2 = p.norm_squared();
    let gap = if p2 == 0.0 {
        0.0
    } else {
        let s_f = problem.lower_solution_set().ok_or(SolverError::SolutionNotProvided)?;
        problem.lower().fitzpatrick_gap_unchecked(p, lambda, s_f)?
    };
    // the inertial terms are dropped at γ_k = 0, where b_k only scales zeros
    let inertial = if gamma == 0.0 {
        0.0
    } else {
        gamma * rec.x_prev.distance_squared(x) - gamma * (1.0 - b) * rec.x_curr.distance_squared(&rec.x_prev)
    };
    let rhs = r * lambda * problem.lower().evaluate_unchecked(&rec.z, x)?
        + r * lambda * gap
        + 2.0 / c * r * r * p2
        + (1.0 - gamma) * rec.x_curr.distance_squared(x)
        + inertial
        - (1.0 - gamma / b) * rec.u.distance_squared(&rec.x_curr)
        - (1.0 - c / 2.0) * rec.u.distance_squared(&rec.z);
    let lhs = (1.0 + 2.0 * spec.rho * r) * rec.z.distance_squared(x);
    Ok(rhs - lhs)
}

/// Classical schemes that the iteration reduces to under degenerate
/// schedules. Each is coded separately from [`ripsa_step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Ripsa,
    /// `x_{k+1} = J^G_{r_k}(x_k)`
    ProximalPoint,
    /// `x_{k+1} = α_k x_k + (1 − α_k) J^F_{r_k}(x_k)`
    Mann,
    /// `x_{k+1} = μ_k u + (1 − μ_k) J^{λ_k F}_{r_k}(J^G_{r_k}(x_k))`
    Halpern,
    /// `x_{k+1} = J^{λ_k F}_{r_k}(J^G_{r_k}(x_k + τ_k (x_k − x_{k−1})))`
    /// with `τ_k = −γ_k`.
    Splitting,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Ripsa,
        Variant::ProximalPoint,
        Variant::Mann,
        Variant::Halpern,
        Variant::Splitting,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Ripsa => "ripsa",
            Variant::ProximalPoint => "proximal_point",
            Variant::Mann => "mann",
            Variant::Halpern => "halpern",
            Variant::Splitting => "splitting",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }
}

fn require(variant: Variant, ok: bool, reason: &str) -> Result<(), SolverError> {
    if ok {
        Ok(())
    } else {
        Err(SolverError::VariantMismatch {
            variant: variant.name(),
            reason: reason.to_string(),
        })
    }
}

/// Checks the degenerate-schedule constraints of `variant` at step `k`.
fn admissible_at(variant: Variant, problem: &HepProblem, p: &StepParams) -> Result<(), SolverError> {
    match variant {
        Variant::Ripsa => Ok(()),
        Variant::ProximalPoint => {
            require(variant, matches!(problem.lower().kind(), BifunctionKind::Zero), "F must be Zero")?;
            require(
                variant,
                p.gamma == 0.0 && p.alpha == 0.0 && p.beta == 1.0,
                "needs γ = α = μ = 0 and β = 1",
            )
        }
        Variant::Mann => {
            require(variant, matches!(problem.upper().kind(), BifunctionKind::Zero), "G must be Zero")?;
            require(
                variant,
                p.gamma == 0.0 && p.lambda == 1.0 && p.mu.abs() <= 1e-15,
                "needs γ = μ = 0 and λ = 1",
            )
        }
        Variant::Halpern => {
            require(
                variant,
                matches!(problem.selector(), Some(Contraction::Constant(_))),
                "needs a constant selector g ≡ u",
            )?;
            require(variant, p.gamma == 0.0 && p.alpha == 0.0, "needs γ = α = 0")
        }
        Variant::Splitting => require(variant, p.alpha == 0.0 && p.beta == 1.0, "needs α = μ = 0 and β = 1"),
    }
}

#[allow(clippy::too_many_arguments)]
fn variant_record(k: u64, p: StepParams, x_prev: &Point, x_curr: &Point, y: Point, u: Point, z: Point, x_next: Point) -> IterationRecord {
    IterationRecord {
        k,
        params: p,
        x_prev: x_prev.clone(),
        x_curr: x_curr.clone(),
        step_norm: x_next.distance(x_curr),
        splitting_gap: u.distance(&z),
        y,
        u,
        z,
        x_next,
        minty_residual: 0.0,
        dist_to_solution: None,
        certificate: None,
    }
}

/// Trajectory of `variant`, computed by its own straight-line update.
pub fn reduction_trajectory(
    variant: Variant,
    problem: &HepProblem,
    sched: &ScheduleSet,
    x1: &Point,
    x0: Option<&Point>,
    cfg: &RunConfig,
    stop: &StoppingRule,
) -> Result<Trajectory, SolverError> {
    if variant == Variant::Ripsa {
        return run(problem, sched, x1, x0, cfg, stop);
    }
    cfg.resolvent.validate()?;
    x1.check_dim(problem.dim())?;
    let rc = &cfg.resolvent;
    let result = drive(x1.clone(), x0.cloned(), stop, |s| {
        let k = s.k;
        let p = sched.at(k)?;
        admissible_at(variant, problem, &p)?;
        let x = &s.x_curr;
        let rec = match variant {
            Variant::ProximalPoint => {
                let next = resolvent::resolve(problem.upper(), p.r, x, rc)?;
                variant_record(k, p, &s.x_prev, x, x.clone(), next.clone(), next.clone(), next)
            }
            Variant::Mann => {
                let j = resolvent::resolve(problem.lower(), p.r, x, rc)?;
                let next = Point::from(x.vector() * p.alpha + j.vector() * (1.0 - p.alpha));
                variant_record(k, p, &s.x_prev, x, x.clone(), x.clone(), j, next)
            }
            Variant::Halpern => {
                let anchor = match problem.selector() {
                    Some(Contraction::Constant(a)) => a.clone(),
                    _ => unreachable!("checked by admissible_at"),
                };
                let u = resolvent::resolve(problem.upper(), p.r, x, rc)?;
                let t = resolvent::resolve(problem.lower(), p.r * p.lambda, &u, rc)?;
                let next = Point::from(anchor.vector() * p.mu + t.vector() * (1.0 - p.mu));
                variant_record(k, p, &s.x_prev, x, x.clone(), u, t, next)
            }
            Variant::Splitting => {
                let tau = -p.gamma;
                let w = Point::from(x.vector() + (x.vector() - s.x_prev.vector()) * tau);
                let u = resolvent::resolve(problem.upper(), p.r, &w, rc)?;
                let next = resolvent::resolve(problem.lower(), p.r * p.lambda, &u, rc)?;
                variant_record(k, p, &s.x_prev, x, w, u, next.clone(), next)
            }
            Variant::Ripsa => unreachable!(),
        };
        let mut rec = rec;
        diagnostics(problem, cfg, &mut rec)?;
        let mut next_state = s.clone();
        next_state.advance(rec.x_next.clone(), p.r);
        Ok((next_state, rec))
    });
    // surface admissibility failures directly rather than as step failures
    match result {
        Err(SolverError::StepFailed { source, .. }) if matches!(*source, SolverError::VariantMismatch { .. }) => {
            Err(*source)
        }
        other => other,
    }
}
