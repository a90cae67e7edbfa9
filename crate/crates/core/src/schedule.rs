//! Parameter sequences `(r_k, λ_k, γ_k, α_k, β_k)` with derived
//! `μ_k = 1 − α_k − β_k`, and validators for the convergence conditions of
//! the three convergence theorems.
//!
//! Closed-form families are reduced to asymptotic expansions
//! `Σ cᵢ k^{−pᵢ} (ln k)^{−qᵢ}`; series and limit verdicts read off the
//! dominant term (p-series and Bertrand-series facts). Tables only get
//! numeric verdicts.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Prefix length for numeric range checks and series heuristics.
pub const NUMERIC_HORIZON: u64 = 100_000;
/// Estimated decay exponent above which a partial-sum sequence is taken as
/// convergent by the numeric heuristic.
pub const SERIES_EXPONENT_THRESHOLD: f64 = 1.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("invalid sequence family: {0}")]
    InvalidFamily(String),
    #[error("schedule value {slot}_{k} = {value} is out of range")]
    OutOfRange { slot: &'static str, k: u64, value: f64 },
    #[error("invalid schedule set: {0}")]
    InvalidSet(String),
    #[error("unknown theorem {0:?}")]
    UnknownTheorem(String),
    #[error("no closed form for {0}")]
    NoClosedForm(String),
}

/// The closed-form shapes a sequence can take.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    Constant(f64),
    /// `a · k^{−p}`
    PowerLaw { a: f64, p: f64 },
    /// `a · k^{−p} · ln(k + 1)^{−q}`
    LogPower { a: f64, p: f64, q: f64 },
    /// `start + slope·(k − 1)`, clipped at `cap` in the direction of travel.
    LinearRamp { start: f64, slope: f64, cap: f64 },
    /// `total − a · k^{−p}`
    Complement { total: f64, a: f64, p: f64 },
    /// Explicit values for `k = 1, 2, …`; the last value is held afterwards.
    Table(Vec<f64>),
}

/// A sequence `k ↦ f(k + offset − 1)`, `k ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFamily {
    kind: FamilyKind,
    offset: u64,
}

/// Monotonicity facts about a family over `k ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monotonicity {
    pub nonincreasing: bool,
    pub nondecreasing: bool,
}

impl SequenceFamily {
    pub fn new(kind: FamilyKind, offset: u64) -> Result<Self, ScheduleError> {
        if offset < 1 {
            return Err(ScheduleError::InvalidFamily("offset must be at least 1".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let ok = match &kind {
            FamilyKind::Constant(v) => finite(&[*v]),
            FamilyKind::PowerLaw { a, p } => finite(&[*a, *p]),
            FamilyKind::LogPower { a, p, q } => finite(&[*a, *p, *q]),
            FamilyKind::LinearRamp { start, slope, cap } => finite(&[*start, *slope, *cap]),
            FamilyKind::Complement { total, a, p } => finite(&[*total, *a, *p]),
            FamilyKind::Table(v) => {
                if v.is_empty() {
                    return Err(ScheduleError::InvalidFamily("empty table".into()));
                }
                finite(v)
            }
        };
        if !ok {
            return Err(ScheduleError::InvalidFamily("parameters must be finite".into()));
        }
        if let FamilyKind::LinearRamp { start, slope, cap } = &kind {
            if (*slope > 0.0 && cap < start) || (*slope < 0.0 && cap > start) {
                return Err(ScheduleError::InvalidFamily(
                    "ramp cap lies behind the starting value".into(),
                ));
            }
        }
        Ok(Self { kind, offset })
    }

    pub fn constant(v: f64) -> Self {
        Self::new(FamilyKind::Constant(v), 1).expect("finite constant")
    }

    pub fn power_law(a: f64, p: f64) -> Result<Self, ScheduleError> {
        Self::new(FamilyKind::PowerLaw { a, p }, 1)
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// Value at index `k ≥ 1`.
    pub fn value(&self, k: u64) -> f64 {
        let j = (k.max(1) + self.offset - 1) as f64;
        match &self.kind {
            FamilyKind::Constant(v) => *v,
            FamilyKind::PowerLaw { a, p } => a * j.powf(-p),
            FamilyKind::LogPower { a, p, q } => a * j.powf(-p) * (j + 1.0).ln().powf(-q),
            FamilyKind::LinearRamp { start, slope, cap } => {
                let v = start + slope * (j - 1.0);
                if *slope >= 0.0 {
                    v.min(*cap)
                } else {
                    v.max(*cap)
                }
            }
            FamilyKind::Complement { total, a, p } => total - a * j.powf(-p),
            FamilyKind::Table(values) => {
                let idx = (j as usize - 1).min(values.len() - 1);
                values[idx]
            }
        }
    }

    pub fn is_table(&self) -> bool {
        matches!(self.kind, FamilyKind::Table(_))
    }

    pub fn is_constant(&self) -> Option<f64> {
        match &self.kind {
            FamilyKind::Constant(v) => Some(*v),
            FamilyKind::PowerLaw { a, p } if *p == 0.0 || *a == 0.0 => Some(if *a == 0.0 { 0.0 } else { *a }),
            FamilyKind::LinearRamp { start, slope, .. } if *slope == 0.0 => Some(*start),
            _ => None,
        }
    }

    /// Asymptotic expansion; `None` for tables.
    pub fn asymptotic(&self) -> Option<Asymptotic> {
        Some(match &self.kind {
            FamilyKind::Constant(v) => Asymptotic::constant(*v),
            FamilyKind::PowerLaw { a, p } => Asymptotic::term(*a, *p, 0.0),
            FamilyKind::LogPower { a, p, q } => Asymptotic::term(*a, *p, *q),
            FamilyKind::LinearRamp { start, slope, cap } => {
                let eventual = if *slope == 0.0 { *start } else { *cap };
                let mut e = Asymptotic::constant(eventual);
                // only the tail is captured
                e.exact = *slope == 0.0;
                e
            }
            FamilyKind::Complement { total, a, p } => {
                Asymptotic::constant(*total).add(&Asymptotic::term(-a, *p, 0.0))
            }
            FamilyKind::Table(_) => return None,
        })
    }

    pub fn limit(&self) -> f64 {
        match &self.kind {
            FamilyKind::Table(values) => *values.last().expect("nonempty"),
            _ => self.asymptotic().expect("closed form").limit(),
        }
    }

    /// Monotonicity from the shape of the family; `None` when undecided.
    pub fn monotonicity(&self) -> Option<Monotonicity> {
        let dec = Monotonicity {
            nonincreasing: true,
            nondecreasing: false,
        };
        let inc = Monotonicity {
            nonincreasing: false,
            nondecreasing: true,
        };
        let both = Monotonicity {
            nonincreasing: true,
            nondecreasing: true,
        };
        if self.is_constant().is_some() {
            return Some(both);
        }
        match &self.kind {
            FamilyKind::PowerLaw { a, p } => Some(if (*a > 0.0) == (*p > 0.0) { dec } else { inc }),
            FamilyKind::LogPower { a, p, q } => {
                if *p >= 0.0 && *q >= 0.0 {
                    Some(if *a >= 0.0 { dec } else { inc })
                } else if *p <= 0.0 && *q <= 0.0 {
                    Some(if *a >= 0.0 { inc } else { dec })
                } else {
                    None
                }
            }
            FamilyKind::LinearRamp { slope, .. } => Some(if *slope > 0.0 { inc } else { dec }),
            FamilyKind::Complement { a, p, .. } => {
                if *a == 0.0 || *p == 0.0 {
                    Some(both)
                } else {
                    Some(if (*a > 0.0) == (*p > 0.0) { inc } else { dec })
                }
            }
            _ => None,
        }
    }

    /// `(inf, inf_attained, sup, sup_attained)` over `k ≥ 1` for families
    /// with known monotonicity.
    pub fn range(&self) -> Option<(f64, bool, f64, bool)> {
        let mono = self.monotonicity()?;
        let first = self.value(1);
        let lim = self.limit();
        let eventually_constant = matches!(self.kind, FamilyKind::LinearRamp { .. }) || self.is_constant().is_some();
        if mono.nonincreasing && mono.nondecreasing {
            return Some((first, true, first, true));
        }
        if mono.nonincreasing {
            Some((lim, eventually_constant, first, true))
        } else {
            Some((first, true, lim, eventually_constant))
        }
    }
}

/// One term `c · k^{−p} · (ln k)^{−q}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub power: f64,
    pub log_power: f64,
}

impl Term {
    /// True when `self` decays no faster than `other`.
    fn dominates(&self, other: &Term) -> bool {
        self.power < other.power || (self.power == other.power && self.log_power <= other.log_power)
    }
}

/// A finite sum of terms describing a sequence for large `k`.
///
/// `exact` records whether the sum equals the sequence for every `k ≥ 1`
/// up to index shifts (each term stays positive for `k ≥ 1`), which lets
/// sign facts about the coefficients transfer to every index.
#[derive(Debug, Clone, PartialEq)]
pub struct Asymptotic {
    terms: Vec<Term>,
    exact: bool,
}

impl Asymptotic {
    pub fn zero() -> Self {
        Self {
            terms: Vec::new(),
            exact: true,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::term(c, 0.0, 0.0)
    }

    pub fn term(coeff: f64, power: f64, log_power: f64) -> Self {
        Self {
            terms: vec![Term {
                coeff,
                power,
                log_power,
            }],
            exact: true,
        }
        .normalized()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    fn normalized(mut self) -> Self {
        let mut merged: Vec<Term> = Vec::new();
        for t in self.terms.drain(..) {
            if let Some(m) = merged
                .iter_mut()
                .find(|m| (m.power - t.power).abs() < 1e-12 && (m.log_power - t.log_power).abs() < 1e-12)
            {
                m.coeff += t.coeff;
            } else {
                merged.push(t);
            }
        }
        let scale = merged.iter().map(|t| t.coeff.abs()).fold(0.0, f64::max);
        merged.retain(|t| t.coeff != 0.0 && t.coeff.abs() > 1e-12 * scale);
        merged.sort_by(|a, b| {
            a.power
                .total_cmp(&b.power)
                .then(a.log_power.total_cmp(&b.log_power))
        });
        self.terms = merged;
        self
    }

    pub fn add(&self, other: &Asymptotic) -> Asymptotic {
        Asymptotic {
            terms: self.terms.iter().chain(other.terms.iter()).cloned().collect(),
            exact: self.exact && other.exact,
        }
        .normalized()
    }

    pub fn scale(&self, s: f64) -> Asymptotic {
        Asymptotic {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff * s,
                    ..*t
                })
                .collect(),
            exact: self.exact,
        }
        .normalized()
    }

    pub fn sub(&self, other: &Asymptotic) -> Asymptotic {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Asymptotic) -> Asymptotic {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    power: a.power + b.power,
                    log_power: a.log_power + b.log_power,
                });
            }
        }
        Asymptotic {
            terms,
            // products of expansions are only asymptotic
            exact: self.exact && other.exact && (self.terms.len() <= 1 || other.terms.len() <= 1),
        }
        .normalized()
    }

    /// Real power of a single positive term (`None` otherwise).
    pub fn powf(&self, e: f64) -> Option<Asymptotic> {
        match self.terms.as_slice() {
            [] if e > 0.0 => Some(Asymptotic::zero()),
            [t] if t.coeff > 0.0 => Some(Asymptotic {
                terms: vec![Term {
                    coeff: t.coeff.powf(e),
                    power: t.power * e,
                    log_power: t.log_power * e,
                }],
                exact: self.exact,
            }),
            _ => None,
        }
    }

    pub fn dominant(&self) -> Option<Term> {
        self.terms.iter().cloned().reduce(|a, b| if a.dominates(&b) { a } else { b })
    }

    pub fn limit(&self) -> f64 {
        match self.dominant() {
            None => 0.0,
            Some(t) => {
                if t.power > 0.0 || (t.power == 0.0 && t.log_power > 0.0) {
                    0.0
                } else if t.power == 0.0 && t.log_power == 0.0 {
                    t.coeff
                } else {
                    t.coeff.signum() * f64::INFINITY
                }
            }
        }
    }

    /// Whether `Σ_k` of the sequence converges (dominant-term test).
    pub fn series_converges(&self) -> bool {
        match self.dominant() {
            None => true,
            Some(t) => t.power > 1.0 || (t.power == 1.0 && t.log_power > 1.0),
        }
    }

    pub fn all_coefficients_nonnegative(&self) -> bool {
        self.terms.iter().all(|t| t.coeff >= 0.0)
    }
}

/// Closed-form tag for the Fitzpatrick gap `q ↦ 𝓕_F(x̄, q) − σ_{S_F}(q)`.
#[derive(Debug, Clone, PartialEq)]
pub enum GapModel {
    /// `½‖q‖²` (lower level `½ d(·, K)²`).
    HalfSquaredDistance,
    /// `σ_C(q) − σ_{Fix T}(q)`; positively homogeneous, with the value at
    /// the unit vector `p/‖p‖` given as `excess_per_unit`.
    FixedPoint { excess_per_unit: f64 },
    Zero,
    /// `coefficient · ‖q‖^exponent`
    Custom { coefficient: f64, exponent: f64 },
}

impl GapModel {
    pub fn validate(&self) -> Result<(), ScheduleError> {
        match self {
            GapModel::FixedPoint { excess_per_unit } if !(*excess_per_unit >= 0.0) || !excess_per_unit.is_finite() => {
                Err(ScheduleError::NoClosedForm(
                    "fixed-point gap needs a finite nonnegative excess (σ_C must be finite)".into(),
                ))
            }
            GapModel::Custom { coefficient, exponent }
                if !(*coefficient >= 0.0) || !coefficient.is_finite() || !(*exponent > 0.0) || !exponent.is_finite() =>
            {
                Err(ScheduleError::NoClosedForm(
                    "custom gap needs a nonnegative coefficient and a positive exponent".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// `gap(q)` for `‖q‖ = norm`.
    pub fn value(&self, norm: f64) -> f64 {
        match self {
            GapModel::HalfSquaredDistance => 0.5 * norm * norm,
            GapModel::FixedPoint { excess_per_unit } => excess_per_unit * norm,
            GapModel::Zero => 0.0,
            GapModel::Custom { coefficient, exponent } => coefficient * norm.powf(*exponent),
        }
    }

    /// Expansion of `λ_k · gap(2p/λ_k)` given the expansion of `λ_k`.
    fn scaled(&self, lambda: &Asymptotic, p_norm: f64) -> Option<Asymptotic> {
        if p_norm == 0.0 {
            return Some(Asymptotic::zero());
        }
        match self {
            GapModel::HalfSquaredDistance => Some(lambda.powf(-1.0)?.scale(2.0 * p_norm * p_norm)),
            GapModel::FixedPoint { excess_per_unit } => Some(Asymptotic::constant(2.0 * excess_per_unit * p_norm)),
            GapModel::Zero => Some(Asymptotic::zero()),
            GapModel::Custom { coefficient, exponent } => Some(
                lambda
                    .powf(1.0 - exponent)?
                    .scale(coefficient * (2.0 * p_norm).powf(*exponent)),
            ),
        }
    }
}

/// Schedule values at one index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub k: u64,
    pub r: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSet {
    pub r: SequenceFamily,
    pub lambda: SequenceFamily,
    pub gamma: SequenceFamily,
    pub alpha: SequenceFamily,
    pub beta: SequenceFamily,
    /// The constant `c ∈ (0, 2)` of the control inequality.
    pub c: f64,
    /// `b_k ∈ (γ_k, 1)`; `None` selects the midpoint `(γ_k + 1)/2`.
    pub b: Option<SequenceFamily>,
}

const RANGE_TOL: f64 = 1e-12;

impl ScheduleSet {
    pub fn new(
        r: SequenceFamily,
        lambda: SequenceFamily,
        gamma: SequenceFamily,
        alpha: SequenceFamily,
        beta: SequenceFamily,
        c: f64,
        b: Option<SequenceFamily>,
    ) -> Result<Self, ScheduleError> {
        if !(c > 0.0 && c < 2.0) {
            return Err(ScheduleError::InvalidSet(format!("c must lie in (0, 2), got {c}")));
        }
        Ok(Self {
            r,
            lambda,
            gamma,
            alpha,
            beta,
            c,
            b,
        })
    }

    pub fn mu(&self, k: u64) -> f64 {
        1.0 - self.alpha.value(k) - self.beta.value(k)
    }

    pub fn b_value(&self, k: u64) -> f64 {
        match &self.b {
            Some(b) => b.value(k),
            None => 0.5 * (self.gamma.value(k) + 1.0),
        }
    }

    /// Values at `k`, checked against the ranges every theorem needs.
    pub fn at(&self, k: u64) -> Result<StepParams, ScheduleError> {
        let p = StepParams {
            k,
            r: self.r.value(k),
            lambda: self.lambda.value(k),
            gamma: self.gamma.value(k),
            alpha: self.alpha.value(k),
            beta: self.beta.value(k),
            mu: self.mu(k),
            b: self.b_value(k),
            c: self.c,
        };
        let check = |slot: &'static str, value: f64, ok: bool| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(ScheduleError::OutOfRange { slot, k, value })
            }
        };
        check("r", p.r, p.r > 0.0)?;
        check("lambda", p.lambda, p.lambda > 0.0)?;
        check("gamma", p.gamma, (0.0..=1.0).contains(&p.gamma))?;
        check("alpha", p.alpha, (-RANGE_TOL..=1.0 + RANGE_TOL).contains(&p.alpha))?;
        check("beta", p.beta, p.beta > 0.0 && p.beta <= 1.0 + RANGE_TOL)?;
        check("mu", p.mu, p.mu >= -RANGE_TOL)?;
        Ok(p)
    }

    fn mu_asymptotic(&self) -> Option<Asymptotic> {
        Some(
            Asymptotic::constant(1.0)
                .sub(&self.alpha.asymptotic()?)
                .sub(&self.beta.asymptotic()?),
        )
    }

    /// `ω_k = λ_k · gap(2p/λ_k) + (2/c) r_k ‖p‖²`.
    pub fn omega(&self, gap: &GapModel, p_norm: f64, k: u64) -> Result<f64, ScheduleError> {
        gap.validate()?;
        if k < 1 {
            return Err(ScheduleError::InvalidSet("indices start at 1".into()));
        }
        Ok(omega_value(self, gap, p_norm, k))
    }

    /// Partial sums `S_1, …, S_K` of `λ_k r_k · gap(2p/λ_k)`.
    pub fn h4_partial_sums(&self, gap: &GapModel, p_norm: f64, big_k: u64) -> Result<Vec<f64>, ScheduleError> {
        gap.validate()?;
        if big_k < 1 {
            return Err(ScheduleError::InvalidSet("K must be at least 1".into()));
        }
        let mut sums = Vec::with_capacity(big_k as usize);
        let mut acc = 0.0;
        for k in 1..=big_k {
            acc += h4_summand(self, gap, p_norm, k);
            sums.push(acc);
        }
        Ok(sums)
    }
}

fn h4_summand(s: &ScheduleSet, gap: &GapModel, p_norm: f64, k: u64) -> f64 {
    let lambda = s.lambda.value(k);
    s.r.value(k) * lambda * gap.value(2.0 * p_norm / lambda)
}

fn omega_value(s: &ScheduleSet, gap: &GapModel, p_norm: f64, k: u64) -> f64 {
    let lambda = s.lambda.value(k);
    lambda * gap.value(2.0 * p_norm / lambda) + 2.0 / s.c * s.r.value(k) * p_norm * p_norm
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    Thm1,
    Thm2,
    Thm3,
}

impl FromStr for Theorem {
    type Err = ScheduleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "thm1" | "1" | "theorem1" => Ok(Theorem::Thm1),
            "thm2" | "2" | "theorem2" => Ok(Theorem::Thm2),
            "thm3" | "3" | "theorem3" => Ok(Theorem::Thm3),
            _ => Err(ScheduleError::UnknownTheorem(s.to_string())),
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::Thm1 => "Thm1",
            Theorem::Thm2 => "Thm2",
            Theorem::Thm3 => "Thm3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// Established by the symbolic rules.
    Proven,
    /// Supported by a finite-prefix heuristic only.
    NumericPass,
    Fail,
    /// The clause as printed conflicts with the other clauses; not enforced.
    Inconsistent,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Proven => "Proven",
            Verdict::NumericPass => "NumericPass",
            Verdict::Fail => "Fail",
            Verdict::Inconsistent => "Inconsistent",
        })
    }
}

/// Outcome of the numeric series heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEstimate {
    pub partial_sum: f64,
    /// Decay exponent `s` estimated from two dyadic blocks, `a_k ≈ k^{−s}`.
    pub exponent: f64,
    pub converges: bool,
}

/// Numeric series heuristic: compares the block sums over `(K, 2K]` and
/// `(2K, 4K]`. For `a_k ≈ k^{−s}` their ratio is `2^{1−s}`, so
/// `s = 1 − log₂(ratio)`; the series is declared convergent when
/// `s > SERIES_EXPONENT_THRESHOLD`. A finite prefix can never settle the
/// question, which is why callers label the result as heuristic.
pub fn series_heuristic<F: Fn(u64) -> f64>(term: F, big_k: u64) -> SeriesEstimate {
    let mut head = 0.0;
    for k in 1..=big_k {
        head += term(k);
    }
    let block = |from: u64, to: u64| (from + 1..=to).map(&term).sum::<f64>();
    let b1 = block(big_k, 2 * big_k);
    let b2 = block(2 * big_k, 4 * big_k);
    let partial_sum = head + b1 + b2;
    if b1.abs() <= 1e-300 || b1.abs() <= 1e-15 * (1.0 + head.abs()) {
        return SeriesEstimate {
            partial_sum,
            exponent: f64::INFINITY,
            converges: true,
        };
    }
    let ratio = b2 / b1;
    let exponent = if ratio > 0.0 { 1.0 - ratio.log2() } else { f64::INFINITY };
    SeriesEstimate {
        partial_sum,
        exponent,
        converges: exponent > SERIES_EXPONENT_THRESHOLD,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub clause: String,
    pub verdict: Verdict,
    /// Clauses with `required = false` are reported but do not affect the
    /// overall outcome.
    pub required: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub theorem: Theorem,
    pub clauses: Vec<Clause>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Inconsistent,
}

impl ConditionReport {
    pub fn outcome(&self) -> Outcome {
        let required = self.clauses.iter().filter(|c| c.required);
        let verdicts: Vec<Verdict> = required.map(|c| c.verdict).collect();
        if verdicts.contains(&Verdict::Fail) {
            Outcome::Fail
        } else if self.clauses.iter().any(|c| c.verdict == Verdict::Inconsistent) {
            Outcome::Inconsistent
        } else {
            Outcome::Pass
        }
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.clause == name)
    }
}

struct Builder {
    clauses: Vec<Clause>,
}

impl Builder {
    fn push(&mut self, clause: &str, verdict: Verdict, required: bool, note: impl Into<String>) {
        self.clauses.push(Clause {
            clause: clause.to_string(),
            verdict,
            required,
            note: note.into(),
        });
    }
}

fn proven_or_fail(ok: bool) -> Verdict {
    if ok {
        Verdict::Proven
    } else {
        Verdict::Fail
    }
}

fn numeric_or_fail(ok: bool) -> Verdict {
    if ok {
        Verdict::NumericPass
    } else {
        Verdict::Fail
    }
}

/// Series clause: symbolic verdict when available, always cross-checked
/// by the numeric heuristic.
fn series_clause<F: Fn(u64) -> f64>(
    b: &mut Builder,
    clause: &str,
    want_convergent: bool,
    symbolic: Option<&Asymptotic>,
    term: F,
) {
    let est = series_heuristic(term, NUMERIC_HORIZON);
    let numeric_note = format!(
        "numeric: S = {:.6e} at K = {}, decay exponent ≈ {:.3} ({})",
        est.partial_sum,
        4 * NUMERIC_HORIZON,
        est.exponent,
        if est.converges { "convergent" } else { "divergent" }
    );
    match symbolic {
        Some(expr) => {
            let converges = expr.series_converges();
            let agree = if converges == est.converges { "agrees" } else { "DISAGREES" };
            let dominant = match expr.dominant() {
                Some(t) => format!("dominant term {:.4e}·k^(-{})·(ln k)^(-{})", t.coeff, t.power, t.log_power),
                None => "identically zero".into(),
            };
            b.push(
                clause,
                proven_or_fail(converges == want_convergent),
                true,
                format!("{dominant}; {numeric_note}; heuristic {agree}"),
            );
        }
        None => b.push(clause, numeric_or_fail(est.converges == want_convergent), true, numeric_note),
    }
}

/// Limit clause: `pred(limit)` with the limit from the expansion, or from
/// the sequence at the numeric horizon for tables.
fn limit_clause<F: Fn(u64) -> f64>(
    b: &mut Builder,
    clause: &str,
    required: bool,
    symbolic: Option<&Asymptotic>,
    term: F,
    pred: impl Fn(f64) -> bool,
) {
    match symbolic {
        Some(expr) => {
            let lim = expr.limit();
            b.push(clause, proven_or_fail(pred(lim)), required, format!("limit = {lim}"));
        }
        None => {
            let v = term(4 * NUMERIC_HORIZON);
            b.push(
                clause,
                numeric_or_fail(pred(v)),
                required,
                format!("value at k = {} is {v}", 4 * NUMERIC_HORIZON),
            );
        }
    }
}

fn monotone_clause(b: &mut Builder, clause: &str, fam: &SequenceFamily, want_nonincreasing: bool) {
    match fam.monotonicity() {
        Some(m) => {
            let ok = if want_nonincreasing { m.nonincreasing } else { m.nondecreasing };
            b.push(clause, proven_or_fail(ok), true, "from the family shape");
        }
        None => {
            let ok = (1..NUMERIC_HORIZON).all(|k| {
                let (a, c) = (fam.value(k), fam.value(k + 1));
                if want_nonincreasing {
                    c <= a
                } else {
                    c >= a
                }
            });
            b.push(clause, numeric_or_fail(ok), true, format!("checked for k ≤ {NUMERIC_HORIZON}"));
        }
    }
}

/// Family range check `lo ⋚ f(k) ⋚ hi` for every `k ≥ 1`.
fn family_in_range(fam: &SequenceFamily, lo: f64, lo_open: bool, hi: f64, hi_open: bool) -> (bool, bool) {
    let inside = |v: f64| {
        (if lo_open { v > lo } else { v >= lo - RANGE_TOL }) && (if hi_open { v < hi } else { v <= hi + RANGE_TOL })
    };
    if let Some((inf, inf_att, sup, sup_att)) = fam.range() {
        let lower_ok = if lo_open {
            inf > lo || (inf == lo && !inf_att)
        } else {
            inf >= lo - RANGE_TOL
        };
        let upper_ok = if hi_open {
            sup < hi || (sup == hi && !sup_att)
        } else {
            sup <= hi + RANGE_TOL
        };
        (lower_ok && upper_ok, true)
    } else {
        ((1..=NUMERIC_HORIZON).all(|k| inside(fam.value(k))), false)
    }
}

fn range_clause(b: &mut Builder, s: &ScheduleSet) {
    let mut symbolic = true;
    let mut failures = Vec::new();
    let mut check = |name: &str, fam: &SequenceFamily, lo: f64, lo_open: bool, hi: f64, hi_open: bool| {
        let (ok, sym) = family_in_range(fam, lo, lo_open, hi, hi_open);
        symbolic &= sym;
        if !ok {
            failures.push(name.to_string());
        }
    };
    check("r_k > 0", &s.r, 0.0, true, f64::INFINITY, false);
    check("λ_k > 0", &s.lambda, 0.0, true, f64::INFINITY, false);
    check("γ_k ∈ [0, 1]", &s.gamma, 0.0, false, 1.0, false);
    check("α_k ∈ [0, 1]", &s.alpha, 0.0, false, 1.0, false);
    check("β_k ∈ (0, 1]", &s.beta, 0.0, true, 1.0, false);
    // μ_k = 1 − α_k − β_k ≥ 0
    let mu_symbolic = match (s.alpha.is_constant(), s.beta.is_constant()) {
        (Some(a), Some(bb)) => Some(1.0 - a - bb >= -RANGE_TOL),
        _ => s
            .mu_asymptotic()
            .filter(|m| m.is_exact() && m.all_coefficients_nonnegative())
            .map(|_| true),
    };
    match mu_symbolic {
        Some(true) => {}
        Some(false) => failures.push("α_k + β_k ≤ 1".into()),
        None => {
            symbolic = false;
            if !(1..=NUMERIC_HORIZON).all(|k| s.mu(k) >= -RANGE_TOL) {
                failures.push("α_k + β_k ≤ 1".into());
            }
        }
    }
    let verdict = if !failures.is_empty() {
        Verdict::Fail
    } else if symbolic {
        Verdict::Proven
    } else {
        Verdict::NumericPass
    };
    let note = if failures.is_empty() {
        "all slots within range".to_string()
    } else {
        format!("violated: {}", failures.join(", "))
    };
    b.push("r_k > 0, λ_k > 0, γ_k ∈ [0, 1], α_k, β_k ∈ [0, 1], α_k + β_k + μ_k = 1, μ_k ≥ 0", verdict, true, note);
}

fn b_clause(b: &mut Builder, s: &ScheduleSet) {
    match &s.b {
        None => {
            // midpoint choice: γ < (γ + 1)/2 < 1 iff γ < 1
            let (ok, sym) = family_in_range(&s.gamma, f64::NEG_INFINITY, false, 1.0, true);
            let v = if sym { proven_or_fail(ok) } else { numeric_or_fail(ok) };
            b.push("γ_k < b_k < 1", v, true, "b_k = (γ_k + 1)/2");
        }
        Some(fam) => {
            let both_constant = fam.is_constant().is_some() && s.gamma.is_constant().is_some();
            let ok = (1..=NUMERIC_HORIZON).all(|k| {
                let (g, bk) = (s.gamma.value(k), fam.value(k));
                g < bk && bk < 1.0
            }) && fam.limit() < 1.0
                && s.gamma.limit() < fam.limit();
            let v = if both_constant { proven_or_fail(ok) } else { numeric_or_fail(ok) };
            b.push("γ_k < b_k < 1", v, true, "explicit b_k");
        }
    }
}

fn ripsa_basic_clause(b: &mut Builder, s: &ScheduleSet) {
    let ok = s.alpha.is_constant() == Some(0.0) && s.beta.is_constant() == Some(1.0);
    b.push(
        "α_k = 1 − β_k = 0",
        proven_or_fail(ok),
        true,
        if ok { "α ≡ 0, β ≡ 1" } else { "α and β must be the constants 0 and 1" },
    );
}

/// Checks `s` against the hypotheses of `theorem` for a problem whose gap
/// follows `gap` with multiplier norm `p_norm`.
pub fn validate(s: &ScheduleSet, theorem: Theorem, gap: &GapModel, p_norm: f64) -> Result<ConditionReport, ScheduleError> {
    gap.validate()?;
    if !(p_norm >= 0.0) || !p_norm.is_finite() {
        return Err(ScheduleError::InvalidSet(format!("‖p‖ must be finite and nonnegative, got {p_norm}")));
    }
    let mut b = Builder { clauses: Vec::new() };
    let mut notes = Vec::new();

    let r = s.r.asymptotic();
    let lambda = s.lambda.asymptotic();
    let r2 = r.as_ref().map(|e| e.mul(e));
    let lam_gap = lambda.as_ref().and_then(|l| gap.scaled(l, p_norm));
    let h4 = match (&r, &lam_gap) {
        (Some(r), Some(g)) => Some(r.mul(g)),
        _ => None,
    };
    let omega = match (&r, &lam_gap) {
        (Some(r), Some(g)) => Some(g.add(&r.scale(2.0 / s.c * p_norm * p_norm))),
        _ => None,
    };
    let h4_term = |k: u64| h4_summand(s, gap, p_norm, k);

    b.push("0 < c < 2", proven_or_fail(s.c > 0.0 && s.c < 2.0), true, format!("c = {}", s.c));
    range_clause(&mut b, s);

    match theorem {
        Theorem::Thm1 => {
            series_clause(&mut b, "∑ r_k = ∞", false, r.as_ref(), |k| s.r.value(k));
            series_clause(&mut b, "∑ r_k² < ∞", true, r2.as_ref(), |k| s.r.value(k).powi(2));
            monotone_clause(&mut b, "{r_k} is nonincreasing", &s.r, true);
            monotone_clause(&mut b, "{γ_k} is nondecreasing", &s.gamma, false);
            b_clause(&mut b, s);
            ripsa_basic_clause(&mut b, s);
            series_clause(&mut b, "(H4) ∑ λ_k r_k [𝓕_F − σ_{S_F}](2p/λ_k) < ∞", true, h4.as_ref(), h4_term);
            let lr = match (&lambda, &r) {
                (Some(l), Some(r)) => Some(l.mul(r)),
                _ => None,
            };
            limit_clause(
                &mut b,
                "liminf λ_k r_k > 0",
                false,
                lr.as_ref(),
                |k| s.lambda.value(k) * s.r.value(k),
                |v| v > 0.0,
            );
            notes.push("liminf λ_k r_k > 0 upgrades ergodic convergence to convergence of the whole sequence".into());
        }
        Theorem::Thm2 => {
            let (ok, sym) = family_in_range(&s.gamma, 0.0, false, 0.5, false);
            b.push("γ_k ∈ [0, 1/2]", if sym { proven_or_fail(ok) } else { numeric_or_fail(ok) }, true, "");
            series_clause(&mut b, "∑ r_k = ∞", false, r.as_ref(), |k| s.r.value(k));
            series_clause(&mut b, "∑ r_k² < ∞", true, r2.as_ref(), |k| s.r.value(k).powi(2));
            b_clause(&mut b, s);
            ripsa_basic_clause(&mut b, s);
            limit_clause(
                &mut b,
                "limsup λ_k [𝓕_F − σ_{S_F}](2p/λ_k) ≤ 0",
                true,
                lam_gap.as_ref(),
                |k| {
                    let l = s.lambda.value(k);
                    l * gap.value(2.0 * p_norm / l)
                },
                |v| v <= 0.0,
            );
            limit_clause(&mut b, "(H5) limsup λ_k r_k [𝓕_F − σ_{S_F}](2p/λ_k) ≤ 0", true, h4.as_ref(), h4_term, |v| {
                v <= 0.0
            });
        }
        Theorem::Thm3 => {
            let alpha = s.alpha.asymptotic();
            let beta = s.beta.asymptotic();
            let mu = s.mu_asymptotic();
            limit_clause(&mut b, "lim α_k < 1", true, alpha.as_ref(), |k| s.alpha.value(k), |v| v < 1.0);
            // printed clause, incompatible with lim α_k < 1 and lim μ_k = 0
            let beta_lim = match &beta {
                Some(e) => e.limit(),
                None => s.beta.value(4 * NUMERIC_HORIZON),
            };
            if beta_lim == 0.0 {
                b.push("lim β_k = 0", Verdict::Proven, true, "limit = 0");
            } else {
                b.push(
                    "lim β_k = 0",
                    Verdict::Inconsistent,
                    false,
                    format!(
                        "limit = {beta_lim}; with α_k + β_k + μ_k = 1 and lim μ_k = 0 this clause forces α_k → 1, \
                         contradicting lim α_k < 1, so it is reported and not enforced"
                    ),
                );
            }
            let lam_for_limit = lambda.clone();
            limit_clause(&mut b, "lim λ_k = +∞", true, lam_for_limit.as_ref(), |k| s.lambda.value(k), |v| {
                v == f64::INFINITY || v > 1e12
            });
            limit_clause(&mut b, "lim μ_k = 0", true, mu.as_ref(), |k| s.mu(k), |v| v.abs() <= 1e-12);
            let ratio = match (&beta, &mu, &omega) {
                (Some(bb), Some(m), Some(w)) => {
                    if w.terms().is_empty() {
                        Some(Asymptotic::zero())
                    } else {
                        m.powf(-1.0).map(|inv| bb.mul(&inv).mul(w))
                    }
                }
                _ => None,
            };
            limit_clause(
                &mut b,
                "lim (β_k/μ_k) ω_k = 0",
                true,
                ratio.as_ref(),
                |k| {
                    let w = omega_value(s, gap, p_norm, k);
                    if w == 0.0 {
                        0.0
                    } else {
                        s.beta.value(k) / s.mu(k) * w
                    }
                },
                |v| v.abs() <= 1e-12,
            );
            match (s.r.range(), &r) {
                (Some((inf, _, sup, _)), Some(_)) => {
                    let ok = inf > 0.0 && sup < 1.0;
                    b.push(
                        "0 < liminf r_k ≤ limsup r_k < 1",
                        proven_or_fail(ok),
                        true,
                        format!("r_k ranges over [{inf}, {sup}]; printed as lim r_k > 0, the proof also needs lim r_k < 1"),
                    );
                }
                _ => {
                    let v = s.r.value(4 * NUMERIC_HORIZON);
                    b.push("0 < liminf r_k ≤ limsup r_k < 1", numeric_or_fail(v > 0.0 && v < 1.0), true, "");
                }
            }
            let bw = match (&beta, &omega) {
                (Some(bb), Some(w)) => Some(bb.mul(w)),
                _ => None,
            };
            series_clause(&mut b, "∑ β_k ω_k < ∞", true, bw.as_ref(), |k| {
                s.beta.value(k) * omega_value(s, gap, p_norm, k)
            });
            series_clause(&mut b, "∑ μ_k = ∞", false, mu.as_ref(), |k| s.mu(k));
            b_clause(&mut b, s);
            series_clause(&mut b, "(H4) ∑ λ_k r_k [𝓕_F − σ_{S_F}](2p/λ_k) < ∞", true, h4.as_ref(), h4_term);
        }
    }
    Ok(ConditionReport {
        theorem,
        clauses: b.clauses,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(kind: FamilyKind) -> SequenceFamily {
        SequenceFamily::new(kind, 1).unwrap()
    }

    fn thm1_schedule(r: SequenceFamily) -> ScheduleSet {
        ScheduleSet::new(
            r,
            fam(FamilyKind::PowerLaw { a: 1.0, p: -2.0 }),
            SequenceFamily::constant(0.1),
            SequenceFamily::constant(0.0),
            SequenceFamily::constant(1.0),
            1.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn family_values() {
        let f = SequenceFamily::new(FamilyKind::PowerLaw { a: 2.0, p: 1.0 }, 3).unwrap();
        assert_eq!(f.value(1), 2.0 / 3.0);
        let ramp = fam(FamilyKind::LinearRamp {
            start: 0.0,
            slope: 0.1,
            cap: 0.25,
        });
        assert_eq!(ramp.value(2), 0.1);
        assert_eq!(ramp.value(10), 0.25);
        let table = fam(FamilyKind::Table(vec![1.0, 2.0]));
        assert_eq!(table.value(5), 2.0);
        assert!(SequenceFamily::new(FamilyKind::Constant(1.0), 0).is_err());
    }

    #[test]
    fn expansion_facts() {
        assert!(!Asymptotic::term(1.0, 1.0, 0.0).series_converges());
        assert!(Asymptotic::term(1.0, 1.0, 1.5).series_converges());
        assert!(Asymptotic::term(1.0, 2.0, 0.0).series_converges());
        let mu = Asymptotic::constant(1.0)
            .sub(&Asymptotic::constant(0.5))
            .sub(&Asymptotic::constant(0.5).add(&Asymptotic::term(-1.0, 0.5, 0.0)));
        assert_eq!(mu.terms(), &[Term { coeff: 1.0, power: 0.5, log_power: 0.0 }]);
        assert_eq!(Asymptotic::term(3.0, -2.0, 0.0).limit(), f64::INFINITY);
    }

    #[test]
    fn harmonic_schedule_passes_thm1() {
        let s = thm1_schedule(fam(FamilyKind::PowerLaw { a: 1.0, p: 1.0 }));
        let rep = validate(&s, Theorem::Thm1, &GapModel::HalfSquaredDistance, 1.0).unwrap();
        assert_eq!(rep.outcome(), Outcome::Pass);
        for c in &rep.clauses {
            assert_eq!(c.verdict, Verdict::Proven, "{}: {}", c.clause, c.note);
        }
    }

    #[test]
    fn summable_steps_fail_thm1() {
        let s = thm1_schedule(fam(FamilyKind::PowerLaw { a: 1.0, p: 2.0 }));
        let rep = validate(&s, Theorem::Thm1, &GapModel::HalfSquaredDistance, 1.0).unwrap();
        assert_eq!(rep.outcome(), Outcome::Fail);
        assert_eq!(rep.clause("∑ r_k = ∞").unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn thm3_printed_clause_is_inconsistent() {
        let s = ScheduleSet::new(
            SequenceFamily::constant(0.5),
            fam(FamilyKind::PowerLaw { a: 1.0, p: -1.0 }),
            SequenceFamily::constant(0.2),
            SequenceFamily::constant(0.5),
            SequenceFamily::new(
                FamilyKind::Complement {
                    total: 0.5,
                    a: 1.0,
                    p: 0.5,
                },
                5,
            )
            .unwrap(),
            1.0,
            None,
        )
        .unwrap();
        let rep = validate(&s, Theorem::Thm3, &GapModel::HalfSquaredDistance, 0.0).unwrap();
        assert_eq!(rep.clause("lim β_k = 0").unwrap().verdict, Verdict::Inconsistent);
        assert_eq!(rep.clause("∑ μ_k = ∞").unwrap().verdict, Verdict::Proven);
        assert_eq!(rep.clause("lim μ_k = 0").unwrap().verdict, Verdict::Proven);
        assert_eq!(rep.clause("lim α_k < 1").unwrap().verdict, Verdict::Proven);
        assert_eq!(rep.outcome(), Outcome::Inconsistent);
    }

    #[test]
    fn thm2_rejects_large_inertia() {
        let mut s = thm1_schedule(fam(FamilyKind::PowerLaw { a: 1.0, p: 0.9 }));
        s.gamma = SequenceFamily::constant(0.6);
        let rep = validate(&s, Theorem::Thm2, &GapModel::HalfSquaredDistance, 1.0).unwrap();
        assert_eq!(rep.clause("γ_k ∈ [0, 1/2]").unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn table_families_only_get_numeric_verdicts() {
        let s = thm1_schedule(fam(FamilyKind::Table(vec![1.0, 0.5, 0.25])));
        let rep = validate(&s, Theorem::Thm1, &GapModel::HalfSquaredDistance, 1.0).unwrap();
        let c = rep.clause("∑ r_k = ∞").unwrap();
        assert_eq!(c.verdict, Verdict::NumericPass);
        assert_eq!(rep.clause("∑ r_k² < ∞").unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn omega_examples() {
        let s = ScheduleSet::new(
            fam(FamilyKind::PowerLaw { a: 1.0, p: 1.0 }),
            fam(FamilyKind::PowerLaw { a: 1.0, p: -1.0 }),
            SequenceFamily::constant(0.0),
            SequenceFamily::constant(0.0),
            SequenceFamily::constant(1.0),
            1.0,
            None,
        )
        .unwrap();
        for k in [1, 2, 7, 100] {
            let w = s.omega(&GapModel::HalfSquaredDistance, 1.0, k).unwrap();
            assert!((w - 4.0 / k as f64).abs() < 1e-14);
            assert_eq!(s.omega(&GapModel::HalfSquaredDistance, 0.0, k).unwrap(), 0.0);
        }
        let mut doubled = s.clone();
        doubled.c = 0.5;
        let w = doubled.omega(&GapModel::HalfSquaredDistance, 1.0, 4).unwrap();
        assert!((w - (2.0 / 4.0 + 4.0 / 4.0)).abs() < 1e-14);
    }

    #[test]
    fn c_out_of_range_rejected() {
        let r = SequenceFamily::constant(1.0);
        assert!(ScheduleSet::new(r.clone(), r.clone(), r.clone(), r.clone(), r, 2.0, None).is_err());
    }

    #[test]
    fn heuristic_on_p_series() {
        assert!(series_heuristic(|k| (k as f64).powf(-1.1), 100_000).converges);
        assert!(!series_heuristic(|k| (k as f64).powf(-1.0), 100_000).converges);
        assert!(!series_heuristic(|k| (k as f64).powf(-0.5), 100_000).converges);
        assert!(series_heuristic(|_| 0.0, 10).converges);
    }

    #[test]
    fn out_of_range_values_are_reported() {
        let mut s = thm1_schedule(SequenceFamily::constant(1.0));
        s.beta = SequenceFamily::constant(1.5);
        assert!(matches!(s.at(1), Err(ScheduleError::OutOfRange { slot: "beta", .. })));
    }
}
