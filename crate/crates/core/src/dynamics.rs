//! Verification engines built on the action representation.
//!
//! Everything symbolic (conjugate averages, translates, traces) is computed
//! exactly in `ℂG` before any numerics, so identities such as preservation of
//! the identity coefficient hold bit for bit. Norms enter only through
//! [`norm_lower_bound`], and a row is falsified only when an explicit unit
//! vector beats the claimed bound by more than the slack.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::groups::{GroupElement, Order, Presentation};
use crate::operators::{norm_lower_bound, FormalOperator, NormBudget, NormEstimate};
use crate::spaces::{ActionSpace, CayleySpace};
use crate::verdict::Verdict;

/// The constant obtained from the ping-pong argument: `‖T_a‖ ≤ 2‖a‖₂`.
pub const DEFAULT_CONSTANT: f64 = 2.0;
pub const DEFAULT_SLACK: f64 = 1e-9;
/// Default minimal linear displacement rate for loxodromy probes.
pub const DEFAULT_MIN_RATE: f64 = 0.5;
/// Collisions kept verbatim in a disjointness report; the rest are counted.
const MAX_LISTED_COLLISIONS: usize = 64;

/// A finitely supported sequence `a: ℤ⁺ → ℂ`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoefficientSequence {
    entries: BTreeMap<usize, Complex64>,
}

impl CoefficientSequence {
    pub fn new<I: IntoIterator<Item = (usize, Complex64)>>(entries: I) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (j, a) in entries {
            if j == 0 {
                return Err(Error::Precondition("sequence indices start at 1".into()));
            }
            *out.entry(j).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        out.retain(|_, a| *a != Complex64::new(0.0, 0.0));
        Ok(Self { entries: out })
    }

    /// `a_j = 1/J` for `1 ≤ j ≤ J`, so `‖a‖₂ = 1/√J`.
    pub fn uniform(len: usize) -> Self {
        let weight = Complex64::new(1.0 / len as f64, 0.0);
        Self { entries: (1..=len).map(|j| (j, weight)).collect() }
    }

    /// `a_{1+km} = 1/√N` for `0 ≤ k < N`, a unit vector concentrated on one
    /// residue class mod `m`.
    pub fn periodic(period: usize, count: usize) -> Self {
        let weight = Complex64::new(1.0 / (count as f64).sqrt(), 0.0);
        Self { entries: (0..count).map(|k| (1 + k * period, weight)).collect() }
    }

    pub fn get(&self, j: usize) -> Complex64 {
        self.entries.get(&j).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.entries.iter().map(|(j, a)| (*j, *a))
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `T_a = Σ_j a_j (g⁻ʲ h gʲ)`. Coinciding conjugates have their coefficients
/// added.
pub fn build_ta(
    p: &Presentation,
    h: &GroupElement,
    g: &GroupElement,
    a: &CoefficientSequence,
) -> Result<FormalOperator> {
    let Some(max_j) = a.entries.keys().next_back().copied() else {
        p.validate(h)?;
        if h.is_identity() {
            return Err(Error::Degenerate("h must be nontrivial".into()));
        }
        return Ok(FormalOperator::zero());
    };
    let conjugates = p.conjugate_sequence(g, h, max_j)?;
    Ok(FormalOperator::from_terms(a.iter().map(|(j, aj)| (conjugates[j - 1].clone(), aj))))
}

/// `M_J(T) = (1/J) Σ_{j=1..J} π(g⁻ʲ) T π(gʲ)`, symbol by symbol. The
/// identity coefficient is carried over unchanged.
pub fn average_mj(p: &Presentation, t: &FormalOperator, g: &GroupElement, count: usize) -> Result<FormalOperator> {
    if count == 0 {
        return Err(Error::Precondition("J must be at least 1".into()));
    }
    p.validate(g)?;
    t.validate(p)?;
    let g_inv = p.invert(g);
    let scale = count as f64;
    let mut terms = Vec::with_capacity(t.len() * count + 1);
    let identity = t.identity_coefficient();
    if identity != Complex64::new(0.0, 0.0) {
        terms.push((GroupElement::identity(), identity));
    }
    let mut current: Vec<(GroupElement, Complex64)> =
        t.iter().filter(|(s, _)| !s.is_identity()).map(|(s, a)| (s.clone(), *a)).collect();
    for _ in 0..count {
        for (s, a) in current.iter_mut() {
            *s = p.mul(&p.mul(&g_inv, s), g);
            terms.push((s.clone(), *a / scale));
        }
    }
    Ok(FormalOperator::from_terms(terms))
}

fn judge<P: std::hash::Hash + Eq>(estimate: &NormEstimate<P>, bound: f64, slack: f64) -> Verdict {
    if estimate.lower_bound > bound + slack {
        Verdict::Falsified
    } else if estimate.converged {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Clone, Debug)]
pub struct PAnalyticRow<P: std::hash::Hash + Eq> {
    pub j: usize,
    pub operator: FormalOperator,
    pub estimate: NormEstimate<P>,
    /// `C/√J`, i.e. `C‖a‖₂` for uniform weights.
    pub bound: f64,
    pub falsified: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct PAnalyticReport<P: std::hash::Hash + Eq> {
    pub h: GroupElement,
    pub g: GroupElement,
    pub constant: f64,
    pub slack: f64,
    pub rows: Vec<PAnalyticRow<P>>,
    pub verdict: Verdict,
}

/// Checks `‖Σ_{j≤J} (1/J) π(g⁻ʲhgʲ)‖ ≤ C/√J` from below for `J = 1..=j_max`.
pub fn verify_panalytic<S: ActionSpace>(
    space: &S,
    h: &GroupElement,
    g: &GroupElement,
    j_max: usize,
    constant: f64,
    slack: f64,
    budget: &NormBudget<S::Point>,
) -> Result<PAnalyticReport<S::Point>> {
    let p = space.presentation();
    p.validate(h)?;
    p.validate(g)?;
    if h.is_identity() {
        return Err(Error::Degenerate("h must be nontrivial".into()));
    }
    if j_max == 0 {
        return Err(Error::Precondition("J_max must be at least 1".into()));
    }
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::Precondition("C must be positive".into()));
    }
    let rows =
        (1..=j_max).map(|j| panalytic_row(space, h, g, j, constant, slack, budget)).collect::<Result<Vec<_>>>()?;
    let verdict = Verdict::combine(rows.iter().map(|r| r.verdict));
    Ok(PAnalyticReport { h: h.clone(), g: g.clone(), constant, slack, rows, verdict })
}

/// One row of [`verify_panalytic`]: `‖T_a‖` for uniform weights of length `j`.
pub fn panalytic_row<S: ActionSpace>(
    space: &S,
    h: &GroupElement,
    g: &GroupElement,
    j: usize,
    constant: f64,
    slack: f64,
    budget: &NormBudget<S::Point>,
) -> Result<PAnalyticRow<S::Point>> {
    if j == 0 {
        return Err(Error::Precondition("J must be at least 1".into()));
    }
    let a = CoefficientSequence::uniform(j);
    let operator = build_ta(space.presentation(), h, g, &a)?;
    let estimate = norm_lower_bound(space, &operator, budget)?;
    let bound = constant * a.l2_norm();
    let verdict = judge(&estimate, bound, slack);
    Ok(PAnalyticRow { j, operator, estimate, bound, falsified: verdict == Verdict::Falsified, verdict })
}

#[derive(Clone, Debug)]
pub struct Blowup {
    /// The collapsed operator `√N·(g⁻¹hg)`.
    pub operator: FormalOperator,
    /// Its exact norm `√N`.
    pub norm: f64,
    /// `T_a` as assembled term by term from `a_{1+km} = 1/√N`.
    pub assembled: FormalOperator,
    pub order: u32,
}

/// For `g` of finite order `m`, the unit vector `a_{1+km} = 1/√N` makes all
/// conjugates coincide, so `‖T_a‖ = √N` is unbounded in `N`.
pub fn finite_order_blowup(p: &Presentation, h: &GroupElement, g: &GroupElement, count: usize) -> Result<Blowup> {
    p.validate(g)?;
    let Order::Finite(order) = p.element_order(g) else {
        return Err(Error::Domain(format!("{} has infinite order", p.render(g))));
    };
    if count == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    let a = CoefficientSequence::periodic(order as usize, count);
    let assembled = build_ta(p, h, g, &a)?;
    let norm = (count as f64).sqrt();
    let operator = FormalOperator::term(Complex64::new(norm, 0.0), p.conjugate(h, g, 1));
    Ok(Blowup { operator, norm, assembled, order })
}

/// `σ(Σ a_h π(h)) = a_e`.
pub fn canonical_trace(t: &FormalOperator) -> Complex64 {
    t.identity_coefficient()
}

/// `σ(ST) = σ(TS)` exactly and `σ(S*S)` is real and nonnegative.
pub fn tracial_property_check(p: &Presentation, s: &FormalOperator, t: &FormalOperator) -> bool {
    let st = canonical_trace(&s.product(p, t));
    let ts = canonical_trace(&t.product(p, s));
    let positive = canonical_trace(&crate::operators::adjoint(p, s).product(p, s));
    st == ts && positive.im == 0.0 && positive.re >= 0.0
}

#[derive(Clone, Debug)]
pub struct AveragingRow<P: std::hash::Hash + Eq> {
    pub j: usize,
    /// `M_J(T) − a_e·e`.
    pub residual: FormalOperator,
    /// Coefficient of `e` in the residual; zero by construction.
    pub residual_identity: Complex64,
    pub estimate: NormEstimate<P>,
    /// `(C/√J) Σ_{h∈F} |a_h|`.
    pub bound: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct AveragingReport<P: std::hash::Hash + Eq> {
    pub identity_coefficient: Complex64,
    /// `Σ_{h∈F} |a_h|` over the non-identity support `F`.
    pub off_identity_mass: f64,
    pub rows: Vec<AveragingRow<P>>,
    pub verdict: Verdict,
}

/// For each `J`, estimates `‖M_J(T) − a_e·Id‖` from below and compares it
/// with `(C/√J) Σ_{h∈F} |a_h|`.
#[allow(clippy::too_many_arguments)]
pub fn averaging_decay_report<S: ActionSpace>(
    space: &S,
    t: &FormalOperator,
    g: &GroupElement,
    js: &[usize],
    constant: f64,
    slack: f64,
    budget: &NormBudget<S::Point>,
) -> Result<AveragingReport<S::Point>> {
    let p = space.presentation();
    let identity_coefficient = t.identity_coefficient();
    let off_identity_mass: f64 = t.iter().filter(|(h, _)| !h.is_identity()).map(|(_, a)| a.norm()).sum();
    let mut rows = Vec::with_capacity(js.len());
    for &j in js {
        let averaged = average_mj(p, t, g, j)?;
        let residual = averaged.sub(&FormalOperator::scalar(identity_coefficient));
        let residual_identity = residual.identity_coefficient();
        let estimate = norm_lower_bound(space, &residual, budget)?;
        let bound = constant / (j as f64).sqrt() * off_identity_mass;
        let mut verdict = judge(&estimate, bound, slack);
        if residual_identity != Complex64::new(0.0, 0.0) {
            verdict = Verdict::Falsified;
        }
        rows.push(AveragingRow { j, residual, residual_identity, estimate, bound, verdict });
    }
    let verdict = Verdict::combine(rows.iter().map(|r| r.verdict));
    Ok(AveragingReport { identity_coefficient, off_identity_mass, rows, verdict })
}

#[derive(Clone, Debug)]
pub struct IdealRow<P: std::hash::Hash + Eq> {
    pub j: usize,
    /// Coefficient of `e` in `M_J(T₀)`; equals `a_k` exactly.
    pub identity_coefficient: Complex64,
    /// `(C/√J) Σ_{h∈F} |a_h|` for `T₀ = a_k e + Σ_{h∈F} a_h h`.
    pub bound: f64,
    /// `|a_k|/2`.
    pub threshold: f64,
    /// `bound < threshold`, decided without rounding.
    pub certified: bool,
    pub residual: FormalOperator,
    /// Present for the `J` values selected for numerics.
    pub estimate: Option<NormEstimate<P>>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct IdealExperimentReport<P: std::hash::Hash + Eq> {
    pub t: FormalOperator,
    pub pivot: GroupElement,
    pub pivot_coefficient: Complex64,
    pub g: GroupElement,
    /// `k⁻¹·T`.
    pub translated: FormalOperator,
    pub rows: Vec<IdealRow<P>>,
    /// Least `J ≤ J_max` with `bound < |a_k|/2`.
    pub first_certified: Option<usize>,
    pub verdict: Verdict,
}

/// Replays the averaging step of the simplicity argument on a finite sum:
/// pivot on `k`, translate by `k⁻¹`, average, and find where the decay bound
/// drops under `|a_k|/2`.
///
/// The arithmetic part runs for every `J ≤ j_max`; norms are estimated only
/// for `J` in `numeric_js` (values above `j_max` are ignored).
#[allow(clippy::too_many_arguments)]
pub fn ideal_experiment<S: ActionSpace>(
    space: &S,
    t: &FormalOperator,
    k: &GroupElement,
    g: &GroupElement,
    j_max: usize,
    constant: f64,
    slack: f64,
    numeric_js: &[usize],
    budget: &NormBudget<S::Point>,
) -> Result<IdealExperimentReport<S::Point>> {
    let p = space.presentation();
    p.validate(k)?;
    t.validate(p)?;
    let pivot_coefficient = t.coefficient(k);
    if pivot_coefficient == Complex64::new(0.0, 0.0) {
        return Err(Error::Precondition(format!("coefficient of {} is zero", p.render(k))));
    }
    if j_max == 0 {
        return Err(Error::Precondition("J_max must be at least 1".into()));
    }
    let translated = t.left_translate(p, &p.invert(k));
    let mass: f64 = translated.iter().filter(|(h, _)| !h.is_identity()).map(|(_, a)| a.norm()).sum();
    let threshold = pivot_coefficient.norm() / 2.0;
    // bound < threshold  ⇔  (2·C·mass)² < |a_k|²·J
    let lhs = (2.0 * constant * mass).powi(2);
    let pivot_sqr = pivot_coefficient.norm_sqr();

    let mut rows = Vec::with_capacity(j_max);
    let mut first_certified = None;
    for j in 1..=j_max {
        let averaged = average_mj(p, &translated, g, j)?;
        let identity_coefficient = averaged.identity_coefficient();
        let residual = averaged.sub(&FormalOperator::scalar(identity_coefficient));
        let bound = constant / (j as f64).sqrt() * mass;
        let certified = lhs < pivot_sqr * j as f64;
        if certified && first_certified.is_none() {
            first_certified = Some(j);
        }
        let mut verdict = if identity_coefficient == pivot_coefficient { Verdict::Pass } else { Verdict::Falsified };
        let estimate = if numeric_js.contains(&j) {
            let estimate = norm_lower_bound(space, &residual, budget)?;
            verdict = Verdict::combine([verdict, judge(&estimate, bound, slack)]);
            Some(estimate)
        } else {
            None
        };
        rows.push(IdealRow { j, identity_coefficient, bound, threshold, certified, residual, estimate, verdict });
    }
    let mut verdict = Verdict::combine(rows.iter().map(|r| r.verdict));
    if verdict == Verdict::Pass && first_certified.is_none() {
        verdict = Verdict::Inconclusive;
    }
    Ok(IdealExperimentReport {
        t: t.clone(),
        pivot: k.clone(),
        pivot_coefficient,
        g: g.clone(),
        translated,
        rows,
        first_certified,
        verdict,
    })
}

/// The pair `(h, g)` viewed as generators of an abstract free product
/// `⟨h⟩ * ⟨g⟩`, with words evaluated back into the ambient group.
#[derive(Clone, Debug)]
pub struct FreeProductProbe {
    pub abstract_presentation: Presentation,
    images: [GroupElement; 2],
}

pub const H_FACTOR: usize = 0;
pub const G_FACTOR: usize = 1;

impl FreeProductProbe {
    pub fn new(p: &Presentation, h: &GroupElement, g: &GroupElement) -> Result<Self> {
        p.validate(h)?;
        p.validate(g)?;
        if h.is_identity() || g.is_identity() {
            return Err(Error::Degenerate("h and g must be nontrivial".into()));
        }
        let abstract_presentation =
            Presentation::new(vec![p.element_order(h), p.element_order(g)], vec!["h".into(), "g".into()])?;
        Ok(Self { abstract_presentation, images: [h.clone(), g.clone()] })
    }

    pub fn evaluate(&self, p: &Presentation, word: &GroupElement) -> GroupElement {
        word.syllables()
            .iter()
            .fold(GroupElement::identity(), |acc, s| p.mul(&acc, &p.power(&self.images[s.factor], s.exponent)))
    }

    /// Abstract words of length `≤ max_length`, identity first.
    pub fn census(&self, max_length: u64, cap: usize) -> Result<Vec<GroupElement>> {
        CayleySpace::new(self.abstract_presentation.clone())
            .with_ball_cap(cap)
            .enumerate_ball(&GroupElement::identity(), max_length)
            .map_err(|_| Error::Budget { what: "word census", limit: cap })
    }

    /// Whether the cyclic reduction of `word` still has a `g`-syllable, i.e.
    /// `word` is not conjugate into `⟨h⟩`.
    pub fn involves_g_cyclically(&self, word: &GroupElement) -> bool {
        let q = &self.abstract_presentation;
        let mut w = word.clone();
        while w.syllables().len() >= 2 && w.syllables()[0].factor == w.syllables().last().unwrap().factor {
            let first = q.reduce([(w.syllables()[0].factor, w.syllables()[0].exponent)]).unwrap();
            w = q.mul(&q.mul(&q.invert(&first), &w), &first);
        }
        w.syllables().iter().any(|s| s.factor == G_FACTOR)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Collision<P> {
    pub point: P,
    /// `(j, u)`: `gʲ·u·x_i` with `u ∈ W₀`.
    pub first: (i64, GroupElement),
    pub second: (i64, GroupElement),
    /// `v⁻¹ g^{j−k} u` as an abstract word; it fixes `x_i`.
    pub stabilizer_word: GroupElement,
}

#[derive(Clone, Debug)]
pub struct DisjointnessReport<P> {
    pub w0_words: usize,
    pub points_checked: usize,
    pub collision_count: usize,
    /// The first few collisions, in discovery order.
    pub collisions: Vec<Collision<P>>,
    pub verdict: Verdict,
}

/// Checks that the translates `W_j·x_i`, `|j| ≤ J`, are pairwise disjoint
/// over all `W₀`-words of length `≤ L`.
#[allow(clippy::too_many_arguments)]
pub fn check_wj_disjoint<S: ActionSpace>(
    space: &S,
    h: &GroupElement,
    g: &GroupElement,
    span: i64,
    max_length: u64,
    base: &S::Point,
    census_cap: usize,
) -> Result<DisjointnessReport<S::Point>> {
    if span < 1 || max_length < 1 {
        return Err(Error::Precondition("J and L must be at least 1".into()));
    }
    space.check_point(base)?;
    let p = space.presentation();
    let probe = FreeProductProbe::new(p, h, g)?;
    let q = &probe.abstract_presentation;
    let w0: Vec<(GroupElement, GroupElement)> = probe
        .census(max_length, census_cap)?
        .into_iter()
        .filter(|u| !u.first_syllable_in(G_FACTOR))
        .map(|u| {
            let image = probe.evaluate(p, &u);
            (u, image)
        })
        .collect();

    let mut owner: FxHashMap<S::Point, (i64, usize)> = FxHashMap::default();
    let mut collisions = Vec::new();
    let mut collision_count = 0;
    let mut points_checked = 0;
    for j in -span..=span {
        let gj = p.power(g, j);
        for (index, (_, image)) in w0.iter().enumerate() {
            let x = space.act(&p.mul(&gj, image), base);
            points_checked += 1;
            match owner.get(&x) {
                None => {
                    owner.insert(x, (j, index));
                }
                Some(&(k, other)) if k != j => {
                    collision_count += 1;
                    if collisions.len() < MAX_LISTED_COLLISIONS {
                        let (v, u) = (&w0[other].0, &w0[index].0);
                        let shift = q.reduce([(G_FACTOR, j - k)])?;
                        let stabilizer_word = q.mul(&q.mul(&q.invert(v), &shift), u);
                        collisions.push(Collision {
                            point: x,
                            first: (k, v.clone()),
                            second: (j, u.clone()),
                            stabilizer_word,
                        });
                    }
                }
                Some(_) => {}
            }
        }
    }
    let verdict = if collision_count == 0 { Verdict::Pass } else { Verdict::Falsified };
    Ok(DisjointnessReport { w0_words: w0.len(), points_checked, collision_count, collisions, verdict })
}

/// `d(x₀, gⁿ·x₀)` for `n = 1..=n_max`.
pub fn displacement_profile<S: ActionSpace>(space: &S, g: &GroupElement, n_max: usize) -> Result<Vec<u64>> {
    space.presentation().validate(g)?;
    let base = space.base_point();
    let mut x = base.clone();
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        x = space.act(g, &x);
        out.push(space.distance(&base, &x));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct PingPongReport<P> {
    pub words_checked: usize,
    /// Nontrivial abstract words acting trivially on the tested ball.
    pub relators: Vec<GroupElement>,
    pub injective: bool,
    pub disjointness: DisjointnessReport<P>,
    pub displacements: Vec<u64>,
    pub min_rate: f64,
    pub displacement_ok: bool,
    /// Abstract words not conjugate into `⟨h⟩` that fix a tested point.
    pub elliptic_violations: Vec<GroupElement>,
    pub ellipticity_ok: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug)]
pub struct PingPongBudget {
    pub max_length: u64,
    pub span: i64,
    pub radius: u64,
    pub min_rate: f64,
    pub census_cap: usize,
}

/// Budgeted consistency check of the ping-pong hypotheses for `(h, g)`:
/// injectivity of `⟨h⟩ * ⟨g⟩ → G` on words of length `≤ L`, disjointness of
/// the `W_j` translates, linear displacement of `g`, and that words not
/// conjugate into `⟨h⟩` fix no point of the `R`-ball.
pub fn pingpong_certificate<S: ActionSpace>(
    space: &S,
    h: &GroupElement,
    g: &GroupElement,
    budget: &PingPongBudget,
) -> Result<PingPongReport<S::Point>> {
    if budget.max_length < 1 || budget.span < 1 || !(budget.min_rate > 0.0 && budget.min_rate.is_finite()) {
        return Err(Error::Precondition("budgets must be positive".into()));
    }
    let p = space.presentation();
    let probe = FreeProductProbe::new(p, h, g)?;
    let base = space.base_point();
    let ball = space.enumerate_ball(&base, budget.radius)?;
    let words = probe.census(budget.max_length, budget.census_cap)?;

    let mut relators = Vec::new();
    let mut elliptic_violations = Vec::new();
    for word in words.iter().filter(|w| !w.is_identity()) {
        let image = probe.evaluate(p, word);
        let moves_something = space.act(&image, &base) != base || ball.iter().any(|x| space.act(&image, x) != *x);
        if !moves_something {
            relators.push(word.clone());
        }
        if probe.involves_g_cyclically(word) && ball.iter().any(|x| space.act(&image, x) == *x) {
            elliptic_violations.push(word.clone());
        }
    }

    let disjointness = check_wj_disjoint(space, h, g, budget.span, budget.max_length, &base, budget.census_cap)?;
    let displacements = displacement_profile(space, g, budget.span as usize)?;
    let displacement_ok = displacements.iter().enumerate().all(|(i, &d)| d as f64 >= budget.min_rate * (i + 1) as f64);
    let min_rate =
        displacements.iter().enumerate().map(|(i, &d)| d as f64 / (i + 1) as f64).fold(f64::INFINITY, f64::min);

    let injective = relators.is_empty();
    let ellipticity_ok = elliptic_violations.is_empty();
    let verdict = if injective && ellipticity_ok && displacement_ok && disjointness.verdict == Verdict::Pass {
        Verdict::Pass
    } else {
        Verdict::Falsified
    };
    Ok(PingPongReport {
        words_checked: words.len() - 1,
        relators,
        injective,
        disjointness,
        displacements,
        min_rate,
        displacement_ok,
        elliptic_violations,
        ellipticity_ok,
        verdict,
    })
}

#[derive(Clone, Debug)]
pub struct LoxodromicReport {
    pub product: GroupElement,
    pub displacements: Vec<u64>,
    /// `d(x₀, wⁿ·x₀)/n` at `n = n_max`.
    pub rate: f64,
    pub verdict: Verdict,
}

/// Linear-growth probe for `w = g₁ˡ g₂ᵏ`.
pub fn loxodromic_probe<S: ActionSpace>(
    space: &S,
    g1: &GroupElement,
    g2: &GroupElement,
    l: i64,
    k: i64,
    n_max: usize,
    min_rate: f64,
) -> Result<LoxodromicReport> {
    if l < 1 || k < 1 || n_max == 0 {
        return Err(Error::Precondition("l, k and n_max must be at least 1".into()));
    }
    let p = space.presentation();
    p.validate(g1)?;
    p.validate(g2)?;
    let product = p.mul(&p.power(g1, l), &p.power(g2, k));
    let displacements = displacement_profile(space, &product, n_max)?;
    let rate = displacements[n_max - 1] as f64 / n_max as f64;
    let grows = displacements.iter().enumerate().all(|(i, &d)| d as f64 >= min_rate * (i + 1) as f64);
    let verdict = if grows { Verdict::Pass } else { Verdict::Falsified };
    Ok(LoxodromicReport { product, displacements, rate, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::op_apply;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn el(p: &Presentation, s: &str) -> GroupElement {
        p.parse(s).unwrap()
    }

    fn op(p: &Presentation, s: &str) -> FormalOperator {
        FormalOperator::parse(p, s).unwrap()
    }

    fn small_budget() -> NormBudget<GroupElement> {
        NormBudget { support_cap: 4_000, max_iterations: 200, ..NormBudget::default() }
    }

    #[test]
    fn sequences() {
        let u = CoefficientSequence::uniform(4);
        assert_eq!(u.get(1), c(0.25));
        assert_eq!(u.get(5), c(0.0));
        assert!((u.l2_norm() - 0.5).abs() < 1e-15);
        assert!((CoefficientSequence::periodic(2, 9).l2_norm() - 1.0).abs() < 1e-12);
        assert!(CoefficientSequence::new([(0, c(1.0))]).is_err());
        let merged = CoefficientSequence::new([(2, c(1.0)), (2, c(-1.0)), (3, c(1.0))]).unwrap();
        assert_eq!(merged.iter().count(), 1);
    }

    #[test]
    fn build_ta_examples() {
        let p = Presentation::f2();
        let (a, b) = (el(&p, "a"), el(&p, "b"));
        let delta = CoefficientSequence::new([(1, c(1.0))]).unwrap();
        assert_eq!(build_ta(&p, &a, &b, &delta).unwrap(), op(&p, "1@b^-1 a b"));

        let t = build_ta(&p, &a, &b, &CoefficientSequence::uniform(5)).unwrap();
        assert_eq!(t.len(), 5);
        assert!(t.iter().all(|(_, x)| *x == c(0.2)));

        let m = Presentation::modular();
        let ta = build_ta(&m, &el(&m, "t"), &el(&m, "s"), &CoefficientSequence::periodic(2, 16)).unwrap();
        assert_eq!(ta.len(), 1);
        assert!((ta.coefficient(&el(&m, "s t s")) - c(4.0)).norm() < 1e-12);

        assert!(matches!(build_ta(&p, &GroupElement::identity(), &b, &delta), Err(Error::Degenerate(_))));
    }

    #[test]
    fn average_examples() {
        let p = Presentation::f2();
        let (a, b) = (el(&p, "a"), el(&p, "b"));
        for j in [1, 2, 7] {
            assert_eq!(average_mj(&p, &op(&p, "3-1i@e"), &b, j).unwrap(), op(&p, "3-1i@e"));
        }
        assert_eq!(average_mj(&p, &FormalOperator::term(c(1.0), a.clone()), &b, 1).unwrap(), op(&p, "1@b^-1 a b"));
        let m = average_mj(&p, &op(&p, "2@e; 1@a"), &b, 6).unwrap();
        assert_eq!(m.len(), 7);
        assert_eq!(m.identity_coefficient(), c(2.0));
        for j in 1..=6 {
            assert_eq!(m.coefficient(&p.conjugate(&a, &b, j)), c(1.0 / 6.0));
        }
        assert!(average_mj(&p, &op(&p, "1@a"), &b, 0).is_err());
    }

    #[test]
    fn average_merges_periodic_conjugates() {
        let m = Presentation::modular();
        let avg = average_mj(&m, &op(&m, "1@t"), &el(&m, "s"), 4).unwrap();
        assert_eq!(avg, op(&m, "0.5@t; 0.5@s t s"));
    }

    #[test]
    fn panalytic_free_pass() {
        let p = Presentation::f2();
        let space = CayleySpace::new(p.clone());
        let report =
            verify_panalytic(&space, &el(&p, "a"), &el(&p, "b"), 3, 2.0, DEFAULT_SLACK, &NormBudget::default())
                .unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.rows[0].estimate.lower_bound, 1.0);
        assert_eq!(report.rows[0].bound, 2.0);
        assert!(report.rows.iter().all(|r| !r.falsified));
        assert_eq!(report.verdict, Verdict::Pass);
    }

    #[test]
    fn panalytic_rejects_bad_input() {
        let p = Presentation::f2();
        let space = CayleySpace::new(p.clone());
        let b = el(&p, "b");
        let budget = small_budget();
        let e = GroupElement::identity();
        assert!(matches!(verify_panalytic(&space, &e, &b, 3, 2.0, 1e-9, &budget), Err(Error::Degenerate(_))));
        assert!(verify_panalytic(&space, &b, &b, 0, 2.0, 1e-9, &budget).is_err());
        assert!(verify_panalytic(&space, &b, &b, 1, 0.0, 1e-9, &budget).is_err());
    }

    #[test]
    fn panalytic_finite_order_falsified_with_checkable_witness() {
        let m = Presentation::modular();
        let space = CayleySpace::new(m.clone());
        let report =
            verify_panalytic(&space, &el(&m, "t"), &el(&m, "s"), 32, 2.0, DEFAULT_SLACK, &small_budget()).unwrap();
        assert_eq!(report.verdict, Verdict::Falsified);
        for row in report.rows.iter().filter(|r| r.falsified) {
            let w = &row.estimate.witness;
            assert!((w.norm() - 1.0).abs() < 1e-12);
            let image = op_apply(&space, &row.operator, w).unwrap();
            assert!(image.norm() > row.bound + DEFAULT_SLACK);
        }
    }

    #[test]
    fn inconclusive_when_not_converged() {
        let p = Presentation::f2();
        let space = CayleySpace::new(p.clone());
        let budget = NormBudget { max_iterations: 2, ..NormBudget::default() };
        let report = verify_panalytic(&space, &el(&p, "a"), &el(&p, "b"), 4, 2.0, 1e-9, &budget).unwrap();
        assert_eq!(report.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn blowup_examples() {
        let m = Presentation::modular();
        let (s, t) = (el(&m, "s"), el(&m, "t"));
        for (n, norm) in [(1, 1.0), (4, 2.0), (9, 3.0), (16, 4.0)] {
            let b = finite_order_blowup(&m, &t, &s, n).unwrap();
            assert_eq!(b.norm, norm);
            assert_eq!(b.operator, FormalOperator::term(c(norm), el(&m, "s t s")));
            assert_eq!(b.order, 2);
        }
        let p = Presentation::f2();
        assert!(matches!(finite_order_blowup(&p, &el(&p, "a"), &el(&p, "b"), 4), Err(Error::Domain(_))));
        assert!(finite_order_blowup(&m, &GroupElement::identity(), &s, 4).is_err());
    }

    #[test]
    fn blowup_exact_up_to_100() {
        let m = Presentation::modular();
        // Order 3 element conjugating a torsion-free-looking word.
        for (h, g) in [("t", "s"), ("s", "t"), ("s t", "t^-1")] {
            let (h, g) = (el(&m, h), el(&m, g));
            for n in 1..=100 {
                let b = finite_order_blowup(&m, &h, &g, n).unwrap();
                assert_eq!(b.norm, (n as f64).sqrt());
                assert_eq!(b.assembled.len(), 1);
                let symbol = m.conjugate(&h, &g, 1);
                assert!((b.assembled.coefficient(&symbol).re - b.norm).abs() < 1e-12);
                assert_eq!(b.operator.coefficient(&symbol).re, b.norm);
            }
        }
    }

    #[test]
    fn trace_examples() {
        let p = Presentation::f2();
        assert_eq!(canonical_trace(&FormalOperator::identity()), c(1.0));
        assert_eq!(canonical_trace(&op(&p, "3@e; 5@a")), c(3.0));
        assert_eq!(canonical_trace(&op(&p, "1@a")), c(0.0));
        assert!(tracial_property_check(&p, &op(&p, "1@a"), &op(&p, "1@a^-1")));
        assert!(tracial_property_check(&p, &op(&p, "1@a"), &op(&p, "1@b")));
    }

    #[test]
    fn decay_report_examples() {
        let p = Presentation::f2();
        let space = CayleySpace::new(p.clone());
        let b = el(&p, "b");
        let r = averaging_decay_report(&space, &op(&p, "5@e"), &b, &[1, 3], 2.0, 1e-9, &small_budget()).unwrap();
        assert!(r.rows.iter().all(|row| row.residual.is_zero() && row.estimate.lower_bound == 0.0));
        assert_eq!(r.verdict, Verdict::Pass);

        let r =
            averaging_decay_report(&space, &op(&p, "2@e; 1@a"), &b, &[4], 2.0, 1e-9, &NormBudget::default()).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.bound, 1.0);
        assert_eq!(row.residual_identity, c(0.0));
        assert_eq!(row.residual.len(), 4);
        assert!(row.estimate.lower_bound <= 1.0);
    }

    #[test]
    fn ideal_examples() {
        let p = Presentation::f2();
        let space = CayleySpace::new(p.clone());
        let e = GroupElement::identity();
        let budget = small_budget();

        let r = ideal_experiment(&space, &op(&p, "2@e"), &e, &el(&p, "a"), 3, 2.0, 1e-9, &[1], &budget).unwrap();
        assert_eq!(r.first_certified, Some(1));
        assert!(r.rows.iter().all(|row| row.residual.is_zero()));
        assert_eq!(r.verdict, Verdict::Pass);

        let t = op(&p, "2@e; 1@a; 1@b");
        let r = ideal_experiment(&space, &t, &e, &el(&p, "a b"), 20, 2.0, 1e-9, &[], &budget).unwrap();
        assert_eq!(r.first_certified, Some(17));
        assert!(!r.rows[15].certified);
        assert!(r.rows.iter().all(|row| row.identity_coefficient == c(2.0)));

        let r = ideal_experiment(&space, &t, &e, &el(&p, "a b"), 16, 2.0, 1e-9, &[], &budget).unwrap();
        assert_eq!(r.first_certified, None);
        assert_eq!(r.verdict, Verdict::Inconclusive);

        let r =
            ideal_experiment(&space, &op(&p, "1@a"), &el(&p, "a"), &el(&p, "b"), 4, 2.0, 1e-9, &[2], &budget).unwrap();
        assert_eq!(r.translated, FormalOperator::identity());
        assert!(r.rows.iter().all(|row| row.residual.is_zero()));

        assert!(matches!(
            ideal_experiment(&space, &t, &el(&p, "a^2"), &el(&p, "b"), 4, 2.0, 1e-9, &[], &budget),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn disjointness_examples() {
        let p = Presentation::f2();
        let space = CayleySpace::new(p.clone());
        let e = GroupElement::identity();
        let r = check_wj_disjoint(&space, &el(&p, "a"), &el(&p, "b"), 5, 6, &e, 1_000_000).unwrap();
        assert_eq!(r.collision_count, 0);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.points_checked, 11 * r.w0_words);

        let q = Presentation::torsion_by_free(3).unwrap();
        let qs = CayleySpace::new(q.clone());
        let r = check_wj_disjoint(&qs, &el(&q, "h"), &el(&q, "g"), 5, 6, &e, 1_000_000).unwrap();
        assert_eq!(r.collision_count, 0);

        let r = check_wj_disjoint(&space, &el(&p, "a"), &el(&p, "a"), 5, 6, &e, 1_000_000).unwrap();
        assert!(r.collision_count > 0);
        assert_eq!(r.verdict, Verdict::Falsified);
        let probe = FreeProductProbe::new(&p, &el(&p, "a"), &el(&p, "a")).unwrap();
        for col in &r.collisions {
            assert!(!col.stabilizer_word.is_identity());
            assert!(probe.evaluate(&p, &col.stabilizer_word).is_identity());
        }
        assert!(check_wj_disjoint(&space, &el(&p, "a"), &el(&p, "b"), 5, 6, &e, 10).is_err());
    }

    #[test]
    fn cyclic_g_detection() {
        let p = Presentation::f2();
        let probe = FreeProductProbe::new(&p, &el(&p, "a"), &el(&p, "b")).unwrap();
        let q = &probe.abstract_presentation;
        assert!(probe.involves_g_cyclically(&el(q, "h g h^-1")));
        assert!(!probe.involves_g_cyclically(&el(q, "g h g^-1")));
        assert!(!probe.involves_g_cyclically(&el(q, "g^2 h^3 g^-2")));
        assert!(probe.involves_g_cyclically(&el(q, "g h g")));
    }

    #[test]
    fn pingpong_examples() {
        let p = Presentation::f2();
        let space = CayleySpace::new(p.clone());
        let budget = PingPongBudget { max_length: 6, span: 8, radius: 7, min_rate: 1.0, census_cap: 1_000_000 };
        let r = pingpong_certificate(&space, &el(&p, "a"), &el(&p, "b"), &budget).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.displacements, (1..=8).collect::<Vec<u64>>());

        let m = Presentation::modular();
        let ms = CayleySpace::new(m.clone());
        let budget = PingPongBudget { max_length: 5, span: 6, radius: 3, min_rate: 1.0, census_cap: 1_000_000 };
        let r = pingpong_certificate(&ms, &el(&m, "t"), &el(&m, "s t"), &budget).unwrap();
        assert!(r.displacement_ok);
        assert!(r.displacements.iter().enumerate().all(|(i, &d)| d >= (i + 1) as u64));
        // t and st generate the whole group, where (st·t⁻¹)² = s² = e.
        assert!(!r.injective);
        let probe = FreeProductProbe::new(&m, &el(&m, "t"), &el(&m, "s t")).unwrap();
        assert!(r.relators.contains(&el(&probe.abstract_presentation, "g h^-1 g h^-1")));
        assert_eq!(r.verdict, Verdict::Falsified);

        let r = pingpong_certificate(&ms, &el(&m, "t"), &el(&m, "s"), &budget).unwrap();
        assert!(!r.displacement_ok);
        assert_eq!(r.verdict, Verdict::Falsified);
        assert!(r.displacements.iter().all(|&d| d <= 1));
    }

    #[test]
    fn loxodromic_examples() {
        let p = Presentation::f2();
        let space = CayleySpace::new(p.clone());
        let r = loxodromic_probe(&space, &el(&p, "a"), &el(&p, "b"), 1, 1, 10, 0.5).unwrap();
        assert_eq!(r.rate, 2.0);
        assert_eq!(r.verdict, Verdict::Pass);

        let r = loxodromic_probe(&space, &el(&p, "a"), &el(&p, "a^-1"), 1, 1, 10, 0.5).unwrap();
        assert!(r.product.is_identity());
        assert_eq!(r.rate, 0.0);
        assert_eq!(r.verdict, Verdict::Falsified);

        let m = Presentation::modular();
        let ms = CayleySpace::new(m.clone());
        let r = loxodromic_probe(&ms, &el(&m, "s t"), &el(&m, "t s"), 2, 2, 10, 0.5).unwrap();
        assert!(r.rate > 0.5);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(loxodromic_probe(&ms, &el(&m, "s"), &el(&m, "t"), 0, 1, 10, 0.5).is_err());
    }

    #[test]
    fn free_family_nonincreasing() {
        let p = Presentation::f2();
        let space = CayleySpace::new(p.clone());
        let report =
            verify_panalytic(&space, &el(&p, "a"), &el(&p, "b"), 8, 2.0, DEFAULT_SLACK, &NormBudget::default())
                .unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        for w in report.rows.windows(2) {
            assert!(w[1].estimate.lower_bound <= w[0].estimate.lower_bound + 1e-6, "J={}", w[1].j);
        }
    }

    #[test]
    fn more_budget_never_unfalsifies() {
        let m = Presentation::modular();
        let space = CayleySpace::new(m.clone());
        let (t, s) = (el(&m, "t"), el(&m, "s"));
        let mut seen_falsified = false;
        for (cap, iterations) in [(200, 20), (2_000, 60), (8_000, 200)] {
            let budget = NormBudget { support_cap: cap, max_iterations: iterations, ..NormBudget::default() };
            let r = verify_panalytic(&space, &t, &s, 32, 2.0, DEFAULT_SLACK, &budget).unwrap();
            if seen_falsified {
                assert_eq!(r.verdict, Verdict::Falsified);
            }
            seen_falsified |= r.verdict == Verdict::Falsified;
        }
        assert!(seen_falsified);
    }

    fn random_element(p: &Presentation, rng: &mut ChaCha8Rng, max_len: usize) -> GroupElement {
        let len = rng.random_range(0..=max_len);
        p.reduce((0..len).map(|_| (rng.random_range(0..p.rank()), if rng.random_bool(0.5) { 1 } else { -1 }))).unwrap()
    }

    fn random_operator(p: &Presentation, rng: &mut ChaCha8Rng) -> FormalOperator {
        let n = rng.random_range(1..=5);
        FormalOperator::from_terms((0..n).map(|_| {
            let g = random_element(p, rng, 4);
            (g, Complex64::new(rng.random_range(-2..=2) as f64, rng.random_range(-2..=2) as f64))
        }))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn averaging_preserves_trace(seed in any::<u64>(), j in 1usize..=16, modular in any::<bool>()) {
            let p = if modular { Presentation::modular() } else { Presentation::f2() };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_operator(&p, &mut rng);
            let g = random_element(&p, &mut rng, 3);
            let avg = average_mj(&p, &t, &g, j).unwrap();
            prop_assert_eq!(canonical_trace(&avg), canonical_trace(&t));
            let k = rng.random_range(-4..=4);
            prop_assert_eq!(canonical_trace(&t.conjugate(&p, &g, k)), canonical_trace(&t));
        }

        #[test]
        fn tracial_on_random_pairs(seed in any::<u64>(), modular in any::<bool>()) {
            let p = if modular { Presentation::modular() } else { Presentation::f2() };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_operator(&p, &mut rng);
            let t = random_operator(&p, &mut rng);
            prop_assert!(tracial_property_check(&p, &s, &t));
        }

        #[test]
        fn decay_residual_has_no_identity(seed in any::<u64>(), j in 1usize..=8) {
            let p = Presentation::f2();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_operator(&p, &mut rng);
            let g = random_element(&p, &mut rng, 3);
            let residual = average_mj(&p, &t, &g, j).unwrap().sub(&FormalOperator::scalar(t.identity_coefficient()));
            prop_assert_eq!(residual.identity_coefficient(), Complex64::new(0.0, 0.0));
        }
    }
}
