//! Finitely supported vectors in `ℓ²(X)`, elements of the group algebra `ℂG`
//! acting through the action representation `(π(g)f)(x) = f(g⁻¹·x)`, and
//! certified lower bounds on operator norms.
//!
//! Every norm reported here is attained by an explicit finitely supported
//! vector, so it can only underestimate the true operator norm. Upper bounds
//! are never certified.

use std::hash::Hash;

use indexmap::IndexMap;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxBuildHasher;

use crate::error::{Error, Result};
use crate::groups::{GroupElement, Presentation};
use crate::spaces::ActionSpace;

type Coefficients<K> = IndexMap<K, Complex64, FxBuildHasher>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sums terms in an order fixed by their values alone, so two multisets of
/// bitwise-equal terms always produce bitwise-equal sums.
fn canonical_sum(mut terms: Vec<Complex64>) -> Complex64 {
    terms.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    terms.into_iter().fold(ZERO, |acc, t| acc + t)
}

/// Euclidean norm by two passes: find the largest modulus, then sum squares
/// of the rescaled entries.
fn stable_norm<'a, I>(values: I) -> f64
where
    I: Iterator<Item = &'a Complex64> + Clone,
{
    let scale = values.clone().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let sum: f64 = values.map(|c| (c / scale).norm_sqr()).sum();
    scale * sum.sqrt()
}

/// A finitely supported function on the points of a space. Zero coefficients
/// are never stored.
#[derive(Clone, Debug)]
pub struct StateVector<P: Hash + Eq> {
    coefficients: Coefficients<P>,
}

impl<P: Hash + Eq> PartialEq for StateVector<P> {
    fn eq(&self, other: &Self) -> bool {
        self.coefficients == other.coefficients
    }
}

impl<P: Clone + Hash + Eq> StateVector<P> {
    pub fn zero() -> Self {
        Self { coefficients: IndexMap::default() }
    }

    /// `δ_x`.
    pub fn dirac(x: P) -> Self {
        let mut coefficients = IndexMap::default();
        coefficients.insert(x, Complex64::new(1.0, 0.0));
        Self { coefficients }
    }

    /// Builds a vector from `(point, coefficient)` pairs, adding repeated
    /// points.
    pub fn from_terms<I: IntoIterator<Item = (P, Complex64)>>(terms: I) -> Self {
        let mut coefficients: Coefficients<P> = IndexMap::default();
        for (x, c) in terms {
            *coefficients.entry(x).or_insert(ZERO) += c;
        }
        coefficients.retain(|_, c| *c != ZERO);
        Self { coefficients }
    }

    pub fn get(&self, x: &P) -> Complex64 {
        self.coefficients.get(x).copied().unwrap_or(ZERO)
    }

    /// Number of stored (nonzero) terms.
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, &Complex64)> {
        self.coefficients.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &P> {
        self.coefficients.keys()
    }

    pub fn norm(&self) -> f64 {
        stable_norm(self.coefficients.values())
    }

    /// `⟨self, other⟩ = Σ self(x)·conj(other(x))`, linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coefficients
            .iter()
            .filter_map(|(x, c)| other.coefficients.get(x).map(|d| c * d.conj()))
            .fold(ZERO, |acc, t| acc + t)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_terms(self.coefficients.iter().map(|(x, c)| (x.clone(), c * factor)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.iter().chain(other.iter()).map(|(x, c)| (x.clone(), *c)))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Unit vector in the direction of `self`; the zero vector stays zero.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        let mut out = self.clone();
        for c in out.coefficients.values_mut() {
            *c /= n;
        }
        out
    }

    /// Drops entries below `threshold` in modulus and then keeps at most `cap`
    /// entries of largest modulus. Returns true if the cap removed anything.
    fn prune(&mut self, threshold: f64, cap: usize) -> bool {
        self.coefficients.retain(|_, c| c.norm() >= threshold && *c != ZERO);
        if self.coefficients.len() <= cap {
            return false;
        }
        let moduli: Vec<f64> = self.coefficients.values().map(|c| c.norm()).collect();
        let mut sorted = moduli.clone();
        let (_, kth, _) = sorted.select_nth_unstable_by(cap - 1, |a, b| b.total_cmp(a));
        let kth = *kth;
        // Everything strictly above the cut survives; ties at the cut are
        // admitted in insertion order until the cap is reached.
        let mut room = cap - moduli.iter().filter(|&&m| m > kth).count();
        let keep: Vec<bool> = moduli
            .iter()
            .map(|&m| {
                if m > kth {
                    true
                } else if m == kth && room > 0 {
                    room -= 1;
                    true
                } else {
                    false
                }
            })
            .collect();
        let mut index = 0;
        self.coefficients.retain(|_, _| {
            let k = keep[index];
            index += 1;
            k
        });
        true
    }
}

/// An element `Σ a_g g` of the group algebra `ℂG`, acting as `Σ a_g π(g)`.
/// Zero coefficients are never stored.
#[derive(Clone, Debug, Default)]
pub struct FormalOperator {
    coefficients: Coefficients<GroupElement>,
}

impl PartialEq for FormalOperator {
    fn eq(&self, other: &Self) -> bool {
        self.coefficients == other.coefficients
    }
}

impl FormalOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The unit `1·e`.
    pub fn identity() -> Self {
        Self::scalar(Complex64::new(1.0, 0.0))
    }

    pub fn scalar(c: Complex64) -> Self {
        Self::term(c, GroupElement::identity())
    }

    pub fn term(c: Complex64, g: GroupElement) -> Self {
        Self::from_terms([(g, c)])
    }

    /// Builds an operator from `(symbol, coefficient)` pairs. Coefficients of
    /// a repeated symbol are added in a canonical order.
    pub fn from_terms<I: IntoIterator<Item = (GroupElement, Complex64)>>(terms: I) -> Self {
        let mut grouped: IndexMap<GroupElement, Vec<Complex64>, FxBuildHasher> = IndexMap::default();
        for (g, c) in terms {
            grouped.entry(g).or_default().push(c);
        }
        let coefficients = grouped
            .into_iter()
            .filter_map(|(g, cs)| {
                let c = if cs.len() == 1 { cs[0] } else { canonical_sum(cs) };
                (c != ZERO).then_some((g, c))
            })
            .collect();
        Self { coefficients }
    }

    pub fn coefficient(&self, g: &GroupElement) -> Complex64 {
        self.coefficients.get(g).copied().unwrap_or(ZERO)
    }

    pub fn identity_coefficient(&self) -> Complex64 {
        self.coefficient(&GroupElement::identity())
    }

    /// Number of stored (nonzero) terms.
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, &Complex64)> {
        self.coefficients.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.coefficients.keys()
    }

    pub fn validate(&self, p: &Presentation) -> Result<()> {
        self.coefficients.keys().try_for_each(|g| p.validate(g))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.iter().chain(other.iter()).map(|(g, c)| (g.clone(), *c)))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_terms(self.iter().map(|(g, c)| (g.clone(), *c)).chain(other.iter().map(|(g, c)| (g.clone(), -c))))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_terms(self.iter().map(|(g, c)| (g.clone(), c * factor)))
    }

    /// Symbolic product in `ℂG`.
    pub fn product(&self, p: &Presentation, other: &Self) -> Self {
        Self::from_terms(self.iter().flat_map(|(g, a)| other.iter().map(move |(h, b)| (p.mul(g, h), a * b))))
    }

    /// `k·T`: every symbol `s` becomes `k s`.
    pub fn left_translate(&self, p: &Presentation, k: &GroupElement) -> Self {
        Self::from_terms(self.iter().map(|(s, c)| (p.mul(k, s), *c)))
    }

    /// `π(g⁻ʲ) T π(gʲ)`: every symbol `s` becomes `g⁻ʲ s gʲ`.
    pub fn conjugate(&self, p: &Presentation, g: &GroupElement, j: i64) -> Self {
        let gj = p.power(g, j);
        let gj_inv = p.invert(&gj);
        Self::from_terms(self.iter().map(|(s, c)| (p.mul(&p.mul(&gj_inv, s), &gj), *c)))
    }

    /// Text form: `coefficient@word` terms joined by `; `, e.g. `2@e; -3i@a`.
    /// The zero operator renders as `0`.
    pub fn render(&self, p: &Presentation) -> String {
        if self.is_zero() {
            return "0".into();
        }
        self.iter()
            .map(|(g, c)| {
                let coefficient = if c.im == 0.0 { format!("{}", c.re) } else { format!("{c}") };
                format!("{coefficient}@{}", p.render(g))
            })
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn parse(p: &Presentation, text: &str) -> Result<Self> {
        let trimmed = text.trim();
        if trimmed == "0" {
            return Ok(Self::zero());
        }
        let mut terms = Vec::new();
        for part in trimmed.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (coefficient, word) = part.split_once('@').ok_or_else(|| Error::Parse {
                input: part.to_string(),
                reason: "expected `coefficient@word`".into(),
            })?;
            let c: Complex64 = coefficient.trim().parse().map_err(|_| Error::Parse {
                input: coefficient.trim().to_string(),
                reason: "malformed complex coefficient".into(),
            })?;
            terms.push((p.parse(word)?, c));
        }
        if terms.is_empty() {
            return Err(Error::Parse { input: text.to_string(), reason: "no terms".into() });
        }
        Ok(Self::from_terms(terms))
    }
}

/// `π(g)v`, i.e. `x ↦ v(g⁻¹·x)`: the support moves by `g`.
pub fn pi_apply<S: ActionSpace>(
    space: &S,
    g: &GroupElement,
    v: &StateVector<S::Point>,
) -> Result<StateVector<S::Point>> {
    space.presentation().validate(g)?;
    let coefficients = v.iter().map(|(x, c)| (space.act(g, x), *c)).collect();
    Ok(StateVector { coefficients })
}

/// `Σ a_g π(g) v`, exactly: nothing is truncated.
pub fn op_apply<S: ActionSpace>(
    space: &S,
    t: &FormalOperator,
    v: &StateVector<S::Point>,
) -> Result<StateVector<S::Point>> {
    t.validate(space.presentation())?;
    Ok(apply_unchecked(space, t, v))
}

fn apply_unchecked<S: ActionSpace>(space: &S, t: &FormalOperator, v: &StateVector<S::Point>) -> StateVector<S::Point> {
    let mut out: Coefficients<S::Point> = IndexMap::with_capacity_and_hasher(t.len() * v.len(), FxBuildHasher);
    for (g, a) in t.iter() {
        for (x, c) in v.iter() {
            *out.entry(space.act(g, x)).or_insert(ZERO) += a * c;
        }
    }
    out.retain(|_, c| *c != ZERO);
    StateVector { coefficients: out }
}

/// `T*`: the coefficient at `g⁻¹` is `conj(a_g)`, since `π(g)* = π(g⁻¹)`.
pub fn adjoint(p: &Presentation, t: &FormalOperator) -> FormalOperator {
    FormalOperator::from_terms(t.iter().map(|(g, c)| (p.invert(g), c.conj())))
}

/// Multiplication by the indicator of `member`.
pub fn indicator_project<P, F>(v: &StateVector<P>, mut member: F) -> StateVector<P>
where
    P: Clone + Hash + Eq,
    F: FnMut(&P) -> bool,
{
    let coefficients = v.iter().filter(|(x, _)| member(x)).map(|(x, c)| (x.clone(), *c)).collect();
    StateVector { coefficients }
}

/// `Σ |a_g|`, an upper bound on `‖π(T)‖` since each `π(g)` is unitary.
pub fn triangle_upper_bound(t: &FormalOperator) -> f64 {
    t.iter().map(|(_, c)| c.norm()).sum()
}

/// Budgets for [`norm_lower_bound`].
#[derive(Clone, Debug)]
pub struct NormBudget<P> {
    pub max_iterations: usize,
    /// Largest support kept between iterations.
    pub support_cap: usize,
    /// Entries below `prune_threshold · ‖v‖` are dropped.
    pub prune_threshold: f64,
    /// Convergence when successive Rayleigh quotients differ by less.
    pub residual_target: f64,
    /// Start vector `δ_seed`; the space's base point when `None`.
    pub seed_point: Option<P>,
    /// Extra runs from random start vectors, drawn from `seed`.
    pub restarts: usize,
    pub seed: u64,
}

impl<P> Default for NormBudget<P> {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            support_cap: 30_000,
            prune_threshold: 1e-8,
            residual_target: 1e-5,
            seed_point: None,
            restarts: 0,
            seed: 0,
        }
    }
}

/// A certified lower bound on `‖π(T)‖` with the vector that attains it.
#[derive(Clone, Debug)]
pub struct NormEstimate<P: Hash + Eq> {
    /// `‖T v‖ / ‖v‖` for `v = witness`.
    pub lower_bound: f64,
    pub iterations: usize,
    /// `‖T*T v − ρ v‖` at the last iterate, `ρ` its Rayleigh quotient.
    pub residual: f64,
    /// Rayleigh quotient `⟨T*T v, v⟩` of the last (unit) iterate.
    pub rayleigh: f64,
    pub support_size: usize,
    /// Largest distance from the seed point to the witness support.
    pub radius_hint: u64,
    pub converged: bool,
    /// The support cap removed entries at some iteration.
    pub truncated: bool,
    /// Unit vector attaining `lower_bound`.
    pub witness: StateVector<P>,
}

impl<P: Clone + Hash + Eq> NormEstimate<P> {
    /// Recomputes `‖T w‖/‖w‖` for the stored witness.
    pub fn recheck<S: ActionSpace<Point = P>>(&self, space: &S, t: &FormalOperator) -> Result<f64> {
        let n = self.witness.norm();
        if n == 0.0 {
            return Ok(0.0);
        }
        Ok(op_apply(space, t, &self.witness)?.norm() / n)
    }
}

/// Power iteration on `T*T` starting from `δ_seed`, reporting the best
/// `‖Tv‖/‖v‖` seen over all iterates.
///
/// Between iterations tiny entries are pruned and the support is capped, which
/// can only lower what the iterates attain; the reported value is always that
/// of an explicit vector.
pub fn norm_lower_bound<S: ActionSpace>(
    space: &S,
    t: &FormalOperator,
    budget: &NormBudget<S::Point>,
) -> Result<NormEstimate<S::Point>> {
    let p = space.presentation();
    t.validate(p)?;
    if budget.max_iterations == 0 || budget.support_cap == 0 {
        return Err(Error::Precondition("norm budgets must be positive".into()));
    }
    let seed_point = budget.seed_point.clone().unwrap_or_else(|| space.base_point());
    space.check_point(&seed_point)?;
    let t_star = adjoint(p, t);

    let mut best = power_iterate(space, t, &t_star, StateVector::dirac(seed_point.clone()), budget);
    if budget.restarts > 0 && !t.is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        let mut neighbourhood = vec![seed_point.clone()];
        for g in t.support().chain(t_star.support()) {
            let y = space.act(g, &seed_point);
            if !neighbourhood.contains(&y) {
                neighbourhood.push(y);
            }
        }
        for _ in 0..budget.restarts {
            let start = StateVector::from_terms(neighbourhood.iter().map(|x| {
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (x.clone(), c)
            }));
            if start.is_zero() {
                continue;
            }
            let candidate = power_iterate(space, t, &t_star, start, budget);
            if candidate.lower_bound > best.lower_bound {
                best = candidate;
            }
        }
    }
    best.radius_hint = best.witness.support().map(|x| space.distance(&seed_point, x)).max().unwrap_or(0);
    Ok(best)
}

fn power_iterate<S: ActionSpace>(
    space: &S,
    t: &FormalOperator,
    t_star: &FormalOperator,
    start: StateVector<S::Point>,
    budget: &NormBudget<S::Point>,
) -> NormEstimate<S::Point> {
    let mut v = start.normalized();
    if t.is_zero() {
        return NormEstimate {
            lower_bound: 0.0,
            iterations: 0,
            residual: 0.0,
            rayleigh: 0.0,
            support_size: v.len(),
            radius_hint: 0,
            converged: true,
            truncated: false,
            witness: v,
        };
    }
    let mut best_value = -1.0;
    let mut best_vector = v.clone();
    let mut previous: Option<f64> = None;
    let mut converged = false;
    let mut truncated = false;
    let mut residual = f64::INFINITY;
    let mut rayleigh = 0.0;
    let mut iterations = 0;

    while iterations < budget.max_iterations {
        iterations += 1;
        let tv = apply_unchecked(space, t, &v);
        let v_norm = v.norm();
        let value = tv.norm() / v_norm;
        rayleigh = value * value;
        let mut next = apply_unchecked(space, t_star, &tv);

        // ‖u − ρv‖² = ‖u‖² − ρ² for unit v, since ⟨u, v⟩ = ‖Tv‖² = ρ.
        let next_norm = next.norm();
        residual = (next_norm * next_norm - rayleigh * rayleigh).max(0.0).sqrt();
        if value > best_value {
            best_value = value;
            best_vector = v;
        }
        if previous.is_some_and(|r| (rayleigh - r).abs() < budget.residual_target) {
            converged = true;
            break;
        }
        previous = Some(rayleigh);

        let n = next_norm;
        if n == 0.0 {
            converged = true;
            break;
        }
        truncated |= next.prune(budget.prune_threshold * n, budget.support_cap);
        v = next.normalized();
    }

    // Store the witness as a unit vector; its value is recomputed so the
    // reported bound is exactly what the stored vector attains.
    let witness = best_vector.normalized();
    let lower_bound = apply_unchecked(space, t, &witness).norm() / witness.norm();
    NormEstimate {
        lower_bound,
        iterations,
        residual,
        rayleigh,
        support_size: witness.len(),
        radius_hint: 0,
        converged,
        truncated,
        witness,
    }
}
