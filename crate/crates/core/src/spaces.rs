//! Countable metric spaces with isometric group actions.
//!
//! The only concrete space is the Cayley graph of a [`Presentation`] with the
//! factor generators as generating set, acted on by left multiplication.
//! Edges join `x` and `x·s^{±1}`, so the graph metric is the left-invariant
//! word metric `d(x, y) = |x⁻¹y|`.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::hash::Hash;

use indexmap::IndexMap;
use rustc_hash::{FxBuildHasher, FxHashSet};

use crate::error::{Error, Result};
use crate::groups::{GroupElement, Presentation};
use crate::verdict::Verdict;

pub const DEFAULT_BALL_CAP: usize = 5_000_000;

/// A countable metric space with an isometric action of a free product of
/// cyclic groups.
pub trait ActionSpace {
    type Point: Clone + Eq + Hash + Ord + Debug;

    fn presentation(&self) -> &Presentation;

    fn base_point(&self) -> Self::Point;

    /// `g·x` for an element already validated against the presentation.
    fn act(&self, g: &GroupElement, x: &Self::Point) -> Self::Point;

    fn check_point(&self, x: &Self::Point) -> Result<()>;

    fn distance(&self, x: &Self::Point, y: &Self::Point) -> u64;

    /// Points at distance `≤ radius` from `center`, in breadth-first order.
    fn enumerate_ball(&self, center: &Self::Point, radius: u64) -> Result<Vec<Self::Point>>;

    fn render_point(&self, x: &Self::Point) -> String;

    fn apply(&self, g: &GroupElement, x: &Self::Point) -> Result<Self::Point> {
        self.presentation().validate(g)?;
        self.check_point(x)?;
        Ok(self.act(g, x))
    }
}

/// Cayley graph of a free product of cyclic groups.
#[derive(Clone, Debug)]
pub struct CayleySpace {
    presentation: Presentation,
    ball_cap: usize,
}

impl CayleySpace {
    pub fn new(presentation: Presentation) -> Self {
        Self { presentation, ball_cap: DEFAULT_BALL_CAP }
    }

    pub fn with_ball_cap(mut self, cap: usize) -> Self {
        self.ball_cap = cap;
        self
    }

    pub fn ball_cap(&self) -> usize {
        self.ball_cap
    }

    /// Right-multiplication steps `x ↦ x·s^{±1}`, generator order, positive
    /// exponent first. For an order-2 factor both steps coincide.
    fn steps(&self) -> Vec<GroupElement> {
        let p = &self.presentation;
        let mut steps: Vec<GroupElement> = Vec::with_capacity(2 * p.rank());
        for f in 0..p.rank() {
            for e in [1, -1] {
                let s = p.reduce([(f, e)]).expect("factor index in range");
                if !steps.contains(&s) {
                    steps.push(s);
                }
            }
        }
        steps
    }
}

impl ActionSpace for CayleySpace {
    type Point = GroupElement;

    fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    fn base_point(&self) -> GroupElement {
        GroupElement::identity()
    }

    fn act(&self, g: &GroupElement, x: &GroupElement) -> GroupElement {
        self.presentation.mul(g, x)
    }

    fn check_point(&self, x: &GroupElement) -> Result<()> {
        self.presentation.validate(x)
    }

    fn distance(&self, x: &GroupElement, y: &GroupElement) -> u64 {
        let p = &self.presentation;
        p.word_length(&p.mul(&p.invert(x), y))
    }

    fn enumerate_ball(&self, center: &GroupElement, radius: u64) -> Result<Vec<GroupElement>> {
        self.check_point(center)?;
        let steps = self.steps();
        let mut seen = FxHashSet::default();
        seen.insert(center.clone());
        let mut out = vec![center.clone()];
        let mut layer_start = 0;
        for _ in 0..radius {
            let layer_end = out.len();
            for i in layer_start..layer_end {
                for s in &steps {
                    let y = self.presentation.mul(&out[i], s);
                    if seen.insert(y.clone()) {
                        out.push(y);
                        if out.len() > self.ball_cap {
                            return Err(Error::Budget { what: "ball cardinality", limit: self.ball_cap });
                        }
                    }
                }
            }
            if out.len() == layer_end {
                break;
            }
            layer_start = layer_end;
        }
        Ok(out)
    }

    fn render_point(&self, x: &GroupElement) -> String {
        self.presentation.render(x)
    }
}

/// Greedy decomposition of a finite window into pieces of subgroup orbits.
#[derive(Clone, Debug)]
pub struct OrbitDecomposition<P> {
    pub representatives: Vec<P>,
    pub membership: IndexMap<P, usize, FxBuildHasher>,
}

impl<P: Clone + Eq + Hash> OrbitDecomposition<P> {
    pub fn label(&self, x: &P) -> Option<usize> {
        self.membership.get(x).copied()
    }
}

/// Splits `ball` into orbits of the subgroup generated by
/// `subgroup_generators`, as far as the ball can see them.
///
/// The first unlabeled point in `ball` order becomes the next representative;
/// its label spreads along generator steps (and their inverses) that stay
/// inside the ball. A true orbit that leaves and re-enters the ball may
/// therefore appear as several pieces.
pub fn orbit_decompose<S: ActionSpace>(
    space: &S,
    subgroup_generators: &[GroupElement],
    ball: &[S::Point],
) -> Result<OrbitDecomposition<S::Point>> {
    if ball.is_empty() {
        return Err(Error::Precondition("orbit decomposition needs a nonempty ball".into()));
    }
    let p = space.presentation();
    let mut moves = Vec::with_capacity(2 * subgroup_generators.len());
    for g in subgroup_generators {
        p.validate(g)?;
        moves.push(g.clone());
        moves.push(p.invert(g));
    }
    let in_ball: FxHashSet<&S::Point> = ball.iter().collect();
    let mut membership: IndexMap<S::Point, usize, FxBuildHasher> = IndexMap::default();
    let mut representatives = Vec::new();
    for x in ball {
        if membership.contains_key(x) {
            continue;
        }
        let label = representatives.len();
        representatives.push(x.clone());
        membership.insert(x.clone(), label);
        let mut queue = VecDeque::from([x.clone()]);
        while let Some(y) = queue.pop_front() {
            for m in &moves {
                let z = space.act(m, &y);
                if in_ball.contains(&z) && !membership.contains_key(&z) {
                    membership.insert(z.clone(), label);
                    queue.push_back(z);
                }
            }
        }
    }
    Ok(OrbitDecomposition { representatives, membership })
}

#[derive(Clone, Debug)]
pub struct FaithfulnessReport<P> {
    /// For each nontrivial word of length `≤ L`, a point it moves.
    pub witnesses: IndexMap<GroupElement, P, FxBuildHasher>,
    /// Words that fixed every tested point.
    pub violations: Vec<GroupElement>,
    pub words_checked: usize,
    pub verdict: Verdict,
}

/// Looks for a moved point for every nontrivial word of length `≤ max_length`,
/// trying the base point first and then the rest of the radius-`radius` ball.
pub fn faithfulness_check<S: ActionSpace>(
    space: &S,
    max_length: u64,
    radius: u64,
    census_cap: usize,
) -> Result<FaithfulnessReport<S::Point>> {
    let words = CayleySpace::new(space.presentation().clone())
        .with_ball_cap(census_cap)
        .enumerate_ball(&GroupElement::identity(), max_length)
        .map_err(|_| Error::Budget { what: "word census", limit: census_cap })?;
    let base = space.base_point();
    let mut ball: Option<Vec<S::Point>> = None;
    let mut witnesses = IndexMap::default();
    let mut violations = Vec::new();
    for w in words.iter().filter(|w| !w.is_identity()) {
        let witness = if space.act(w, &base) != base {
            Some(base.clone())
        } else {
            if ball.is_none() {
                ball = Some(space.enumerate_ball(&base, radius)?);
            }
            ball.as_ref().unwrap().iter().find(|x| space.act(w, x) != **x).cloned()
        };
        match witness {
            Some(x) => {
                witnesses.insert(w.clone(), x);
            }
            None => violations.push(w.clone()),
        }
    }
    let verdict = if violations.is_empty() { Verdict::Pass } else { Verdict::Falsified };
    Ok(FaithfulnessReport { witnesses, violations, words_checked: words.len() - 1, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_element(p: &Presentation, rng: &mut impl Rng, max_len: usize) -> GroupElement {
        let len = rng.random_range(0..=max_len);
        let raw: Vec<(usize, i64)> =
            (0..len).map(|_| (rng.random_range(0..p.rank()), if rng.random_bool(0.5) { 1 } else { -1 })).collect();
        p.reduce(raw).unwrap()
    }

    #[test]
    fn ball_sizes() {
        let space = CayleySpace::new(Presentation::f2());
        let e = GroupElement::identity();
        assert_eq!(space.enumerate_ball(&e, 0).unwrap(), vec![e.clone()]);
        assert_eq!(space.enumerate_ball(&e, 1).unwrap().len(), 5);
        assert_eq!(space.enumerate_ball(&e, 2).unwrap().len(), 17);
        let modular = CayleySpace::new(Presentation::modular());
        // s has one neighbor step, t two: 1 + 3 at radius 1.
        assert_eq!(modular.enumerate_ball(&e, 1).unwrap().len(), 4);
    }

    #[test]
    fn ball_order_is_breadth_first_positive_first() {
        let p = Presentation::f2();
        let space = CayleySpace::new(p.clone());
        let ball = space.enumerate_ball(&GroupElement::identity(), 2).unwrap();
        let rendered: Vec<String> = ball.iter().take(9).map(|x| p.render(x)).collect();
        assert_eq!(rendered, ["e", "a", "a^-1", "b", "b^-1", "a^2", "a b", "a b^-1", "a^-2"]);
        for pair in ball.windows(2) {
            assert!(p.word_length(&pair[0]) <= p.word_length(&pair[1]));
        }
    }

    #[test]
    fn ball_cap_is_enforced() {
        let space = CayleySpace::new(Presentation::f2()).with_ball_cap(16);
        let err = space.enumerate_ball(&GroupElement::identity(), 2).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
    }

    #[test]
    fn balls_are_monotone_and_exact() {
        for p in [Presentation::f2(), Presentation::modular()] {
            let space = CayleySpace::new(p.clone());
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let center = random_element(&p, &mut rng, 6);
            let mut previous: FxHashSet<GroupElement> = FxHashSet::default();
            for r in 0..=6 {
                let ball = space.enumerate_ball(&center, r).unwrap();
                let set: FxHashSet<GroupElement> = ball.iter().cloned().collect();
                assert_eq!(set.len(), ball.len());
                assert!(previous.is_subset(&set));
                assert!(ball.iter().all(|x| space.distance(&center, x) <= r));
                previous = set;
            }
            // Exactness: every word within distance 3 of the center appears.
            let ball3: FxHashSet<GroupElement> = space.enumerate_ball(&center, 3).unwrap().into_iter().collect();
            for _ in 0..200 {
                let step = random_element(&p, &mut rng, 3);
                let y = p.mul(&center, &step);
                assert_eq!(ball3.contains(&y), space.distance(&center, &y) <= 3);
            }
        }
    }

    #[test]
    fn apply_examples() {
        let p = Presentation::f2();
        let space = CayleySpace::new(p.clone());
        let e = GroupElement::identity();
        let x = p.parse("a b^2").unwrap();
        assert_eq!(space.apply(&e, &x).unwrap(), x);
        assert_eq!(space.apply(&p.generator(0), &e).unwrap(), p.generator(0));
        let foreign = Presentation::free(&["a", "b", "c"]).unwrap().generator(2);
        assert!(space.apply(&foreign, &e).is_err());
    }

    #[test]
    fn action_is_isometric_and_metric_axioms_hold() {
        for p in [Presentation::f2(), Presentation::modular()] {
            let space = CayleySpace::new(p.clone());
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..500 {
                let g = random_element(&p, &mut rng, 8);
                let x = random_element(&p, &mut rng, 8);
                let y = random_element(&p, &mut rng, 8);
                let z = random_element(&p, &mut rng, 8);
                assert_eq!(space.distance(&space.act(&g, &x), &space.act(&g, &y)), space.distance(&x, &y));
                assert_eq!(space.distance(&x, &y), space.distance(&y, &x));
                assert!(space.distance(&x, &z) <= space.distance(&x, &y) + space.distance(&y, &z));
                assert_eq!(space.distance(&x, &y) == 0, x == y);
                let gh = p.mul(&g, &z);
                assert_eq!(space.act(&gh, &x), space.act(&g, &space.act(&z, &x)));
            }
        }
    }

    #[test]
    fn orbit_decomposition_examples() {
        let p = Presentation::f2();
        let space = CayleySpace::new(p.clone());
        let ball = space.enumerate_ball(&GroupElement::identity(), 2).unwrap();

        let whole = orbit_decompose(&space, &[p.generator(0), p.generator(1)], &ball).unwrap();
        assert_eq!(whole.representatives, vec![GroupElement::identity()]);

        let trivial = orbit_decompose(&space, &[], &ball).unwrap();
        assert_eq!(trivial.representatives, ball);

        // ⟨a⟩ acting on the left: pieces are the cosets ⟨a⟩x met by the ball,
        // keyed by x with its leading a-syllable stripped.
        let dec = orbit_decompose(&space, &[p.generator(0)], &ball).unwrap();
        let coset_key = |x: &GroupElement| match x.first() {
            Some(s) if s.factor == 0 => p.mul(&p.reduce([(0, -s.exponent)]).unwrap(), x),
            _ => x.clone(),
        };
        let mut oracle: Vec<GroupElement> = Vec::new();
        for x in &ball {
            let key = coset_key(x);
            if !oracle.contains(&key) {
                oracle.push(key);
            }
        }
        assert_eq!(oracle.len(), 9);
        assert_eq!(dec.representatives.len(), oracle.len());
        let rendered: Vec<String> = dec.representatives.iter().map(|x| p.render(x)).collect();
        assert_eq!(&rendered[..3], ["e", "b", "b^-1"]);
        for x in &ball {
            for y in &ball {
                assert_eq!(dec.label(x) == dec.label(y), coset_key(x) == coset_key(y));
            }
        }
        assert!(orbit_decompose(&space, &[], &[]).is_err());
    }

    #[test]
    fn orbit_labels_are_invariant_under_generators() {
        let p = Presentation::modular();
        let space = CayleySpace::new(p.clone());
        let ball = space.enumerate_ball(&GroupElement::identity(), 5).unwrap();
        let gens = [p.parse("s t").unwrap()];
        let dec = orbit_decompose(&space, &gens, &ball).unwrap();
        assert_eq!(dec.membership.len(), ball.len());
        for y in &ball {
            let z = space.act(&gens[0], y);
            if let Some(label) = dec.label(&z) {
                assert_eq!(Some(label), dec.label(y));
            }
        }
        for (i, a) in dec.representatives.iter().enumerate() {
            assert_eq!(dec.label(a), Some(i));
        }
    }

    #[test]
    fn faithfulness_examples() {
        let space = CayleySpace::new(Presentation::f2());
        let vacuous = faithfulness_check(&space, 0, 0, DEFAULT_BALL_CAP).unwrap();
        assert_eq!(vacuous.verdict, Verdict::Pass);
        assert!(vacuous.witnesses.is_empty());

        let report = faithfulness_check(&space, 3, 0, DEFAULT_BALL_CAP).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert!(report.witnesses.values().all(|x| x.is_identity()));

        let modular = CayleySpace::new(Presentation::modular());
        let report = faithfulness_check(&modular, 6, 1, DEFAULT_BALL_CAP).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert_eq!(report.witnesses.len(), report.words_checked);
        for (w, x) in &report.witnesses {
            assert!(x.is_identity());
            assert_ne!(modular.apply(w, x).unwrap(), *x);
        }
        assert!(matches!(faithfulness_check(&space, 6, 1, 100), Err(Error::Budget { .. })));
    }
}
