//! Free products of cyclic groups.
//!
//! A [`Presentation`] lists cyclic factors, each finite of order `m ≥ 2` or
//! infinite. Free groups `F_k` are `k` infinite factors. Elements are stored
//! as reduced syllable sequences: adjacent syllables live in different
//! factors, and exponents of a finite factor of order `m` are kept in
//! `1..m`. Because the normal form is unique, equality and hashing are
//! structural.
//!
//! Elements do not carry their presentation. Operations that can receive an
//! element from elsewhere ([`Presentation::multiply`], [`Presentation::reduce`])
//! validate it and report [`Error::PresentationMismatch`].

use std::fmt;

use crate::error::{Error, Result};

/// Order of a cyclic factor, or of a group element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(m) => write!(f, "{m}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

/// A power of one factor generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syllable {
    pub factor: usize,
    pub exponent: i64,
}

/// An element in reduced normal form. The empty syllable list is `e`.
///
/// The derived ordering compares syllable lists lexicographically. It is only
/// used to make enumerations and reports reproducible.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    syllables: Vec<Syllable>,
}

impl GroupElement {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    pub fn first(&self) -> Option<Syllable> {
        self.syllables.first().copied()
    }

    /// True iff `self ≠ e` and its first syllable lies in `factor`.
    ///
    /// With `factor` the index of `g`, the complement of this predicate is the
    /// set `W₀` of words not beginning with a nontrivial power of `g`; note
    /// that `e ∈ W₀`.
    pub fn first_syllable_in(&self, factor: usize) -> bool {
        self.first().is_some_and(|s| s.factor == factor)
    }
}

/// A free product of cyclic groups with printable generator names.
///
/// Two presentations are equal when their orders and names agree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Presentation {
    orders: Vec<Order>,
    names: Vec<String>,
}

impl Presentation {
    pub fn new(orders: Vec<Order>, names: Vec<String>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::InvalidPresentation("at least one factor is required".into()));
        }
        if orders.len() != names.len() {
            return Err(Error::InvalidPresentation(format!("{} orders but {} names", orders.len(), names.len())));
        }
        for order in &orders {
            if let Order::Finite(m) = order {
                if *m < 2 {
                    return Err(Error::InvalidPresentation(format!("finite factor order {m} is below 2")));
                }
            }
        }
        for (i, name) in names.iter().enumerate() {
            let mut chars = name.chars();
            let valid = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid {
                return Err(Error::InvalidPresentation(format!("generator name `{name}` is not an identifier")));
            }
            if name == "e" {
                return Err(Error::InvalidPresentation("`e` is reserved for the identity".into()));
            }
            if names[..i].contains(name) {
                return Err(Error::InvalidPresentation(format!("duplicate generator `{name}`")));
            }
        }
        Ok(Self { orders, names })
    }

    /// The free group on the given generator names.
    pub fn free(names: &[&str]) -> Result<Self> {
        Self::new(vec![Order::Infinite; names.len()], names.iter().map(|s| s.to_string()).collect())
    }

    /// `F₂ = ⟨a⟩ * ⟨b⟩`.
    pub fn f2() -> Self {
        Self::free(&["a", "b"]).expect("valid presentation")
    }

    /// The modular group `ℤ/2 * ℤ/3 = ⟨s | s²⟩ * ⟨t | t³⟩`.
    pub fn modular() -> Self {
        Self::new(vec![Order::Finite(2), Order::Finite(3)], vec!["s".into(), "t".into()]).expect("valid presentation")
    }

    /// `ℤ/m * ℤ = ⟨h | hᵐ⟩ * ⟨g⟩`.
    pub fn torsion_by_free(m: u32) -> Result<Self> {
        Self::new(vec![Order::Finite(m), Order::Infinite], vec!["h".into(), "g".into()])
    }

    pub fn rank(&self) -> usize {
        self.orders.len()
    }

    pub fn orders(&self) -> &[Order] {
        &self.orders
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn factor_order(&self, factor: usize) -> Order {
        self.orders[factor]
    }

    pub fn factor_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn generator(&self, factor: usize) -> GroupElement {
        GroupElement { syllables: vec![Syllable { factor, exponent: 1 }] }
    }

    fn canonical_exponent(&self, factor: usize, exponent: i64) -> i64 {
        match self.orders[factor] {
            Order::Finite(m) => exponent.rem_euclid(i64::from(m)),
            Order::Infinite => exponent,
        }
    }

    fn push(&self, stack: &mut Vec<Syllable>, factor: usize, exponent: i64) {
        let exponent = self.canonical_exponent(factor, exponent);
        if exponent == 0 {
            return;
        }
        if let Some(top) = stack.last_mut() {
            if top.factor == factor {
                let merged = self.canonical_exponent(factor, top.exponent + exponent);
                if merged == 0 {
                    stack.pop();
                } else {
                    top.exponent = merged;
                }
                return;
            }
        }
        stack.push(Syllable { factor, exponent });
    }

    /// Reduce a raw word of `(factor, exponent)` pairs to normal form.
    pub fn reduce<I>(&self, raw: I) -> Result<GroupElement>
    where
        I: IntoIterator<Item = (usize, i64)>,
    {
        let mut stack = Vec::new();
        for (factor, exponent) in raw {
            if factor >= self.rank() {
                return Err(Error::PresentationMismatch(format!(
                    "factor index {factor} out of range for {} factors",
                    self.rank()
                )));
            }
            self.push(&mut stack, factor, exponent);
        }
        Ok(GroupElement { syllables: stack })
    }

    /// Checks that `x` is a reduced word over this presentation.
    pub fn validate(&self, x: &GroupElement) -> Result<()> {
        let mut previous = None;
        for s in &x.syllables {
            if s.factor >= self.rank() {
                return Err(Error::PresentationMismatch(format!(
                    "factor index {} out of range for {} factors",
                    s.factor,
                    self.rank()
                )));
            }
            let canonical = self.canonical_exponent(s.factor, s.exponent);
            if canonical == 0 || canonical != s.exponent || previous == Some(s.factor) {
                return Err(Error::PresentationMismatch("element is not in normal form for this presentation".into()));
            }
            previous = Some(s.factor);
        }
        Ok(())
    }

    pub fn multiply(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        self.validate(x)?;
        self.validate(y)?;
        Ok(self.mul(x, y))
    }

    /// Product of two elements already known to be valid.
    pub(crate) fn mul(&self, x: &GroupElement, y: &GroupElement) -> GroupElement {
        let mut stack = Vec::with_capacity(x.syllables.len() + y.syllables.len());
        stack.extend_from_slice(&x.syllables);
        for s in &y.syllables {
            self.push(&mut stack, s.factor, s.exponent);
        }
        GroupElement { syllables: stack }
    }

    pub fn invert(&self, x: &GroupElement) -> GroupElement {
        let syllables = x
            .syllables
            .iter()
            .rev()
            .map(|s| Syllable { factor: s.factor, exponent: self.canonical_exponent(s.factor, -s.exponent) })
            .collect();
        GroupElement { syllables }
    }

    pub fn power(&self, x: &GroupElement, n: i64) -> GroupElement {
        let base = if n < 0 { self.invert(x) } else { x.clone() };
        let mut acc = GroupElement::identity();
        for _ in 0..n.unsigned_abs() {
            acc = self.mul(&acc, &base);
        }
        acc
    }

    /// `g⁻ʲ x gʲ`.
    pub fn conjugate(&self, x: &GroupElement, g: &GroupElement, j: i64) -> GroupElement {
        let gj = self.power(g, j);
        self.mul(&self.mul(&self.invert(&gj), x), &gj)
    }

    /// Word length for the generating set made of the factor generators:
    /// `|k|` for an infinite factor, `min(k, m − k)` for a factor of order `m`.
    pub fn word_length(&self, x: &GroupElement) -> u64 {
        x.syllables
            .iter()
            .map(|s| match self.orders[s.factor] {
                Order::Infinite => s.exponent.unsigned_abs(),
                Order::Finite(m) => {
                    let k = s.exponent.unsigned_abs();
                    k.min(u64::from(m) - k)
                }
            })
            .sum()
    }

    /// Order of an element. An element of a free product has finite order
    /// iff it is conjugate into a finite factor, which cyclic reduction
    /// exposes.
    pub fn element_order(&self, x: &GroupElement) -> Order {
        let mut w = x.clone();
        while w.syllables.len() >= 2 && w.syllables[0].factor == w.syllables.last().unwrap().factor {
            let first = GroupElement { syllables: vec![w.syllables[0]] };
            w = self.mul(&self.mul(&self.invert(&first), &w), &first);
        }
        match w.syllables.as_slice() {
            [] => Order::Finite(1),
            [s] => match self.orders[s.factor] {
                Order::Finite(m) => {
                    let k = s.exponent as u32;
                    Order::Finite(m / gcd(m, k))
                }
                Order::Infinite => Order::Infinite,
            },
            _ => Order::Infinite,
        }
    }

    /// The conjugates `c_j = g⁻ʲ h gʲ` for `j = 1..=count`.
    pub fn conjugate_sequence(&self, g: &GroupElement, h: &GroupElement, count: usize) -> Result<Vec<GroupElement>> {
        self.validate(g)?;
        self.validate(h)?;
        if h.is_identity() {
            return Err(Error::Degenerate("h must be nontrivial".into()));
        }
        if count == 0 {
            return Err(Error::Precondition("J must be at least 1".into()));
        }
        let g_inv = self.invert(g);
        let mut out = Vec::with_capacity(count);
        let mut c = h.clone();
        for _ in 0..count {
            c = self.mul(&self.mul(&g_inv, &c), g);
            out.push(c.clone());
        }
        Ok(out)
    }

    /// Canonical text form: syllables `name` or `name^k` separated by single
    /// spaces; the identity renders as `e`.
    pub fn render(&self, x: &GroupElement) -> String {
        if x.is_identity() {
            return "e".into();
        }
        let mut out = String::new();
        for (i, s) in x.syllables.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&self.names[s.factor]);
            if s.exponent != 1 {
                out.push('^');
                out.push_str(&s.exponent.to_string());
            }
        }
        out
    }

    /// Parses the canonical text form. Tokens may also be juxtaposed
    /// (`ab^-1a`) or separated by `*` or `·`; generator names are matched
    /// longest first.
    pub fn parse(&self, text: &str) -> Result<GroupElement> {
        let fail = |reason: String| Error::Parse { input: text.to_string(), reason };
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(fail("empty word".into()));
        }
        let mut raw = Vec::new();
        for token in trimmed.split(|c: char| c.is_whitespace() || c == '*' || c == '·') {
            let mut rest = token;
            while !rest.is_empty() {
                let ident_len = rest
                    .char_indices()
                    .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_'))
                    .map_or(rest.len(), |(i, _)| i);
                if ident_len == 0 {
                    return Err(fail(format!("expected a generator at `{rest}`")));
                }
                let ident = &rest[..ident_len];
                let (factor, name_len) = match self.longest_prefix(ident) {
                    Some(found) => (Some(found.0), found.1),
                    None if ident.starts_with('e') => (None, 1),
                    None => return Err(fail(format!("unknown generator in `{ident}`"))),
                };
                rest = &rest[name_len..];
                let mut exponent = 1i64;
                if let Some(after) = rest.strip_prefix('^') {
                    let digits_len = after
                        .char_indices()
                        .find(|&(i, c)| !(c.is_ascii_digit() || (i == 0 && (c == '-' || c == '+'))))
                        .map_or(after.len(), |(i, _)| i);
                    let digits = &after[..digits_len];
                    exponent = digits.parse().map_err(|_| fail(format!("malformed exponent `{digits}`")))?;
                    rest = &after[digits_len..];
                }
                if let Some(factor) = factor {
                    raw.push((factor, exponent));
                }
            }
        }
        self.reduce(raw)
    }

    fn longest_prefix(&self, ident: &str) -> Option<(usize, usize)> {
        self.names
            .iter()
            .enumerate()
            .filter(|(_, name)| ident.starts_with(name.as_str()))
            .max_by_key(|(_, name)| name.len())
            .map(|(i, name)| (i, name.len()))
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (order, name)) in self.orders.iter().zip(&self.names).enumerate() {
            if i > 0 {
                f.write_str(" * ")?;
            }
            match order {
                Order::Infinite => write!(f, "<{name}>")?,
                Order::Finite(m) => write!(f, "<{name}|{name}^{m}>")?,
            }
        }
        Ok(())
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
