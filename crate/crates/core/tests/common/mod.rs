//! Dense reference computations that do not touch the power-iteration code.
#![allow(dead_code)]

use std::collections::BTreeMap;

use cstar_core::{GroupElement, Presentation};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Closed form for `‖(1/J)Σ u_j‖` with `u_1..u_J` free Haar unitaries.
pub fn free_family_norm(j: usize) -> f64 {
    if j == 1 {
        1.0
    } else {
        2.0 * ((j - 1) as f64).sqrt() / j as f64
    }
}

/// Points reachable from `e` by at most `depth` left multiplications with a
/// symbol of `terms` or its inverse.
pub fn iterated_support(p: &Presentation, terms: &[(GroupElement, Complex64)], depth: usize) -> Vec<GroupElement> {
    let mut steps: Vec<GroupElement> = Vec::new();
    for (s, _) in terms {
        for x in [s.clone(), p.invert(s)] {
            if !steps.contains(&x) {
                steps.push(x);
            }
        }
    }
    let mut seen: BTreeMap<GroupElement, ()> = BTreeMap::new();
    seen.insert(GroupElement::identity(), ());
    let mut frontier = vec![GroupElement::identity()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for x in &frontier {
            for s in &steps {
                let y = p.multiply(s, x).unwrap();
                if seen.insert(y.clone(), ()).is_none() {
                    next.push(y);
                }
            }
        }
        frontier = next;
    }
    seen.into_keys().collect()
}

/// Norm of `P T P` where `P` projects onto `span{δ_x : x ∈ support}` and
/// `T = Σ c_s λ(s)`, `λ(s)δ_x = δ_{sx}`. This is a lower bound for `‖T‖`.
pub fn compression_norm(p: &Presentation, terms: &[(GroupElement, Complex64)], support: &[GroupElement]) -> f64 {
    let index: BTreeMap<&GroupElement, usize> = support.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let n = support.len();
    let mut b = DMatrix::<Complex64>::zeros(n, n);
    for (col, x) in support.iter().enumerate() {
        for (s, c) in terms {
            if let Some(&row) = index.get(&p.multiply(s, x).unwrap()) {
                b[(row, col)] += *c;
            }
        }
    }
    let gram = b.adjoint() * &b;
    let eig = gram.symmetric_eigenvalues();
    eig.iter().cloned().fold(0.0_f64, f64::max).max(0.0).sqrt()
}

/// Compression of `T` onto its depth-`d` iterated support.
pub fn compression_oracle(p: &Presentation, terms: &[(GroupElement, Complex64)], depth: usize) -> f64 {
    let support = iterated_support(p, terms, depth);
    compression_norm(p, terms, &support)
}

/// `g⁻ʲ h gʲ` computed by plain multiplication.
pub fn conj(p: &Presentation, h: &GroupElement, g: &GroupElement, j: usize) -> GroupElement {
    let gi = p.invert(g);
    let mut x = h.clone();
    for _ in 0..j {
        x = p.multiply(&p.multiply(&gi, &x).unwrap(), g).unwrap();
    }
    x
}

/// Terms of `(1/J) Σ_{j≤J} g⁻ʲ h gʲ`, summing coinciding conjugates.
pub fn uniform_average(
    p: &Presentation,
    h: &GroupElement,
    g: &GroupElement,
    j: usize,
) -> Vec<(GroupElement, Complex64)> {
    let mut acc: BTreeMap<GroupElement, Complex64> = BTreeMap::new();
    for i in 1..=j {
        *acc.entry(conj(p, h, g, i)).or_default() += Complex64::new(1.0 / j as f64, 0.0);
    }
    acc.into_iter().collect()
}
